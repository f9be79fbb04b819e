//! Versioned binary checkpoint.
//!
//! Little-endian layout:
//!
//! ```text
//! "MSHD" | u32 version = 1
//! u32 B | u32 k | u32 msg_bits | f32 λ_I | f32 λ_M | f32 λ_G | f32 lr | u64 seed
//! u32 tensor count
//! per tensor: u16 name len | name (UTF-8) | u8 ndim | u32 dims[ndim] | f32 data
//! u32 CRC-32 of every preceding byte
//! ```
//!
//! Training progress travels as ordinary tensors: `meta.step` holds the step
//! counter as four 16-bit limbs (each exact in f32), `meta.best` holds
//! `[epoch, ber, psnr]` once a best epoch exists.

use std::fs;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::model::{Discriminator, Embedder, Extractor, ModelConfig, ParamStore, StegoModels};
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 4] = b"MSHD";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("not a checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),
    #[error("integrity check failed: stored CRC {stored:08x}, computed {computed:08x}")]
    CrcMismatch { stored: u32, computed: u32 },
    #[error("file truncated")]
    Truncated,
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BestRecord {
    pub epoch: u32,
    pub ber: f32,
    pub psnr: f32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub models: StegoModels,
    pub step: u64,
    pub best: Option<BestRecord>,
}

impl Checkpoint {
    pub fn new(models: StegoModels) -> Self {
        Self {
            models,
            step: 0,
            best: None,
        }
    }

    pub fn config(&self) -> &ModelConfig {
        self.models.config()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let cfg = self.config();
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        for v in [cfg.block, cfg.k, cfg.msg_bits] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        for v in [cfg.lambda_i, cfg.lambda_m, cfg.lambda_g, cfg.adam.lr] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&cfg.seed.to_le_bytes());

        let limbs: Vec<f32> = (0..4).map(|i| ((self.step >> (16 * i)) & 0xffff) as f32).collect();
        let mut meta = vec![("meta.step".to_string(), Tensor::new(&[4], limbs).unwrap())];
        if let Some(b) = self.best {
            meta.push((
                "meta.best".to_string(),
                Tensor::new(&[3], vec![b.epoch as f32, b.ber, b.psnr]).unwrap(),
            ));
        }
        let stores = [
            self.models.embedder.params(),
            self.models.extractor.params(),
            self.models.discriminator.params(),
        ];
        let count = stores.iter().map(|s| s.len()).sum::<usize>() + meta.len();
        out.extend_from_slice(&(count as u32).to_le_bytes());
        let entries = stores
            .iter()
            .flat_map(|s| s.iter())
            .chain(meta.iter().map(|(n, t)| (n.as_str(), t)));
        for (name, t) in entries {
            out.extend_from_slice(&(name.len() as u16).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.push(t.ndim() as u8);
            for &d in t.shape() {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            for &v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        if bytes.len() >= 4 && &bytes[..4] != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        if bytes.len() < 8 + 36 + 4 + 4 {
            return Err(CheckpointError::Truncated);
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(CheckpointError::UnsupportedVersion(version));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(tail.try_into().unwrap());
        let computed = crc32fast::hash(body);
        if stored != computed {
            return Err(CheckpointError::CrcMismatch { stored, computed });
        }

        let mut r = Reader { buf: body, pos: 8 };
        let block = r.u32()? as usize;
        let k = r.u32()? as usize;
        let msg_bits = r.u32()? as usize;
        let lambda_i = r.f32()?;
        let lambda_m = r.f32()?;
        let lambda_g = r.f32()?;
        let lr = r.f32()?;
        let seed = r.u64()?;
        let mut cfg = ModelConfig {
            block,
            k,
            msg_bits,
            lambda_i,
            lambda_m,
            lambda_g,
            seed,
            ..ModelConfig::default()
        };
        cfg.adam.lr = lr;
        cfg.validate().map_err(|e| CheckpointError::Malformed(e.to_string()))?;

        let count = r.u32()? as usize;
        let mut stores = [ParamStore::new(), ParamStore::new(), ParamStore::new()];
        let mut step = None;
        let mut best = None;
        for _ in 0..count {
            let name_len = r.u16()? as usize;
            let name = std::str::from_utf8(r.take(name_len)?)
                .map_err(|_| CheckpointError::Malformed("tensor name is not UTF-8".into()))?
                .to_string();
            let ndim = r.u8()? as usize;
            let mut shape = Vec::with_capacity(ndim);
            for _ in 0..ndim {
                shape.push(r.u32()? as usize);
            }
            let n: usize = shape.iter().product();
            let raw = r.take(n.checked_mul(4).ok_or(CheckpointError::Truncated)?)?;
            let data = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
            let t = Tensor::new(&shape, data).map_err(|e| CheckpointError::Malformed(format!("{name}: {e}")))?;
            let slot = match name.split('.').next() {
                Some("embedder") => 0,
                Some("extractor") => 1,
                Some("discriminator") => 2,
                _ if name == "meta.step" && t.len() == 4 => {
                    let s = t
                        .data()
                        .iter()
                        .enumerate()
                        .fold(0u64, |acc, (i, &v)| acc | ((v as u64) << (16 * i)));
                    step = Some(s);
                    continue;
                }
                _ if name == "meta.best" && t.len() == 3 => {
                    let d = t.data();
                    best = Some(BestRecord {
                        epoch: d[0] as u32,
                        ber: d[1],
                        psnr: d[2],
                    });
                    continue;
                }
                _ => return Err(CheckpointError::Malformed(format!("unexpected tensor {name}"))),
            };
            if stores[slot].get(&name).is_some() {
                return Err(CheckpointError::Malformed(format!("duplicate tensor {name}")));
            }
            stores[slot].insert(name, t);
        }
        if r.pos != body.len() {
            return Err(CheckpointError::Malformed("trailing bytes after tensors".into()));
        }

        let [e, x, d] = stores;
        let shape_err = |e: crate::Error| CheckpointError::Malformed(e.to_string());
        let models = StegoModels {
            embedder: Embedder::from_params(cfg, e).map_err(shape_err)?,
            extractor: Extractor::from_params(cfg, x).map_err(shape_err)?,
            discriminator: Discriminator::from_params(cfg, d).map_err(shape_err)?,
        };
        Ok(Self {
            models,
            step: step.unwrap_or(0),
            best,
        })
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(n).ok_or(CheckpointError::Truncated)?;
        let s = self.buf.get(self.pos..end).ok_or(CheckpointError::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, CheckpointError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, CheckpointError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32, CheckpointError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

/// Writes through a sibling temp file and renames, so an interrupted write
/// never clobbers the previous checkpoint.
pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<(), CheckpointError> {
    let io = |source| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(&ckpt.to_bytes()).map_err(io)?;
        f.sync_all().map_err(io)?;
    }
    fs::rename(&tmp, path).map_err(io)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CheckpointError> {
    let bytes = fs::read(path).map_err(|source| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Checkpoint::from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Checkpoint {
        let cfg = ModelConfig::new(8, 2, 4).unwrap();
        let mut c = Checkpoint::new(StegoModels::new(cfg).unwrap());
        c.step = 70_000;
        c.best = Some(BestRecord {
            epoch: 3,
            ber: 0.0,
            psnr: f32::INFINITY,
        });
        c
    }

    #[test]
    fn bytes_round_trip() {
        let c = tiny();
        let bytes = c.to_bytes();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn integrity_errors() {
        let bytes = tiny().to_bytes();
        assert!(matches!(
            Checkpoint::from_bytes(&bytes[..bytes.len() / 2]),
            Err(CheckpointError::CrcMismatch { .. })
        ));
        assert!(matches!(Checkpoint::from_bytes(&bytes[..10]), Err(CheckpointError::Truncated)));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(Checkpoint::from_bytes(&bad), Err(CheckpointError::BadMagic)));
        let mut bad = bytes.clone();
        bad[4] = 2;
        assert!(matches!(Checkpoint::from_bytes(&bad), Err(CheckpointError::UnsupportedVersion(2))));
        let mut bad = bytes;
        let mid = bad.len() / 2;
        bad[mid] ^= 0x10;
        assert!(matches!(Checkpoint::from_bytes(&bad), Err(CheckpointError::CrcMismatch { .. })));
    }
}
