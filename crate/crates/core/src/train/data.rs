//! Image datasets, the validation split and deterministic batch sampling.

use std::path::Path;

use image::RgbImage;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codec::read_image;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

const EXTENSIONS: &[&str] = &["png", "ppm", "pnm", "jpg", "jpeg"];

#[derive(Clone, Debug, Default)]
pub struct Dataset {
    items: Vec<(String, RgbImage)>,
    /// Files skipped while loading (unreadable or too small).
    pub skipped: usize,
}

impl Dataset {
    pub fn from_images(items: Vec<(String, RgbImage)>) -> Self {
        Self { items, skipped: 0 }
    }

    /// Loads every image file in `dir` (not recursive), sorted by name.
    /// Unreadable files and images smaller than `min_size` on either side are
    /// skipped with a warning.
    pub fn from_dir(dir: &Path, min_size: usize) -> Result<Self> {
        let entries = std::fs::read_dir(dir).map_err(|e| Error::Dataset(format!("cannot read {}: {e}", dir.display())))?;
        let mut paths: Vec<_> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.is_file()
                    && p.extension()
                        .and_then(|e| e.to_str())
                        .is_some_and(|e| EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
            })
            .collect();
        paths.sort();

        let mut ds = Dataset::default();
        for p in paths {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            match read_image(&p) {
                Ok(loaded) if (loaded.image.width() as usize) < min_size || (loaded.image.height() as usize) < min_size => {
                    log::warn!("skipping {name}: smaller than {min_size}x{min_size}");
                    ds.skipped += 1;
                }
                Ok(loaded) => ds.items.push((name, loaded.image)),
                Err(e) => {
                    log::warn!("skipping {name}: {e}");
                    ds.skipped += 1;
                }
            }
        }
        if ds.items.is_empty() {
            return Err(Error::Dataset(format!("no usable images in {}", dir.display())));
        }
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.items[i].0
    }

    pub fn image(&self, i: usize) -> &RgbImage {
        &self.items[i].1
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &RgbImage)> {
        self.items.iter().map(|(n, i)| (n.as_str(), i))
    }

    /// Splits off roughly 10% as held-out data, chosen by a hash of the file
    /// name so membership does not depend on load order. With two or more
    /// images both halves are non-empty.
    pub fn split_validation(&self) -> (Dataset, Dataset) {
        let hash = |n: &str| crc32fast::hash(n.as_bytes());
        let mut is_val: Vec<bool> = self.items.iter().map(|(n, _)| hash(n) % 10 == 0).collect();
        if self.len() >= 2 {
            if !is_val.contains(&true) {
                let i = (0..self.len()).min_by_key(|&i| hash(&self.items[i].0)).unwrap();
                is_val[i] = true;
            }
            if !is_val.contains(&false) {
                let i = (0..self.len()).max_by_key(|&i| hash(&self.items[i].0)).unwrap();
                is_val[i] = false;
            }
        }
        let (mut train, mut val) = (Dataset::default(), Dataset::default());
        for (item, v) in self.items.iter().zip(is_val) {
            if v { &mut val } else { &mut train }.items.push(item.clone());
        }
        (train, val)
    }
}

/// SplitMix64 finalizer over a sequence of words.
pub(crate) fn mix_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x9E37_79B9_7F4A_7C15u64, |acc, &p| {
        let mut z = acc ^ p.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    })
}

/// Copies the `block`×`block` window at `(x0, y0)` into `out` as planar RGB.
fn push_crop(img: &RgbImage, x0: u32, y0: u32, block: usize, out: &mut Vec<f32>) {
    for ch in 0..3 {
        for y in 0..block as u32 {
            for x in 0..block as u32 {
                out.push(img.get_pixel(x0 + x, y0 + y).0[ch] as f32 / 255.0);
            }
        }
    }
}

/// Deterministic batches: epoch `e` visits a seeded permutation of the
/// dataset without replacement, and batch `s` of that epoch draws its crops
/// and message bits from a generator keyed by `(seed, e, s)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BatchSampler {
    pub block: usize,
    pub msg_bits: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl BatchSampler {
    pub fn steps_per_epoch(&self, ds: &Dataset) -> usize {
        ds.len() / self.batch_size.max(1)
    }

    fn check(&self, ds: &Dataset) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if ds.is_empty() {
            return Err(Error::Dataset("dataset is empty".into()));
        }
        if ds.len() < self.batch_size {
            return Err(Error::Dataset(format!(
                "dataset smaller than batch: {} images, batch size {}",
                ds.len(),
                self.batch_size
            )));
        }
        Ok(())
    }

    pub fn order(&self, ds: &Dataset, epoch: u64) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..ds.len()).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(mix_seed(&[self.seed, epoch])));
        idx
    }

    /// `(covers [b, 3, B, B], msgs [b, |M|])`.
    pub fn sample(&self, ds: &Dataset, epoch: u64, step: usize) -> Result<(Tensor, Tensor)> {
        self.check(ds)?;
        if step >= self.steps_per_epoch(ds) {
            return Err(Error::Config(format!(
                "step {step} beyond the {} batches of an epoch",
                self.steps_per_epoch(ds)
            )));
        }
        let order = self.order(ds, epoch);
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[self.seed, epoch, step as u64, 1]));
        let b = self.block;
        let mut covers = Vec::with_capacity(self.batch_size * 3 * b * b);
        for &i in &order[step * self.batch_size..(step + 1) * self.batch_size] {
            let img = ds.image(i);
            if (img.width() as usize) < b || (img.height() as usize) < b {
                return Err(Error::Dataset(format!("{} is smaller than {b}x{b}", ds.name(i))));
            }
            let x0 = rng.gen_range(0..=img.width() - b as u32);
            let y0 = rng.gen_range(0..=img.height() - b as u32);
            push_crop(img, x0, y0, b, &mut covers);
        }
        let msgs = (0..self.batch_size * self.msg_bits)
            .map(|_| if rng.gen::<bool>() { 1.0 } else { 0.0 })
            .collect();
        Ok((
            Tensor::new(&[self.batch_size, 3, b, b], covers)?,
            Tensor::new(&[self.batch_size, self.msg_bits], msgs)?,
        ))
    }
}

/// Fixed evaluation batch: centered crops of every image and seeded messages.
pub fn eval_batch(ds: &Dataset, block: usize, msg_bits: usize, seed: u64) -> Result<(Tensor, Tensor)> {
    if ds.is_empty() {
        return Err(Error::Dataset("evaluation set is empty".into()));
    }
    let mut covers = Vec::with_capacity(ds.len() * 3 * block * block);
    for (name, img) in ds.iter() {
        let (w, h) = (img.width() as usize, img.height() as usize);
        if w < block || h < block {
            return Err(Error::Dataset(format!("{name} is smaller than {block}x{block}")));
        }
        push_crop(img, ((w - block) / 2) as u32, ((h - block) / 2) as u32, block, &mut covers);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[seed, u64::MAX]));
    let msgs = (0..ds.len() * msg_bits)
        .map(|_| if rng.gen::<bool>() { 1.0 } else { 0.0 })
        .collect();
    Ok((
        Tensor::new(&[ds.len(), 3, block, block], covers)?,
        Tensor::new(&[ds.len(), msg_bits], msgs)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::synth_images;

    fn sampler(batch_size: usize) -> BatchSampler {
        BatchSampler {
            block: 8,
            msg_bits: 16,
            batch_size,
            seed: 7,
        }
    }

    #[test]
    fn deterministic() {
        let ds = Dataset::from_images(synth_images(12, 12, 10, 1));
        let s = sampler(4);
        assert_eq!(s.sample(&ds, 0, 0).unwrap(), s.sample(&ds, 0, 0).unwrap());
        assert_ne!(s.sample(&ds, 0, 0).unwrap(), s.sample(&ds, 0, 1).unwrap());
        assert_ne!(s.sample(&ds, 0, 0).unwrap().1, s.sample(&ds, 1, 0).unwrap().1);
    }

    #[test]
    fn epoch_is_without_replacement() {
        let ds = Dataset::from_images(synth_images(10, 8, 8, 1));
        let s = sampler(3);
        let order = s.order(&ds, 4);
        let mut sorted = order.clone();
        sorted.sort();
        assert_eq!(sorted, (0..10).collect::<Vec<_>>());
        assert_eq!(s.steps_per_epoch(&ds), 3);
    }

    #[test]
    fn message_bits_are_fair() {
        let ds = Dataset::from_images(synth_images(4, 8, 8, 1));
        let s = BatchSampler {
            block: 8,
            msg_bits: 6250,
            batch_size: 4,
            seed: 3,
        };
        let mut ones = 0.0;
        let mut n = 0.0;
        for epoch in 0..4 {
            let (_, m) = s.sample(&ds, epoch, 0).unwrap();
            ones += m.data().iter().sum::<f32>() as f64;
            n += m.len() as f64;
        }
        assert_eq!(n, 100_000.0);
        let mean = ones / n;
        assert!((0.49..=0.51).contains(&mean), "mean {mean}");
    }

    #[test]
    fn dataset_smaller_than_batch() {
        let ds = Dataset::from_images(synth_images(20, 8, 8, 1));
        let err = sampler(30).sample(&ds, 0, 0).unwrap_err();
        assert!(err.to_string().contains("dataset smaller than batch"), "{err}");
    }

    #[test]
    fn split_is_stable_and_nonempty() {
        let ds = Dataset::from_images(synth_images(300, 4, 4, 1));
        let (train, val) = ds.split_validation();
        assert_eq!(train.len() + val.len(), 300);
        assert!((15..=45).contains(&val.len()), "{}", val.len());
        let (t2, v2) = Dataset::from_images(synth_images(2, 4, 4, 1)).split_validation();
        assert_eq!((t2.len(), v2.len()), (1, 1));
    }
}
