//! Self-delimiting message frame.
//!
//! `0x4D 0x53 | u32 LE payload length | payload | u32 LE CRC-32(payload)`,
//! serialized MSB-first within each byte. Bits are `u8` values 0 or 1.

use thiserror::Error;

pub const MAGIC: [u8; 2] = [0x4D, 0x53];
const HEADER_BYTES: usize = 6;
/// Magic, length and CRC.
pub const OVERHEAD_BYTES: usize = 10;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("frame too short: {bits} bits, need at least {}", OVERHEAD_BYTES * 8)]
    TooShort { bits: usize },
    #[error("not a stego frame")]
    NotStegoFrame,
    #[error("corrupted message (length field declares {declared} bytes, only {available} fit)")]
    BadLength { declared: usize, available: usize },
    #[error("corrupted message ({suspected} bit errors suspected)")]
    Corrupted { suspected: usize },
}

/// Frame bit length for a payload of `len` bytes.
pub fn frame_bits(len: usize) -> usize {
    8 * (OVERHEAD_BYTES + len)
}

pub fn frame_encode(payload: &[u8]) -> Vec<u8> {
    assert!(payload.len() <= u32::MAX as usize, "payload longer than u32::MAX bytes");
    let mut bytes = Vec::with_capacity(payload.len() + OVERHEAD_BYTES);
    bytes.extend_from_slice(&MAGIC);
    bytes.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    bytes.extend_from_slice(payload);
    bytes.extend_from_slice(&crc32fast::hash(payload).to_le_bytes());
    bytes_to_bits(&bytes)
}

pub fn frame_decode(bits: &[u8]) -> Result<Vec<u8>, FrameError> {
    decode(bits, None)
}

/// Like [`frame_decode`], but on a CRC failure estimates the number of bad
/// bits from extractor logits: frame bits decoded with `|logit| < 2`
/// (confidence below ~0.88) are counted as suspect.
pub fn frame_decode_soft(bits: &[u8], logits: &[f32]) -> Result<Vec<u8>, FrameError> {
    assert_eq!(bits.len(), logits.len());
    decode(bits, Some(logits))
}

fn decode(bits: &[u8], logits: Option<&[f32]>) -> Result<Vec<u8>, FrameError> {
    if bits.len() < frame_bits(0) {
        return Err(FrameError::TooShort { bits: bits.len() });
    }
    let header = bits_to_bytes(&bits[..HEADER_BYTES * 8]);
    if header[..2] != MAGIC {
        return Err(FrameError::NotStegoFrame);
    }
    let declared = u32::from_le_bytes(header[2..6].try_into().unwrap()) as usize;
    let available = bits.len() / 8 - OVERHEAD_BYTES;
    if declared > available {
        return Err(FrameError::BadLength { declared, available });
    }
    let body = bits_to_bytes(&bits[HEADER_BYTES * 8..frame_bits(declared)]);
    let (payload, crc) = body.split_at(declared);
    let stored = u32::from_le_bytes(crc.try_into().unwrap());
    let computed = crc32fast::hash(payload);
    if stored != computed {
        let suspected = match logits {
            Some(l) => l[..frame_bits(declared)].iter().filter(|v| v.abs() < 2.0).count(),
            // Without soft information the CRC difference is the only evidence.
            None => (stored ^ computed).count_ones() as usize,
        }
        .max(1);
        return Err(FrameError::Corrupted { suspected });
    }
    Ok(payload.to_vec())
}

pub fn bytes_to_bits(bytes: &[u8]) -> Vec<u8> {
    bytes.iter().flat_map(|&b| (0..8).rev().map(move |i| (b >> i) & 1)).collect()
}

/// Packs MSB-first; a trailing partial byte is dropped.
pub fn bits_to_bytes(bits: &[u8]) -> Vec<u8> {
    bits.chunks_exact(8)
        .map(|c| c.iter().fold(0u8, |acc, &b| (acc << 1) | (b & 1)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_payload_is_80_bits() {
        let bits = frame_encode(&[]);
        assert_eq!(bits.len(), 80);
        assert_eq!(frame_decode(&bits).unwrap(), Vec::<u8>::new());
    }

    #[test]
    fn demo_sizes_round_trip_with_padding() {
        for len in [127usize, 200] {
            let payload: Vec<u8> = (0..len).map(|i| (i * 31 % 251) as u8).collect();
            let mut bits = frame_encode(&payload);
            assert_eq!(bits.len(), 8 * (2 + 4 + len + 4));
            bits.extend([1, 0, 1, 1, 0, 1, 1]);
            assert_eq!(frame_decode(&bits).unwrap(), payload);
        }
    }

    #[test]
    fn msb_first() {
        assert_eq!(bytes_to_bits(&[0x4D]), vec![0, 1, 0, 0, 1, 1, 0, 1]);
        assert_eq!(bits_to_bytes(&[0, 1, 0, 0, 1, 1, 0, 1, 1]), vec![0x4D]);
    }

    #[test]
    fn errors() {
        let mut bits = frame_encode(b"hello");
        assert_eq!(frame_decode(&bits[..40]), Err(FrameError::TooShort { bits: 40 }));

        bits[60] ^= 1;
        assert!(matches!(frame_decode(&bits), Err(FrameError::Corrupted { suspected }) if suspected >= 1));
        let mut logits: Vec<f32> = bits.iter().map(|&b| if b == 1 { 8.0 } else { -8.0 }).collect();
        logits[60] = 0.3;
        logits[61] = -1.0;
        assert_eq!(frame_decode_soft(&bits, &logits), Err(FrameError::Corrupted { suspected: 2 }));

        bits[0] ^= 1;
        assert_eq!(frame_decode(&bits), Err(FrameError::NotStegoFrame));

        let mut bits = frame_encode(b"hi");
        bits[16 + 7] = 1; // length 2 -> 3
        assert_eq!(frame_decode(&bits), Err(FrameError::BadLength { declared: 3, available: 2 }));
    }
}
