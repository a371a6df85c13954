//! Binary codebook (`VQCB`) and index map (`VQIX`) files.
//!
//! ```text
//! VQCB: "VQCB" | M: u32 | dim: u32 | M*dim f64, row-major | sha256 of all preceding bytes
//! VQIX: "VQIX" | block_w | block_h | blocks_x | blocks_y | M (u32 each)
//!       | 32-byte codebook digest | blocks_x*blocks_y u16 indices, row-major
//! ```
//!
//! All integers and floats are little-endian.

use std::fmt;

use sha2::{Digest as _, Sha256};

use super::{BlockGeometry, FormatError, IndexMap};
use crate::error::Result;
use crate::vector::{Codebook, Provenance};

const CODEBOOK_MAGIC: &[u8; 4] = b"VQCB";
const INDEX_MAGIC: &[u8; 4] = b"VQIX";

/// SHA-256 content digest.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub fn of(bytes: &[u8]) -> Self {
        Self(Sha256::digest(bytes).into())
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({self})")
    }
}

fn codebook_payload(cb: &Codebook) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + cb.as_flat().len() * 8 + 32);
    out.extend_from_slice(CODEBOOK_MAGIC);
    out.extend_from_slice(&(cb.len() as u32).to_le_bytes());
    out.extend_from_slice(&(cb.dim() as u32).to_le_bytes());
    for v in cb.as_flat() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Digest identifying a codebook's content: the hash of its file payload.
pub fn codebook_digest(cb: &Codebook) -> Digest {
    Digest::of(&codebook_payload(cb))
}

pub fn write_codebook(cb: &Codebook) -> Vec<u8> {
    let mut out = codebook_payload(cb);
    let digest = Digest::of(&out);
    out.extend_from_slice(&digest.0);
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        let slice = self
            .bytes
            .get(self.pos..self.pos + n)
            .ok_or(FormatError::Truncated {
                offset: self.bytes.len(),
            })?;
        self.pos += n;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn magic(&mut self, expected: &[u8; 4]) -> Result<(), FormatError> {
        if self.bytes.get(..4) != Some(expected.as_slice()) {
            return Err(FormatError::BadMagic { offset: 0 });
        }
        self.pos = 4;
        Ok(())
    }
}

/// Reads a `VQCB` file and checks its trailing digest.
pub fn read_codebook(bytes: &[u8]) -> Result<Codebook> {
    let mut rd = Reader { bytes, pos: 0 };
    rd.magic(CODEBOOK_MAGIC)?;
    let m = rd.u32()? as usize;
    let dim = rd.u32()? as usize;
    if m == 0 || dim == 0 {
        return Err(FormatError::InvalidHeader {
            value: 0,
            offset: if m == 0 { 4 } else { 8 },
        }
        .into());
    }
    let len = m
        .checked_mul(dim)
        .and_then(|v| v.checked_mul(8))
        .ok_or(FormatError::Truncated { offset: bytes.len() })?;
    let data: Vec<f64> = rd
        .take(len)?
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let payload_end = rd.pos;
    let stored = rd.take(32)?;
    let actual = Digest::of(&bytes[..payload_end]);
    if stored != actual.0 {
        return Err(FormatError::DigestMismatch {
            expected: Digest(stored.try_into().unwrap()).to_string(),
            actual: actual.to_string(),
        }
        .into());
    }
    if rd.pos != bytes.len() {
        return Err(FormatError::Unsupported(format!(
            "{} trailing bytes after codebook",
            bytes.len() - rd.pos
        ))
        .into());
    }
    Ok(Codebook::new(dim, data)?.with_provenance(Provenance::Loaded))
}

pub fn write_index_map(map: &IndexMap) -> Vec<u8> {
    let g = &map.geometry;
    let mut out = Vec::with_capacity(56 + map.indices.len() * 2);
    out.extend_from_slice(INDEX_MAGIC);
    for v in [g.block_w, g.block_h, g.blocks_x, g.blocks_y] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    out.extend_from_slice(&map.codebook_len.to_le_bytes());
    out.extend_from_slice(&map.codebook_digest.0);
    for i in &map.indices {
        out.extend_from_slice(&i.to_le_bytes());
    }
    out
}

pub fn read_index_map(bytes: &[u8]) -> Result<IndexMap> {
    let mut rd = Reader { bytes, pos: 0 };
    rd.magic(INDEX_MAGIC)?;
    let mut fields = [0usize; 4];
    for f in fields.iter_mut() {
        let at = rd.pos;
        *f = rd.u32()? as usize;
        if *f == 0 {
            return Err(FormatError::InvalidHeader { value: 0, offset: at }.into());
        }
    }
    let [block_w, block_h, blocks_x, blocks_y] = fields;
    let m_at = rd.pos;
    let codebook_len = rd.u32()?;
    if codebook_len == 0 || codebook_len > 65536 {
        return Err(FormatError::InvalidHeader {
            value: codebook_len,
            offset: m_at,
        }
        .into());
    }
    let codebook_digest = Digest(rd.take(32)?.try_into().unwrap());
    let count = blocks_x
        .checked_mul(blocks_y)
        .ok_or(FormatError::Truncated { offset: bytes.len() })?;
    let start = rd.pos;
    let raw = rd.take(count * 2)?;
    let mut indices = Vec::with_capacity(count);
    for (k, c) in raw.chunks_exact(2).enumerate() {
        let idx = u16::from_le_bytes([c[0], c[1]]);
        if u32::from(idx) >= codebook_len {
            return Err(FormatError::IndexOutOfRange {
                index: u32::from(idx),
                size: codebook_len,
                offset: start + 2 * k,
            }
            .into());
        }
        indices.push(idx);
    }
    if rd.pos != bytes.len() {
        return Err(FormatError::Unsupported(format!(
            "{} trailing bytes after index map",
            bytes.len() - rd.pos
        ))
        .into());
    }
    Ok(IndexMap {
        geometry: BlockGeometry {
            block_w,
            block_h,
            blocks_x,
            blocks_y,
        },
        indices,
        codebook_len,
        codebook_digest,
    })
}

/// Checks that `cb` is the codebook `map` was encoded with.
pub fn verify_codebook(map: &IndexMap, cb: &Codebook) -> Result<()> {
    let actual = codebook_digest(cb);
    if actual != map.codebook_digest {
        return Err(FormatError::DigestMismatch {
            expected: map.codebook_digest.to_string(),
            actual: actual.to_string(),
        }
        .into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::imageio::{encode, Image};
    use proptest::prelude::*;

    fn sample_codebook() -> Codebook {
        Codebook::new(2, vec![1.5, -2.0, 0.1, 1e300]).unwrap()
    }

    #[test]
    fn codebook_layout() {
        let bytes = write_codebook(&sample_codebook());
        assert_eq!(&bytes[..4], b"VQCB");
        assert_eq!(&bytes[4..12], &[2, 0, 0, 0, 2, 0, 0, 0]);
        assert_eq!(&bytes[12..20], &1.5f64.to_le_bytes());
        assert_eq!(bytes.len(), 12 + 32 + 32);
        assert_eq!(&bytes[44..], &Digest::of(&bytes[..44]).0);
        assert_eq!(codebook_digest(&sample_codebook()), Digest::of(&bytes[..44]));
    }

    #[test]
    fn codebook_corruption_is_detected() {
        let mut bytes = write_codebook(&sample_codebook());
        bytes[20] ^= 1;
        assert!(matches!(
            read_codebook(&bytes),
            Err(Error::Format(FormatError::DigestMismatch { .. }))
        ));
        let bytes = write_codebook(&sample_codebook());
        assert!(matches!(
            read_codebook(&bytes[..40]),
            Err(Error::Format(FormatError::Truncated { .. }))
        ));
        assert!(matches!(
            read_codebook(b"VQIX"),
            Err(Error::Format(FormatError::BadMagic { offset: 0 }))
        ));
    }

    #[test]
    fn index_map_layout_and_roundtrip() {
        let img = Image::new(8, 4, (0..32).collect()).unwrap();
        let geom = BlockGeometry::fit(&img, 4, 4).unwrap();
        let cb = Codebook::new(16, (0..48).map(f64::from).collect()).unwrap();
        let map = encode(&img, &cb, &geom).unwrap();
        let bytes = write_index_map(&map);
        assert_eq!(&bytes[..4], b"VQIX");
        assert_eq!(&bytes[4..24], &[4, 0, 0, 0, 4, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0, 3, 0, 0, 0]);
        assert_eq!(&bytes[24..56], &codebook_digest(&cb).0);
        assert_eq!(bytes.len(), 56 + 4);
        assert_eq!(read_index_map(&bytes).unwrap(), map);
        verify_codebook(&map, &cb).unwrap();
        let other = Codebook::new(16, vec![0.0; 16]).unwrap();
        assert!(matches!(
            verify_codebook(&map, &other),
            Err(Error::Format(FormatError::DigestMismatch { .. }))
        ));
    }

    #[test]
    fn index_map_rejects_out_of_range_indices() {
        let img = Image::new(4, 4, vec![0; 16]).unwrap();
        let geom = BlockGeometry::fit(&img, 4, 4).unwrap();
        let cb = Codebook::new(16, vec![0.0; 32]).unwrap();
        let mut bytes = write_index_map(&encode(&img, &cb, &geom).unwrap());
        bytes[56] = 2;
        assert_eq!(
            read_index_map(&bytes),
            Err(Error::Format(FormatError::IndexOutOfRange {
                index: 2,
                size: 2,
                offset: 56
            }))
        );
    }

    proptest! {
        #[test]
        fn codebook_roundtrip(m in 1usize..20, dim in 1usize..20, seed in any::<u64>()) {
            let data: Vec<f64> = (0..m * dim)
                .map(|i| ((seed ^ (i as u64).wrapping_mul(0x9e37_79b9)) % 100_000) as f64 / 7.0 - 5000.0)
                .collect();
            let cb = Codebook::new(dim, data).unwrap();
            let bytes = write_codebook(&cb);
            let back = read_codebook(&bytes).unwrap();
            prop_assert_eq!(&back, &cb);
            prop_assert_eq!(write_codebook(&back), bytes);
        }
    }
}
