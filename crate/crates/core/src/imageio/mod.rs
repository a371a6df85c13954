//! Grayscale images as VQ training data: block extraction, block-wise
//! encoding against a codebook, reconstruction and PSNR.

mod files;
mod pgm;

pub use files::{
    codebook_digest, read_codebook, read_index_map, verify_codebook, write_codebook,
    write_index_map, Digest,
};
pub use pgm::{read_pgm, write_pgm};

use thiserror::Error;

use crate::error::{Error, Result};
use crate::par;
use crate::vector::{nearest, Codebook, TrainingSet};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormatError {
    #[error("bad magic number at byte {offset}")]
    BadMagic { offset: usize },
    #[error("unsupported maxval {value} at byte {offset} (at most 255)")]
    UnsupportedMaxval { value: u32, offset: usize },
    #[error("input truncated at byte {offset}")]
    Truncated { offset: usize },
    #[error("invalid token {token:?} at byte {offset}")]
    InvalidToken { token: String, offset: usize },
    #[error("invalid header value {value} at byte {offset}")]
    InvalidHeader { value: u32, offset: usize },
    #[error("pixel value {value} exceeds maxval {maxval} at byte {offset}")]
    PixelOutOfRange { value: u32, maxval: u32, offset: usize },
    #[error("digest mismatch: expected {expected}, found {actual}")]
    DigestMismatch { expected: String, actual: String },
    #[error("index {index} out of range for a codebook of {size} at byte {offset}")]
    IndexOutOfRange { index: u32, size: u32, offset: usize },
    #[error("{0}")]
    Unsupported(String),
}

/// 8-bit grayscale raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput("image dimensions must be positive".into()));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }
}

/// Tiling of an image into equal blocks. The image size must be a multiple
/// of the block size in both directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockGeometry {
    pub block_w: usize,
    pub block_h: usize,
    pub blocks_x: usize,
    pub blocks_y: usize,
}

impl BlockGeometry {
    pub fn new(block_w: usize, block_h: usize, width: usize, height: usize) -> Result<Self> {
        if block_w == 0 || block_h == 0 {
            return Err(Error::InvalidInput("block dimensions must be positive".into()));
        }
        if width % block_w != 0 || height % block_h != 0 {
            return Err(Error::InvalidInput(format!(
                "{width}x{height} image does not divide into {block_w}x{block_h} blocks"
            )));
        }
        Ok(Self {
            block_w,
            block_h,
            blocks_x: width / block_w,
            blocks_y: height / block_h,
        })
    }

    pub fn fit(img: &Image, block_w: usize, block_h: usize) -> Result<Self> {
        Self::new(block_w, block_h, img.width, img.height)
    }

    /// Vector dimension `block_w * block_h`.
    pub fn dim(&self) -> usize {
        self.block_w * self.block_h
    }

    pub fn block_count(&self) -> usize {
        self.blocks_x * self.blocks_y
    }

    pub fn width(&self) -> usize {
        self.blocks_x * self.block_w
    }

    pub fn height(&self) -> usize {
        self.blocks_y * self.block_h
    }

    fn check(&self, img: &Image) -> Result<()> {
        if self.width() != img.width || self.height() != img.height {
            return Err(Error::InvalidInput(format!(
                "block geometry covers {}x{}, image is {}x{}",
                self.width(),
                self.height(),
                img.width,
                img.height
            )));
        }
        Ok(())
    }
}

/// Codeword index per block, row-major by block position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexMap {
    pub geometry: BlockGeometry,
    pub indices: Vec<u16>,
    /// Size of the codebook the indices refer to.
    pub codebook_len: u32,
    pub codebook_digest: Digest,
}

/// One vector per block, blocks row-major, pixels row-major within a block.
pub fn extract_blocks(img: &Image, geom: &BlockGeometry) -> Result<TrainingSet> {
    geom.check(img)?;
    let dim = geom.dim();
    let mut data = Vec::with_capacity(geom.block_count() * dim);
    for by in 0..geom.blocks_y {
        for bx in 0..geom.blocks_x {
            for y in 0..geom.block_h {
                let row = (by * geom.block_h + y) * img.width + bx * geom.block_w;
                data.extend(img.pixels[row..row + geom.block_w].iter().map(|&p| f64::from(p)));
            }
        }
    }
    TrainingSet::new(dim, data)
}

/// Rounds half-up and clamps to `[0, 255]`.
pub fn quantize_pixel(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Places one vector per block back into a raster, rounding each component.
pub fn assemble_blocks<'a>(
    geom: &BlockGeometry,
    blocks: impl IntoIterator<Item = &'a [f64]>,
) -> Result<Image> {
    let width = geom.width();
    let mut pixels = vec![0u8; width * geom.height()];
    let mut count = 0;
    for (b, block) in blocks.into_iter().enumerate() {
        if block.len() != geom.dim() {
            return Err(Error::DimensionMismatch {
                expected: geom.dim(),
                actual: block.len(),
            });
        }
        if b >= geom.block_count() {
            return Err(Error::InvalidInput("more blocks than the geometry holds".into()));
        }
        let (bx, by) = (b % geom.blocks_x, b / geom.blocks_x);
        for (y, row) in block.chunks_exact(geom.block_w).enumerate() {
            let start = (by * geom.block_h + y) * width + bx * geom.block_w;
            for (p, &v) in pixels[start..start + geom.block_w].iter_mut().zip(row) {
                *p = quantize_pixel(v);
            }
        }
        count += 1;
    }
    if count != geom.block_count() {
        return Err(Error::InvalidInput(format!(
            "{count} blocks for a geometry of {}",
            geom.block_count()
        )));
    }
    Image::new(width, geom.height(), pixels)
}

/// Nearest codeword for every block, with the same tie-break as
/// [`crate::assign_nearest`].
pub fn encode(img: &Image, cb: &Codebook, geom: &BlockGeometry) -> Result<IndexMap> {
    if cb.dim() != geom.dim() {
        return Err(Error::DimensionMismatch {
            expected: geom.dim(),
            actual: cb.dim(),
        });
    }
    if cb.len() > usize::from(u16::MAX) + 1 {
        return Err(FormatError::Unsupported(format!(
            "index maps hold at most 65536 codewords, codebook has {}",
            cb.len()
        ))
        .into());
    }
    let ts = extract_blocks(img, geom)?;
    let indices = par::map_range(ts.len(), |n| nearest(ts.vector(n), cb).0 as u16);
    Ok(IndexMap {
        geometry: *geom,
        indices,
        codebook_len: cb.len() as u32,
        codebook_digest: codebook_digest(cb),
    })
}

/// Replaces every block by its codeword.
pub fn decode(map: &IndexMap, cb: &Codebook) -> Result<Image> {
    if cb.dim() != map.geometry.dim() {
        return Err(Error::DimensionMismatch {
            expected: map.geometry.dim(),
            actual: cb.dim(),
        });
    }
    if let Some(&bad) = map.indices.iter().find(|&&i| usize::from(i) >= cb.len()) {
        return Err(Error::IndexOutOfRange {
            index: usize::from(bad),
            size: cb.len(),
        });
    }
    assemble_blocks(
        &map.geometry,
        map.indices.iter().map(|&i| cb.codeword(usize::from(i))),
    )
}

/// Peak signal-to-noise ratio in dB with peak 255; `+inf` for identical
/// images.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::InvalidInput(format!(
            "cannot compare a {}x{} image with a {}x{} image",
            a.width, a.height, b.width, b.height
        )));
    }
    let sse: u64 = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .map(|(&x, &y)| {
            let d = i64::from(x) - i64::from(y);
            (d * d) as u64
        })
        .sum();
    Ok(psnr_from_mse(sse as f64 / a.pixels.len() as f64))
}

/// `10 log10(255^2 / mse)`, `+inf` when `mse == 0`.
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0f64 * 255.0 / mse).log10()
    }
}

/// PSNR of `img` after a round trip through `cb`.
pub fn codebook_psnr(img: &Image, cb: &Codebook, geom: &BlockGeometry) -> Result<f64> {
    let rec = decode(&encode(img, cb, geom)?, cb)?;
    psnr(img, &rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ramp(width: usize, height: usize) -> Image {
        Image::new(width, height, (0..width * height).map(|i| (i % 256) as u8).collect()).unwrap()
    }

    #[test]
    fn block_extraction_examples() {
        let img = ramp(256, 256);
        let geom = BlockGeometry::fit(&img, 4, 4).unwrap();
        let ts = extract_blocks(&img, &geom).unwrap();
        assert_eq!((ts.len(), ts.dim()), (4096, 16));

        let flat = Image::new(8, 8, vec![7; 64]).unwrap();
        let ts = extract_blocks(&flat, &BlockGeometry::fit(&flat, 4, 4).unwrap()).unwrap();
        assert!(ts.as_flat().iter().all(|&v| v == 7.0));

        let small = ramp(4, 4);
        let ts = extract_blocks(&small, &BlockGeometry::fit(&small, 4, 4).unwrap()).unwrap();
        assert_eq!(ts.len(), 1);
        assert_eq!(ts.vector(0), (0..16).map(f64::from).collect::<Vec<_>>().as_slice());

        assert!(BlockGeometry::fit(&ramp(6, 8), 4, 4).is_err());
    }

    #[test]
    fn block_order_is_row_major() {
        let img = ramp(4, 2);
        let geom = BlockGeometry::fit(&img, 2, 2).unwrap();
        let ts = extract_blocks(&img, &geom).unwrap();
        assert_eq!(ts.vector(0), &[0.0, 1.0, 4.0, 5.0]);
        assert_eq!(ts.vector(1), &[2.0, 3.0, 6.0, 7.0]);
    }

    #[test]
    fn reassembly_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let img = Image::new(24, 12, (0..288).map(|_| rng.random()).collect()).unwrap();
        for (bw, bh) in [(4, 4), (2, 3), (8, 4), (1, 1)] {
            let geom = BlockGeometry::fit(&img, bw, bh).unwrap();
            let ts = extract_blocks(&img, &geom).unwrap();
            assert_eq!(assemble_blocks(&geom, ts.iter()).unwrap(), img);
        }
    }

    #[test]
    fn rounding_and_clamping() {
        assert_eq!(quantize_pixel(255.7), 255);
        assert_eq!(quantize_pixel(127.5), 128);
        assert_eq!(quantize_pixel(127.49), 127);
        assert_eq!(quantize_pixel(-3.0), 0);
        assert_eq!(quantize_pixel(1e9), 255);
    }

    #[test]
    fn perfect_codebook_is_lossless() {
        let img = ramp(8, 8);
        let geom = BlockGeometry::fit(&img, 4, 4).unwrap();
        let ts = extract_blocks(&img, &geom).unwrap();
        let cb = Codebook::from_vectors(ts.iter().map(<[f64]>::to_vec).collect()).unwrap();
        let map = encode(&img, &cb, &geom).unwrap();
        assert_eq!(map.indices, vec![0, 1, 2, 3]);
        assert_eq!(decode(&map, &cb).unwrap(), img);
        assert_eq!(codebook_psnr(&img, &cb, &geom).unwrap(), f64::INFINITY);

        let single = Codebook::new(16, vec![100.0; 16]).unwrap();
        assert_eq!(encode(&img, &single, &geom).unwrap().indices, vec![0; 4]);
    }

    #[test]
    fn encode_matches_exhaustive_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let levels = [20.0, 120.0, 220.0];
        let pixels: Vec<u8> = (0..64 * 64)
            .map(|i| {
                let block = (i / 64 / 4) * 16 + (i % 64) / 4;
                let base: f64 = levels[block % 3];
                (base + rng.random_range(-15.0..15.0)) as u8
            })
            .collect();
        let img = Image::new(64, 64, pixels).unwrap();
        let geom = BlockGeometry::fit(&img, 4, 4).unwrap();
        let cb = Codebook::new(16, levels.iter().flat_map(|&l| vec![l; 16]).collect()).unwrap();
        let map = encode(&img, &cb, &geom).unwrap();
        let ts = extract_blocks(&img, &geom).unwrap();
        for (b, v) in ts.iter().enumerate() {
            let d: Vec<f64> = cb
                .iter()
                .map(|c| v.iter().zip(c).map(|(x, y)| (x - y) * (x - y)).sum())
                .collect();
            let best = (0..3).fold(0, |best, k| if d[k] < d[best] { k } else { best });
            assert_eq!(usize::from(map.indices[b]), best);
        }
    }

    #[test]
    fn decode_rejects_bad_index() {
        let img = ramp(4, 4);
        let geom = BlockGeometry::fit(&img, 4, 4).unwrap();
        let cb = Codebook::new(16, vec![0.0; 16]).unwrap();
        let mut map = encode(&img, &cb, &geom).unwrap();
        map.indices[0] = 3;
        assert_eq!(decode(&map, &cb), Err(Error::IndexOutOfRange { index: 3, size: 1 }));
    }

    #[test]
    fn psnr_examples() {
        let a = Image::new(2, 2, vec![10, 20, 30, 40]).unwrap();
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);

        let black = Image::new(3, 1, vec![0; 3]).unwrap();
        let white = Image::new(3, 1, vec![255; 3]).unwrap();
        assert_eq!(psnr(&black, &white).unwrap(), 0.0);

        let b = Image::new(2, 2, vec![10, 20, 30, 56]).unwrap();
        let expected = 10.0 * (65025.0f64 / 64.0).log10();
        assert!((psnr(&a, &b).unwrap() - expected).abs() < 1e-12);
        assert!((psnr(&a, &b).unwrap() - 30.07).abs() < 0.005);
        assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());

        assert!(psnr(&a, &black).is_err());
    }

    #[test]
    fn psnr_decreases_with_mse() {
        let mut prev = f64::INFINITY;
        for mse in [0.01, 0.5, 1.0, 10.0, 100.0, 65025.0] {
            let p = psnr_from_mse(mse);
            assert!(p < prev);
            prev = p;
        }
    }
}
