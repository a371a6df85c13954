//! Portable GrayMap reading (binary P5 and ASCII P2) and canonical P5
//! writing.

use super::{FormatError, Image};
use crate::error::Result;

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    /// Skips whitespace and `#` comments running to the end of the line.
    fn skip_separators(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    /// Next unsigned decimal token and the offset it starts at.
    fn number(&mut self) -> Result<(u32, usize), FormatError> {
        self.skip_separators();
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| !b.is_ascii_whitespace() && *b != b'#')
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(FormatError::Truncated { offset: start });
        }
        let token = &self.bytes[start..self.pos];
        std::str::from_utf8(token)
            .ok()
            .filter(|t| t.bytes().all(|b| b.is_ascii_digit()))
            .and_then(|t| t.parse::<u32>().ok())
            .map(|v| (v, start))
            .ok_or_else(|| FormatError::InvalidToken {
                token: String::from_utf8_lossy(token).into_owned(),
                offset: start,
            })
    }
}

/// Parses a P5 or P2 graymap with maxval at most 255. Pixel values are kept
/// as stored; no rescaling to 255 takes place.
pub fn read_pgm(bytes: &[u8]) -> Result<Image> {
    let binary = match bytes.get(..2) {
        Some(b"P5") => true,
        Some(b"P2") => false,
        _ => return Err(FormatError::BadMagic { offset: 0 }.into()),
    };
    // The magic must be followed by a separator.
    if bytes
        .get(2)
        .is_some_and(|b| !b.is_ascii_whitespace() && *b != b'#')
    {
        return Err(FormatError::BadMagic { offset: 0 }.into());
    }
    let mut cur = Cursor { bytes, pos: 2 };
    let (width, w_at) = cur.number()?;
    if width == 0 {
        return Err(FormatError::InvalidHeader { value: 0, offset: w_at }.into());
    }
    let (height, h_at) = cur.number()?;
    if height == 0 {
        return Err(FormatError::InvalidHeader { value: 0, offset: h_at }.into());
    }
    let (maxval, m_at) = cur.number()?;
    if maxval == 0 {
        return Err(FormatError::InvalidHeader { value: 0, offset: m_at }.into());
    }
    if maxval > 255 {
        return Err(FormatError::UnsupportedMaxval {
            value: maxval,
            offset: m_at,
        }
        .into());
    }
    let count = (width as usize)
        .checked_mul(height as usize)
        .ok_or(FormatError::InvalidHeader {
            value: width.max(height),
            offset: w_at,
        })?;

    let mut pixels = Vec::with_capacity(count.min(bytes.len()));
    if binary {
        // Exactly one whitespace byte separates maxval from the raster.
        match bytes.get(cur.pos) {
            Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
            _ => return Err(FormatError::Truncated { offset: cur.pos }.into()),
        }
        let start = cur.pos;
        let raster = bytes
            .get(start..start + count)
            .ok_or(FormatError::Truncated { offset: bytes.len() })?;
        if let Some(i) = raster.iter().position(|&p| u32::from(p) > maxval) {
            return Err(FormatError::PixelOutOfRange {
                value: u32::from(raster[i]),
                maxval,
                offset: start + i,
            }
            .into());
        }
        pixels.extend_from_slice(raster);
    } else {
        for _ in 0..count {
            let (v, at) = cur.number()?;
            if v > maxval {
                return Err(FormatError::PixelOutOfRange {
                    value: v,
                    maxval,
                    offset: at,
                }
                .into());
            }
            pixels.push(v as u8);
        }
    }
    Image::new(width as usize, height as usize, pixels)
}

/// Canonical binary form: `P5\n<w> <h>\n255\n` followed by the raster.
pub fn write_pgm(img: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.pixels());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use proptest::prelude::*;

    fn format_err(bytes: &[u8]) -> FormatError {
        match read_pgm(bytes) {
            Err(Error::Format(e)) => e,
            other => panic!("expected a format error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_binary_file() {
        let mut bytes = b"P5\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 128, 255, 7]);
        let img = read_pgm(&bytes).unwrap();
        assert_eq!((img.width(), img.height()), (2, 2));
        assert_eq!(img.pixels(), &[0, 128, 255, 7]);
    }

    #[test]
    fn ascii_and_binary_agree() {
        let ascii = b"P2\n# made by hand\n3 2\n# comment between fields\n200\n0 1 2\n100 150 200\n";
        let mut binary = b"P5 3 2 200\n".to_vec();
        binary.extend_from_slice(&[0, 1, 2, 100, 150, 200]);
        assert_eq!(read_pgm(ascii).unwrap(), read_pgm(&binary).unwrap());
    }

    #[test]
    fn comments_right_after_magic() {
        let mut bytes = b"P5# comment\n1 1\n255\n".to_vec();
        bytes.push(42);
        assert_eq!(read_pgm(&bytes).unwrap().pixels(), &[42]);
    }

    #[test]
    fn parse_errors_carry_offsets() {
        assert_eq!(format_err(b"P6\n1 1\n255\n\0"), FormatError::BadMagic { offset: 0 });
        assert_eq!(format_err(b"P55\n1 1\n255\n\0"), FormatError::BadMagic { offset: 0 });
        assert_eq!(
            format_err(b"P5\n2 2\n65535\n"),
            FormatError::UnsupportedMaxval {
                value: 65535,
                offset: 7
            }
        );
        assert_eq!(format_err(b"P5\n2 2\n255\n\x01\x02"), FormatError::Truncated { offset: 13 });
        assert_eq!(format_err(b"P2\n2 2\n255\n1 2 3"), FormatError::Truncated { offset: 16 });
        assert_eq!(
            format_err(b"P2\n2 x\n255\n"),
            FormatError::InvalidToken {
                token: "x".into(),
                offset: 5
            }
        );
        assert_eq!(
            format_err(b"P2\n1 1\n10\n11\n"),
            FormatError::PixelOutOfRange {
                value: 11,
                maxval: 10,
                offset: 10
            }
        );
        assert_eq!(format_err(b"P5\n0 1\n255\n"), FormatError::InvalidHeader { value: 0, offset: 3 });
    }

    #[test]
    fn canonical_output() {
        let img = Image::new(1, 1, vec![0]).unwrap();
        assert_eq!(write_pgm(&img), b"P5\n1 1\n255\n\0");

        let img = Image::new(2, 3, vec![1, 2, 3, 4, 5, 6]).unwrap();
        let back = read_pgm(&write_pgm(&img)).unwrap();
        assert_eq!((back.width(), back.height()), (2, 3));
        assert_eq!(back, img);
    }

    proptest! {
        #[test]
        fn roundtrip(w in 1usize..40, h in 1usize..40, seed in any::<u64>()) {
            let pixels: Vec<u8> = (0..w * h).map(|i| (seed.wrapping_mul(i as u64 + 1) >> 13) as u8).collect();
            let img = Image::new(w, h, pixels).unwrap();
            let bytes = write_pgm(&img);
            let back = read_pgm(&bytes).unwrap();
            prop_assert_eq!(&back, &img);
            prop_assert_eq!(write_pgm(&back), bytes);
        }
    }
}
