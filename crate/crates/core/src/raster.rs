//! Grayscale rasters, binary PGM I/O and the Gaussian pyramid.

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, PgmField, Result};

/// Smallest width/height an image must have to host a 3x3 neighborhood.
pub const MIN_SIDE: usize = 3;

/// 8-bit single channel image, row-major.
///
/// In-memory images only need to be non-empty so that small code maps can be
/// represented. Loading from disk and every descriptor operation enforce the
/// [`MIN_SIDE`] minimum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!("zero-sized image {width}x{height}")));
        }
        if data.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "buffer has {} bytes, {width}x{height} needs {}",
                data.len(),
                width * height
            )));
        }
        Ok(GrayImage { width, height, data })
    }

    /// Constant image.
    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[u8] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub(crate) fn ensure_min_size(&self) -> Result<()> {
        if self.width < MIN_SIDE || self.height < MIN_SIDE {
            return Err(Error::ImageTooSmall {
                width: self.width,
                height: self.height,
                min: MIN_SIDE,
            });
        }
        Ok(())
    }

    /// Rotates the image by 90 degrees clockwise.
    pub fn rotate90(&self) -> GrayImage {
        let (w, h) = (self.height, self.width);
        let mut data = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                // destination (x, y) comes from source column y, row (height-1-x)
                data.push(self.get(y, self.height - 1 - x));
            }
        }
        GrayImage { width: w, height: h, data }
    }

    /// Rotates clockwise by `quarter_turns` x 90 degrees.
    pub fn rotate_quarter_turns(&self, quarter_turns: usize) -> GrayImage {
        let mut out = self.clone();
        for _ in 0..quarter_turns % 4 {
            out = out.rotate90();
        }
        out
    }
}

/// Parses a binary (P5) PGM with maxval 255 from memory.
pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut cursor = HeaderCursor { bytes, pos: 0 };

    let magic = cursor.token().ok_or(Error::PgmHeader { field: PgmField::Magic })?;
    if magic != b"P5" {
        let magic = String::from_utf8_lossy(magic).into_owned();
        let is_netpbm = magic.len() == 2 && magic.starts_with('P') && magic[1..].chars().all(|c| c.is_ascii_digit());
        return Err(if is_netpbm {
            Error::UnsupportedPgmVariant(magic)
        } else {
            Error::PgmHeader { field: PgmField::Magic }
        });
    }
    let width = cursor.number(PgmField::Width)?;
    let height = cursor.number(PgmField::Height)?;
    let maxval = cursor.number(PgmField::Maxval)?;
    if maxval != 255 {
        return Err(Error::UnsupportedMaxval(maxval as u32));
    }
    // exactly one whitespace byte separates maxval from the raster
    match bytes.get(cursor.pos) {
        Some(b) if b.is_ascii_whitespace() => cursor.pos += 1,
        _ => return Err(Error::PgmHeader { field: PgmField::Maxval }),
    }
    if width == 0 || height == 0 {
        return Err(Error::ImageTooSmall { width, height, min: 1 });
    }

    let expected = width * height;
    let payload = &bytes[cursor.pos..];
    if payload.len() < expected {
        return Err(Error::TruncatedPixelData { expected, found: payload.len() });
    }
    GrayImage::new(width, height, payload[..expected].to_vec())
}

/// Serializes to P5 with the fixed header `P5\n<w> <h>\n255\n`.
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", img.width, img.height);
    let mut out = Vec::with_capacity(header.len() + img.data.len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(&img.data);
    out
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes)
}

pub fn save_pgm(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(img)).map_err(|e| Error::io(path, e))
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Option<&'a [u8]> {
        self.skip_space_and_comments();
        let start = self.pos;
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() || b == b'#' {
                break;
            }
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn number(&mut self, field: PgmField) -> Result<usize> {
        let tok = self.token().ok_or(Error::PgmHeader { field })?;
        std::str::from_utf8(tok)
            .ok()
            .filter(|s| s.bytes().all(|b| b.is_ascii_digit()))
            .and_then(|s| s.parse().ok())
            .ok_or(Error::PgmHeader { field })
    }
}

/// 5-tap binomial kernel, weights sum to 16.
const BINOMIAL5: [u32; 5] = [1, 4, 6, 4, 1];

/// Separable [1 4 6 4 1]/16 blur with edge replication.
///
/// Both passes accumulate in integers and the result is rounded half-up once
/// at the end, so the output equals a dense 5x5 convolution with the outer
/// product kernel divided by 256.
pub fn gaussian_blur(img: &GrayImage) -> GrayImage {
    let (w, h) = (img.width, img.height);
    let clamp = |v: isize, len: usize| v.clamp(0, len as isize - 1) as usize;

    let mut horizontal = vec![0u32; w * h];
    horizontal.par_chunks_mut(w).enumerate().for_each(|(y, out)| {
        let src = img.row(y);
        for (x, o) in out.iter_mut().enumerate() {
            *o = BINOMIAL5
                .iter()
                .enumerate()
                .map(|(k, &wt)| wt * src[clamp(x as isize + k as isize - 2, w)] as u32)
                .sum();
        }
    });

    let mut data = vec![0u8; w * h];
    data.par_chunks_mut(w).enumerate().for_each(|(y, out)| {
        for (x, o) in out.iter_mut().enumerate() {
            let acc: u32 = BINOMIAL5
                .iter()
                .enumerate()
                .map(|(k, &wt)| wt * horizontal[clamp(y as isize + k as isize - 2, h) * w + x])
                .sum();
            *o = ((acc + 128) >> 8).min(255) as u8;
        }
    });
    GrayImage { width: w, height: h, data }
}

/// Keeps even-indexed rows and columns; output is floor(w/2) x floor(h/2).
pub fn decimate(img: &GrayImage) -> Result<GrayImage> {
    let (w, h) = (img.width / 2, img.height / 2);
    GrayImage::from_fn(w, h, |x, y| img.get(2 * x, 2 * y))
}

#[derive(Debug, Clone)]
pub struct Pyramid {
    levels: Vec<GrayImage>,
}

impl Pyramid {
    pub fn levels(&self) -> &[GrayImage] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }
}

/// Level 0 is the input; each further level is blur then decimation.
pub fn build_pyramid(img: &GrayImage, levels: usize) -> Result<Pyramid> {
    if levels == 0 {
        return Err(Error::InvalidParameter("pyramid needs at least one level".into()));
    }
    img.ensure_min_size()?;
    let (mut w, mut h) = (img.width, img.height);
    for level in 1..levels {
        w /= 2;
        h /= 2;
        if w < MIN_SIDE || h < MIN_SIDE {
            return Err(Error::PyramidTooDeep { level, width: w, height: h });
        }
    }

    let mut out = Vec::with_capacity(levels);
    out.push(img.clone());
    for _ in 1..levels {
        let next = decimate(&gaussian_blur(out.last().expect("non-empty")))?;
        out.push(next);
    }
    Ok(Pyramid { levels: out })
}
