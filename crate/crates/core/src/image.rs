//! Grayscale images, block layouts and file I/O.
//!
//! PGM (P5 binary and P2 ASCII, maxval up to 255) is the canonical format and
//! round-trips bit-exactly. 8-bit grayscale PNG is accepted on input only.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// A rectangular grid of integer intensities, stored row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    bit_depth: u8,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        Self::with_bit_depth(width, height, 8, pixels)
    }

    pub fn with_bit_depth(
        width: usize,
        height: usize,
        bit_depth: u8,
        pixels: Vec<u8>,
    ) -> Result<Self> {
        if !(1..=8).contains(&bit_depth) {
            return Err(Error::UnsupportedFormat(format!(
                "bit depth {bit_depth} (only up to 8 bits supported)"
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::DimensionMismatch(format!(
                "empty image {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        let max = ((1u16 << bit_depth) - 1) as u8;
        if let Some(p) = pixels.iter().find(|&&p| p > max) {
            return Err(Error::CorruptFile(format!(
                "pixel value {p} exceeds maximum {max} for bit depth {bit_depth}"
            )));
        }
        Ok(GrayImage {
            width,
            height,
            bit_depth,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                pixels.push(f(row, col));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bit_depth(&self) -> u8 {
        self.bit_depth
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    /// Intensity bounds `[x_min, x_max]` implied by the bit depth.
    pub fn bounds(&self) -> IntensityRange {
        IntensityRange::for_bit_depth(self.bit_depth)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.pixels.iter().map(|&p| p as f64).collect()
    }

    /// Round a real-valued field half away from zero and clamp it into `range`.
    pub fn from_real_field(
        width: usize,
        height: usize,
        field: &[f64],
        range: IntensityRange,
    ) -> Result<Self> {
        if field.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {width}x{height} image",
                field.len()
            )));
        }
        let pixels = field.iter().map(|&v| range.round_clamp(v)).collect();
        Self::with_bit_depth(width, height, range.bit_depth, pixels)
    }

    /// Sub-image with top-left corner `(row, col)`.
    pub fn crop(&self, row: usize, col: usize, width: usize, height: usize) -> Result<Self> {
        if row + height > self.height || col + width > self.width {
            return Err(Error::DimensionMismatch(format!(
                "crop {width}x{height} at ({row},{col}) exceeds {}x{} image",
                self.width, self.height
            )));
        }
        let mut pixels = Vec::with_capacity(width * height);
        for r in row..row + height {
            let start = r * self.width + col;
            pixels.extend_from_slice(&self.pixels[start..start + width]);
        }
        Self::with_bit_depth(width, height, self.bit_depth, pixels)
    }

    /// Largest centred crop whose sides are multiples of `block_size`.
    pub fn crop_to_blocks(&self, block_size: usize) -> Result<Self> {
        if block_size < 2 {
            return Err(Error::InvalidBlockSize(block_size));
        }
        let w = self.width / block_size * block_size;
        let h = self.height / block_size * block_size;
        if w == 0 || h == 0 {
            return Err(Error::IndivisibleDimensions {
                width: self.width,
                height: self.height,
                block_size,
            });
        }
        self.crop((self.height - h) / 2, (self.width - w) / 2, w, h)
    }
}

/// Valid pixel intensity interval `[min, max]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IntensityRange {
    pub min: u8,
    pub max: u8,
    pub bit_depth: u8,
}

impl IntensityRange {
    pub fn for_bit_depth(bit_depth: u8) -> Self {
        IntensityRange {
            min: 0,
            max: ((1u16 << bit_depth) - 1) as u8,
            bit_depth,
        }
    }

    pub fn eight_bit() -> Self {
        Self::for_bit_depth(8)
    }

    pub fn min_f64(&self) -> f64 {
        self.min as f64
    }

    pub fn max_f64(&self) -> f64 {
        self.max as f64
    }

    pub fn span(&self) -> f64 {
        self.max_f64() - self.min_f64()
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.min_f64() + self.max_f64())
    }

    /// Round half away from zero, then clamp. Values are first snapped to a
    /// 1e-6 grid so numerical noise cannot decide a tie.
    pub fn round_clamp(&self, v: f64) -> u8 {
        let snapped = (v * 1e6).round() / 1e6;
        snapped.round().clamp(self.min_f64(), self.max_f64()) as u8
    }
}

/// Partition of an image into square blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockLayout {
    pub block_size: usize,
    pub blocks_x: usize,
    pub blocks_y: usize,
}

impl BlockLayout {
    /// Requires both dimensions to be exact multiples of the block size.
    pub fn new(width: usize, height: usize, block_size: usize) -> Result<Self> {
        if block_size < 2 {
            return Err(Error::InvalidBlockSize(block_size));
        }
        if width == 0 || height == 0 || width % block_size != 0 || height % block_size != 0 {
            return Err(Error::IndivisibleDimensions {
                width,
                height,
                block_size,
            });
        }
        Ok(BlockLayout {
            block_size,
            blocks_x: width / block_size,
            blocks_y: height / block_size,
        })
    }

    pub fn width(&self) -> usize {
        self.blocks_x * self.block_size
    }

    pub fn height(&self) -> usize {
        self.blocks_y * self.block_size
    }

    pub fn pixel_count(&self) -> usize {
        self.width() * self.height()
    }

    pub fn block_count(&self) -> usize {
        self.blocks_x * self.blocks_y
    }

    /// Pixels per block, `N²`.
    pub fn block_area(&self) -> usize {
        self.block_size * self.block_size
    }

    /// Index of the block containing pixel `(row, col)`.
    #[inline]
    pub fn block_of(&self, row: usize, col: usize) -> usize {
        (row / self.block_size) * self.blocks_x + col / self.block_size
    }

    /// Top-left pixel `(row, col)` of block `b` (blocks are numbered row-major).
    #[inline]
    pub fn block_origin(&self, b: usize) -> (usize, usize) {
        (
            (b / self.blocks_x) * self.block_size,
            (b % self.blocks_x) * self.block_size,
        )
    }

    /// Row-major pixel index of offset `(i, j)` within block `b`.
    #[inline]
    pub fn pixel_index(&self, b: usize, i: usize, j: usize) -> usize {
        let (r0, c0) = self.block_origin(b);
        (r0 + i) * self.width() + c0 + j
    }
}

pub fn make_layout(img: &GrayImage, block_size: usize) -> Result<BlockLayout> {
    BlockLayout::new(img.width(), img.height(), block_size)
}

pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes)
}

/// Decode PGM or PNG bytes, dispatching on the file signature.
pub fn decode_image(bytes: &[u8]) -> Result<GrayImage> {
    match bytes {
        [b'P', b'5', ..] | [b'P', b'2', ..] => decode_pgm(bytes),
        [b'P', b'1'..=b'6', ..] => Err(Error::NotGrayscale(format!(
            "netpbm variant P{} is not a graymap",
            bytes[1] as char
        ))),
        [0x89, b'P', b'N', b'G', ..] => decode_png(bytes),
        _ => Err(Error::UnsupportedFormat(
            "unrecognised file signature (expected PGM or PNG)".into(),
        )),
    }
}

pub fn save_image(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_pgm(img);
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))
}

/// Binary (P5) PGM encoding.
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let maxval = img.bounds().max;
    let mut out = format!("P5\n{} {}\n{}\n", img.width, img.height, maxval).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderReader<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn next_uint(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::CorruptFile(format!("missing {what} in PGM")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::CorruptFile(format!("{what} out of range in PGM")))
    }
}

fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let binary = bytes[1] == b'5';
    let mut rd = HeaderReader { bytes, pos: 2 };
    let width = rd.next_uint("width")?;
    let height = rd.next_uint("height")?;
    let maxval = rd.next_uint("maxval")?;
    if maxval == 0 {
        return Err(Error::CorruptFile("maxval 0".into()));
    }
    if maxval > 255 {
        return Err(Error::UnsupportedFormat(format!(
            "PGM maxval {maxval} (only 8-bit graymaps are supported)"
        )));
    }
    if width == 0 || height == 0 {
        return Err(Error::CorruptFile(format!("empty image {width}x{height}")));
    }
    let count = width
        .checked_mul(height)
        .ok_or_else(|| Error::CorruptFile("image dimensions overflow".into()))?;
    let pixels = if binary {
        // exactly one whitespace byte separates the header from the raster
        let start = rd.pos + 1;
        if rd.pos >= bytes.len() || !bytes[rd.pos].is_ascii_whitespace() {
            return Err(Error::CorruptFile("truncated PGM header".into()));
        }
        let raster = bytes
            .get(start..start + count)
            .ok_or_else(|| Error::CorruptFile("truncated PGM raster".into()))?;
        raster.to_vec()
    } else {
        let mut v = Vec::with_capacity(count);
        for _ in 0..count {
            v.push(rd.next_uint("pixel")?);
        }
        v.into_iter()
            .map(|p| {
                u8::try_from(p)
                    .ok()
                    .filter(|&p| p as usize <= maxval)
                    .ok_or_else(|| Error::CorruptFile(format!("pixel {p} exceeds maxval {maxval}")))
            })
            .collect::<Result<Vec<u8>>>()?
    };
    if let Some(&p) = pixels.iter().find(|&&p| p as usize > maxval) {
        return Err(Error::CorruptFile(format!("pixel {p} exceeds maxval {maxval}")));
    }
    let bit_depth = (usize::BITS - maxval.leading_zeros()) as u8;
    GrayImage::with_bit_depth(width, height, bit_depth, pixels)
}

fn decode_png(bytes: &[u8]) -> Result<GrayImage> {
    let mut decoder = png::Decoder::new(bytes);
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::CorruptFile(format!("PNG: {e}")))?;
    let info = reader.info();
    match info.color_type {
        png::ColorType::Grayscale => {}
        other => {
            return Err(Error::NotGrayscale(format!("PNG color type {other:?}")));
        }
    }
    if info.bit_depth == png::BitDepth::Sixteen {
        return Err(Error::UnsupportedFormat("16-bit PNG".into()));
    }
    let mut buf = vec![0; reader.output_buffer_size()];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::CorruptFile(format!("PNG: {e}")))?;
    if frame.color_type != png::ColorType::Grayscale || frame.bit_depth != png::BitDepth::Eight {
        return Err(Error::UnsupportedFormat(format!(
            "PNG decodes to {:?}/{:?}",
            frame.color_type, frame.bit_depth
        )));
    }
    let (width, height) = (frame.width as usize, frame.height as usize);
    let mut pixels = Vec::with_capacity(width * height);
    for row in buf.chunks(frame.line_size).take(height) {
        pixels.extend_from_slice(&row[..width]);
    }
    GrayImage::new(width, height, pixels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_ascii_pgm() {
        let text = b"P2\n# a comment\n4 4\n255\n128 128 128 128\n128 128 128 128\n128 128 128 128 128 128 128 128\n";
        let img = decode_image(text).unwrap();
        assert_eq!((img.width(), img.height()), (4, 4));
        assert!(img.pixels().iter().all(|&p| p == 128));
    }

    #[test]
    fn large_binary_pgm_dimensions() {
        let img = GrayImage::from_fn(512, 512, |r, c| ((r * 3 + c) % 256) as u8).unwrap();
        let back = decode_image(&encode_pgm(&img)).unwrap();
        assert_eq!((back.width(), back.height()), (512, 512));
        assert_eq!(back, img);
    }

    #[test]
    fn sixteen_bit_pgm_rejected() {
        let mut bytes = b"P5 2 1 65535\n".to_vec();
        bytes.extend_from_slice(&[0, 1, 0, 2]);
        assert!(matches!(
            decode_image(&bytes),
            Err(Error::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn color_ppm_rejected() {
        let bytes = b"P6 1 1 255\n\x01\x02\x03";
        assert!(matches!(decode_image(bytes), Err(Error::NotGrayscale(_))));
    }

    #[test]
    fn truncated_raster_is_corrupt() {
        let bytes = b"P5 4 4 255\n\x00\x01";
        assert!(matches!(decode_image(bytes), Err(Error::CorruptFile(_))));
    }

    #[test]
    fn garbage_is_unsupported() {
        assert!(matches!(
            decode_image(b"GIF89a"),
            Err(Error::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn save_load_minimal_image() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.pgm");
        let img = GrayImage::filled(1, 1, 0).unwrap();
        save_image(&img, &path).unwrap();
        assert_eq!(load_image(&path).unwrap(), img);
    }

    #[test]
    fn save_to_missing_directory_fails() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("no/such/dir/img.pgm");
        let img = GrayImage::filled(2, 2, 7).unwrap();
        assert!(matches!(
            save_image(&img, path),
            Err(Error::IoFailure { .. })
        ));
    }

    #[test]
    fn png_grayscale_and_rgb() {
        let encode = |color, data: &[u8]| {
            let mut out = Vec::new();
            {
                let mut enc = png::Encoder::new(&mut out, 2, 2);
                enc.set_color(color);
                enc.set_depth(png::BitDepth::Eight);
                let mut w = enc.write_header().unwrap();
                w.write_image_data(data).unwrap();
            }
            out
        };
        let gray = encode(png::ColorType::Grayscale, &[1, 2, 3, 4]);
        let img = decode_image(&gray).unwrap();
        assert_eq!(img.pixels(), &[1, 2, 3, 4]);
        let rgb = encode(png::ColorType::Rgb, &[0; 12]);
        assert!(matches!(decode_image(&rgb), Err(Error::NotGrayscale(_))));
    }

    #[test]
    fn layouts() {
        let l = BlockLayout::new(512, 512, 8).unwrap();
        assert_eq!((l.block_size, l.blocks_x, l.blocks_y), (8, 64, 64));
        assert_eq!(l.block_count(), 4096);
        let l = BlockLayout::new(16, 8, 8).unwrap();
        assert_eq!((l.blocks_x, l.blocks_y, l.block_count()), (2, 1, 2));
        assert!(matches!(
            BlockLayout::new(10, 10, 8),
            Err(Error::IndivisibleDimensions { .. })
        ));
        assert!(matches!(
            BlockLayout::new(8, 8, 1),
            Err(Error::InvalidBlockSize(1))
        ));
    }

    #[test]
    fn crop_to_blocks_is_centred() {
        let img = GrayImage::from_fn(21, 19, |r, c| (r * 21 + c) as u8).unwrap();
        let cropped = img.crop_to_blocks(8).unwrap();
        assert_eq!((cropped.width(), cropped.height()), (16, 16));
        assert_eq!(cropped.get(0, 0), img.get(1, 2));
    }

    #[test]
    fn low_maxval_keeps_bit_depth() {
        let img = decode_image(b"P2 2 1 15 3 15").unwrap();
        assert_eq!(img.bit_depth(), 4);
        assert_eq!(img.bounds().max, 15);
        assert_eq!(decode_image(&encode_pgm(&img)).unwrap(), img);
    }

    proptest! {
        #[test]
        fn pgm_round_trip(w in 1usize..20, h in 1usize..20, seed in any::<u64>()) {
            let img = GrayImage::from_fn(w, h, |r, c| {
                (seed.wrapping_mul(6364136223846793005).wrapping_add(((r * w + c) as u64).wrapping_mul(1442695040888963407)) >> 56) as u8
            }).unwrap();
            prop_assert_eq!(decode_image(&encode_pgm(&img)).unwrap(), img);
        }

        #[test]
        fn layout_covers_width(bx in 1usize..10, by in 1usize..10, n in 2usize..9) {
            let img = GrayImage::filled(bx * n, by * n, 0).unwrap();
            let l = make_layout(&img, n).unwrap();
            prop_assert_eq!(l.blocks_x * n, img.width());
            prop_assert_eq!(l.blocks_y * n, img.height());
        }
    }
}
