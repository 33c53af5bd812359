//! Browser demo: load a picture, erase the most significant coefficients of
//! every 8x8 block, recover them, compare.
//!
//! [`Session`] holds all the logic and is plain Rust so it can be tested
//! natively; [`Demo`] is the thin wasm-bindgen wrapper used by `www/`.

use dct_recover::baseline::scan_align_dc;
use dct_recover::dct::{forward_dct, CoeffGrid, DctBasis};
use dct_recover::image::{decode_image, make_layout, GrayImage, IntensityRange};
use dct_recover::mask::{apply_mask, most_significant_mask, EraseMask, FillPolicy};
use dct_recover::metrics::{score, QualityScore};
use dct_recover::model::{boundary_variation, select_pairs};
use dct_recover::recovery::{midpoint_reference, recover, RecoveryOptions};
use dct_recover::{Error, Result};
use serde::Serialize;
use wasm_bindgen::prelude::*;

pub const BLOCK_SIZE: usize = 8;
/// Larger pictures are center-cropped to this side to keep the solve short.
pub const MAX_SIDE: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Lp,
    Scan,
}

impl Method {
    fn parse(name: &str) -> Result<Self> {
        match name {
            "lp" => Ok(Method::Lp),
            "scan" => Ok(Method::Scan),
            other => Err(Error::InvalidMask(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub method: &'static str,
    pub unknowns: usize,
    pub quality: QualityScore,
    pub damaged_quality: QualityScore,
    pub boundary_variation: f64,
    pub objective: Option<f64>,
    pub iterations: Option<usize>,
}

struct Damage {
    mask: EraseMask,
    known: CoeffGrid,
    damaged: GrayImage,
}

pub struct Session {
    original: GrayImage,
    basis: DctBasis,
    damage: Option<Damage>,
}

/// Luma of interleaved RGBA, rounded.
pub fn rgba_to_gray(width: usize, height: usize, rgba: &[u8]) -> Result<GrayImage> {
    if rgba.len() != width * height * 4 {
        return Err(Error::DimensionMismatch(format!(
            "{} RGBA bytes for {width}x{height}",
            rgba.len()
        )));
    }
    let pixels = rgba
        .chunks_exact(4)
        .map(|p| (0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64).round() as u8)
        .collect();
    GrayImage::new(width, height, pixels)
}

pub fn gray_to_rgba(img: &GrayImage) -> Vec<u8> {
    img.pixels().iter().flat_map(|&v| [v, v, v, 255]).collect()
}

fn fit(img: &GrayImage) -> Result<GrayImage> {
    let w = img.width().min(MAX_SIDE);
    let h = img.height().min(MAX_SIDE);
    let centred = img.crop((img.height() - h) / 2, (img.width() - w) / 2, w, h)?;
    centred.crop_to_blocks(BLOCK_SIZE)
}

impl Session {
    pub fn new(img: &GrayImage) -> Result<Self> {
        let original = fit(img)?;
        if original.bit_depth() != 8 {
            return Err(Error::DimensionMismatch("only 8-bit images are supported".into()));
        }
        Ok(Session {
            original,
            basis: DctBasis::new(BLOCK_SIZE)?,
            damage: None,
        })
    }

    pub fn from_rgba(width: usize, height: usize, rgba: &[u8]) -> Result<Self> {
        Self::new(&rgba_to_gray(width, height, rgba)?)
    }

    /// PNG or PGM file contents.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::new(&decode_image(bytes)?)
    }

    pub fn original(&self) -> &GrayImage {
        &self.original
    }

    pub fn damaged(&self) -> Option<&GrayImage> {
        self.damage.as_ref().map(|d| &d.damaged)
    }

    /// Drop the first `count` coefficients in zigzag order from every block.
    /// Erased entries are zeroed so recovery cannot see them.
    pub fn erase(&mut self, count: usize) -> Result<&GrayImage> {
        let range = IntensityRange::eight_bit();
        let mask = most_significant_mask(count, BLOCK_SIZE)?;
        let layout = make_layout(&self.original, BLOCK_SIZE)?;
        let full = forward_dct(&self.original, &layout, &self.basis)?;
        let known = apply_mask(&full, &mask, FillPolicy::Zero, &self.basis, range)?;
        let damaged = midpoint_reference(&known, &mask, &self.basis, range)?;
        Ok(&self
            .damage
            .insert(Damage { mask, known, damaged })
            .damaged)
    }

    pub fn recover(&self, method: Method) -> Result<(GrayImage, Outcome)> {
        let damage = self.damage.as_ref().ok_or(Error::EmptyInput)?;
        let range = IntensityRange::eight_bit();
        let layout = *damage.known.layout();
        let (image, field, objective, iterations) = match method {
            Method::Lp => {
                let rep = recover(&damage.known, &damage.mask, &self.basis, range, &RecoveryOptions::default())?;
                let iterations = rep.solver_stats.iterations;
                (rep.recovered, rep.field, Some(rep.objective), Some(iterations))
            }
            Method::Scan => {
                let out = scan_align_dc(&damage.known, &damage.mask, &self.basis, range)?;
                (out.image, out.field, None, None)
            }
        };
        let pairs = select_pairs(&layout, damage.mask.is_dc_only());
        let outcome = Outcome {
            method: match method {
                Method::Lp => "lp",
                Method::Scan => "scan",
            },
            unknowns: damage.mask.len(),
            quality: score(&self.original, &image)?,
            damaged_quality: score(&self.original, &damage.damaged)?,
            boundary_variation: boundary_variation(&field, layout.width(), &pairs),
            objective,
            iterations,
        };
        Ok((image, outcome))
    }
}

fn js_err(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Demo {
    session: Session,
    recovered: Option<GrayImage>,
}

#[wasm_bindgen]
impl Demo {
    /// From canvas `ImageData` contents.
    #[wasm_bindgen(constructor)]
    pub fn new(width: usize, height: usize, rgba: &[u8]) -> std::result::Result<Demo, JsError> {
        let session = Session::from_rgba(width, height, rgba).map_err(js_err)?;
        Ok(Demo { session, recovered: None })
    }

    #[wasm_bindgen(js_name = fromFile)]
    pub fn from_file(bytes: &[u8]) -> std::result::Result<Demo, JsError> {
        let session = Session::from_bytes(bytes).map_err(js_err)?;
        Ok(Demo { session, recovered: None })
    }

    pub fn width(&self) -> usize {
        self.session.original().width()
    }

    pub fn height(&self) -> usize {
        self.session.original().height()
    }

    #[wasm_bindgen(js_name = originalRgba)]
    pub fn original_rgba(&self) -> Vec<u8> {
        gray_to_rgba(self.session.original())
    }

    /// Returns the damaged image as RGBA.
    pub fn erase(&mut self, count: usize) -> std::result::Result<Vec<u8>, JsError> {
        self.recovered = None;
        let damaged = self.session.erase(count).map_err(js_err)?;
        Ok(gray_to_rgba(damaged))
    }

    /// `method` is `"lp"` or `"scan"`. Returns the scores as JSON; the image
    /// is then available from `recoveredRgba`.
    pub fn recover(&mut self, method: &str) -> std::result::Result<String, JsError> {
        let method = Method::parse(method).map_err(js_err)?;
        let (image, outcome) = self.session.recover(method).map_err(js_err)?;
        self.recovered = Some(image);
        serde_json::to_string(&outcome).map_err(|e| JsError::new(&e.to_string()))
    }

    #[wasm_bindgen(js_name = recoveredRgba)]
    pub fn recovered_rgba(&self) -> Vec<u8> {
        self.recovered.as_ref().map(gray_to_rgba).unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize) -> GrayImage {
        GrayImage::from_fn(w, h, |r, c| (40 + r + 2 * c) as u8).unwrap()
    }

    #[test]
    fn rgba_round_trip_keeps_gray() {
        let img = ramp(16, 8);
        let back = rgba_to_gray(16, 8, &gray_to_rgba(&img)).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn luma_weights() {
        let g = rgba_to_gray(1, 1, &[255, 0, 0, 255]).unwrap();
        assert_eq!(g.pixels(), &[76]);
        assert!(rgba_to_gray(2, 2, &[0; 12]).is_err());
    }

    #[test]
    fn large_inputs_are_cropped_to_blocks() {
        let s = Session::new(&GrayImage::filled(300, 45, 9).unwrap()).unwrap();
        assert_eq!((s.original().width(), s.original().height()), (128, 40));
        assert!(Session::new(&GrayImage::filled(7, 7, 0).unwrap()).is_err());
    }

    #[test]
    fn recover_needs_erase_first() {
        let s = Session::new(&ramp(16, 16)).unwrap();
        assert!(s.recover(Method::Lp).is_err());
    }

    #[test]
    fn dc_recovery_improves_on_the_damaged_image() {
        let mut s = Session::new(&ramp(32, 32)).unwrap();
        s.erase(1).unwrap();
        let (_, lp) = s.recover(Method::Lp).unwrap();
        assert!(lp.quality.shifted_psnr > lp.damaged_quality.shifted_psnr + 10.0, "{lp:?}");
        let (_, scan) = s.recover(Method::Scan).unwrap();
        assert!(lp.boundary_variation <= scan.boundary_variation + 1e-6);
    }

    #[test]
    fn scan_rejects_larger_masks() {
        let mut s = Session::new(&ramp(16, 16)).unwrap();
        s.erase(3).unwrap();
        assert!(s.recover(Method::Scan).is_err());
        let (img, out) = s.recover(Method::Lp).unwrap();
        assert_eq!(out.unknowns, 3);
        assert_eq!(img.width(), 16);
    }

    #[test]
    fn method_names() {
        assert_eq!(Method::parse("lp").unwrap(), Method::Lp);
        assert_eq!(Method::parse("scan").unwrap(), Method::Scan);
        assert!(Method::parse("magic").is_err());
    }
}
