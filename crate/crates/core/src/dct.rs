//! Orthonormal N×N block DCT.
//!
//! Pixels and coefficients of one block are related by
//! `x(i,j) = Σ_{k,l} A(i,j,k,l)·y(k,l)` with
//! `A(i,j,k,l) = C(k)·C(l)·cos((i+½)kπ/N)·cos((j+½)lπ/N)`,
//! `C(0) = √(1/N)` and `C(k) = √(2/N)` otherwise.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::image::{BlockLayout, GrayImage, IntensityRange};

/// The dense per-block basis matrix, mapping a coefficient vector (indexed
/// `k·N + l`) to a pixel vector (indexed `i·N + j`).
#[derive(Clone, Debug)]
pub struct DctBasis {
    block_size: usize,
    /// `cos1d[k·N + i] = C(k)·cos((i+½)kπ/N)`
    cos1d: Vec<f64>,
    entries: Vec<f64>,
}

impl DctBasis {
    pub fn new(block_size: usize) -> Result<Self> {
        if block_size < 2 {
            return Err(Error::InvalidBlockSize(block_size));
        }
        let n = block_size;
        let nf = n as f64;
        let mut cos1d = vec![0.0; n * n];
        for k in 0..n {
            let scale = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
            for i in 0..n {
                cos1d[k * n + i] = scale * (((i as f64) + 0.5) * (k as f64) * PI / nf).cos();
            }
        }
        let area = n * n;
        let mut entries = vec![0.0; area * area];
        for i in 0..n {
            for j in 0..n {
                let row = i * n + j;
                for k in 0..n {
                    for l in 0..n {
                        entries[row * area + k * n + l] = cos1d[k * n + i] * cos1d[l * n + j];
                    }
                }
            }
        }
        // the DC column is exactly 1/N; the cosine product can be off by an ulp
        for row in 0..area {
            entries[row * area] = 1.0 / nf;
        }
        Ok(DctBasis {
            block_size,
            cos1d,
            entries,
        })
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    /// `N²`, the number of pixels (and coefficients) per block.
    pub fn area(&self) -> usize {
        self.block_size * self.block_size
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let n = self.block_size;
        self.entries[(i * n + j) * n * n + k * n + l]
    }

    /// Dense row-major `N²×N²` matrix.
    pub fn matrix(&self) -> &[f64] {
        &self.entries
    }

    /// Pixel pattern of the unit coefficient `(k, l)`, indexed `i·N + j`.
    pub fn column(&self, k: usize, l: usize) -> Vec<f64> {
        let area = self.area();
        let col = k * self.block_size + l;
        (0..area).map(|row| self.entries[row * area + col]).collect()
    }

    /// Coefficients of one block: `y = Aᵀ·x`, evaluated separably.
    pub fn forward_block(&self, pixels: &[f64], coeffs: &mut [f64]) {
        let n = self.block_size;
        let mut tmp = vec![0.0; n * n];
        // tmp(k, j) = Σ_i c(k,i) x(i,j)
        for k in 0..n {
            for i in 0..n {
                let c = self.cos1d[k * n + i];
                for j in 0..n {
                    tmp[k * n + j] += c * pixels[i * n + j];
                }
            }
        }
        for k in 0..n {
            for l in 0..n {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += tmp[k * n + j] * self.cos1d[l * n + j];
                }
                coeffs[k * n + l] = acc;
            }
        }
    }

    /// Pixels of one block: `x = A·y`, evaluated separably.
    pub fn inverse_block(&self, coeffs: &[f64], pixels: &mut [f64]) {
        let n = self.block_size;
        let mut tmp = vec![0.0; n * n];
        // tmp(i, l) = Σ_k c(k,i) y(k,l)
        for k in 0..n {
            for i in 0..n {
                let c = self.cos1d[k * n + i];
                for l in 0..n {
                    tmp[i * n + l] += c * coeffs[k * n + l];
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for l in 0..n {
                    acc += tmp[i * n + l] * self.cos1d[l * n + j];
                }
                pixels[i * n + j] = acc;
            }
        }
    }
}

pub fn build_basis(block_size: usize) -> Result<DctBasis> {
    DctBasis::new(block_size)
}

/// Per-block DCT coefficients of a whole image. Block `b` occupies
/// `coeffs[b·N² .. (b+1)·N²]`, indexed `k·N + l` inside the block.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffGrid {
    layout: BlockLayout,
    coeffs: Vec<f64>,
}

impl CoeffGrid {
    pub fn new(layout: BlockLayout, coeffs: Vec<f64>) -> Result<Self> {
        let expected = layout.block_count() * layout.block_area();
        if coeffs.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for a layout needing {expected}",
                coeffs.len()
            )));
        }
        Ok(CoeffGrid { layout, coeffs })
    }

    pub fn zeros(layout: BlockLayout) -> Self {
        CoeffGrid {
            coeffs: vec![0.0; layout.block_count() * layout.block_area()],
            layout,
        }
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn block(&self, b: usize) -> &[f64] {
        let a = self.layout.block_area();
        &self.coeffs[b * a..(b + 1) * a]
    }

    pub fn block_mut(&mut self, b: usize) -> &mut [f64] {
        let a = self.layout.block_area();
        &mut self.coeffs[b * a..(b + 1) * a]
    }

    #[inline]
    pub fn get(&self, b: usize, k: usize, l: usize) -> f64 {
        let n = self.layout.block_size;
        self.coeffs[b * n * n + k * n + l]
    }

    #[inline]
    pub fn set(&mut self, b: usize, k: usize, l: usize, v: f64) {
        let n = self.layout.block_size;
        self.coeffs[b * n * n + k * n + l] = v;
    }
}

fn check_basis(layout: &BlockLayout, basis: &DctBasis) -> Result<()> {
    if layout.block_size != basis.block_size() {
        return Err(Error::DimensionMismatch(format!(
            "layout block size {} vs basis block size {}",
            layout.block_size,
            basis.block_size()
        )));
    }
    Ok(())
}

/// Block DCT of a real-valued row-major pixel field.
pub fn forward_dct_field(field: &[f64], layout: &BlockLayout, basis: &DctBasis) -> Result<CoeffGrid> {
    check_basis(layout, basis)?;
    if field.len() != layout.pixel_count() {
        return Err(Error::DimensionMismatch(format!(
            "{} pixels for a {}x{} layout",
            field.len(),
            layout.width(),
            layout.height()
        )));
    }
    let n = layout.block_size;
    let width = layout.width();
    let mut grid = CoeffGrid::zeros(*layout);
    let mut block = vec![0.0; n * n];
    for b in 0..layout.block_count() {
        let (r0, c0) = layout.block_origin(b);
        for i in 0..n {
            let start = (r0 + i) * width + c0;
            block[i * n..(i + 1) * n].copy_from_slice(&field[start..start + n]);
        }
        basis.forward_block(&block, grid.block_mut(b));
    }
    Ok(grid)
}

pub fn forward_dct(img: &GrayImage, layout: &BlockLayout, basis: &DctBasis) -> Result<CoeffGrid> {
    if img.width() != layout.width() || img.height() != layout.height() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} image vs {}x{} layout",
            img.width(),
            img.height(),
            layout.width(),
            layout.height()
        )));
    }
    forward_dct_field(&img.to_f64(), layout, basis)
}

/// Unrounded row-major pixel field of a coefficient grid.
pub fn inverse_dct(grid: &CoeffGrid, basis: &DctBasis) -> Result<Vec<f64>> {
    let layout = grid.layout();
    check_basis(layout, basis)?;
    let n = layout.block_size;
    let width = layout.width();
    let mut field = vec![0.0; layout.pixel_count()];
    let mut block = vec![0.0; n * n];
    for b in 0..layout.block_count() {
        basis.inverse_block(grid.block(b), &mut block);
        let (r0, c0) = layout.block_origin(b);
        for i in 0..n {
            let start = (r0 + i) * width + c0;
            field[start..start + n].copy_from_slice(&block[i * n..(i + 1) * n]);
        }
    }
    Ok(field)
}

/// Range of `y(k,l)` over all blocks whose pixels lie in `range`.
///
/// The coefficient is a linear functional of the pixels, so its extremes are
/// attained by putting `x_max` where the basis entry is positive and `x_min`
/// where it is negative (and vice versa).
pub fn coefficient_bounds(basis: &DctBasis, k: usize, l: usize, range: IntensityRange) -> (f64, f64) {
    let n = basis.block_size();
    assert!(k < n && l < n, "frequency ({k},{l}) outside {n}x{n} block");
    let (lo_px, hi_px) = (range.min_f64(), range.max_f64());
    let mut lo = 0.0;
    let mut hi = 0.0;
    for i in 0..n {
        for j in 0..n {
            let a = basis.at(i, j, k, l);
            if a > 0.0 {
                hi += a * hi_px;
                lo += a * lo_px;
            } else {
                hi += a * lo_px;
                lo += a * hi_px;
            }
        }
    }
    (lo, hi)
}
