//! Scan baseline for DC-only erasure.
//!
//! Blocks are visited in row-major order. The first block gets the midpoint
//! of its feasible DC interval; every later block gets the DC minimizing the
//! absolute differences across its boundaries with the already-fixed left
//! and top neighbors, which is a median, clipped to its feasible interval.
//! This is a greedy local method, so it need not reach the global optimum
//! of the boundary variation.

use crate::dct::{inverse_dct, CoeffGrid, DctBasis};
use crate::error::{Error, Result};
use crate::image::{GrayImage, IntensityRange};
use crate::mask::EraseMask;

#[derive(Clone, Debug, PartialEq)]
pub struct ScanState {
    pub visited: Vec<bool>,
    pub dc_estimate: Vec<f64>,
    pub order: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct ScanResult {
    pub image: GrayImage,
    /// Unrounded pixel field.
    pub field: Vec<f64>,
    pub state: ScanState,
}

/// A minimizer of `Σ |d_i − t|` over `t`: the median (midpoint of the two
/// middle values for an even count). `None` for an empty slice.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}

pub fn scan_align_dc(
    known: &CoeffGrid,
    mask: &EraseMask,
    basis: &DctBasis,
    range: IntensityRange,
) -> Result<ScanResult> {
    if !mask.is_dc_only() {
        return Err(Error::NotDcOnlyMask);
    }
    let layout = *known.layout();
    let n = layout.block_size;
    if basis.block_size() != n || mask.block_size() != n {
        return Err(Error::DimensionMismatch(format!(
            "basis/mask block size vs layout block size {n}"
        )));
    }
    let width = layout.width();
    let mut zeroed = known.clone();
    for b in 0..layout.block_count() {
        zeroed.set(b, 0, 0, 0.0);
    }
    // pixels of each block without its DC; a DC of y adds y/N everywhere
    let mut field = inverse_dct(&zeroed, basis)?;
    let dc_gain = basis.at(0, 0, 0, 0);

    let blocks = layout.block_count();
    let mut state = ScanState {
        visited: vec![false; blocks],
        dc_estimate: vec![0.0; blocks],
        order: Vec::with_capacity(blocks),
    };
    let mut diffs = Vec::with_capacity(2 * n);
    for b in 0..blocks {
        let (r0, c0) = layout.block_origin(b);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            for j in 0..n {
                let v = field[(r0 + i) * width + c0 + j];
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        // offset t = DC/N must keep every pixel inside the range
        let t_lo = range.min_f64() - lo;
        let t_hi = (range.max_f64() - hi).max(t_lo);

        diffs.clear();
        if c0 > 0 {
            for i in 0..n {
                let row = (r0 + i) * width;
                diffs.push(field[row + c0 - 1] - field[row + c0]);
            }
        }
        if r0 > 0 {
            for j in 0..n {
                diffs.push(field[(r0 - 1) * width + c0 + j] - field[r0 * width + c0 + j]);
            }
        }
        let t = match median(&diffs) {
            Some(m) => m.clamp(t_lo, t_hi),
            None => 0.5 * (t_lo + t_hi),
        };
        for i in 0..n {
            for j in 0..n {
                field[(r0 + i) * width + c0 + j] += t;
            }
        }
        state.visited[b] = true;
        state.dc_estimate[b] = t / dc_gain;
        state.order.push(b);
    }
    let image = GrayImage::from_real_field(width, layout.height(), &field, range)?;
    Ok(ScanResult { image, field, state })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dct::forward_dct;
    use crate::image::BlockLayout;
    use crate::mask::most_significant_mask;
    use proptest::prelude::*;

    fn grid_of(img: &GrayImage) -> (CoeffGrid, DctBasis) {
        let basis = DctBasis::new(8).unwrap();
        let layout = BlockLayout::new(img.width(), img.height(), 8).unwrap();
        (forward_dct(img, &layout, &basis).unwrap(), basis)
    }

    #[test]
    fn constant_image_stays_constant() {
        let img = GrayImage::filled(24, 16, 37).unwrap();
        let (grid, basis) = grid_of(&img);
        let out = scan_align_dc(&grid, &EraseMask::dc_only(8).unwrap(), &basis, img.bounds()).unwrap();
        let first = out.image.pixels()[0];
        assert!(out.image.pixels().iter().all(|&p| p == first));
        assert!(out.state.visited.iter().all(|&v| v));
        assert_eq!(out.state.order, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn second_block_aligned_by_median() {
        // left block: vertical ramp; right block: same ramp plus a column pattern
        let img = GrayImage::from_fn(16, 8, |r, c| {
            let base = 100 + 3 * r as i32;
            let extra = if c >= 8 { [5, -5, 3, -3, 1, -1, 2, -2][c - 8] } else { 0 };
            (base + extra) as u8
        })
        .unwrap();
        let (grid, basis) = grid_of(&img);
        let out = scan_align_dc(&grid, &EraseMask::dc_only(8).unwrap(), &basis, img.bounds()).unwrap();
        let d: Vec<f64> = (0..8).map(|r| out.field[r * 16 + 7] - out.field[r * 16 + 8]).collect();
        assert!(median(&d).unwrap().abs() < 1e-9);
    }

    #[test]
    fn rejects_other_masks() {
        let img = GrayImage::filled(16, 16, 1).unwrap();
        let (grid, basis) = grid_of(&img);
        let mask = most_significant_mask(2, 8).unwrap();
        assert!(matches!(
            scan_align_dc(&grid, &mask, &basis, img.bounds()),
            Err(Error::NotDcOnlyMask)
        ));
    }

    proptest! {
        #[test]
        fn median_minimizes_absolute_deviation(values in prop::collection::vec(-50.0f64..50.0, 1..17)) {
            let cost = |t: f64| values.iter().map(|d| (d - t).abs()).sum::<f64>();
            let m = median(&values).unwrap();
            let best = (-5000..=5000).map(|s| cost(s as f64 * 0.01)).fold(f64::INFINITY, f64::min);
            prop_assert!(cost(m) <= best + 1e-9);
        }

        #[test]
        fn scan_field_respects_bounds(seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let img = GrayImage::from_fn(24, 24, |_, _| rng.gen()).unwrap();
            let (grid, basis) = grid_of(&img);
            let out = scan_align_dc(&grid, &EraseMask::dc_only(8).unwrap(), &basis, img.bounds()).unwrap();
            prop_assert!(out.field.iter().all(|&v| (-1e-9..=255.0 + 1e-9).contains(&v)));
        }
    }
}
