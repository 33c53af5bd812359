//! End-to-end recovery: build the LP from the known coefficients, solve,
//! shift the global intensity when the DC is unknown, round and clamp.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dct::{inverse_dct, CoeffGrid, DctBasis};
use crate::error::{Error, Result};
use crate::image::{GrayImage, IntensityRange};
use crate::lp::{solve, SolveStats, SolveStatus, SolverSettings};
use crate::mask::{apply_mask, EraseMask, FillPolicy};
use crate::metrics::QualityScore;
use crate::model::{build_problem, Formulation};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecoveryOptions {
    pub formulation: Formulation,
    pub solver: SolverSettings,
}

#[derive(Clone, Debug)]
pub struct RecoveryReport {
    pub recovered: GrayImage,
    /// Shifted pixel field before rounding.
    pub field: Vec<f64>,
    /// Pixel field as returned by the solver.
    pub lp_field: Vec<f64>,
    pub objective: f64,
    pub shift_applied: i32,
    pub status: SolveStatus,
    pub solver_stats: SolveStats,
    pub mask: EraseMask,
    pub formulation: Formulation,
    pub num_vars: usize,
    pub num_rows: usize,
}

/// Uniform integer shift equalizing the distances of the field's extremes
/// to the ends of `range`.
pub fn histogram_shift(field: &[f64], range: IntensityRange) -> (Vec<f64>, i32) {
    if field.is_empty() {
        return (Vec::new(), 0);
    }
    let (lo, hi) = field
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let delta = (((range.max_f64() - hi) - (lo - range.min_f64())) / 2.0).round();
    let shifted = field.iter().map(|v| v + delta).collect();
    (shifted, delta as i32)
}

/// The damaged image: missing coefficients set to the midpoints of their
/// ranges, inverse transformed, rounded and clamped.
pub fn midpoint_reference(
    known: &CoeffGrid,
    mask: &EraseMask,
    basis: &DctBasis,
    range: IntensityRange,
) -> Result<GrayImage> {
    let filled = apply_mask(known, mask, FillPolicy::Midpoint, basis, range)?;
    let field = inverse_dct(&filled, basis)?;
    let layout = known.layout();
    GrayImage::from_real_field(layout.width(), layout.height(), &field, range)
}

/// Recover the coefficients at `mask` from the others. Masked entries of
/// `known` are never read.
pub fn recover(
    known: &CoeffGrid,
    mask: &EraseMask,
    basis: &DctBasis,
    range: IntensityRange,
    options: &RecoveryOptions,
) -> Result<RecoveryReport> {
    let model = build_problem(known, mask, basis, range, options.formulation)?;
    let solution = solve(&model.problem, &options.solver);
    if solution.status != SolveStatus::Optimal {
        return Err(Error::RecoveryFailed {
            status: solution.status,
            iterations: solution.stats.iterations,
            detail: solution.stats.detail.clone(),
        });
    }
    let lp_field = model.pixel_field(&solution.values);
    let (field, shift) = if mask.contains_dc() {
        histogram_shift(&lp_field, range)
    } else {
        (lp_field.clone(), 0)
    };
    let layout = known.layout();
    let recovered = GrayImage::from_real_field(layout.width(), layout.height(), &field, range)?;
    Ok(RecoveryReport {
        recovered,
        field,
        lp_field,
        objective: solution.objective,
        shift_applied: shift,
        status: solution.status,
        solver_stats: solution.stats,
        mask: mask.clone(),
        formulation: options.formulation,
        num_vars: model.problem.num_vars(),
        num_rows: model.problem.num_rows(),
    })
}

/// Flat, serializable view of a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub width: usize,
    pub height: usize,
    pub block_size: usize,
    pub mask: String,
    pub unknowns_per_block: usize,
    pub formulation: Formulation,
    pub status: SolveStatus,
    pub objective: f64,
    pub shift_applied: i32,
    pub num_vars: usize,
    pub num_rows: usize,
    pub iterations: usize,
    pub wall_time_secs: f64,
    pub constraint_nnz: usize,
    pub kkt_nnz: usize,
    pub factor_nnz: usize,
    pub memory_bytes: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub quality: Option<QualityScore>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reference_quality: Option<QualityScore>,
}

impl RecoveryReport {
    pub fn summary(&self) -> ReportSummary {
        ReportSummary {
            width: self.recovered.width(),
            height: self.recovered.height(),
            block_size: self.mask.block_size(),
            mask: self.mask.to_string(),
            unknowns_per_block: self.mask.len(),
            formulation: self.formulation,
            status: self.status,
            objective: self.objective,
            shift_applied: self.shift_applied,
            num_vars: self.num_vars,
            num_rows: self.num_rows,
            iterations: self.solver_stats.iterations,
            wall_time_secs: self.solver_stats.wall_time_secs,
            constraint_nnz: self.solver_stats.constraint_nnz,
            kkt_nnz: self.solver_stats.kkt_nnz,
            factor_nnz: self.solver_stats.factor_nnz,
            memory_bytes: self.solver_stats.memory_bytes,
            quality: None,
            reference_quality: None,
        }
    }
}

fn push_quality(out: &mut String, prefix: &str, q: &QualityScore) {
    let _ = writeln!(out, "{prefix}psnr: {:.4}", q.psnr);
    let _ = writeln!(out, "{prefix}ssim: {:.6}", q.ssim);
    let _ = writeln!(out, "{prefix}mae: {:.4}", q.mae);
    let _ = writeln!(out, "{prefix}shifted_psnr: {:.4}", q.shifted_psnr);
}

impl ReportSummary {
    /// One `key: value` pair per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "width: {}", self.width);
        let _ = writeln!(out, "height: {}", self.height);
        let _ = writeln!(out, "block_size: {}", self.block_size);
        let _ = writeln!(out, "mask: {}", self.mask);
        let _ = writeln!(out, "unknowns_per_block: {}", self.unknowns_per_block);
        let _ = writeln!(out, "formulation: {:?}", self.formulation);
        let _ = writeln!(out, "status: {}", self.status);
        let _ = writeln!(out, "objective: {:.6}", self.objective);
        let _ = writeln!(out, "shift_applied: {}", self.shift_applied);
        let _ = writeln!(out, "num_vars: {}", self.num_vars);
        let _ = writeln!(out, "num_rows: {}", self.num_rows);
        let _ = writeln!(out, "iterations: {}", self.iterations);
        let _ = writeln!(out, "wall_time_secs: {:.6}", self.wall_time_secs);
        let _ = writeln!(out, "constraint_nnz: {}", self.constraint_nnz);
        let _ = writeln!(out, "kkt_nnz: {}", self.kkt_nnz);
        let _ = writeln!(out, "factor_nnz: {}", self.factor_nnz);
        let _ = writeln!(out, "memory_bytes: {}", self.memory_bytes);
        if let Some(q) = &self.quality {
            push_quality(&mut out, "", q);
        }
        if let Some(q) = &self.reference_quality {
            push_quality(&mut out, "midpoint_", q);
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dct::forward_dct;
    use crate::image::BlockLayout;
    use crate::mask::most_significant_mask;
    use crate::metrics::psnr;
    use proptest::prelude::*;

    fn setup(img: &GrayImage) -> (CoeffGrid, DctBasis) {
        let basis = DctBasis::new(8).unwrap();
        let layout = BlockLayout::new(img.width(), img.height(), 8).unwrap();
        (forward_dct(img, &layout, &basis).unwrap(), basis)
    }

    #[test]
    fn shift_examples() {
        let r = IntensityRange::eight_bit();
        let (f, d) = histogram_shift(&[10.0, 100.0, 205.0], r);
        assert_eq!(d, 20);
        assert_eq!(f, vec![30.0, 120.0, 225.0]);
        assert_eq!(histogram_shift(&[0.0, 255.0], r).1, 0);
        let (f, d) = histogram_shift(&[40.0; 5], r);
        assert_eq!(d, 88);
        assert_eq!(f[0], 128.0);
    }

    #[test]
    fn midpoint_reference_examples() {
        let flat = GrayImage::filled(16, 16, 128).unwrap();
        let (grid, basis) = setup(&flat);
        let dc = EraseMask::dc_only(8).unwrap();
        let damaged = midpoint_reference(&grid, &dc, &basis, flat.bounds()).unwrap();
        assert!(damaged.pixels().iter().all(|&p| p == 128));
        let bright = GrayImage::filled(16, 16, 200).unwrap();
        let (grid, basis) = setup(&bright);
        let damaged = midpoint_reference(&grid, &dc, &basis, bright.bounds()).unwrap();
        assert!(damaged.pixels().iter().all(|&p| p == 128));
    }

    #[test]
    fn constant_image_is_recovered_exactly() {
        let img = GrayImage::filled(24, 16, 90).unwrap();
        let (grid, basis) = setup(&img);
        let report = recover(&grid, &EraseMask::dc_only(8).unwrap(), &basis, img.bounds(), &Default::default()).unwrap();
        assert!(report.objective.abs() < 1e-6);
        // constant result, centred by the shift
        let first = report.recovered.pixels()[0];
        assert!(report.recovered.pixels().iter().all(|&p| p == first));
        assert_eq!(first, 128);
        let (shifted, _) = crate::metrics::shift_compensated_psnr(&img, &report.recovered).unwrap();
        assert_eq!(shifted, f64::INFINITY);
    }

    #[test]
    fn two_constant_blocks_collapse_to_one_level() {
        let img = GrayImage::from_fn(16, 8, |_, c| if c < 8 { 100 } else { 104 }).unwrap();
        let (grid, basis) = setup(&img);
        let report = recover(&grid, &EraseMask::dc_only(8).unwrap(), &basis, img.bounds(), &Default::default()).unwrap();
        assert!(report.objective.abs() < 1e-6);
        let first = report.recovered.pixels()[0];
        assert!(report.recovered.pixels().iter().all(|&p| p == first));
    }

    #[test]
    fn dc_only_differs_from_lp_field_by_constant() {
        let img = GrayImage::from_fn(24, 24, |r, c| ((r * 11 + c * 5) % 97 + 60) as u8).unwrap();
        let (grid, basis) = setup(&img);
        let report = recover(&grid, &EraseMask::dc_only(8).unwrap(), &basis, img.bounds(), &Default::default()).unwrap();
        for (a, b) in report.field.iter().zip(&report.lp_field) {
            assert_eq!(a - b, report.shift_applied as f64);
        }
        let again = histogram_shift(&report.field, img.bounds());
        assert!(again.1.abs() <= 1);
    }

    #[test]
    fn dc_known_mask_gets_no_shift() {
        let img = GrayImage::from_fn(16, 16, |r, c| ((r * 3 + c * 7) % 50 + 20) as u8).unwrap();
        let (grid, basis) = setup(&img);
        let mask = EraseMask::new(8, [(0, 1), (1, 0)]).unwrap();
        let report = recover(&grid, &mask, &basis, img.bounds(), &Default::default()).unwrap();
        assert_eq!(report.shift_applied, 0);
        assert_eq!(report.field, report.lp_field);
    }

    #[test]
    fn report_text_and_json() {
        let img = GrayImage::from_fn(16, 16, |r, c| ((r * 3 + c * 7) % 50 + 20) as u8).unwrap();
        let (grid, basis) = setup(&img);
        let report = recover(&grid, &most_significant_mask(2, 8).unwrap(), &basis, img.bounds(), &Default::default()).unwrap();
        let mut summary = report.summary();
        summary.quality = Some(crate::metrics::score(&img, &report.recovered).unwrap());
        let text = summary.to_text();
        assert!(text.contains("status: optimal\n"));
        assert!(text.contains("unknowns_per_block: 2\n"));
        assert!(text.lines().all(|l| l.contains(": ")));
        let back: ReportSummary = serde_json::from_str(&summary.to_json()).unwrap();
        assert_eq!(back.num_vars, summary.num_vars);
        assert_eq!(back.mask, "0:0,0:1");
    }

    #[test]
    fn solver_failure_is_reported() {
        let img = GrayImage::from_fn(16, 16, |r, c| ((r * 3 + c * 7) % 50 + 20) as u8).unwrap();
        let (grid, basis) = setup(&img);
        let options = RecoveryOptions {
            solver: SolverSettings {
                max_iterations: 1,
                ..Default::default()
            },
            ..Default::default()
        };
        let err = recover(&grid, &most_significant_mask(3, 8).unwrap(), &basis, img.bounds(), &options).unwrap_err();
        assert!(matches!(err, Error::RecoveryFailed { status: SolveStatus::IterationLimit, .. }));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn recovered_pixels_in_range_and_masked_values_unread(seed in any::<u64>(), u in 1usize..4) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let img = GrayImage::from_fn(16, 16, |_, _| rng.gen()).unwrap();
            let (grid, basis) = setup(&img);
            let mask = most_significant_mask(u, 8).unwrap();
            let mut poked = grid.clone();
            for b in 0..4 {
                for &(k, l) in mask.positions() {
                    poked.set(b, k, l, rng.gen_range(-3000.0..3000.0));
                }
            }
            let a = recover(&grid, &mask, &basis, img.bounds(), &Default::default()).unwrap();
            let b = recover(&poked, &mask, &basis, img.bounds(), &Default::default()).unwrap();
            prop_assert_eq!(&a.recovered, &b.recovered);
            prop_assert_eq!(a.objective.to_bits(), b.objective.to_bits());
            let p = psnr(&img, &a.recovered).unwrap();
            prop_assert!(p > 0.0);
        }
    }
}
