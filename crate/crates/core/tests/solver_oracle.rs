//! The interior-point solution of the recovery problem against an exact
//! simplex reference built from scratch.

mod common;

use dct_recover::dct::{forward_dct, DctBasis};
use dct_recover::image::{make_layout, GrayImage};
use dct_recover::lp::{solve, verify_solution, SolveStatus, SolverSettings};
use dct_recover::mask::{most_significant_mask, EraseMask};
use dct_recover::model::{build_problem, Formulation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn noise(seed: u64, side: usize) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GrayImage::from_fn(side, side, |_, _| rng.gen()).unwrap()
}

fn smooth(seed: u64, side: usize) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a, b, c): (f64, f64, f64) = (rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0), rng.gen_range(60.0..190.0));
    GrayImage::from_fn(side, side, |r, col| {
        let v = c + a * r as f64 + b * col as f64 + rng.gen_range(-6.0..6.0);
        v.clamp(0.0, 255.0).round() as u8
    })
    .unwrap()
}

fn check(img: &GrayImage, mask: &EraseMask, formulation: Formulation) {
    let basis = DctBasis::new(8).unwrap();
    let layout = make_layout(img, 8).unwrap();
    let grid = forward_dct(img, &layout, &basis).unwrap();
    let model = build_problem(&grid, mask, &basis, img.bounds(), formulation).unwrap();
    let sol = solve(&model.problem, &SolverSettings::default());
    assert_eq!(sol.status, SolveStatus::Optimal, "{}", sol.stats.detail);
    assert!(verify_solution(&model.problem, &sol, 1e-6).passed());

    let reference = common::reference_optimum(img, 8, mask.positions(), mask.is_dc_only());
    assert!(reference.bound_violation < 1e-7, "{reference:?}");
    let scale = reference.primal.abs().max(1.0);
    assert!((reference.primal - reference.dual).abs() / scale < 1e-9, "{reference:?}");
    let rel = (sol.objective - reference.primal).abs() / scale;
    assert!(rel < 1e-5, "solver {} vs reference {} ({rel:e})", sol.objective, reference.primal);
}

#[test]
fn dc_only_matches_reference() {
    let mask = EraseMask::dc_only(8).unwrap();
    for seed in 0..4 {
        check(&noise(seed, 16), &mask, Formulation::Reduced);
        check(&smooth(seed, 24), &mask, Formulation::Full);
    }
}

#[test]
fn several_unknowns_match_reference() {
    for u in [2, 3, 6] {
        let mask = most_significant_mask(u, 8).unwrap();
        check(&noise(100 + u as u64, 16), &mask, Formulation::Reduced);
        check(&smooth(200 + u as u64, 24), &mask, Formulation::Reduced);
        check(&smooth(300 + u as u64, 16), &mask, Formulation::Full);
    }
}

#[test]
fn ac_only_mask_matches_reference() {
    let mask = EraseMask::parse_list(8, "0:1,2:3,7:7").unwrap();
    check(&smooth(9, 24), &mask, Formulation::Reduced);
}

#[test]
fn reference_recovers_a_known_optimum() {
    // a constant image loses nothing: the optimum is zero variation
    let img = GrayImage::filled(16, 16, 90).unwrap();
    let mask = most_significant_mask(3, 8).unwrap();
    let r = common::reference_optimum(&img, 8, mask.positions(), false);
    assert!(r.primal.abs() < 1e-9 && r.dual.abs() < 1e-9, "{r:?}");
}

#[test]
fn reference_pairs_count() {
    for (w, h) in [(16, 16), (24, 8), (40, 32)] {
        assert_eq!(common::neighbor_pairs(w, h, 8, false).len(), 2 * w * h - w - h);
        let boundary = (w / 8 - 1) * h + (h / 8 - 1) * w;
        assert_eq!(common::neighbor_pairs(w, h, 8, true).len(), boundary);
    }
}
