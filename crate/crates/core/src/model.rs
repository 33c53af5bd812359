//! The recovery linear program.
//!
//! Unknown coefficients `y` and pair bounds `h` are the variables; pixels are
//! `x = c + A_U·y` per block, where `c` is the inverse transform of the known
//! coefficients. The objective is `Σ h` with `h ≥ |x_a − x_b|` for each
//! neighboring pair. Pixels can either be explicit variables tied to `y` by
//! equality rows ([`Formulation::Full`]) or substituted out
//! ([`Formulation::Reduced`]), in which case their bounds become rows.

use serde::{Deserialize, Serialize};

use crate::dct::{coefficient_bounds, inverse_dct, CoeffGrid, DctBasis};
use crate::error::{Error, Result};
use crate::image::{BlockLayout, IntensityRange};
use crate::lp::{LpProblem, Sense, VarRole};
use crate::mask::EraseMask;

/// Two 4-adjacent pixels, `first` above or left of `second`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelPair {
    pub first: (usize, usize),
    pub second: (usize, usize),
    pub cross_block: bool,
}

/// Neighbor pairs in row-major order: all horizontal pairs, then all
/// vertical ones. With `dc_only` only pairs straddling a block boundary are
/// kept.
pub fn select_pairs(layout: &BlockLayout, dc_only: bool) -> Vec<PixelPair> {
    let (w, h, n) = (layout.width(), layout.height(), layout.block_size);
    let mut pairs = Vec::new();
    for r in 0..h {
        for c in 0..w.saturating_sub(1) {
            let cross = (c + 1) % n == 0;
            if cross || !dc_only {
                pairs.push(PixelPair {
                    first: (r, c),
                    second: (r, c + 1),
                    cross_block: cross,
                });
            }
        }
    }
    for r in 0..h.saturating_sub(1) {
        let cross = (r + 1) % n == 0;
        if !(cross || !dc_only) {
            continue;
        }
        for c in 0..w {
            pairs.push(PixelPair {
                first: (r, c),
                second: (r + 1, c),
                cross_block: cross,
            });
        }
    }
    pairs
}

/// Sum of `|x_first − x_second|` over `pairs` for a row-major field.
pub fn boundary_variation(field: &[f64], width: usize, pairs: &[PixelPair]) -> f64 {
    pairs
        .iter()
        .map(|p| (field[p.first.0 * width + p.first.1] - field[p.second.0 * width + p.second.1]).abs())
        .sum()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formulation {
    /// Pixel variables with one equality row each.
    Full,
    /// Pixels substituted out; pixel bounds become two inequality rows.
    #[default]
    Reduced,
}

/// A built problem together with what is needed to read its solution back.
#[derive(Clone, Debug)]
pub struct RecoveryModel {
    pub problem: LpProblem,
    pub pairs: Vec<PixelPair>,
    pub formulation: Formulation,
    pub dc_only: bool,
    layout: BlockLayout,
    /// missing positions, `k·N + l`
    unknown: Vec<usize>,
    /// per pixel, the contribution of the known coefficients
    known_field: Vec<f64>,
    /// `A` restricted to the unknown columns, `N² × U`, row-major
    basis_cols: Vec<f64>,
    /// first pixel / y / h variable indices
    x_start: Option<usize>,
    y_start: usize,
    h_start: usize,
}

impl RecoveryModel {
    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    pub fn unknowns_per_block(&self) -> usize {
        self.unknown.len()
    }

    /// Column of `y(k,l)` in block `b`, if `(k,l)` is unknown.
    pub fn y_var(&self, b: usize, k: usize, l: usize) -> Option<usize> {
        let n = self.layout.block_size;
        let pos = self.unknown.iter().position(|&u| u == k * n + l)?;
        Some(self.y_start + b * self.unknown.len() + pos)
    }

    pub fn h_var(&self, pair: usize) -> usize {
        self.h_start + pair
    }

    pub fn x_var(&self, row: usize, col: usize) -> Option<usize> {
        self.x_start.map(|s| s + row * self.layout.width() + col)
    }

    /// Real-valued pixel field implied by a solution vector.
    pub fn pixel_field(&self, values: &[f64]) -> Vec<f64> {
        if let Some(s) = self.x_start {
            return values[s..s + self.layout.pixel_count()].to_vec();
        }
        let u = self.unknown.len();
        let area = self.layout.block_area();
        let mut field = self.known_field.clone();
        for b in 0..self.layout.block_count() {
            let y = &values[self.y_start + b * u..self.y_start + (b + 1) * u];
            for p in 0..area {
                let (i, j) = (p / self.layout.block_size, p % self.layout.block_size);
                let row = &self.basis_cols[p * u..(p + 1) * u];
                field[self.layout.pixel_index(b, i, j)] += dot(row, y);
            }
        }
        field
    }

    /// `known` completed with the solved unknowns.
    pub fn completed_grid(&self, known: &CoeffGrid, values: &[f64]) -> CoeffGrid {
        let mut grid = known.clone();
        let n = self.layout.block_size;
        let u = self.unknown.len();
        for b in 0..self.layout.block_count() {
            for (t, &pos) in self.unknown.iter().enumerate() {
                grid.set(b, pos / n, pos % n, values[self.y_start + b * u + t]);
            }
        }
        grid
    }

    /// Solution vector corresponding to a fully known coefficient grid.
    pub fn assignment_from(&self, truth: &CoeffGrid, basis: &DctBasis) -> Result<Vec<f64>> {
        let n = self.layout.block_size;
        let u = self.unknown.len();
        let field = inverse_dct(truth, basis)?;
        let mut values = vec![0.0; self.problem.num_vars()];
        if let Some(s) = self.x_start {
            values[s..s + field.len()].copy_from_slice(&field);
        }
        for b in 0..self.layout.block_count() {
            for (t, &pos) in self.unknown.iter().enumerate() {
                values[self.y_start + b * u + t] = truth.get(b, pos / n, pos % n);
            }
        }
        let w = self.layout.width();
        for (p, pair) in self.pairs.iter().enumerate() {
            values[self.h_start + p] =
                (field[pair.first.0 * w + pair.first.1] - field[pair.second.0 * w + pair.second.1]).abs();
        }
        Ok(values)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Build the recovery LP from the known coefficients of `known` (entries at
/// masked positions are ignored).
pub fn build_problem(
    known: &CoeffGrid,
    mask: &EraseMask,
    basis: &DctBasis,
    range: IntensityRange,
    formulation: Formulation,
) -> Result<RecoveryModel> {
    let layout = *known.layout();
    let n = layout.block_size;
    if mask.block_size() != n || basis.block_size() != n {
        return Err(Error::DimensionMismatch(format!(
            "mask block size {} / basis block size {} vs layout block size {n}",
            mask.block_size(),
            basis.block_size()
        )));
    }
    if mask.is_empty() {
        return Err(Error::InvalidMask("no missing coefficients".into()));
    }
    let area = n * n;
    let unknown: Vec<usize> = mask.positions().iter().map(|&(k, l)| k * n + l).collect();
    let u = unknown.len();

    let mut zeroed = known.clone();
    for b in 0..layout.block_count() {
        let block = zeroed.block_mut(b);
        for &pos in &unknown {
            block[pos] = 0.0;
        }
    }
    let known_field = inverse_dct(&zeroed, basis)?;
    let mut basis_cols = vec![0.0; area * u];
    for p in 0..area {
        for (t, &pos) in unknown.iter().enumerate() {
            basis_cols[p * u + t] = basis.at(p / n, p % n, pos / n, pos % n);
        }
    }

    let dc_only = mask.is_dc_only();
    let pairs = select_pairs(&layout, dc_only);
    let (px_lo, px_hi) = (range.min_f64(), range.max_f64());
    let width = layout.width();
    let mut lp = LpProblem::new();

    let x_start = match formulation {
        Formulation::Full => {
            let start = lp.num_vars();
            for row in 0..layout.height() {
                for col in 0..width {
                    lp.add_var(px_lo, px_hi, 0.0, VarRole::Pixel { row, col });
                }
            }
            Some(start)
        }
        Formulation::Reduced => None,
    };
    let y_bounds: Vec<(f64, f64)> = unknown
        .iter()
        .map(|&pos| coefficient_bounds(basis, pos / n, pos % n, range))
        .collect();
    let y_start = lp.num_vars();
    for block in 0..layout.block_count() {
        for (t, &pos) in unknown.iter().enumerate() {
            let (lo, hi) = y_bounds[t];
            lp.add_var(lo, hi, 0.0, VarRole::Coeff { block, k: pos / n, l: pos % n });
        }
    }
    let h_start = lp.num_vars();
    for pair in 0..pairs.len() {
        lp.add_var(0.0, range.span(), 1.0, VarRole::PairSlack { pair });
    }

    // pixel (row, col) as a linear expression: constant + Σ coef·var
    let expr = |row: usize, col: usize, out: &mut Vec<(usize, f64)>| -> f64 {
        if let Some(s) = x_start {
            out.push((s + row * width + col, 1.0));
            return 0.0;
        }
        let b = layout.block_of(row, col);
        let p = (row % n) * n + col % n;
        for t in 0..u {
            out.push((y_start + b * u + t, basis_cols[p * u + t]));
        }
        known_field[row * width + col]
    };

    match formulation {
        Formulation::Full => {
            let mut terms = Vec::with_capacity(u + 1);
            for row in 0..layout.height() {
                for col in 0..width {
                    let b = layout.block_of(row, col);
                    let p = (row % n) * n + col % n;
                    terms.clear();
                    terms.push((x_start.unwrap() + row * width + col, 1.0));
                    for t in 0..u {
                        terms.push((y_start + b * u + t, -basis_cols[p * u + t]));
                    }
                    lp.add_row(&terms, Sense::Eq, known_field[row * width + col]);
                }
            }
        }
        Formulation::Reduced => {
            let mut terms = Vec::with_capacity(u);
            for row in 0..layout.height() {
                for col in 0..width {
                    terms.clear();
                    let c = expr(row, col, &mut terms);
                    lp.add_row(&terms, Sense::Ge, px_lo - c);
                    lp.add_row(&terms, Sense::Le, px_hi - c);
                }
            }
        }
    }

    let mut a_terms = Vec::with_capacity(u);
    let mut b_terms = Vec::with_capacity(u);
    let mut diff: Vec<(usize, f64)> = Vec::with_capacity(2 * u + 1);
    for (p, pair) in pairs.iter().enumerate() {
        a_terms.clear();
        b_terms.clear();
        let ca = expr(pair.first.0, pair.first.1, &mut a_terms);
        let cb = expr(pair.second.0, pair.second.1, &mut b_terms);
        // x_a − x_b as Σ coef·var + (ca − cb)
        diff.clear();
        diff.extend_from_slice(&a_terms);
        for &(j, v) in &b_terms {
            match diff.iter_mut().find(|(k, _)| *k == j) {
                Some(entry) => entry.1 -= v,
                None => diff.push((j, -v)),
            }
        }
        diff.retain(|&(_, v)| v != 0.0);
        let h = h_start + p;
        let mut row: Vec<(usize, f64)> = diff.clone();
        row.push((h, -1.0));
        lp.add_row(&row, Sense::Le, cb - ca);
        for entry in &mut row[..diff.len()] {
            entry.1 = -entry.1;
        }
        lp.add_row(&row, Sense::Le, ca - cb);
    }

    Ok(RecoveryModel {
        problem: lp,
        pairs,
        formulation,
        dc_only,
        layout,
        unknown,
        known_field,
        basis_cols,
        x_start,
        y_start,
        h_start,
    })
}
