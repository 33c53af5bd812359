//! Shared helpers for integration tests, including an exact reference
//! solver for the recovery problem that shares no code with the library.
#![allow(dead_code)]

use std::path::PathBuf;

use dct_recover::image::{load_image, GrayImage};

pub fn data_dir() -> PathBuf {
    // shared by the core and cli test targets
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data")
}

/// Every bundled image, sorted by file name.
pub fn bundled() -> Vec<(String, GrayImage)> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(data_dir())
        .expect("test data directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "pgm"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            (name, load_image(&p).expect("bundled image"))
        })
        .collect()
}

pub fn bundled_with_side(side: usize) -> Vec<(String, GrayImage)> {
    bundled().into_iter().filter(|(_, img)| img.width() == side && img.height() == side).collect()
}

/// Orthonormal DCT-II basis value `A(i,j,k,l)` for an `n×n` block.
pub fn basis_value(n: usize, i: usize, j: usize, k: usize, l: usize) -> f64 {
    let c = |f: usize| if f == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
    let ang = |p: usize, f: usize| (std::f64::consts::PI * (2 * p + 1) as f64 * f as f64 / (2 * n) as f64).cos();
    c(k) * c(l) * ang(i, k) * ang(j, l)
}

/// 4-adjacent pairs as flat pixel indices. With `boundary_only` only pairs
/// whose pixels sit in different blocks.
pub fn neighbor_pairs(width: usize, height: usize, n: usize, boundary_only: bool) -> Vec<(usize, usize)> {
    let block = |r: usize, c: usize| (r / n, c / n);
    let mut out = Vec::new();
    for r in 0..height {
        for c in 0..width {
            let here = r * width + c;
            if c + 1 < width && (!boundary_only || block(r, c) != block(r, c + 1)) {
                out.push((here, here + 1));
            }
            if r + 1 < height && (!boundary_only || block(r, c) != block(r + 1, c)) {
                out.push((here, here + width));
            }
        }
    }
    out
}

/// Result of [`reference_optimum`].
#[derive(Debug, Clone)]
pub struct Reference {
    /// Objective of the recovered primal point.
    pub primal: f64,
    /// Objective of the final dual point, a lower bound on the optimum.
    pub dual: f64,
    /// Worst pixel-bound violation of the primal point.
    pub bound_violation: f64,
    pub pivots: usize,
}

/// Optimum of
///
/// ```text
/// minimize  Σ_(a,b) |x_a − x_b|   over the missing coefficients y
/// where     x = (known part) + Σ_missing A·y  blockwise,  lo ≤ x ≤ hi
/// ```
///
/// computed exactly by a bounded-variable simplex on the dual problem
///
/// ```text
/// maximize  Σ_p d_p u_p + Σ_i (lo − c_i) α_i − Σ_i (hi − c_i) β_i
/// s.t.      Σ_p u_p a_p − Σ_i α_i g_i + Σ_i β_i g_i = 0
///           −1 ≤ u ≤ 1,  α, β ≥ 0
/// ```
///
/// which has one row per missing coefficient. `x = c + G·y`, and pair `p`
/// contributes `|a_pᵀy + d_p|`. The simplex multipliers give `y = −π`.
pub fn reference_optimum(
    image: &GrayImage,
    n: usize,
    missing: &[(usize, usize)],
    boundary_only: bool,
) -> Reference {
    let (w, h) = (image.width(), image.height());
    let (bx, by) = (w / n, h / n);
    let u = missing.len();
    let m = u * bx * by;
    let lo = image.bounds().min as f64;
    let hi = image.bounds().max as f64;

    // per pixel: known part c_i and the sparse row g_i (block-local)
    let mut known = vec![0.0; w * h];
    let mut g: Vec<Vec<(usize, f64)>> = vec![Vec::new(); w * h];
    for brow in 0..by {
        for bcol in 0..bx {
            let block = brow * bx + bcol;
            let px = |i: usize, j: usize| (brow * n + i) * w + bcol * n + j;
            let mut truth = vec![0.0; u];
            for (t, &(k, l)) in missing.iter().enumerate() {
                for i in 0..n {
                    for j in 0..n {
                        truth[t] += basis_value(n, i, j, k, l) * image.get(brow * n + i, bcol * n + j) as f64;
                    }
                }
            }
            for i in 0..n {
                for j in 0..n {
                    let p = px(i, j);
                    let mut rest = image.pixels()[p] as f64;
                    for (t, &(k, l)) in missing.iter().enumerate() {
                        let a = basis_value(n, i, j, k, l);
                        rest -= a * truth[t];
                        g[p].push((block * u + t, a));
                    }
                    known[p] = rest;
                }
            }
        }
    }

    let pairs = neighbor_pairs(w, h, n, boundary_only);
    let mut cols: Vec<Column> = Vec::new();
    for &(a, b) in &pairs {
        let mut entries = g[a].clone();
        for &(r, v) in &g[b] {
            match entries.iter_mut().find(|e| e.0 == r) {
                Some(e) => e.1 -= v,
                None => entries.push((r, -v)),
            }
        }
        let d = known[a] - known[b];
        let neg: Vec<(usize, f64)> = entries.iter().map(|&(r, v)| (r, -v)).collect();
        cols.push(Column { entries, cost: d, upper: 1.0 });
        cols.push(Column { entries: neg, cost: -d, upper: 1.0 });
    }
    let alpha_start = cols.len();
    for p in 0..w * h {
        let neg: Vec<(usize, f64)> = g[p].iter().map(|&(r, v)| (r, -v)).collect();
        cols.push(Column { entries: neg, cost: lo - known[p], upper: f64::INFINITY });
    }
    for p in 0..w * h {
        cols.push(Column { entries: g[p].clone(), cost: -(hi - known[p]), upper: f64::INFINITY });
    }

    let basis = initial_basis(&cols[alpha_start..alpha_start + w * h], m)
        .into_iter()
        .map(|j| j + alpha_start)
        .collect();
    let (pi, dual, pivots) = Simplex::new(cols, m, basis).run();

    let y: Vec<f64> = pi.iter().map(|v| -v).collect();
    let field: Vec<f64> = (0..w * h)
        .map(|p| known[p] + g[p].iter().map(|&(r, v)| v * y[r]).sum::<f64>())
        .collect();
    let primal = pairs.iter().map(|&(a, b)| (field[a] - field[b]).abs()).sum();
    let bound_violation = field
        .iter()
        .map(|&x| (lo - x).max(x - hi).max(0.0))
        .fold(0.0, f64::max);
    Reference { primal, dual, bound_violation, pivots }
}

#[derive(Clone, Debug)]
struct Column {
    entries: Vec<(usize, f64)>,
    cost: f64,
    upper: f64,
}

/// Greedy choice of `m` independent columns by elimination.
fn initial_basis(cols: &[Column], m: usize) -> Vec<usize> {
    let mut reduced: Vec<Vec<f64>> = Vec::new();
    let mut pivot_rows: Vec<usize> = Vec::new();
    let mut chosen = Vec::new();
    for (j, col) in cols.iter().enumerate() {
        let mut v = vec![0.0; m];
        for &(r, a) in &col.entries {
            v[r] += a;
        }
        for (basis_vec, &pr) in reduced.iter().zip(&pivot_rows) {
            let f = v[pr] / basis_vec[pr];
            if f != 0.0 {
                for r in 0..m {
                    v[r] -= f * basis_vec[r];
                }
            }
        }
        let (pr, mag) = v
            .iter()
            .enumerate()
            .fold((0, 0.0), |best, (r, &x)| if x.abs() > best.1 { (r, x.abs()) } else { best });
        if mag > 1e-6 {
            reduced.push(v);
            pivot_rows.push(pr);
            chosen.push(j);
            if chosen.len() == m {
                return chosen;
            }
        }
    }
    panic!("only {} independent columns for {m} rows", chosen.len());
}

struct Simplex {
    cols: Vec<Column>,
    m: usize,
    basis: Vec<usize>,
    /// nonbasic variables sitting at their upper bound
    at_upper: Vec<bool>,
}

const TOL: f64 = 1e-9;

impl Simplex {
    fn new(cols: Vec<Column>, m: usize, basis: Vec<usize>) -> Self {
        let at_upper = vec![false; cols.len()];
        Simplex { cols, m, basis, at_upper }
    }

    fn dense(&self, j: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.m];
        for &(r, a) in &self.cols[j].entries {
            v[r] += a;
        }
        v
    }

    /// Returns the multipliers, the objective, and the pivot count.
    fn run(mut self) -> (Vec<f64>, f64, usize) {
        let m = self.m;
        let mut pivots = 0;
        let mut degenerate_streak = 0;
        loop {
            let bmat: Vec<Vec<f64>> = self.basis.iter().map(|&j| self.dense(j)).collect();
            let lu = Lu::new(&bmat, m);
            // basic values: B x_B = −Σ_{upper} a_j u_j
            let mut rhs = vec![0.0; m];
            for (j, col) in self.cols.iter().enumerate() {
                if self.at_upper[j] {
                    for &(r, a) in &col.entries {
                        rhs[r] -= a * col.upper;
                    }
                }
            }
            let xb = lu.solve(&rhs);
            let cb: Vec<f64> = self.basis.iter().map(|&j| self.cols[j].cost).collect();
            let pi = lu.solve_transposed(&cb);

            let in_basis = {
                let mut f = vec![false; self.cols.len()];
                for &j in &self.basis {
                    f[j] = true;
                }
                f
            };
            let bland = degenerate_streak > 50;
            let mut entering: Option<(usize, f64)> = None;
            for (j, col) in self.cols.iter().enumerate() {
                if in_basis[j] {
                    continue;
                }
                let d = col.cost - col.entries.iter().map(|&(r, a)| pi[r] * a).sum::<f64>();
                let gain = if self.at_upper[j] { -d } else { d };
                if gain > TOL {
                    if bland {
                        entering = Some((j, d));
                        break;
                    }
                    if entering.map_or(true, |(_, best)| gain > best.abs()) {
                        entering = Some((j, d));
                    }
                }
            }
            let Some((q, _)) = entering else {
                let value: f64 = self
                    .basis
                    .iter()
                    .zip(&xb)
                    .map(|(&j, &x)| self.cols[j].cost * x)
                    .sum::<f64>()
                    + self
                        .cols
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| self.at_upper[*j])
                        .map(|(_, c)| c.cost * c.upper)
                        .sum::<f64>();
                return (pi, value, pivots);
            };

            // moving x_q by t·dir changes x_B by −t·dir·B⁻¹a_q
            let dir = if self.at_upper[q] { -1.0 } else { 1.0 };
            let alpha = lu.solve(&self.dense(q));
            let mut step = self.cols[q].upper;
            let mut leave: Option<usize> = None;
            for (i, &j) in self.basis.iter().enumerate() {
                let rate = -dir * alpha[i];
                let limit = if rate < -1e-9 {
                    xb[i].max(0.0) / -rate
                } else if rate > 1e-9 && self.cols[j].upper.is_finite() {
                    (self.cols[j].upper - xb[i]).max(0.0) / rate
                } else {
                    continue;
                };
                // near ties go to the larger pivot, or the smaller index under Bland
                let better = match leave {
                    None => limit < step,
                    Some(prev) => {
                        limit < step - 1e-12
                            || (limit <= step + 1e-12
                                && if bland {
                                    j < self.basis[prev]
                                } else {
                                    alpha[i].abs() > alpha[prev].abs()
                                })
                    }
                };
                if better {
                    step = limit;
                    leave = Some(i);
                }
            }
            assert!(step.is_finite(), "dual problem unbounded");
            degenerate_streak = if step < 1e-12 { degenerate_streak + 1 } else { 0 };
            pivots += 1;
            assert!(pivots < 200_000, "simplex did not terminate");
            match leave {
                None => self.at_upper[q] = !self.at_upper[q],
                Some(i) => {
                    let out = self.basis[i];
                    let rate = -dir * alpha[i];
                    self.at_upper[out] = rate > 0.0;
                    self.at_upper[q] = false;
                    self.basis[i] = q;
                }
            }
        }
    }
}

/// Dense LU with partial pivoting; `cols[j]` is column `j`.
struct Lu {
    m: usize,
    a: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    fn new(cols: &[Vec<f64>], m: usize) -> Self {
        let mut a = vec![0.0; m * m];
        for (j, col) in cols.iter().enumerate() {
            for i in 0..m {
                a[i * m + j] = col[i];
            }
        }
        let mut perm: Vec<usize> = (0..m).collect();
        for k in 0..m {
            let p = (k..m).max_by(|&x, &y| a[x * m + k].abs().total_cmp(&a[y * m + k].abs())).unwrap();
            assert!(a[p * m + k].abs() > 1e-13, "singular basis");
            if p != k {
                for j in 0..m {
                    a.swap(k * m + j, p * m + j);
                }
                perm.swap(k, p);
            }
            for i in k + 1..m {
                let f = a[i * m + k] / a[k * m + k];
                a[i * m + k] = f;
                for j in k + 1..m {
                    a[i * m + j] -= f * a[k * m + j];
                }
            }
        }
        Lu { m, a, perm }
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..m {
            for j in 0..i {
                x[i] -= self.a[i * m + j] * x[j];
            }
        }
        for i in (0..m).rev() {
            for j in i + 1..m {
                x[i] -= self.a[i * m + j] * x[j];
            }
            x[i] /= self.a[i * m + i];
        }
        x
    }

    fn solve_transposed(&self, c: &[f64]) -> Vec<f64> {
        let m = self.m;
        // Uᵀ z = c, Lᵀ w = z, then undo the row permutation
        let mut z = c.to_vec();
        for i in 0..m {
            for j in 0..i {
                z[i] -= self.a[j * m + i] * z[j];
            }
            z[i] /= self.a[i * m + i];
        }
        for i in (0..m).rev() {
            for j in i + 1..m {
                z[i] -= self.a[j * m + i] * z[j];
            }
        }
        let mut out = vec![0.0; m];
        for (k, &p) in self.perm.iter().enumerate() {
            out[p] = z[k];
        }
        out
    }
}

/// Least-squares slope and coefficient of determination of `y` on `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r2)
}
