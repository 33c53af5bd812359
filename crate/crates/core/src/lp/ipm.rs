//! Primal-dual interior-point method with Mehrotra predictor-corrector.
//!
//! Internally the problem is brought to
//!
//! ```text
//! minimize cᵀv   s.t.  F_E v = b_E,  F_I v − w = 0,
//!                      l ≤ v ≤ u,    lo ≤ w ≤ hi
//! ```
//!
//! where every inequality row gets a bounded slack `w`. Eliminating the
//! slacks and bound duals leaves the quasi-definite system
//!
//! ```text
//! [ −(D_v + F_Iᵀ D_w F_I)   F_Eᵀ ] [Δv ]
//! [  F_E                    0    ] [Δλ_E]
//! ```
//!
//! whose size is the number of structural columns plus equality rows. With
//! no equality rows it is the (negated) normal matrix `F_Iᵀ D_w F_I + D_v`.
//! It is factored by sparse `LDLᵀ` in a minimum-degree ordering computed once.


use super::ldl::{Factor, Symbolic, UpperCsc};
use super::ordering::{invert, minimum_degree};
use super::problem::{LpProblem, Sense};
use super::sparse::{dot, norm_inf, Csr};
use super::{Solution, SolveStats, SolveStatus, SolverSettings};

const PRIMAL_REG: f64 = 1e-9;
const DUAL_REG: f64 = 1e-9;
const PIVOT_THRESHOLD: f64 = 1e-13;
/// A tiny pivot becomes a huge one, which drops that component of the step.
const PIVOT_REPLACEMENT: f64 = 1e64;
const STEP_FRACTION: f64 = 0.995;
const DIVERGENCE: f64 = 1e12;

/// Problem after removing fixed variables and folding singleton
/// inequality rows into bounds.
struct Reduced {
    n: usize,
    /// active column -> original column
    columns: Vec<usize>,
    /// original column -> fixed value, for eliminated columns
    fixed: Vec<Option<f64>>,
    cost: Vec<f64>,
    offset: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
    eq: Csr,
    eq_rhs: Vec<f64>,
    ineq: Csr,
    ineq_lo: Vec<f64>,
    ineq_hi: Vec<f64>,
}

enum Presolve {
    Ready(Reduced),
    Infeasible(String),
}

fn presolve(problem: &LpProblem) -> Presolve {
    let nvars = problem.num_vars();
    let rows = problem.to_csr();
    let mut lower = problem.lower().to_vec();
    let mut upper = problem.upper().to_vec();
    let feas_tol = |x: f64| 1e-9 * (1.0 + x.abs());

    // singleton rows become bounds
    let mut keep_row = vec![true; rows.nrows];
    for r in 0..rows.nrows {
        let (idx, val) = rows.row(r);
        let b = problem.rhs()[r];
        let sense = problem.senses()[r];
        if idx.is_empty() {
            let ok = match sense {
                Sense::Le => 0.0 <= b + feas_tol(b),
                Sense::Ge => 0.0 >= b - feas_tol(b),
                Sense::Eq => b.abs() <= feas_tol(b),
            };
            if !ok {
                return Presolve::Infeasible(format!("empty row {r} cannot satisfy rhs {b}"));
            }
            keep_row[r] = false;
            continue;
        }
        if idx.len() != 1 {
            continue;
        }
        let (j, a) = (idx[0], val[0]);
        let bound = b / a;
        let (as_upper, as_lower) = match (sense, a > 0.0) {
            (Sense::Eq, _) => (true, true),
            (Sense::Le, true) | (Sense::Ge, false) => (true, false),
            (Sense::Le, false) | (Sense::Ge, true) => (false, true),
        };
        if as_upper {
            upper[j] = upper[j].min(bound);
        }
        if as_lower {
            lower[j] = lower[j].max(bound);
        }
        keep_row[r] = false;
    }

    let mut fixed = vec![None; nvars];
    let mut columns = Vec::new();
    let mut active_of = vec![usize::MAX; nvars];
    for j in 0..nvars {
        let (lo, hi) = (lower[j], upper[j]);
        if lo > hi + feas_tol(hi) {
            return Presolve::Infeasible(format!("variable {j} has empty range [{lo}, {hi}]"));
        }
        if lo.is_finite() && hi - lo <= 1e-12 * (1.0 + lo.abs()) {
            fixed[j] = Some(0.5 * (lo + hi));
        } else {
            active_of[j] = columns.len();
            columns.push(j);
        }
    }

    let mut offset = 0.0;
    for (j, f) in fixed.iter().enumerate() {
        if let Some(v) = f {
            offset += problem.cost()[j] * v;
        }
    }

    let mut eq_trip = Vec::new();
    let mut eq_rhs = Vec::new();
    let mut in_trip = Vec::new();
    let mut ineq_lo = Vec::new();
    let mut ineq_hi = Vec::new();
    for r in 0..rows.nrows {
        if !keep_row[r] {
            continue;
        }
        let (idx, val) = rows.row(r);
        let mut shift = 0.0;
        let mut entries = Vec::with_capacity(idx.len());
        for (&j, &a) in idx.iter().zip(val) {
            match fixed[j] {
                Some(v) => shift += a * v,
                None => entries.push((active_of[j], a)),
            }
        }
        let b = problem.rhs()[r] - shift;
        if entries.is_empty() {
            let ok = match problem.senses()[r] {
                Sense::Le => 0.0 <= b + feas_tol(b),
                Sense::Ge => 0.0 >= b - feas_tol(b),
                Sense::Eq => b.abs() <= feas_tol(b),
            };
            if !ok {
                return Presolve::Infeasible(format!("row {r} violated by fixed variables"));
            }
            continue;
        }
        match problem.senses()[r] {
            Sense::Eq => {
                let row = eq_rhs.len();
                eq_trip.extend(entries.iter().map(|&(c, a)| (row, c, a)));
                eq_rhs.push(b);
            }
            sense => {
                let row = ineq_lo.len();
                in_trip.extend(entries.iter().map(|&(c, a)| (row, c, a)));
                if sense == Sense::Le {
                    ineq_lo.push(f64::NEG_INFINITY);
                    ineq_hi.push(b);
                } else {
                    ineq_lo.push(b);
                    ineq_hi.push(f64::INFINITY);
                }
            }
        }
    }
    let n = columns.len();
    Presolve::Ready(Reduced {
        n,
        cost: columns.iter().map(|&j| problem.cost()[j]).collect(),
        lower: columns.iter().map(|&j| lower[j]).collect(),
        upper: columns.iter().map(|&j| upper[j]).collect(),
        columns,
        fixed,
        offset,
        eq: Csr::from_triplets(eq_rhs.len(), n, &eq_trip),
        eq_rhs,
        ineq: Csr::from_triplets(ineq_lo.len(), n, &in_trip),
        ineq_lo,
        ineq_hi,
    })
}

/// Fixed-pattern reduced KKT matrix with its factorization.
struct Kkt {
    n: usize,
    m_eq: usize,
    /// upper pattern in the original order
    colptr: Vec<usize>,
    rowind: Vec<usize>,
    values: Vec<f64>,
    /// original entry -> permuted entry
    to_perm: Vec<usize>,
    perm_pattern: UpperCsc,
    perm_values: Vec<f64>,
    inv: Vec<usize>,
    signs: Vec<f64>,
    symbolic: Symbolic,
    factor: Factor,
    ineq_t: Csr,
    threads: usize,
}

impl Kkt {
    fn new(red: &Reduced, threads: usize) -> Self {
        let n = red.n;
        let m_eq = red.eq.nrows;
        let dim = n + m_eq;
        let ineq_t = red.ineq.transpose();

        // pattern of the upper triangle, column by column
        let mut colptr = vec![0usize];
        let mut rowind = Vec::new();
        let mut mark = vec![usize::MAX; n];
        let mut col: Vec<usize> = Vec::new();
        for j in 0..n {
            col.clear();
            mark[j] = j;
            col.push(j);
            let (rows, _) = ineq_t.row(j);
            for &r in rows {
                let (idx, _) = red.ineq.row(r);
                for &i in idx {
                    if i < j && mark[i] != j {
                        mark[i] = j;
                        col.push(i);
                    }
                }
            }
            col.sort_unstable();
            rowind.extend_from_slice(&col);
            colptr.push(rowind.len());
        }
        for e in 0..m_eq {
            let (idx, _) = red.eq.row(e);
            rowind.extend_from_slice(idx);
            rowind.push(n + e);
            colptr.push(rowind.len());
        }

        // symmetric adjacency for the ordering
        let mut degree = vec![0usize; dim];
        for j in 0..dim {
            for &i in &rowind[colptr[j]..colptr[j + 1]] {
                if i != j {
                    degree[i] += 1;
                    degree[j] += 1;
                }
            }
        }
        let mut adj_ptr = vec![0usize; dim + 1];
        for i in 0..dim {
            adj_ptr[i + 1] = adj_ptr[i] + degree[i];
        }
        let mut fill = adj_ptr.clone();
        let mut adj = vec![0usize; adj_ptr[dim]];
        for j in 0..dim {
            for &i in &rowind[colptr[j]..colptr[j + 1]] {
                if i != j {
                    adj[fill[i]] = j;
                    fill[i] += 1;
                    adj[fill[j]] = i;
                    fill[j] += 1;
                }
            }
        }
        let perm = minimum_degree(dim, &adj_ptr, &adj);
        let inv = invert(&perm);

        // permuted upper pattern
        let nnz = rowind.len();
        let mut counts = vec![0usize; dim + 1];
        let mut entries = Vec::with_capacity(nnz);
        for j in 0..dim {
            for &i in &rowind[colptr[j]..colptr[j + 1]] {
                let (a, b) = (inv[i], inv[j]);
                let (r, c) = if a <= b { (a, b) } else { (b, a) };
                counts[c + 1] += 1;
                entries.push((r, c));
            }
        }
        for c in 0..dim {
            counts[c + 1] += counts[c];
        }
        let mut next = counts.clone();
        let mut prow = vec![0usize; nnz];
        let mut to_perm = vec![0usize; nnz];
        for (p, &(r, c)) in entries.iter().enumerate() {
            prow[next[c]] = r;
            to_perm[p] = next[c];
            next[c] += 1;
        }
        let perm_pattern = UpperCsc {
            n: dim,
            colptr: counts,
            rowind: prow,
        };
        let symbolic = Symbolic::analyse(&perm_pattern);
        let factor = Factor::new(&symbolic);
        let signs = (0..dim)
            .map(|new| if perm[new] < n { -1.0 } else { 1.0 })
            .collect();
        Kkt {
            n,
            m_eq,
            values: vec![0.0; nnz],
            colptr,
            rowind,
            to_perm,
            perm_values: vec![0.0; nnz],
            perm_pattern,
            inv,
            signs,
            symbolic,
            factor,
            ineq_t,
            threads: threads.max(1),
        }
    }

    fn nnz(&self) -> usize {
        self.rowind.len()
    }

    /// Assemble `−(D_v + F_Iᵀ D_w F_I + ρI)` and the equality blocks, then factor.
    fn factorize(&mut self, red: &Reduced, d_v: &[f64], d_w: &[f64]) -> usize {
        let n = self.n;
        let nnz_top = self.colptr[n];
        let (top, rest) = self.values.split_at_mut(nnz_top);
        let colptr = &self.colptr;
        let rowind = &self.rowind;
        let ineq_t = &self.ineq_t;
        let assemble = |cols: std::ops::Range<usize>, out: &mut [f64], base: usize| {
            let mut work = vec![0.0; n];
            for j in cols {
                let (rows, fvals) = ineq_t.row(j);
                for (&r, &frj) in rows.iter().zip(fvals) {
                    let scale = d_w[r] * frj;
                    let (idx, val) = red.ineq.row(r);
                    for (&i, &fri) in idx.iter().zip(val) {
                        if i > j {
                            break;
                        }
                        work[i] += scale * fri;
                    }
                }
                work[j] += d_v[j] + PRIMAL_REG;
                for p in colptr[j]..colptr[j + 1] {
                    let i = rowind[p];
                    out[p - base] = -work[i];
                    work[i] = 0.0;
                }
            }
        };
        if self.threads > 1 && n > 1000 {
            let chunk = n.div_ceil(self.threads);
            std::thread::scope(|scope| {
                let mut remaining = top;
                let mut start = 0;
                while start < n {
                    let end = (start + chunk).min(n);
                    let len = colptr[end] - colptr[start];
                    let (mine, tail) = remaining.split_at_mut(len);
                    remaining = tail;
                    let base = colptr[start];
                    let assemble = &assemble;
                    scope.spawn(move || assemble(start..end, mine, base));
                    start = end;
                }
            });
        } else {
            assemble(0..n, top, 0);
        }
        let mut p = 0;
        for e in 0..self.m_eq {
            let (_, val) = red.eq.row(e);
            for &v in val {
                rest[p] = v;
                p += 1;
            }
            rest[p] = DUAL_REG;
            p += 1;
        }
        for (orig, &dest) in self.to_perm.iter().enumerate() {
            self.perm_values[dest] = self.values[orig];
        }
        self.factor.factorize(
            &self.symbolic,
            &self.perm_pattern,
            &self.perm_values,
            &self.signs,
            PIVOT_THRESHOLD,
            PIVOT_REPLACEMENT,
        );
        self.factor.regularized
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; rhs.len()];
        for (old, &v) in rhs.iter().enumerate() {
            x[self.inv[old]] = v;
        }
        self.factor.solve_in_place(&self.symbolic, &mut x);
        (0..rhs.len()).map(|old| x[self.inv[old]]).collect()
    }
}

/// `K·[dv; dλ]` with the unregularized reduced matrix.
fn kkt_apply(red: &Reduced, d_v: &[f64], d_w: &[f64], x: &[f64], out: &mut [f64]) {
    let n = red.n;
    let (dv, dl) = x.split_at(n);
    let mut fi = vec![0.0; red.ineq.nrows];
    red.ineq.mul_vec(dv, &mut fi);
    for (f, d) in fi.iter_mut().zip(d_w) {
        *f *= d;
    }
    let (top, bottom) = out.split_at_mut(n);
    for j in 0..n {
        top[j] = -d_v[j] * dv[j];
    }
    let mut acc = vec![0.0; n];
    red.ineq.mul_t_vec_add(&fi, &mut acc);
    red.eq.mul_t_vec_add(dl, top);
    for j in 0..n {
        top[j] -= acc[j];
    }
    red.eq.mul_vec(dv, bottom);
}

struct Bounds {
    lo: Vec<f64>,
    hi: Vec<f64>,
    has_lo: Vec<bool>,
    has_hi: Vec<bool>,
}

struct Iterate {
    x: Vec<f64>,
    lam: Vec<f64>,
    zl: Vec<f64>,
    zu: Vec<f64>,
}

struct Direction {
    dx: Vec<f64>,
    dlam: Vec<f64>,
    dzl: Vec<f64>,
    dzu: Vec<f64>,
}

pub(super) fn solve(problem: &LpProblem, settings: &SolverSettings) -> Solution {
    let elapsed = clock();
    let mut stats = SolveStats {
        constraint_nnz: problem.nnz(),
        ..SolveStats::default()
    };
    let fail = |status, detail: String, mut stats: SolveStats| {
        stats.wall_time_secs = elapsed();
        stats.detail = detail;
        Solution {
            values: vec![f64::NAN; problem.num_vars()],
            objective: f64::NAN,
            status,
            stats,
        }
    };
    if let Err(msg) = settings.validate() {
        return fail(SolveStatus::NumericalFailure, msg, stats);
    }
    if let Err(msg) = problem.validate() {
        let status = if problem
            .lower()
            .iter()
            .zip(problem.upper())
            .any(|(lo, hi)| lo > hi)
        {
            SolveStatus::Infeasible
        } else {
            SolveStatus::NumericalFailure
        };
        return fail(status, msg, stats);
    }
    let red = match presolve(problem) {
        Presolve::Ready(r) => r,
        Presolve::Infeasible(msg) => return fail(SolveStatus::Infeasible, msg, stats),
    };

    let n = red.n;
    let m_eq = red.eq.nrows;
    let m_in = red.ineq.nrows;
    let total = n + m_in;

    let mut kkt = Kkt::new(&red, settings.threads);
    stats.kkt_nnz = kkt.nnz();
    stats.factor_nnz = kkt.symbolic.factor_nnz();
    stats.memory_bytes = estimate_memory(&red, &kkt);

    let bounds = Bounds {
        lo: red.lower.iter().chain(&red.ineq_lo).copied().collect(),
        hi: red.upper.iter().chain(&red.ineq_hi).copied().collect(),
        has_lo: red
            .lower
            .iter()
            .chain(&red.ineq_lo)
            .map(|v| v.is_finite())
            .collect(),
        has_hi: red
            .upper
            .iter()
            .chain(&red.ineq_hi)
            .map(|v| v.is_finite())
            .collect(),
    };
    let mut c = red.cost.clone();
    c.resize(total, 0.0);
    let b_norm = norm_inf(&red.eq_rhs);
    let c_norm = norm_inf(&red.cost);

    let mut it = starting_point(&red, &bounds, &c);
    let complementarity_count = bounds.has_lo.iter().filter(|&&b| b).count()
        + bounds.has_hi.iter().filter(|&&b| b).count();

    let mut status = SolveStatus::IterationLimit;
    let mut rp = vec![0.0; m_eq + m_in];
    let mut rd = vec![0.0; total];
    let mut pobj = f64::NAN;
    for iter in 0..=settings.max_iterations {
        // residuals
        primal_residual(&red, &it.x, &mut rp);
        dual_residual(&red, &it, &c, &mut rd);
        pobj = dot(&red.cost, &it.x[..n]) + red.offset;
        let mut dobj = dot(&red.eq_rhs, &it.lam[..m_eq]) + red.offset;
        for j in 0..total {
            if bounds.has_lo[j] {
                dobj += bounds.lo[j] * it.zl[j];
            }
            if bounds.has_hi[j] {
                dobj -= bounds.hi[j] * it.zu[j];
            }
        }
        let pres = norm_inf(&rp) / (1.0 + b_norm);
        let dres = norm_inf(&rd) / (1.0 + c_norm);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs());
        stats.iterations = iter;
        stats.primal_residual = pres;
        stats.dual_residual = dres;
        stats.gap = gap;
        if !(pres.is_finite() && dres.is_finite() && gap.is_finite()) {
            status = SolveStatus::NumericalFailure;
            stats.detail = format!("non-finite residuals at iteration {iter}");
            break;
        }
        if pres < settings.tolerance && dres < settings.tolerance && gap < settings.tolerance {
            status = SolveStatus::Optimal;
            break;
        }
        let scale = 1.0 + b_norm.max(c_norm);
        if norm_inf(&it.lam) > DIVERGENCE * scale
            || norm_inf(&it.zl) > DIVERGENCE * scale
            || norm_inf(&it.zu) > DIVERGENCE * scale
        {
            status = SolveStatus::Infeasible;
            stats.detail = format!("dual iterates diverged at iteration {iter} (primal residual {pres:.3e})");
            break;
        }
        if iter == settings.max_iterations {
            stats.detail = format!(
                "no convergence after {iter} iterations (primal {pres:.3e}, dual {dres:.3e}, gap {gap:.3e})"
            );
            break;
        }

        // barrier weights
        let mut sl = vec![0.0; total];
        let mut su = vec![0.0; total];
        let mut d = vec![0.0; total];
        let mut mu = 0.0;
        for j in 0..total {
            if bounds.has_lo[j] {
                sl[j] = it.x[j] - bounds.lo[j];
                d[j] += it.zl[j] / sl[j];
                mu += sl[j] * it.zl[j];
            }
            if bounds.has_hi[j] {
                su[j] = bounds.hi[j] - it.x[j];
                d[j] += it.zu[j] / su[j];
                mu += su[j] * it.zu[j];
            }
        }
        mu /= complementarity_count.max(1) as f64;
        let regularized = kkt.factorize(&red, &d[..n], &d[n..]);
        stats.regularized_pivots = stats.regularized_pivots.max(regularized);

        // predictor
        let mut rcl: Vec<f64> = (0..total).map(|j| -sl[j] * it.zl[j]).collect();
        let mut rcu: Vec<f64> = (0..total).map(|j| -su[j] * it.zu[j]).collect();
        let aff = newton(&red, &kkt, &bounds, &it, &sl, &su, &d, &rp, &rd, &rcl, &rcu);
        let (ap_aff, ad_aff) = step_lengths(&bounds, &it, &sl, &su, &aff);
        let mut mu_aff = 0.0;
        for j in 0..total {
            if bounds.has_lo[j] {
                mu_aff += (sl[j] + ap_aff * aff.dx[j]) * (it.zl[j] + ad_aff * aff.dzl[j]);
            }
            if bounds.has_hi[j] {
                mu_aff += (su[j] - ap_aff * aff.dx[j]) * (it.zu[j] + ad_aff * aff.dzu[j]);
            }
        }
        mu_aff /= complementarity_count.max(1) as f64;
        let sigma = (mu_aff / mu).powi(3).clamp(0.0, 1.0);

        // corrector
        for j in 0..total {
            if bounds.has_lo[j] {
                rcl[j] = sigma * mu - sl[j] * it.zl[j] - aff.dx[j] * aff.dzl[j];
            }
            if bounds.has_hi[j] {
                rcu[j] = sigma * mu - su[j] * it.zu[j] + aff.dx[j] * aff.dzu[j];
            }
        }
        let dir = newton(&red, &kkt, &bounds, &it, &sl, &su, &d, &rp, &rd, &rcl, &rcu);
        let (ap, ad) = step_lengths(&bounds, &it, &sl, &su, &dir);
        let (ap, ad) = ((STEP_FRACTION * ap).min(1.0), (STEP_FRACTION * ad).min(1.0));
        if ap < 1e-14 && ad < 1e-14 {
            status = SolveStatus::NumericalFailure;
            stats.detail = format!("step length collapsed at iteration {iter}");
            break;
        }
        for j in 0..total {
            it.x[j] += ap * dir.dx[j];
            it.zl[j] += ad * dir.dzl[j];
            it.zu[j] += ad * dir.dzu[j];
        }
        for (l, dl) in it.lam.iter_mut().zip(&dir.dlam) {
            *l += ad * dl;
        }
    }

    let mut values = vec![0.0; problem.num_vars()];
    for (j, f) in red.fixed.iter().enumerate() {
        if let Some(v) = f {
            values[j] = *v;
        }
    }
    for (a, &j) in red.columns.iter().enumerate() {
        values[j] = it.x[a];
    }
    stats.wall_time_secs = elapsed();
    Solution {
        objective: if pobj.is_finite() {
            problem.objective_value(&values)
        } else {
            pobj
        },
        values,
        status,
        stats,
    }
}

fn estimate_memory(red: &Reduced, kkt: &Kkt) -> usize {
    let f = std::mem::size_of::<f64>();
    let u = std::mem::size_of::<usize>();
    let matrices = 2 * (red.ineq.nnz() + red.eq.nnz()) * (f + u);
    let kkt_bytes = kkt.nnz() * (2 * f + 3 * u);
    let factor = kkt.symbolic.factor_nnz() * (f + u);
    let vectors = 12 * (red.n + red.ineq.nrows + red.eq.nrows) * f;
    matrices + kkt_bytes + factor + vectors
}

fn primal_residual(red: &Reduced, x: &[f64], rp: &mut [f64]) {
    let n = red.n;
    let m_eq = red.eq.nrows;
    let (v, w) = x.split_at(n);
    let (re, ri) = rp.split_at_mut(m_eq);
    red.eq.mul_vec(v, re);
    for (r, b) in re.iter_mut().zip(&red.eq_rhs) {
        *r = b - *r;
    }
    red.ineq.mul_vec(v, ri);
    for (r, wr) in ri.iter_mut().zip(w) {
        *r = wr - *r;
    }
}

fn dual_residual(red: &Reduced, it: &Iterate, c: &[f64], rd: &mut [f64]) {
    let n = red.n;
    let m_eq = red.eq.nrows;
    let (lam_e, lam_i) = it.lam.split_at(m_eq);
    let mut aty = vec![0.0; n];
    red.eq.mul_t_vec_add(lam_e, &mut aty);
    red.ineq.mul_t_vec_add(lam_i, &mut aty);
    for j in 0..n {
        rd[j] = c[j] - aty[j] - it.zl[j] + it.zu[j];
    }
    for (r, &l) in lam_i.iter().enumerate() {
        let j = n + r;
        rd[j] = l - it.zl[j] + it.zu[j];
    }
}

#[allow(clippy::too_many_arguments)]
fn newton(
    red: &Reduced,
    kkt: &Kkt,
    bounds: &Bounds,
    it: &Iterate,
    sl: &[f64],
    su: &[f64],
    d: &[f64],
    rp: &[f64],
    rd: &[f64],
    rcl: &[f64],
    rcu: &[f64],
) -> Direction {
    let n = red.n;
    let m_eq = red.eq.nrows;
    let total = d.len();
    let mut xi = rd.to_vec();
    for j in 0..total {
        if bounds.has_lo[j] {
            xi[j] -= rcl[j] / sl[j];
        }
        if bounds.has_hi[j] {
            xi[j] += rcu[j] / su[j];
        }
    }
    let (xi_v, xi_w) = xi.split_at(n);
    let (d_v, d_w) = d.split_at(n);
    let (rp_e, rp_i) = rp.split_at(m_eq);

    let t: Vec<f64> = (0..red.ineq.nrows)
        .map(|r| d_w[r] * rp_i[r] - xi_w[r])
        .collect();
    let mut rhs = vec![0.0; n + m_eq];
    rhs[..n].copy_from_slice(xi_v);
    let mut ft = vec![0.0; n];
    red.ineq.mul_t_vec_add(&t, &mut ft);
    for j in 0..n {
        rhs[j] -= ft[j];
    }
    rhs[n..].copy_from_slice(rp_e);

    // solve with iterative refinement against the unregularized matrix
    let mut sol = kkt.solve(&rhs);
    let rhs_norm = norm_inf(&rhs).max(1e-300);
    let mut resid = vec![0.0; rhs.len()];
    let mut best = f64::INFINITY;
    for _ in 0..3 {
        kkt_apply(red, d_v, d_w, &sol, &mut resid);
        for (r, b) in resid.iter_mut().zip(&rhs) {
            *r = b - *r;
        }
        let err = norm_inf(&resid) / rhs_norm;
        if err < 1e-12 || err >= best {
            break;
        }
        best = err;
        let corr = kkt.solve(&resid);
        for (s, c) in sol.iter_mut().zip(&corr) {
            *s += c;
        }
    }

    let (dv, dlam_e) = sol.split_at(n);
    let mut fdv = vec![0.0; red.ineq.nrows];
    red.ineq.mul_vec(dv, &mut fdv);
    let mut dx = vec![0.0; total];
    dx[..n].copy_from_slice(dv);
    let mut dlam = vec![0.0; m_eq + red.ineq.nrows];
    dlam[..m_eq].copy_from_slice(dlam_e);
    for r in 0..red.ineq.nrows {
        let dli = d_w[r] * (rp_i[r] - fdv[r]) - xi_w[r];
        dlam[m_eq + r] = dli;
        dx[n + r] = -(xi_w[r] + dli) / d_w[r];
    }
    let mut dzl = vec![0.0; total];
    let mut dzu = vec![0.0; total];
    for j in 0..total {
        if bounds.has_lo[j] {
            dzl[j] = (rcl[j] - it.zl[j] * dx[j]) / sl[j];
        }
        if bounds.has_hi[j] {
            dzu[j] = (rcu[j] + it.zu[j] * dx[j]) / su[j];
        }
    }
    Direction { dx, dlam, dzl, dzu }
}

fn step_lengths(bounds: &Bounds, it: &Iterate, sl: &[f64], su: &[f64], dir: &Direction) -> (f64, f64) {
    let mut ap: f64 = 1.0 / STEP_FRACTION;
    let mut ad: f64 = 1.0 / STEP_FRACTION;
    for j in 0..dir.dx.len() {
        if bounds.has_lo[j] {
            if dir.dx[j] < 0.0 {
                ap = ap.min(-sl[j] / dir.dx[j]);
            }
            if dir.dzl[j] < 0.0 {
                ad = ad.min(-it.zl[j] / dir.dzl[j]);
            }
        }
        if bounds.has_hi[j] {
            if dir.dx[j] > 0.0 {
                ap = ap.min(su[j] / dir.dx[j]);
            }
            if dir.dzu[j] < 0.0 {
                ad = ad.min(-it.zu[j] / dir.dzu[j]);
            }
        }
    }
    (ap, ad)
}

/// Push `value` into the interior of `[lo, hi]`.
fn interior(value: f64, lo: f64, hi: f64) -> f64 {
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => {
            let width = hi - lo;
            let margin = (0.01 * width).max(1.0).min(0.5 * width);
            if value >= lo && value <= hi {
                value.clamp(lo + margin, hi - margin)
            } else {
                0.5 * (lo + hi)
            }
        }
        (true, false) => value.max(lo + 1.0_f64.max(0.01 * lo.abs())),
        (false, true) => value.min(hi - 1.0_f64.max(0.01 * hi.abs())),
        (false, false) => value,
    }
}

fn starting_point(red: &Reduced, bounds: &Bounds, c: &[f64]) -> Iterate {
    let n = red.n;
    let total = n + red.ineq.nrows;
    let mut x = vec![0.0; total];
    for j in 0..n {
        x[j] = interior(0.0, bounds.lo[j], bounds.hi[j]);
    }
    let mut fv = vec![0.0; red.ineq.nrows];
    red.ineq.mul_vec(&x[..n], &mut fv);
    for (r, v) in fv.into_iter().enumerate() {
        x[n + r] = interior(v, bounds.lo[n + r], bounds.hi[n + r]);
    }
    let mut zl = vec![0.0; total];
    let mut zu = vec![0.0; total];
    for j in 0..total {
        let cj = c[j];
        if bounds.has_lo[j] {
            zl[j] = 1.0 + cj.max(0.0);
        }
        if bounds.has_hi[j] {
            zu[j] = 1.0 + (-cj).max(0.0);
        }
    }
    Iterate {
        x,
        lam: vec![0.0; red.eq.nrows + red.ineq.nrows],
        zl,
        zu,
    }
}

/// Seconds since the call; always zero on wasm32, which has no clock.
#[cfg(not(target_arch = "wasm32"))]
fn clock() -> impl Fn() -> f64 {
    let start = std::time::Instant::now();
    move || start.elapsed().as_secs_f64()
}

#[cfg(target_arch = "wasm32")]
fn clock() -> impl Fn() -> f64 {
    || 0.0
}
