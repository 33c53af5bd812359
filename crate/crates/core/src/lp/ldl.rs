//! Sparse `LDLᵀ` factorization of symmetric quasi-definite matrices.
//!
//! The matrix is supplied as the upper triangle in compressed-column form,
//! already symmetrically permuted. The symbolic phase (elimination tree and
//! column counts) runs once per pattern; numeric factorizations reuse it.
//! No pivoting is done: each diagonal pivot has a known expected sign, and a
//! pivot that is too small or of the wrong sign is replaced by a signed
//! regularization value.

const NONE: usize = usize::MAX;

/// Upper-triangular compressed-column pattern.
#[derive(Clone, Debug)]
pub struct UpperCsc {
    pub n: usize,
    pub colptr: Vec<usize>,
    pub rowind: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Symbolic {
    n: usize,
    etree: Vec<usize>,
    lcolptr: Vec<usize>,
}

impl Symbolic {
    pub fn analyse(a: &UpperCsc) -> Self {
        let n = a.n;
        let mut etree = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        let mut flag = vec![NONE; n];
        for j in 0..n {
            flag[j] = j;
            for &i0 in &a.rowind[a.colptr[j]..a.colptr[j + 1]] {
                let mut i = i0;
                debug_assert!(i <= j, "pattern must be upper triangular");
                while flag[i] != j {
                    if etree[i] == NONE {
                        etree[i] = j;
                    }
                    lnz[i] += 1;
                    flag[i] = j;
                    i = etree[i];
                }
            }
        }
        let mut lcolptr = vec![0usize; n + 1];
        for i in 0..n {
            lcolptr[i + 1] = lcolptr[i] + lnz[i];
        }
        Symbolic { n, etree, lcolptr }
    }

    /// Number of strictly-lower nonzeros in `L`.
    pub fn factor_nnz(&self) -> usize {
        self.lcolptr[self.n]
    }
}

#[derive(Clone, Debug)]
pub struct Factor {
    lrow: Vec<usize>,
    lval: Vec<f64>,
    d: Vec<f64>,
    dinv: Vec<f64>,
    /// pivots replaced by regularization in the last factorization
    pub regularized: usize,
    // workspaces
    yval: Vec<f64>,
    yidx: Vec<usize>,
    ymark: Vec<bool>,
    stack: Vec<usize>,
    fill: Vec<usize>,
}

impl Factor {
    pub fn new(sym: &Symbolic) -> Self {
        let n = sym.n;
        let nnz = sym.factor_nnz();
        Factor {
            lrow: vec![0; nnz],
            lval: vec![0.0; nnz],
            d: vec![0.0; n],
            dinv: vec![0.0; n],
            regularized: 0,
            yval: vec![0.0; n],
            yidx: Vec::with_capacity(n),
            ymark: vec![false; n],
            stack: Vec::with_capacity(n),
            fill: vec![0; n],
        }
    }

    /// Up-looking numeric factorization. `signs[k]` is the expected sign
    /// of pivot `k`; `threshold`/`delta` drive the pivot replacement.
    pub fn factorize(
        &mut self,
        sym: &Symbolic,
        a: &UpperCsc,
        values: &[f64],
        signs: &[f64],
        threshold: f64,
        delta: f64,
    ) {
        let n = sym.n;
        self.regularized = 0;
        for k in 0..n {
            self.fill[k] = sym.lcolptr[k];
        }
        for k in 0..n {
            // scatter column k of the upper triangle = row k of the lower one
            self.yidx.clear();
            self.d[k] = 0.0;
            for p in a.colptr[k]..a.colptr[k + 1] {
                let i = a.rowind[p];
                if i == k {
                    self.d[k] += values[p];
                    continue;
                }
                self.yval[i] += values[p];
                // nonzero pattern of row k of L: walk the etree from i
                let mut node = i;
                while !self.ymark[node] && node != k {
                    self.ymark[node] = true;
                    self.stack.push(node);
                    node = sym.etree[node];
                }
                while let Some(s) = self.stack.pop() {
                    self.yidx.push(s);
                }
            }
            // process in topological order (reverse of discovery)
            for t in (0..self.yidx.len()).rev() {
                let c = self.yidx[t];
                self.ymark[c] = false;
                let yc = self.yval[c];
                self.yval[c] = 0.0;
                let start = sym.lcolptr[c];
                let end = self.fill[c];
                for p in start..end {
                    self.yval[self.lrow[p]] -= self.lval[p] * yc;
                }
                let l = yc * self.dinv[c];
                self.lrow[end] = k;
                self.lval[end] = l;
                self.fill[c] += 1;
                self.d[k] -= yc * l;
            }
            let sign = signs[k];
            if !(self.d[k] * sign > threshold) || !self.d[k].is_finite() {
                self.d[k] = sign * delta;
                self.regularized += 1;
            }
            self.dinv[k] = 1.0 / self.d[k];
        }
    }

    /// Solve `L·D·Lᵀ·x = b` in place.
    pub fn solve_in_place(&self, sym: &Symbolic, x: &mut [f64]) {
        let n = sym.n;
        for j in 0..n {
            let xj = x[j];
            if xj != 0.0 {
                for p in sym.lcolptr[j]..sym.lcolptr[j + 1] {
                    x[self.lrow[p]] -= self.lval[p] * xj;
                }
            }
        }
        for j in 0..n {
            x[j] *= self.dinv[j];
        }
        for j in (0..n).rev() {
            let mut acc = x[j];
            for p in sym.lcolptr[j]..sym.lcolptr[j + 1] {
                acc -= self.lval[p] * x[self.lrow[p]];
            }
            x[j] = acc;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_to_upper(n: usize, dense: &[f64]) -> (UpperCsc, Vec<f64>) {
        let mut colptr = vec![0];
        let mut rowind = Vec::new();
        let mut vals = Vec::new();
        for j in 0..n {
            for i in 0..=j {
                let v = dense[i * n + j];
                if v != 0.0 || i == j {
                    rowind.push(i);
                    vals.push(v);
                }
            }
            colptr.push(rowind.len());
        }
        (UpperCsc { n, colptr, rowind }, vals)
    }

    #[test]
    fn quasi_definite_solve() {
        // [-H  Fᵀ; F  δ] with H SPD
        let n = 5;
        #[rustfmt::skip]
        let dense = [
            -4.0, -1.0,  0.0,  1.0,  0.0,
            -1.0, -3.0, -0.5,  0.0,  2.0,
             0.0, -0.5, -2.0,  1.0,  1.0,
             1.0,  0.0,  1.0,  1e-8, 0.0,
             0.0,  2.0,  1.0,  0.0,  1e-8,
        ];
        let (a, vals) = dense_to_upper(n, &dense);
        let sym = Symbolic::analyse(&a);
        let mut f = Factor::new(&sym);
        f.factorize(&sym, &a, &vals, &[-1.0, -1.0, -1.0, 1.0, 1.0], 1e-14, 1e-10);
        assert_eq!(f.regularized, 0);
        let b = [1.0, -2.0, 0.5, 3.0, -1.0];
        let mut x = b;
        f.solve_in_place(&sym, &mut x);
        for r in 0..n {
            let ax: f64 = (0..n).map(|c| dense[r * n + c] * x[c]).sum();
            assert!((ax - b[r]).abs() < 1e-8, "row {r}: {ax} vs {}", b[r]);
        }
    }

    #[test]
    fn sparse_tridiagonal_has_no_fill() {
        let n = 50;
        let mut dense = vec![0.0; n * n];
        for i in 0..n {
            dense[i * n + i] = 4.0;
            if i + 1 < n {
                dense[i * n + i + 1] = -1.0;
                dense[(i + 1) * n + i] = -1.0;
            }
        }
        let (a, vals) = dense_to_upper(n, &dense);
        let sym = Symbolic::analyse(&a);
        assert_eq!(sym.factor_nnz(), n - 1);
        let mut f = Factor::new(&sym);
        f.factorize(&sym, &a, &vals, &vec![1.0; n], 1e-14, 1e-10);
        let b: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let mut x = b.clone();
        f.solve_in_place(&sym, &mut x);
        for r in 0..n {
            let ax: f64 = (0..n).map(|c| dense[r * n + c] * x[c]).sum();
            assert!((ax - b[r]).abs() < 1e-10);
        }
    }

    #[test]
    fn bad_pivot_is_regularized() {
        let dense = [0.0, 0.0, 0.0, 2.0];
        let (a, vals) = dense_to_upper(2, &dense);
        let sym = Symbolic::analyse(&a);
        let mut f = Factor::new(&sym);
        f.factorize(&sym, &a, &vals, &[1.0, 1.0], 1e-14, 1e-8);
        assert_eq!(f.regularized, 1);
    }
}
