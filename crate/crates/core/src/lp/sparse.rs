/// Compressed sparse rows. Column indices within a row are sorted and unique.
#[derive(Clone, Debug, Default)]
pub struct Csr {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl Csr {
    /// Build from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, _, _) in triplets {
            counts[r + 1] += 1;
        }
        for r in 0..nrows {
            counts[r + 1] += counts[r];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(r, c, v) in triplets {
            let slot = next[r];
            cols[slot] = c;
            vals[slot] = v;
            next[r] += 1;
        }
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        indptr.push(0);
        let mut row: Vec<(usize, f64)> = Vec::new();
        for r in 0..nrows {
            row.clear();
            row.extend((counts[r]..counts[r + 1]).map(|p| (cols[p], vals[p])));
            row.sort_by_key(|&(c, _)| c);
            for &(c, v) in &row {
                if indices.len() > indptr[r] && *indices.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Csr {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    #[inline]
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.indptr[r]..self.indptr[r + 1];
        (&self.indices[span.clone()], &self.values[span])
    }

    #[inline]
    pub fn row_dot(&self, r: usize, x: &[f64]) -> f64 {
        let (idx, val) = self.row(r);
        idx.iter().zip(val).map(|(&c, &v)| v * x[c]).sum()
    }

    /// `y = A·x`
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (r, out) in y.iter_mut().enumerate().take(self.nrows) {
            *out = self.row_dot(r, x);
        }
    }

    /// `y += Aᵀ·x`
    pub fn mul_t_vec_add(&self, x: &[f64], y: &mut [f64]) {
        for (r, &xr) in x.iter().enumerate().take(self.nrows) {
            if xr == 0.0 {
                continue;
            }
            let (idx, val) = self.row(r);
            for (&c, &v) in idx.iter().zip(val) {
                y[c] += v * xr;
            }
        }
    }

    pub fn transpose(&self) -> Csr {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for c in 0..self.ncols {
            counts[c + 1] += counts[c];
        }
        let mut next = counts.clone();
        let mut indices = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.nrows {
            let (idx, val) = self.row(r);
            for (&c, &v) in idx.iter().zip(val) {
                indices[next[c]] = r;
                values[next[c]] = v;
                next[c] += 1;
            }
        }
        Csr {
            nrows: self.ncols,
            ncols: self.nrows,
            indptr: counts,
            indices,
            values,
        }
    }
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates_and_sort() {
        let m = Csr::from_triplets(2, 3, &[(1, 2, 1.0), (0, 1, 2.0), (1, 0, 3.0), (1, 2, 4.0)]);
        assert_eq!(m.indptr, vec![0, 1, 3]);
        assert_eq!(m.indices, vec![1, 0, 2]);
        assert_eq!(m.values, vec![2.0, 3.0, 5.0]);
        let t = m.transpose();
        assert_eq!(t.nrows, 3);
        let mut y = vec![0.0; 2];
        m.mul_vec(&[1.0, 1.0, 1.0], &mut y);
        assert_eq!(y, vec![2.0, 8.0]);
        let mut z = vec![0.0; 3];
        m.mul_t_vec_add(&[1.0, 2.0], &mut z);
        assert_eq!(z, vec![6.0, 2.0, 10.0]);
        let mut zt = vec![0.0; 3];
        t.mul_vec(&[1.0, 2.0], &mut zt);
        assert_eq!(zt, z);
    }
}
