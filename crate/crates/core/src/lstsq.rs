//! Dense least squares by Householder QR with column pivoting.
//!
//! Columns are scaled to unit 2-norm before factorization so the pivot
//! ratio test measures linear dependence rather than units; coefficients
//! are mapped back to the caller's units afterwards.

use crate::error::{Error, Result};

/// Columns whose pivot falls below this fraction of the leading pivot are
/// treated as dependent.
pub const PIVOT_RATIO_TOL: f64 = 1e-10;

/// Column-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Panics if the columns have different lengths.
    pub fn from_columns(columns: &[Vec<f64>]) -> Self {
        let rows = columns.first().map_or(0, Vec::len);
        assert!(columns.iter().all(|c| c.len() == rows), "ragged columns");
        Self {
            rows,
            cols: columns.len(),
            data: columns.concat(),
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "ragged rows");
            for (j, &v) in r.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.rows + i] = v;
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    fn column_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// Matrix made of the listed columns, in order.
    pub fn select_columns(&self, cols: &[usize]) -> Matrix {
        let columns: Vec<Vec<f64>> = cols.iter().map(|&j| self.column(j).to_vec()).collect();
        let mut m = Matrix::from_columns(&columns);
        m.rows = self.rows;
        m
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let mut out = vec![0.0; self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                for (o, a) in out.iter_mut().zip(self.column(j)) {
                    *o += a * xj;
                }
            }
        }
        out
    }

    pub fn column_norm(&self, j: usize) -> f64 {
        norm(self.column(j))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstsqSolution {
    pub coeffs: Vec<f64>,
    /// `||A x - b||_2 / sqrt(rows)`, unweighted.
    pub residual_rms: f64,
    pub rank: usize,
    /// Columns dropped as linearly dependent; their coefficients are zero.
    pub dependent: Vec<usize>,
}

impl LstsqSolution {
    pub fn is_rank_deficient(&self) -> bool {
        !self.dependent.is_empty()
    }
}

fn norm(v: &[f64]) -> f64 {
    // Scaled accumulation avoids overflow for large-magnitude columns.
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * v.iter().map(|x| (x / scale) * (x / scale)).sum::<f64>().sqrt()
}

/// Minimizes `||A x - b||_2`.
pub fn lstsq(a: &Matrix, b: &[f64]) -> Result<LstsqSolution> {
    lstsq_weighted(a, b, None)
}

/// Minimizes `sum_i (w_i (A x - b)_i)^2` when `weights` is given.
pub fn lstsq_weighted(a: &Matrix, b: &[f64], weights: Option<&[f64]>) -> Result<LstsqSolution> {
    let (m, n) = (a.rows, a.cols);
    assert_eq!(b.len(), m, "rhs length");
    if n == 0 || m < n {
        return Err(Error::Underdetermined { rows: m, cols: n });
    }

    let mut work = a.clone();
    let mut rhs = b.to_vec();
    if let Some(w) = weights {
        assert_eq!(w.len(), m, "weights length");
        for j in 0..n {
            for (x, wi) in work.column_mut(j).iter_mut().zip(w) {
                *x *= wi;
            }
        }
        for (x, wi) in rhs.iter_mut().zip(w) {
            *x *= wi;
        }
    }

    let mut scale = vec![0.0; n];
    for (j, s) in scale.iter_mut().enumerate() {
        let nrm = work.column_norm(j);
        *s = if nrm > 0.0 { 1.0 / nrm } else { 0.0 };
        let s = *s;
        work.column_mut(j).iter_mut().for_each(|x| *x *= s);
    }

    let mut perm: Vec<usize> = (0..n).collect();
    let mut rank = 0;
    let mut lead = 0.0;
    for k in 0..n {
        // Pick the remaining column with the largest trailing norm.
        let (p, pnorm) = (k..n)
            .map(|j| (j, norm(&work.column(j)[k..])))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if k == 0 {
            lead = pnorm;
        }
        if !(pnorm > 0.0) || pnorm < PIVOT_RATIO_TOL * lead {
            break;
        }
        if p != k {
            perm.swap(p, k);
            for i in 0..m {
                let tmp = work.get(i, k);
                work.set(i, k, work.get(i, p));
                work.set(i, p, tmp);
            }
        }

        // Householder vector for column k below the diagonal.
        let akk = work.get(k, k);
        let alpha = if akk >= 0.0 { -pnorm } else { pnorm };
        let mut v: Vec<f64> = work.column(k)[k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for j in k..n {
                let col = &mut work.column_mut(j)[k..];
                let dot: f64 = col.iter().zip(&v).map(|(c, vi)| c * vi).sum();
                let f = 2.0 * dot / vnorm2;
                col.iter_mut().zip(&v).for_each(|(c, vi)| *c -= f * vi);
            }
            let seg = &mut rhs[k..];
            let dot: f64 = seg.iter().zip(&v).map(|(c, vi)| c * vi).sum();
            let f = 2.0 * dot / vnorm2;
            seg.iter_mut().zip(&v).for_each(|(c, vi)| *c -= f * vi);
        }
        rank = k + 1;
    }

    // Back substitution on the leading rank x rank triangle.
    let mut z = vec![0.0; rank];
    for i in (0..rank).rev() {
        let mut acc = rhs[i];
        for (j, zj) in z.iter().enumerate().skip(i + 1) {
            acc -= work.get(i, j) * zj;
        }
        z[i] = acc / work.get(i, i);
    }

    let mut coeffs = vec![0.0; n];
    for (k, &zk) in z.iter().enumerate() {
        let j = perm[k];
        coeffs[j] = zk * scale[j];
    }
    let mut dependent: Vec<usize> = perm[rank..].to_vec();
    dependent.sort_unstable();

    let fitted = a.mul_vec(&coeffs);
    let ss: f64 = fitted.iter().zip(b).map(|(f, y)| (f - y) * (f - y)).sum();
    Ok(LstsqSolution {
        coeffs,
        residual_rms: (ss / m as f64).sqrt(),
        rank,
        dependent,
    })
}
