//! Small dense linear-algebra kernels shared across the crate.
//!
//! Everything here is deterministic: no randomized pivoting, no
//! parallelism, fixed summation order. That property is load-bearing for
//! the bit-reproducibility guarantees of the solvers built on top.

/// Dense column-major matrix.
///
/// Column-major because the rest of the crate treats columns as
/// constraints: selecting a constraint subset is a contiguous copy.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Builds a matrix from row slices (row-major input, as written in text form).
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let mut m = Mat::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
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
        debug_assert!(i < self.rows && j < self.cols);
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[j * self.rows + i] = v;
    }

    /// Contiguous view of column `j`.
    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.cols).map(|j| self.get(i, j)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Copies the listed columns, preserving order.
    pub fn select_cols(&self, idx: &[usize]) -> Mat {
        let mut m = Mat::zeros(self.rows, idx.len());
        for (jj, &j) in idx.iter().enumerate() {
            m.col_mut(jj).copy_from_slice(self.col(j));
        }
        m
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// `A * x`
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        for j in 0..self.cols {
            let xj = x[j];
            let col = self.col(j);
            for i in 0..self.rows {
                y[i] += col[i] * xj;
            }
        }
        y
    }

    /// `A^T * x`
    pub fn tr_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows);
        (0..self.cols).map(|j| dot(self.col(j), x)).collect()
    }

    /// `A * B`
    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let y = self.matvec(other.col(j));
            out.col_mut(j).copy_from_slice(&y);
        }
        out
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Householder QR with column pivoting of `a` (n x m), accumulating the
/// full n x n orthogonal factor.
///
/// Returns `(q, r_diag_abs)` where `q` is n x n orthogonal and
/// `r_diag_abs[j]` is |R[j,j]| after the j-th pivot step. The pivoting
/// makes the diagonal non-increasing in magnitude, so a rank threshold on
/// it is meaningful.
pub fn qr_full_pivoted(a: &Mat) -> (Mat, Vec<f64>) {
    let n = a.rows();
    let m = a.cols();
    let mut work = a.clone();
    let mut q = Mat::identity(n);
    let steps = n.min(m);
    let mut rdiag = Vec::with_capacity(steps);
    let mut live: Vec<usize> = (0..m).collect();

    for k in 0..steps {
        // Pivot: bring the remaining column with the largest trailing norm to position k.
        let mut best = k;
        let mut best_norm = -1.0;
        for (pos, &j) in live.iter().enumerate().skip(k) {
            let col = work.col(j);
            let nrm = dot(&col[k..], &col[k..]);
            if nrm > best_norm {
                best_norm = nrm;
                best = pos;
            }
        }
        live.swap(k, best);
        let jk = live[k];

        // Householder vector for column jk below row k.
        let col = work.col(jk).to_vec();
        let alpha = norm2(&col[k..]);
        rdiag.push(alpha);
        if alpha == 0.0 {
            continue;
        }
        let mut v = vec![0.0; n];
        v[k..].copy_from_slice(&col[k..]);
        // Sign choice avoids cancellation.
        v[k] += if col[k] >= 0.0 { alpha } else { -alpha };
        let vnorm2 = dot(&v[k..], &v[k..]);
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;

        // Apply H = I - beta v v^T to the remaining columns of the work matrix.
        for &j in live.iter().skip(k) {
            let s = beta * dot(&v[k..], &work.col(j)[k..]);
            let cl = work.col_mut(j);
            for i in k..n {
                cl[i] -= s * v[i];
            }
        }
        // Accumulate into Q (apply H on the right: Q <- Q H).
        for j in 0..n {
            let s = beta * dot(&v[k..], &q.col(j)[k..]);
            let cl = q.col_mut(j);
            for i in k..n {
                cl[i] -= s * v[i];
            }
        }
    }
    // Q was accumulated transposed (we applied reflectors to Q's columns
    // as if they were rows); what we actually built is Q^T. Transpose back.
    (q.transpose(), rdiag)
}

/// Eigenvalues of a small symmetric matrix via cyclic Jacobi rotations.
/// Returns eigenvalues sorted ascending.
pub fn sym_eigenvalues(a: &Mat) -> Vec<f64> {
    let n = a.rows();
    assert_eq!(n, a.cols());
    let mut m = a.clone();
    let scale: f64 = (0..n)
        .map(|i| (0..n).map(|j| m.get(i, j).abs()).fold(0.0, f64::max))
        .fold(1e-300, f64::max);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m.get(p, q).abs();
            }
        }
        if off < 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..n {
                    let aip = m.get(i, p);
                    let aiq = m.get(i, q);
                    m.set(i, p, c * aip - s * aiq);
                    m.set(i, q, s * aip + c * aiq);
                }
                for i in 0..n {
                    let api = m.get(p, i);
                    let aqi = m.get(q, i);
                    m.set(p, i, c * api - s * aqi);
                    m.set(q, i, s * api + c * aqi);
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m.get(i, i)).collect();
    eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eig
}

/// Largest singular value of an arbitrary matrix (via the Gram matrix of
/// the smaller side).
pub fn sigma_max(a: &Mat) -> f64 {
    if a.rows() == 0 || a.cols() == 0 {
        return 0.0;
    }
    let g = if a.rows() <= a.cols() {
        a.matmul(&a.transpose())
    } else {
        a.transpose().matmul(a)
    };
    let eig = sym_eigenvalues(&g);
    eig.last().unwrap().max(0.0).sqrt()
}

/// Smallest singular value of a square matrix.
pub fn sigma_min(a: &Mat) -> f64 {
    assert_eq!(a.rows(), a.cols());
    if a.rows() == 0 {
        return 0.0;
    }
    let g = a.transpose().matmul(a);
    let eig = sym_eigenvalues(&g);
    eig.first().unwrap().max(0.0).sqrt()
}

/// Solves the square system `a x = b` by Gaussian elimination with
/// partial pivoting. Returns `None` when the pivot falls below `tol`.
pub fn solve_square(a: &Mat, b: &[f64], tol: f64) -> Option<Vec<f64>> {
    let n = a.rows();
    assert_eq!(n, a.cols());
    assert_eq!(n, b.len());
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut piv = k;
        let mut pval = m.get(perm[k], k).abs();
        for r in (k + 1)..n {
            let v = m.get(perm[r], k).abs();
            if v > pval {
                pval = v;
                piv = r;
            }
        }
        if pval <= tol {
            return None;
        }
        perm.swap(k, piv);
        let pk = perm[k];
        let pivot = m.get(pk, k);
        for r in (k + 1)..n {
            let pr = perm[r];
            let f = m.get(pr, k) / pivot;
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                let v = m.get(pr, j) - f * m.get(pk, j);
                m.set(pr, j, v);
            }
            rhs[pr] -= f * rhs[pk];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let pk = perm[k];
        let mut s = rhs[pk];
        for j in (k + 1)..n {
            s -= m.get(pk, j) * x[j];
        }
        x[k] = s / m.get(pk, k);
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qr_recovers_orthogonal_factor() {
        let a = Mat::from_rows(&[
            vec![1.0, 2.0],
            vec![-1.0, 0.5],
            vec![3.0, -2.0],
            vec![0.0, 1.0],
        ]);
        let (q, rdiag) = qr_full_pivoted(&a);
        assert_eq!(q.rows(), 4);
        assert_eq!(q.cols(), 4);
        assert_eq!(rdiag.len(), 2);
        // Q orthogonal.
        let qtq = q.transpose().matmul(&q);
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((qtq.get(i, j) - expect).abs() < 1e-12);
            }
        }
        // Trailing columns of Q are orthogonal to the input columns.
        for j in 2..4 {
            for c in 0..2 {
                assert!(dot(q.col(j), a.col(c)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn jacobi_eigenvalues_match_known() {
        let a = Mat::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let eig = sym_eigenvalues(&a);
        assert!((eig[0] - 1.0).abs() < 1e-12);
        assert!((eig[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn square_solve_roundtrip() {
        let a = Mat::from_rows(&[vec![4.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 2.0]]);
        let x = vec![1.0, -2.0, 0.5];
        let b = a.matvec(&x);
        let got = solve_square(&a, &b, 1e-12).unwrap();
        for i in 0..3 {
            assert!((got[i] - x[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_matrix_rejected() {
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(solve_square(&a, &[1.0, 2.0], 1e-12).is_none());
    }
}
