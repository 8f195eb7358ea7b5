//! The constraint system `A_i^T u <= B_i`, enforcement configurations,
//! masking, and the nullspace reduction consumed by every feasibility LP.
//!
//! Constraints are stored columns-first: `A` is m x c with one column per
//! constraint, matching how the math is usually written and keeping
//! constraint selection a contiguous column copy. Hard constraints occupy
//! the leading indices `0..n_hard` and are never disregarded.

use crate::linalg::{self, Mat};

/// Relative rank threshold of the nullspace factorization.
pub const TOL_RANK: f64 = 1e-9;
/// Tolerance on the nullspace residual `||A N||` and on `N^T N - I`.
pub const TOL_NULL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    a: Mat,
    b: Vec<f64>,
    n_hard: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConstraintSetError {
    Empty,
    DimensionMismatch { cols: usize, b_len: usize },
    HardCountOutOfRange { n_hard: usize, c: usize },
    NonFinite,
}

impl std::fmt::Display for ConstraintSetError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConstraintSetError::Empty => write!(f, "constraint set must contain at least one constraint"),
            ConstraintSetError::DimensionMismatch { cols, b_len } => {
                write!(f, "A has {cols} columns but B has {b_len} entries")
            }
            ConstraintSetError::HardCountOutOfRange { n_hard, c } => {
                write!(f, "n_hard = {n_hard} exceeds constraint count {c}")
            }
            ConstraintSetError::NonFinite => write!(f, "non-finite entry in constraint data"),
        }
    }
}

impl std::error::Error for ConstraintSetError {}

impl ConstraintSet {
    /// `a` is m x c with constraint normals as columns; the first `n_hard`
    /// constraints are hard.
    pub fn new(a: Mat, b: Vec<f64>, n_hard: usize) -> Result<Self, ConstraintSetError> {
        let c = a.cols();
        if c == 0 {
            return Err(ConstraintSetError::Empty);
        }
        if b.len() != c {
            return Err(ConstraintSetError::DimensionMismatch { cols: c, b_len: b.len() });
        }
        if n_hard > c {
            return Err(ConstraintSetError::HardCountOutOfRange { n_hard, c });
        }
        if !a.is_finite() || b.iter().any(|v| !v.is_finite()) {
            return Err(ConstraintSetError::NonFinite);
        }
        Ok(ConstraintSet { a, b, n_hard })
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// Number of constraints `c`.
    pub fn len(&self) -> usize {
        self.a.cols()
    }

    pub fn is_empty(&self) -> bool {
        false // validated non-empty at construction
    }

    /// Input dimension `m`.
    pub fn input_dim(&self) -> usize {
        self.a.rows()
    }

    pub fn n_hard(&self) -> usize {
        self.n_hard
    }

    pub fn n_soft(&self) -> usize {
        self.len() - self.n_hard
    }

    pub fn is_hard(&self, i: usize) -> bool {
        i < self.n_hard
    }

    /// Text round-trip format: one header line `m c n_hard`, then A
    /// row-major (m lines of c entries), then B on one line.
    /// Whitespace-separated, `.` decimal, locale-independent.
    pub fn to_text(&self) -> String {
        let m = self.input_dim();
        let c = self.len();
        let mut out = format!("{} {} {}\n", m, c, self.n_hard);
        for i in 0..m {
            let row: Vec<String> = (0..c).map(|j| format!("{}", self.a.get(i, j))).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        let brow: Vec<String> = self.b.iter().map(|v| format!("{v}")).collect();
        out.push_str(&brow.join(" "));
        out.push('\n');
        out
    }

    pub fn from_text(text: &str) -> Result<Self, String> {
        let mut tokens = text.split_whitespace();
        let mut next_usize = |name: &str| -> Result<usize, String> {
            tokens
                .next()
                .ok_or_else(|| format!("missing {name}"))?
                .parse::<usize>()
                .map_err(|e| format!("bad {name}: {e}"))
        };
        let m = next_usize("m")?;
        let c = next_usize("c")?;
        let n_hard = next_usize("n_hard")?;
        let mut values = Vec::with_capacity(m * c + c);
        for _ in 0..m * c + c {
            let tok = tokens.next().ok_or("truncated constraint file")?;
            values.push(tok.parse::<f64>().map_err(|e| format!("bad number {tok:?}: {e}"))?);
        }
        if tokens.next().is_some() {
            return Err("trailing tokens after constraint data".into());
        }
        let mut a = Mat::zeros(m, c);
        for i in 0..m {
            for j in 0..c {
                a.set(i, j, values[i * c + j]);
            }
        }
        let b = values[m * c..].to_vec();
        ConstraintSet::new(a, b, n_hard).map_err(|e| e.to_string())
    }
}

/// Enforcement configuration: one bit per constraint, 1 = enforced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    bits: Vec<bool>,
}

impl Configuration {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Configuration { bits }
    }

    pub fn all_ones(c: usize) -> Self {
        Configuration { bits: vec![true; c] }
    }

    /// Hard constraints enforced, every soft constraint disregarded.
    pub fn hard_only(cs: &ConstraintSet) -> Self {
        let mut bits = vec![false; cs.len()];
        for b in bits.iter_mut().take(cs.n_hard()) {
            *b = true;
        }
        Configuration { bits }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn is_enforced(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn set_enforced(&mut self, i: usize, enforced: bool) {
        self.bits[i] = enforced;
    }

    pub fn enforced_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn enforced_indices(&self) -> Vec<usize> {
        (0..self.bits.len()).filter(|&i| self.bits[i]).collect()
    }

    pub fn disregarded_indices(&self) -> Vec<usize> {
        (0..self.bits.len()).filter(|&i| !self.bits[i]).collect()
    }

    /// Every hard constraint of `cs` is enforced.
    pub fn respects_hard(&self, cs: &ConstraintSet) -> bool {
        self.bits.len() == cs.len() && (0..cs.n_hard()).all(|i| self.bits[i])
    }
}

/// Orthonormal basis `N` of ker(A) together with the reduced bound
/// `BA = N^T B`.
///
/// The basis sign and column order are not canonical; all downstream
/// verdicts are invariant to the particular choice.
#[derive(Debug, Clone)]
pub struct NullspaceBasis {
    n: Mat,
    ba: Vec<f64>,
    rank: usize,
}

impl NullspaceBasis {
    /// Wraps an externally supplied basis, recomputing `BA = N^T B`.
    /// Intended for basis-invariance checks; panics when `n` is not
    /// orthonormal or does not annihilate under the caller's `a`.
    pub fn from_matrix(n: Mat, b: &[f64], rank: usize) -> Self {
        assert_eq!(n.rows(), b.len());
        for i in 0..n.cols() {
            for j in 0..n.cols() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (linalg::dot(n.col(i), n.col(j)) - expect).abs() <= TOL_NULL,
                    "supplied basis is not orthonormal"
                );
            }
        }
        let ba = n.tr_matvec(b);
        NullspaceBasis { n, ba, rank }
    }

    /// c x k basis matrix.
    pub fn n(&self) -> &Mat {
        &self.n
    }

    /// Nullity k.
    pub fn k(&self) -> usize {
        self.n.cols()
    }

    pub fn ba(&self) -> &[f64] {
        &self.ba
    }

    /// rank(A) = c - k.
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Row `i` of the basis matrix as a k-vector.
    pub fn row(&self, i: usize) -> Vec<f64> {
        self.n.row(i)
    }
}

/// Orthonormal nullspace basis of `A` by Householder QR with column
/// pivoting of `A^T`; the rank cut is relative to the largest singular
/// value because constraint magnitudes in the benchmark span orders of
/// magnitude. `k = 0` is a valid outcome (c x 0 basis, empty `BA`).
pub fn nullspace_basis(cs: &ConstraintSet) -> NullspaceBasis {
    let at = cs.a().transpose(); // c x m
    let (q, rdiag) = linalg::qr_full_pivoted(&at);
    let sigma_max = linalg::sigma_max(cs.a());
    let tol = TOL_RANK * sigma_max.max(1.0);
    let rank = rdiag.iter().filter(|&&d| d > tol).count();
    let c = cs.len();
    let idx: Vec<usize> = (rank..c).collect();
    let n = q.select_cols(&idx);
    let ba = n.tr_matvec(cs.b());
    NullspaceBasis { n, ba, rank }
}

/// Realizes `diag(P) A^T u <= diag(P) B` by selecting the enforced
/// columns/entries instead of zeroing rows: returns exactly the columns
/// and bounds with `P_i = 1`, in order.
pub fn mask(cs: &ConstraintSet, p: &Configuration) -> (Mat, Vec<f64>) {
    assert_eq!(p.len(), cs.len(), "configuration length must match constraint count");
    let idx = p.enforced_indices();
    let a = cs.a().select_cols(&idx);
    let b = idx.iter().map(|&i| cs.b()[i]).collect();
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot;

    fn simple_pair() -> ConstraintSet {
        // u <= 1 and -u <= 1, i.e. u in [-1, 1]
        ConstraintSet::new(Mat::from_rows(&[vec![1.0, -1.0]]), vec![1.0, 1.0], 0).unwrap()
    }

    #[test]
    fn nullspace_of_opposing_pair() {
        let cs = simple_pair();
        let basis = nullspace_basis(&cs);
        assert_eq!(basis.k(), 1);
        // A * N = 0 and unit norm; sign is not canonical.
        let an = cs.a().matmul(basis.n());
        assert!(an.get(0, 0).abs() < TOL_NULL);
        assert!((dot(basis.n().col(0), basis.n().col(0)) - 1.0).abs() < TOL_NULL);
        assert!((basis.ba()[0].abs() - 2.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn independent_columns_have_trivial_kernel() {
        let cs = ConstraintSet::new(Mat::identity(2), vec![0.3, -0.7], 0).unwrap();
        let basis = nullspace_basis(&cs);
        assert_eq!(basis.k(), 0);
        assert_eq!(basis.rank(), 2);
        assert!(basis.ba().is_empty());
    }

    #[test]
    fn zero_column_spans_kernel() {
        let cs = ConstraintSet::new(
            Mat::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]),
            vec![1.0, 1.0, 1.0],
            0,
        )
        .unwrap();
        let basis = nullspace_basis(&cs);
        assert_eq!(basis.k(), 1);
        let n = basis.n();
        assert!(n.get(0, 0).abs() < 1e-12);
        assert!(n.get(1, 0).abs() < 1e-12);
        assert!((n.get(2, 0).abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mask_all_ones_is_identity() {
        let cs = simple_pair();
        let (a, b) = mask(&cs, &Configuration::all_ones(2));
        assert_eq!(a, *cs.a());
        assert_eq!(b, cs.b());
    }

    #[test]
    fn mask_hard_only_keeps_prefix() {
        let mut a = Mat::zeros(2, 5);
        for j in 0..5 {
            a.set(0, j, j as f64 + 1.0);
            a.set(1, j, -(j as f64));
        }
        let cs = ConstraintSet::new(a, vec![0.0, 1.0, 2.0, 3.0, 4.0], 2).unwrap();
        let (ma, mb) = mask(&cs, &Configuration::hard_only(&cs));
        assert_eq!(ma.cols(), 2);
        assert_eq!(mb, vec![0.0, 1.0]);
        assert_eq!(ma.col(0), cs.a().col(0));
        assert_eq!(ma.col(1), cs.a().col(1));
    }

    #[test]
    fn mask_selects_by_index() {
        let cs = ConstraintSet::new(
            Mat::from_rows(&[vec![1.0, 2.0, 3.0]]),
            vec![10.0, 20.0, 30.0],
            0,
        )
        .unwrap();
        let p = Configuration::from_bits(vec![true, false, true]);
        let (ma, mb) = mask(&cs, &p);
        assert_eq!(ma.cols(), 2);
        assert_eq!(ma.get(0, 0), 1.0);
        assert_eq!(ma.get(0, 1), 3.0);
        assert_eq!(mb, vec![10.0, 30.0]);
    }

    #[test]
    fn text_roundtrip_is_exact() {
        let cs = ConstraintSet::new(
            Mat::from_rows(&[vec![1.5e-3, -2.25, 0.1], vec![40.0, 0.0, -1.0 / 3.0]]),
            vec![1.0, -0.5, 2.5e8],
            1,
        )
        .unwrap();
        let text = cs.to_text();
        let back = ConstraintSet::from_text(&text).unwrap();
        assert_eq!(back, cs);
    }

    #[test]
    fn constructor_rejects_bad_input() {
        assert!(matches!(
            ConstraintSet::new(Mat::zeros(1, 0), vec![], 0),
            Err(ConstraintSetError::Empty)
        ));
        assert!(matches!(
            ConstraintSet::new(Mat::zeros(1, 2), vec![1.0], 0),
            Err(ConstraintSetError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            ConstraintSet::new(Mat::zeros(1, 2), vec![1.0, 2.0], 3),
            Err(ConstraintSetError::HardCountOutOfRange { .. })
        ));
        assert!(matches!(
            ConstraintSet::new(Mat::zeros(1, 1), vec![f64::INFINITY], 0),
            Err(ConstraintSetError::NonFinite)
        ));
    }
}
