//! Dense linear programming with exact status classification, and a small
//! exact projection QP.
//!
//! The solver is a two-phase tableau simplex with Bland's anti-cycling
//! rule. Speed is a non-goal: problems in this crate stay small (at most
//! a few hundred variables), while the Optimal / Infeasible / Unbounded
//! trichotomy must be trustworthy because every feasibility verdict in
//! the crate reduces to it. Ties in pivot selection are broken by lowest
//! index, which also makes the solver deterministic: identical inputs
//! produce bit-identical outputs.

use crate::linalg::{dot, solve_square, Mat};

/// Absolute tolerance on constraint residuals.
pub const TOL_FEAS: f64 = 1e-8;

const TOL_RC: f64 = 1e-9;
const TOL_PIVOT: f64 = 1e-9;
const MAX_ITER: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// minimize `objective . x`
/// subject to `eq_lhs x = eq_rhs`, `ineq_lhs x <= ineq_rhs`, and
/// optional per-variable lower bounds (`None` entry = free variable).
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub eq_lhs: Mat,
    pub eq_rhs: Vec<f64>,
    pub ineq_lhs: Mat,
    pub ineq_rhs: Vec<f64>,
    pub var_lower: Option<Vec<Option<f64>>>,
}

impl LpProblem {
    /// Problem with no constraints at all over `n` free variables.
    pub fn unconstrained(objective: Vec<f64>) -> Self {
        let n = objective.len();
        LpProblem {
            objective,
            eq_lhs: Mat::zeros(0, n),
            eq_rhs: vec![],
            ineq_lhs: Mat::zeros(0, n),
            ineq_rhs: vec![],
            var_lower: None,
        }
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.objective.len();
        if self.eq_lhs.cols() != n || self.ineq_lhs.cols() != n {
            return Err(LpError::DimensionMismatch(
                "constraint matrices must have one column per variable".into(),
            ));
        }
        if self.eq_lhs.rows() != self.eq_rhs.len() || self.ineq_lhs.rows() != self.ineq_rhs.len() {
            return Err(LpError::DimensionMismatch(
                "right-hand sides must match constraint row counts".into(),
            ));
        }
        if let Some(lb) = &self.var_lower {
            if lb.len() != n {
                return Err(LpError::DimensionMismatch(
                    "var_lower must have one entry per variable".into(),
                ));
            }
            if lb.iter().flatten().any(|v| !v.is_finite()) {
                return Err(LpError::NonFinite);
            }
        }
        let finite = self.objective.iter().all(|v| v.is_finite())
            && self.eq_rhs.iter().all(|v| v.is_finite())
            && self.ineq_rhs.iter().all(|v| v.is_finite())
            && self.eq_lhs.is_finite()
            && self.ineq_lhs.is_finite();
        if !finite {
            return Err(LpError::NonFinite);
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Present iff `status == Optimal`.
    pub x: Option<Vec<f64>>,
    /// Present iff `status == Optimal`.
    pub objective_value: Option<f64>,
    /// Present iff `status == Unbounded`: a feasible direction along which
    /// the objective strictly decreases.
    pub unbounded_ray: Option<Vec<f64>>,
}

/// `LpSolution` plus the dual multipliers of the original rows and, for
/// unbounded problems, the feasible vertex at which the recession
/// direction was detected.
///
/// `ineq_duals[r] >= 0` is the multiplier of row r of `ineq_lhs x <= ineq_rhs`;
/// `eq_duals` carries free sign. Rows detected as redundant get multiplier 0.
#[derive(Debug, Clone)]
pub struct LpSolutionDetailed {
    pub solution: LpSolution,
    pub eq_duals: Option<Vec<f64>>,
    pub ineq_duals: Option<Vec<f64>>,
    /// Present iff `status == Unbounded`: the last feasible iterate.
    pub unbounded_vertex: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpError {
    DimensionMismatch(String),
    NonFinite,
}

impl std::fmt::Display for LpError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LpError::DimensionMismatch(msg) => write!(f, "dimension mismatch: {msg}"),
            LpError::NonFinite => write!(f, "non-finite entry in problem data"),
        }
    }
}

impl std::error::Error for LpError {}

/// Exactly classifies `p` and returns a vertex solution when Optimal.
///
/// An all-zero objective is a pure feasibility solve: the solver stops at
/// the phase-1 vertex.
pub fn solve_lp(p: &LpProblem) -> Result<LpSolution, LpError> {
    Ok(solve_lp_detailed(p, false)?.solution)
}

/// As `solve_lp` but also extracts row duals when the status is Optimal.
pub fn solve_lp_with_duals(p: &LpProblem) -> Result<LpSolutionDetailed, LpError> {
    solve_lp_detailed(p, true)
}

/// As `solve_lp` but keeps the last feasible iterate when the problem is
/// unbounded.
pub fn solve_lp_keep_vertex(p: &LpProblem) -> Result<LpSolutionDetailed, LpError> {
    solve_lp_detailed(p, false)
}

// --- standard-form conversion -------------------------------------------

// Internal standard form: min ctilde.z  s.t.  atilde z = btilde, z >= 0.
struct Standard {
    ncols: usize, // structural columns (split vars + slacks)
    nrows: usize,
    // column-major structural matrix, rows already sign-flipped so b >= 0
    cols: Vec<Vec<f64>>,
    b: Vec<f64>,
    cost: Vec<f64>,
    // mapping back to original variables
    var_map: Vec<VarMap>,
    row_sign: Vec<f64>, // sign applied to each row (eq rows first, then ineq rows)
}

enum VarMap {
    Shifted { col: usize, lower: f64 },
    Free { pos: usize, neg: usize },
}

fn standardize(p: &LpProblem) -> Standard {
    let n = p.objective.len();
    let p_eq = p.eq_lhs.rows();
    let q = p.ineq_lhs.rows();
    let nrows = p_eq + q;

    let mut var_map = Vec::with_capacity(n);
    let mut ncols = 0usize;
    for j in 0..n {
        let lb = p.var_lower.as_ref().and_then(|v| v[j]);
        match lb {
            Some(l) => {
                var_map.push(VarMap::Shifted { col: ncols, lower: l });
                ncols += 1;
            }
            None => {
                var_map.push(VarMap::Free { pos: ncols, neg: ncols + 1 });
                ncols += 2;
            }
        }
    }
    let slack_base = ncols;
    ncols += q;

    let mut cols = vec![vec![0.0; nrows]; ncols];
    let mut b = vec![0.0; nrows];
    let mut cost = vec![0.0; ncols];

    for (j, vm) in var_map.iter().enumerate() {
        let coef = p.objective[j];
        match vm {
            VarMap::Shifted { col, .. } => {
                cost[*col] = coef;
            }
            VarMap::Free { pos, neg } => {
                cost[*pos] = coef;
                cost[*neg] = -coef;
            }
        }
    }

    // Fill rows: eq rows 0..p_eq, ineq rows p_eq..
    for r in 0..nrows {
        let (row_vals, rhs) = if r < p_eq {
            (p.eq_lhs.row(r), p.eq_rhs[r])
        } else {
            (p.ineq_lhs.row(r - p_eq), p.ineq_rhs[r - p_eq])
        };
        let mut bval = rhs;
        for (j, vm) in var_map.iter().enumerate() {
            let a = row_vals[j];
            if a == 0.0 {
                continue;
            }
            match vm {
                VarMap::Shifted { col, lower } => {
                    cols[*col][r] = a;
                    bval -= a * lower;
                }
                VarMap::Free { pos, neg } => {
                    cols[*pos][r] = a;
                    cols[*neg][r] = -a;
                }
            }
        }
        if r >= p_eq {
            cols[slack_base + (r - p_eq)][r] = 1.0;
        }
        b[r] = bval;
    }

    // Flip rows to make b nonnegative.
    let mut row_sign = vec![1.0; nrows];
    for r in 0..nrows {
        if b[r] < 0.0 {
            row_sign[r] = -1.0;
            b[r] = -b[r];
            for col in cols.iter_mut() {
                col[r] = -col[r];
            }
        }
    }

    Standard { ncols, nrows, cols, b, cost, var_map, row_sign }
}

// --- tableau simplex ------------------------------------------------------

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    // surviving original row index per tableau row (rows may be deleted as redundant)
    row_ids: Vec<usize>,
}

enum PhaseOutcome {
    Done,
    Unbounded { entering: usize },
}

impl Tableau {
    fn pivot(&mut self, r: usize, jin: usize, cost: &mut [f64], cost_rhs: &mut f64) {
        let piv = self.rows[r][jin];
        let row = &mut self.rows[r];
        for v in row.iter_mut() {
            *v /= piv;
        }
        self.rhs[r] /= piv;
        row[jin] = 1.0;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r];
        for (i, row_i) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row_i[jin];
            if f != 0.0 {
                for (v, pv) in row_i.iter_mut().zip(pivot_row.iter()) {
                    *v -= f * pv;
                }
                row_i[jin] = 0.0;
                self.rhs[i] -= f * pivot_rhs;
            }
        }
        let f = cost[jin];
        if f != 0.0 {
            for (v, pv) in cost.iter_mut().zip(pivot_row.iter()) {
                *v -= f * pv;
            }
            cost[jin] = 0.0;
            *cost_rhs -= f * pivot_rhs;
        }
        self.basis[r] = jin;
    }

    /// Bland's rule: entering = lowest-index column with negative reduced
    /// cost; leaving = lowest basis index among minimum-ratio rows.
    fn run(&mut self, cost: &mut [f64], cost_rhs: &mut f64, allowed: usize) -> PhaseOutcome {
        for _ in 0..MAX_ITER {
            let mut entering = None;
            for j in 0..allowed {
                if cost[j] < -TOL_RC {
                    entering = Some(j);
                    break;
                }
            }
            let jin = match entering {
                None => return PhaseOutcome::Done,
                Some(j) => j,
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][jin];
                if a > TOL_PIVOT {
                    let ratio = self.rhs[r].max(0.0) / a;
                    match leave {
                        None => leave = Some((r, ratio)),
                        Some((br, bratio)) => {
                            if ratio < bratio - 1e-12
                                || ((ratio - bratio).abs() <= 1e-12
                                    && self.basis[r] < self.basis[br])
                            {
                                leave = Some((r, ratio));
                            }
                        }
                    }
                }
            }
            match leave {
                None => return PhaseOutcome::Unbounded { entering: jin },
                Some((r, _)) => self.pivot(r, jin, cost, cost_rhs),
            }
        }
        panic!("simplex iteration cap exceeded; Bland's rule should prevent cycling");
    }
}

fn solve_lp_detailed(p: &LpProblem, want_duals: bool) -> Result<LpSolutionDetailed, LpError> {
    p.validate()?;
    let std_form = standardize(p);
    let nrows = std_form.nrows;
    let nstruct = std_form.ncols;
    let width = nstruct + nrows;

    let mut t = Tableau {
        rows: Vec::with_capacity(nrows),
        rhs: std_form.b.clone(),
        basis: (0..nrows).map(|r| nstruct + r).collect(),
        row_ids: (0..nrows).collect(),
    };
    for r in 0..nrows {
        let mut row = vec![0.0; width];
        for (j, col) in std_form.cols.iter().enumerate() {
            row[j] = col[r];
        }
        row[nstruct + r] = 1.0; // artificial
        t.rows.push(row);
    }

    // Phase 1: minimize the artificial sum.
    let mut cost1 = vec![0.0; width];
    let mut cost_rhs1 = 0.0;
    for j in 0..nstruct {
        let mut s = 0.0;
        for r in 0..nrows {
            s += t.rows[r][j];
        }
        cost1[j] = -s;
    }
    for r in 0..nrows {
        cost_rhs1 -= t.rhs[r];
    }
    match t.run(&mut cost1, &mut cost_rhs1, width) {
        PhaseOutcome::Done => {}
        PhaseOutcome::Unbounded { .. } => unreachable!("phase-1 objective is bounded below by 0"),
    }
    let infeas = -cost_rhs1; // artificial sum at phase-1 optimum
    if infeas > TOL_FEAS {
        return Ok(LpSolutionDetailed {
            solution: LpSolution {
                status: LpStatus::Infeasible,
                x: None,
                objective_value: None,
                unbounded_ray: None,
            },
            eq_duals: None,
            ineq_duals: None,
            unbounded_vertex: None,
        });
    }

    // Drive leftover artificials out of the basis; delete redundant rows.
    let mut r = 0;
    while r < t.rows.len() {
        if t.basis[r] >= nstruct {
            let mut best: Option<(usize, f64)> = None;
            for j in 0..nstruct {
                let a = t.rows[r][j].abs();
                if a > 1e-7 && best.map_or(true, |(_, ba)| a > ba) {
                    best = Some((j, a));
                }
            }
            match best {
                Some((j, _)) => {
                    let mut dummy_rhs = 0.0;
                    let mut dummy_cost = vec![0.0; width];
                    t.pivot(r, j, &mut dummy_cost, &mut dummy_rhs);
                }
                None => {
                    // Redundant constraint row.
                    t.rows.remove(r);
                    t.rhs.remove(r);
                    t.basis.remove(r);
                    t.row_ids.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }

    // Phase 2 over the true cost, artificial columns barred from entering.
    let mut cost2 = vec![0.0; width];
    cost2[..nstruct].copy_from_slice(&std_form.cost);
    let mut cost_rhs2 = 0.0;
    for r in 0..t.rows.len() {
        let bj = t.basis[r];
        let cb = if bj < nstruct { std_form.cost[bj] } else { 0.0 };
        if cb != 0.0 {
            for j in 0..width {
                cost2[j] -= cb * t.rows[r][j];
            }
            cost_rhs2 -= cb * t.rhs[r];
        }
    }
    // Basic columns are unit vectors, so the loop above already zeroed
    // their reduced costs; clean residual noise to keep them out of the
    // entering scan.
    for r in 0..t.rows.len() {
        cost2[t.basis[r]] = 0.0;
    }

    match t.run(&mut cost2, &mut cost_rhs2, nstruct) {
        PhaseOutcome::Done => {
            let z = extract_x(&t, &std_form);
            let x = destandardize(&z, &std_form);
            let obj = dot(&p.objective, &x);
            let (eq_duals, ineq_duals) = if want_duals {
                let (e, i) = extract_duals(&t, &std_form, p);
                (Some(e), Some(i))
            } else {
                (None, None)
            };
            Ok(LpSolutionDetailed {
                solution: LpSolution {
                    status: LpStatus::Optimal,
                    x: Some(x),
                    objective_value: Some(obj),
                    unbounded_ray: None,
                },
                eq_duals,
                ineq_duals,
                unbounded_vertex: None,
            })
        }
        PhaseOutcome::Unbounded { entering } => {
            let ray = extract_ray(&t, &std_form, entering);
            let z = extract_x(&t, &std_form);
            let vertex = destandardize(&z, &std_form);
            Ok(LpSolutionDetailed {
                solution: LpSolution {
                    status: LpStatus::Unbounded,
                    x: None,
                    objective_value: None,
                    unbounded_ray: Some(ray),
                },
                eq_duals: None,
                ineq_duals: None,
                unbounded_vertex: Some(vertex),
            })
        }
    }
}

fn extract_x(t: &Tableau, s: &Standard) -> Vec<f64> {
    let mut z = vec![0.0; s.ncols];
    for (r, &bj) in t.basis.iter().enumerate() {
        if bj < s.ncols {
            z[bj] = t.rhs[r].max(0.0);
        }
    }
    z
}

fn destandardize(z: &[f64], s: &Standard) -> Vec<f64> {
    s.var_map
        .iter()
        .map(|vm| match vm {
            VarMap::Shifted { col, lower } => lower + z[*col],
            VarMap::Free { pos, neg } => z[*pos] - z[*neg],
        })
        .collect()
}

fn extract_ray(t: &Tableau, s: &Standard, entering: usize) -> Vec<f64> {
    let mut dz = vec![0.0; s.ncols];
    if entering < s.ncols {
        dz[entering] = 1.0;
    }
    for (r, &bj) in t.basis.iter().enumerate() {
        if bj < s.ncols {
            dz[bj] = -t.rows[r][entering];
        }
    }
    let mut dx: Vec<f64> = s
        .var_map
        .iter()
        .map(|vm| match vm {
            VarMap::Shifted { col, .. } => dz[*col],
            VarMap::Free { pos, neg } => dz[*pos] - dz[*neg],
        })
        .collect();
    let scale = dx.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale > 0.0 {
        for v in dx.iter_mut() {
            *v /= scale;
        }
    }
    dx
}

fn extract_duals(t: &Tableau, s: &Standard, p: &LpProblem) -> (Vec<f64>, Vec<f64>) {
    let m_live = t.rows.len();
    // Solve B^T y = c_B against the standardized (sign-flipped) matrix.
    let mut bt = Mat::zeros(m_live, m_live);
    let mut cb = vec![0.0; m_live];
    for (k, &bj) in t.basis.iter().enumerate() {
        cb[k] = if bj < s.ncols { s.cost[bj] } else { 0.0 };
        for (i, &orig_row) in t.row_ids.iter().enumerate() {
            let a = if bj < s.ncols { s.cols[bj][orig_row] } else { 0.0 };
            bt.set(k, i, a);
        }
    }
    let y_live = solve_square(&bt, &cb, 0.0).expect("optimal basis must be nonsingular");
    let mut y = vec![0.0; s.nrows];
    for (i, &orig_row) in t.row_ids.iter().enumerate() {
        y[orig_row] = y_live[i];
    }
    let p_eq = p.eq_lhs.rows();
    let eq_duals: Vec<f64> = (0..p_eq).map(|r| -s.row_sign[r] * y[r]).collect();
    let ineq_duals: Vec<f64> = (0..p.ineq_lhs.rows())
        .map(|r| (-s.row_sign[p_eq + r] * y[p_eq + r]).max(0.0))
        .collect();
    (eq_duals, ineq_duals)
}

// --- min-norm projection QP ------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QpInfeasible;

impl std::fmt::Display for QpInfeasible {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "projection target polyhedron is empty")
    }
}

impl std::error::Error for QpInfeasible {}

/// Euclidean projection of `u_ref` onto `{u : a_cols^T u <= b}` by exact
/// active-set enumeration; `a_cols` is m x q with one column per
/// constraint and m <= 3.
///
/// Every constraint subset of size <= m is tried as a candidate active
/// set; the feasible KKT point of least cost wins. Subsets are visited in
/// a fixed order and ties keep the first winner, so the result is
/// deterministic.
pub fn solve_min_norm_qp(u_ref: &[f64], a_cols: &Mat, b: &[f64]) -> Result<Vec<f64>, QpInfeasible> {
    let m = u_ref.len();
    assert!(m <= 3, "projection QP only supports up to 3 input dimensions");
    assert_eq!(a_cols.rows(), m);
    assert_eq!(a_cols.cols(), b.len());
    let q = b.len();

    let mut best: Option<(f64, Vec<f64>)> = None;
    let consider = |subset: &[usize], best: &mut Option<(f64, Vec<f64>)>| {
        if let Some(u) = kkt_candidate(u_ref, a_cols, b, subset) {
            if feasible_point(&u, a_cols, b) {
                let cost = u
                    .iter()
                    .zip(u_ref.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>();
                if best.as_ref().map_or(true, |(bc, _)| cost < *bc) {
                    *best = Some((cost, u));
                }
            }
        }
    };

    consider(&[], &mut best);
    if m >= 1 {
        for i in 0..q {
            consider(&[i], &mut best);
        }
    }
    if m >= 2 {
        for i in 0..q {
            for j in (i + 1)..q {
                consider(&[i, j], &mut best);
            }
        }
    }
    if m >= 3 {
        for i in 0..q {
            for j in (i + 1)..q {
                for k in (j + 1)..q {
                    consider(&[i, j, k], &mut best);
                }
            }
        }
    }

    match best {
        Some((_, u)) => Ok(u),
        None => Err(QpInfeasible),
    }
}

/// KKT point for active set `subset`: u = u_ref - (1/2) A_S lambda with
/// A_S^T u = b_S and lambda >= 0. Returns None when the subset is
/// linearly dependent or some multiplier is negative.
fn kkt_candidate(u_ref: &[f64], a_cols: &Mat, b: &[f64], subset: &[usize]) -> Option<Vec<f64>> {
    let s = subset.len();
    if s == 0 {
        return Some(u_ref.to_vec());
    }
    let mut gram = Mat::zeros(s, s);
    let mut rhs = vec![0.0; s];
    for (ii, &ci) in subset.iter().enumerate() {
        for (jj, &cj) in subset.iter().enumerate() {
            gram.set(ii, jj, dot(a_cols.col(ci), a_cols.col(cj)));
        }
        rhs[ii] = 2.0 * (dot(a_cols.col(ci), u_ref) - b[ci]);
    }
    let scale = (0..s).map(|i| gram.get(i, i)).fold(0.0f64, f64::max);
    let lambda = solve_square(&gram, &rhs, 1e-12 * scale.max(1.0))?;
    if lambda.iter().any(|&l| l < -1e-9) {
        return None;
    }
    let mut u = u_ref.to_vec();
    for (ii, &ci) in subset.iter().enumerate() {
        let col = a_cols.col(ci);
        for d in 0..u.len() {
            u[d] -= 0.5 * lambda[ii] * col[d];
        }
    }
    Some(u)
}

fn feasible_point(u: &[f64], a_cols: &Mat, b: &[f64]) -> bool {
    (0..b.len()).all(|i| dot(a_cols.col(i), u) <= b[i] + TOL_FEAS)
}
