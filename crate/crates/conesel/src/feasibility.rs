//! Feasibility certification for affine input constraints.
//!
//! The central fact: `{u : A^T u <= B}` is non-empty iff the reduced
//! system `N^T nu = BA, nu >= 0` over the nullspace basis `N` of `A` is
//! solvable, and a configuration `P` is feasible iff the same equality
//! system is solvable with the sign condition imposed only on the
//! enforced components. The solution vector `nu` doubles as a ranking
//! criterion: small enforced components sit close to the boundary of the
//! membership cone, large-magnitude negative disregarded components are
//! unlikely to be re-enforceable.

use crate::constraints::{mask, nullspace_basis, Configuration, ConstraintSet, NullspaceBasis};
use crate::linalg::{self, Mat};
use crate::lp::{solve_lp, solve_lp_keep_vertex, LpProblem, LpStatus, TOL_FEAS};

/// Verdict of the feasibility check for a configuration, with the
/// certificate vector split into the enforced part (nonnegative by
/// construction) and the disregarded part by sign.
#[derive(Debug, Clone)]
pub struct FeasibilityCertificate {
    pub feasible: bool,
    /// Present iff feasible.
    pub nu: Option<Vec<f64>>,
    /// (index, value) for enforced constraints.
    pub enforced_part: Vec<(usize, f64)>,
    /// (index, value) for disregarded constraints with nu >= 0.
    pub disregarded_pos: Vec<(usize, f64)>,
    /// (index, value) for disregarded constraints with nu < 0.
    pub disregarded_neg: Vec<(usize, f64)>,
    /// The certificate LP had an unbounded objective; the reported `nu`
    /// is a plain feasible point instead of a cost minimizer. Feasibility
    /// of the configuration is unaffected.
    pub objective_unbounded: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfeasibleInput;

impl std::fmt::Display for InfeasibleInput {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "constraint set is infeasible; no polar-cone components exist")
    }
}

impl std::error::Error for InfeasibleInput {}

/// Polar-cone component report for the fully-enforced system.
#[derive(Debug, Clone)]
pub struct PolarConeReport {
    /// Minimum-sum solution of `N^T nu = BA, nu >= 0`.
    pub nu_star: Vec<f64>,
    /// Smallest component of `nu_star`.
    pub nu_min_enforced: f64,
    /// Distance bounds to the membership-cone boundary, when a simplicial
    /// representation is available (k <= 3 and strictly interior).
    pub dist_lower: Option<f64>,
    pub dist_upper: Option<f64>,
}

/// True iff `{u : A^T u <= B}` is non-empty, decided by solvability of
/// `N^T nu = BA, nu >= 0`. With a trivial kernel (k = 0) the answer is
/// unconditionally true.
pub fn farkas_feasible(cs: &ConstraintSet) -> bool {
    let basis = nullspace_basis(cs);
    farkas_feasible_with_basis(cs, &basis)
}

pub fn farkas_feasible_with_basis(cs: &ConstraintSet, basis: &NullspaceBasis) -> bool {
    if basis.k() == 0 {
        return true;
    }
    let p = LpProblem {
        objective: vec![0.0; cs.len()],
        eq_lhs: basis.n().transpose(),
        eq_rhs: basis.ba().to_vec(),
        ineq_lhs: Mat::zeros(0, cs.len()),
        ineq_rhs: vec![],
        var_lower: Some(vec![Some(0.0); cs.len()]),
    };
    let sol = solve_lp(&p).expect("well-formed by construction");
    sol.status == LpStatus::Optimal
}

/// Feasibility check of configuration `p`: solves
/// `min (P - 1/2)^T nu  s.t.  N^T nu = BA, nu_i >= 0 for enforced i`.
///
/// The configuration is feasible iff that system admits any point. When
/// the objective is unbounded below (possible because disregarded
/// components are free and carry negative cost), the configuration is
/// still feasible; a plain feasible point is returned and flagged.
pub fn fc(cs: &ConstraintSet, p: &Configuration) -> FeasibilityCertificate {
    let basis = nullspace_basis(cs);
    fc_with_basis(cs, &basis, p)
}

pub fn fc_with_basis(
    cs: &ConstraintSet,
    basis: &NullspaceBasis,
    p: &Configuration,
) -> FeasibilityCertificate {
    assert!(
        p.respects_hard(cs),
        "configuration must enforce every hard constraint"
    );
    let c = cs.len();
    let objective: Vec<f64> = (0..c)
        .map(|i| if p.is_enforced(i) { 0.5 } else { -0.5 })
        .collect();
    let lower: Vec<Option<f64>> = (0..c)
        .map(|i| if p.is_enforced(i) { Some(0.0) } else { None })
        .collect();
    let problem = LpProblem {
        objective,
        eq_lhs: basis.n().transpose(),
        eq_rhs: basis.ba().to_vec(),
        ineq_lhs: Mat::zeros(0, c),
        ineq_rhs: vec![],
        var_lower: Some(lower),
    };
    let sol = solve_lp_keep_vertex(&problem).expect("well-formed by construction");
    let (nu, objective_unbounded) = match sol.solution.status {
        LpStatus::Infeasible => {
            return FeasibilityCertificate {
                feasible: false,
                nu: None,
                enforced_part: vec![],
                disregarded_pos: vec![],
                disregarded_neg: vec![],
                objective_unbounded: false,
            }
        }
        LpStatus::Optimal => (sol.solution.x.unwrap(), false),
        LpStatus::Unbounded => {
            // Feasible but cost-unbounded. Use the last feasible iterate,
            // advanced along the recession direction just far enough that
            // every component the direction lifts becomes nonnegative:
            // those are exactly the components the cost wanted to grow.
            let mut nu = sol.unbounded_vertex.unwrap();
            let ray = sol.solution.unbounded_ray.unwrap();
            let mut step = 0.0f64;
            for (x, d) in nu.iter().zip(&ray) {
                if *d > 1e-12 && *x < 0.0 {
                    step = step.max(-x / d);
                }
            }
            if step > 0.0 {
                for (x, d) in nu.iter_mut().zip(&ray) {
                    *x += step * d;
                }
            }
            (nu, true)
        }
    };

    let mut enforced_part = vec![];
    let mut disregarded_pos = vec![];
    let mut disregarded_neg = vec![];
    for (i, &v) in nu.iter().enumerate() {
        if p.is_enforced(i) {
            enforced_part.push((i, v));
        } else if v >= 0.0 {
            disregarded_pos.push((i, v));
        } else {
            disregarded_neg.push((i, v));
        }
    }
    FeasibilityCertificate {
        feasible: true,
        nu: Some(nu),
        enforced_part,
        disregarded_pos,
        disregarded_neg,
        objective_unbounded,
    }
}

/// Minimum-sum polar-cone components of the fully-enforced system
/// (`min 1^T nu  s.t.  N^T nu = BA, nu >= 0`), plus distance bounds when
/// a simplicial representation is available.
pub fn polar_components(cs: &ConstraintSet) -> Result<PolarConeReport, InfeasibleInput> {
    let basis = nullspace_basis(cs);
    polar_components_with_basis(cs, &basis)
}

pub fn polar_components_with_basis(
    cs: &ConstraintSet,
    basis: &NullspaceBasis,
) -> Result<PolarConeReport, InfeasibleInput> {
    let c = cs.len();
    let nu_star = if basis.k() == 0 {
        vec![0.0; c]
    } else {
        let p = LpProblem {
            objective: vec![1.0; c],
            eq_lhs: basis.n().transpose(),
            eq_rhs: basis.ba().to_vec(),
            ineq_lhs: Mat::zeros(0, c),
            ineq_rhs: vec![],
            var_lower: Some(vec![Some(0.0); c]),
        };
        let sol = solve_lp(&p).expect("well-formed by construction");
        match sol.status {
            LpStatus::Optimal => sol.x.unwrap(),
            LpStatus::Infeasible => return Err(InfeasibleInput),
            LpStatus::Unbounded => unreachable!("objective bounded below by 0"),
        }
    };
    let nu_min_enforced = nu_star.iter().cloned().fold(f64::INFINITY, f64::min);
    let bounds = simplicial_bounds_with_basis(basis);
    Ok(PolarConeReport {
        nu_star,
        nu_min_enforced,
        dist_lower: bounds.map(|(l, _)| l),
        dist_upper: bounds.map(|(_, u)| u),
    })
}

/// Distance bounds from `BA` to the boundary of the membership cone
/// spanned by the rows of the nullspace basis.
///
/// Available only when the kernel dimension is at most 3 (extreme-ray
/// enumeration is exact at toy dimension only), the cone is pointed and
/// full-dimensional, and `BA` sits strictly inside a simplicial cell.
/// Returns `(sigma_min(G_I) * nu_min, max_j ||g_j|| * nu_min)` over the
/// located cell; generators are unit vectors, so the upper factor is 1.
///
/// The lower bound holds against the true cone boundary. The upper bound
/// certifies the distance to the located cell's own boundary; the two
/// coincide whenever the cone has no more than `k` extreme rays (always
/// the case for k <= 2), while for a triangulated 3-D cone the true
/// boundary can be farther than the cell's internal faces.
pub fn simplicial_bounds(cs: &ConstraintSet) -> Option<(f64, f64)> {
    let basis = nullspace_basis(cs);
    simplicial_bounds_with_basis(&basis)
}

pub fn simplicial_bounds_with_basis(basis: &NullspaceBasis) -> Option<(f64, f64)> {
    let k = basis.k();
    if k == 0 || k > 3 {
        return None;
    }
    let c = basis.n().rows();
    let ba = basis.ba();

    // Unit generators from the basis rows, parallel duplicates removed.
    let mut gens: Vec<Vec<f64>> = vec![];
    for i in 0..c {
        let r = basis.row(i);
        let nrm = linalg::norm2(&r);
        if nrm <= 1e-12 {
            continue;
        }
        let unit: Vec<f64> = r.iter().map(|v| v / nrm).collect();
        if !gens.iter().any(|g| linalg::dot(g, &unit) > 1.0 - 1e-12) {
            gens.push(unit);
        }
    }
    if gens.is_empty() || span_rank(&gens, k) < k {
        return None; // not full-dimensional; no interior
    }
    let w = pointed_direction(&gens, k)?;

    let extreme = match k {
        1 => vec![gens[0].clone()],
        2 => extreme_rays_2d(&gens, &w),
        3 => {
            let e = extreme_rays_lp(&gens);
            if e.len() < 3 {
                return None;
            }
            e
        }
        _ => unreachable!(),
    };

    let cells = triangulate(&extreme, &w, k);
    let mut best: Option<(f64, Mat)> = None;
    for cell in cells {
        let mut g = Mat::zeros(k, k);
        for (j, ray) in cell.iter().enumerate() {
            for i in 0..k {
                g.set(i, j, ray[i]);
            }
        }
        if let Some(nu) = linalg::solve_square(&g, ba, 1e-12) {
            let nu_min = nu.iter().cloned().fold(f64::INFINITY, f64::min);
            if best.as_ref().map_or(true, |(b, _)| nu_min > *b) {
                best = Some((nu_min, g));
            }
        }
    }
    let (nu_min, g) = best?;
    if nu_min <= TOL_FEAS {
        return None; // on or outside the cell boundary
    }
    let m_i = linalg::sigma_min(&g);
    Some((m_i * nu_min, nu_min))
}

/// Rank of the span of `gens` (each of length `k`), by modified
/// Gram-Schmidt with a fixed threshold.
fn span_rank(gens: &[Vec<f64>], k: usize) -> usize {
    let mut basis: Vec<Vec<f64>> = vec![];
    for g in gens {
        let mut v = g.clone();
        for b in &basis {
            let s = linalg::dot(&v, b);
            for i in 0..k {
                v[i] -= s * b[i];
            }
        }
        let nrm = linalg::norm2(&v);
        if nrm > 1e-9 {
            for x in v.iter_mut() {
                *x /= nrm;
            }
            basis.push(v);
            if basis.len() == k {
                break;
            }
        }
    }
    basis.len()
}

/// A direction with strictly positive inner product against every
/// generator, or None when no such direction exists (cone not pointed).
/// Found by maximizing the worst margin over the unit box.
fn pointed_direction(gens: &[Vec<f64>], k: usize) -> Option<Vec<f64>> {
    // Variables (w, t): minimize -t  s.t.  t - g.w <= 0 per generator,
    // |w_j| <= 1.
    let nv = k + 1;
    let mut rows = vec![];
    let mut rhs = vec![];
    for g in gens {
        let mut row = vec![0.0; nv];
        for j in 0..k {
            row[j] = -g[j];
        }
        row[k] = 1.0;
        rows.push(row);
        rhs.push(0.0);
    }
    for j in 0..k {
        let mut row = vec![0.0; nv];
        row[j] = 1.0;
        rows.push(row);
        rhs.push(1.0);
        let mut row = vec![0.0; nv];
        row[j] = -1.0;
        rows.push(row);
        rhs.push(1.0);
    }
    let mut objective = vec![0.0; nv];
    objective[k] = -1.0;
    let p = LpProblem {
        objective,
        eq_lhs: Mat::zeros(0, nv),
        eq_rhs: vec![],
        ineq_lhs: Mat::from_rows(&rows),
        ineq_rhs: rhs,
        var_lower: None,
    };
    let sol = solve_lp(&p).expect("well-formed by construction");
    let x = match sol.status {
        LpStatus::Optimal => sol.x.unwrap(),
        _ => return None,
    };
    let t = x[k];
    if t <= 1e-9 {
        return None;
    }
    let w = x[..k].to_vec();
    let nrm = linalg::norm2(&w);
    Some(w.iter().map(|v| v / nrm).collect())
}

/// Extreme rays of a pointed full-dimensional planar cone: the two
/// angular extremes around the interior direction.
fn extreme_rays_2d(gens: &[Vec<f64>], w: &[f64]) -> Vec<Vec<f64>> {
    let angle = |g: &[f64]| -> f64 {
        let along = g[0] * w[0] + g[1] * w[1];
        let across = -g[0] * w[1] + g[1] * w[0];
        across.atan2(along)
    };
    let mut lo = 0;
    let mut hi = 0;
    for (i, g) in gens.iter().enumerate() {
        if angle(g) < angle(&gens[lo]) {
            lo = i;
        }
        if angle(g) > angle(&gens[hi]) {
            hi = i;
        }
    }
    vec![gens[lo].clone(), gens[hi].clone()]
}

/// Extreme rays by conic redundancy elimination: a generator is extreme
/// iff it is not a nonnegative combination of the others.
fn extreme_rays_lp(gens: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = gens[0].len();
    let mut extreme = vec![];
    for (i, g) in gens.iter().enumerate() {
        let others: Vec<&Vec<f64>> = gens
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, v)| v)
            .collect();
        if others.is_empty() {
            extreme.push(g.clone());
            continue;
        }
        let mut eq = Mat::zeros(k, others.len());
        for (col, o) in others.iter().enumerate() {
            for row in 0..k {
                eq.set(row, col, o[row]);
            }
        }
        let p = LpProblem {
            objective: vec![0.0; others.len()],
            eq_lhs: eq,
            eq_rhs: g.clone(),
            ineq_lhs: Mat::zeros(0, others.len()),
            ineq_rhs: vec![],
            var_lower: Some(vec![Some(0.0); others.len()]),
        };
        let sol = solve_lp(&p).expect("well-formed by construction");
        if sol.status == LpStatus::Infeasible {
            extreme.push(g.clone());
        }
    }
    extreme
}

/// Splits the cone over its extreme rays into simplicial cells.
fn triangulate(extreme: &[Vec<f64>], w: &[f64], k: usize) -> Vec<Vec<Vec<f64>>> {
    match k {
        1 => vec![vec![extreme[0].clone()]],
        2 => {
            let mut rays = extreme.to_vec();
            let angle = |g: &Vec<f64>| -> f64 {
                let along = g[0] * w[0] + g[1] * w[1];
                let across = -g[0] * w[1] + g[1] * w[0];
                across.atan2(along)
            };
            rays.sort_by(|a, b| angle(a).partial_cmp(&angle(b)).unwrap());
            (0..rays.len().saturating_sub(1))
                .map(|j| vec![rays[j].clone(), rays[j + 1].clone()])
                .collect()
        }
        3 => {
            // Cross-section polygon on the plane w.x = 1, fan-triangulated.
            let (e1, e2) = plane_frame(w);
            let mut keyed: Vec<(f64, usize)> = vec![];
            let mut centroid = [0.0f64; 2];
            let mut coords = vec![];
            for g in extreme {
                let s = linalg::dot(g, w);
                let p: Vec<f64> = g.iter().map(|v| v / s).collect();
                let x = linalg::dot(&p, &e1);
                let y = linalg::dot(&p, &e2);
                centroid[0] += x;
                centroid[1] += y;
                coords.push((x, y));
            }
            centroid[0] /= extreme.len() as f64;
            centroid[1] /= extreme.len() as f64;
            for (i, (x, y)) in coords.iter().enumerate() {
                keyed.push(((y - centroid[1]).atan2(x - centroid[0]), i));
            }
            keyed.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let order: Vec<usize> = keyed.into_iter().map(|(_, i)| i).collect();
            (1..order.len().saturating_sub(1))
                .map(|j| {
                    vec![
                        extreme[order[0]].clone(),
                        extreme[order[j]].clone(),
                        extreme[order[j + 1]].clone(),
                    ]
                })
                .collect()
        }
        _ => unreachable!(),
    }
}

/// Orthonormal frame of the plane orthogonal to unit `w` in R^3.
fn plane_frame(w: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let pick = if w[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let mut e1: Vec<f64> = (0..3).map(|i| pick[i] - linalg::dot(&pick, w) * w[i]).collect();
    let n1 = linalg::norm2(&e1);
    for v in e1.iter_mut() {
        *v /= n1;
    }
    let e2 = vec![
        w[1] * e1[2] - w[2] * e1[1],
        w[2] * e1[0] - w[0] * e1[2],
        w[0] * e1[1] - w[1] * e1[0],
    ];
    (e1, e2)
}

/// Every enforced constraint of `p` holds at `u` within `tol`.
pub fn enforced_residual_ok(cs: &ConstraintSet, p: &Configuration, u: &[f64], tol: f64) -> bool {
    let (a, b) = mask(cs, p);
    (0..b.len()).all(|i| linalg::dot(a.col(i), u) <= b[i] + tol)
}
