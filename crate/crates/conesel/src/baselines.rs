//! Comparison heuristics built on a slacked (elastic) LP.
//!
//! Both baselines decide feasibility by minimizing total constraint
//! slack over the enforced soft rows while holding the hard rows exact.
//! Baseline 1 greedily drops the soft constraint whose removal shrinks
//! the re-solved total slack the most. Baseline 2 ranks enforced soft
//! constraints by their previous-step multipliers and drops the largest
//! first, after reintroducing everything that was disregarded (their
//! multipliers reset to zero).
//!
//! Neither source algorithm is fully specified by a one-line citation;
//! these are faithful reconstructions of the described structure, meant
//! to reproduce comparative trends rather than per-step decisions.

use crate::constraints::{Configuration, ConstraintSet};
use crate::linalg::Mat;
use crate::lp::{solve_lp_with_duals, LpProblem, LpStatus, TOL_FEAS};
use crate::selection::HardInfeasibleError;

/// Outcome of the elastic feasibility solve for one configuration.
#[derive(Debug, Clone)]
pub struct SlackReport {
    /// True iff the masked system is non-empty (elastic optimum within
    /// `TOL_FEAS`).
    pub feasible: bool,
    /// Optimal slack per soft constraint, indexed by soft position
    /// (constraint `n_hard + j`); disregarded entries are zero.
    pub slacks: Vec<f64>,
    pub total_slack: f64,
}

struct Elastic {
    total: f64,
    /// Slack per soft position; zero for disregarded rows.
    slacks: Vec<f64>,
    /// Multiplier per constraint index; zero for disregarded rows.
    duals: Vec<f64>,
}

/// minimize sum(s) s.t. A_i.u <= B_i + s_i (enforced soft),
/// A_i.u <= B_i (hard), s >= 0.
fn elastic_solve(cs: &ConstraintSet, p: &Configuration) -> Result<Elastic, HardInfeasibleError> {
    assert!(p.respects_hard(cs), "configuration must enforce every hard constraint");
    let m = cs.input_dim();
    let soft_enforced: Vec<usize> = (cs.n_hard()..cs.len()).filter(|&i| p.is_enforced(i)).collect();
    let ns = soft_enforced.len();
    let nv = m + ns;

    // Row order: hard rows in index order, then enforced soft rows.
    let mut rows = Vec::with_capacity(cs.n_hard() + ns);
    let mut rhs = Vec::with_capacity(cs.n_hard() + ns);
    let mut row_constraint = Vec::with_capacity(cs.n_hard() + ns);
    for i in 0..cs.n_hard() {
        let mut row = vec![0.0; nv];
        row[..m].copy_from_slice(cs.a().col(i));
        rows.push(row);
        rhs.push(cs.b()[i]);
        row_constraint.push(i);
    }
    for (j, &i) in soft_enforced.iter().enumerate() {
        let mut row = vec![0.0; nv];
        row[..m].copy_from_slice(cs.a().col(i));
        row[m + j] = -1.0;
        rows.push(row);
        rhs.push(cs.b()[i]);
        row_constraint.push(i);
    }

    let mut objective = vec![0.0; nv];
    for j in 0..ns {
        objective[m + j] = 1.0;
    }
    let mut lower = vec![None; nv];
    for j in 0..ns {
        lower[m + j] = Some(0.0);
    }
    let ineq_lhs = if rows.is_empty() { Mat::zeros(0, nv) } else { Mat::from_rows(&rows) };
    let problem = LpProblem {
        objective,
        eq_lhs: Mat::zeros(0, nv),
        eq_rhs: vec![],
        ineq_lhs,
        ineq_rhs: rhs,
        var_lower: Some(lower),
    };
    let sol = solve_lp_with_duals(&problem).expect("well-formed by construction");
    match sol.solution.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(HardInfeasibleError),
        LpStatus::Unbounded => unreachable!("slack objective is bounded below by 0"),
    }
    let x = sol.solution.x.unwrap();
    let mut slacks = vec![0.0; cs.n_soft()];
    for (j, &i) in soft_enforced.iter().enumerate() {
        slacks[i - cs.n_hard()] = x[m + j].max(0.0);
    }
    let total = sol.solution.objective_value.unwrap().max(0.0);
    let row_duals = sol.ineq_duals.unwrap();
    let mut duals = vec![0.0; cs.len()];
    for (r, &i) in row_constraint.iter().enumerate() {
        duals[i] = row_duals[r];
    }
    Ok(Elastic { total, slacks, duals })
}

/// Elastic feasibility check of `(cs, p)`.
pub fn slack_feasible(
    cs: &ConstraintSet,
    p: &Configuration,
) -> Result<SlackReport, HardInfeasibleError> {
    let e = elastic_solve(cs, p)?;
    Ok(SlackReport {
        feasible: e.total <= TOL_FEAS,
        slacks: e.slacks,
        total_slack: e.total,
    })
}

/// Greedy elastic constraint dropping: while the elastic optimum is
/// positive, drop the positive-slack soft constraint whose removal
/// minimizes the re-solved total slack (ties by lower index).
pub fn baseline1_select(cs: &ConstraintSet) -> Result<Configuration, HardInfeasibleError> {
    let mut p = Configuration::all_ones(cs.len());
    loop {
        let e = elastic_solve(cs, &p)?;
        if e.total <= TOL_FEAS {
            return Ok(p);
        }
        let cands: Vec<usize> = (cs.n_hard()..cs.len())
            .filter(|&i| p.is_enforced(i) && e.slacks[i - cs.n_hard()] > 1e-12)
            .collect();
        if cands.is_empty() {
            // Residual slack is numerical noise spread below threshold.
            return Ok(p);
        }
        let mut best: Option<(f64, usize)> = None;
        for &j in &cands {
            let mut q = p.clone();
            q.set_enforced(j, false);
            let t = elastic_solve(cs, &q)?.total;
            if best.map_or(true, |(bt, _)| t < bt) {
                best = Some((t, j));
            }
        }
        let (_, drop) = best.unwrap();
        p.set_enforced(drop, false);
    }
}

/// Multiplier-ranked dropping with reintroduction: all soft constraints
/// come back each step (reset multipliers for previously disregarded
/// ones), then enforced soft constraints are dropped largest-previous-
/// multiplier-first until the elastic check passes.
///
/// Returns the feasible configuration together with the multipliers of
/// the final elastic solve, to be threaded into the next step.
pub fn baseline2_select(
    cs: &ConstraintSet,
    p_prev: &Configuration,
    lm_prev: &[f64],
) -> Result<(Configuration, Vec<f64>), HardInfeasibleError> {
    assert_eq!(p_prev.len(), cs.len());
    assert_eq!(lm_prev.len(), cs.len());
    let lm: Vec<f64> = (0..cs.len())
        .map(|i| if p_prev.is_enforced(i) { lm_prev[i] } else { 0.0 })
        .collect();
    let mut p = Configuration::all_ones(cs.len());
    loop {
        let e = elastic_solve(cs, &p)?;
        if e.total <= TOL_FEAS {
            return Ok((p, e.duals));
        }
        let mut drop: Option<usize> = None;
        for i in cs.n_hard()..cs.len() {
            if p.is_enforced(i) && drop.map_or(true, |d| lm[i] > lm[d]) {
                drop = Some(i);
            }
        }
        let drop = drop.expect("positive slack implies an enforced soft constraint");
        p.set_enforced(drop, false);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feasibility::fc;

    fn cs(rows: &[Vec<f64>], b: &[f64], n_hard: usize) -> ConstraintSet {
        ConstraintSet::new(Mat::from_rows(rows), b.to_vec(), n_hard).unwrap()
    }

    #[test]
    fn zero_slack_on_feasible_system() {
        let set = cs(&[vec![1.0, -1.0]], &[1.0, 1.0], 0);
        let rep = slack_feasible(&set, &Configuration::all_ones(2)).unwrap();
        assert!(rep.feasible);
        assert!(rep.total_slack.abs() <= TOL_FEAS);
    }

    #[test]
    fn slack_optimum_matches_line_search() {
        // u <= -1 and u >= 1, both soft: the elastic optimum is 2.
        let set = cs(&[vec![1.0, -1.0]], &[-1.0, -1.0], 0);
        let rep = slack_feasible(&set, &Configuration::all_ones(2)).unwrap();
        assert!(!rep.feasible);
        assert!((rep.total_slack - 2.0).abs() < 1e-8);

        // 1-D line search over u at 1e-4 resolution.
        let mut best = f64::INFINITY;
        let mut u = -10.0;
        while u <= 10.0 {
            let t = (u + 1.0f64).max(0.0) + (1.0 - u).max(0.0);
            best = best.min(t);
            u += 1e-4;
        }
        assert!((rep.total_slack - best).abs() < 1e-3);
    }

    #[test]
    fn total_slack_invariant_under_soft_reordering() {
        let a = cs(&[vec![1.0, -1.0, 0.3], vec![0.2, 0.1, -1.0]], &[-0.5, -0.4, 0.7], 1);
        let b = cs(&[vec![1.0, 0.3, -1.0], vec![0.2, -1.0, 0.1]], &[-0.5, 0.7, -0.4], 1);
        let ta = slack_feasible(&a, &Configuration::all_ones(3)).unwrap().total_slack;
        let tb = slack_feasible(&b, &Configuration::all_ones(3)).unwrap().total_slack;
        assert!((ta - tb).abs() < 1e-9);
    }

    #[test]
    fn baseline1_keeps_compatible_sets_whole() {
        let set = cs(&[vec![1.0, -1.0, 0.5]], &[1.0, 1.0, 2.0], 0);
        let p = baseline1_select(&set).unwrap();
        assert_eq!(p.enforced_count(), 3);
    }

    #[test]
    fn baseline1_drops_one_of_exclusive_pair() {
        // u <= 1 (hard); u >= 0 (soft); u <= -2 (soft).
        let set = cs(&[vec![1.0, -1.0, 1.0]], &[1.0, 0.0, -2.0], 1);
        let p = baseline1_select(&set).unwrap();
        assert!(p.is_enforced(0));
        assert_eq!([1, 2].iter().filter(|&&i| p.is_enforced(i)).count(), 1);
        assert!(fc(&set, &p).feasible);
    }

    #[test]
    fn baseline2_is_fixed_point_when_compatible() {
        let set = cs(&[vec![1.0, -1.0]], &[1.0, 1.0], 0);
        let all = Configuration::all_ones(2);
        let (p, lm) = baseline2_select(&set, &all, &[0.0, 0.0]).unwrap();
        assert_eq!(p, all);
        let (p2, _) = baseline2_select(&set, &p, &lm).unwrap();
        assert_eq!(p2, all);
    }

    #[test]
    fn baseline2_drops_dominant_multiplier_first() {
        // u >= 0 (soft) conflicts with u <= -2 (soft); hard box u <= 1.
        let set = cs(&[vec![1.0, -1.0, 1.0]], &[1.0, 0.0, -2.0], 1);
        let prev = Configuration::all_ones(3);
        // Constraint 1 carries the dominant previous multiplier.
        let (p, _) = baseline2_select(&set, &prev, &[0.0, 5.0, 0.1]).unwrap();
        assert!(!p.is_enforced(1));
        assert!(p.is_enforced(2));
        assert!(fc(&set, &p).feasible);

        // Flip dominance: constraint 2 goes first instead.
        let (p, _) = baseline2_select(&set, &prev, &[0.0, 0.1, 5.0]).unwrap();
        assert!(p.is_enforced(1));
        assert!(!p.is_enforced(2));
    }

    #[test]
    fn hard_infeasibility_is_surfaced() {
        let set = cs(&[vec![1.0, -1.0]], &[-1.0, -1.0], 2);
        assert_eq!(
            slack_feasible(&set, &Configuration::all_ones(2)).unwrap_err(),
            HardInfeasibleError
        );
        assert_eq!(baseline1_select(&set).unwrap_err(), HardInfeasibleError);
    }
}
