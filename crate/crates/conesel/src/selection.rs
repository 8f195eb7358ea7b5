//! Online constraint selection: sign-based initialization, iterative
//! constraint addition, and depth-bounded local configuration search.
//!
//! All three selectors treat hard constraints as untouchable: no code
//! path in this module ever clears a hard bit.

use crate::constraints::{nullspace_basis, Configuration, ConstraintSet, NullspaceBasis};
use crate::feasibility::fc_with_basis;

/// The hard constraint subset itself admits no input. Selection cannot
/// proceed; this signals a modeling bug upstream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HardInfeasibleError;

impl std::fmt::Display for HardInfeasibleError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "hard constraint subset is infeasible")
    }
}

impl std::error::Error for HardInfeasibleError {}

/// Per-stream selector state owned by the episode loop.
#[derive(Debug, Clone)]
pub struct SelectionState {
    pub p_current: Configuration,
    pub p_last_feasible: Configuration,
    /// Certificate vector from the last successful feasibility check.
    pub nu_last: Vec<f64>,
    /// Search depth for the local configuration search.
    pub depth: usize,
}

/// Result of one iterative-constraint-addition run, with the
/// configuration visited at every iteration (all of them feasible).
#[derive(Debug, Clone)]
pub struct IcaRun {
    pub config: Configuration,
    pub nu: Vec<f64>,
    pub trace: Vec<Configuration>,
}

/// Initial configuration: every hard constraint plus every soft
/// constraint with a nonnegative bound. `nu = B` then witnesses the
/// certificate system, so the result is feasible whenever the hard
/// bounds are themselves nonnegative.
pub fn init_config(cs: &ConstraintSet) -> Configuration {
    let bits = (0..cs.len()).map(|i| cs.is_hard(i) || cs.b()[i] >= 0.0).collect();
    Configuration::from_bits(bits)
}

/// Iterative constraint addition starting from `p0`.
///
/// If `p0` is infeasible the search restarts from the hard-only
/// configuration. Then, while any disregarded component of the
/// certificate is nonnegative, all such constraints are promoted at once
/// and the certificate recomputed. Each promotion preserves feasibility,
/// so the enforced set grows monotonically and the loop ends within `c`
/// iterations.
pub fn ica(
    cs: &ConstraintSet,
    p0: &Configuration,
) -> Result<(Configuration, Vec<f64>), HardInfeasibleError> {
    let basis = nullspace_basis(cs);
    ica_with_basis(cs, &basis, p0).map(|run| (run.config, run.nu))
}

pub fn ica_with_basis(
    cs: &ConstraintSet,
    basis: &NullspaceBasis,
    p0: &Configuration,
) -> Result<IcaRun, HardInfeasibleError> {
    assert!(p0.respects_hard(cs), "initial configuration must enforce hard constraints");
    let mut p = p0.clone();
    let mut cert = fc_with_basis(cs, basis, &p);
    if !cert.feasible {
        p = Configuration::hard_only(cs);
        cert = fc_with_basis(cs, basis, &p);
        if !cert.feasible {
            return Err(HardInfeasibleError);
        }
    }
    let mut trace = vec![p.clone()];
    let mut nu = cert.nu.expect("feasible certificate carries nu");
    let mut iterations = 0usize;
    while !cert.disregarded_pos.is_empty() {
        iterations += 1;
        assert!(iterations <= cs.len(), "promotion loop exceeded the constraint count");
        // Promote every constraint whose component is nonnegative. The
        // disjunction keeps already-enforced bits set even if their
        // component carries roundoff noise below zero.
        let bits: Vec<bool> = (0..cs.len())
            .map(|j| p.is_enforced(j) || nu[j] >= 0.0)
            .collect();
        p = Configuration::from_bits(bits);
        cert = fc_with_basis(cs, basis, &p);
        assert!(cert.feasible, "promoting nonnegative components must preserve feasibility");
        nu = cert.nu.expect("feasible certificate carries nu");
        trace.push(p.clone());
    }
    Ok(IcaRun { config: p, nu, trace })
}

/// Local configuration search around `p`.
///
/// Feasible branch: run ICA, then for `depth` rounds walk the
/// disregarded constraints in most-promising-first order (certificate
/// value descending, i.e. closest to zero first), tentatively enforcing
/// each and keeping it only when the check stays feasible.
///
/// Infeasible branch: walk the enforced soft constraints in
/// least-supported-first order of `nu_prev` (value ascending),
/// cumulatively dropping them until the check succeeds. Dropping all of
/// them reaches the hard-only configuration, so the walk can only fail
/// when the hard subset itself is infeasible; the terminal ICA fallback
/// then surfaces `HardInfeasibleError`.
///
/// Ties in either ranking are broken by lower constraint index. Hard
/// constraints are never candidates for dropping.
pub fn lcs(
    cs: &ConstraintSet,
    p: &Configuration,
    p_prev: &Configuration,
    nu_prev: &[f64],
    depth: usize,
) -> Result<Configuration, HardInfeasibleError> {
    let basis = nullspace_basis(cs);
    lcs_with_basis(cs, &basis, p, p_prev, nu_prev, depth)
}

pub fn lcs_with_basis(
    cs: &ConstraintSet,
    basis: &NullspaceBasis,
    p: &Configuration,
    p_prev: &Configuration,
    nu_prev: &[f64],
    depth: usize,
) -> Result<Configuration, HardInfeasibleError> {
    assert!(depth >= 1, "search depth must be at least 1");
    assert_eq!(p_prev.len(), cs.len());
    assert_eq!(nu_prev.len(), cs.len());
    let cert = fc_with_basis(cs, basis, p);

    if cert.feasible {
        let run = ica_with_basis(cs, basis, p)?;
        let mut p_t = run.config;
        let mut nu = run.nu;
        for _round in 0..depth {
            let mut cands = p_t.disregarded_indices();
            if cands.is_empty() {
                break;
            }
            cands.sort_by(|&a, &b| nu[b].partial_cmp(&nu[a]).unwrap().then(a.cmp(&b)));
            let mut round_nu: Option<Vec<f64>> = None;
            for &j in &cands {
                p_t.set_enforced(j, true);
                let tentative = fc_with_basis(cs, basis, &p_t);
                if tentative.feasible {
                    round_nu = Some(tentative.nu.expect("feasible certificate carries nu"));
                } else {
                    p_t.set_enforced(j, false);
                }
            }
            match round_nu {
                Some(new_nu) => nu = new_nu,
                // Nothing accepted: the next round would be identical.
                None => break,
            }
        }
        Ok(p_t)
    } else {
        let mut p_t = p.clone();
        let mut cands: Vec<usize> =
            (cs.n_hard()..cs.len()).filter(|&i| p.is_enforced(i)).collect();
        cands.sort_by(|&a, &b| nu_prev[a].partial_cmp(&nu_prev[b]).unwrap().then(a.cmp(&b)));
        for &j in &cands {
            p_t.set_enforced(j, false);
            if fc_with_basis(cs, basis, &p_t).feasible {
                return Ok(p_t);
            }
        }
        // Unreachable unless the hard subset is infeasible; the ICA
        // fallback reports that.
        let run = ica_with_basis(cs, basis, &Configuration::hard_only(cs))?;
        Ok(run.config)
    }
}
