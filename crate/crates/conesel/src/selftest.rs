//! Randomized cross-check suites: instance generators, an independent
//! slack-LP feasibility oracle, and the property suites exposed through
//! `conesel selftest`.
//!
//! The oracle decides emptiness of `{u : A^T u <= B}` the pedestrian way,
//! by minimizing total constraint violation with one slack per row. It
//! shares the LP solver with the code under test but none of the
//! nullspace / certificate machinery, which is what these suites are
//! meant to catch.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::baselines::{baseline1_select, baseline2_select, slack_feasible};
use crate::constraints::{mask, nullspace_basis, Configuration, ConstraintSet, NullspaceBasis};
use crate::feasibility::{
    farkas_feasible, fc, fc_with_basis, polar_components, polar_components_with_basis,
    simplicial_bounds_with_basis,
};
use crate::linalg::{self, Mat};
use crate::lp::{solve_lp, solve_min_norm_qp, LpProblem, LpStatus, TOL_FEAS};
use crate::selection::{ica_with_basis, init_config, lcs};

/// Result of one named check suite.
#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

/// Emptiness oracle: minimize `sum(s)` subject to `A^T u <= B + s`,
/// `s >= 0`. The system is non-empty iff the optimum is within
/// `TOL_FEAS`. This LP is always solvable, so any other status is a
/// solver defect.
pub fn oracle_feasible(a: &Mat, b: &[f64]) -> bool {
    let m = a.rows();
    let c = a.cols();
    let nv = m + c;
    let mut rows = Vec::with_capacity(c);
    for i in 0..c {
        let mut row = vec![0.0; nv];
        row[..m].copy_from_slice(a.col(i));
        row[m + i] = -1.0;
        rows.push(row);
    }
    let mut objective = vec![0.0; nv];
    let mut lower = vec![None; nv];
    for j in 0..c {
        objective[m + j] = 1.0;
        lower[m + j] = Some(0.0);
    }
    let p = LpProblem {
        objective,
        eq_lhs: Mat::zeros(0, nv),
        eq_rhs: vec![],
        ineq_lhs: Mat::from_rows(&rows),
        ineq_rhs: b.to_vec(),
        var_lower: Some(lower),
    };
    let sol = solve_lp(&p).expect("well-formed by construction");
    assert_eq!(sol.status, LpStatus::Optimal, "slack LP must always be solvable");
    sol.objective_value.unwrap() <= TOL_FEAS
}

/// Oracle verdict for a masked configuration.
pub fn oracle_feasible_config(cs: &ConstraintSet, p: &Configuration) -> bool {
    let (a, b) = mask(cs, p);
    if b.is_empty() {
        return true;
    }
    oracle_feasible(&a, &b)
}

/// Random instance: m in 1..=4, c in 2..=12, entries uniform in [-2, 2].
/// Roughly 30% of draws get an engineered contradiction (an antiparallel
/// row pair whose bounds sum to a strictly negative margin).
pub fn random_instance(rng: &mut ChaCha8Rng) -> ConstraintSet {
    let m = rng.gen_range(1..=4);
    let c = rng.gen_range(2..=12);
    let mut a = Mat::zeros(m, c);
    let mut b = vec![0.0; c];
    for j in 0..c {
        for i in 0..m {
            a.set(i, j, rng.gen_range(-2.0..2.0));
        }
        b[j] = rng.gen_range(-2.0..2.0);
    }
    if rng.gen_bool(0.3) && c >= 2 {
        // Plant u . n <= beta and -u . n <= -beta - margin.
        let j = rng.gen_range(0..c - 1);
        let beta = rng.gen_range(-1.0..1.0);
        let margin = rng.gen_range(0.1..1.0);
        for i in 0..m {
            let v = a.get(i, j);
            a.set(i, j + 1, -v);
        }
        b[j] = beta;
        b[j + 1] = -beta - margin;
    }
    let n_hard = rng.gen_range(0..=c / 2);
    ConstraintSet::new(a, b, n_hard).unwrap()
}

/// Random instance with a known interior point, hence feasible; hard
/// bounds are nonnegative (the origin satisfies every hard row).
pub fn random_feasible_instance(rng: &mut ChaCha8Rng) -> ConstraintSet {
    let m = rng.gen_range(1..=4);
    let c = rng.gen_range(2..=12);
    let n_hard = rng.gen_range(0..=c / 2);
    let u0: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut a = Mat::zeros(m, c);
    let mut b = vec![0.0; c];
    for j in 0..c {
        for i in 0..m {
            a.set(i, j, rng.gen_range(-2.0..2.0));
        }
        let slack = rng.gen_range(0.01..1.5);
        b[j] = linalg::dot(a.col(j), &u0) + slack;
        if j < n_hard && b[j] < 0.0 {
            b[j] = rng.gen_range(0.0..1.5);
        }
    }
    ConstraintSet::new(a, b, n_hard).unwrap()
}

/// Uniformly random configuration that keeps every hard bit set.
pub fn random_config(rng: &mut ChaCha8Rng, cs: &ConstraintSet) -> Configuration {
    let bits = (0..cs.len()).map(|i| cs.is_hard(i) || rng.gen_bool(0.5)).collect();
    Configuration::from_bits(bits)
}

/// Random planar-kernel instance whose reduced bound vector sits strictly
/// inside a pointed full-dimensional membership cone, for the distance
/// bound checks. Returns the instance; callers re-derive the basis.
pub fn random_interior_cone_instance(rng: &mut ChaCha8Rng) -> ConstraintSet {
    loop {
        let m = rng.gen_range(2..=4);
        let c = m + 2;
        // Unit generators inside a sector strictly narrower than a
        // halfplane, endpoints included.
        let phi0 = rng.gen_range(0.0..std::f64::consts::TAU);
        let width = rng.gen_range(0.3..2.4);
        let mut angles = vec![phi0, phi0 + width];
        for _ in 0..c - 2 {
            angles.push(phi0 + rng.gen_range(0.0..width));
        }
        let mut raw = Mat::zeros(c, 2);
        for (i, ang) in angles.iter().enumerate() {
            raw.set(i, 0, ang.cos());
            raw.set(i, 1, ang.sin());
        }
        // Orthonormalize the two columns; rows transform by an invertible
        // 2x2 map, preserving pointedness and interiority.
        let (q, rdiag) = linalg::qr_full_pivoted(&raw);
        if rdiag[1] <= 1e-9 {
            continue;
        }
        let n = q.select_cols(&[0, 1]);
        let w = q.select_cols(&(2..c).collect::<Vec<_>>());
        // A with row space = complement of the kernel.
        let mut s = Mat::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                s.set(i, j, rng.gen_range(-1.0..1.0) + if i == j { 1.5 } else { 0.0 });
            }
        }
        let a = s.matmul(&w.transpose());
        // Interior target: positive weights on every generator row.
        let mut tau = vec![0.0; 2];
        for i in 0..c {
            let wgt = rng.gen_range(0.4..1.2);
            tau[0] += wgt * n.get(i, 0);
            tau[1] += wgt * n.get(i, 1);
        }
        let b = n.matvec(&tau);
        let cs = match ConstraintSet::new(a, b, 0) {
            Ok(cs) => cs,
            Err(_) => continue,
        };
        let basis = nullspace_basis(&cs);
        if basis.k() != 2 {
            continue;
        }
        if simplicial_bounds_with_basis(&basis).is_none() {
            continue;
        }
        return cs;
    }
}

/// Dense boundary sampling of the planar membership cone: locate the two
/// angular extreme rows of the basis, sample both boundary half-lines,
/// and return the smallest distance to `BA`.
pub fn sampled_boundary_distance(basis: &NullspaceBasis, samples: usize) -> f64 {
    assert_eq!(basis.k(), 2);
    let c = basis.n().rows();
    let mut dirs: Vec<[f64; 2]> = vec![];
    let mut mean = [0.0f64; 2];
    for i in 0..c {
        let r = basis.row(i);
        let nrm = linalg::norm2(&r);
        if nrm <= 1e-12 {
            continue;
        }
        let d = [r[0] / nrm, r[1] / nrm];
        mean[0] += d[0];
        mean[1] += d[1];
        dirs.push(d);
    }
    let mnorm = (mean[0] * mean[0] + mean[1] * mean[1]).sqrt();
    mean = [mean[0] / mnorm, mean[1] / mnorm];
    let angle = |d: &[f64; 2]| -> f64 {
        let along = d[0] * mean[0] + d[1] * mean[1];
        let across = -d[0] * mean[1] + d[1] * mean[0];
        across.atan2(along)
    };
    let lo = dirs.iter().cloned().min_by(|a, b| angle(a).partial_cmp(&angle(b)).unwrap()).unwrap();
    let hi = dirs.iter().cloned().max_by(|a, b| angle(a).partial_cmp(&angle(b)).unwrap()).unwrap();
    let ba = basis.ba();
    let reach = 3.0 * linalg::norm2(ba).max(1.0);
    let mut best = f64::INFINITY;
    for edge in [lo, hi] {
        for s in 0..samples {
            let tt = reach * s as f64 / (samples - 1) as f64;
            let px = tt * edge[0] - ba[0];
            let py = tt * edge[1] - ba[1];
            best = best.min((px * px + py * py).sqrt());
        }
    }
    best
}

fn report(name: &'static str, failures: usize, total: usize, extra: String) -> SuiteReport {
    SuiteReport {
        name,
        pass: failures == 0,
        detail: if extra.is_empty() {
            format!("{failures} failures / {total} cases")
        } else {
            format!("{failures} failures / {total} cases; {extra}")
        },
    }
}

/// Feasibility criterion and configuration check against the slack-LP
/// oracle on random instances (including engineered-infeasible draws).
pub fn suite_oracle_agreement(n: usize, seed: u64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut infeasible_seen = 0;
    for _ in 0..n {
        let cs = random_instance(&mut rng);
        let basis = nullspace_basis(&cs);
        let truth = oracle_feasible(cs.a(), cs.b());
        if !truth {
            infeasible_seen += 1;
        }
        if farkas_feasible(&cs) != truth {
            failures += 1;
            continue;
        }
        let p = random_config(&mut rng, &cs);
        let cert = fc_with_basis(&cs, &basis, &p);
        if cert.feasible != oracle_feasible_config(&cs, &p) {
            failures += 1;
            continue;
        }
        // Feasible certificates must satisfy their own contract: the
        // equality rows within tolerance, enforced components nonnegative.
        if let Some(nu) = &cert.nu {
            let resid = basis.n().tr_matvec(nu);
            let eq_ok = resid
                .iter()
                .zip(basis.ba())
                .all(|(r, ba)| (r - ba).abs() <= 1e-6 * (1.0 + ba.abs()));
            let sign_ok = cert.enforced_part.iter().all(|&(_, v)| v >= -TOL_FEAS);
            if !(eq_ok && sign_ok) {
                failures += 1;
            }
        }
    }
    report(
        "oracle-agreement",
        failures,
        n,
        format!("{infeasible_seen} infeasible instances exercised"),
    )
}

/// Solving the reduced boundedness LP directly on feasible instances must
/// come back Optimal with a vanishing objective, and the zero vector must
/// itself be feasible and optimal.
pub fn suite_zero_maximizer(n: usize, seed: u64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..n {
        // Redraw trivial kernels: the reduced LP needs at least one
        // variable to say anything.
        let (cs, basis) = loop {
            let cs = random_feasible_instance(&mut rng);
            let basis = nullspace_basis(&cs);
            if basis.k() > 0 {
                break (cs, basis);
            }
        };
        let k = basis.k();
        // max -BA.mu s.t. N mu >= 0  ==  min BA.mu s.t. -N mu <= 0.
        let mut neg_n = Mat::zeros(cs.len(), k);
        for i in 0..cs.len() {
            for j in 0..k {
                neg_n.set(i, j, -basis.n().get(i, j));
            }
        }
        let p = LpProblem {
            objective: basis.ba().to_vec(),
            eq_lhs: Mat::zeros(0, k),
            eq_rhs: vec![],
            ineq_lhs: neg_n,
            ineq_rhs: vec![0.0; cs.len()],
            var_lower: None,
        };
        let sol = solve_lp(&p).expect("well-formed by construction");
        let ok = sol.status == LpStatus::Optimal
            && sol.objective_value.unwrap().abs() <= 1e-8
            // mu = 0 is feasible (trivially) and optimal within tolerance.
            && 0.0 <= sol.objective_value.unwrap() + 1e-8;
        if !ok {
            failures += 1;
        }
    }
    report("zero-maximizer", failures, n, String::new())
}

/// Every configuration visited inside the addition loop stays feasible,
/// the enforced set grows monotonically, and the loop ends within c
/// iterations.
pub fn suite_ica_monotone(n: usize, seed: u64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..n {
        // Redraw instances whose hard subset is infeasible; the addition
        // loop never runs on those.
        let (cs, basis, run) = loop {
            let cs = random_instance(&mut rng);
            let basis = nullspace_basis(&cs);
            let p0 = random_config(&mut rng, &cs);
            match ica_with_basis(&cs, &basis, &p0) {
                Ok(run) => break (cs, basis, run),
                Err(_) => continue,
            }
        };
        let mut ok = run.trace.len() <= cs.len() + 1;
        for w in run.trace.windows(2) {
            for i in 0..cs.len() {
                ok &= !w[0].is_enforced(i) || w[1].is_enforced(i);
            }
        }
        for cfg in &run.trace {
            ok &= fc_with_basis(&cs, &basis, cfg).feasible;
            ok &= oracle_feasible_config(&cs, cfg);
        }
        ok &= run.config.respects_hard(&cs);
        if !ok {
            failures += 1;
        }
    }
    report("ica-monotone-feasible", failures, n, String::new())
}

/// Sampled boundary distance lies inside the certified interval on
/// planar-kernel cones with interior bound vectors.
pub fn suite_distance_bounds(n: usize, seed: u64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..n {
        let cs = random_interior_cone_instance(&mut rng);
        let basis = nullspace_basis(&cs);
        let (lo, hi) = match simplicial_bounds_with_basis(&basis) {
            Some(b) => b,
            None => {
                failures += 1;
                continue;
            }
        };
        let sampled = sampled_boundary_distance(&basis, 10_000);
        if !(sampled >= lo - 1e-6 && sampled <= hi + 1e-6) {
            failures += 1;
        }
    }
    report("distance-bounds", failures, n, String::new())
}

/// Sign-based initialization always yields a feasible configuration on
/// instances whose hard bounds are nonnegative.
pub fn suite_init_config(n: usize, seed: u64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..n {
        let cs = random_feasible_instance(&mut rng);
        let p = init_config(&cs);
        if !fc(&cs, &p).feasible {
            failures += 1;
        }
    }
    report("init-config-feasible", failures, n, String::new())
}

/// Local configuration search always returns a feasible configuration
/// with hard bits intact, from both feasible and infeasible starts.
pub fn suite_lcs_feasible(n: usize, seed: u64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..n {
        // Redraw instances whose hard subset is infeasible.
        let (cs, basis, p, hard, nu_prev) = loop {
            let cs = random_instance(&mut rng);
            let basis = nullspace_basis(&cs);
            let p = random_config(&mut rng, &cs);
            let hard = Configuration::hard_only(&cs);
            let hc = fc_with_basis(&cs, &basis, &hard);
            if let Some(nu) = hc.nu {
                break (cs, basis, p, hard, nu);
            }
        };
        let depth = rng.gen_range(1..=3);
        match lcs(&cs, &p, &hard, &nu_prev, depth) {
            Ok(out) => {
                let ok = fc_with_basis(&cs, &basis, &out).feasible
                    && oracle_feasible_config(&cs, &out)
                    && out.respects_hard(&cs);
                if !ok {
                    failures += 1;
                }
            }
            Err(_) => failures += 1,
        }
    }
    report("lcs-feasible", failures, n, String::new())
}

/// On mutually compatible instances the addition loop saturates to the
/// fully-enforced configuration in the vast majority of draws; the rare
/// stalls are genuine local minima of the certificate objective (one
/// disregarded component held negative by the enforced-part cost), and
/// the local search escapes every one of them at depth 1.
pub fn suite_compatible_saturation(n: usize, seed: u64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut stalls = 0;
    for _ in 0..n {
        let m = rng.gen_range(1..=4);
        let c = rng.gen_range(2..=12);
        let n_hard = rng.gen_range(0..=c / 2);
        let u0: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut a = Mat::zeros(m, c);
        let mut b = vec![0.0; c];
        for j in 0..c {
            for i in 0..m {
                a.set(i, j, rng.gen_range(-2.0..2.0));
            }
            b[j] = linalg::dot(a.col(j), &u0) + rng.gen_range(0.01..1.5);
        }
        let cs = ConstraintSet::new(a, b, n_hard).unwrap();
        debug_assert!(oracle_feasible(cs.a(), cs.b()));
        let basis = nullspace_basis(&cs);
        let run = match ica_with_basis(&cs, &basis, &Configuration::hard_only(&cs)) {
            Ok(run) => run,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        if run.config.enforced_count() == c {
            continue;
        }
        stalls += 1;
        match lcs(&cs, &run.config, &run.config, &run.nu, 1) {
            Ok(out) if out.enforced_count() == c => {}
            _ => failures += 1,
        }
    }
    // Saturation must be the typical outcome, and stalls must always be
    // recoverable.
    if stalls * 10 > n {
        failures += 1;
    }
    report(
        "compatible-saturation",
        failures,
        n,
        format!("{stalls} addition stalls, all recovered by local search"),
    )
}

/// With full search depth and a feasible start, local search returns a
/// superset of what plain addition reaches, so its enforced count
/// dominates.
pub fn suite_lcs_dominates_ica(n: usize, seed: u64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut strict = 0;
    for _ in 0..n {
        let (cs, hard, ica_run) = loop {
            let cs = random_instance(&mut rng);
            let basis = nullspace_basis(&cs);
            let hard = Configuration::hard_only(&cs);
            match ica_with_basis(&cs, &basis, &hard) {
                Ok(run) => break (cs, hard, run),
                Err(_) => continue,
            }
        };
        let out = match lcs(&cs, &hard, &hard, &ica_run.nu, cs.len()) {
            Ok(out) => out,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        let lcs_count = out.enforced_count();
        let ica_count = ica_run.config.enforced_count();
        if lcs_count < ica_count {
            failures += 1;
        } else if lcs_count > ica_count {
            strict += 1;
        }
    }
    report("lcs-dominates-ica", failures, n, format!("{strict} strict improvements"))
}

/// Greedy elastic dropping always lands on an fc-verified feasible
/// configuration with hard bits intact.
pub fn suite_baseline1_feasible(n: usize, seed: u64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..n {
        let (cs, p) = loop {
            let cs = random_instance(&mut rng);
            match baseline1_select(&cs) {
                Ok(p) => break (cs, p),
                Err(_) => continue, // hard-infeasible draw
            }
        };
        if !(p.respects_hard(&cs) && fc(&cs, &p).feasible) {
            failures += 1;
        }
    }
    report("baseline1-feasible", failures, n, String::new())
}

/// Multiplier-ranked dropping stays feasible across streaks of steps
/// with threaded state and a drifting bound vector.
pub fn suite_baseline2_streaks(n_streaks: usize, steps: usize, seed: u64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..n_streaks {
        // Hard rows keep strictly positive bounds so the origin satisfies
        // them throughout the drift.
        let m = rng.gen_range(1..=4);
        let c = rng.gen_range(2..=12);
        let n_hard = rng.gen_range(0..=c / 2);
        let mut a = Mat::zeros(m, c);
        let mut b = vec![0.0; c];
        for j in 0..c {
            for i in 0..m {
                a.set(i, j, rng.gen_range(-2.0..2.0));
            }
            b[j] = if j < n_hard { rng.gen_range(0.1..2.0) } else { rng.gen_range(-2.0..2.0) };
        }
        let mut p = Configuration::all_ones(c);
        let mut lm = vec![0.0; c];
        for _step in 0..steps {
            let mut bt = b.clone();
            for (j, v) in bt.iter_mut().enumerate() {
                let jitter: f64 = rng.gen_range(-0.2..0.2);
                *v += if j < n_hard { jitter.abs() } else { jitter };
            }
            let cs = ConstraintSet::new(a.clone(), bt, n_hard).unwrap();
            match baseline2_select(&cs, &p, &lm) {
                Ok((np, nlm)) => {
                    if !(np.respects_hard(&cs) && fc(&cs, &np).feasible) {
                        failures += 1;
                    }
                    p = np;
                    lm = nlm;
                }
                Err(_) => failures += 1,
            }
        }
    }
    report("baseline2-streaks", failures, n_streaks * steps, String::new())
}

/// Elastic-LP feasibility flag agrees with the certificate verdict.
pub fn suite_slack_agreement(n: usize, seed: u64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut hard_infeasible = 0;
    for _ in 0..n {
        let cs = random_instance(&mut rng);
        let p = random_config(&mut rng, &cs);
        match slack_feasible(&cs, &p) {
            Ok(rep) => {
                if rep.feasible != fc(&cs, &p).feasible {
                    failures += 1;
                }
            }
            Err(_) => hard_infeasible += 1,
        }
    }
    report(
        "slack-agreement",
        failures,
        n - hard_infeasible,
        format!("{hard_infeasible} hard-infeasible draws skipped"),
    )
}

/// Projection QP output is feasible and locally optimal under random
/// perturbation sampling.
pub fn suite_qp_local_optimality(n: usize, seed: u64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..n {
        let m = rng.gen_range(1..=3);
        let q = rng.gen_range(0..=8);
        let u0: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut a = Mat::zeros(m, q);
        let mut b = vec![0.0; q];
        for j in 0..q {
            for i in 0..m {
                a.set(i, j, rng.gen_range(-2.0..2.0));
            }
            b[j] = linalg::dot(a.col(j), &u0) + rng.gen_range(0.0..1.0);
        }
        let u_ref: Vec<f64> = (0..m).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let u = match solve_min_norm_qp(&u_ref, &a, &b) {
            Ok(u) => u,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        let feas =
            (0..q).all(|j| linalg::dot(a.col(j), &u) <= b[j] + TOL_FEAS);
        let cost =
            |v: &[f64]| v.iter().zip(&u_ref).map(|(x, r)| (x - r) * (x - r)).sum::<f64>();
        let base = cost(&u);
        let mut local_ok = true;
        for _ in 0..100 {
            let probe: Vec<f64> =
                u.iter().map(|x| x + rng.gen_range(-1e-4..1e-4)).collect();
            let probe_feas = (0..q).all(|j| linalg::dot(a.col(j), &probe) <= b[j]);
            if probe_feas && cost(&probe) < base - 1e-9 {
                local_ok = false;
            }
        }
        if !(feas && local_ok) {
            failures += 1;
        }
    }
    report("qp-local-optimality", failures, n, String::new())
}

/// Verdicts and polar optimum are invariant under orthogonal rotations of
/// the nullspace basis.
pub fn suite_basis_invariance(n: usize, seed: u64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut skipped = 0;
    for _ in 0..n {
        let cs = random_instance(&mut rng);
        let basis = nullspace_basis(&cs);
        let k = basis.k();
        if k == 0 {
            skipped += 1;
            continue;
        }
        // Random orthogonal k x k factor.
        let mut g = Mat::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                g.set(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        let (q, _) = linalg::qr_full_pivoted(&g);
        let rotated = NullspaceBasis::from_matrix(basis.n().matmul(&q), cs.b(), basis.rank());
        let p = random_config(&mut rng, &cs);
        let same_farkas = farkas_feasible_with_basis_pair(&cs, &basis)
            == farkas_feasible_with_basis_pair(&cs, &rotated);
        let cert_a = fc_with_basis(&cs, &basis, &p);
        let cert_b = fc_with_basis(&cs, &rotated, &p);
        let mut ok = same_farkas && cert_a.feasible == cert_b.feasible;
        // The certificate feasible set is identical under rotation, so
        // bounded-optimum sign patterns must match as well.
        if cert_a.feasible && !cert_a.objective_unbounded && !cert_b.objective_unbounded {
            let nu_a = cert_a.nu.as_ref().unwrap();
            let nu_b = cert_b.nu.as_ref().unwrap();
            ok &= nu_a
                .iter()
                .zip(nu_b)
                .all(|(a, b)| (*a >= 0.0) == (*b >= 0.0) || a.abs().min(b.abs()) <= 1e-9);
        }
        // The minimum-sum optimum value is a property of that set too.
        let pa = polar_components_with_basis(&cs, &basis);
        let pb = polar_components_with_basis(&cs, &rotated);
        ok &= match (pa, pb) {
            (Ok(ra), Ok(rb)) => {
                let sa: f64 = ra.nu_star.iter().sum();
                let sb: f64 = rb.nu_star.iter().sum();
                (sa - sb).abs() <= 1e-6 * (1.0 + sa.abs())
            }
            (Err(_), Err(_)) => true,
            _ => false,
        };
        if !ok {
            failures += 1;
        }
    }
    report("basis-invariance", failures, n - skipped, format!("{skipped} trivial kernels skipped"))
}

fn farkas_feasible_with_basis_pair(cs: &ConstraintSet, basis: &NullspaceBasis) -> bool {
    crate::feasibility::farkas_feasible_with_basis(cs, basis)
}

/// Kernel dimension plus rank always equals the constraint count.
pub fn suite_rank_nullity(n: usize, seed: u64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..n {
        let cs = random_instance(&mut rng);
        let basis = nullspace_basis(&cs);
        if basis.k() + basis.rank() != cs.len() {
            failures += 1;
            continue;
        }
        // Basis annihilates A and is orthonormal.
        let an = cs.a().matmul(basis.n());
        let mut ok = true;
        for j in 0..an.cols() {
            for i in 0..an.rows() {
                ok &= an.get(i, j).abs() <= 1e-8;
            }
        }
        for i in 0..basis.k() {
            for j in 0..basis.k() {
                let expect = if i == j { 1.0 } else { 0.0 };
                ok &= (linalg::dot(basis.n().col(i), basis.n().col(j)) - expect).abs() <= 1e-8;
            }
        }
        if !ok {
            failures += 1;
        }
    }
    report("rank-nullity", failures, n, String::new())
}

/// Full-configuration check agrees with the plain feasibility criterion,
/// and polar components exist exactly on feasible sets.
pub fn suite_allones_equivalence(n: usize, seed: u64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..n {
        let cs = random_instance(&mut rng);
        let all = Configuration::all_ones(cs.len());
        let lhs = fc(&cs, &all).feasible;
        let rhs = farkas_feasible(&cs);
        if lhs != rhs {
            failures += 1;
            continue;
        }
        if polar_components(&cs).is_ok() != rhs {
            failures += 1;
        }
    }
    report("all-ones-equivalence", failures, n, String::new())
}

/// Standard suite sizes; returns one report per suite.
pub fn run_all() -> Vec<SuiteReport> {
    vec![
        suite_oracle_agreement(10_000, 101),
        suite_zero_maximizer(200, 102),
        suite_ica_monotone(2_000, 103),
        suite_distance_bounds(200, 104),
        suite_init_config(1_000, 105),
        suite_lcs_feasible(2_000, 106),
        suite_lcs_dominates_ica(500, 112),
        suite_compatible_saturation(500, 113),
        suite_baseline1_feasible(500, 114),
        suite_baseline2_streaks(500, 10, 115),
        suite_slack_agreement(1_000, 107),
        suite_qp_local_optimality(300, 108),
        suite_basis_invariance(200, 109),
        suite_rank_nullity(1_000, 110),
        suite_allones_equivalence(500, 111),
    ]
}
