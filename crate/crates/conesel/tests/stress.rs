//! Stress coverage beyond the toy-size cross-checks: wide magnitude
//! ranges, planted degeneracies, dual correctness, and feasibility
//! verdicts at full benchmark scale.

use conesel::constraints::{nullspace_basis, Configuration, ConstraintSet};
use conesel::controller::{build_constraints, ControlGains, Zone};
use conesel::feasibility::{farkas_feasible_with_basis, fc_with_basis};
use conesel::linalg::Mat;
use conesel::lp::{solve_lp_with_duals, LpProblem, LpStatus};
use conesel::selftest::{oracle_feasible, oracle_feasible_config};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random LP with entry magnitudes spanning several orders, duplicate
/// rows and zero rows mixed in.
fn scaled_lp(rng: &mut ChaCha8Rng) -> LpProblem {
    let n = rng.gen_range(1..=6);
    let q = rng.gen_range(1..=10);
    let mut g = Mat::zeros(q, n);
    let mut h = vec![0.0; q];
    for r in 0..q {
        let scale = 10f64.powf(rng.gen_range(-2.0..2.0));
        for j in 0..n {
            g.set(r, j, scale * rng.gen_range(-1.0..1.0));
        }
        h[r] = scale * rng.gen_range(-1.0..1.0);
    }
    // Planted degeneracies.
    if q >= 2 && rng.gen_bool(0.3) {
        let r = rng.gen_range(1..q);
        for j in 0..n {
            g.set(r, j, g.get(0, j));
        }
        h[r] = h[0];
    }
    if rng.gen_bool(0.2) {
        let r = rng.gen_range(0..q);
        for j in 0..n {
            g.set(r, j, 0.0);
        }
        h[r] = rng.gen_range(-0.5..1.0);
    }
    // Half the draws are bounded by construction: nonnegative variables
    // with a nonnegative objective.
    let (objective, lower) = if rng.gen_bool(0.5) {
        (
            (0..n).map(|_| rng.gen_range(0.0..2.0)).collect(),
            Some((0..n).map(|_| Some(0.0)).collect()),
        )
    } else {
        let lower = if rng.gen_bool(0.5) {
            Some((0..n).map(|_| if rng.gen_bool(0.5) { Some(0.0) } else { None }).collect())
        } else {
            None
        };
        ((0..n).map(|_| rng.gen_range(-2.0..2.0)).collect(), lower)
    };
    LpProblem {
        objective,
        eq_lhs: Mat::zeros(0, n),
        eq_rhs: vec![],
        ineq_lhs: g,
        ineq_rhs: h,
        var_lower: lower,
    }
}

#[test]
fn scaled_degenerate_lps_solve_cleanly() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut optimal = 0;
    for _ in 0..2_000 {
        let p = scaled_lp(&mut rng);
        let sol = solve_lp_with_duals(&p).unwrap();
        if sol.solution.status != LpStatus::Optimal {
            continue;
        }
        optimal += 1;
        let x = sol.solution.x.as_ref().unwrap();
        // Residuals scale with the row magnitudes.
        for r in 0..p.ineq_lhs.rows() {
            let row = p.ineq_lhs.row(r);
            let lhs: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
            let scale = row.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            assert!(lhs <= p.ineq_rhs[r] + 1e-7 * scale, "row {r} violated");
        }
    }
    assert!(optimal > 500, "generator produced too few solvable cases: {optimal}");
}

/// Stationarity and complementary slackness of the extracted duals.
#[test]
fn duals_satisfy_kkt_conditions() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    let mut checked = 0;
    for _ in 0..1_000 {
        let p = scaled_lp(&mut rng);
        let sol = solve_lp_with_duals(&p).unwrap();
        if sol.solution.status != LpStatus::Optimal {
            continue;
        }
        checked += 1;
        let x = sol.solution.x.as_ref().unwrap();
        let lambda = sol.ineq_duals.as_ref().unwrap();
        let n = p.objective.len();
        let q = p.ineq_lhs.rows();
        let scale = (0..q)
            .flat_map(|r| p.ineq_lhs.row(r))
            .fold(1.0f64, |m, v| m.max(v.abs()));

        for (r, l) in lambda.iter().enumerate() {
            assert!(*l >= 0.0, "negative multiplier");
            // Complementary slackness.
            let row = p.ineq_lhs.row(r);
            let slack = p.ineq_rhs[r] - row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            assert!(
                l * slack.max(0.0) <= 1e-5 * scale * (1.0 + l),
                "multiplier {l} on slack {slack} at row {r}"
            );
        }
        // Stationarity: c + G^T lambda = mu_lb, with mu_lb >= 0 on
        // lower-bounded variables and 0 on free ones (within tolerance).
        for j in 0..n {
            let mut grad = p.objective[j];
            for r in 0..q {
                grad += p.ineq_lhs.get(r, j) * lambda[r];
            }
            let bounded = p
                .var_lower
                .as_ref()
                .map(|lb| lb[j].is_some())
                .unwrap_or(false);
            if bounded {
                assert!(grad >= -1e-6 * scale, "bound multiplier negative: {grad}");
                let at_bound = x[j].abs() <= 1e-9;
                if !at_bound {
                    assert!(grad.abs() <= 1e-6 * scale, "interior variable with gradient {grad}");
                }
            } else {
                assert!(grad.abs() <= 1e-6 * scale, "free variable with gradient {grad}");
            }
        }
    }
    assert!(checked > 250, "too few optimal cases: {checked}");
}

/// Feasibility verdicts at full benchmark scale: systems assembled by
/// the navigation constraint builder at random states, checked against
/// the slack oracle.
#[test]
fn benchmark_scale_verdicts_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let gains = ControlGains::default();
    let mut infeasible_seen = 0;
    for case in 0..200 {
        let n_zones = rng.gen_range(25..=105);
        let zones: Vec<Zone> = (0..n_zones)
            .map(|_| {
                let moving = rng.gen_bool(0.5);
                let heading = rng.gen_range(0.0..std::f64::consts::TAU);
                Zone {
                    center: [rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)],
                    velocity: if moving {
                        [2.0 * heading.cos(), 2.0 * heading.sin()]
                    } else {
                        [0.0, 0.0]
                    },
                    radius: 1.5,
                }
            })
            .collect();
        let x = [rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)];
        let goal = [rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)];
        let t = rng.gen_range(0.0..5.0);
        let cs = build_constraints(&x, t, &zones, &goal, &gains);
        let basis = nullspace_basis(&cs);

        let truth = oracle_feasible(cs.a(), cs.b());
        if !truth {
            infeasible_seen += 1;
        }
        assert_eq!(
            farkas_feasible_with_basis(&cs, &basis),
            truth,
            "case {case}: verdict mismatch at c = {}",
            cs.len()
        );

        let mut p = Configuration::all_ones(cs.len());
        for i in cs.n_hard()..cs.len() {
            p.set_enforced(i, rng.gen_bool(0.8));
        }
        assert_eq!(
            fc_with_basis(&cs, &basis, &p).feasible,
            oracle_feasible_config(&cs, &p),
            "case {case}: masked verdict mismatch at c = {}",
            cs.len()
        );
    }
    // Random states inside a dense zone field must exercise both sides.
    assert!(infeasible_seen > 20, "only {infeasible_seen} infeasible draws");
    assert!(infeasible_seen < 180, "only {} feasible draws", 200 - infeasible_seen);
}

/// Exact three-dimensional kernel case: canonical axes as generators.
#[test]
fn simplicial_bounds_axis_aligned_k3() {
    // 1 x 3 zero matrix: kernel is R^3, basis rows are the axes.
    let cs = ConstraintSet::new(Mat::zeros(1, 3), vec![3.0, 2.0, 1.0], 0).unwrap();
    let (lo, hi) = conesel::feasibility::simplicial_bounds(&cs).unwrap();
    assert!((lo - 1.0).abs() < 1e-9, "lo = {lo}");
    assert!((hi - 1.0).abs() < 1e-9, "hi = {hi}");
}

/// Random pointed 3-D cones. With generators in general position the
/// located cell can have internal faces, so only the lower bound is
/// certified against the true boundary; for simplicial cones (exactly
/// three extreme directions) both bounds hold and the sampled distance
/// must land inside the interval.
#[test]
fn simplicial_bounds_k3_verified_by_boundary_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    let mut general = 0;
    let mut simplicial = 0;
    while general < 40 || simplicial < 40 {
        let force_simplicial = simplicial < 40;
        let m = rng.gen_range(1..=3);
        let c = m + 3;
        // Unit generator directions inside a spherical cap (pointedness).
        let axis = random_unit3(&mut rng);
        let mut corner = |rng: &mut ChaCha8Rng| loop {
            let d = random_unit3(rng);
            let along = d[0] * axis[0] + d[1] * axis[1] + d[2] * axis[2];
            if along > 0.5 {
                break d;
            }
        };
        let mut dirs: Vec<[f64; 3]> = vec![];
        if force_simplicial {
            // Three corners; remaining directions strictly inside their
            // conic hull, so the cone has exactly three extreme rays.
            for _ in 0..3 {
                dirs.push(corner(&mut rng));
            }
            for _ in 3..c {
                let w: [f64; 3] = [
                    rng.gen_range(0.1..1.0),
                    rng.gen_range(0.1..1.0),
                    rng.gen_range(0.1..1.0),
                ];
                let mut v = [0.0f64; 3];
                for (cnr, wi) in dirs[..3].iter().zip(&w) {
                    for j in 0..3 {
                        v[j] += wi * cnr[j];
                    }
                }
                let nrm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                dirs.push([v[0] / nrm, v[1] / nrm, v[2] / nrm]);
            }
        } else {
            for _ in 0..c {
                dirs.push(corner(&mut rng));
            }
        }
        let mut raw = Mat::zeros(c, 3);
        for (i, d) in dirs.iter().enumerate() {
            for j in 0..3 {
                raw.set(i, j, d[j]);
            }
        }
        let (q, rdiag) = conesel::linalg::qr_full_pivoted(&raw);
        if rdiag[2] <= 1e-6 {
            continue;
        }
        let n = q.select_cols(&[0, 1, 2]);
        let w = q.select_cols(&(3..c).collect::<Vec<_>>());
        let mut s = Mat::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                s.set(i, j, rng.gen_range(-1.0..1.0) + if i == j { 1.5 } else { 0.0 });
            }
        }
        let a = s.matmul(&w.transpose());
        let mut tau = vec![0.0; 3];
        for i in 0..c {
            let wgt = rng.gen_range(0.4..1.2);
            for j in 0..3 {
                tau[j] += wgt * n.get(i, j);
            }
        }
        let b = n.matvec(&tau);
        let cs = match ConstraintSet::new(a, b, 0) {
            Ok(cs) => cs,
            Err(_) => continue,
        };
        let basis = nullspace_basis(&cs);
        if basis.k() != 3 {
            continue;
        }
        let (lo, hi) = match conesel::feasibility::simplicial_bounds(&cs) {
            Some(bounds) => bounds,
            None => continue,
        };
        assert!(lo > 0.0 && lo <= hi + 1e-12);
        let sampled = sampled_boundary_distance_k3(&basis);
        // The lower bound holds against the true boundary always.
        assert!(sampled >= lo - 1e-6, "sampled {sampled} below lower bound {lo}");
        if force_simplicial {
            // One cell, no internal faces: the interval is two-sided.
            assert!(
                sampled <= hi * (1.0 + 3e-3) + 1e-6,
                "sampled {sampled} above upper bound {hi}"
            );
            simplicial += 1;
        } else {
            general += 1;
        }
    }
}

fn random_unit3(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-3 && n <= 1.0 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

/// Boundary-distance oracle by dense direction sampling: for an interior
/// point, the distance to the cone boundary is the minimum over unit
/// directions `u` of the exit distance `max { t : BA + t u in cone }`,
/// each solved exactly as a small LP over nonnegative generator weights.
/// Directions where the ray never exits are skipped. The per-direction
/// value is exact, so the minimum overestimates the true distance only
/// by the angular grid resolution.
fn sampled_boundary_distance_k3(basis: &conesel::constraints::NullspaceBasis) -> f64 {
    let c = basis.n().rows();
    let ba = basis.ba();
    let mut gens: Vec<[f64; 3]> = vec![];
    for i in 0..c {
        let r = basis.row(i);
        let nrm = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        if nrm > 1e-12 {
            gens.push([r[0] / nrm, r[1] / nrm, r[2] / nrm]);
        }
    }
    let n_dirs = 4000;
    let golden = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
    let mut best = f64::INFINITY;
    for i in 0..n_dirs {
        // Fibonacci sphere direction.
        let z = 1.0 - 2.0 * (i as f64 + 0.5) / n_dirs as f64;
        let rad = (1.0 - z * z).sqrt();
        let phi = golden * i as f64;
        let u = [rad * phi.cos(), rad * phi.sin(), z];

        // max t  s.t.  sum lambda_i g_i - t u = BA, lambda >= 0, t >= 0.
        let nv = gens.len() + 1;
        let mut eq = Mat::zeros(3, nv);
        for (col, g) in gens.iter().enumerate() {
            for row in 0..3 {
                eq.set(row, col, g[row]);
            }
        }
        for row in 0..3 {
            eq.set(row, gens.len(), -u[row]);
        }
        let mut objective = vec![0.0; nv];
        objective[gens.len()] = -1.0;
        let p = LpProblem {
            objective,
            eq_lhs: eq,
            eq_rhs: ba.to_vec(),
            ineq_lhs: Mat::zeros(0, nv),
            ineq_rhs: vec![],
            var_lower: Some(vec![Some(0.0); nv]),
        };
        let sol = conesel::lp::solve_lp(&p).unwrap();
        if sol.status == LpStatus::Optimal {
            best = best.min(-sol.objective_value.unwrap());
        }
    }
    best
}
