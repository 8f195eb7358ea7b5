//! Constraint assembly for the 2-D navigation benchmark and the
//! projection controller.
//!
//! Each avoidance zone contributes one barrier row keeping
//! `h_i(x) = ||x - y_i||^2 - r^2` nonnegative along the flow; moving
//! zones get the extra transport term from their known velocity. The
//! hard block is a Lyapunov row driving `V(x) = ||x - goal||^2` down plus
//! the input box. Hard columns are stored first so the hard set occupies
//! indices `0..n_hard`.

use crate::constraints::{mask, Configuration, ConstraintSet};
use crate::linalg::Mat;
use crate::lp::{solve_min_norm_qp, QpInfeasible};

/// Circular avoidance zone; `velocity` is zero for static zones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Zone {
    pub center: [f64; 2],
    pub velocity: [f64; 2],
    pub radius: f64,
}

impl Zone {
    pub fn is_static(&self) -> bool {
        self.velocity[0] == 0.0 && self.velocity[1] == 0.0
    }

    pub fn center_at(&self, t: f64) -> [f64; 2] {
        [
            self.center[0] + self.velocity[0] * t,
            self.center[1] + self.velocity[1] * t,
        ]
    }

    /// Squared-distance barrier value at `x` for the zone position at `t`.
    pub fn barrier(&self, x: &[f64; 2], t: f64) -> f64 {
        let y = self.center_at(t);
        let dx = x[0] - y[0];
        let dy = x[1] - y[1];
        dx * dx + dy * dy - self.radius * self.radius
    }
}

/// Linear class-K slopes and the input bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlGains {
    /// Barrier-row slope (1/s).
    pub gamma_cbf: f64,
    /// Lyapunov-row slope (1/s). Must stay below 2 / max ||x - goal|| so
    /// the hard block remains feasible over the whole arena.
    pub gamma_clf: f64,
    /// Input box half-width (m/s).
    pub u_max: f64,
}

impl Default for ControlGains {
    fn default() -> Self {
        ControlGains { gamma_cbf: 1.0, gamma_clf: 0.05, u_max: 1.0 }
    }
}

/// Proportional gain of the goal-seeking reference input.
const K_REF: f64 = 1.0;

/// Number of hard constraints in the assembled system: Lyapunov row plus
/// both input-box halves.
pub const N_HARD_NAV: usize = 5;

/// Assembles the time-varying constraint system at state `x` and time `t`.
///
/// Stored column order: [Lyapunov | +u box (2) | -u box (2) | static
/// zones in index order | dynamic zones in index order]; the hard block
/// comes first so `n_hard = 5`.
///
/// Row values: a zone contributes column `-2 (x - y_j(t))` and bound
/// `gamma_cbf * h_j`, minus `2 (x - y_j)^T v_j` when moving; the Lyapunov
/// row is column `2 (x - goal)` with bound `-gamma_clf * V(x)`; box rows
/// bound each input component by `u_max`.
pub fn build_constraints(
    x: &[f64; 2],
    t: f64,
    zones: &[Zone],
    goal: &[f64; 2],
    gains: &ControlGains,
) -> ConstraintSet {
    assert!(
        gains.gamma_cbf > 0.0 && gains.gamma_clf > 0.0 && gains.u_max > 0.0,
        "control gains must be positive"
    );
    assert!(zones.iter().all(|z| z.radius > 0.0), "zone radii must be positive");
    let statics: Vec<&Zone> = zones.iter().filter(|z| z.is_static()).collect();
    let dynamics: Vec<&Zone> = zones.iter().filter(|z| !z.is_static()).collect();
    let c = N_HARD_NAV + zones.len();
    let mut a = Mat::zeros(2, c);
    let mut b = vec![0.0; c];

    // Lyapunov row.
    let d = [x[0] - goal[0], x[1] - goal[1]];
    let v = d[0] * d[0] + d[1] * d[1];
    a.set(0, 0, 2.0 * d[0]);
    a.set(1, 0, 2.0 * d[1]);
    b[0] = -gains.gamma_clf * v;

    // Input box: u_i <= u_max and -u_i <= u_max.
    for i in 0..2 {
        a.set(i, 1 + i, 1.0);
        b[1 + i] = gains.u_max;
        a.set(i, 3 + i, -1.0);
        b[3 + i] = gains.u_max;
    }

    let mut col = N_HARD_NAV;
    for z in statics.iter().chain(dynamics.iter()) {
        let y = z.center_at(t);
        let dz = [x[0] - y[0], x[1] - y[1]];
        let h = dz[0] * dz[0] + dz[1] * dz[1] - z.radius * z.radius;
        a.set(0, col, -2.0 * dz[0]);
        a.set(1, col, -2.0 * dz[1]);
        let transport = 2.0 * (dz[0] * z.velocity[0] + dz[1] * z.velocity[1]);
        b[col] = gains.gamma_cbf * h - transport;
        col += 1;
    }

    ConstraintSet::new(a, b, N_HARD_NAV).expect("assembled system is well-formed")
}

/// Saturated goal-seeking reference input: `-K (x - goal)` clamped to the
/// input box componentwise.
pub fn reference_input(x: &[f64; 2], goal: &[f64; 2], u_max: f64) -> [f64; 2] {
    [
        (-K_REF * (x[0] - goal[0])).clamp(-u_max, u_max),
        (-K_REF * (x[1] - goal[1])).clamp(-u_max, u_max),
    ]
}

/// Projects `u_ref` onto the enforced constraints of `p`.
///
/// The selector is responsible for handing over a feasible configuration;
/// an `Err` here is a contract violation and is surfaced loudly by the
/// episode loop.
pub fn control_step(
    cs: &ConstraintSet,
    p: &Configuration,
    u_ref: &[f64; 2],
) -> Result<[f64; 2], QpInfeasible> {
    let (a, b) = mask(cs, p);
    let u = solve_min_norm_qp(u_ref, &a, &b)?;
    Ok([u[0], u[1]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feasibility::{enforced_residual_ok, fc, farkas_feasible};
    use crate::lp::TOL_FEAS;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gains() -> ControlGains {
        ControlGains::default()
    }

    #[test]
    fn zone_outside_gives_positive_bound() {
        let z = Zone { center: [5.0, 0.0], velocity: [0.0, 0.0], radius: 1.5 };
        let cs = build_constraints(&[0.0, 0.0], 0.0, &[z], &[9.0, 9.0], &gains());
        // Zone row sits right after the hard block.
        assert!(cs.b()[N_HARD_NAV] > 0.0);
    }

    #[test]
    fn lyapunov_row_vanishes_at_goal() {
        let goal = [3.0, -2.0];
        let cs = build_constraints(&goal.clone(), 0.0, &[], &goal, &gains());
        assert_eq!(cs.a().get(0, 0), 0.0);
        assert_eq!(cs.a().get(1, 0), 0.0);
        assert_eq!(cs.b()[0], 0.0);
    }

    #[test]
    fn receding_zone_loosens_bound() {
        // Receding: center velocity pointing away from the robot,
        // (x - y)^T v < 0.
        let x = [0.0, 0.0];
        let stat = Zone { center: [3.0, 0.0], velocity: [0.0, 0.0], radius: 1.5 };
        let away = Zone { center: [3.0, 0.0], velocity: [2.0, 0.0], radius: 1.5 };
        let toward = Zone { center: [3.0, 0.0], velocity: [-2.0, 0.0], radius: 1.5 };
        let b_stat = build_constraints(&x, 0.0, &[stat], &[9.0, 9.0], &gains()).b()[N_HARD_NAV];
        let b_away = build_constraints(&x, 0.0, &[away], &[9.0, 9.0], &gains()).b()[N_HARD_NAV];
        let b_toward =
            build_constraints(&x, 0.0, &[toward], &[9.0, 9.0], &gains()).b()[N_HARD_NAV];
        assert!(b_away > b_stat);
        assert!(b_toward < b_stat);
    }

    /// One Euler step under any input satisfying a zone row keeps the
    /// barrier decay bounded: h(x+, t+) >= h(x, t)(1 - gamma dt) - O(dt^2).
    #[test]
    fn barrier_rows_verified_by_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let dt = 1e-4;
        for _ in 0..100 {
            let x = [rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)];
            let moving = rng.gen_bool(0.5);
            let theta = rng.gen_range(0.0..std::f64::consts::TAU);
            let z = Zone {
                center: [rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)],
                velocity: if moving { [2.0 * theta.cos(), 2.0 * theta.sin()] } else { [0.0, 0.0] },
                radius: 1.5,
            };
            let g = gains();
            let cs = build_constraints(&x, 0.0, &[z], &[9.0, 9.0], &g);
            let a_col = [cs.a().get(0, N_HARD_NAV), cs.a().get(1, N_HARD_NAV)];
            let bound = cs.b()[N_HARD_NAV];
            // A random input pushed onto the row boundary, then any
            // satisfying input slightly inside.
            for _ in 0..3 {
                let mut u = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                let lhs = a_col[0] * u[0] + a_col[1] * u[1];
                if lhs > bound {
                    // Project back onto the halfspace.
                    let nn = a_col[0] * a_col[0] + a_col[1] * a_col[1];
                    if nn < 1e-12 {
                        continue;
                    }
                    let s = (lhs - bound) / nn;
                    u = [u[0] - s * a_col[0], u[1] - s * a_col[1]];
                }
                let h0 = z.barrier(&x, 0.0);
                let x1 = [x[0] + u[0] * dt, x[1] + u[1] * dt];
                let h1 = z.barrier(&x1, dt);
                assert!(
                    h1 >= h0 * (1.0 - g.gamma_cbf * dt) - 1e-6,
                    "barrier decayed too fast: h0 = {h0}, h1 = {h1}"
                );
            }
        }
    }

    /// The hard block (Lyapunov + box) stays feasible over the whole
    /// arena at the default gains.
    #[test]
    fn hard_block_feasible_across_arena() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = gains();
        for _ in 0..200 {
            let x = [rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)];
            let goal = [rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)];
            let cs = build_constraints(&x, 0.0, &[], &goal, &g);
            assert!(farkas_feasible(&cs), "hard block infeasible at x={x:?} goal={goal:?}");
        }
        // Worst-case corner separation.
        let cs = build_constraints(&[-10.0, -10.0], 0.0, &[], &[10.0, 10.0], &g);
        assert!(farkas_feasible(&cs));
    }

    #[test]
    fn control_step_clamps_to_box() {
        let cs = build_constraints(&[0.0, 0.0], 0.0, &[], &[0.0, 0.0], &gains());
        // Goal at the origin: Lyapunov row is vacuous, box remains.
        let u = control_step(&cs, &Configuration::all_ones(cs.len()), &[3.0, 0.0]).unwrap();
        assert!((u[0] - 1.0).abs() < 1e-9);
        assert!(u[1].abs() < 1e-9);
    }

    #[test]
    fn control_step_zero_reference_stays_zero() {
        let cs = build_constraints(&[5.0, 5.0], 0.0, &[], &[5.0, 5.0], &gains());
        let u = control_step(&cs, &Configuration::all_ones(cs.len()), &[0.0, 0.0]).unwrap();
        assert!(u[0].abs() < 1e-9 && u[1].abs() < 1e-9);
    }

    #[test]
    fn control_step_satisfies_enforced_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..200 {
            let x = [rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)];
            let goal = [rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)];
            let zones: Vec<Zone> = (0..rng.gen_range(0..4))
                .map(|_| Zone {
                    center: [rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)],
                    velocity: [0.0, 0.0],
                    radius: 1.5,
                })
                .collect();
            let cs = build_constraints(&x, 0.0, &zones, &goal, &gains());
            // Random hard-respecting configuration, repaired to feasible.
            let mut p = Configuration::all_ones(cs.len());
            for i in cs.n_hard()..cs.len() {
                p.set_enforced(i, rng.gen_bool(0.7));
            }
            if !fc(&cs, &p).feasible {
                continue;
            }
            let u_ref = reference_input(&x, &goal, gains().u_max);
            let u = control_step(&cs, &p, &u_ref).unwrap();
            assert!(enforced_residual_ok(&cs, &p, &u, TOL_FEAS));
        }
    }
}
