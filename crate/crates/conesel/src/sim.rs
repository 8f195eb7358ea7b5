//! Scenario sampling and the hybrid closed-loop episode runner.
//!
//! The loop flows the single-integrator robot under a fixed enforcement
//! configuration and jumps (reselects) whenever the configuration leaves
//! the feasible set. Selectors additionally run every step by default so
//! disregarded constraints can be re-enforced; `select_on_jump_only`
//! restricts them to jump instants.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::baselines::{baseline1_select, baseline2_select};
use crate::constraints::{nullspace_basis, Configuration};
use crate::controller::{
    build_constraints, control_step, reference_input, ControlGains, Zone, N_HARD_NAV,
};
use crate::feasibility::{enforced_residual_ok, farkas_feasible, fc_with_basis};
use crate::lp::TOL_FEAS;
use crate::selection::{ica_with_basis, lcs_with_basis, SelectionState};

pub const ARENA_HALF_WIDTH: f64 = 10.0;
pub const ZONE_RADIUS: f64 = 1.5;
pub const MIN_SEPARATION: f64 = 7.0;
pub const DYNAMIC_SPEED: f64 = 2.0;
pub const DEFAULT_HORIZON: f64 = 30.0;
pub const DEFAULT_DT: f64 = 0.1;
pub const GOAL_TOLERANCE: f64 = 0.1;
const SAMPLE_ATTEMPT_CAP: usize = 10_000;

/// Benchmark world description; zones are stored static-first.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub zones: Vec<Zone>,
    pub x0: [f64; 2],
    pub goal: [f64; 2],
    pub horizon_t: f64,
    pub dt: f64,
    pub gains: ControlGains,
    pub seed: u64,
}

impl Scenario {
    pub fn n_static(&self) -> usize {
        self.zones.iter().filter(|z| z.is_static()).count()
    }

    pub fn n_dynamic(&self) -> usize {
        self.zones.len() - self.n_static()
    }

    /// Sampling invariants: start/goal separation, start and goal clear
    /// of static zones, dynamic speeds, and a fully-enforceable initial
    /// state.
    pub fn check_invariants(&self) -> Result<(), String> {
        let dx = self.x0[0] - self.goal[0];
        let dy = self.x0[1] - self.goal[1];
        if (dx * dx + dy * dy).sqrt() < MIN_SEPARATION - 1e-9 {
            return Err("start and goal are closer than the minimum separation".into());
        }
        for z in self.zones.iter().filter(|z| z.is_static()) {
            for pt in [&self.x0, &self.goal] {
                if z.barrier(pt, 0.0) <= 0.0 {
                    return Err("start or goal lies inside a static zone".into());
                }
            }
        }
        for z in self.zones.iter().filter(|z| !z.is_static()) {
            let speed = (z.velocity[0] * z.velocity[0] + z.velocity[1] * z.velocity[1]).sqrt();
            if (speed - DYNAMIC_SPEED).abs() > 1e-9 {
                return Err("dynamic zone speed deviates from the nominal speed".into());
            }
        }
        let cs = build_constraints(&self.x0, 0.0, &self.zones, &self.goal, &self.gains);
        if !farkas_feasible(&cs) {
            return Err("initial state does not satisfy all constraints".into());
        }
        Ok(())
    }

    /// Flat text record for exact replay: `key = value` lines, vectors as
    /// space-separated components.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("seed = {}\n", self.seed));
        out.push_str(&format!("n_static = {}\n", self.n_static()));
        out.push_str(&format!("n_dynamic = {}\n", self.n_dynamic()));
        out.push_str(&format!("x0 = {} {}\n", self.x0[0], self.x0[1]));
        out.push_str(&format!("goal = {} {}\n", self.goal[0], self.goal[1]));
        out.push_str(&format!("T = {}\n", self.horizon_t));
        out.push_str(&format!("dt = {}\n", self.dt));
        out.push_str(&format!("gamma_cbf = {}\n", self.gains.gamma_cbf));
        out.push_str(&format!("gamma_clf = {}\n", self.gains.gamma_clf));
        out.push_str(&format!("u_max = {}\n", self.gains.u_max));
        for (i, z) in self.zones.iter().enumerate() {
            out.push_str(&format!("zone[{i}].center = {} {}\n", z.center[0], z.center[1]));
            out.push_str(&format!("zone[{i}].velocity = {} {}\n", z.velocity[0], z.velocity[1]));
            out.push_str(&format!("zone[{i}].radius = {}\n", z.radius));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, String> {
        let mut scalars = std::collections::BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected `key = value`", lineno + 1))?;
            scalars.insert(key.trim().to_string(), value.trim().to_string());
        }
        let get = |key: &str| -> Result<&String, String> {
            scalars.get(key).ok_or_else(|| format!("missing field `{key}`"))
        };
        let parse_f = |key: &str| -> Result<f64, String> {
            get(key)?.parse::<f64>().map_err(|e| format!("field `{key}`: {e}"))
        };
        let parse_vec2 = |key: &str| -> Result<[f64; 2], String> {
            let raw = get(key)?;
            let parts: Vec<&str> = raw.split_whitespace().collect();
            if parts.len() != 2 {
                return Err(format!("field `{key}` must have two components"));
            }
            Ok([
                parts[0].parse().map_err(|e| format!("field `{key}`: {e}"))?,
                parts[1].parse().map_err(|e| format!("field `{key}`: {e}"))?,
            ])
        };
        let seed = get("seed")?.parse::<u64>().map_err(|e| format!("field `seed`: {e}"))?;
        let n_static =
            get("n_static")?.parse::<usize>().map_err(|e| format!("field `n_static`: {e}"))?;
        let n_dynamic =
            get("n_dynamic")?.parse::<usize>().map_err(|e| format!("field `n_dynamic`: {e}"))?;
        let mut zones = Vec::with_capacity(n_static + n_dynamic);
        for i in 0..n_static + n_dynamic {
            zones.push(Zone {
                center: parse_vec2(&format!("zone[{i}].center"))?,
                velocity: parse_vec2(&format!("zone[{i}].velocity"))?,
                radius: parse_f(&format!("zone[{i}].radius"))?,
            });
        }
        let sc = Scenario {
            zones,
            x0: parse_vec2("x0")?,
            goal: parse_vec2("goal")?,
            horizon_t: parse_f("T")?,
            dt: parse_f("dt")?,
            gains: ControlGains {
                gamma_cbf: parse_f("gamma_cbf")?,
                gamma_clf: parse_f("gamma_clf")?,
                u_max: parse_f("u_max")?,
            },
            seed,
        };
        if sc.n_static() != n_static {
            return Err("zone list does not match the declared static count".into());
        }
        sc.check_invariants()?;
        Ok(sc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selector {
    Ica,
    Lcs { depth: usize },
    Baseline1,
    Baseline2,
}

impl Selector {
    pub fn label(&self) -> String {
        match self {
            Selector::Ica => "ica".into(),
            Selector::Lcs { depth } => format!("lcs{depth}"),
            Selector::Baseline1 => "b1".into(),
            Selector::Baseline2 => "b2".into(),
        }
    }
}

impl std::str::FromStr for Selector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "ica" => Ok(Selector::Ica),
            "b1" => Ok(Selector::Baseline1),
            "b2" => Ok(Selector::Baseline2),
            _ => {
                if let Some(depth) = s.strip_prefix("lcs") {
                    let depth: usize =
                        depth.parse().map_err(|_| format!("bad selector `{s}`"))?;
                    if depth == 0 {
                        return Err("search depth must be at least 1".into());
                    }
                    Ok(Selector::Lcs { depth })
                } else {
                    Err(format!(
                        "unknown selector `{s}` (expected ica, lcsN, b1 or b2)"
                    ))
                }
            }
        }
    }
}

/// Per-step measurement record.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub t: f64,
    /// Cumulative jump count (the hybrid index).
    pub jump_count: usize,
    /// Post-selection configuration (always feasible).
    pub p: Configuration,
    pub dropped_soft_pct: f64,
    pub selector_time: f64,
    pub qp_time: f64,
    pub x: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct RunMetrics {
    pub records: Vec<StepRecord>,
    pub avg_drop_pct: f64,
    pub max_drop_pct: f64,
    pub avg_time: f64,
    pub max_time: f64,
    pub reached_goal: bool,
}

impl RunMetrics {
    fn from_records(records: Vec<StepRecord>, goal: &[f64; 2]) -> Self {
        let n = records.len().max(1) as f64;
        let avg_drop_pct = records.iter().map(|r| r.dropped_soft_pct).sum::<f64>() / n;
        let max_drop_pct = records.iter().map(|r| r.dropped_soft_pct).fold(0.0, f64::max);
        let avg_time = records.iter().map(|r| r.selector_time).sum::<f64>() / n;
        let max_time = records.iter().map(|r| r.selector_time).fold(0.0, f64::max);
        let reached_goal = records.iter().any(|r| {
            let dx = r.x[0] - goal[0];
            let dy = r.x[1] - goal[1];
            (dx * dx + dy * dy).sqrt() <= GOAL_TOLERANCE
        });
        RunMetrics { records, avg_drop_pct, max_drop_pct, avg_time, max_time, reached_goal }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingExhausted;

impl std::fmt::Display for SamplingExhausted {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "scenario sampling exhausted its attempt budget; arena is over-constrained")
    }
}

impl std::error::Error for SamplingExhausted {}

#[derive(Debug, Clone, PartialEq)]
pub enum SimError {
    /// The hard constraint block became infeasible during the run.
    HardInfeasible { t: f64 },
    /// A selector returned an infeasible configuration.
    SelectorContract { t: f64 },
    /// The controller QP was handed an empty polyhedron.
    QpInfeasible { t: f64 },
}

impl std::fmt::Display for SimError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SimError::HardInfeasible { t } => {
                write!(f, "hard constraints infeasible at t = {t}")
            }
            SimError::SelectorContract { t } => {
                write!(f, "selector returned an infeasible configuration at t = {t}")
            }
            SimError::QpInfeasible { t } => {
                write!(f, "controller projection infeasible at t = {t}")
            }
        }
    }
}

impl std::error::Error for SimError {}

/// Rejection-samples a benchmark scenario: zone centers and the
/// start/goal pair uniform over the arena, dynamic zones at the nominal
/// speed with a uniform heading, re-drawn until every invariant holds.
/// Deterministic per seed.
pub fn sample_scenario(
    n_static: usize,
    n_dynamic: usize,
    seed: u64,
) -> Result<Scenario, SamplingExhausted> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gains = ControlGains::default();
    let w = ARENA_HALF_WIDTH;
    for _ in 0..SAMPLE_ATTEMPT_CAP {
        let mut zones = Vec::with_capacity(n_static + n_dynamic);
        for _ in 0..n_static {
            zones.push(Zone {
                center: [rng.gen_range(-w..w), rng.gen_range(-w..w)],
                velocity: [0.0, 0.0],
                radius: ZONE_RADIUS,
            });
        }
        for _ in 0..n_dynamic {
            let center = [rng.gen_range(-w..w), rng.gen_range(-w..w)];
            let heading = rng.gen_range(0.0..std::f64::consts::TAU);
            zones.push(Zone {
                center,
                velocity: [DYNAMIC_SPEED * heading.cos(), DYNAMIC_SPEED * heading.sin()],
                radius: ZONE_RADIUS,
            });
        }
        let x0 = [rng.gen_range(-w..w), rng.gen_range(-w..w)];
        let goal = [rng.gen_range(-w..w), rng.gen_range(-w..w)];
        let sc = Scenario {
            zones,
            x0,
            goal,
            horizon_t: DEFAULT_HORIZON,
            dt: DEFAULT_DT,
            gains,
            seed,
        };
        if sc.check_invariants().is_ok() {
            return Ok(sc);
        }
    }
    Err(SamplingExhausted)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EpisodeOptions {
    /// Run the selector only when the current configuration has become
    /// infeasible, instead of every step.
    pub select_on_jump_only: bool,
}

pub fn run_episode(sc: &Scenario, selector: Selector) -> Result<RunMetrics, SimError> {
    run_episode_opts(sc, selector, EpisodeOptions::default())
}

pub fn run_episode_opts(
    sc: &Scenario,
    selector: Selector,
    opts: EpisodeOptions,
) -> Result<RunMetrics, SimError> {
    let n_steps = (sc.horizon_t / sc.dt).round() as usize;
    let n_soft = sc.zones.len();
    let mut x = sc.x0;
    let mut p = Configuration::all_ones(N_HARD_NAV + n_soft);
    let mut state = SelectionState {
        p_current: p.clone(),
        p_last_feasible: p.clone(),
        nu_last: vec![],
        depth: match selector {
            Selector::Lcs { depth } => depth,
            _ => 1,
        },
    };
    let mut lm = vec![0.0; N_HARD_NAV + n_soft];
    let mut jump_count = 0usize;
    let mut records = Vec::with_capacity(n_steps + 1);

    for step in 0..=n_steps {
        let t = step as f64 * sc.dt;
        // Zone centers advance by dt before each constraint build.
        let cs = build_constraints(&x, t + sc.dt, &sc.zones, &sc.goal, &sc.gains);
        let basis = nullspace_basis(&cs);

        let pre = fc_with_basis(&cs, &basis, &p);
        if pre.feasible {
            state.nu_last = pre.nu.clone().expect("feasible certificate carries nu");
            state.p_last_feasible = p.clone();
        } else {
            jump_count += 1;
        }
        if state.nu_last.is_empty() {
            // Arrived infeasible on the very first step: seed the ranking
            // state from the hard-only certificate.
            let hard = Configuration::hard_only(&cs);
            let hc = fc_with_basis(&cs, &basis, &hard);
            match hc.nu {
                Some(nu) => {
                    state.nu_last = nu;
                    state.p_last_feasible = hard;
                }
                None => return Err(SimError::HardInfeasible { t }),
            }
        }

        let run_selector = !opts.select_on_jump_only || !pre.feasible;
        let sel_start = Instant::now();
        if run_selector {
            p = match selector {
                Selector::Ica => ica_with_basis(&cs, &basis, &p)
                    .map_err(|_| SimError::HardInfeasible { t })?
                    .config,
                Selector::Lcs { depth } => {
                    lcs_with_basis(&cs, &basis, &p, &state.p_last_feasible, &state.nu_last, depth)
                        .map_err(|_| SimError::HardInfeasible { t })?
                }
                Selector::Baseline1 => {
                    baseline1_select(&cs).map_err(|_| SimError::HardInfeasible { t })?
                }
                Selector::Baseline2 => {
                    let (np, nlm) = baseline2_select(&cs, &p, &lm)
                        .map_err(|_| SimError::HardInfeasible { t })?;
                    lm = nlm;
                    np
                }
            };
        }
        let selector_time = sel_start.elapsed().as_secs_f64();

        // The jump target must land in the feasible set.
        let post = if run_selector { fc_with_basis(&cs, &basis, &p) } else { pre };
        if !post.feasible {
            return Err(SimError::SelectorContract { t });
        }
        state.nu_last = post.nu.expect("feasible certificate carries nu");
        state.p_last_feasible = p.clone();
        state.p_current = p.clone();
        debug_assert!(p.respects_hard(&cs));

        let u_ref = reference_input(&x, &sc.goal, sc.gains.u_max);
        let qp_start = Instant::now();
        let u = control_step(&cs, &p, &u_ref).map_err(|_| SimError::QpInfeasible { t })?;
        let qp_time = qp_start.elapsed().as_secs_f64();
        assert!(
            enforced_residual_ok(&cs, &p, &u, TOL_FEAS),
            "controller output violates an enforced constraint"
        );

        let dropped = n_soft - (p.enforced_count() - N_HARD_NAV);
        let dropped_soft_pct =
            if n_soft == 0 { 0.0 } else { 100.0 * dropped as f64 / n_soft as f64 };
        records.push(StepRecord {
            t,
            jump_count,
            p: p.clone(),
            dropped_soft_pct,
            selector_time,
            qp_time,
            x,
        });
        x = [x[0] + u[0] * sc.dt, x[1] + u[1] * sc.dt];
    }
    Ok(RunMetrics::from_records(records, &sc.goal))
}
