//! Feasibility certification and online constraint selection for
//! optimization-based controllers.
//!
//! The crate decides whether a set of affine input constraints
//! `A_i^T u <= B_i` admits any input at all, produces a certificate vector
//! that ranks how much each constraint contributes to (in)feasibility, and
//! uses that ranking to pick maximal-effort feasible constraint subsets
//! online. A 2-D navigation benchmark (barrier constraints for moving
//! zones, a Lyapunov goal constraint, input bounds) exercises the
//! selectors against two slack-LP baselines.
//!
//! Module map:
//! - [`lp`]: dense two-phase simplex with exact status classification and
//!   a small exact projection QP,
//! - [`constraints`]: the constraint system, configurations, masking and
//!   the nullspace reduction,
//! - [`feasibility`]: the feasibility criterion, certificates and
//!   polar-cone distance diagnostics,
//! - [`selection`]: the FC/ICA/LCS selection algorithms,
//! - [`baselines`]: elastic-LP comparison heuristics,
//! - [`controller`]: constraint assembly for the navigation benchmark and
//!   the min-norm controller,
//! - [`sim`]: scenario sampling and the hybrid closed-loop episode runner,
//! - [`selftest`]: seeded instance generators, independent oracles and the
//!   cross-check suites behind `conesel selftest`.

pub mod baselines;
pub mod constraints;
pub mod controller;
pub mod feasibility;
pub mod linalg;
pub mod lp;
pub mod selection;
pub mod selftest;
pub mod sim;
