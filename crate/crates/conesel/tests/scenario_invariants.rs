//! Invariant sweep over sampled benchmark scenarios at benchmark scale.

use conesel::sim::{sample_scenario, MIN_SEPARATION};

#[test]
fn hundred_samples_at_fifty_zones_hold_invariants() {
    for seed in 0..100u64 {
        let sc = sample_scenario(25, 25, seed).unwrap();
        sc.check_invariants().unwrap();
        assert_eq!(sc.n_static(), 25);
        assert_eq!(sc.n_dynamic(), 25);
        let dx = sc.x0[0] - sc.goal[0];
        let dy = sc.x0[1] - sc.goal[1];
        assert!((dx * dx + dy * dy).sqrt() >= MIN_SEPARATION);
    }
}
