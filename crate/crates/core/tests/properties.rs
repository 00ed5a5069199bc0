use ndw_core::moments::{empirical_moments, exact_moments};
use ndw_core::monte_carlo::single_trajectory;
use ndw_core::sampling::{signs_for, SiteStats};
use ndw_core::walk::{evolve, WalkParams};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn recurrence_conserves_probability(eps in 0.0f64..3.0, n in 0usize..150) {
        let state = evolve(&WalkParams::new(eps, n).unwrap());
        prop_assert!((state.trace() - 1.0).abs() < 1e-12);
        prop_assert!(state.alpha.iter().chain(&state.beta).all(|&v| v >= 0.0));
        prop_assert_eq!(state.alpha.len(), n + 1);
    }

    #[test]
    fn first_moment_is_bounded_by_light_cone(eps in 0.01f64..2.0, n in 0usize..200) {
        let e = exact_moments(n, eps).unwrap();
        prop_assert!(e.s1.abs() <= n as f64 + 1e-9);
        prop_assert!(e.s2 <= (n * n) as f64 * (1.0 + 1e-12) + 1e-9);
        let m = empirical_moments(&evolve(&WalkParams::new(eps, n).unwrap()).distribution(), 2);
        prop_assert!((m[1] - e.s1).abs() <= 1e-10 * e.s2.max(1.0));
    }

    #[test]
    fn single_trajectories_are_normalized(eps in 0.0f64..2.0, n in 0usize..80, seed: u64, r: u64) {
        let psi = single_trajectory(&WalkParams::new(eps, n).unwrap(), &signs_for(seed, r, n)).unwrap();
        prop_assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn split_merge_matches_one_pass(data in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 2..40), cut in 1usize..39) {
        let cut = cut.min(data.len() - 1);
        let mut whole = SiteStats::new(3);
        data.iter().for_each(|s| whole.push(s));
        let mut left = SiteStats::new(3);
        let mut right = SiteStats::new(3);
        data[..cut].iter().for_each(|s| left.push(s));
        data[cut..].iter().for_each(|s| right.push(s));
        left.merge(&right);
        prop_assert_eq!(left.count(), whole.count());
        for (a, b) in left.mean().iter().zip(whole.mean()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in left.std_err().iter().zip(whole.std_err()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
