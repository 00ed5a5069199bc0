use approx::assert_relative_eq;
use ndw_core::closed_form::{self, ExactClosedForm};
use ndw_core::dirac::{bin_to_lattice, make_wavepacket, GridSpec, Operator, Propagator, WavepacketSpec};
use ndw_core::moments::{empirical_moments, exact_moments};
use ndw_core::monte_carlo::exhaustive_channel;
use ndw_core::sampling::Sign;
use ndw_core::walk::{evolve, WalkParams};

#[test]
fn recurrence_closed_form_and_enumeration_agree() {
    for &eps in &[0.1, 0.3, 0.7, 1.0, 1.4] {
        for n in 0..=10 {
            let params = WalkParams::new(eps, n).unwrap();
            let rec = evolve(&params);
            let enumerated = exhaustive_channel(&params).unwrap();
            let cf = closed_form::distribution(n, eps).unwrap();
            let rec_p = rec.distribution().p;
            for j in 0..=n {
                assert!((enumerated.mean_alpha[j] - rec.alpha[j]).abs() < 1e-13);
                assert!((enumerated.mean_beta[j] - rec.beta[j]).abs() < 1e-13);
                assert!((cf.p[j] - rec_p[j]).abs() < 1e-11);
            }
        }
    }
}

#[test]
fn exact_closed_form_rounds_to_recurrence_at_small_n() {
    let exact = ExactClosedForm::new(0.5).unwrap();
    let rec = evolve(&WalkParams::new(0.5, 15).unwrap()).distribution();
    for (k, p) in rec.iter() {
        assert_relative_eq!(exact.p_f64(15, k).unwrap(), p, max_relative = 1e-14);
    }
}

#[test]
fn moments_of_recurrence_match_exact_expressions() {
    for n in [1usize, 10, 100, 300] {
        let m = empirical_moments(&evolve(&WalkParams::new(0.2, n).unwrap()).distribution(), 2);
        let e = exact_moments(n, 0.2).unwrap();
        assert_relative_eq!(m[1], e.s1, max_relative = 1e-10, epsilon = 1e-12);
        assert_relative_eq!(m[2], e.s2, max_relative = 1e-10, epsilon = 1e-12);
    }
}

#[test]
fn split_dynamics_averaged_over_all_sequences_is_the_walk() {
    let n = 8;
    for &eps in &[0.1f64, 0.2] {
        let grid = GridSpec::for_steps(n).unwrap();
        let f = make_wavepacket(&WavepacketSpec::default(), &grid).unwrap();
        let prop = Propagator::new(&grid, Operator::Split, 1.0, eps.atan());
        let mut mean = vec![0.0; grid.extent()];
        for bits in 0u32..(1 << n) {
            let signs: Vec<Sign> = (0..n).map(|i| Sign::from_bit(bits >> i & 1 == 1)).collect();
            let b = bin_to_lattice(&prop.evolve(&f, &signs));
            for (m, v) in mean.iter_mut().zip(b.total_per_cell()) {
                *m += v / (1 << n) as f64;
            }
        }
        let walk = evolve(&WalkParams::new(eps, n).unwrap()).distribution();
        let mut tv = 0.0;
        for (i, m) in mean.iter().enumerate() {
            let k = grid.k_min() + i as i64;
            tv += (m - walk.probability_at(k)).abs();
        }
        assert!(0.5 * tv < 1e-3, "tv {tv}");
        assert!(0.5 * tv < 1e-12, "tv {tv}");
    }
}
