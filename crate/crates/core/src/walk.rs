//! Diagonal density-matrix recurrence for the walk with unitary noise.
//!
//! For the initial states handled here the ensemble density operator stays
//! diagonal in the `|k> (x) |tau>` basis, so after `N` steps it is fully described
//! by two arrays `alpha[j]`, `beta[j]` indexed by `j = (k + N) / 2`, i.e. by the
//! sites `k = -N, -N + 2, ..., N` of the occupied parity class.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use crate::{Error, Result};

/// Dimensionless walk configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkParams {
    epsilon: f64,
    n_steps: usize,
}

impl WalkParams {
    pub fn new(epsilon: f64, n_steps: usize) -> Result<Self> {
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(Error::Domain(format!(
                "noise strength must be finite and non-negative, got {epsilon}"
            )));
        }
        Ok(Self { epsilon, n_steps })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn with_steps(self, n_steps: usize) -> Self {
        Self { n_steps, ..self }
    }

    /// Coin normalisation `1 / sqrt(1 + eps^2)`.
    pub fn normalization(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Weight for keeping the internal state in one step, `1 / (1 + eps^2)`.
    pub fn norm_sq(&self) -> f64 {
        1.0 / (1.0 + self.epsilon * self.epsilon)
    }

    /// Weight for flipping the internal state in one step, `eps^2 / (1 + eps^2)`.
    pub fn flip_weight(&self) -> f64 {
        let e2 = self.epsilon * self.epsilon;
        e2 / (1.0 + e2)
    }

    /// True when `eps > 1`, beyond the small-noise regime the walk is meant to
    /// approximate. Every formula stays well defined there.
    pub fn beyond_validity(&self) -> bool {
        self.epsilon > 1.0
    }
}

/// Site coordinate `k` of parity-lattice index `j` after `n` steps.
pub fn site(n: usize, j: usize) -> i64 {
    2 * j as i64 - n as i64
}

/// Parity-lattice index of site `k` after `n` steps, if `k` is occupied.
pub fn index_of(n: usize, k: i64) -> Option<usize> {
    let n_i = n as i64;
    if k.abs() > n_i || (k + n_i) % 2 != 0 {
        return None;
    }
    Some(((k + n_i) / 2) as usize)
}

/// Diagonal coefficients of the ensemble density operator after `n` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalState {
    pub n: usize,
    /// Probabilities of `|k> (x) |+1>` at `k = -n, -n + 2, ..., n`.
    pub alpha: Vec<f64>,
    /// Probabilities of `|k> (x) |-1>` at the same sites.
    pub beta: Vec<f64>,
}

impl DiagonalState {
    /// Particle at the origin with internal state `tau = +1`.
    pub fn initial() -> Self {
        Self {
            n: 0,
            alpha: vec![1.0],
            beta: vec![0.0],
        }
    }

    /// Particle at the origin with a maximally mixed internal state.
    pub fn mixed_initial() -> Self {
        Self {
            n: 0,
            alpha: vec![0.5],
            beta: vec![0.5],
        }
    }

    pub fn check_shape(&self) -> Result<()> {
        let expected = self.n + 1;
        if self.alpha.len() != expected || self.beta.len() != expected {
            return Err(Error::Structural(format!(
                "state at step {} needs {} sites, got alpha={} beta={}",
                self.n,
                expected,
                self.alpha.len(),
                self.beta.len()
            )));
        }
        Ok(())
    }

    /// Advances one step of the coupled recurrence:
    ///
    /// ```text
    /// alpha'[k] = N^2 (alpha[k-1] + eps^2 beta[k-1])
    /// beta'[k]  = N^2 (beta[k+1] + eps^2 alpha[k+1])
    /// ```
    pub fn step(&self, params: &WalkParams) -> Result<Self> {
        self.check_shape()?;
        let keep = params.norm_sq();
        let flip = params.flip_weight();
        let n = self.n;

        let mut alpha = vec![0.0; n + 2];
        let mut beta = vec![0.0; n + 2];
        for j in 0..=n {
            // site k = 2j - n moves to k + 1 (index j + 1) as tau = +1,
            // and to k - 1 (index j) as tau = -1
            alpha[j + 1] = keep * self.alpha[j] + flip * self.beta[j];
            beta[j] = keep * self.beta[j] + flip * self.alpha[j];
        }
        Ok(Self {
            n: n + 1,
            alpha,
            beta,
        })
    }

    pub fn evolve_from(mut self, params: &WalkParams) -> Result<Self> {
        for _ in 0..params.n_steps() {
            self = self.step(params)?;
        }
        Ok(self)
    }

    pub fn trace(&self) -> f64 {
        crate::numerics::compensated_sum(self.alpha.iter().chain(&self.beta).copied())
    }

    pub fn alpha_at(&self, k: i64) -> f64 {
        index_of(self.n, k).map_or(0.0, |j| self.alpha[j])
    }

    pub fn beta_at(&self, k: i64) -> f64 {
        index_of(self.n, k).map_or(0.0, |j| self.beta[j])
    }

    pub fn sites(&self) -> impl Iterator<Item = i64> + '_ {
        (0..=self.n).map(move |j| site(self.n, j))
    }

    /// Site occupation probabilities `P = alpha + beta`.
    pub fn distribution(&self) -> Distribution {
        Distribution {
            n: self.n,
            p: self
                .alpha
                .iter()
                .zip(&self.beta)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

/// Evolves the `tau = +1` initial state for `params.n_steps()` steps.
pub fn evolve(params: &WalkParams) -> DiagonalState {
    DiagonalState::initial()
        .evolve_from(params)
        .expect("initial state has consistent shape")
}

/// Site probabilities after `n` steps on the parity lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    pub n: usize,
    pub p: Vec<f64>,
}

impl Distribution {
    pub fn sites(&self) -> impl Iterator<Item = i64> + '_ {
        (0..=self.n).map(move |j| site(self.n, j))
    }

    /// `(k, P_k)` pairs in increasing `k`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.sites().zip(self.p.iter().copied())
    }

    pub fn probability_at(&self, k: i64) -> f64 {
        index_of(self.n, k).map_or(0.0, |j| self.p[j])
    }

    pub fn total(&self) -> f64 {
        crate::numerics::compensated_sum(self.p.iter().copied())
    }
}

/// Binomial weights `C(n, j) / 2^n`, each correctly rounded from the exact
/// integer ratio.
fn binomial_row(n: usize) -> Vec<f64> {
    let denom = BigInt::one() << n;
    let mut c = BigInt::one();
    let mut row = Vec::with_capacity(n + 1);
    for j in 0..=n {
        if j > 0 {
            c = c * BigInt::from(n - j + 1) / BigInt::from(j);
        }
        let ratio = BigRational::new_raw(c.clone(), denom.clone());
        row.push(ratio.to_f64().unwrap_or(0.0));
    }
    row
}

/// Classical random walk distribution reached at `eps = 1`:
/// `P_{n,k} = C(n, (n+k)/2) / 2^n`.
pub fn pascal_distribution(n: usize) -> Distribution {
    Distribution {
        n,
        p: binomial_row(n),
    }
}

/// The `alpha`/`beta` split of the `eps = 1` walk: each is half of the previous
/// row shifted by one site.
pub fn pascal_split(n: usize) -> DiagonalState {
    if n == 0 {
        return DiagonalState::initial();
    }
    let prev = binomial_row(n - 1);
    let mut alpha = vec![0.0; n + 1];
    let mut beta = vec![0.0; n + 1];
    for (j, w) in prev.iter().enumerate() {
        // halving is exact away from the subnormal range
        alpha[j + 1] = 0.5 * w;
        beta[j] = 0.5 * w;
    }
    DiagonalState { n, alpha, beta }
}

/// `eps = 0` evolution of the mixed initial state: two deterministic horns at
/// `k = +-n`.
pub fn mixed_initial_distribution(n: usize) -> Distribution {
    let free = WalkParams { epsilon: 0.0, n_steps: n };
    DiagonalState::mixed_initial()
        .evolve_from(&free)
        .expect("mixed initial state has consistent shape")
        .distribution()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(eps: f64, n: usize) -> WalkParams {
        WalkParams::new(eps, n).unwrap()
    }

    #[test]
    fn initial_state_is_normalized_point_mass() {
        let s = DiagonalState::initial();
        assert_eq!(s.n, 0);
        assert_eq!(s.alpha, vec![1.0]);
        assert_eq!(s.beta, vec![0.0]);
        assert_eq!(s.trace(), 1.0);
        assert_eq!(evolve(&params(0.3, 0)), s);
    }

    #[test]
    fn one_step_matches_hand_computation() {
        let p = params(0.5, 1);
        let s = evolve(&p);
        assert_eq!(s.alpha, vec![0.0, 0.8]);
        assert_eq!(s.beta, vec![0.8 * 0.25, 0.0]);
        let d = s.distribution();
        assert_eq!(d.probability_at(1), 0.8);
        assert!((d.probability_at(-1) - 0.2).abs() < 1e-16);
    }

    #[test]
    fn two_steps_at_half() {
        let s = evolve(&params(0.5, 2));
        let close = |a: f64, b: f64| (a - b).abs() < 1e-15;
        assert!(close(s.alpha_at(2), 0.64));
        assert!(close(s.alpha_at(0), 0.04));
        assert!(close(s.beta_at(0), 0.16));
        assert!(close(s.beta_at(-2), 0.16));
        assert_eq!(s.alpha_at(-2), 0.0);
        assert_eq!(s.beta_at(2), 0.0);
        assert!((s.trace() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn free_walker_marches_right() {
        let s = evolve(&params(0.0, 37));
        assert_eq!(s.alpha_at(37), 1.0);
        assert_eq!(s.alpha.iter().sum::<f64>(), 1.0);
        assert!(s.beta.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn step_rejects_inconsistent_shape() {
        let bad = DiagonalState {
            n: 3,
            alpha: vec![0.0; 4],
            beta: vec![0.0; 3],
        };
        assert!(matches!(bad.step(&params(0.1, 1)), Err(Error::Structural(_))));
    }

    #[test]
    fn negative_or_nan_epsilon_rejected() {
        assert!(WalkParams::new(-0.1, 3).is_err());
        assert!(WalkParams::new(f64::NAN, 3).is_err());
        assert!(WalkParams::new(f64::INFINITY, 3).is_err());
        assert!(params(1.5, 3).beyond_validity());
        assert!(!params(1.0, 3).beyond_validity());
    }

    #[test]
    fn pascal_rows() {
        assert_eq!(pascal_distribution(2).p, vec![0.25, 0.5, 0.25]);
        assert_eq!(pascal_distribution(0).p, vec![1.0]);
        let walk = evolve(&params(1.0, 2)).distribution();
        assert_eq!(walk, pascal_distribution(2));
        let split = pascal_split(2);
        assert_eq!(split.alpha, vec![0.0, 0.25, 0.25]);
        assert_eq!(split.beta, vec![0.25, 0.25, 0.0]);
    }

    #[test]
    fn pascal_handles_long_rows() {
        let d = pascal_distribution(3000);
        assert!((d.total() - 1.0).abs() < 1e-12);
        assert_eq!(d.p[0], 0.0);
        assert!(d.p[1500] > 0.0145 && d.p[1500] < 0.0146);
    }

    #[test]
    fn mixed_state_gives_two_horns() {
        let d = mixed_initial_distribution(3);
        assert_eq!(d.probability_at(3), 0.5);
        assert_eq!(d.probability_at(-3), 0.5);
        assert_eq!(d.probability_at(1), 0.0);
        assert_eq!(mixed_initial_distribution(0).p, vec![1.0]);
    }

    #[test]
    fn site_index_round_trip() {
        for n in 0..6 {
            for j in 0..=n {
                assert_eq!(index_of(n, site(n, j)), Some(j));
            }
            assert_eq!(index_of(n, n as i64 + 1), None);
        }
        assert_eq!(index_of(3, 0), None);
    }
}
