//! Pure-state trajectories of the noisy walk and their ensemble averages.
//!
//! Each interval applies the coin `U(s) = N [[1, s eps], [-s eps, 1]]` followed by
//! the conditional shift (`tau = +1` right, `tau = -1` left):
//!
//! ```text
//! a'[k] = N (a[k-1] + s eps b[k-1])
//! b'[k] = N (b[k+1] - s eps a[k+1])
//! ```
//!
//! Averaging `|a|^2`, `|b|^2` over sign sequences estimates the diagonal of the
//! channel output computed by [`crate::walk`].

use num_complex::Complex64;

use crate::sampling::{map_blocks, Sign, SignStream, SiteStats};
use crate::walk::{DiagonalState, Distribution, WalkParams};
use crate::{Error, Result};

/// Largest step count accepted by [`exhaustive_channel`].
pub const MAX_EXHAUSTIVE_STEPS: usize = 20;

/// Two-component amplitudes on the integer lattice, stored densely over
/// `k = -capacity..=capacity`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSpinor {
    n: usize,
    capacity: usize,
    up: Vec<Complex64>,
    down: Vec<Complex64>,
}

impl LatticeSpinor {
    /// `|k = 0> (x) |tau = +1>` with room for `capacity` steps.
    pub fn initial(capacity: usize) -> Self {
        let len = 2 * capacity + 1;
        let mut up = vec![Complex64::new(0.0, 0.0); len];
        up[capacity] = Complex64::new(1.0, 0.0);
        Self {
            n: 0,
            capacity,
            up,
            down: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    fn idx(&self, k: i64) -> Option<usize> {
        let i = k + self.capacity as i64;
        (0..self.up.len() as i64).contains(&i).then_some(i as usize)
    }

    pub fn up_at(&self, k: i64) -> Complex64 {
        self.idx(k).map_or(Complex64::new(0.0, 0.0), |i| self.up[i])
    }

    pub fn down_at(&self, k: i64) -> Complex64 {
        self.idx(k).map_or(Complex64::new(0.0, 0.0), |i| self.down[i])
    }

    pub fn norm_sqr(&self) -> f64 {
        crate::numerics::compensated_sum(
            self.up
                .iter()
                .chain(&self.down)
                .map(|z| z.norm_sqr()),
        )
    }

    fn with_capacity(&self, capacity: usize) -> Self {
        let mut out = Self::initial(capacity);
        out.n = self.n;
        out.up[capacity] = Complex64::new(0.0, 0.0);
        let shift = capacity - self.capacity;
        out.up[shift..shift + self.up.len()].copy_from_slice(&self.up);
        out.down[shift..shift + self.down.len()].copy_from_slice(&self.down);
        out
    }

    /// One coin-and-shift step written into `out`, which must have the same
    /// capacity and hold zeros (or the state from two steps earlier) off the
    /// new parity class.
    fn step_into(&self, out: &mut Self, sign: Sign, coin: Coin) {
        debug_assert_eq!(self.capacity, out.capacity);
        debug_assert!(self.n < self.capacity);
        let c = self.capacity as i64;
        let n = self.n as i64;
        let keep = coin.keep;
        let mix = coin.mix * sign.value();
        // new sites k = -(n+1), -(n-1), ..., n+1
        let mut k = -(n + 1);
        while k <= n + 1 {
            let i = (k + c) as usize;
            out.up[i] = if k > -n {
                (self.up[i - 1] + self.down[i - 1] * mix) * keep
            } else {
                Complex64::new(0.0, 0.0)
            };
            out.down[i] = if k < n {
                (self.down[i + 1] - self.up[i + 1] * mix) * keep
            } else {
                Complex64::new(0.0, 0.0)
            };
            k += 2;
        }
        out.n = self.n + 1;
    }

    /// `|a_k|^2`, `|b_k|^2` on the occupied parity class `k = -n, -n+2, ..., n`.
    pub fn probabilities(&self) -> (Vec<f64>, Vec<f64>) {
        let mut alpha = Vec::with_capacity(self.n + 1);
        let mut beta = Vec::with_capacity(self.n + 1);
        self.probabilities_into(&mut alpha, &mut beta);
        (alpha, beta)
    }

    fn probabilities_into(&self, alpha: &mut Vec<f64>, beta: &mut Vec<f64>) {
        alpha.clear();
        beta.clear();
        let c = self.capacity as i64;
        let n = self.n as i64;
        for j in 0..=n {
            let i = (2 * j - n + c) as usize;
            alpha.push(self.up[i].norm_sqr());
            beta.push(self.down[i].norm_sqr());
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Coin {
    keep: f64,
    mix: f64,
}

impl Coin {
    fn new(epsilon: f64) -> Self {
        let keep = 1.0 / (1.0 + epsilon * epsilon).sqrt();
        Self {
            keep,
            mix: epsilon,
        }
    }
}

/// One step under field sign `s`; grows the storage when the support would
/// leave it.
pub fn apply_step(psi: &LatticeSpinor, sign: Sign, epsilon: f64) -> LatticeSpinor {
    let src = if psi.n < psi.capacity {
        psi.clone()
    } else {
        psi.with_capacity(psi.capacity + 1)
    };
    let mut out = LatticeSpinor::initial(src.capacity);
    out.up[src.capacity] = Complex64::new(0.0, 0.0);
    src.step_into(&mut out, sign, Coin::new(epsilon));
    out
}

/// Deterministic evolution of the initial state under a given sign sequence.
pub fn single_trajectory(params: &WalkParams, signs: &[Sign]) -> Result<LatticeSpinor> {
    if signs.len() != params.n_steps() {
        return Err(Error::Structural(format!(
            "expected {} signs, got {}",
            params.n_steps(),
            signs.len()
        )));
    }
    let mut runner = Trajectory::new(params.n_steps(), params.epsilon());
    Ok(runner.run(signs.iter().copied()).clone())
}

/// Reusable pair of buffers for evolving one realization after another.
struct Trajectory {
    coin: Coin,
    current: LatticeSpinor,
    next: LatticeSpinor,
}

impl Trajectory {
    fn new(n_steps: usize, epsilon: f64) -> Self {
        let current = LatticeSpinor::initial(n_steps);
        let mut next = current.clone();
        next.up[n_steps] = Complex64::new(0.0, 0.0);
        Self {
            coin: Coin::new(epsilon),
            current,
            next,
        }
    }

    fn reset(&mut self) {
        let zero = Complex64::new(0.0, 0.0);
        for buf in [&mut self.current, &mut self.next] {
            buf.up.iter_mut().for_each(|z| *z = zero);
            buf.down.iter_mut().for_each(|z| *z = zero);
            buf.n = 0;
        }
        let c = self.current.capacity;
        self.current.up[c] = Complex64::new(1.0, 0.0);
    }

    fn run<I: IntoIterator<Item = Sign>>(&mut self, signs: I) -> &LatticeSpinor {
        self.reset();
        for s in signs {
            self.current.step_into(&mut self.next, s, self.coin);
            std::mem::swap(&mut self.current, &mut self.next);
        }
        &self.current
    }
}

/// Ensemble means of the site/spin probabilities with per-site standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleEstimate {
    pub n: usize,
    pub n_realizations: u64,
    pub mean_alpha: Vec<f64>,
    pub mean_beta: Vec<f64>,
    pub std_err_alpha: Vec<f64>,
    pub std_err_beta: Vec<f64>,
    /// Standard error of the site probability `|a|^2 + |b|^2`.
    pub std_err_p: Vec<f64>,
}

impl EnsembleEstimate {
    pub fn as_state(&self) -> DiagonalState {
        DiagonalState {
            n: self.n,
            alpha: self.mean_alpha.clone(),
            beta: self.mean_beta.clone(),
        }
    }

    pub fn distribution(&self) -> Distribution {
        self.as_state().distribution()
    }

    pub fn total(&self) -> f64 {
        self.as_state().trace()
    }
}

#[derive(Clone)]
struct BlockStats {
    alpha: SiteStats,
    beta: SiteStats,
    p: SiteStats,
}

/// Monte Carlo estimate of the channel output from `n_realizations` sampled
/// sign sequences. Bit-identical for fixed arguments whatever the size of the
/// rayon pool it runs in.
pub fn run_ensemble(
    params: &WalkParams,
    n_realizations: u64,
    seed: u64,
) -> Result<EnsembleEstimate> {
    if n_realizations == 0 {
        return Err(Error::Domain("at least one realization is required".into()));
    }
    let n = params.n_steps();
    let sites = n + 1;
    let blocks = map_blocks(n_realizations as usize, |range| {
        let mut traj = Trajectory::new(n, params.epsilon());
        let mut stats = BlockStats {
            alpha: SiteStats::new(sites),
            beta: SiteStats::new(sites),
            p: SiteStats::new(sites),
        };
        let (mut a, mut b, mut p) = (Vec::new(), Vec::new(), vec![0.0; sites]);
        for r in range {
            let mut stream = SignStream::new(seed, r as u64);
            let psi = traj.run((0..n).map(|_| stream.next_sign()));
            psi.probabilities_into(&mut a, &mut b);
            for j in 0..sites {
                p[j] = a[j] + b[j];
            }
            stats.alpha.push(&a);
            stats.beta.push(&b);
            stats.p.push(&p);
        }
        stats
    });

    let mut iter = blocks.into_iter();
    let mut total = iter.next().expect("at least one block");
    for block in iter {
        total.alpha.merge(&block.alpha);
        total.beta.merge(&block.beta);
        total.p.merge(&block.p);
    }
    Ok(EnsembleEstimate {
        n,
        n_realizations,
        mean_alpha: total.alpha.mean().to_vec(),
        mean_beta: total.beta.mean().to_vec(),
        std_err_alpha: total.alpha.std_err(),
        std_err_beta: total.beta.std_err(),
        std_err_p: total.p.std_err(),
    })
}

/// Exact channel average over all `2^N` sign sequences, by depth-first
/// traversal of the sequence tree. Subtree sums are added pairwise.
pub fn exhaustive_channel(params: &WalkParams) -> Result<EnsembleEstimate> {
    let n = params.n_steps();
    if n > MAX_EXHAUSTIVE_STEPS {
        return Err(Error::Resource(format!(
            "exhaustive channel needs 2^{n} trajectories; limit is 2^{MAX_EXHAUSTIVE_STEPS}"
        )));
    }
    let coin = Coin::new(params.epsilon());
    let mut states: Vec<LatticeSpinor> = (0..=n)
        .map(|_| {
            let mut s = LatticeSpinor::initial(n);
            s.up[n] = Complex64::new(0.0, 0.0);
            s
        })
        .collect();
    states[0] = LatticeSpinor::initial(n);
    let mut acc_alpha = vec![vec![0.0; n + 1]; n + 1];
    let mut acc_beta = vec![vec![0.0; n + 1]; n + 1];

    fn visit(
        depth: usize,
        n: usize,
        coin: Coin,
        states: &mut [LatticeSpinor],
        acc_alpha: &mut [Vec<f64>],
        acc_beta: &mut [Vec<f64>],
    ) {
        if depth == n {
            let (a, b) = states[depth].probabilities();
            acc_alpha[depth].copy_from_slice(&a);
            acc_beta[depth].copy_from_slice(&b);
            return;
        }
        acc_alpha[depth].iter_mut().for_each(|x| *x = 0.0);
        acc_beta[depth].iter_mut().for_each(|x| *x = 0.0);
        for sign in [Sign::Plus, Sign::Minus] {
            let (head, tail) = states.split_at_mut(depth + 1);
            head[depth].step_into(&mut tail[0], sign, coin);
            visit(depth + 1, n, coin, states, acc_alpha, acc_beta);
            let (lo, hi) = acc_alpha.split_at_mut(depth + 1);
            lo[depth].iter_mut().zip(&hi[0]).for_each(|(x, y)| *x += y);
            let (lo, hi) = acc_beta.split_at_mut(depth + 1);
            lo[depth].iter_mut().zip(&hi[0]).for_each(|(x, y)| *x += y);
        }
    }

    visit(0, n, coin, &mut states, &mut acc_alpha, &mut acc_beta);

    let weight = 0.5f64.powi(n as i32);
    let mean_alpha: Vec<f64> = acc_alpha[0].iter().map(|x| x * weight).collect();
    let mean_beta: Vec<f64> = acc_beta[0].iter().map(|x| x * weight).collect();
    Ok(EnsembleEstimate {
        n,
        n_realizations: 1u64 << n,
        mean_alpha,
        mean_beta,
        std_err_alpha: vec![0.0; n + 1],
        std_err_beta: vec![0.0; n + 1],
        std_err_p: vec![0.0; n + 1],
    })
}
