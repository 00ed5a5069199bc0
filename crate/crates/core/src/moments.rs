//! Moments of the site distribution, their exact and asymptotic forms, the
//! ballistic-to-diffusive crossover and the limiting normal densities.

use std::f64::consts::PI;

use crate::numerics::CompensatedSum;
use crate::physical::{diffusion_parameters, PhysicalParams};
use crate::walk::Distribution;
use crate::{Error, Result};

/// Default log-log slope separating quadratic (2) from linear (1) growth.
pub const DEFAULT_SLOPE_THRESHOLD: f64 = 1.5;

/// `N eps^2` below this counts as ballistic, above [`DIFFUSIVE_ABOVE`] as
/// diffusive.
pub const BALLISTIC_BELOW: f64 = 0.25;
pub const DIFFUSIVE_ABOVE: f64 = 4.0;

/// `S^(p) = sum_k P_k k^p` for `p = 0..=p_max`.
pub fn empirical_moments(dist: &Distribution, p_max: usize) -> Vec<f64> {
    let mut acc = vec![CompensatedSum::new(); p_max + 1];
    for (k, pk) in dist.iter() {
        let k = k as f64;
        let mut term = pk;
        for slot in acc.iter_mut() {
            slot.add(term);
            term *= k;
        }
    }
    acc.iter().map(CompensatedSum::value).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactMoments {
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::Domain(format!(
            "noise strength must be finite and non-negative, got {epsilon}"
        )));
    }
    Ok(())
}

fn check_positive_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::Domain(format!(
            "noise strength must be positive, got {epsilon}"
        )));
    }
    Ok(())
}

/// Exact zeroth, first and second moments after `n` steps:
///
/// ```text
/// S1 = (1 - e^2)/(2 e^2) [1 - ((1 - e^2)/(1 + e^2))^N]
/// S2 = [2 N e^2 - 1 + e^4 + (1 - e^2)^(N+1) / (1 + e^2)^(N-1)] / (2 e^4)
/// ```
///
/// For `eps < 1` the power ratio is taken in log space and combined with the
/// `-1` through `expm1`, which keeps the small-`eps` cancellation harmless.
pub fn exact_moments(n: usize, epsilon: f64) -> Result<ExactMoments> {
    check_epsilon(epsilon)?;
    let nf = n as f64;
    if epsilon == 0.0 {
        return Ok(ExactMoments {
            s0: 1.0,
            s1: nf,
            s2: nf * nf,
        });
    }
    let e2 = epsilon * epsilon;
    let e4 = e2 * e2;
    let one_minus = (1.0 - epsilon) * (1.0 + epsilon);
    let prefactor = one_minus / (2.0 * e2);

    let (s1, s2) = if epsilon < 1.0 {
        let ln_r = (-e2).ln_1p() - e2.ln_1p();
        let s1 = -prefactor * (nf * ln_r).exp_m1();
        let ln_ratio = (nf + 1.0) * (-e2).ln_1p() - (nf - 1.0) * e2.ln_1p();
        let s2 = (2.0 * nf * e2 + e4 + ln_ratio.exp_m1()) / (2.0 * e4);
        (s1, s2)
    } else {
        let r = one_minus / (1.0 + e2);
        let s1 = prefactor * (1.0 - r.powi(n as i32));
        let ratio = one_minus.powi(n as i32 + 1) / (1.0 + e2).powi(n as i32 - 1);
        let s2 = (2.0 * nf * e2 - 1.0 + e4 + ratio) / (2.0 * e4);
        (s1, s2)
    };
    Ok(ExactMoments { s0: 1.0, s1, s2 })
}

/// `S2` as a smooth function of a real step count, for `0 < eps < 1`.
pub fn second_moment_continuous(n: f64, epsilon: f64) -> f64 {
    let e2 = epsilon * epsilon;
    let ln_ratio = (n + 1.0) * (-e2).ln_1p() - (n - 1.0) * e2.ln_1p();
    (2.0 * n * e2 + e2 * e2 + ln_ratio.exp_m1()) / (2.0 * e2 * e2)
}

/// Leading-order second moment in each regime: `(N^2, N/eps^2 - (1 - eps^4)/(2 eps^4))`.
pub fn regime_expansions(n: usize, epsilon: f64) -> Result<(f64, f64)> {
    check_positive_epsilon(epsilon)?;
    let nf = n as f64;
    let e2 = epsilon * epsilon;
    let e4 = e2 * e2;
    Ok((nf * nf, nf / e2 - (1.0 - e4) / (2.0 * e4)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Ballistic,
    Crossover,
    Diffusive,
}

impl Regime {
    pub fn classify(n: usize, epsilon: f64) -> Self {
        let x = n as f64 * epsilon * epsilon;
        if x < BALLISTIC_BELOW {
            Regime::Ballistic
        } else if x > DIFFUSIVE_ABOVE {
            Regime::Diffusive
        } else {
            Regime::Crossover
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Ballistic => "ballistic",
            Regime::Crossover => "crossover",
            Regime::Diffusive => "diffusive",
        }
    }
}

/// `(2m - 1)!! = 1 * 3 * ... * (2m - 1)`, one for `m = 0`.
fn odd_double_factorial(m: u32) -> f64 {
    (1..=m).map(|i| (2 * i - 1) as f64).product()
}

/// Leading large-`N` behaviour of `S^(p)`:
///
/// ```text
/// S^(2m)   ~ (2m-1)!/((m-1)! 2^(m-1)) N^m / eps^(2m)
/// S^(2m+1) ~ (2m+1)!/(m! 2^m) N^m / eps^(2m) * (1 - eps^2)/(2 eps^2)
/// ```
pub fn asymptotic_moment(n: usize, epsilon: f64, p: u32) -> Result<f64> {
    check_positive_epsilon(epsilon)?;
    if p == 0 {
        return Ok(1.0);
    }
    let m = p / 2;
    let e2 = epsilon * epsilon;
    let scale = (n as f64 / e2).powi(m as i32);
    if p.is_multiple_of(2) {
        Ok(odd_double_factorial(m) * scale)
    } else {
        let k0 = (1.0 - epsilon) * (1.0 + epsilon) / (2.0 * e2);
        Ok(odd_double_factorial(m + 1) * scale * k0)
    }
}

/// Centred log-log slope of `S2` over one decade around `n`.
pub fn local_slope(n: f64, epsilon: f64) -> f64 {
    let half_decade = 10f64.sqrt();
    let hi = second_moment_continuous(n * half_decade, epsilon);
    let lo = second_moment_continuous(n / half_decade, epsilon);
    (hi.ln() - lo.ln()) / std::f64::consts::LN_10
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossover {
    /// Smallest `N` with local slope below the threshold.
    pub n_star: usize,
    /// Local slope one decade below `n_star`.
    pub early_slope: f64,
    /// Local slope one decade above `n_star`.
    pub late_slope: f64,
}

/// Smallest step count at which the centred one-decade log-log slope of `S2`
/// drops below `slope_threshold`.
pub fn crossover(epsilon: f64, slope_threshold: f64) -> Result<Crossover> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!(
            "a ballistic regime exists only for 0 < eps < 1, got {epsilon}"
        )));
    }
    if !(slope_threshold > 1.0 && slope_threshold < 2.0) {
        return Err(Error::Domain(format!(
            "slope threshold must lie strictly between 1 and 2, got {slope_threshold}"
        )));
    }
    let below = |n: usize| local_slope(n as f64, epsilon) < slope_threshold;

    // the slope decreases monotonically from about 2 to 1, so bracket and bisect
    let mut hi = 1usize;
    while !below(hi) {
        hi = hi.checked_mul(2).filter(|&h| h < 1 << 50).ok_or_else(|| {
            Error::Domain(format!("no crossover found for eps = {epsilon}"))
        })?;
    }
    let mut lo = hi / 2;
    // invariant: below(hi), and lo == 0 or !below(lo)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if below(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let n_star = hi;
    Ok(Crossover {
        n_star,
        early_slope: local_slope(n_star as f64 / 10.0, epsilon),
        late_slope: local_slope(n_star as f64 * 10.0, epsilon),
    })
}

/// Parameters of the long-time normal density, lattice and physical.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticDensity {
    /// Centre `(1 - eps^2) / (2 eps^2)` in lattice units.
    pub k0: f64,
    /// Variance growth per step in lattice units, `1 / eps^2`.
    pub variance_per_step: f64,
    /// Physical centre, m.
    pub x0: f64,
    /// Diffusion constant, m^2/s.
    pub diffusion: f64,
}

impl AsymptoticDensity {
    pub fn new(phys: &PhysicalParams) -> Result<Self> {
        let eps = crate::physical::derive_epsilon(phys)?;
        let d = diffusion_parameters(phys)?;
        let e2 = eps * eps;
        Ok(Self {
            k0: (1.0 - eps) * (1.0 + eps) / (2.0 * e2),
            variance_per_step: 1.0 / e2,
            x0: d.x0,
            diffusion: d.diffusion,
        })
    }
}

/// Normal approximation `exp(-eps^2 (k - k0)^2 / 2N) / sqrt(2 N pi / eps^2)` to
/// the lattice distribution, read as a density in `k`.
pub fn normal_density_lattice(n: usize, epsilon: f64, k: f64) -> Result<f64> {
    check_positive_epsilon(epsilon)?;
    if n == 0 {
        return Err(Error::Domain("normal density needs at least one step".into()));
    }
    let nf = n as f64;
    let e2 = epsilon * epsilon;
    let k0 = (1.0 - epsilon) * (1.0 + epsilon) / (2.0 * e2);
    let d = k - k0;
    Ok((-e2 * d * d / (2.0 * nf)).exp() / (2.0 * nf * PI / e2).sqrt())
}

/// Long-time density on the physical line, `exp(-(x - x0)^2 / 4Dt) / sqrt(4 pi D t)`.
pub fn physical_density(t: f64, x: f64, phys: &PhysicalParams) -> Result<f64> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::Domain(format!("time must be positive, got {t}")));
    }
    let d = diffusion_parameters(phys)?;
    let spread = 4.0 * d.diffusion * t;
    let dx = x - d.x0;
    Ok((-dx * dx / spread).exp() / (PI * spread).sqrt())
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Total-variation distance between the lattice distribution, each site owning
/// a cell `[k - 1, k + 1)` of width two, and the normal law with mean `k0` and
/// variance `N / eps^2`. Normal mass outside all cells counts fully.
pub fn tv_to_normal(dist: &Distribution, epsilon: f64) -> Result<f64> {
    check_positive_epsilon(epsilon)?;
    if dist.n == 0 {
        return Err(Error::Domain("normal law needs at least one step".into()));
    }
    let e2 = epsilon * epsilon;
    let k0 = (1.0 - epsilon) * (1.0 + epsilon) / (2.0 * e2);
    let sigma = (dist.n as f64).sqrt() / epsilon;
    let mut diff = CompensatedSum::new();
    let mut covered = CompensatedSum::new();
    for (k, pk) in dist.iter() {
        let k = k as f64;
        let mass = normal_cdf((k + 1.0 - k0) / sigma) - normal_cdf((k - 1.0 - k0) / sigma);
        covered.add(mass);
        diff.add((pk - mass).abs());
    }
    let outside = (1.0 - covered.value()).max(0.0);
    Ok(0.5 * (diff.value() + outside))
}

/// `max_k |P_k / 2 - density(k)|` over the occupied sites.
pub fn sup_distance_to_normal(dist: &Distribution, epsilon: f64) -> Result<f64> {
    let mut worst = 0.0f64;
    for (k, pk) in dist.iter() {
        let density = normal_density_lattice(dist.n, epsilon, k as f64)?;
        worst = worst.max((0.5 * pk - density).abs());
    }
    Ok(worst)
}

/// Probability mass within `width_sd` asymptotic standard deviations
/// (`sqrt(N) / eps`) of `k0`.
pub fn containment(dist: &Distribution, epsilon: f64, width_sd: f64) -> Result<f64> {
    check_positive_epsilon(epsilon)?;
    let e2 = epsilon * epsilon;
    let k0 = (1.0 - epsilon) * (1.0 + epsilon) / (2.0 * e2);
    let half_width = width_sd * (dist.n as f64).sqrt() / epsilon;
    Ok(crate::numerics::compensated_sum(
        dist.iter()
            .filter(|&(k, _)| (k as f64 - k0).abs() <= half_width)
            .map(|(_, p)| p),
    ))
}
