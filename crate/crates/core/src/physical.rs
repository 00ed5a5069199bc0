//! Physical constants of the Pauli-coupled particle and their mapping onto the
//! dimensionless walk.
//!
//! Everything outside this module works in units where `c = Delta = hbar = 1`;
//! SI quantities enter only here.

use std::f64::consts::FRAC_PI_2;

use crate::{Error, Result};

/// A ratio that must be much smaller than one passes below this value.
pub const PASS_BELOW: f64 = 0.1;
/// ... and fails at or above this value; in between it is a warning.
pub const FAIL_AT: f64 = 1.0;

/// Physical parameters of the particle and the flipping field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Speed of light, m/s.
    pub c: f64,
    /// Reduced Planck constant, J s.
    pub hbar: f64,
    /// Magnetic moment in rad/(s T), so that `mu * b0` is an angular frequency.
    pub mu: f64,
    /// Field magnitude, T.
    pub b0: f64,
    /// Interval between possible field flips, s.
    pub delta: f64,
    /// Rest mass, kg; zero for the massless particle.
    pub mass: f64,
}

impl PhysicalParams {
    pub fn new(c: f64, hbar: f64, mu: f64, b0: f64, delta: f64, mass: f64) -> Result<Self> {
        for (name, v) in [("c", c), ("hbar", hbar), ("delta", delta)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!("{name} must be positive and finite, got {v}")));
            }
        }
        for (name, v) in [("mu", mu), ("b0", b0)] {
            if !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be finite, got {v}")));
            }
        }
        if !(mass.is_finite() && mass >= 0.0) {
            return Err(Error::Domain(format!("mass must be non-negative, got {mass}")));
        }
        Ok(Self {
            c,
            hbar,
            mu,
            b0,
            delta,
            mass,
        })
    }

    /// Dimensionless preset `c = hbar = Delta = B0 = 1` with the given half
    /// rotation angle `mu B0 Delta / 2`.
    pub fn dimensionless(coin_angle: f64) -> Self {
        Self {
            c: 1.0,
            hbar: 1.0,
            mu: 2.0 * coin_angle,
            b0: 1.0,
            delta: 1.0,
            mass: 0.0,
        }
    }

    /// `mu B0 Delta / 2`.
    pub fn coin_angle(&self) -> f64 {
        0.5 * self.mu * self.b0 * self.delta
    }

    /// Lattice spacing `c Delta`.
    pub fn cell_length(&self) -> f64 {
        self.c * self.delta
    }
}

/// `eps = |tan(mu B0 Delta / 2)|`; the sign of the field is absorbed by the
/// random sign.
pub fn derive_epsilon(phys: &PhysicalParams) -> Result<f64> {
    let angle = phys.coin_angle();
    if angle.abs() >= FRAC_PI_2 {
        return Err(Error::Domain(format!(
            "coin angle |mu B0 Delta / 2| = {:.6} must stay below pi/2",
            angle.abs()
        )));
    }
    Ok(angle.tan().abs())
}

/// Inverse of [`derive_epsilon`]: `|mu B0| = 2 arctan(eps) / Delta`.
pub fn coupling_from_epsilon(epsilon: f64, delta: f64) -> f64 {
    2.0 * epsilon.atan() / delta
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Warn,
    Fail,
    Skipped,
}

impl Verdict {
    /// Grades a quantity that should be much smaller than one.
    pub fn for_small(x: f64) -> Self {
        if x < PASS_BELOW {
            Verdict::Pass
        } else if x < FAIL_AT {
            Verdict::Warn
        } else {
            Verdict::Fail
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Warn => "warn",
            Verdict::Fail => "fail",
            Verdict::Skipped => "skipped",
        }
    }
}

/// Diagnostics for replacing the exact per-interval propagator by the
/// coin-then-shift factorisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidityReport {
    /// `None` when the coin angle is at or beyond `pi/2`.
    pub epsilon: Option<f64>,
    pub coin_angle: f64,
    /// `|c <p> Delta / hbar|`.
    pub momentum_condition: f64,
    /// `|mu B0 Delta / 2|`.
    pub coin_condition: f64,
    /// `|hbar mu B0 / 2| / (m c^2)`, infinite for a massless particle.
    pub mass_condition_ratio: f64,
    pub momentum_verdict: Verdict,
    pub coin_verdict: Verdict,
    pub mass_verdict: Verdict,
}

impl ValidityReport {
    /// Worst verdict over the applicable conditions.
    pub fn overall(&self) -> Verdict {
        let all = [self.momentum_verdict, self.coin_verdict, self.mass_verdict];
        if all.contains(&Verdict::Fail) {
            Verdict::Fail
        } else if all.contains(&Verdict::Warn) {
            Verdict::Warn
        } else {
            Verdict::Pass
        }
    }
}

/// Grades `|c <p> Delta / hbar| << 1`, `|mu B0 Delta / 2| << 1` and, for a
/// massive particle, `|hbar mu B0 / 2| >> m c^2`.
pub fn check_validity(phys: &PhysicalParams, p_expectation: f64) -> ValidityReport {
    let angle = phys.coin_angle();
    let momentum_condition = (phys.c * p_expectation * phys.delta / phys.hbar).abs();
    let coin_condition = angle.abs();
    let (mass_condition_ratio, mass_verdict) = if phys.mass == 0.0 {
        (f64::INFINITY, Verdict::Skipped)
    } else {
        let ratio = (0.5 * phys.hbar * phys.mu * phys.b0).abs() / (phys.mass * phys.c * phys.c);
        (ratio, Verdict::for_small(1.0 / ratio))
    };
    ValidityReport {
        epsilon: derive_epsilon(phys).ok(),
        coin_angle: angle,
        momentum_condition,
        coin_condition,
        mass_condition_ratio,
        momentum_verdict: Verdict::for_small(momentum_condition),
        coin_verdict: Verdict::for_small(coin_condition),
        mass_verdict,
    }
}

/// Centre and diffusion constant of the long-time normal density on the line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionParams {
    /// Asymptotic mean displacement `(1 - eps^2) c Delta / (2 eps^2)`, m.
    pub x0: f64,
    /// `c^2 Delta / (2 eps^2)`, m^2/s.
    pub diffusion: f64,
}

pub fn diffusion_parameters(phys: &PhysicalParams) -> Result<DiffusionParams> {
    let eps = derive_epsilon(phys)?;
    if eps == 0.0 {
        return Err(Error::Domain(
            "free particle (eps = 0) never diffuses: x0 and D are infinite".into(),
        ));
    }
    let e2 = eps * eps;
    let one_minus = (1.0 - eps) * (1.0 + eps);
    Ok(DiffusionParams {
        x0: one_minus * phys.cell_length() / (2.0 * e2),
        diffusion: phys.c * phys.c * phys.delta / (2.0 * e2),
    })
}

/// The same displacement written through the full rotation angle,
/// `c Delta cos(mu B0 Delta) / (1 - cos(mu B0 Delta))`.
pub fn displacement_from_angle(phys: &PhysicalParams) -> Result<f64> {
    let full = phys.mu * phys.b0 * phys.delta;
    if full == 0.0 {
        return Err(Error::Domain("zero coupling: displacement is infinite".into()));
    }
    // 1 - cos(x) = 2 sin^2(x/2) without cancellation at small x
    let one_minus_cos = 2.0 * (0.5 * full).sin().powi(2);
    Ok(phys.cell_length() * full.cos() / one_minus_cos)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn epsilon_limits() {
        assert_eq!(derive_epsilon(&PhysicalParams::dimensionless(0.0)).unwrap(), 0.0);
        let one = derive_epsilon(&PhysicalParams::dimensionless(FRAC_PI_4)).unwrap();
        assert!((one - 1.0).abs() < 1e-15);
        let fifth = derive_epsilon(&PhysicalParams::dimensionless(0.19739555984988078)).unwrap();
        assert!((fifth - 0.2).abs() < 1e-15);
        let negative = derive_epsilon(&PhysicalParams::dimensionless(-0.19739555984988078)).unwrap();
        assert_eq!(negative, fifth);
        assert!(derive_epsilon(&PhysicalParams::dimensionless(FRAC_PI_2)).is_err());
        assert!(derive_epsilon(&PhysicalParams::dimensionless(2.0)).is_err());
    }

    #[test]
    fn constructor_validates() {
        assert!(PhysicalParams::new(0.0, 1.0, 1.0, 1.0, 1.0, 0.0).is_err());
        assert!(PhysicalParams::new(1.0, 1.0, 1.0, 1.0, -1.0, 0.0).is_err());
        assert!(PhysicalParams::new(1.0, 1.0, f64::NAN, 1.0, 1.0, 0.0).is_err());
        assert!(PhysicalParams::new(1.0, 1.0, 1.0, 1.0, 1.0, -2.0).is_err());
        assert!(PhysicalParams::new(3e8, 1.05e-34, -2.0, 0.5, 1e-9, 0.0).is_ok());
    }

    #[test]
    fn validity_grades() {
        let good = check_validity(&PhysicalParams::dimensionless(0.01), 0.01);
        assert_eq!(good.momentum_verdict, Verdict::Pass);
        assert_eq!(good.coin_verdict, Verdict::Pass);
        assert_eq!(good.mass_verdict, Verdict::Skipped);
        assert_eq!(good.mass_condition_ratio, f64::INFINITY);
        assert_eq!(good.overall(), Verdict::Pass);

        let bad = check_validity(&PhysicalParams::dimensionless(2.0), 0.0);
        assert_eq!(bad.coin_verdict, Verdict::Fail);
        assert_eq!(bad.epsilon, None);
        assert_eq!(bad.overall(), Verdict::Fail);

        let middling = check_validity(&PhysicalParams::dimensionless(0.5), 0.0);
        assert_eq!(middling.coin_verdict, Verdict::Warn);
    }

    #[test]
    fn mass_ratio_reported_verbatim() {
        let phys = PhysicalParams::new(2.0, 3.0, 5.0, 7.0, 0.01, 0.25).unwrap();
        let report = check_validity(&phys, 0.0);
        let expected = (0.5 * 3.0 * 5.0 * 7.0) / (0.25 * 4.0);
        assert_eq!(report.mass_condition_ratio, expected);
        assert_eq!(report.mass_verdict, Verdict::Pass);
        let heavy = PhysicalParams { mass: 100.0, ..phys };
        assert_eq!(check_validity(&heavy, 0.0).mass_verdict, Verdict::Fail);
    }

    #[test]
    fn diffusion_values() {
        let phys = PhysicalParams::dimensionless(0.2f64.atan());
        let d = diffusion_parameters(&phys).unwrap();
        assert!((d.x0 - 12.0).abs() < 1e-12);
        assert!((d.diffusion - 12.5).abs() < 1e-12);

        let crw = diffusion_parameters(&PhysicalParams::dimensionless(FRAC_PI_4)).unwrap();
        assert!(crw.x0.abs() < 1e-15);
        assert!((crw.diffusion - 0.5).abs() < 1e-15);

        assert!(diffusion_parameters(&PhysicalParams::dimensionless(0.0)).is_err());
    }

    #[test]
    fn displacement_forms_agree() {
        let mut angle = 0.0f64;
        for _ in 0..1000 {
            // golden-ratio sequence over (0, pi/2)
            angle = (angle + 0.618_033_988_749_895) % 1.0;
            let phys = PhysicalParams::dimensionless(FRAC_PI_2 * (0.001 + 0.998 * angle));
            let a = diffusion_parameters(&phys).unwrap().x0;
            let b = displacement_from_angle(&phys).unwrap();
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{angle}: {a} vs {b}");
        }
    }

    #[test]
    fn coupling_round_trip() {
        for &angle in &[1e-6, 0.01, 0.2, 0.7, 1.3] {
            let phys = PhysicalParams::new(1.0, 1.0, 2.0 * angle / 1.7, 1.0, 1.7, 0.0).unwrap();
            let eps = derive_epsilon(&phys).unwrap();
            let mu_b0 = coupling_from_epsilon(eps, phys.delta);
            let rel = (mu_b0 - phys.mu * phys.b0).abs() / (phys.mu * phys.b0);
            assert!(rel < 1e-12, "angle {angle}: rel {rel:e}");
        }
    }

    #[test]
    fn unit_rescaling() {
        let base = PhysicalParams::new(1.0, 1.0, 0.4, 1.0, 1.0, 0.0).unwrap();
        let scaled = PhysicalParams { c: 3.5, ..base };
        let a = diffusion_parameters(&base).unwrap();
        let b = diffusion_parameters(&scaled).unwrap();
        assert!((b.diffusion / a.diffusion - 3.5 * 3.5).abs() < 1e-12);
        assert!((b.x0 / a.x0 - 3.5).abs() < 1e-12);
    }
}
