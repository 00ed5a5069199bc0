//! Closed-form solution of the walk recurrence.
//!
//! ```text
//! Q(N, k) = (1 + eps^2)^-N  sum_{s=0}^{(N-|k|)/2} C(N-2s, (N-k-2s)/2) C(N-s, s) (eps^4 - 1)^s
//! alpha_{N,k} = Q(N, k) - Q(N-1, k+1) / (1 + eps^2)       (k < N)
//! beta_{N,k}  = eps^2 Q(N-1, k+1) / (1 + eps^2)           (k < N)
//! alpha_{N,N} = Q(N, N),  beta_{N,N} = 0
//! ```
//!
//! For `eps < 1` the terms alternate in sign and grow like `C(N, N/2)` while the
//! sum stays below one, so double precision loses roughly `log10` of the
//! cancellation index in digits. The double path reports that index and refuses
//! to answer past [`MAX_CANCELLATION_INDEX`]; [`ExactClosedForm`] evaluates the
//! same sum in exact rational arithmetic for the binary64 value of `eps`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::numerics::{ln_binomial, CompensatedSum};
use crate::{Error, Result};

/// Beyond this ratio of `sum |term|` to `|sum term|` the double path errors out.
pub const MAX_CANCELLATION_INDEX: f64 = 1e12;

/// Cancellation index up to which [`p_with_fallback`] trusts the double path.
/// Term errors are a few 1e-15 relative, so this keeps the absolute error of a
/// probability near 1e-10.
pub const FALLBACK_CANCELLATION_INDEX: f64 = 1e4;

/// Magnitudes below this are treated as rounding noise when checking that
/// alpha, beta and P come out non-negative.
const NEGATIVE_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormResult {
    pub value: f64,
    pub n_terms: usize,
    /// `sum |term| / |sum term|`, at least one.
    pub cancellation_index: f64,
}

fn check_site(n: usize, k: i64, epsilon: f64) -> Result<()> {
    let n_i = n as i64;
    if k.abs() > n_i {
        return Err(Error::Domain(format!("site {k} outside support of step {n}")));
    }
    if (n_i + k) % 2 != 0 {
        return Err(Error::Domain(format!(
            "site {k} has the wrong parity for step {n}"
        )));
    }
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(Error::Domain(format!(
            "noise strength must be finite and non-negative, got {epsilon}"
        )));
    }
    Ok(())
}

/// Double-precision evaluation of `Q(N, k)`.
///
/// Binomials come from log-gamma; each term is assembled in log space with its
/// sign tracked separately, and terms are accumulated by compensated summation
/// in descending magnitude.
pub fn q(n: usize, k: i64, epsilon: f64) -> Result<ClosedFormResult> {
    check_site(n, k, epsilon)?;
    let n_u = n as u64;
    let s_max = (n as i64 - k.abs()) as u64 / 2;
    let e2 = epsilon * epsilon;
    // eps^4 - 1 = (eps - 1)(eps + 1)(eps^2 + 1), accurate near eps = 1
    let base = (epsilon - 1.0) * (epsilon + 1.0) * (e2 + 1.0);
    let ln_norm = -(n as f64) * e2.ln_1p();

    let mut terms = Vec::with_capacity(s_max as usize + 1);
    for s in 0..=s_max {
        if s > 0 && base == 0.0 {
            break;
        }
        let upper = n_u - 2 * s;
        let lower = ((n as i64 - k) as u64 - 2 * s) / 2;
        let mut ln_mag = ln_binomial(upper, lower) + ln_binomial(n_u - s, s) + ln_norm;
        if s > 0 {
            ln_mag += s as f64 * base.abs().ln();
        }
        let negative = base < 0.0 && s % 2 == 1;
        let mag = ln_mag.exp();
        terms.push(if negative { -mag } else { mag });
    }

    terms.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
    let mut sum = CompensatedSum::new();
    let mut abs_sum = CompensatedSum::new();
    for &t in &terms {
        sum.add(t);
        abs_sum.add(t.abs());
    }
    let value = sum.value();
    let abs_total = abs_sum.value();
    let cancellation_index = if value == 0.0 {
        f64::INFINITY
    } else {
        (abs_total / value.abs()).max(1.0)
    };
    if cancellation_index > MAX_CANCELLATION_INDEX {
        return Err(Error::AccuracyLoss {
            what: format!("Q({n}, {k}) at eps = {epsilon}"),
            cancellation_index,
        });
    }
    Ok(ClosedFormResult {
        value,
        n_terms: terms.len(),
        cancellation_index,
    })
}

fn non_negative(x: f64, what: impl FnOnce() -> String, cancellation_index: f64) -> Result<f64> {
    if x >= 0.0 {
        Ok(x)
    } else if x > -NEGATIVE_SLACK {
        Ok(0.0)
    } else {
        Err(Error::AccuracyLoss {
            what: format!("{} evaluated to {x:e}", what()),
            cancellation_index,
        })
    }
}

/// `(alpha_{N,k}, beta_{N,k})` from the closed form, double precision.
pub fn alpha_beta(n: usize, k: i64, epsilon: f64) -> Result<(f64, f64)> {
    check_site(n, k, epsilon)?;
    if k == n as i64 {
        return Ok((q(n, k, epsilon)?.value, 0.0));
    }
    let here = q(n, k, epsilon)?;
    let prev = q(n - 1, k + 1, epsilon)?;
    let e2 = epsilon * epsilon;
    let kappa = here.cancellation_index.max(prev.cancellation_index);
    let alpha = here.value - prev.value / (1.0 + e2);
    let beta = e2 * prev.value / (1.0 + e2);
    let alpha = non_negative(alpha, || format!("alpha({n}, {k})"), kappa)?;
    let beta = non_negative(beta, || format!("beta({n}, {k})"), kappa)?;
    Ok((alpha, beta))
}

fn p_double(n: usize, k: i64, epsilon: f64) -> Result<(f64, f64)> {
    check_site(n, k, epsilon)?;
    if k == n as i64 {
        let r = q(n, k, epsilon)?;
        return Ok((r.value, r.cancellation_index));
    }
    let here = q(n, k, epsilon)?;
    let prev = q(n - 1, k + 1, epsilon)?;
    let e2 = epsilon * epsilon;
    let ratio = (1.0 - e2) / (1.0 + e2);
    let kappa = here.cancellation_index.max(prev.cancellation_index);
    let p = non_negative(
        here.value - ratio * prev.value,
        || format!("P({n}, {k})"),
        kappa,
    )?;
    Ok((p, kappa))
}

/// Site probability `P_{N,k}` from the closed form, double precision.
pub fn p(n: usize, k: i64, epsilon: f64) -> Result<f64> {
    p_double(n, k, epsilon).map(|(p, _)| p)
}

/// Which arithmetic produced a closed-form value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Double,
    Exact,
}

/// `P_{N,k}` from the closed form, using double precision while the alternating
/// sum is well conditioned and exact rationals otherwise.
pub fn p_with_fallback(n: usize, k: i64, epsilon: f64) -> Result<(f64, Route)> {
    match p_double(n, k, epsilon) {
        Ok((p, kappa)) if kappa <= FALLBACK_CANCELLATION_INDEX => Ok((p, Route::Double)),
        Ok(_) | Err(Error::AccuracyLoss { .. }) => {
            let exact = ExactClosedForm::new(epsilon)?;
            Ok((exact.p_f64(n, k)?, Route::Exact))
        }
        Err(e) => Err(e),
    }
}

/// Whole closed-form distribution at step `n` via [`p_with_fallback`].
pub fn distribution(n: usize, epsilon: f64) -> Result<crate::Distribution> {
    let mut exact: Option<ExactClosedForm> = None;
    let mut p = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let k = crate::walk::site(n, j);
        let value = match p_double(n, k, epsilon) {
            Ok((v, kappa)) if kappa <= FALLBACK_CANCELLATION_INDEX => v,
            Ok(_) | Err(Error::AccuracyLoss { .. }) => {
                if exact.is_none() {
                    exact = Some(ExactClosedForm::new(epsilon)?);
                }
                exact.as_ref().unwrap().p_f64(n, k)?
            }
            Err(e) => return Err(e),
        };
        p.push(value);
    }
    Ok(crate::Distribution { n, p })
}

/// Probability of still being at `x = ct` after `n` steps, `(1 + eps^2)^-n`.
pub fn ballistic_peak(n: usize, epsilon: f64) -> f64 {
    (-(n as f64) * (epsilon * epsilon).ln_1p()).exp()
}

/// Exact rational evaluation of the closed form for the binary64 value of `eps`.
///
/// With `eps^2 = u / v` in lowest terms,
/// `Q(N, k) = [sum_s C C (u^2 - v^2)^s v^(N-2s)] / (u + v)^N`,
/// so every quantity is an integer over `(u + v)^N`.
#[derive(Debug, Clone)]
pub struct ExactClosedForm {
    u: BigInt,
    v: BigInt,
    w: BigInt,
    total: BigInt,
}

impl ExactClosedForm {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(Error::Domain(format!(
                "noise strength must be finite and non-negative, got {epsilon}"
            )));
        }
        let e = BigRational::from_float(epsilon).expect("finite float");
        let e2 = &e * &e;
        let u = e2.numer().clone();
        let v = e2.denom().clone();
        let w = &u * &u - &v * &v;
        let total = &u + &v;
        Ok(Self { u, v, w, total })
    }

    /// `eps^2` as the reduced pair `(u, v)`.
    pub fn epsilon_sq(&self) -> (&BigInt, &BigInt) {
        (&self.u, &self.v)
    }

    /// Numerator of `Q(N, k)` over the denominator `(u + v)^N`.
    pub fn q_numerator(&self, n: usize, k: i64) -> Result<BigInt> {
        check_site(n, k, 0.0)?;
        let s_max = (n as i64 - k.abs()) as usize / 2;
        let mut acc = BigInt::zero();
        let mut w_pow = BigInt::one();
        for s in 0..=s_max {
            let upper = n - 2 * s;
            let lower = ((n as i64 - k) as usize - 2 * s) / 2;
            let c1: BigInt = num_integer::binomial(BigInt::from(upper), BigInt::from(lower));
            let c2: BigInt = num_integer::binomial(BigInt::from(n - s), BigInt::from(s));
            let v_pow = num_traits::pow(self.v.clone(), n - 2 * s);
            acc += c1 * c2 * &w_pow * v_pow;
            w_pow *= &self.w;
        }
        Ok(acc)
    }

    pub fn denominator(&self, n: usize) -> BigInt {
        num_traits::pow(self.total.clone(), n)
    }

    pub fn q(&self, n: usize, k: i64) -> Result<BigRational> {
        Ok(BigRational::new(self.q_numerator(n, k)?, self.denominator(n)))
    }

    /// Numerators of `(alpha_{N,k}, beta_{N,k})` over `(u + v)^N`.
    pub fn alpha_beta_numerators(&self, n: usize, k: i64) -> Result<(BigInt, BigInt)> {
        let here = self.q_numerator(n, k)?;
        if k == n as i64 {
            return Ok((here, BigInt::zero()));
        }
        let prev = self.q_numerator(n - 1, k + 1)?;
        let alpha = here - &self.v * &prev;
        let beta = &self.u * prev;
        Ok((alpha, beta))
    }

    pub fn alpha_beta(&self, n: usize, k: i64) -> Result<(BigRational, BigRational)> {
        let (a, b) = self.alpha_beta_numerators(n, k)?;
        let d = self.denominator(n);
        Ok((BigRational::new(a, d.clone()), BigRational::new(b, d)))
    }

    pub fn p(&self, n: usize, k: i64) -> Result<BigRational> {
        let here = self.q_numerator(n, k)?;
        let numer = if k == n as i64 {
            here
        } else {
            let prev = self.q_numerator(n - 1, k + 1)?;
            here - (&self.v - &self.u) * prev
        };
        Ok(BigRational::new(numer, self.denominator(n)))
    }

    /// Numerators of `(alpha_{N,k}, beta_{N,k})` over `(u + v)^N` obtained by
    /// running the walk recurrence in integers,
    /// `A'_k = v A_{k-1} + u B_{k-1}`, `B'_k = v B_{k+1} + u A_{k+1}`.
    /// Independent of the alternating sum; indexed by `j = (k + N) / 2`.
    pub fn recurrence_numerators(&self, n: usize) -> (Vec<BigInt>, Vec<BigInt>) {
        let mut alpha = vec![BigInt::one()];
        let mut beta = vec![BigInt::zero()];
        for m in 0..n {
            let mut next_a = vec![BigInt::zero(); m + 2];
            let mut next_b = vec![BigInt::zero(); m + 2];
            for j in 0..=m {
                next_a[j + 1] = &self.v * &alpha[j] + &self.u * &beta[j];
                next_b[j] = &self.v * &beta[j] + &self.u * &alpha[j];
            }
            alpha = next_a;
            beta = next_b;
        }
        (alpha, beta)
    }

    /// [`Self::p`] correctly rounded to binary64.
    pub fn p_f64(&self, n: usize, k: i64) -> Result<f64> {
        let r = self.p(n, k)?;
        if r.is_negative() {
            return Err(Error::Domain(format!("exact P({n}, {k}) is negative")));
        }
        Ok(r.to_f64().unwrap_or(0.0))
    }
}

/// Exact rational value of `(1 + eps^2)^-n` for the binary64 `eps`, used to
/// certify [`ballistic_peak`].
pub fn ballistic_peak_exact(n: usize, epsilon: f64) -> Result<BigRational> {
    let ex = ExactClosedForm::new(epsilon)?;
    let v_pow = num_traits::pow(ex.v.clone(), n);
    Ok(BigRational::new(v_pow, ex.denominator(n)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::{evolve, WalkParams};

    #[test]
    fn q_at_the_ballistic_edge_is_single_term() {
        for &eps in &[0.0, 0.2, 0.5, 1.0, 1.7] {
            for n in 0..40 {
                let r = q(n, n as i64, eps).unwrap();
                assert_eq!(r.n_terms, 1);
                assert_eq!(r.cancellation_index, 1.0);
                assert_eq!(r.value, ballistic_peak(n, eps));
            }
        }
        assert_eq!(q(0, 0, 0.3).unwrap().value, 1.0);
    }

    #[test]
    fn small_cases_match_hand_values() {
        let (a, b) = alpha_beta(1, 1, 0.5).unwrap();
        assert!((a - 0.8).abs() < 1e-15 && b == 0.0);
        let (a, b) = alpha_beta(1, -1, 0.5).unwrap();
        assert!(a.abs() < 1e-15 && (b - 0.2).abs() < 1e-15);
        let (a, b) = alpha_beta(2, 0, 0.5).unwrap();
        assert!((a - 0.04).abs() < 1e-15, "{a}");
        assert!((b - 0.16).abs() < 1e-15, "{b}");
        assert!((p(2, 0, 0.5).unwrap() - 0.2).abs() < 1e-15);
        assert!((p(2, -2, 0.5).unwrap() - 0.16).abs() < 1e-15);
        assert!((p(2, 2, 0.5).unwrap() - 0.64).abs() < 1e-15);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(q(3, 0, 0.1), Err(Error::Domain(_))));
        assert!(matches!(q(3, 5, 0.1), Err(Error::Domain(_))));
        assert!(matches!(q(3, 1, -0.1), Err(Error::Domain(_))));
        assert!(matches!(p(4, 1, 0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn loss_of_precision_is_reported() {
        let err = q(60, 0, 0.1).unwrap_err();
        match err {
            Error::AccuracyLoss { cancellation_index, .. } => {
                assert!(cancellation_index > MAX_CANCELLATION_INDEX)
            }
            other => panic!("unexpected {other:?}"),
        }
        // the fallback still answers, through exact arithmetic
        let (value, route) = p_with_fallback(60, 0, 0.1).unwrap();
        assert_eq!(route, Route::Exact);
        let walk = evolve(&WalkParams::new(0.1, 60).unwrap()).distribution();
        assert!((value - walk.probability_at(0)).abs() < 1e-14);
    }

    #[test]
    fn double_path_agrees_with_recurrence_when_well_conditioned() {
        for &eps in &[0.2, 0.5, 0.9, 1.0] {
            for n in 0..=24 {
                let walk = evolve(&WalkParams::new(eps, n).unwrap());
                for (j, k) in walk.sites().enumerate() {
                    let kappa = if k == n as i64 {
                        1.0
                    } else {
                        let here = q(n, k, eps).unwrap().cancellation_index;
                        here.max(q(n - 1, k + 1, eps).unwrap().cancellation_index)
                    };
                    let (a, b) = alpha_beta(n, k, eps).unwrap();
                    // roughly 1e-14 relative error per term, amplified by kappa
                    let tol = 1e-13 * kappa;
                    assert!((a - walk.alpha[j]).abs() < tol, "n={n} k={k} kappa={kappa:e}");
                    assert!((b - walk.beta[j]).abs() < tol, "n={n} k={k} kappa={kappa:e}");
                    let (pf, _) = p_with_fallback(n, k, eps).unwrap();
                    assert!((pf - walk.alpha[j] - walk.beta[j]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn leftmost_alpha_vanishes_identically() {
        for &eps in &[0.1, 0.3, 0.5, 0.9, 1.0, 2.0] {
            let ex = ExactClosedForm::new(eps).unwrap();
            for n in 1..30 {
                let (a, _) = ex.alpha_beta_numerators(n, -(n as i64)).unwrap();
                assert!(a.is_zero(), "eps={eps} n={n}");
            }
        }
    }

    #[test]
    fn exact_matches_hand_values() {
        let ex = ExactClosedForm::new(0.5).unwrap();
        let r = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        assert_eq!(ex.p(2, 2).unwrap(), r(16, 25));
        assert_eq!(ex.p(2, 0).unwrap(), r(1, 5));
        assert_eq!(ex.p(2, -2).unwrap(), r(4, 25));
        assert_eq!(ex.alpha_beta(2, 0).unwrap(), (r(1, 25), r(4, 25)));
        assert_eq!(ballistic_peak_exact(2, 0.5).unwrap(), r(16, 25));
    }

    #[test]
    fn integer_recurrence_reproduces_exact_closed_form() {
        let ex = ExactClosedForm::new(0.3).unwrap();
        for n in 0..=12usize {
            let (a, b) = ex.recurrence_numerators(n);
            for j in 0..=n {
                let k = 2 * j as i64 - n as i64;
                let (ca, cb) = ex.alpha_beta_numerators(n, k).unwrap();
                assert_eq!((&a[j], &b[j]), (&ca, &cb), "n={n} k={k}");
            }
        }
    }

    #[test]
    fn ballistic_peak_limits() {
        assert_eq!(ballistic_peak(0, 0.7), 1.0);
        assert_eq!(ballistic_peak(100, 0.0), 1.0);
        let v = ballistic_peak(50, 0.2);
        assert!((v - 1.04f64.powi(-50)).abs() < 1e-15);
        assert!((v - 0.1407).abs() < 5e-5);
    }
}
