//! Explicit constants of the heat-semigroup inequalities under
//! `CD(rho1, rho2, kappa, d)`. Functions for the `rho1 > 0` regime reject
//! `rho1 <= 0` instead of degenerating.

use crate::certify::CdParams;
use crate::error::{CdError, Result};
use crate::symbolic::Rational;

/// Which family of constants applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// Constants that only use `rho1 >= 0`.
    Zero,
    /// Time-decaying constants that need `rho1 > 0`.
    Positive,
}

pub(crate) fn require_nonnegative(p: &CdParams) -> Result<()> {
    if p.rho1 < 0.0 {
        return Err(CdError::Regime(format!("these bounds need rho1 >= 0, got {}", p.rho1)));
    }
    Ok(())
}

pub(crate) fn require_positive(p: &CdParams) -> Result<()> {
    if !(p.rho1 > 0.0) {
        return Err(CdError::Regime(format!("these bounds need rho1 > 0, got {}", p.rho1)));
    }
    Ok(())
}

pub(crate) fn check_norm(pn: f64) -> Result<()> {
    if !(pn >= 1.0) {
        return Err(CdError::InvalidParameter(format!("norm exponent must lie in [1, inf], got {pn}")));
    }
    Ok(())
}

fn check_t(t: f64, strict: bool) -> Result<()> {
    let ok = if strict { t > 0.0 } else { t >= 0.0 };
    if !ok || t.is_nan() {
        return Err(CdError::InvalidParameter(format!("time out of range: {t}")));
    }
    Ok(())
}

/// `1 + 3 kappa / (2 rho2)`.
pub fn a32(p: &CdParams) -> f64 {
    1.0 + 3.0 * p.kappa / (2.0 * p.rho2)
}

/// `1 + 2 kappa / rho2`.
pub fn a2(p: &CdParams) -> f64 {
    1.0 + 2.0 * p.kappa / p.rho2
}

/// `2 rho1 rho2 / (3 (rho2 + kappa))`, the rate in the Li-Yau and ultracontractive bounds.
fn rate3(p: &CdParams) -> f64 {
    2.0 * p.rho1 * p.rho2 / (3.0 * (p.rho2 + p.kappa))
}

/// `rho1 rho2 / (rho2 + kappa)`, the rate in the reverse Poincare bound.
fn rate1(p: &CdParams) -> f64 {
    p.rho1 * p.rho2 / (p.rho2 + p.kappa)
}

/// `(alpha, beta)` with `Gamma(ln P_t f) <= alpha L P_t f / P_t f + beta` when `rho1 = 0`.
pub fn li_yau_zero(p: &CdParams, t: f64) -> Result<(f64, f64)> {
    require_nonnegative(p)?;
    check_t(t, true)?;
    let a = a32(p);
    Ok((a, p.d * a * a / (2.0 * t)))
}

/// `(alpha(t), beta(t))` of the Li-Yau inequality when `rho1 > 0`.
pub fn li_yau_positive(p: &CdParams, t: f64) -> Result<(f64, f64)> {
    require_positive(p)?;
    check_t(t, true)?;
    let c = rate3(p);
    let alpha = (2.0 * p.rho2 + 3.0 * p.kappa) / (2.0 * p.rho2) * (-c * t).exp();
    let beta = p.d * p.rho1 / (12.0 * p.rho2) * (2.0 * p.rho2 + 3.0 * p.kappa).powi(2) / (p.rho2 + p.kappa)
        * (-2.0 * c * t).exp()
        / -(-c * t).exp_m1();
    Ok((alpha, beta))
}

/// `gamma(t)` with `Gamma(P_t f) <= gamma(t) (P_t f^2 - (P_t f)^2)`.
pub fn reverse_poincare(p: &CdParams, t: f64) -> Result<f64> {
    require_positive(p)?;
    check_t(t, true)?;
    let s = rate1(p);
    Ok(0.5 * p.rho1 * (p.rho2 + 2.0 * p.kappa) / (p.rho2 + p.kappa) * (-2.0 * s * t).exp() / -(-s * t).exp_m1())
}

/// `(alpha(t), beta(t))` in the form used by the `rho1 > 0` gradient bound:
/// `alpha = a32 e^{-ct}`, `beta = d rho1 rho2 / (3(rho2 + kappa)) a32^2 e^{-2ct} / (1 - e^{-ct})`.
pub fn gradient_coefficients(p: &CdParams, t: f64) -> Result<(f64, f64)> {
    require_positive(p)?;
    check_t(t, true)?;
    let c = rate3(p);
    let a = a32(p);
    let alpha = a * (-c * t).exp();
    let beta = p.d * p.rho1 * p.rho2 / (3.0 * (p.rho2 + p.kappa)) * a * a * (-2.0 * c * t).exp() / -(-c * t).exp_m1();
    Ok((alpha, beta))
}

/// `C(t)` with `||sqrt Gamma(P_t f)||_pn <= C(t) ||f||_pn`.
pub fn gradient_bound(p: &CdParams, regime: Regime, pn: f64, t: f64) -> Result<f64> {
    check_norm(pn)?;
    check_t(t, true)?;
    match regime {
        Regime::Zero => {
            require_nonnegative(p)?;
            let a = a32(p);
            if pn < 2.0 {
                Ok(a / (1.0 + (pn - 1.0) * a).sqrt() * (p.d / (2.0 * t)).sqrt())
            } else {
                Ok((a2(p) / (2.0 * t)).sqrt())
            }
        }
        Regime::Positive => {
            if pn < 2.0 {
                let (alpha, beta) = gradient_coefficients(p, t)?;
                Ok((beta / (1.0 + (pn - 1.0) * alpha)).sqrt())
            } else {
                Ok(reverse_poincare(p, t)?.sqrt())
            }
        }
    }
}

/// `C(t)` with `||f - P_t f||_pn <= C(t) ||sqrt Gamma(f)||_pn`. With `dual`, the
/// `pn >= 2` branch of the `rho1 = 0` regime uses `pn / (pn - 1)` in place of `pn`
/// inside the square root.
pub fn pseudo_poincare(p: &CdParams, regime: Regime, pn: f64, t: f64, dual: bool) -> Result<f64> {
    check_norm(pn)?;
    check_t(t, false)?;
    match regime {
        Regime::Zero => {
            require_nonnegative(p)?;
            if pn < 2.0 {
                Ok(((2.0 + 4.0 * p.kappa / p.rho2) * t).sqrt())
            } else {
                let a = a32(p);
                let e = if dual { conjugate(pn) } else { pn };
                let denom = (1.0 + (e - 1.0) * a).sqrt();
                Ok(a * (2.0 * p.d).sqrt() / denom * t.sqrt())
            }
        }
        Regime::Positive => {
            require_positive(p)?;
            if pn < 2.0 {
                let s = rate1(p);
                Ok((2.0 * (p.rho2 + 2.0 * p.kappa) * (p.rho2 + p.kappa) / (p.rho1 * p.rho2 * p.rho2) * -(-s * t).exp_m1())
                    .sqrt())
            } else {
                let c = rate3(p);
                Ok(a32(p) * (3.0 * p.d * (p.rho2 + p.kappa) / (p.rho1 * p.rho2) * -(-c * t).exp_m1()).sqrt())
            }
        }
    }
}

/// Conjugate exponent `pn / (pn - 1)`, with `1' = inf` and `inf' = 1`.
pub fn conjugate(pn: f64) -> f64 {
    if pn.is_infinite() {
        1.0
    } else if pn == 1.0 {
        f64::INFINITY
    } else {
        pn / (pn - 1.0)
    }
}

/// `C_pn` with `||f - f_M||_pn <= C_pn ||sqrt Gamma(f)||_pn`, `1 <= pn < inf`.
pub fn poincare(p: &CdParams, pn: f64) -> Result<f64> {
    require_positive(p)?;
    check_norm(pn)?;
    if pn.is_infinite() {
        return Err(CdError::InvalidParameter("the Poincare constant needs a finite exponent".into()));
    }
    if pn < 2.0 {
        Ok((2.0 * (p.rho2 + 2.0 * p.kappa) * (p.rho2 + p.kappa) / (p.rho1 * p.rho2 * p.rho2)).sqrt())
    } else {
        Ok(a32(p) * (3.0 * p.d * (p.rho2 + p.kappa) / (p.rho1 * p.rho2)).sqrt())
    }
}

/// Lower bound `(1/2) sqrt(rho1/2) / (1 + 2 kappa/rho2)` on the Cheeger constant.
pub fn cheeger(p: &CdParams) -> Result<f64> {
    require_positive(p)?;
    Ok(0.5 * (p.rho1 / 2.0).sqrt() / a2(p))
}

/// `K` with `mu(E)(1 - mu(E)) <= K P(E)`.
pub fn cheeger_product(p: &CdParams) -> Result<f64> {
    require_positive(p)?;
    Ok((2.0 / p.rho1).sqrt() * a2(p))
}

/// Bound on the heat kernel of a normalized measure,
/// `(1 - e^{-2 rho1 rho2 t / 3(rho2 + kappa)})^{-(d/2)(1 + 3 kappa / 2 rho2)}`.
pub fn ultracontractive(p: &CdParams, t: f64) -> Result<f64> {
    require_positive(p)?;
    check_t(t, true)?;
    Ok((-(-rate3(p) * t).exp_m1()).powf(-0.5 * p.d * a32(p)))
}

/// Small-time blow-up exponent of [`ultracontractive`].
pub fn ultracontractive_exponent(p: &CdParams) -> f64 {
    0.5 * p.d * a32(p)
}

/// `lambda_1 >= rho1 rho2 / ((d - 1)/d rho2 + kappa)`.
pub fn lichnerowicz(p: &CdParams) -> Result<f64> {
    require_positive(p)?;
    Ok(p.rho1 * p.rho2 / ((p.d - 1.0) / p.d * p.rho2 + p.kappa))
}

/// [`lichnerowicz`] in exact arithmetic.
pub fn lichnerowicz_exact(rho1: &Rational, rho2: &Rational, kappa: &Rational, d: &Rational) -> Result<Rational> {
    let one = Rational::from_integer(1.into());
    let denom = (d - &one) / d * rho2 + kappa;
    if num_traits::Zero::is_zero(&denom) {
        return Err(CdError::InvalidParameter("degenerate Lichnerowicz denominator".into()));
    }
    Ok(rho1 * rho2 / denom)
}
