//! The critical-growth model nonlinearity and its structural constants.
//!
//! `f(t) = τ t^{r-1} exp(α₀ t²)` for `t > 0` and `f(t) = 0` otherwise.
//! The primitive `F(t) = ∫₀ᵗ f` is computed by adaptive quadrature; for
//! `r = 4` it has the closed form `τ(e^{α₀t²}(α₀t² − 1) + 1)/(2α₀²)`, which
//! the tests use as an independent check.

use serde::{Deserialize, Serialize};

use crate::error::{QspError, Result, EXP_ARG_MAX};
use crate::quadrature::integrate_adaptive;

/// Relative tolerance for the primitive `F`.
pub const PRIMITIVE_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// ε; only ε⁴ enters the equations.
    pub eps: f64,
    pub alpha0: f64,
    pub theta: f64,
    pub r: f64,
    pub tau: f64,
    /// Truncation radius `T` of the cut-off functional.
    pub truncation: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            eps: 0.5,
            alpha0: 1.0,
            theta: 6.0,
            r: 6.0,
            tau: DEFAULT_TAU,
            truncation: f64::INFINITY,
        }
    }
}

/// Default `τ`; comfortably above `τ*` for the default `r`, `θ`, `α₀` on the
/// unit square.
pub const DEFAULT_TAU: f64 = 150.0;

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, value, reason| Err(QspError::InvalidParameter { name, value, reason });
        if !(self.eps >= 0.0) || !self.eps.is_finite() {
            return bad("eps", self.eps, "must be finite and >= 0");
        }
        if !(self.alpha0 > 0.0) || !self.alpha0.is_finite() {
            return bad("alpha0", self.alpha0, "must be finite and > 0");
        }
        if !(self.theta > 4.0) || !self.theta.is_finite() {
            return bad("theta", self.theta, "theta must exceed 4");
        }
        if !(self.r > 2.0) || !self.r.is_finite() {
            return bad("r", self.r, "r must exceed 2");
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return bad("tau", self.tau, "must be finite and > 0");
        }
        if !(self.truncation > 0.0) {
            return bad("T", self.truncation, "truncation radius must be > 0");
        }
        Ok(())
    }

    pub fn eps4(&self) -> f64 {
        let e2 = self.eps * self.eps;
        e2 * e2
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn with_truncation(mut self, t: f64) -> Self {
        self.truncation = t;
        self
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    /// `θ` usable in the Ambrosetti–Rabinowitz check: the model `f` only
    /// satisfies `θF ≤ tf` for `θ ≤ r`.
    pub fn effective_theta(&self) -> f64 {
        self.theta.min(self.r)
    }
}

/// `t^{r-1}`, using integer powers where possible.
#[inline]
fn pow_rm1(t: f64, r: f64) -> f64 {
    let e = r - 1.0;
    if e.fract() == 0.0 && e.abs() < 64.0 {
        t.powi(e as i32)
    } else {
        t.powf(e)
    }
}

#[inline]
fn f_unchecked(t: f64, p: &ModelParams) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        p.tau * pow_rm1(t, p.r) * (p.alpha0 * t * t).exp()
    }
}

fn overflow_check(t: f64, p: &ModelParams) -> Result<()> {
    let e = p.alpha0 * t * t;
    if t > 0.0 && e > EXP_ARG_MAX {
        return Err(QspError::Overflow {
            node: usize::MAX,
            exponent: e,
        });
    }
    Ok(())
}

/// `f(t)`.
pub fn f_eval(t: f64, p: &ModelParams) -> Result<f64> {
    overflow_check(t, p)?;
    Ok(f_unchecked(t, p))
}

/// `f'(t)`, used by tests and diagnostics.
pub fn f_prime(t: f64, p: &ModelParams) -> Result<f64> {
    overflow_check(t, p)?;
    if t <= 0.0 {
        return Ok(0.0);
    }
    Ok(f_unchecked(t, p) * ((p.r - 1.0) / t + 2.0 * p.alpha0 * t))
}

/// `F(t) = ∫₀ᵗ f(s) ds`.
pub fn primitive_eval(t: f64, p: &ModelParams) -> Result<f64> {
    overflow_check(t, p)?;
    if t <= 0.0 {
        return Ok(0.0);
    }
    // Substituting s = t·x keeps the integrand on [0, 1].
    let scale = t * pow_rm1(t, p.r);
    let a = p.alpha0 * t * t;
    let v = integrate_adaptive(
        |x| p.tau * pow_rm1(x, p.r) * (a * x * x).exp(),
        0.0,
        1.0,
        PRIMITIVE_REL_TOL,
    )?;
    Ok(scale * v)
}

/// Applies `f` nodewise, reporting the offending node on overflow.
pub fn f_field(u: &[f64], p: &ModelParams) -> Result<Vec<f64>> {
    u.iter()
        .enumerate()
        .map(|(k, &t)| {
            f_eval(t, p).map_err(|e| match e {
                QspError::Overflow { exponent, .. } => QspError::Overflow { node: k, exponent },
                other => other,
            })
        })
        .collect()
}

/// `Σ F(u_i)` over the nodes (caller applies the quadrature weight).
pub fn primitive_sum(u: &[f64], p: &ModelParams) -> Result<f64> {
    let mut s = 0.0;
    for (k, &t) in u.iter().enumerate() {
        s += primitive_eval(t, p).map_err(|e| match e {
            QspError::Overflow { exponent, .. } => QspError::Overflow { node: k, exponent },
            other => other,
        })?;
    }
    Ok(s)
}

/// `τ*(ε)` from the ground-state level `m` and the truncation radius `T̄(ε)`.
pub fn tau_star(m_frak: f64, t_bar: f64, p: &ModelParams) -> Result<f64> {
    if !(m_frak > 0.0) {
        return Err(QspError::InvalidParameter {
            name: "m_frak",
            value: m_frak,
            reason: "ground-state level must be positive",
        });
    }
    if !(t_bar > 0.0) {
        return Err(QspError::InvalidParameter {
            name: "Tbar",
            value: t_bar,
            reason: "truncation radius must be positive",
        });
    }
    let (first, second) = tau_star_brackets(m_frak, t_bar, p);
    Ok(first.max(second))
}

/// The two competing terms of `τ*`, before taking the max.
pub fn tau_star_brackets(m_frak: f64, t_bar: f64, p: &ModelParams) -> (f64, f64) {
    let th = p.theta;
    let expo = (p.r - 2.0) / 2.0;
    let level = th * m_frak * (p.alpha0 + 1.0) / (std::f64::consts::PI * (th - 2.0));
    let trunc = 4.0 * th * m_frak / ((th - 2.0) * t_bar * t_bar);
    (level.powf(expo), trunc.powf(expo))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    fn params(r: f64, tau: f64) -> ModelParams {
        ModelParams {
            r,
            tau,
            ..ModelParams::default()
        }
    }

    fn closed_form_r4(t: f64, tau: f64, a: f64) -> f64 {
        tau * ((a * t * t).exp() * (a * t * t - 1.0) + 1.0) / (2.0 * a * a)
    }

    #[test]
    fn vanishes_on_negative_axis() {
        let p = ModelParams::default();
        assert_eq!(f_eval(-5.0, &p).unwrap(), 0.0);
        assert_eq!(primitive_eval(-1.0, &p).unwrap(), 0.0);
        assert_eq!(f_eval(0.0, &p).unwrap(), 0.0);
    }

    #[test]
    fn model_value_at_one() {
        let p = params(6.0, 1.0);
        assert!((f_eval(1.0, &p).unwrap() - E).abs() < 1e-12);
    }

    #[test]
    fn superlinear_at_zero() {
        let p = ModelParams::default();
        assert!(f_eval(1e-4, &p).unwrap() / 1e-4 < 1e-12);
        let mut prev = f64::INFINITY;
        for k in 1..=8 {
            let t = 10f64.powi(-k);
            let q = f_eval(t, &p).unwrap() / t;
            assert!(q < prev);
            prev = q;
        }
        assert!(prev < 1e-10);
    }

    #[test]
    fn primitive_matches_r4_closed_form() {
        let p = params(4.0, 1.0);
        assert!((primitive_eval(1.0, &p).unwrap() - 0.5).abs() < 1e-12);
        for k in 1..=30 {
            let t = 0.1 * k as f64;
            let q = primitive_eval(t, &p).unwrap();
            let c = closed_form_r4(t, 1.0, 1.0);
            assert!((q - c).abs() <= 1e-9 * c, "t={t}: {q} vs {c}");
        }
    }

    #[test]
    fn ambrosetti_rabinowitz_condition() {
        let p = ModelParams::default();
        let th = p.effective_theta();
        for k in 0..=60 {
            let t = 1e-3 * (3000f64).powf(k as f64 / 60.0);
            let big_f = primitive_eval(t, &p).unwrap();
            assert!(big_f > 0.0);
            assert!(th * big_f <= t * f_eval(t, &p).unwrap() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn lower_power_bound() {
        let p = ModelParams::default();
        for k in 1..200 {
            let t = 0.02 * k as f64;
            assert!(f_eval(t, &p).unwrap() >= p.tau * t.powf(p.r - 1.0));
        }
        let t = 1e-5;
        let ratio = f_eval(t, &p).unwrap() / (p.tau * t.powf(p.r - 1.0));
        assert!((ratio - 1.0).abs() < 1e-9);
    }

    #[test]
    fn critical_growth_dichotomy() {
        let p = ModelParams::default();
        let ratio = |t: f64, a: f64| {
            // f/exp(αt²) evaluated in log space to avoid overflow.
            (p.tau.ln() + (p.r - 1.0) * t.ln() + (p.alpha0 - a) * t * t).exp()
        };
        let above: Vec<f64> = [5.0, 10.0, 20.0].iter().map(|&t| ratio(t, p.alpha0 + 0.5)).collect();
        let below: Vec<f64> = [5.0, 10.0, 20.0].iter().map(|&t| ratio(t, p.alpha0 - 0.5)).collect();
        assert!(above[0] > above[1] && above[1] > above[2]);
        assert!(below[0] < below[1] && below[1] < below[2]);
    }

    #[test]
    fn overflow_is_reported() {
        let p = ModelParams::default();
        assert!(matches!(f_eval(30.0, &p), Err(QspError::Overflow { .. })));
        let err = f_field(&[0.1, 40.0], &p).unwrap_err();
        assert!(matches!(err, QspError::Overflow { node: 1, .. }));
    }

    #[test]
    fn tau_star_engineered_to_one() {
        let p = params(6.0, 1.0);
        let m = PI * (p.theta - 2.0) / (p.theta * (p.alpha0 + 1.0));
        let v = tau_star(m, 1e9, &p).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tau_star_scaling_in_tbar() {
        let p = params(6.0, 1.0);
        let m = 10.0;
        let (_, s1) = tau_star_brackets(m, 0.5, &p);
        let (_, s2) = tau_star_brackets(m, 1.0, &p);
        let expect = 4f64.powf(-(p.r - 2.0) / 2.0);
        assert!((s2 / s1 - expect).abs() < 1e-12);
        assert!(tau_star(m, 0.5, &p).unwrap() > tau_star(m, 1.0, &p).unwrap());
        assert!(tau_star(2.0 * m, 0.5, &p).unwrap() > tau_star(m, 0.5, &p).unwrap());
        assert!(tau_star(0.0, 1.0, &p).is_err());
        assert!(tau_star(1.0, -1.0, &p).is_err());
    }

    #[test]
    fn validation() {
        let mut p = ModelParams::default();
        assert!(p.validate().is_ok());
        p.theta = 3.0;
        assert!(p.validate().is_err());
        let p = params(2.0, 1.0);
        assert!(p.validate().is_err());
    }
}
