//! Reduced energies `J_ε`, `I_ε`, the truncated `J_ε^T`, and their
//! H¹₀-Riesz gradients.
//!
//! With `φ = φ_ε(u)`:
//!
//! ```text
//! I_ε(u)   = ¼∫|∇φ|² + (3ε⁴/8)∫|∇φ|⁴
//! J_ε^T(u) = ½‖u‖² + ψ(‖u‖²/T²)·I_ε(u) − ∫F(u)
//! ```
//!
//! and the differential
//!
//! ```text
//! (J_ε^T)'(u)[v] = (1 + (2/T²)ψ'(‖u‖²/T²)I_ε(u))⟨u,v⟩ + ψ(‖u‖²/T²)∫φuv − ∫f(u)v
//! ```
//!
//! needs no derivative of the reduction map because `φ_ε(u)` is a critical
//! point in `φ` of the two-variable energy. The untruncated `J_ε` is the
//! case `T = ∞`.

use serde::Serialize;

use crate::error::{QspError, Result};
use crate::grid::{h1_norm_sq, integrate, Field};
use crate::nonlinearity::{f_field, primitive_sum, ModelParams};
use crate::poisson::{solve_linear_poisson, solve_phi_from, PoissonSolution};

/// The fixed cut-off: quintic smoothstep transition on `[1, 2]`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CutoffSpec {
    /// `sup |ψ'|`, attained at `t = 1.5`.
    pub derivative_bound: f64,
}

pub const CUTOFF: CutoffSpec = CutoffSpec {
    derivative_bound: 15.0 / 8.0,
};

fn check_nonneg(t: f64) -> Result<()> {
    if !(t >= 0.0) {
        return Err(QspError::InvalidParameter {
            name: "t",
            value: t,
            reason: "cut-off is defined on [0, inf)",
        });
    }
    Ok(())
}

/// `ψ(t)`: 1 on `[0,1]`, `1 − S(t−1)` on `(1,2)` with `S(s) = 6s⁵ − 15s⁴ + 10s³`,
/// 0 on `[2,∞)`.
pub fn psi(t: f64) -> Result<f64> {
    check_nonneg(t)?;
    Ok(if t <= 1.0 {
        1.0
    } else if t >= 2.0 {
        0.0
    } else {
        let s = t - 1.0;
        1.0 - s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
    })
}

/// `ψ'(t)`.
pub fn psi_prime(t: f64) -> Result<f64> {
    check_nonneg(t)?;
    Ok(if t <= 1.0 || t >= 2.0 {
        0.0
    } else {
        let s = t - 1.0;
        -30.0 * s * s * (1.0 - s) * (1.0 - s)
    })
}

/// Everything computed in one functional evaluation.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub value: f64,
    pub norm_sq: f64,
    /// `h_T(u) = ψ(‖u‖²/T²)`.
    pub cutoff: f64,
    /// `I_ε(u)`; zero when the Poisson solve was skipped.
    pub reduced: f64,
    /// Riesz representative of the differential, when requested.
    pub grad: Option<Field>,
    /// `None` when `h_T(u) = 0` made the Poisson solve unnecessary.
    pub poisson: Option<PoissonSolution>,
}

impl Evaluation {
    pub fn grad_norm(&self) -> f64 {
        self.grad.as_ref().map_or(f64::NAN, |g| h1_norm_sq(g).sqrt())
    }
}

/// Evaluates `J_ε^T` (with `T = p.truncation`) and optionally its gradient.
///
/// `warm_phi` seeds the Newton solve of the reduction map.
pub fn evaluate(
    u: &Field,
    p: &ModelParams,
    with_grad: bool,
    warm_phi: Option<&Field>,
) -> Result<Evaluation> {
    let norm_sq = h1_norm_sq(u);
    let t2 = p.truncation * p.truncation;
    let ratio = norm_sq / t2;
    let cutoff = psi(ratio)?;
    let cutoff_slope = psi_prime(ratio)?;
    let poisson = if cutoff == 0.0 && cutoff_slope == 0.0 {
        None
    } else {
        Some(solve_phi_from(u, p.eps, warm_phi)?)
    };
    // The stationary form keeps J consistent with its gradient to second
    // order in the Newton residual.
    let reduced = poisson
        .as_ref()
        .map_or(0.0, PoissonSolution::reduced_energy_stationary);
    let w = u.domain().quad_weight();
    let value = 0.5 * norm_sq + cutoff * reduced - primitive_sum(u.as_slice(), p)? * w;

    let grad = if with_grad {
        let fu = f_field(u.as_slice(), p)?;
        let mut density = vec![0.0; fu.len()];
        match &poisson {
            Some(s) if cutoff != 0.0 => {
                for (k, d) in density.iter_mut().enumerate() {
                    *d = cutoff * s.phi.as_slice()[k] * u.as_slice()[k] - fu[k];
                }
            }
            _ => {
                for (d, f) in density.iter_mut().zip(&fu) {
                    *d = -f;
                }
            }
        }
        let coef = if t2.is_finite() {
            1.0 + 2.0 / t2 * cutoff_slope * reduced
        } else {
            1.0
        };
        let riesz = solve_linear_poisson(&Field::from_values(u.domain(), density)?)?;
        Some(u.lin_comb(coef, &riesz, 1.0))
    } else {
        None
    };

    Ok(Evaluation {
        value,
        norm_sq,
        cutoff,
        reduced,
        grad,
        poisson,
    })
}

/// `I_ε(u) = ¼∫|∇φ_ε(u)|² + (3ε⁴/8)∫|∇φ_ε(u)|⁴`.
pub fn eval_i(u: &Field, eps: f64) -> Result<f64> {
    Ok(solve_phi_from(u, eps, None)?.reduced_energy())
}

pub fn eval_jt(u: &Field, p: &ModelParams) -> Result<f64> {
    Ok(evaluate(u, p, false, None)?.value)
}

pub fn grad_jt(u: &Field, p: &ModelParams) -> Result<Field> {
    Ok(evaluate(u, p, true, None)?
        .grad
        .expect("gradient requested"))
}

/// Untruncated `J_ε`.
pub fn eval_j(u: &Field, p: &ModelParams) -> Result<f64> {
    eval_jt(u, &p.with_truncation(f64::INFINITY))
}

pub fn grad_j(u: &Field, p: &ModelParams) -> Result<Field> {
    grad_jt(u, &p.with_truncation(f64::INFINITY))
}

/// `J'(u)[v]` for a given `φ`, computed directly from the weak form of the
/// first equation: `⟨u,v⟩ + ∫φuv − ∫f(u)v`.
pub fn weak_residual(u: &Field, phi: &Field, v: &Field, p: &ModelParams) -> Result<f64> {
    let fu = Field::from_values(u.domain(), f_field(u.as_slice(), p)?)?;
    let grad_part = crate::grid::h1_inner(u, v)?;
    Ok(grad_part + integrate(&phi.mul(u).mul(v)) - integrate(&fu.mul(v)))
}
