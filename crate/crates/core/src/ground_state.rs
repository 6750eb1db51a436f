//! Ground state of the Lane–Emden problem `-Δu = |u|^{r-2}u`, `u = 0` on ∂Ω.
//!
//! The minimizer of the Sobolev quotient `Q(u) = ‖u‖²/|u|_r²` is found by
//! projected gradient descent on the unit `L^r` sphere, using the H¹₀
//! gradient. On the sphere that gradient is `2u − 2Q·(-Δ)⁻¹(|u|^{r-2}u)`, so a
//! step of length ½ is exactly the normalized nonlinear inverse iteration.
//! The minimizer is then scaled onto the Nehari manifold, giving the ground
//! state `𝔲` and its level `𝔪 = (r−2)/(2r)‖𝔲‖²`.

use serde::Serialize;

use crate::error::{QspError, Result};
use crate::grid::{h1_norm_sq, laplacian_apply, lp_norm, DiscreteDomain, Field};
use crate::poisson::solve_linear_poisson;

#[derive(Debug, Clone, Serialize)]
pub struct GroundState {
    #[serde(skip)]
    pub u_frak: Field,
    pub m_frak: f64,
    /// `min ‖u‖²/|u|_r²`.
    pub sobolev_quotient: f64,
    pub r: f64,
    pub iterations: usize,
    pub residual: f64,
}

impl GroundState {
    /// `‖𝔲‖²`.
    pub fn norm_sq(&self) -> f64 {
        h1_norm_sq(&self.u_frak)
    }

    /// `∫|𝔲|^r`.
    pub fn lr_power(&self) -> f64 {
        power_integral(&self.u_frak, self.r)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GroundStateOptions {
    pub max_iter: usize,
    /// Stop once the H¹₀ gradient norm of `Q` on the sphere, relative to `Q`,
    /// falls below this.
    pub grad_tol: f64,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        Self {
            max_iter: 20_000,
            grad_tol: 1e-11,
        }
    }
}

fn power_integral(u: &Field, r: f64) -> f64 {
    let w = u.domain().quad_weight();
    u.as_slice().iter().map(|v| v.abs().powf(r)).sum::<f64>() * w
}

fn lr_normalize(u: &Field, r: f64) -> Result<Field> {
    let nrm = lp_norm(u, r)?;
    if !(nrm > 0.0) {
        return Err(QspError::InvalidField("cannot normalize the zero field".into()));
    }
    Ok(u.scale(1.0 / nrm))
}

/// Scale `t = (‖u‖²/∫|u|^r)^{1/(r−2)}` putting `t·u` on the Nehari manifold.
pub fn nehari_scale(u: &Field, r: f64) -> Result<f64> {
    let p = power_integral(u, r);
    if !(p > 0.0) {
        return Err(QspError::InvalidField("zero field has no Nehari scale".into()));
    }
    Ok((h1_norm_sq(u) / p).powf(1.0 / (r - 2.0)))
}

/// `Q(u) = ‖u‖²/|u|_r²`.
pub fn sobolev_quotient(u: &Field, r: f64) -> Result<f64> {
    let nrm = lp_norm(u, r)?;
    if !(nrm > 0.0) {
        return Err(QspError::InvalidField("quotient undefined at zero".into()));
    }
    Ok(h1_norm_sq(u) / (nrm * nrm))
}

/// Relative L² residual `|-Δ_h u − |u|^{r−2}u|₂ / |u|₂` of the Lane–Emden problem.
pub fn residual_a(u: &Field, r: f64) -> Result<f64> {
    let un = lp_norm(u, 2.0)?;
    if un == 0.0 {
        return Err(QspError::InvalidField("residual undefined at u = 0".into()));
    }
    let lu = laplacian_apply(u);
    let rhs = u.map(|v| v.abs().powf(r - 2.0) * v);
    Ok(lp_norm(&lu.sub(&rhs), 2.0)? / un)
}

/// Positive polynomial bump `x(1−x)y(1−y)`, the default initial guess.
pub fn default_guess(dom: DiscreteDomain) -> Field {
    Field::from_fn(dom, |x, y| x * (1.0 - x) * y * (1.0 - y))
}

pub fn solve_ground_state(dom: DiscreteDomain, r: f64) -> Result<GroundState> {
    solve_ground_state_from(&default_guess(dom), r, GroundStateOptions::default())
}

pub fn solve_ground_state_from(
    initial: &Field,
    r: f64,
    opts: GroundStateOptions,
) -> Result<GroundState> {
    if !(r > 2.0) {
        return Err(QspError::InvalidParameter {
            name: "r",
            value: r,
            reason: "Lane-Emden exponent must exceed 2",
        });
    }
    let mut u = lr_normalize(initial, r)?;
    let mut q = h1_norm_sq(&u);
    let mut step: f64 = 0.5;
    let mut grad_rel = f64::INFINITY;
    for it in 0..opts.max_iter {
        let nonlin = u.map(|v| v.abs().powf(r - 2.0) * v);
        let riesz = solve_linear_poisson(&nonlin)?;
        let g = u.lin_comb(2.0, &riesz, -2.0 * q);
        grad_rel = h1_norm_sq(&g).sqrt() / q;
        if grad_rel <= opts.grad_tol {
            return finish(u, r, q, it);
        }
        let mut s = (2.0 * step).min(0.5);
        loop {
            let trial = lr_normalize(&u.lin_comb(1.0, &g, -s), r)?;
            let q_trial = h1_norm_sq(&trial);
            // Near the minimizer Q is flat to rounding; the relative slack lets
            // the iteration keep contracting the gradient instead.
            if q_trial <= q * (1.0 + 1e-14) {
                u = trial;
                q = q_trial;
                step = s;
                break;
            }
            s *= 0.5;
            if s < 1e-10 {
                // Q is flat to rounding; the iterate is as good as it gets.
                if grad_rel <= opts.grad_tol.sqrt() {
                    return finish(u, r, q, it);
                }
                return Err(QspError::LineSearch {
                    what: "ground-state descent",
                    residual: grad_rel,
                });
            }
        }
    }
    Err(QspError::NonConvergence {
        what: "ground-state descent",
        iterations: opts.max_iter,
        residual: grad_rel,
    })
}

fn finish(u: Field, r: f64, q: f64, iterations: usize) -> Result<GroundState> {
    let t = nehari_scale(&u, r)?;
    let u_frak = u.scale(t);
    let norm_sq = h1_norm_sq(&u_frak);
    let residual = residual_a(&u_frak, r)?;
    Ok(GroundState {
        m_frak: (r - 2.0) / (2.0 * r) * norm_sq,
        u_frak,
        sobolev_quotient: q,
        r,
        iterations,
        residual,
    })
}
