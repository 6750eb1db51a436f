//! Continuation in ε towards the Schrödinger–Poisson limit `ε = 0`.
//!
//! The limit pair `(u₀, φ₀)` is computed once with the linear reduction.
//! Each ε of a decreasing schedule is then solved with the previous final
//! path as warm start, and compared against the limit.

use serde::Serialize;

use crate::error::{QspError, Result};
use crate::grid::{h1_norm, integrate, lp_norm, Field};
use crate::ground_state::GroundState;
use crate::mountain_pass::{solve_with, MpPath, SolveOptions, Solved};
use crate::nonlinearity::ModelParams;
use crate::poisson::{grad_l4_norm, solve_phi};

/// One row of the sweep table.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRecord {
    pub eps: f64,
    /// `‖u_ε − u₀‖`.
    pub u_dist: f64,
    /// `‖φ_ε − φ₀‖`.
    pub phi_dist: f64,
    /// `ε·|∇φ_ε|₄`.
    pub eps_w14: f64,
    /// `‖u_ε‖`.
    pub u_norm: f64,
    #[serde(rename = "J_value")]
    pub j_value: f64,
    /// `‖u_ε‖² ≤ 2π/(α₀+1)`.
    pub gate: bool,
    pub converged: bool,
    /// Error message when the solve failed outright.
    pub failure: Option<String>,
    /// The solution pair, absent for failed rows.
    #[serde(skip)]
    pub u: Option<Field>,
    #[serde(skip)]
    pub phi: Option<Field>,
}

impl SweepRecord {
    fn failed(eps: f64, msg: String) -> Self {
        Self {
            eps,
            u_dist: f64::NAN,
            phi_dist: f64::NAN,
            eps_w14: f64::NAN,
            u_norm: f64::NAN,
            j_value: f64::NAN,
            gate: false,
            converged: false,
            failure: Some(msg),
            u: None,
            phi: None,
        }
    }

    /// Whether the row enters the convergence verdicts.
    pub fn counts(&self) -> bool {
        self.converged && self.gate
    }
}

/// `start, start·factor, …` with `count` entries.
pub fn geometric_schedule(start: f64, factor: f64, count: usize) -> Result<Vec<f64>> {
    if !(start > 0.0) || !start.is_finite() {
        return Err(QspError::InvalidParameter {
            name: "eps_start",
            value: start,
            reason: "must be finite and > 0",
        });
    }
    if !(factor > 0.0 && factor < 1.0) {
        return Err(QspError::InvalidParameter {
            name: "eps_factor",
            value: factor,
            reason: "must lie in (0, 1) for a decreasing schedule",
        });
    }
    if count == 0 {
        return Err(QspError::InvalidParameter {
            name: "eps_count",
            value: 0.0,
            reason: "schedule needs at least one value",
        });
    }
    Ok((0..count).map(|k| start * factor.powi(k as i32)).collect())
}

/// The mountain-pass solution of the limit system with `ε = 0`.
pub fn solve_limit_problem(gs: &GroundState, p: &ModelParams, opts: &SolveOptions) -> Result<Solved> {
    solve_with(gs, &p.with_eps(0.0), opts, None)
}

/// Solves along `schedule` with warm starts and compares with `limit`.
///
/// A failing ε produces a row marked failed; the sweep continues from the
/// last good path.
pub fn run_sweep(
    gs: &GroundState,
    schedule: &[f64],
    p: &ModelParams,
    opts: &SolveOptions,
    limit: &Solved,
) -> Result<Vec<SweepRecord>> {
    if schedule.windows(2).any(|w| !(w[1] < w[0])) || schedule.iter().any(|&e| !(e > 0.0)) {
        return Err(QspError::InvalidParameter {
            name: "eps_schedule",
            value: f64::NAN,
            reason: "schedule must be positive and strictly decreasing",
        });
    }
    let (u0, phi0) = (&limit.record.u, &limit.record.phi);
    let gate_level = 2.0 * std::f64::consts::PI / (p.alpha0 + 1.0);
    let mut warm: Option<MpPath> = None;
    let mut rows = Vec::with_capacity(schedule.len());
    for &eps in schedule {
        match solve_with(gs, &p.with_eps(eps), opts, warm.as_ref()) {
            Ok(s) => {
                let r = &s.record;
                rows.push(SweepRecord {
                    eps,
                    u_dist: h1_norm(&r.u.sub(u0)),
                    phi_dist: h1_norm(&r.phi.sub(phi0)),
                    eps_w14: eps * grad_l4_norm(&r.phi),
                    u_norm: r.u_norm_sq.sqrt(),
                    j_value: r.j_value,
                    gate: r.u_norm_sq <= gate_level,
                    converged: r.converged,
                    failure: None,
                    u: Some(r.u.clone()),
                    phi: Some(r.phi.clone()),
                });
                warm = Some(s.path);
            }
            Err(e) => rows.push(SweepRecord::failed(eps, e.to_string())),
        }
    }
    Ok(rows)
}

/// Decay verdicts over a finished sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepVerdicts {
    /// ε of the reference row (0.5 when scheduled, else the first counted row).
    pub reference_eps: f64,
    /// `u_dist(final) / u_dist(reference)`.
    pub u_ratio: f64,
    pub phi_ratio: f64,
    pub w14_ratio: f64,
    /// `eps_w14` strictly decreasing over the last four counted rows.
    pub w14_tail_decreasing: bool,
    /// `min u_norm` over converged rows.
    pub h: f64,
    pub all_gated: bool,
    pub all_converged: bool,
}

impl SweepVerdicts {
    pub fn pass(&self) -> bool {
        self.u_ratio <= 0.5
            && self.phi_ratio <= 0.5
            && self.w14_ratio <= 0.25
            && self.w14_tail_decreasing
            && self.h >= 1e-2
            && self.all_gated
            && self.all_converged
    }
}

pub fn sweep_verdicts(rows: &[SweepRecord]) -> SweepVerdicts {
    let counted: Vec<&SweepRecord> = rows.iter().filter(|r| r.counts()).collect();
    let reference = counted
        .iter()
        .find(|r| r.eps == 0.5)
        .or_else(|| counted.first())
        .copied();
    let last = counted.last().copied();
    let ratio = |f: fn(&SweepRecord) -> f64| match (reference, last) {
        (Some(a), Some(b)) => f(b) / f(a),
        _ => f64::NAN,
    };
    let tail: Vec<f64> = counted.iter().rev().take(4).map(|r| r.eps_w14).collect();
    SweepVerdicts {
        reference_eps: reference.map_or(f64::NAN, |r| r.eps),
        u_ratio: ratio(|r| r.u_dist),
        phi_ratio: ratio(|r| r.phi_dist),
        w14_ratio: ratio(|r| r.eps_w14),
        w14_tail_decreasing: tail.len() == 4 && tail.windows(2).all(|w| w[0] < w[1]),
        h: rows
            .iter()
            .filter(|r| r.converged)
            .map(|r| r.u_norm)
            .fold(f64::INFINITY, f64::min),
        all_gated: rows.iter().all(|r| r.gate),
        all_converged: rows.iter().all(|r| r.converged),
    }
}

/// Both sides of the Hölder estimate
/// `|∫φu_ε² − ∫φu_ε u₀| ≤ |φ|₃|u_ε|₃|u_ε − u₀|₃` with `φ = φ_ε(u_ε)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CrossTermReport {
    pub left: f64,
    pub right: f64,
    pub holds: bool,
}

pub fn cross_term_probe(u_eps: &Field, u0: &Field, eps: f64) -> Result<CrossTermReport> {
    crate::grid::check_same_domain(u_eps, u0)?;
    let phi = solve_phi(u_eps, eps)?.phi;
    let pu = phi.mul(u_eps);
    let left = (integrate(&pu.mul(u_eps)) - integrate(&pu.mul(u0))).abs();
    let right = lp_norm(&phi, 3.0)? * lp_norm(u_eps, 3.0)? * lp_norm(&u_eps.sub(u0), 3.0)?;
    Ok(CrossTermReport {
        left,
        right,
        holds: left <= right + 1e-10,
    })
}

/// `‖u_cold − u_warm‖` after a cold-start solve at `eps`.
pub fn branch_stability(
    gs: &GroundState,
    eps: f64,
    p: &ModelParams,
    opts: &SolveOptions,
    warm_u: &Field,
) -> Result<f64> {
    let cold = solve_with(gs, &p.with_eps(eps), opts, None)?;
    Ok(h1_norm(&cold.record.u.sub(warm_u)))
}
