//! The reduction map `u ↦ φ_ε(u)`: solves `-Δφ − ε⁴Δ₄φ = u²`, `φ = 0` on ∂Ω.
//!
//! `φ_ε(u)` is the unique minimizer of the strictly convex energy
//!
//! ```text
//! E(φ) = ½∫|∇φ|² + (ε⁴/4)∫|∇φ|⁴ − ∫φu²
//! ```
//!
//! Discretely, `∫|∇φ|⁴` is a sum over grid cells: each cell takes the mean
//! of the squared forward differences on its two horizontal and two vertical
//! edges as `|∇φ|²`. Summed the same way, `|∇φ|²` reproduces the edge-based
//! Dirichlet form exactly. The discrete operator is the exact gradient of the
//! discrete energy, so a converged minimizer satisfies
//! `∫|∇φ|² + ε⁴∫|∇φ|⁴ = ∫φu²` to solver tolerance.

use serde::Serialize;

use crate::error::{QspError, Result};
use crate::grid::{
    check_same_domain, dot, h1_inner_raw, integrate, lp_norm, neg_laplacian_into, Field,
};
use crate::linalg::{fast_sine, pcg};

/// Relative residual for the linear CG solve.
pub const LINEAR_TOL: f64 = 1e-10;
/// Nonlinear residual target, relative to `1 + |u²|₂`.
pub const NEWTON_TOL: f64 = 1e-10;
const CG_MAX_ITER: usize = 2000;
const NEWTON_MAX_ITER: usize = 60;
const ARMIJO_C: f64 = 1e-4;

/// Solves `-Δ_h φ = rhs` by CG, preconditioned with the fast sine transform.
pub fn solve_linear_poisson(rhs: &Field) -> Result<Field> {
    solve_linear_poisson_tol(rhs, LINEAR_TOL)
}

/// [`solve_linear_poisson`] with relative residual target `tol`.
pub fn solve_linear_poisson_tol(rhs: &Field, tol: f64) -> Result<Field> {
    let dom = rhs.domain();
    let (n, h) = (dom.n(), dom.h());
    let fs = fast_sine(n);
    let mut x = vec![0.0; dom.len()];
    pcg(
        |v, o| neg_laplacian_into(n, h, v, o),
        |r, z| fs.solve(r, z),
        rhs.as_slice(),
        &mut x,
        tol,
        CG_MAX_ITER,
    )?;
    Field::from_values(dom, x)
}

#[derive(Debug, Clone, Serialize)]
pub struct PoissonSolution {
    #[serde(skip)]
    pub phi: Field,
    pub eps: f64,
    pub newton_iters: usize,
    pub final_residual: f64,
    /// `∫|∇φ|²`.
    pub dirichlet_energy: f64,
    /// `∫|∇φ|⁴`.
    pub quartic_energy: f64,
    /// `∫φu²`.
    pub coupling: f64,
    /// `E(φ_k)` along the Newton iterates.
    #[serde(skip)]
    pub energy_trace: Vec<f64>,
}

impl PoissonSolution {
    /// Relative defect of `∫|∇φ|² + ε⁴∫|∇φ|⁴ = ∫φu²`.
    pub fn energy_identity_defect(&self) -> f64 {
        let e2 = self.eps * self.eps;
        let lhs = self.dirichlet_energy + e2 * e2 * self.quartic_energy;
        (lhs - self.coupling).abs() / self.coupling.abs().max(f64::MIN_POSITIVE)
    }

    /// `¼∫|∇φ|² + (3ε⁴/8)∫|∇φ|⁴`.
    pub fn reduced_energy(&self) -> f64 {
        let e2 = self.eps * self.eps;
        0.25 * self.dirichlet_energy + 0.375 * e2 * e2 * self.quartic_energy
    }

    /// The same quantity written as `½∫φu² − ¼∫|∇φ|² − (ε⁴/8)∫|∇φ|⁴`.
    ///
    /// Stationary in `φ`, so its error is quadratic in the solver residual;
    /// the two forms coincide at the discrete solution.
    pub fn reduced_energy_stationary(&self) -> f64 {
        let e2 = self.eps * self.eps;
        0.5 * self.coupling - 0.25 * self.dirichlet_energy - 0.125 * e2 * e2 * self.quartic_energy
    }
}

/// Cell-wise quartic energy machinery on the `(n+1)²` cells of the grid.
struct Cells<'a> {
    n: usize,
    h: f64,
    phi: &'a [f64],
}

impl Cells<'_> {
    /// Flat index of interior node `(i-1, j-1)` given shifted coordinates, or
    /// `None` on the boundary.
    #[inline]
    fn node(&self, i: usize, j: usize) -> Option<usize> {
        if i == 0 || j == 0 || i > self.n || j > self.n {
            None
        } else {
            Some((j - 1) * self.n + (i - 1))
        }
    }

    /// Corners `[a, b, c, d]` of cell `(i, j)`: `a` lower-left, `b`
    /// lower-right, `c` upper-left, `d` upper-right.
    #[inline]
    fn corners(&self, i: usize, j: usize) -> [Option<usize>; 4] {
        [
            self.node(i, j),
            self.node(i + 1, j),
            self.node(i, j + 1),
            self.node(i + 1, j + 1),
        ]
    }

    /// Edge pairs `(from, to)` of a cell as corner positions.
    const EDGES: [(usize, usize); 4] = [(0, 1), (2, 3), (0, 2), (1, 3)];

    #[inline]
    fn val(w: &[f64], k: Option<usize>) -> f64 {
        k.map_or(0.0, |k| w[k])
    }

    #[inline]
    fn diffs(w: &[f64], c: &[Option<usize>; 4]) -> [f64; 4] {
        let mut d = [0.0; 4];
        for (e, &(a, b)) in Self::EDGES.iter().enumerate() {
            d[e] = Self::val(w, c[b]) - Self::val(w, c[a]);
        }
        d
    }

    #[inline]
    fn scatter(out: &mut [f64], c: &[Option<usize>; 4], coef: &[f64; 4]) {
        for (e, &(a, b)) in Self::EDGES.iter().enumerate() {
            if let Some(kb) = c[b] {
                out[kb] += coef[e];
            }
            if let Some(ka) = c[a] {
                out[ka] -= coef[e];
            }
        }
    }

    /// `∫|∇φ|⁴`.
    fn quartic(&self) -> f64 {
        let inv = 1.0 / (2.0 * self.h * self.h);
        let mut q = 0.0;
        for j in 0..=self.n {
            for i in 0..=self.n {
                let d = Self::diffs(self.phi, &self.corners(i, j));
                let s = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2] + d[3] * d[3]) * inv;
                q += s * s;
            }
        }
        q * self.h * self.h
    }

    /// Adds `w·∂Q/∂φ / 4` (the nodal gradient of `(w/4)·∫|∇φ|⁴`) to `out`.
    fn add_quartic_grad(&self, w: f64, out: &mut [f64]) {
        let inv = 1.0 / (2.0 * self.h * self.h);
        for j in 0..=self.n {
            for i in 0..=self.n {
                let c = self.corners(i, j);
                let d = Self::diffs(self.phi, &c);
                let s = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2] + d[3] * d[3]) * inv;
                let k = 0.5 * w * s;
                Self::scatter(out, &c, &[k * d[0], k * d[1], k * d[2], k * d[3]]);
            }
        }
    }

    /// Adds the Hessian action of `(w/4)·∫|∇φ|⁴` on `v` to `out`.
    fn add_quartic_hess(&self, w: f64, v: &[f64], out: &mut [f64]) {
        let h2 = self.h * self.h;
        let inv = 1.0 / (2.0 * h2);
        for j in 0..=self.n {
            for i in 0..=self.n {
                let c = self.corners(i, j);
                let d = Self::diffs(self.phi, &c);
                let dv = Self::diffs(v, &c);
                let s = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2] + d[3] * d[3]) * inv;
                let ds = (d[0] * dv[0] + d[1] * dv[1] + d[2] * dv[2] + d[3] * dv[3]) / h2;
                let a = 0.5 * w * ds;
                let b = 0.5 * w * s;
                let coef = [
                    a * d[0] + b * dv[0],
                    a * d[1] + b * dv[1],
                    a * d[2] + b * dv[2],
                    a * d[3] + b * dv[3],
                ];
                Self::scatter(out, &c, &coef);
            }
        }
    }
}

/// `∫|∇φ|⁴` with the cell discretization.
pub fn quartic_energy(phi: &Field) -> f64 {
    let dom = phi.domain();
    Cells {
        n: dom.n(),
        h: dom.h(),
        phi: phi.as_slice(),
    }
    .quartic()
}

/// `|∇φ|₄ = (∫|∇φ|⁴)^{1/4}`.
pub fn grad_l4_norm(phi: &Field) -> f64 {
    quartic_energy(phi).powf(0.25)
}

/// Discrete energy `E(φ)` of the second equation for data `u²`.
pub fn phi_energy(phi: &Field, u_sq: &Field, eps: f64) -> f64 {
    let dom = phi.domain();
    let e4 = eps.powi(4);
    let d = h1_inner_raw(dom.n(), phi.as_slice(), phi.as_slice());
    let q = if e4 > 0.0 { quartic_energy(phi) } else { 0.0 };
    0.5 * d + 0.25 * e4 * q - integrate(&phi.mul(u_sq))
}

/// `E'(φ)` as an L² density (nodal gradient divided by `h²`).
pub fn phi_residual(phi: &Field, u_sq: &Field, eps: f64) -> Field {
    let dom = phi.domain();
    let (n, h) = (dom.n(), dom.h());
    let mut g = vec![0.0; dom.len()];
    neg_laplacian_into(n, h, phi.as_slice(), &mut g);
    let e4 = eps.powi(4);
    if e4 > 0.0 {
        let mut q = vec![0.0; dom.len()];
        Cells {
            n,
            h,
            phi: phi.as_slice(),
        }
        .add_quartic_grad(e4, &mut q);
        let inv_h2 = 1.0 / (h * h);
        for (gk, qk) in g.iter_mut().zip(&q) {
            *gk += qk * inv_h2;
        }
    }
    for (gk, s) in g.iter_mut().zip(u_sq.as_slice()) {
        *gk -= s;
    }
    Field::from_values(dom, g).expect("finite residual")
}

/// Solves the second equation starting from `φ = 0`.
pub fn solve_phi(u: &Field, eps: f64) -> Result<PoissonSolution> {
    solve_phi_from(u, eps, None)
}

/// Solves the second equation by damped Newton from an optional start.
///
/// At `ε = 0` the problem is linear and the start is ignored.
pub fn solve_phi_from(u: &Field, eps: f64, start: Option<&Field>) -> Result<PoissonSolution> {
    solve_phi_with(u, eps, start, NEWTON_TOL)
}

/// Full-control solve: the residual target is `tol·(1 + |u²|₂)`, and at
/// `ε = 0` the linear solve runs to relative residual `min(tol, LINEAR_TOL)`.
pub fn solve_phi_with(
    u: &Field,
    eps: f64,
    start: Option<&Field>,
    tol: f64,
) -> Result<PoissonSolution> {
    if !(tol > 0.0) {
        return Err(QspError::InvalidParameter {
            name: "tol",
            value: tol,
            reason: "tolerance must be > 0",
        });
    }
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(QspError::InvalidParameter {
            name: "eps",
            value: eps,
            reason: "must be finite and >= 0",
        });
    }
    let dom = u.domain();
    let u_sq = u.mul(u);
    let scale = 1.0 + lp_norm(&u_sq, 2.0)?;
    let e4 = eps.powi(4);

    if e4 == 0.0 {
        let phi = solve_linear_poisson_tol(&u_sq, tol.min(LINEAR_TOL))?;
        let res = lp_norm(&phi_residual(&phi, &u_sq, 0.0), 2.0)?;
        let energy = phi_energy(&phi, &u_sq, 0.0);
        return Ok(finish(phi, &u_sq, eps, 0, res, vec![energy]));
    }

    let (n, h) = (dom.n(), dom.h());
    let fs = fast_sine(n);
    let mut phi = match start {
        Some(s) => {
            check_same_domain(s, u)?;
            s.clone()
        }
        None => Field::zeros(dom),
    };
    let mut energy = phi_energy(&phi, &u_sq, eps);
    let mut trace = vec![energy];
    let inv_h2 = 1.0 / (h * h);
    let mut res = f64::INFINITY;
    for it in 0..=NEWTON_MAX_ITER {
        let g = phi_residual(&phi, &u_sq, eps);
        res = lp_norm(&g, 2.0)?;
        if res <= tol * scale {
            return Ok(finish(phi, &u_sq, eps, it, res, trace));
        }
        if it == NEWTON_MAX_ITER {
            break;
        }
        let cells = Cells {
            n,
            h,
            phi: phi.as_slice(),
        };
        let rhs: Vec<f64> = g.as_slice().iter().map(|v| -v).collect();
        let mut step = vec![0.0; dom.len()];
        let mut buf = vec![0.0; dom.len()];
        pcg(
            |v, out| {
                neg_laplacian_into(n, h, v, out);
                buf.iter_mut().for_each(|b| *b = 0.0);
                cells.add_quartic_hess(e4, v, &mut buf);
                for (o, b) in out.iter_mut().zip(&buf) {
                    *o += b * inv_h2;
                }
            },
            |r, z| fs.solve(r, z),
            &rhs,
            &mut step,
            1e-12,
            CG_MAX_ITER,
        )?;
        // Directional derivative of E along the step (E' carries weight h²).
        let slope = dot(g.as_slice(), &step) * dom.quad_weight();
        let step = Field::from_values(dom, step)?;
        let mut s = 1.0;
        loop {
            let trial = phi.lin_comb(1.0, &step, s);
            let e_trial = phi_energy(&trial, &u_sq, eps);
            let tiny = 1e-14 * energy.abs().max(1e-300);
            let armijo = e_trial <= energy + ARMIJO_C * s * slope
                || (slope.abs() <= tiny && e_trial <= energy + tiny);
            // Close to the solution the energy change drowns in rounding;
            // a full step that shrinks the residual is then taken as long as
            // the energy moves by no more than rounding.
            let rounding = 1e-12 * energy.abs().max(1e-300);
            let flat = !armijo
                && s == 1.0
                && e_trial <= energy + rounding
                && lp_norm(&phi_residual(&trial, &u_sq, eps), 2.0)? < 0.5 * res;
            if armijo || flat {
                if e_trial > energy + rounding {
                    return Err(QspError::LineSearch {
                        what: "quasilinear Poisson Newton (energy increased)",
                        residual: res,
                    });
                }
                phi = trial;
                energy = e_trial.min(energy);
                trace.push(e_trial);
                break;
            }
            s *= 0.5;
            if s < 1e-12 {
                return Err(QspError::LineSearch {
                    what: "quasilinear Poisson Newton",
                    residual: res,
                });
            }
        }
    }
    Err(QspError::NonConvergence {
        what: "quasilinear Poisson Newton",
        iterations: NEWTON_MAX_ITER,
        residual: res,
    })
}

fn finish(
    phi: Field,
    u_sq: &Field,
    eps: f64,
    iters: usize,
    res: f64,
    trace: Vec<f64>,
) -> PoissonSolution {
    let n = phi.domain().n();
    let d = h1_inner_raw(n, phi.as_slice(), phi.as_slice());
    let q = quartic_energy(&phi);
    let c = integrate(&phi.mul(u_sq));
    PoissonSolution {
        phi,
        eps,
        newton_iters: iters,
        final_residual: res,
        dirichlet_energy: d,
        quartic_energy: q,
        coupling: c,
        energy_trace: trace,
    }
}

/// Convergence diagnostics for `φ_ε(u_k) → φ_ε(u_lim)`.
#[derive(Debug, Clone, Serialize)]
pub struct ContinuityReport {
    pub dirichlet: Vec<f64>,
    pub quartic: Vec<f64>,
    pub coupling: Vec<f64>,
    /// `|φ(u_k) − φ(u_lim)|_∞`.
    pub sup_dist: Vec<f64>,
    /// `|∫φ(u_k)u_k v − ∫φ(u_lim)u_lim v|` for the supplied test field.
    pub weak_coupling_dist: Vec<f64>,
    pub limit_dirichlet: f64,
    pub limit_quartic: f64,
    pub limit_coupling: f64,
    /// Every delta sequence is non-increasing (up to `1e-12` relative slack).
    pub monotone: bool,
    /// Largest delta at the last index, relative to the limit magnitudes.
    pub final_delta: f64,
}

/// Tracks the five continuity quantities of the reduction map along a
/// caller-supplied sequence `u_k → u_lim`.
pub fn phi_continuity_probe(
    u_seq: &[Field],
    u_lim: &Field,
    eps: f64,
    v: &Field,
) -> Result<ContinuityReport> {
    check_same_domain(u_lim, v)?;
    let lim = solve_phi(u_lim, eps)?;
    let lim_weak = integrate(&lim.phi.mul(u_lim).mul(v));
    let mut rep = ContinuityReport {
        dirichlet: vec![],
        quartic: vec![],
        coupling: vec![],
        sup_dist: vec![],
        weak_coupling_dist: vec![],
        limit_dirichlet: lim.dirichlet_energy,
        limit_quartic: lim.quartic_energy,
        limit_coupling: lim.coupling,
        monotone: true,
        final_delta: 0.0,
    };
    for u in u_seq {
        check_same_domain(u, u_lim)?;
        let s = solve_phi(u, eps)?;
        rep.dirichlet.push(s.dirichlet_energy);
        rep.quartic.push(s.quartic_energy);
        rep.coupling.push(s.coupling);
        rep.sup_dist.push(lp_norm(&s.phi.sub(&lim.phi), f64::INFINITY)?);
        rep.weak_coupling_dist
            .push((integrate(&s.phi.mul(u).mul(v)) - lim_weak).abs());
    }
    let deltas = |xs: &[f64], l: f64| xs.iter().map(|x| (x - l).abs()).collect::<Vec<_>>();
    let seqs = [
        (deltas(&rep.dirichlet, rep.limit_dirichlet), rep.limit_dirichlet.abs()),
        (deltas(&rep.quartic, rep.limit_quartic), rep.limit_quartic.abs()),
        (deltas(&rep.coupling, rep.limit_coupling), rep.limit_coupling.abs()),
        (rep.sup_dist.clone(), lp_norm(&lim.phi, f64::INFINITY)?),
        (rep.weak_coupling_dist.clone(), lim_weak.abs()),
    ];
    for (ds, mag) in &seqs {
        let slack = 1e-12 * mag.max(1e-300);
        if ds.windows(2).any(|w| w[1] > w[0] + slack) {
            rep.monotone = false;
        }
        if let Some(last) = ds.last() {
            rep.final_delta = rep.final_delta.max(last / mag.max(1e-300));
        }
    }
    Ok(rep)
}
