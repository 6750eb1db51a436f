//! Mountain-pass critical points of the truncated functional `J_ε^T`.
//!
//! The saddle is located in two phases. First a string of `N` nodes joining
//! `0` to a point `e_T` with `J_ε^T(e_T) < 0` is deformed: each interior
//! node moves against the part of its H¹₀ gradient normal to the path, and
//! the nodes are then re-equidistributed in arclength. A sweep is kept only
//! if it does not raise the highest level on the path.
//!
//! A discrete string resolves the saddle only up to its node spacing, so the
//! highest node is then refined on its own. With the path tangent `t` frozen,
//! the refinement minimizes `M(w) = max_s J(w + s·t)` over the hyperplane
//! orthogonal to `t`: every step maximizes along `t` by a secant iteration on
//! the directional derivative, then takes an Armijo step against the
//! orthogonal gradient.
//!
//! The module also computes the scalar maximizer `𝔱_{ε,T}` of
//! `t ↦ J_ε^T(t𝔲)`, the constant `K_ε` bounding it, the truncation radius
//! `T̄(ε) = K_ε‖𝔲‖/2`, and the post-hoc verdicts on a converged pair.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{QspError, Result};
use crate::functional::{evaluate, psi, weak_residual, Evaluation};
use crate::grid::{
    h1_inner, h1_norm, h1_norm_sq, lp_norm, random_smooth_field, DiscreteDomain, Field,
};
use crate::ground_state::{solve_ground_state, GroundState};
use crate::nonlinearity::{primitive_sum, tau_star, ModelParams};
use crate::poisson::{phi_residual, solve_phi, NEWTON_TOL};

pub const DEFAULT_PATH_NODES: usize = 21;
pub const DEFAULT_TOL: f64 = 1e-6;
/// Relative slack on the published level and norm bounds.
pub const BOUND_SLACK: f64 = 0.05;
pub const NONNEG_TOL: f64 = 1e-10;
/// Safety factor applied to the scanned maximum of `𝔱_{ε,T}`.
pub const K_SAFETY: f64 = 1.1;
const WEAK_TEST_FIELDS: usize = 10;

/// Discrete path `γ(t_0) = 0, …, γ(t_N) = e_T`.
#[derive(Debug, Clone)]
pub struct MpPath {
    pub nodes: Vec<Field>,
}

impl MpPath {
    /// The straight path `t ↦ t·e_T` sampled at `count` equispaced nodes.
    pub fn straight(endpoint: &Field, count: usize) -> Result<Self> {
        if count < 3 {
            return Err(QspError::InvalidParameter {
                name: "path_nodes",
                value: count as f64,
                reason: "path needs at least one interior node",
            });
        }
        let last = (count - 1) as f64;
        let nodes = (0..count)
            .map(|k| endpoint.scale(k as f64 / last))
            .collect();
        Ok(Self { nodes })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn endpoint(&self) -> &Field {
        self.nodes.last().expect("non-empty path")
    }

    /// Cumulative `‖·‖` arclength at every node.
    pub fn arclength(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.nodes.len()];
        for k in 1..self.nodes.len() {
            s[k] = s[k - 1] + h1_norm(&self.nodes[k].sub(&self.nodes[k - 1]));
        }
        s
    }

    /// Moves the interior nodes to equal arclength spacing by piecewise
    /// linear interpolation. Endpoints are copied untouched.
    pub fn reparametrize(&mut self) {
        let s = self.arclength();
        let total = *s.last().expect("non-empty path");
        if !(total > 0.0) {
            return;
        }
        let m = self.nodes.len();
        let mut out = Vec::with_capacity(m);
        out.push(self.nodes[0].clone());
        let mut seg = 0;
        for k in 1..m - 1 {
            let target = total * k as f64 / (m - 1) as f64;
            while seg + 1 < m - 1 && s[seg + 1] < target {
                seg += 1;
            }
            let len = s[seg + 1] - s[seg];
            let w = if len > 0.0 { (target - s[seg]) / len } else { 0.0 };
            out.push(self.nodes[seg].lin_comb(1.0 - w, &self.nodes[seg + 1], w));
        }
        out.push(self.nodes[m - 1].clone());
        self.nodes = out;
    }
}

/// Outcome of the ray scan establishing the mountain-pass geometry.
#[derive(Debug, Clone, Serialize)]
pub struct Geometry {
    pub rho: f64,
    pub beta: f64,
    /// `t*` with `e_T = t*·v`.
    pub endpoint_scale: f64,
    pub endpoint_level: f64,
    #[serde(skip)]
    pub direction: Field,
    #[serde(skip)]
    pub endpoint: Field,
}

/// Positive bump `sin(πx)sin(πy)` normalized to `‖v‖ = 1`.
pub fn unit_bump(dom: DiscreteDomain) -> Field {
    let v = Field::from_fn(dom, |x, y| (PI * x).sin() * (PI * y).sin());
    let nrm = h1_norm(&v);
    v.scale(1.0 / nrm)
}

/// Scans the ray `t·v` through the unit bump.
///
/// Dropping the nonnegative `h_T·I_ε` term gives the lower bound
/// `L(t) = ½t² − ∫F(tv) ≤ J_ε^T(tv)`. `β` is half the largest scanned
/// value of `L`, and `ρ` the largest scanned radius with `L ≥ β`; both are
/// independent of ε. The endpoint `e_T = t*·v` uses the smallest scanned
/// `t* > max(2T, ρ)` with `J_ε^T(t*v) < 0`.
pub fn geometry_probe(dom: DiscreteDomain, p: &ModelParams) -> Result<Geometry> {
    p.validate()?;
    if !p.truncation.is_finite() {
        return Err(QspError::InvalidParameter {
            name: "T",
            value: p.truncation,
            reason: "geometry probe needs a finite truncation radius",
        });
    }
    let v = unit_bump(dom);
    let w = dom.quad_weight();
    let lower = |t: f64| -> Result<f64> {
        Ok(0.5 * t * t - primitive_sum(v.scale(t).as_slice(), p)? * w)
    };
    const FACTOR: f64 = 1.05;
    const MAX_STEPS: usize = 2000;
    let mut ts = vec![];
    let mut ls = vec![];
    let mut t = 1e-3;
    for _ in 0..MAX_STEPS {
        let l = match lower(t) {
            Ok(l) => l,
            Err(QspError::Overflow { .. }) => break,
            Err(e) => return Err(e),
        };
        ts.push(t);
        ls.push(l);
        if l < 0.0 {
            break;
        }
        t *= FACTOR;
    }
    let peak = ls.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(peak > 0.0) || ls.last().is_none_or(|&l| l >= 0.0) {
        return Err(QspError::Geometry(
            "MP geometry not realized at this grid/params".into(),
        ));
    }
    let beta = 0.5 * peak;
    let rho = ts
        .iter()
        .zip(&ls)
        .filter(|(_, &l)| l >= beta)
        .map(|(&t, _)| t)
        .fold(0.0, f64::max);

    let mut t = (2.0 * p.truncation).max(rho) * FACTOR;
    for _ in 0..MAX_STEPS {
        let e = v.scale(t);
        let level = match evaluate(&e, p, false, None) {
            Ok(ev) => ev.value,
            Err(QspError::Overflow { .. }) => break,
            Err(err) => return Err(err),
        };
        if level < 0.0 {
            return Ok(Geometry {
                rho,
                beta,
                endpoint_scale: t,
                endpoint_level: level,
                direction: v,
                endpoint: e,
            });
        }
        t *= FACTOR;
    }
    Err(QspError::Geometry(
        "MP geometry not realized at this grid/params".into(),
    ))
}

/// Maximizer of `t ↦ J_ε^T(t·𝔲)` with `ε`, `T` taken from `p`.
pub fn compute_t_frak(u_frak: &Field, p: &ModelParams) -> Result<f64> {
    let level = |t: f64| -> Result<f64> { Ok(evaluate(&u_frak.scale(t), p, false, None)?.value) };
    const FACTOR: f64 = 1.2;
    let mut ts = vec![];
    let mut js = vec![];
    let mut t = 1e-3;
    loop {
        let j = match level(t) {
            Ok(j) => j,
            Err(QspError::Overflow { .. }) => break,
            Err(e) => return Err(e),
        };
        ts.push(t);
        js.push(j);
        if j < 0.0 {
            break;
        }
        t *= FACTOR;
    }
    let best = js
        .iter()
        .enumerate()
        .fold(0, |b, (k, &j)| if j > js[b] { k } else { b });
    if best == 0 || best + 1 >= js.len() {
        return Err(QspError::Geometry(
            "no interior maximum of J along the ground-state ray".into(),
        ));
    }
    let (mut a, mut b) = (ts[best - 1], ts[best + 1]);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut jc = level(c)?;
    let mut jd = level(d)?;
    while b - a > 1e-10 * b {
        if jc >= jd {
            b = d;
            d = c;
            jd = jc;
            c = b - g * (b - a);
            jc = level(c)?;
        } else {
            a = c;
            c = d;
            jc = jd;
            d = a + g * (b - a);
            jd = level(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// `K_ε` and `T̄(ε)` together with the scan behind them.
#[derive(Debug, Clone, Serialize)]
pub struct TbarEstimate {
    pub t_bar: f64,
    pub k_eps: f64,
    /// `K_SAFETY·max 𝔱_{ε,T}` over the scan.
    pub k_scan: f64,
    /// Lower bound `2·sqrt(4π/(α₀+1))/‖𝔲‖` enforced on `K_ε`.
    pub k_floor: f64,
    /// `(T, 𝔱_{ε,T})` pairs of the scan.
    pub scan: Vec<(f64, f64)>,
}

/// `T̄ = K‖𝔲‖/2`.
pub fn t_bar_from(k_eps: f64, u_norm: f64) -> f64 {
    0.5 * k_eps * u_norm
}

/// Estimates `K_ε` from `𝔱_{ε,T}` over `T ∈ {2⁻², …, 2⁴}·‖𝔲‖` and returns
/// `T̄(ε) = K_ε‖𝔲‖/2`.
///
/// `K_ε` is only needed as an upper bound of `𝔱_{ε,T}`. The scanned value
/// is raised to `k_floor` when smaller, which makes `T̄² ≥ 4π/(α₀+1)` and
/// keeps the truncation term of `τ*` from dominating the level term.
pub fn compute_tbar(gs: &GroundState, p: &ModelParams) -> Result<TbarEstimate> {
    let u_norm = gs.norm_sq().sqrt();
    let mut scan = Vec::with_capacity(7);
    for k in -2..=4 {
        let t = 2f64.powi(k) * u_norm;
        scan.push((t, compute_t_frak(&gs.u_frak, &p.with_truncation(t))?));
    }
    let k_scan = K_SAFETY * scan.iter().map(|s| s.1).fold(0.0, f64::max);
    let k_floor = 2.0 * (4.0 * PI / (p.alpha0 + 1.0)).sqrt() / u_norm;
    let k_eps = k_scan.max(k_floor);
    let t_bar = t_bar_from(k_eps, u_norm);
    let at = k_eps * k_eps * u_norm * u_norm / (t_bar * t_bar);
    if psi(at)? != 0.0 {
        return Err(QspError::Geometry(format!(
            "cut-off does not vanish at K_eps*u (argument {at})"
        )));
    }
    Ok(TbarEstimate {
        t_bar,
        k_eps,
        k_scan,
        k_floor,
        scan,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct DeformOptions {
    /// Acceptance: `‖grad‖ ≤ tol·max(1, ‖u‖)`.
    pub tol: f64,
    pub max_sweeps: usize,
    pub max_climb: usize,
    /// Initial descent step for the string nodes.
    pub step: f64,
    /// Largest descent step when refining the top node.
    pub climb_step: f64,
    /// Leave the string phase once the gradient at the top node, minus its
    /// tangential part, is below this fraction of the full gradient.
    pub switch_ratio: f64,
}

impl Default for DeformOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_sweeps: 500,
            max_climb: 5000,
            step: 0.5,
            climb_step: 1.5,
            switch_ratio: 0.05,
        }
    }
}

/// Result of [`mp_deform`].
#[derive(Debug, Clone)]
pub struct MpOutcome {
    pub converged: bool,
    pub u: Field,
    pub phi: Field,
    pub j_value: f64,
    pub grad_norm: f64,
    pub u_norm_sq: f64,
    pub path: MpPath,
    /// Index of the refined node in `path`.
    pub top: usize,
    pub sweeps: usize,
    pub climb_steps: usize,
    /// Path max level after each accepted string sweep.
    pub level_history: Vec<f64>,
}

fn accept_tol(tol: f64, norm_sq: f64) -> f64 {
    tol * norm_sq.sqrt().max(1.0)
}

fn eval_nodes(
    nodes: &[Field],
    p: &ModelParams,
    warm: Option<&[Evaluation]>,
) -> Result<Vec<Evaluation>> {
    let m = nodes.len();
    nodes
        .iter()
        .enumerate()
        .map(|(k, u)| {
            let start = warm
                .and_then(|w| w.get(k))
                .and_then(|e| e.poisson.as_ref())
                .map(|s| &s.phi);
            evaluate(u, p, k > 0 && k + 1 < m, start)
        })
        .collect()
}

/// Lowest index of the largest value.
fn argmax(evals: &[Evaluation]) -> usize {
    evals
        .iter()
        .enumerate()
        .fold(0, |b, (k, e)| if e.value > evals[b].value { k } else { b })
}

fn check_endpoints(path: &MpPath, evals: &[Evaluation]) -> Result<()> {
    if path.nodes[0].as_slice().iter().any(|&v| v != 0.0) {
        return Err(QspError::PathInvariant("start node left the origin".into()));
    }
    let last = evals.last().expect("non-empty path").value;
    if !(last < 0.0) {
        return Err(QspError::PathInvariant(format!(
            "endpoint level {last} is not negative"
        )));
    }
    Ok(())
}

fn unit_tangent(path: &MpPath, k: usize) -> Field {
    let t = path.nodes[k + 1].sub(&path.nodes[k - 1]);
    let nrm = h1_norm(&t);
    t.scale(1.0 / nrm)
}

/// Deforms `path` towards a mountain-pass point of `J_ε^T` (`T = p.truncation`).
pub fn mp_deform(mut path: MpPath, p: &ModelParams, opts: &DeformOptions) -> Result<MpOutcome> {
    p.validate()?;
    let m = path.len();
    if m < 3 {
        return Err(QspError::InvalidParameter {
            name: "path_nodes",
            value: m as f64,
            reason: "path needs at least one interior node",
        });
    }
    let mut evals = eval_nodes(&path.nodes, p, None)?;
    check_endpoints(&path, &evals)?;
    let mut history = vec![];
    let mut step = opts.step;
    let mut sweeps = 0;

    // String phase.
    let mut top = argmax(&evals);
    loop {
        let level = evals[top].value;
        history.push(level);
        if top == 0 || top + 1 == m {
            return Err(QspError::PathInvariant(format!(
                "path maximum sits on endpoint {top}"
            )));
        }
        let g = evals[top].grad.as_ref().expect("interior gradient");
        let gnorm = h1_norm(g);
        if gnorm <= accept_tol(opts.tol, evals[top].norm_sq) {
            break;
        }
        let tan = unit_tangent(&path, top);
        let along = h1_inner(g, &tan)?;
        let perp = (gnorm * gnorm - along * along).max(0.0).sqrt();
        if perp <= opts.switch_ratio * gnorm || sweeps >= opts.max_sweeps {
            break;
        }

        let seg = path.arclength().last().copied().unwrap_or(0.0) / (m - 1) as f64;
        let mut accepted = false;
        while step > 1e-8 {
            let mut trial = path.clone();
            for (k, ev) in evals.iter().enumerate().take(m - 1).skip(1) {
                let gk = ev.grad.as_ref().expect("interior gradient");
                let tk = unit_tangent(&path, k);
                let gk = gk.lin_comb(1.0, &tk, -h1_inner(gk, &tk)?);
                let gn = h1_norm(&gk);
                let s = if gn * step > 0.5 * seg { 0.5 * seg / gn } else { step };
                trial.nodes[k] = path.nodes[k].lin_comb(1.0, &gk, -s);
            }
            trial.reparametrize();
            let trial_evals = eval_nodes(&trial.nodes, p, Some(&evals))?;
            let trial_top = argmax(&trial_evals);
            if trial_evals[trial_top].value <= level {
                path = trial;
                evals = trial_evals;
                top = trial_top;
                accepted = true;
                step = (step * 1.5).min(opts.step);
                break;
            }
            step *= 0.5;
        }
        sweeps += 1;
        if !accepted {
            break;
        }
    }
    for w in history.windows(2) {
        if w[1] > w[0] {
            return Err(QspError::PathInvariant(format!(
                "path max level increased from {} to {}",
                w[0], w[1]
            )));
        }
    }
    check_endpoints(&path, &evals)?;

    // Refine the top node with the rest of the path frozen.
    let tan = unit_tangent(&path, top);
    let (u, mut cur, climb_steps, converged) =
        refine_top(path.nodes[top].clone(), evals[top].clone(), &tan, p, opts)?;
    path.nodes[top] = u.clone();

    let phi = match cur.poisson.take() {
        Some(ps) => ps.phi,
        None => solve_phi(&u, p.eps)?.phi,
    };
    Ok(MpOutcome {
        converged,
        grad_norm: cur.grad_norm(),
        j_value: cur.value,
        u_norm_sq: cur.norm_sq,
        u,
        phi,
        path,
        top,
        sweeps,
        climb_steps,
        level_history: history,
    })
}

/// Maximizes `J` along the line `u + t·tan` by secant steps on the
/// directional derivative, stopping once it is small next to the
/// orthogonal part of the gradient. `kappa` carries the (negative)
/// curvature estimate between calls.
fn line_max(
    mut u: Field,
    mut cur: Evaluation,
    tan: &Field,
    p: &ModelParams,
    kappa: &mut f64,
    evals: &mut usize,
) -> Result<(Field, Evaluation)> {
    for _ in 0..LINE_MAX_ITER {
        let g = cur.grad.as_ref().expect("gradient requested");
        let a = h1_inner(g, tan)?;
        let gn = h1_norm(g);
        let perp = (gn * gn - a * a).max(0.0).sqrt();
        if a.abs() <= 0.1 * perp || gn == 0.0 {
            break;
        }
        let t = -a / *kappa;
        let warm = cur.poisson.as_ref().map(|ps| ps.phi.clone());
        let trial = u.lin_comb(1.0, tan, t);
        let next = evaluate(&trial, p, true, warm.as_ref())?;
        *evals += 1;
        let a_next = h1_inner(next.grad.as_ref().expect("gradient requested"), tan)?;
        let k = (a_next - a) / t;
        if k < 0.0 && k.is_finite() {
            *kappa = k;
        } else if a_next.abs() >= a.abs() {
            return Err(QspError::Geometry(
                "J is not concave along the path tangent at the top node".into(),
            ));
        }
        u = trial;
        cur = next;
    }
    Ok((u, cur))
}

const LINE_MAX_ITER: usize = 20;

/// Drives the top node of a settled path to the saddle.
///
/// With the path tangent `tan` frozen, `M(w) = max_t J(w + t·tan)` is
/// minimized over the hyperplane orthogonal to `tan`: each step maximizes
/// along the tangent, then takes an Armijo-controlled descent step along the
/// orthogonal part of the gradient, which is `∇M` at the line maximum.
fn refine_top(
    u: Field,
    start: Evaluation,
    tan: &Field,
    p: &ModelParams,
    opts: &DeformOptions,
) -> Result<(Field, Evaluation, usize, bool)> {
    let mut kappa = -1.0;
    let mut evals = 0;
    let (mut u, mut cur) = line_max(u, start, tan, p, &mut kappa, &mut evals)?;
    let mut s = opts.climb_step;
    let mut steps = 0;
    loop {
        if cur.grad_norm() <= accept_tol(opts.tol, cur.norm_sq) {
            return Ok((u, cur, steps, true));
        }
        if steps >= opts.max_climb || s < 1e-10 {
            return Ok((u, cur, steps, false));
        }
        steps += 1;
        let g = cur.grad.as_ref().expect("gradient requested");
        let perp = g.lin_comb(1.0, tan, -h1_inner(g, tan)?);
        let pn2 = h1_norm_sq(&perp);
        let warm = cur.poisson.as_ref().map(|ps| ps.phi.clone());
        let trial = u.lin_comb(1.0, &perp, -s);
        let next = evaluate(&trial, p, true, warm.as_ref())?;
        let (tu, tnext) = line_max(trial, next, tan, p, &mut kappa, &mut evals)?;
        let decrease = cur.value - tnext.value;
        // Once the predicted decrease is below rounding of J, a shrinking
        // gradient is the only usable signal.
        let resolvable = s * pn2 > 1e-11 * cur.value.abs().max(1.0);
        let ok = if resolvable {
            decrease >= 1e-4 * s * pn2
        } else {
            tnext.grad_norm() < cur.grad_norm()
        };
        if ok {
            u = tu;
            cur = tnext;
            s = (s * 1.5).min(opts.climb_step);
        } else {
            s *= 0.5;
        }
    }
}

/// One post-hoc check: the measured `value`, the `limit` it is compared
/// against, and whether it passed.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Check {
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(value: f64, limit: f64) -> Self {
        Self { value, limit, pass: value <= limit }
    }

    fn at_least(value: f64, limit: f64) -> Self {
        Self { value, limit, pass: value >= limit }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Verdicts {
    /// `J ≤ (1+slack)·π(θ−2)/(θ(α₀+1))`.
    pub level_bound: Check,
    /// `‖u‖² ≤ (1+slack)·min{2π/(α₀+1), T̄²/2}`.
    pub norm_bound: Check,
    /// `τ ≥ τ*(ε)`.
    pub tau_admissible: Check,
    /// `min(min u, min φ) ≥ −1e-10`.
    pub nonnegativity: Check,
    /// `J ≥ β`.
    pub nontrivial: Check,
    /// Largest `|J'(u)[v]|/‖v‖` over random smooth test fields.
    pub weak_residual: Check,
    /// Residual of the second equation relative to `1 + |u²|₂`.
    pub poisson_residual: Check,
    /// Relative defect of the energy identity of the second equation.
    pub energy_identity: Check,
    /// `‖u‖ < T̄`, so the truncation is inactive at `u`.
    pub untruncated: Check,
}

impl Verdicts {
    /// Every check that applies. The level and norm bounds are only
    /// guaranteed, and only required, when `τ ≥ τ*`.
    pub fn all_pass(&self) -> bool {
        let bounds = !self.tau_admissible.pass || (self.level_bound.pass && self.norm_bound.pass);
        bounds
            && self.nonnegativity.pass
            && self.nontrivial.pass
            && self.weak_residual.pass
            && self.poisson_residual.pass
            && self.energy_identity.pass
            && self.untruncated.pass
    }
}

/// Constants the verdicts are measured against.
#[derive(Debug, Clone, Copy)]
pub struct VerifyContext {
    pub beta: f64,
    pub t_bar: f64,
    pub tau_star: f64,
    pub tol: f64,
    pub seed: u64,
}

/// Checks a candidate pair `(u, φ)`; never fails, every outcome is a verdict.
pub fn verify_solution(u: &Field, phi: &Field, j_value: f64, p: &ModelParams, ctx: &VerifyContext) -> Verdicts {
    let norm_sq = h1_norm_sq(u);
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut weak = 0.0f64;
    for _ in 0..WEAK_TEST_FIELDS {
        let v = random_smooth_field(u.domain(), &mut rng, 4);
        let r = weak_residual(u, phi, &v, p).map_or(f64::INFINITY, |r| r.abs() / h1_norm(&v));
        weak = weak.max(r);
    }
    let u_sq = u.mul(u);
    let scale = 1.0 + lp_norm(&u_sq, 2.0).unwrap_or(f64::INFINITY);
    let pres = lp_norm(&phi_residual(phi, &u_sq, p.eps), 2.0).unwrap_or(f64::INFINITY) / scale;
    let identity = {
        let d = h1_norm_sq(phi);
        let q = crate::poisson::quartic_energy(phi);
        let c = crate::grid::integrate(&phi.mul(&u_sq));
        (d + p.eps4() * q - c).abs() / c.abs().max(f64::MIN_POSITIVE)
    };
    let c_level = PI * (p.theta - 2.0) / (p.theta * (p.alpha0 + 1.0));
    let c_norm = (2.0 * PI / (p.alpha0 + 1.0)).min(0.5 * ctx.t_bar * ctx.t_bar);
    let identity_check = if norm_sq == 0.0 {
        Check::at_most(0.0, 1e-8)
    } else {
        Check::at_most(identity, 1e-8)
    };
    Verdicts {
        level_bound: Check::at_most(j_value, (1.0 + BOUND_SLACK) * c_level),
        norm_bound: Check::at_most(norm_sq, (1.0 + BOUND_SLACK) * c_norm),
        tau_admissible: Check::at_least(p.tau, ctx.tau_star),
        nonnegativity: Check::at_least(u.min().min(phi.min()), -NONNEG_TOL),
        nontrivial: Check::at_least(j_value, ctx.beta),
        weak_residual: Check::at_most(weak, accept_tol(ctx.tol, norm_sq)),
        poisson_residual: Check::at_most(pres, NEWTON_TOL),
        energy_identity: identity_check,
        untruncated: Check {
            value: norm_sq.sqrt(),
            limit: ctx.t_bar,
            pass: norm_sq.sqrt() < ctx.t_bar,
        },
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub path_nodes: usize,
    /// Overrides the computed `T̄`.
    pub truncation: Option<f64>,
    pub deform: DeformOptions,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            path_nodes: DEFAULT_PATH_NODES,
            truncation: None,
            deform: DeformOptions::default(),
            seed: 0,
        }
    }
}

/// Summary of one mountain-pass solve. The fields `u` and `phi` are not
/// serialized; they go to separate field dumps.
#[derive(Debug, Clone, Serialize)]
pub struct SolveRecord {
    #[serde(skip)]
    pub u: Field,
    #[serde(skip)]
    pub phi: Field,
    pub n: usize,
    pub converged: bool,
    #[serde(rename = "J_value")]
    pub j_value: f64,
    pub grad_norm: f64,
    pub u_norm_sq: f64,
    pub bounds: Verdicts,
    pub params: ModelParams,
    pub tol: f64,
    pub path_nodes: usize,
    pub m_frak: f64,
    pub t_bar: f64,
    pub k_eps: f64,
    /// Truncation radius actually used.
    pub truncation: f64,
    pub tau_star: f64,
    pub rho: f64,
    pub beta: f64,
    pub sweeps: usize,
    pub climb_steps: usize,
}

/// A solve together with its final path, reusable as a warm start.
#[derive(Debug, Clone)]
pub struct Solved {
    pub record: SolveRecord,
    pub path: MpPath,
    pub geometry: Geometry,
    pub tbar: TbarEstimate,
}

/// Full pipeline: ground state, `T̄`, geometry, deformation, verdicts.
pub fn solve(dom: DiscreteDomain, p: &ModelParams, opts: &SolveOptions) -> Result<Solved> {
    let gs = solve_ground_state(dom, p.r)?;
    solve_with(&gs, p, opts, None)
}

/// [`solve`] with a precomputed ground state and an optional warm path.
///
/// A warm path is used only if it lives on the same grid and its endpoint
/// is still admissible for the current truncation radius; otherwise the
/// straight path to the fresh `e_T` is used.
pub fn solve_with(
    gs: &GroundState,
    p: &ModelParams,
    opts: &SolveOptions,
    warm: Option<&MpPath>,
) -> Result<Solved> {
    p.validate()?;
    let dom = gs.u_frak.domain();
    let tbar = compute_tbar(gs, p)?;
    let t = opts.truncation.unwrap_or(tbar.t_bar);
    let pt = p.with_truncation(t);
    pt.validate()?;
    let geometry = geometry_probe(dom, &pt)?;
    let start = match warm {
        Some(w) if warm_admissible(w, dom, &pt)? => w.clone(),
        _ => MpPath::straight(&geometry.endpoint, opts.path_nodes)?,
    };
    let out = mp_deform(start, &pt, &opts.deform)?;
    let tau_star = tau_star(gs.m_frak, tbar.t_bar, p)?;
    let ctx = VerifyContext {
        beta: geometry.beta,
        t_bar: t,
        tau_star,
        tol: opts.deform.tol,
        seed: opts.seed,
    };
    let bounds = verify_solution(&out.u, &out.phi, out.j_value, &pt, &ctx);
    let record = SolveRecord {
        u: out.u,
        phi: out.phi,
        n: dom.n(),
        converged: out.converged,
        j_value: out.j_value,
        grad_norm: out.grad_norm,
        u_norm_sq: out.u_norm_sq,
        bounds,
        params: pt,
        tol: opts.deform.tol,
        path_nodes: out.path.len(),
        m_frak: gs.m_frak,
        t_bar: tbar.t_bar,
        k_eps: tbar.k_eps,
        truncation: t,
        tau_star,
        rho: geometry.rho,
        beta: geometry.beta,
        sweeps: out.sweeps,
        climb_steps: out.climb_steps,
    };
    Ok(Solved {
        record,
        path: out.path,
        geometry,
        tbar,
    })
}

fn warm_admissible(path: &MpPath, dom: DiscreteDomain, p: &ModelParams) -> Result<bool> {
    if path.len() < 3 || path.nodes[0].domain() != dom {
        return Ok(false);
    }
    let e = path.endpoint();
    if h1_norm(e) <= 2.0 * p.truncation {
        return Ok(false);
    }
    match evaluate(e, p, false, None) {
        Ok(ev) => Ok(ev.value < 0.0),
        Err(QspError::Overflow { .. }) => Ok(false),
        Err(err) => Err(err),
    }
}
