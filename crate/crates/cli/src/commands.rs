//! The five subcommands. Each writes its artifacts and returns their paths;
//! a run that finishes without a converged or verified result still writes
//! its files and then reports [`CliError::Solver`].

use std::path::{Path, PathBuf};

use qsp::functional::evaluate;
use qsp::grid::DiscreteDomain;
use qsp::ground_state::solve_ground_state;
use qsp::mountain_pass::{
    compute_tbar, geometry_probe, solve_with, verify_solution, DeformOptions, SolveOptions,
    VerifyContext,
};
use qsp::nonlinearity::tau_star;
use qsp::poisson::solve_phi_with;
use qsp::sweep::{geometric_schedule, run_sweep, solve_limit_problem, sweep_verdicts, SweepRecord};
use serde_json::json;

use crate::config::RunConfig;
use crate::output::{
    artifact, config_line, jsonl, num, read_field_file, stem, write_csv, write_field_file,
    write_text,
};
use crate::plot::{heatmap, loglog};
use crate::CliError;

pub const SWEEP_HEADER: [&str; 7] = ["eps", "u_dist", "phi_dist", "eps_w14", "u_norm", "J_value", "gate"];
pub const GROUND_STATE_HEADER: [&str; 4] = ["m_frak", "norm_sq", "residual", "iterations"];

fn solve_options(cfg: &RunConfig, tol: f64) -> SolveOptions {
    SolveOptions {
        path_nodes: cfg.path_nodes,
        truncation: cfg.truncation,
        deform: DeformOptions {
            tol,
            ..DeformOptions::default()
        },
        seed: cfg.seed,
    }
}

pub fn ground_state(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let dom = DiscreteDomain::new(cfg.n)?;
    let gs = solve_ground_state(dom, cfg.params.r)?;
    let st = stem("ground-state", cfg, cfg.params.eps);
    let mut files = vec![];

    let csv = artifact(cfg, &st, "csv");
    write_csv(
        &csv,
        &GROUND_STATE_HEADER,
        &[vec![
            num(gs.m_frak),
            num(gs.norm_sq()),
            num(gs.residual),
            gs.iterations.to_string(),
        ]],
    )?;
    files.push(csv);

    let summary = artifact(cfg, &st, "summary.jsonl");
    write_text(&summary, &jsonl(&[config_line(cfg), json!({ "ground_state": gs })]))?;
    files.push(summary);

    if cfg.dumps {
        let f = artifact(cfg, &st, "u_frak.field");
        write_field_file(&f, &gs.u_frak)?;
        files.push(f);
    }
    if cfg.plots {
        let f = artifact(cfg, &st, "u_frak.svg");
        write_text(&f, &heatmap(&gs.u_frak, "ground state", &cfg.echo_text()))?;
        files.push(f);
    }
    Ok(files)
}

pub fn poisson(cfg: &RunConfig, input: &Path) -> Result<Vec<PathBuf>, CliError> {
    let u = read_field_file(input)?;
    let sol = solve_phi_with(&u, cfg.params.eps, None, cfg.tol)?;
    let mut cfg = cfg.clone();
    cfg.n = u.domain().n();
    let st = stem("poisson", &cfg, cfg.params.eps);
    let mut files = vec![];
    let summary = artifact(&cfg, &st, "summary.jsonl");
    write_text(
        &summary,
        &jsonl(&[
            config_line(&cfg),
            json!({ "input": input.display().to_string(), "poisson": sol }),
        ]),
    )?;
    files.push(summary);
    if cfg.dumps {
        let f = artifact(&cfg, &st, "phi.field");
        write_field_file(&f, &sol.phi)?;
        files.push(f);
    }
    Ok(files)
}

pub fn solve(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let dom = DiscreteDomain::new(cfg.n)?;
    let gs = solve_ground_state(dom, cfg.params.r)?;
    let solved = solve_with(&gs, &cfg.params, &solve_options(cfg, cfg.tol), None)?;
    let rec = &solved.record;
    let st = stem("solve", cfg, cfg.params.eps);
    let mut files = vec![];

    let summary = artifact(cfg, &st, "summary.jsonl");
    write_text(
        &summary,
        &jsonl(&[
            config_line(cfg),
            json!({ "solve": rec, "all_pass": rec.bounds.all_pass() }),
            json!({ "tbar": solved.tbar, "geometry": solved.geometry }),
        ]),
    )?;
    files.push(summary);
    if cfg.dumps {
        for (name, f) in [("u.field", &rec.u), ("phi.field", &rec.phi)] {
            let p = artifact(cfg, &st, name);
            write_field_file(&p, f)?;
            files.push(p);
        }
    }
    if cfg.plots {
        let p = artifact(cfg, &st, "u.svg");
        write_text(&p, &heatmap(&rec.u, "mountain-pass solution u", &cfg.echo_text()))?;
        files.push(p);
    }
    if !rec.converged {
        return Err(CliError::Solver(format!(
            "mountain pass stopped at grad_norm {:e} (tol {:e})",
            rec.grad_norm, cfg.tol
        )));
    }
    Ok(files)
}

pub fn sweep(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let dom = DiscreteDomain::new(cfg.n)?;
    let schedule = geometric_schedule(cfg.eps_start, cfg.eps_factor, cfg.eps_count)?;
    let gs = solve_ground_state(dom, cfg.params.r)?;
    let opts = solve_options(cfg, cfg.sweep_tol);
    let limit = solve_limit_problem(&gs, &cfg.params, &opts)?;
    let rows = run_sweep(&gs, &schedule, &cfg.params, &opts, &limit)?;
    let verdicts = sweep_verdicts(&rows);
    let st = stem("sweep", cfg, cfg.eps_start);
    let mut files = vec![];

    let csv = artifact(cfg, &st, "csv");
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                num(r.eps),
                num(r.u_dist),
                num(r.phi_dist),
                num(r.eps_w14),
                num(r.u_norm),
                num(r.j_value),
                r.gate.to_string(),
            ]
        })
        .collect();
    write_csv(&csv, &SWEEP_HEADER, &table)?;
    files.push(csv);

    let summary = artifact(cfg, &st, "summary.jsonl");
    let mut lines = vec![
        config_line(cfg),
        json!({ "limit": limit.record, "all_pass": limit.record.bounds.all_pass() }),
    ];
    lines.extend(rows.iter().map(|r| json!({ "row": r })));
    lines.push(json!({ "verdicts": verdicts, "pass": verdicts.pass() }));
    write_text(&summary, &jsonl(&lines))?;
    files.push(summary);

    if cfg.plots {
        let eps: Vec<f64> = rows.iter().map(|r| r.eps).collect();
        type Column = (&'static str, fn(&SweepRecord) -> f64);
        let columns: [Column; 5] = [
            ("u_dist", |r| r.u_dist),
            ("phi_dist", |r| r.phi_dist),
            ("eps_w14", |r| r.eps_w14),
            ("u_norm", |r| r.u_norm),
            ("J_value", |r| r.j_value),
        ];
        for (name, get) in columns {
            let ys: Vec<f64> = rows.iter().map(get).collect();
            let p = artifact(cfg, &st, &format!("{name}.svg"));
            write_text(&p, &loglog(&eps, &ys, "eps", name, &cfg.echo_text()))?;
            files.push(p);
        }
    }
    if !limit.record.converged {
        return Err(CliError::Solver("limit problem did not converge".into()));
    }
    if let Some(bad) = rows.iter().find(|r| !r.converged) {
        return Err(CliError::Solver(format!(
            "eps = {} failed: {}",
            bad.eps,
            bad.failure.as_deref().unwrap_or("not converged")
        )));
    }
    Ok(files)
}

/// Checks a stored pair `(u, φ)` against the verdicts of a solve.
pub fn verify(cfg: &RunConfig, u_path: &Path, phi_path: &Path) -> Result<Vec<PathBuf>, CliError> {
    let u = read_field_file(u_path)?;
    let phi = read_field_file(phi_path)?;
    qsp::grid::check_same_domain(&u, &phi)?;
    let mut cfg = cfg.clone();
    cfg.n = u.domain().n();
    let gs = solve_ground_state(u.domain(), cfg.params.r)?;
    let tbar = compute_tbar(&gs, &cfg.params)?;
    let t = cfg.truncation.unwrap_or(tbar.t_bar);
    let pt = cfg.params.with_truncation(t);
    let geometry = geometry_probe(u.domain(), &pt)?;
    let j_value = evaluate(&u, &pt, false, Some(&phi))?.value;
    let ctx = VerifyContext {
        beta: geometry.beta,
        t_bar: t,
        tau_star: tau_star(gs.m_frak, tbar.t_bar, &cfg.params)?,
        tol: cfg.tol,
        seed: cfg.seed,
    };
    let verdicts = verify_solution(&u, &phi, j_value, &pt, &ctx);
    let st = stem("verify", &cfg, cfg.params.eps);
    let summary = artifact(&cfg, &st, "summary.jsonl");
    write_text(
        &summary,
        &jsonl(&[
            config_line(&cfg),
            json!({
                "u": u_path.display().to_string(),
                "phi": phi_path.display().to_string(),
                "J_value": j_value,
                "verdicts": verdicts,
                "all_pass": verdicts.all_pass(),
            }),
        ]),
    )?;
    if !verdicts.all_pass() {
        return Err(CliError::Solver(format!(
            "verification failed, see {}",
            summary.display()
        )));
    }
    Ok(vec![summary])
}
