use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qsp_cli::config::parse_config;
use qsp_cli::{commands, CliError};

#[derive(Parser)]
#[command(name = "qsp", version, about = "Quasilinear Schrödinger–Poisson solver on the unit square")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

/// Options shared by every subcommand.
#[derive(Args, Default)]
struct Common {
    /// Flat `key = value` configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Seed of the random test fields used by the verdicts.
    #[arg(long)]
    seed: Option<u64>,
    /// Skip SVG output.
    #[arg(long)]
    no_plots: bool,
    /// Skip field dumps.
    #[arg(long)]
    no_dumps: bool,
}

/// Model and solver flags.
#[derive(Args, Default)]
struct Model {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    alpha0: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    /// Truncation radius, or `auto` for the computed value.
    #[arg(long = "T")]
    truncation: Option<String>,
    #[arg(long)]
    path_nodes: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Ground state of the Lane-Emden problem and its level.
    GroundState {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        r: Option<f64>,
    },
    /// Solve the quasilinear Poisson equation for a stored u.
    Poisson {
        #[command(flatten)]
        common: Common,
        /// Field dump of u.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Mountain-pass solution at one eps.
    Solve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: Model,
    },
    /// Continuation towards eps = 0 against the limit solution.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: Model,
        #[arg(long)]
        eps_start: Option<f64>,
        #[arg(long)]
        eps_factor: Option<f64>,
        #[arg(long)]
        eps_count: Option<usize>,
    },
    /// Check a stored pair (u, phi).
    Verify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: Model,
        #[arg(long)]
        u: PathBuf,
        #[arg(long)]
        phi: PathBuf,
    },
}

type Overrides = Vec<(&'static str, String)>;

fn push<T: ToString>(o: &mut Overrides, key: &'static str, v: Option<T>) {
    if let Some(v) = v {
        o.push((key, v.to_string()));
    }
}

impl Common {
    fn overrides(&self, o: &mut Overrides) {
        push(o, "out_dir", self.out_dir.as_ref().map(|p| p.display()));
        push(o, "seed", self.seed);
        if self.no_plots {
            o.push(("plots", "false".into()));
        }
        if self.no_dumps {
            o.push(("dumps", "false".into()));
        }
    }
}

impl Model {
    fn overrides(&self, o: &mut Overrides, tol_key: &'static str) {
        push(o, "n", self.n);
        push(o, "eps", self.eps);
        push(o, "alpha0", self.alpha0);
        push(o, "theta", self.theta);
        push(o, "r", self.r);
        push(o, "tau", self.tau);
        push(o, "T", self.truncation.clone());
        push(o, "path_nodes", self.path_nodes);
        push(o, tol_key, self.tol);
    }
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    let mut o = Overrides::new();
    match cli.cmd {
        Cmd::GroundState { common, n, r } => {
            common.overrides(&mut o);
            push(&mut o, "n", n);
            push(&mut o, "r", r);
            commands::ground_state(&parse_config(common.config.as_deref(), &o)?)
        }
        Cmd::Poisson { common, input, eps, tol } => {
            common.overrides(&mut o);
            push(&mut o, "eps", eps);
            push(&mut o, "tol", tol);
            commands::poisson(&parse_config(common.config.as_deref(), &o)?, &input)
        }
        Cmd::Solve { common, model } => {
            common.overrides(&mut o);
            model.overrides(&mut o, "tol");
            commands::solve(&parse_config(common.config.as_deref(), &o)?)
        }
        Cmd::Sweep { common, model, eps_start, eps_factor, eps_count } => {
            common.overrides(&mut o);
            model.overrides(&mut o, "sweep_tol");
            push(&mut o, "eps_start", eps_start);
            push(&mut o, "eps_factor", eps_factor);
            push(&mut o, "eps_count", eps_count);
            commands::sweep(&parse_config(common.config.as_deref(), &o)?)
        }
        Cmd::Verify { common, model, u, phi } => {
            common.overrides(&mut o);
            model.overrides(&mut o, "tol");
            commands::verify(&parse_config(common.config.as_deref(), &o)?, &u, &phi)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("qsp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
