//! Command-line front end: reproducible scenario runs over particle
//! measures. See `--help` for the subcommands.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ScenarioConfig, SolverChoice};
use run::EXIT_CONFIG;

#[derive(Parser)]
#[command(
    name = "dvflow",
    version,
    about = "Discounted value functions and optimality diagnostics over particle measures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOverrides {
    /// Scenario configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the kinetic exponent p.
    #[arg(long)]
    p: Option<f64>,
    /// Override the discount rate.
    #[arg(long)]
    delta: Option<f64>,
    /// Override the truncation horizon.
    #[arg(long)]
    horizon: Option<f64>,
    /// Override the number of grid steps.
    #[arg(long)]
    steps: Option<usize>,
    /// Override the optimizer gradient tolerance.
    #[arg(long)]
    grad_tol: Option<f64>,
    /// Override the optimizer iteration budget.
    #[arg(long)]
    max_iters: Option<usize>,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

impl CommonOverrides {
    fn load(&self) -> Result<ScenarioConfig, String> {
        let mut cfg = ScenarioConfig::from_file(&self.config)?;
        if let Some(p) = self.p {
            cfg.problem.p = p;
        }
        if let Some(d) = self.delta {
            cfg.problem.delta = d;
        }
        if let Some(h) = self.horizon {
            cfg.problem.horizon = Some(h);
        }
        if let Some(m) = self.steps {
            cfg.problem.steps = Some(m);
        }
        if let Some(t) = self.grad_tol {
            cfg.problem.grad_tol = Some(t);
        }
        if let Some(n) = self.max_iters {
            cfg.problem.max_iters = Some(n);
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(dir) = &self.output_dir {
            cfg.output_dir = Some(dir.clone());
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Minimize the discounted action from a single starting point.
    SolveClassical {
        #[command(flatten)]
        common: CommonOverrides,
        /// Starting point, comma-separated (overrides the config).
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        point: Option<Vec<f64>>,
    },
    /// Minimize the generalized value over a particle measure.
    SolveMeasure {
        #[command(flatten)]
        common: CommonOverrides,
        /// decoupled | direct | both (overrides the config).
        #[arg(long)]
        solver_mode: Option<SolverChoice>,
    },
    /// Re-derive every applicable optimality check from a value report.
    Verify {
        #[command(flatten)]
        common: CommonOverrides,
        /// A value report produced by solve-measure.
        #[arg(long)]
        report: PathBuf,
    },
    /// Run the closed-form golden scenarios and print a pass/fail table.
    Examples,
    /// Exact p-Wasserstein distance between two measure files.
    Wp {
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        nu: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        /// Write the optimal plan as CSV.
        #[arg(long)]
        plan: Option<PathBuf>,
    },
}

fn dispatch(cli: Cli) -> Result<i32, String> {
    match cli.command {
        Command::SolveClassical { common, point } => {
            let mut cfg = common.load()?;
            if let Some(pt) = point {
                cfg.point = Some(pt);
            }
            run::run_classical(&cfg)
        }
        Command::SolveMeasure {
            common,
            solver_mode,
        } => {
            let mut cfg = common.load()?;
            if let Some(mode) = solver_mode {
                cfg.solver_mode = mode;
            }
            run::run_measure(&cfg)
        }
        Command::Verify { common, report } => {
            let cfg = common.load()?;
            run::run_verify(&cfg, &report)
        }
        Command::Examples => run::run_examples(),
        Command::Wp { mu, nu, p, plan } => run::run_wp(&mu, &nu, p, plan.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(EXIT_CONFIG as u8)
        }
    }
}
