//! `aggdiff`: run scenarios and sweeps, print model constants, evaluate
//! energies of a stored field, and run the acceptance suite.
//!
//! Exit codes: 0 ok, 1 solver error, 2 config or parse error, 3 acceptance
//! failure.

use std::path::PathBuf;
use std::process::ExitCode;

use aggdiff::harness::{self, verify};
use aggdiff::io::read_field_csv;
use aggdiff::metrics::{energy_g_eps, energy_g_eta_eps, energy_j_eps};
use aggdiff::pressure::beta_moment;
use aggdiff::{BoundaryKind, DoubleWell, Error, InteractionKernel, PressureLaw};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Parser)]
#[command(name = "aggdiff", version, about = "Multiscale aggregation-diffusion laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file and write its artifacts.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run every child of a scenario's [sweep] section.
    Sweep {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Concurrent children (default: AGGDIFF_WORKERS or the core count).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Print θ, γ, β and the double-well shift as JSON.
    Constants(Model),
    /// Evaluate an energy functional on a field CSV (x_center, rho, ...).
    Energy {
        field: PathBuf,
        #[command(flatten)]
        model: Model,
        #[arg(long, value_enum, default_value_t = Functional::GEps)]
        functional: Functional,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        /// Boundary weight for g-eta-eps.
        #[arg(long, default_value_t = 0.0)]
        eta_w: f64,
    },
    /// Run the acceptance suite: `all`, a suite name, or a criterion number.
    Verify {
        #[arg(default_value = "all")]
        suite: String,
    },
}

#[derive(Args)]
struct Model {
    #[arg(long, value_enum, default_value_t = Law::Power)]
    law: Law,
    #[arg(long, default_value_t = 3.0)]
    m: f64,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Law {
    Power,
    HardSphere,
    Reciprocal,
    Log,
}

#[derive(Clone, Copy, ValueEnum)]
enum Functional {
    JEps,
    GEps,
    GEtaEps,
}

impl Model {
    fn law(&self) -> PressureLaw {
        match self.law {
            Law::Power => PressureLaw::PowerLaw { m: self.m },
            Law::HardSphere => PressureLaw::HardSphere,
            Law::Reciprocal => PressureLaw::SingularReciprocal { alpha: self.alpha },
            Law::Log => PressureLaw::SingularLog { alpha: self.alpha },
        }
    }

    fn double_well(&self) -> Result<DoubleWell, Error> {
        DoubleWell::new(self.law(), self.sigma)
    }

    fn kernel(&self) -> Result<InteractionKernel, Error> {
        InteractionKernel::free(self.sigma, self.eta)
    }
}

enum Failure {
    Error(Error),
    Acceptance(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn read(path: &PathBuf) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("JSON values serialize"));
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { config, out } => {
            let s = harness::parse_config(&read(&config)?)?;
            if s.sweep.is_some() {
                return Err(Error::Config(format!("{} has a [sweep] section; use `aggdiff sweep`", config.display())).into());
            }
            let rep = harness::run_scenario(&s, &out)?;
            println!("{}", rep.dir.join("summary.json").display());
        }
        Command::Sweep { config, out, workers } => {
            let s = harness::parse_config(&read(&config)?)?;
            let rep = harness::run_sweep(&s, &out, workers.unwrap_or_else(harness::worker_budget))?;
            println!("{}", rep.table.display());
            if let Some(e) = rep.errors.into_iter().next() {
                return Err(e.into());
            }
        }
        Command::Constants(model) => {
            let dw = model.double_well()?;
            let gamma = dw.surface_tension()?;
            let beta = beta_moment(&model.kernel()?)?;
            print_json(&json!({
                "law": dw.law,
                "sigma": model.sigma,
                "eta": model.eta,
                "theta": dw.theta,
                "gamma": gamma,
                "beta": beta,
                "a_shift": dw.a_shift,
            }));
        }
        Command::Energy { field, model, functional, eps, eta_w } => {
            let f = read_field_csv(&read(&field)?, BoundaryKind::NoFlux)?;
            let dw = model.double_well()?;
            let k = model.kernel()?;
            let rep = match functional {
                Functional::JEps => energy_j_eps(&f, &dw, &k, eps)?,
                Functional::GEps => energy_g_eps(&f, &dw, &k, eps)?,
                Functional::GEtaEps => energy_g_eta_eps(&f, &dw, &k, eps, eta_w)?,
            };
            print_json(&serde_json::to_value(&rep).expect("report serializes"));
        }
        Command::Verify { suite } => {
            let results = verify::verify(&suite, |r| println!("{}", r.line()))?;
            let failed = results.iter().filter(|r| !r.pass).count();
            println!("{} of {} criteria passed", results.len() - failed, results.len());
            if failed > 0 {
                return Err(Failure::Acceptance(failed));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Acceptance(n)) => {
            eprintln!("{n} acceptance criteria failed");
            ExitCode::from(3)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            match e.root() {
                Error::Parse { .. } | Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
