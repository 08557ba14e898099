mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Globals, Overrides};

/// Asymptotic optimal designs for regression with long-range dependent errors.
#[derive(Debug, Parser)]
#[command(name = "lrdesign", version)]
struct Cli {
    #[command(flatten)]
    globals: Globals,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimal design density for one model and basis
    Density {
        #[command(flatten)]
        model: Overrides,
    },
    /// Recompute a published table and diff it against the stored values
    Table {
        /// Table number, 1 to 5
        id: u8,
    },
    /// Compare exact finite-N covariances with the asymptotic prediction
    Verify {
        #[command(flatten)]
        model: Overrides,
        /// Comma-separated, strictly increasing sample sizes
        #[arg(long, value_delimiter = ',', default_values_t = [200usize, 800, 3200])]
        n: Vec<usize>,
        /// Design density CSV (uniform when omitted)
        #[arg(long)]
        design: Option<PathBuf>,
        /// Largest N for the dense covariance computation
        #[arg(long, default_value_t = lrd_design::verify::DEFAULT_CAP)]
        cap: usize,
    },
    /// Mittag-Leffler function E_{nu,beta}(-t)
    Mlf {
        #[arg(long)]
        nu: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        t: f64,
    },
    /// Correlation function of a model at lag t
    Rho {
        #[command(flatten)]
        model: Overrides,
        #[arg(long)]
        t: f64,
    },
    /// Maximin-efficiency design over a set of decay exponents
    Maximin {
        #[command(flatten)]
        model: Overrides,
        /// Exponents as start:stop:step or a comma-separated list
        #[arg(long, default_value = "0.1:0.9:0.1")]
        alphas: String,
    },
    /// Efficiency of a design relative to the optimum or a reference design
    Efficiency {
        #[command(flatten)]
        model: Overrides,
        /// Design density CSV
        #[arg(long)]
        design: PathBuf,
        /// Reference density CSV (the computed optimum when omitted)
        #[arg(long)]
        reference: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = &cli.globals;
    let result = match &cli.command {
        Command::Density { model } => commands::density(g, model),
        Command::Table { id } => commands::table(g, *id),
        Command::Verify { model, n, design, cap } => commands::verify(g, model, n, design.as_deref(), *cap),
        Command::Mlf { nu, beta, t } => commands::mlf(*nu, *beta, *t),
        Command::Rho { model, t } => commands::rho(g, model, *t),
        Command::Maximin { model, alphas } => commands::maximin(g, model, alphas),
        Command::Efficiency { model, design, reference } => {
            commands::efficiency(g, model, design, reference.as_deref())
        }
    };
    match result {
        Ok(status) => ExitCode::from(status as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::EXIT_ERROR as u8)
        }
    }
}
