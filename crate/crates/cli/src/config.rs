//! Run configuration: a sectioned TOML file whose every key can be
//! overridden from the command line.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use lrd_design::design::{BasisSet, Criterion, Grid, DEFAULT_GRID_N};
use lrd_design::kernels::{CorrelationModel, SlowlyVarying};
use lrd_design::oneparam::SolverOptions;

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub design: DesignSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub family: Option<String>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub nu: Option<f64>,
    pub lambda: Option<f64>,
    pub gamma: Option<f64>,
    /// `L(t) = ln(e + t)^k` for the SVF family.
    pub svf_log_power: Option<f64>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSection {
    #[serde(rename = "T")]
    pub half_width: Option<f64>,
    pub basis: Option<String>,
    pub criterion: Option<String>,
    pub symmetric: Option<bool>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n: Option<usize>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub seed: Option<u64>,
    pub restarts: Option<usize>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub directory: Option<PathBuf>,
    pub format: Option<String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("in config {}", path.display()))
    }
}

fn pick<T: Clone>(flag: &Option<T>, file: &Option<T>) -> Option<T> {
    flag.clone().or_else(|| file.clone())
}

/// Command-line overrides, one per config key.
#[derive(Debug, Default, Clone, clap::Args)]
pub struct Overrides {
    /// Correlation family: cauchy, mittag-leffler, svf or exponential
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Weight of the correlated component; the rest is white noise
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub svf_log_power: Option<f64>,
    /// Half-width T of the design interval [-T, T]
    #[arg(long = "T", id = "half_width")]
    pub half_width: Option<f64>,
    /// location, through_origin or linear
    #[arg(long)]
    pub basis: Option<String>,
    /// d, single or slope
    #[arg(long)]
    pub criterion: Option<String>,
    /// Optimize over all densities, not only symmetric ones
    #[arg(long)]
    pub asymmetric: bool,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,
}

#[derive(Debug, Default, Clone, clap::Args)]
pub struct Globals {
    /// TOML configuration file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub grid_n: Option<usize>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

/// A fully validated run.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub model: CorrelationModel,
    pub gamma: f64,
    pub basis: BasisSet,
    pub criterion: Criterion,
    pub symmetric: bool,
    pub grid: Grid,
    pub solver: SolverOptions,
    /// Explicit iteration cap, also applied to the density optimizer.
    pub max_iter: Option<usize>,
    pub seed: u64,
    pub restarts: usize,
    pub out: PathBuf,
}

pub fn resolve(g: &Globals, o: &Overrides) -> Result<Resolved> {
    let file = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let m = &file.model;
    let family = pick(&o.family, &m.family).unwrap_or_else(|| "cauchy".into());
    let alpha = pick(&o.alpha, &m.alpha).unwrap_or(0.5);
    let model = match family.as_str() {
        "cauchy" => CorrelationModel::cauchy(alpha, pick(&o.beta, &m.beta).unwrap_or(1.0)),
        "mittag-leffler" | "mittag_leffler" => CorrelationModel::mittag_leffler(
            alpha,
            pick(&o.nu, &m.nu).unwrap_or(0.5),
            pick(&o.beta, &m.beta).unwrap_or(1.0),
        ),
        "svf" => {
            let svf = match pick(&o.svf_log_power, &m.svf_log_power) {
                Some(k) if k != 0.0 => SlowlyVarying::log_power(k),
                _ => SlowlyVarying::unit(),
            };
            CorrelationModel::svf(alpha, svf)
        }
        "exponential" => CorrelationModel::exponential(pick(&o.lambda, &m.lambda).unwrap_or(0.5)),
        other => bail!("model.family: unknown family {other:?} (expected cauchy, mittag-leffler, svf or exponential)"),
    }
    .context("model")?;
    let default_gamma = if model.is_long_range() { 1.0 } else { 0.5 };
    let gamma = pick(&o.gamma, &m.gamma).unwrap_or(default_gamma);
    if !(gamma >= 0.0 && gamma <= 1.0) {
        bail!("model.gamma: must lie in [0, 1], got {gamma}");
    }

    let d = &file.design;
    let half_width = pick(&o.half_width, &d.half_width).unwrap_or(1.0);
    let basis: BasisSet = pick(&o.basis, &d.basis)
        .unwrap_or_else(|| "through_origin".into())
        .parse()
        .context("design.basis")?;
    let criterion: Criterion = match pick(&o.criterion, &d.criterion) {
        Some(c) => c.parse().context("design.criterion")?,
        None if basis == BasisSet::Linear => Criterion::D,
        None => Criterion::Single,
    };
    criterion.check_basis(basis).context("design.criterion")?;
    let symmetric = if o.asymmetric { false } else { d.symmetric.unwrap_or(true) };

    let n = g.grid_n.or(file.grid.n).unwrap_or(DEFAULT_GRID_N);
    let grid = Grid::new(half_width, n).context("grid")?;

    let s = &file.solver;
    let defaults = SolverOptions::default();
    let solver = SolverOptions {
        tol: g.tol.or(s.tol).unwrap_or(defaults.tol),
        max_iter: o.max_iter.or(s.max_iter).unwrap_or(defaults.max_iter),
    };
    if !(solver.tol > 0.0) || solver.max_iter == 0 {
        bail!("solver: tol must be positive and max_iter at least 1");
    }
    if let Some(f) = &file.output.format {
        if f != "csv" {
            bail!("output.format: only csv is supported, got {f:?}");
        }
    }
    let out = g
        .out
        .clone()
        .or_else(|| file.output.directory.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(Resolved {
        model,
        gamma,
        basis,
        criterion,
        symmetric,
        grid,
        solver,
        max_iter: o.max_iter.or(s.max_iter),
        seed: g.seed.or(s.seed).unwrap_or(0),
        restarts: o.restarts.or(s.restarts).unwrap_or(0),
        out,
    })
}
