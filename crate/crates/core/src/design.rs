//! Grid densities on `[−T, T]`, regression bases, the moment matrices
//! `W`, `K` and `Ψ = W⁻¹ K W⁻¹`, scalar criteria and efficiencies.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{domain, DesignError, Result};
use crate::kernels::{exponential, AsymptoticKernel, LimitKernel};

pub const DEFAULT_GRID_N: usize = 2001;

/// Condition number above which `W` is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Equally spaced odd-sized grid on `[−T, T]` with composite Simpson weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    half_width: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(domain(format!("half-width T must be positive, got {half_width}")));
        }
        if n < 3 || n % 2 == 0 {
            return Err(domain(format!("grid size must be odd and at least 3, got {n}")));
        }
        let m = (n - 1) as f64;
        // symmetric by construction: node k and node n−1−k are exact negatives
        let nodes: Vec<f64> = (0..n)
            .map(|k| half_width * (2.0 * k as f64 - m) / m)
            .collect();
        let h = 2.0 * half_width / m;
        let weights = (0..n)
            .map(|k| {
                let s = if k == 0 || k == n - 1 {
                    1.0
                } else if k % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                s * h / 3.0
            })
            .collect();
        Ok(Self {
            half_width,
            nodes,
            weights,
        })
    }

    pub fn with_default_size(half_width: f64) -> Result<Self> {
        Self::new(half_width, DEFAULT_GRID_N)
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.n() - 1) as f64
    }

    /// Composite Simpson integral of node values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n());
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// Grid with `2n − 1` nodes on the same interval.
    pub fn refined(&self) -> Self {
        Self::new(self.half_width, 2 * self.n() - 1).expect("refinement of a valid grid")
    }

    /// Index of the node at `−t_k`.
    pub fn mirror(&self, k: usize) -> usize {
        self.n() - 1 - k
    }
}

/// A probability density on a [`Grid`], stored by node values.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignDensity {
    grid: Grid,
    values: Vec<f64>,
}

impl DesignDensity {
    /// Normalizes `values` to unit Simpson integral.
    pub fn new(grid: Grid, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(domain(format!(
                "density has {} values for a grid of {} nodes",
                values.len(),
                grid.n()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(domain(format!("density values must be finite and nonnegative, found {v}")));
        }
        let total = grid.integrate(&values);
        if !(total > 0.0) {
            return Err(DesignError::Degenerate(total));
        }
        for v in &mut values {
            *v /= total;
        }
        Ok(Self { grid, values })
    }

    pub fn uniform(grid: Grid) -> Self {
        let v = 1.0 / (2.0 * grid.half_width());
        let values = vec![v; grid.n()];
        Self { grid, values }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&t| f(t)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn integral(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    /// Quadrature masses `w_k φ_k`; they sum to the integral.
    pub fn masses(&self) -> Vec<f64> {
        self.grid.weights().iter().zip(&self.values).map(|(w, v)| w * v).collect()
    }

    /// Piecewise linear interpolation, 0 outside `[−T, T]`.
    pub fn eval(&self, t: f64) -> f64 {
        let tt = self.grid.half_width();
        if !(t >= -tt && t <= tt) {
            return 0.0;
        }
        let x = (t + tt) / self.grid.spacing();
        let k = (x.floor() as usize).min(self.grid.n() - 2);
        let frac = x - k as f64;
        self.values[k] * (1.0 - frac) + self.values[k + 1] * frac
    }

    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_asymmetry(&self) -> f64 {
        (0..self.grid.n())
            .map(|k| (self.values[k] - self.values[self.grid.mirror(k)]).abs())
            .fold(0.0, f64::max)
    }

    /// Writes `t,phi` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "phi"])?;
        for (t, v) in self.grid.nodes().iter().zip(&self.values) {
            w.write_record([format!("{t:.16e}"), format!("{v:.16e}")])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// Reads a `t,phi` file. The abscissae must be an odd symmetric equally
    /// spaced grid; values that already integrate to 1 within 1e−12 are kept
    /// bit for bit, anything else is renormalized.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "phi" {
            return Err(DesignError::Format(format!("expected header t,phi, found {:?}", headers)));
        }
        let mut ts = Vec::new();
        let mut vs = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| DesignError::Format(format!("row {}: {e}: {s:?}", line + 2)))
            };
            ts.push(parse(&rec[0])?);
            vs.push(parse(&rec[1])?);
        }
        if ts.len() < 3 {
            return Err(DesignError::Format(format!("need at least 3 rows, found {}", ts.len())));
        }
        let half_width = ts[ts.len() - 1];
        let grid = Grid::new(half_width, ts.len()).map_err(|e| DesignError::Format(e.to_string()))?;
        let tol = 1e-12 * half_width;
        if let Some((k, t)) = ts.iter().enumerate().find(|(k, t)| (**t - grid.nodes()[*k]).abs() > tol) {
            return Err(DesignError::Format(format!(
                "row {}: t = {t} is off the symmetric equally spaced grid (expected {})",
                k + 2,
                grid.nodes()[k]
            )));
        }
        let total = grid.integrate(&vs);
        if (total - 1.0).abs() <= 1e-12 && vs.iter().all(|v| *v >= 0.0 && v.is_finite()) {
            return Ok(Self { grid, values: vs });
        }
        Self::new(grid, vs)
    }

    pub fn read_csv_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// The built-in regression bases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisSet {
    /// `{1}`
    Location,
    /// `{t}`
    ThroughOrigin,
    /// `{1, t}`
    Linear,
}

impl BasisSet {
    pub fn dim(&self) -> usize {
        match self {
            Self::Location | Self::ThroughOrigin => 1,
            Self::Linear => 2,
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        match self {
            Self::Location => vec![1.0],
            Self::ThroughOrigin => vec![t],
            Self::Linear => vec![1.0, t],
        }
    }

    pub fn parity(&self) -> Vec<Parity> {
        match self {
            Self::Location => vec![Parity::Even],
            Self::ThroughOrigin => vec![Parity::Odd],
            Self::Linear => vec![Parity::Even, Parity::Odd],
        }
    }

    /// `n × p` matrix of basis values at the grid nodes.
    pub fn design_matrix(&self, grid: &Grid) -> DMatrix<f64> {
        let p = self.dim();
        DMatrix::from_fn(grid.n(), p, |k, i| self.eval(grid.nodes()[k])[i])
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Location => "location",
            Self::ThroughOrigin => "through_origin",
            Self::Linear => "linear",
        }
    }
}

impl fmt::Display for BasisSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BasisSet {
    type Err = DesignError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "location" => Ok(Self::Location),
            "through_origin" => Ok(Self::ThroughOrigin),
            "linear" => Ok(Self::Linear),
            other => Err(domain(format!(
                "unknown basis {other:?} (expected location, through_origin or linear)"
            ))),
        }
    }
}

/// `Σ_k m_k x_k x_kᵀ s_k` for rows `x_k` of `features`.
pub(crate) fn weighted_gram(features: &DMatrix<f64>, weights: impl Iterator<Item = f64>) -> DMatrix<f64> {
    let p = features.ncols();
    let mut out = DMatrix::zeros(p, p);
    for (k, m) in weights.enumerate() {
        if m == 0.0 {
            continue;
        }
        for i in 0..p {
            let fi = features[(k, i)] * m;
            for j in 0..=i {
                out[(i, j)] += fi * features[(k, j)];
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            out[(j, i)] = out[(i, j)];
        }
    }
    out
}

/// `W(φ) = ∫ f fᵀ φ`.
pub fn w_matrix(basis: BasisSet, phi: &DesignDensity) -> DMatrix<f64> {
    let x = basis.design_matrix(phi.grid());
    weighted_gram(&x, phi.masses().into_iter())
}

/// `K(φ) = κ W + ∫ f fᵀ Q(1/φ) φ` for a general kernel.
pub fn kernel_matrix(basis: BasisSet, phi: &DesignDensity, kernel: &dyn AsymptoticKernel) -> DMatrix<f64> {
    let x = basis.design_matrix(phi.grid());
    let kappa = kernel.white_weight();
    let g = phi.grid();
    let weights = g
        .weights()
        .iter()
        .zip(phi.values())
        .map(|(w, &v)| w * (kappa * v + kernel.rate(v)));
    weighted_gram(&x, weights)
}

/// `R_α(φ) = (c/(1−α)) ∫ f fᵀ φ^{1+α}`, or `c ∫ f fᵀ φ²` for `α = 1`.
pub fn r_matrix_longrange(basis: BasisSet, phi: &DesignDensity, kernel: &LimitKernel) -> DMatrix<f64> {
    kernel_matrix(basis, phi, kernel)
}

/// `∫ f fᵀ φ + 2γ ∫ f fᵀ Q_λ(1/φ) φ` for the exponential correlation.
pub fn r_matrix_shortrange(basis: BasisSet, phi: &DesignDensity, lambda: f64, gamma: f64) -> Result<DMatrix<f64>> {
    check_shortrange(lambda, gamma)?;
    let x = basis.design_matrix(phi.grid());
    let weights = phi.grid().weights().iter().zip(phi.values()).map(|(w, &v)| {
        let q = if v > 0.0 {
            exponential::q_unchecked(lambda, 1.0 / v) * v
        } else {
            0.0
        };
        w * (v + 2.0 * gamma * q)
    });
    Ok(weighted_gram(&x, weights))
}

pub(crate) fn check_shortrange(lambda: f64, gamma: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(domain(format!("rate lambda must be positive, got {lambda}")));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(domain(format!("mixture weight gamma must lie in (0, 1], got {gamma}")));
    }
    Ok(())
}

/// Spectral condition number of a symmetric matrix.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let eig = m.clone().symmetric_eigen().eigenvalues;
    let max = eig.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    let min = eig.iter().fold(f64::INFINITY, |a, e| a.min(e.abs()));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// `W⁻¹ R W⁻¹` by Cholesky solves.
pub fn psi_matrix(w: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let condition = condition_number(w);
    if !(condition <= MAX_CONDITION) {
        return Err(DesignError::Singular { condition });
    }
    let chol = w.clone().cholesky().ok_or(DesignError::Singular { condition })?;
    let a = chol.solve(r);
    let psi = chol.solve(&a.transpose());
    Ok(symmetrize(psi))
}

pub(crate) fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentMatrices {
    pub w: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub psi: DMatrix<f64>,
}

pub fn moment_matrices(basis: BasisSet, phi: &DesignDensity, kernel: &dyn AsymptoticKernel) -> Result<MomentMatrices> {
    let w = w_matrix(basis, phi);
    let r = kernel_matrix(basis, phi, kernel);
    let psi = psi_matrix(&w, &r)?;
    Ok(MomentMatrices { w, r, psi })
}

/// Scalar design criteria, all to be minimized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    /// `det(Ψ)^{1/p}`
    D,
    /// `Ψ₁₁`
    Single,
    /// `Ψ₂₂` of the two-parameter linear model
    Slope,
}

impl Criterion {
    pub fn eval(&self, psi: &DMatrix<f64>) -> Result<f64> {
        let v = match self {
            Self::D => psi.determinant().powf(1.0 / psi.nrows() as f64),
            Self::Single => psi[(0, 0)],
            Self::Slope => {
                if psi.nrows() != 2 {
                    return Err(domain("the slope criterion needs the two-parameter linear basis"));
                }
                psi[(1, 1)]
            }
        };
        if !(v > 0.0) || !v.is_finite() {
            return Err(DesignError::Degenerate(v));
        }
        Ok(v)
    }

    /// `G = ∂Φ/∂Ψ` at `Ψ` with `Φ(Ψ) = value`.
    pub fn gradient_weight(&self, psi: &DMatrix<f64>, value: f64) -> Result<DMatrix<f64>> {
        let p = psi.nrows();
        Ok(match self {
            Self::D => {
                let inv = psi.clone().try_inverse().ok_or(DesignError::Singular {
                    condition: f64::INFINITY,
                })?;
                symmetrize(inv) * (value / p as f64)
            }
            Self::Single => {
                let mut g = DMatrix::zeros(p, p);
                g[(0, 0)] = 1.0;
                g
            }
            Self::Slope => {
                let mut g = DMatrix::zeros(p, p);
                g[(1, 1)] = 1.0;
                g
            }
        })
    }

    pub fn check_basis(&self, basis: BasisSet) -> Result<()> {
        if *self == Self::Slope && basis != BasisSet::Linear {
            return Err(domain(format!("the slope criterion needs the linear basis, got {basis}")));
        }
        Ok(())
    }
}

impl FromStr for Criterion {
    type Err = DesignError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "d" => Ok(Self::D),
            "single" => Ok(Self::Single),
            "slope" => Ok(Self::Slope),
            other => Err(domain(format!("unknown criterion {other:?} (expected d, single or slope)"))),
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::D => "d",
            Self::Single => "single",
            Self::Slope => "slope",
        })
    }
}

pub fn criterion_value(
    basis: BasisSet,
    phi: &DesignDensity,
    kernel: &dyn AsymptoticKernel,
    criterion: Criterion,
) -> Result<f64> {
    criterion.check_basis(basis)?;
    criterion.eval(&moment_matrices(basis, phi, kernel)?.psi)
}

/// `crit(p_opt) / crit(p)`.
pub fn efficiency(
    p: &DesignDensity,
    p_opt: &DesignDensity,
    basis: BasisSet,
    kernel: &dyn AsymptoticKernel,
    criterion: Criterion,
) -> Result<f64> {
    let num = criterion_value(basis, p_opt, kernel, criterion)?;
    let den = criterion_value(basis, p, kernel, criterion)?;
    Ok(num / den)
}

pub(crate) fn quad_form(x: &DMatrix<f64>, k: usize, m: &DMatrix<f64>) -> f64 {
    let row: DVector<f64> = x.row(k).transpose();
    row.dot(&(m * &row))
}
