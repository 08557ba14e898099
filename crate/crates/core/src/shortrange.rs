//! Short-range designs for `ρ(t) = e^{−λ|t|}` mixed with white noise of
//! weight `1 − γ`, and efficiencies across the long- and short-range models.

use crate::design::{efficiency, BasisSet, Criterion, DesignDensity, Grid};
use crate::error::Result;
use crate::kernels::{exponential, LimitKernel};
use crate::kernels::AsymptoticKernel;
use crate::oneparam::{solve_one_param, FixedPointSolution, SolverOptions};

/// Criterion `[∫f²φ + 2γ∫f²Q(1/φ)φ] / (∫f²φ)²`, held here divided by `2γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShortRangeContext {
    lambda: f64,
    gamma: f64,
}

impl ShortRangeContext {
    pub fn new(lambda: f64, gamma: f64) -> Result<Self> {
        crate::design::check_shortrange(lambda, gamma)?;
        Ok(Self { lambda, gamma })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

impl AsymptoticKernel for ShortRangeContext {
    fn white_weight(&self) -> f64 {
        1.0 / (2.0 * self.gamma)
    }

    fn rate(&self, phi: f64) -> f64 {
        if phi <= 0.0 {
            0.0
        } else {
            exponential::q_unchecked(self.lambda, 1.0 / phi) * phi
        }
    }

    fn marginal(&self, phi: f64) -> f64 {
        if phi <= 0.0 {
            0.0
        } else {
            exponential::h_unchecked(self.lambda, 1.0 / phi)
        }
    }

    fn density_at_level(&self, level: f64) -> f64 {
        // H maps (0, ∞) onto (0, ∞), so every positive level is attained
        if level <= 0.0 {
            0.0
        } else {
            1.0 / exponential::h_inv_unchecked(self.lambda, level)
        }
    }
}

pub fn solve_shortrange(
    basis: BasisSet,
    ctx: &ShortRangeContext,
    grid: &Grid,
    opts: &SolverOptions,
) -> Result<FixedPointSolution> {
    solve_one_param(basis, ctx, grid, opts)
}

/// Long-range efficiency of `design`: the `α`-optimal criterion value over
/// the design's.
pub fn cross_efficiency_lr_of_sr(
    design: &DesignDensity,
    basis: BasisSet,
    kernel: &LimitKernel,
    opts: &SolverOptions,
) -> Result<f64> {
    let opt = solve_one_param(basis, kernel, design.grid(), opts)?;
    efficiency(design, &opt.density, basis, kernel, Criterion::Single)
}

/// Short-range efficiency of `design` under `ctx`.
pub fn cross_efficiency_sr_of_lr(
    design: &DesignDensity,
    basis: BasisSet,
    ctx: &ShortRangeContext,
    opts: &SolverOptions,
) -> Result<f64> {
    let opt = solve_shortrange(basis, ctx, design.grid(), opts)?;
    efficiency(design, &opt.density, basis, ctx, Criterion::Single)
}
