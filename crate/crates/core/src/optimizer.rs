//! Numerical design optimization on the grid simplex: exponentiated-gradient
//! steps on the node masses `m_k = w_k φ_k` with Armijo backtracking, for a
//! single criterion and for the standardized maximin problem over a finite set
//! of decay exponents.

use std::cell::Cell;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::design::{
    efficiency, psi_matrix, quad_form, weighted_gram, BasisSet, Criterion, DesignDensity, Grid,
};
use crate::error::{domain, DesignError, Result};
use crate::kernels::{AsymptoticKernel, LimitKernel};
use crate::oneparam::{solve_one_param, SolverOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerOptions {
    pub max_iter: usize,
    /// Stationarity target: `max_k (ḡ − g_k)_+ / |Φ|`.
    pub tol: f64,
    /// Sufficient-decrease constant of the Armijo rule.
    pub armijo: f64,
    pub initial_step: f64,
    pub max_step: f64,
    /// Optimize over mirror pairs `{t, −t}` only.
    pub symmetric: bool,
    /// Extra runs from seeded random starts, reported but never used as output.
    pub restarts: usize,
    pub seed: u64,
    /// Iteration cap for each smoothing temperature of a maximin run.
    pub stage_iter: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            max_iter: 20_000,
            tol: 1e-6,
            armijo: 1e-4,
            initial_step: 1.0,
            max_step: 50.0,
            symmetric: true,
            restarts: 0,
            seed: 0,
            stage_iter: 1000,
        }
    }
}

impl OptimizerOptions {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !(self.armijo > 0.0 && self.armijo < 1.0) {
            return Err(domain("optimizer tolerances must be positive (armijo below 1)"));
        }
        if !(self.initial_step > 0.0) || !(self.max_step >= self.initial_step) {
            return Err(domain("optimizer step sizes must be positive with max_step >= initial_step"));
        }
        if self.max_iter == 0 || self.stage_iter == 0 {
            return Err(domain("max_iter and stage_iter must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    /// Criterion value, or the minimum efficiency for maximin runs.
    pub value: f64,
    pub violation: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartReport {
    pub index: usize,
    pub value: f64,
    pub violation: f64,
    pub distance_to_output: f64,
}

#[derive(Debug, Clone)]
pub struct OptimizedDesign {
    pub density: DesignDensity,
    pub value: f64,
    pub violation: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TraceRow>,
    pub restarts: Vec<RestartReport>,
}

/// Criterion `Φ(Ψ(m))` with its gradient in the raw node masses.
pub struct CriterionObjective<'a> {
    features: DMatrix<f64>,
    weights: Vec<f64>,
    kernel: &'a dyn AsymptoticKernel,
    criterion: Criterion,
}

impl<'a> CriterionObjective<'a> {
    pub fn new(basis: BasisSet, grid: &Grid, kernel: &'a dyn AsymptoticKernel, criterion: Criterion) -> Result<Self> {
        criterion.check_basis(basis)?;
        Ok(Self {
            features: basis.design_matrix(grid),
            weights: grid.weights().to_vec(),
            kernel,
            criterion,
        })
    }

    pub fn value(&self, masses: &[f64]) -> Result<f64> {
        let (_, k, w) = self.matrices(masses);
        self.criterion.eval(&psi_matrix(&w, &k)?)
    }

    fn matrices(&self, masses: &[f64]) -> (Vec<f64>, DMatrix<f64>, DMatrix<f64>) {
        let kappa = self.kernel.white_weight();
        let v: Vec<f64> = masses.iter().zip(&self.weights).map(|(m, w)| m / w).collect();
        let w = weighted_gram(&self.features, masses.iter().copied());
        let k = weighted_gram(
            &self.features,
            masses
                .iter()
                .zip(&self.weights)
                .zip(&v)
                .map(|((m, w), v)| kappa * m + w * self.kernel.rate(*v)),
        );
        (v, k, w)
    }

    /// `Φ` and `∂Φ/∂m_k = xᵀW⁻¹GW⁻¹x (κ + H(1/v_k)) − 2 xᵀW⁻¹GΨx`.
    pub fn value_and_gradient(&self, masses: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (v, k, w) = self.matrices(masses);
        let psi = psi_matrix(&w, &k)?;
        let val = self.criterion.eval(&psi)?;
        let g = self.criterion.gradient_weight(&psi, val)?;
        let chol = w.cholesky().ok_or(DesignError::Singular {
            condition: f64::INFINITY,
        })?;
        let a = chol.solve(&chol.solve(&g).transpose());
        let b = chol.solve(&(&g * &psi));
        let kappa = self.kernel.white_weight();
        let grad = (0..masses.len())
            .map(|i| {
                (kappa + self.kernel.marginal(v[i])) * quad_form(&self.features, i, &a)
                    - 2.0 * quad_form(&self.features, i, &b)
            })
            .collect();
        Ok((val, grad))
    }
}

/// Mass groups moved together: singletons, or mirror pairs with equal mass.
struct Groups {
    members: Vec<Vec<usize>>,
    n: usize,
}

impl Groups {
    fn new(grid: &Grid, symmetric: bool) -> Self {
        let n = grid.n();
        let members = if symmetric {
            (0..=n / 2)
                .map(|k| {
                    let m = grid.mirror(k);
                    if m == k {
                        vec![k]
                    } else {
                        vec![k, m]
                    }
                })
                .collect()
        } else {
            (0..n).map(|k| vec![k]).collect()
        };
        Self { members, n }
    }

    fn expand(&self, group_mass: &[f64]) -> Vec<f64> {
        let mut m = vec![0.0; self.n];
        for (g, idx) in group_mass.iter().zip(&self.members) {
            for &k in idx {
                m[k] = g / idx.len() as f64;
            }
        }
        m
    }

    fn collapse(&self, masses: &[f64]) -> Vec<f64> {
        self.members.iter().map(|idx| idx.iter().map(|&k| masses[k]).sum()).collect()
    }

    /// Gradient in group masses: the mean of the member gradients.
    fn gradient(&self, grad: &[f64]) -> Vec<f64> {
        self.members
            .iter()
            .map(|idx| idx.iter().map(|&k| grad[k]).sum::<f64>() / idx.len() as f64)
            .collect()
    }
}

/// `(ḡ − min_k g_k)_+ / |Φ|` over groups with the current masses.
fn violation(mass: &[f64], grad: &[f64], value: f64) -> f64 {
    let mean: f64 = mass.iter().zip(grad).map(|(m, g)| m * g).sum();
    let min = grad.iter().copied().fold(f64::INFINITY, f64::min);
    (mean - min).max(0.0) / value.abs().max(f64::MIN_POSITIVE)
}

struct Descent {
    mass: Vec<f64>,
    value: f64,
    violation: f64,
    iterations: usize,
    converged: bool,
}

/// Exponentiated-gradient descent on group masses.
///
/// `guard` may veto a step that passes the Armijo test; `record` sees every
/// accepted iterate.
fn descend(
    eval: &dyn Fn(&[f64]) -> Result<(f64, Vec<f64>)>,
    groups: &Groups,
    start: Vec<f64>,
    opts: &OptimizerOptions,
    guard: &mut dyn FnMut(&[f64]) -> bool,
    record: &mut dyn FnMut(usize, f64, f64, f64, &[f64]),
) -> Result<Descent> {
    let mut mass = start;
    let (mut value, g) = eval(&groups.expand(&mass))?;
    let mut grad = groups.gradient(&g);
    let mut eta = opts.initial_step;
    let mut viol = violation(&mass, &grad, value);
    record(0, value, viol, eta, &mass);
    for it in 1..=opts.max_iter {
        if viol <= opts.tol {
            return Ok(Descent {
                mass,
                value,
                violation: viol,
                iterations: it - 1,
                converged: true,
            });
        }
        let mean: f64 = mass.iter().zip(&grad).map(|(m, g)| m * g).sum();
        let d: Vec<f64> = grad.iter().map(|g| g - mean).collect();
        let scale = d.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if !(scale > 0.0) {
            break;
        }
        let decrease: f64 = mass.iter().zip(&d).map(|(m, x)| m * x * x).sum::<f64>() / scale;
        let mut accepted = None;
        while eta >= 1e-14 {
            let mut trial: Vec<f64> = mass.iter().zip(&d).map(|(m, x)| m * (-eta * x / scale).exp()).collect();
            let total: f64 = trial.iter().sum();
            trial.iter_mut().for_each(|m| *m /= total);
            if let Ok((tv, tg)) = eval(&groups.expand(&trial)) {
                if tv <= value - opts.armijo * eta * decrease && guard(&trial) {
                    accepted = Some((trial, tv, tg));
                    break;
                }
            }
            eta *= 0.5;
        }
        let Some((trial, tv, tg)) = accepted else {
            return Ok(Descent {
                mass,
                value,
                violation: viol,
                iterations: it,
                converged: false,
            });
        };
        mass = trial;
        value = tv;
        grad = groups.gradient(&tg);
        viol = violation(&mass, &grad, value);
        record(it, value, viol, eta, &mass);
        eta = (eta * 2.0).min(opts.max_step);
    }
    Ok(Descent {
        converged: viol <= opts.tol,
        mass,
        value,
        violation: viol,
        iterations: opts.max_iter,
    })
}

fn density_from_masses(grid: &Grid, masses: &[f64]) -> Result<DesignDensity> {
    let values = masses.iter().zip(grid.weights()).map(|(m, w)| m / w).collect();
    DesignDensity::new(grid.clone(), values)
}

fn random_start(groups: &Groups, start: &[f64], seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m: Vec<f64> = start.iter().map(|x| x * (rng.gen_range(-1.0..1.0f64)).exp()).collect();
    let total: f64 = m.iter().sum();
    m.iter_mut().for_each(|x| *x /= total);
    debug_assert_eq!(m.len(), groups.members.len());
    m
}

/// Minimizes `criterion` over densities on `grid`, starting from the uniform
/// density.
pub fn optimize_density(
    basis: BasisSet,
    criterion: Criterion,
    kernel: &dyn AsymptoticKernel,
    grid: &Grid,
    opts: &OptimizerOptions,
) -> Result<OptimizedDesign> {
    opts.validate()?;
    let objective = CriterionObjective::new(basis, grid, kernel, criterion)?;
    let groups = Groups::new(grid, opts.symmetric);
    let start = groups.collapse(&DesignDensity::uniform(grid.clone()).masses());
    let eval = |m: &[f64]| objective.value_and_gradient(m);
    let mut trace = Vec::new();
    let run = descend(
        &eval,
        &groups,
        start.clone(),
        opts,
        &mut |_| true,
        &mut |iteration, value, violation, step, _| {
            trace.push(TraceRow {
                iteration,
                value,
                violation,
                step,
            })
        },
    )?;
    let density = density_from_masses(grid, &groups.expand(&run.mass))?;
    let restarts = (0..opts.restarts)
        .into_par_iter()
        .map(|i| -> Result<RestartReport> {
            let s = random_start(&groups, &start, opts.seed.wrapping_add(i as u64));
            let r = descend(&eval, &groups, s, opts, &mut |_| true, &mut |_, _, _, _, _| {})?;
            let d = density_from_masses(grid, &groups.expand(&r.mass))?;
            Ok(RestartReport {
                index: i,
                value: r.value,
                violation: r.violation,
                distance_to_output: d.sup_distance(&density),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OptimizedDesign {
        density,
        value: run.value,
        violation: run.violation,
        iterations: run.iterations,
        converged: run.converged,
        trace,
        restarts,
    })
}

/// Largest relative gap between the analytic mass gradient and central
/// differences at the given nodes.
pub fn gradient_check(
    basis: BasisSet,
    criterion: Criterion,
    kernel: &dyn AsymptoticKernel,
    density: &DesignDensity,
    nodes: &[usize],
) -> Result<f64> {
    let objective = CriterionObjective::new(basis, density.grid(), kernel, criterion)?;
    let m = density.masses();
    let (_, g) = objective.value_and_gradient(&m)?;
    let gmax = g.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let mut worst = 0.0f64;
    for &k in nodes {
        let h = 1e-4 * m[k].max(1e-12);
        let mut up = m.clone();
        let mut down = m.clone();
        up[k] += h;
        down[k] -= h;
        let fd = (objective.value(&up)? - objective.value(&down)?) / (2.0 * h);
        worst = worst.max((fd - g[k]).abs() / g[k].abs().max(1e-3 * gmax));
    }
    Ok(worst)
}

/// Standardized maximin problem over a finite set of exponents with `c = 1`.
#[derive(Debug, Clone)]
pub struct MaximinProblem {
    alphas: Vec<f64>,
    basis: BasisSet,
    criterion: Criterion,
    kernels: Vec<LimitKernel>,
    references: Vec<DesignDensity>,
    optimal_values: Vec<f64>,
}

impl MaximinProblem {
    /// Solves the per-exponent optima in parallel.
    pub fn new(
        alphas: &[f64],
        basis: BasisSet,
        criterion: Criterion,
        grid: &Grid,
        solver: &SolverOptions,
        optimizer: &OptimizerOptions,
    ) -> Result<Self> {
        if alphas.is_empty() {
            return Err(domain("maximin needs at least one exponent"));
        }
        if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return Err(domain(format!("maximin exponents must lie in (0, 1), got {a}")));
        }
        criterion.check_basis(basis)?;
        let kernels = alphas
            .iter()
            .map(|&a| LimitKernel::new(a, 1.0))
            .collect::<Result<Vec<_>>>()?;
        let references = kernels
            .par_iter()
            .map(|k| -> Result<DesignDensity> {
                if basis.dim() == 1 && criterion != Criterion::Slope {
                    Ok(solve_one_param(basis, k, grid, solver)?.density)
                } else {
                    Ok(optimize_density(basis, criterion, k, grid, optimizer)?.density)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let optimal_values = kernels
            .iter()
            .zip(&references)
            .map(|(k, d)| crate::design::criterion_value(basis, d, k, criterion))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            alphas: alphas.to_vec(),
            basis,
            criterion,
            kernels,
            references,
            optimal_values,
        })
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn references(&self) -> &[DesignDensity] {
        &self.references
    }

    /// Efficiency of `density` at every exponent.
    pub fn profile(&self, density: &DesignDensity) -> Result<Vec<f64>> {
        self.kernels
            .iter()
            .zip(&self.references)
            .map(|(k, r)| efficiency(density, r, self.basis, k, self.criterion))
            .collect()
    }

    fn objectives<'a>(&'a self, grid: &Grid) -> Result<Vec<CriterionObjective<'a>>> {
        self.kernels
            .iter()
            .map(|k| CriterionObjective::new(self.basis, grid, k, self.criterion))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct MaximinDesign {
    pub density: DesignDensity,
    pub profile: Vec<f64>,
    pub min_efficiency: f64,
    /// Exponents whose efficiency is within 1e−3 of the minimum.
    pub active: Vec<f64>,
    /// `value` holds the exact minimum efficiency, nondecreasing.
    pub trace: Vec<TraceRow>,
    pub converged: bool,
}

pub const SOFTMIN_TEMPERATURES: [f64; 3] = [10.0, 100.0, 1000.0];
/// Exponents within this distance of the minimum efficiency enter the polish
/// direction.
const ACTIVE_BAND: f64 = 1e-2;

/// Projection onto the probability simplex.
fn project_simplex(v: &mut [f64]) {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (i + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter_mut().for_each(|x| *x = (*x - theta).max(0.0));
}

/// Weights on the simplex minimizing `πᵀ G π`, by projected gradient.
fn min_norm_weights(gram: &[Vec<f64>]) -> Vec<f64> {
    let n = gram.len();
    let mut pi = vec![1.0 / n as f64; n];
    let lmax = gram.iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    if !(lmax > 0.0) {
        return pi;
    }
    for _ in 0..2000 {
        let grad: Vec<f64> = gram.iter().map(|r| r.iter().zip(&pi).map(|(g, p)| g * p).sum()).collect();
        let mut next: Vec<f64> = pi.iter().zip(&grad).map(|(p, g)| p - g / lmax).collect();
        project_simplex(&mut next);
        let change = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        pi = next;
        if change < 1e-15 {
            break;
        }
    }
    pi
}

/// Exact-min ascent: the step direction is the minimum-norm convex
/// combination of the centered gradients of the nearly active efficiencies,
/// and a step is accepted only if the minimum efficiency increases.
fn polish(
    objs: &[CriterionObjective<'_>],
    optimal: &[f64],
    groups: &Groups,
    mut mass: Vec<f64>,
    opts: &OptimizerOptions,
    trace: &mut Vec<TraceRow>,
    offset: usize,
) -> Result<(Vec<f64>, bool)> {
    let mut eta = opts.initial_step;
    for it in 0..opts.stage_iter.min(opts.max_iter) {
        let full = groups.expand(&mass);
        // gradients of −e_a in group masses
        let parts = objs
            .iter()
            .zip(optimal)
            .map(|(o, v)| {
                let (phi, g) = o.value_and_gradient(&full)?;
                let e = v / phi;
                let h: Vec<f64> = groups.gradient(&g).iter().map(|x| e * x / phi).collect();
                Ok((e, h))
            })
            .collect::<Result<Vec<_>>>()?;
        let emin = parts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let centered: Vec<Vec<f64>> = parts
            .iter()
            .filter(|p| p.0 <= emin + ACTIVE_BAND)
            .map(|(_, h)| {
                let mean: f64 = mass.iter().zip(h).map(|(m, x)| m * x).sum();
                h.iter().map(|x| x - mean).collect()
            })
            .collect();
        let gram: Vec<Vec<f64>> = centered
            .iter()
            .map(|a| {
                centered
                    .iter()
                    .map(|b| mass.iter().zip(a).zip(b).map(|((m, x), y)| m * x * y).sum())
                    .collect()
            })
            .collect();
        let pi = min_norm_weights(&gram);
        let mut d = vec![0.0; mass.len()];
        for (w, h) in pi.iter().zip(&centered) {
            d.iter_mut().zip(h).for_each(|(acc, x)| *acc += w * x);
        }
        let viol = violation(&mass, &d, emin);
        trace.push(TraceRow {
            iteration: offset + it,
            value: emin,
            violation: viol,
            step: eta,
        });
        if viol <= opts.tol {
            return Ok((mass, true));
        }
        let scale = d.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let gain: f64 = mass.iter().zip(&d).map(|(m, x)| m * x * x).sum::<f64>() / scale;
        let mut accepted = None;
        while eta >= 1e-14 {
            let mut trial: Vec<f64> = mass.iter().zip(&d).map(|(m, x)| m * (-eta * x / scale).exp()).collect();
            let total: f64 = trial.iter().sum();
            trial.iter_mut().for_each(|m| *m /= total);
            if let Ok(e) = efficiencies(objs, optimal, &groups.expand(&trial)) {
                let tmin = e.into_iter().fold(f64::INFINITY, f64::min);
                if tmin > emin + opts.armijo * eta * gain {
                    accepted = Some(trial);
                    break;
                }
            }
            eta *= 0.5;
        }
        match accepted {
            Some(t) => {
                mass = t;
                eta = (eta * 2.0).min(opts.max_step);
            }
            None => return Ok((mass, false)),
        }
    }
    Ok((mass, false))
}

fn efficiencies(objs: &[CriterionObjective<'_>], optimal: &[f64], masses: &[f64]) -> Result<Vec<f64>> {
    objs.iter().zip(optimal).map(|(o, v)| Ok(v / o.value(masses)?)).collect()
}

/// Maximizes the minimum efficiency by descending the smoothed
/// `−softmin_s(eff)` for increasing temperatures `s`, then polishing at a high
/// temperature. A step is only taken when the exact minimum efficiency does
/// not drop.
pub fn maximin_design(problem: &MaximinProblem, grid: &Grid, opts: &OptimizerOptions) -> Result<MaximinDesign> {
    opts.validate()?;
    let objs = problem.objectives(grid)?;
    let groups = Groups::new(grid, opts.symmetric);
    let optimal = &problem.optimal_values;
    let mut mass = groups.collapse(&DesignDensity::uniform(grid.clone()).masses());
    let mut best_min = efficiencies(&objs, optimal, &groups.expand(&mass))?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let mut trace = Vec::new();
    let mut offset = 0;
    for &s in &SOFTMIN_TEMPERATURES {
        // F = (1/s) ln Σ exp(−s e_α), the negated soft-min
        let eval = |m: &[f64]| -> Result<(f64, Vec<f64>)> {
            let parts = objs
                .iter()
                .zip(optimal)
                .map(|(o, v)| {
                    let (phi, g) = o.value_and_gradient(m)?;
                    Ok((v / phi, phi, g))
                })
                .collect::<Result<Vec<_>>>()?;
            let emin = parts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
            let ws: Vec<f64> = parts.iter().map(|p| (-s * (p.0 - emin)).exp()).collect();
            let z: f64 = ws.iter().sum();
            let value = -emin + z.ln() / s;
            let mut grad = vec![0.0; m.len()];
            for ((e, phi, g), w) in parts.iter().zip(&ws) {
                let coef = w / z * e / phi;
                for (acc, gk) in grad.iter_mut().zip(g) {
                    *acc += coef * gk;
                }
            }
            Ok((value, grad))
        };
        let current = Cell::new(best_min);
        let pending = Cell::new(best_min);
        let mut guard = |trial: &[f64]| -> bool {
            match efficiencies(&objs, optimal, &groups.expand(trial)) {
                Ok(e) => {
                    let m = e.into_iter().fold(f64::INFINITY, f64::min);
                    pending.set(m);
                    m >= current.get()
                }
                Err(_) => false,
            }
        };
        let mut last = 0;
        let mut record = |it: usize, _value: f64, violation: f64, step: f64, _m: &[f64]| {
            // `descend` records right after the guard accepted the step
            if it > 0 {
                current.set(pending.get());
            }
            trace.push(TraceRow {
                iteration: offset + it,
                value: current.get(),
                violation,
                step,
            });
            last = it;
        };
        let stage_opts = OptimizerOptions {
            max_iter: opts.max_iter.min(opts.stage_iter),
            ..opts.clone()
        };
        let run = descend(&eval, &groups, mass.clone(), &stage_opts, &mut guard, &mut record)?;
        offset += last + 1;
        mass = run.mass;
        best_min = efficiencies(&objs, optimal, &groups.expand(&mass))?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
    }
    let (mass, converged) = polish(&objs, optimal, &groups, mass, opts, &mut trace, offset)?;
    let density = density_from_masses(grid, &groups.expand(&mass))?;
    let profile = problem.profile(&density)?;
    let min_efficiency = profile.iter().copied().fold(f64::INFINITY, f64::min);
    let active = problem
        .alphas
        .iter()
        .zip(&profile)
        .filter(|(_, e)| **e <= min_efficiency + 1e-3)
        .map(|(a, _)| *a)
        .collect();
    Ok(MaximinDesign {
        density,
        profile,
        min_efficiency,
        active,
        trace,
        converged,
    })
}

/// Published polynomial approximation of the maximin density for `f(t) = t`
/// on `[−1, 1]` over `α ∈ {0.1, …, 0.9}`: `(5.7275t² − 1.16963 − 3.0264t⁴)_+`.
pub fn maximin_polynomial(t: f64) -> f64 {
    let t2 = t * t;
    (5.7275 * t2 - 1.16963 - 3.0264 * t2 * t2).max(0.0)
}

/// The polynomial approximation on `grid`, renormalized.
pub fn maximin_polynomial_density(grid: &Grid) -> Result<DesignDensity> {
    DesignDensity::from_fn(grid.clone(), maximin_polynomial)
}

/// `0.1, 0.2, …, 0.9` in a form that avoids accumulated rounding.
pub fn decile_alphas() -> Vec<f64> {
    (1..=9).map(|k| k as f64 / 10.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Grid {
        Grid::new(1.0, n).unwrap()
    }

    #[test]
    fn location_optimum_is_uniform() {
        let g = grid(201);
        let k = LimitKernel::new(0.5, 1.0).unwrap();
        let r = optimize_density(BasisSet::Location, Criterion::Single, &k, &g, &OptimizerOptions::default()).unwrap();
        assert!(r.converged);
        assert!(r.density.sup_distance(&DesignDensity::uniform(g)) < 1e-6);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let g = grid(101);
        let phi = DesignDensity::from_fn(g, |t| 0.4 + t * t + 0.2 * t).unwrap();
        let k = LimitKernel::new(0.6, 1.0).unwrap();
        let nodes = [0, 7, 33, 50, 80, 100];
        for crit in [Criterion::D, Criterion::Slope, Criterion::Single] {
            let err = gradient_check(BasisSet::Linear, crit, &k, &phi, &nodes).unwrap();
            assert!(err < 1e-5, "{crit}: {err}");
        }
        let sr = crate::shortrange::ShortRangeContext::new(0.8, 0.6).unwrap();
        assert!(gradient_check(BasisSet::Linear, Criterion::D, &sr, &phi, &nodes).unwrap() < 1e-5);
    }

    #[test]
    fn trace_is_monotone_and_symmetric_output() {
        let g = grid(201);
        let k = LimitKernel::new(0.5, 1.0).unwrap();
        let r = optimize_density(BasisSet::Linear, Criterion::D, &k, &g, &OptimizerOptions::default()).unwrap();
        assert!(r.trace.windows(2).all(|w| w[1].value <= w[0].value));
        assert!(r.density.max_asymmetry() < 1e-12);
        assert!((r.density.integral() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn restarts_are_diagnostic_only() {
        let g = grid(101);
        let k = LimitKernel::new(0.5, 1.0).unwrap();
        let base = OptimizerOptions {
            tol: 1e-5,
            ..Default::default()
        };
        let with = OptimizerOptions {
            restarts: 2,
            seed: 9,
            ..base.clone()
        };
        let a = optimize_density(BasisSet::Linear, Criterion::Slope, &k, &g, &base).unwrap();
        let b = optimize_density(BasisSet::Linear, Criterion::Slope, &k, &g, &with).unwrap();
        assert_eq!(a.density, b.density);
        assert_eq!(b.restarts.len(), 2);
        assert!(b.restarts.iter().all(|r| r.distance_to_output < 0.05));
    }

    #[test]
    fn single_exponent_maximin_is_the_optimum() {
        let g = grid(401);
        let opts = OptimizerOptions::default();
        let p = MaximinProblem::new(&[0.5], BasisSet::ThroughOrigin, Criterion::Single, &g, &SolverOptions::default(), &opts)
            .unwrap();
        let r = maximin_design(&p, &g, &opts).unwrap();
        assert!(r.min_efficiency > 0.9999, "{}", r.min_efficiency);
        assert!(r.trace.windows(2).all(|w| w[1].value >= w[0].value));
    }

    #[test]
    fn polynomial_integrates_to_about_one() {
        let g = Grid::with_default_size(1.0).unwrap();
        let raw: Vec<f64> = g.nodes().iter().map(|&t| maximin_polynomial(t)).collect();
        assert!((g.integrate(&raw) - 1.0).abs() < 1e-3);
    }
}
