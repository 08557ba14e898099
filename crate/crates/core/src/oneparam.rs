//! One-parameter optimal densities `p(t) = 1/H⁻(μ − τ/f²(t))` with the
//! multipliers fixed by `∫p = 1` and `μ = κ + 2∫f²Q(1/p)p / ∫f²p`.
//!
//! The multiplier equations are solved for the grid quadrature itself, so the
//! returned density is an exact stationary point of the discretized problem.

use crate::design::{BasisSet, DesignDensity, Grid};
use crate::error::{domain, DesignError, Result};
use crate::kernels::AsymptoticKernel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
        }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(domain(format!("solver tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(domain("max_iter must be at least 1"));
        }
        Ok(())
    }
}

/// The support `{inner ≤ |t| ≤ outer}`; `inner = 0` means no hole.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    pub inner: f64,
    pub outer: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    ClosedForm,
    Broyden,
    Picard,
}

#[derive(Debug, Clone)]
pub struct FixedPointSolution {
    pub mu: f64,
    pub tau: f64,
    pub density: DesignDensity,
    /// `max(|∫p − 1|, |μ − κ − 2C/B| / μ)` at the returned multipliers.
    pub residual_norm: f64,
    pub iterations: usize,
    pub support: Support,
    pub method: SolveMethod,
}

impl FixedPointSolution {
    /// Radius of the central hole (`√(τ/μ)` for `f(t) = t`).
    pub fn edge(&self) -> f64 {
        self.support.inner
    }
}

fn squared_basis(basis: BasisSet, grid: &Grid) -> Result<Vec<f64>> {
    if basis.dim() != 1 {
        return Err(domain(format!("one-parameter solver needs a single regression function, got {basis}")));
    }
    Ok(grid.nodes().iter().map(|&t| basis.eval(t)[0].powi(2)).collect())
}

fn level(mu: f64, tau: f64, f2: f64) -> f64 {
    if f2 > 0.0 {
        mu - tau / f2
    } else {
        f64::NEG_INFINITY
    }
}

fn values_from(f2: &[f64], kernel: &dyn AsymptoticKernel, mu: f64, tau: f64) -> Vec<f64> {
    f2.iter().map(|&g| kernel.density_at_level(level(mu, tau, g))).collect()
}

/// Unnormalized node values of `1/H⁻(μ − τ/f²)`, 0 where the level is not positive.
pub fn density_from_multipliers(
    basis: BasisSet,
    kernel: &dyn AsymptoticKernel,
    mu: f64,
    tau: f64,
    grid: &Grid,
) -> Result<Vec<f64>> {
    if !(mu > 0.0) {
        return Err(domain(format!("multiplier mu must be positive, got {mu}")));
    }
    let f2 = squared_basis(basis, grid)?;
    Ok(values_from(&f2, kernel, mu, tau))
}

/// `(I, B, C) = (∫p, ∫f²p, ∫f² Q(1/p) p)`.
fn moments(grid: &Grid, f2: &[f64], p: &[f64], kernel: &dyn AsymptoticKernel) -> (f64, f64, f64) {
    let mut i = 0.0;
    let mut b = 0.0;
    let mut c = 0.0;
    for ((w, g), v) in grid.weights().iter().zip(f2).zip(p) {
        i += w * v;
        b += w * g * v;
        c += w * g * kernel.rate(*v);
    }
    (i, b, c)
}

/// The multipliers implied by a density: `μ = κ + 2C/B` and
/// `τ = μB − ∫f² H(1/p) p`.
pub fn multipliers_for(basis: BasisSet, kernel: &dyn AsymptoticKernel, density: &DesignDensity) -> Result<(f64, f64)> {
    let grid = density.grid();
    let f2 = squared_basis(basis, grid)?;
    let p = density.values();
    let (_, b, c) = moments(grid, &f2, p, kernel);
    if !(b > 0.0) {
        return Err(DesignError::Degenerate(b));
    }
    let mu = kernel.white_weight() + 2.0 * c / b;
    let hp: f64 = grid
        .weights()
        .iter()
        .zip(&f2)
        .zip(p)
        .map(|((w, g), v)| w * g * kernel.marginal(*v) * v)
        .sum();
    Ok((mu, mu * b - hp))
}

/// Largest violation of the pointwise optimality conditions
/// `f²(H(1/p) − μ) + τ = 0` on `{p > 0}` and `≥ 0` on `{p = 0}`.
pub fn optimality_check(
    p: &DesignDensity,
    basis: BasisSet,
    kernel: &dyn AsymptoticKernel,
    mu: f64,
    tau: f64,
) -> Result<f64> {
    let f2 = squared_basis(basis, p.grid())?;
    Ok(f2
        .iter()
        .zip(p.values())
        .map(|(&g, &v)| {
            let s = g * (kernel.marginal(v) - mu) + tau;
            if v > 0.0 {
                s.abs()
            } else {
                (-s).max(0.0)
            }
        })
        .fold(0.0, f64::max))
}

fn support_of(basis: BasisSet, grid: &Grid, mu: f64, tau: f64) -> Support {
    let outer = grid.half_width();
    let inner = match basis {
        BasisSet::ThroughOrigin if tau > 0.0 => (tau / mu).sqrt().min(outer),
        _ => 0.0,
    };
    Support { inner, outer }
}

struct Problem<'a> {
    grid: &'a Grid,
    f2: Vec<f64>,
    kernel: &'a dyn AsymptoticKernel,
}

struct Eval {
    r: [f64; 2],
    norm: f64,
}

impl Problem<'_> {
    /// Residuals in `x = (ln μ, ln τ)`.
    fn eval(&self, x: [f64; 2]) -> Option<Eval> {
        let (mu, tau) = (x[0].exp(), x[1].exp());
        if !mu.is_finite() || !tau.is_finite() {
            return None;
        }
        let p = values_from(&self.f2, self.kernel, mu, tau);
        let (i, b, c) = moments(self.grid, &self.f2, &p, self.kernel);
        if !(i > 0.0) || !(b > 0.0) || !i.is_finite() || !c.is_finite() {
            return None;
        }
        let r = [i.ln(), (mu - self.kernel.white_weight() - 2.0 * c / b) / mu];
        let norm = (i - 1.0).abs().max(r[1].abs());
        Some(Eval { r, norm })
    }

    fn jacobian(&self, x: [f64; 2], at: &Eval) -> Option<[[f64; 2]; 2]> {
        let mut j = [[0.0; 2]; 2];
        for col in 0..2 {
            let h = 1e-7;
            let mut xp = x;
            xp[col] += h;
            let e = self.eval(xp)?;
            for row in 0..2 {
                j[row][col] = (e.r[row] - at.r[row]) / h;
            }
        }
        Some(j)
    }

    fn solution(&self, basis: BasisSet, mu: f64, tau: f64, iterations: usize, method: SolveMethod) -> Result<FixedPointSolution> {
        let values = values_from(&self.f2, self.kernel, mu, tau);
        let (i, b, c) = moments(self.grid, &self.f2, &values, self.kernel);
        let r2 = (mu - self.kernel.white_weight() - 2.0 * c / b) / mu;
        let density = DesignDensity::new(self.grid.clone(), values)?;
        Ok(FixedPointSolution {
            mu,
            tau,
            density,
            residual_norm: (i - 1.0).abs().max(r2.abs()),
            iterations,
            support: support_of(basis, self.grid, mu, tau),
            method,
        })
    }
}

fn solve2(j: &[[f64; 2]; 2], r: [f64; 2]) -> Option<[f64; 2]> {
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    Some([
        -(j[1][1] * r[0] - j[0][1] * r[1]) / det,
        -(-j[1][0] * r[0] + j[0][0] * r[1]) / det,
    ])
}

/// Optimal density for a single regression function under `kernel`.
pub fn solve_one_param(
    basis: BasisSet,
    kernel: &dyn AsymptoticKernel,
    grid: &Grid,
    opts: &SolverOptions,
) -> Result<FixedPointSolution> {
    opts.validate()?;
    let f2 = squared_basis(basis, grid)?;
    let uniform = DesignDensity::uniform(grid.clone());
    if basis == BasisSet::Location || kernel.collapses_to_uniform() {
        let (mu, tau) = multipliers_for(basis, kernel, &uniform)?;
        return Ok(FixedPointSolution {
            mu,
            tau,
            density: uniform,
            residual_norm: 0.0,
            iterations: 0,
            support: Support {
                inner: 0.0,
                outer: grid.half_width(),
            },
            method: SolveMethod::ClosedForm,
        });
    }
    let problem = Problem { grid, f2, kernel };
    let (mu0, tau0) = multipliers_for(basis, kernel, &uniform)?;
    if !(tau0 > 0.0) {
        return Err(domain(format!("uniform start gives nonpositive tau = {tau0}")));
    }
    let x0 = [mu0.ln(), tau0.ln()];

    let mut best: Option<([f64; 2], f64)> = None;
    let mut iterations = 0;
    if let Some(e0) = problem.eval(x0) {
        let (x, e, it) = broyden(&problem, x0, e0, opts);
        iterations = it;
        if e.norm <= opts.tol {
            return problem.solution(basis, x[0].exp(), x[1].exp(), iterations, SolveMethod::Broyden);
        }
        best = Some((x, e.norm));
    }

    // Picard fallback from the uniform density
    let mut p = uniform.values().to_vec();
    for it in 0..opts.max_iter {
        iterations += 1;
        let d = DesignDensity::new(grid.clone(), p.clone())?;
        let (mu, tau) = multipliers_for(basis, kernel, &d)?;
        if mu > 0.0 && tau > 0.0 {
            let x = [mu.ln(), tau.ln()];
            if let Some(e) = problem.eval(x) {
                if best.map_or(true, |b| e.norm < b.1) {
                    best = Some((x, e.norm));
                }
                if e.norm <= opts.tol {
                    return problem.solution(basis, mu, tau, iterations, SolveMethod::Picard);
                }
            }
        }
        let next = values_from(&problem.f2, kernel, mu, tau.max(0.0));
        let total = grid.integrate(&next);
        if !(total > 0.0) {
            break;
        }
        for (a, b) in p.iter_mut().zip(&next) {
            *a = 0.5 * *a + 0.5 * b / total;
        }
        let _ = it;
    }
    let (best_solution, residual) = match best {
        Some((x, norm)) => (
            problem
                .solution(basis, x[0].exp(), x[1].exp(), iterations, SolveMethod::Broyden)
                .ok()
                .map(Box::new),
            norm,
        ),
        None => (None, f64::INFINITY),
    };
    Err(DesignError::NotConverged {
        iterations,
        residual,
        best: best_solution,
    })
}

fn broyden(problem: &Problem<'_>, x0: [f64; 2], e0: Eval, opts: &SolverOptions) -> ([f64; 2], Eval, usize) {
    let mut x = x0;
    let mut e = e0;
    let Some(mut j) = problem.jacobian(x, &e) else {
        return (x, e, 0);
    };
    let mut fresh = true;
    for it in 1..=opts.max_iter {
        if e.norm <= opts.tol {
            return (x, e, it - 1);
        }
        let step = match solve2(&j, e.r) {
            Some(s) if s.iter().all(|v| v.is_finite()) => s,
            _ => return (x, e, it),
        };
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let xt = [x[0] + lambda * step[0], x[1] + lambda * step[1]];
            if let Some(et) = problem.eval(xt) {
                let cur = e.r[0].hypot(e.r[1]);
                if et.r[0].hypot(et.r[1]) <= (1.0 - 1e-4 * lambda) * cur {
                    accepted = Some((xt, et));
                    break;
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((xt, et)) => {
                let dx = [xt[0] - x[0], xt[1] - x[1]];
                let df = [et.r[0] - e.r[0], et.r[1] - e.r[1]];
                let dd = dx[0] * dx[0] + dx[1] * dx[1];
                if dd > 0.0 {
                    for row in 0..2 {
                        let u = df[row] - (j[row][0] * dx[0] + j[row][1] * dx[1]);
                        for col in 0..2 {
                            j[row][col] += u * dx[col] / dd;
                        }
                    }
                }
                x = xt;
                e = et;
                fresh = false;
            }
            None if !fresh => match problem.jacobian(x, &e) {
                Some(jn) => {
                    j = jn;
                    fresh = true;
                }
                None => return (x, e, it),
            },
            None => return (x, e, it),
        }
    }
    (x, e, opts.max_iter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{efficiency, Criterion};
    use crate::kernels::LimitKernel;

    fn grid() -> Grid {
        Grid::with_default_size(1.0).unwrap()
    }

    #[test]
    fn through_origin_half() {
        let k = LimitKernel::new(0.5, 1.0).unwrap();
        let s = solve_one_param(BasisSet::ThroughOrigin, &k, &grid(), &SolverOptions::default()).unwrap();
        assert!((s.mu - 4.32).abs() < 0.01, "{}", s.mu);
        assert!((s.tau - 0.70).abs() < 0.01, "{}", s.tau);
        assert!((s.edge() - 0.40).abs() < 0.01);
        assert!(s.residual_norm <= 1e-8);
        assert!((s.density.integral() - 1.0).abs() < 1e-12);
        // τ = μ(1−α)/2 · ∫t²p forces ∫t²p ≈ 0.648
        let w = crate::design::w_matrix(BasisSet::ThroughOrigin, &s.density);
        assert!((w[(0, 0)] - 0.648).abs() < 0.02);
    }

    #[test]
    fn derived_tau_identity() {
        for alpha in [0.25, 0.75] {
            let k = LimitKernel::new(alpha, 1.3).unwrap();
            let s = solve_one_param(BasisSet::ThroughOrigin, &k, &grid(), &SolverOptions::default()).unwrap();
            let g = s.density.grid();
            let b: f64 = g.integrate(&g.nodes().iter().zip(s.density.values()).map(|(t, p)| t * t * p).collect::<Vec<_>>());
            let a: f64 = g.integrate(
                &g.nodes()
                    .iter()
                    .zip(s.density.values())
                    .map(|(t, p)| t * t * p.powf(1.0 + alpha))
                    .collect::<Vec<_>>(),
            );
            assert!((s.mu * (1.0 - alpha) / 2.0 * b - s.tau).abs() < 1e-6);
            assert!((1.3 * a - s.tau).abs() < 1e-6);
        }
    }

    #[test]
    fn closed_forms() {
        let g = grid();
        let k = LimitKernel::new(0.3, 1.0).unwrap();
        let s = solve_one_param(BasisSet::Location, &k, &g, &SolverOptions::default()).unwrap();
        assert_eq!(s.method, SolveMethod::ClosedForm);
        assert!(s.density.values().iter().all(|&v| v == 0.5));
        let k1 = LimitKernel::new(1.0, 1.0).unwrap();
        let s1 = solve_one_param(BasisSet::ThroughOrigin, &k1, &g, &SolverOptions::default()).unwrap();
        assert!(s1.tau.abs() < 1e-8);
        assert!(s1.density.values().iter().all(|&v| v == 0.5));
        assert!(solve_one_param(BasisSet::Linear, &k, &g, &SolverOptions::default()).is_err());
    }

    #[test]
    fn c_invariance() {
        let g = grid();
        let k = LimitKernel::new(0.5, 1.0).unwrap();
        let a = solve_one_param(BasisSet::ThroughOrigin, &k, &g, &SolverOptions::default()).unwrap();
        let b = solve_one_param(BasisSet::ThroughOrigin, &k.scaled(7.0).unwrap(), &g, &SolverOptions::default()).unwrap();
        assert!(a.density.sup_distance(&b.density) < 1e-6);
        assert!((b.mu / a.mu - 7.0).abs() < 1e-6);
        assert!((b.tau / a.tau - 7.0).abs() < 1e-6);
    }

    #[test]
    fn density_from_multipliers_examples() {
        let g = Grid::new(1.0, 11).unwrap();
        let k = LimitKernel::new(0.5, 1.0).unwrap();
        let v = density_from_multipliers(BasisSet::ThroughOrigin, &k, 4.32, 0.70, &g).unwrap();
        // node 6 is t = 0.2, inside the hole
        assert_eq!(v[6], 0.0);
        assert_eq!(v[5], 0.0);
        let flat = density_from_multipliers(BasisSet::ThroughOrigin, &k, 3.0, 0.0, &g).unwrap();
        let expect = (0.5 * 3.0 / 1.5f64).powf(2.0);
        assert!(flat.iter().enumerate().all(|(i, &x)| i == 5 || (x - expect).abs() < 1e-14));
        assert!(density_from_multipliers(BasisSet::ThroughOrigin, &k, -1.0, 0.0, &g).is_err());
    }

    #[test]
    fn optimality_check_separates_optimum_from_uniform() {
        let g = grid();
        let k = LimitKernel::new(0.5, 1.0).unwrap();
        let s = solve_one_param(BasisSet::ThroughOrigin, &k, &g, &SolverOptions::default()).unwrap();
        assert!(optimality_check(&s.density, BasisSet::ThroughOrigin, &k, s.mu, s.tau).unwrap() < 1e-6);
        let u = DesignDensity::uniform(g.clone());
        let (mu, tau) = multipliers_for(BasisSet::ThroughOrigin, &k, &u).unwrap();
        assert!(optimality_check(&u, BasisSet::ThroughOrigin, &k, mu, tau).unwrap() > 0.1);
        let (mu1, tau1) = multipliers_for(BasisSet::Location, &k, &u).unwrap();
        assert!(optimality_check(&u, BasisSet::Location, &k, mu1, tau1).unwrap() < 1e-12);
        let e = efficiency(&u, &s.density, BasisSet::ThroughOrigin, &k, Criterion::Single).unwrap();
        assert!((e - 0.78).abs() < 0.01);
    }

    #[test]
    fn hole_shrinks_with_alpha() {
        let g = grid();
        let edges: Vec<f64> = [0.05, 0.25, 0.5, 0.75, 0.95]
            .iter()
            .map(|&a| {
                let k = LimitKernel::new(a, 1.0).unwrap();
                solve_one_param(BasisSet::ThroughOrigin, &k, &g, &SolverOptions::default())
                    .unwrap()
                    .edge()
            })
            .collect();
        assert!(edges.windows(2).all(|w| w[1] < w[0]), "{edges:?}");
    }

    #[test]
    fn bad_options() {
        let k = LimitKernel::new(0.5, 1.0).unwrap();
        let opts = SolverOptions { tol: 0.0, max_iter: 10 };
        assert!(solve_one_param(BasisSet::ThroughOrigin, &k, &grid(), &opts).is_err());
    }
}
