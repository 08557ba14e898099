//! Exact finite-sample covariance of the least-squares estimate for designs
//! generated by a density's quantile function, compared with the asymptotic
//! prediction `2γ W⁻¹ R W⁻¹`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::design::{moment_matrices, psi_matrix, BasisSet, DesignDensity};
use crate::error::{domain, DesignError, Result};
use crate::kernels::{d_norm, CorrelationModel};

pub const DEFAULT_CAP: usize = 5000;

/// Observation points `t_1 ≤ … ≤ t_N` in `[−T, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDesign {
    pub half_width: f64,
    pub points: Vec<f64>,
}

impl FiniteDesign {
    pub fn n(&self) -> usize {
        self.points.len()
    }
}

/// CDF of `φ` at the nodes, from the quadratic interpolant on each Simpson
/// panel split at its midpoint. Increments are clamped at 0 and the result is
/// scaled to end at exactly 1.
pub fn node_cdf(phi: &DesignDensity) -> Vec<f64> {
    let g = phi.grid();
    let v = phi.values();
    let h = g.spacing();
    let mut cdf = vec![0.0; g.n()];
    let mut k = 0;
    while k + 2 < g.n() {
        let (f0, f1, f2) = (v[k], v[k + 1], v[k + 2]);
        let left = (h / 12.0 * (5.0 * f0 + 8.0 * f1 - f2)).max(0.0);
        let right = (h / 12.0 * (-f0 + 8.0 * f1 + 5.0 * f2)).max(0.0);
        cdf[k + 1] = cdf[k] + left;
        cdf[k + 2] = cdf[k + 1] + right;
        k += 2;
    }
    let total = cdf[g.n() - 1];
    cdf.iter_mut().for_each(|c| *c /= total);
    cdf
}

/// `t_i = a((i−1)/(N−1))` with `a` the quantile function of `φ`, inverted
/// linearly between nodes. A flat stretch of the CDF maps to its left end.
pub fn design_points_from_density(phi: &DesignDensity, n: usize) -> Result<FiniteDesign> {
    if n < 2 {
        return Err(domain(format!("a finite design needs N >= 2, got {n}")));
    }
    let g = phi.grid();
    let cdf = node_cdf(phi);
    let nodes = g.nodes();
    let tt = g.half_width();
    let points = (0..n)
        .map(|i| {
            let u = i as f64 / (n - 1) as f64;
            let k = cdf.partition_point(|&c| c < u);
            if k == 0 {
                return nodes[0];
            }
            if k >= cdf.len() {
                return tt;
            }
            let (c0, c1) = (cdf[k - 1], cdf[k]);
            let frac = if c1 > c0 { (u - c0) / (c1 - c0) } else { 1.0 };
            (nodes[k - 1] + frac * (nodes[k] - nodes[k - 1])).clamp(-tt, tt)
        })
        .collect();
    Ok(FiniteDesign { half_width: tt, points })
}

/// `(XᵀX)⁻¹ XᵀΣX (XᵀX)⁻¹` with `Σ_ij = γρ(N(t_i − t_j)) + (1 − γ)δ_ij` and
/// unit noise variance, optionally multiplied by `N/d_α(N)`.
pub fn exact_lse_covariance(
    basis: BasisSet,
    design: &FiniteDesign,
    model: &CorrelationModel,
    gamma: f64,
    scale: bool,
    cap: usize,
) -> Result<DMatrix<f64>> {
    model.validate()?;
    if !(0.0..=1.0).contains(&gamma) {
        return Err(domain(format!("mixture weight gamma must lie in [0, 1], got {gamma}")));
    }
    let n = design.n();
    if n > cap {
        return Err(DesignError::CapExceeded { n, cap });
    }
    let p = basis.dim();
    let t = &design.points;
    let x: Vec<DVector<f64>> = t.iter().map(|&s| DVector::from_vec(basis.eval(s))).collect();
    let nf = n as f64;
    // row i contributes x_i (Σ_j Σ_ij x_j)ᵀ; rows are reduced in order
    let rows: Vec<DMatrix<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = DVector::zeros(p);
            for j in 0..n {
                let s = if i == j {
                    1.0
                } else if gamma == 0.0 {
                    continue;
                } else {
                    gamma * model.rho(nf * (t[i] - t[j]))
                };
                acc.axpy(s, &x[j], 1.0);
            }
            &x[i] * acc.transpose()
        })
        .collect();
    let mut meat = DMatrix::zeros(p, p);
    for r in &rows {
        meat += r;
    }
    let mut xtx = DMatrix::zeros(p, p);
    for xi in &x {
        xtx += xi * xi.transpose();
    }
    let mut cov = psi_matrix(&xtx, &crate::design::symmetrize(meat))?;
    if scale {
        cov *= nf / d_norm(model, n as u64)?;
    }
    Ok(cov)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub n_values: Vec<usize>,
    pub d_alpha: Vec<f64>,
    /// Frobenius error of the scaled exact covariance relative to the
    /// prediction; absolute when the prediction vanishes.
    pub errors: Vec<f64>,
    /// Least-squares slope of `ln error` against `ln(1/d_α(N))`.
    pub slope: f64,
    pub predicted: DMatrix<f64>,
    pub scaled: Vec<DMatrix<f64>>,
    /// `γ = 0`: the prediction is 0 and errors are absolute norms.
    pub degenerate: bool,
}

impl ConvergenceReport {
    pub fn strictly_decreasing(&self) -> bool {
        self.errors.windows(2).all(|w| w[1] < w[0])
    }

    /// Final error at most half the first one.
    pub fn halved(&self) -> bool {
        match (self.errors.first(), self.errors.last()) {
            (Some(a), Some(b)) => *b <= 0.5 * a,
            _ => false,
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err_col = if self.degenerate { "abs_error" } else { "rel_error" };
        w.write_record(["N", "d_alpha", err_col])?;
        for ((n, d), e) in self.n_values.iter().zip(&self.d_alpha).zip(&self.errors) {
            w.write_record([n.to_string(), format!("{d:.16e}"), format!("{e:.16e}")])?;
        }
        w.write_record(["fitted_slope".to_string(), String::new(), format!("{:.16e}", self.slope)])?;
        w.flush()?;
        Ok(())
    }
}

fn fitted_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    if x.len() < 2 {
        return f64::NAN;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

pub fn convergence_report(
    basis: BasisSet,
    phi: &DesignDensity,
    model: &CorrelationModel,
    gamma: f64,
    n_values: &[usize],
    cap: usize,
) -> Result<ConvergenceReport> {
    if n_values.is_empty() || n_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(domain("N values must be nonempty and strictly increasing"));
    }
    if let Some(&n) = n_values.iter().find(|&&n| n > cap) {
        return Err(DesignError::CapExceeded { n, cap });
    }
    let kernel = model.limit_kernel()?;
    let predicted = moment_matrices(basis, phi, &kernel)?.psi * (2.0 * gamma);
    let pnorm = predicted.norm();
    let degenerate = gamma == 0.0;
    let mut d_alpha = Vec::new();
    let mut errors = Vec::new();
    let mut scaled = Vec::new();
    for &n in n_values {
        let design = design_points_from_density(phi, n)?;
        let s = exact_lse_covariance(basis, &design, model, gamma, true, cap)?;
        let diff = (&s - &predicted).norm();
        errors.push(if degenerate { diff } else { diff / pnorm });
        d_alpha.push(d_norm(model, n as u64)?);
        scaled.push(s);
    }
    let lx: Vec<f64> = d_alpha.iter().map(|d| -d.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    Ok(ConvergenceReport {
        n_values: n_values.to_vec(),
        d_alpha,
        errors,
        slope: fitted_slope(&lx, &ly),
        predicted,
        scaled,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::Grid;

    fn uniform(n: usize) -> DesignDensity {
        DesignDensity::uniform(Grid::new(1.0, n).unwrap())
    }

    #[test]
    fn uniform_points_are_equispaced() {
        let d = design_points_from_density(&uniform(201), 3).unwrap();
        assert_eq!(d.points, vec![-1.0, 0.0, 1.0]);
        let d = design_points_from_density(&uniform(2001), 41).unwrap();
        for (i, t) in d.points.iter().enumerate() {
            assert!((t - (-1.0 + 2.0 * i as f64 / 40.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_density_gives_symmetric_points() {
        let g = Grid::new(1.0, 401).unwrap();
        let phi = DesignDensity::from_fn(g, |t| 0.1 + t * t).unwrap();
        let d = design_points_from_density(&phi, 51).unwrap();
        for i in 0..51 {
            assert!((d.points[i] + d.points[50 - i]).abs() < 1e-12);
        }
        assert!(d.points.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn white_noise_is_ols() {
        let d = design_points_from_density(&uniform(101), 7).unwrap();
        let m = CorrelationModel::cauchy(0.5, 1.0).unwrap();
        let c = exact_lse_covariance(BasisSet::Linear, &d, &m, 0.0, false, DEFAULT_CAP).unwrap();
        let mut xtx = DMatrix::zeros(2, 2);
        for &t in &d.points {
            let x = DVector::from_vec(vec![1.0, t]);
            xtx += &x * x.transpose();
        }
        let inv = xtx.try_inverse().unwrap();
        assert!((c - inv).amax() < 1e-14);
    }

    #[test]
    fn two_point_location() {
        let d = design_points_from_density(&uniform(11), 2).unwrap();
        let m = CorrelationModel::cauchy(0.5, 1.0).unwrap();
        let c = exact_lse_covariance(BasisSet::Location, &d, &m, 1.0, false, DEFAULT_CAP).unwrap();
        let expect = 0.25 * (2.0 + 2.0 * m.rho(4.0));
        assert!((c[(0, 0)] - expect).abs() < 1e-15);
    }

    #[test]
    fn location_matches_double_sum() {
        let d = design_points_from_density(&uniform(101), 60).unwrap();
        let m = CorrelationModel::cauchy(0.3, 2.0).unwrap();
        let c = exact_lse_covariance(BasisSet::Location, &d, &m, 1.0, false, DEFAULT_CAP).unwrap();
        let n = 60.0;
        let mut s = 0.0;
        for a in &d.points {
            for b in &d.points {
                s += m.rho(n * (a - b));
            }
        }
        assert!((c[(0, 0)] - s / (n * n)).abs() < 1e-14);
    }

    #[test]
    fn cap_is_enforced() {
        let d = design_points_from_density(&uniform(11), 20).unwrap();
        let m = CorrelationModel::cauchy(0.5, 1.0).unwrap();
        assert!(matches!(
            exact_lse_covariance(BasisSet::Location, &d, &m, 1.0, true, 10),
            Err(DesignError::CapExceeded { .. })
        ));
    }

    #[test]
    fn degenerate_white_noise_report() {
        let m = CorrelationModel::cauchy(0.5, 1.0).unwrap();
        let r = convergence_report(BasisSet::Location, &uniform(201), &m, 0.0, &[50, 200, 800], DEFAULT_CAP).unwrap();
        assert!(r.degenerate);
        assert!(r.strictly_decreasing());
        // scaled white noise is N/d · 1/N = 1/d
        for (e, d) in r.errors.iter().zip(&r.d_alpha) {
            assert!((e - 1.0 / d).abs() < 1e-12);
        }
    }
}
