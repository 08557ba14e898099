//! Correlation families, the long-range limit kernel `Q_α`, the normalizing
//! sequence `d_α(N)` and the `H` functions that parameterize optimal
//! one-parameter densities.

use std::fmt;
use std::sync::Arc;

use statrs::function::gamma::gamma;

use crate::error::{domain, Result};

pub mod exponential;
pub mod mittag_leffler;

pub use exponential::{h_shortrange, h_shortrange_inv, q_shortrange};
pub use mittag_leffler::{ml_eval, MlRegime};

/// A slowly varying function `L` modulating a power-law tail. The label
/// states what `L` is so that reports stay reproducible.
#[derive(Clone)]
pub struct SlowlyVarying {
    label: String,
    func: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl SlowlyVarying {
    /// `L ≡ 1`.
    pub fn unit() -> Self {
        Self::custom("1", |_| 1.0)
    }

    /// `L(t) = ln(e + t)^k`.
    pub fn log_power(k: f64) -> Self {
        Self::custom(format!("ln(e+t)^{k}"), move |t| (std::f64::consts::E + t).ln().powf(k))
    }

    pub fn custom(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            func: Arc::new(f),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.func)(t)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_unit(&self) -> bool {
        self.label == "1"
    }
}

impl Default for SlowlyVarying {
    fn default() -> Self {
        Self::unit()
    }
}

impl fmt::Debug for SlowlyVarying {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SlowlyVarying({})", self.label)
    }
}

/// Error correlation function `ρ`, a function of `|t|` with `ρ(0) = 1`.
#[derive(Debug, Clone)]
pub enum CorrelationModel {
    /// `(1 + |t|^β)^{−α/β}`
    Cauchy { alpha: f64, beta: f64 },
    /// `E_{ν,β}(−|t|^α)`
    MittagLeffler { alpha: f64, nu: f64, beta: f64 },
    /// `min(1, L(|t|)/|t|^α)`; the clip only changes `ρ` near the origin.
    Svf { alpha: f64, svf: SlowlyVarying },
    /// `e^{−λ|t|}`, short-range.
    Exponential { lambda: f64 },
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(domain(format!("decay exponent alpha must lie in (0, 1], got {alpha}")))
    }
}

impl CorrelationModel {
    pub fn cauchy(alpha: f64, beta: f64) -> Result<Self> {
        let m = Self::Cauchy { alpha, beta };
        m.validate()?;
        Ok(m)
    }

    pub fn mittag_leffler(alpha: f64, nu: f64, beta: f64) -> Result<Self> {
        let m = Self::MittagLeffler { alpha, nu, beta };
        m.validate()?;
        Ok(m)
    }

    pub fn svf(alpha: f64, svf: SlowlyVarying) -> Result<Self> {
        let m = Self::Svf { alpha, svf };
        m.validate()?;
        Ok(m)
    }

    pub fn exponential(lambda: f64) -> Result<Self> {
        let m = Self::Exponential { lambda };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Cauchy { alpha, beta } => {
                check_alpha(*alpha)?;
                if !(*beta > 0.0) || !beta.is_finite() {
                    return Err(domain(format!("Cauchy shape beta must be positive, got {beta}")));
                }
            }
            Self::MittagLeffler { alpha, nu, beta } => {
                check_alpha(*alpha)?;
                if !(*nu > 0.0 && *nu <= 1.0) {
                    return Err(domain(format!("Mittag-Leffler nu must lie in (0, 1], got {nu}")));
                }
                if !(*beta >= *nu) || !beta.is_finite() {
                    return Err(domain(format!("Mittag-Leffler beta must satisfy beta >= nu, got {beta}")));
                }
            }
            Self::Svf { alpha, svf } => {
                check_alpha(*alpha)?;
                for t in [1.0, 10.0, 1e3, 1e6] {
                    let l = svf.eval(t);
                    if !(l > 0.0) || !l.is_finite() {
                        return Err(domain(format!(
                            "slowly varying function {} must be positive and finite, L({t}) = {l}",
                            svf.label()
                        )));
                    }
                }
            }
            Self::Exponential { lambda } => {
                if !(*lambda > 0.0) || !lambda.is_finite() {
                    return Err(domain(format!("rate lambda must be positive, got {lambda}")));
                }
            }
        }
        Ok(())
    }

    pub fn alpha(&self) -> Option<f64> {
        match self {
            Self::Cauchy { alpha, .. } | Self::MittagLeffler { alpha, .. } | Self::Svf { alpha, .. } => Some(*alpha),
            Self::Exponential { .. } => None,
        }
    }

    pub fn is_long_range(&self) -> bool {
        match self {
            Self::Exponential { .. } => false,
            Self::MittagLeffler { nu, beta, .. } => !(*nu == 1.0 && *beta == 1.0) && *beta > *nu,
            _ => true,
        }
    }

    /// `ρ(t)` for a validated model.
    pub fn rho(&self, t: f64) -> f64 {
        let t = t.abs();
        if t == 0.0 {
            return 1.0;
        }
        match self {
            Self::Cauchy { alpha, beta } => (1.0 + t.powf(*beta)).powf(-alpha / beta),
            Self::MittagLeffler { alpha, nu, beta } => {
                mittag_leffler::ml_eval(*nu, *beta, t.powf(*alpha)).expect("validated Mittag-Leffler orders")
            }
            Self::Svf { alpha, svf } => (svf.eval(t) / t.powf(*alpha)).min(1.0),
            Self::Exponential { lambda } => (-lambda * t).exp(),
        }
    }

    /// The limit kernel `Q_α` of this family; an error for short-range models.
    pub fn limit_kernel(&self) -> Result<LimitKernel> {
        self.validate()?;
        match self {
            Self::Cauchy { alpha, .. } | Self::Svf { alpha, .. } => LimitKernel::new(*alpha, 1.0),
            Self::MittagLeffler { alpha, nu, beta } => {
                if !self.is_long_range() {
                    return Err(domain(format!(
                        "Mittag-Leffler orders (nu, beta) = ({nu}, {beta}) give no long-range limit"
                    )));
                }
                LimitKernel::new(*alpha, gamma(*beta) / gamma(beta - nu))
            }
            Self::Exponential { .. } => Err(domain("the exponential family is short-range; no Q_alpha")),
        }
    }
}

/// `ρ(t)` with validation of the model.
pub fn rho_eval(model: &CorrelationModel, t: f64) -> Result<f64> {
    model.validate()?;
    if t.is_nan() {
        return Err(domain("correlation argument is NaN"));
    }
    Ok(model.rho(t))
}

/// Normalizing sequence `d_α(N)`.
pub fn d_norm(model: &CorrelationModel, n: u64) -> Result<f64> {
    model.validate()?;
    if n == 0 {
        return Err(domain("N must be at least 1"));
    }
    let nf = n as f64;
    let base = |alpha: f64| if alpha < 1.0 { nf.powf(1.0 - alpha) } else { nf.ln() };
    match model {
        CorrelationModel::Cauchy { alpha, .. } | CorrelationModel::MittagLeffler { alpha, .. } => Ok(base(*alpha)),
        CorrelationModel::Svf { alpha, svf } => Ok(svf.eval(nf) * base(*alpha)),
        CorrelationModel::Exponential { .. } => Err(domain("no long-range normalizer for the exponential family")),
    }
}

/// `Q_α(t) = c/((1−α)|t|^α)`, or `c/|t|` for `α = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitKernel {
    alpha: f64,
    c: f64,
}

impl LimitKernel {
    pub fn new(alpha: f64, c: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(c > 0.0) || !c.is_finite() {
            return Err(domain(format!("kernel constant c must be positive, got {c}")));
        }
        Ok(Self { alpha, c })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Same exponent, constant multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        Self::new(self.alpha, self.c * k)
    }

    fn is_log(&self) -> bool {
        self.alpha == 1.0
    }

    pub fn q(&self, t: f64) -> Result<f64> {
        if t == 0.0 || t.is_nan() {
            return Err(domain("Q_alpha diverges at t = 0"));
        }
        let t = t.abs();
        Ok(if self.is_log() {
            self.c / t
        } else {
            self.c / ((1.0 - self.alpha) * t.powf(self.alpha))
        })
    }

    /// `H_α(t) = Q_α(t) − tQ′_α(t)`.
    pub fn h(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(domain(format!("H_alpha needs a positive argument, got {t}")));
        }
        Ok(if self.is_log() {
            2.0 * self.c / t
        } else {
            self.c * (1.0 + self.alpha) / ((1.0 - self.alpha) * t.powf(self.alpha))
        })
    }

    pub fn h_inv(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(domain(format!("H_alpha inverse needs a positive argument, got {y}")));
        }
        Ok(if self.is_log() {
            2.0 * self.c / y
        } else {
            (self.c * (1.0 + self.alpha) / ((1.0 - self.alpha) * y)).powf(1.0 / self.alpha)
        })
    }
}

/// How a design density enters the asymptotic covariance of the
/// least-squares estimate. The covariance proxy is `W⁻¹ K W⁻¹` with
/// `K = κ W + ∫ f fᵀ Q(1/φ) φ`, where `κ` is [`white_weight`](Self::white_weight).
pub trait AsymptoticKernel: Send + Sync {
    fn white_weight(&self) -> f64 {
        0.0
    }

    /// `Q(1/φ) φ`, extended continuously by 0 at `φ = 0`.
    fn rate(&self, phi: f64) -> f64;

    /// `d/dφ [Q(1/φ) φ] = H(1/φ)`, 0 at `φ = 0`.
    fn marginal(&self, phi: f64) -> f64;

    /// The density value `φ = 1/H⁻(level)` solving `H(1/φ) = level`; 0 for
    /// nonpositive levels.
    fn density_at_level(&self, level: f64) -> f64;

    /// True when the one-parameter optimum is uniform for every regression
    /// function (the `H` map is linear in `φ`).
    fn collapses_to_uniform(&self) -> bool {
        false
    }
}

impl AsymptoticKernel for LimitKernel {
    fn rate(&self, phi: f64) -> f64 {
        if phi <= 0.0 {
            0.0
        } else if self.is_log() {
            self.c * phi * phi
        } else {
            self.c / (1.0 - self.alpha) * phi.powf(1.0 + self.alpha)
        }
    }

    fn marginal(&self, phi: f64) -> f64 {
        if phi <= 0.0 {
            0.0
        } else if self.is_log() {
            2.0 * self.c * phi
        } else {
            self.c * (1.0 + self.alpha) / (1.0 - self.alpha) * phi.powf(self.alpha)
        }
    }

    fn density_at_level(&self, level: f64) -> f64 {
        if level <= 0.0 {
            0.0
        } else if self.is_log() {
            level / (2.0 * self.c)
        } else {
            ((1.0 - self.alpha) * level / (self.c * (1.0 + self.alpha))).powf(1.0 / self.alpha)
        }
    }

    fn collapses_to_uniform(&self) -> bool {
        self.is_log()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rho_examples() {
        let c = CorrelationModel::cauchy(0.5, 1.0).unwrap();
        assert!((c.rho(3.0) - 0.5).abs() < 1e-15);
        assert_eq!(CorrelationModel::cauchy(0.5, 2.0).unwrap().rho(0.0), 1.0);
        let e = CorrelationModel::exponential(0.5).unwrap();
        assert!((e.rho(2.0) - (-1.0f64).exp()).abs() < 1e-15);
        let ml = CorrelationModel::mittag_leffler(1.0, 1.0, 1.0).unwrap();
        assert!((ml.rho(-2.0) - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn svf_clip_and_tail() {
        let m = CorrelationModel::svf(0.5, SlowlyVarying::unit()).unwrap();
        assert_eq!(m.rho(0.25), 1.0);
        assert!((m.rho(4.0) - 0.5).abs() < 1e-15);
        let bad = CorrelationModel::svf(0.5, SlowlyVarying::custom("-1", |_| -1.0));
        assert!(bad.is_err());
    }

    #[test]
    fn invalid_models() {
        assert!(CorrelationModel::cauchy(0.0, 1.0).is_err());
        assert!(CorrelationModel::cauchy(1.5, 1.0).is_err());
        assert!(CorrelationModel::cauchy(0.5, 0.0).is_err());
        assert!(CorrelationModel::mittag_leffler(0.5, 0.5, 0.2).is_err());
        assert!(CorrelationModel::exponential(-1.0).is_err());
        assert!(rho_eval(&CorrelationModel::Cauchy { alpha: 2.0, beta: 1.0 }, 1.0).is_err());
    }

    #[test]
    fn q_alpha_examples() {
        let k = LimitKernel::new(0.5, 1.0).unwrap();
        assert!((k.q(1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(k.q(0.0).is_err());
        let ml = CorrelationModel::mittag_leffler(1.0, 0.5, 1.0).unwrap();
        let k1 = ml.limit_kernel().unwrap();
        assert!((k1.c() - 1.0 / PI.sqrt()).abs() < 1e-15);
        assert!((k1.q(2.0).unwrap() - 0.282_094_791_773_878_1).abs() < 1e-12);
    }

    #[test]
    fn limit_kernel_rejects_short_range() {
        assert!(CorrelationModel::exponential(1.0).unwrap().limit_kernel().is_err());
        assert!(CorrelationModel::mittag_leffler(0.5, 1.0, 1.0).unwrap().limit_kernel().is_err());
        assert!(CorrelationModel::mittag_leffler(0.5, 0.5, 0.5).unwrap().limit_kernel().is_err());
        let k = CorrelationModel::mittag_leffler(0.5, 1.0, 2.0).unwrap().limit_kernel().unwrap();
        assert!((k.c() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn d_norm_examples() {
        let c = CorrelationModel::cauchy(0.5, 1.0).unwrap();
        assert!((d_norm(&c, 100).unwrap() - 10.0).abs() < 1e-12);
        let c1 = CorrelationModel::cauchy(1.0, 1.0).unwrap();
        assert!((d_norm(&c1, 20).unwrap() - 20f64.ln()).abs() < 1e-15);
        assert!((d_norm(&c1, 20).unwrap() - 2.9957).abs() < 1e-4);
        let s = CorrelationModel::svf(0.5, SlowlyVarying::unit()).unwrap();
        assert!((d_norm(&s, 400).unwrap() - 20.0).abs() < 1e-12);
        assert!(d_norm(&CorrelationModel::exponential(1.0).unwrap(), 10).is_err());
    }

    #[test]
    fn h_examples() {
        let k = LimitKernel::new(0.5, 1.0).unwrap();
        assert!((k.h(1.0).unwrap() - 3.0).abs() < 1e-15);
        assert!((k.h_inv(3.0).unwrap() - 1.0).abs() < 1e-15);
        let k1 = LimitKernel::new(1.0, 1.0).unwrap();
        assert!((k1.h(4.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(k.h(0.0).is_err());
        assert!(k.h_inv(-1.0).is_err());
    }

    #[test]
    fn h_is_q_minus_t_q_prime() {
        let k = LimitKernel::new(0.3, 1.7).unwrap();
        let t = 0.8;
        let step = 1e-6;
        let dq = (k.q(t + step).unwrap() - k.q(t - step).unwrap()) / (2.0 * step);
        assert!((k.h(t).unwrap() - (k.q(t).unwrap() - t * dq)).abs() < 1e-7);
    }

    #[test]
    fn kernel_trait_consistency() {
        for &(alpha, c) in &[(0.25, 1.0), (0.5, 2.0), (1.0, 0.7)] {
            let k = LimitKernel::new(alpha, c).unwrap();
            for &phi in &[0.1, 0.5, 1.3] {
                assert!((k.rate(phi) - k.q(1.0 / phi).unwrap() * phi).abs() < 1e-13);
                assert!((k.marginal(phi) - k.h(1.0 / phi).unwrap()).abs() < 1e-12);
                let level = k.marginal(phi);
                assert!((k.density_at_level(level) - phi).abs() < 1e-12);
            }
            assert_eq!(k.rate(0.0), 0.0);
            assert_eq!(k.density_at_level(-1.0), 0.0);
        }
    }
}
