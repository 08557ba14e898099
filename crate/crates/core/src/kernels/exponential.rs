//! Short-range kernel `Q(t) = Σ_{j≥1} e^{−λjt} = 1/(e^{λt} − 1)` and
//! `H(t) = Q(t) − tQ′(t)`.
//!
//! Everything is written in terms of `v = e^{−λt}` and `1 − v = −expm1(−λt)`,
//! which neither overflows for large `λt` nor cancels for small `λt`.

use crate::error::{domain, Result};

fn check(lambda: f64, t: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(domain(format!("rate lambda must be positive, got {lambda}")));
    }
    if !(t > 0.0) {
        return Err(domain(format!("short-range kernel argument must be positive, got {t}")));
    }
    Ok(())
}

pub fn q_shortrange(lambda: f64, t: f64) -> Result<f64> {
    check(lambda, t)?;
    Ok(q_unchecked(lambda, t))
}

pub fn h_shortrange(lambda: f64, t: f64) -> Result<f64> {
    check(lambda, t)?;
    Ok(h_unchecked(lambda, t))
}

/// Inverse of [`h_shortrange`]: the `t > 0` with `H(t) = y`.
pub fn h_shortrange_inv(lambda: f64, y: f64) -> Result<f64> {
    check(lambda, y)?;
    if !y.is_finite() {
        return Err(domain("short-range H inverse needs a finite level"));
    }
    Ok(h_inv_unchecked(lambda, y))
}

#[inline]
pub(crate) fn q_unchecked(lambda: f64, t: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let u = lambda * t;
    let v = (-u).exp();
    v / -(-u).exp_m1()
}

#[inline]
pub(crate) fn h_unchecked(lambda: f64, t: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let u = lambda * t;
    let v = (-u).exp();
    let w = -(-u).exp_m1();
    v / w + u * v / (w * w)
}

/// `H` falls from `+∞` at 0 to 0 at `∞`, so bracket by doubling/halving and
/// finish with safeguarded Newton steps (bisection whenever Newton leaves the
/// bracket).
pub(crate) fn h_inv_unchecked(lambda: f64, y: f64) -> f64 {
    // H(t) ≈ 2/(λt) for small λt and ≈ λt e^{−λt} for large λt
    let guess = if y >= 1.0 { 2.0 / (lambda * y) } else { (1.0 - y.ln()) / lambda };
    let (mut lo, mut hi) = (guess, guess);
    while h_unchecked(lambda, lo) < y {
        lo *= 0.5;
    }
    while h_unchecked(lambda, hi) > y {
        hi *= 2.0;
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..400 {
        let u = lambda * t;
        let v = (-u).exp();
        let w = -(-u).exp_m1();
        let h = v / w + u * v / (w * w);
        let r = h - y;
        if r.abs() <= 1e-14 * y {
            return t;
        }
        if r > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        // H'(t) = −t Q''(t); Q'' = λ² v(1+v)/w³
        let dh = -t * lambda * lambda * v * (1.0 + v) / (w * w * w);
        let newton = t - r / dh;
        t = if dh < 0.0 && newton > lo && newton < hi {
            newton
        } else if hi > 2.0 * lo {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if (hi - lo) <= 1e-16 * hi {
            return t;
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        assert!((q_shortrange(1.0, 2f64.ln()).unwrap() - 1.0).abs() < 1e-15);
        let direct: f64 = (1..=200).map(|j| (-0.5 * j as f64).exp()).sum();
        assert!((q_shortrange(0.5, 1.0).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn q_tail_is_monotone_and_overflow_safe() {
        let mut prev = f64::INFINITY;
        for k in 0..60 {
            let t = 0.5 * 1.8f64.powi(k);
            let q = q_shortrange(1.0, t).unwrap();
            assert!(q.is_finite() && q >= 0.0 && q <= prev);
            prev = q;
        }
        assert_eq!(q_shortrange(1.0, 1e6).unwrap(), 0.0);
        assert!(h_shortrange(3.0, 1e5).unwrap().is_finite());
    }

    #[test]
    fn h_matches_definition_by_finite_differences() {
        let (lambda, t) = (0.7, 1.3);
        let step = 1e-5;
        let dq = (q_unchecked(lambda, t + step) - q_unchecked(lambda, t - step)) / (2.0 * step);
        let h = q_unchecked(lambda, t) - t * dq;
        assert!((h_shortrange(lambda, t).unwrap() - h).abs() < 1e-8);
    }

    #[test]
    fn inverse_round_trip() {
        for &lambda in &[0.1, 0.5, 2.5] {
            for k in 0..=60 {
                let t = 1e-3 * 10f64.powf(k as f64 / 10.0);
                let y = h_unchecked(lambda, t);
                if y < 1e-250 {
                    continue;
                }
                let back = h_inv_unchecked(lambda, y);
                assert!((back - t).abs() <= 1e-12 * t, "lambda {lambda} t {t} back {back}");
            }
        }
    }

    #[test]
    fn domain_errors() {
        assert!(q_shortrange(1.0, 0.0).is_err());
        assert!(q_shortrange(0.0, 1.0).is_err());
        assert!(h_shortrange_inv(1.0, -2.0).is_err());
    }
}
