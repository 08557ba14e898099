//! Published reference values used as golden data. All rows are for the
//! regression through the origin on `[−1, 1]`, printed to two decimals.

/// Long-range optimal designs: `(α, μ, τ, √(τ/μ), efficiency of uniform)`.
pub const LONG_RANGE_DESIGNS: [(f64, f64, f64, f64, f64); 5] = [
    (0.05, 2.34, 1.06, 0.67, 0.40),
    (0.25, 3.19, 0.96, 0.55, 0.59),
    (0.50, 4.32, 0.70, 0.40, 0.78),
    (0.75, 6.84, 0.44, 0.25, 0.93),
    (0.95, 24.78, 0.25, 0.10, 0.99),
];

/// Exponents of the maximin set and the efficiencies of the polynomial
/// maximin approximation at each.
pub const MAXIMIN_ALPHAS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
pub const MAXIMIN_PROFILE: [f64; 9] = [0.84, 0.92, 0.97, 0.99, 0.99, 0.97, 0.94, 0.89, 0.84];

/// Short-range optimal designs: `(λ, γ, μ, τ, √(τ/μ), efficiency of uniform)`.
pub const SHORT_RANGE_DESIGNS: [(f64, f64, f64, f64, f64, f64); 5] = [
    (0.5, 0.5, 3.41, 0.32, 0.30, 0.89),
    (0.5, 0.1, 9.82, 3.23, 0.57, 0.63),
    (0.5, 0.9, 2.38, 0.08, 0.18, 0.97),
    (0.1, 0.5, 12.70, 0.22, 0.13, 0.99),
    (2.5, 0.5, 1.45, 0.54, 0.61, 0.57),
];

/// Exponents of the cross-efficiency grids.
pub const CROSS_ALPHAS: [f64; 5] = [0.05, 0.25, 0.50, 0.75, 0.95];

/// Efficiency of the short-range optimum (row, in `SHORT_RANGE_DESIGNS`
/// order) when the true correlation is long-range with exponent
/// `CROSS_ALPHAS[col]`.
pub const SR_DESIGN_UNDER_LR: [[f64; 5]; 5] = [
    [0.62, 0.82, 0.96, 1.00, 0.97],
    [0.81, 0.97, 0.99, 0.89, 0.77],
    [0.53, 0.73, 0.90, 0.99, 1.00],
    [0.50, 0.70, 0.88, 0.98, 1.00],
    [0.81, 0.97, 0.98, 0.89, 0.77],
];

/// Efficiency of the long-range optimum for `CROSS_ALPHAS[row]` when the
/// true correlation is the short-range context `SHORT_RANGE_DESIGNS[col]`.
pub const LR_DESIGN_UNDER_SR: [[f64; 5]; 5] = [
    [0.19, 0.40, 0.15, 0.15, 0.35],
    [0.69, 0.94, 0.59, 0.58, 0.93],
    [0.94, 0.98, 0.87, 0.86, 0.98],
    [1.00, 0.88, 0.98, 0.98, 0.85],
    [0.95, 0.73, 0.99, 1.00, 0.68],
];
