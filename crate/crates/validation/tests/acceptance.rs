//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::time::{Duration, Instant};

use lrd_design::design::{BasisSet, Criterion, DesignDensity, Grid};
use lrd_design::kernels::{d_norm, ml_eval, CorrelationModel, LimitKernel};
use lrd_design::oneparam::{optimality_check, solve_one_param, SolverOptions};
use lrd_design::optimizer::{
    gradient_check, maximin_design, maximin_polynomial_density, optimize_density, MaximinProblem, OptimizerOptions,
};
use lrd_design::quad::integrate;
use lrd_design::reference;
use lrd_design::tables::{table1, table2, table3, table4, table5, TableReport};
use lrd_design::verify::{convergence_report, DEFAULT_CAP};

struct Outcome {
    pass: bool,
    detail: String,
}

fn grid() -> Grid {
    Grid::with_default_size(1.0).unwrap()
}

fn table_outcome(reports: &[TableReport]) -> (bool, String) {
    let mut pass = true;
    let mut parts = Vec::new();
    for r in reports {
        let bad: Vec<String> = r
            .diffs
            .iter()
            .filter(|d| !d.ok())
            .map(|d| format!("{} {}: {:.4} vs {}", d.row, d.column, d.computed, d.reference))
            .collect();
        pass &= bad.is_empty();
        parts.push(format!("table {} max dev {:.4}", r.id, r.max_deviation()));
        parts.extend(bad);
    }
    (pass, parts.join("; "))
}

fn criterion_1() -> Outcome {
    let r = table1(&grid(), &SolverOptions::default()).unwrap();
    let (pass, detail) = table_outcome(&[r]);
    Outcome { pass, detail }
}

fn criterion_2() -> Outcome {
    let g = grid();
    let r = table2(&g, &SolverOptions::default()).unwrap();
    let (table_ok, mut detail) = table_outcome(&[r]);
    let opts = OptimizerOptions::default();
    let problem = MaximinProblem::new(
        &reference::MAXIMIN_ALPHAS,
        BasisSet::ThroughOrigin,
        Criterion::Single,
        &g,
        &SolverOptions::default(),
        &opts,
    )
    .unwrap();
    let poly_min = problem
        .profile(&maximin_polynomial_density(&g).unwrap())
        .unwrap()
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let m = maximin_design(&problem, &g, &opts).unwrap();
    let monotone = m.trace.windows(2).all(|w| w[1].value >= w[0].value);
    let own_ok = m.min_efficiency >= 0.83 && m.min_efficiency >= poly_min - 0.01;
    detail.push_str(&format!(
        "; maximin min efficiency {:.4} (polynomial {:.4}), trace monotone {monotone}",
        m.min_efficiency, poly_min
    ));
    Outcome {
        pass: table_ok && own_ok && monotone,
        detail,
    }
}

fn criterion_3() -> Outcome {
    let r = table3(&grid(), &SolverOptions::default()).unwrap();
    let (pass, detail) = table_outcome(&[r]);
    Outcome { pass, detail }
}

fn criterion_4() -> Outcome {
    let g = grid();
    let opts = SolverOptions::default();
    let (a, b) = rayon::join(|| table4(&g, &opts).unwrap(), || table5(&g, &opts).unwrap());
    let (pass, detail) = table_outcome(&[a, b]);
    Outcome { pass, detail }
}

fn criterion_5() -> Outcome {
    let g = grid();
    let model = CorrelationModel::cauchy(0.5, 1.0).unwrap();
    let phi = DesignDensity::uniform(g);
    let r = convergence_report(BasisSet::Location, &phi, &model, 1.0, &[200, 800, 3200], DEFAULT_CAP).unwrap();
    let target = 2.0 * 2f64.sqrt();
    let limit_ok = (r.predicted[(0, 0)] - target).abs() < 1e-12;
    let scaled: Vec<String> = r.scaled.iter().map(|s| format!("{:.4}", s[(0, 0)])).collect();
    Outcome {
        pass: limit_ok && r.strictly_decreasing() && r.halved(),
        detail: format!(
            "target {target:.4}; scaled [{}]; rel errors {:?}; strictly decreasing {}; final <= half initial {}",
            scaled.join(", "),
            r.errors.iter().map(|e| format!("{e:.4}")).collect::<Vec<_>>(),
            r.strictly_decreasing(),
            r.halved()
        ),
    }
}

fn criterion_6() -> Outcome {
    let mut worst_exp = 0.0f64;
    let mut worst_e12 = 0.0f64;
    for k in 0..=3000 {
        let t = k as f64 * 0.01;
        let e = (-t).exp();
        worst_exp = worst_exp.max((ml_eval(1.0, 1.0, t).unwrap() - e).abs() / e);
        if t > 0.0 {
            let v = -(-t).exp_m1() / t;
            worst_e12 = worst_e12.max((ml_eval(1.0, 2.0, t).unwrap() - v).abs() / v);
        }
    }
    let erf_part = integrate(|u: f64| (-u * u).exp(), 0.0, 1.0, 1e-16, 1e-15, 100).value;
    let oracle = 1f64.exp() * (1.0 - 2.0 / std::f64::consts::PI.sqrt() * erf_part);
    let half = ml_eval(0.5, 1.0, 1.0).unwrap();
    let err_half = (half - oracle).abs() / oracle;
    Outcome {
        pass: worst_exp <= 1e-10 && worst_e12 <= 1e-10 && err_half <= 1e-8,
        detail: format!("E11 rel {worst_exp:.2e}; E12 rel {worst_e12:.2e}; E(1/2,1)(-1) rel {err_half:.2e}"),
    }
}

fn criterion_7() -> Outcome {
    let model = CorrelationModel::cauchy(0.5, 1.0).unwrap();
    let q = LimitKernel::new(0.5, 1.0).unwrap().q(1.0).unwrap();
    let err = |n: u64| {
        let s: f64 = (1..=n).map(|j| model.rho(j as f64)).sum();
        (s / d_norm(&model, n).unwrap() / q - 1.0).abs()
    };
    let (e3, e5) = (err(1_000), err(100_000));
    Outcome {
        pass: e5 < e3,
        detail: format!("|ratio - 1| at 1e3 {e3:.3e}, at 1e5 {e5:.3e}"),
    }
}

fn criterion_8() -> Outcome {
    let g = grid();
    let solver = SolverOptions::default();
    let k = LimitKernel::new(0.5, 1.0).unwrap();
    let closed = solve_one_param(BasisSet::ThroughOrigin, &k, &g, &solver).unwrap();
    let opt = optimize_density(BasisSet::Linear, Criterion::Slope, &k, &g, &OptimizerOptions::default()).unwrap();
    let sup = opt.density.sup_distance(&closed.density);

    let mut worst_check = 0.0f64;
    for &(a, ..) in &reference::LONG_RANGE_DESIGNS {
        let k = LimitKernel::new(a, 1.0).unwrap();
        let s = solve_one_param(BasisSet::ThroughOrigin, &k, &g, &solver).unwrap();
        worst_check = worst_check.max(optimality_check(&s.density, BasisSet::ThroughOrigin, &k, s.mu, s.tau).unwrap());
    }

    let probe = DesignDensity::from_fn(g.clone(), |t| 0.3 + (t - 0.2).powi(2)).unwrap();
    let nodes: Vec<usize> = (0..g.n()).step_by(97).collect();
    let mut worst_grad = 0.0f64;
    for crit in [Criterion::D, Criterion::Slope] {
        for &a in &[0.25, 0.75] {
            let k = LimitKernel::new(a, 1.0).unwrap();
            worst_grad = worst_grad.max(gradient_check(BasisSet::Linear, crit, &k, &probe, &nodes).unwrap());
        }
    }
    Outcome {
        pass: sup <= 1e-3 && worst_check <= 1e-6 && worst_grad <= 1e-5 && opt.converged,
        detail: format!(
            "slope design sup-norm {sup:.2e} ({} iterations); optimality residual {worst_check:.2e}; gradient rel {worst_grad:.2e}",
            opt.iterations
        ),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 8] = [
        ("through-origin long-range designs", criterion_1, Duration::from_secs(10)),
        ("maximin efficiencies", criterion_2, Duration::from_secs(120)),
        ("short-range designs", criterion_3, Duration::from_secs(10)),
        ("cross efficiencies", criterion_4, Duration::from_secs(120)),
        ("finite-N covariance convergence", criterion_5, Duration::from_secs(60)),
        ("special functions", criterion_6, Duration::from_secs(5)),
        ("partial-sum limit", criterion_7, Duration::from_secs(5)),
        ("optimizer oracle equivalence", criterion_8, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let pass = out.pass && elapsed <= *budget;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {}: {} {name} [{:.2}s of {}s] {}",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs(),
            out.detail
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
