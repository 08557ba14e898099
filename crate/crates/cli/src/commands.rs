use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};

use lrd_design::design::{criterion_value, efficiency as design_efficiency, Criterion, DesignDensity, Grid};
use lrd_design::kernels::{ml_eval, rho_eval, AsymptoticKernel, CorrelationModel};
use lrd_design::oneparam::{solve_one_param, FixedPointSolution, SolveMethod};
use lrd_design::optimizer::{maximin_design, optimize_density, MaximinProblem, OptimizerOptions, TraceRow};
use lrd_design::shortrange::ShortRangeContext;
use lrd_design::tables;
use lrd_design::verify::convergence_report;
use lrd_design::DesignError;

use crate::config::{resolve, Globals, Overrides, Resolved};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn out_dir(r: &Resolved) -> Result<&Path> {
    fs::create_dir_all(&r.out).with_context(|| format!("creating output directory {}", r.out.display()))?;
    Ok(&r.out)
}

fn write_density(dir: &Path, name: &str, d: &DesignDensity) -> Result<()> {
    let mut w = create(dir, name)?;
    d.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn write_trace(dir: &Path, trace: &[TraceRow]) -> Result<()> {
    let mut w = create(dir, "trace.csv")?;
    writeln!(w, "iteration,value,violation,step")?;
    for row in trace {
        writeln!(w, "{},{},{},{}", row.iteration, num(row.value), num(row.violation), num(row.step))?;
    }
    w.flush()?;
    Ok(())
}

/// The asymptotic kernel of a validated run.
fn kernel_for(r: &Resolved) -> Result<Box<dyn AsymptoticKernel>> {
    match &r.model {
        CorrelationModel::Exponential { lambda } => {
            let ctx = ShortRangeContext::new(*lambda, r.gamma).context("model")?;
            Ok(Box::new(ctx))
        }
        m => Ok(Box::new(m.limit_kernel().context("model")?)),
    }
}

fn optimizer_options(r: &Resolved) -> OptimizerOptions {
    OptimizerOptions {
        symmetric: r.symmetric,
        seed: r.seed,
        restarts: r.restarts,
        max_iter: r.max_iter.unwrap_or(OptimizerOptions::default().max_iter),
        ..OptimizerOptions::default()
    }
}

fn method_name(m: SolveMethod) -> &'static str {
    match m {
        SolveMethod::ClosedForm => "closed_form",
        SolveMethod::Broyden => "broyden",
        SolveMethod::Picard => "picard",
    }
}

fn write_solution(dir: &Path, s: &FixedPointSolution) -> Result<()> {
    let mut w = create(dir, "solution.csv")?;
    writeln!(w, "mu,tau,edge,residual,iterations,method")?;
    writeln!(
        w,
        "{},{},{},{},{},{}",
        num(s.mu),
        num(s.tau),
        num(s.edge()),
        num(s.residual_norm),
        s.iterations,
        method_name(s.method)
    )?;
    w.flush()?;
    Ok(())
}

pub fn density(g: &Globals, o: &Overrides) -> Result<i32> {
    let r = resolve(g, o)?;
    let kernel = kernel_for(&r)?;
    if r.basis.dim() == 1 {
        let (solution, status) = match solve_one_param(r.basis, kernel.as_ref(), &r.grid, &r.solver) {
            Ok(s) => (s, EXIT_OK),
            Err(DesignError::NotConverged {
                best: Some(best),
                iterations,
                residual,
            }) => {
                eprintln!("warning: solver stopped after {iterations} iterations with residual {residual:.3e}");
                (*best, EXIT_NOT_CONVERGED)
            }
            Err(e) => return Err(e).context("solving for the optimal density"),
        };
        let dir = out_dir(&r)?;
        write_density(dir, "density.csv", &solution.density)?;
        write_solution(dir, &solution)?;
        println!(
            "mu = {:.6}, tau = {:.6}, edge = {:.6}, residual = {:.3e}",
            solution.mu,
            solution.tau,
            solution.edge(),
            solution.residual_norm
        );
        return Ok(status);
    }
    let opt = optimize_density(r.basis, r.criterion, kernel.as_ref(), &r.grid, &optimizer_options(&r))
        .context("optimizing the design density")?;
    let dir = out_dir(&r)?;
    write_density(dir, "density.csv", &opt.density)?;
    write_trace(dir, &opt.trace)?;
    let mut w = create(dir, "solution.csv")?;
    writeln!(w, "criterion,value,violation,iterations,converged")?;
    writeln!(
        w,
        "{},{},{},{},{}",
        r.criterion,
        num(opt.value),
        num(opt.violation),
        opt.iterations,
        opt.converged
    )?;
    w.flush()?;
    if !opt.restarts.is_empty() {
        let mut w = create(dir, "restarts.csv")?;
        writeln!(w, "index,value,violation,distance_to_output")?;
        for s in &opt.restarts {
            writeln!(w, "{},{},{},{}", s.index, num(s.value), num(s.violation), num(s.distance_to_output))?;
        }
        w.flush()?;
    }
    println!(
        "{} criterion = {:.8}, stationarity violation = {:.3e}, iterations = {}",
        r.criterion, opt.value, opt.violation, opt.iterations
    );
    Ok(if opt.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

pub fn table(g: &Globals, id: u8) -> Result<i32> {
    ensure!((1..=5).contains(&id), "table id must be 1 to 5, got {id}");
    let mut r = resolve(g, &Overrides::default())?;
    r.grid = Grid::new(1.0, r.grid.n()).context("grid")?;
    let report = tables::table(id, &r.grid, &r.solver).with_context(|| format!("computing table {id}"))?;
    let dir = out_dir(&r)?;
    let mut w = create(dir, &format!("table{id}.csv"))?;
    report.write_csv(&mut w)?;
    w.flush()?;
    let mut w = create(dir, &format!("table{id}_diff.csv"))?;
    report.write_diff_csv(&mut w)?;
    w.flush()?;
    let bad = report.diffs.iter().filter(|d| !d.ok()).count();
    println!(
        "table {id}: {} cells, {bad} outside tolerance, max deviation {:.4}",
        report.diffs.len(),
        report.max_deviation()
    );
    Ok(if bad == 0 { EXIT_OK } else { EXIT_CHECK_FAILED })
}

pub fn verify(g: &Globals, o: &Overrides, n: &[usize], design: Option<&Path>, cap: usize) -> Result<i32> {
    let r = resolve(g, o)?;
    ensure!(r.model.is_long_range(), "verify needs a long-range model");
    r.model.limit_kernel().context("model")?;
    ensure!(
        !n.is_empty() && n.windows(2).all(|w| w[0] < w[1]),
        "--n must be a nonempty strictly increasing list"
    );
    if let Some(&big) = n.iter().find(|&&x| x > cap) {
        bail!("--n: {big} exceeds the cap of {cap}");
    }
    let phi = match design {
        Some(p) => DesignDensity::read_csv_file(p).with_context(|| format!("reading {}", p.display()))?,
        None => DesignDensity::uniform(r.grid.clone()),
    };
    let report = convergence_report(r.basis, &phi, &r.model, r.gamma, n, cap).context("finite-N comparison")?;
    let dir = out_dir(&r)?;
    let mut w = create(dir, "convergence.csv")?;
    report.write_csv(&mut w)?;
    w.flush()?;

    let p = report.predicted.nrows();
    let mut w = create(dir, "covariance.csv")?;
    writeln!(w, "N,i,j,scaled,predicted")?;
    for (nv, s) in report.n_values.iter().zip(&report.scaled) {
        for i in 0..p {
            for j in 0..p {
                writeln!(w, "{nv},{i},{j},{},{}", num(s[(i, j)]), num(report.predicted[(i, j)]))?;
            }
        }
    }
    w.flush()?;

    if report.degenerate {
        println!("gamma = 0: white noise only, the prediction is 0 and errors are absolute");
    }
    for (nv, e) in report.n_values.iter().zip(&report.errors) {
        println!("N = {nv}: error {e:.4e}");
    }
    println!("fitted slope {:.4}", report.slope);
    let decreasing = report.strictly_decreasing();
    println!("strictly decreasing: {decreasing}");
    Ok(if decreasing { EXIT_OK } else { EXIT_CHECK_FAILED })
}

pub fn mlf(nu: f64, beta: f64, t: f64) -> Result<i32> {
    let v = ml_eval(nu, beta, t)?;
    println!("{}", num(v));
    Ok(EXIT_OK)
}

pub fn rho(g: &Globals, o: &Overrides, t: f64) -> Result<i32> {
    let r = resolve(g, o)?;
    println!("{}", num(rho_eval(&r.model, t)?));
    Ok(EXIT_OK)
}

/// `start:stop:step` or `a,b,c`.
pub fn parse_alphas(arg: &str) -> Result<Vec<f64>> {
    let parse = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .with_context(|| format!("--alphas: {s:?} is not a number"))
    };
    let parts: Vec<&str> = arg.split(':').collect();
    let alphas = match parts.as_slice() {
        [start, stop, step] => {
            let (a, b, h) = (parse(start)?, parse(stop)?, parse(step)?);
            ensure!(h > 0.0 && b >= a, "--alphas: need start <= stop and a positive step");
            let count = ((b - a) / h + 1e-9).floor() as usize + 1;
            ensure!(count <= 1000, "--alphas: {count} exponents is too many");
            (0..count)
                .map(|k| ((a + k as f64 * h) * 1e12).round() / 1e12)
                .collect()
        }
        [list] => list.split(',').map(parse).collect::<Result<Vec<_>>>()?,
        _ => bail!("--alphas: expected start:stop:step or a comma-separated list"),
    };
    ensure!(
        alphas.iter().all(|a| *a > 0.0 && *a < 1.0),
        "--alphas: every exponent must lie in (0, 1)"
    );
    Ok(alphas)
}

pub fn maximin(g: &Globals, o: &Overrides, alphas: &str) -> Result<i32> {
    let r = resolve(g, o)?;
    let alphas = parse_alphas(alphas)?;
    let opts = optimizer_options(&r);
    let problem = MaximinProblem::new(&alphas, r.basis, r.criterion, &r.grid, &r.solver, &opts)
        .context("per-exponent optima")?;
    let m = maximin_design(&problem, &r.grid, &opts).context("maximin optimization")?;
    let dir = out_dir(&r)?;
    write_density(dir, "density.csv", &m.density)?;
    write_trace(dir, &m.trace)?;
    let mut w = create(dir, "profile.csv")?;
    writeln!(w, "alpha,efficiency")?;
    for (a, e) in alphas.iter().zip(&m.profile) {
        writeln!(w, "{},{}", num(*a), num(*e))?;
    }
    w.flush()?;
    println!("minimum efficiency {:.4}", m.min_efficiency);
    for (a, e) in alphas.iter().zip(&m.profile) {
        println!("alpha = {a}: {e:.4}");
    }
    Ok(if m.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

pub fn efficiency(g: &Globals, o: &Overrides, design: &Path, reference: Option<&Path>) -> Result<i32> {
    let r = resolve(g, o)?;
    let kernel = kernel_for(&r)?;
    let p = DesignDensity::read_csv_file(design).with_context(|| format!("reading {}", design.display()))?;
    let reference = match reference {
        Some(path) => {
            let q = DesignDensity::read_csv_file(path).with_context(|| format!("reading {}", path.display()))?;
            ensure!(
                q.grid().n() == p.grid().n() && q.grid().half_width() == p.grid().half_width(),
                "design and reference must share one grid"
            );
            Some(q)
        }
        None => None,
    };
    criterion_value(r.basis, &p, kernel.as_ref(), r.criterion).context("design criterion")?;
    let reference = match reference {
        Some(q) => q,
        None if r.basis.dim() == 1 && r.criterion != Criterion::Slope => {
            solve_one_param(r.basis, kernel.as_ref(), p.grid(), &r.solver)
                .context("optimal reference density")?
                .density
        }
        None => {
            optimize_density(r.basis, r.criterion, kernel.as_ref(), p.grid(), &optimizer_options(&r))
                .context("optimal reference density")?
                .density
        }
    };
    let e = design_efficiency(&p, &reference, r.basis, kernel.as_ref(), r.criterion)?;
    println!("{}", num(e));
    Ok(EXIT_OK)
}
