//! Regeneration of the numerical tables as CSV.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::blockdata::{EhlcpProblem, Ehlcp2Problem};
use crate::bounds::{bound42, bound43};
use crate::linalg::{diff_norm, NormTag};
use crate::problems::{gen_example51, gen_example52, gen_example55, probe51, probe52};
use crate::solvers::{method32, method33, IterationConfig, KTag, ProjectionParams, SolveReport, SolveStatus};
use crate::transform::pls_residual;
use crate::{Error, Result};

pub const TABLE1_MU: [f64; 6] = [4.0, 6.0, 8.0, 10.0, 12.0, 14.0];
pub const TABLE1_GRID: usize = 100;
pub const TABLE2_MU: [f64; 3] = [5.0, 7.0, 9.0];
pub const TABLE2_GRID: [usize; 3] = [20, 40, 60];
pub const TABLE34_N: [usize; 4] = [30, 60, 90, 120];
pub const TABLE5_N: [usize; 4] = [5000, 10000, 15000, 20000];
pub const TABLE6_GRID: [usize; 4] = [80, 100, 130, 150];

pub const TABLE5_OMEGA: f64 = 4.0;
pub const TABLE6_OMEGA: f64 = 5.0;

/// Projection parameters shared by both iteration tables.
pub fn projection_params(n: usize) -> ProjectionParams {
    ProjectionParams::new(n, 0.5, 0.25, KTag::StrictLower)
}

/// True error and the two residual-based upper estimates at a probe.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BoundRow {
    pub mu: Option<f64>,
    pub n: usize,
    pub norm: NormTag,
    pub true_error: f64,
    pub residual: f64,
    pub eta: f64,
    pub tau: f64,
    pub eta_condition: bool,
    pub tau_condition: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct IterRow {
    pub method: &'static str,
    pub n: usize,
    pub iterations: usize,
    pub converged: bool,
    pub cpu_seconds: f64,
}

/// `‖y - y*‖`, `η̄‖r(y)‖` and `τ̄‖r(y)‖` in `norm`. The dominance constant is
/// a 1-norm quantity and is applied to the residual in `norm` as is.
pub fn bound_row(problem: &EhlcpProblem, y: &[f64], ystar: &[f64], norm: NormTag) -> Result<BoundRow> {
    let eta = bound42(&problem.blocks, norm)?;
    let tau = bound43(&problem.blocks);
    let r = pls_residual(problem, y).norm(norm);
    Ok(BoundRow {
        mu: None,
        n: problem.order(),
        norm,
        true_error: diff_norm(y, ystar, norm),
        residual: r,
        eta: eta.constant * r,
        tau: tau.constant * r,
        eta_condition: eta.condition_satisfied,
        tau_condition: tau.condition_satisfied,
    })
}

fn example51_row(grid: usize, mu: f64) -> Result<BoundRow> {
    let g = gen_example51(grid, mu, mu)?;
    let ystar = &g.prescribed.as_ref().expect("prescribed").y;
    let y = probe51(g.problem.order());
    Ok(BoundRow { mu: Some(mu), ..bound_row(&g.problem, &y, ystar, NormTag::Inf)? })
}

pub fn table1() -> Result<Vec<BoundRow>> {
    TABLE1_MU.par_iter().map(|&mu| example51_row(TABLE1_GRID, mu)).collect()
}

pub fn table2() -> Result<Vec<BoundRow>> {
    let cells: Vec<(f64, usize)> = TABLE2_MU.iter().flat_map(|&mu| TABLE2_GRID.iter().map(move |&g| (mu, g))).collect();
    cells.par_iter().map(|&(mu, grid)| example51_row(grid, mu)).collect()
}

fn example52_rows(norm: NormTag) -> Result<Vec<BoundRow>> {
    TABLE34_N
        .par_iter()
        .map(|&n| {
            let g = gen_example52(n)?.to_general();
            let y = probe52(n);
            bound_row(&g.problem, &y, &g.prescribed.as_ref().expect("prescribed").y, norm)
        })
        .collect()
}

pub fn table3() -> Result<Vec<BoundRow>> {
    example52_rows(NormTag::One)
}

pub fn table4() -> Result<Vec<BoundRow>> {
    example52_rows(NormTag::Inf)
}

fn protocol() -> IterationConfig {
    IterationConfig { tol: 1e-6, max_iter: 10_000, norm: NormTag::Inf, record_history: false }
}

fn iter_row(method: &'static str, report: SolveReport, n: usize, cpu: f64) -> IterRow {
    IterRow { method, n, iterations: report.iterations, converged: report.status == SolveStatus::Converged, cpu_seconds: cpu }
}

/// Both solvers from a zero start; rows are produced sequentially so the CPU
/// column is not distorted by concurrent work.
pub fn iteration_rows(problem: &Ehlcp2Problem, omega: f64) -> Result<[IterRow; 2]> {
    let n = problem.order();
    let cfg = protocol();
    let zero = vec![0.0; n];
    let t = Instant::now();
    let r2 = method32(problem, &vec![omega; n], &zero, &cfg)?;
    let c2 = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let r3 = method33(problem, &projection_params(n), &zero, &cfg)?;
    let c3 = t.elapsed().as_secs_f64();
    Ok([iter_row("M2", r2, n, c2), iter_row("M3", r3, n, c3)])
}

fn iteration_table(problems: impl Iterator<Item = Result<Ehlcp2Problem>>, omega: f64) -> Result<Vec<IterRow>> {
    let mut m2 = Vec::new();
    let mut m3 = Vec::new();
    for p in problems {
        let [a, b] = iteration_rows(&p?, omega)?;
        m2.push(a);
        m3.push(b);
    }
    m2.extend(m3);
    Ok(m2)
}

pub fn table5() -> Result<Vec<IterRow>> {
    iteration_table(TABLE5_N.iter().map(|&n| Ok(gen_example52(n)?.problem)), TABLE5_OMEGA)
}

pub fn table6() -> Result<Vec<IterRow>> {
    iteration_table(TABLE6_GRID.iter().map(|&g| Ok(gen_example55(g)?.problem)), TABLE6_OMEGA)
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn flags(r: &BoundRow) -> String {
    format!("eta:{},tau:{}", if r.eta_condition { "ok" } else { "violated" }, if r.tau_condition { "ok" } else { "violated" })
}

fn bound_csv(out: &mut String, rows: &[BoundRow], with_mu: bool, cols: &[(&str, fn(&BoundRow) -> f64)]) {
    let mut head: Vec<&str> = Vec::new();
    if with_mu {
        head.push("mu");
    }
    head.push("n");
    head.extend(cols.iter().map(|c| c.0));
    head.push("conditionFlags");
    writeln!(out, "{}", head.join(",")).unwrap();
    for r in rows {
        let mut cells = Vec::new();
        if with_mu {
            cells.push(format!("{}", r.mu.unwrap_or(f64::NAN)));
        }
        cells.push(r.n.to_string());
        cells.extend(cols.iter().map(|c| num(c.1(r))));
        cells.push(format!("\"{}\"", flags(r)));
        writeln!(out, "{}", cells.join(",")).unwrap();
    }
}

fn iter_csv(out: &mut String, rows: &[IterRow]) {
    writeln!(out, "method,n,IT,CPU,converged").unwrap();
    for r in rows {
        writeln!(out, "{},{},{},{},{}", r.method, r.n, r.iterations, num(r.cpu_seconds), r.converged).unwrap();
    }
}

/// CSV text for table `id` (1 to 6).
pub fn table_csv(id: u8) -> Result<String> {
    let mut out = String::new();
    let err = |r: &BoundRow| r.true_error;
    let eta = |r: &BoundRow| r.eta;
    let tau = |r: &BoundRow| r.tau;
    match id {
        1 => {
            writeln!(out, "# first example, n = {}, mu = nu, probe (-0.15, 0.056, ...)", TABLE1_GRID * TABLE1_GRID).unwrap();
            bound_csv(&mut out, &table1()?, true, &[("r_inf", err), ("eta_inf", eta), ("tau_inf", tau)]);
        }
        2 => {
            writeln!(out, "# first example, mu = nu; probe (-0.15, 0.056, ...) assumed as for table 1").unwrap();
            bound_csv(&mut out, &table2()?, true, &[("eta_inf", eta), ("tau_inf", tau)]);
        }
        3 => {
            writeln!(out, "# tridiagonal two-block example, probe (-0.1, 0.1, ...)").unwrap();
            bound_csv(&mut out, &table3()?, false, &[("r_1", err), ("tau_1", tau)]);
        }
        4 => {
            writeln!(out, "# tridiagonal two-block example, probe (-0.1, 0.1, ...)").unwrap();
            bound_csv(&mut out, &table4()?, false, &[("r_inf", err), ("eta_inf", eta)]);
        }
        5 => {
            writeln!(out, "# tridiagonal two-block example, omega = {TABLE5_OMEGA}, tol 1e-6, zero start").unwrap();
            iter_csv(&mut out, &table5()?);
        }
        6 => {
            writeln!(out, "# block tridiagonal two-block example, omega = {TABLE6_OMEGA}, tol 1e-6, zero start").unwrap();
            iter_csv(&mut out, &table6()?);
        }
        _ => return Err(Error::InvalidParams(format!("table id must be 1 to 6 (got {id})"))),
    }
    Ok(out)
}
