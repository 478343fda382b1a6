//! Fixed-point iterations on the piecewise linear system, the scaled
//! two-block iteration, and a relaxed projection baseline.

use std::str::FromStr;
use std::time::Instant;

use nalgebra::{DMatrix, DVector, Dyn, LU};
use serde::Serialize;

use crate::blockdata::{Ehlcp2Problem, EhlcpProblem, EhlcpSolution, MatrixStore};
use crate::linalg::{diff_norm, vec_norm, BandedLu, LinearMap, NormTag};
use crate::transform::{recover_solution, residual};
use crate::{Error, Result};

/// Iterates with `‖y‖_∞` above this are reported as diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Clone, Debug, PartialEq)]
pub struct IterationConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub norm: NormTag,
    pub record_history: bool,
}

impl Default for IterationConfig {
    fn default() -> Self {
        IterationConfig { tol: 1e-6, max_iter: 10_000, norm: NormTag::Inf, record_history: false }
    }
}

impl IterationConfig {
    fn check(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::InvalidParams(format!(
                "tolerance must be positive and maxIter at least 1 (got {}, {})",
                self.tol, self.max_iter
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    Converged,
    MaxIterReached,
    Diverged,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SolveReport {
    pub method: String,
    pub status: SolveStatus,
    pub iterations: usize,
    pub y_final: Vec<f64>,
    pub solution: EhlcpSolution,
    pub residual_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step_norms: Option<Vec<f64>>,
    pub elapsed_seconds: f64,
}

/// Reusable factorization of `M`.
#[derive(Clone, Debug)]
pub enum LinearOperatorFactor {
    Banded(BandedLu),
    Dense(LU<f64, Dyn, Dyn>),
}

impl LinearOperatorFactor {
    /// Band elimination for band layouts, dense partial pivoting otherwise.
    pub fn factor(a: &MatrixStore) -> Result<Self> {
        match a {
            MatrixStore::Dense(d) => {
                let lu = d.clone().lu();
                let u = lu.u();
                let n = d.nrows();
                let scale = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let zero = scale * f64::EPSILON * n as f64;
                if let Some(pivot) = (0..n).find(|&i| !(u[(i, i)].abs() > zero)) {
                    return Err(Error::SingularM { pivot });
                }
                Ok(LinearOperatorFactor::Dense(lu))
            }
            _ => BandedLu::factor(&a.to_banded())
                .map(LinearOperatorFactor::Banded)
                .map_err(|pivot| Error::SingularM { pivot }),
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        match self {
            LinearOperatorFactor::Banded(lu) => lu.solve(rhs),
            LinearOperatorFactor::Dense(lu) => {
                let b = DVector::from_column_slice(rhs);
                lu.solve(&b).map(|x| x.iter().copied().collect()).unwrap_or_else(|| vec![f64::NAN; rhs.len()])
            }
        }
    }
}

struct Run {
    status: SolveStatus,
    iterations: usize,
    v: Vec<f64>,
    history: Option<Vec<f64>>,
}

/// Drives `v <- step(v)` until the step norm drops below the tolerance.
fn iterate(v0: Vec<f64>, cfg: &IterationConfig, mut step: impl FnMut(&[f64], &mut [f64])) -> Run {
    let mut v = v0;
    let mut next = vec![0.0; v.len()];
    let mut history = cfg.record_history.then(Vec::new);
    let mut status = SolveStatus::MaxIterReached;
    let mut iterations = 0;
    for k in 1..=cfg.max_iter {
        step(&v, &mut next);
        iterations = k;
        let d = diff_norm(&next, &v, cfg.norm);
        std::mem::swap(&mut v, &mut next);
        if let Some(h) = history.as_mut() {
            h.push(d);
        }
        if !v.iter().all(|x| x.is_finite()) || vec_norm(&v, NormTag::Inf) > DIVERGENCE_LIMIT {
            status = SolveStatus::Diverged;
            break;
        }
        if d < cfg.tol {
            status = SolveStatus::Converged;
            break;
        }
    }
    Run { status, iterations, v, history }
}

fn check_len(what: &str, v: &[f64], n: usize) -> Result<()> {
    if v.len() != n {
        return Err(Error::InvalidParams(format!("{what} has length {}, expected {n}", v.len())));
    }
    Ok(())
}

/// Iterates `M y⁺ = M max(0, y) - q - Σ H_i x_i(y)` with `M` factored once.
pub fn method31(problem: &EhlcpProblem, y0: &[f64], cfg: &IterationConfig) -> Result<SolveReport> {
    problem.validate().into_result()?;
    cfg.check()?;
    let n = problem.order();
    check_len("y0", y0, n)?;
    let start = Instant::now();
    let factor = LinearOperatorFactor::factor(&problem.blocks.m)?;
    let mut rhs = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let run = iterate(y0.to_vec(), cfg, |y, out| {
        let pos: Vec<f64> = y.iter().map(|v| v.max(0.0)).collect();
        problem.blocks.m.apply(&pos, &mut rhs);
        for (r, q) in rhs.iter_mut().zip(&problem.q) {
            *r -= q;
        }
        let sol = recover_solution(y, &problem.ladder);
        for (h, xi) in problem.blocks.h.iter().zip(&sol.x) {
            h.apply(xi, &mut tmp);
            for (r, t) in rhs.iter_mut().zip(&tmp) {
                *r -= t;
            }
        }
        out.copy_from_slice(&factor.solve(&rhs));
    });
    let solution = recover_solution(&run.v, &problem.ladder);
    let residual_norm = vec_norm(&residual(problem, &solution), cfg.norm);
    Ok(SolveReport {
        method: "fp31".into(),
        status: run.status,
        iterations: run.iterations,
        y_final: run.v,
        solution,
        residual_norm,
        step_norms: run.history,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

fn clamp_b(y: f64, b: f64) -> f64 {
    y.min(b).max(0.0)
}

/// Residual `q + H_1 x_1 + x_2 - w` of the two-block form.
fn residual2(problem: &Ehlcp2Problem, sol: &EhlcpSolution, norm: NormTag) -> f64 {
    let mut r = problem.h1.matvec(&sol.x[0]);
    for j in 0..r.len() {
        r[j] += problem.q[j] + sol.x[1][j] - sol.w[j];
    }
    vec_norm(&r, norm)
}

/// Iterates `Ω y⁺ = -((H_1 - Ω) max(0, min(y, b)) + q)` for a positive
/// diagonal `Ω`. The returned `y_final` is the iteration variable; the
/// solution uses the `Ω`-scaled recovery of `w` and `x_2`.
pub fn method32(problem: &Ehlcp2Problem, omega: &[f64], y0: &[f64], cfg: &IterationConfig) -> Result<SolveReport> {
    problem.validate().into_result()?;
    cfg.check()?;
    let n = problem.order();
    check_len("omega", omega, n)?;
    check_len("y0", y0, n)?;
    if let Some(j) = omega.iter().position(|w| !(*w > 0.0) || !w.is_finite()) {
        return Err(Error::InvalidParams(format!("omega[{j}] = {} is not positive", omega[j])));
    }
    let start = Instant::now();
    let mut hx = vec![0.0; n];
    let run = iterate(y0.to_vec(), cfg, |y, out| {
        let x1: Vec<f64> = y.iter().zip(&problem.b).map(|(&v, &b)| clamp_b(v, b)).collect();
        problem.h1.apply(&x1, &mut hx);
        for j in 0..n {
            out[j] = -(hx[j] - omega[j] * x1[j] + problem.q[j]) / omega[j];
        }
    });
    let y = &run.v;
    let solution = EhlcpSolution {
        w: (0..n).map(|j| omega[j] * (-y[j]).max(0.0)).collect(),
        x: vec![
            (0..n).map(|j| clamp_b(y[j], problem.b[j])).collect(),
            (0..n).map(|j| omega[j] * (y[j] - problem.b[j]).max(0.0)).collect(),
        ],
    };
    let residual_norm = residual2(problem, &solution, cfg.norm);
    Ok(SolveReport {
        method: "omega32".into(),
        status: run.status,
        iterations: run.iterations,
        y_final: run.v,
        solution,
        residual_norm,
        step_norms: run.history,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Which triangle of `H_1` forms the implicit part `K`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum KTag {
    StrictLower,
    StrictUpper,
    Zero,
}

impl FromStr for KTag {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "lower" | "strictLower" => Ok(KTag::StrictLower),
            "upper" | "strictUpper" => Ok(KTag::StrictUpper),
            "zero" | "none" => Ok(KTag::Zero),
            other => Err(format!("unknown K tag `{other}` (expected lower, upper or zero)")),
        }
    }
}

/// Parameters of the relaxed projection iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionParams {
    pub eta: f64,
    pub omega: f64,
    pub e: Vec<f64>,
    pub ktag: KTag,
}

impl ProjectionParams {
    pub fn new(n: usize, eta: f64, omega: f64, ktag: KTag) -> Self {
        ProjectionParams { eta, omega, e: vec![1.0; n], ktag }
    }
}

/// One step `x⁺ = η P_b[x - ω E(g + K(x⁺ - x))] + (1 - η) x` with
/// `g = H_1 x + q`, resolved by a single forward (lower `K`) or backward
/// (upper `K`) sweep.
pub fn implicit_sweep(h1: &MatrixStore, params: &ProjectionParams, b: &[f64], x_old: &[f64], g: &[f64], x_new: &mut [f64]) {
    let n = x_old.len();
    let ProjectionParams { eta, omega, ref e, ktag } = *params;
    let update = |j: usize, x_new: &mut [f64]| {
        let mut coupling = 0.0;
        match ktag {
            KTag::StrictLower => h1.for_each_in_row(j, |i, v| {
                if i < j {
                    coupling += v * (x_new[i] - x_old[i]);
                }
            }),
            KTag::StrictUpper => h1.for_each_in_row(j, |i, v| {
                if i > j {
                    coupling += v * (x_new[i] - x_old[i]);
                }
            }),
            KTag::Zero => {}
        }
        let z = x_old[j] - omega * e[j] * (g[j] + coupling);
        x_new[j] = eta * clamp_b(z, b[j]) + (1.0 - eta) * x_old[j];
    };
    match ktag {
        KTag::StrictUpper => (0..n).rev().for_each(|j| update(j, x_new)),
        _ => (0..n).for_each(|j| update(j, x_new)),
    }
}

/// Relaxed projection iteration on `x_1 ∈ [0, b]`. Stops on the `x_1` step;
/// `w` and `x_2` are recovered afterwards from the two-block equation.
pub fn method33(problem: &Ehlcp2Problem, params: &ProjectionParams, x10: &[f64], cfg: &IterationConfig) -> Result<SolveReport> {
    problem.validate().into_result()?;
    cfg.check()?;
    let n = problem.order();
    if !(params.eta > 0.0 && params.eta <= 1.0) {
        return Err(Error::InvalidParams(format!("eta = {} is outside (0, 1]", params.eta)));
    }
    if !(params.omega > 0.0) {
        return Err(Error::InvalidParams(format!("omega = {} is not positive", params.omega)));
    }
    check_len("E", &params.e, n)?;
    check_len("x10", x10, n)?;
    if params.e.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidParams("E must be a positive diagonal".into()));
    }
    if x10.iter().zip(&problem.b).any(|(&x, &b)| !(0.0..=b).contains(&x)) {
        return Err(Error::InvalidParams("x10 must lie in [0, b]".into()));
    }
    let start = Instant::now();
    let mut g = vec![0.0; n];
    let run = iterate(x10.to_vec(), cfg, |x, out| {
        problem.h1.apply(x, &mut g);
        for (gj, q) in g.iter_mut().zip(&problem.q) {
            *gj += q;
        }
        out.copy_from_slice(x);
        implicit_sweep(&problem.h1, params, &problem.b, x, &g, out);
    });
    let x1 = run.v;
    let mut u = problem.h1.matvec(&x1);
    for (uj, q) in u.iter_mut().zip(&problem.q) {
        *uj += q;
    }
    let x2: Vec<f64> = (0..n)
        .map(|j| if x1[j] >= problem.b[j] - cfg.tol { (-u[j]).max(0.0) } else { 0.0 })
        .collect();
    let w: Vec<f64> = (0..n).map(|j| (u[j] + x2[j]).max(0.0)).collect();
    let y_final = (0..n).map(|j| x1[j] + x2[j] - w[j]).collect();
    let solution = EhlcpSolution { w, x: vec![x1, x2] };
    let residual_norm = residual2(problem, &solution, cfg.norm);
    Ok(SolveReport {
        method: "proj33".into(),
        status: run.status,
        iterations: run.iterations,
        y_final,
        solution,
        residual_norm,
        step_norms: run.history,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Dense reference used by tests of the sweep.
#[doc(hidden)]
pub fn strict_triangle(h1: &MatrixStore, ktag: KTag) -> DMatrix<f64> {
    let d = h1.to_dense();
    let n = d.nrows();
    DMatrix::from_fn(n, n, |i, j| match ktag {
        KTag::StrictLower if j < i => d[(i, j)],
        KTag::StrictUpper if j > i => d[(i, j)],
        _ => 0.0,
    })
}
