//! The max-min change of variables between a single vector `y` and the
//! tuple `(w, x_1, ..., x_m)`, plus the residual of the resulting piecewise
//! linear system.

use crate::blockdata::{BoundLadder, EhlcpProblem, EhlcpSolution};
use crate::linalg::{vec_norm, LinearMap, NormTag};
use crate::{Error, Result};

/// Tolerance on the constraints accepted by [`reconstruct_y`].
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Diagonal weights `λ_0, ..., λ_m`, each entry in `[0, 1]`, summing to one
/// in every coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalSelection {
    pub lambdas: Vec<Vec<f64>>,
}

impl DiagonalSelection {
    /// The vertex selection putting the whole weight of coordinate `j` on
    /// block `assign[j]`.
    pub fn vertex(assign: &[usize], blocks: usize) -> Self {
        let n = assign.len();
        let mut lambdas = vec![vec![0.0; n]; blocks];
        for (j, &k) in assign.iter().enumerate() {
            lambdas[k][j] = 1.0;
        }
        DiagonalSelection { lambdas }
    }

    /// Largest deviation from the simplex constraints.
    pub fn simplex_defect(&self) -> f64 {
        let n = self.lambdas.first().map_or(0, Vec::len);
        let mut worst = 0.0f64;
        for j in 0..n {
            let mut sum = 0.0;
            for lam in &self.lambdas {
                let v = lam[j];
                worst = worst.max(-v).max(v - 1.0);
                sum += v;
            }
            worst = worst.max((sum - 1.0).abs());
        }
        worst
    }
}

/// Largest violations of the constraints of a candidate tuple.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FeasibilityViolations {
    /// `w, x_i >= 0`
    pub nonnegativity: f64,
    /// `w ∘ x_1 = 0`
    pub complementarity: f64,
    /// `x_i <= d_i`
    pub upper: f64,
    /// `(d_i - x_i) ∘ x_{i+1} = 0`
    pub chain: f64,
}

impl FeasibilityViolations {
    pub fn max(&self) -> f64 {
        self.nonnegativity.max(self.complementarity).max(self.upper).max(self.chain)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualReport {
    pub r: Vec<f64>,
    pub violations: FeasibilityViolations,
    pub norm_1: f64,
    pub norm_2: f64,
    pub norm_inf: f64,
}

impl ResidualReport {
    fn new(r: Vec<f64>, violations: FeasibilityViolations) -> Self {
        ResidualReport {
            norm_1: vec_norm(&r, NormTag::One),
            norm_2: vec_norm(&r, NormTag::Two),
            norm_inf: vec_norm(&r, NormTag::Inf),
            r,
            violations,
        }
    }

    pub fn norm(&self, tag: NormTag) -> f64 {
        match tag {
            NormTag::One => self.norm_1,
            NormTag::Two => self.norm_2,
            NormTag::Inf => self.norm_inf,
        }
    }
}

/// `w = max(0, -y)`, `x_i = max(0, min(y - s_{i-1}, d_i))`, `x_m = max(0, y - s_{m-1})`.
pub fn recover_solution(y: &[f64], ladder: &BoundLadder) -> EhlcpSolution {
    let s = ladder.prefix_sums();
    let m = ladder.m();
    let w = y.iter().map(|&v| (-v).max(0.0)).collect();
    let mut x = Vec::with_capacity(m);
    for i in 0..m {
        let xi = if i + 1 < m {
            let d = &ladder.d[i];
            y.iter().enumerate().map(|(j, &v)| (v - s[i][j]).min(d[j]).max(0.0)).collect()
        } else {
            y.iter().enumerate().map(|(j, &v)| (v - s[i][j]).max(0.0)).collect()
        };
        x.push(xi);
    }
    EhlcpSolution { w, x }
}

pub fn feasibility_violations(sol: &EhlcpSolution, ladder: &BoundLadder) -> FeasibilityViolations {
    let mut v = FeasibilityViolations::default();
    let neg = |a: &[f64]| a.iter().fold(0.0f64, |m, &t| m.max(-t));
    v.nonnegativity = sol.x.iter().fold(neg(&sol.w), |m, xi| m.max(neg(xi)));
    if let Some(x1) = sol.x.first() {
        v.complementarity = sol.w.iter().zip(x1).fold(0.0, |m, (a, b)| m.max((a * b).abs()));
    }
    for (i, d) in ladder.d.iter().enumerate() {
        let (xi, next) = (&sol.x[i], &sol.x[i + 1]);
        for j in 0..d.len() {
            v.upper = v.upper.max(xi[j] - d[j]);
            v.chain = v.chain.max(((d[j] - xi[j]) * next[j]).abs());
        }
    }
    v
}

/// Inverse of [`recover_solution`] on feasible tuples: `y = Σ x_i - w`.
pub fn reconstruct_y(sol: &EhlcpSolution, ladder: &BoundLadder) -> Result<Vec<f64>> {
    let n = sol.w.len();
    if sol.x.len() != ladder.m() || sol.x.iter().any(|xi| xi.len() != n) {
        return Err(Error::InfeasibleTuple(format!(
            "expected {} blocks of length {n}, got {}",
            ladder.m(),
            sol.x.len()
        )));
    }
    let v = feasibility_violations(sol, ladder);
    if v.max() > FEASIBILITY_TOL {
        return Err(Error::InfeasibleTuple(format!(
            "violations: nonnegativity {:e}, complementarity {:e}, upper {:e}, chain {:e}",
            v.nonnegativity, v.complementarity, v.upper, v.chain
        )));
    }
    Ok((0..n).map(|j| sol.x.iter().map(|xi| xi[j]).sum::<f64>() - sol.w[j]).collect())
}

/// `q + Σ H_i x_i - M w`.
pub fn residual(problem: &EhlcpProblem, sol: &EhlcpSolution) -> Vec<f64> {
    let n = problem.order();
    let mut r = problem.q.clone();
    let mut tmp = vec![0.0; n];
    for (h, xi) in problem.blocks.h.iter().zip(&sol.x) {
        h.apply(xi, &mut tmp);
        for (a, b) in r.iter_mut().zip(&tmp) {
            *a += b;
        }
    }
    problem.blocks.m.apply(&sol.w, &mut tmp);
    for (a, b) in r.iter_mut().zip(&tmp) {
        *a -= b;
    }
    r
}

pub fn residual_report(problem: &EhlcpProblem, sol: &EhlcpSolution) -> ResidualReport {
    ResidualReport::new(residual(problem, sol), feasibility_violations(sol, &problem.ladder))
}

/// Residual of the piecewise linear system at `y`.
pub fn pls_residual(problem: &EhlcpProblem, y: &[f64]) -> ResidualReport {
    residual_report(problem, &recover_solution(y, &problem.ladder))
}

/// `(Σ x_i(y), y + w(y))`; both equal `max(0, y)`.
pub fn sum_identity(y: &[f64], ladder: &BoundLadder) -> (Vec<f64>, Vec<f64>) {
    let sol = recover_solution(y, ladder);
    let n = y.len();
    let lhs = (0..n).map(|j| sol.x.iter().map(|xi| xi[j]).sum()).collect();
    let rhs = y.iter().zip(&sol.w).map(|(a, b)| a + b).collect();
    (lhs, rhs)
}

/// Slope of `t -> max(0, t - a)` between `y` and `yref`.
#[inline]
fn nu(y: f64, yref: f64, a: f64) -> f64 {
    let (lo, hi) = if y < yref { (y, yref) } else { (yref, y) };
    if lo == hi {
        return if y > a {
            1.0
        } else if y < a {
            0.0
        } else {
            0.5
        };
    }
    if lo >= a {
        1.0
    } else if hi <= a {
        0.0
    } else {
        (hi - a) / (hi - lo)
    }
}

/// Mean-value weights linking the pieces at `y` and `yref`: for every piece
/// `t_k` (with `t_0 = -w`, `t_i = x_i`), `t_k(y) - t_k(yref) = λ_k ∘ (y - yref)`.
pub fn selection_matrices(y: &[f64], yref: &[f64], ladder: &BoundLadder) -> DiagonalSelection {
    let s = ladder.prefix_sums();
    let m = ladder.m();
    let n = y.len();
    let mut lambdas = vec![vec![0.0; n]; m + 1];
    for j in 0..n {
        let mut prev = 1.0;
        for i in 0..m {
            let v = nu(y[j], yref[j], s[i][j]).min(prev);
            lambdas[i][j] = prev - v;
            prev = v;
        }
        lambdas[m][j] = prev;
    }
    DiagonalSelection { lambdas }
}
