//! Brute-force reference solver: on each of the `(m + 1)^n` regions cut out
//! by the breakpoints `0, s_1, ..., s_{m-1}` the piecewise linear system is
//! affine, so it is solved region by region and kept when the solution lies
//! in its own region.

use nalgebra::{DMatrix, DVector};

use crate::blockdata::{BlockMatrixSet, EhlcpProblem, EhlcpSolution};
use crate::linalg::{dense_norm, NormTag};
use crate::transform::recover_solution;
use crate::wproperty::{check_budget, for_each_assignment, par_ranges, representative_dense, RepresentativeAssignment};
use crate::Result;

pub const DEFAULT_BUDGET: u128 = 1 << 20;
/// Slack on region membership.
pub const REGION_SLACK: f64 = 1e-9;
/// Solutions closer than this (∞-norm) are merged.
pub const DEDUP_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleSolution {
    pub y: Vec<f64>,
    pub solution: EhlcpSolution,
    /// The region the solution was first accepted in.
    pub region: RepresentativeAssignment,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleOutcome {
    pub solutions: Vec<OracleSolution>,
    /// Indices of regions whose linear system was singular.
    pub singular_regions: Vec<u64>,
}

/// Region system `R y = -(q + c)` for one assignment.
fn region_system(problem: &EhlcpProblem, assign: &RepresentativeAssignment, s: &[Vec<f64>]) -> (DMatrix<f64>, DVector<f64>) {
    let blocks = &problem.blocks;
    let n = problem.order();
    let r = representative_dense(blocks, assign);
    let mut rhs = DVector::from_column_slice(&problem.q);
    for i in 0..n {
        for (k, blk) in blocks.all().enumerate() {
            blk.for_each_in_row(i, |j, v| {
                let c = assign.0[j];
                if c == 0 || k == 0 {
                    return;
                }
                if k < c {
                    rhs[i] += v * problem.ladder.d[k - 1][j];
                } else if k == c {
                    rhs[i] -= v * s[c - 1][j];
                }
            });
        }
    }
    (r, -rhs)
}

fn in_region(y: &[f64], assign: &RepresentativeAssignment, s: &[Vec<f64>]) -> bool {
    let m = s.len();
    y.iter().zip(&assign.0).enumerate().all(|(j, (&v, &c))| {
        if c == 0 {
            v <= REGION_SLACK
        } else {
            let lo = s[c - 1][j] - REGION_SLACK;
            let hi = if c < m { s[c][j] + REGION_SLACK } else { f64::INFINITY };
            v >= lo && v <= hi
        }
    })
}

/// All solutions of the problem, found by region enumeration.
pub fn oracle_solve(problem: &EhlcpProblem, budget: u128) -> Result<OracleOutcome> {
    problem.validate().into_result()?;
    let n = problem.order();
    let radix = problem.m() + 1;
    let total = check_budget(radix, n, budget)?;
    let s = problem.ladder.prefix_sums();
    let parts = par_ranges(total, |range| {
        let mut found = Vec::new();
        let mut singular = Vec::new();
        for_each_assignment(range, radix, n, |idx, a| {
            let (r, rhs) = region_system(problem, a, &s);
            match r.lu().solve(&rhs) {
                Some(y) if y.iter().all(|v| v.is_finite()) => {
                    let y: Vec<f64> = y.iter().copied().collect();
                    if in_region(&y, a, &s) {
                        found.push((y, a.clone()));
                    }
                }
                _ => singular.push(idx),
            }
        });
        (found, singular)
    });
    let mut solutions: Vec<OracleSolution> = Vec::new();
    let mut singular_regions = Vec::new();
    for (found, singular) in parts {
        singular_regions.extend(singular);
        for (y, region) in found {
            let dup = solutions
                .iter()
                .any(|o| o.y.iter().zip(&y).all(|(a, b)| (a - b).abs() <= DEDUP_TOL));
            if !dup {
                let solution = recover_solution(&y, &problem.ladder);
                solutions.push(OracleSolution { y, solution, region });
            }
        }
    }
    Ok(OracleOutcome { solutions, singular_regions })
}

/// `(max ‖R‖, max ‖R⁻¹‖)` over all column representatives `R`; the second
/// entry is infinite when some representative is singular.
pub fn oracle_alpha_constants(blocks: &BlockMatrixSet, tag: NormTag, budget: u128) -> Result<(f64, f64)> {
    let n = blocks.order();
    let radix = blocks.num_h() + 1;
    let total = check_budget(radix, n, budget)?;
    let parts = par_ranges(total, |range| {
        let (mut under, mut over) = (0.0f64, 0.0f64);
        for_each_assignment(range, radix, n, |_, a| {
            let r = representative_dense(blocks, a);
            under = under.max(dense_norm(&r, tag));
            over = match r.try_inverse() {
                Some(inv) => over.max(dense_norm(&inv, tag)),
                None => f64::INFINITY,
            };
        });
        (under, over)
    });
    Ok(parts.into_iter().fold((0.0, 0.0), |(u, o), (a, b)| (u.max(a), o.max(b))))
}
