//! Seeded random instances shared by the integration tests.
#![allow(dead_code)]

use ehlcp::blockdata::{BlockMatrixSet, BoundLadder, Ehlcp2Problem, EhlcpProblem, EhlcpSolution, MatrixStore};
use ehlcp::bounds::{bound42, bound43, underalpha_exact};
use ehlcp::convergence::{check_cor31, check_thm34};
use ehlcp::linalg::{diff_norm, NormTag};
use ehlcp::oracle::oracle_solve;
use ehlcp::solvers::{method31, method32, IterationConfig, SolveStatus};
use ehlcp::transform::{pls_residual, DiagonalSelection};
use ehlcp::wproperty::{has_column_w_property, selection_is_singular, RepresentativeAssignment};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const ORACLE_BUDGET: u128 = 1 << 12;

pub struct Instance {
    pub problem: EhlcpProblem,
    /// Two-block form and step when `M = H_2 = I`.
    pub two_block: Option<(Ehlcp2Problem, f64)>,
}

pub fn ladder(rng: &mut ChaCha8Rng, n: usize, m: usize) -> BoundLadder {
    BoundLadder::new(n, (1..m).map(|_| (0..n).map(|_| rng.random_range(0.2..1.5)).collect()).collect())
}

fn perturbed(rng: &mut ChaCha8Rng, base: &DMatrix<f64>, eps: f64) -> MatrixStore {
    let n = base.nrows();
    MatrixStore::Dense(DMatrix::from_fn(n, n, |i, j| base[(i, j)] + rng.random_range(-eps..eps)))
}

/// Blocks close to a common diagonally dominant `M`, kept only when the
/// splitting condition and the fixed-point condition both hold.
fn general(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Instance {
    loop {
        let base = DMatrix::from_fn(n, n, |i, j| if i == j { rng.random_range(2.0..4.0) } else { rng.random_range(-0.3..0.3) });
        let h = (0..m).map(|_| perturbed(rng, &base, 0.1)).collect();
        let blocks = BlockMatrixSet::new(MatrixStore::Dense(base), h);
        if !accept(&blocks) {
            continue;
        }
        let q = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let l = ladder(rng, n, m);
        return Instance { problem: EhlcpProblem::new(blocks, q, l), two_block: None };
    }
}

fn accept(blocks: &BlockMatrixSet) -> bool {
    bound42(blocks, NormTag::Inf).is_ok_and(|r| r.condition_satisfied)
        && check_cor31(blocks, NormTag::Inf).is_ok_and(|r| r.rho.satisfied)
}

/// `M = H_2 = I`, `H_1` near a positive diagonal.
fn two_block(rng: &mut ChaCha8Rng, n: usize) -> Instance {
    loop {
        let h1 = DMatrix::from_fn(n, n, |i, j| if i == j { rng.random_range(0.8..1.2) } else { rng.random_range(-0.15..0.15) });
        let omega = (0..n).map(|i| h1[(i, i)]).fold(0.0, f64::max);
        let h1 = MatrixStore::Dense(h1);
        let p2 = Ehlcp2Problem {
            h1: h1.clone(),
            q: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            b: (0..n).map(|_| rng.random_range(0.2..1.5)).collect(),
        };
        let problem = p2.to_general();
        if !accept(&problem.blocks) || !check_thm34(&h1, omega).is_ok_and(|r| r.satisfied()) {
            continue;
        }
        return Instance { problem, two_block: Some((p2, omega)) };
    }
}

/// Instance `seed`: every fourth one is two-block, the rest have
/// `m = 1 + seed % 3` and `n` in `1..=5`.
pub fn instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0000 + seed);
    let n = rng.random_range(1..=5);
    if seed % 4 == 0 {
        two_block(&mut rng, n)
    } else {
        general(&mut rng, n, 1 + (seed % 3) as usize)
    }
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

fn tuple_gap(a: &EhlcpSolution, b: &EhlcpSolution) -> f64 {
    let mut gap = diff_norm(&a.w, &b.w, NormTag::Inf);
    for (x, y) in a.x.iter().zip(&b.x) {
        gap = gap.max(diff_norm(x, y, NormTag::Inf));
    }
    gap
}

pub fn tight() -> IterationConfig {
    IterationConfig { tol: 1e-12, max_iter: 100_000, norm: NormTag::Inf, record_history: false }
}

/// Unique oracle solution, matched by the fixed-point method and, for
/// two-block instances, by the scaled two-block method.
pub fn check_equivalence(inst: &Instance) -> Result<(), String> {
    let p = &inst.problem;
    let out = oracle_solve(p, ORACLE_BUDGET).map_err(|e| e.to_string())?;
    if out.solutions.len() != 1 {
        return Err(format!("oracle found {} solutions", out.solutions.len()));
    }
    let star = &out.solutions[0];
    let zero = vec![0.0; p.order()];
    let r31 = method31(p, &zero, &tight()).map_err(|e| e.to_string())?;
    let gap = diff_norm(&r31.y_final, &star.y, NormTag::Inf);
    if r31.status != SolveStatus::Converged || gap > 1e-7 {
        return Err(format!("fixed-point method: {:?}, gap {gap:e}", r31.status));
    }
    if let Some((p2, omega)) = &inst.two_block {
        let r32 = method32(p2, &vec![*omega; p.order()], &zero, &tight()).map_err(|e| e.to_string())?;
        let gap = tuple_gap(&r32.solution, &star.solution);
        if r32.status != SolveStatus::Converged || gap > 1e-7 {
            return Err(format!("two-block method: {:?}, gap {gap:e}", r32.status));
        }
    }
    Ok(())
}

/// Relative slack for rounding in the two-sided error bound.
pub const SANDWICH_SLACK: f64 = 1e-12;

/// Number of probes checked and the failures among them.
pub fn sandwich(inst: &Instance, probes: usize, seed: u64) -> Result<(usize, Vec<String>), String> {
    let p = &inst.problem;
    let blocks = &p.blocks;
    let out = oracle_solve(p, ORACLE_BUDGET).map_err(|e| e.to_string())?;
    let ystar = out.solutions.first().ok_or("no solution")?.y.clone();
    let eta = bound42(blocks, NormTag::Inf).map_err(|e| e.to_string())?;
    let tau = bound43(blocks);
    let under_inf = underalpha_exact(blocks, NormTag::Inf, ORACLE_BUDGET).map_err(|e| e.to_string())?;
    let under_one = underalpha_exact(blocks, NormTag::One, ORACLE_BUDGET).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checked = 0;
    let mut bad = Vec::new();
    for k in 0..probes {
        let y = random_vec(&mut rng, p.order(), 2.0);
        let r = pls_residual(p, &y);
        let mut check = |norm: NormTag, lower: f64, upper: Option<f64>| {
            let e = diff_norm(&y, &ystar, norm);
            let slack = SANDWICH_SLACK * (1.0 + e);
            checked += 1;
            if lower > e + slack || upper.is_some_and(|u| e > u + slack) {
                bad.push(format!("probe {k}, {norm}-norm: {lower:e} <= {e:e} <= {upper:?}"));
            }
        };
        check(NormTag::Inf, r.norm_inf / under_inf, eta.condition_satisfied.then(|| eta.constant * r.norm_inf));
        check(NormTag::One, r.norm_1 / under_one, tau.condition_satisfied.then(|| tau.constant * r.norm_1));
    }
    Ok((checked, bad))
}

/// Splitting condition, then the enumerated W-property, then nonsingular
/// vertex selections.
pub fn w_chain(inst: &Instance) -> Result<u128, String> {
    let blocks = &inst.problem.blocks;
    if !bound42(blocks, NormTag::Inf).map_err(|e| e.to_string())?.condition_satisfied {
        return Err("splitting condition fails".into());
    }
    let rep = has_column_w_property(blocks, ORACLE_BUDGET).map_err(|e| e.to_string())?;
    if !rep.holds {
        return Err(format!("W-property fails, witness {:?}", rep.witness));
    }
    let n = blocks.order();
    let k = blocks.num_h() + 1;
    let mut a = RepresentativeAssignment(vec![0; n]);
    let mut count = 0;
    loop {
        let (singular, _) = selection_is_singular(blocks, &DiagonalSelection::vertex(&a.0, k));
        if singular {
            return Err(format!("vertex {:?} is singular", a.0));
        }
        count += 1;
        if !a.advance(k) {
            return Ok(count);
        }
    }
}
