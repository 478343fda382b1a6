//! Test problem generators with prescribed solutions.

use serde::{Deserialize, Serialize};

use crate::blockdata::{
    BlockMatrixSet, BlockTridiagonal, BoundLadder, Ehlcp2Problem, EhlcpProblem, EhlcpSolution, MatrixStore, Tridiagonal,
};
use crate::transform::reconstruct_y;
use crate::{Error, Result};

/// Period-2 pattern `(first, second, first, ...)` of length `n`.
pub fn alternating(n: usize, first: f64, second: f64) -> Vec<f64> {
    (0..n).map(|j| if j % 2 == 0 { first } else { second }).collect()
}

/// A known solution `(w*, x*)` together with `y*`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prescribed {
    pub w: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

impl Prescribed {
    pub fn solution(&self) -> EhlcpSolution {
        EhlcpSolution { w: self.w.clone(), x: self.x.clone() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generated {
    pub problem: EhlcpProblem,
    pub prescribed: Option<Prescribed>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generated2 {
    pub problem: Ehlcp2Problem,
    pub prescribed: Prescribed,
}

impl Generated2 {
    pub fn to_general(&self) -> Generated {
        Generated { problem: self.problem.to_general(), prescribed: Some(self.prescribed.clone()) }
    }
}

/// `q = M w* - Σ H_i x_i*`, rejecting tuples that violate the constraints.
pub fn prescribe_q(blocks: &BlockMatrixSet, ladder: &BoundLadder, solution: &EhlcpSolution) -> Result<Vec<f64>> {
    reconstruct_y(solution, ladder)?;
    let mut q = blocks.m.matvec(&solution.w);
    for (h, xi) in blocks.h.iter().zip(&solution.x) {
        for (qj, v) in q.iter_mut().zip(h.matvec(xi)) {
            *qj -= v;
        }
    }
    Ok(q)
}

fn five_point(grid: usize, shift: f64, coupling: f64) -> MatrixStore {
    MatrixStore::BlockTridiagonal(BlockTridiagonal {
        block: Tridiagonal::constant(grid, -1.0, 4.0 + shift, -1.0),
        sub: coupling,
        sup: coupling,
    })
}

fn check_grid(grid: usize) -> Result<()> {
    if grid < 2 {
        return Err(Error::InvalidParams(format!("grid size must be at least 2 (got {grid})")));
    }
    Ok(())
}

/// `M = blktridiag(-I, T, -I) + μI`, `H_1 = I ⊗ T + νI` with
/// `T = tridiag(-1, 4, -1)` of order `grid`, and `n = grid²`.
pub fn gen_example51(grid: usize, mu: f64, nu: f64) -> Result<Generated> {
    check_grid(grid)?;
    if !(mu >= 0.0 && nu >= 0.0) {
        return Err(Error::InvalidParams(format!("mu and nu must be nonnegative (got {mu}, {nu})")));
    }
    let n = grid * grid;
    let blocks = BlockMatrixSet::new(five_point(grid, mu, -1.0), vec![five_point(grid, nu, 0.0)]);
    let w = alternating(n, 0.1, 0.0);
    let x = alternating(n, 0.0, 0.1);
    let ladder = BoundLadder::empty(n);
    let sol = EhlcpSolution { w: w.clone(), x: vec![x.clone()] };
    let q = prescribe_q(&blocks, &ladder, &sol)?;
    let y = x.iter().zip(&w).map(|(a, b)| a - b).collect();
    Ok(Generated { problem: EhlcpProblem::new(blocks, q, ladder), prescribed: Some(Prescribed { w, x: vec![x], y }) })
}

/// Probe vector `(-0.15, 0.056, ...)` used with the first example.
pub fn probe51(n: usize) -> Vec<f64> {
    alternating(n, -0.15, 0.056)
}

/// Probe vector `(-0.1, 0.1, ...)` used with the tridiagonal two-block example.
pub fn probe52(n: usize) -> Vec<f64> {
    alternating(n, -0.1, 0.1)
}

fn two_block_with_reference(h1: MatrixStore) -> Generated2 {
    let n = h1.order();
    let b = vec![0.1; n];
    let w = alternating(n, 0.2, 0.0);
    let x1 = alternating(n, 0.0, 0.1);
    let x2 = x1.clone();
    let hx = h1.matvec(&x1);
    let q: Vec<f64> = (0..n).map(|j| w[j] - hx[j] - x2[j]).collect();
    let y = (0..n).map(|j| x1[j] + x2[j] - w[j]).collect();
    Generated2 { problem: Ehlcp2Problem { h1, q, b }, prescribed: Prescribed { w, x: vec![x1, x2], y } }
}

/// `H_1 = tridiag(1, 4, -2)`, `b = 0.1e`, reference solution
/// `w* = (0.2, 0, ...)`, `x_1* = x_2* = (0, 0.1, ...)`.
pub fn gen_example52(n: usize) -> Result<Generated2> {
    if n < 2 {
        return Err(Error::InvalidParams(format!("order must be at least 2 (got {n})")));
    }
    Ok(two_block_with_reference(MatrixStore::Tridiagonal(Tridiagonal::constant(n, 1.0, 4.0, -2.0))))
}

/// `M = [[1, 0], [α, 1]]`, `H_1 = [[1, 0], [α², 1]]`, `q = (1, 0)` with
/// solution `w* = (1, 0)`, `x_1* = (0, α)`.
pub fn gen_example53(alpha: f64) -> Result<Generated> {
    if !(alpha >= 1.0) {
        return Err(Error::InvalidParams(format!("alpha must be at least 1 (got {alpha})")));
    }
    let blocks = BlockMatrixSet::new(
        MatrixStore::dense_from_rows(&[&[1.0, 0.0], &[alpha, 1.0]]),
        vec![MatrixStore::dense_from_rows(&[&[1.0, 0.0], &[alpha * alpha, 1.0]])],
    );
    let prescribed = Prescribed { w: vec![1.0, 0.0], x: vec![vec![0.0, alpha]], y: vec![-1.0, alpha] };
    Ok(Generated {
        problem: EhlcpProblem::new(blocks, vec![1.0, 0.0], BoundLadder::empty(2)),
        prescribed: Some(prescribed),
    })
}

/// `H_1 = blktridiag(-I, T, -I)`, `n = grid²`, with the same reference
/// solution as [`gen_example52`].
pub fn gen_example55(grid: usize) -> Result<Generated2> {
    check_grid(grid)?;
    Ok(two_block_with_reference(five_point(grid, 0.0, -1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::sdd_classify;
    use crate::linalg::NormTag;
    use crate::transform::pls_residual;

    fn check_prescribed(g: &Generated) {
        assert!(g.problem.validate().is_ok());
        let p = g.prescribed.as_ref().unwrap();
        let r = pls_residual(&g.problem, &p.y);
        let qn = crate::linalg::vec_norm(&g.problem.q, NormTag::Inf);
        assert!(r.norm(NormTag::Inf) <= 1e-12 * (1.0 + qn), "{}", r.norm(NormTag::Inf));
        assert_eq!(r.violations.max(), 0.0);
    }

    #[test]
    fn pattern_alternates() {
        assert_eq!(alternating(5, 1.0, 2.0), vec![1.0, 2.0, 1.0, 2.0, 1.0]);
    }

    #[test]
    fn first_example_structure() {
        let g = gen_example51(2, 3.0, 1.0).unwrap();
        let m = g.problem.blocks.m.to_dense();
        for i in 0..4 {
            assert_eq!(m[(i, i)], 7.0);
        }
        assert_eq!(m[(0, 1)], -1.0);
        assert_eq!(m[(0, 2)], -1.0);
        assert_eq!(m[(1, 2)], 0.0);
        assert_eq!(m[(0, 3)], 0.0);
        let h = g.problem.blocks.h[0].to_dense();
        assert_eq!(h[(0, 2)], 0.0);
        assert_eq!(h[(0, 0)], 5.0);
        check_prescribed(&g);
        let z = gen_example51(2, 0.0, 0.0).unwrap();
        assert!(z.problem.blocks.m.is_symmetric() && z.problem.blocks.h[0].is_symmetric());
        for grid in [3, 10] {
            let g = gen_example51(grid, 5.0, 5.0).unwrap();
            check_prescribed(&g);
            assert!(g.problem.blocks.all().all(|a| a.is_symmetric() && sdd_classify(a).col_sdd));
        }
        assert!(gen_example51(1, 1.0, 1.0).is_err());
    }

    #[test]
    fn tridiagonal_two_block_example() {
        let g = gen_example52(4).unwrap();
        let h = g.problem.h1.to_dense();
        assert_eq!(h.row(0).iter().copied().collect::<Vec<_>>(), vec![4.0, -2.0, 0.0, 0.0]);
        assert_eq!(h.row(1).iter().copied().collect::<Vec<_>>(), vec![1.0, 4.0, -2.0, 0.0]);
        assert_eq!(g.prescribed.y, vec![-0.2, 0.2, -0.2, 0.2]);
        check_prescribed(&g.to_general());
        check_prescribed(&gen_example52(31).unwrap().to_general());
    }

    #[test]
    fn triangular_example() {
        for alpha in [1.0, 2.0, 3.5] {
            check_prescribed(&gen_example53(alpha).unwrap());
        }
        assert!(gen_example53(0.5).is_err());
    }

    #[test]
    fn block_two_block_example() {
        let g = gen_example55(2).unwrap();
        assert_eq!(g.problem.order(), 4);
        assert!(g.problem.h1.is_symmetric());
        assert!(g.problem.h1.diagonal().iter().all(|&v| v == 4.0));
        let e = g.problem.h1.to_dense().symmetric_eigenvalues();
        assert!(e.iter().all(|&v| v > 0.0));
        check_prescribed(&gen_example55(7).unwrap().to_general());
    }

    #[test]
    fn prescribe_q_examples() {
        let b = BlockMatrixSet::new(MatrixStore::identity(2), vec![MatrixStore::identity(2)]);
        let l = BoundLadder::empty(2);
        let sol = EhlcpSolution { w: vec![1.0, 0.0], x: vec![vec![0.0, 1.0]] };
        assert_eq!(prescribe_q(&b, &l, &sol).unwrap(), vec![1.0, -1.0]);
        let zero = EhlcpSolution { w: vec![0.0; 2], x: vec![vec![0.0; 2]] };
        assert_eq!(prescribe_q(&b, &l, &zero).unwrap(), vec![0.0, 0.0]);
        let bad = EhlcpSolution { w: vec![1.0, 0.0], x: vec![vec![1.0, 1.0]] };
        assert!(matches!(prescribe_q(&b, &l, &bad), Err(Error::InfeasibleTuple(_))));
    }
}
