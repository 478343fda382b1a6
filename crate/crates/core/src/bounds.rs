//! Global error bounds `‖r(y)‖ / α̲ <= ‖y - y*‖ <= ᾱ ‖r(y)‖` and the
//! computable upper estimates of `ᾱ` built from diagonal splittings and
//! column diagonal dominance.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::blockdata::{BlockMatrixSet, EhlcpProblem, MatrixStore};
use crate::convergence::VERTEX_LIMIT;
use crate::linalg::{dense_norm, entrywise_max, spectral_radius_nonneg, vec_norm, Banded, BandedLu, NormTag};
use crate::transform::{pls_residual, DiagonalSelection};
use crate::wproperty::{
    assignment_count, check_budget, for_each_assignment, par_ranges, random_selection, representative_dense,
    RepresentativeAssignment,
};
use crate::{Error, Result};

/// Dense fallbacks for the splitting bound are used up to this order.
pub const DENSE_BOUND_LIMIT: usize = 2000;

/// `⟨A⟩`: `|a_ii|` on the diagonal, `-|a_ij|` elsewhere.
pub fn comparison_matrix(a: &MatrixStore) -> MatrixStore {
    a.map_entries(f64::abs, |v| -v.abs())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SddClass {
    pub row_sdd: bool,
    pub col_sdd: bool,
    /// `(⟨A⟩e)_i`
    pub row_margins: Vec<f64>,
    /// `(⟨Aᵀ⟩e)_i`
    pub col_margins: Vec<f64>,
}

pub fn sdd_classify(a: &MatrixStore) -> SddClass {
    let n = a.order();
    let mut row = vec![0.0; n];
    let mut col = vec![0.0; n];
    for i in 0..n {
        a.for_each_in_row(i, |j, v| {
            let c = if i == j { v.abs() } else { -v.abs() };
            row[i] += c;
            col[j] += c;
        });
    }
    SddClass {
        row_sdd: row.iter().all(|&m| m > 0.0),
        col_sdd: col.iter().all(|&m| m > 0.0),
        row_margins: row,
        col_margins: col,
    }
}

/// `A = Λ - C` with `Λ` the diagonal of `A`, for every block.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitParts {
    pub lambda: Vec<Vec<f64>>,
    pub c: Vec<MatrixStore>,
}

pub fn split_parts(blocks: &BlockMatrixSet) -> Result<SplitParts> {
    let mut lambda = Vec::new();
    let mut c = Vec::new();
    for (block, a) in blocks.all().enumerate() {
        let d = a.diagonal();
        if let Some(index) = d.iter().position(|v| !(*v > 0.0)) {
            return Err(Error::NonpositiveDiagonal { block, index });
        }
        lambda.push(d);
        c.push(a.map_entries(|_| 0.0, |v| -v));
    }
    Ok(SplitParts { lambda, c })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BoundKind {
    Thm42Eta,
    Thm43Tau,
    Thm41Sandwich,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BoundReport {
    pub kind: BoundKind,
    pub constant: f64,
    pub norm: NormTag,
    pub condition_satisfied: bool,
    /// `ρ(max_i Λ_i⁻¹|C_i|)` for the splitting bound, the smallest margin
    /// for the dominance bound.
    pub condition_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_interval: Option<(f64, f64)>,
}

/// `max_i Λ_i⁻¹|C_i|` (band) and `max_i Λ_i⁻¹` (vector).
fn max_split(parts: &SplitParts) -> (Banded, Vec<f64>) {
    let scaled: Vec<Banded> = parts
        .c
        .iter()
        .zip(&parts.lambda)
        .map(|(c, lam)| {
            let mut b = c.to_banded();
            for i in 0..b.order() {
                for j in b.cols(i) {
                    b.set(i, j, b.get(i, j).abs() / lam[i]);
                }
            }
            b
        })
        .collect();
    let x = entrywise_max(&scaled);
    let n = x.order();
    let dmax = (0..n).map(|j| parts.lambda.iter().map(|l| 1.0 / l[j]).fold(0.0, f64::max)).collect();
    (x, dmax)
}

/// `I - X` in band storage.
fn identity_minus(x: &Banded) -> Banded {
    let (kl, ku) = x.bandwidths();
    let mut a = Banded::zeros(x.order(), kl, ku);
    for i in 0..x.order() {
        for j in x.cols(i) {
            a.set(i, j, if i == j { 1.0 } else { 0.0 } - x.get(i, j));
        }
    }
    a
}

/// `‖(I - X)⁻¹ diag(dmax)‖` without forming the inverse when it is known to
/// be nonnegative.
fn splitting_constant(x: &Banded, dmax: &[f64], norm: NormTag, nonnegative_inverse: bool) -> Result<f64> {
    let n = x.order();
    let a = identity_minus(x);
    if nonnegative_inverse && norm != NormTag::Two {
        let (mat, rhs) = match norm {
            NormTag::Inf => (a, dmax.to_vec()),
            _ => (a.transpose(), vec![1.0; n]),
        };
        let Ok(lu) = BandedLu::factor(&mat) else {
            return Ok(f64::INFINITY);
        };
        let z = lu.solve(&rhs);
        return Ok(match norm {
            NormTag::Inf => z.into_iter().fold(0.0, f64::max),
            _ => z.iter().zip(dmax).map(|(u, d)| u * d).fold(0.0, f64::max),
        });
    }
    if n > DENSE_BOUND_LIMIT {
        return if nonnegative_inverse { Err(Error::TooLarge { n, limit: DENSE_BOUND_LIMIT }) } else { Ok(f64::INFINITY) };
    }
    match a.to_dense().try_inverse() {
        Some(inv) => {
            let scaled = DMatrix::from_fn(n, n, |i, j| inv[(i, j)] * dmax[j]);
            Ok(dense_norm(&scaled, norm))
        }
        None => Ok(f64::INFINITY),
    }
}

/// Splitting bound: `ᾱ <= ‖(I - max_i Λ_i⁻¹|C_i|)⁻¹ max_i Λ_i⁻¹‖`, valid when
/// `ρ(max_i Λ_i⁻¹|C_i|) < 1`. The constant is reported either way.
pub fn bound42(blocks: &BlockMatrixSet, norm: NormTag) -> Result<BoundReport> {
    let parts = split_parts(blocks)?;
    let (x, dmax) = max_split(&parts);
    let rho = spectral_radius_nonneg(&x).value;
    let ok = rho < 1.0;
    let constant = splitting_constant(&x, &dmax, norm, ok)?;
    Ok(BoundReport {
        kind: BoundKind::Thm42Eta,
        constant,
        norm,
        condition_satisfied: ok,
        condition_value: rho,
        error_interval: None,
    })
}

/// Dominance bound in the 1-norm: `ᾱ_1 <= 1 / min_i min_k (⟨B_kᵀ⟩e)_i`,
/// valid when every block is column sdd with matching diagonal signs.
pub fn bound43(blocks: &BlockMatrixSet) -> BoundReport {
    let n = blocks.order();
    let classes: Vec<SddClass> = blocks.all().map(sdd_classify).collect();
    let all_sdd = classes.iter().all(|c| c.col_sdd);
    let signs_agree = (0..n).all(|i| {
        let s0 = blocks.m.get(i, i) > 0.0;
        blocks.h.iter().all(|h| (h.get(i, i) > 0.0) == s0)
    });
    let min_margin = classes.iter().flat_map(|c| c.col_margins.iter().copied()).fold(f64::INFINITY, f64::min);
    let constant = if min_margin > 0.0 { 1.0 / min_margin } else { f64::INFINITY };
    BoundReport {
        kind: BoundKind::Thm43Tau,
        constant,
        norm: NormTag::One,
        condition_satisfied: all_sdd && signs_agree,
        condition_value: min_margin,
        error_interval: None,
    }
}

/// A constant together with the norm it was computed in.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormedConstant {
    pub value: f64,
    pub norm: NormTag,
}

/// `(‖r(y)‖ / α̲, ᾱ ‖r(y)‖)` in `norm`.
pub fn residual_error_interval(
    problem: &EhlcpProblem,
    y: &[f64],
    alpha_upper: NormedConstant,
    alpha_lower_den: NormedConstant,
    norm: NormTag,
) -> Result<(f64, f64)> {
    for c in [alpha_upper, alpha_lower_den] {
        if c.norm != norm {
            return Err(Error::NormMismatch { constants: c.norm, requested: norm });
        }
    }
    let r = vec_norm(&pls_residual(problem, y).r, norm);
    Ok((r / alpha_lower_den.value, alpha_upper.value * r))
}

/// `α̲ = max ‖M D_0 + Σ H_i D_i‖`, attained at a vertex selection.
pub fn underalpha_exact(blocks: &BlockMatrixSet, norm: NormTag, budget: u128) -> Result<f64> {
    let n = blocks.order();
    let radix = blocks.num_h() + 1;
    let total = check_budget(radix, n, budget)?;
    let parts = par_ranges(total, |range| {
        let mut best = 0.0f64;
        for_each_assignment(range, radix, n, |_, a| best = best.max(dense_norm(&representative_dense(blocks, a), norm)));
        best
    });
    Ok(parts.into_iter().fold(0.0, f64::max))
}

/// `α̲` estimate: exact when the vertex count fits `budget`, otherwise a
/// sampled lower estimate. The flag tells which.
pub fn underalpha(blocks: &BlockMatrixSet, norm: NormTag, budget: u128, samples: usize, seed: u64) -> Result<(f64, bool)> {
    match underalpha_exact(blocks, norm, budget) {
        Ok(v) => Ok((v, true)),
        Err(Error::BudgetExceeded { .. }) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let k = blocks.num_h() + 1;
            let n = blocks.order();
            let v = (0..samples)
                .map(|_| dense_norm(&blocks.combine(&random_selection(&mut rng, k, n).lambdas), norm))
                .fold(0.0, f64::max);
            Ok((v, false))
        }
        Err(e) => Err(e),
    }
}

/// Lower estimate of `ᾱ = max ‖(M D_0 + Σ H_i D_i)⁻¹‖` over the vertex
/// selections (when few enough) and `samples` random selections.
pub fn overalpha_estimate(blocks: &BlockMatrixSet, norm: NormTag, samples: usize, seed: u64) -> Result<f64> {
    let n = blocks.order();
    let k = blocks.num_h() + 1;
    let inverse_norm = |sel: &DiagonalSelection| -> Result<f64> {
        let s = blocks.combine(&sel.lambdas);
        let cond = crate::linalg::condition_one(&s);
        match s.try_inverse() {
            Some(inv) if cond <= crate::wproperty::SINGULAR_CONDITION => Ok(dense_norm(&inv, norm)),
            _ => Err(Error::SingularSelection { condition: cond, lambdas: sel.lambdas.clone() }),
        }
    };
    let mut best = 0.0f64;
    let vertices = assignment_count(k, n);
    if vertices <= VERTEX_LIMIT {
        for idx in 0..vertices {
            let a = RepresentativeAssignment::from_index(idx, k, n);
            best = best.max(inverse_norm(&DiagonalSelection::vertex(&a.0, k))?);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        best = best.max(inverse_norm(&random_selection(&mut rng, k, n))?);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockdata::{BoundLadder, Tridiagonal};
    use crate::wproperty::DEFAULT_BUDGET;

    fn identities(n: usize, m: usize) -> BlockMatrixSet {
        BlockMatrixSet::new(MatrixStore::identity(n), vec![MatrixStore::identity(n); m])
    }

    fn triangular_pair() -> BlockMatrixSet {
        BlockMatrixSet::new(
            MatrixStore::dense_from_rows(&[&[1.0, 0.0], &[-1.0, 1.0]]),
            vec![MatrixStore::dense_from_rows(&[&[1.0, 0.0], &[2.0, 1.0]])],
        )
    }

    fn dominant_pair() -> BlockMatrixSet {
        let m = MatrixStore::dense_from_rows(&[&[2.0, 0.0, 0.0], &[1.0, 2.0, 1.0], &[0.0, 1.0, 2.0]]);
        BlockMatrixSet::new(m.clone(), vec![m])
    }

    fn triangular(alpha: f64) -> BlockMatrixSet {
        BlockMatrixSet::new(
            MatrixStore::dense_from_rows(&[&[1.0, 0.0], &[alpha, 1.0]]),
            vec![MatrixStore::dense_from_rows(&[&[1.0, 0.0], &[alpha * alpha, 1.0]])],
        )
    }

    #[test]
    fn comparison_examples() {
        let t = MatrixStore::Tridiagonal(Tridiagonal::constant(4, 1.0, 4.0, -2.0));
        let c = comparison_matrix(&t);
        assert_eq!(c, MatrixStore::Tridiagonal(Tridiagonal::constant(4, -1.0, 4.0, -2.0)));
        assert_eq!(comparison_matrix(&MatrixStore::identity(3)), MatrixStore::identity(3));
        let a = MatrixStore::dense_from_rows(&[&[2.0, -3.0], &[-1.0, 5.0]]);
        assert_eq!(comparison_matrix(&a), a);
    }

    #[test]
    fn sdd_examples() {
        let t = MatrixStore::Tridiagonal(Tridiagonal::constant(6, 1.0, 4.0, -2.0));
        let c = sdd_classify(&t);
        assert!(c.row_sdd && c.col_sdd);
        assert_eq!(c.row_margins[2], 1.0);
        assert_eq!(c.col_margins[2], 1.0);
        assert!(!sdd_classify(&triangular_pair().m).col_sdd);
        assert!(sdd_classify(&dominant_pair().m).col_sdd);
    }

    #[test]
    fn split_reconstructs() {
        let b = dominant_pair();
        let p = split_parts(&b).unwrap();
        for (k, a) in b.all().enumerate() {
            for i in 0..3 {
                assert_eq!(p.c[k].get(i, i), 0.0);
                for j in 0..3 {
                    let lam = if i == j { p.lambda[k][i] } else { 0.0 };
                    assert_eq!(lam - p.c[k].get(i, j), a.get(i, j));
                }
            }
        }
        let neg = BlockMatrixSet::new(MatrixStore::identity(2), vec![MatrixStore::dense_from_rows(&[&[1.0, 0.0], &[0.0, -1.0]])]);
        assert!(matches!(split_parts(&neg), Err(Error::NonpositiveDiagonal { block: 1, index: 1 })));
    }

    #[test]
    fn identity_bounds_are_one() {
        let b = identities(4, 2);
        for tag in [NormTag::One, NormTag::Inf, NormTag::Two] {
            let r = bound42(&b, tag).unwrap();
            assert!((r.constant - 1.0).abs() < 1e-14);
            assert_eq!(r.condition_value, 0.0);
        }
        assert_eq!(bound43(&b).constant, 1.0);
        assert!((overalpha_estimate(&b, NormTag::Inf, 20, 1).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(underalpha_exact(&b, NormTag::Inf, DEFAULT_BUDGET).unwrap(), 1.0);
    }

    #[test]
    fn triangular_and_dominant_pairs() {
        let r = bound42(&triangular_pair(), NormTag::Inf).unwrap();
        assert!(r.condition_satisfied);
        assert_eq!(r.condition_value, 0.0);
        let d = bound43(&dominant_pair());
        assert!(d.condition_satisfied);
        assert_eq!(d.constant, 1.0);
        assert!(!bound43(&triangular_pair()).condition_satisfied);
    }

    #[test]
    fn triangular_family_constant() {
        for alpha in [1.0, 2.0, 3.0] {
            let b = triangular(alpha);
            let r = bound42(&b, NormTag::Inf).unwrap();
            assert!((r.constant - (1.0 + alpha * alpha)).abs() < 1e-12, "{alpha}: {}", r.constant);
        }
        let over = overalpha_estimate(&triangular(1.0), NormTag::Inf, 0, 0).unwrap();
        assert!((over - 2.0).abs() < 1e-14);
    }

    #[test]
    fn dense_and_banded_splitting_constants_agree() {
        let b = dominant_pair();
        let parts = split_parts(&b).unwrap();
        let (x, d) = max_split(&parts);
        for tag in [NormTag::One, NormTag::Inf] {
            let fast = splitting_constant(&x, &d, tag, true).unwrap();
            let dense = splitting_constant(&x, &d, tag, false).unwrap();
            assert!((fast - dense).abs() < 1e-12);
        }
    }

    #[test]
    fn attained_upper_bound() {
        let b = triangular(1.0);
        let p = EhlcpProblem::new(b.clone(), vec![1.0, 0.0], BoundLadder::empty(2));
        let up = NormedConstant { value: bound42(&b, NormTag::Inf).unwrap().constant, norm: NormTag::Inf };
        let lo = NormedConstant { value: underalpha_exact(&b, NormTag::Inf, DEFAULT_BUDGET).unwrap(), norm: NormTag::Inf };
        let (l, u) = residual_error_interval(&p, &[3.0, -7.0], up, lo, NormTag::Inf).unwrap();
        assert_eq!(u, 8.0);
        assert!(l <= 8.0);
        assert_eq!(residual_error_interval(&p, &[-1.0, 1.0], up, lo, NormTag::Inf).unwrap(), (0.0, 0.0));
        let one = NormedConstant { value: 1.0, norm: NormTag::One };
        assert!(matches!(residual_error_interval(&p, &[0.0, 0.0], one, lo, NormTag::Inf), Err(Error::NormMismatch { .. })));
    }

    #[test]
    fn dominance_bound_covers_vertices() {
        let b = dominant_pair();
        let c = bound43(&b).constant;
        let mut a = RepresentativeAssignment::from_index(0, 2, 3);
        loop {
            let inv = representative_dense(&b, &a).try_inverse().unwrap();
            assert!(dense_norm(&inv, NormTag::One) <= c + 1e-12);
            if !a.advance(2) {
                break;
            }
        }
    }

    #[test]
    fn singular_selection_is_a_witness() {
        let b = BlockMatrixSet::new(MatrixStore::identity(2), vec![MatrixStore::dense_from_rows(&[&[1.0, 1.0], &[1.0, 1.0]])]);
        assert!(matches!(overalpha_estimate(&b, NormTag::Inf, 0, 0), Err(Error::SingularSelection { .. })));
    }
}
