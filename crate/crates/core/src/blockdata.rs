//! Problem data: matrix layouts, the block matrix set `(M, H_1, ..., H_m)`,
//! the bound ladder `d_1, ..., d_{m-1}` and report-style validation.

use std::fmt;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::linalg::{Banded, LinearMap};

/// Constant-coefficient-free tridiagonal matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Tridiagonal {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl Tridiagonal {
    pub fn constant(n: usize, sub: f64, diag: f64, sup: f64) -> Self {
        let off = n.saturating_sub(1);
        Tridiagonal { sub: vec![sub; off], diag: vec![diag; n], sup: vec![sup; off] }
    }

    pub fn order(&self) -> usize {
        self.diag.len()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else if j + 1 == i {
            self.sub[j]
        } else if i + 1 == j {
            self.sup[i]
        } else {
            0.0
        }
    }

    fn map(&self, diag: impl Fn(f64) -> f64, off: impl Fn(f64) -> f64) -> Self {
        Tridiagonal {
            sub: self.sub.iter().map(|&v| off(v)).collect(),
            diag: self.diag.iter().map(|&v| diag(v)).collect(),
            sup: self.sup.iter().map(|&v| off(v)).collect(),
        }
    }
}

/// `blktridiag(sub*I, T, sup*I)` with `g` diagonal blocks `T` of order `g`,
/// so the full order is `g*g`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockTridiagonal {
    pub block: Tridiagonal,
    pub sub: f64,
    pub sup: f64,
}

impl BlockTridiagonal {
    pub fn block_order(&self) -> usize {
        self.block.order()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let g = self.block_order();
        let (bi, ii) = (i / g, i % g);
        let (bj, jj) = (j / g, j % g);
        if bi == bj {
            self.block.get(ii, jj)
        } else if ii != jj {
            0.0
        } else if bj == bi + 1 {
            self.sup
        } else if bi == bj + 1 {
            self.sub
        } else {
            0.0
        }
    }
}

/// Storage for one `n x n` block. Band layouts return 0 outside the band.
#[derive(Clone, Debug, PartialEq)]
pub enum MatrixStore {
    Dense(DMatrix<f64>),
    Tridiagonal(Tridiagonal),
    BlockTridiagonal(BlockTridiagonal),
    /// General band storage, produced by derived computations.
    Banded(Banded),
}

impl MatrixStore {
    pub fn identity(n: usize) -> Self {
        MatrixStore::Tridiagonal(Tridiagonal::constant(n, 0.0, 1.0, 0.0))
    }

    pub fn dense_from_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        MatrixStore::Dense(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn order(&self) -> usize {
        match self {
            MatrixStore::Dense(a) => a.nrows(),
            MatrixStore::Tridiagonal(t) => t.order(),
            MatrixStore::BlockTridiagonal(b) => b.block_order() * b.block_order(),
            MatrixStore::Banded(b) => b.order(),
        }
    }

    pub fn layout_tag(&self) -> &'static str {
        match self {
            MatrixStore::Dense(_) => "dense",
            MatrixStore::Tridiagonal(_) => "tridiag",
            MatrixStore::BlockTridiagonal(_) => "blocktridiag",
            MatrixStore::Banded(_) => "banded",
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            MatrixStore::Dense(a) => a[(i, j)],
            MatrixStore::Tridiagonal(t) => t.get(i, j),
            MatrixStore::BlockTridiagonal(b) => b.get(i, j),
            MatrixStore::Banded(b) => b.get(i, j),
        }
    }

    /// Visits the stored entries of row `i` in increasing column order.
    pub fn for_each_in_row(&self, i: usize, mut f: impl FnMut(usize, f64)) {
        let n = self.order();
        match self {
            MatrixStore::Dense(a) => (0..n).for_each(|j| f(j, a[(i, j)])),
            MatrixStore::Tridiagonal(t) => {
                if i > 0 {
                    f(i - 1, t.sub[i - 1]);
                }
                f(i, t.diag[i]);
                if i + 1 < n {
                    f(i + 1, t.sup[i]);
                }
            }
            MatrixStore::BlockTridiagonal(b) => {
                let g = b.block_order();
                let (bi, ii) = (i / g, i % g);
                if bi > 0 {
                    f(i - g, b.sub);
                }
                if ii > 0 {
                    f(i - 1, b.block.sub[ii - 1]);
                }
                f(i, b.block.diag[ii]);
                if ii + 1 < g {
                    f(i + 1, b.block.sup[ii]);
                }
                if bi + 1 < g {
                    f(i + g, b.sup);
                }
            }
            MatrixStore::Banded(b) => b.cols(i).for_each(|j| f(j, b.get(i, j))),
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.order()).map(|i| self.get(i, i)).collect()
    }

    /// Band storage with the tightest bandwidth the layout implies.
    pub fn to_banded(&self) -> Banded {
        match self {
            MatrixStore::Dense(a) => Banded::from_dense(a),
            MatrixStore::Banded(b) => b.clone(),
            MatrixStore::Tridiagonal(t) => {
                let n = t.order();
                let kl = usize::from(t.sub.iter().any(|&v| v != 0.0));
                let ku = usize::from(t.sup.iter().any(|&v| v != 0.0));
                let mut out = Banded::zeros(n, kl, ku);
                self.fill_band(&mut out);
                out
            }
            MatrixStore::BlockTridiagonal(b) => {
                let g = b.block_order();
                let inner_l = usize::from(b.block.sub.iter().any(|&v| v != 0.0));
                let inner_u = usize::from(b.block.sup.iter().any(|&v| v != 0.0));
                let kl = if b.sub != 0.0 && g > 1 { g } else { inner_l };
                let ku = if b.sup != 0.0 && g > 1 { g } else { inner_u };
                let mut out = Banded::zeros(g * g, kl, ku);
                self.fill_band(&mut out);
                out
            }
        }
    }

    fn fill_band(&self, out: &mut Banded) {
        for i in 0..self.order() {
            self.for_each_in_row(i, |j, v| {
                if v != 0.0 {
                    out.set(i, j, v);
                }
            });
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            MatrixStore::Dense(a) => a.clone(),
            _ => {
                let n = self.order();
                let mut a = DMatrix::zeros(n, n);
                for i in 0..n {
                    self.for_each_in_row(i, |j, v| a[(i, j)] = v);
                }
                a
            }
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.order()];
        self.apply(x, &mut out);
        out
    }

    /// Entrywise map keeping the layout: `diag` applies on the diagonal,
    /// `off` everywhere else.
    pub fn map_entries(&self, diag: impl Fn(f64) -> f64, off: impl Fn(f64) -> f64) -> Self {
        match self {
            MatrixStore::Dense(a) => {
                MatrixStore::Dense(DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| {
                    if i == j {
                        diag(a[(i, j)])
                    } else {
                        off(a[(i, j)])
                    }
                }))
            }
            MatrixStore::Tridiagonal(t) => MatrixStore::Tridiagonal(t.map(diag, off)),
            MatrixStore::BlockTridiagonal(b) => MatrixStore::BlockTridiagonal(BlockTridiagonal {
                block: b.block.map(&diag, &off),
                sub: off(b.sub),
                sup: off(b.sup),
            }),
            MatrixStore::Banded(b) => {
                let mut out = b.clone();
                for i in 0..b.order() {
                    for j in b.cols(i) {
                        let v = b.get(i, j);
                        out.set(i, j, if i == j { diag(v) } else { off(v) });
                    }
                }
                MatrixStore::Banded(out)
            }
        }
    }

    pub fn transpose(&self) -> Self {
        match self {
            MatrixStore::Dense(a) => MatrixStore::Dense(a.transpose()),
            MatrixStore::Tridiagonal(t) => MatrixStore::Tridiagonal(Tridiagonal {
                sub: t.sup.clone(),
                diag: t.diag.clone(),
                sup: t.sub.clone(),
            }),
            MatrixStore::BlockTridiagonal(b) => MatrixStore::BlockTridiagonal(BlockTridiagonal {
                block: Tridiagonal { sub: b.block.sup.clone(), diag: b.block.diag.clone(), sup: b.block.sub.clone() },
                sub: b.sup,
                sup: b.sub,
            }),
            MatrixStore::Banded(b) => MatrixStore::Banded(b.transpose()),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.order();
        let mut sym = true;
        for i in 0..n {
            self.for_each_in_row(i, |j, v| {
                if j > i && v != self.get(j, i) {
                    sym = false;
                }
            });
            if !sym {
                break;
            }
        }
        // Banded/dense rows only visit one side, so check the lower side too.
        if sym {
            for i in 0..n {
                self.for_each_in_row(i, |j, v| {
                    if j < i && v != self.get(j, i) {
                        sym = false;
                    }
                });
            }
        }
        sym
    }

    /// Whether every entry is finite.
    pub fn is_finite(&self) -> bool {
        match self {
            MatrixStore::Dense(a) => a.iter().all(|v| v.is_finite()),
            MatrixStore::Tridiagonal(t) => t.sub.iter().chain(&t.diag).chain(&t.sup).all(|v| v.is_finite()),
            MatrixStore::BlockTridiagonal(b) => {
                b.sub.is_finite()
                    && b.sup.is_finite()
                    && b.block.sub.iter().chain(&b.block.diag).chain(&b.block.sup).all(|v| v.is_finite())
            }
            MatrixStore::Banded(b) => b.max_abs().is_finite(),
        }
    }
}

impl LinearMap for MatrixStore {
    fn dim(&self) -> usize {
        self.order()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        match self {
            MatrixStore::Banded(b) => b.apply(x, out),
            MatrixStore::Dense(a) => a.apply(x, out),
            _ => {
                for (i, o) in out.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    self.for_each_in_row(i, |j, v| acc += v * x[j]);
                    *o = acc;
                }
            }
        }
    }
}

/// The block matrix `H = (M, H_1, ..., H_m)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockMatrixSet {
    pub m: MatrixStore,
    pub h: Vec<MatrixStore>,
}

impl BlockMatrixSet {
    pub fn new(m: MatrixStore, h: Vec<MatrixStore>) -> Self {
        BlockMatrixSet { m, h }
    }

    pub fn order(&self) -> usize {
        self.m.order()
    }

    /// Number of `H_i` blocks.
    pub fn num_h(&self) -> usize {
        self.h.len()
    }

    /// Block `0` is `M`, block `i >= 1` is `H_i`.
    pub fn block(&self, k: usize) -> &MatrixStore {
        if k == 0 {
            &self.m
        } else {
            &self.h[k - 1]
        }
    }

    pub fn all(&self) -> impl Iterator<Item = &MatrixStore> {
        std::iter::once(&self.m).chain(self.h.iter())
    }

    /// `M D_0 + sum_i H_i D_i` for the given diagonal weights, as a dense matrix.
    pub fn combine(&self, lambdas: &[Vec<f64>]) -> DMatrix<f64> {
        let n = self.order();
        let mut s = DMatrix::zeros(n, n);
        for (k, lam) in lambdas.iter().enumerate() {
            let blk = self.block(k);
            for i in 0..n {
                blk.for_each_in_row(i, |j, v| s[(i, j)] += v * lam[j]);
            }
        }
        s
    }
}

/// The ladder `d_1, ..., d_{m-1}` of strictly positive upper bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundLadder {
    n: usize,
    pub d: Vec<Vec<f64>>,
}

impl BoundLadder {
    pub fn new(n: usize, d: Vec<Vec<f64>>) -> Self {
        BoundLadder { n, d }
    }

    pub fn empty(n: usize) -> Self {
        BoundLadder { n, d: Vec::new() }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    /// Number of unknown blocks `x_i` the ladder serves (`len + 1`).
    pub fn m(&self) -> usize {
        self.d.len() + 1
    }

    /// `s_0 = 0`, `s_i = s_{i-1} + d_i`, for `i < m`.
    pub fn prefix_sums(&self) -> Vec<Vec<f64>> {
        let mut s = Vec::with_capacity(self.m());
        let mut acc = vec![0.0; self.n];
        s.push(acc.clone());
        for di in &self.d {
            for (a, v) in acc.iter_mut().zip(di) {
                *a += v;
            }
            s.push(acc.clone());
        }
        s
    }
}

/// Free function form of [`BoundLadder::prefix_sums`].
pub fn prefix_sums(ladder: &BoundLadder) -> Vec<Vec<f64>> {
    ladder.prefix_sums()
}

/// `M w = q + sum_i H_i x_i` with the chained complementarity constraints.
#[derive(Clone, Debug, PartialEq)]
pub struct EhlcpProblem {
    pub blocks: BlockMatrixSet,
    pub q: Vec<f64>,
    pub ladder: BoundLadder,
}

impl EhlcpProblem {
    pub fn new(blocks: BlockMatrixSet, q: Vec<f64>, ladder: BoundLadder) -> Self {
        EhlcpProblem { blocks, q, ladder }
    }

    pub fn order(&self) -> usize {
        self.blocks.order()
    }

    pub fn m(&self) -> usize {
        self.blocks.num_h()
    }

    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }

    /// Reads back the `m = 2`, `M = H_2 = I` special case, if this is one.
    pub fn as_two_block(&self) -> Option<Ehlcp2Problem> {
        if self.m() != 2 || !is_identity(&self.blocks.m) || !is_identity(&self.blocks.h[1]) {
            return None;
        }
        Some(Ehlcp2Problem { h1: self.blocks.h[0].clone(), q: self.q.clone(), b: self.ladder.d[0].clone() })
    }
}

fn is_identity(a: &MatrixStore) -> bool {
    let mut ok = true;
    for i in 0..a.order() {
        a.for_each_in_row(i, |j, v| {
            if v != if i == j { 1.0 } else { 0.0 } {
                ok = false;
            }
        });
    }
    ok
}

/// `w = q + H_1 x_1 + x_2` with `0 <= x_1 <= b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ehlcp2Problem {
    pub h1: MatrixStore,
    pub q: Vec<f64>,
    pub b: Vec<f64>,
}

impl Ehlcp2Problem {
    pub fn order(&self) -> usize {
        self.h1.order()
    }

    /// The general form `(M, H_1, H_2) = (I, H_1, I)`, `d_1 = b`.
    pub fn to_general(&self) -> EhlcpProblem {
        let n = self.order();
        EhlcpProblem {
            blocks: BlockMatrixSet::new(MatrixStore::identity(n), vec![self.h1.clone(), MatrixStore::identity(n)]),
            q: self.q.clone(),
            ladder: BoundLadder::new(n, vec![self.b.clone()]),
        }
    }

    pub fn validate(&self) -> ValidationReport {
        validate(&self.to_general())
    }
}

/// A candidate tuple `(w, x_1, ..., x_m)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EhlcpSolution {
    pub w: Vec<f64>,
    pub x: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Defect {
    DimensionMismatch { what: String, expected: usize, found: usize },
    LadderNotPositive { rung: usize, index: usize, value: f64 },
    NonFinite { what: String },
    NoBlocks,
    Malformed(String),
}

impl fmt::Display for Defect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Defect::DimensionMismatch { what, expected, found } => {
                write!(f, "dimension mismatch: {what} has size {found}, expected {expected}")
            }
            Defect::LadderNotPositive { rung, index, value } => {
                write!(f, "ladder not strictly positive: d_{rung}[{index}] = {value}")
            }
            Defect::NonFinite { what } => write!(f, "non-finite entries in {what}"),
            Defect::NoBlocks => write!(f, "at least one H block is required"),
            Defect::Malformed(msg) => write!(f, "malformed input: {msg}"),
        }
    }
}

/// All defects found in a problem; empty means valid.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub defects: Vec<Defect>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.defects.is_empty()
    }

    pub fn push(&mut self, d: Defect) {
        self.defects.push(d);
    }

    pub fn into_result(self) -> crate::Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(crate::Error::Invalid(self))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.defects.is_empty() {
            return f.write_str("ok");
        }
        for (k, d) in self.defects.iter().enumerate() {
            if k > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

pub fn validate(problem: &EhlcpProblem) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = problem.order();
    if n == 0 {
        report.push(Defect::DimensionMismatch { what: "M".into(), expected: 1, found: 0 });
    }
    if problem.blocks.h.is_empty() {
        report.push(Defect::NoBlocks);
    }
    if !problem.blocks.m.is_finite() {
        report.push(Defect::NonFinite { what: "M".into() });
    }
    for (i, h) in problem.blocks.h.iter().enumerate() {
        if h.order() != n {
            report.push(Defect::DimensionMismatch { what: format!("H_{}", i + 1), expected: n, found: h.order() });
        }
        if !h.is_finite() {
            report.push(Defect::NonFinite { what: format!("H_{}", i + 1) });
        }
    }
    if problem.q.len() != n {
        report.push(Defect::DimensionMismatch { what: "q".into(), expected: n, found: problem.q.len() });
    }
    if problem.q.iter().any(|v| !v.is_finite()) {
        report.push(Defect::NonFinite { what: "q".into() });
    }
    let m = problem.blocks.h.len();
    let ladder = &problem.ladder;
    if ladder.d.len() + 1 != m.max(1) {
        report.push(Defect::DimensionMismatch { what: "ladder".into(), expected: m.saturating_sub(1), found: ladder.d.len() });
    }
    if ladder.order() != n {
        report.push(Defect::DimensionMismatch { what: "ladder order".into(), expected: n, found: ladder.order() });
    }
    for (r, di) in ladder.d.iter().enumerate() {
        if di.len() != n {
            report.push(Defect::DimensionMismatch { what: format!("d_{}", r + 1), expected: n, found: di.len() });
        }
        if di.iter().any(|v| !v.is_finite()) {
            report.push(Defect::NonFinite { what: format!("d_{}", r + 1) });
        }
        if let Some((index, &value)) = di.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            report.push(Defect::LadderNotPositive { rung: r + 1, index, value });
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two() -> EhlcpProblem {
        let n = 2;
        let h1 = MatrixStore::dense_from_rows(&[&[2.0, 0.5], &[0.5, 2.0]]);
        EhlcpProblem::new(
            BlockMatrixSet::new(MatrixStore::identity(n), vec![h1, MatrixStore::identity(n)]),
            vec![0.1, -0.2],
            BoundLadder::new(n, vec![vec![1.0, 1.0]]),
        )
    }

    #[test]
    fn well_formed_problem_passes() {
        assert!(validate(&two_by_two()).is_ok());
    }

    #[test]
    fn zero_ladder_entry_is_rejected() {
        let mut p = two_by_two();
        p.ladder.d[0][1] = 0.0;
        let report = validate(&p);
        assert!(!report.is_ok());
        assert!(report.to_string().contains("ladder not strictly positive"), "{report}");
    }

    #[test]
    fn short_q_is_a_dimension_mismatch() {
        let mut p = two_by_two();
        p.q.pop();
        let report = validate(&p);
        assert!(report.to_string().contains("dimension mismatch"), "{report}");
    }

    #[test]
    fn all_defects_are_reported_together() {
        let mut p = two_by_two();
        p.q.push(f64::NAN);
        p.ladder.d[0][0] = -1.0;
        assert_eq!(validate(&p).defects.len(), 3);
    }

    #[test]
    fn prefix_sums_accumulate() {
        let l = BoundLadder::new(2, vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(l.prefix_sums(), vec![vec![0.0, 0.0], vec![1.0, 2.0], vec![4.0, 6.0]]);
        assert_eq!(BoundLadder::empty(3).prefix_sums(), vec![vec![0.0; 3]]);
        let b = BoundLadder::new(4, vec![vec![0.1; 4]]);
        assert_eq!(b.prefix_sums()[1], vec![0.1; 4]);
    }

    #[test]
    fn layouts_agree_on_element_access() {
        let t = Tridiagonal { sub: vec![1.0, 2.0, 3.0], diag: vec![4.0, 5.0, 6.0, 7.0], sup: vec![-1.0, -2.0, -3.0] };
        let tri = MatrixStore::Tridiagonal(t.clone());
        let dense = MatrixStore::Dense(tri.to_dense());
        let band = MatrixStore::Banded(tri.to_banded());
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(tri.get(i, j), dense.get(i, j));
                assert_eq!(band.get(i, j), dense.get(i, j));
            }
        }
        let blk = MatrixStore::BlockTridiagonal(BlockTridiagonal {
            block: Tridiagonal::constant(3, -1.0, 4.0, -1.0),
            sub: -1.0,
            sup: -0.5,
        });
        let d = blk.to_dense();
        let b = blk.to_banded();
        assert_eq!(b.bandwidths(), (3, 3));
        for i in 0..9 {
            for j in 0..9 {
                assert_eq!(blk.get(i, j), d[(i, j)]);
                assert_eq!(b.get(i, j), d[(i, j)]);
            }
        }
        assert_eq!(d[(0, 3)], -0.5);
        assert_eq!(d[(3, 0)], -1.0);
        assert_eq!(d[(2, 3)], 0.0);
        let x: Vec<f64> = (0..9).map(|k| k as f64 - 3.0).collect();
        let dv = MatrixStore::Dense(d).matvec(&x);
        assert_eq!(blk.matvec(&x), dv);
    }

    #[test]
    fn transpose_and_symmetry() {
        let t = MatrixStore::Tridiagonal(Tridiagonal::constant(4, 1.0, 4.0, -2.0));
        assert!(!t.is_symmetric());
        let tt = t.transpose();
        assert_eq!(tt.get(0, 1), 1.0);
        assert_eq!(tt.get(1, 0), -2.0);
        assert!(MatrixStore::Tridiagonal(Tridiagonal::constant(4, -1.0, 4.0, -1.0)).is_symmetric());
    }

    #[test]
    fn two_block_roundtrip() {
        let p = two_by_two();
        let two = p.as_two_block().expect("two-block form");
        assert_eq!(two.to_general(), p);
    }
}
