//! Column representatives of `(M, H_1, ..., H_m)` and the column W-property:
//! every representative determinant is nonzero with one common sign.

use std::ops::Range;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use crate::blockdata::{BlockMatrixSet, MatrixStore};
use crate::linalg::condition_one;
use crate::transform::DiagonalSelection;
use crate::{Error, Result};

pub const DEFAULT_BUDGET: u128 = 1 << 20;
/// Relative band around zero for representative determinants.
pub const DET_ZERO_REL: f64 = 1e-10;
/// Condition estimate above which a selection combination counts as singular.
pub const SINGULAR_CONDITION: f64 = 1e14;

/// Column `j` is taken from block `c[j]` (`0` is `M`, `i` is `H_i`).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RepresentativeAssignment(pub Vec<usize>);

impl RepresentativeAssignment {
    /// Mixed-radix decoding with coordinate 0 as the least significant digit.
    pub fn from_index(mut index: u128, radix: usize, n: usize) -> Self {
        let r = radix as u128;
        let mut c = vec![0; n];
        for cj in c.iter_mut() {
            *cj = (index % r) as usize;
            index /= r;
        }
        RepresentativeAssignment(c)
    }

    pub fn index(&self, radix: usize) -> u128 {
        self.0.iter().rev().fold(0u128, |acc, &c| acc * radix as u128 + c as u128)
    }

    /// Advances to the next assignment; returns false after wrapping around.
    pub fn advance(&mut self, radix: usize) -> bool {
        for c in self.0.iter_mut() {
            *c += 1;
            if *c < radix {
                return true;
            }
            *c = 0;
        }
        false
    }
}

/// `(m + 1)^n`, saturating.
pub fn assignment_count(radix: usize, n: usize) -> u128 {
    (0..n).try_fold(1u128, |acc, _| acc.checked_mul(radix as u128)).unwrap_or(u128::MAX)
}

pub(crate) fn check_budget(radix: usize, n: usize, budget: u128) -> Result<u64> {
    let required = assignment_count(radix, n);
    if required > budget || required > u64::MAX as u128 {
        return Err(Error::BudgetExceeded { required, budget });
    }
    Ok(required as u64)
}

/// Runs `f` over consecutive index ranges covering `0..total` in parallel.
/// Results come back in range order.
pub(crate) fn par_ranges<T: Send>(total: u64, f: impl Fn(Range<u64>) -> T + Sync + Send) -> Vec<T> {
    let workers = rayon::current_num_threads() as u64;
    let chunk = (total / (workers * 8).max(1)).max(64);
    let chunks = total.div_ceil(chunk);
    (0..chunks).into_par_iter().map(|c| f(c * chunk..((c + 1) * chunk).min(total))).collect()
}

/// Visits every assignment in `range` with its index.
pub(crate) fn for_each_assignment(
    range: Range<u64>,
    radix: usize,
    n: usize,
    mut f: impl FnMut(u64, &RepresentativeAssignment),
) {
    if range.is_empty() {
        return;
    }
    let mut a = RepresentativeAssignment::from_index(range.start as u128, radix, n);
    for idx in range {
        f(idx, &a);
        a.advance(radix);
    }
}

pub(crate) fn representative_dense(blocks: &BlockMatrixSet, assign: &RepresentativeAssignment) -> DMatrix<f64> {
    let n = blocks.order();
    let mut r = DMatrix::zeros(n, n);
    for (k, blk) in blocks.all().enumerate() {
        for i in 0..n {
            blk.for_each_in_row(i, |j, v| {
                if assign.0[j] == k {
                    r[(i, j)] = v;
                }
            });
        }
    }
    r
}

/// The column representative picked by `assign`. Panics if an entry of
/// `assign` exceeds `m`.
pub fn representative(blocks: &BlockMatrixSet, assign: &RepresentativeAssignment) -> MatrixStore {
    assert!(assign.0.iter().all(|&c| c <= blocks.num_h()), "assignment entry out of range");
    MatrixStore::Dense(representative_dense(blocks, assign))
}

/// `-1`, `0` or `1`, with a relative zero band scaled by the column norms.
pub fn determinant_sign(r: &DMatrix<f64>) -> i8 {
    let n = r.nrows();
    let col_max = r.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    let det = r.clone().lu().determinant();
    let zero = DET_ZERO_REL * col_max.powi(n as i32);
    if !det.is_finite() || det.abs() < zero || col_max == 0.0 {
        0
    } else if det > 0.0 {
        1
    } else {
        -1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WPropertyReport {
    pub holds: bool,
    /// Smallest and largest determinant sign seen.
    pub determinant_sign_range: (i8, i8),
    pub witness: Option<RepresentativeAssignment>,
    pub representatives_checked: u128,
}

#[derive(Clone, Copy)]
struct SignScan {
    min: i8,
    max: i8,
    first: [Option<u64>; 3],
}

impl SignScan {
    fn empty() -> Self {
        SignScan { min: i8::MAX, max: i8::MIN, first: [None; 3] }
    }

    fn record(&mut self, idx: u64, s: i8) {
        self.min = self.min.min(s);
        self.max = self.max.max(s);
        let slot = &mut self.first[(s + 1) as usize];
        if slot.is_none() {
            *slot = Some(idx);
        }
    }

    fn merge(mut self, other: SignScan) -> Self {
        self.min = self.min.min(other.min);
        self.max = self.max.max(other.max);
        for k in 0..3 {
            self.first[k] = match (self.first[k], other.first[k]) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            };
        }
        self
    }
}

/// Exhaustive check of all `(m + 1)^n` column representatives.
pub fn has_column_w_property(blocks: &BlockMatrixSet, budget: u128) -> Result<WPropertyReport> {
    let n = blocks.order();
    let radix = blocks.num_h() + 1;
    let total = check_budget(radix, n, budget)?;
    let scan = par_ranges(total, |range| {
        let mut s = SignScan::empty();
        for_each_assignment(range, radix, n, |idx, a| s.record(idx, determinant_sign(&representative_dense(blocks, a))));
        s
    })
    .into_iter()
    .fold(SignScan::empty(), SignScan::merge);

    let holds = scan.min == scan.max && scan.min != 0;
    let witness = if holds {
        None
    } else if let Some(z) = scan.first[1] {
        Some(z)
    } else {
        // mixed strict signs: the first representative whose sign differs from index 0
        let first_sign_neg = scan.first[0] == Some(0);
        if first_sign_neg {
            scan.first[2]
        } else {
            scan.first[0]
        }
    };
    Ok(WPropertyReport {
        holds,
        determinant_sign_range: (scan.min, scan.max),
        witness: witness.map(|i| RepresentativeAssignment::from_index(i as u128, radix, n)),
        representatives_checked: total as u128,
    })
}

/// Whether `M D_0 + Σ H_i D_i` is numerically singular.
pub fn selection_is_singular(blocks: &BlockMatrixSet, sel: &DiagonalSelection) -> (bool, f64) {
    let cond = condition_one(&blocks.combine(&sel.lambdas));
    (!(cond <= SINGULAR_CONDITION), cond)
}

/// Per-coordinate uniform draw from the `(m + 1)`-simplex.
pub fn random_selection(rng: &mut ChaCha8Rng, blocks: usize, n: usize) -> DiagonalSelection {
    let mut lambdas = vec![vec![0.0; n]; blocks];
    for j in 0..n {
        let e: Vec<f64> = (0..blocks).map(|_| Exp1.sample(rng)).collect();
        let s: f64 = e.iter().sum();
        for (k, v) in e.into_iter().enumerate() {
            lambdas[k][j] = v / s;
        }
    }
    DiagonalSelection { lambdas }
}

/// Searches for a selection making the combination singular. Pairwise
/// midpoint selections are tried first, then `trials` random ones. `None`
/// proves nothing.
pub fn falsify_random(blocks: &BlockMatrixSet, trials: usize, seed: u64) -> Option<DiagonalSelection> {
    let n = blocks.order();
    let k = blocks.num_h() + 1;
    for a in 0..k {
        for b in a + 1..k {
            let mut lambdas = vec![vec![0.0; n]; k];
            lambdas[a] = vec![0.5; n];
            lambdas[b] = vec![0.5; n];
            let sel = DiagonalSelection { lambdas };
            if selection_is_singular(blocks, &sel).0 {
                return Some(sel);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials).map(|_| random_selection(&mut rng, k, n)).find(|sel| selection_is_singular(blocks, sel).0)
}
