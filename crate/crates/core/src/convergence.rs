//! Sufficient convergence conditions for the iterations in [`crate::solvers`]
//! and the step-size heuristics for the two-block iteration.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::blockdata::{BlockMatrixSet, MatrixStore};
use crate::bounds::sdd_classify;
use crate::linalg::{spectral_radius_dense, spectral_radius_nonneg, Banded, BandedLu, NormTag};
use crate::transform::DiagonalSelection;
use crate::wproperty::{assignment_count, random_selection, RepresentativeAssignment};
use crate::{Error, Result};

/// Largest order for which `M⁻¹H_i` is formed densely.
pub const DENSE_INVERSE_LIMIT: usize = 2000;
pub const DEFAULT_SAMPLES: usize = 200;
/// Vertex selections are added to the sample when there are at most this many.
pub const VERTEX_LIMIT: u128 = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ConditionTag {
    Eq35Sampled,
    Eq38Rho,
    Eq38NormSum,
    Eq313Rho,
    Eq314Norm,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConvergenceReport {
    pub tag: ConditionTag,
    pub norm: Option<NormTag>,
    pub value: f64,
    pub threshold: f64,
    pub satisfied: bool,
    pub samples_used: usize,
    /// False for sampled checks, which only suggest convergence.
    pub certifying: bool,
}

impl ConvergenceReport {
    fn new(tag: ConditionTag, norm: Option<NormTag>, value: f64) -> Self {
        ConvergenceReport { tag, norm, value, threshold: 1.0, satisfied: value < 1.0, samples_used: 0, certifying: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cor31Report {
    pub rho: ConvergenceReport,
    pub norm_sum: ConvergenceReport,
}

impl Cor31Report {
    pub fn satisfied(&self) -> bool {
        self.rho.satisfied || self.norm_sum.satisfied
    }

    /// The form that is below one, preferring the spectral radius form.
    pub fn winning(&self) -> Option<ConditionTag> {
        if self.rho.satisfied {
            Some(self.rho.tag)
        } else if self.norm_sum.satisfied {
            Some(self.norm_sum.tag)
        } else {
            None
        }
    }
}

/// `I - M⁻¹A` for every `A` in `targets`, banded when `M` is diagonal.
fn iteration_parts(m: &MatrixStore, targets: &[&MatrixStore]) -> Result<Vec<Banded>> {
    let n = m.order();
    let mb = m.to_banded();
    if mb.bandwidths() == (0, 0) {
        let d = mb.diagonal();
        if let Some(pivot) = d.iter().position(|v| *v == 0.0 || !v.is_finite()) {
            return Err(Error::SingularM { pivot });
        }
        return Ok(targets
            .iter()
            .map(|a| {
                let mut b = a.to_banded().widen(0, 0);
                for i in 0..n {
                    for j in b.cols(i) {
                        let v = -b.get(i, j) / d[i] + if i == j { 1.0 } else { 0.0 };
                        b.set(i, j, v);
                    }
                }
                b
            })
            .collect());
    }
    if n > DENSE_INVERSE_LIMIT {
        return Err(Error::TooLarge { n, limit: DENSE_INVERSE_LIMIT });
    }
    let lu = BandedLu::factor(&mb).map_err(|pivot| Error::SingularM { pivot })?;
    Ok(targets
        .iter()
        .map(|a| {
            let ad = a.to_dense();
            let mut g = DMatrix::identity(n, n);
            for j in 0..n {
                let col: Vec<f64> = ad.column(j).iter().copied().collect();
                let z = lu.solve(&col);
                for i in 0..n {
                    g[(i, j)] -= z[i];
                }
            }
            Banded::from_dense(&g)
        })
        .collect())
}

/// Both forms of the fixed-point convergence condition for general `m`:
/// `ρ(Σ|I - M⁻¹H_i|)` and `Σ‖I - M⁻¹H_i‖`.
pub fn check_cor31(blocks: &BlockMatrixSet, norm: NormTag) -> Result<Cor31Report> {
    let targets: Vec<&MatrixStore> = blocks.h.iter().collect();
    let parts = iteration_parts(&blocks.m, &targets)?;
    let n = blocks.order();
    let kl = parts.iter().map(|p| p.bandwidths().0).max().unwrap_or(0);
    let ku = parts.iter().map(|p| p.bandwidths().1).max().unwrap_or(0);
    let mut sum = Banded::zeros(n, kl, ku);
    for p in &parts {
        for i in 0..n {
            for j in p.cols(i) {
                sum.set(i, j, sum.get(i, j) + p.get(i, j).abs());
            }
        }
    }
    let rho = spectral_radius_nonneg(&sum).value;
    let norm_sum: f64 = parts.iter().map(|p| p.norm(norm)).sum();
    Ok(Cor31Report {
        rho: ConvergenceReport::new(ConditionTag::Eq38Rho, None, rho),
        norm_sum: ConvergenceReport::new(ConditionTag::Eq38NormSum, Some(norm), norm_sum),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Thm34Report {
    pub rho: ConvergenceReport,
    /// One entry per norm tag 1, 2, ∞; the 2-norm value is NaN above the
    /// 2-norm size limit.
    pub norms: Vec<ConvergenceReport>,
}

impl Thm34Report {
    pub fn norm(&self, tag: NormTag) -> &ConvergenceReport {
        self.norms.iter().find(|r| r.norm == Some(tag)).expect("all norm tags present")
    }

    pub fn satisfied(&self) -> bool {
        self.rho.satisfied || self.norms.iter().any(|r| r.satisfied)
    }
}

/// `ω⁻¹H_1 - I` in band storage.
pub fn scaled_shift(h1: &MatrixStore, omega: f64) -> Banded {
    h1.map_entries(|v| v / omega - 1.0, |v| v / omega).to_banded().widen(0, 0)
}

/// `ρ(|ω⁻¹H_1 - I|)` and `‖ω⁻¹H_1 - I‖` in the 1, 2 and ∞ norms.
pub fn check_thm34(h1: &MatrixStore, omega: f64) -> Result<Thm34Report> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::InvalidParams(format!("omega = {omega} is not positive")));
    }
    let a = scaled_shift(h1, omega);
    let rho = spectral_radius_nonneg(&a.map(f64::abs)).value;
    let norms = NormTag::ALL
        .iter()
        .map(|&t| ConvergenceReport::new(ConditionTag::Eq314Norm, Some(t), a.norm(t)))
        .collect();
    Ok(Thm34Report { rho: ConvergenceReport::new(ConditionTag::Eq313Rho, None, rho), norms })
}

/// Largest `ρ(I - M⁻¹(M D_0 + Σ H_i D_i))` over random selections, plus all
/// vertex selections when there are few of them. Never certifying.
pub fn sample_rho_l(blocks: &BlockMatrixSet, trials: usize, seed: u64) -> Result<ConvergenceReport> {
    let n = blocks.order();
    if n > DENSE_INVERSE_LIMIT {
        return Err(Error::TooLarge { n, limit: DENSE_INVERSE_LIMIT });
    }
    let k = blocks.num_h() + 1;
    let all: Vec<&MatrixStore> = blocks.all().collect();
    // I - M⁻¹B_k for each block; L = Σ_k (I - M⁻¹B_k) D_k since Σ D_k = I
    let parts: Vec<DMatrix<f64>> = iteration_parts(&blocks.m, &all)?.iter().map(Banded::to_dense).collect();
    let rho_of = |sel: &DiagonalSelection| {
        let mut l = DMatrix::zeros(n, n);
        for (p, lam) in parts.iter().zip(&sel.lambdas) {
            for j in 0..n {
                if lam[j] != 0.0 {
                    for i in 0..n {
                        l[(i, j)] += p[(i, j)] * lam[j];
                    }
                }
            }
        }
        spectral_radius_dense(&l)
    };
    let mut value = 0.0f64;
    let mut used = 0;
    let vertices = assignment_count(k, n);
    if vertices <= VERTEX_LIMIT {
        for idx in 0..vertices {
            let a = RepresentativeAssignment::from_index(idx, k, n);
            value = value.max(rho_of(&DiagonalSelection::vertex(&a.0, k)));
            used += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        value = value.max(rho_of(&random_selection(&mut rng, k, n)));
        used += 1;
    }
    let mut rep = ConvergenceReport::new(ConditionTag::Eq35Sampled, None, value);
    rep.samples_used = used;
    rep.certifying = false;
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum OmegaValue {
    Scalar(f64),
    Diagonal(Vec<f64>),
}

impl OmegaValue {
    pub fn to_vec(&self, n: usize) -> Vec<f64> {
        match self {
            OmegaValue::Scalar(w) => vec![*w; n],
            OmegaValue::Diagonal(d) => d.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum OmegaRule {
    /// Column sdd with constant diagonal `τ`: `ω = τ`.
    ColumnSddScalarDiagonal,
    /// Symmetric: `ω = (1 + ε) ‖H_1‖_∞ / 2`.
    SymmetricHalfNorm,
    /// Positive diagonal: `Ω = D(H_1)`.
    PositiveDiagonal,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OmegaSuggestion {
    pub omega: OmegaValue,
    pub rule: OmegaRule,
}

pub const OMEGA_MARGIN: f64 = 0.01;

/// First applicable step-size rule for the two-block iteration.
pub fn suggest_omega(h1: &MatrixStore) -> Result<OmegaSuggestion> {
    let d = h1.diagonal();
    let tau = d[0];
    if tau > 0.0 && d.iter().all(|&v| v == tau) && sdd_classify(h1).col_sdd {
        return Ok(OmegaSuggestion { omega: OmegaValue::Scalar(tau), rule: OmegaRule::ColumnSddScalarDiagonal });
    }
    if h1.is_symmetric() {
        let inf = h1.to_banded().norm(NormTag::Inf);
        if inf > 0.0 {
            return Ok(OmegaSuggestion {
                omega: OmegaValue::Scalar(0.5 * inf * (1.0 + OMEGA_MARGIN)),
                rule: OmegaRule::SymmetricHalfNorm,
            });
        }
    }
    if d.iter().all(|&v| v > 0.0) {
        return Ok(OmegaSuggestion { omega: OmegaValue::Diagonal(d), rule: OmegaRule::PositiveDiagonal });
    }
    Err(Error::NoRuleApplies)
}
