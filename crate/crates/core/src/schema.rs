//! JSON problem files.
//!
//! ```json
//! { "n": 2, "m": 1,
//!   "M": {"dense": [[1, 0], [1, 1]]},
//!   "H": [{"tridiag": {"sub": [1], "diag": [1, 1], "super": [0]}}],
//!   "q": [1, 0], "d": [],
//!   "prescribed": {"w": [1, 0], "x": [[0, 1]], "y": [-1, 1]} }
//! ```
//!
//! Matrices are `{"dense": rows}`, `{"tridiag": {...}}`,
//! `{"blocktridiag": {"blockOrder", "sub", "diagBlock", "super"}}` or
//! `{"banded": {"kl", "ku", "rows"}}` where each band row holds the window
//! of columns `i-kl ..= i+ku`.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::blockdata::{
    BlockMatrixSet, BlockTridiagonal, BoundLadder, Defect, Ehlcp2Problem, EhlcpProblem, MatrixStore, Tridiagonal,
    ValidationReport,
};
use crate::linalg::Banded;
use crate::problems::Prescribed;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TridiagJson {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    #[serde(rename = "super")]
    pub sup: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockTridiagJson {
    #[serde(rename = "blockOrder")]
    pub block_order: usize,
    pub sub: f64,
    #[serde(rename = "diagBlock")]
    pub diag_block: TridiagJson,
    #[serde(rename = "super")]
    pub sup: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandedJson {
    pub kl: usize,
    pub ku: usize,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum MatrixJson {
    #[serde(rename = "dense")]
    Dense(Vec<Vec<f64>>),
    #[serde(rename = "tridiag")]
    Tridiag(TridiagJson),
    #[serde(rename = "blocktridiag")]
    BlockTridiag(BlockTridiagJson),
    #[serde(rename = "banded")]
    Banded(BandedJson),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "M")]
    pub m_matrix: MatrixJson,
    #[serde(rename = "H")]
    pub h: Vec<MatrixJson>,
    pub q: Vec<f64>,
    #[serde(default)]
    pub d: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prescribed: Option<Prescribed>,
}

fn tridiag_to_json(t: &Tridiagonal) -> TridiagJson {
    TridiagJson { sub: t.sub.clone(), diag: t.diag.clone(), sup: t.sup.clone() }
}

pub fn matrix_to_json(a: &MatrixStore) -> MatrixJson {
    match a {
        MatrixStore::Dense(d) => MatrixJson::Dense(d.row_iter().map(|r| r.iter().copied().collect()).collect()),
        MatrixStore::Tridiagonal(t) => MatrixJson::Tridiag(tridiag_to_json(t)),
        MatrixStore::BlockTridiagonal(b) => MatrixJson::BlockTridiag(BlockTridiagJson {
            block_order: b.block_order(),
            sub: b.sub,
            diag_block: tridiag_to_json(&b.block),
            sup: b.sup,
        }),
        MatrixStore::Banded(b) => {
            let (kl, ku) = b.bandwidths();
            let n = b.order();
            let rows = (0..n)
                .map(|i| (0..=kl + ku).map(|k| (i + k).checked_sub(kl).filter(|&j| j < n).map_or(0.0, |j| b.get(i, j))).collect())
                .collect();
            MatrixJson::Banded(BandedJson { kl, ku, rows })
        }
    }
}

fn tridiag_from_json(t: &TridiagJson, what: &str, report: &mut ValidationReport) -> Option<Tridiagonal> {
    let n = t.diag.len();
    let off = n.saturating_sub(1);
    let mut ok = true;
    for (name, v) in [("sub", &t.sub), ("super", &t.sup)] {
        if v.len() != off {
            report.push(Defect::DimensionMismatch { what: format!("{what}.{name}"), expected: off, found: v.len() });
            ok = false;
        }
    }
    ok.then(|| Tridiagonal { sub: t.sub.clone(), diag: t.diag.clone(), sup: t.sup.clone() })
}

/// Converts a matrix, recording layout defects in `report`.
pub fn matrix_from_json(a: &MatrixJson, n: usize, what: &str, report: &mut ValidationReport) -> Option<MatrixStore> {
    let out = match a {
        MatrixJson::Dense(rows) => {
            if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != rows.len()) {
                report.push(Defect::DimensionMismatch { what: format!("{what} row {i}"), expected: rows.len(), found: r.len() });
                return None;
            }
            let k = rows.len();
            MatrixStore::Dense(DMatrix::from_fn(k, k, |i, j| rows[i][j]))
        }
        MatrixJson::Tridiag(t) => MatrixStore::Tridiagonal(tridiag_from_json(t, what, report)?),
        MatrixJson::BlockTridiag(b) => {
            let block = tridiag_from_json(&b.diag_block, &format!("{what}.diagBlock"), report)?;
            if block.order() != b.block_order {
                report.push(Defect::DimensionMismatch {
                    what: format!("{what}.diagBlock"),
                    expected: b.block_order,
                    found: block.order(),
                });
                return None;
            }
            MatrixStore::BlockTridiagonal(BlockTridiagonal { block, sub: b.sub, sup: b.sup })
        }
        MatrixJson::Banded(b) => {
            let k = b.rows.len();
            let w = b.kl + b.ku + 1;
            if let Some((i, r)) = b.rows.iter().enumerate().find(|(_, r)| r.len() != w) {
                report.push(Defect::DimensionMismatch { what: format!("{what} band row {i}"), expected: w, found: r.len() });
                return None;
            }
            let mut band = Banded::zeros(k, b.kl, b.ku);
            for i in 0..k {
                for j in band.cols(i) {
                    band.set(i, j, b.rows[i][j + b.kl - i]);
                }
            }
            MatrixStore::Banded(band)
        }
    };
    if out.order() != n {
        report.push(Defect::DimensionMismatch { what: what.into(), expected: n, found: out.order() });
        return None;
    }
    Some(out)
}

impl ProblemFile {
    pub fn from_problem(problem: &EhlcpProblem, prescribed: Option<Prescribed>) -> Self {
        ProblemFile {
            n: problem.order(),
            m: problem.m(),
            m_matrix: matrix_to_json(&problem.blocks.m),
            h: problem.blocks.h.iter().map(matrix_to_json).collect(),
            q: problem.q.clone(),
            d: problem.ladder.d.clone(),
            prescribed,
        }
    }

    pub fn from_two_block(problem: &Ehlcp2Problem, prescribed: Option<Prescribed>) -> Self {
        Self::from_problem(&problem.to_general(), prescribed)
    }

    /// Builds and validates the problem, collecting every defect.
    pub fn to_problem(&self) -> Result<EhlcpProblem> {
        let mut report = ValidationReport::default();
        if self.h.len() != self.m {
            report.push(Defect::DimensionMismatch { what: "H".into(), expected: self.m, found: self.h.len() });
        }
        let m = matrix_from_json(&self.m_matrix, self.n, "M", &mut report);
        let h: Vec<Option<MatrixStore>> =
            self.h.iter().enumerate().map(|(i, a)| matrix_from_json(a, self.n, &format!("H_{}", i + 1), &mut report)).collect();
        if let (Some(m), true) = (m, h.iter().all(Option::is_some)) {
            let problem = EhlcpProblem::new(
                BlockMatrixSet::new(m, h.into_iter().flatten().collect()),
                self.q.clone(),
                BoundLadder::new(self.n, self.d.clone()),
            );
            report.defects.extend(problem.validate().defects);
            if report.is_ok() {
                return Ok(problem);
            }
            return Err(Error::Invalid(report));
        }
        if self.q.len() != self.n {
            report.push(Defect::DimensionMismatch { what: "q".into(), expected: self.n, found: self.q.len() });
        }
        Err(Error::Invalid(report))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{gen_example51, gen_example52};

    #[test]
    fn example_roundtrips() {
        let g = gen_example51(3, 1.0, 2.0).unwrap();
        let f = ProblemFile::from_problem(&g.problem, g.prescribed.clone());
        let back: ProblemFile = serde_json::from_str(&f.to_json().unwrap()).unwrap();
        assert_eq!(back.to_problem().unwrap(), g.problem);
        assert_eq!(back.prescribed, g.prescribed);
        let t = gen_example52(5).unwrap();
        let f = ProblemFile::from_two_block(&t.problem, None);
        assert!(f.to_json().unwrap().contains("\"tridiag\""));
        assert_eq!(f.to_problem().unwrap().as_two_block().unwrap(), t.problem);
    }

    #[test]
    fn banded_roundtrip() {
        let mut b = Banded::zeros(4, 2, 1);
        for i in 0..4 {
            for j in b.cols(i) {
                b.set(i, j, (1 + i * 4 + j) as f64);
            }
        }
        let a = MatrixStore::Banded(b);
        let mut report = ValidationReport::default();
        let back = matrix_from_json(&matrix_to_json(&a), 4, "A", &mut report).unwrap();
        assert!(report.is_ok());
        assert_eq!(back, a);
    }

    #[test]
    fn schema_keys() {
        let text = r#"{"n": 2, "m": 1, "M": {"dense": [[1, 0], [1, 1]]},
            "H": [{"tridiag": {"sub": [1], "diag": [1, 1], "super": [0]}}], "q": [1, 0], "d": []}"#;
        let f: ProblemFile = serde_json::from_str(text).unwrap();
        let p = f.to_problem().unwrap();
        assert_eq!(p.blocks.h[0].get(1, 0), 1.0);
        let blk = r#"{"n": 4, "m": 1, "M": {"blocktridiag": {"blockOrder": 2, "sub": -1, "diagBlock":
            {"sub": [-1], "diag": [4, 4], "super": [-1]}, "super": -1}},
            "H": [{"dense": [[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]}], "q": [0,0,0,0]}"#;
        let f: ProblemFile = serde_json::from_str(blk).unwrap();
        assert_eq!(f.to_problem().unwrap().blocks.m.get(0, 2), -1.0);
    }

    #[test]
    fn defects_are_collected() {
        let text = r#"{"n": 2, "m": 2, "M": {"dense": [[1, 0], [1, 1]]},
            "H": [{"dense": [[1, 0], [0, 1]]}, {"dense": [[1, 0, 0]]}], "q": [1], "d": [[0, 1]]}"#;
        let f: ProblemFile = serde_json::from_str(text).unwrap();
        let Err(Error::Invalid(report)) = f.to_problem() else { panic!("expected validation failure") };
        assert!(report.to_string().contains("H_2 row 0"), "{report}");
        let text = r#"{"n": 2, "m": 2, "M": {"dense": [[1, 0], [1, 1]]},
            "H": [{"dense": [[1, 0], [0, 1]]}, {"dense": [[1, 0], [0, 1]]}], "q": [1], "d": [[0, 1]]}"#;
        let f: ProblemFile = serde_json::from_str(text).unwrap();
        let Err(Error::Invalid(report)) = f.to_problem() else { panic!("expected validation failure") };
        assert_eq!(report.defects.len(), 2, "{report}");
    }
}
