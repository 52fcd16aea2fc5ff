//! JSON input formats.
//!
//! * algebra: `{"dim": n, "brackets": [{"i", "j", "k", "value"}], "labels": [..]}`, `i < j`;
//! * transversal: `{"lambda": [..], "directions": [[..], ..]}`, one covector per direction;
//! * representation: `{"N": size, "rho": [matrix per basis element]}`, matrices as row lists;
//! * Frobenius pair: `{"h_basis": [[..], ..], "lambda_on_h": [..]}`, one element of `g` per row;
//! * morphism: `{"target_algebra": <algebra>, "matrix": [[..], ..]}`, `dim target` rows.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::algebra::LieAlgebra;
use crate::error::{Error, Result};
use crate::frobenius::FrobeniusPair;
use crate::groupoid::MatrixRep;
use crate::linalg::{Mat, Vector};
use crate::transversal::AffineTransversal;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BracketEntry {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraFile {
    pub dim: usize,
    pub brackets: Vec<BracketEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl AlgebraFile {
    pub fn to_algebra(&self) -> Result<LieAlgebra> {
        let entries: Vec<(usize, usize, usize, f64)> = self.brackets.iter().map(|b| (b.i, b.j, b.k, b.value)).collect();
        LieAlgebra::from_brackets(self.dim, &entries, self.labels.clone())
    }

    pub fn from_algebra(alg: &LieAlgebra) -> Self {
        let n = alg.dim();
        let mut brackets = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                for k in 0..n {
                    let value = alg.c(k, i, j);
                    if value != 0.0 {
                        brackets.push(BracketEntry { i, j, k, value });
                    }
                }
            }
        }
        Self { dim: n, brackets, labels: Some(alg.labels().to_vec()) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransversalFile {
    pub lambda: Vec<f64>,
    pub directions: Vec<Vec<f64>>,
}

impl TransversalFile {
    pub fn to_transversal(&self, alg: &LieAlgebra) -> Result<AffineTransversal> {
        let n = alg.dim();
        let directions = columns(&self.directions, n, "directions")?;
        AffineTransversal::new(alg.clone(), vector(&self.lambda, n, "lambda")?, &directions)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepFile {
    #[serde(rename = "N")]
    pub size: usize,
    pub rho: Vec<Vec<Vec<f64>>>,
}

impl RepFile {
    pub fn to_rep(&self, alg: &LieAlgebra) -> Result<MatrixRep> {
        if self.rho.len() != alg.dim() {
            return Err(Error::DimensionMismatch { expected: alg.dim(), got: self.rho.len() });
        }
        let rho = self.rho.iter().map(|m| rows(m, self.size, self.size, "rho")).collect::<Result<Vec<_>>>()?;
        MatrixRep::new(alg.clone(), rho)
    }

    pub fn from_rep(rep: &MatrixRep) -> Self {
        let to_rows = |m: &Mat| (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect();
        Self { size: rep.size(), rho: rep.generators().iter().map(to_rows).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrobeniusFile {
    pub h_basis: Vec<Vec<f64>>,
    pub lambda_on_h: Vec<f64>,
}

impl FrobeniusFile {
    pub fn to_pair(&self, alg: &LieAlgebra) -> Result<FrobeniusPair> {
        let h = columns(&self.h_basis, alg.dim(), "h_basis")?;
        FrobeniusPair::new(alg.clone(), h, Vector::from_vec(self.lambda_on_h.clone()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorphismFile {
    pub target_algebra: AlgebraFile,
    pub matrix: Vec<Vec<f64>>,
}

impl MorphismFile {
    /// The codomain algebra and the `dim target x dim source` matrix.
    pub fn to_morphism(&self, source: &LieAlgebra) -> Result<(LieAlgebra, Mat)> {
        let target = self.target_algebra.to_algebra()?;
        let m = rows(&self.matrix, target.dim(), source.dim(), "matrix")?;
        Ok((target, m))
    }
}

pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

pub fn parse_algebra(text: &str) -> Result<LieAlgebra> {
    parse::<AlgebraFile>(text)?.to_algebra()
}

fn vector(xs: &[f64], n: usize, what: &str) -> Result<Vector> {
    if xs.len() != n {
        return Err(Error::Invalid(format!("{what}: expected {n} entries, got {}", xs.len())));
    }
    Ok(Vector::from_column_slice(xs))
}

/// Row lists to a matrix with the given shape.
pub fn rows(data: &[Vec<f64>], nrows: usize, ncols: usize, what: &str) -> Result<Mat> {
    if data.len() != nrows || data.iter().any(|r| r.len() != ncols) {
        return Err(Error::Invalid(format!("{what}: expected a {nrows}x{ncols} matrix")));
    }
    Ok(Mat::from_fn(nrows, ncols, |r, c| data[r][c]))
}

/// Each entry of `data` (length `n`) becomes a column.
fn columns(data: &[Vec<f64>], n: usize, what: &str) -> Result<Mat> {
    if data.iter().any(|r| r.len() != n) {
        return Err(Error::Invalid(format!("{what}: every entry needs {n} components")));
    }
    Ok(Mat::from_fn(n, data.len(), |r, c| data[c][r]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn so3_round_trip() {
        let text = r#"{"dim": 3, "brackets": [
            {"i": 0, "j": 1, "k": 2, "value": 1},
            {"i": 0, "j": 2, "k": 1, "value": -1},
            {"i": 1, "j": 2, "k": 0, "value": 1}], "labels": ["e1", "e2", "e3"]}"#;
        let alg = parse_algebra(text).unwrap();
        assert_eq!(alg, LieAlgebra::so3());
        let back = serde_json::to_string(&AlgebraFile::from_algebra(&alg)).unwrap();
        assert_eq!(parse_algebra(&back).unwrap(), alg);
    }

    #[test]
    fn bad_inputs() {
        assert!(matches!(parse_algebra("{not json"), Err(Error::Parse(_))));
        assert!(matches!(parse_algebra(r#"{"dim": 2, "brackets": [], "extra": 1}"#), Err(Error::Parse(_))));
        let dup = r#"{"dim": 2, "brackets": [{"i":0,"j":1,"k":1,"value":1},{"i":0,"j":1,"k":1,"value":2}]}"#;
        assert!(parse_algebra(dup).is_err());
        let wrong_order = r#"{"dim": 2, "brackets": [{"i":1,"j":0,"k":1,"value":1}]}"#;
        assert!(parse_algebra(wrong_order).is_err());
    }

    #[test]
    fn rep_and_transversal_files() {
        let alg = LieAlgebra::so3();
        let rep = RepFile::from_rep(&MatrixRep::so3_defining());
        assert_eq!(rep.to_rep(&alg).unwrap(), MatrixRep::so3_defining());
        let t: TransversalFile = parse(r#"{"lambda": [0, 0, 1], "directions": [[0, 0, 1]]}"#).unwrap();
        assert_eq!(t.to_transversal(&alg).unwrap().dim(), 1);
        let ragged: TransversalFile = parse(r#"{"lambda": [0, 0, 1], "directions": [[0, 1]]}"#).unwrap();
        assert!(matches!(ragged.to_transversal(&alg), Err(Error::Invalid(_))));
    }
}
