use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;

const WORST_KEPT: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Offender {
    pub sample: usize,
    /// `null` in JSON when the sample failed outright.
    #[serde(deserialize_with = "null_as_infinity")]
    pub residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// Outcome of a sampled check. `pass` holds exactly when `max_residual <= tol`;
/// a sample that errors counts as an infinite residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    pub samples: usize,
    /// Samples that errored or exceeded `tol`.
    pub failures: usize,
    #[serde(deserialize_with = "null_as_infinity")]
    pub max_residual: f64,
    pub tol: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub worst: Vec<Offender>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

/// JSON has no infinity; serde_json writes it as `null`.
fn null_as_infinity<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

pub type SampleOutcome = std::result::Result<f64, String>;

impl VerificationReport {
    pub fn from_outcomes(check: &str, tol: f64, seed: Option<u64>, outcomes: &[SampleOutcome]) -> Self {
        let mut worst: Vec<Offender> = outcomes
            .iter()
            .enumerate()
            .map(|(sample, o)| match o {
                Ok(r) => Offender { sample, residual: *r, detail: None },
                Err(e) => Offender { sample, residual: f64::INFINITY, detail: Some(e.clone()) },
            })
            .collect();
        let failures = worst.iter().filter(|o| o.residual.is_nan() || o.residual > tol).count();
        let max_residual = worst.iter().map(|o| if o.residual.is_nan() { f64::INFINITY } else { o.residual }).fold(0.0, f64::max);
        worst.sort_by(|a, b| b.residual.total_cmp(&a.residual).then(a.sample.cmp(&b.sample)));
        worst.truncate(WORST_KEPT);
        Self {
            check: check.to_string(),
            samples: outcomes.len(),
            failures,
            max_residual,
            tol,
            pass: max_residual <= tol,
            seed,
            worst,
            notes: Vec::new(),
        }
    }

    pub fn single(check: &str, tol: f64, outcome: SampleOutcome) -> Self {
        Self::from_outcomes(check, tol, None, &[outcome])
    }

    /// Nondegeneracy as a residual: each sample contributes `1 / min_sv`, and
    /// the tolerance is `1 / threshold`, so `pass` means every `min_sv >= threshold`.
    pub fn nondegeneracy(check: &str, threshold: f64, seed: Option<u64>, min_svs: &[std::result::Result<f64, String>]) -> Self {
        let outcomes: Vec<SampleOutcome> = min_svs.iter().map(|r| r.clone().map(|sv| 1.0 / sv)).collect();
        let min_sv = min_svs.iter().filter_map(|r| r.as_ref().ok()).copied().fold(f64::INFINITY, f64::min);
        Self::from_outcomes(check, 1.0 / threshold, seed, &outcomes)
            .with_note(format!("residual is 1/min singular value; smallest singular value {min_sv:e}"))
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }
}

/// Runs `f` on every input in parallel and returns outcomes in input order.
pub fn evaluate<T, F>(inputs: &[T], f: F) -> Vec<SampleOutcome>
where
    T: Sync,
    F: Fn(&T) -> Result<f64> + Sync,
{
    inputs.par_iter().map(|x| f(x).map_err(|e| e.to_string())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_iff_within_tolerance() {
        let r = VerificationReport::from_outcomes("t", 1e-3, Some(1), &[Ok(1e-4), Ok(2e-4)]);
        assert!(r.pass);
        assert_eq!(r.failures, 0);
        assert_eq!(r.worst[0].sample, 1);
        assert_eq!(VerificationReport::from_outcomes("t", 1e-3, None, &[Ok(1e-2), Ok(f64::NAN), Ok(0.0)]).failures, 2);
        let r = VerificationReport::from_outcomes("t", 1e-3, None, &[Ok(1e-4), Err("boom".into())]);
        assert!(!r.pass);
        assert_eq!(r.failures, 1);
        assert_eq!(r.max_residual, f64::INFINITY);
        let back: VerificationReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn keeps_five_worst() {
        let outs: Vec<SampleOutcome> = (0..9).map(|i| Ok(i as f64)).collect();
        let r = VerificationReport::from_outcomes("t", 100.0, None, &outs);
        assert_eq!(r.worst.iter().map(|o| o.sample).collect::<Vec<_>>(), vec![8, 7, 6, 5, 4]);
    }
}
