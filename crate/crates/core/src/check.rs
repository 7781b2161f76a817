//! Numeric comparison at sample points and the resulting [`CheckResult`].
//!
//! Residuals are absolute. Point evaluation is parallel; the reduction is a
//! max, which is order-independent, so results do not depend on the number of
//! worker threads.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::expr::{EvalError, Expr, Tape};
use crate::sampling::Sampling;

/// Largest residual and largest magnitude seen over a set of points.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Measure {
    pub max_residual: f64,
    pub max_magnitude: f64,
    pub points: usize,
    /// First failure encountered, if any residual was not a finite number.
    pub diagnostic: Option<String>,
}

impl Measure {
    pub fn merge(self, other: Measure) -> Measure {
        Measure {
            max_residual: fmax(self.max_residual, other.max_residual),
            max_magnitude: fmax(self.max_magnitude, other.max_magnitude),
            points: self.points.max(other.points),
            diagnostic: self.diagnostic.or(other.diagnostic),
        }
    }

    pub fn failed(points: usize, why: String) -> Measure {
        Measure { max_residual: f64::INFINITY, max_magnitude: f64::INFINITY, points, diagnostic: Some(why) }
    }

    /// Folds one numeric residual and magnitude in.
    pub fn record(&mut self, residual: f64, magnitude: f64) {
        if !residual.is_finite() && self.diagnostic.is_none() {
            self.diagnostic = Some(format!("non-finite residual {residual}"));
        }
        self.max_residual = fmax(self.max_residual, residual);
        self.max_magnitude = fmax(self.max_magnitude, magnitude);
    }
}

/// NaN-propagating max: a NaN anywhere makes the result infinite.
pub fn fmax(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::INFINITY
    } else {
        a.max(b)
    }
}

/// Evaluates `lhs[i] - rhs[i]` at every point; missing `rhs` means zero.
pub fn compare(lhs: &[Expr], rhs: Option<&[Expr]>, points: &[Vec<f64>]) -> Measure {
    if let Some(r) = rhs {
        assert_eq!(lhs.len(), r.len(), "compared tables differ in length");
    }
    let mut all: Vec<&Expr> = lhs.iter().collect();
    if let Some(r) = rhs {
        all.extend(r.iter());
    }
    let tape = Tape::new(all);
    let n = lhs.len();
    let per_point = |p: &Vec<f64>| -> Measure {
        let mut out = vec![0.0; tape.outputs()];
        let mut scratch = Vec::new();
        let mut m = Measure { points: 1, ..Measure::default() };
        match tape.eval_into(p, &mut scratch, &mut out) {
            Ok(()) => {
                for i in 0..n {
                    let (a, b) = if rhs.is_some() { (out[i], out[n + i]) } else { (out[i], 0.0) };
                    m.record((a - b).abs(), a.abs().max(b.abs()));
                }
            }
            Err(e) => return Measure::failed(1, format!("evaluation failed at {p:?}: {e}")),
        }
        m
    };
    let mut m = points.par_iter().map(per_point).reduce(Measure::default, Measure::merge);
    m.points = points.len();
    m
}

/// Max of |e| over points.
pub fn vanishes(residuals: &[Expr], points: &[Vec<f64>]) -> Measure {
    compare(residuals, None, points)
}

/// Evaluates a table of expressions at many points in parallel.
pub fn evaluate_all(exprs: &[Expr], points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, EvalError> {
    let tape = Tape::new(exprs.iter());
    points
        .par_iter()
        .map(|p| {
            let mut out = vec![0.0; tape.outputs()];
            let mut scratch = Vec::new();
            tape.eval_into(p, &mut scratch, &mut out)?;
            Ok(out)
        })
        .collect()
}

/// Short content hash identifying the inputs of a check.
pub fn digest(parts: &[String]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0u8]);
    }
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Outcome of one named check. `pass` holds exactly when the residual is a
/// finite number not above the tolerance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub id: String,
    pub pass: bool,
    pub max_residual: f64,
    pub tolerance: f64,
    pub seed: u64,
    pub points: usize,
    pub ms: f64,
    pub digest: String,
    pub max_magnitude: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

impl CheckResult {
    pub fn new(id: &str, digest: String, sampling: &Sampling, m: Measure, tolerance: f64, started: Instant) -> CheckResult {
        let pass = m.max_residual.is_finite() && m.max_residual <= tolerance;
        CheckResult {
            id: id.to_string(),
            pass,
            max_residual: m.max_residual,
            tolerance,
            seed: sampling.seed,
            points: m.points,
            ms: started.elapsed().as_secs_f64() * 1e3,
            digest,
            max_magnitude: m.max_magnitude,
            note: m.diagnostic,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> CheckResult {
        let note = note.into();
        self.note = Some(match self.note.take() {
            Some(prev) => format!("{prev}; {note}"),
            None => note,
        });
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compare_and_fail_on_domain_error() {
        let x = Expr::var(0);
        let pts = vec![vec![0.5], vec![-0.25]];
        let m = compare(&[x.clone() * 2.0], Some(&[x.clone() + &x]), &pts);
        assert_eq!(m.max_residual, 0.0);
        assert_eq!(m.max_magnitude, 1.0);
        let m = vanishes(&[x.clone().ln()], &pts);
        assert!(m.max_residual.is_infinite());
        assert!(m.diagnostic.is_some());
        let r = CheckResult::new("t", digest(&[]), &Sampling::default(), m, 1.0, Instant::now());
        assert!(!r.pass);
    }

    #[test]
    fn nan_is_never_small() {
        assert_eq!(fmax(f64::NAN, 0.0), f64::INFINITY);
        let mut m = Measure::default();
        m.record(f64::NAN, 0.0);
        assert!(m.max_residual.is_infinite());
    }
}
