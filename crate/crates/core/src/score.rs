//! Coefficient errors of an identified model against a reference, with terms
//! matched by exponent pair.

use std::fmt::Write as _;

use crate::basis::BasisTerm;
use crate::dynamics::IdentifiedSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Damping,
    Stiffness,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    /// Nonzero in the reference; percent error of the candidate.
    Matched { percent_error: f64 },
    /// Zero or absent in the reference but nonzero in the candidate.
    Spurious { magnitude: f64 },
    /// Nonzero in the reference, absent from the candidate. Counted as 100%.
    Missing,
    /// Zero in both.
    Absent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientScore {
    pub part: Part,
    pub term: BasisTerm,
    pub truth: f64,
    pub identified: Option<f64>,
    pub verdict: Verdict,
}

impl CoefficientScore {
    pub fn percent_error(&self) -> Option<f64> {
        match self.verdict {
            Verdict::Matched { percent_error } => Some(percent_error),
            Verdict::Missing => Some(100.0),
            _ => None,
        }
    }
}

fn entries(sys: &IdentifiedSystem, part: Part) -> Vec<(BasisTerm, f64)> {
    let (terms, coeffs) = match part {
        Part::Damping => (sys.damping.library().terms(), sys.damping.coeffs()),
        Part::Stiffness => (sys.stiffness.library().terms(), sys.stiffness.coeffs()),
    };
    terms.iter().copied().zip(coeffs.iter().copied()).collect()
}

/// Scores every term present in either model. Reference terms come first in
/// their own order, followed by candidate-only terms.
pub fn score_models(candidate: &IdentifiedSystem, truth: &IdentifiedSystem) -> Vec<CoefficientScore> {
    let mut out = Vec::new();
    for part in [Part::Damping, Part::Stiffness] {
        let cand = entries(candidate, part);
        let reference = entries(truth, part);
        let lookup = |list: &[(BasisTerm, f64)], t: &BasisTerm| list.iter().find(|(u, _)| u == t).map(|p| p.1);
        let mut terms: Vec<BasisTerm> = reference.iter().map(|p| p.0).collect();
        terms.extend(cand.iter().map(|p| p.0).filter(|t| !reference.iter().any(|(u, _)| u == t)));
        for term in terms {
            let truth_v = lookup(&reference, &term).unwrap_or(0.0);
            let identified = lookup(&cand, &term);
            let verdict = match (truth_v != 0.0, identified) {
                (true, Some(v)) => Verdict::Matched {
                    percent_error: 100.0 * ((v - truth_v) / truth_v).abs(),
                },
                (true, None) => Verdict::Missing,
                (false, Some(v)) if v != 0.0 => Verdict::Spurious { magnitude: v.abs() },
                (false, _) => Verdict::Absent,
            };
            out.push(CoefficientScore {
                part,
                term,
                truth: truth_v,
                identified,
                verdict,
            });
        }
    }
    out
}

/// `||a - b|| / ||b||` over the common prefix.
pub fn relative_l2(a: &[f64], b: &[f64]) -> f64 {
    let (num, den) = a
        .iter()
        .zip(b)
        .fold((0.0, 0.0), |(n, d), (x, y)| (n + (x - y) * (x - y), d + y * y));
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (num / den).sqrt()
    }
}

/// Plain-text table of coefficient scores.
pub fn render_report(scores: &[CoefficientScore], displacement_l2: Option<f64>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<10} {:<10} {:>14} {:>14} {:>12}  note", "part", "term", "truth", "identified", "error_pct");
    for c in scores {
        let part = match c.part {
            Part::Damping => "damping",
            Part::Stiffness => "stiffness",
        };
        let ident = c.identified.map_or("-".to_string(), |v| format!("{v:.6e}"));
        let (err, note) = match c.verdict {
            Verdict::Matched { percent_error } => (format!("{percent_error:.4}"), String::new()),
            Verdict::Missing => ("100".to_string(), "missing".to_string()),
            Verdict::Spurious { magnitude } => ("-".to_string(), format!("spurious |coeff| = {magnitude:.3e}")),
            Verdict::Absent => ("-".to_string(), String::new()),
        };
        let _ = writeln!(
            s,
            "{:<10} {:<10} {:>14.6e} {:>14} {:>12}  {}",
            part,
            c.term.to_string(),
            c.truth,
            ident,
            err,
            note
        );
    }
    if let Some(l2) = displacement_l2 {
        let _ = writeln!(s, "displacement relative L2 error: {:.6e}", l2);
    }
    s
}
