//! Sequentially thresholded least squares over a candidate dictionary, used
//! as the comparison baseline.

use crate::basis::BasisLibrary;
use crate::dynamics::IdentifiedSystem;
use crate::error::{Error, Result};
use crate::lstsq::{lstsq, Matrix};
use crate::phase1::DampingModel;
use crate::phase2::StiffnessModel;
use crate::response::Response;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StlsqSpec {
    pub threshold: f64,
    pub max_iters: usize,
    /// Threshold coefficients of unit-norm columns rather than raw ones.
    pub normalize_columns: bool,
}

impl StlsqSpec {
    pub const DEFAULT_MAX_ITERS: usize = 20;

    pub fn new(threshold: f64) -> Result<Self> {
        if !(threshold >= 0.0 && threshold.is_finite()) {
            return Err(Error::Model(format!("threshold {threshold} must be non-negative")));
        }
        Ok(Self {
            threshold,
            max_iters: Self::DEFAULT_MAX_ITERS,
            normalize_columns: true,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StlsqResult {
    pub coeffs: Vec<f64>,
    pub residual_rms: f64,
    /// Active set entering each iteration, starting with the initial one.
    pub active_history: Vec<Vec<bool>>,
}

/// Coefficients of `y ~ Theta c`; thresholded entries are exactly zero.
pub fn stlsq(theta: &Matrix, y: &[f64], spec: &StlsqSpec) -> Result<Vec<f64>> {
    stlsq_traced(theta, y, spec).map(|r| r.coeffs)
}

pub fn stlsq_traced(theta: &Matrix, y: &[f64], spec: &StlsqSpec) -> Result<StlsqResult> {
    let (rows, cols) = (theta.rows(), theta.cols());
    if rows < cols || cols == 0 {
        return Err(Error::Underdetermined { rows, cols });
    }
    let scale: Vec<f64> = (0..cols)
        .map(|j| if spec.normalize_columns { theta.column_norm(j) } else { 1.0 })
        .collect();
    let mut active: Vec<bool> = (0..cols).map(|j| theta.column_norm(j) > 0.0).collect();
    let mut history = Vec::new();
    let mut coeffs = vec![0.0; cols];
    for _ in 0..spec.max_iters.max(1) {
        history.push(active.clone());
        let idx: Vec<usize> = (0..cols).filter(|&j| active[j]).collect();
        if idx.is_empty() {
            return Err(Error::AllThresholded);
        }
        let sol = lstsq(&theta.select_columns(&idx), y)?;
        coeffs.iter_mut().for_each(|c| *c = 0.0);
        for (&j, &c) in idx.iter().zip(&sol.coeffs) {
            coeffs[j] = c;
        }
        let next: Vec<bool> = (0..cols)
            .map(|j| active[j] && (coeffs[j] * scale[j]).abs() >= spec.threshold)
            .collect();
        if next == active {
            return Ok(StlsqResult {
                coeffs,
                residual_rms: sol.residual_rms,
                active_history: history,
            });
        }
        active = next;
    }
    // Iteration cap reached: refit on the last active set so that every
    // reported coefficient belongs to it.
    let idx: Vec<usize> = (0..cols).filter(|&j| active[j]).collect();
    if idx.is_empty() {
        return Err(Error::AllThresholded);
    }
    history.push(active);
    let sol = lstsq(&theta.select_columns(&idx), y)?;
    coeffs.iter_mut().for_each(|c| *c = 0.0);
    for (&j, &c) in idx.iter().zip(&sol.coeffs) {
        coeffs[j] = c;
    }
    Ok(StlsqResult {
        coeffs,
        residual_rms: sol.residual_rms,
        active_history: history,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SindyFit {
    pub system: IdentifiedSystem,
    pub residual_rms: f64,
}

/// Joint regression of `-inertia * qdd` on the damping and stiffness
/// dictionaries evaluated over the whole record.
pub fn sindy_identify(
    r: &Response,
    damping_lib: &BasisLibrary,
    stiffness_lib: &BasisLibrary,
    spec: &StlsqSpec,
) -> Result<SindyFit> {
    stiffness_lib.ensure_stiffness_only()?;
    let qdd = r.qdd_or_diff()?;
    let m = r.inertia();
    let y: Vec<f64> = qdd.values().iter().map(|a| -m * a).collect();
    let (q, qd) = (r.q().values(), r.qd().values());
    let columns: Vec<Vec<f64>> = damping_lib
        .terms()
        .iter()
        .chain(stiffness_lib.terms())
        .map(|t| q.iter().zip(qd).map(|(&a, &b)| t.eval(a, b)).collect())
        .collect();
    let res = stlsq_traced(&Matrix::from_columns(&columns), &y, spec)?;
    let (b, k) = res.coeffs.split_at(damping_lib.len());
    let system = IdentifiedSystem::new(
        m,
        DampingModel::new(damping_lib.clone(), b.to_vec())?,
        StiffnessModel::new(stiffness_lib.clone(), k.to_vec())?,
    )?;
    Ok(SindyFit {
        system,
        residual_rms: res.residual_rms,
    })
}
