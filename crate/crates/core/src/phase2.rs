//! Stiffness identification from the reconstructed Lagrangian.
//!
//! With the mechanical energy `E` known from the damping fit, the potential
//! energy is `V = E - T` and the Lagrangian is `L = T - V = 2T - E`. Along the
//! trajectory `dL/dq = dL/dt / (dq/dt)`, and the partial derivative with
//! respect to `q` follows by removing the velocity contribution:
//!
//! ```text
//! dL/dq|_qd = dL/dq - p * dqd/dq
//! ```
//!
//! The restoring force is `K(q) = -dL/dq|_qd`.
//!
//! Differences are taken over samples `i - 1` and `i + 1`, with the momentum
//! averaged over the same two samples. That makes the kinetic part cancel
//! exactly, so each force sample is the secant slope `-(V(q+) - V(q-)) /
//! (q+ - q-)`. The fit regresses it on the matching secants of the basis
//! antiderivatives rather than on `q^n` at the center sample, which removes
//! the `O(dq^2)` bias of pairing a secant with a point value.

use crate::basis::{BasisLibrary, BasisTerm};
use crate::error::{Error, Result};
use crate::lstsq::{lstsq_weighted, Matrix};
use crate::response::Response;
use crate::signal::{moving_average, TimeSeries};

pub const DEFAULT_EPS_DQ: f64 = 1e-3;
pub const DEFAULT_SMOOTH_WINDOW: usize = 100;

/// `K(q) = sum_n k_n q^n`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StiffnessModel {
    library: BasisLibrary,
    coeffs: Vec<f64>,
}

impl StiffnessModel {
    pub fn new(library: BasisLibrary, coeffs: Vec<f64>) -> Result<Self> {
        library.ensure_stiffness_only()?;
        if library.len() != coeffs.len() {
            return Err(Error::CoefficientMismatch {
                coeffs: coeffs.len(),
                terms: library.len(),
            });
        }
        Ok(Self { library, coeffs })
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn library(&self) -> &BasisLibrary {
        &self.library
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `q^n`, if the library has that term.
    pub fn coeff(&self, n: u32) -> Option<f64> {
        let term = BasisTerm::new(n, 0)?;
        self.library.position(&term).map(|i| self.coeffs[i])
    }

    #[inline]
    pub fn eval(&self, q: f64) -> f64 {
        self.library.eval_sum(&self.coeffs, q, 0.0)
    }
}

/// Samples of the generalized conservative force `dL/dq` against `q`.
///
/// `force_samples[i]` is meaningful only where `mask[i]` is set; masked
/// entries hold zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ConservativeForceSamples {
    pub q_samples: Vec<f64>,
    pub force_samples: Vec<f64>,
    pub mask: Vec<bool>,
    /// Displacement step `q[i + 1] - q[i - 1]` at each sample.
    pub dq_samples: Vec<f64>,
    /// `(q[i - 1], q[i + 1])`, the interval each force sample averages over.
    pub q_bounds: Vec<(f64, f64)>,
    /// Moving-average window applied to the retained force sequence.
    pub smooth_window: usize,
}

impl ConservativeForceSamples {
    pub fn len(&self) -> usize {
        self.q_samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q_samples.is_empty()
    }

    pub fn retained_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// `(q, force, dq)` of every retained sample, in time order.
    pub fn retained(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (0..self.len())
            .filter(|&i| self.mask[i])
            .map(|i| (self.q_samples[i], self.force_samples[i], self.dq_samples[i]))
    }
}

/// `L = 2T - E`.
pub fn lagrangian(kinetic: &TimeSeries, mechanical: &TimeSeries) -> Result<TimeSeries> {
    kinetic.zip_with(mechanical, |t, e| 2.0 * t - e)
}

/// Conservative force from the Lagrangian sampled on the grid of `r`.
///
/// Samples where `|dq| < eps_dq * max|dq|` (turning points) are masked out,
/// as are the two end samples, and the survivors are smoothed with a
/// centered moving average of `smooth_window` samples taken over the
/// retained sequence.
pub fn conservative_force(l: &TimeSeries, r: &Response, eps_dq: f64, smooth_window: usize) -> Result<ConservativeForceSamples> {
    if !(eps_dq > 0.0 && eps_dq < 1.0) {
        return Err(Error::Model(format!("eps_dq {eps_dq} not in (0, 1)")));
    }
    l.check_grid(r.q())?;
    let n = l.len();
    if n < 3 {
        return Err(Error::SeriesTooShort { len: n, min: 3 });
    }
    let (lv, q, qd) = (l.values(), r.q().values(), r.qd().values());
    let m = r.inertia();
    let step = |v: &[f64], i: usize| if i == 0 || i + 1 == n { 0.0 } else { v[i + 1] - v[i - 1] };
    let dq: Vec<f64> = (0..n).map(|i| step(q, i)).collect();
    let floor = eps_dq * dq.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mask: Vec<bool> = dq.iter().map(|v| v.abs() >= floor && *v != 0.0).collect();

    let raw: Vec<f64> = (0..n)
        .filter(|&i| mask[i])
        .map(|i| {
            let p = 0.5 * m * (qd[i + 1] + qd[i - 1]);
            (step(lv, i) - p * step(qd, i)) / dq[i]
        })
        .collect();
    if raw.is_empty() {
        return Err(Error::AllMasked);
    }
    let smoothed = moving_average(&raw, smooth_window)?;
    let mut force = vec![0.0; n];
    for (slot, v) in (0..n).filter(|&i| mask[i]).zip(smoothed) {
        force[slot] = v;
    }
    let q_bounds = (0..n)
        .map(|i| if mask[i] { (q[i - 1], q[i + 1]) } else { (q[i], q[i]) })
        .collect();
    Ok(ConservativeForceSamples {
        q_samples: q.to_vec(),
        force_samples: force,
        mask,
        dq_samples: dq,
        q_bounds,
        smooth_window,
    })
}

/// `(F(b) - F(a)) / (b - a)` for `F(q) = q^(n + 1) / (n + 1)`, written
/// without cancellation; equals `q^n` when `a = b = q`.
fn secant_power(n: u32, a: f64, b: f64) -> f64 {
    let mut acc = 0.0;
    let mut ap = 1.0;
    for j in 0..=n {
        acc += ap * b.powi((n - j) as i32);
        ap *= a;
    }
    acc / (n + 1) as f64
}

/// Sample weights for [`fit_stiffness`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    #[default]
    Uniform,
    /// Weight each sample by `|dq|`, de-emphasizing samples near turning
    /// points.
    AbsDq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StiffnessFit {
    pub model: StiffnessModel,
    pub residual_rms: f64,
    pub dependent: Vec<BasisTerm>,
}

/// Least-squares fit of `K(q)` to the restoring force `-dL/dq` over the
/// retained samples. Each regressor is the secant of the term's
/// antiderivative over the sample's differencing interval, smoothed with the
/// same window as the force.
pub fn fit_stiffness(cf: &ConservativeForceSamples, lib: &BasisLibrary, weighting: Weighting) -> Result<StiffnessFit> {
    lib.ensure_stiffness_only()?;
    let available = cf.retained_count();
    if available < lib.len() || lib.is_empty() {
        return Err(Error::InsufficientSamples {
            available,
            required: lib.len().max(1),
        });
    }
    let idx: Vec<usize> = (0..cf.len()).filter(|&i| cf.mask[i]).collect();
    let window = cf.smooth_window.clamp(1, idx.len());
    let columns = lib
        .terms()
        .iter()
        .map(|t| {
            let col: Vec<f64> = idx
                .iter()
                .map(|&i| {
                    let (a, b) = cf.q_bounds[i];
                    secant_power(t.q_exp(), a, b)
                })
                .collect();
            moving_average(&col, window)
        })
        .collect::<Result<Vec<_>>>()?;
    let target: Vec<f64> = idx.iter().map(|&i| -cf.force_samples[i]).collect();
    let weights: Option<Vec<f64>> = match weighting {
        Weighting::Uniform => None,
        Weighting::AbsDq => Some(idx.iter().map(|&i| cf.dq_samples[i].abs()).collect()),
    };
    let sol = lstsq_weighted(&Matrix::from_columns(&columns), &target, weights.as_deref())?;
    Ok(StiffnessFit {
        dependent: sol.dependent.iter().map(|&j| lib.terms()[j]).collect(),
        residual_rms: sol.residual_rms,
        model: StiffnessModel::new(lib.clone(), sol.coeffs)?,
    })
}
