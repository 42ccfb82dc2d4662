//! Damping identification from energy balance at zero-displacement instants.
//!
//! Whenever `q(gamma_i) = 0` the potential energy vanishes, so the
//! mechanical energy equals the kinetic energy there. The kinetic energy lost
//! between the first retained crossing `gamma_0` and each later crossing must
//! equal the work done by the dissipative force, which is linear in the
//! unknown damping coefficients:
//!
//! ```text
//! sum_j b_j * int_{gamma_0}^{gamma_i} qd * B_j(q, qd) dt = T(gamma_0) - T(gamma_i)
//! ```
//!
//! Stacking one row per crossing gives an overdetermined system `Q b = R`.

use crate::basis::{BasisLibrary, BasisTerm};
use crate::error::{Error, Result};
use crate::lstsq::{lstsq, LstsqSolution, Matrix};
use crate::response::Response;
use crate::signal::TimeSeries;

/// Default tail guard: crossings whose kinetic energy is below this fraction
/// of `T(gamma_0)` are dropped.
pub const DEFAULT_MIN_T_FRACTION: f64 = 1e-4;

/// Relative change of the total dissipated energy under which a term is
/// considered negligible by [`prune_terms`].
pub const PRUNE_THRESHOLD: f64 = 1e-3;

/// `B(q, qd) = sum_j b_j B_j(q, qd)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DampingModel {
    library: BasisLibrary,
    coeffs: Vec<f64>,
}

impl DampingModel {
    pub fn new(library: BasisLibrary, coeffs: Vec<f64>) -> Result<Self> {
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

    pub fn coeff(&self, term: &BasisTerm) -> Option<f64> {
        self.library.position(term).map(|i| self.coeffs[i])
    }

    #[inline]
    pub fn eval(&self, q: f64, qd: f64) -> f64 {
        self.library.eval_sum(&self.coeffs, q, qd)
    }

    /// Dissipated power `qd * B(q, qd)` sampled on the response grid.
    pub fn power(&self, r: &Response) -> TimeSeries {
        let values = r
            .q()
            .values()
            .iter()
            .zip(r.qd().values())
            .map(|(&q, &qd)| qd * self.eval(q, qd))
            .collect();
        r.q().with_values(values)
    }
}

/// Zero-displacement instants and the kinetic energy there.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroCrossingSet {
    pub gammas: Vec<f64>,
    pub t_at_gamma: Vec<f64>,
}

impl ZeroCrossingSet {
    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }

    /// Keeps `gamma_0` and the next `n` crossings.
    pub fn truncated(&self, n: usize) -> Self {
        let keep = (n + 1).min(self.len());
        Self {
            gammas: self.gammas[..keep].to_vec(),
            t_at_gamma: self.t_at_gamma[..keep].to_vec(),
        }
    }
}

/// Kinetic, cumulative dissipated and estimated mechanical energy on the
/// grid restricted to `[gamma_0, gamma_N]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTrace {
    pub kinetic: TimeSeries,
    pub dissipated: TimeSeries,
    pub mechanical: TimeSeries,
}

/// Locates the sign changes of `q` by linear interpolation and evaluates the
/// kinetic energy there.
pub fn find_zero_crossings(r: &Response, min_t_fraction: f64) -> Result<ZeroCrossingSet> {
    let q = r.q();
    let kinetic = r.kinetic_energy();
    let v = q.values();
    let mut gammas = Vec::new();
    for i in 0..v.len() {
        if v[i] == 0.0 {
            // An exact zero counts once per run of zeros.
            if i == 0 || v[i - 1] != 0.0 {
                gammas.push(q.time(i));
            }
        } else if i + 1 < v.len() && v[i] * v[i + 1] < 0.0 {
            let frac = v[i] / (v[i] - v[i + 1]);
            gammas.push(q.time(i) + frac * q.dt());
        }
    }
    if gammas.is_empty() {
        return Err(Error::NoCrossings);
    }
    let energies: Vec<f64> = gammas
        .iter()
        .map(|&g| kinetic.interp_at(g))
        .collect::<Result<_>>()?;
    let floor = min_t_fraction * energies[0];
    let (gammas, t_at_gamma) = gammas
        .into_iter()
        .zip(energies)
        .enumerate()
        .filter(|(i, (_, e))| *i == 0 || *e >= floor)
        .map(|(_, p)| p)
        .unzip();
    Ok(ZeroCrossingSet { gammas, t_at_gamma })
}

/// Builds `Q` (work of each basis term between `gamma_0` and `gamma_i`) and
/// `R` (kinetic energy lost), one row per crossing after `gamma_0`.
pub fn assemble_system(r: &Response, lib: &BasisLibrary, zc: &ZeroCrossingSet) -> Result<(Matrix, Vec<f64>)> {
    let rows = zc.len().saturating_sub(1);
    if lib.is_empty() || rows < lib.len() {
        return Err(Error::InsufficientCrossings {
            crossings: zc.len(),
            required: lib.len() + 1,
            terms: lib.len(),
        });
    }
    let g0 = zc.gammas[0];
    let columns = lib
        .terms()
        .iter()
        .map(|term| {
            let work = term_power(r, term).cumtrapz();
            let base = work.interp_at(g0)?;
            zc.gammas[1..]
                .iter()
                .map(|&g| Ok(work.interp_at(g)? - base))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let t0 = zc.t_at_gamma[0];
    let rhs = zc.t_at_gamma[1..].iter().map(|t| t0 - t).collect();
    Ok((Matrix::from_columns(&columns), rhs))
}

fn term_power(r: &Response, term: &BasisTerm) -> TimeSeries {
    let values = r
        .q()
        .values()
        .iter()
        .zip(r.qd().values())
        .map(|(&q, &qd)| qd * term.eval(q, qd))
        .collect();
    r.q().with_values(values)
}

/// Least-squares damping coefficients. Dependent columns come back as zero
/// and are listed in [`LstsqSolution::dependent`].
pub fn solve_damping(q: &Matrix, r: &[f64]) -> Result<LstsqSolution> {
    lstsq(q, r)
}

/// Cumulative energy dissipated by `dm` from `gamma0` onward, on the
/// response grid restricted to `t >= gamma0`.
pub fn dissipated_energy(r: &Response, dm: &DampingModel, gamma0: f64) -> Result<TimeSeries> {
    let work = dm.power(r).cumtrapz();
    let base = work.interp_at(gamma0)?;
    let start = work.first_index_at_or_after(gamma0);
    let len = work.len() - start;
    let d = work.slice(start, len)?;
    d.map(|v| v - base)
}

/// `E = T(gamma_0) - D` on a shared grid.
pub fn mechanical_energy(kinetic: &TimeSeries, dissipated: &TimeSeries, t_gamma0: f64) -> Result<TimeSeries> {
    kinetic.check_grid(dissipated)?;
    dissipated.map(|d| t_gamma0 - d)
}

/// Energy traces for an identified damping model over `[gamma_0, gamma_N]`.
pub fn energy_trace(r: &Response, dm: &DampingModel, zc: &ZeroCrossingSet) -> Result<EnergyTrace> {
    let g0 = zc.gammas[0];
    let g_last = *zc.gammas.last().expect("non-empty");
    let kinetic_full = r.kinetic_energy();
    let start = kinetic_full.first_index_at_or_after(g0);
    let end = kinetic_full.last_index_at_or_before(g_last).unwrap_or(start);
    if end < start {
        return Err(Error::SeriesTooShort { len: 0, min: 1 });
    }
    let len = end - start + 1;
    let kinetic = kinetic_full.slice(start, len)?;
    let dissipated = dissipated_energy(r, dm, g0)?.slice(0, len)?;
    let mechanical = mechanical_energy(&kinetic, &dissipated, zc.t_at_gamma[0])?;
    Ok(EnergyTrace {
        kinetic,
        dissipated,
        mechanical,
    })
}

/// Options for [`identify_damping`].
#[derive(Debug, Clone, PartialEq)]
pub struct DampingOptions {
    pub min_t_fraction: f64,
    /// Use only the first `N` crossings after `gamma_0`; `None` uses all.
    pub max_crossings: Option<usize>,
    /// Drop terms whose removal changes the total dissipated energy by less
    /// than [`PRUNE_THRESHOLD`], then refit.
    pub prune: bool,
}

impl Default for DampingOptions {
    fn default() -> Self {
        Self {
            min_t_fraction: DEFAULT_MIN_T_FRACTION,
            max_crossings: None,
            prune: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DampingFit {
    pub model: DampingModel,
    pub residual_rms: f64,
    /// Terms flagged as linearly dependent (coefficient forced to zero).
    pub dependent: Vec<BasisTerm>,
    /// Terms removed by pruning.
    pub pruned: Vec<BasisTerm>,
    pub crossings: ZeroCrossingSet,
}

/// Finds crossings, assembles and solves the energy-balance system.
pub fn identify_damping(r: &Response, lib: &BasisLibrary, opts: &DampingOptions) -> Result<DampingFit> {
    let mut zc = find_zero_crossings(r, opts.min_t_fraction)?;
    if let Some(n) = opts.max_crossings {
        zc = zc.truncated(n);
    }
    let (q, rhs) = assemble_system(r, lib, &zc)?;
    let sol = solve_damping(&q, &rhs)?;
    let mut fit = DampingFit {
        model: DampingModel::new(lib.clone(), sol.coeffs.clone())?,
        residual_rms: sol.residual_rms,
        dependent: sol.dependent.iter().map(|&j| lib.terms()[j]).collect(),
        pruned: Vec::new(),
        crossings: zc,
    };
    if opts.prune {
        let drop = prune_terms(r, &fit.model, &fit.crossings)?;
        if !drop.is_empty() && drop.len() < lib.len() {
            let reduced = lib.without(&drop);
            let (q, rhs) = assemble_system(r, &reduced, &fit.crossings)?;
            let sol = solve_damping(&q, &rhs)?;
            fit.pruned = drop.iter().map(|&j| lib.terms()[j]).collect();
            fit.dependent = sol.dependent.iter().map(|&j| reduced.terms()[j]).collect();
            fit.residual_rms = sol.residual_rms;
            fit.model = DampingModel::new(reduced, sol.coeffs)?;
        }
    }
    Ok(fit)
}

/// Energy dissipated by each term of `dm` over `[gamma_0, gamma_N]`.
pub fn term_contributions(r: &Response, dm: &DampingModel, zc: &ZeroCrossingSet) -> Result<Vec<f64>> {
    let g0 = zc.gammas[0];
    let g_last = *zc.gammas.last().expect("non-empty");
    dm.library()
        .terms()
        .iter()
        .zip(dm.coeffs())
        .map(|(term, &c)| {
            let work = term_power(r, term).cumtrapz();
            Ok(c * (work.interp_at(g_last)? - work.interp_at(g0)?))
        })
        .collect()
}

/// Indices of terms whose individual contribution to the total dissipated
/// energy is below [`PRUNE_THRESHOLD`] of the total.
pub fn prune_terms(r: &Response, dm: &DampingModel, zc: &ZeroCrossingSet) -> Result<Vec<usize>> {
    let parts = term_contributions(r, dm, zc)?;
    let total: f64 = parts.iter().sum();
    if total == 0.0 {
        return Ok(Vec::new());
    }
    Ok(parts
        .iter()
        .enumerate()
        .filter(|(_, p)| (*p / total).abs() < PRUNE_THRESHOLD)
        .map(|(i, _)| i)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::parse_terms;
    use crate::dynamics::{simulate, IdentifiedSystem, SolverSpec};
    use crate::phase2::StiffnessModel;
    use std::f64::consts::PI;

    fn response_from(q: impl Fn(f64) -> f64, qd: impl Fn(f64) -> f64, dt: f64, n: usize, m: f64) -> Response {
        Response::new(
            TimeSeries::from_fn(0.0, dt, n, q).unwrap(),
            TimeSeries::from_fn(0.0, dt, n, qd).unwrap(),
            None,
            m,
        )
        .unwrap()
    }

    fn linear_oscillator(b: f64, t_span: f64) -> Response {
        let sys = IdentifiedSystem::new(
            1.0,
            DampingModel::new(parse_terms("qd").unwrap(), vec![b]).unwrap(),
            StiffnessModel::new(parse_terms("q").unwrap(), vec![1.0]).unwrap(),
        )
        .unwrap();
        simulate(&sys, (0.0, 1.0), &SolverSpec::new(1000.0, t_span), None).unwrap()
    }

    /// Bisection on a continuous function bracketing a single root.
    fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn sine_crossings() {
        let w = 2.0 * PI;
        let r = response_from(|t| (w * t).sin(), |t| w * (w * t).cos(), 1e-3, 2000, 1.0);
        let zc = find_zero_crossings(&r, DEFAULT_MIN_T_FRACTION).unwrap();
        assert_eq!(zc.len(), 4);
        for (g, e) in zc.gammas.iter().zip([0.0, 0.5, 1.0, 1.5]) {
            assert!((g - e).abs() < 1e-5, "{g}");
        }
    }

    #[test]
    fn damped_sine_crossings_match_bisection() {
        let w = 2.0 * PI;
        let q = |t: f64| (-t).exp() * (w * t).sin();
        let qd = |t: f64| (-t).exp() * (w * (w * t).cos() - (w * t).sin());
        let r = response_from(q, qd, 1e-3, 2000, 1.0);
        let zc = find_zero_crossings(&r, 0.0).unwrap();
        assert_eq!(zc.len(), 4);
        assert_eq!(zc.gammas[0], 0.0);
        for (i, g) in zc.gammas.iter().enumerate().skip(1) {
            let center = 0.5 * i as f64;
            let root = bisect(q, center - 0.1, center + 0.1);
            assert!((g - root).abs() < 1e-4, "{g} vs {root}");
        }
    }

    #[test]
    fn no_crossings() {
        let r = response_from(|t| 1.0 + t, |_| 1.0, 1e-2, 100, 1.0);
        assert!(matches!(find_zero_crossings(&r, 1e-4), Err(Error::NoCrossings)));
    }

    #[test]
    fn tail_guard_discards_quiet_crossings() {
        let w = 2.0 * PI;
        let q = |t: f64| (-3.0 * t).exp() * (w * t).sin();
        let qd = |t: f64| (-3.0 * t).exp() * (w * (w * t).cos() - 3.0 * (w * t).sin());
        let r = response_from(q, qd, 1e-3, 5000, 1.0);
        let all = find_zero_crossings(&r, 0.0).unwrap();
        let guarded = find_zero_crossings(&r, 1e-4).unwrap();
        assert!(guarded.len() < all.len());
        let floor = 1e-4 * guarded.t_at_gamma[0];
        assert!(guarded.t_at_gamma.iter().all(|&e| e >= floor));
    }

    #[test]
    fn linear_oscillator_system_is_monotone() {
        let r = linear_oscillator(0.1, 60.0);
        let lib = parse_terms("qd").unwrap();
        let zc = find_zero_crossings(&r, DEFAULT_MIN_T_FRACTION).unwrap();
        let (q, rhs) = assemble_system(&r, &lib, &zc).unwrap();
        assert_eq!(q.cols(), 1);
        let col = q.column(0);
        assert!(col[0] > 0.0);
        assert!(col.windows(2).all(|w| w[1] > w[0]));
        assert!(rhs[0] >= 0.0);
        assert!(rhs.windows(2).all(|w| w[1] >= w[0]));

        let sol = solve_damping(&q, &rhs).unwrap();
        assert!((sol.coeffs[0] / 0.1 - 1.0).abs() < 5e-3, "{}", sol.coeffs[0]);
    }

    #[test]
    fn identity_solve() {
        let sol = solve_damping(&Matrix::identity(2), &[3.0, 5.0]).unwrap();
        assert_eq!(sol.coeffs, vec![3.0, 5.0]);
        assert_eq!(sol.residual_rms, 0.0);
    }

    #[test]
    fn too_few_crossings() {
        let w = 2.0 * PI;
        let r = response_from(|t| (w * t).sin(), |t| w * (w * t).cos(), 1e-3, 1200, 1.0);
        let zc = find_zero_crossings(&r, 0.0).unwrap();
        let lib = parse_terms("qd, qd^2, qd^3").unwrap();
        assert!(matches!(
            assemble_system(&r, &lib, &zc),
            Err(Error::InsufficientCrossings { crossings: 3, required: 4, terms: 3 })
        ));
    }

    #[test]
    fn zero_model_dissipates_nothing() {
        let r = linear_oscillator(0.1, 10.0);
        let dm = DampingModel::new(parse_terms("qd, q^2*qd").unwrap(), vec![0.0, 0.0]).unwrap();
        let d = dissipated_energy(&r, &dm, 0.0).unwrap();
        assert!(d.values().iter().all(|&v| v == 0.0));
        let e = mechanical_energy(&r.kinetic_energy(), &d, 0.5).unwrap();
        assert!(e.values().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn dissipated_energy_matches_bookkeeping() {
        let r = linear_oscillator(0.1, 60.0);
        let dm = DampingModel::new(parse_terms("qd").unwrap(), vec![0.1]).unwrap();
        let g0 = 0.0;
        let d = dissipated_energy(&r, &dm, g0).unwrap();
        let e0 = 0.5;
        for i in 0..d.len() {
            let (q, v) = (r.q().values()[i], r.qd().values()[i]);
            let exact = e0 - (0.5 * v * v + 0.5 * q * q);
            assert!((d.values()[i] - exact).abs() < 5e-3 * e0);
        }
    }

    #[test]
    fn mechanical_energy_grid_mismatch() {
        let a = TimeSeries::new(0.0, 0.1, vec![1.0; 3]).unwrap();
        let b = TimeSeries::new(0.0, 0.1, vec![1.0; 4]).unwrap();
        assert!(matches!(mechanical_energy(&a, &b, 1.0), Err(Error::GridMismatch)));
    }

    #[test]
    fn energy_identity_at_crossings() {
        let r = linear_oscillator(0.1, 60.0);
        let lib = parse_terms("qd, qd^3").unwrap();
        let fit = identify_damping(&r, &lib, &DampingOptions::default()).unwrap();
        let trace = energy_trace(&r, &fit.model, &fit.crossings).unwrap();
        let (q, rhs) = assemble_system(&r, &lib, &fit.crossings).unwrap();
        let pred = q.mul_vec(fit.model.coeffs());
        let n = rhs.len() as f64;
        for (i, g) in fit.crossings.gammas.iter().enumerate().skip(1) {
            let e = trace.mechanical.interp_at((*g).min(trace.mechanical.t_end())).unwrap_or(f64::NAN);
            let t = fit.crossings.t_at_gamma[i];
            if e.is_nan() {
                continue;
            }
            // E - T at a crossing is the negated least-squares residual
            // (up to the grid offset at gamma_0).
            let resid = rhs[i - 1] - pred[i - 1];
            assert!(((e - t) + resid).abs() < 1e-3 * fit.crossings.t_at_gamma[0]);
            assert!((e - t).abs() <= fit.residual_rms * n.sqrt() + 1e-3 * fit.crossings.t_at_gamma[0]);
        }
    }

    #[test]
    fn scale_equivariance() {
        let r = linear_oscillator(0.1, 30.0);
        let lib = parse_terms("qd, q^2*qd").unwrap();
        let base = identify_damping(&r, &lib, &DampingOptions::default()).unwrap();
        let scaled = identify_damping(&r.with_inertia(3.0).unwrap(), &lib, &DampingOptions::default()).unwrap();
        // Compared through the predicted energy loss: the near-zero q^2*qd
        // coefficient has no meaningful relative precision of its own.
        let (q, rhs) = assemble_system(&r, &lib, &base.crossings).unwrap();
        let diff: Vec<f64> = base
            .model
            .coeffs()
            .iter()
            .zip(scaled.model.coeffs())
            .map(|(a, b)| b - 3.0 * a)
            .collect();
        let err = q.mul_vec(&diff).iter().map(|v| v * v).sum::<f64>().sqrt();
        let scale = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(err <= 1e-9 * scale, "{err} vs {scale}");
        let (a, b) = (base.model.coeffs()[0], scaled.model.coeffs()[0]);
        assert!((b - 3.0 * a).abs() <= 1e-9 * a);
    }

    #[test]
    fn monotone_dissipation_for_odd_positive_terms() {
        let r = linear_oscillator(0.1, 20.0);
        let dm = DampingModel::new(parse_terms("qd, qd^3, q^2*qd").unwrap(), vec![0.1, 0.5, 2.0]).unwrap();
        let d = dissipated_energy(&r, &dm, 0.0).unwrap();
        assert!(d.values().windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn pruning_drops_negligible_terms() {
        let r = linear_oscillator(0.1, 60.0);
        let lib = parse_terms("qd, qd^2, qd^3").unwrap();
        let opts = DampingOptions {
            prune: true,
            ..DampingOptions::default()
        };
        let fit = identify_damping(&r, &lib, &opts).unwrap();
        assert_eq!(fit.model.library().render(), "qd");
        assert_eq!(fit.pruned.len(), 2);
        assert!((fit.model.coeffs()[0] / 0.1 - 1.0).abs() < 5e-3);
    }

    #[test]
    fn truncation_keeps_square_system() {
        let r = linear_oscillator(0.1, 60.0);
        let lib = parse_terms("qd, qd^3").unwrap();
        let opts = DampingOptions {
            max_crossings: Some(2),
            ..DampingOptions::default()
        };
        let fit = identify_damping(&r, &lib, &opts).unwrap();
        assert_eq!(fit.crossings.len(), 3);
    }
}
