//! Both identification phases chained on one free response.

use crate::basis::BasisLibrary;
use crate::dynamics::IdentifiedSystem;
use crate::error::Result;
use crate::phase1::{energy_trace, identify_damping, DampingFit, DampingOptions, EnergyTrace};
use crate::phase2::{
    conservative_force, fit_stiffness, lagrangian, ConservativeForceSamples, StiffnessFit, Weighting, DEFAULT_EPS_DQ,
    DEFAULT_SMOOTH_WINDOW,
};
use crate::response::Response;

#[derive(Debug, Clone, PartialEq)]
pub struct EddiOptions {
    pub damping: DampingOptions,
    pub eps_dq: f64,
    pub smooth_window: usize,
    pub weighting: Weighting,
}

impl Default for EddiOptions {
    fn default() -> Self {
        Self {
            damping: DampingOptions::default(),
            eps_dq: DEFAULT_EPS_DQ,
            smooth_window: DEFAULT_SMOOTH_WINDOW,
            weighting: Weighting::Uniform,
        }
    }
}

impl EddiOptions {
    /// Settings for noise-free simulated data: no smoothing.
    pub fn clean() -> Self {
        Self {
            smooth_window: 1,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EddiResult {
    pub system: IdentifiedSystem,
    pub damping: DampingFit,
    pub stiffness: StiffnessFit,
    pub energy: EnergyTrace,
    pub force: ConservativeForceSamples,
}

/// Damping from the energy balance at the zero crossings, then stiffness from
/// the Lagrangian over the same `[gamma_0, gamma_N]` window.
pub fn identify_eddi(
    r: &Response,
    damping_lib: &BasisLibrary,
    stiffness_lib: &BasisLibrary,
    opts: &EddiOptions,
) -> Result<EddiResult> {
    stiffness_lib.ensure_stiffness_only()?;
    let damping = identify_damping(r, damping_lib, &opts.damping)?;
    let energy = energy_trace(r, &damping.model, &damping.crossings)?;
    let start = r.q().first_index_at_or_after(energy.kinetic.t0());
    let window = r.slice(start, energy.kinetic.len())?;
    let l = lagrangian(&energy.kinetic, &energy.mechanical)?;
    let force = conservative_force(&l, &window, opts.eps_dq, opts.smooth_window)?;
    let stiffness = fit_stiffness(&force, stiffness_lib, opts.weighting)?;
    let system = IdentifiedSystem::new(r.inertia(), damping.model.clone(), stiffness.model.clone())?;
    Ok(EddiResult {
        system,
        damping,
        stiffness,
        energy,
        force,
    })
}
