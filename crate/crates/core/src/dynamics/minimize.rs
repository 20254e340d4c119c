use crate::error::{Error, Result};
use crate::state::State;

use super::EmConfig;

/// Smallest step size before the line search is declared stalled, nm.
pub const MIN_STEP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmStep {
    pub iteration: usize,
    pub energy: f64,
    pub max_force: f64,
    pub step_size: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmTrace {
    pub steps: Vec<EmStep>,
    pub converged: bool,
    pub accepted: usize,
    pub final_energy: f64,
    pub final_max_force: f64,
}

impl EmTrace {
    /// Energies of the starting point and every accepted step.
    pub fn accepted_energies(&self) -> Vec<f64> {
        self.steps.iter().filter(|s| s.accepted || s.iteration == 0).map(|s| s.energy).collect()
    }
}

/// Adaptive steepest descent.
///
/// Trial positions are r + h·F/max|F|. An energy decrease is accepted and the
/// step grows by `grow`; otherwise the trial is discarded and the step shrinks
/// by `shrink`. `state` always holds the lowest-energy configuration seen, with
/// its forces, including when a stall error is returned.
pub fn steepest_descent_minimize<F>(state: &mut State, cfg: &EmConfig, mut energy_fn: F) -> Result<EmTrace>
where
    F: FnMut(&mut State) -> Result<f64>,
{
    cfg.validate()?;
    let mut energy = energy_fn(state)?;
    if !energy.is_finite() {
        return Err(Error::Integration { atom: 0, msg: format!("initial energy {energy} is not finite") });
    }
    let mut trace = EmTrace::default();
    let mut h = cfg.initial_step;
    let mut fmax = state.max_force();
    trace.steps.push(EmStep { iteration: 0, energy, max_force: fmax, step_size: h, accepted: false });

    for iteration in 1..=cfg.max_steps {
        if fmax <= cfg.force_tolerance {
            trace.converged = true;
            break;
        }
        let mut trial = state.clone();
        let scale = h / fmax;
        for (r, f) in trial.positions.iter_mut().zip(&state.forces) {
            *r += f * scale;
        }
        trial.wrap_positions();
        let trial_energy = match energy_fn(&mut trial) {
            Ok(e) => e,
            // a blown-up trial (e.g. overlap) is simply a rejected step
            Err(Error::Overlap { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        let accepted = trial_energy < energy;
        if accepted {
            *state = trial;
            energy = trial_energy;
            fmax = state.max_force();
            trace.accepted += 1;
            h *= cfg.grow;
        } else {
            h *= cfg.shrink;
        }
        trace.steps.push(EmStep { iteration, energy, max_force: fmax, step_size: h, accepted });
        if h < MIN_STEP {
            trace.final_energy = energy;
            trace.final_max_force = fmax;
            return Err(Error::Stall { step: h });
        }
    }
    if fmax <= cfg.force_tolerance {
        trace.converged = true;
    }
    trace.final_energy = energy;
    trace.final_max_force = fmax;
    Ok(trace)
}
