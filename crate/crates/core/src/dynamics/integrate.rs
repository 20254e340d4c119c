use crate::error::{Error, Result};
use crate::pbc::Vec3;
use crate::state::{EnergyReport, State};

fn check_forces(forces: &[Vec3]) -> Result<()> {
    if let Some(atom) = forces.iter().position(|f| !f.iter().all(|c| c.is_finite())) {
        return Err(Error::Integration { atom, msg: format!("non-finite force {:?}", forces[atom].as_slice()) });
    }
    Ok(())
}

/// v ← v + dt·F/m using the forces stored in the state.
pub fn half_kick(state: &mut State, masses: &[f64], dt: f64) -> Result<()> {
    check_forces(&state.forces)?;
    for ((v, f), &m) in state.velocities.iter_mut().zip(&state.forces).zip(masses) {
        *v += f * (dt / m);
    }
    Ok(())
}

fn drift(state: &mut State, dt: f64) {
    for (r, v) in state.positions.iter_mut().zip(&state.velocities) {
        *r += v * dt;
    }
    state.wrap_positions();
}

/// One leap-frog step. Velocities are at t−½Δt on entry and t+½Δt on exit;
/// `state.forces` must hold the forces at the current positions.
pub fn leapfrog_step(state: &mut State, masses: &[f64], dt: f64) -> Result<()> {
    half_kick(state, masses, dt)?;
    drift(state, dt);
    state.step += 1;
    state.time += dt;
    Ok(())
}

/// Kick–drift–kick velocity Verlet. `state.forces` must be current on entry;
/// `force_fn` recomputes them at the new positions.
pub fn velocity_verlet_step<F>(state: &mut State, masses: &[f64], dt: f64, mut force_fn: F) -> Result<EnergyReport>
where
    F: FnMut(&mut State) -> Result<EnergyReport>,
{
    half_kick(state, masses, 0.5 * dt)?;
    drift(state, dt);
    let report = force_fn(state)?;
    half_kick(state, masses, 0.5 * dt)?;
    state.step += 1;
    state.time += dt;
    Ok(report)
}
