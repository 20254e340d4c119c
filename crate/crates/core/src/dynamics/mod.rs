//! Integrators, Berendsen temperature/pressure coupling and steepest-descent
//! energy minimisation.

mod coupling;
mod integrate;
mod minimize;

use serde::{Deserialize, Serialize};

pub use coupling::{
    berendsen_barostat, berendsen_lambda, berendsen_mu, berendsen_thermostat, pressure_bar, BAROSTAT_CLAMP,
    THERMOSTAT_CLAMP,
};
pub use integrate::{half_kick, leapfrog_step, velocity_verlet_step};
pub use minimize::{steepest_descent_minimize, EmStep, EmTrace};

use crate::error::{Error, Result};
use crate::units::PS_PER_FS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Leapfrog,
    VelocityVerlet,
    Steep,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thermostat {
    /// K
    pub t0: f64,
    /// ps
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Barostat {
    /// bar
    pub p0: f64,
    /// ps
    pub tau: f64,
    /// bar⁻¹
    pub compressibility: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt_fs: f64,
    pub scheme: Scheme,
    pub thermostat: Option<Thermostat>,
    pub barostat: Option<Barostat>,
}

impl IntegratorConfig {
    pub fn dt_ps(&self) -> f64 {
        self.dt_fs * PS_PER_FS
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt_fs > 0.0) {
            return Err(Error::config("dt", "time step must be positive"));
        }
        if let Some(t) = self.thermostat {
            if !(t.tau >= self.dt_ps()) {
                return Err(Error::config("tau_t", "coupling time must be at least one time step"));
            }
            if !(t.t0 >= 0.0) {
                return Err(Error::config("ref_t", "reference temperature must be non-negative"));
            }
        }
        if let Some(b) = self.barostat {
            if !(b.tau >= self.dt_ps()) {
                return Err(Error::config("tau_p", "coupling time must be at least one time step"));
            }
            if !(b.compressibility > 0.0) {
                return Err(Error::config("compressibility", "must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    /// nm
    pub initial_step: f64,
    pub max_steps: usize,
    /// kJ·mol⁻¹·nm⁻¹
    pub force_tolerance: f64,
    pub grow: f64,
    pub shrink: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig { initial_step: 0.01, max_steps: 5000, force_tolerance: 10.0, grow: 1.2, shrink: 0.2 }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial_step > 0.0) {
            return Err(Error::config("emstep", "initial step must be positive"));
        }
        if !(self.grow > 1.0 && 1.0 > self.shrink && self.shrink > 0.0) {
            return Err(Error::config("em", "need grow > 1 > shrink > 0"));
        }
        Ok(())
    }
}
