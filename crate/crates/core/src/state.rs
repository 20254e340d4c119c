use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pbc::{SimBox, Vec3};
use crate::topology::Topology;
use crate::units::BOLTZMANN;

/// Dynamic state of the system.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
    pub forces: Vec<Vec3>,
    pub simbox: SimBox,
    pub step: u64,
    /// ps
    pub time: f64,
}

impl State {
    pub fn new(positions: Vec<Vec3>, simbox: SimBox) -> Self {
        let n = positions.len();
        State {
            positions,
            velocities: vec![Vec3::zeros(); n],
            forces: vec![Vec3::zeros(); n],
            simbox,
            step: 0,
            time: 0.0,
        }
    }

    pub fn n_atoms(&self) -> usize {
        self.positions.len()
    }

    pub fn zero_forces(&mut self) {
        self.forces.iter_mut().for_each(|f| *f = Vec3::zeros());
    }

    pub fn wrap_positions(&mut self) {
        let b = self.simbox;
        self.positions.iter_mut().for_each(|r| *r = b.wrap(*r));
    }

    pub fn max_force(&self) -> f64 {
        self.forces.iter().map(|f| f.norm()).fold(0.0, f64::max)
    }

    pub fn total_momentum(&self, topo: &Topology) -> Vec3 {
        self.velocities
            .iter()
            .zip(&topo.mass)
            .map(|(v, &m)| v * m)
            .sum()
    }

    /// Subtract the centre-of-mass velocity.
    pub fn remove_com_motion(&mut self, topo: &Topology) {
        let vcm = self.total_momentum(topo) / topo.total_mass();
        self.velocities.iter_mut().for_each(|v| *v -= vcm);
    }
}

/// Energy terms of one force evaluation, kJ/mol unless noted.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyReport {
    pub bonded: f64,
    pub lj: f64,
    pub coulomb: f64,
    pub nn: f64,
    pub kinetic: f64,
    pub total_potential: f64,
    /// K
    pub temperature: f64,
    /// Σ r_ij·F_ij over all pairwise-decomposed contributions, kJ/mol.
    pub virial: f64,
    /// bar; zero until a kinetic energy has been attached.
    pub pressure: f64,
}

impl EnergyReport {
    pub fn sum_potential(&mut self) {
        self.total_potential = self.bonded + self.lj + self.coulomb + self.nn;
    }

    pub fn total_energy(&self) -> f64 {
        self.total_potential + self.kinetic
    }

    /// Column names for CSV energy logs.
    pub const CSV_HEADER: &'static str =
        "bonded,lj,coulomb,nn,kinetic,total_potential,temperature,pressure";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.4},{:.4}",
            self.bonded,
            self.lj,
            self.coulomb,
            self.nn,
            self.kinetic,
            self.total_potential,
            self.temperature,
            self.pressure
        )
    }
}

/// Arithmetic precision of force evaluation and state storage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    Fp32,
    Fp64,
}

impl Precision {
    /// Round vectors to single precision when running in FP32 mode.
    pub fn quantize(self, v: &mut [Vec3]) {
        if self == Precision::Fp32 {
            for x in v.iter_mut() {
                *x = x.map(|c| c as f32 as f64);
            }
        }
    }

    pub fn quantize_scalar(self, x: f64) -> f64 {
        match self {
            Precision::Fp32 => x as f32 as f64,
            Precision::Fp64 => x,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Precision::Fp32 => "fp32",
            Precision::Fp64 => "fp64",
        }
    }
}

/// Degrees of freedom after removing centre-of-mass motion.
pub fn degrees_of_freedom(n_atoms: usize) -> Result<f64> {
    if n_atoms < 2 {
        return Err(Error::DegreesOfFreedom(n_atoms));
    }
    Ok((3 * n_atoms - 3) as f64)
}

pub fn kinetic_energy(velocities: &[Vec3], masses: &[f64]) -> f64 {
    0.5 * velocities
        .iter()
        .zip(masses)
        .map(|(v, &m)| m * v.norm_squared())
        .sum::<f64>()
}

pub fn temperature_from_kinetic(kinetic: f64, n_atoms: usize) -> Result<f64> {
    Ok(2.0 * kinetic / (degrees_of_freedom(n_atoms)? * BOLTZMANN))
}

/// Kinetic energy (kJ/mol) and instantaneous temperature (K).
pub fn kinetic_energy_and_temperature(state: &State, topo: &Topology) -> Result<(f64, f64)> {
    let ke = kinetic_energy(&state.velocities, &topo.mass);
    Ok((ke, temperature_from_kinetic(ke, state.n_atoms())?))
}
