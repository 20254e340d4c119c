//! Classical short-range interactions: bonded terms, Lennard-Jones and
//! cutoff Coulomb. Every term returns its energy and accumulates forces as
//! the analytic negative gradient.

mod bonded;
mod nonbonded;

use serde::{Deserialize, Serialize};

pub use bonded::{angle_term, bond_term, bonded_forces, dihedral_angle, dihedral_term, BondedEnergy};
pub use nonbonded::{coulomb_forces, coulomb_pair, lj_forces, lj_pair, PairEnergy, MIN_PAIR_DISTANCE};

use crate::error::{Error, Result};
use crate::neighbors::{ListMode, NeighborList};
use crate::state::{EnergyReport, State};
use crate::topology::Topology;

/// Lorentz–Berthelot combined Lennard-Jones parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LjParams {
    n_types: usize,
    sigma: Vec<f64>,
    epsilon: Vec<f64>,
}

impl LjParams {
    /// Combine per-type `(σ, ε)`: σij = (σi+σj)/2, εij = √(εi εj).
    pub fn from_per_type(types: &[(f64, f64)]) -> Result<Self> {
        if let Some((t, _)) = types.iter().enumerate().find(|(_, &(s, e))| !(s > 0.0) || !(e >= 0.0)) {
            return Err(Error::config("forcefield", format!("type {t}: need σ > 0 and ε ≥ 0")));
        }
        let n = types.len();
        let mut sigma = vec![0.0; n * n];
        let mut epsilon = vec![0.0; n * n];
        for (a, &(sa, ea)) in types.iter().enumerate() {
            for (b, &(sb, eb)) in types.iter().enumerate() {
                sigma[a * n + b] = 0.5 * (sa + sb);
                epsilon[a * n + b] = (ea * eb).sqrt();
            }
        }
        Ok(LjParams { n_types: n, sigma, epsilon })
    }

    pub fn n_types(&self) -> usize {
        self.n_types
    }

    #[inline]
    pub fn pair(&self, ti: usize, tj: usize) -> (f64, f64) {
        let k = ti * self.n_types + tj;
        (self.sigma[k], self.epsilon[k])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoulombScheme {
    CutoffShifted,
    ReactionField,
}

impl CoulombScheme {
    pub fn as_str(self) -> &'static str {
        match self {
            CoulombScheme::CutoffShifted => "cutoff_shifted",
            CoulombScheme::ReactionField => "reaction_field",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoulombParams {
    pub scheme: CoulombScheme,
    pub rc: f64,
    pub epsilon_rf: f64,
}

impl CoulombParams {
    /// `(k_rf, c_rf)` chosen so the potential vanishes at the cutoff.
    pub fn reaction_field_constants(&self) -> (f64, f64) {
        let rc = self.rc;
        let k_rf = (self.epsilon_rf - 1.0) / ((2.0 * self.epsilon_rf + 1.0) * rc.powi(3));
        (k_rf, 1.0 / rc + k_rf * rc * rc)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rc > 0.0) {
            return Err(Error::config("rcutoff", "must be positive"));
        }
        if self.scheme == CoulombScheme::ReactionField && !(self.epsilon_rf >= 1.0) {
            return Err(Error::config("epsilon_rf", "must be at least 1 for reaction field"));
        }
        Ok(())
    }
}

/// Everything the classical force loop needs besides the topology.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalParams {
    pub rc: f64,
    pub lj: LjParams,
    pub coulomb: CoulombParams,
}

impl ClassicalParams {
    pub fn new(rc: f64, lj: LjParams, scheme: CoulombScheme, epsilon_rf: f64) -> Result<Self> {
        let coulomb = CoulombParams { scheme, rc, epsilon_rf };
        coulomb.validate()?;
        Ok(ClassicalParams { rc, lj, coulomb })
    }

    /// Same parameters at a different cutoff.
    pub fn with_cutoff(&self, rc: f64) -> Self {
        ClassicalParams {
            rc,
            lj: self.lj.clone(),
            coulomb: CoulombParams { rc, ..self.coulomb },
        }
    }
}

/// Term-level record of what a classical evaluation actually touched.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TermLedger {
    /// Atom tuples of every evaluated bond, angle and dihedral.
    pub bonded: Vec<Vec<usize>>,
    /// LJ pairs evaluated inside the cutoff.
    pub lj_pairs: Vec<(usize, usize)>,
    /// Coulomb pairs evaluated inside the cutoff.
    pub coulomb_pairs: Vec<(usize, usize)>,
}

/// Zero the force array and accumulate bonded, LJ and Coulomb terms.
pub fn compute_classical(
    state: &mut State,
    topo: &Topology,
    nlist: &NeighborList,
    params: &ClassicalParams,
    ledger: Option<&mut TermLedger>,
) -> Result<EnergyReport> {
    if nlist.mode != ListMode::Half {
        return Err(Error::Geometry("classical forces need a half neighbour list".into()));
    }
    if nlist.cutoff < params.rc {
        return Err(Error::Geometry(format!(
            "neighbour list cutoff {} is below the interaction cutoff {}",
            nlist.cutoff, params.rc
        )));
    }
    state.zero_forces();
    evaluate_classical(
        &state.positions,
        &state.simbox,
        topo,
        &topo.bonds,
        &topo.angles,
        &topo.dihedrals,
        &nlist.pairs,
        params,
        &mut state.forces,
        ledger,
    )
}

/// Accumulating kernel shared by the single-domain and decomposed paths.
#[allow(clippy::too_many_arguments)]
pub(crate) fn evaluate_classical(
    positions: &[crate::pbc::Vec3],
    simbox: &crate::pbc::SimBox,
    topo: &Topology,
    bonds: &[crate::topology::Bond],
    angles: &[crate::topology::Angle],
    dihedrals: &[crate::topology::Dihedral],
    pairs: &[(usize, usize)],
    params: &ClassicalParams,
    forces: &mut [crate::pbc::Vec3],
    mut ledger: Option<&mut TermLedger>,
) -> Result<EnergyReport> {
    evaluate_classical_typed(
        positions,
        simbox,
        &topo.type_of,
        &topo.charge,
        bonds,
        angles,
        dihedrals,
        pairs,
        params,
        forces,
        ledger.as_deref_mut(),
    )
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn evaluate_classical_typed(
    positions: &[crate::pbc::Vec3],
    simbox: &crate::pbc::SimBox,
    type_of: &[usize],
    charge: &[f64],
    bonds: &[crate::topology::Bond],
    angles: &[crate::topology::Angle],
    dihedrals: &[crate::topology::Dihedral],
    pairs: &[(usize, usize)],
    params: &ClassicalParams,
    forces: &mut [crate::pbc::Vec3],
    mut ledger: Option<&mut TermLedger>,
) -> Result<EnergyReport> {
    let bonded = bonded_forces(positions, simbox, bonds, angles, dihedrals, forces, ledger.as_deref_mut());
    let lj = lj_forces(positions, simbox, type_of, pairs, &params.lj, params.rc, forces, ledger.as_deref_mut())?;
    let coul = coulomb_forces(positions, simbox, charge, pairs, &params.coulomb, forces, ledger)?;
    let mut report = EnergyReport {
        bonded: bonded.total(),
        lj: lj.energy,
        coulomb: coul.energy,
        virial: bonded.virial + lj.virial + coul.virial,
        ..Default::default()
    };
    report.sum_potential();
    Ok(report)
}
