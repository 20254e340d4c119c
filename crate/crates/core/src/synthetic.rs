//! Synthetic "protein in solvent" systems.
//!
//! Atoms sit on a jittered cubic lattice visited in boustrophedon order, so
//! consecutive indices are lattice neighbours. The first ⌈f·N⌉ atoms form a
//! bonded chain (the group later handed to a neural-network potential); the
//! rest are an unbonded Lennard-Jones + charge fluid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gro::GroAtom;
use crate::pbc::{SimBox, Vec3};
use crate::state::{kinetic_energy, temperature_from_kinetic, State};
use crate::topology::{Angle, Bond, Dihedral, Topology};
use crate::units::BOLTZMANN;

pub const GROUP_TYPE: usize = 0;
pub const SOLVENT_TYPE: usize = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomType {
    pub name: String,
    pub mass: f64,
    /// Magnitude of the alternating ± partial charge.
    pub charge: f64,
    pub sigma: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticParams {
    pub n_atoms: usize,
    /// nm⁻³
    pub density: f64,
    pub fraction_grouped: f64,
    /// K
    pub temperature: f64,
    pub seed: u64,
    pub group_name: String,
    /// Uniform lattice jitter as a fraction of the spacing.
    pub jitter: f64,
    /// Index 0 is the grouped chain type, index 1 the solvent.
    pub types: Vec<AtomType>,
    pub bond_k: f64,
    pub angle_k: f64,
    pub dihedral_k: f64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        SyntheticParams {
            n_atoms: 582,
            density: 30.0,
            fraction_grouped: 0.5,
            temperature: 300.0,
            seed: 7,
            group_name: "protein".to_string(),
            jitter: 0.05,
            types: vec![
                AtomType { name: "CA".into(), mass: 12.011, charge: 0.25, sigma: 0.30, epsilon: 0.50 },
                AtomType { name: "OW".into(), mass: 18.015, charge: 0.20, sigma: 0.31, epsilon: 0.65 },
            ],
            bond_k: 1.0e4,
            angle_k: 200.0,
            dihedral_k: 2.0,
        }
    }
}

impl SyntheticParams {
    pub fn with_size(mut self, n_atoms: usize) -> Self {
        self.n_atoms = n_atoms;
        self
    }

    pub fn box_length(&self) -> f64 {
        (self.n_atoms as f64 / self.density).cbrt()
    }

    pub fn group_size(&self) -> usize {
        ((self.fraction_grouped * self.n_atoms as f64).ceil() as usize).min(self.n_atoms)
    }
}

/// Argon-like Lennard-Jones parameters: σ = 0.34 nm, ε = 0.996 kJ/mol.
pub fn argon() -> AtomType {
    AtomType { name: "AR".into(), mass: 39.948, charge: 0.0, sigma: 0.34, epsilon: 0.996 }
}

/// Single-component neutral Lennard-Jones fluid (no group, no bonds).
pub fn lj_fluid(n_atoms: usize, density: f64, temperature: f64, seed: u64) -> Result<SyntheticSystem> {
    generate_synthetic_system(&SyntheticParams {
        n_atoms,
        density,
        fraction_grouped: 0.0,
        temperature,
        seed,
        jitter: 0.02,
        types: vec![argon(), argon()],
        ..SyntheticParams::default()
    })
}

#[derive(Debug, Clone)]
pub struct SyntheticSystem {
    pub topology: Topology,
    pub state: State,
    pub atoms: Vec<GroAtom>,
    pub types: Vec<AtomType>,
}

impl SyntheticSystem {
    /// Per-type `(σ, ε)` for building Lennard-Jones parameters.
    pub fn lj_types(&self) -> Vec<(f64, f64)> {
        self.types.iter().map(|t| (t.sigma, t.epsilon)).collect()
    }
}

/// Lattice sites in boustrophedon order: every consecutive pair is adjacent.
fn snake_sites(n_side: usize) -> impl Iterator<Item = [usize; 3]> {
    (0..n_side).flat_map(move |iz| {
        (0..n_side).flat_map(move |iyp| {
            let iy = if iz % 2 == 0 { iyp } else { n_side - 1 - iyp };
            let row = iz * n_side + iyp;
            (0..n_side).map(move |ixp| {
                let ix = if row % 2 == 0 { ixp } else { n_side - 1 - ixp };
                [ix, iy, iz]
            })
        })
    })
}

fn angle_at(simbox: &SimBox, a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let u = simbox.delta(b, a);
    let v = simbox.delta(b, c);
    (u.dot(&v) / (u.norm() * v.norm())).clamp(-1.0, 1.0).acos()
}

pub fn generate_synthetic_system(params: &SyntheticParams) -> Result<SyntheticSystem> {
    let n = params.n_atoms;
    if n < 2 {
        return Err(Error::Synthetic(format!("need at least 2 atoms, got {n}")));
    }
    if !(params.density > 0.0) {
        return Err(Error::Synthetic(format!("density must be positive, got {}", params.density)));
    }
    if !(0.0..=1.0).contains(&params.fraction_grouped) {
        return Err(Error::Synthetic("fraction_grouped must lie in [0, 1]".into()));
    }
    if params.types.len() != 2 {
        return Err(Error::Synthetic("expected exactly two atom types (group, solvent)".into()));
    }

    let length = params.box_length();
    let n_side = (n as f64).cbrt().ceil() as usize;
    let n_side = if n_side.pow(3) < n { n_side + 1 } else { n_side };
    let spacing = length / n_side as f64;
    let sigma_max = params.types.iter().map(|t| t.sigma).fold(0.0, f64::max);
    if spacing < 0.8 * sigma_max {
        return Err(Error::Synthetic(format!(
            "lattice spacing {spacing:.4} nm is below 0.8·σ = {:.4} nm; density too high",
            0.8 * sigma_max
        )));
    }

    let simbox = SimBox::cubic(length)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let positions: Vec<Vec3> = snake_sites(n_side)
        .take(n)
        .map(|site| {
            let mut r = Vec3::zeros();
            for d in 0..3 {
                let jitter = params.jitter * (2.0 * rng.random::<f64>() - 1.0);
                r[d] = (site[d] as f64 + 0.5 + jitter) * spacing;
            }
            simbox.wrap(r)
        })
        .collect();

    let n_group = params.group_size();
    let mut topo = Topology::uniform(n, 1.0);
    let mut atoms = Vec::with_capacity(n);
    for i in 0..n {
        let t = if i < n_group { GROUP_TYPE } else { SOLVENT_TYPE };
        let spec = &params.types[t];
        topo.type_of[i] = t;
        topo.mass[i] = spec.mass;
        topo.charge[i] = if i % 2 == 0 { spec.charge } else { -spec.charge };
        let res = if t == GROUP_TYPE { "PRO" } else { "SOL" };
        atoms.push(GroAtom::new(i + 1, res, &spec.name));
    }

    // Chain terms use the generated geometry as their reference so the
    // starting structure is already near a bonded minimum.
    let in_range = |theta: f64| (60f64.to_radians()..=150f64.to_radians()).contains(&theta);
    for i in 1..n_group {
        let r0 = simbox.delta(&positions[i - 1], &positions[i]).norm();
        topo.bonds.push(Bond { i: i - 1, j: i, k: params.bond_k, r0 });
    }
    let mut angle_ok = vec![false; n_group];
    for j in 1..n_group.saturating_sub(1) {
        let theta = angle_at(&simbox, &positions[j - 1], &positions[j], &positions[j + 1]);
        if in_range(theta) {
            angle_ok[j] = true;
            topo.angles.push(Angle { i: j - 1, j, k: j + 1, k_theta: params.angle_k, theta0: theta });
        }
    }
    for j in 1..n_group.saturating_sub(2) {
        if angle_ok[j] && angle_ok[j + 1] {
            let phi = crate::forcefield::dihedral_angle(
                &simbox,
                [&positions[j - 1], &positions[j], &positions[j + 1], &positions[j + 2]],
            );
            topo.dihedrals.push(Dihedral {
                i: j - 1,
                j,
                k: j + 1,
                l: j + 2,
                k_phi: params.dihedral_k,
                multiplicity: 1,
                phase: phi - std::f64::consts::PI,
            });
        }
    }
    topo.exclude_bonded_neighbours();
    topo.set_group(&params.group_name, (0..n_group).collect());

    let mut state = State::new(positions, simbox);
    if params.temperature > 0.0 {
        for i in 0..n {
            let sd = (BOLTZMANN * params.temperature / topo.mass[i]).sqrt();
            let normal = Normal::new(0.0, sd).expect("finite standard deviation");
            state.velocities[i] = Vec3::new(normal.sample(&mut rng), normal.sample(&mut rng), normal.sample(&mut rng));
        }
        state.remove_com_motion(&topo);
        let t_now = temperature_from_kinetic(kinetic_energy(&state.velocities, &topo.mass), n)?;
        if t_now > 0.0 {
            let scale = (params.temperature / t_now).sqrt();
            state.velocities.iter_mut().for_each(|v| *v *= scale);
        }
    }

    Ok(SyntheticSystem { topology: topo, state, atoms, types: params.types.clone() })
}
