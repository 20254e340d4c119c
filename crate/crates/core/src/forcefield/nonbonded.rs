//! Potential-shifted Lennard-Jones and short-range Coulomb pair terms.

use crate::error::{Error, Result};
use crate::pbc::{SimBox, Vec3};
use crate::units::COULOMB_PREFACTOR;

use super::{CoulombParams, CoulombScheme, LjParams, TermLedger};

/// Closer than this, a pair is reported as overlapping.
pub const MIN_PAIR_DISTANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PairEnergy {
    pub energy: f64,
    pub virial: f64,
    /// Pairs that were inside the cutoff.
    pub evaluated: usize,
}

/// Unshifted 12-6 energy and radial force magnitude (positive = repulsive).
#[inline]
pub fn lj_pair(sigma: f64, epsilon: f64, r: f64) -> (f64, f64) {
    let sr6 = (sigma / r).powi(6);
    let sr12 = sr6 * sr6;
    (4.0 * epsilon * (sr12 - sr6), 24.0 * epsilon / r * (2.0 * sr12 - sr6))
}

/// Coulomb energy and radial force magnitude for `qq = qi·qj`.
#[inline]
pub fn coulomb_pair(params: &CoulombParams, qq: f64, r: f64) -> (f64, f64) {
    let f = COULOMB_PREFACTOR * qq;
    match params.scheme {
        CoulombScheme::CutoffShifted => (f * (1.0 / r - 1.0 / params.rc), f / (r * r)),
        CoulombScheme::ReactionField => {
            let (k_rf, c_rf) = params.reaction_field_constants();
            (f * (1.0 / r + k_rf * r * r - c_rf), f * (1.0 / (r * r) - 2.0 * k_rf * r))
        }
    }
}

#[inline]
fn apply_pair(forces: &mut [Vec3], i: usize, j: usize, d: &Vec3, r: f64, fmag: f64) {
    // d points from i to j; repulsion pushes j along +d
    let fj = d * (fmag / r);
    forces[i] -= fj;
    forces[j] += fj;
}

pub fn lj_forces(
    positions: &[Vec3],
    simbox: &SimBox,
    type_of: &[usize],
    pairs: &[(usize, usize)],
    lj: &LjParams,
    rc: f64,
    forces: &mut [Vec3],
    mut ledger: Option<&mut TermLedger>,
) -> Result<PairEnergy> {
    let rc2 = rc * rc;
    let mut out = PairEnergy::default();
    for &(i, j) in pairs {
        let d = simbox.delta(&positions[i], &positions[j]);
        let r2 = d.norm_squared();
        if r2 > rc2 {
            continue;
        }
        let r = r2.sqrt();
        if r < MIN_PAIR_DISTANCE {
            return Err(Error::Overlap { i, j, r });
        }
        let (sigma, epsilon) = lj.pair(type_of[i], type_of[j]);
        if epsilon == 0.0 {
            continue;
        }
        let (e, fmag) = lj_pair(sigma, epsilon, r);
        let shift = lj_pair(sigma, epsilon, rc).0;
        out.energy += e - shift;
        out.virial += fmag * r;
        out.evaluated += 1;
        apply_pair(forces, i, j, &d, r, fmag);
        if let Some(l) = ledger.as_deref_mut() {
            l.lj_pairs.push((i, j));
        }
    }
    Ok(out)
}

pub fn coulomb_forces(
    positions: &[Vec3],
    simbox: &SimBox,
    charge: &[f64],
    pairs: &[(usize, usize)],
    params: &CoulombParams,
    forces: &mut [Vec3],
    mut ledger: Option<&mut TermLedger>,
) -> Result<PairEnergy> {
    let rc2 = params.rc * params.rc;
    let mut out = PairEnergy::default();
    for &(i, j) in pairs {
        let qq = charge[i] * charge[j];
        if qq == 0.0 {
            continue;
        }
        let d = simbox.delta(&positions[i], &positions[j]);
        let r2 = d.norm_squared();
        if r2 > rc2 {
            continue;
        }
        let r = r2.sqrt();
        if r < MIN_PAIR_DISTANCE {
            return Err(Error::Overlap { i, j, r });
        }
        let (e, fmag) = coulomb_pair(params, qq, r);
        out.energy += e;
        out.virial += fmag * r;
        out.evaluated += 1;
        apply_pair(forces, i, j, &d, r, fmag);
        if let Some(l) = ledger.as_deref_mut() {
            l.coulomb_pairs.push((i, j));
        }
    }
    Ok(out)
}
