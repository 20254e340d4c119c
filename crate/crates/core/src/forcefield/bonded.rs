//! Harmonic bonds and angles, periodic proper dihedrals.

use crate::pbc::{SimBox, Vec3};
use crate::topology::{Angle, Bond, Dihedral};

use super::TermLedger;

/// Below this sin θ an angle is treated as collinear.
const COLLINEAR_SIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BondedEnergy {
    pub bonds: f64,
    pub angles: f64,
    pub dihedrals: f64,
    pub virial: f64,
    /// Angles or dihedrals evaluated with a clamped derivative.
    pub degenerate: usize,
}

impl BondedEnergy {
    pub fn total(&self) -> f64 {
        self.bonds + self.angles + self.dihedrals
    }
}

/// Energy and per-atom forces of one bond.
pub fn bond_term(simbox: &SimBox, xi: &Vec3, xj: &Vec3, k: f64, r0: f64) -> (f64, [Vec3; 2]) {
    let d = simbox.delta(xi, xj);
    let r = d.norm();
    let dr = r - r0;
    let energy = 0.5 * k * dr * dr;
    if r == 0.0 {
        return (energy, [Vec3::zeros(); 2]);
    }
    // force on j points back toward i when stretched
    let fj = d * (-k * dr / r);
    (energy, [-fj, fj])
}

/// Energy, forces and collinearity flag of one angle with vertex `x[1]`.
pub fn angle_term(simbox: &SimBox, x: [&Vec3; 3], k: f64, theta0: f64) -> (f64, [Vec3; 3], bool) {
    let u = simbox.delta(x[1], x[0]);
    let v = simbox.delta(x[1], x[2]);
    let (lu, lv) = (u.norm(), v.norm());
    let (uh, vh) = (u / lu, v / lv);
    let c = uh.dot(&vh).clamp(-1.0, 1.0);
    let theta = c.acos();
    let dt = theta - theta0;
    let energy = 0.5 * k * dt * dt;
    let mut s = (1.0 - c * c).sqrt();
    let degenerate = s < COLLINEAR_SIN;
    if degenerate {
        s = COLLINEAR_SIN;
    }
    // F = k(θ−θ0)/sinθ · ∂cosθ/∂x
    let pref = k * dt / s;
    let fi = (vh - uh * c) * (pref / lu);
    let fk = (uh - vh * c) * (pref / lv);
    (energy, [fi, -(fi + fk), fk], degenerate)
}

/// Signed dihedral angle i-j-k-l in (−π, π].
pub fn dihedral_angle(simbox: &SimBox, x: [&Vec3; 4]) -> f64 {
    let r_ij = simbox.delta(x[1], x[0]);
    let r_kj = simbox.delta(x[1], x[2]);
    let r_kl = simbox.delta(x[3], x[2]);
    let m = r_ij.cross(&r_kj);
    let n = r_kj.cross(&r_kl);
    let phi = m.cross(&n).norm().atan2(m.dot(&n));
    if r_ij.dot(&n) < 0.0 {
        -phi
    } else {
        phi
    }
}

pub fn dihedral_term(simbox: &SimBox, x: [&Vec3; 4], k: f64, mult: u32, phase: f64) -> (f64, [Vec3; 4], bool) {
    let r_ij = simbox.delta(x[1], x[0]);
    let r_kj = simbox.delta(x[1], x[2]);
    let r_kl = simbox.delta(x[3], x[2]);
    let m = r_ij.cross(&r_kj);
    let n = r_kj.cross(&r_kl);
    let phi = {
        let p = m.cross(&n).norm().atan2(m.dot(&n));
        if r_ij.dot(&n) < 0.0 {
            -p
        } else {
            p
        }
    };
    let mult_f = mult as f64;
    let arg = mult_f * phi - phase;
    let energy = k * (1.0 + arg.cos());
    let (m2, n2) = (m.norm_squared(), n.norm_squared());
    let nrkj2 = r_kj.norm_squared();
    if m2 < 1e-24 || n2 < 1e-24 || nrkj2 == 0.0 {
        return (energy, [Vec3::zeros(); 4], true);
    }
    let ddphi = -k * mult_f * arg.sin();
    let nrkj = nrkj2.sqrt();
    let f_i = m * (-ddphi * nrkj / m2);
    let f_l = n * (ddphi * nrkj / n2);
    let p = r_ij.dot(&r_kj) / nrkj2;
    let q = r_kl.dot(&r_kj) / nrkj2;
    let svec = f_i * p - f_l * q;
    let f_j = f_i - svec;
    let f_k = f_l + svec;
    (energy, [f_i, -f_j, -f_k, f_l], false)
}

/// Σ d_a·F_a with d_a the minimum-image offset from the first atom.
fn term_virial<const N: usize>(simbox: &SimBox, x: [&Vec3; N], f: &[Vec3; N]) -> f64 {
    (1..N).map(|a| simbox.delta(x[0], x[a]).dot(&f[a])).sum()
}

/// Accumulate all bonded terms into `forces`.
pub fn bonded_forces(
    positions: &[Vec3],
    simbox: &SimBox,
    bonds: &[Bond],
    angles: &[Angle],
    dihedrals: &[Dihedral],
    forces: &mut [Vec3],
    mut ledger: Option<&mut TermLedger>,
) -> BondedEnergy {
    let mut out = BondedEnergy::default();
    for b in bonds {
        let x = [&positions[b.i], &positions[b.j]];
        let (e, f) = bond_term(simbox, x[0], x[1], b.k, b.r0);
        out.bonds += e;
        out.virial += term_virial(simbox, x, &f);
        forces[b.i] += f[0];
        forces[b.j] += f[1];
        if let Some(l) = ledger.as_deref_mut() {
            l.bonded.push(b.atoms().to_vec());
        }
    }
    for a in angles {
        let x = [&positions[a.i], &positions[a.j], &positions[a.k]];
        let (e, f, degenerate) = angle_term(simbox, x, a.k_theta, a.theta0);
        out.angles += e;
        out.degenerate += degenerate as usize;
        out.virial += term_virial(simbox, x, &f);
        for (idx, fa) in a.atoms().into_iter().zip(f) {
            forces[idx] += fa;
        }
        if let Some(l) = ledger.as_deref_mut() {
            l.bonded.push(a.atoms().to_vec());
        }
    }
    for d in dihedrals {
        let x = [&positions[d.i], &positions[d.j], &positions[d.k], &positions[d.l]];
        let (e, f, degenerate) = dihedral_term(simbox, x, d.k_phi, d.multiplicity, d.phase);
        out.dihedrals += e;
        out.degenerate += degenerate as usize;
        out.virial += term_virial(simbox, x, &f);
        for (idx, fa) in d.atoms().into_iter().zip(f) {
            forces[idx] += fa;
        }
        if let Some(l) = ledger.as_deref_mut() {
            l.bonded.push(d.atoms().to_vec());
        }
    }
    if out.degenerate > 0 {
        log::debug!("{} bonded term(s) evaluated with clamped derivatives", out.degenerate);
    }
    out
}
