use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Harmonic bond ½k(r − r0)².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bond {
    pub i: usize,
    pub j: usize,
    /// kJ·mol⁻¹·nm⁻²
    pub k: f64,
    pub r0: f64,
}

/// Harmonic angle ½k(θ − θ0)² with vertex `j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Angle {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    /// kJ·mol⁻¹·rad⁻²
    pub k_theta: f64,
    pub theta0: f64,
}

/// Periodic proper dihedral k(1 + cos(nφ − φs)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dihedral {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub l: usize,
    pub k_phi: f64,
    pub multiplicity: u32,
    pub phase: f64,
}

impl Bond {
    pub fn atoms(&self) -> [usize; 2] {
        [self.i, self.j]
    }
}

impl Angle {
    pub fn atoms(&self) -> [usize; 3] {
        [self.i, self.j, self.k]
    }
}

impl Dihedral {
    pub fn atoms(&self) -> [usize; 4] {
        [self.i, self.j, self.k, self.l]
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Topology {
    pub n_atoms: usize,
    pub type_of: Vec<usize>,
    pub mass: Vec<f64>,
    pub charge: Vec<f64>,
    pub bonds: Vec<Bond>,
    pub angles: Vec<Angle>,
    pub dihedrals: Vec<Dihedral>,
    /// Symmetric exclusion relation, one sorted set per atom.
    pub exclusions: Vec<BTreeSet<usize>>,
    /// Named, sorted, duplicate-free atom index sets.
    pub groups: BTreeMap<String, Vec<usize>>,
}

impl Topology {
    /// Topology of `n` unbonded atoms of type 0.
    pub fn uniform(n: usize, mass: f64) -> Self {
        Topology {
            n_atoms: n,
            type_of: vec![0; n],
            mass: vec![mass; n],
            charge: vec![0.0; n],
            exclusions: vec![BTreeSet::new(); n],
            ..Default::default()
        }
    }

    pub fn n_types(&self) -> usize {
        self.type_of.iter().max().map_or(0, |&t| t + 1)
    }

    pub fn is_excluded(&self, i: usize, j: usize) -> bool {
        self.exclusions[i].contains(&j)
    }

    /// Add `i`–`j` to the exclusion relation in both directions.
    /// Returns false when the pair was already excluded.
    pub fn exclude(&mut self, i: usize, j: usize) -> bool {
        let fresh = self.exclusions[i].insert(j);
        self.exclusions[j].insert(i);
        fresh
    }

    pub fn unexclude(&mut self, i: usize, j: usize) {
        self.exclusions[i].remove(&j);
        self.exclusions[j].remove(&i);
    }

    /// Insert or replace a group; the index list is sorted and deduplicated.
    pub fn set_group(&mut self, name: &str, mut atoms: Vec<usize>) {
        atoms.sort_unstable();
        atoms.dedup();
        self.groups.insert(name.to_string(), atoms);
    }

    pub fn group(&self, name: &str) -> Option<&[usize]> {
        self.groups.get(name).map(Vec::as_slice)
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn bonded_term_count(&self) -> usize {
        self.bonds.len() + self.angles.len() + self.dihedrals.len()
    }

    /// Exclude 1–2 and 1–3 neighbours along the bond graph.
    pub fn exclude_bonded_neighbours(&mut self) {
        let mut adjacent = vec![Vec::new(); self.n_atoms];
        for b in &self.bonds {
            adjacent[b.i].push(b.j);
            adjacent[b.j].push(b.i);
        }
        for i in 0..self.n_atoms {
            for &j in &adjacent[i].clone() {
                self.exclude(i, j);
                for &k in &adjacent[j] {
                    if k != i {
                        self.exclude(i, k);
                    }
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_atoms;
        let bad = |msg: String| Err(Error::Model(format!("invalid topology: {msg}")));
        if self.type_of.len() != n
            || self.mass.len() != n
            || self.charge.len() != n
            || self.exclusions.len() != n
        {
            return bad("per-atom arrays must have n_atoms entries".into());
        }
        if let Some(i) = self.mass.iter().position(|&m| !(m > 0.0)) {
            return bad(format!("atom {i} has non-positive mass"));
        }
        let check = |atoms: &[usize], what: &str| -> Result<()> {
            for (a, &x) in atoms.iter().enumerate() {
                if x >= n {
                    return bad(format!("{what} references atom {x} >= {n}"));
                }
                if atoms[..a].contains(&x) {
                    return bad(format!("{what} repeats atom {x}"));
                }
            }
            Ok(())
        };
        for b in &self.bonds {
            check(&b.atoms(), "bond")?;
        }
        for a in &self.angles {
            check(&a.atoms(), "angle")?;
        }
        for d in &self.dihedrals {
            check(&d.atoms(), "dihedral")?;
        }
        for (i, set) in self.exclusions.iter().enumerate() {
            for &j in set {
                if j >= n || j == i {
                    return bad(format!("exclusion {i}-{j} out of range"));
                }
                if !self.exclusions[j].contains(&i) {
                    return bad(format!("exclusion {i}-{j} is not symmetric"));
                }
            }
        }
        for (name, atoms) in &self.groups {
            if atoms.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!("group {name} is not sorted and unique"));
            }
            if atoms.last().is_some_and(|&a| a >= n) {
                return bad(format!("group {name} references a missing atom"));
            }
        }
        Ok(())
    }
}
