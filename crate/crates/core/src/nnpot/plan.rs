use crate::error::{Error, Result};
use crate::topology::{Angle, Bond, Dihedral, Topology};

/// What handing a group to the NN provider removed from the classical topology.
/// Removed terms keep their original index so the plan can be reverted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NnGroupPlan {
    pub group_name: String,
    pub group_atoms: Vec<usize>,
    pub removed_bonds: Vec<(usize, Bond)>,
    pub removed_angles: Vec<(usize, Angle)>,
    pub removed_dihedrals: Vec<(usize, Dihedral)>,
    /// In-group pairs that were not excluded before, i < j.
    pub added_exclusions: Vec<(usize, usize)>,
}

impl NnGroupPlan {
    pub fn is_empty(&self) -> bool {
        self.group_atoms.is_empty()
    }

    pub fn removed_term_count(&self) -> usize {
        self.removed_bonds.len() + self.removed_angles.len() + self.removed_dihedrals.len()
    }

    /// Undo the preprocessing on a topology produced by it.
    pub fn revert(&self, topo: &Topology) -> Topology {
        let mut out = topo.clone();
        fn reinsert<T: Clone>(list: &mut Vec<T>, removed: &[(usize, T)]) {
            for (idx, term) in removed {
                list.insert(*idx, term.clone());
            }
        }
        reinsert(&mut out.bonds, &self.removed_bonds);
        reinsert(&mut out.angles, &self.removed_angles);
        reinsert(&mut out.dihedrals, &self.removed_dihedrals);
        for &(i, j) in &self.added_exclusions {
            out.unexclude(i, j);
        }
        out
    }
}

fn split_terms<T: Clone, const N: usize>(
    terms: &[T],
    atoms: impl Fn(&T) -> [usize; N],
    inside: &[bool],
) -> (Vec<T>, Vec<(usize, T)>) {
    let mut kept = Vec::new();
    let mut removed = Vec::new();
    for (idx, t) in terms.iter().enumerate() {
        if atoms(t).iter().all(|&a| inside[a]) {
            removed.push((idx, t.clone()));
        } else {
            kept.push(t.clone());
        }
    }
    (kept, removed)
}

/// Remove every bonded term lying entirely inside `group_name` and exclude all
/// in-group pairs, so that the group interacts internally only through the
/// NN provider. Cross-group terms and pairs are left alone.
pub fn plan_group_preprocessing(topo: &Topology, group_name: &str) -> Result<(Topology, NnGroupPlan)> {
    let group = topo
        .group(group_name)
        .ok_or_else(|| Error::config("nn.group", format!("topology has no group named {group_name:?}")))?;
    let mut plan = NnGroupPlan { group_name: group_name.to_string(), group_atoms: group.to_vec(), ..Default::default() };
    if group.is_empty() {
        log::warn!("group {group_name:?} is empty; NN preprocessing is a no-op");
        return Ok((topo.clone(), plan));
    }
    let mut inside = vec![false; topo.n_atoms];
    for &a in group {
        inside[a] = true;
    }
    let mut out = topo.clone();
    (out.bonds, plan.removed_bonds) = split_terms(&topo.bonds, Bond::atoms, &inside);
    (out.angles, plan.removed_angles) = split_terms(&topo.angles, Angle::atoms, &inside);
    (out.dihedrals, plan.removed_dihedrals) = split_terms(&topo.dihedrals, Dihedral::atoms, &inside);
    for (n, &i) in group.iter().enumerate() {
        for &j in &group[n + 1..] {
            if out.exclude(i, j) {
                plan.added_exclusions.push((i.min(j), i.max(j)));
            }
        }
    }
    plan.added_exclusions.sort_unstable();
    Ok((out, plan))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize) -> Topology {
        let mut t = Topology::uniform(n, 1.0);
        for i in 0..n - 1 {
            t.bonds.push(Bond { i, j: i + 1, k: 1000.0, r0: 0.15 });
        }
        for i in 0..n - 2 {
            t.angles.push(Angle { i, j: i + 1, k: i + 2, k_theta: 100.0, theta0: 2.0 });
        }
        t
    }

    #[test]
    fn chain_prefix_group() {
        let mut t = chain(10);
        t.set_group("protein", (0..5).collect());
        let (out, plan) = plan_group_preprocessing(&t, "protein").unwrap();
        let removed: Vec<_> = plan.removed_bonds.iter().map(|(_, b)| (b.i, b.j)).collect();
        assert_eq!(removed, vec![(0, 1), (1, 2), (2, 3), (3, 4)]);
        assert!(out.bonds.iter().any(|b| (b.i, b.j) == (4, 5)));
        assert_eq!(out.bonds.len(), 5);
        assert_eq!(plan.added_exclusions.len(), 10);
        assert_eq!(plan.removed_angles.len(), 3);
        for (i, j) in [(0, 4), (1, 3), (4, 0)] {
            assert!(out.is_excluded(i, j));
        }
        assert!(!out.is_excluded(4, 5));
        assert_eq!(plan.revert(&out), t);
    }

    #[test]
    fn whole_system_group() {
        let mut t = chain(6);
        t.set_group("all", (0..6).collect());
        let (out, plan) = plan_group_preprocessing(&t, "all").unwrap();
        assert_eq!(out.bonded_term_count(), 0);
        assert_eq!(plan.added_exclusions.len(), 15);
        for i in 0..6 {
            assert_eq!(out.exclusions[i].len(), 5);
        }
    }

    #[test]
    fn empty_group_is_identity() {
        let mut t = chain(6);
        t.set_group("none", vec![]);
        let (out, plan) = plan_group_preprocessing(&t, "none").unwrap();
        assert_eq!(out, t);
        assert!(plan.is_empty());
    }

    #[test]
    fn existing_exclusions_are_not_recorded_twice() {
        let mut t = chain(6);
        t.exclude_bonded_neighbours();
        t.set_group("g", vec![0, 1, 2]);
        let (_, plan) = plan_group_preprocessing(&t, "g").unwrap();
        assert!(plan.added_exclusions.is_empty(), "{:?}", plan.added_exclusions);
    }

    #[test]
    fn unknown_group_errors() {
        assert!(plan_group_preprocessing(&chain(4), "missing").is_err());
    }
}
