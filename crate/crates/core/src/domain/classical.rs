use std::collections::HashMap;

use super::exchange::{exchange_ghost_positions, home_rank, map_ranks, route_forces_back, LocalView, RankForces};
use super::layout::{DomainLayout, HaloMode};
use super::transport::Transport;
use crate::error::{Error, Result};
use crate::forcefield::{evaluate_classical_typed, ClassicalParams};
use crate::neighbors::{find_pairs, ListMode};
use crate::pbc::Vec3;
use crate::state::{EnergyReport, State};
use crate::topology::{Angle, Bond, Dihedral, Topology};

#[derive(Debug, Clone)]
pub struct DecomposedForces {
    pub forces: Vec<Vec3>,
    pub report: EnergyReport,
    /// Non-bonded pairs evaluated on each rank.
    pub pairs_per_rank: Vec<usize>,
}

/// Where a bonded term is evaluated and where each of its atoms should sit.
struct Placement {
    home: usize,
    targets: Vec<Vec3>,
}

fn place(layout: &DomainLayout, wrapped: &[Vec3], atoms: &[usize]) -> Result<Placement> {
    let (home, corner) = home_rank(layout, wrapped, atoms)?;
    let x0 = wrapped[atoms[0]];
    let offsets: Vec<Vec3> = atoms.iter().map(|&a| layout.simbox.delta(&x0, &wrapped[a])).collect();
    let lo = offsets.iter().fold(Vec3::zeros(), |m, d| m.inf(d));
    Ok(Placement { home, targets: offsets.iter().map(|d| corner + (d - lo)).collect() })
}

/// Local copy of `global` closest to `target`.
fn local_copy(view: &LocalView, copies: &HashMap<usize, Vec<usize>>, global: usize, target: &Vec3) -> Result<usize> {
    let best = copies.get(&global).and_then(|c| {
        c.iter()
            .map(|&l| (view.simbox.delta(target, &view.positions[l]).norm(), l))
            .min_by(|a, b| a.0.total_cmp(&b.0))
    });
    match best {
        Some((dist, l)) if dist < 1e-6 => Ok(l),
        _ => Err(Error::Decomposition(format!("rank {} lacks a copy of atom {global} for a bonded term", view.rank))),
    }
}

fn rank_classical(
    layout: &DomainLayout,
    view: &LocalView,
    wrapped: &[Vec3],
    topo: &Topology,
    placements: &[(usize, Placement)],
    params: &ClassicalParams,
) -> Result<(Vec<Vec3>, EnergyReport, usize)> {
    let mut copies: HashMap<usize, Vec<usize>> = HashMap::new();
    for (l, &g) in view.globals.iter().enumerate() {
        copies.entry(g).or_default().push(l);
    }
    let mut pairs = Vec::new();
    for (u, v) in find_pairs(&view.positions, &view.simbox, params.rc, ListMode::Half, None)? {
        let (a, b) = (view.globals[u], view.globals[v]);
        if a == b || topo.is_excluded(a, b) {
            continue;
        }
        if home_rank(layout, wrapped, &[a.min(b), a.max(b)])?.0 == view.rank {
            pairs.push((u, v));
        }
    }
    let n_b = topo.bonds.len();
    let n_a = topo.angles.len();
    let (mut bonds, mut angles, mut dihedrals) = (Vec::new(), Vec::new(), Vec::new());
    for (idx, p) in placements.iter().filter(|(_, p)| p.home == view.rank) {
        let map = |k: usize, g: usize| local_copy(view, &copies, g, &p.targets[k]);
        if *idx < n_b {
            let b = &topo.bonds[*idx];
            bonds.push(Bond { i: map(0, b.i)?, j: map(1, b.j)?, ..*b });
        } else if *idx < n_b + n_a {
            let a = &topo.angles[idx - n_b];
            angles.push(Angle { i: map(0, a.i)?, j: map(1, a.j)?, k: map(2, a.k)?, ..*a });
        } else {
            let d = &topo.dihedrals[idx - n_b - n_a];
            dihedrals.push(Dihedral { i: map(0, d.i)?, j: map(1, d.j)?, k: map(2, d.k)?, l: map(3, d.l)?, ..*d });
        }
    }
    let types: Vec<usize> = view.globals.iter().map(|&g| topo.type_of[g]).collect();
    let charges: Vec<f64> = view.globals.iter().map(|&g| topo.charge[g]).collect();
    let mut forces = vec![Vec3::zeros(); view.len()];
    let report = evaluate_classical_typed(
        &view.positions,
        &view.simbox,
        &types,
        &charges,
        &bonds,
        &angles,
        &dihedrals,
        &pairs,
        params,
        &mut forces,
        None,
    )?;
    Ok((forces, report, pairs.len()))
}

/// Classical forces with the half-shell convention: each pair and bonded term
/// is evaluated once, on the rank holding the lower corner of its atoms, and
/// ghost forces are routed back to their owners.
pub fn classical_forces_decomposed(
    layout: &DomainLayout,
    state: &State,
    topo: &Topology,
    params: &ClassicalParams,
    workers: usize,
    transport: &mut Transport,
) -> Result<DecomposedForces> {
    if layout.halo_width < params.rc {
        return Err(Error::Decomposition(format!(
            "halo width {} nm is below the interaction cutoff {} nm",
            layout.halo_width, params.rc
        )));
    }
    let wrapped: Vec<Vec3> = state.positions.iter().map(|r| state.simbox.wrap(*r)).collect();
    let mut placements = Vec::with_capacity(topo.bonded_term_count());
    let terms = topo
        .bonds
        .iter()
        .map(|b| b.atoms().to_vec())
        .chain(topo.angles.iter().map(|a| a.atoms().to_vec()))
        .chain(topo.dihedrals.iter().map(|d| d.atoms().to_vec()));
    for (idx, atoms) in terms.enumerate() {
        placements.push((idx, place(layout, &wrapped, &atoms)?));
    }
    let views = exchange_ghost_positions(layout, state, HaloMode::Asymmetric, transport)?;
    let results = map_ranks(layout.n_ranks(), workers, |r| {
        rank_classical(layout, &views[r], &wrapped, topo, &placements, params)
    })?;
    let mut report = EnergyReport::default();
    let mut per_rank = Vec::with_capacity(results.len());
    let mut pairs_per_rank = Vec::with_capacity(results.len());
    for (view, (forces, rep, n_pairs)) in views.iter().zip(results) {
        report.bonded += rep.bonded;
        report.lj += rep.lj;
        report.coulomb += rep.coulomb;
        report.virial += rep.virial;
        per_rank.push(RankForces::from_view(view, &forces));
        pairs_per_rank.push(n_pairs);
    }
    report.sum_potential();
    let forces = route_forces_back(layout, &per_rank, state.n_atoms(), transport)?;
    Ok(DecomposedForces { forces, report, pairs_per_rank })
}
