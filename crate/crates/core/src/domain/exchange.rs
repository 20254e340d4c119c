use std::collections::{BTreeMap, HashSet};

use super::layout::{DomainLayout, Ghost, HaloMode};
use super::transport::{MessageKind, RankMessage, Transport};
use crate::error::{Error, Result};
use crate::pbc::{SimBox, Vec3};
use crate::state::State;

/// What one rank sees: its owned atoms followed by its ghosts.
#[derive(Debug, Clone)]
pub struct LocalView {
    pub rank: usize,
    pub globals: Vec<usize>,
    pub n_owned: usize,
    pub positions: Vec<Vec3>,
    pub simbox: SimBox,
    /// Provenance of `positions[n_owned..]`.
    pub ghosts: Vec<Ghost>,
}

impl LocalView {
    pub fn len(&self) -> usize {
        self.globals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.globals.is_empty()
    }

    pub fn is_owned(&self, local: usize) -> bool {
        local < self.n_owned
    }
}

/// Ship ghost positions and assemble every rank's local view.
pub fn exchange_ghost_positions(
    layout: &DomainLayout,
    state: &State,
    mode: HaloMode,
    transport: &mut Transport,
) -> Result<Vec<LocalView>> {
    exchange_filtered(layout, state, mode, None, transport)
}

/// As [`exchange_ghost_positions`], restricted to atoms with `include[a]`.
pub(crate) fn exchange_filtered(
    layout: &DomainLayout,
    state: &State,
    mode: HaloMode,
    include: Option<&[bool]>,
    transport: &mut Transport,
) -> Result<Vec<LocalView>> {
    let n_ranks = layout.n_ranks();
    let keep = |a: usize| include.is_none_or(|m| m[a]);
    let wrapped = |a: usize| layout.simbox.wrap(state.positions[a]);
    let selected: Vec<Vec<Ghost>> = layout
        .ghosts
        .iter()
        .map(|gs| gs.iter().filter(|g| (mode == HaloMode::Symmetric || g.upper) && keep(g.global)).copied().collect())
        .collect();
    for (dst, gs) in selected.iter().enumerate() {
        let mut by_src: BTreeMap<usize, Vec<(usize, Vec3)>> = BTreeMap::new();
        for g in gs {
            by_src.entry(g.source).or_default().push((g.global, layout.image_position(&wrapped(g.global), g.shift)));
        }
        for (src, payload) in by_src {
            transport.send(RankMessage { kind: MessageKind::GhostPositions, src, dst, payload })?;
        }
    }
    let local_box = layout.local_box();
    let mut views = Vec::with_capacity(n_ranks);
    for (rank, gs) in selected.into_iter().enumerate() {
        let owned: Vec<usize> = layout.owned[rank].iter().copied().filter(|&a| keep(a)).collect();
        let mut globals = owned.clone();
        let mut positions: Vec<Vec3> = owned.iter().map(|&a| wrapped(a)).collect();
        let received: Vec<(usize, Vec3)> = transport.receive(rank).into_iter().flat_map(|m| m.payload).collect();
        if received.len() != gs.len() {
            return Err(Error::Routing(format!("rank {rank} expected {} ghosts, received {}", gs.len(), received.len())));
        }
        for ((global, pos), g) in received.into_iter().zip(&gs) {
            if global != g.global {
                return Err(Error::Routing(format!("rank {rank} received atom {global} where {} was expected", g.global)));
            }
            globals.push(global);
            positions.push(pos);
        }
        views.push(LocalView { rank, globals, n_owned: owned.len(), positions, simbox: local_box, ghosts: gs });
    }
    transport.finish_round()?;
    Ok(views)
}

/// Forces computed on one rank, split into owned and ghost contributions.
#[derive(Debug, Clone, Default)]
pub struct RankForces {
    pub rank: usize,
    /// (global index, force) for owned atoms.
    pub owned: Vec<(usize, Vec3)>,
    /// (ghost provenance, force) for ghost copies.
    pub ghosts: Vec<(Ghost, Vec3)>,
}

impl RankForces {
    pub fn from_view(view: &LocalView, forces: &[Vec3]) -> Self {
        RankForces {
            rank: view.rank,
            owned: view.globals[..view.n_owned].iter().copied().zip(forces[..view.n_owned].iter().copied()).collect(),
            ghosts: view.ghosts.iter().copied().zip(forces[view.n_owned..].iter().copied()).collect(),
        }
    }
}

/// Return ghost forces to their owners and assemble the global force array.
/// Each atom gets its owner's contribution first, then ghost contributions in
/// ascending order of the rank that computed them.
pub fn route_forces_back(
    layout: &DomainLayout,
    per_rank: &[RankForces],
    n_atoms: usize,
    transport: &mut Transport,
) -> Result<Vec<Vec3>> {
    let known: Vec<HashSet<(usize, usize, [i32; 3])>> = layout
        .ghosts
        .iter()
        .map(|gs| gs.iter().map(|g| (g.global, g.source, g.shift)).collect())
        .collect();
    for rf in per_rank {
        let mut by_dst: BTreeMap<usize, Vec<(usize, Vec3)>> = BTreeMap::new();
        for (g, f) in &rf.ghosts {
            let valid = rf.rank < known.len()
                && known[rf.rank].contains(&(g.global, g.source, g.shift))
                && layout.owner.get(g.global) == Some(&g.source);
            if !valid {
                return Err(Error::Routing(format!(
                    "rank {} holds ghost of atom {} with unknown provenance (source {})",
                    rf.rank, g.global, g.source
                )));
            }
            by_dst.entry(g.source).or_default().push((g.global, *f));
        }
        for (dst, payload) in by_dst {
            transport.send(RankMessage { kind: MessageKind::GhostForces, src: rf.rank, dst, payload })?;
        }
    }
    let mut forces = vec![Vec3::zeros(); n_atoms];
    for rf in per_rank {
        for &(a, f) in &rf.owned {
            if layout.owner.get(a) != Some(&rf.rank) {
                return Err(Error::Routing(format!("rank {} reported a force on atom {a} it does not own", rf.rank)));
            }
            forces[a] += f;
        }
    }
    for rank in 0..layout.n_ranks() {
        for msg in transport.receive(rank) {
            for (a, f) in msg.payload {
                forces[a] += f;
            }
        }
    }
    transport.finish_round()?;
    Ok(forces)
}

/// Rank responsible for a bonded term or pair: the one whose region holds the
/// lower corner of the atoms' bounding box (minimum image around the first
/// atom). Errors when the term spans more than the halo along a divided axis.
pub fn home_rank(layout: &DomainLayout, wrapped: &[Vec3], atoms: &[usize]) -> Result<(usize, Vec3)> {
    let x0 = wrapped[atoms[0]];
    let mut lo = Vec3::zeros();
    let mut hi = Vec3::zeros();
    for &a in &atoms[1..] {
        let d = layout.simbox.delta(&x0, &wrapped[a]);
        lo = lo.inf(&d);
        hi = hi.sup(&d);
    }
    for d in (0..3).filter(|&d| layout.grid.is_divided(d)) {
        if hi[d] - lo[d] > layout.halo_width {
            return Err(Error::Decomposition(format!(
                "term {atoms:?} spans {:.4} nm along axis {d}, beyond the {} nm halo",
                hi[d] - lo[d],
                layout.halo_width
            )));
        }
    }
    let corner = layout.simbox.wrap(x0 + lo);
    Ok((layout.rank_of_point(&corner), corner))
}

/// Run `f` for every rank, on a worker pool when `workers > 1`; results come
/// back in rank order either way.
pub(crate) fn map_ranks<T, F>(n_ranks: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    if workers <= 1 || n_ranks <= 1 {
        return (0..n_ranks).map(f).collect();
    }
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Decomposition(format!("cannot start {workers} workers: {e}")))?;
    pool.install(|| (0..n_ranks).into_par_iter().map(f).collect())
}
