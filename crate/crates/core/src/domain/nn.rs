use std::time::Instant;

use super::exchange::{exchange_filtered, map_ranks, route_forces_back, RankForces};
use super::layout::{DomainLayout, HaloMode};
use super::transport::{MessageKind, RankMessage, Transport};
use crate::error::{Error, Result};
use crate::nnpot::{evaluate, NnCounters, NnGroupPlan, NnInput, NnModel};
use crate::pbc::Vec3;
use crate::state::State;
use crate::topology::Topology;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NnStrategy {
    /// Collect the whole group on rank 0 and run one inference there.
    #[default]
    GatherToRoot,
    /// Each rank infers its own group atoms from an L·rc deep symmetric halo.
    HaloInference,
}

impl NnStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            NnStrategy::GatherToRoot => "gather_to_root",
            NnStrategy::HaloInference => "halo_inference",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "gather_to_root" => Some(NnStrategy::GatherToRoot),
            "halo_inference" => Some(NnStrategy::HaloInference),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NnDdOptions {
    pub strategy: NnStrategy,
    pub mode: HaloMode,
    /// Refuse halo inference when the halo is shallower than the receptive
    /// field. Only negative-control experiments turn this off.
    pub check_receptive_field: bool,
    pub workers: usize,
}

impl Default for NnDdOptions {
    fn default() -> Self {
        NnDdOptions {
            strategy: NnStrategy::GatherToRoot,
            mode: HaloMode::Symmetric,
            check_receptive_field: true,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NnDecomposed {
    /// NN forces on every atom of the system (zero outside the group).
    pub forces: Vec<Vec3>,
    pub energy: f64,
    pub virial: f64,
    pub counters: NnCounters,
    /// Wall time spent gathering, scattering or exchanging halos, s.
    pub comm_seconds: f64,
}

const ROOT: usize = 0;

fn gather_to_root(
    layout: &DomainLayout,
    state: &State,
    topo: &Topology,
    plan: &NnGroupPlan,
    model: &NnModel,
    in_group: &[bool],
    transport: &mut Transport,
) -> Result<NnDecomposed> {
    let clock = Instant::now();
    let wrapped = |a: usize| state.simbox.wrap(state.positions[a]);
    let mut gathered: Vec<(usize, Vec3)> = Vec::with_capacity(plan.group_atoms.len());
    for (rank, owned) in layout.owned.iter().enumerate() {
        let payload: Vec<(usize, Vec3)> = owned.iter().filter(|&&a| in_group[a]).map(|&a| (a, wrapped(a))).collect();
        if rank == ROOT {
            gathered.extend(payload);
        } else {
            transport.send(RankMessage { kind: MessageKind::GatherGroup, src: rank, dst: ROOT, payload })?;
        }
    }
    for msg in transport.receive(ROOT) {
        gathered.extend(msg.payload);
    }
    transport.finish_round()?;
    gathered.sort_by_key(|&(a, _)| a);
    let atoms: Vec<usize> = gathered.iter().map(|&(a, _)| a).collect();
    if atoms != plan.group_atoms {
        return Err(Error::Routing(format!("root gathered {} of {} group atoms", atoms.len(), plan.group_atoms.len())));
    }
    let types = atoms.iter().map(|&a| topo.type_of[a]).collect();
    let mut comm_seconds = clock.elapsed().as_secs_f64();
    let input = NnInput::new(gathered.into_iter().map(|(_, p)| p).collect(), types, state.simbox, model.rc_model)?;
    let out = evaluate(&input, model)?;

    let clock = Instant::now();
    let mut forces = vec![Vec3::zeros(); state.n_atoms()];
    let mut outgoing: Vec<Vec<(usize, Vec3)>> = vec![Vec::new(); layout.n_ranks()];
    for (&a, f) in atoms.iter().zip(&out.forces) {
        outgoing[layout.owner[a]].push((a, *f));
    }
    for (rank, payload) in outgoing.into_iter().enumerate() {
        if rank == ROOT {
            payload.into_iter().for_each(|(a, f)| forces[a] += f);
        } else {
            transport.send(RankMessage { kind: MessageKind::ScatterForces, src: ROOT, dst: rank, payload })?;
        }
    }
    for rank in 0..layout.n_ranks() {
        for msg in transport.receive(rank) {
            msg.payload.into_iter().for_each(|(a, f)| forces[a] += f);
        }
    }
    transport.finish_round()?;
    comm_seconds += clock.elapsed().as_secs_f64();
    Ok(NnDecomposed { forces, energy: out.energy, virial: out.virial, counters: out.counters, comm_seconds })
}

#[allow(clippy::too_many_arguments)]
fn halo_inference(
    layout: &DomainLayout,
    state: &State,
    topo: &Topology,
    model: &NnModel,
    in_group: &[bool],
    opts: &NnDdOptions,
    transport: &mut Transport,
) -> Result<NnDecomposed> {
    if opts.mode != HaloMode::Symmetric {
        return Err(Error::HaloTopology(
            "halo inference needs symmetric ghosts: with the asymmetric half-shell only one side of each \
             boundary sees the other, so boundary atoms have incomplete neighbourhoods"
                .into(),
        ));
    }
    let required = model.receptive_field();
    if opts.check_receptive_field && layout.halo_width < required * (1.0 - 1e-12) {
        return Err(Error::ReceptiveField { halo: layout.halo_width, required });
    }
    if layout.halo_width < model.rc_model {
        return Err(Error::ReceptiveField { halo: layout.halo_width, required: model.rc_model });
    }
    let clock = Instant::now();
    let views = exchange_filtered(layout, state, HaloMode::Symmetric, Some(in_group), transport)?;
    let mut comm_seconds = clock.elapsed().as_secs_f64();
    let ghost_radius = opts.check_receptive_field.then_some(layout.halo_width);
    let outputs = map_ranks(layout.n_ranks(), opts.workers, |r| {
        let view = &views[r];
        if view.n_owned == 0 {
            return Ok(None);
        }
        let owned = (0..view.len()).map(|l| view.is_owned(l)).collect();
        let types = view.globals.iter().map(|&g| topo.type_of[g]).collect();
        let input =
            NnInput::with_ghosts(view.positions.clone(), types, view.simbox, owned, ghost_radius, model.rc_model)?;
        evaluate(&input, model).map(Some)
    })?;
    let mut energy = 0.0;
    let mut virial = 0.0;
    let mut counters = NnCounters::default();
    let mut per_rank = Vec::with_capacity(outputs.len());
    for (view, out) in views.iter().zip(outputs) {
        if let Some(out) = out {
            energy += out.energy;
            virial += out.virial;
            counters.add(&out.counters);
            per_rank.push(RankForces::from_view(view, &out.forces));
        }
    }
    let clock = Instant::now();
    let forces = route_forces_back(layout, &per_rank, state.n_atoms(), transport)?;
    comm_seconds += clock.elapsed().as_secs_f64();
    Ok(NnDecomposed { forces, energy, virial, counters, comm_seconds })
}

/// NN forces on the preprocessed group under domain decomposition.
pub fn nn_inference_decomposed(
    layout: &DomainLayout,
    state: &State,
    topo: &Topology,
    plan: &NnGroupPlan,
    model: &NnModel,
    opts: &NnDdOptions,
    transport: &mut Transport,
) -> Result<NnDecomposed> {
    let mut in_group = vec![false; state.n_atoms()];
    for &a in &plan.group_atoms {
        in_group[a] = true;
    }
    match opts.strategy {
        NnStrategy::GatherToRoot => gather_to_root(layout, state, topo, plan, model, &in_group, transport),
        NnStrategy::HaloInference => halo_inference(layout, state, topo, model, &in_group, opts, transport),
    }
}
