use super::infer::{evaluate, NnCounters, NnInput};
use super::model::NnModel;
use super::plan::NnGroupPlan;
use crate::error::Result;
use crate::state::State;
use crate::topology::Topology;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NnEvaluation {
    pub energy: f64,
    pub virial: f64,
    pub counters: NnCounters,
}

/// Group atoms (in plan order) as a complete model input.
pub fn group_input(state: &State, topo: &Topology, plan: &NnGroupPlan, model: &NnModel) -> Result<NnInput> {
    let positions = plan.group_atoms.iter().map(|&a| state.simbox.wrap(state.positions[a])).collect();
    let types = plan.group_atoms.iter().map(|&a| topo.type_of[a]).collect();
    NnInput::new(positions, types, state.simbox, model.rc_model)
}

/// Evaluate the model on the group and add its forces into `state.forces`.
/// Forces on non-group atoms are not touched.
pub fn nn_force_provider(state: &mut State, topo: &Topology, plan: &NnGroupPlan, model: &NnModel) -> Result<NnEvaluation> {
    if plan.is_empty() {
        return Ok(NnEvaluation::default());
    }
    let input = group_input(state, topo, plan, model)?;
    let out = evaluate(&input, model)?;
    for (&a, f) in plan.group_atoms.iter().zip(&out.forces) {
        state.forces[a] += f;
    }
    Ok(NnEvaluation { energy: out.energy, virial: out.virial, counters: out.counters })
}
