use std::path::Path;
use std::time::Instant;

use super::config::{DynamicsSection, RunConfig, Stage};
use super::metrics::{Phase, RunMetrics, StageMetrics};
use crate::domain::{decompose_on, nn_inference_decomposed, NnDdOptions, NnStrategy, RankGrid, Transport};
use crate::dynamics::{
    berendsen_barostat, berendsen_thermostat, leapfrog_step, pressure_bar, steepest_descent_minimize,
    velocity_verlet_step, EmTrace, Scheme,
};
use crate::error::{Error, Result};
use crate::forcefield::{compute_classical, ClassicalParams, LjParams};
use crate::gro::{write_gro, GroAtom};
use crate::neighbors::{build_neighbor_list, needs_rebuild, ListMode, NeighborList};
use crate::nnpot::{nn_force_provider, plan_group_preprocessing, NnGroupPlan, NnModel};
use crate::pbc::{SimBox, Vec3};
use crate::state::{kinetic_energy_and_temperature, EnergyReport, Precision, State};
use crate::synthetic::{generate_synthetic_system, SyntheticSystem};
use crate::topology::Topology;

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryFrame {
    pub stage: Stage,
    pub step: u64,
    /// ps
    pub time: f64,
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
    pub simbox: SimBox,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub stage: Stage,
    pub step: u64,
    /// ps
    pub time: f64,
    pub report: EnergyReport,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub state: State,
    pub metrics: RunMetrics,
    pub trajectory: Vec<TrajectoryFrame>,
    pub log: Vec<LogRow>,
    /// State at the end of every stage that ran.
    pub stage_states: Vec<(Stage, State)>,
    /// `None` when em was skipped or stalled.
    pub em_trace: Option<EmTrace>,
    /// Group preprocessing applied before the first NN stage.
    pub plan: Option<NnGroupPlan>,
}

impl PipelineOutput {
    pub fn state_after(&self, stage: Stage) -> Option<&State> {
        self.stage_states.iter().find(|(s, _)| *s == stage).map(|(_, st)| st)
    }
}

/// Synthetic system described by the `[system]`, `[forcefield]` and `[run]` sections.
pub fn build_system(config: &RunConfig) -> Result<SyntheticSystem> {
    generate_synthetic_system(&config.synthetic_params())
}

/// Model named in the config, or a random one built from the `[nn]` keys.
/// `None` when no stage uses the NN provider.
pub fn resolve_model(config: &RunConfig, n_types: usize) -> Result<Option<NnModel>> {
    if !config.nn.enabled() {
        return Ok(None);
    }
    let model = match &config.nn.model {
        Some(path) => NnModel::load(Path::new(path))?,
        None => NnModel::new(&config.nn.model_spec(n_types))?,
    };
    if model.n_types < n_types {
        return Err(Error::Model(format!("model knows {} atom types, system has {n_types}", model.n_types)));
    }
    Ok(Some(model))
}

struct NnContext<'a> {
    plan: &'a NnGroupPlan,
    model: &'a NnModel,
    config: &'a RunConfig,
}

struct ForceEngine<'a> {
    topo: &'a Topology,
    params: ClassicalParams,
    skin: f64,
    precision: Precision,
    nlist: Option<NeighborList>,
    nn: Option<NnContext<'a>>,
}

impl ForceEngine<'_> {
    fn evaluate(&mut self, state: &mut State, sm: &mut StageMetrics, rm: &mut RunMetrics) -> Result<EnergyReport> {
        self.precision.quantize(&mut state.positions);
        let mut t = Instant::now();
        let stale = match &self.nlist {
            Some(nl) => needs_rebuild(nl, state),
            None => true,
        };
        if stale {
            self.nlist = Some(build_neighbor_list(state, self.topo, self.params.rc, self.skin, ListMode::Half)?);
            t = sm.phases.lap(Phase::NeighborBuild, t);
        }
        let nlist = self.nlist.as_ref().expect("neighbour list built above");
        let mut report = compute_classical(state, self.topo, nlist, &self.params, None)?;
        t = sm.phases.lap(Phase::Classical, t);
        sm.force_evaluations += 1;

        if let Some(nn) = &self.nn {
            let cfg = &nn.config.nn;
            let (energy, virial) = if cfg.n_ranks == 1 {
                let ev = nn_force_provider(state, self.topo, nn.plan, nn.model)?;
                sm.phases.lap(Phase::NnInference, t);
                rm.record_nn(&ev.counters);
                (ev.energy, ev.virial)
            } else {
                let grid = RankGrid::new(cfg.n_ranks, cfg.grid)?;
                let layout = decompose_on(state, grid, cfg.halo_width)?;
                t = sm.phases.lap(Phase::HaloExchange, t);
                let opts = NnDdOptions {
                    strategy: cfg.strategy,
                    mode: cfg.halo_mode,
                    workers: nn.config.run.workers,
                    ..NnDdOptions::default()
                };
                let mut transport = Transport::new(cfg.n_ranks);
                let out = nn_inference_decomposed(&layout, state, self.topo, nn.plan, nn.model, &opts, &mut transport)?;
                let total = t.elapsed().as_secs_f64();
                let comm_phase = match cfg.strategy {
                    NnStrategy::GatherToRoot => Phase::GatherScatter,
                    NnStrategy::HaloInference => Phase::HaloExchange,
                };
                sm.phases.add(comm_phase, out.comm_seconds);
                sm.phases.add(Phase::NnInference, (total - out.comm_seconds).max(0.0));
                for (f, g) in state.forces.iter_mut().zip(&out.forces) {
                    *f += g;
                }
                rm.record_nn(&out.counters);
                rm.record_messages(&transport);
                (out.energy, out.virial)
            };
            sm.nn_evaluations += 1;
            report.nn = energy;
            report.virial += virial;
            report.sum_potential();
        }
        self.precision.quantize(&mut state.forces);
        Ok(report)
    }
}

fn blowup(stage: Stage, step: u64, e: Error) -> Error {
    match e {
        Error::Config { .. } | Error::Blowup { .. } => e,
        Error::Overlap { .. } | Error::Integration { .. } => {
            Error::Blowup { stage: stage.as_str().into(), step, msg: e.to_string() }
        }
        other => other,
    }
}

fn check_finite(stage: Stage, step: u64, r: &EnergyReport) -> Result<()> {
    if r.total_energy().is_finite() && r.pressure.is_finite() {
        Ok(())
    } else {
        Err(Error::Blowup {
            stage: stage.as_str().into(),
            step,
            msg: format!("non-finite energy (potential {}, kinetic {})", r.total_potential, r.kinetic),
        })
    }
}

fn attach_kinetics(state: &State, topo: &Topology, r: &mut EnergyReport) -> Result<()> {
    let (ke, temp) = kinetic_energy_and_temperature(state, topo)?;
    r.kinetic = ke;
    r.temperature = temp;
    r.pressure = pressure_bar(ke, r.virial, state.simbox.volume());
    Ok(())
}

struct Recorder<'a> {
    out: &'a mut PipelineOutput,
}

impl Recorder<'_> {
    fn record(&mut self, stage: Stage, step: u64, d: &DynamicsSection, state: &State, report: &EnergyReport, last: bool) {
        if d.nstlog > 0 && (step % d.nstlog as u64 == 0 || last) {
            self.out.log.push(LogRow { stage, step, time: state.time, report: *report });
        }
        if d.nstxout > 0 && (step % d.nstxout as u64 == 0 || last) {
            self.out.trajectory.push(TrajectoryFrame {
                stage,
                step,
                time: state.time,
                positions: state.positions.clone(),
                velocities: state.velocities.clone(),
                simbox: state.simbox,
            });
        }
    }
}

fn run_em(
    config: &RunConfig,
    engine: &mut ForceEngine,
    state: &mut State,
    sm: &mut StageMetrics,
    rm: &mut RunMetrics,
) -> Result<Option<EmTrace>> {
    let mut iterations = 0u64;
    let result = steepest_descent_minimize(state, &config.em_config(), |s| {
        iterations += 1;
        Ok(engine.evaluate(s, sm, rm)?.total_potential)
    });
    sm.steps = iterations.saturating_sub(1);
    match result {
        Ok(trace) => {
            if !trace.final_energy.is_finite() {
                return Err(Error::Blowup { stage: "em".into(), step: sm.steps, msg: "non-finite energy".into() });
            }
            if !trace.converged {
                log::warn!(
                    "em stopped after {} steps with max force {:.3} above emtol {}",
                    config.em.max_steps,
                    trace.final_max_force,
                    config.em.emtol
                );
            }
            Ok(Some(trace))
        }
        Err(Error::Stall { step }) => {
            log::warn!("em line search stalled (step {step:.3e} nm); continuing from the lowest-energy configuration");
            Ok(None)
        }
        Err(e) => Err(blowup(Stage::Em, sm.steps, e)),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_dynamics(
    stage: Stage,
    d: &DynamicsSection,
    topo: &Topology,
    engine: &mut ForceEngine,
    state: &mut State,
    sm: &mut StageMetrics,
    rm: &mut RunMetrics,
    rec: &mut Recorder,
) -> Result<()> {
    let dt = d.dt * crate::units::PS_PER_FS;
    let masses = topo.mass.clone();
    let mut report = engine.evaluate(state, sm, rm).map_err(|e| blowup(stage, 0, e))?;
    attach_kinetics(state, topo, &mut report)?;
    check_finite(stage, 0, &report)?;
    let t = Instant::now();
    rec.record(stage, 0, d, state, &report, d.steps == 0);
    sm.phases.lap(Phase::Io, t);

    for step in 1..=d.steps as u64 {
        let mut t = Instant::now();
        if d.tcoupl {
            berendsen_thermostat(&mut state.velocities, report.temperature, d.ref_t, d.tau_t, dt);
        }
        match d.integrator {
            Scheme::Leapfrog => {
                leapfrog_step(state, &masses, dt).map_err(|e| blowup(stage, step, e))?;
                if d.pcoupl {
                    berendsen_barostat(state, report.pressure, d.ref_p, d.tau_p, dt, d.compressibility);
                }
                sm.phases.lap(Phase::Integration, t);
                report = engine.evaluate(state, sm, rm).map_err(|e| blowup(stage, step, e))?;
                t = Instant::now();
            }
            Scheme::VelocityVerlet => {
                let before = sm.phases;
                report = velocity_verlet_step(state, &masses, dt, |s| engine.evaluate(s, sm, rm))
                    .map_err(|e| blowup(stage, step, e))?;
                let in_forces = sm.phases.total() - before.total();
                sm.phases.add(Phase::Integration, (t.elapsed().as_secs_f64() - in_forces).max(0.0));
                t = Instant::now();
            }
            Scheme::Steep => unreachable!("rejected by config validation"),
        }
        attach_kinetics(state, topo, &mut report)?;
        check_finite(stage, step, &report)?;
        t = sm.phases.lap(Phase::Integration, t);
        rec.record(stage, step, d, state, &report, step == d.steps as u64);
        sm.phases.lap(Phase::Io, t);
    }
    sm.steps = d.steps as u64;
    sm.simulated_ps = d.simulated_time();
    Ok(())
}

/// Run EM → NVT → NPT → MD on `system`, loading or building the NN model
/// from the config.
pub fn run_pipeline(config: &RunConfig, system: &SyntheticSystem) -> Result<PipelineOutput> {
    let model = resolve_model(config, system.topology.n_types())?;
    run_pipeline_with_model(config, system, model.as_ref())
}

/// Run the staged pipeline with an explicit NN model (required when any
/// stage enables the NN provider).
pub fn run_pipeline_with_model(
    config: &RunConfig,
    system: &SyntheticSystem,
    model: Option<&NnModel>,
) -> Result<PipelineOutput> {
    config.validate()?;
    let lj = LjParams::from_per_type(&system.lj_types())?;
    let base = ClassicalParams::new(config.em.rcutoff, lj, config.forcefield.coulomb, config.forcefield.epsilon_rf)?;
    let mut state = system.state.clone();
    let mut out = PipelineOutput {
        state: state.clone(),
        metrics: RunMetrics::default(),
        trajectory: Vec::new(),
        log: Vec::new(),
        stage_states: Vec::new(),
        em_trace: None,
        plan: None,
    };
    let mut metrics = RunMetrics::default();
    let mut hybrid: Option<(Topology, NnGroupPlan)> = None;

    for stage in Stage::ALL {
        let uses_nn = config.nn.stages.contains(&stage);
        let steps = match config.dynamics(stage) {
            Some(d) => d.steps,
            None => config.em.max_steps,
        };
        if steps == 0 {
            continue;
        }
        if uses_nn && hybrid.is_none() {
            hybrid = Some(plan_group_preprocessing(&system.topology, &config.nn.group)?);
        }
        let (topo, nn) = match (&hybrid, uses_nn) {
            (Some((topo, plan)), true) => {
                let model = model.ok_or_else(|| Error::config("nn.model", "stage needs a model but none was given"))?;
                (topo, Some(NnContext { plan, model, config }))
            }
            _ => (&system.topology, None),
        };
        let rc = config.dynamics(stage).map_or(config.em.rcutoff, |d| d.rcutoff);
        let mut engine = ForceEngine {
            topo,
            params: base.with_cutoff(rc),
            skin: config.forcefield.skin,
            precision: config.run.precision,
            nlist: None,
            nn,
        };
        let mut sm = StageMetrics::new(stage);
        let wall = Instant::now();
        match config.dynamics(stage) {
            None => out.em_trace = run_em(config, &mut engine, &mut state, &mut sm, &mut metrics)?,
            Some(d) => {
                let mut rec = Recorder { out: &mut out };
                run_dynamics(stage, d, topo, &mut engine, &mut state, &mut sm, &mut metrics, &mut rec)?;
            }
        }
        sm.wall_seconds = wall.elapsed().as_secs_f64();
        log::info!(
            "{} finished: {} steps in {:.3} s ({:.3} ns/day)",
            stage.as_str(),
            sm.steps,
            sm.wall_seconds,
            sm.ns_per_day()
        );
        metrics.stages.push(sm);
        out.stage_states.push((stage, state.clone()));
    }
    out.plan = hybrid.map(|(_, plan)| plan);
    out.state = state;
    out.metrics = metrics;
    Ok(out)
}

/// Energy log as CSV.
pub fn log_csv(rows: &[LogRow]) -> String {
    let mut out = format!("stage,step,time_ps,{}\n", EnergyReport::CSV_HEADER);
    for r in rows {
        out.push_str(&format!("{},{},{:.6},{}\n", r.stage.as_str(), r.step, r.time, r.report.csv_row()));
    }
    out
}

/// Concatenated `.gro` frames.
pub fn trajectory_gro(frames: &[TrajectoryFrame], atoms: &[GroAtom]) -> String {
    let mut out = String::new();
    for f in frames {
        let mut s = State::new(f.positions.clone(), f.simbox);
        s.velocities = f.velocities.clone();
        let title = format!("nnmd {} step {} t= {:.5}", f.stage.as_str(), f.step, f.time);
        out.push_str(&write_gro(&s, atoms, &title, true));
    }
    out
}
