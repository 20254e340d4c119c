use std::fmt;
use std::time::Instant;

use super::config::Stage;
use crate::domain::MessageKind;
use crate::nnpot::NnCounters;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    NeighborBuild,
    Classical,
    NnInference,
    HaloExchange,
    GatherScatter,
    Integration,
    Io,
}

impl Phase {
    pub const ALL: [Phase; 7] = [
        Phase::NeighborBuild,
        Phase::Classical,
        Phase::NnInference,
        Phase::HaloExchange,
        Phase::GatherScatter,
        Phase::Integration,
        Phase::Io,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::NeighborBuild => "neighbor_build",
            Phase::Classical => "classical_forces",
            Phase::NnInference => "nn_inference",
            Phase::HaloExchange => "halo_exchange",
            Phase::GatherScatter => "gather_scatter",
            Phase::Integration => "integration",
            Phase::Io => "io",
        }
    }

    /// Phases that only run because of the neural-network provider.
    pub fn is_nn(self) -> bool {
        matches!(self, Phase::NnInference | Phase::HaloExchange | Phase::GatherScatter)
    }
}

/// Accumulated wall seconds per phase.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseTimes([f64; 7]);

impl PhaseTimes {
    pub fn add(&mut self, phase: Phase, seconds: f64) {
        self.0[phase as usize] += seconds;
    }

    /// Add the time elapsed since `start` and return the current instant.
    pub fn lap(&mut self, phase: Phase, start: Instant) -> Instant {
        let now = Instant::now();
        self.add(phase, (now - start).as_secs_f64());
        now
    }

    pub fn get(&self, phase: Phase) -> f64 {
        self.0[phase as usize]
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn nn_total(&self) -> f64 {
        Phase::ALL.iter().filter(|p| p.is_nn()).map(|&p| self.get(p)).sum()
    }

    pub fn merge(&mut self, other: &PhaseTimes) {
        for (a, b) in self.0.iter_mut().zip(other.0) {
            *a += b;
        }
    }
}

/// Simulation throughput in ns/day from simulated ps and wall seconds.
pub fn ns_per_day(simulated_ps: f64, wall_seconds: f64) -> f64 {
    if simulated_ps == 0.0 {
        return 0.0;
    }
    if wall_seconds <= 0.0 {
        return f64::INFINITY;
    }
    simulated_ps / 1000.0 / wall_seconds * 86_400.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageMetrics {
    pub stage: Stage,
    /// Integration steps (or minimiser iterations for em).
    pub steps: u64,
    /// ps
    pub simulated_ps: f64,
    pub wall_seconds: f64,
    pub phases: PhaseTimes,
    pub force_evaluations: u64,
    pub nn_evaluations: u64,
}

impl StageMetrics {
    pub fn new(stage: Stage) -> Self {
        StageMetrics {
            stage,
            steps: 0,
            simulated_ps: 0.0,
            wall_seconds: 0.0,
            phases: PhaseTimes::default(),
            force_evaluations: 0,
            nn_evaluations: 0,
        }
    }

    pub fn ns_per_day(&self) -> f64 {
        ns_per_day(self.simulated_ps, self.wall_seconds)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunMetrics {
    pub stages: Vec<StageMetrics>,
    /// Summed over every NN evaluation of the run.
    pub nn_totals: NnCounters,
    /// Largest single-evaluation activation footprint, bytes.
    pub peak_activation_bytes: u64,
    /// Flops of the most recent NN evaluation.
    pub flops_per_evaluation: u64,
    /// Message bytes per kind, in `MessageKind::ALL` order.
    pub message_bytes: [u64; 4],
}

impl RunMetrics {
    pub fn stage(&self, stage: Stage) -> Option<&StageMetrics> {
        self.stages.iter().find(|s| s.stage == stage)
    }

    pub fn wall_seconds(&self) -> f64 {
        self.stages.iter().map(|s| s.wall_seconds).sum()
    }

    /// Throughput of the production stage, or of all dynamics when md was skipped.
    pub fn ns_per_day(&self) -> f64 {
        match self.stage(Stage::Md) {
            Some(md) if md.steps > 0 => md.ns_per_day(),
            _ => {
                let dyn_stages = self.stages.iter().filter(|s| s.stage != Stage::Em);
                let (ps, wall) = dyn_stages.fold((0.0, 0.0), |(p, w), s| (p + s.simulated_ps, w + s.wall_seconds));
                ns_per_day(ps, wall)
            }
        }
    }

    pub fn record_nn(&mut self, counters: &NnCounters) {
        self.nn_totals.add(counters);
        self.peak_activation_bytes = self.peak_activation_bytes.max(counters.activation_bytes);
        self.flops_per_evaluation = counters.flops;
    }

    pub fn record_messages(&mut self, transport: &crate::domain::Transport) {
        for (slot, kind) in self.message_bytes.iter_mut().zip(MessageKind::ALL) {
            *slot += transport.bytes_of(kind);
        }
    }

    pub fn total_message_bytes(&self) -> u64 {
        self.message_bytes.iter().sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("stage,steps,simulated_ps,wall_s,ns_per_day,force_evaluations,nn_evaluations");
        for p in Phase::ALL {
            out.push(',');
            out.push_str(p.as_str());
        }
        out.push('\n');
        for s in &self.stages {
            out.push_str(&format!(
                "{},{},{},{:.6},{:.6},{},{}",
                s.stage.as_str(),
                s.steps,
                s.simulated_ps,
                s.wall_seconds,
                s.ns_per_day(),
                s.force_evaluations,
                s.nn_evaluations
            ));
            for p in Phase::ALL {
                out.push_str(&format!(",{:.6}", s.phases.get(p)));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseShare {
    pub name: &'static str,
    pub seconds: f64,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseBreakdown {
    pub scope: String,
    pub wall_seconds: f64,
    /// Every phase plus a final `other` row for untimed work.
    pub rows: Vec<PhaseShare>,
}

impl PhaseBreakdown {
    pub fn share(&self, name: &str) -> f64 {
        self.rows.iter().find(|r| r.name == name).map_or(0.0, |r| r.percent)
    }

    pub fn nn_share(&self) -> f64 {
        Phase::ALL.iter().filter(|p| p.is_nn()).map(|p| self.share(p.as_str())).sum()
    }

    /// Name of the most expensive timed phase.
    pub fn dominant(&self) -> &'static str {
        self.rows
            .iter()
            .filter(|r| r.name != "other")
            .max_by(|a, b| a.seconds.total_cmp(&b.seconds))
            .map_or("other", |r| r.name)
    }
}

impl fmt::Display for PhaseBreakdown {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "phase breakdown ({}, {:.3} s wall)", self.scope, self.wall_seconds)?;
        writeln!(f, "{:<18} {:>12} {:>8}", "phase", "seconds", "share")?;
        for r in &self.rows {
            writeln!(f, "{:<18} {:>12.6} {:>7.2}%", r.name, r.seconds, r.percent)?;
        }
        Ok(())
    }
}

/// Per-phase wall-time shares of the production stage (all stages when md
/// did not run). Shares include an `other` row and sum to 100%.
pub fn emit_phase_breakdown(metrics: &RunMetrics) -> PhaseBreakdown {
    let (scope, phases, wall) = match metrics.stage(Stage::Md) {
        Some(md) if md.steps > 0 => ("md".to_string(), md.phases, md.wall_seconds),
        _ => {
            let mut phases = PhaseTimes::default();
            metrics.stages.iter().for_each(|s| phases.merge(&s.phases));
            ("all stages".to_string(), phases, metrics.wall_seconds())
        }
    };
    let wall = wall.max(phases.total());
    let pct = |s: f64| if wall > 0.0 { 100.0 * s / wall } else { 0.0 };
    let mut rows: Vec<PhaseShare> = Phase::ALL
        .iter()
        .map(|&p| PhaseShare { name: p.as_str(), seconds: phases.get(p), percent: pct(phases.get(p)) })
        .collect();
    let other = (wall - phases.total()).max(0.0);
    rows.push(PhaseShare { name: "other", seconds: other, percent: pct(other) });
    PhaseBreakdown { scope, wall_seconds: wall, rows }
}
