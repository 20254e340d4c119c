//! Staged EM → NVT → NPT → MD orchestration, run configuration, timing
//! metrics and the scaling benchmark harness.

mod bench;
mod config;
mod metrics;
mod run;

pub use bench::{bench_scaling, fit_loglog_slope, BenchCell, BenchOptions, ModelVariant, ScalingFit, ScalingReport, DEFAULT_SIZES};
pub use config::{
    parse_config, DynamicsSection, EmSection, ForcefieldConfig, NnSection, RunConfig, RunSection, Stage, SystemConfig,
};
pub use metrics::{emit_phase_breakdown, ns_per_day, Phase, PhaseBreakdown, PhaseShare, PhaseTimes, RunMetrics, StageMetrics};
pub use run::{
    build_system, log_csv, resolve_model, run_pipeline, run_pipeline_with_model, trajectory_gro, LogRow,
    PipelineOutput, TrajectoryFrame,
};
