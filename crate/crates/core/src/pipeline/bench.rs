use std::collections::BTreeSet;

use super::config::{RunConfig, Stage};
use super::metrics::Phase;
use super::run::{build_system, run_pipeline_with_model};
use crate::error::{Error, Result};
use crate::nnpot::{ModelSpec, NnModel};

/// Atom counts of the reference benchmark systems.
pub const DEFAULT_SIZES: [usize; 4] = [582, 1231, 2643, 4114];

#[derive(Debug, Clone, PartialEq)]
pub struct ModelVariant {
    pub name: String,
    /// `None` runs classical forces only.
    pub spec: Option<ModelSpec>,
}

impl ModelVariant {
    pub fn classical() -> Self {
        ModelVariant { name: "classical".into(), spec: None }
    }

    pub fn embed_fit(rc: f64) -> Self {
        ModelVariant { name: "embed_fit".into(), spec: Some(ModelSpec::embed_fit(rc, 2, 2024)) }
    }

    pub fn message_passing(rc: f64, depth: usize) -> Self {
        ModelVariant {
            name: format!("message_passing_l{depth}"),
            spec: Some(ModelSpec::message_passing(rc, 2, depth, 2024)),
        }
    }

    pub fn defaults(rc: f64) -> Vec<Self> {
        vec![Self::classical(), Self::embed_fit(rc), Self::message_passing(rc, 3)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOptions {
    pub sizes: Vec<usize>,
    pub variants: Vec<ModelVariant>,
    /// MD steps per cell.
    pub steps: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions { sizes: DEFAULT_SIZES.to_vec(), variants: ModelVariant::defaults(0.6), steps: 10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchCell {
    pub size: usize,
    pub model: String,
    /// `None` on success, otherwise the error message.
    pub error: Option<String>,
    pub ns_per_day: f64,
    /// Share of md wall time spent in NN phases.
    pub nn_fraction: f64,
    /// Flops of one NN evaluation.
    pub flops: u64,
    /// Peak activation bytes of one NN evaluation.
    pub activation_bytes: u64,
    /// Mean inference wall seconds per NN evaluation.
    pub nn_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    pub model: String,
    pub metric: &'static str,
    pub slope: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub cells: Vec<BenchCell>,
    pub fits: Vec<ScalingFit>,
}

impl ScalingReport {
    pub fn cell(&self, size: usize, model: &str) -> Option<&BenchCell> {
        self.cells.iter().find(|c| c.size == size && c.model == model)
    }

    pub fn slope(&self, model: &str, metric: &str) -> Option<f64> {
        self.fits.iter().find(|f| f.model == model && f.metric == metric).map(|f| f.slope)
    }

    pub fn cells_csv(&self) -> String {
        let mut out = String::from("size,model,status,ns_per_day,nn_fraction,flops,activation_bytes,nn_seconds\n");
        for c in &self.cells {
            let status = c.error.as_deref().map_or("ok".to_string(), |e| format!("\"error: {}\"", e.replace('"', "'")));
            out.push_str(&format!(
                "{},{},{},{:.6},{:.6},{},{},{:.6e}\n",
                c.size, c.model, status, c.ns_per_day, c.nn_fraction, c.flops, c.activation_bytes, c.nn_seconds
            ));
        }
        out
    }

    pub fn fits_csv(&self) -> String {
        let mut out = String::from("model,metric,slope,points\n");
        for f in &self.fits {
            out.push_str(&format!("{},{},{:.4},{}\n", f.model, f.metric, f.slope, f.points));
        }
        out
    }
}

/// Least-squares slope of ln y against ln x over strictly positive points.
pub fn fit_loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(&x, &y)| x > 0.0 && y > 0.0 && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn run_cell(template: &RunConfig, size: usize, variant: &ModelVariant, steps: usize) -> Result<BenchCell> {
    let mut cfg = template.clone();
    cfg.system.n_atoms = size;
    cfg.em.max_steps = 0;
    cfg.nvt.steps = 0;
    cfg.npt.steps = 0;
    cfg.md.steps = steps;
    cfg.md.nstlog = 0;
    cfg.md.nstxout = 0;
    cfg.nn.stages = if variant.spec.is_some() { BTreeSet::from([Stage::Md]) } else { BTreeSet::new() };
    let system = build_system(&cfg)?;
    let model = match &variant.spec {
        Some(spec) => {
            let spec = ModelSpec { n_types: system.topology.n_types(), ..spec.clone() };
            cfg.nn.family = spec.family;
            cfg.nn.depth = spec.depth;
            cfg.nn.rc_model = spec.rc;
            Some(NnModel::new(&spec)?)
        }
        None => None,
    };
    let out = run_pipeline_with_model(&cfg, &system, model.as_ref())?;
    let md = out.metrics.stage(Stage::Md).ok_or_else(|| Error::config("md.steps", "md stage did not run"))?;
    let nn_evals = md.nn_evaluations.max(1) as f64;
    Ok(BenchCell {
        size,
        model: variant.name.clone(),
        error: None,
        ns_per_day: md.ns_per_day(),
        nn_fraction: if md.wall_seconds > 0.0 { md.phases.nn_total() / md.wall_seconds } else { 0.0 },
        flops: out.metrics.flops_per_evaluation,
        activation_bytes: out.metrics.peak_activation_bytes,
        nn_seconds: md.phases.get(Phase::NnInference) / nn_evals,
    })
}

/// Run a short md stage for every (size, model) cell and fit log–log
/// slopes of the NN metrics against atom count. Failed cells are recorded
/// and excluded from the fits.
pub fn bench_scaling(template: &RunConfig, opts: &BenchOptions) -> Result<ScalingReport> {
    let sizes: BTreeSet<usize> = opts.sizes.iter().copied().collect();
    let (lo, hi) = match (sizes.first(), sizes.last()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => return Err(Error::config("sizes", "no sizes given")),
    };
    if sizes.len() < 3 || hi < 4 * lo {
        return Err(Error::config("sizes", "need at least 3 distinct sizes spanning a factor of 4"));
    }
    if opts.steps == 0 {
        return Err(Error::config("steps", "need at least one md step"));
    }
    let mut cells = Vec::new();
    for &size in &sizes {
        for variant in &opts.variants {
            let cell = run_cell(template, size, variant, opts.steps).unwrap_or_else(|e| {
                log::warn!("bench cell {size}/{} failed: {e}", variant.name);
                BenchCell {
                    size,
                    model: variant.name.clone(),
                    error: Some(e.to_string()),
                    ns_per_day: 0.0,
                    nn_fraction: 0.0,
                    flops: 0,
                    activation_bytes: 0,
                    nn_seconds: 0.0,
                }
            });
            cells.push(cell);
        }
    }
    let mut fits = Vec::new();
    for variant in &opts.variants {
        let ok: Vec<&BenchCell> = cells.iter().filter(|c| c.model == variant.name && c.error.is_none()).collect();
        let xs: Vec<f64> = ok.iter().map(|c| c.size as f64).collect();
        let mut metrics: Vec<(&'static str, Vec<f64>)> = vec![("ns_per_day", ok.iter().map(|c| c.ns_per_day).collect())];
        if variant.spec.is_some() {
            metrics.push(("flops", ok.iter().map(|c| c.flops as f64).collect()));
            metrics.push(("activation_bytes", ok.iter().map(|c| c.activation_bytes as f64).collect()));
            metrics.push(("nn_seconds", ok.iter().map(|c| c.nn_seconds).collect()));
        }
        for (metric, ys) in metrics {
            if let Some(slope) = fit_loglog_slope(&xs, &ys) {
                fits.push(ScalingFit { model: variant.name.clone(), metric, slope, points: xs.len() });
            }
        }
    }
    Ok(ScalingReport { cells, fits })
}
