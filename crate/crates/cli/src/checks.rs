//! Oracle suites exposed on the command line.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nnmd::domain::{
    classical_forces_decomposed, decompose_on, nn_inference_decomposed, GridShape, NnDdOptions, NnStrategy, RankGrid,
    Transport,
};
use nnmd::forcefield::{compute_classical, ClassicalParams, CoulombScheme, LjParams};
use nnmd::neighbors::{build_neighbor_list, ListMode};
use nnmd::nnpot::{evaluate, nn_force_provider, plan_group_preprocessing, ModelSpec, NnInput, NnModel};
use nnmd::synthetic::{generate_synthetic_system, SyntheticParams};
use nnmd::{Result, SimBox, Vec3};

#[derive(Debug, Clone)]
pub struct CheckLine {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    /// `true` when `value` must exceed `limit` rather than stay below it.
    pub above: bool,
}

impl CheckLine {
    pub fn below(name: impl Into<String>, value: f64, limit: f64) -> Self {
        CheckLine { name: name.into(), value, limit, above: false }
    }

    pub fn above(name: impl Into<String>, value: f64, limit: f64) -> Self {
        CheckLine { name: name.into(), value, limit, above: true }
    }

    pub fn passed(&self) -> bool {
        if self.above {
            self.value > self.limit
        } else {
            self.value <= self.limit
        }
    }

    pub fn render(&self) -> String {
        let rel = if self.above { ">" } else { "<=" };
        let tag = if self.passed() { "PASS" } else { "FAIL" };
        format!("{tag} {:<44} {:.3e} {rel} {:.1e}", self.name, self.value, self.limit)
    }
}

fn max_rel_dev(a: &[Vec3], b: &[Vec3]) -> f64 {
    let scale = b.iter().map(|f| f.norm()).fold(0.0, f64::max).max(1e-300);
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

fn random_cluster(rng: &mut ChaCha8Rng, n: usize, n_types: usize, rc: f64) -> Result<NnInput> {
    let side = (n as f64 / 30.0).cbrt().max(2.2 * rc);
    let simbox = SimBox::cubic(side)?;
    let positions = (0..n).map(|_| Vec3::from_fn(|_, _| rng.random::<f64>() * side)).collect();
    let types = (0..n).map(|_| rng.random_range(0..n_types)).collect();
    NnInput::new(positions, types, simbox, rc)
}

/// Central finite differences of the NN energy against its analytic forces.
pub fn check_model_forces(model: &NnModel, configs: usize, atoms: usize, seed: u64) -> Result<CheckLine> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..configs {
        let input = random_cluster(&mut rng, atoms, model.n_types, model.rc_model)?;
        let out = evaluate(&input, model)?;
        let scale = out.forces.iter().map(|f| f.norm()).fold(0.0, f64::max).max(1e-8);
        for _ in 0..4 {
            let a = rng.random_range(0..atoms);
            for c in 0..3 {
                let energy_at = |d: f64| -> Result<f64> {
                    let mut pos = input.positions.clone();
                    pos[a][c] += d;
                    let moved = NnInput::new(pos, input.types.clone(), input.simbox, model.rc_model)?;
                    Ok(evaluate(&moved, model)?.energy)
                };
                let fd = -(energy_at(h)? - energy_at(-h)?) / (2.0 * h);
                worst = worst.max((fd - out.forces[a][c]).abs() / scale);
            }
        }
    }
    Ok(CheckLine::below(
        format!("{} L={} force vs finite difference", model.family.as_str(), model.depth),
        worst,
        1e-4,
    ))
}

/// Central finite differences of the full classical energy.
pub fn check_classical_forces(configs: usize, seed: u64) -> Result<Vec<CheckLine>> {
    let h = 1e-6;
    let mut lines = Vec::new();
    for scheme in [CoulombScheme::ReactionField, CoulombScheme::CutoffShifted] {
        let mut worst: f64 = 0.0;
        for k in 0..configs {
            let params = SyntheticParams { seed: seed + k as u64, jitter: 0.2, ..SyntheticParams::default() }.with_size(120);
            let sys = generate_synthetic_system(&params)?;
            let p = ClassicalParams::new(0.6, LjParams::from_per_type(&sys.lj_types())?, scheme, 78.0)?;
            let topo = &sys.topology;
            let energy = |s: &mut nnmd::State| -> Result<f64> {
                let nl = build_neighbor_list(s, topo, p.rc, 0.0, ListMode::Half)?;
                Ok(compute_classical(s, topo, &nl, &p, None)?.total_potential)
            };
            let mut s = sys.state.clone();
            energy(&mut s)?;
            let forces = s.forces.clone();
            let scale = forces.iter().map(|f| f.norm()).fold(0.0, f64::max);
            for a in [0, 7, 60, 119] {
                for c in 0..3 {
                    let mut plus = sys.state.clone();
                    plus.positions[a][c] += h;
                    let mut minus = sys.state.clone();
                    minus.positions[a][c] -= h;
                    let fd = -(energy(&mut plus)? - energy(&mut minus)?) / (2.0 * h);
                    worst = worst.max((fd - forces[a][c]).abs() / scale);
                }
            }
        }
        lines.push(CheckLine::below(format!("classical ({}) force vs finite difference", scheme.as_str()), worst, 1e-4));
    }
    Ok(lines)
}

#[derive(Debug, Clone)]
pub struct DdOptions {
    pub n_atoms: usize,
    pub ranks: Vec<usize>,
    pub rc_model: f64,
    pub depth: usize,
    pub seed: u64,
}

/// Decomposed classical and NN forces against single-domain evaluation,
/// plus the shallow-halo negative control.
pub fn check_domain(opts: &DdOptions) -> Result<Vec<CheckLine>> {
    let params = SyntheticParams { seed: opts.seed, ..SyntheticParams::default() }.with_size(opts.n_atoms);
    let sys = generate_synthetic_system(&params)?;
    let rc = 0.8;
    let p = ClassicalParams::new(rc, LjParams::from_per_type(&sys.lj_types())?, CoulombScheme::ReactionField, 78.0)?;
    let mut reference = sys.state.clone();
    let nl = build_neighbor_list(&reference, &sys.topology, rc, 0.0, ListMode::Half)?;
    compute_classical(&mut reference, &sys.topology, &nl, &p, None)?;

    let (topo, plan) = plan_group_preprocessing(&sys.topology, &params.group_name)?;
    let model = NnModel::new(&ModelSpec::message_passing(opts.rc_model, 2, opts.depth, opts.seed))?;
    let mut nn_ref = sys.state.clone();
    nn_ref.zero_forces();
    nn_force_provider(&mut nn_ref, &topo, &plan, &model)?;
    let halo = model.receptive_field();

    let mut lines = Vec::new();
    for &n in &opts.ranks {
        let grid = RankGrid::new(n, GridShape::Balanced)?;
        let layout = decompose_on(&sys.state, grid, rc + 0.05)?;
        let mut t = Transport::new(n);
        let out = classical_forces_decomposed(&layout, &sys.state, &sys.topology, &p, 1, &mut t)?;
        lines.push(CheckLine::below(format!("classical forces, {n} ranks"), max_rel_dev(&out.forces, &reference.forces), 1e-10));

        let layout = decompose_on(&sys.state, grid, halo)?;
        for strategy in [NnStrategy::GatherToRoot, NnStrategy::HaloInference] {
            let dd = NnDdOptions { strategy, ..NnDdOptions::default() };
            let mut t = Transport::new(n);
            let out = nn_inference_decomposed(&layout, &sys.state, &topo, &plan, &model, &dd, &mut t)?;
            lines.push(CheckLine::below(
                format!("nn {}, {n} ranks", strategy.as_str()),
                max_rel_dev(&out.forces, &nn_ref.forces),
                1e-10,
            ));
        }
        if n > 1 && opts.depth > 1 {
            let shallow = decompose_on(&sys.state, grid, opts.rc_model)?;
            let dd = NnDdOptions {
                strategy: NnStrategy::HaloInference,
                check_receptive_field: false,
                ..NnDdOptions::default()
            };
            let mut t = Transport::new(n);
            let out = nn_inference_decomposed(&shallow, &sys.state, &topo, &plan, &model, &dd, &mut t)?;
            lines.push(CheckLine::above(
                format!("negative control halo = rc, {n} ranks"),
                max_rel_dev(&out.forces, &nn_ref.forces),
                1e-3,
            ));
        }
    }
    Ok(lines)
}
