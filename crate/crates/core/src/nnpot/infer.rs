use serde::Serialize;

use super::descriptor::switch;
use super::model::{NnFamily, NnModel};
use crate::error::{Error, Result};
use crate::neighbors::{find_pairs, ListMode};
use crate::pbc::{SimBox, Vec3};

/// Atoms handed to a model evaluation.
#[derive(Debug, Clone)]
pub struct NnInput {
    pub positions: Vec<Vec3>,
    pub types: Vec<usize>,
    pub simbox: SimBox,
    /// Full neighbour list at the model cutoff.
    pub pairs: Vec<(usize, usize)>,
    /// Atoms whose energies are wanted; the others are ghosts.
    pub owned: Vec<bool>,
    /// Depth of the ghost shell around owned atoms; `None` when the input is
    /// complete (single domain or gathered).
    pub ghost_radius: Option<f64>,
}

impl NnInput {
    /// Complete input where every atom is owned.
    pub fn new(positions: Vec<Vec3>, types: Vec<usize>, simbox: SimBox, rc: f64) -> Result<Self> {
        let owned = vec![true; positions.len()];
        Self::with_ghosts(positions, types, simbox, owned, None, rc)
    }

    pub fn with_ghosts(
        positions: Vec<Vec3>,
        types: Vec<usize>,
        simbox: SimBox,
        owned: Vec<bool>,
        ghost_radius: Option<f64>,
        rc: f64,
    ) -> Result<Self> {
        if types.len() != positions.len() || owned.len() != positions.len() {
            return Err(Error::Model(format!(
                "input arrays disagree: {} positions, {} types, {} owned flags",
                positions.len(),
                types.len(),
                owned.len()
            )));
        }
        let pairs = find_pairs(&positions, &simbox, rc, ListMode::Full, None)?;
        Ok(NnInput { positions, types, simbox, pairs, owned, ghost_radius })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Analytic work and memory counters of one evaluation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct NnCounters {
    pub atoms: usize,
    pub edges: usize,
    pub flops: u64,
    /// Bytes of activations retained between the forward and backward pass.
    pub activation_bytes: u64,
}

impl NnCounters {
    pub fn add(&mut self, other: &NnCounters) {
        self.atoms += other.atoms;
        self.edges += other.edges;
        self.flops += other.flops;
        self.activation_bytes += other.activation_bytes;
    }
}

#[derive(Debug, Clone)]
pub struct NnOutput {
    /// Per-atom energies; zero for ghost atoms.
    pub energies: Vec<f64>,
    pub energy: f64,
    /// Forces on every input atom, ghosts included.
    pub forces: Vec<Vec3>,
    /// Pairwise virial Σ r·F.
    pub virial: f64,
    pub counters: NnCounters,
}

struct Edge {
    i: usize,
    j: usize,
    r: f64,
    unit: Vec3,
    s: f64,
    ds: f64,
}

/// Everything the backward pass needs from the forward pass.
struct Forward {
    edges: Vec<Edge>,
    /// Basis values and derivatives per edge, `edges × K`.
    g: Vec<f64>,
    dg: Vec<f64>,
    emb_trace: Vec<f64>,
    msg_trace: Vec<Vec<f64>>,
    upd_trace: Vec<Vec<f64>>,
    fit_trace: Vec<f64>,
    energies: Vec<f64>,
    activation_values: usize,
    flops: u64,
}

fn check_input(input: &NnInput, model: &NnModel) -> Result<()> {
    if let Some(t) = input.types.iter().find(|&&t| t >= model.n_types) {
        return Err(Error::Model(format!("atom type {t} outside the model's {} types", model.n_types)));
    }
    if let Some(radius) = input.ghost_radius {
        let required = model.receptive_field();
        if radius < required * (1.0 - 1e-12) {
            return Err(Error::ReceptiveField { halo: radius, required });
        }
    }
    Ok(())
}

fn forward(input: &NnInput, model: &NnModel) -> Forward {
    let n = input.len();
    let k = model.basis.len();
    let h = model.hidden;
    let rc = model.rc_model;
    let mut flops = 0u64;

    let mut edges = Vec::with_capacity(input.pairs.len());
    let mut g = Vec::with_capacity(input.pairs.len() * k);
    let mut dg = Vec::with_capacity(input.pairs.len() * k);
    let (mut gk, mut dgk) = (vec![0.0; k], vec![0.0; k]);
    for &(i, j) in &input.pairs {
        let d = input.simbox.delta(&input.positions[i], &input.positions[j]);
        let r = d.norm();
        if r >= rc {
            continue;
        }
        let (s, ds) = switch(r, rc);
        model.basis.eval(r, &mut gk, &mut dgk);
        g.extend_from_slice(&gk);
        dg.extend_from_slice(&dgk);
        edges.push(Edge { i, j, r, unit: d / r, s, ds });
    }
    let n_edges = edges.len();
    flops += (n_edges * (12 + 6 * k)) as u64;

    // descriptor blocks per neighbour type, written straight into the embedding input
    let emb = &model.embedding;
    let et = emb.trace_len();
    let mut emb_trace = vec![0.0; n * et];
    let mut desc = vec![0.0; n * emb.n_in()];
    for (e, edge) in edges.iter().enumerate() {
        let off = edge.i * emb.n_in() + input.types[edge.j] * k;
        for (d, gv) in desc[off..off + k].iter_mut().zip(&g[e * k..(e + 1) * k]) {
            *d += gv * edge.s;
        }
    }
    flops += (2 * n_edges * k) as u64;
    let mut hcur = vec![0.0; n * h];
    for i in 0..n {
        let trace = &mut emb_trace[i * et..(i + 1) * et];
        emb.forward(&desc[i * emb.n_in()..(i + 1) * emb.n_in()], trace);
        hcur[i * h..(i + 1) * h].copy_from_slice(emb.output(trace));
    }
    flops += n as u64 * emb.forward_flops();
    let mut activation_values = n_edges * (2 * k + 5) + n * et;

    let mut msg_trace = Vec::new();
    let mut upd_trace = Vec::new();
    if let Some(msg) = &model.message {
        let mt = msg.trace_len();
        let mut u = vec![0.0; h + k];
        for upd in &model.updates {
            let mut mtrace = vec![0.0; n_edges * mt];
            let mut agg = vec![0.0; n * h];
            for (e, edge) in edges.iter().enumerate() {
                u[..h].copy_from_slice(&hcur[edge.j * h..(edge.j + 1) * h]);
                u[h..].copy_from_slice(&g[e * k..(e + 1) * k]);
                let trace = &mut mtrace[e * mt..(e + 1) * mt];
                msg.forward(&u, trace);
                for (a, o) in agg[edge.i * h..(edge.i + 1) * h].iter_mut().zip(msg.output(trace)) {
                    *a += edge.s * o;
                }
            }
            flops += n_edges as u64 * (msg.forward_flops() + 2 * h as u64);
            let ut = upd.trace_len();
            let mut utrace = vec![0.0; n * ut];
            let mut v = vec![0.0; 2 * h];
            let mut hnext = hcur.clone();
            for i in 0..n {
                v[..h].copy_from_slice(&hcur[i * h..(i + 1) * h]);
                v[h..].copy_from_slice(&agg[i * h..(i + 1) * h]);
                let trace = &mut utrace[i * ut..(i + 1) * ut];
                upd.forward(&v, trace);
                for (hn, o) in hnext[i * h..(i + 1) * h].iter_mut().zip(upd.output(trace)) {
                    *hn += o;
                }
            }
            flops += n as u64 * (upd.forward_flops() + h as u64);
            activation_values += n_edges * mt + n * ut;
            msg_trace.push(mtrace);
            upd_trace.push(utrace);
            hcur = hnext;
        }
    }

    let fit = &model.fitting;
    let ft = fit.trace_len();
    let mut fit_trace = vec![0.0; n * ft];
    let mut energies = vec![0.0; n];
    let mut n_owned = 0;
    for i in (0..n).filter(|&i| input.owned[i]) {
        let trace = &mut fit_trace[i * ft..(i + 1) * ft];
        fit.forward(&hcur[i * h..(i + 1) * h], trace);
        energies[i] = fit.output(trace)[0];
        n_owned += 1;
    }
    flops += n_owned as u64 * fit.forward_flops();
    activation_values += n_owned * ft;

    Forward { edges, g, dg, emb_trace, msg_trace, upd_trace, fit_trace, energies, activation_values, flops }
}

fn sub<'a>(grad: &'a mut Option<&mut [f64]>, off: usize, len: usize) -> Option<&'a mut [f64]> {
    grad.as_deref_mut().map(|g| &mut g[off..off + len])
}

struct Backward {
    forces: Vec<Vec3>,
    virial: f64,
    flops: u64,
}

/// Reverse pass for E = Σ_owned E_i. Parameter gradients of E are added into
/// `param_grad` when given.
fn backward(input: &NnInput, model: &NnModel, fwd: &Forward, mut param_grad: Option<&mut [f64]>) -> Backward {
    let n = input.len();
    let k = model.basis.len();
    let h = model.hidden;
    let offsets = model.param_offsets();
    let mut flops = 0u64;
    let want_params = param_grad.is_some();
    let pg_factor = if want_params { 2 } else { 1 };

    let fit = &model.fitting;
    let ft = fit.trace_len();
    let mut grad_h = vec![0.0; n * h];
    for i in (0..n).filter(|&i| input.owned[i]) {
        let pg = sub(&mut param_grad, offsets.fitting, fit.params.len());
        fit.backward(&fwd.fit_trace[i * ft..(i + 1) * ft], &[1.0], &mut grad_h[i * h..(i + 1) * h], pg);
        flops += pg_factor * fit.forward_flops();
    }

    let mut dedr = vec![0.0; fwd.edges.len()];
    if let Some(msg) = &model.message {
        let mt = msg.trace_len();
        let mut dv = vec![0.0; 2 * h];
        let mut du = vec![0.0; h + k];
        let mut d_out = vec![0.0; h];
        for (round, upd) in model.updates.iter().enumerate().rev() {
            let ut = upd.trace_len();
            let utrace = &fwd.upd_trace[round];
            let mtrace = &fwd.msg_trace[round];
            let mut grad_prev = grad_h.clone();
            let mut grad_agg = vec![0.0; n * h];
            for i in 0..n {
                let gi = &grad_h[i * h..(i + 1) * h];
                if gi.iter().all(|&x| x == 0.0) {
                    continue;
                }
                let pg = sub(&mut param_grad, offsets.updates[round], upd.params.len());
                upd.backward(&utrace[i * ut..(i + 1) * ut], gi, &mut dv, pg);
                flops += pg_factor * upd.forward_flops();
                for (gp, d) in grad_prev[i * h..(i + 1) * h].iter_mut().zip(&dv[..h]) {
                    *gp += d;
                }
                grad_agg[i * h..(i + 1) * h].copy_from_slice(&dv[h..]);
            }
            for (e, edge) in fwd.edges.iter().enumerate() {
                let ga = &grad_agg[edge.i * h..(edge.i + 1) * h];
                if ga.iter().all(|&x| x == 0.0) {
                    continue;
                }
                let trace = &mtrace[e * mt..(e + 1) * mt];
                let out = msg.output(trace);
                let mut ds = 0.0;
                for ((d, &gav), &o) in d_out.iter_mut().zip(ga).zip(out) {
                    *d = edge.s * gav;
                    ds += gav * o;
                }
                let pg = sub(&mut param_grad, offsets.message, msg.params.len());
                msg.backward(trace, &d_out, &mut du, pg);
                flops += pg_factor * msg.forward_flops() + 4 * h as u64;
                for (gp, d) in grad_prev[edge.j * h..(edge.j + 1) * h].iter_mut().zip(&du[..h]) {
                    *gp += d;
                }
                let dgs = &fwd.dg[e * k..(e + 1) * k];
                dedr[e] += ds * edge.ds + du[h..].iter().zip(dgs).map(|(a, b)| a * b).sum::<f64>();
            }
            grad_h = grad_prev;
        }
    }

    let emb = &model.embedding;
    let et = emb.trace_len();
    let mut grad_desc = vec![0.0; n * emb.n_in()];
    for i in 0..n {
        let gi = &grad_h[i * h..(i + 1) * h];
        if gi.iter().all(|&x| x == 0.0) {
            continue;
        }
        let pg = sub(&mut param_grad, offsets.embedding, emb.params.len());
        emb.backward(&fwd.emb_trace[i * et..(i + 1) * et], gi, &mut grad_desc[i * emb.n_in()..(i + 1) * emb.n_in()], pg);
        flops += pg_factor * emb.forward_flops();
    }
    for (e, edge) in fwd.edges.iter().enumerate() {
        let off = edge.i * emb.n_in() + input.types[edge.j] * k;
        let gd = &grad_desc[off..off + k];
        let (gs, dgs) = (&fwd.g[e * k..(e + 1) * k], &fwd.dg[e * k..(e + 1) * k]);
        for ((gdk, gv), dgv) in gd.iter().zip(gs).zip(dgs) {
            dedr[e] += gdk * (dgv * edge.s + gv * edge.ds);
        }
    }
    flops += (fwd.edges.len() * 4 * k) as u64;

    let mut forces = vec![Vec3::zeros(); n];
    let mut virial = 0.0;
    for (edge, &de) in fwd.edges.iter().zip(&dedr) {
        if de == 0.0 {
            continue;
        }
        let f = edge.unit * de;
        forces[edge.i] += f;
        forces[edge.j] -= f;
        virial -= de * edge.r;
    }
    flops += (fwd.edges.len() * 8) as u64;
    Backward { forces, virial, flops }
}

fn run(input: &NnInput, model: &NnModel, param_grad: Option<&mut [f64]>) -> Result<NnOutput> {
    check_input(input, model)?;
    let fwd = forward(input, model);
    let bwd = backward(input, model, &fwd, param_grad);
    let energy = fwd.energies.iter().sum();
    Ok(NnOutput {
        energy,
        forces: bwd.forces,
        virial: bwd.virial,
        counters: NnCounters {
            atoms: input.len(),
            edges: fwd.edges.len(),
            flops: fwd.flops + bwd.flops,
            activation_bytes: 8 * fwd.activation_values as u64,
        },
        energies: fwd.energies,
    })
}

/// Per-atom energies from the embedding and fitting nets, with analytic forces.
pub fn embed_fit_energy(input: &NnInput, model: &NnModel) -> Result<NnOutput> {
    if model.family != NnFamily::EmbedFit {
        return Err(Error::Model(format!("embed_fit evaluation given a {} model", model.family.as_str())));
    }
    run(input, model, None)
}

/// Per-atom energies after depth − 1 residual message rounds, with analytic
/// forces including cross-atom paths.
pub fn message_passing_energy(input: &NnInput, model: &NnModel) -> Result<NnOutput> {
    if model.family != NnFamily::MessagePassing {
        return Err(Error::Model(format!("message_passing evaluation given a {} model", model.family.as_str())));
    }
    run(input, model, None)
}

/// Dispatch on the model family.
pub fn evaluate(input: &NnInput, model: &NnModel) -> Result<NnOutput> {
    run(input, model, None)
}

/// Evaluation plus the gradient of the total energy with respect to every
/// model parameter (flat order of [`NnModel::params_flat`]).
pub fn evaluate_with_param_grad(input: &NnInput, model: &NnModel) -> Result<(NnOutput, Vec<f64>)> {
    let mut grad = vec![0.0; model.n_params()];
    let out = run(input, model, Some(&mut grad))?;
    Ok((out, grad))
}
