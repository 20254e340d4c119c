use super::infer::{evaluate, evaluate_with_param_grad, NnInput};
use super::model::NnModel;
use crate::error::{Error, Result};
use crate::pbc::{SimBox, Vec3};

/// One reference configuration with its target energy and optional forces.
#[derive(Debug, Clone)]
pub struct TrainingSample {
    pub positions: Vec<Vec3>,
    pub types: Vec<usize>,
    pub simbox: SimBox,
    pub energy: f64,
    pub forces: Option<Vec<Vec3>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Optimizer {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    /// Weight w of the force term Σ|F − F̂|².
    pub force_weight: f64,
    pub optimizer: Optimizer,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 2000, lr: 1e-2, force_weight: 0.0, optimizer: Optimizer::Adam }
    }
}

fn sample_input(s: &TrainingSample, model: &NnModel, positions: Vec<Vec3>) -> Result<NnInput> {
    NnInput::new(positions, s.types.clone(), s.simbox, model.rc_model)
}

/// Σ(E − Ê)² + w·Σ|F − F̂|² over the samples.
pub fn training_loss(model: &NnModel, samples: &[TrainingSample], force_weight: f64) -> Result<f64> {
    let mut loss = 0.0;
    for s in samples {
        let out = evaluate(&sample_input(s, model, s.positions.clone())?, model)?;
        loss += (out.energy - s.energy).powi(2);
        if let (Some(f_ref), true) = (&s.forces, force_weight > 0.0) {
            loss += force_weight * out.forces.iter().zip(f_ref).map(|(f, r)| (f - r).norm_squared()).sum::<f64>();
        }
    }
    Ok(loss)
}

/// Loss and its parameter gradient. The force term's gradient is
/// −2w·D_v(∂E/∂θ) with v = F − F̂, the directional derivative taken by a
/// central difference of parameter gradients along v.
fn loss_and_gradient(model: &NnModel, samples: &[TrainingSample], force_weight: f64) -> Result<(f64, Vec<f64>)> {
    let mut loss = 0.0;
    let mut grad = vec![0.0; model.n_params()];
    for s in samples {
        let (out, g_e) = evaluate_with_param_grad(&sample_input(s, model, s.positions.clone())?, model)?;
        let residual = out.energy - s.energy;
        loss += residual * residual;
        for (g, ge) in grad.iter_mut().zip(&g_e) {
            *g += 2.0 * residual * ge;
        }
        let Some(f_ref) = s.forces.as_ref().filter(|_| force_weight > 0.0) else { continue };
        let v: Vec<Vec3> = out.forces.iter().zip(f_ref).map(|(f, r)| f - r).collect();
        loss += force_weight * v.iter().map(|x| x.norm_squared()).sum::<f64>();
        let vmax = v.iter().map(|x| x.norm()).fold(0.0, f64::max);
        if vmax == 0.0 {
            continue;
        }
        let eps = 1e-5 / vmax;
        let shifted = |sign: f64| -> Vec<Vec3> { s.positions.iter().zip(&v).map(|(p, d)| p + d * (sign * eps)).collect() };
        let (_, gp) = evaluate_with_param_grad(&sample_input(s, model, shifted(1.0))?, model)?;
        let (_, gm) = evaluate_with_param_grad(&sample_input(s, model, shifted(-1.0))?, model)?;
        for ((g, a), b) in grad.iter_mut().zip(&gp).zip(&gm) {
            *g -= 2.0 * force_weight * (a - b) / (2.0 * eps);
        }
    }
    Ok((loss, grad))
}

/// Full-batch gradient descent on the energy (and optionally force) loss.
/// Returns the fitted model and the loss before each epoch followed by the
/// final loss.
pub fn fit_toy_model(model: &NnModel, samples: &[TrainingSample], cfg: &TrainConfig) -> Result<(NnModel, Vec<f64>)> {
    if samples.is_empty() {
        return Err(Error::Training("no reference samples".into()));
    }
    if !(cfg.lr > 0.0) || cfg.force_weight < 0.0 {
        return Err(Error::Training(format!("invalid learning rate {} or force weight {}", cfg.lr, cfg.force_weight)));
    }
    let mut fitted = model.clone();
    let mut params = fitted.params_flat();
    let mut m = vec![0.0; params.len()];
    let mut v = vec![0.0; params.len()];
    let (b1, b2, eps): (f64, f64, f64) = (0.9, 0.999, 1e-8);
    let mut losses = Vec::with_capacity(cfg.epochs + 1);
    for epoch in 0..cfg.epochs {
        let (loss, grad) = loss_and_gradient(&fitted, samples, cfg.force_weight)?;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Training(format!("loss diverged at epoch {epoch}")));
        }
        losses.push(loss);
        match cfg.optimizer {
            Optimizer::Sgd => {
                for (p, g) in params.iter_mut().zip(&grad) {
                    *p -= cfg.lr * g;
                }
            }
            Optimizer::Adam => {
                let t = (epoch + 1) as i32;
                let (c1, c2) = (1.0 - b1.powi(t), 1.0 - b2.powi(t));
                for k in 0..params.len() {
                    m[k] = b1 * m[k] + (1.0 - b1) * grad[k];
                    v[k] = b2 * v[k] + (1.0 - b2) * grad[k] * grad[k];
                    params[k] -= cfg.lr * (m[k] / c1) / ((v[k] / c2).sqrt() + eps);
                }
            }
        }
        fitted.set_params_flat(&params);
    }
    let last = training_loss(&fitted, samples, cfg.force_weight)?;
    if !last.is_finite() {
        return Err(Error::Training("final loss is not finite".into()));
    }
    losses.push(last);
    Ok((fitted, losses))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forcefield::lj_pair;
    use crate::nnpot::ModelSpec;

    fn dimer_samples(n: usize) -> Vec<TrainingSample> {
        let (sigma, eps) = (0.34, 1.0);
        let simbox = SimBox::open(Vec3::repeat(10.0)).unwrap();
        (0..n)
            .map(|k| {
                let r = sigma * (0.95 + 0.9 * k as f64 / (n - 1) as f64);
                let (e, fmag) = lj_pair(sigma, eps, r);
                let a = Vec3::repeat(5.0);
                TrainingSample {
                    positions: vec![a, a + Vec3::new(r, 0.0, 0.0)],
                    types: vec![0, 0],
                    simbox,
                    energy: e,
                    forces: Some(vec![Vec3::new(-fmag, 0.0, 0.0), Vec3::new(fmag, 0.0, 0.0)]),
                }
            })
            .collect()
    }

    fn small_model(seed: u64) -> NnModel {
        NnModel::new(&ModelSpec { hidden: 16, ..ModelSpec::embed_fit(0.8, 1, seed) }).unwrap()
    }

    #[test]
    fn zero_epochs_leave_model_unchanged() {
        let m = small_model(1);
        let cfg = TrainConfig { epochs: 0, ..Default::default() };
        let (out, losses) = fit_toy_model(&m, &dimer_samples(5), &cfg).unwrap();
        assert_eq!(out, m);
        assert_eq!(losses.len(), 1);
    }

    #[test]
    fn small_step_descent_does_not_increase_loss() {
        let m = small_model(2);
        let cfg = TrainConfig { epochs: 20, lr: 1e-4, force_weight: 0.0, optimizer: Optimizer::Sgd };
        let (_, losses) = fit_toy_model(&m, &dimer_samples(8), &cfg).unwrap();
        assert!(losses.windows(2).all(|w| w[1] <= w[0]), "{losses:?}");
    }

    #[test]
    fn force_loss_gradient_matches_finite_difference() {
        let m = small_model(3);
        let samples = dimer_samples(3);
        let w = 0.01;
        let (_, grad) = loss_and_gradient(&m, &samples, w).unwrap();
        let p = m.params_flat();
        let h = 1e-6;
        for k in (0..p.len()).step_by(37) {
            let mut q = p.clone();
            let mut mm = m.clone();
            q[k] += h;
            mm.set_params_flat(&q);
            let lp = training_loss(&mm, &samples, w).unwrap();
            q[k] -= 2.0 * h;
            mm.set_params_flat(&q);
            let lm = training_loss(&mm, &samples, w).unwrap();
            let fd = (lp - lm) / (2.0 * h);
            assert!((fd - grad[k]).abs() < 1e-4 * (1.0 + fd.abs()), "param {k}: {fd} vs {}", grad[k]);
        }
    }

    #[test]
    fn fitting_is_deterministic() {
        let m = small_model(4);
        let samples = dimer_samples(6);
        for w in [0.0, 1e-4, 2e-4] {
            let cfg = TrainConfig { epochs: 15, force_weight: w, ..Default::default() };
            let a = fit_toy_model(&m, &samples, &cfg).unwrap();
            let b = fit_toy_model(&m, &samples, &cfg).unwrap();
            assert_eq!(a.0, b.0);
            assert_eq!(a.1, b.1);
        }
    }

    #[test]
    fn lj_dimer_curve_is_reproduced() {
        let samples = dimer_samples(20);
        let cfg = TrainConfig { epochs: 3000, lr: 3e-3, force_weight: 0.0, optimizer: Optimizer::Adam };
        let (fitted, losses) = fit_toy_model(&small_model(5), &samples, &cfg).unwrap();
        assert!(losses.last().unwrap() < &losses[0]);
        let (lo, hi) = samples.iter().fold((f64::MAX, f64::MIN), |(a, b), s| (a.min(s.energy), b.max(s.energy)));
        let span = hi - lo;
        for s in &samples {
            let inp = NnInput::new(s.positions.clone(), s.types.clone(), s.simbox, fitted.rc_model).unwrap();
            let e = evaluate(&inp, &fitted).unwrap().energy;
            assert!((e - s.energy).abs() <= 0.05 * span, "E = {e}, reference {}", s.energy);
        }
    }

    #[test]
    fn empty_reference_set_is_rejected() {
        assert!(matches!(fit_toy_model(&small_model(1), &[], &TrainConfig::default()), Err(Error::Training(_))));
    }
}
