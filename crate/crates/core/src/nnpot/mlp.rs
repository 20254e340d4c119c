use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Linear,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Linear => x,
        }
    }

    /// Derivative expressed through the activation output.
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Linear => 1.0,
        }
    }
}

/// Fully connected network with a flat parameter vector.
///
/// Layer `l` maps `sizes[l]` inputs to `sizes[l + 1]` outputs; its weights are
/// stored row-major (`out × in`) followed by the biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub sizes: Vec<usize>,
    pub activations: Vec<Activation>,
    pub params: Vec<f64>,
}

impl Mlp {
    pub fn zeros(sizes: &[usize], activations: &[Activation]) -> Self {
        assert_eq!(sizes.len(), activations.len() + 1, "one activation per layer");
        let n = Self::param_count(sizes);
        Mlp { sizes: sizes.to_vec(), activations: activations.to_vec(), params: vec![0.0; n] }
    }

    /// Uniform Glorot initialisation, biases zero.
    pub fn random<R: Rng>(sizes: &[usize], activations: &[Activation], rng: &mut R) -> Self {
        let mut mlp = Self::zeros(sizes, activations);
        let mut off = 0;
        for l in 0..mlp.n_layers() {
            let (n_in, n_out) = (sizes[l], sizes[l + 1]);
            let limit = (6.0 / (n_in + n_out) as f64).sqrt();
            for w in &mut mlp.params[off..off + n_in * n_out] {
                *w = rng.random_range(-limit..limit);
            }
            off += n_in * n_out + n_out;
        }
        mlp
    }

    pub fn param_count(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn n_layers(&self) -> usize {
        self.activations.len()
    }

    pub fn n_in(&self) -> usize {
        self.sizes[0]
    }

    pub fn n_out(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    /// Length of the activation trace kept for the backward pass.
    pub fn trace_len(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// Multiply-add count of one forward evaluation, as flops.
    pub fn forward_flops(&self) -> u64 {
        self.sizes.windows(2).map(|w| 2 * (w[0] * w[1]) as u64).sum()
    }

    pub fn is_consistent(&self) -> bool {
        self.sizes.len() == self.activations.len() + 1
            && self.sizes.iter().all(|&s| s > 0)
            && self.params.len() == Self::param_count(&self.sizes)
    }

    /// Scale the weights and bias of the output layer.
    pub fn scale_output(&mut self, factor: f64) {
        let n = self.params.len();
        let (n_in, n_out) = (self.sizes[self.sizes.len() - 2], self.n_out());
        for p in &mut self.params[n - n_in * n_out - n_out..] {
            *p *= factor;
        }
    }

    /// Set the output-layer bias to `value` for every output.
    pub fn set_output_bias(&mut self, value: f64) {
        let n = self.params.len();
        let n_out = self.n_out();
        self.params[n - n_out..].iter_mut().for_each(|b| *b = value);
    }

    /// Evaluate on `x`, recording every layer's input and output in `trace`.
    /// The network output is the tail `trace[trace_len - n_out..]`.
    pub fn forward(&self, x: &[f64], trace: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_in());
        debug_assert_eq!(trace.len(), self.trace_len());
        trace[..x.len()].copy_from_slice(x);
        let mut p_off = 0;
        let mut t_off = 0;
        for (l, act) in self.activations.iter().enumerate() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let (head, tail) = trace.split_at_mut(t_off + n_in);
            let input = &head[t_off..];
            let w = &self.params[p_off..p_off + n_in * n_out];
            let b = &self.params[p_off + n_in * n_out..p_off + n_in * n_out + n_out];
            for o in 0..n_out {
                let row = &w[o * n_in..(o + 1) * n_in];
                let z = row.iter().zip(input).fold(b[o], |acc, (wi, xi)| acc + wi * xi);
                tail[o] = act.apply(z);
            }
            p_off += n_in * n_out + n_out;
            t_off += n_in;
        }
    }

    pub fn output<'a>(&self, trace: &'a [f64]) -> &'a [f64] {
        &trace[trace.len() - self.n_out()..]
    }

    /// Propagate `grad_out` back through a recorded evaluation. Writes the
    /// input gradient into `grad_in` and, when given, adds parameter
    /// gradients into `param_grad`.
    pub fn backward(&self, trace: &[f64], grad_out: &[f64], grad_in: &mut [f64], mut param_grad: Option<&mut [f64]>) {
        let mut delta: Vec<f64> = grad_out.to_vec();
        let mut p_end = self.params.len();
        let mut t_end = trace.len();
        for l in (0..self.n_layers()).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let y = &trace[t_end - n_out..t_end];
            let x = &trace[t_end - n_out - n_in..t_end - n_out];
            let act = self.activations[l];
            for (d, &yo) in delta.iter_mut().zip(y) {
                *d *= act.derivative_from_output(yo);
            }
            let p_start = p_end - n_in * n_out - n_out;
            let w = &self.params[p_start..p_start + n_in * n_out];
            if let Some(g) = param_grad.as_deref_mut() {
                let (gw, gb) = g[p_start..p_end].split_at_mut(n_in * n_out);
                for o in 0..n_out {
                    let d = delta[o];
                    gb[o] += d;
                    for (gwi, xi) in gw[o * n_in..(o + 1) * n_in].iter_mut().zip(x) {
                        *gwi += d * xi;
                    }
                }
            }
            let mut next = vec![0.0; n_in];
            for o in 0..n_out {
                let d = delta[o];
                if d != 0.0 {
                    for (ni, wi) in next.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                        *ni += wi * d;
                    }
                }
            }
            delta = next;
            p_end = p_start;
            t_end -= n_out;
        }
        grad_in.copy_from_slice(&delta);
    }
}
