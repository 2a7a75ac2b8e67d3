//! Small fully connected network: ReLU hidden layers, linear output.
//!
//! Parameters live in one flat vector (per layer: row-major weights
//! `out x in`, then biases) so that optimizers, soft updates and the
//! checkpoint format all work on plain slices.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use thiserror::Error;

use crate::scalar::Real;

const CHECKPOINT_HEADER: &str = "sfcmig-mlp v1";

#[derive(Debug, Error)]
pub enum NnError {
    #[error("input has length {got}, network expects {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("network needs at least an input and an output layer")]
    Shape,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<S: Real = f64> {
    sizes: Vec<usize>,
    params: Vec<S>,
}

impl<S: Real> Mlp<S> {
    /// All-zero network with the given layer sizes (input first).
    pub fn zeros(sizes: &[usize]) -> Result<Self, NnError> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(NnError::Shape);
        }
        let n = sizes.windows(2).map(|w| w[1] * (w[0] + 1)).sum();
        Ok(Self { sizes: sizes.to_vec(), params: vec![S::zero(); n] })
    }

    /// He-uniform weights `U(-sqrt(6/fan_in), sqrt(6/fan_in))`, zero biases.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self, NnError> {
        let mut net = Self::zeros(sizes)?;
        let mut off = 0;
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = (6.0 / fan_in as f64).sqrt();
            for p in &mut net.params[off..off + fan_in * fan_out] {
                *p = S::lit(rng.gen_range(-bound..bound));
            }
            off += fan_out * (fan_in + 1);
        }
        Ok(net)
    }

    /// Builds a network from explicit `(weights, biases)` per layer.
    pub fn from_layers(sizes: &[usize], layers: &[(Vec<S>, Vec<S>)]) -> Result<Self, NnError> {
        let mut net = Self::zeros(sizes)?;
        if layers.len() != sizes.len() - 1 {
            return Err(NnError::Shape);
        }
        let mut params = Vec::with_capacity(net.params.len());
        for (w, (weights, biases)) in sizes.windows(2).zip(layers) {
            if weights.len() != w[0] * w[1] || biases.len() != w[1] {
                return Err(NnError::Shape);
            }
            params.extend_from_slice(weights);
            params.extend_from_slice(biases);
        }
        net.params = params;
        Ok(net)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn params(&self) -> &[S] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [S] {
        &mut self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    /// `θ ← τ θ_src + (1 - τ) θ`.
    pub fn soft_update_from(&mut self, src: &Self, tau: S) {
        assert_eq!(self.sizes, src.sizes, "architectures differ");
        let keep = S::one() - tau;
        for (p, &q) in self.params.iter_mut().zip(&src.params) {
            *p = tau * q + keep * *p;
        }
    }

    fn check_input(&self, x: &[S]) -> Result<(), NnError> {
        if x.len() != self.input_dim() {
            return Err(NnError::Dimension { expected: self.input_dim(), got: x.len() });
        }
        Ok(())
    }

    /// Activations of every layer, input included; hidden layers post-ReLU.
    fn activations(&self, x: &[S]) -> Vec<Vec<S>> {
        let n_layers = self.sizes.len() - 1;
        let mut acts = Vec::with_capacity(n_layers + 1);
        acts.push(x.to_vec());
        let mut off = 0;
        for (l, w) in self.sizes.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            let weights = &self.params[off..off + n_in * n_out];
            let biases = &self.params[off + n_in * n_out..off + n_out * (n_in + 1)];
            let input = &acts[l];
            let mut out = Vec::with_capacity(n_out);
            for j in 0..n_out {
                let row = &weights[j * n_in..(j + 1) * n_in];
                let mut z = biases[j];
                for (a, b) in row.iter().zip(input) {
                    z += *a * *b;
                }
                out.push(if l + 1 < n_layers { z.max(S::zero()) } else { z });
            }
            acts.push(out);
            off += n_out * (n_in + 1);
        }
        acts
    }

    pub fn forward(&self, x: &[S]) -> Result<Vec<S>, NnError> {
        self.check_input(x)?;
        Ok(self.activations(x).pop().unwrap())
    }

    /// Accumulates `∂L/∂θ` into `grad` for one sample, given `∂L/∂output`
    /// as a function of the output.
    fn backward_into(&self, x: &[S], grad: &mut [S], d_out: impl FnOnce(&[S]) -> Vec<S>) -> Vec<S> {
        let acts = self.activations(x);
        let output = acts.last().unwrap().clone();
        let mut delta = d_out(&output);
        let n_layers = self.sizes.len() - 1;
        let offsets: Vec<usize> = self
            .sizes
            .windows(2)
            .scan(0, |off, w| {
                let here = *off;
                *off += w[1] * (w[0] + 1);
                Some(here)
            })
            .collect();
        for l in (0..n_layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let off = offsets[l];
            let input = &acts[l];
            for j in 0..n_out {
                let d = delta[j];
                if d == S::zero() {
                    continue;
                }
                let row = &mut grad[off + j * n_in..off + (j + 1) * n_in];
                for (g, a) in row.iter_mut().zip(input) {
                    *g += d * *a;
                }
                grad[off + n_in * n_out + j] += d;
            }
            if l > 0 {
                let weights = &self.params[off..off + n_in * n_out];
                let mut prev = vec![S::zero(); n_in];
                for j in 0..n_out {
                    let d = delta[j];
                    if d == S::zero() {
                        continue;
                    }
                    for (p, w) in prev.iter_mut().zip(&weights[j * n_in..(j + 1) * n_in]) {
                        *p += d * *w;
                    }
                }
                // ReLU derivative, 0 at the kink
                for (p, a) in prev.iter_mut().zip(input) {
                    if *a <= S::zero() {
                        *p = S::zero();
                    }
                }
                delta = prev;
            }
        }
        output
    }

    /// Mean squared error over the outputs, `mean_k (y_k - t_k)^2`, and its
    /// gradient.
    pub fn mse_loss_grad(&self, x: &[S], target: &[S]) -> Result<(S, Vec<S>), NnError> {
        self.check_input(x)?;
        if target.len() != self.output_dim() {
            return Err(NnError::Dimension { expected: self.output_dim(), got: target.len() });
        }
        let k = S::from_count(target.len());
        let two = S::lit(2.0);
        let mut grad = vec![S::zero(); self.params.len()];
        let out = self.backward_into(x, &mut grad, |y| y.iter().zip(target).map(|(a, t)| two * (*a - *t) / k).collect());
        let loss = out.iter().zip(target).map(|(a, t)| (*a - *t) * (*a - *t)).sum::<S>() / k;
        Ok((loss, grad))
    }

    /// TD regression loss `mean_b (Q(s_b, a_b) - y_b)^2` over a batch of
    /// `(input, action, target)` triples, and its gradient.
    pub fn td_loss_grad(&self, batch: &[(&[S], usize, S)]) -> Result<(S, Vec<S>), NnError> {
        let n = S::from_count(batch.len().max(1));
        let two = S::lit(2.0);
        let mut grad = vec![S::zero(); self.params.len()];
        let mut loss = S::zero();
        for &(x, a, y) in batch {
            self.check_input(x)?;
            let out = self.backward_into(x, &mut grad, |q| {
                let mut d = vec![S::zero(); q.len()];
                d[a] = two * (q[a] - y) / n;
                d
            });
            loss += (out[a] - y) * (out[a] - y);
        }
        Ok((loss / n, grad))
    }

    /// Writes the checkpoint text: header, layer sizes, then one parameter
    /// per line in shortest round-trip form.
    pub fn to_checkpoint(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{CHECKPOINT_HEADER}");
        let sizes: Vec<String> = self.sizes.iter().map(|s| s.to_string()).collect();
        let _ = writeln!(out, "sizes {}", sizes.join(" "));
        for p in &self.params {
            let _ = writeln!(out, "{p}");
        }
        out
    }

    pub fn from_checkpoint(text: &str) -> Result<Self, NnError> {
        let bad = |m: &str| NnError::Checkpoint(m.to_string());
        let mut lines = text.lines();
        if lines.next() != Some(CHECKPOINT_HEADER) {
            return Err(bad("missing or unsupported header"));
        }
        let sizes_line = lines.next().ok_or_else(|| bad("missing sizes"))?;
        let sizes: Vec<usize> = sizes_line
            .strip_prefix("sizes ")
            .ok_or_else(|| bad("missing sizes"))?
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| bad("invalid layer size")))
            .collect::<Result<_, _>>()?;
        let mut net = Self::zeros(&sizes).map_err(|_| bad("invalid layer sizes"))?;
        let params: Vec<S> = lines
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.trim().parse::<S>().map_err(|_| bad("invalid parameter")))
            .collect::<Result<_, _>>()?;
        if params.len() != net.params.len() {
            return Err(NnError::Checkpoint(format!("expected {} parameters, found {}", net.params.len(), params.len())));
        }
        net.params = params;
        Ok(net)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), NnError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_checkpoint()).map_err(|source| NnError::Io { path: path.display().to_string(), source })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, NnError> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|source| NnError::Io { path: path.display().to_string(), source })?;
        Self::from_checkpoint(&text)
    }
}

/// Update rule applied to a flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Momentum,
    Adam,
}

#[derive(Debug, Clone)]
pub struct Optimizer<S: Real = f64> {
    kind: OptimizerKind,
    lr: S,
    momentum: S,
    m: Vec<S>,
    v: Vec<S>,
    t: i32,
}

impl<S: Real> Optimizer<S> {
    pub fn new(kind: OptimizerKind, lr: f64, momentum: f64, n_params: usize) -> Self {
        let (m, v) = match kind {
            OptimizerKind::Sgd => (Vec::new(), Vec::new()),
            OptimizerKind::Momentum => (vec![S::zero(); n_params], Vec::new()),
            OptimizerKind::Adam => (vec![S::zero(); n_params], vec![S::zero(); n_params]),
        };
        Self { kind, lr: S::lit(lr), momentum: S::lit(momentum), m, v, t: 0 }
    }

    pub fn step(&mut self, params: &mut [S], grad: &[S]) {
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= self.lr * *g;
                }
            }
            OptimizerKind::Momentum => {
                for ((p, g), m) in params.iter_mut().zip(grad).zip(&mut self.m) {
                    *m = self.momentum * *m + *g;
                    *p -= self.lr * *m;
                }
            }
            OptimizerKind::Adam => {
                let (b1, b2, eps) = (S::lit(0.9), S::lit(0.999), S::lit(1e-8));
                self.t += 1;
                let c1 = S::one() - b1.powi(self.t);
                let c2 = S::one() - b2.powi(self.t);
                for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
                    *m = b1 * *m + (S::one() - b1) * *g;
                    *v = b2 * *v + (S::one() - b2) * *g * *g;
                    *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                }
            }
        }
    }
}

/// Central-difference step used by [`gradient_check`].
pub const GRAD_CHECK_STEP: f64 = 1e-5;
const GRAD_CHECK_FLOOR: f64 = 1e-8;

/// Largest relative error between `analytic` and central finite differences
/// of the MSE loss at `(x, target)`. Pairs where both magnitudes are below
/// `1e-8` count as exact.
pub fn gradient_check_against<S: Real>(net: &Mlp<S>, x: &[S], target: &[S], analytic: &[S]) -> Result<f64, NnError> {
    let h = S::lit(GRAD_CHECK_STEP);
    let mut probe = net.clone();
    let mut worst = 0.0f64;
    for k in 0..net.n_params() {
        let orig = net.params[k];
        probe.params[k] = orig + h;
        let (up, _) = probe.mse_loss_grad(x, target)?;
        probe.params[k] = orig - h;
        let (down, _) = probe.mse_loss_grad(x, target)?;
        probe.params[k] = orig;
        let numeric = ((up - down) / (h + h)).as_f64();
        let a = analytic[k].as_f64();
        let scale = a.abs().max(numeric.abs());
        if scale < GRAD_CHECK_FLOOR {
            continue;
        }
        worst = worst.max((a - numeric).abs() / scale);
    }
    Ok(worst)
}

/// Backprop gradient checked against finite differences.
pub fn gradient_check<S: Real>(net: &Mlp<S>, x: &[S], target: &[S]) -> Result<f64, NnError> {
    let (_, grad) = net.mse_loss_grad(x, target)?;
    gradient_check_against(net, x, target, &grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_weights_zero_output() {
        let net = Mlp::<f64>::zeros(&[3, 4, 2]).unwrap();
        assert_eq!(net.forward(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn two_by_two_fixture() {
        // W = [[1, 2], [0, -1]], b = [0.5, 0]: x = [3, 4] -> [11.5, -4]
        let net = Mlp::from_layers(&[2, 2], &[(vec![1.0, 2.0, 0.0, -1.0], vec![0.5, 0.0])]).unwrap();
        assert_eq!(net.forward(&[3.0, 4.0]).unwrap(), vec![11.5, -4.0]);
    }

    #[test]
    fn hidden_relu_clips() {
        // hidden = relu([x, -x]), out = h0 + h1 = |x|
        let net = Mlp::from_layers(&[1, 2, 1], &[(vec![1.0, -1.0], vec![0.0, 0.0]), (vec![1.0, 1.0], vec![0.0])])
            .unwrap();
        assert_eq!(net.forward(&[-3.0]).unwrap(), vec![3.0]);
        assert_eq!(net.forward(&[2.0]).unwrap(), vec![2.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let net = Mlp::<f64>::zeros(&[3, 2]).unwrap();
        assert!(matches!(net.forward(&[1.0]), Err(NnError::Dimension { expected: 3, got: 1 })));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let net = Mlp::<f64>::new(&[4, 6, 5, 3], &mut rng).unwrap();
        let x = [0.3, -0.7, 0.1, 0.9];
        let t = [1.0, -0.5, 0.2];
        assert!(gradient_check(&net, &x, &t).unwrap() < 1e-4);
    }

    #[test]
    fn corrupted_gradient_detected() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let net = Mlp::<f64>::new(&[4, 6, 3], &mut rng).unwrap();
        let (x, t) = ([0.3, -0.7, 0.1, 0.9], [1.0, -0.5, 0.2]);
        let (_, mut grad) = net.mse_loss_grad(&x, &t).unwrap();
        let k = grad.iter().position(|g| g.abs() > 1e-3).unwrap();
        grad[k] *= 1.5;
        assert!(gradient_check_against(&net, &x, &t, &grad).unwrap() > 1e-2);
    }

    #[test]
    fn zero_loss_point_checks_exact() {
        let net = Mlp::<f64>::zeros(&[2, 3, 2]).unwrap();
        assert_eq!(gradient_check(&net, &[1.0, 2.0], &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn td_loss_single_transition() {
        let net = Mlp::<f64>::zeros(&[2, 3]).unwrap();
        let x = [1.0, 1.0];
        let (loss, grad) = net.td_loss_grad(&[(&x, 1, -2.0)]).unwrap();
        assert_eq!(loss, 4.0);
        // only the bias and weights of output 1 move
        assert_eq!(grad.iter().filter(|g| **g != 0.0).count(), 3);
    }

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Mlp::<f64>::new(&[3, 5, 2], &mut rng).unwrap();
        let back = Mlp::<f64>::from_checkpoint(&net.to_checkpoint()).unwrap();
        assert_eq!(back, net);
        let x = [0.1, 0.2, -0.3];
        assert_eq!(back.forward(&x).unwrap(), net.forward(&x).unwrap());
        let net32 = Mlp::<f32>::new(&[3, 4, 2], &mut rng).unwrap();
        assert_eq!(Mlp::<f32>::from_checkpoint(&net32.to_checkpoint()).unwrap(), net32);
    }

    #[test]
    fn checkpoint_rejects_garbage() {
        assert!(Mlp::<f64>::from_checkpoint("nope").is_err());
        assert!(Mlp::<f64>::from_checkpoint(&format!("{CHECKPOINT_HEADER}\nsizes 2 1\n1\n")).is_err());
    }

    #[test]
    fn soft_update_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = Mlp::<f64>::new(&[2, 2], &mut rng).unwrap();
        let b = Mlp::<f64>::new(&[2, 2], &mut rng).unwrap();
        let mut t = b.clone();
        t.soft_update_from(&a, 0.0);
        assert_eq!(t, b);
        t.soft_update_from(&a, 1.0);
        assert_eq!(t, a);
    }

    #[test]
    fn sgd_reduces_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut net = Mlp::<f64>::new(&[2, 8, 1], &mut rng).unwrap();
        let mut opt = Optimizer::new(OptimizerKind::Sgd, 0.05, 0.0, net.n_params());
        let x = [0.5, -0.5];
        let (before, _) = net.mse_loss_grad(&x, &[1.0]).unwrap();
        for _ in 0..50 {
            let (_, g) = net.mse_loss_grad(&x, &[1.0]).unwrap();
            opt.step(net.params_mut(), &g);
        }
        let (after, _) = net.mse_loss_grad(&x, &[1.0]).unwrap();
        assert!(after < before * 0.1);
    }
}
