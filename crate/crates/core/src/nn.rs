//! Feedforward Gaussian policy with hand-written backpropagation.
//!
//! Each hidden block is affine → layer norm (learned gain and bias) → ReLU.
//! The head is affine and emits `2·action_dim` numbers: the action means
//! followed by the log-variances of a diagonal Gaussian. Log-variances are
//! clamped to `[-10, 10]`.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::numerics::Rng;

pub const LOG_VAR_MIN: f64 = -10.0;
pub const LOG_VAR_MAX: f64 = 10.0;
pub const LAYER_NORM_EPS: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub state_dim: usize,
    pub action_dim: usize,
    pub hidden: Vec<usize>,
}

impl Architecture {
    /// Five hidden layers of 100 units.
    pub fn new(state_dim: usize, action_dim: usize) -> Self {
        Self::with_hidden(state_dim, action_dim, vec![100; 5])
    }

    pub fn with_hidden(state_dim: usize, action_dim: usize, hidden: Vec<usize>) -> Self {
        Self {
            state_dim,
            action_dim,
            hidden,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.state_dim == 0 || self.action_dim == 0 {
            return Err(Error::config("architecture", "state and action dims must be positive"));
        }
        if self.hidden.contains(&0) {
            return Err(Error::config("architecture.hidden", "layer widths must be positive"));
        }
        Ok(())
    }

    /// `(name, len)` of every parameter tensor, in storage order.
    pub fn tensor_shapes(&self) -> Vec<(String, usize)> {
        let mut shapes = Vec::new();
        let mut fan_in = self.state_dim;
        for (i, &width) in self.hidden.iter().enumerate() {
            shapes.push((format!("hidden.{i}.weight"), width * fan_in));
            shapes.push((format!("hidden.{i}.bias"), width));
            shapes.push((format!("hidden.{i}.ln_gain"), width));
            shapes.push((format!("hidden.{i}.ln_bias"), width));
            fan_in = width;
        }
        let out = 2 * self.action_dim;
        shapes.push(("head.weight".to_string(), out * fan_in));
        shapes.push(("head.bias".to_string(), out));
        shapes
    }

    pub fn parameter_count(&self) -> usize {
        self.tensor_shapes().iter().map(|(_, n)| n).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub name: String,
    pub data: Vec<f64>,
}

impl AsMut<Vec<f64>> for Tensor {
    fn as_mut(&mut self) -> &mut Vec<f64> {
        &mut self.data
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPolicyOutput {
    pub mean: Vec<f64>,
    pub log_var: Vec<f64>,
}

/// Negative log-likelihood of `action` under a diagonal Gaussian.
pub fn nll_loss(out: &GaussianPolicyOutput, action: &[f64]) -> Result<f64> {
    check_len("nll_loss", out.mean.len(), action.len())?;
    check_len("nll_loss log_var", out.mean.len(), out.log_var.len())?;
    let mut total = 0.0;
    for ((&mu, &lv), &a) in out.mean.iter().zip(&out.log_var).zip(action) {
        if !(mu.is_finite() && lv.is_finite() && a.is_finite()) {
            return Err(Error::Numeric(format!("nll_loss inputs mean={mu} log_var={lv} action={a}")));
        }
        let r = a - mu;
        total += 0.5 * ((2.0 * PI).ln() + lv + r * r * (-lv).exp());
    }
    Ok(total)
}

/// Normalizes `x` to zero mean and unit variance; returns `1/√(var + eps)`.
pub fn layer_norm(x: &mut [f64], eps: f64) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let inv_std = 1.0 / (var + eps).sqrt();
    for v in x.iter_mut() {
        *v = (*v - mean) * inv_std;
    }
    inv_std
}

/// Gradients of the batch-mean NLL, aligned with [`PolicyNet::tensors`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.values[i].as_slice())
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyNet {
    arch: Architecture,
    tensors: Vec<Tensor>,
}

// Per-layer activations kept for the backward pass.
#[derive(Debug, Default, Clone)]
struct LayerCache {
    input: Vec<f64>,
    normed: Vec<f64>,
    inv_std: f64,
    pre_relu: Vec<f64>,
}

#[derive(Debug, Default, Clone)]
struct Trace {
    layers: Vec<LayerCache>,
    last_hidden: Vec<f64>,
    head_out: Vec<f64>,
}

impl PolicyNet {
    /// Uniform `±1/√fan_in` initialization for affine weights and biases,
    /// unit gains and zero shifts for layer norm.
    pub fn new(arch: Architecture, rng: &mut Rng) -> Result<Self> {
        arch.validate()?;
        let mut tensors = Vec::new();
        let mut fan_in = arch.state_dim;
        let init_affine = |name: String, rows: usize, cols: usize, rng: &mut Rng| {
            let bound = 1.0 / (cols as f64).sqrt();
            let w = (0..rows * cols).map(|_| rng.uniform_range(-bound, bound)).collect();
            let b = (0..rows).map(|_| rng.uniform_range(-bound, bound)).collect();
            [
                Tensor {
                    name: format!("{name}.weight"),
                    data: w,
                },
                Tensor {
                    name: format!("{name}.bias"),
                    data: b,
                },
            ]
        };
        for (i, &width) in arch.hidden.iter().enumerate() {
            tensors.extend(init_affine(format!("hidden.{i}"), width, fan_in, rng));
            tensors.push(Tensor {
                name: format!("hidden.{i}.ln_gain"),
                data: vec![1.0; width],
            });
            tensors.push(Tensor {
                name: format!("hidden.{i}.ln_bias"),
                data: vec![0.0; width],
            });
            fan_in = width;
        }
        tensors.extend(init_affine("head".to_string(), 2 * arch.action_dim, fan_in, rng));
        Ok(Self { arch, tensors })
    }

    /// Rebuild from explicit tensors (checked against the architecture).
    pub fn from_tensors(arch: Architecture, tensors: Vec<Tensor>) -> Result<Self> {
        arch.validate()?;
        let shapes = arch.tensor_shapes();
        check_len("PolicyNet::from_tensors count", shapes.len(), tensors.len())?;
        for ((name, len), t) in shapes.iter().zip(&tensors) {
            if &t.name != name {
                return Err(Error::Precondition(format!(
                    "expected tensor `{name}`, found `{}`",
                    t.name
                )));
            }
            check_len("PolicyNet::from_tensors tensor", *len, t.data.len())?;
        }
        Ok(Self { arch, tensors })
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors.iter().map(|t| t.data.len()).sum()
    }

    /// Zeroes the head so every input maps to mean 0, log-variance 0.
    pub fn zero_head(&mut self) {
        let n = self.tensors.len();
        for t in &mut self.tensors[n - 2..] {
            t.data.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    /// Flat copy of all parameters in storage order.
    pub fn flat_params(&self) -> Vec<f64> {
        self.tensors.iter().flat_map(|t| t.data.iter().copied()).collect()
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        check_len("PolicyNet::set_flat_params", self.parameter_count(), flat.len())?;
        let mut offset = 0;
        for t in &mut self.tensors {
            let n = t.data.len();
            t.data.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    pub fn forward(&self, state: &[f64]) -> Result<GaussianPolicyOutput> {
        let mut trace = Trace::default();
        self.forward_traced(state, &mut trace)?;
        Ok(self.split_head(&trace.head_out))
    }

    fn split_head(&self, head: &[f64]) -> GaussianPolicyOutput {
        let a = self.arch.action_dim;
        GaussianPolicyOutput {
            mean: head[..a].to_vec(),
            log_var: head[a..]
                .iter()
                .map(|v| v.clamp(LOG_VAR_MIN, LOG_VAR_MAX))
                .collect(),
        }
    }

    fn forward_traced(&self, state: &[f64], trace: &mut Trace) -> Result<()> {
        check_len("PolicyNet::forward", self.arch.state_dim, state.len())?;
        if state.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite state".into()));
        }
        let depth = self.arch.hidden.len();
        trace.layers.resize_with(depth, LayerCache::default);
        let mut x = state.to_vec();
        for (i, &width) in self.arch.hidden.iter().enumerate() {
            let [w, b, gain, shift] = &self.tensors[4 * i..4 * i + 4] else {
                unreachable!("four tensors per hidden layer")
            };
            let cache = &mut trace.layers[i];
            cache.normed.resize(width, 0.0);
            affine(&w.data, &b.data, &x, &mut cache.normed);
            cache.inv_std = layer_norm(&mut cache.normed, LAYER_NORM_EPS);
            cache.pre_relu.clear();
            cache.pre_relu.extend(
                cache
                    .normed
                    .iter()
                    .zip(&gain.data)
                    .zip(&shift.data)
                    .map(|((n, g), s)| g * n + s),
            );
            cache.input = std::mem::take(&mut x);
            x = cache.pre_relu.iter().map(|v| v.max(0.0)).collect();
        }
        let head_w = &self.tensors[4 * depth];
        let head_b = &self.tensors[4 * depth + 1];
        trace.head_out.resize(2 * self.arch.action_dim, 0.0);
        affine(&head_w.data, &head_b.data, &x, &mut trace.head_out);
        trace.last_hidden = x;
        Ok(())
    }

    /// Mean NLL over `(state, action)` pairs, without gradients.
    pub fn mean_nll<'a, I>(&self, pairs: I) -> Result<f64>
    where
        I: IntoIterator<Item = (&'a [f64], &'a [f64])>,
    {
        let mut total = 0.0;
        let mut n = 0usize;
        for (s, a) in pairs {
            total += nll_loss(&self.forward(s)?, a)?;
            n += 1;
        }
        if n == 0 {
            return Err(Error::Precondition("mean_nll over an empty set".into()));
        }
        Ok(total / n as f64)
    }

    /// Batch-mean NLL and its gradient with respect to every parameter.
    pub fn backward(&self, batch: &[(&[f64], &[f64])]) -> Result<(f64, Gradients)> {
        if batch.is_empty() {
            return Err(Error::Precondition("backward needs a non-empty batch".into()));
        }
        let scale = 1.0 / batch.len() as f64;
        let mut grads: Vec<Vec<f64>> = self.tensors.iter().map(|t| vec![0.0; t.data.len()]).collect();
        let mut trace = Trace::default();
        let a_dim = self.arch.action_dim;
        let depth = self.arch.hidden.len();
        let mut loss = 0.0;
        let mut d_head = vec![0.0; 2 * a_dim];

        for &(state, action) in batch {
            check_len("PolicyNet::backward action", a_dim, action.len())?;
            self.forward_traced(state, &mut trace)?;
            let out = self.split_head(&trace.head_out);
            loss += nll_loss(&out, action)?;

            for j in 0..a_dim {
                let lv = out.log_var[j];
                let inv_var = (-lv).exp();
                let r = action[j] - out.mean[j];
                d_head[j] = -r * inv_var * scale;
                let raw = trace.head_out[a_dim + j];
                d_head[a_dim + j] = if (LOG_VAR_MIN..=LOG_VAR_MAX).contains(&raw) {
                    0.5 * (1.0 - r * r * inv_var) * scale
                } else {
                    0.0
                };
            }

            let (head_w_grad, rest) = grads[4 * depth..].split_first_mut().expect("head tensors");
            accumulate_outer(head_w_grad, &d_head, &trace.last_hidden);
            add_into(&mut rest[0], &d_head);
            let mut d_x = matvec_transposed(&self.tensors[4 * depth].data, &d_head, trace.last_hidden.len());

            for i in (0..depth).rev() {
                let cache = &trace.layers[i];
                let gain = &self.tensors[4 * i + 2].data;
                let width = gain.len();
                // through ReLU
                let d_pre: Vec<f64> = d_x
                    .iter()
                    .zip(&cache.pre_relu)
                    .map(|(d, p)| if *p > 0.0 { *d } else { 0.0 })
                    .collect();
                let d_normed: Vec<f64> = d_pre.iter().zip(gain).map(|(d, g)| d * g).collect();
                {
                    let layer_grads = &mut grads[4 * i..4 * i + 4];
                    for k in 0..width {
                        layer_grads[2][k] += d_pre[k] * cache.normed[k];
                        layer_grads[3][k] += d_pre[k];
                    }
                }
                // through layer norm
                let n = width as f64;
                let mean_d = d_normed.iter().sum::<f64>() / n;
                let mean_dx = d_normed
                    .iter()
                    .zip(&cache.normed)
                    .map(|(d, x)| d * x)
                    .sum::<f64>()
                    / n;
                let d_affine: Vec<f64> = d_normed
                    .iter()
                    .zip(&cache.normed)
                    .map(|(d, x)| cache.inv_std * (d - mean_d - x * mean_dx))
                    .collect();
                let (w_grad, rest) = grads[4 * i..].split_first_mut().expect("layer tensors");
                accumulate_outer(w_grad, &d_affine, &cache.input);
                add_into(&mut rest[0], &d_affine);
                if i > 0 {
                    d_x = matvec_transposed(&self.tensors[4 * i].data, &d_affine, cache.input.len());
                }
            }
        }

        Ok((
            loss * scale,
            Gradients {
                names: self.tensors.iter().map(|t| t.name.clone()).collect(),
                values: grads,
            },
        ))
    }

    pub fn snapshot(&self) -> ModelSnapshot {
        ModelSnapshot {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            arch: self.arch.clone(),
            tensors: self.tensors.clone(),
        }
    }

    pub fn from_snapshot(snapshot: ModelSnapshot) -> Result<Self> {
        if snapshot.format != MODEL_FORMAT || snapshot.version != MODEL_VERSION {
            return Err(Error::Parse {
                what: "model snapshot",
                line: 1,
                reason: format!("unsupported format {} v{}", snapshot.format, snapshot.version),
            });
        }
        Self::from_tensors(snapshot.arch, snapshot.tensors)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(&self.snapshot())?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_snapshot(serde_json::from_str(&text)?)
    }
}

pub const MODEL_FORMAT: &str = "robust-bc/policy";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSnapshot {
    pub format: String,
    pub version: u32,
    pub arch: Architecture,
    pub tensors: Vec<Tensor>,
}

/// `out = W·x + b` with `W` row-major `out.len() × x.len()`.
fn affine(w: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
    let cols = x.len();
    for (r, o) in out.iter_mut().enumerate() {
        let row = &w[r * cols..(r + 1) * cols];
        *o = b[r] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

fn matvec_transposed(w: &[f64], d: &[f64], cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; cols];
    for (r, &dr) in d.iter().enumerate() {
        if dr == 0.0 {
            continue;
        }
        for (o, &wv) in out.iter_mut().zip(&w[r * cols..(r + 1) * cols]) {
            *o += wv * dr;
        }
    }
    out
}

fn accumulate_outer(acc: &mut [f64], d: &[f64], x: &[f64]) {
    let cols = x.len();
    for (r, &dr) in d.iter().enumerate() {
        if dr == 0.0 {
            continue;
        }
        for (a, &xv) in acc[r * cols..(r + 1) * cols].iter_mut().zip(x) {
            *a += dr * xv;
        }
    }
}

fn add_into(acc: &mut [f64], d: &[f64]) {
    for (a, v) in acc.iter_mut().zip(d) {
        *a += v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{finite_difference_gradient, DEFAULT_FD_STEP};

    fn small_net(seed: u64) -> PolicyNet {
        let mut rng = Rng::new(seed);
        PolicyNet::new(Architecture::with_hidden(3, 2, vec![8, 8]), &mut rng).unwrap()
    }

    fn random_batch(rng: &mut Rng, n: usize, s: usize, a: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
        (0..n)
            .map(|_| {
                (
                    (0..s).map(|_| rng.standard_normal()).collect(),
                    (0..a).map(|_| rng.standard_normal()).collect(),
                )
            })
            .collect()
    }

    fn as_refs(batch: &[(Vec<f64>, Vec<f64>)]) -> Vec<(&[f64], &[f64])> {
        batch.iter().map(|(s, a)| (s.as_slice(), a.as_slice())).collect()
    }

    #[test]
    fn default_architecture_counts() {
        let arch = Architecture::new(9, 2);
        let expected = (100 * 9 + 300) + 4 * (100 * 100 + 300) + (4 * 100 + 4);
        assert_eq!(arch.parameter_count(), expected);
        let net = PolicyNet::new(arch.clone(), &mut Rng::new(0)).unwrap();
        assert_eq!(net.parameter_count(), expected);
        assert_eq!(net.tensors().len(), 5 * 4 + 2);
    }

    #[test]
    fn zero_head_outputs_standard_gaussian() {
        let mut net = small_net(1);
        net.zero_head();
        let mut rng = Rng::new(2);
        for _ in 0..5 {
            let s: Vec<f64> = (0..3).map(|_| rng.standard_normal()).collect();
            let out = net.forward(&s).unwrap();
            assert_eq!(out.mean, vec![0.0; 2]);
            assert_eq!(out.log_var, vec![0.0; 2]);
        }
    }

    #[test]
    fn forward_is_pure_and_checks_input() {
        let net = small_net(3);
        let s = [0.3, -1.0, 2.0];
        assert_eq!(net.forward(&s).unwrap(), net.forward(&s).unwrap());
        assert!(matches!(net.forward(&[0.0; 2]), Err(Error::Shape { .. })));
        assert!(matches!(net.forward(&[0.0, f64::NAN, 1.0]), Err(Error::Numeric(_))));
    }

    #[test]
    fn layer_norm_constant_and_shift_invariance() {
        let mut c = vec![2.5; 6];
        layer_norm(&mut c, LAYER_NORM_EPS);
        assert!(c.iter().all(|v| *v == 0.0));

        let base = vec![0.1, -2.0, 3.3, 0.7, 1.1];
        let mut a = base.clone();
        let mut b: Vec<f64> = base.iter().map(|v| v + 17.0).collect();
        layer_norm(&mut a, LAYER_NORM_EPS);
        layer_norm(&mut b, LAYER_NORM_EPS);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn nll_examples() {
        let half_log_2pi = 0.5 * (2.0 * PI).ln();
        let out = GaussianPolicyOutput {
            mean: vec![0.4, -1.0, 2.0],
            log_var: vec![0.0; 3],
        };
        let nll = nll_loss(&out, &[0.4, -1.0, 2.0]).unwrap();
        assert!((nll - 3.0 * half_log_2pi).abs() < 1e-12);
        assert!((half_log_2pi - 0.918938533204673).abs() < 1e-12);

        let one = GaussianPolicyOutput {
            mean: vec![0.0],
            log_var: vec![0.0],
        };
        assert!((nll_loss(&one, &[1.0]).unwrap() - 1.418938533204673).abs() < 1e-12);

        // unbounded below as the variance collapses onto the target
        let sharp = |lv: f64| {
            nll_loss(
                &GaussianPolicyOutput {
                    mean: vec![1.0],
                    log_var: vec![lv],
                },
                &[1.0],
            )
            .unwrap()
        };
        assert!(sharp(-50.0) < sharp(-10.0) && sharp(-10.0) < sharp(0.0));
        assert!(nll_loss(&one, &[f64::INFINITY]).is_err());
    }

    fn gradient_check(seed: u64) -> f64 {
        let mut net = small_net(seed);
        let mut rng = Rng::new(seed + 1000);
        let batch = random_batch(&mut rng, 4, 3, 2);
        let refs = as_refs(&batch);
        let (_, analytic) = net.backward(&refs).unwrap();
        let flat_analytic: Vec<f64> = analytic.values.concat();
        let theta = net.flat_params();
        let fd = finite_difference_gradient(
            |p| {
                net.set_flat_params(p).unwrap();
                net.mean_nll(refs.iter().copied()).unwrap()
            },
            &theta,
            DEFAULT_FD_STEP,
        );
        let num = flat_analytic
            .iter()
            .zip(&fd)
            .map(|(a, f)| (a - f).abs())
            .fold(0.0, f64::max);
        let den = fd.iter().fold(0.0f64, |m, v| m.max(v.abs())) + 1e-8;
        num / den
    }

    #[test]
    fn backward_matches_finite_differences() {
        for seed in 0..20 {
            let rel = gradient_check(seed);
            assert!(rel <= 1e-5, "seed {seed}: relative error {rel}");
        }
    }

    #[test]
    fn duplicated_batch_gives_same_gradient() {
        let net = small_net(5);
        let mut rng = Rng::new(6);
        let batch = random_batch(&mut rng, 3, 3, 2);
        let doubled: Vec<_> = batch.iter().chain(batch.iter()).cloned().collect();
        let (l1, g1) = net.backward(&as_refs(&batch)).unwrap();
        let (l2, g2) = net.backward(&as_refs(&doubled)).unwrap();
        assert!((l1 - l2).abs() < 1e-12);
        for (a, b) in g1.values.iter().flatten().zip(g2.values.iter().flatten()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_bias_gradient_vanishes_at_target() {
        let mut net = small_net(7);
        net.zero_head();
        let s = [0.5, 0.1, -0.2];
        let a = [0.0, 0.0];
        let (_, g) = net.backward(&[(&s, &a)]).unwrap();
        let head_bias = g.get("head.bias").unwrap();
        assert_eq!(&head_bias[..2], &[0.0, 0.0]);
    }

    #[test]
    fn empty_batch_rejected() {
        let net = small_net(0);
        assert!(matches!(net.backward(&[]), Err(Error::Precondition(_))));
    }

    #[test]
    fn snapshot_reload_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.json");
        let net = PolicyNet::new(Architecture::with_hidden(4, 2, vec![16, 16, 16]), &mut Rng::new(77)).unwrap();
        net.save(&path).unwrap();
        let back = PolicyNet::load(&path).unwrap();
        assert_eq!(back, net);
        let s = [0.123456789, -9.87654321, 1e-7, 3.0];
        assert_eq!(net.forward(&s).unwrap(), back.forward(&s).unwrap());
    }

    #[test]
    fn from_tensors_rejects_wrong_layout() {
        let net = small_net(0);
        let mut tensors = net.tensors().to_vec();
        tensors.swap(0, 1);
        assert!(PolicyNet::from_tensors(net.arch().clone(), tensors).is_err());
    }
}
