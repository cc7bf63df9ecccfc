//! Convolutional warping network.
//!
//! A stack of length-preserving 1D convolutions (tanh between layers, linear
//! output with one filter) reads a multivariate SRSF sample and emits one
//! value per grid point. [`simplex`] turns those values into a warp. The
//! network is trained with Adam on the elastic loss from [`loss`].

pub mod conv;
pub mod loss;
pub mod simplex;

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fungrid::{Grid, SrsfSample, Warp};
pub use conv::ConvLayer;
pub use loss::{fisher_rao_loss, subject_loss_and_grad};
pub use simplex::{simplex_activation, simplex_backward, simplex_forward, SimplexOutput};

/// Architecture and optimiser settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetConfig {
    /// Grid points per sample.
    pub input_points: usize,
    /// Channels per sample.
    pub channels: usize,
    /// Number of convolutions, output layer included.
    pub num_layers: usize,
    /// Filters in each hidden layer.
    pub filters_per_hidden_layer: usize,
    pub kernel_size: usize,
    pub learning_rate: f64,
    #[serde(default = "default_beta1")]
    pub adam_beta1: f64,
    #[serde(default = "default_beta2")]
    pub adam_beta2: f64,
    #[serde(default = "default_adam_epsilon")]
    pub adam_epsilon: f64,
    /// Seed for weight initialisation.
    #[serde(default)]
    pub seed: u64,
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_adam_epsilon() -> f64 {
    1e-8
}

impl NetConfig {
    pub fn new(
        input_points: usize,
        channels: usize,
        num_layers: usize,
        filters: usize,
        kernel_size: usize,
        learning_rate: f64,
    ) -> Self {
        NetConfig {
            input_points,
            channels,
            num_layers,
            filters_per_hidden_layer: filters,
            kernel_size,
            learning_rate,
            adam_beta1: default_beta1(),
            adam_beta2: default_beta2(),
            adam_epsilon: default_adam_epsilon(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.input_points < 3 {
            return bad(format!("input_points must be at least 3, got {}", self.input_points));
        }
        if self.channels == 0 || self.num_layers == 0 || self.filters_per_hidden_layer == 0 {
            return bad("channels, num_layers and filters must be positive".into());
        }
        if self.kernel_size == 0 || self.kernel_size > self.input_points {
            return bad(format!(
                "kernel_size must lie in 1..={}, got {}",
                self.input_points, self.kernel_size
            ));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return bad("Adam betas must lie in [0, 1)".into());
        }
        if !(self.adam_epsilon.is_finite() && self.adam_epsilon > 0.0) {
            return bad("adam_epsilon must be positive".into());
        }
        Ok(())
    }
}

/// Adam moment estimates for one layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamMoments {
    pub kernel_m: Vec<f64>,
    pub kernel_v: Vec<f64>,
    pub bias_m: Vec<f64>,
    pub bias_v: Vec<f64>,
}

impl AdamMoments {
    fn zeros(layer: &ConvLayer) -> Self {
        AdamMoments {
            kernel_m: vec![0.0; layer.kernel.len()],
            kernel_v: vec![0.0; layer.kernel.len()],
            bias_m: vec![0.0; layer.bias.len()],
            bias_v: vec![0.0; layer.bias.len()],
        }
    }
}

/// Parameter gradients, one entry per layer.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub kernel: Vec<Vec<f64>>,
    pub bias: Vec<Vec<f64>>,
}

impl Gradients {
    fn zeros(layers: &[ConvLayer]) -> Self {
        Gradients {
            kernel: layers.iter().map(|l| vec![0.0; l.kernel.len()]).collect(),
            bias: layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    /// Flattened in the order of [`WarpNet::parameters`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (k, b) in self.kernel.iter().zip(&self.bias) {
            out.extend_from_slice(k);
            out.extend_from_slice(b);
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.flatten().iter().fold(0.0, |m, g| m.max(g.abs()))
    }
}

/// Activations recorded by [`WarpNet::forward`].
#[derive(Clone, Debug)]
pub struct ForwardPass {
    /// Per layer, per sample: the zero-padded layer input.
    padded_inputs: Vec<Vec<Vec<f64>>>,
    /// Per hidden layer, per sample: tanh outputs.
    hidden: Vec<Vec<Vec<f64>>>,
    pub simplex: Vec<SimplexOutput>,
}

impl ForwardPass {
    pub fn warps(&self) -> Vec<Warp> {
        self.simplex.iter().map(|s| s.warp.clone()).collect()
    }
}

/// Loss per batch of one training epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochReport {
    pub batch_losses: Vec<f64>,
    pub batch_sizes: Vec<usize>,
}

impl EpochReport {
    /// Batch losses averaged with batch sizes as weights.
    pub fn mean_loss(&self) -> f64 {
        let n: usize = self.batch_sizes.iter().sum();
        self.batch_losses
            .iter()
            .zip(&self.batch_sizes)
            .map(|(l, &b)| l * b as f64)
            .sum::<f64>()
            / n as f64
    }
}

const CHECKPOINT_FORMAT: &str = "deepjam-warpnet";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Checkpoint {
    format: String,
    version: u32,
    config: NetConfig,
    step: u64,
    layers: Vec<ConvLayer>,
    moments: Vec<AdamMoments>,
}

/// The warping network together with its optimiser state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Checkpoint", into = "Checkpoint")]
pub struct WarpNet {
    config: NetConfig,
    layers: Vec<ConvLayer>,
    moments: Vec<AdamMoments>,
    step: u64,
}

impl TryFrom<Checkpoint> for WarpNet {
    type Error = Error;

    fn try_from(c: Checkpoint) -> Result<Self> {
        if c.format != CHECKPOINT_FORMAT || c.version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!(
                "unsupported checkpoint {} v{}",
                c.format, c.version
            )));
        }
        c.config.validate()?;
        let expected = WarpNet::layer_shapes(&c.config);
        if c.layers.len() != expected.len() || c.moments.len() != expected.len() {
            return Err(Error::Format("checkpoint layer count does not match config".into()));
        }
        for ((layer, m), &(ci, co)) in c.layers.iter().zip(&c.moments).zip(&expected) {
            let nk = c.config.kernel_size * ci * co;
            let shapes_ok = layer.in_channels == ci
                && layer.out_channels == co
                && layer.kernel_size == c.config.kernel_size
                && layer.kernel.len() == nk
                && layer.bias.len() == co
                && m.kernel_m.len() == nk
                && m.kernel_v.len() == nk
                && m.bias_m.len() == co
                && m.bias_v.len() == co;
            if !shapes_ok {
                return Err(Error::Format("checkpoint layer shape does not match config".into()));
            }
            let finite = layer.kernel.iter().chain(&layer.bias).all(|v| v.is_finite());
            if !finite {
                return Err(Error::Format("checkpoint contains non-finite weights".into()));
            }
        }
        Ok(WarpNet {
            config: c.config,
            layers: c.layers,
            moments: c.moments,
            step: c.step,
        })
    }
}

impl From<WarpNet> for Checkpoint {
    fn from(n: WarpNet) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config: n.config,
            step: n.step,
            layers: n.layers,
            moments: n.moments,
        }
    }
}

impl WarpNet {
    fn layer_shapes(config: &NetConfig) -> Vec<(usize, usize)> {
        (0..config.num_layers)
            .map(|l| {
                let ci = if l == 0 { config.channels } else { config.filters_per_hidden_layer };
                let co = if l + 1 == config.num_layers { 1 } else { config.filters_per_hidden_layer };
                (ci, co)
            })
            .collect()
    }

    /// Glorot-uniform hidden layers; the output layer starts at zero so that
    /// an untrained network predicts the identity warp.
    pub fn new(config: NetConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let shapes = Self::layer_shapes(&config);
        let k = config.kernel_size;
        let layers: Vec<ConvLayer> = shapes
            .iter()
            .enumerate()
            .map(|(l, &(ci, co))| {
                let mut layer = ConvLayer::zeros(ci, co, k);
                if l + 1 < shapes.len() {
                    let limit = (6.0 / ((ci + co) * k) as f64).sqrt();
                    for w in layer.kernel.iter_mut() {
                        *w = rng.random_range(-limit..limit);
                    }
                }
                layer
            })
            .collect();
        let moments = layers.iter().map(AdamMoments::zeros).collect();
        Ok(WarpNet {
            config,
            layers,
            moments,
            step: 0,
        })
    }

    pub fn config(&self) -> &NetConfig {
        &self.config
    }

    pub fn layers(&self) -> &[ConvLayer] {
        &self.layers
    }

    /// Optimiser steps taken so far.
    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn set_learning_rate(&mut self, learning_rate: f64) -> Result<()> {
        let mut c = self.config.clone();
        c.learning_rate = learning_rate;
        c.validate()?;
        self.config = c;
        Ok(())
    }

    /// All weights, layer by layer, kernel before bias.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend_from_slice(&l.kernel);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_parameters(&mut self, values: &[f64]) -> Result<()> {
        let total: usize = self.layers.iter().map(|l| l.kernel.len() + l.bias.len()).sum();
        if values.len() != total {
            return Err(Error::Shape(format!(
                "expected {total} parameters, got {}",
                values.len()
            )));
        }
        let mut rest = values;
        for l in &mut self.layers {
            let (k, r) = rest.split_at(l.kernel.len());
            let (b, r) = r.split_at(l.bias.len());
            l.kernel.copy_from_slice(k);
            l.bias.copy_from_slice(b);
            rest = r;
        }
        Ok(())
    }

    fn check_inputs(&self, batch: &[SrsfSample]) -> Result<Grid> {
        let first = batch
            .first()
            .ok_or_else(|| Error::Shape("empty batch".into()))?;
        let grid = *first.grid();
        if grid.start() != 0.0 || grid.end() != 1.0 {
            return Err(Error::GridMismatch(format!(
                "network inputs must live on [0, 1], got [{}, {}]",
                grid.start(),
                grid.end()
            )));
        }
        if grid.len() != self.config.input_points {
            return Err(Error::Shape(format!(
                "network expects {} points, sample has {}",
                self.config.input_points,
                grid.len()
            )));
        }
        for q in batch {
            if !q.grid().matches(&grid) {
                return Err(Error::GridMismatch("batch samples use different grids".into()));
            }
            if q.num_channels() != self.config.channels {
                return Err(Error::Shape(format!(
                    "network expects {} channels, sample has {}",
                    self.config.channels,
                    q.num_channels()
                )));
            }
        }
        Ok(grid)
    }

    /// Runs the network and the simplex activation on every sample. The
    /// resulting warps live on the unit grid with the samples' point count.
    pub fn forward(&self, batch: &[SrsfSample]) -> Result<ForwardPass> {
        let grid = self.check_inputs(batch)?;
        let len = grid.len();
        let unit = Grid::unit(len)?;
        let nl = self.layers.len();
        let mut padded_inputs = vec![Vec::with_capacity(batch.len()); nl];
        let mut hidden = vec![Vec::with_capacity(batch.len()); nl - 1];
        let mut simplex = Vec::with_capacity(batch.len());
        for q in batch {
            let mut x = vec![0.0; len * q.num_channels()];
            for (j, c) in q.channels().iter().enumerate() {
                for (t, v) in c.iter().enumerate() {
                    x[t * q.num_channels() + j] = *v;
                }
            }
            for (l, layer) in self.layers.iter().enumerate() {
                let padded = layer.pad_input(&x, len);
                let mut out = layer.forward(&padded, len);
                padded_inputs[l].push(padded);
                if l + 1 < nl {
                    out.iter_mut().for_each(|v| *v = v.tanh());
                    hidden[l].push(out.clone());
                }
                x = out;
            }
            simplex.push(simplex_forward(&x, &unit)?);
        }
        Ok(ForwardPass {
            padded_inputs,
            hidden,
            simplex,
        })
    }

    /// Warps predicted for each sample.
    pub fn predict(&self, batch: &[SrsfSample]) -> Result<Vec<Warp>> {
        if batch.is_empty() {
            return Ok(Vec::new());
        }
        Ok(self.forward(batch)?.warps())
    }

    /// Batch loss against `target` and its parameter gradients.
    pub fn loss_and_gradients(
        &self,
        batch: &[SrsfSample],
        target: &SrsfSample,
    ) -> Result<(f64, Gradients)> {
        let pass = self.forward(batch)?;
        self.backward(&pass, batch, target)
    }

    pub fn backward(
        &self,
        pass: &ForwardPass,
        batch: &[SrsfSample],
        target: &SrsfSample,
    ) -> Result<(f64, Gradients)> {
        loss::check_batch(batch, target, pass.simplex.len())?;
        let len = target.grid().len();
        let nl = self.layers.len();
        let inv_n = 1.0 / batch.len() as f64;
        let flipped: Vec<Vec<f64>> = self.layers.iter().map(|l| l.flipped_kernel()).collect();
        let mut grads = Gradients::zeros(&self.layers);
        let mut total = 0.0;
        for (b, q) in batch.iter().enumerate() {
            let so = &pass.simplex[b];
            let (loss, mut grad_warp) = subject_loss_and_grad(q, target, so.warp.values());
            total += loss;
            grad_warp.iter_mut().for_each(|g| *g *= inv_n);
            let mut grad = simplex_backward(so, &grad_warp);
            for l in (0..nl).rev() {
                let layer = &self.layers[l];
                if l + 1 < nl {
                    let h = &pass.hidden[l][b];
                    grad.iter_mut().zip(h).for_each(|(g, h)| *g *= 1.0 - h * h);
                }
                layer.accumulate_param_grad(
                    &pass.padded_inputs[l][b],
                    &grad,
                    len,
                    &mut grads.kernel[l],
                    &mut grads.bias[l],
                );
                if l > 0 {
                    grad = layer.input_grad(&flipped[l], &grad, len);
                }
            }
        }
        for (l, (k, b)) in grads.kernel.iter().zip(&grads.bias).enumerate() {
            if !k.iter().chain(b).all(|g| g.is_finite()) {
                return Err(Error::NonFiniteGradient { layer: l });
            }
        }
        Ok((total * inv_n, grads))
    }

    /// One Adam update with bias correction.
    pub fn adam_step(&mut self, grads: &Gradients) -> Result<()> {
        if grads.kernel.len() != self.layers.len() {
            return Err(Error::Shape("gradient layer count mismatch".into()));
        }
        self.step += 1;
        let c = &self.config;
        let t = self.step as i32;
        let (b1, b2) = (c.adam_beta1, c.adam_beta2);
        let lr_t = c.learning_rate * (1.0 - b2.powi(t)).sqrt() / (1.0 - b1.powi(t));
        let eps_hat = c.adam_epsilon * (1.0 - b2.powi(t)).sqrt();
        let update = |w: &mut [f64], m: &mut [f64], v: &mut [f64], g: &[f64]| {
            for i in 0..w.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                w[i] -= lr_t * m[i] / (v[i].sqrt() + eps_hat);
            }
        };
        for (l, layer) in self.layers.iter_mut().enumerate() {
            let m = &mut self.moments[l];
            update(&mut layer.kernel, &mut m.kernel_m, &mut m.kernel_v, &grads.kernel[l]);
            update(&mut layer.bias, &mut m.bias_m, &mut m.bias_v, &grads.bias[l]);
        }
        Ok(())
    }

    /// One pass over `samples` in shuffled mini-batches.
    pub fn train_epoch(
        &mut self,
        samples: &[SrsfSample],
        target: &SrsfSample,
        batch_size: usize,
        rng: &mut impl Rng,
    ) -> Result<EpochReport> {
        if batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if samples.is_empty() {
            return Err(Error::Shape("no training samples".into()));
        }
        let mut order: Vec<usize> = (0..samples.len()).collect();
        order.shuffle(rng);
        let mut report = EpochReport {
            batch_losses: Vec::new(),
            batch_sizes: Vec::new(),
        };
        for chunk in order.chunks(batch_size) {
            let batch: Vec<SrsfSample> = chunk.iter().map(|&i| samples[i].clone()).collect();
            let (loss, grads) = self.loss_and_gradients(&batch, target)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    iteration: self.step as usize,
                    loss,
                });
            }
            self.adam_step(&grads)?;
            report.batch_losses.push(loss);
            report.batch_sizes.push(chunk.len());
        }
        Ok(report)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fungrid::{srsf, FunctionSample};

    fn samples(p: usize, j: usize, n: usize) -> Vec<SrsfSample> {
        let g = Grid::unit(p).unwrap();
        (0..n)
            .map(|i| {
                let s = 0.15 * i as f64;
                srsf(
                    &FunctionSample::from_fn(g, j, |c, t| {
                        (2.0 * std::f64::consts::PI * (t + s * t * (1.0 - t)) + c as f64).sin()
                    })
                    .unwrap(),
                )
            })
            .collect()
    }

    fn small_config(p: usize, j: usize) -> NetConfig {
        let mut c = NetConfig::new(p, j, 2, 3, 5, 1e-2);
        c.seed = 7;
        c
    }

    #[test]
    fn untrained_network_predicts_identity() {
        let net = WarpNet::new(small_config(17, 2)).unwrap();
        for w in net.predict(&samples(17, 2, 3)).unwrap() {
            assert!(w.sup_distance(&Warp::identity(*w.grid())) < 1e-12);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let data = samples(17, 2, 3);
        let target = samples(17, 2, 1).pop().unwrap();
        let mut net = WarpNet::new(small_config(17, 2)).unwrap();
        // move the output layer away from zero so every weight has a gradient
        let mut params = net.parameters();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for p in params.iter_mut() {
            *p += rng.random_range(-0.3..0.3);
        }
        net.set_parameters(&params).unwrap();
        let (_, grads) = net.loss_and_gradients(&data, &target).unwrap();
        let analytic = grads.flatten();
        let eps = 1e-5;
        let mut worst: f64 = 0.0;
        for i in 0..params.len() {
            let mut probe = net.clone();
            let mut hi = params.clone();
            hi[i] += eps;
            probe.set_parameters(&hi).unwrap();
            let up = probe.loss_and_gradients(&data, &target).unwrap().0;
            let mut lo = params.clone();
            lo[i] -= eps;
            probe.set_parameters(&lo).unwrap();
            let down = probe.loss_and_gradients(&data, &target).unwrap().0;
            let fd = (up - down) / (2.0 * eps);
            let rel = (fd - analytic[i]).abs() / fd.abs().max(analytic[i].abs()).max(1e-6);
            worst = worst.max(rel);
        }
        assert!(worst < 1e-4, "worst relative error {worst}");
    }

    #[test]
    fn training_reduces_loss() {
        let data = samples(33, 1, 4);
        let target = samples(33, 1, 6)[2].clone();
        let mut net = WarpNet::new(small_config(33, 1)).unwrap();
        let first = net.loss_and_gradients(&data, &target).unwrap().0;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            net.train_epoch(&data, &target, 4, &mut rng).unwrap();
        }
        let last = net.loss_and_gradients(&data, &target).unwrap().0;
        assert!(last < 0.8 * first, "{first} -> {last}");
        assert_eq!(net.step(), 50);
    }

    #[test]
    fn zero_gradients_leave_parameters_unchanged() {
        let mut net = WarpNet::new(small_config(17, 2)).unwrap();
        let before = net.parameters();
        let zeros = Gradients::zeros(net.layers());
        for _ in 0..3 {
            net.adam_step(&zeros).unwrap();
        }
        assert_eq!(net.parameters(), before);
    }

    #[test]
    fn epoch_mean_weights_batches() {
        let data = samples(17, 1, 5);
        let target = data[0].clone();
        let mut net = WarpNet::new(small_config(17, 1)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let report = net.train_epoch(&data, &target, 2, &mut rng).unwrap();
        assert_eq!(report.batch_sizes, vec![2, 2, 1]);
        let manual = (2.0 * report.batch_losses[0]
            + 2.0 * report.batch_losses[1]
            + report.batch_losses[2])
            / 5.0;
        assert!((report.mean_loss() - manual).abs() < 1e-15);
    }

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let data = samples(17, 2, 3);
        let mut net = WarpNet::new(small_config(17, 2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        net.train_epoch(&data, &data[1], 2, &mut rng).unwrap();
        let back = WarpNet::from_json(&net.to_json().unwrap()).unwrap();
        assert_eq!(back, net);
        let a = net.predict(&data).unwrap();
        let b = back.predict(&data).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn corrupt_checkpoint_rejected() {
        let net = WarpNet::new(small_config(17, 2)).unwrap();
        let json = net.to_json().unwrap();
        assert!(WarpNet::from_json(&json.replace("\"num_layers\":2", "\"num_layers\":3")).is_err());
        assert!(WarpNet::from_json(&json.replace("deepjam-warpnet", "other")).is_err());
        assert!(WarpNet::from_json(&json[..json.len() / 2]).is_err());
    }

    #[test]
    fn invalid_configs_rejected() {
        let ok = small_config(17, 2);
        for edit in [
            |c: &mut NetConfig| c.num_layers = 0,
            |c: &mut NetConfig| c.kernel_size = 18,
            |c: &mut NetConfig| c.learning_rate = -1.0,
            |c: &mut NetConfig| c.adam_beta2 = 1.0,
        ] {
            let mut c = ok.clone();
            edit(&mut c);
            assert!(WarpNet::new(c).is_err());
        }
        let net = WarpNet::new(ok).unwrap();
        assert!(net.predict(&samples(9, 2, 1)).is_err());
        assert!(net.predict(&samples(17, 1, 1)).is_err());
    }
}
