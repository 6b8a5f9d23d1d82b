//! Feedforward Negativity regressor `[B, 32, 16, 1]` with ReLU hidden units
//! and an affine output, trained on mean squared error with Adam and
//! validation-based early stopping.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::measure::MeasurementPreset;
use crate::qlinalg::Rng;

pub const HIDDEN_SIZES: [usize; 2] = [32, 16];

/// Predictions are clamped to the Negativity range before thresholding.
pub const PREDICTION_RANGE: (f64, f64) = (0.0, 0.5);

const FORMAT_NAME: &str = "cew-mlp";
const FORMAT_VERSION: u32 = 1;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPSILON: f64 = 1e-8;

// Rng streams under the training seed.
const INIT_STREAM: u64 = 0;
const SHUFFLE_STREAM: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub preset: Option<MeasurementPreset>,
    pub training_seed: Option<u64>,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub final_validation_loss: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 256,
            max_epochs: 200,
            patience: 5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self, train_len: usize) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!("learning rate {}", self.learning_rate)));
        }
        if self.patience == 0 || self.max_epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument(
                "patience, max_epochs and batch_size must be positive".into(),
            ));
        }
        if self.batch_size > train_len {
            return Err(Error::InvalidArgument(format!(
                "batch size {} exceeds the {train_len} training records",
                self.batch_size
            )));
        }
        Ok(())
    }
}

/// Multilayer perceptron. Parameters are stored flat, layer by layer: the
/// `out × in` row-major weight matrix followed by the bias vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
    activation: Activation,
    pub meta: ModelMeta,
}

impl Mlp {
    /// The witness architecture `[input_dim, 32, 16, 1]`, He-initialized
    /// from `cfg.seed` with zero biases.
    pub fn init(input_dim: usize, cfg: &TrainConfig) -> Result<Self> {
        let mut sizes = vec![input_dim];
        sizes.extend(HIDDEN_SIZES);
        sizes.push(1);
        Self::he_normal(&sizes, cfg.seed)
    }

    /// Arbitrary layer sizes with a scalar output, He-initialized.
    pub fn he_normal(sizes: &[usize], seed: u64) -> Result<Self> {
        let mut m = Self::zeros(sizes)?;
        let mut rng = Rng::new(seed, INIT_STREAM);
        for l in 0..m.sizes.len() - 1 {
            let (w, _) = m.layer_ranges(l);
            let std = (2.0 / m.sizes[l] as f64).sqrt();
            for p in &mut m.params[w] {
                *p = std * rng.normal();
            }
        }
        m.meta.training_seed = Some(seed);
        Ok(m)
    }

    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::InvalidArgument(format!("invalid layer sizes {sizes:?}")));
        }
        if sizes[sizes.len() - 1] != 1 {
            return Err(Error::InvalidArgument("the output layer must have one unit".into()));
        }
        let count = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        Ok(Self {
            sizes: sizes.to_vec(),
            params: vec![0.0; count],
            activation: Activation::Relu,
            meta: ModelMeta::default(),
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn parameter_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Weight and bias ranges of layer `l` inside the flat parameter vector.
    pub fn layer_ranges(&self, l: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let offset: usize = self.sizes.windows(2).take(l).map(|w| w[0] * w[1] + w[1]).sum();
        let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
        let w_end = offset + fan_in * fan_out;
        (offset..w_end, w_end..w_end + fan_out)
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        let mut scratch = Scratch::new(&self.sizes);
        Ok(self.forward_into(x, &mut scratch))
    }

    /// Forward pass clamped to the Negativity range.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(self.forward(x)?.clamp(PREDICTION_RANGE.0, PREDICTION_RANGE.1))
    }

    /// Clamped predictions for every record of `data`.
    pub fn predict_dataset(&self, data: &Dataset) -> Result<Vec<f64>> {
        if data.width() != self.input_dim() {
            return Err(Error::DimensionMismatch(format!(
                "model expects {} features, dataset has {}",
                self.input_dim(),
                data.width()
            )));
        }
        let mut scratch = Scratch::new(&self.sizes);
        Ok(data
            .records
            .iter()
            .map(|r| {
                self.forward_into(&r.values, &mut scratch)
                    .clamp(PREDICTION_RANGE.0, PREDICTION_RANGE.1)
            })
            .collect())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch(format!(
                "model expects {} features, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        Ok(())
    }

    fn forward_into(&self, x: &[f64], s: &mut Scratch) -> f64 {
        s.acts[0].copy_from_slice(x);
        let last = self.sizes.len() - 2;
        for l in 0..=last {
            let (w, b) = self.layer_ranges(l);
            let (w, b) = (&self.params[w], &self.params[b]);
            let fan_in = self.sizes[l];
            let (before, after) = s.acts.split_at_mut(l + 1);
            let input = &before[l];
            let out = &mut after[0];
            for (j, o) in out.iter_mut().enumerate() {
                let row = &w[j * fan_in..(j + 1) * fan_in];
                let z = b[j] + row.iter().zip(input.iter()).map(|(a, c)| a * c).sum::<f64>();
                *o = if l < last { z.max(0.0) } else { z };
            }
        }
        s.acts[last + 1][0]
    }

    /// Adds the gradient of `(f(x) - y)^2` into `grad` and returns the
    /// squared error.
    fn accumulate_gradient(&self, x: &[f64], y: f64, s: &mut Scratch, grad: &mut [f64]) -> f64 {
        let out = self.forward_into(x, s);
        let err = out - y;
        let last = self.sizes.len() - 2;
        s.deltas[last + 1][0] = 2.0 * err;
        for l in (0..=last).rev() {
            let (wr, br) = self.layer_ranges(l);
            let fan_in = self.sizes[l];
            let fan_out = self.sizes[l + 1];
            for j in 0..fan_out {
                let d = s.deltas[l + 1][j];
                if d == 0.0 {
                    continue;
                }
                grad[br.start + j] += d;
                let g = &mut grad[wr.start + j * fan_in..wr.start + (j + 1) * fan_in];
                for (gi, a) in g.iter_mut().zip(&s.acts[l]) {
                    *gi += d * a;
                }
            }
            if l > 0 {
                let w = &self.params[wr];
                let (lower, upper) = s.deltas.split_at_mut(l + 1);
                let below = &mut lower[l];
                let above = &upper[0];
                for (i, di) in below.iter_mut().enumerate() {
                    // ReLU derivative: active units only
                    *di = if s.acts[l][i] > 0.0 {
                        (0..fan_out).map(|j| w[j * fan_in + i] * above[j]).sum()
                    } else {
                        0.0
                    };
                }
            }
        }
        err * err
    }

    /// Exact gradient of the batch mean squared error, in flat parameter
    /// order, together with the loss.
    pub fn gradient(&self, inputs: &[&[f64]], targets: &[f64]) -> Result<(Vec<f64>, f64)> {
        if inputs.is_empty() || inputs.len() != targets.len() {
            return Err(Error::EmptyDataset(
                "gradient needs a non-empty batch with one target per input".into(),
            ));
        }
        let mut grad = vec![0.0; self.params.len()];
        let mut scratch = Scratch::new(&self.sizes);
        let mut sse = 0.0;
        for (x, &y) in inputs.iter().zip(targets) {
            self.check_input(x)?;
            sse += self.accumulate_gradient(x, y, &mut scratch, &mut grad);
        }
        let n = inputs.len() as f64;
        grad.iter_mut().for_each(|g| *g /= n);
        Ok((grad, sse / n))
    }

    /// Mean squared error against `targets`.
    pub fn mse(&self, inputs: &[&[f64]], targets: &[f64]) -> Result<f64> {
        if inputs.is_empty() {
            return Err(Error::EmptyDataset("mse of an empty set".into()));
        }
        let mut scratch = Scratch::new(&self.sizes);
        let mut sse = 0.0;
        for (x, &y) in inputs.iter().zip(targets) {
            self.check_input(x)?;
            let e = self.forward_into(x, &mut scratch) - y;
            sse += e * e;
        }
        Ok(sse / inputs.len() as f64)
    }

    pub fn to_json(&self) -> String {
        let layers = (0..self.sizes.len() - 1)
            .map(|l| {
                let (w, b) = self.layer_ranges(l);
                let fan_in = self.sizes[l];
                LayerDocument {
                    weights: self.params[w].chunks(fan_in).map(<[f64]>::to_vec).collect(),
                    biases: self.params[b].to_vec(),
                }
            })
            .collect();
        let doc = ModelDocument {
            format: FORMAT_NAME.into(),
            version: FORMAT_VERSION,
            layer_sizes: self.sizes.clone(),
            activation: self.activation,
            layers,
            metadata: self.meta.clone(),
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text).map_err(|e| Error::format(e.line(), e.to_string()))?;
        if doc.format != FORMAT_NAME || doc.version != FORMAT_VERSION {
            return Err(Error::format(
                1,
                format!("unsupported format {} v{}", doc.format, doc.version),
            ));
        }
        let mut m = Self::zeros(&doc.layer_sizes).map_err(|e| Error::format(1, e.to_string()))?;
        if doc.layers.len() != m.sizes.len() - 1 {
            return Err(Error::format(
                1,
                format!("{} layers declared, {} given", m.sizes.len() - 1, doc.layers.len()),
            ));
        }
        for (l, layer) in doc.layers.iter().enumerate() {
            let (fan_in, fan_out) = (m.sizes[l], m.sizes[l + 1]);
            if layer.weights.len() != fan_out
                || layer.weights.iter().any(|row| row.len() != fan_in)
                || layer.biases.len() != fan_out
            {
                return Err(Error::format(
                    1,
                    format!("layer {l} does not match sizes {fan_in}->{fan_out}"),
                ));
            }
            let (w, b) = m.layer_ranges(l);
            let flat = layer.weights.iter().flatten().copied();
            m.params[w].iter_mut().zip(flat).for_each(|(p, v)| *p = v);
            m.params[b].copy_from_slice(&layer.biases);
        }
        if let Some(p) = &doc.metadata.preset {
            if p.width() != m.input_dim() {
                return Err(Error::format(
                    1,
                    format!("preset width {} differs from input size {}", p.width(), m.input_dim()),
                ));
            }
        }
        m.activation = doc.activation;
        m.meta = doc.metadata;
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

struct Scratch {
    acts: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
}

impl Scratch {
    fn new(sizes: &[usize]) -> Self {
        Self {
            acts: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            deltas: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerDocument {
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDocument {
    format: String,
    version: u32,
    layer_sizes: Vec<usize>,
    activation: Activation,
    layers: Vec<LayerDocument>,
    metadata: ModelMeta,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    NoImprovement,
    Stop,
}

/// Tracks the best validation loss; stops after `patience` consecutive
/// epochs without a strict improvement.
#[derive(Clone, Debug)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: usize,
    bad_epochs: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            bad_epochs: 0,
        }
    }

    pub fn observe(&mut self, epoch: usize, loss: f64) -> StopDecision {
        if loss < self.best {
            self.best = loss;
            self.best_epoch = epoch;
            self.bad_epochs = 0;
            StopDecision::Improved
        } else {
            self.bad_epochs += 1;
            if self.bad_epochs >= self.patience {
                StopDecision::Stop
            } else {
                StopDecision::NoImprovement
            }
        }
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_loss: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_validation_loss: f64,
    pub stopped_early: bool,
}

struct Adam {
    lr: f64,
    step: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    fn new(n: usize, lr: f64) -> Self {
        Self {
            lr,
            step: 0,
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    fn update(&mut self, params: &mut [f64], grad: &[f64]) {
        self.step += 1;
        let c1 = 1.0 - ADAM_BETA1.powi(self.step);
        let c2 = 1.0 - ADAM_BETA2.powi(self.step);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = ADAM_BETA1 * self.m[i] + (1.0 - ADAM_BETA1) * g;
            self.v[i] = ADAM_BETA2 * self.v[i] + (1.0 - ADAM_BETA2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
        }
    }
}

/// Trains on raw arrays; see [`train`].
pub fn train_arrays(
    model: &Mlp,
    train_x: &[&[f64]],
    train_y: &[f64],
    val_x: &[&[f64]],
    val_y: &[f64],
    cfg: &TrainConfig,
) -> Result<(Mlp, TrainReport)> {
    if train_x.is_empty() || val_x.is_empty() {
        return Err(Error::EmptyDataset(
            "training and validation sets must be non-empty".into(),
        ));
    }
    if train_x.len() != train_y.len() || val_x.len() != val_y.len() {
        return Err(Error::DimensionMismatch("one target per input required".into()));
    }
    cfg.validate(train_x.len())?;
    for x in train_x.iter().chain(val_x) {
        model.check_input(x)?;
    }

    let mut m = model.clone();
    let mut best = m.clone();
    let mut adam = Adam::new(m.params.len(), cfg.learning_rate);
    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut shuffle_rng = Rng::new(cfg.seed, SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..train_x.len()).collect();
    let mut grad = vec![0.0; m.params.len()];
    let mut scratch = Scratch::new(&m.sizes);
    let mut history = Vec::new();
    let mut stopped_early = false;

    for epoch in 1..=cfg.max_epochs {
        shuffle_rng.shuffle(&mut order);
        let mut sse = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for &i in batch {
                sse += m.accumulate_gradient(train_x[i], train_y[i], &mut scratch, &mut grad);
            }
            let inv = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|g| *g *= inv);
            adam.update(&mut m.params, &grad);
        }
        let train_loss = sse / train_x.len() as f64;
        if !train_loss.is_finite() || m.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::DivergedTraining { epoch });
        }
        let validation_loss = m.mse(val_x, val_y)?;
        history.push(EpochRecord {
            epoch,
            train_loss,
            validation_loss,
        });
        match stopper.observe(epoch, validation_loss) {
            StopDecision::Improved => best.params.copy_from_slice(&m.params),
            StopDecision::NoImprovement => {}
            StopDecision::Stop => {
                stopped_early = true;
                break;
            }
        }
    }

    best.meta = ModelMeta {
        preset: model.meta.preset.clone(),
        training_seed: Some(cfg.seed),
        epochs_run: history.len(),
        best_epoch: stopper.best_epoch(),
        final_validation_loss: Some(stopper.best()),
    };
    let report = TrainReport {
        best_epoch: stopper.best_epoch(),
        best_validation_loss: stopper.best(),
        stopped_early,
        history,
    };
    Ok((best, report))
}

/// Fits the model to the Negativity labels of `train`, monitoring the
/// validation MSE after every epoch. Returns the parameters of the best
/// validation epoch.
pub fn train(model: &Mlp, train: &Dataset, validation: &Dataset, cfg: &TrainConfig) -> Result<(Mlp, TrainReport)> {
    if train.preset.pairs != validation.preset.pairs || train.kind != validation.kind {
        return Err(Error::PresetMismatch {
            expected: train.preset.name.clone(),
            found: validation.preset.name.clone(),
        });
    }
    if let Some(p) = &model.meta.preset {
        if p.pairs != train.preset.pairs {
            return Err(Error::PresetMismatch {
                expected: p.name.clone(),
                found: train.preset.name.clone(),
            });
        }
    }
    let tx: Vec<&[f64]> = train.records.iter().map(|r| r.values.as_slice()).collect();
    let ty: Vec<f64> = train.records.iter().map(|r| r.negativity).collect();
    let vx: Vec<&[f64]> = validation.records.iter().map(|r| r.values.as_slice()).collect();
    let vy: Vec<f64> = validation.records.iter().map(|r| r.negativity).collect();
    let mut start = model.clone();
    start.meta.preset = Some(train.preset.clone());
    train_arrays(&start, &tx, &ty, &vx, &vy, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flagship_parameter_count() {
        let m = Mlp::init(10, &TrainConfig::default()).unwrap();
        assert_eq!(m.layer_sizes(), &[10, 32, 16, 1]);
        assert_eq!(m.parameter_count(), 897);
    }

    #[test]
    fn init_is_seeded_with_zero_biases() {
        let cfg = TrainConfig::default();
        let a = Mlp::init(5, &cfg).unwrap();
        assert_eq!(a, Mlp::init(5, &cfg).unwrap());
        let other = Mlp::init(5, &TrainConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a.params(), other.params());
        for l in 0..3 {
            let (_, b) = a.layer_ranges(l);
            assert!(a.params()[b].iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn forward_toy_nets() {
        let z = Mlp::zeros(&[3, 32, 16, 1]).unwrap();
        assert_eq!(z.forward(&[0.3, 0.2, 0.9]).unwrap(), 0.0);
        let mut b = z.clone();
        let (_, out_bias) = b.layer_ranges(2);
        b.params_mut()[out_bias][0] = 0.3;
        assert_eq!(b.forward(&[0.3, 0.2, 0.9]).unwrap(), 0.3);
        let mut unit = Mlp::zeros(&[1, 1, 1, 1]).unwrap();
        for l in 0..3 {
            let (w, _) = unit.layer_ranges(l);
            unit.params_mut()[w][0] = 1.0;
        }
        assert_eq!(unit.forward(&[0.5]).unwrap(), 0.5);
        assert!(matches!(unit.forward(&[0.5, 0.1]), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn output_bias_gradient() {
        let m = Mlp::he_normal(&[2, 3, 2, 1], 4).unwrap();
        let x = [0.4, 0.7];
        let y = 0.1;
        let out = m.forward(&x).unwrap();
        let (g, loss) = m.gradient(&[&x], &[y]).unwrap();
        let (_, b) = m.layer_ranges(2);
        assert!((g[b.start] - 2.0 * (out - y)).abs() < 1e-15);
        assert!((loss - (out - y).powi(2)).abs() < 1e-15);
    }

    #[test]
    fn zero_error_batch_has_zero_gradient() {
        let m = Mlp::he_normal(&[2, 4, 3, 1], 8).unwrap();
        let xs = [[0.1, 0.9], [0.5, 0.5], [0.8, 0.2]];
        let inputs: Vec<&[f64]> = xs.iter().map(|x| x.as_slice()).collect();
        let targets: Vec<f64> = inputs.iter().map(|x| m.forward(x).unwrap()).collect();
        let (g, _) = m.gradient(&inputs, &targets).unwrap();
        assert!(g.iter().all(|v| v.abs() <= 1e-12));
        assert!(m.gradient(&[], &[]).is_err());
    }

    #[test]
    fn early_stopping_semantics() {
        let mut s = EarlyStopping::new(5);
        let losses = [0.5, 0.4, 0.41, 0.42, 0.43, 0.44, 0.45];
        let decisions: Vec<StopDecision> = losses.iter().enumerate().map(|(i, &l)| s.observe(i + 1, l)).collect();
        assert_eq!(decisions[6], StopDecision::Stop);
        assert!(decisions[..6].iter().all(|d| *d != StopDecision::Stop));
        assert_eq!(s.best_epoch(), 2);
        assert_eq!(s.best(), 0.4);
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let mut m = Mlp::init(
            4,
            &TrainConfig {
                seed: 9,
                ..Default::default()
            },
        )
        .unwrap();
        m.meta.final_validation_loss = Some(0.1 + 0.2);
        let back = Mlp::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        let mut rng = Rng::new(3, 0);
        for _ in 0..100 {
            let x: Vec<f64> = (0..4).map(|_| rng.uniform()).collect();
            assert_eq!(m.forward(&x).unwrap().to_bits(), back.forward(&x).unwrap().to_bits());
        }
    }

    #[test]
    fn malformed_model_files() {
        let m = Mlp::init(2, &TrainConfig::default()).unwrap();
        let good = m.to_json();
        assert!(Mlp::from_json("not json").is_err());
        let bad_sizes = good.replacen("\"layer_sizes\": [\n    2,", "\"layer_sizes\": [\n    3,", 1);
        assert!(matches!(Mlp::from_json(&bad_sizes), Err(Error::Format { .. })));
        let bad_act = good.replace("\"relu\"", "\"tanh\"");
        assert!(Mlp::from_json(&bad_act).is_err());
    }

    #[test]
    fn config_validation() {
        let m = Mlp::init(1, &TrainConfig::default()).unwrap();
        let xs = [[0.1], [0.2]];
        let x: Vec<&[f64]> = xs.iter().map(|v| v.as_slice()).collect();
        let y = [0.0, 0.0];
        let cfg = TrainConfig::default();
        assert!(matches!(
            train_arrays(&m, &x, &y, &x, &y, &cfg),
            Err(Error::InvalidArgument(_))
        ));
        let cfg = TrainConfig {
            batch_size: 1,
            patience: 0,
            ..Default::default()
        };
        assert!(train_arrays(&m, &x, &y, &x, &y, &cfg).is_err());
        assert!(matches!(
            train_arrays(&m, &[], &[], &x, &y, &TrainConfig::default()),
            Err(Error::EmptyDataset(_))
        ));
    }

    #[test]
    fn divergence_is_reported() {
        let m = Mlp::init(1, &TrainConfig::default()).unwrap();
        let xs = [[1e300], [-1e300]];
        let x: Vec<&[f64]> = xs.iter().map(|v| v.as_slice()).collect();
        let y = [1e300, -1e300];
        let cfg = TrainConfig {
            batch_size: 2,
            learning_rate: 1e10,
            ..Default::default()
        };
        assert!(matches!(
            train_arrays(&m, &x, &y, &x, &y, &cfg),
            Err(Error::DivergedTraining { epoch: 1 })
        ));
    }
}
