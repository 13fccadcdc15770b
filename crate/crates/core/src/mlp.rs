//! Feed-forward engagement classifier.
//!
//! Dense layers with tanh or ReLU hidden units and a single logistic output,
//! trained by seeded mini-batch gradient descent on mean binary
//! cross-entropy. Raw features are standardised with constants stored in the
//! model, so a saved model is self-contained.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sweep::{EngagementDataset, GridSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the activation output `a` and input `z`.
    fn slope(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    /// Input width, hidden widths..., 1.
    pub layer_sizes: Vec<usize>,
    pub hidden_activation: Activation,
}

impl MlpSpec {
    pub fn validate(&self) -> Result<()> {
        let s = &self.layer_sizes;
        if s.len() < 3 {
            return Err(Error::InvalidParams(
                "network needs an input size, at least one hidden layer and an output".into(),
            ));
        }
        if s.last() != Some(&1) {
            return Err(Error::InvalidParams("output layer must have size 1".into()));
        }
        if s.contains(&0) {
            return Err(Error::InvalidParams("layer sizes must be positive".into()));
        }
        Ok(())
    }

    pub fn input_size(&self) -> usize {
        self.layer_sizes[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub validation_fraction: f64,
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidParams("epochs must be > 0".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidParams("batch_size must be > 0".into()));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 0.5) {
            return Err(Error::InvalidParams(format!(
                "validation_fraction must lie in (0, 0.5), got {}",
                self.validation_fraction
            )));
        }
        Ok(())
    }
}

/// One dense layer; `weights[o][i]` connects input `i` to output `o`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
}

impl DenseLayer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weights: vec![vec![0.0; inputs]; outputs],
            biases: vec![0.0; outputs],
        }
    }

    fn affine(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub spec: MlpSpec,
    pub feature_means: Vec<f64>,
    pub feature_stds: Vec<f64>,
    pub layers: Vec<DenseLayer>,
}

/// Gradient with the same shape as the model's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub layers: Vec<DenseLayer>,
}

impl Gradient {
    pub fn flatten(&self) -> Vec<f64> {
        flatten_layers(&self.layers)
    }
}

fn flatten_layers(layers: &[DenseLayer]) -> Vec<f64> {
    let mut out = Vec::new();
    for l in layers {
        for row in &l.weights {
            out.extend_from_slice(row);
        }
        out.extend_from_slice(&l.biases);
    }
    out
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `−[y·ln σ(z) + (1−y)·ln(1−σ(z))]`, computed without overflow.
fn bce_from_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

impl MlpModel {
    /// Model with all weights and biases zero and identity standardisation.
    pub fn zeros(spec: MlpSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.input_size();
        let layers = spec
            .layer_sizes
            .windows(2)
            .map(|w| DenseLayer::zeros(w[0], w[1]))
            .collect();
        Ok(Self {
            feature_means: vec![0.0; n],
            feature_stds: vec![1.0; n],
            layers,
            spec,
        })
    }

    pub fn glorot(spec: MlpSpec, rng: &mut ChaCha8Rng) -> Result<Self> {
        let mut m = Self::zeros(spec)?;
        for l in &mut m.layers {
            let (fan_out, fan_in) = (l.weights.len(), l.weights[0].len());
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for row in &mut l.weights {
                for w in row.iter_mut() {
                    *w = rng.gen_range(-limit..limit);
                }
            }
        }
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        let n = self.spec.input_size();
        if self.feature_means.len() != n || self.feature_stds.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: self.feature_means.len().min(self.feature_stds.len()),
            });
        }
        if self.feature_stds.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidParams("feature stds must be > 0".into()));
        }
        if self.layers.len() + 1 != self.spec.layer_sizes.len() {
            return Err(Error::Dimension {
                expected: self.spec.layer_sizes.len() - 1,
                got: self.layers.len(),
            });
        }
        for (l, w) in self.layers.iter().zip(self.spec.layer_sizes.windows(2)) {
            if l.weights.len() != w[1] || l.biases.len() != w[1] {
                return Err(Error::Dimension {
                    expected: w[1],
                    got: l.weights.len(),
                });
            }
            if let Some(row) = l.weights.iter().find(|r| r.len() != w[0]) {
                return Err(Error::Dimension {
                    expected: w[0],
                    got: row.len(),
                });
            }
        }
        Ok(())
    }

    fn standardize(&self, features: &[f64]) -> Result<Vec<f64>> {
        let n = self.spec.input_size();
        if features.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: features.len(),
            });
        }
        Ok(features
            .iter()
            .zip(self.feature_means.iter().zip(&self.feature_stds))
            .map(|(x, (m, s))| (x - m) / s)
            .collect())
    }

    /// Pre-activations and activations of every layer for one standardised input.
    fn trace(&self, x: Vec<f64>) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let act = self.spec.hidden_activation;
        let last = self.layers.len() - 1;
        let mut zs = Vec::with_capacity(self.layers.len());
        let mut acts = vec![x];
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.affine(acts.last().expect("input present"));
            if i < last {
                acts.push(z.iter().map(|&v| act.apply(v)).collect());
            }
            zs.push(z);
        }
        (zs, acts)
    }

    fn logit(&self, x: Vec<f64>) -> f64 {
        let (zs, _) = self.trace(x);
        zs.last().expect("output layer")[0]
    }

    /// Probability of engagement for one raw feature vector.
    pub fn forward(&self, features: &[f64]) -> Result<f64> {
        Ok(logistic(self.logit(self.standardize(features)?)))
    }

    pub fn parameters(&self) -> Vec<f64> {
        flatten_layers(&self.layers)
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.biases.len() * (l.weights[0].len() + 1))
            .sum()
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.parameter_count() {
            return Err(Error::Dimension {
                expected: self.parameter_count(),
                got: params.len(),
            });
        }
        let mut it = params.iter().copied();
        for l in &mut self.layers {
            for row in &mut l.weights {
                for w in row.iter_mut() {
                    *w = it.next().expect("length checked");
                }
            }
            for b in &mut l.biases {
                *b = it.next().expect("length checked");
            }
        }
        Ok(())
    }

    /// Mean binary cross-entropy over the batch and its gradient.
    pub fn loss_and_gradient(&self, features: &[Vec<f64>], labels: &[bool]) -> Result<(f64, Gradient)> {
        if features.len() != labels.len() || features.is_empty() {
            return Err(Error::Dimension {
                expected: features.len(),
                got: labels.len(),
            });
        }
        let xs = features
            .iter()
            .map(|f| self.standardize(f))
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<(&[f64], bool)> = xs.iter().map(|x| x.as_slice()).zip(labels.iter().copied()).collect();
        Ok(self.batch_gradient(&refs))
    }

    fn batch_gradient(&self, batch: &[(&[f64], bool)]) -> (f64, Gradient) {
        let act = self.spec.hidden_activation;
        let mut grad = Gradient {
            layers: self
                .layers
                .iter()
                .map(|l| DenseLayer::zeros(l.weights[0].len(), l.weights.len()))
                .collect(),
        };
        let scale = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        for &(x, label) in batch {
            let y = if label { 1.0 } else { 0.0 };
            let (zs, acts) = self.trace(x.to_vec());
            let z_out = zs.last().expect("output layer")[0];
            loss += bce_from_logit(z_out, y);
            let mut delta = vec![(logistic(z_out) - y) * scale];
            for li in (0..self.layers.len()).rev() {
                let input = &acts[li];
                let g = &mut grad.layers[li];
                for (o, d) in delta.iter().enumerate() {
                    for (gw, a) in g.weights[o].iter_mut().zip(input) {
                        *gw += d * a;
                    }
                    g.biases[o] += d;
                }
                if li == 0 {
                    break;
                }
                let layer = &self.layers[li];
                let prev_z = &zs[li - 1];
                delta = (0..input.len())
                    .map(|i| {
                        let back: f64 = delta
                            .iter()
                            .enumerate()
                            .map(|(o, d)| d * layer.weights[o][i])
                            .sum();
                        back * act.slope(prev_z[i], input[i])
                    })
                    .collect();
            }
        }
        (loss * scale, grad)
    }

    fn apply_gradient(&mut self, grad: &Gradient, learning_rate: f64) {
        for (l, g) in self.layers.iter_mut().zip(&grad.layers) {
            for (row, grow) in l.weights.iter_mut().zip(&g.weights) {
                for (w, gw) in row.iter_mut().zip(grow) {
                    *w -= learning_rate * gw;
                }
            }
            for (b, gb) in l.biases.iter_mut().zip(&g.biases) {
                *b -= learning_rate * gb;
            }
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let m: MlpModel = serde_json::from_str(text).map_err(|e| Error::Format {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, &path.display().to_string())
    }
}

/// Feature rows with binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingData {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
}

impl From<&EngagementDataset> for TrainingData {
    fn from(ds: &EngagementDataset) -> Self {
        Self {
            features: ds.features(),
            labels: ds.labels(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMetrics {
    pub train_samples: usize,
    pub validation_samples: usize,
    pub train_accuracy: f64,
    pub validation_accuracy: f64,
    pub validation_precision: f64,
    pub validation_recall: f64,
    /// Mean training loss after each epoch.
    pub loss_history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct Confusion {
    tp: usize,
    fp: usize,
    tn: usize,
    fn_: usize,
}

impl Confusion {
    fn add(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }

    fn accuracy(&self) -> f64 {
        let n = self.tp + self.fp + self.tn + self.fn_;
        if n == 0 {
            return 0.0;
        }
        (self.tp + self.tn) as f64 / n as f64
    }

    fn precision(&self) -> f64 {
        if self.tp + self.fp == 0 {
            return 0.0;
        }
        self.tp as f64 / (self.tp + self.fp) as f64
    }

    fn recall(&self) -> f64 {
        if self.tp + self.fn_ == 0 {
            return 0.0;
        }
        self.tp as f64 / (self.tp + self.fn_) as f64
    }
}

/// Trains a classifier; fully deterministic for a given seed.
pub fn train(data: &TrainingData, spec: &MlpSpec, cfg: &TrainConfig) -> Result<(MlpModel, TrainMetrics)> {
    spec.validate()?;
    cfg.validate()?;
    let n = data.features.len();
    if n != data.labels.len() {
        return Err(Error::Dimension {
            expected: n,
            got: data.labels.len(),
        });
    }
    if n < 2 {
        return Err(Error::Training("need at least two samples".into()));
    }
    let width = spec.input_size();
    if let Some(row) = data.features.iter().find(|r| r.len() != width) {
        return Err(Error::Dimension {
            expected: width,
            got: row.len(),
        });
    }
    let positives = data.labels.iter().filter(|&&l| l).count();
    if positives == 0 || positives == n {
        return Err(Error::Training(
            "dataset contains a single class; both engaged and non-engaged samples are required"
                .into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let n_val = ((n as f64 * cfg.validation_fraction).round() as usize).clamp(1, n - 1);
    let (val_idx, train_idx) = order.split_at(n_val);
    let mut train_idx = train_idx.to_vec();

    let mut model = MlpModel::glorot(spec.clone(), &mut rng)?;
    for j in 0..width {
        let vals: Vec<f64> = train_idx.iter().map(|&i| data.features[i][j]).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
        model.feature_means[j] = mean;
        model.feature_stds[j] = if var > 0.0 { var.sqrt() } else { 1.0 };
    }

    let standardized: Vec<Vec<f64>> = data
        .features
        .iter()
        .map(|f| model.standardize(f))
        .collect::<Result<_>>()?;
    let full: Vec<(&[f64], bool)> = train_idx
        .iter()
        .map(|&i| (standardized[i].as_slice(), data.labels[i]))
        .collect();

    let mut loss_history = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        train_idx.shuffle(&mut rng);
        for chunk in train_idx.chunks(cfg.batch_size) {
            let batch: Vec<(&[f64], bool)> = chunk
                .iter()
                .map(|&i| (standardized[i].as_slice(), data.labels[i]))
                .collect();
            let (_, grad) = model.batch_gradient(&batch);
            model.apply_gradient(&grad, cfg.learning_rate);
        }
        let (loss, _) = model.batch_gradient(&full);
        if !loss.is_finite() {
            return Err(Error::Training("loss diverged; lower the learning rate".into()));
        }
        loss_history.push(loss);
    }

    let confusion = |idx: &[usize]| {
        let mut c = Confusion::default();
        for &i in idx {
            let p = logistic(model.logit(standardized[i].clone()));
            c.add(p >= 0.5, data.labels[i]);
        }
        c
    };
    let train_c = confusion(&train_idx);
    let val_c = confusion(val_idx);
    let metrics = TrainMetrics {
        train_samples: train_idx.len(),
        validation_samples: val_idx.len(),
        train_accuracy: train_c.accuracy(),
        validation_accuracy: val_c.accuracy(),
        validation_precision: val_c.precision(),
        validation_recall: val_c.recall(),
        loss_history,
    };
    Ok((model, metrics))
}

/// Engaged when the predicted probability is at least one half.
pub fn predict_engagement(model: &MlpModel, shoe_mass: f64, preload: f64, extra: &[f64]) -> Result<bool> {
    let mut features = vec![shoe_mass, preload];
    features.extend_from_slice(extra);
    Ok(model.forward(&features)? >= 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPrediction {
    pub shoe_mass: f64,
    pub preload: f64,
    pub probability: f64,
    pub engaged: bool,
}

pub const DECISION_GRID_HEADER: &str = "shoe_mass,preload,probability,engaged";

/// Prediction at every grid node, mass-major order.
pub fn decision_grid(model: &MlpModel, grid: &GridSpec) -> Result<Vec<GridPrediction>> {
    grid.nodes()
        .into_iter()
        .map(|(m, f)| {
            let p = model.forward(&[m, f])?;
            Ok(GridPrediction {
                shoe_mass: m,
                preload: f,
                probability: p,
                engaged: p >= 0.5,
            })
        })
        .collect()
}

pub fn write_decision_grid_csv<W: Write>(mut out: W, grid: &[GridPrediction]) -> std::io::Result<()> {
    writeln!(out, "{DECISION_GRID_HEADER}")?;
    for g in grid {
        writeln!(
            out,
            "{},{},{},{}",
            g.shoe_mass,
            g.preload,
            g.probability,
            u8::from(g.engaged)
        )?;
    }
    Ok(())
}
