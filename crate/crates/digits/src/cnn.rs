//! One convolution layer (8 filters, 3x3, valid) with ReLU and 2x2 max
//! pooling, followed by a fully connected softmax layer.
//!
//! Inference sums the fully connected layer per pooled row and then adds the
//! 13 row partials in a fixed order. [`IncrementalForward`] exploits this: when
//! a new input differs from the previous one in a few pixels it recomputes
//! only the convolution outputs, pooled cells and row partials those pixels
//! touch, and the result is bit-identical to a full pass.

use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::mnist::{ImageSet, CLASSES, PIXELS, SIDE};

pub const FILTERS: usize = 8;
const KERNEL: usize = 3;
const CONV: usize = SIDE - KERNEL + 1;
const POOL: usize = CONV / 2;
/// Width of the flattened pooled layer.
pub const FEATURES: usize = POOL * POOL * FILTERS;
const ROW_FEATURES: usize = POOL * FILTERS;

const CONV_W: usize = 0;
const CONV_B: usize = CONV_W + FILTERS * KERNEL * KERNEL;
/// Index of the first dense-layer weight in the parameter vector.
pub const FC_W: usize = CONV_B + FILTERS;
const FC_B: usize = FC_W + CLASSES * FEATURES;
pub const NUM_PARAMETERS: usize = FC_B + CLASSES;

const MAGIC: &[u8; 8] = b"TINYCNN1";

#[derive(Debug, Error)]
pub enum CnnError {
    #[error("training diverged: non-finite loss in epoch {epoch}")]
    Divergence { epoch: usize },
    #[error("need at least {min} training images, got {got}")]
    TooFewImages { min: usize, got: usize },
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("not a model file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// L2 penalty on weights (not biases).
    pub weight_decay: f64,
    /// Smallest accepted training set.
    pub min_images: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            momentum: 0.9,
            epochs: 5,
            batch_size: 64,
            seed: 42,
            weight_decay: 0.0,
            min_images: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TinyCnn {
    params: Vec<f64>,
}

/// Intermediate values of one forward pass.
#[derive(Clone)]
struct Activations {
    /// Post-ReLU convolution, `(i * CONV + j) * FILTERS + f`.
    conv: Vec<f64>,
    /// Pooled features, `(a * POOL + b) * FILTERS + f`.
    pool: Vec<f64>,
    partial: Vec<[f64; CLASSES]>,
    logits: [f64; CLASSES],
}

impl Activations {
    fn new() -> Self {
        Self {
            conv: vec![0.0; CONV * CONV * FILTERS],
            pool: vec![0.0; FEATURES],
            partial: vec![[0.0; CLASSES]; POOL],
            logits: [0.0; CLASSES],
        }
    }
}

fn softmax(logits: &[f64; CLASSES]) -> [f64; CLASSES] {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p = [0.0; CLASSES];
    let mut sum = 0.0;
    for (pi, &l) in p.iter_mut().zip(logits) {
        *pi = (l - max).exp();
        sum += *pi;
    }
    for pi in &mut p {
        *pi /= sum;
    }
    p
}

impl TinyCnn {
    /// Randomly initialized network (He-scaled normal weights, zero biases).
    pub fn init(seed: u64) -> Self {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut params = vec![0.0; NUM_PARAMETERS];
        let conv = Normal::new(0.0, (2.0 / 9.0f64).sqrt()).unwrap();
        let fc = Normal::new(0.0, (2.0 / FEATURES as f64).sqrt()).unwrap();
        for w in &mut params[CONV_W..CONV_B] {
            *w = conv.sample(&mut rng);
        }
        for w in &mut params[FC_W..FC_B] {
            *w = fc.sample(&mut rng);
        }
        Self { params }
    }

    pub fn from_parameters(params: Vec<f64>) -> Result<Self, CnnError> {
        if params.len() != NUM_PARAMETERS {
            return Err(CnnError::Format(format!(
                "{} parameters, expected {NUM_PARAMETERS}",
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(CnnError::Format("non-finite parameter".into()));
        }
        Ok(Self { params })
    }

    pub fn parameters(&self) -> &[f64] {
        &self.params
    }

    #[inline]
    fn conv_at(&self, x: &[f64], i: usize, j: usize, out: &mut [f64]) {
        let mut patch = [0.0; KERNEL * KERNEL];
        for di in 0..KERNEL {
            for dj in 0..KERNEL {
                patch[di * KERNEL + dj] = x[(i + di) * SIDE + j + dj];
            }
        }
        for (f, o) in out.iter_mut().enumerate() {
            let w = &self.params[CONV_W + f * 9..CONV_W + f * 9 + 9];
            let mut s = self.params[CONV_B + f];
            for t in 0..9 {
                s += w[t] * patch[t];
            }
            *o = s.max(0.0);
        }
    }

    #[inline]
    fn pool_at(conv: &[f64], a: usize, b: usize, out: &mut [f64]) {
        let at = |i: usize, j: usize, f: usize| conv[(i * CONV + j) * FILTERS + f];
        let (i, j) = (2 * a, 2 * b);
        for (f, o) in out.iter_mut().enumerate() {
            *o = at(i, j, f).max(at(i, j + 1, f)).max(at(i + 1, j, f).max(at(i + 1, j + 1, f)));
        }
    }

    #[inline]
    fn row_partial(&self, pool: &[f64], a: usize) -> [f64; CLASSES] {
        let feats = &pool[a * ROW_FEATURES..(a + 1) * ROW_FEATURES];
        let mut out = [0.0; CLASSES];
        for (c, o) in out.iter_mut().enumerate() {
            let w = &self.params[FC_W + c * FEATURES + a * ROW_FEATURES..][..ROW_FEATURES];
            *o = w.iter().zip(feats).map(|(w, v)| w * v).sum();
        }
        out
    }

    fn sum_logits(&self, act: &mut Activations) {
        for c in 0..CLASSES {
            let mut s = self.params[FC_B + c];
            for row in &act.partial {
                s += row[c];
            }
            act.logits[c] = s;
        }
    }

    fn forward(&self, x: &[f64], act: &mut Activations) {
        for i in 0..CONV {
            for j in 0..CONV {
                let k = (i * CONV + j) * FILTERS;
                self.conv_at(x, i, j, &mut act.conv[k..k + FILTERS]);
            }
        }
        for a in 0..POOL {
            for b in 0..POOL {
                let k = (a * POOL + b) * FILTERS;
                Self::pool_at(&act.conv, a, b, &mut act.pool[k..k + FILTERS]);
            }
        }
        for a in 0..POOL {
            act.partial[a] = self.row_partial(&act.pool, a);
        }
        self.sum_logits(act);
    }

    /// Class probabilities for a 784-pixel image.
    pub fn predict_proba(&self, image: &[f64]) -> [f64; CLASSES] {
        assert_eq!(image.len(), PIXELS, "image must have 784 pixels");
        let mut act = Activations::new();
        self.forward(image, &mut act);
        softmax(&act.logits)
    }

    pub fn predict(&self, image: &[f64]) -> usize {
        argmax(&self.predict_proba(image))
    }

    pub fn accuracy(&self, set: &ImageSet) -> f64 {
        if set.is_empty() {
            return 0.0;
        }
        let correct = (0..set.len())
            .into_par_iter()
            .filter(|&i| self.predict(&set.image(i)) == set.label(i))
            .count();
        correct as f64 / set.len() as f64
    }

    /// Cross-entropy loss of one example and its gradient with respect to
    /// every parameter, in [`TinyCnn::parameters`] order.
    pub fn loss_gradient(&self, image: &[f64], label: usize) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; NUM_PARAMETERS];
        let mut act = Activations::new();
        let loss = self.accumulate_gradient(image, label, &mut act, &mut grad);
        (loss, grad)
    }

    fn accumulate_gradient(&self, x: &[f64], label: usize, act: &mut Activations, grad: &mut [f64]) -> f64 {
        self.forward(x, act);
        let p = softmax(&act.logits);
        let loss = -p[label].max(f64::MIN_POSITIVE).ln();
        let mut dlogit = p;
        dlogit[label] -= 1.0;
        for c in 0..CLASSES {
            grad[FC_B + c] += dlogit[c];
            let g = &mut grad[FC_W + c * FEATURES..FC_W + (c + 1) * FEATURES];
            for (gi, &v) in g.iter_mut().zip(&act.pool) {
                *gi += dlogit[c] * v;
            }
        }
        for a in 0..POOL {
            for b in 0..POOL {
                for f in 0..FILTERS {
                    let t = (a * POOL + b) * FILTERS + f;
                    let pooled = act.pool[t];
                    if pooled <= 0.0 {
                        continue;
                    }
                    let dpool: f64 = (0..CLASSES).map(|c| self.params[FC_W + c * FEATURES + t] * dlogit[c]).sum();
                    // first maximal position in the pooling order
                    let (i, j) = [(0, 0), (0, 1), (1, 0), (1, 1)]
                        .iter()
                        .map(|&(di, dj)| (2 * a + di, 2 * b + dj))
                        .find(|&(i, j)| act.conv[(i * CONV + j) * FILTERS + f] == pooled)
                        .expect("pooled value comes from its window");
                    grad[CONV_B + f] += dpool;
                    for di in 0..KERNEL {
                        for dj in 0..KERNEL {
                            grad[CONV_W + f * 9 + di * KERNEL + dj] += dpool * x[(i + di) * SIDE + j + dj];
                        }
                    }
                }
            }
        }
        loss
    }

    /// Mini-batch SGD with momentum on the cross-entropy loss. Seeded
    /// initialization and shuffling make the result a pure function of the
    /// data and configuration. Parameters are rounded to `f32` at the end so
    /// a saved and reloaded model is identical to the returned one.
    pub fn train(set: &ImageSet, config: &TrainConfig) -> Result<Self, CnnError> {
        if set.len() < config.min_images {
            return Err(CnnError::TooFewImages {
                min: config.min_images,
                got: set.len(),
            });
        }
        if config.batch_size == 0 || config.epochs == 0 || !(config.learning_rate > 0.0) {
            return Err(CnnError::Config(format!(
                "batch_size, epochs and learning_rate must be positive: {config:?}"
            )));
        }
        let mut model = Self::init(config.seed);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed);
        let mut order: Vec<usize> = (0..set.len()).collect();
        let mut velocity = vec![0.0; NUM_PARAMETERS];
        let mut grad = vec![0.0; NUM_PARAMETERS];
        let mut act = Activations::new();
        let mut image = vec![0.0; PIXELS];
        for epoch in 0..config.epochs {
            order.shuffle(&mut rng);
            let mut epoch_loss = 0.0;
            for batch in order.chunks(config.batch_size) {
                grad.iter_mut().for_each(|g| *g = 0.0);
                for &i in batch {
                    for (v, &b) in image.iter_mut().zip(set.raw(i)) {
                        *v = b as f64 / 255.0;
                    }
                    epoch_loss += model.accumulate_gradient(&image, set.label(i), &mut act, &mut grad);
                }
                let scale = 1.0 / batch.len() as f64;
                for (k, (w, (g, v))) in model
                    .params
                    .iter_mut()
                    .zip(grad.iter().zip(velocity.iter_mut()))
                    .enumerate()
                {
                    let decay = if is_weight(k) { config.weight_decay * *w } else { 0.0 };
                    *v = config.momentum * *v + g * scale + decay;
                    *w -= config.learning_rate * *v;
                }
            }
            if !epoch_loss.is_finite() || model.params.iter().any(|p| !p.is_finite()) {
                return Err(CnnError::Divergence { epoch: epoch + 1 });
            }
        }
        for p in &mut model.params {
            *p = *p as f32 as f64;
        }
        Ok(model)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 20 + 4 * NUM_PARAMETERS);
        out.extend_from_slice(MAGIC);
        for d in [SIDE, FILTERS, KERNEL, CLASSES, FEATURES] {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &p in &self.params {
            out.extend_from_slice(&(p as f32).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CnnError> {
        if bytes.len() < 28 || &bytes[..8] != MAGIC {
            return Err(CnnError::Format("missing TINYCNN1 header".into()));
        }
        let dims: Vec<u32> = bytes[8..28]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        let expected = [SIDE, FILTERS, KERNEL, CLASSES, FEATURES].map(|d| d as u32);
        if dims != expected {
            return Err(CnnError::Format(format!("dimensions {dims:?}, expected {expected:?}")));
        }
        let body = &bytes[28..];
        if body.len() != 4 * NUM_PARAMETERS {
            return Err(CnnError::Format(format!(
                "{} parameter bytes, expected {}",
                body.len(),
                4 * NUM_PARAMETERS
            )));
        }
        let params = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        Self::from_parameters(params)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CnnError> {
        std::fs::File::create(path)?.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CnnError> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    /// Hex SHA-256 of the serialized weights.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

fn is_weight(k: usize) -> bool {
    (CONV_W..CONV_B).contains(&k) || (FC_W..FC_B).contains(&k)
}

pub fn argmax(p: &[f64]) -> usize {
    p.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
        .0
}

/// Pixels changed beyond this count trigger a full forward pass.
const INCREMENTAL_LIMIT: usize = 24;

/// Forward pass that reuses the previous input's activations.
pub struct IncrementalForward<'a> {
    model: &'a TinyCnn,
    x: Vec<f64>,
    act: Activations,
    primed: bool,
    stamp: u32,
    conv_mark: Vec<u32>,
    pool_mark: Vec<u32>,
    row_mark: Vec<u32>,
    dirty_conv: Vec<(usize, usize)>,
    dirty_pool: Vec<(usize, usize)>,
    dirty_rows: Vec<usize>,
}

impl<'a> IncrementalForward<'a> {
    pub fn new(model: &'a TinyCnn) -> Self {
        Self {
            model,
            x: vec![0.0; PIXELS],
            act: Activations::new(),
            primed: false,
            stamp: 0,
            conv_mark: vec![0; CONV * CONV],
            pool_mark: vec![0; POOL * POOL],
            row_mark: vec![0; POOL],
            dirty_conv: Vec::new(),
            dirty_pool: Vec::new(),
            dirty_rows: Vec::new(),
        }
    }

    pub fn predict_proba(&mut self, image: &[f64]) -> [f64; CLASSES] {
        assert_eq!(image.len(), PIXELS, "image must have 784 pixels");
        let changed = if self.primed {
            let mut n = 0;
            for (a, b) in self.x.iter().zip(image) {
                n += usize::from(a.to_bits() != b.to_bits());
            }
            n
        } else {
            usize::MAX
        };
        if changed == 0 {
            return softmax(&self.act.logits);
        }
        if changed > INCREMENTAL_LIMIT {
            self.x.copy_from_slice(image);
            self.model.forward(&self.x, &mut self.act);
            self.primed = true;
            return softmax(&self.act.logits);
        }
        self.stamp = self.stamp.wrapping_add(1);
        if self.stamp == 0 {
            self.conv_mark.iter_mut().for_each(|m| *m = 0);
            self.pool_mark.iter_mut().for_each(|m| *m = 0);
            self.row_mark.iter_mut().for_each(|m| *m = 0);
            self.stamp = 1;
        }
        let s = self.stamp;
        self.dirty_conv.clear();
        self.dirty_pool.clear();
        self.dirty_rows.clear();
        for p in 0..PIXELS {
            if self.x[p].to_bits() == image[p].to_bits() {
                continue;
            }
            self.x[p] = image[p];
            let (r, c) = (p / SIDE, p % SIDE);
            for i in r.saturating_sub(KERNEL - 1)..=r.min(CONV - 1) {
                for j in c.saturating_sub(KERNEL - 1)..=c.min(CONV - 1) {
                    let m = &mut self.conv_mark[i * CONV + j];
                    if *m != s {
                        *m = s;
                        self.dirty_conv.push((i, j));
                    }
                }
            }
        }
        for &(i, j) in &self.dirty_conv {
            let k = (i * CONV + j) * FILTERS;
            self.model.conv_at(&self.x, i, j, &mut self.act.conv[k..k + FILTERS]);
            let (a, b) = (i / 2, j / 2);
            if a < POOL && b < POOL {
                let m = &mut self.pool_mark[a * POOL + b];
                if *m != s {
                    *m = s;
                    self.dirty_pool.push((a, b));
                }
            }
        }
        for &(a, b) in &self.dirty_pool {
            let k = (a * POOL + b) * FILTERS;
            TinyCnn::pool_at(&self.act.conv, a, b, &mut self.act.pool[k..k + FILTERS]);
            if self.row_mark[a] != s {
                self.row_mark[a] = s;
                self.dirty_rows.push(a);
            }
        }
        for &a in &self.dirty_rows {
            self.act.partial[a] = self.model.row_partial(&self.act.pool, a);
        }
        self.model.sum_logits(&mut self.act);
        softmax(&self.act.logits)
    }
}
