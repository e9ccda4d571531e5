//! Pixel sensitivity maps, importance rankings and block evaluation.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use gsa_core::analyzers::{
    analyze_delta, analyze_dgsm, analyze_fast, analyze_morris, analyze_rbd, analyze_sobol, default_classes,
    AnalyzerError, Warning,
};
use gsa_core::samplers::{
    balanced_sample, fast_sample, finite_difference_sample, latin_hypercube_sample, morris_sample, saltelli_sample,
    FastConfig, MorrisConfig, RbdConfig, SamplerError,
};
use gsa_core::{OutputVector, ProblemSpec, SampleMatrix};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cnn::{IncrementalForward, TinyCnn};
use crate::mnist::{ImageSet, CLASSES, PIXELS, SIDE};

/// Pixel counts of the importance blocks, largest first.
pub const BLOCK_SIZES: [usize; 8] = [784, 684, 584, 484, 384, 284, 184, 84];
pub const DEFAULT_BUDGET: usize = 10_000_000;

#[derive(Debug, Error)]
pub enum CaseStudyError {
    #[error("{method} would need {projected} model evaluations, above the budget of {cap}")]
    Budget {
        method: Method,
        projected: usize,
        cap: usize,
    },
    #[error("the image subset is empty")]
    EmptySubset,
    #[error("unknown method `{0}`")]
    UnknownMethod(String),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Analyzer(#[from] AnalyzerError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("malformed saliency file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Sobol,
    Fast,
    Rbd,
    Hybrid,
    Morris,
    Dgsm,
    Delta,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Sobol,
        Method::Fast,
        Method::Rbd,
        Method::Hybrid,
        Method::Morris,
        Method::Dgsm,
        Method::Delta,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Sobol => "sobol",
            Method::Fast => "fast",
            Method::Rbd => "rbd",
            Method::Hybrid => "hybrid",
            Method::Morris => "morris",
            Method::Dgsm => "dgsm",
            Method::Delta => "delta",
        }
    }

    /// Index that ranks pixels for this method.
    pub fn primary_index(self) -> &'static str {
        match self {
            Method::Sobol | Method::Fast => "ST",
            Method::Rbd | Method::Hybrid => "S1",
            Method::Morris => "mu_star",
            Method::Dgsm => "v",
            Method::Delta => "delta",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = CaseStudyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| CaseStudyError::UnknownMethod(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SobolSettings {
    pub base_n: usize,
    pub bootstrap: usize,
}

impl Default for SobolSettings {
    fn default() -> Self {
        Self { base_n: 300, bootstrap: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FastSettings {
    pub samples: usize,
    pub harmonics: usize,
}

impl Default for FastSettings {
    fn default() -> Self {
        Self { samples: 100, harmonics: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RbdSettings {
    pub samples: usize,
    pub harmonics: usize,
    /// Frequency groups; 1 is plain RBD.
    pub groups: usize,
}

impl RbdSettings {
    fn rbd() -> Self {
        Self {
            samples: 400,
            harmonics: 10,
            groups: 1,
        }
    }

    fn hybrid() -> Self {
        Self { groups: 2, ..Self::rbd() }
    }
}

impl Default for RbdSettings {
    fn default() -> Self {
        Self::rbd()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MorrisSettings {
    pub trajectories: usize,
    pub levels: usize,
}

impl Default for MorrisSettings {
    fn default() -> Self {
        Self {
            trajectories: 50,
            levels: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DgsmSettings {
    pub base_n: usize,
    pub step: f64,
}

impl Default for DgsmSettings {
    fn default() -> Self {
        Self {
            base_n: 1000,
            step: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeltaSettings {
    pub samples: usize,
    /// `None` picks `floor(min(48, samples / 16))`.
    pub classes: Option<usize>,
    pub bootstrap: usize,
}

impl Default for DeltaSettings {
    fn default() -> Self {
        Self {
            samples: 1000,
            classes: None,
            bootstrap: 0,
        }
    }
}

/// Per-method design sizes; defaults follow the published sample counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SaConfig {
    pub sobol: SobolSettings,
    pub fast: FastSettings,
    pub rbd: RbdSettings,
    pub hybrid: RbdSettings,
    pub morris: MorrisSettings,
    pub dgsm: DgsmSettings,
    pub delta: DeltaSettings,
}

impl Default for SaConfig {
    fn default() -> Self {
        Self {
            sobol: SobolSettings::default(),
            fast: FastSettings::default(),
            rbd: RbdSettings::rbd(),
            hybrid: RbdSettings::hybrid(),
            morris: MorrisSettings::default(),
            dgsm: DgsmSettings::default(),
            delta: DeltaSettings::default(),
        }
    }
}

impl SaConfig {
    pub fn new() -> Self {
        Self::default()
    }

    /// Model evaluations one image costs with `k` factors.
    pub fn evaluations_per_image(&self, method: Method, k: usize) -> usize {
        match method {
            Method::Sobol => self.sobol.base_n * (k + 2),
            Method::Fast => self.fast.samples * k,
            Method::Rbd => self.rbd.samples,
            Method::Hybrid => self.hybrid.samples,
            Method::Morris => self.morris.trajectories * (k + 1),
            Method::Dgsm => self.dgsm.base_n * (k + 1),
            Method::Delta => self.delta.samples,
        }
    }
}

/// A classifier viewed as a function from pixel vectors to one class probability.
pub trait PixelModel: Sync {
    /// Probability of `class` for every row of `samples`.
    fn class_probabilities(&self, samples: &SampleMatrix, class: usize) -> Vec<f64>;
}

const ROW_CHUNK: usize = 4096;

impl PixelModel for TinyCnn {
    fn class_probabilities(&self, samples: &SampleMatrix, class: usize) -> Vec<f64> {
        let starts: Vec<usize> = (0..samples.rows()).step_by(ROW_CHUNK).collect();
        starts
            .par_iter()
            .flat_map_iter(|&start| {
                let mut fwd = IncrementalForward::new(self);
                let end = (start + ROW_CHUNK).min(samples.rows());
                (start..end)
                    .map(|r| fwd.predict_proba(&samples.row(r))[class])
                    .collect::<Vec<_>>()
            })
            .collect()
    }
}

/// Per-pixel index averaged over the analysed images.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PixelSensitivityMap {
    pub method: Method,
    pub index_name: String,
    pub values: Vec<f64>,
    /// Test-set indices of the analysed images.
    pub images_used: Vec<usize>,
    pub evaluations: usize,
    /// Images whose model output never varied.
    pub constant_images: usize,
    pub warning: Option<Warning>,
    pub seed: u64,
}

impl PixelSensitivityMap {
    /// `method` for the primary index, `method_index` otherwise.
    pub fn label(&self) -> String {
        if self.index_name == self.method.primary_index() {
            self.method.as_str().to_string()
        } else {
            format!("{}_{}", self.method, self.index_name)
        }
    }
}

fn pixel_spec() -> ProblemSpec {
    let names = (0..PIXELS).map(|p| format!("p{p}")).collect();
    ProblemSpec::new(names, vec![(0.0, 1.0); PIXELS]).expect("valid pixel bounds")
}

/// Named index vectors of one image's analysis, primary first.
fn analyse_image(
    method: Method,
    config: &SaConfig,
    spec: &ProblemSpec,
    model: &dyn PixelModel,
    class: usize,
    seed: u64,
) -> Result<(Vec<(&'static str, Vec<f64>)>, bool, usize), CaseStudyError> {
    let samples = match method {
        Method::Sobol => saltelli_sample(spec, config.sobol.base_n, false, seed)?,
        Method::Fast => fast_sample(
            spec,
            &FastConfig {
                harmonics: config.fast.harmonics,
                ..FastConfig::new(config.fast.samples)
            },
        )?,
        Method::Rbd | Method::Hybrid => {
            let s = if method == Method::Rbd { &config.rbd } else { &config.hybrid };
            balanced_sample(
                spec,
                &RbdConfig {
                    samples: s.samples,
                    harmonics: s.harmonics,
                    groups: s.groups,
                },
                seed,
            )?
        }
        Method::Morris => morris_sample(
            spec,
            &MorrisConfig {
                trajectories: config.morris.trajectories,
                levels: config.morris.levels,
            },
            seed,
        )?,
        Method::Dgsm => finite_difference_sample(spec, config.dgsm.base_n, config.dgsm.step, seed)?,
        Method::Delta => latin_hypercube_sample(spec, config.delta.samples, seed)?,
    };
    let outputs = OutputVector {
        values: model.class_probabilities(&samples, class),
        sample_id: samples.id(),
    };
    let rows = samples.rows();
    let (indices, warning) = match method {
        Method::Sobol => {
            let s = analyze_sobol(&samples, &outputs, config.sobol.bootstrap)?;
            (vec![("ST", s.st), ("S1", s.s1)], s.warning)
        }
        Method::Fast => {
            let f = analyze_fast(&samples, &outputs)?;
            (vec![("ST", f.st.expect("FAST reports ST")), ("S1", f.s1)], f.warning)
        }
        Method::Rbd | Method::Hybrid => {
            let r = analyze_rbd(&samples, &outputs)?;
            (vec![("S1", r.s1)], r.warning)
        }
        Method::Morris => {
            let m = analyze_morris(&samples, &outputs)?;
            (vec![("mu_star", m.mu_star), ("sigma", m.sigma)], m.warning)
        }
        Method::Dgsm => {
            let d = analyze_dgsm(&samples, &outputs)?;
            (vec![("v", d.v)], d.warning)
        }
        Method::Delta => {
            let classes = config.delta.classes.unwrap_or_else(|| default_classes(rows));
            let d = analyze_delta(&samples, &outputs, classes, config.delta.bootstrap)?;
            (vec![("delta", d.delta)], d.warning)
        }
    };
    Ok((indices, warning.is_some(), rows))
}

/// Sensitivity of the true-class probability to every pixel, averaged over
/// `subset_n` test images chosen round-robin over the classes.
///
/// Returns the primary map first; Sobol and FAST also return S1, Morris
/// also returns sigma. Fails before any evaluation when the projected number
/// of model calls exceeds `budget`.
pub fn pixel_sensitivity(
    method: Method,
    model: &dyn PixelModel,
    images: &ImageSet,
    subset_n: usize,
    config: &SaConfig,
    seed: u64,
    budget: usize,
) -> Result<Vec<PixelSensitivityMap>, CaseStudyError> {
    let chosen = images.stratified(subset_n);
    if chosen.is_empty() {
        return Err(CaseStudyError::EmptySubset);
    }
    let projected = config.evaluations_per_image(method, PIXELS) * chosen.len();
    if projected > budget {
        return Err(CaseStudyError::Budget {
            method,
            projected,
            cap: budget,
        });
    }
    let spec = pixel_spec();
    let mut sums: Vec<(&'static str, Vec<f64>)> = Vec::new();
    let mut evaluations = 0;
    let mut constant_images = 0;
    for (t, &img) in chosen.iter().enumerate() {
        let image_seed = seed.wrapping_add((t as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let (indices, constant, rows) = analyse_image(method, config, &spec, model, images.label(img), image_seed)?;
        evaluations += rows;
        constant_images += usize::from(constant);
        if sums.is_empty() {
            sums = indices.iter().map(|(n, _)| (*n, vec![0.0; PIXELS])).collect();
        }
        for ((_, acc), (_, v)) in sums.iter_mut().zip(&indices) {
            for (a, x) in acc.iter_mut().zip(v) {
                *a += x.max(0.0);
            }
        }
    }
    let n = chosen.len() as f64;
    let warning = (constant_images == chosen.len()).then_some(Warning::ConstantOutput);
    Ok(sums
        .into_iter()
        .map(|(name, acc)| PixelSensitivityMap {
            method,
            index_name: name.to_string(),
            values: acc.into_iter().map(|v| v / n).collect(),
            images_used: chosen.clone(),
            evaluations,
            constant_images,
            warning,
            seed,
        })
        .collect())
}

/// Pixels ordered by decreasing index value, ties by increasing pixel id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    pub label: String,
    pub order: Vec<usize>,
}

pub fn rank_pixels(map: &PixelSensitivityMap) -> FeatureRanking {
    FeatureRanking {
        label: map.label(),
        order: rank_values(&map.values),
    }
}

pub fn rank_values(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub train_subsample: usize,
    pub test_subsample: usize,
    pub neighbors: usize,
    pub clusters: usize,
    pub restarts: usize,
    pub max_iterations: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            train_subsample: 5000,
            test_subsample: 2000,
            neighbors: 3,
            clusters: 10,
            restarts: 5,
            max_iterations: 100,
        }
    }
}

/// Scores of the nested top and bottom pixel blocks, largest block first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockEvaluation {
    pub method: String,
    pub block_sizes: Vec<usize>,
    pub accuracy_top: Vec<f64>,
    pub accuracy_bottom: Vec<f64>,
    pub clustering_top: Vec<f64>,
    pub clustering_bottom: Vec<f64>,
}

impl BlockEvaluation {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("block_size,accuracy_top,accuracy_bottom,clustering_top,clustering_bottom\n");
        for i in 0..self.block_sizes.len() {
            writeln!(
                out,
                "{},{:.6},{:.6},{:.6},{:.6}",
                self.block_sizes[i],
                self.accuracy_top[i],
                self.accuracy_bottom[i],
                self.clustering_top[i],
                self.clustering_bottom[i]
            )
            .unwrap();
        }
        out
    }

    pub fn from_csv(method: &str, text: &str) -> Result<Self, CaseStudyError> {
        let mut e = BlockEvaluation {
            method: method.to_string(),
            block_sizes: Vec::new(),
            accuracy_top: Vec::new(),
            accuracy_bottom: Vec::new(),
            clustering_top: Vec::new(),
            clustering_bottom: Vec::new(),
        };
        for (n, line) in text.lines().skip(1).filter(|l| !l.trim().is_empty()).enumerate() {
            let bad = || CaseStudyError::Format(format!("{method} line {}: `{line}`", n + 2));
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(bad());
            }
            e.block_sizes.push(fields[0].parse().map_err(|_| bad())?);
            let score = |i: usize| fields[i].parse::<f64>().map_err(|_| bad());
            e.accuracy_top.push(score(1)?);
            e.accuracy_bottom.push(score(2)?);
            e.clustering_top.push(score(3)?);
            e.clustering_bottom.push(score(4)?);
        }
        if e.block_sizes.is_empty() {
            return Err(CaseStudyError::Format(format!("{method}: no blocks")));
        }
        Ok(e)
    }

    /// Top and bottom accuracy of the smallest block.
    pub fn smallest_block(&self) -> (f64, f64) {
        (
            *self.accuracy_top.last().expect("at least one block"),
            *self.accuracy_bottom.last().expect("at least one block"),
        )
    }
}

fn subsample(n: usize, m: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    idx.truncate(m.min(n));
    idx.sort_unstable();
    idx
}

/// Nearest-neighbour accuracy for each prefix length of `order`.
///
/// Squared distances are summed exactly in integers over raw pixel bytes,
/// one pixel at a time in `order`, so every prefix is scored in one pass and
/// the result for a pixel set does not depend on the order it was visited.
fn knn_prefix_accuracy(
    train: &ImageSet,
    train_idx: &[usize],
    test: &ImageSet,
    test_idx: &[usize],
    order: &[usize],
    prefixes: &[usize],
    k: usize,
) -> Vec<f64> {
    let n = train_idx.len();
    let depth = *prefixes.last().unwrap_or(&0);
    // pixel-major training bytes in visiting order
    let mut columns = vec![0u8; depth * n];
    for (pos, &p) in order[..depth].iter().enumerate() {
        for (j, &t) in train_idx.iter().enumerate() {
            columns[pos * n + j] = train.raw(t)[p];
        }
    }
    let labels: Vec<usize> = train_idx.iter().map(|&t| train.label(t)).collect();
    let hits: Vec<Vec<bool>> = test_idx
        .par_iter()
        .map(|&i| {
            let x = test.raw(i);
            let mut dist = vec![0u32; n];
            let mut pos = 0;
            prefixes
                .iter()
                .map(|&b| {
                    while pos < b {
                        let v = x[order[pos]] as i32;
                        for (d, &t) in dist.iter_mut().zip(&columns[pos * n..(pos + 1) * n]) {
                            let diff = t as i32 - v;
                            *d += (diff * diff) as u32;
                        }
                        pos += 1;
                    }
                    vote(&dist, &labels, k) == test.label(i)
                })
                .collect()
        })
        .collect();
    (0..prefixes.len())
        .map(|c| hits.iter().filter(|h| h[c]).count() as f64 / test_idx.len() as f64)
        .collect()
}

/// Majority label of the `k` nearest points; ties go to the class whose
/// member is nearest.
fn vote(dist: &[u32], labels: &[usize], k: usize) -> usize {
    let mut best: Vec<(u32, usize)> = Vec::with_capacity(k + 1);
    for (j, &d) in dist.iter().enumerate() {
        if best.len() < k || (d, j) < best[best.len() - 1] {
            let at = best.partition_point(|&e| e < (d, j));
            best.insert(at, (d, j));
            best.truncate(k);
        }
    }
    let mut counts = [0usize; CLASSES];
    for &(_, j) in &best {
        counts[labels[j]] += 1;
    }
    let top = *counts.iter().max().unwrap_or(&0);
    best.iter()
        .map(|&(_, j)| labels[j])
        .find(|&c| counts[c] == top)
        .unwrap_or(0)
}

/// Seeded k-means++ with Lloyd iterations; the restart with the lowest
/// inertia wins.
pub fn kmeans(data: &[f32], dim: usize, k: usize, restarts: usize, max_iterations: usize, seed: u64) -> Vec<usize> {
    let n = data.len() / dim;
    let runs: Vec<(f64, Vec<usize>)> = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ (r as u64).wrapping_mul(0x2545_f491_4f6c_dd1d));
            lloyd(data, n, dim, k, max_iterations, &mut rng)
        })
        .collect();
    runs.into_iter()
        .fold(None::<(f64, Vec<usize>)>, |best, run| match best {
            Some(b) if b.0 <= run.0 => Some(b),
            _ => Some(run),
        })
        .map(|(_, a)| a)
        .unwrap_or_default()
}

fn sq_dist(a: &[f32], b: &[f32]) -> f32 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn lloyd(data: &[f32], n: usize, dim: usize, k: usize, max_iterations: usize, rng: &mut impl Rng) -> (f64, Vec<usize>) {
    let point = |i: usize| &data[i * dim..(i + 1) * dim];
    let k = k.min(n).max(1);
    let mut centroids = Vec::with_capacity(k * dim);
    centroids.extend_from_slice(point(rng.random_range(0..n)));
    let mut nearest: Vec<f32> = (0..n).map(|i| sq_dist(point(i), &centroids[..dim])).collect();
    for _ in 1..k {
        let total: f64 = nearest.iter().map(|&d| d as f64).sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in nearest.iter().enumerate() {
                target -= d as f64;
                if target < 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let start = centroids.len();
        centroids.extend_from_slice(point(pick));
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(sq_dist(point(i), &centroids[start..start + dim]));
        }
    }
    let mut assign = vec![usize::MAX; n];
    let mut inertia = 0.0;
    for _ in 0..max_iterations.max(1) {
        let mut changed = false;
        inertia = 0.0;
        for i in 0..n {
            let (c, d) = (0..k)
                .map(|c| (c, sq_dist(point(i), &centroids[c * dim..(c + 1) * dim])))
                .fold((0, f32::INFINITY), |b, x| if x.1 < b.1 { x } else { b });
            inertia += d as f64;
            if assign[i] != c {
                assign[i] = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![0.0f64; k * dim];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            let c = assign[i];
            counts[c] += 1;
            for (s, &v) in sums[c * dim..(c + 1) * dim].iter_mut().zip(point(i)) {
                *s += v as f64;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for (dst, s) in centroids[c * dim..(c + 1) * dim].iter_mut().zip(&sums[c * dim..(c + 1) * dim]) {
                    *dst = (s / counts[c] as f64) as f32;
                }
            }
        }
    }
    (inertia, assign)
}

/// Adjusted Rand index between two labelings (Hubert and Arabie).
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![0u64; ka * kb];
    for (&x, &y) in a.iter().zip(b) {
        table[x * kb + y] += 1;
    }
    let pairs = |c: u64| (c * c.saturating_sub(1) / 2) as f64;
    let index: f64 = table.iter().map(|&c| pairs(c)).sum();
    let rows: f64 = (0..ka).map(|x| pairs(table[x * kb..(x + 1) * kb].iter().sum())).sum();
    let cols: f64 = (0..kb).map(|y| pairs((0..ka).map(|x| table[x * kb + y]).sum())).sum();
    let total = pairs(n as u64);
    if total == 0.0 {
        return 1.0;
    }
    let expected = rows * cols / total;
    let max = 0.5 * (rows + cols);
    if max == expected {
        return if index == expected { 1.0 } else { 0.0 };
    }
    (index - expected) / (max - expected)
}

fn clustering_score(test: &ImageSet, test_idx: &[usize], pixels: &[usize], cfg: &ClassifierConfig, seed: u64) -> f64 {
    let dim = pixels.len();
    let mut data = Vec::with_capacity(test_idx.len() * dim);
    for &i in test_idx {
        let raw = test.raw(i);
        data.extend(pixels.iter().map(|&p| raw[p] as f32 / 255.0));
    }
    let assign = kmeans(&data, dim, cfg.clusters, cfg.restarts, cfg.max_iterations, seed);
    let truth: Vec<usize> = test_idx.iter().map(|&i| test.label(i)).collect();
    adjusted_rand_index(&assign, &truth).clamp(0.0, 1.0)
}

/// Scores nested blocks of the most and least important pixels.
///
/// Accuracy is that of a k-nearest-neighbour classifier fit on a training
/// subsample; the clustering score is the adjusted Rand index (negative
/// values floored at 0) of k-means clusters against the labels. The full
/// 784-pixel block is scored once and shared by both variants.
pub fn evaluate_blocks(
    ranking: &FeatureRanking,
    train: &ImageSet,
    test: &ImageSet,
    config: &ClassifierConfig,
    seed: u64,
) -> BlockEvaluation {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let train_idx = subsample(train.len(), config.train_subsample, &mut rng);
    let test_idx = subsample(test.len(), config.test_subsample, &mut rng);
    let top_order = ranking.order.clone();
    let bottom_order: Vec<usize> = ranking.order.iter().rev().copied().collect();
    let ascending: Vec<usize> = BLOCK_SIZES.iter().rev().copied().collect();
    let partial: Vec<usize> = ascending[..ascending.len() - 1].to_vec();

    let mut acc_top = knn_prefix_accuracy(train, &train_idx, test, &test_idx, &top_order, &ascending, config.neighbors);
    let mut acc_bottom = knn_prefix_accuracy(train, &train_idx, test, &test_idx, &bottom_order, &partial, config.neighbors);
    acc_bottom.push(acc_top[acc_top.len() - 1]);
    acc_top.reverse();
    acc_bottom.reverse();

    let cluster_seed = seed ^ 0xc1u64;
    let full = clustering_score(test, &test_idx, &(0..PIXELS).collect::<Vec<_>>(), config, cluster_seed);
    let (mut cl_top, mut cl_bottom) = (Vec::new(), Vec::new());
    for &b in &BLOCK_SIZES {
        if b == PIXELS {
            cl_top.push(full);
            cl_bottom.push(full);
            continue;
        }
        let mut top: Vec<usize> = top_order[..b].to_vec();
        let mut bottom: Vec<usize> = bottom_order[..b].to_vec();
        top.sort_unstable();
        bottom.sort_unstable();
        cl_top.push(clustering_score(test, &test_idx, &top, config, cluster_seed));
        cl_bottom.push(clustering_score(test, &test_idx, &bottom, config, cluster_seed));
    }
    BlockEvaluation {
        method: ranking.label.clone(),
        block_sizes: BLOCK_SIZES.to_vec(),
        accuracy_top: acc_top,
        accuracy_bottom: acc_bottom,
        clustering_top: cl_top,
        clustering_bottom: cl_bottom,
    }
}

/// Writes `<stem>.pgm` (min-max scaled 8-bit image, all zero for a constant
/// map) and `<stem>.csv` (raw values).
pub fn export_saliency(map: &PixelSensitivityMap, stem: &Path) -> Result<(PathBuf, PathBuf), CaseStudyError> {
    let pgm = stem.with_extension("pgm");
    let csv = stem.with_extension("csv");
    std::fs::write(&pgm, saliency_pgm(&map.values))?;
    std::fs::write(&csv, saliency_csv(&map.values))?;
    Ok((pgm, csv))
}

pub fn saliency_pgm(values: &[f64]) -> Vec<u8> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = format!("P5\n{SIDE} {SIDE}\n255\n").into_bytes();
    out.extend(values.iter().map(|&v| {
        if max > min {
            ((v - min) / (max - min) * 255.0).round() as u8
        } else {
            0
        }
    }));
    out
}

pub fn saliency_csv(values: &[f64]) -> String {
    let mut out = String::from("pixel,row,col,value\n");
    for (p, v) in values.iter().enumerate() {
        writeln!(out, "{p},{},{},{v}", p / SIDE, p % SIDE).unwrap();
    }
    out
}

pub fn read_saliency_csv(path: &Path) -> Result<Vec<f64>, CaseStudyError> {
    let text = std::fs::read_to_string(path)?;
    let mut values = Vec::with_capacity(PIXELS);
    for (n, line) in text.lines().skip(1).enumerate() {
        let v = line
            .rsplit(',')
            .next()
            .and_then(|v| v.parse::<f64>().ok())
            .ok_or_else(|| CaseStudyError::Format(format!("line {}: `{line}`", n + 2)))?;
        values.push(v);
    }
    if values.len() != PIXELS {
        return Err(CaseStudyError::Format(format!("{} values, expected {PIXELS}", values.len())));
    }
    Ok(values)
}

/// Mean value over the central 10x10 square and over the 2-pixel border ring.
pub fn center_and_border(values: &[f64]) -> (f64, f64) {
    let (mut center, mut nc, mut border, mut nb) = (0.0, 0, 0.0, 0);
    for (p, &v) in values.iter().enumerate() {
        let (r, c) = (p / SIDE, p % SIDE);
        if (9..19).contains(&r) && (9..19).contains(&c) {
            center += v;
            nc += 1;
        }
        if r < 2 || r >= SIDE - 2 || c < 2 || c >= SIDE - 2 {
            border += v;
            nb += 1;
        }
    }
    (center / nc as f64, border / nb as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub method: String,
    pub top: f64,
    pub bottom: f64,
    pub gap: f64,
}

/// Methods ordered by the accuracy gap between their most and least
/// important smallest blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub block_size: usize,
    pub rows: Vec<ComparisonRow>,
}

pub fn compare_methods(results: &[BlockEvaluation]) -> Comparison {
    let mut rows: Vec<ComparisonRow> = results
        .iter()
        .map(|e| {
            let (top, bottom) = e.smallest_block();
            ComparisonRow {
                method: e.method.clone(),
                top,
                bottom,
                gap: top - bottom,
            }
        })
        .collect();
    rows.sort_by(|a, b| b.gap.total_cmp(&a.gap).then_with(|| a.method.cmp(&b.method)));
    Comparison {
        block_size: results
            .first()
            .and_then(|e| e.block_sizes.last().copied())
            .unwrap_or(BLOCK_SIZES[BLOCK_SIZES.len() - 1]),
        rows,
    }
}

impl Comparison {
    pub fn to_csv(&self) -> String {
        let b = self.block_size;
        let mut out = format!("rank,method,accuracy_top_{b},accuracy_bottom_{b},gap\n");
        for (i, r) in self.rows.iter().enumerate() {
            writeln!(out, "{},{},{:.6},{:.6},{:.6}", i + 1, r.method, r.top, r.bottom, r.gap).unwrap();
        }
        out
    }

    pub fn to_text(&self) -> String {
        let b = self.block_size;
        let mut out = format!(
            "{:<4} {:<14} {:>10} {:>10} {:>8}\n",
            "rank",
            "method",
            format!("top-{b}"),
            format!("bottom-{b}"),
            "gap"
        );
        for (i, r) in self.rows.iter().enumerate() {
            writeln!(
                out,
                "{:<4} {:<14} {:>10.4} {:>10.4} {:>8.4}",
                i + 1,
                r.method,
                r.top,
                r.bottom,
                r.gap
            )
            .unwrap();
        }
        out
    }
}
