//! Factor space, design matrices and batch model evaluation.

use std::borrow::Cow;
use std::collections::HashSet;
use std::fmt;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::io::{self, BufRead, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::samplers::{Layout, SamplerKind};

#[derive(Debug, Error, PartialEq)]
pub enum ProblemError {
    #[error("a problem needs at least one factor")]
    NoFactors,
    #[error("{names} names given for {bounds} bounds")]
    LengthMismatch { names: usize, bounds: usize },
    #[error("duplicate factor name `{0}`")]
    DuplicateName(String),
    #[error("factor `{name}` has invalid bounds [{low}, {high}]")]
    InvalidBounds { name: String, low: f64, high: f64 },
    #[error("sample matrix has {got} values, expected {rows}x{cols}")]
    Shape {
        rows: usize,
        cols: usize,
        got: usize,
    },
    #[error("row {row} column {col} value {value} lies outside [{low}, {high}]")]
    OutOfBounds {
        row: usize,
        col: usize,
        value: f64,
        low: f64,
        high: f64,
    },
    #[error("layout is inconsistent with the matrix: {0}")]
    Layout(String),
}

/// The factor space: names and closed bounds for each input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    names: Vec<String>,
    bounds: Vec<(f64, f64)>,
}

impl ProblemSpec {
    pub fn new(names: Vec<String>, bounds: Vec<(f64, f64)>) -> Result<Self, ProblemError> {
        if names.is_empty() {
            return Err(ProblemError::NoFactors);
        }
        if names.len() != bounds.len() {
            return Err(ProblemError::LengthMismatch {
                names: names.len(),
                bounds: bounds.len(),
            });
        }
        let mut seen = HashSet::new();
        for (name, &(low, high)) in names.iter().zip(&bounds) {
            if !seen.insert(name.as_str()) {
                return Err(ProblemError::DuplicateName(name.clone()));
            }
            if !(low.is_finite() && high.is_finite() && low < high) {
                return Err(ProblemError::InvalidBounds {
                    name: name.clone(),
                    low,
                    high,
                });
            }
        }
        Ok(Self { names, bounds })
    }

    /// `k` factors named `x1..xk`, all sharing the same bounds.
    pub fn uniform(k: usize, low: f64, high: f64) -> Result<Self, ProblemError> {
        let names = (1..=k).map(|i| format!("x{i}")).collect();
        Self::new(names, vec![(low, high); k])
    }

    pub fn num_factors(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn range(&self, factor: usize) -> f64 {
        let (low, high) = self.bounds[factor];
        high - low
    }

    /// Maps a unit-interval coordinate onto the factor's bounds.
    pub fn scale(&self, factor: usize, unit: f64) -> f64 {
        let (low, high) = self.bounds[factor];
        (low + unit * (high - low)).clamp(low, high)
    }

    pub fn normalize(&self, factor: usize, value: f64) -> f64 {
        let (low, high) = self.bounds[factor];
        (value - low) / (high - low)
    }
}

/// Storage for design rows.
///
/// Structured designs repeat most coordinates: a Saltelli `AB` row is an `A`
/// row with one column swapped, a finite-difference row is its base point
/// moved along one axis. Such rows are kept as a reference to another row plus
/// the one replaced coordinate, so designs over hundreds of factors stay
/// small. A patch refers either to an earlier row or to a dense row.
#[derive(Debug, Clone, PartialEq)]
pub struct RowStore {
    cols: usize,
    dense: Vec<f64>,
    rows: Vec<StoredRow>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum StoredRow {
    /// Index of the row inside the dense buffer.
    Dense(usize),
    Patch {
        base: usize,
        col: usize,
        value: f64,
    },
}

impl RowStore {
    pub fn new(cols: usize) -> Self {
        Self {
            cols,
            dense: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn from_dense(cols: usize, values: Vec<f64>) -> Self {
        let n = if cols == 0 { 0 } else { values.len() / cols };
        Self {
            cols,
            dense: values,
            rows: (0..n).map(StoredRow::Dense).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Appends a full row and returns its index.
    pub fn push_dense(&mut self, row: &[f64]) -> usize {
        assert_eq!(row.len(), self.cols, "dense row has the wrong width");
        let slot = self.dense.len() / self.cols;
        self.dense.extend_from_slice(row);
        self.rows.push(StoredRow::Dense(slot));
        self.rows.len() - 1
    }

    /// Appends a copy of row `base` with column `col` set to `value`.
    /// `base` may name a later row as long as that row ends up dense.
    pub fn push_patch(&mut self, base: usize, col: usize, value: f64) -> usize {
        self.rows.push(StoredRow::Patch { base, col, value });
        self.rows.len() - 1
    }

    fn validate(&self) -> Result<(), String> {
        for (i, row) in self.rows.iter().enumerate() {
            if let StoredRow::Patch { base, col, .. } = *row {
                if col >= self.cols {
                    return Err(format!("row {i} patches column {col} of {}", self.cols));
                }
                let forward_ok = matches!(self.rows.get(base), Some(StoredRow::Dense(_)));
                if !(base < i || forward_ok) {
                    return Err(format!(
                        "row {i} refers to row {base}, which is neither earlier nor dense"
                    ));
                }
            }
        }
        Ok(())
    }

    fn value(&self, mut i: usize, j: usize) -> f64 {
        loop {
            match self.rows[i] {
                StoredRow::Dense(slot) => return self.dense[slot * self.cols + j],
                StoredRow::Patch { base, col, value } => {
                    if col == j {
                        return value;
                    }
                    i = base;
                }
            }
        }
    }

    fn row(&self, i: usize) -> Cow<'_, [f64]> {
        let mut patches = Vec::new();
        let mut r = i;
        let slot = loop {
            match self.rows[r] {
                StoredRow::Dense(slot) => break slot,
                StoredRow::Patch { base, col, value } => {
                    patches.push((col, value));
                    r = base;
                }
            }
        };
        let dense = &self.dense[slot * self.cols..(slot + 1) * self.cols];
        if patches.is_empty() {
            return Cow::Borrowed(dense);
        }
        let mut out = dense.to_vec();
        for &(col, value) in patches.iter().rev() {
            out[col] = value;
        }
        Cow::Owned(out)
    }

    /// Every stored coordinate with its row and column, for bounds checks.
    fn stored_values(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let dense_row: Vec<usize> = self
            .rows
            .iter()
            .enumerate()
            .filter_map(|(i, r)| match r {
                StoredRow::Dense(_) => Some(i),
                _ => None,
            })
            .collect();
        let dense = self
            .dense
            .iter()
            .enumerate()
            .map(move |(idx, &v)| (dense_row[idx / self.cols], idx % self.cols, v));
        let patches = self.rows.iter().enumerate().filter_map(|(i, r)| match *r {
            StoredRow::Patch { col, value, .. } => Some((i, col, value)),
            _ => None,
        });
        dense.chain(patches)
    }
}

/// An N x k design matrix plus the structure its sampler imposed on the rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    rows: usize,
    cols: usize,
    store: RowStore,
    kind: SamplerKind,
    seed: u64,
    layout: Layout,
    id: u64,
}

impl SampleMatrix {
    /// Validates bounds and layout before accepting a dense row-major matrix.
    pub fn new(
        spec: &ProblemSpec,
        rows: usize,
        values: Vec<f64>,
        kind: SamplerKind,
        seed: u64,
        layout: Layout,
    ) -> Result<Self, ProblemError> {
        let cols = spec.num_factors();
        if values.len() != rows * cols {
            return Err(ProblemError::Shape {
                rows,
                cols,
                got: values.len(),
            });
        }
        Self::from_store(spec, RowStore::from_dense(cols, values), kind, seed, layout)
    }

    pub fn from_store(
        spec: &ProblemSpec,
        store: RowStore,
        kind: SamplerKind,
        seed: u64,
        layout: Layout,
    ) -> Result<Self, ProblemError> {
        let cols = spec.num_factors();
        if store.cols != cols {
            return Err(ProblemError::Shape {
                rows: store.len(),
                cols,
                got: store.cols * store.len(),
            });
        }
        store.validate().map_err(ProblemError::Layout)?;
        for (row, col, value) in store.stored_values() {
            let (low, high) = spec.bounds()[col];
            if !(value >= low && value <= high) {
                return Err(ProblemError::OutOfBounds {
                    row,
                    col,
                    value,
                    low,
                    high,
                });
            }
        }
        let rows = store.len();
        layout.check(rows, cols).map_err(ProblemError::Layout)?;
        let id = fingerprint(&store, kind, seed);
        Ok(Self {
            rows,
            cols,
            store,
            kind,
            seed,
            layout,
            id,
        })
    }

    /// Wraps externally produced points, usable only by given-data analyzers.
    pub fn given_data(spec: &ProblemSpec, points: &[Vec<f64>]) -> Result<Self, ProblemError> {
        let cols = spec.num_factors();
        let mut values = Vec::with_capacity(points.len() * cols);
        for point in points {
            if point.len() != cols {
                return Err(ProblemError::Shape {
                    rows: points.len(),
                    cols,
                    got: point.len(),
                });
            }
            values.extend_from_slice(point);
        }
        Self::new(
            spec,
            points.len(),
            values,
            SamplerKind::GivenData,
            0,
            Layout::GivenData,
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> Cow<'_, [f64]> {
        self.store.row(i)
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.store.value(i, j)
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.rows).map(move |i| self.store.value(i, j))
    }

    pub fn kind(&self) -> SamplerKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    /// Content fingerprint; outputs carry it so analyzers can reject mismatched pairs.
    pub fn id(&self) -> u64 {
        self.id
    }

    /// Writes the matrix as CSV: factor names as header, one sample per line.
    pub fn write_csv<W: Write>(&self, spec: &ProblemSpec, mut out: W) -> io::Result<()> {
        writeln!(out, "{}", spec.names().join(","))?;
        for i in 0..self.rows {
            let line: Vec<String> = self.row(i).iter().map(|v| format!("{v:e}")).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn save_csv(&self, spec: &ProblemSpec, path: impl AsRef<Path>) -> io::Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(spec, io::BufWriter::new(file))
    }

    /// Reads a CSV written by [`SampleMatrix::write_csv`] as given data.
    pub fn read_csv<R: BufRead>(spec: &ProblemSpec, input: R) -> Result<Self, ProblemError> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .and_then(|l| l.ok())
            .ok_or_else(|| ProblemError::Layout("missing CSV header".into()))?;
        let names: Vec<&str> = header.split(',').map(str::trim).collect();
        if names != spec.names().iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(ProblemError::Layout(format!(
                "CSV header `{header}` does not match factor names"
            )));
        }
        let mut points = Vec::new();
        for (n, line) in lines.enumerate() {
            let line = line.map_err(|e| ProblemError::Layout(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let point = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| ProblemError::Layout(format!("line {}: {e}", n + 2)))?;
            points.push(point);
        }
        Self::given_data(spec, &points)
    }
}

fn fingerprint(store: &RowStore, kind: SamplerKind, seed: u64) -> u64 {
    let mut h = DefaultHasher::new();
    store.len().hash(&mut h);
    store.cols.hash(&mut h);
    kind.hash(&mut h);
    seed.hash(&mut h);
    for v in &store.dense {
        v.to_bits().hash(&mut h);
    }
    for row in &store.rows {
        match *row {
            StoredRow::Dense(slot) => slot.hash(&mut h),
            StoredRow::Patch { base, col, value } => (base, col, value.to_bits()).hash(&mut h),
        }
    }
    h.finish()
}

/// Model outputs, one per sample row.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputVector {
    pub values: Vec<f64>,
    pub sample_id: u64,
}

impl OutputVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{0}")]
pub struct ModelError(pub String);

/// A black-box model mapping one point of the factor space to a scalar.
pub trait ModelEvaluator: Sync {
    fn evaluate(&self, x: &[f64]) -> f64;

    /// Fallible entry point; external models override this to surface I/O failures.
    fn try_evaluate(&self, x: &[f64]) -> Result<f64, ModelError> {
        Ok(self.evaluate(x))
    }

    /// Deterministic models may be evaluated concurrently and in any order.
    fn is_deterministic(&self) -> bool {
        true
    }

    /// Expected input dimension, when the model knows it.
    fn dimension(&self) -> Option<usize> {
        None
    }
}

impl<M: ModelEvaluator + ?Sized> ModelEvaluator for &M {
    fn evaluate(&self, x: &[f64]) -> f64 {
        (**self).evaluate(x)
    }
    fn try_evaluate(&self, x: &[f64]) -> Result<f64, ModelError> {
        (**self).try_evaluate(x)
    }
    fn is_deterministic(&self) -> bool {
        (**self).is_deterministic()
    }
    fn dimension(&self) -> Option<usize> {
        (**self).dimension()
    }
}

impl<M: ModelEvaluator + ?Sized> ModelEvaluator for Box<M> {
    fn evaluate(&self, x: &[f64]) -> f64 {
        (**self).evaluate(x)
    }
    fn try_evaluate(&self, x: &[f64]) -> Result<f64, ModelError> {
        (**self).try_evaluate(x)
    }
    fn is_deterministic(&self) -> bool {
        (**self).is_deterministic()
    }
    fn dimension(&self) -> Option<usize> {
        (**self).dimension()
    }
}

/// Closure-backed model.
pub struct FnModel<F> {
    f: F,
    deterministic: bool,
    dimension: Option<usize>,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnModel<F> {
    pub fn non_deterministic(mut self) -> Self {
        self.deterministic = false;
        self
    }

    pub fn with_dimension(mut self, k: usize) -> Self {
        self.dimension = Some(k);
        self
    }
}

impl<F> fmt::Debug for FnModel<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnModel")
            .field("deterministic", &self.deterministic)
            .field("dimension", &self.dimension)
            .finish()
    }
}

pub fn model_fn<F: Fn(&[f64]) -> f64 + Sync>(f: F) -> FnModel<F> {
    FnModel {
        f,
        deterministic: true,
        dimension: None,
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> ModelEvaluator for FnModel<F> {
    fn evaluate(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
    fn is_deterministic(&self) -> bool {
        self.deterministic
    }
    fn dimension(&self) -> Option<usize> {
        self.dimension
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("model produced a non-finite output ({value}) at row {row}")]
    NonFinite { row: usize, value: f64 },
    #[error("model expects {expected} inputs but samples have {got} columns")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("model failed at row {row}: {source}")]
    Model { row: usize, source: ModelError },
}

/// Evaluates the model on every row of `samples`.
///
/// Deterministic models are evaluated in parallel; the result is identical to
/// a serial in-order evaluation.
pub fn evaluate_model<M: ModelEvaluator + ?Sized>(
    model: &M,
    samples: &SampleMatrix,
) -> Result<OutputVector, EvalError> {
    if let Some(expected) = model.dimension() {
        if expected != samples.cols() {
            return Err(EvalError::DimensionMismatch {
                expected,
                got: samples.cols(),
            });
        }
    }
    let eval_row = |row: usize| -> Result<f64, EvalError> {
        let y = model
            .try_evaluate(&samples.row(row))
            .map_err(|source| EvalError::Model { row, source })?;
        if y.is_finite() {
            Ok(y)
        } else {
            Err(EvalError::NonFinite { row, value: y })
        }
    };
    let values = if model.is_deterministic() {
        (0..samples.rows())
            .into_par_iter()
            .map(eval_row)
            .collect::<Result<Vec<_>, _>>()?
    } else {
        (0..samples.rows())
            .map(eval_row)
            .collect::<Result<Vec<_>, _>>()?
    };
    Ok(OutputVector {
        values,
        sample_id: samples.id(),
    })
}
