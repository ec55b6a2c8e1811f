//! Supervised datasets with per-sample observability bounds and
//! observability-based curation.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};

/// Estimator training data: one row per sample.
///
/// `variance_bound` carries each sample's minimum error variance for the
/// target variable (the regularized Fisher-inverse diagonal): smaller means
/// more observable.
#[derive(Debug, Clone)]
pub struct TrainingDataset {
    /// N × (p·ω) assembled window inputs.
    pub inputs: DMatrix<f64>,
    /// N targets.
    pub targets: DVector<f64>,
    /// Per-sample minimum error variance of the target variable.
    pub variance_bound: Option<DVector<f64>>,
    pub train_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
}

impl TrainingDataset {
    /// Build a dataset and split it 80-20 with a seeded shuffle.
    pub fn new(
        inputs: DMatrix<f64>,
        targets: DVector<f64>,
        variance_bound: Option<DVector<f64>>,
        split_seed: u64,
    ) -> Result<Self> {
        let n = inputs.nrows();
        if n == 0 {
            return Err(Error::InvalidArgument("dataset is empty".to_string()));
        }
        if targets.len() != n {
            return Err(Error::DimensionMismatch {
                context: "dataset targets".to_string(),
                expected: n,
                got: targets.len(),
            });
        }
        if let Some(v) = &variance_bound {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "dataset variance bounds".to_string(),
                    expected: n,
                    got: v.len(),
                });
            }
        }
        if inputs.iter().any(|v| !v.is_finite()) || targets.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "dataset contains non-finite values".to_string(),
            ));
        }
        let mut indices: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha20Rng::seed_from_u64(split_seed);
        indices.shuffle(&mut rng);
        let cut = ((n as f64) * 0.8).round() as usize;
        let cut = cut.clamp(1, n.saturating_sub(1).max(1));
        Ok(Self {
            inputs,
            targets,
            variance_bound,
            train_idx: indices[..cut].to_vec(),
            test_idx: indices[cut..].to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.ncols()
    }

    /// Copy of the rows at `indices` as (inputs, targets).
    pub fn rows(&self, indices: &[usize]) -> (DMatrix<f64>, DVector<f64>) {
        let mut x = DMatrix::zeros(indices.len(), self.input_dim());
        let mut t = DVector::zeros(indices.len());
        for (row, &i) in indices.iter().enumerate() {
            x.row_mut(row).copy_from(&self.inputs.row(i));
            t[row] = self.targets[i];
        }
        (x, t)
    }

    /// Dataset restricted to a subset of samples, re-split with `seed`.
    pub fn subset(&self, indices: &[usize], seed: u64) -> Result<TrainingDataset> {
        let (inputs, targets) = self.rows(indices);
        let variance_bound = self.variance_bound.as_ref().map(|v| {
            DVector::from_iterator(indices.len(), indices.iter().map(|&i| v[i]))
        });
        TrainingDataset::new(inputs, targets, variance_bound, seed)
    }

    /// Replace targets with log10 of the variance bound (observability-
    /// estimator targets; the raw bound spans many decades).
    pub fn with_log_variance_targets(&self) -> Result<TrainingDataset> {
        let bounds = self.variance_bound.as_ref().ok_or_else(|| {
            Error::InvalidArgument("dataset has no per-sample variance bounds".to_string())
        })?;
        Ok(TrainingDataset {
            inputs: self.inputs.clone(),
            targets: bounds.map(|v| v.log10()),
            variance_bound: self.variance_bound.clone(),
            train_idx: self.train_idx.clone(),
            test_idx: self.test_idx.clone(),
        })
    }
}

/// Ordering policy for binning.
#[derive(Debug, Clone, Copy)]
pub enum CurateMode {
    /// Most observable first (ascending variance bound).
    Sorted,
    /// Seeded shuffle.
    Random(u64),
}

/// Partition a dataset into equal-size bins (±1 sample).
///
/// Sorted mode orders by observability descending, i.e. bin 0 holds the
/// samples with the smallest variance bounds.
pub fn curate_by_observability(
    data: &TrainingDataset,
    bins: usize,
    mode: CurateMode,
) -> Result<Vec<TrainingDataset>> {
    if bins == 0 {
        return Err(Error::InvalidArgument("bin count must be positive".to_string()));
    }
    let bounds = data.variance_bound.as_ref().ok_or_else(|| {
        Error::InvalidArgument(
            "curation requires per-sample variance bounds".to_string(),
        )
    })?;
    let n = data.len();
    let mut order: Vec<usize> = (0..n).collect();
    match mode {
        CurateMode::Sorted => {
            order.sort_by(|&a, &b| bounds[a].partial_cmp(&bounds[b]).unwrap());
        }
        CurateMode::Random(seed) => {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            order.shuffle(&mut rng);
        }
    }

    let base = n / bins;
    let remainder = n % bins;
    let mut out = Vec::with_capacity(bins);
    let mut cursor = 0;
    for b in 0..bins {
        let size = base + usize::from(b < remainder);
        let chunk = &order[cursor..cursor + size];
        cursor += size;
        out.push(data.subset(chunk, b as u64)?);
    }
    Ok(out)
}
