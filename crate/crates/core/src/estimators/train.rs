//! Mini-batch training with adaptive per-parameter moment estimates.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

use super::dataset::TrainingDataset;
use super::net::EstimatorNet;
use crate::error::{Error, Result};

/// Loss applied to the single-output estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    SquaredError,
    /// Squared error on the (sin, cos) embedding of an angular target.
    Circular,
}

/// Circular regression loss: (sin ζ − sin ζ̌)² + (cos ζ − cos ζ̌)².
///
/// Ranges over [0, 4] and is invariant to shifting either argument by 2π.
pub fn circular_loss(truth: f64, prediction: f64) -> f64 {
    let ds = truth.sin() - prediction.sin();
    let dc = truth.cos() - prediction.cos();
    ds * ds + dc * dc
}

fn loss_value(kind: LossKind, truth: f64, prediction: f64) -> f64 {
    match kind {
        LossKind::SquaredError => {
            let e = prediction - truth;
            e * e
        }
        LossKind::Circular => circular_loss(truth, prediction),
    }
}

/// dL/dprediction. For the circular loss this collapses to 2·sin(ζ̌ − ζ).
fn loss_gradient(kind: LossKind, truth: f64, prediction: f64) -> f64 {
    match kind {
        LossKind::SquaredError => 2.0 * (prediction - truth),
        LossKind::Circular => 2.0 * (prediction - truth).sin(),
    }
}

/// Training hyperparameters. The defaults are the desk-scale settings.
#[derive(Debug, Clone, Copy)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Gaussian noise std added to inputs during training only.
    pub input_noise_std: f64,
    pub loss: LossKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 500,
            batch_size: 1024,
            learning_rate: 1e-3,
            seed: 0,
            input_noise_std: 0.0,
            loss: LossKind::SquaredError,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainingReport {
    pub curve: Vec<EpochLoss>,
}

impl TrainingReport {
    pub fn initial_train_loss(&self) -> f64 {
        self.curve.first().map(|e| e.train_loss).unwrap_or(f64::NAN)
    }

    pub fn final_train_loss(&self) -> f64 {
        self.curve.last().map(|e| e.train_loss).unwrap_or(f64::NAN)
    }

    pub fn final_test_loss(&self) -> f64 {
        self.curve.last().map(|e| e.test_loss).unwrap_or(f64::NAN)
    }
}

struct AdamState {
    m_w: Vec<DMatrix<f64>>,
    v_w: Vec<DMatrix<f64>>,
    m_b: Vec<DVector<f64>>,
    v_b: Vec<DVector<f64>>,
    step: usize,
}

impl AdamState {
    fn new(net: &EstimatorNet) -> Self {
        let (w, b) = net.params();
        Self {
            m_w: w.iter().map(|m| DMatrix::zeros(m.nrows(), m.ncols())).collect(),
            v_w: w.iter().map(|m| DMatrix::zeros(m.nrows(), m.ncols())).collect(),
            m_b: b.iter().map(|v| DVector::zeros(v.len())).collect(),
            v_b: b.iter().map(|v| DVector::zeros(v.len())).collect(),
            step: 0,
        }
    }

    fn update(
        &mut self,
        net: &mut EstimatorNet,
        grad_w: &[DMatrix<f64>],
        grad_b: &[DVector<f64>],
        lr: f64,
    ) {
        const BETA1: f64 = 0.9;
        const BETA2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        self.step += 1;
        let t = self.step as i32;
        let correction1 = 1.0 - BETA1.powi(t);
        let correction2 = 1.0 - BETA2.powi(t);
        let (weights, biases) = net.params_mut();
        for l in 0..weights.len() {
            let (m, v) = (&mut self.m_w[l], &mut self.v_w[l]);
            m.zip_apply(&grad_w[l], |m, g| *m = BETA1 * *m + (1.0 - BETA1) * g);
            v.zip_apply(&grad_w[l], |v, g| *v = BETA2 * *v + (1.0 - BETA2) * g * g);
            let w = &mut weights[l];
            for i in 0..w.nrows() {
                for j in 0..w.ncols() {
                    let m_hat = m[(i, j)] / correction1;
                    let v_hat = v[(i, j)] / correction2;
                    w[(i, j)] -= lr * m_hat / (v_hat.sqrt() + EPS);
                }
            }
            let (mb, vb) = (&mut self.m_b[l], &mut self.v_b[l]);
            mb.zip_apply(&grad_b[l], |m, g| *m = BETA1 * *m + (1.0 - BETA1) * g);
            vb.zip_apply(&grad_b[l], |v, g| *v = BETA2 * *v + (1.0 - BETA2) * g * g);
            let b = &mut biases[l];
            for i in 0..b.len() {
                let m_hat = mb[i] / correction1;
                let v_hat = vb[i] / correction2;
                b[i] -= lr * m_hat / (v_hat.sqrt() + EPS);
            }
        }
    }
}

/// Mean loss of the net over the given sample rows, without input noise.
fn evaluate(
    net: &EstimatorNet,
    data: &TrainingDataset,
    indices: &[usize],
    kind: LossKind,
) -> f64 {
    if indices.is_empty() {
        return f64::NAN;
    }
    let (x_rows, targets) = data.rows(indices);
    let x = x_rows.transpose();
    let activations = net.forward_batch(&x);
    let outputs = activations.last().unwrap();
    let mut acc = 0.0;
    for (b, &t) in targets.iter().enumerate() {
        acc += loss_value(kind, t, outputs[(0, b)]);
    }
    acc / indices.len() as f64
}

/// Train a single-output net with mini-batch gradient descent and adaptive
/// moments. Gaussian input noise of `cfg.input_noise_std` is applied during
/// training only. Fixed seeds give bit-identical weights.
pub fn train(
    net: &mut EstimatorNet,
    data: &TrainingDataset,
    cfg: &TrainConfig,
) -> Result<TrainingReport> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("training dataset is empty".to_string()));
    }
    if net.input_dim() != data.input_dim() {
        return Err(Error::DimensionMismatch {
            context: "net input vs dataset".to_string(),
            expected: data.input_dim(),
            got: net.input_dim(),
        });
    }
    if net.output_dim() != 1 {
        return Err(Error::InvalidArgument(
            "training expects a single-output net".to_string(),
        ));
    }
    if cfg.batch_size == 0 || cfg.epochs == 0 {
        return Err(Error::InvalidArgument(
            "epochs and batch size must be positive".to_string(),
        ));
    }
    net.input_noise_std = cfg.input_noise_std;

    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let noise = if cfg.input_noise_std > 0.0 {
        Some(Normal::new(0.0, cfg.input_noise_std).unwrap())
    } else {
        None
    };
    let mut adam = AdamState::new(net);
    let mut order = data.train_idx.clone();
    let mut curve = Vec::with_capacity(cfg.epochs + 1);

    let record = |net: &EstimatorNet, epoch: usize, curve: &mut Vec<EpochLoss>| -> Result<()> {
        let train_loss = evaluate(net, data, &data.train_idx, cfg.loss);
        let mut test_loss = evaluate(net, data, &data.test_idx, cfg.loss);
        if test_loss.is_nan() && data.test_idx.is_empty() {
            test_loss = train_loss;
        }
        if !train_loss.is_finite() {
            return Err(Error::TrainingDiverged {
                epoch,
                loss: train_loss,
                lr: cfg.learning_rate,
            });
        }
        curve.push(EpochLoss {
            epoch,
            train_loss,
            test_loss,
        });
        Ok(())
    };

    record(net, 0, &mut curve)?;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let (x_rows, targets) = data.rows(batch);
            let mut x = x_rows.transpose();
            if let Some(noise) = &noise {
                x.apply(|v| *v += noise.sample(&mut rng));
            }
            let activations = net.forward_batch(&x);
            let outputs = activations.last().unwrap();
            let scale = 1.0 / batch.len() as f64;
            let grad = DMatrix::from_fn(1, batch.len(), |_, b| {
                scale * loss_gradient(cfg.loss, targets[b], outputs[(0, b)])
            });
            let (grad_w, grad_b) = net.backward_batch(&activations, &grad);
            adam.update(net, &grad_w, &grad_b, cfg.learning_rate);
        }
        record(net, epoch, &mut curve)?;
    }
    Ok(TrainingReport { curve })
}

/// Fraction of test predictions within one order of magnitude of the truth
/// (targets and predictions in log10 space).
pub fn within_order_fraction(net: &EstimatorNet, data: &TrainingDataset) -> Result<f64> {
    if data.test_idx.is_empty() {
        return Err(Error::InvalidArgument("dataset has no test split".to_string()));
    }
    let mut hits = 0usize;
    for &i in &data.test_idx {
        let pred = net.forward_scalar(&data.inputs.row(i).transpose())?;
        if (pred - data.targets[i]).abs() <= 1.0 {
            hits += 1;
        }
    }
    Ok(hits as f64 / data.test_idx.len() as f64)
}

/// Train an observability estimator on a dataset whose targets are log10 of
/// the per-sample minimum error variance. Returns the training report and
/// the fraction of test predictions within one order of magnitude.
pub fn train_observability_estimator(
    net: &mut EstimatorNet,
    data: &TrainingDataset,
    cfg: &TrainConfig,
) -> Result<(TrainingReport, f64)> {
    let cfg = TrainConfig {
        loss: LossKind::SquaredError,
        ..*cfg
    };
    let report = train(net, data, &cfg)?;
    let fraction = within_order_fraction(net, data)?;
    Ok((report, fraction))
}
