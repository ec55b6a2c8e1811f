//! Measurement-vector augmentation with a data-driven state estimate whose
//! noise variance is scaled by the estimate's expected accuracy.

use nalgebra::{DMatrix, DVector};

use super::{srukf_step_with, ukf_step, FilterState};
use crate::dynamics::{Label, SystemModel, VarKind};
use crate::error::{Error, Result};
use crate::estimators::{EstimatorNet, WindowBuffer};

/// Configuration of the augmentation: which state the estimator predicts
/// and how its noise variance follows the recent acceleration level.
#[derive(Debug, Clone)]
pub struct AugmentationSpec {
    /// Index of the augmented state variable in the model state.
    pub state_index: usize,
    /// Column inside the estimator window rows that carries the forward
    /// acceleration (used to scale the augmented noise).
    pub accel_column: usize,
    /// Noise-variance floor when acceleration is at its maximum.
    pub rho_min: f64,
    /// Noise-variance ceiling when acceleration vanishes.
    pub rho_max: f64,
    /// Acceleration normalization bounds: the scenario's known envelope.
    pub accel_max: f64,
    pub accel_min: f64,
    /// Correlation between ordinary measurements and the augmented row;
    /// zero by default.
    pub correlation: f64,
}

impl AugmentationSpec {
    pub fn altitude_default(state_index: usize, accel_column: usize, accel_max: f64) -> Self {
        Self {
            state_index,
            accel_column,
            rho_min: 1e-3,
            rho_max: 1e12,
            accel_max,
            accel_min: 0.0,
            correlation: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.rho_min > 0.0 && self.rho_max > self.rho_min) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < rho_min < rho_max, got ({}, {})",
                self.rho_min, self.rho_max
            )));
        }
        if self.correlation.abs() >= 1.0 {
            return Err(Error::InvalidArgument(
                "augmentation correlation must lie in (-1, 1)".to_string(),
            ));
        }
        Ok(())
    }
}

/// Map the mean absolute acceleration over the estimator window to the
/// augmented noise variance Ř = ρ_min^{1−σ}·ρ_max^σ with
/// σ = (max − mean)/(max − min) clipped to [0, 1].
///
/// Monotone non-increasing in the acceleration and bounded in
/// [ρ_min, ρ_max]. A degenerate envelope (max ≤ min) yields σ = 1, i.e.
/// the augmentation is switched off.
pub fn r_map(mean_abs_accel: f64, spec: &AugmentationSpec) -> f64 {
    let span = spec.accel_max - spec.accel_min;
    let sigma = if span <= 0.0 {
        1.0
    } else {
        ((spec.accel_max - mean_abs_accel) / span).clamp(0.0, 1.0)
    };
    spec.rho_min.powf(1.0 - sigma) * spec.rho_max.powf(sigma)
}

/// Augmented filter step: the measurement vector is extended with the
/// estimator's state estimate and the noise block with its r-mapped
/// variance, then a standard unscented step runs against the extended
/// measurement map [h(x, u); x_aug].
///
/// Until the window buffer fills, this falls back to the plain step.
#[allow(clippy::too_many_arguments)]
pub fn aikf_step(
    fs: &FilterState,
    model: &dyn SystemModel,
    u: &DVector<f64>,
    y: &DVector<f64>,
    dt: f64,
    buffer: &WindowBuffer,
    net: &EstimatorNet,
    spec: &AugmentationSpec,
) -> Result<FilterState> {
    spec.validate()?;
    match buffer.as_input() {
        Some(window_input) => {
            aikf_step_with_input(fs, model, u, y, dt, &window_input, net, spec)
        }
        None => ukf_step(fs, model, u, y, dt),
    }
}

#[allow(clippy::too_many_arguments)]
fn aikf_step_with_input(
    fs: &FilterState,
    model: &dyn SystemModel,
    u: &DVector<f64>,
    y: &DVector<f64>,
    dt: f64,
    window_input: &DVector<f64>,
    net: &EstimatorNet,
    spec: &AugmentationSpec,
) -> Result<FilterState> {
    let n = model.state_labels().len();
    if spec.state_index >= n {
        return Err(Error::InvalidArgument(format!(
            "augmented state index {} out of range (n = {n})",
            spec.state_index
        )));
    }
    let estimate = net.forward_scalar(window_input)?;

    // mean |accel| over the window from the buffered rows
    let columns = net.input_columns.len().max(1);
    let mut acc = 0.0;
    let mut count = 0usize;
    let mut idx = spec.accel_column;
    while idx < window_input.len() {
        acc += window_input[idx].abs();
        count += 1;
        idx += columns;
    }
    let mean_abs_accel = if count > 0 { acc / count as f64 } else { 0.0 };
    let augmented_variance = r_map(mean_abs_accel, spec);

    let p = y.len();
    let mut y_aug = DVector::zeros(p + 1);
    y_aug.rows_mut(0, p).copy_from(y);
    y_aug[p] = estimate;

    let mut r_aug = DMatrix::zeros(p + 1, p + 1);
    r_aug.view_mut((0, 0), (p, p)).copy_from(&fs.measurement_noise);
    r_aug[(p, p)] = augmented_variance;
    if spec.correlation != 0.0 {
        for j in 0..p {
            let cov = spec.correlation * (fs.measurement_noise[(j, j)] * augmented_variance).sqrt();
            r_aug[(j, p)] = cov;
            r_aug[(p, j)] = cov;
        }
    }

    let mut labels = model.measurement_labels().to_vec();
    let state_label = &model.state_labels()[spec.state_index];
    labels.push(Label::new(
        &format!("{}_est", state_label.name),
        &state_label.unit,
        VarKind::Linear,
    ));

    let aug_index = spec.state_index;
    srukf_step_with(
        fs,
        |x| model.step(x, u, dt),
        |x| {
            let base = model.measure(x, u)?;
            let mut out = DVector::zeros(base.len() + 1);
            out.rows_mut(0, base.len()).copy_from(&base);
            out[base.len()] = x[aug_index];
            Ok(out)
        },
        &labels,
        &r_aug,
        &y_aug,
    )
}
