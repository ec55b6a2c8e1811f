//! Sliding-window minimum-error-variance engine.
//!
//! Repeats the per-window analysis with initial conditions that start
//! progressively later along a trajectory. Windows are independent pure
//! computations, so they may run in parallel; results are emitted in window
//! order and are identical to a serial run.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{
    chernoff_inverse, empirical_observability, fisher, transform_observability,
    CoordinateTransform, EmpiricalConfig, NoiseSpec, ObservabilityMatrix,
};
use crate::dynamics::{Label, SystemModel};
use crate::error::{Error, Result};
use crate::trajectory::Trajectory;

/// Settings for a sliding-window run.
#[derive(Debug, Clone)]
pub struct SlidingConfig {
    /// Window length ω in steps.
    pub window: usize,
    pub epsilon: f64,
    pub lambda: f64,
    pub noise: NoiseSpec,
    pub allow_one_sided: bool,
    /// Evaluate windows on the rayon pool.
    pub parallel: bool,
}

impl Default for SlidingConfig {
    fn default() -> Self {
        Self {
            window: 5,
            epsilon: super::DEFAULT_EPSILON,
            lambda: super::DEFAULT_LAMBDA,
            noise: NoiseSpec::default(),
            allow_one_sided: false,
            parallel: true,
        }
    }
}

/// Per-state minimum error variance over time.
#[derive(Debug, Clone)]
pub struct VarianceSeries {
    /// Window start times (s).
    pub t_start: Vec<f64>,
    /// Display times: start shifted forward by ω/2·dt so temporal patterns
    /// line up with the motion that caused them.
    pub t_display: Vec<f64>,
    pub state_labels: Vec<Label>,
    /// windows × n variance values (squared state units).
    pub values: DMatrix<f64>,
    /// windows × n saturation flags.
    pub saturated: Vec<Vec<bool>>,
    pub lambda: f64,
}

impl VarianceSeries {
    pub fn windows(&self) -> usize {
        self.t_start.len()
    }

    /// Column index for a state variable name.
    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.state_labels.iter().position(|l| l.name == name)
    }

    /// Variance time series of one state variable.
    pub fn series_for(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.state_index(name)?;
        Some(self.values.column(idx).iter().cloned().collect())
    }
}

fn window_min_error_variance(
    model: &dyn SystemModel,
    x0: &DVector<f64>,
    inputs: &DMatrix<f64>,
    dt: f64,
    cfg: &SlidingConfig,
    transform: Option<&CoordinateTransform>,
) -> Result<(Vec<f64>, Vec<bool>)> {
    let emp = EmpiricalConfig {
        epsilon: cfg.epsilon,
        allow_one_sided: cfg.allow_one_sided,
    };
    let mut o: ObservabilityMatrix =
        empirical_observability(model, x0, inputs, dt, cfg.window, &emp)?;
    let x0_for_transform = x0.clone();
    if let Some(t) = transform {
        o = transform_observability(&o, t, &x0_for_transform)?;
    }
    let f = fisher(&o, &cfg.noise)?;
    let inv = chernoff_inverse(&f, cfg.lambda)?;
    Ok((
        inv.min_error_variance.values,
        inv.min_error_variance.saturated,
    ))
}

/// Evaluate the minimum error variance of every state variable in sliding
/// windows along a trajectory.
pub fn sliding_window_variance(
    model: &dyn SystemModel,
    trajectory: &Trajectory,
    cfg: &SlidingConfig,
    transform: Option<&CoordinateTransform>,
) -> Result<VarianceSeries> {
    let k_total = trajectory.len();
    if k_total < cfg.window {
        return Err(Error::InvalidArgument(format!(
            "trajectory has {} samples but the window needs {}",
            k_total, cfg.window
        )));
    }
    if trajectory.states.ncols() != model.state_labels().len() {
        return Err(Error::DimensionMismatch {
            context: "trajectory states vs model".to_string(),
            expected: model.state_labels().len(),
            got: trajectory.states.ncols(),
        });
    }

    let n_windows = k_total - cfg.window + 1;
    let dt = trajectory.dt;
    let run_one = |start: usize| -> Result<(Vec<f64>, Vec<bool>)> {
        let x0 = trajectory.state_at(start);
        let inputs = trajectory.inputs.rows(start, cfg.window).into_owned();
        window_min_error_variance(model, &x0, &inputs, dt, cfg, transform)
            .map_err(|e| e.in_window(start))
    };

    let results: Vec<Result<(Vec<f64>, Vec<bool>)>> = if cfg.parallel {
        (0..n_windows).into_par_iter().map(run_one).collect()
    } else {
        (0..n_windows).map(run_one).collect()
    };

    let state_labels = transform
        .map(|t| t.labels().to_vec())
        .unwrap_or_else(|| model.state_labels().to_vec());
    let n = state_labels.len();
    let mut values = DMatrix::zeros(n_windows, n);
    let mut saturated = Vec::with_capacity(n_windows);
    for (w, result) in results.into_iter().enumerate() {
        let (vals, sats) = result?;
        for (i, v) in vals.iter().enumerate() {
            values[(w, i)] = *v;
        }
        saturated.push(sats);
    }

    let t_start: Vec<f64> = (0..n_windows).map(|k| k as f64 * dt).collect();
    let half_window = 0.5 * cfg.window as f64 * dt;
    let t_display: Vec<f64> = t_start.iter().map(|t| t + half_window).collect();
    Ok(VarianceSeries {
        t_start,
        t_display,
        state_labels,
        values,
        saturated,
        lambda: cfg.lambda,
    })
}
