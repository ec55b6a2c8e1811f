//! Empirical observability analysis: perturbation-based observability
//! matrix, Fisher information under a measurement-noise model, regularized
//! inversion, sensor/window/state slicing, and sliding-window evaluation.

mod sliding;
mod transform;

pub use sliding::{sliding_window_variance, SlidingConfig, VarianceSeries};
pub use transform::{transform_observability, CoordinateTransform};

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{Label, SystemModel, VarKind};
use crate::error::{Error, Result};
use crate::linalg::{align_angle, symmetrize};

/// Default central-difference perturbation size.
pub const DEFAULT_EPSILON: f64 = 1e-5;
/// Default regularization for the Fisher-information inverse.
pub const DEFAULT_LAMBDA: f64 = 1e-6;
/// Default per-measurement noise variance.
pub const DEFAULT_NOISE_VARIANCE: f64 = 0.1;

/// Empirical observability matrix over one time window.
///
/// Rows are ordered time-major: row `k·p + j` holds the sensitivity of
/// measurement `j` at window step `k`. Column `i` is the central difference
/// of the stacked measurements with respect to initial state variable `i`,
/// `(Y(x0 + ε·e_i) − Y(x0 − ε·e_i)) / 2ε`.
#[derive(Debug, Clone)]
pub struct ObservabilityMatrix {
    pub values: DMatrix<f64>,
    pub epsilon: f64,
    /// Window length ω in steps.
    pub window: usize,
    /// Start index of the window in its source trajectory.
    pub window_start: usize,
    /// Per-step measurement labels (p entries).
    pub measurement_labels: Vec<Label>,
    /// Column labels (n entries).
    pub state_labels: Vec<Label>,
}

impl ObservabilityMatrix {
    /// Number of measurement channels per step.
    pub fn channels(&self) -> usize {
        self.measurement_labels.len()
    }

    /// Number of state columns.
    pub fn states(&self) -> usize {
        self.state_labels.len()
    }
}

/// Options for the perturbation analysis.
#[derive(Debug, Clone, Copy)]
pub struct EmpiricalConfig {
    /// Perturbation size ε.
    pub epsilon: f64,
    /// Fall back to a one-sided difference when a magnitude state sits
    /// closer than ε to zero (logged as a warning) instead of failing.
    pub allow_one_sided: bool,
}

impl Default for EmpiricalConfig {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            allow_one_sided: false,
        }
    }
}

/// Simulate `window` measurements from `x0` under the stored inputs,
/// unwrapping angle channels along the series. The first sample is aligned
/// to `align_first_to` when given (the nominal run's phase reference).
fn measurement_series(
    model: &dyn SystemModel,
    x0: &DVector<f64>,
    inputs: &DMatrix<f64>,
    dt: f64,
    window: usize,
    align_first_to: Option<&DVector<f64>>,
) -> Result<DMatrix<f64>> {
    let p = model.measurement_labels().len();
    let angle_channels: Vec<usize> = model
        .measurement_labels()
        .iter()
        .enumerate()
        .filter(|(_, l)| l.kind == VarKind::Angle)
        .map(|(j, _)| j)
        .collect();
    let mut out = DMatrix::zeros(window, p);
    let mut x = x0.clone();
    let mut previous: Option<DVector<f64>> = None;
    for k in 0..window {
        let u = inputs.row(k).transpose();
        let mut y = model.measure(&x, &u)?;
        let reference = previous.as_ref().or(align_first_to);
        if let Some(reference) = reference {
            for &j in &angle_channels {
                y[j] = align_angle(y[j], reference[j]);
            }
        }
        out.row_mut(k).copy_from(&y.transpose());
        previous = Some(y);
        if k + 1 < window {
            x = model.step(&x, &u, dt);
        }
    }
    Ok(out)
}

/// Build the empirical observability matrix at `x0` by perturbing each
/// initial state variable in both directions and re-simulating the window
/// with the same inputs (inputs are not recomputed for perturbed runs).
pub fn empirical_observability(
    model: &dyn SystemModel,
    x0: &DVector<f64>,
    inputs: &DMatrix<f64>,
    dt: f64,
    window: usize,
    cfg: &EmpiricalConfig,
) -> Result<ObservabilityMatrix> {
    if window == 0 {
        return Err(Error::InvalidArgument("window must be at least 1".to_string()));
    }
    if !(cfg.epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "perturbation epsilon must be positive, got {}",
            cfg.epsilon
        )));
    }
    if inputs.nrows() < window {
        return Err(Error::InvalidArgument(format!(
            "need at least {} input samples for window, got {}",
            window,
            inputs.nrows()
        )));
    }
    // validate finiteness and dimensions once up front
    crate::dynamics::measure(model, x0, &inputs.row(0).transpose())?;

    let n = model.state_labels().len();
    let p = model.measurement_labels().len();
    let eps = cfg.epsilon;

    let nominal = measurement_series(model, x0, inputs, dt, window, None)?;
    let reference = nominal.row(0).transpose();

    let mut values = DMatrix::zeros(p * window, n);
    for i in 0..n {
        let label = &model.state_labels()[i];
        let run = |sign: f64, magnitude: f64| -> Result<DMatrix<f64>> {
            let mut x = x0.clone();
            x[i] += sign * magnitude;
            measurement_series(model, &x, inputs, dt, window, Some(&reference)).map_err(|e| {
                Error::PerturbedRun {
                    state: label.name.clone(),
                    sign: if sign > 0.0 { '+' } else { '-' },
                    step: window,
                    source: Box::new(e),
                }
            })
        };

        let one_sided = label.kind == VarKind::Magnitude && x0[i] - eps < 0.0;
        let column = if one_sided {
            if !cfg.allow_one_sided {
                return Err(Error::MagnitudePerturbation {
                    label: label.name.clone(),
                    eps,
                });
            }
            log::warn!(
                "magnitude state `{}` = {} is within epsilon of zero; using a one-sided difference",
                label.name,
                x0[i]
            );
            let plus = run(1.0, eps)?;
            (plus - &nominal) / eps
        } else {
            let plus = run(1.0, eps)?;
            let minus = run(-1.0, eps)?;
            (plus - minus) / (2.0 * eps)
        };

        // column is ω×p; stack it time-major into rows k·p + j
        for k in 0..window {
            for j in 0..p {
                values[(k * p + j, i)] = column[(k, j)];
            }
        }
    }

    Ok(ObservabilityMatrix {
        values,
        epsilon: eps,
        window,
        window_start: 0,
        measurement_labels: model.measurement_labels().to_vec(),
        state_labels: model.state_labels().to_vec(),
    })
}

/// Measurement-noise model for the Fisher information.
///
/// The full noise matrix is block diagonal over the window with one p×p
/// block per step; all variants apply the same block at every step.
#[derive(Debug, Clone)]
pub enum NoiseSpec {
    /// Same variance on every measurement channel.
    Uniform(f64),
    /// One variance per measurement channel.
    PerChannel(Vec<f64>),
    /// Full per-step covariance block.
    Block(DMatrix<f64>),
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec::Uniform(DEFAULT_NOISE_VARIANCE)
    }
}

impl NoiseSpec {
    /// Restrict the noise model to a sensor subset (matching a sliced
    /// observability matrix).
    pub fn for_sensors(&self, sensors: &[usize]) -> NoiseSpec {
        match self {
            NoiseSpec::Uniform(v) => NoiseSpec::Uniform(*v),
            NoiseSpec::PerChannel(vars) => {
                NoiseSpec::PerChannel(sensors.iter().map(|&j| vars[j]).collect())
            }
            NoiseSpec::Block(r) => NoiseSpec::Block(r.select_rows(sensors).select_columns(sensors)),
        }
    }

    fn validate(&self, channels: usize) -> Result<()> {
        match self {
            NoiseSpec::Uniform(v) => {
                if !(*v > 0.0) {
                    return Err(Error::Factorization {
                        context: format!("measurement noise variance {v} is not positive"),
                    });
                }
            }
            NoiseSpec::PerChannel(vars) => {
                if vars.len() != channels {
                    return Err(Error::DimensionMismatch {
                        context: "per-channel noise".to_string(),
                        expected: channels,
                        got: vars.len(),
                    });
                }
                if vars.iter().any(|v| !(*v > 0.0)) {
                    return Err(Error::Factorization {
                        context: "per-channel noise contains a non-positive variance".to_string(),
                    });
                }
            }
            NoiseSpec::Block(r) => {
                if r.nrows() != channels || r.ncols() != channels {
                    return Err(Error::DimensionMismatch {
                        context: "noise block".to_string(),
                        expected: channels,
                        got: r.nrows(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Fisher information matrix F = Oᵀ R⁻¹ O for a window.
#[derive(Debug, Clone)]
pub struct FisherInfo {
    pub matrix: DMatrix<f64>,
    pub state_labels: Vec<Label>,
}

/// Accumulate F blockwise: F = Σ_k H_kᵀ R_step⁻¹ H_k.
pub fn fisher(o: &ObservabilityMatrix, noise: &NoiseSpec) -> Result<FisherInfo> {
    let p = o.channels();
    let n = o.states();
    noise.validate(p)?;

    let mut f = DMatrix::zeros(n, n);
    match noise {
        NoiseSpec::Uniform(v) => {
            f = o.values.transpose() * &o.values / *v;
        }
        NoiseSpec::PerChannel(vars) => {
            let mut scaled = o.values.clone();
            for k in 0..o.window {
                for j in 0..p {
                    let w = 1.0 / vars[j].sqrt();
                    scaled.row_mut(k * p + j).scale_mut(w);
                }
            }
            f = scaled.transpose() * &scaled;
        }
        NoiseSpec::Block(r) => {
            let chol = nalgebra::Cholesky::new(r.clone()).ok_or(Error::Factorization {
                context: "measurement noise block is not positive definite".to_string(),
            })?;
            for k in 0..o.window {
                let h = o.values.rows(k * p, p).into_owned();
                let solved = chol.solve(&h);
                f += h.transpose() * solved;
            }
        }
    }
    symmetrize(&mut f);
    Ok(FisherInfo {
        matrix: f,
        state_labels: o.state_labels.clone(),
    })
}

/// Per-state minimum error variance extracted from the regularized inverse.
#[derive(Debug, Clone)]
pub struct MinErrorVariance {
    /// Diagonal of (F + λI)⁻¹, in squared state units.
    pub values: Vec<f64>,
    /// True where the entry sits at the unobservable cap (≥ 0.5/λ).
    pub saturated: Vec<bool>,
    pub lambda: f64,
    pub state_labels: Vec<Label>,
}

/// Regularized inverse of the Fisher information.
#[derive(Debug, Clone)]
pub struct ChernoffInverse {
    pub matrix: DMatrix<f64>,
    pub min_error_variance: MinErrorVariance,
}

/// Invert F + λI through a symmetric positive-definite factorization.
///
/// Unobservable directions saturate at 1/λ instead of collapsing to the
/// misleading small values a pseudoinverse would produce.
pub fn chernoff_inverse(f: &FisherInfo, lambda: f64) -> Result<ChernoffInverse> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "regularization lambda must be positive, got {lambda}"
        )));
    }
    let n = f.matrix.nrows();

    let eigs = f.matrix.clone().symmetric_eigen().eigenvalues;
    let max_eig = eigs.iter().cloned().fold(0.0_f64, f64::max);
    let nonzero_floor = 1e-12 * max_eig.max(1.0);
    if let Some(smallest_nonzero) = eigs
        .iter()
        .cloned()
        .filter(|&e| e > nonzero_floor)
        .reduce(f64::min)
    {
        if lambda >= smallest_nonzero {
            log::warn!(
                "lambda {lambda:.3e} is not below the smallest nonzero Fisher eigenvalue \
                 {smallest_nonzero:.3e}; regularization will distort observable directions"
            );
        }
    }

    let mut regularized = f.matrix.clone();
    for i in 0..n {
        regularized[(i, i)] += lambda;
    }
    let chol = nalgebra::Cholesky::new(regularized).ok_or_else(|| Error::Factorization {
        context: format!(
            "regularized Fisher matrix is not positive definite \
             (eigenvalue range [{:.3e}, {:.3e}], lambda {:.3e})",
            eigs.min(),
            eigs.max(),
            lambda
        ),
    })?;
    let mut inverse = chol.inverse();
    symmetrize(&mut inverse);

    let values: Vec<f64> = (0..n).map(|i| inverse[(i, i)]).collect();
    let saturated: Vec<bool> = values.iter().map(|&v| v >= 0.5 / lambda).collect();
    Ok(ChernoffInverse {
        matrix: inverse,
        min_error_variance: MinErrorVariance {
            values,
            saturated,
            lambda,
            state_labels: f.state_labels.clone(),
        },
    })
}

/// Extract the sub-matrix for a sensor, window-step, and state subset.
///
/// Computing the full matrix once and slicing is equivalent to recomputing
/// from scratch with the restricted configuration.
pub fn slice(
    o: &ObservabilityMatrix,
    sensors: &[usize],
    steps: &[usize],
    states: &[usize],
) -> Result<ObservabilityMatrix> {
    if sensors.is_empty() || steps.is_empty() || states.is_empty() {
        return Err(Error::InvalidArgument(
            "slice subsets must be non-empty".to_string(),
        ));
    }
    let p = o.channels();
    for &j in sensors {
        if j >= p {
            return Err(Error::InvalidArgument(format!(
                "sensor index {j} out of range (p = {p})"
            )));
        }
    }
    for &k in steps {
        if k >= o.window {
            return Err(Error::InvalidArgument(format!(
                "window step {k} out of range (omega = {})",
                o.window
            )));
        }
    }
    for &i in states {
        if i >= o.states() {
            return Err(Error::InvalidArgument(format!(
                "state index {i} out of range (n = {})",
                o.states()
            )));
        }
    }

    let mut values = DMatrix::zeros(sensors.len() * steps.len(), states.len());
    for (kk, &k) in steps.iter().enumerate() {
        for (jj, &j) in sensors.iter().enumerate() {
            for (ii, &i) in states.iter().enumerate() {
                values[(kk * sensors.len() + jj, ii)] = o.values[(k * p + j, i)];
            }
        }
    }
    Ok(ObservabilityMatrix {
        values,
        epsilon: o.epsilon,
        window: steps.len(),
        window_start: o.window_start,
        measurement_labels: sensors
            .iter()
            .map(|&j| o.measurement_labels[j].clone())
            .collect(),
        state_labels: states.iter().map(|&i| o.state_labels[i].clone()).collect(),
    })
}

#[cfg(test)]
mod tests;
