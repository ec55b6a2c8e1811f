//! Square-root unscented Kalman filter and its measurement-augmented
//! extension.
//!
//! The covariance is carried as a lower-triangular Cholesky factor that is
//! rebuilt through QR and rank-1 updates, so positive definiteness is
//! maintained structurally; a downdate that would lose it fails loudly
//! instead of silently corrupting the filter.

mod augment;
mod comparison;

pub use augment::{aikf_step, r_map, AugmentationSpec};
pub use comparison::{run_comparison, ComparisonRow, ComparisonScenario};

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{Label, SystemModel, VarKind};
use crate::error::{Error, Result};
use crate::linalg::{
    align_angle, chol_downdate, chol_update, cholesky_lower, psd_sqrt, solve_lower,
    solve_lower_transpose,
};

/// Unscented-transform spread parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnscentedParams {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
}

impl Default for UnscentedParams {
    fn default() -> Self {
        Self {
            alpha: 1e-3,
            beta: 1.0,
            kappa: 0.0,
        }
    }
}

impl UnscentedParams {
    /// Mean and covariance weights for dimension `n`, plus the sigma scale
    /// √(n + λ).
    fn weights(&self, n: usize) -> (Vec<f64>, Vec<f64>, f64) {
        let nf = n as f64;
        let lambda = self.alpha * self.alpha * (nf + self.kappa) - nf;
        let scale = (nf + lambda).sqrt();
        let mut wm = vec![1.0 / (2.0 * (nf + lambda)); 2 * n + 1];
        let mut wc = wm.clone();
        wm[0] = lambda / (nf + lambda);
        wc[0] = wm[0] + 1.0 - self.alpha * self.alpha + self.beta;
        (wm, wc, scale)
    }
}

/// Filter mean and square-root covariance with its noise models.
#[derive(Debug, Clone)]
pub struct FilterState {
    pub mean: DVector<f64>,
    /// Lower-triangular factor S with P = S·Sᵀ.
    pub sqrt_cov: DMatrix<f64>,
    /// Process noise Q (PSD).
    pub process_noise: DMatrix<f64>,
    /// Measurement noise R (SPD).
    pub measurement_noise: DMatrix<f64>,
    pub ut: UnscentedParams,
}

impl FilterState {
    pub fn new(
        mean: DVector<f64>,
        covariance: DMatrix<f64>,
        process_noise: DMatrix<f64>,
        measurement_noise: DMatrix<f64>,
        ut: UnscentedParams,
    ) -> Result<Self> {
        let sqrt_cov = cholesky_lower(&covariance, "initial state covariance")?;
        Ok(Self {
            mean,
            sqrt_cov,
            process_noise,
            measurement_noise,
            ut,
        })
    }

    /// Full covariance P = S·Sᵀ.
    pub fn covariance(&self) -> DMatrix<f64> {
        &self.sqrt_cov * self.sqrt_cov.transpose()
    }
}

/// Sigma points х0 = mean, then mean ± scale·S columns.
fn sigma_points(mean: &DVector<f64>, s: &DMatrix<f64>, scale: f64) -> Vec<DVector<f64>> {
    let n = mean.len();
    let mut points = Vec::with_capacity(2 * n + 1);
    points.push(mean.clone());
    for i in 0..n {
        let col = s.column(i).into_owned() * scale;
        points.push(mean + &col);
    }
    for i in 0..n {
        let col = s.column(i).into_owned() * scale;
        points.push(mean - &col);
    }
    points
}

/// Weighted mean anchored at the first point: χ0 + Σ w_i (χ_i − χ0). The
/// anchored form avoids the catastrophic cancellation of the raw weighted
/// sum when w0 is large and negative (small alpha).
fn anchored_mean(points: &[DVector<f64>], wm: &[f64]) -> DVector<f64> {
    let mut acc = DVector::zeros(points[0].len());
    for (i, point) in points.iter().enumerate().skip(1) {
        acc += wm[i] * (point - &points[0]);
    }
    &points[0] + acc
}

/// Rebuild a lower-triangular factor from weighted deviations and an
/// additive noise square root via QR, then apply the (possibly negative)
/// center-point weight as a rank-1 update or downdate.
fn factor_from_deviations(
    deviations: &[DVector<f64>],
    wc: &[f64],
    noise_sqrt: Option<&DMatrix<f64>>,
    context: &str,
) -> Result<DMatrix<f64>> {
    let dim = deviations[0].len();
    let extra = noise_sqrt.map(|m| m.ncols()).unwrap_or(0);
    let rows = deviations.len() - 1 + extra;
    let mut stacked = DMatrix::zeros(rows, dim);
    for (i, dev) in deviations.iter().enumerate().skip(1) {
        let w = wc[i].sqrt();
        stacked.row_mut(i - 1).copy_from(&(w * dev).transpose());
    }
    if let Some(noise) = noise_sqrt {
        stacked
            .view_mut((deviations.len() - 1, 0), (extra, dim))
            .copy_from(&noise.transpose());
    }
    let qr = stacked.qr();
    let mut s = qr.r().rows(0, dim).transpose().into_owned();
    // normalize the factor to a positive diagonal
    for j in 0..dim {
        if s[(j, j)] < 0.0 {
            for i in 0..dim {
                s[(i, j)] = -s[(i, j)];
            }
        }
    }
    let w0 = wc[0];
    let dev0 = deviations[0].clone();
    if w0 >= 0.0 {
        chol_update(&mut s, &(w0.sqrt() * dev0));
    } else {
        chol_downdate(&mut s, &((-w0).sqrt() * dev0), context)?;
    }
    Ok(s)
}

/// One unscented predict-update against an arbitrary measurement map.
///
/// `measure` is evaluated at every sigma point; `y` is the measurement
/// taken after the step, with the input still held. Angle-kind measurement
/// channels are aligned across sigma points and the innovation is wrapped.
pub(crate) fn srukf_step_with<FStep, FMeas>(
    fs: &FilterState,
    step_fn: FStep,
    measure_fn: FMeas,
    measurement_labels: &[Label],
    measurement_noise: &DMatrix<f64>,
    y: &DVector<f64>,
) -> Result<FilterState>
where
    FStep: Fn(&DVector<f64>) -> DVector<f64>,
    FMeas: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let n = fs.mean.len();
    let p = y.len();
    if measurement_noise.nrows() != p {
        return Err(Error::DimensionMismatch {
            context: "measurement vs noise".to_string(),
            expected: measurement_noise.nrows(),
            got: p,
        });
    }
    let (wm, wc, scale) = fs.ut.weights(n);

    // predict
    let chi = sigma_points(&fs.mean, &fs.sqrt_cov, scale);
    let propagated: Vec<DVector<f64>> = chi.iter().map(&step_fn).collect();
    for (i, point) in propagated.iter().enumerate() {
        if point.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "state prediction diverged at sigma point {i}"
            )));
        }
    }
    let predicted_mean = anchored_mean(&propagated, &wm);
    let deviations: Vec<DVector<f64>> =
        propagated.iter().map(|x| x - &predicted_mean).collect();
    let q = &fs.process_noise;
    let q_sqrt = if q.iter().all(|v| *v == 0.0) {
        None
    } else {
        Some(match nalgebra::Cholesky::new(q.clone()) {
            Some(chol) => chol.l(),
            None => psd_sqrt(q),
        })
    };
    let predicted_sqrt = factor_from_deviations(
        &deviations,
        &wc,
        q_sqrt.as_ref(),
        "predicted covariance",
    )?;

    // update: fresh sigma points from the predicted distribution
    let chi_upd = sigma_points(&predicted_mean, &predicted_sqrt, scale);
    let mut observed: Vec<DVector<f64>> = Vec::with_capacity(chi_upd.len());
    for (i, point) in chi_upd.iter().enumerate() {
        let mut obs = measure_fn(point).map_err(|e| e.at_sigma_point(i))?;
        if i > 0 {
            for (j, label) in measurement_labels.iter().enumerate() {
                if label.kind == VarKind::Angle {
                    obs[j] = align_angle(obs[j], observed[0][j]);
                }
            }
        }
        observed.push(obs);
    }
    let predicted_y = anchored_mean(&observed, &wm);
    let y_deviations: Vec<DVector<f64>> =
        observed.iter().map(|obs| obs - &predicted_y).collect();
    let r_sqrt = cholesky_lower(measurement_noise, "measurement noise")?;
    let innovation_sqrt = factor_from_deviations(
        &y_deviations,
        &wc,
        Some(&r_sqrt),
        "innovation covariance",
    )?;

    let mut cross = DMatrix::zeros(n, p);
    for i in 0..chi_upd.len() {
        let dx = &chi_upd[i] - &predicted_mean;
        cross += wc[i] * dx * y_deviations[i].transpose();
    }

    // K = Pxy (Sy Syᵀ)⁻¹ through two triangular solves
    let z = solve_lower(&innovation_sqrt, &cross.transpose());
    let gain = solve_lower_transpose(&innovation_sqrt, &z).transpose();

    let mut innovation = y - &predicted_y;
    for (j, label) in measurement_labels.iter().enumerate() {
        if label.kind == VarKind::Angle {
            innovation[j] = crate::linalg::wrap_angle(innovation[j]);
        }
    }
    let updated_mean = &predicted_mean + &gain * innovation;

    // downdate the factor once per measurement channel
    let mut updated_sqrt = predicted_sqrt;
    let u = &gain * &innovation_sqrt;
    for j in 0..p {
        chol_downdate(
            &mut updated_sqrt,
            &u.column(j).into_owned(),
            "posterior covariance",
        )?;
    }

    Ok(FilterState {
        mean: updated_mean,
        sqrt_cov: updated_sqrt,
        process_noise: fs.process_noise.clone(),
        measurement_noise: fs.measurement_noise.clone(),
        ut: fs.ut,
    })
}

/// Standard unscented predict-update against the model's own measurement
/// map. `u` is held over the step and the measurement `y` is taken at the
/// stepped state.
pub fn ukf_step(
    fs: &FilterState,
    model: &dyn SystemModel,
    u: &DVector<f64>,
    y: &DVector<f64>,
    dt: f64,
) -> Result<FilterState> {
    crate::dynamics::step(model, &fs.mean, u, dt)?;
    if y.len() != model.measurement_labels().len() {
        return Err(Error::DimensionMismatch {
            context: "measurement vector".to_string(),
            expected: model.measurement_labels().len(),
            got: y.len(),
        });
    }
    srukf_step_with(
        fs,
        |x| model.step(x, u, dt),
        |x| model.measure(x, u),
        model.measurement_labels(),
        &fs.measurement_noise,
        y,
    )
}
