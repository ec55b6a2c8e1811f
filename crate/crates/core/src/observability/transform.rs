//! Post-hoc coordinate transformation of an observability matrix.
//!
//! Given a diffeomorphism z = T(x), the matrix in the new coordinates is
//! O_z = O_x · (∂T/∂x)⁻¹ evaluated at the window's initial state, so a
//! system never has to be re-simulated in the new coordinates.

use nalgebra::{DMatrix, DVector};

use super::ObservabilityMatrix;
use crate::dynamics::{label_index, Label, VarKind};
use crate::error::{Error, Result};
use crate::linalg::condition_number;

type ForwardFn = dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync;
type JacobianFn = dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync;

/// A state-space diffeomorphism with labelled target coordinates.
pub struct CoordinateTransform {
    labels: Vec<Label>,
    forward: Box<ForwardFn>,
    jacobian: Option<Box<JacobianFn>>,
}

impl CoordinateTransform {
    pub fn new<F>(labels: Vec<Label>, forward: F) -> Self
    where
        F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        Self {
            labels,
            forward: Box::new(forward),
            jacobian: None,
        }
    }

    /// Attach an analytic Jacobian ∂T/∂x; otherwise central differences are
    /// used.
    pub fn with_jacobian<J>(mut self, jacobian: J) -> Self
    where
        J: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.jacobian = Some(Box::new(jacobian));
        self
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn forward(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.forward)(x)
    }

    /// Jacobian ∂T/∂x at `x`, analytic when available.
    pub fn jacobian_at(&self, x: &DVector<f64>) -> DMatrix<f64> {
        if let Some(jac) = &self.jacobian {
            return jac(x);
        }
        let n = x.len();
        let m = self.forward(x).len();
        let mut j = DMatrix::zeros(m, n);
        for i in 0..n {
            let h = 1e-6 * x[i].abs().max(1.0);
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let col = (self.forward(&xp) - self.forward(&xm)) / (2.0 * h);
            j.set_column(i, &col);
        }
        j
    }

    /// Identity transform (useful as a baseline in configs).
    pub fn identity(labels: Vec<Label>) -> Self {
        Self::new(labels.clone(), |x| x.clone()).with_jacobian(move |x| {
            DMatrix::identity(x.len(), x.len())
        })
    }

    /// Replace body velocities (v_x, v_y) by their polar form: ground speed
    /// g = √(v_x² + v_y²) and course angle β = atan2(v_y, v_x). Singular at
    /// zero ground speed.
    pub fn polar_ground_speed(state_labels: &[Label]) -> Result<Self> {
        let ivx = label_index(state_labels, "vx").ok_or_else(|| {
            Error::InvalidArgument("state space has no `vx` to transform".to_string())
        })?;
        let ivy = label_index(state_labels, "vy").ok_or_else(|| {
            Error::InvalidArgument("state space has no `vy` to transform".to_string())
        })?;
        let mut labels = state_labels.to_vec();
        labels[ivx] = Label::new("g", "m/s", VarKind::Magnitude);
        labels[ivy] = Label::new("beta", "rad", VarKind::Angle);

        let forward = move |x: &DVector<f64>| {
            let mut z = x.clone();
            z[ivx] = x[ivx].hypot(x[ivy]);
            z[ivy] = x[ivy].atan2(x[ivx]);
            z
        };
        let jacobian = move |x: &DVector<f64>| {
            let n = x.len();
            let (vx, vy) = (x[ivx], x[ivy]);
            let g = vx.hypot(vy);
            let mut j = DMatrix::identity(n, n);
            if g == 0.0 {
                // leave a singular block; the caller reports the condition number
                j[(ivx, ivx)] = 0.0;
                j[(ivy, ivy)] = 0.0;
                return j;
            }
            j[(ivx, ivx)] = vx / g;
            j[(ivx, ivy)] = vy / g;
            j[(ivy, ivx)] = -vy / (g * g);
            j[(ivy, ivy)] = vx / (g * g);
            j
        };
        Ok(Self::new(labels, forward).with_jacobian(jacobian))
    }

    /// Per-state linear scaling z_i = c_i · x_i.
    pub fn scaling(state_labels: &[Label], factors: Vec<f64>) -> Self {
        let labels = state_labels.to_vec();
        let f = factors.clone();
        Self::new(labels, move |x: &DVector<f64>| {
            DVector::from_iterator(x.len(), x.iter().zip(&f).map(|(v, c)| v * c))
        })
        .with_jacobian(move |_x: &DVector<f64>| {
            DMatrix::from_diagonal(&DVector::from_vec(factors.clone()))
        })
    }
}

/// O_z = O_x · (∂T/∂x)⁻¹ evaluated at the window's initial state.
pub fn transform_observability(
    o: &ObservabilityMatrix,
    transform: &CoordinateTransform,
    x0: &DVector<f64>,
) -> Result<ObservabilityMatrix> {
    let n = o.states();
    if transform.labels().len() != n {
        return Err(Error::DimensionMismatch {
            context: "coordinate transform labels".to_string(),
            expected: n,
            got: transform.labels().len(),
        });
    }
    let jac = transform.jacobian_at(x0);
    if jac.nrows() != n || jac.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "transform jacobian".to_string(),
            expected: n,
            got: jac.nrows(),
        });
    }
    let cond = condition_number(&jac);
    if !cond.is_finite() || cond > 1e12 {
        return Err(Error::SingularJacobian {
            cond,
            context: "coordinate transform at window initial state".to_string(),
        });
    }
    let inv = jac.clone().try_inverse().ok_or(Error::SingularJacobian {
        cond,
        context: "coordinate transform at window initial state".to_string(),
    })?;
    Ok(ObservabilityMatrix {
        values: &o.values * inv,
        epsilon: o.epsilon,
        window: o.window,
        window_start: o.window_start,
        measurement_labels: o.measurement_labels.clone(),
        state_labels: transform.labels().to_vec(),
    })
}
