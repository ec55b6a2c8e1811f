//! System-model abstraction, the concrete flying-agent models, and a
//! fixed-step integrator with zero-order-hold inputs.
//!
//! A [`SystemModel`] bundles labelled state/input/measurement spaces with a
//! deterministic step map and a (possibly partial) measurement map. Stepping
//! is discrete with inputs held constant over each step, so a simulation can
//! be restarted from any stored state and reproduce the remainder exactly.

mod dynamic;
mod kinematic;
mod lti;
mod measurement;
mod planar;

pub use dynamic::{DynamicAgent, DynamicAgentState};
pub use kinematic::{kinematic_input, KinematicAgent, KinematicAgentState, KinematicParams};
pub use lti::DiscreteLti;
pub use measurement::{apparent_airflow, MeasurementCatalogue, Sensor};
pub use planar::{Planar2D, Planar2DState};

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::align_angle;

/// How a variable behaves under perturbation and unwrapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    /// Ordinary real-valued variable.
    Linear,
    /// Angular variable; stored unwrapped (continuous, not clamped).
    Angle,
    /// Nonnegative variable; central perturbations must not cross zero.
    Magnitude,
}

/// Name, unit, and kind of one state, input, or measurement variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Label {
    pub name: String,
    pub unit: String,
    pub kind: VarKind,
}

impl Label {
    pub fn new(name: &str, unit: &str, kind: VarKind) -> Self {
        Self {
            name: name.to_string(),
            unit: unit.to_string(),
            kind,
        }
    }
}

/// Index of a label by name.
pub fn label_index(labels: &[Label], name: &str) -> Option<usize> {
    labels.iter().position(|l| l.name == name)
}

/// A deterministic discrete-time system with labelled variables.
///
/// `step` must be a pure function of its arguments and `measure` must be
/// defined for every state the bound scenario can produce. Values are
/// immutable after construction and safe to share across threads.
pub trait SystemModel: Send + Sync {
    fn state_labels(&self) -> &[Label];
    fn input_labels(&self) -> &[Label];
    fn measurement_labels(&self) -> &[Label];

    /// Advance one step of `dt` seconds with the input held constant.
    fn step(&self, x: &DVector<f64>, u: &DVector<f64>, dt: f64) -> DVector<f64>;

    /// Evaluate the measurement map at `(x, u)`.
    fn measure(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>>;
}

impl SystemModel for Box<dyn SystemModel> {
    fn state_labels(&self) -> &[Label] {
        (**self).state_labels()
    }
    fn input_labels(&self) -> &[Label] {
        (**self).input_labels()
    }
    fn measurement_labels(&self) -> &[Label] {
        (**self).measurement_labels()
    }
    fn step(&self, x: &DVector<f64>, u: &DVector<f64>, dt: f64) -> DVector<f64> {
        (**self).step(x, u, dt)
    }
    fn measure(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
        (**self).measure(x, u)
    }
}

fn check_finite(v: &DVector<f64>, labels: &[Label], what: &'static str) -> Result<()> {
    for (i, value) in v.iter().enumerate() {
        if !value.is_finite() {
            let label = labels
                .get(i)
                .map(|l| l.name.clone())
                .unwrap_or_else(|| format!("#{i}"));
            return Err(Error::NonFinite { what, label });
        }
    }
    Ok(())
}

fn check_dims(model: &dyn SystemModel, x: &DVector<f64>, u: &DVector<f64>) -> Result<()> {
    if x.len() != model.state_labels().len() {
        return Err(Error::DimensionMismatch {
            context: "state vector".to_string(),
            expected: model.state_labels().len(),
            got: x.len(),
        });
    }
    if u.len() != model.input_labels().len() {
        return Err(Error::DimensionMismatch {
            context: "input vector".to_string(),
            expected: model.input_labels().len(),
            got: u.len(),
        });
    }
    Ok(())
}

/// Validated single step under zero-order-hold input.
pub fn step(
    model: &dyn SystemModel,
    x: &DVector<f64>,
    u: &DVector<f64>,
    dt: f64,
) -> Result<DVector<f64>> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "step size dt must be positive, got {dt}"
        )));
    }
    check_dims(model, x, u)?;
    check_finite(x, model.state_labels(), "state")?;
    check_finite(u, model.input_labels(), "input")?;
    Ok(model.step(x, u, dt))
}

/// Validated measurement evaluation.
pub fn measure(
    model: &dyn SystemModel,
    x: &DVector<f64>,
    u: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_dims(model, x, u)?;
    check_finite(x, model.state_labels(), "state")?;
    check_finite(u, model.input_labels(), "input")?;
    model.measure(x, u)
}

/// Measurement with angle components shifted by multiples of 2π to lie
/// within π of the caller-provided reference.
pub fn measure_unwrapped(
    model: &dyn SystemModel,
    x: &DVector<f64>,
    u: &DVector<f64>,
    reference: &DVector<f64>,
) -> Result<DVector<f64>> {
    let mut y = measure(model, x, u)?;
    for (j, label) in model.measurement_labels().iter().enumerate() {
        if label.kind == VarKind::Angle {
            y[j] = align_angle(y[j], reference[j]);
        }
    }
    Ok(y)
}

/// Classical fourth-order Runge–Kutta step of a continuous-time derivative
/// field with the input held constant over the step.
pub fn rk4_step<F>(deriv: F, x: &DVector<f64>, u: &DVector<f64>, dt: f64) -> DVector<f64>
where
    F: Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64>,
{
    let k1 = deriv(x, u);
    let k2 = deriv(&(x + 0.5 * dt * &k1), u);
    let k3 = deriv(&(x + 0.5 * dt * &k2), u);
    let k4 = deriv(&(x + dt * &k3), u);
    x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}
