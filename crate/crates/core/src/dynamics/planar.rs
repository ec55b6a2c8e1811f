//! Simplified 2D kinematic model: altitude, vertical velocity, and forward
//! velocity driven directly by measured accelerations. The only measurement
//! is forward optic flow r_x = v_x / z, which requires z > 0.

use nalgebra::DVector;

use super::measurement::{FlightView, MeasurementCatalogue, Sensor};
use super::{Label, SystemModel, VarKind};
use crate::error::{Error, Result};

/// Named view of the planar state vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Planar2DState {
    /// Altitude (m), positive above ground.
    pub z: f64,
    /// Vertical velocity (m/s).
    pub vz: f64,
    /// Forward velocity (m/s).
    pub vx: f64,
}

impl Planar2DState {
    pub fn new(z: f64, vz: f64, vx: f64) -> Self {
        Self { z, vz, vx }
    }

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_vec(vec![self.z, self.vz, self.vx])
    }

    pub fn from_vector(v: &DVector<f64>) -> Self {
        Self {
            z: v[0],
            vz: v[1],
            vx: v[2],
        }
    }
}

/// 2D kinematic model for altitude/velocity estimation.
pub struct Planar2D {
    catalogue: MeasurementCatalogue,
    state_labels: Vec<Label>,
    input_labels: Vec<Label>,
    measurement_labels: Vec<Label>,
}

impl Planar2D {
    /// Catalogue may only select sensors computable from (z, v_z, v_x).
    pub fn new(catalogue: MeasurementCatalogue) -> Result<Self> {
        for sensor in catalogue.sensors() {
            if sensor != Sensor::ForwardOpticFlow {
                return Err(Error::InvalidArgument(format!(
                    "sensor `{}` is not computable from the planar state (z, vz, vx)",
                    sensor.name()
                )));
            }
        }
        let state_labels = vec![
            Label::new("z", "m", VarKind::Magnitude),
            Label::new("vz", "m/s", VarKind::Linear),
            Label::new("vx", "m/s", VarKind::Linear),
        ];
        let input_labels = vec![
            Label::new("u_z", "m/s^2", VarKind::Linear),
            Label::new("u_x", "m/s^2", VarKind::Linear),
        ];
        let measurement_labels = catalogue.labels();
        Ok(Self {
            catalogue,
            state_labels,
            input_labels,
            measurement_labels,
        })
    }

    /// Model measuring forward optic flow only.
    pub fn with_forward_flow() -> Self {
        Self::new(MeasurementCatalogue::new().with(Sensor::ForwardOpticFlow))
            .expect("forward flow is always computable")
    }

    /// Continuous-time state derivative: ż = v_z, v̇_z = u_z, v̇_x = u_x.
    pub fn derivative(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        DVector::from_vec(vec![x[1], u[0], u[1]])
    }
}

impl SystemModel for Planar2D {
    fn state_labels(&self) -> &[Label] {
        &self.state_labels
    }
    fn input_labels(&self) -> &[Label] {
        &self.input_labels
    }
    fn measurement_labels(&self) -> &[Label] {
        &self.measurement_labels
    }

    /// The dynamics are linear in (state, input), so the zero-order-hold
    /// step has the exact closed form of a double integrator.
    fn step(&self, x: &DVector<f64>, u: &DVector<f64>, dt: f64) -> DVector<f64> {
        DVector::from_vec(vec![
            x[0] + x[1] * dt + 0.5 * u[0] * dt * dt,
            x[1] + u[0] * dt,
            x[2] + u[1] * dt,
        ])
    }

    fn measure(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
        let view = FlightView {
            z: x[0],
            vx: x[2],
            vy: 0.0,
            w: 0.0,
            zeta: 0.0,
            psi: 0.0,
            psi_dot: 0.0,
            vdot_x: u[1],
            vdot_y: 0.0,
        };
        self.catalogue.evaluate(&view)
    }
}
