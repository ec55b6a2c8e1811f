//! 3D kinematic flying-agent model.
//!
//! Inputs are kinematically measurable quantities (a thrust-aligned
//! acceleration and three angular rates) rather than forces and torques.
//! Drag is proportional to the apparent airflow so that ambient wind
//! influences the agent's acceleration. The state carries the 2D wind
//! (magnitude and direction) and one calibration coefficient per input;
//! coefficients fixed at 1 reproduce the uncalibrated model exactly.
//!
//! `z` is altitude, positive up; `v_z` is its rate and `u_z` the upward
//! thrust acceleration, so hover requires `u_z = gravity / k_z`.

use nalgebra::DVector;

use super::measurement::{apparent_airflow, FlightView, MeasurementCatalogue, Sensor};
use super::{rk4_step, Label, SystemModel, VarKind};
use crate::error::Result;

/// Physical parameters of the kinematic model.
#[derive(Debug, Clone, Copy)]
pub struct KinematicParams {
    /// Gravitational acceleration (m/s²).
    pub gravity: f64,
    /// Kinematic drag coefficient on apparent airflow (1/s).
    pub drag: f64,
}

impl Default for KinematicParams {
    fn default() -> Self {
        Self {
            gravity: 9.81,
            drag: 0.1,
        }
    }
}

/// Named view of the kinematic state vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicAgentState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
    pub phi: f64,
    pub theta: f64,
    pub psi: f64,
    /// Ambient wind speed (m/s, nonnegative).
    pub w: f64,
    /// Ambient wind direction (rad, stored unwrapped).
    pub zeta: f64,
    pub k_z: f64,
    pub k_phi: f64,
    pub k_theta: f64,
    pub k_psi: f64,
}

impl KinematicAgentState {
    /// Hovering agent at the given altitude, zero wind, unit calibration.
    pub fn hover(altitude: f64) -> Self {
        Self {
            x: 0.0,
            y: 0.0,
            z: altitude,
            vx: 0.0,
            vy: 0.0,
            vz: 0.0,
            phi: 0.0,
            theta: 0.0,
            psi: 0.0,
            w: 0.0,
            zeta: 0.0,
            k_z: 1.0,
            k_phi: 1.0,
            k_theta: 1.0,
            k_psi: 1.0,
        }
    }

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_vec(vec![
            self.x, self.y, self.z, self.vx, self.vy, self.vz, self.phi, self.theta, self.psi,
            self.w, self.zeta, self.k_z, self.k_phi, self.k_theta, self.k_psi,
        ])
    }

    pub fn from_vector(v: &DVector<f64>) -> Self {
        Self {
            x: v[0],
            y: v[1],
            z: v[2],
            vx: v[3],
            vy: v[4],
            vz: v[5],
            phi: v[6],
            theta: v[7],
            psi: v[8],
            w: v[9],
            zeta: v[10],
            k_z: v[11],
            k_phi: v[12],
            k_theta: v[13],
            k_psi: v[14],
        }
    }

    /// Apparent airflow (a_x, a_y) experienced at this state.
    pub fn apparent_airflow(&self) -> (f64, f64) {
        apparent_airflow(self.vx, self.vy, self.w, self.psi, self.zeta)
    }
}

/// State vector indices, in canonical order.
pub(crate) mod idx {
    pub const X: usize = 0;
    pub const Y: usize = 1;
    pub const Z: usize = 2;
    pub const VX: usize = 3;
    pub const VY: usize = 4;
    pub const VZ: usize = 5;
    pub const PHI: usize = 6;
    pub const THETA: usize = 7;
    pub const PSI: usize = 8;
    pub const W: usize = 9;
    pub const ZETA: usize = 10;
    pub const KZ: usize = 11;
    pub const KPHI: usize = 12;
    pub const KTHETA: usize = 13;
    pub const KPSI: usize = 14;
}

/// 3D kinematic model with measurement catalogue bound at construction.
pub struct KinematicAgent {
    params: KinematicParams,
    catalogue: MeasurementCatalogue,
    state_labels: Vec<Label>,
    input_labels: Vec<Label>,
    measurement_labels: Vec<Label>,
}

impl KinematicAgent {
    pub fn new(params: KinematicParams, catalogue: MeasurementCatalogue) -> Self {
        let state_labels = vec![
            Label::new("x", "m", VarKind::Linear),
            Label::new("y", "m", VarKind::Linear),
            Label::new("z", "m", VarKind::Linear),
            Label::new("vx", "m/s", VarKind::Linear),
            Label::new("vy", "m/s", VarKind::Linear),
            Label::new("vz", "m/s", VarKind::Linear),
            Label::new("phi", "rad", VarKind::Angle),
            Label::new("theta", "rad", VarKind::Angle),
            Label::new("psi", "rad", VarKind::Angle),
            Label::new("w", "m/s", VarKind::Magnitude),
            Label::new("zeta", "rad", VarKind::Angle),
            Label::new("k_z", "-", VarKind::Linear),
            Label::new("k_phi", "-", VarKind::Linear),
            Label::new("k_theta", "-", VarKind::Linear),
            Label::new("k_psi", "-", VarKind::Linear),
        ];
        let input_labels = vec![
            Label::new("u_z", "m/s^2", VarKind::Linear),
            Label::new("u_phi", "rad/s", VarKind::Linear),
            Label::new("u_theta", "rad/s", VarKind::Linear),
            Label::new("u_psi", "rad/s", VarKind::Linear),
            Label::new("u_w", "m/s^2", VarKind::Linear),
            Label::new("u_zeta", "rad/s", VarKind::Linear),
        ];
        let measurement_labels = catalogue.labels();
        Self {
            params,
            catalogue,
            state_labels,
            input_labels,
            measurement_labels,
        }
    }

    /// Model with default parameters and the angular sensor set {ψ, β, γ}.
    pub fn with_angular_sensors() -> Self {
        let cat = MeasurementCatalogue::new()
            .with(Sensor::Heading)
            .with(Sensor::CourseAngle)
            .with(Sensor::AirflowAngle);
        Self::new(KinematicParams::default(), cat)
    }

    pub fn params(&self) -> &KinematicParams {
        &self.params
    }

    pub fn catalogue(&self) -> &MeasurementCatalogue {
        &self.catalogue
    }

    /// Continuous-time state derivative.
    pub fn derivative(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        use idx::*;
        let p = &self.params;
        let (ax, ay) = apparent_airflow(x[VX], x[VY], x[W], x[PSI], x[ZETA]);
        let thrust = u[0] * x[KZ];
        let psi_dot = u[3] * x[KPSI];
        let (sin_phi, cos_phi) = x[PHI].sin_cos();
        let (sin_theta, cos_theta) = x[THETA].sin_cos();
        let (sin_psi, cos_psi) = x[PSI].sin_cos();

        let mut dx = DVector::zeros(15);
        dx[X] = x[VX] * cos_psi - x[VY] * sin_psi;
        dx[Y] = x[VX] * sin_psi + x[VY] * cos_psi;
        dx[Z] = x[VZ];
        dx[VX] = thrust * cos_phi * sin_theta - p.drag * ax + x[VY] * psi_dot;
        dx[VY] = -thrust * sin_phi - p.drag * ay - x[VX] * psi_dot;
        dx[VZ] = thrust * cos_phi * cos_theta - p.drag * x[VZ] - p.gravity;
        dx[PHI] = u[1] * x[KPHI];
        dx[THETA] = u[2] * x[KTHETA];
        dx[PSI] = psi_dot;
        dx[W] = u[4];
        dx[ZETA] = u[5];
        dx
    }

    fn flight_view(&self, x: &DVector<f64>, u: &DVector<f64>) -> FlightView {
        use idx::*;
        let dx = self.derivative(x, u);
        FlightView {
            z: x[Z],
            vx: x[VX],
            vy: x[VY],
            w: x[W],
            zeta: x[ZETA],
            psi: x[PSI],
            psi_dot: dx[PSI],
            vdot_x: dx[VX],
            vdot_y: dx[VY],
        }
    }
}

impl SystemModel for KinematicAgent {
    fn state_labels(&self) -> &[Label] {
        &self.state_labels
    }
    fn input_labels(&self) -> &[Label] {
        &self.input_labels
    }
    fn measurement_labels(&self) -> &[Label] {
        &self.measurement_labels
    }

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>, dt: f64) -> DVector<f64> {
        rk4_step(|x, u| self.derivative(x, u), x, u, dt)
    }

    fn measure(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
        self.catalogue.evaluate(&self.flight_view(x, u))
    }
}

/// Input vector for the kinematic model from named components.
pub fn kinematic_input(
    u_z: f64,
    u_phi: f64,
    u_theta: f64,
    u_psi: f64,
    u_w: f64,
    u_zeta: f64,
) -> DVector<f64> {
    DVector::from_vec(vec![u_z, u_phi, u_theta, u_psi, u_w, u_zeta])
}

impl KinematicAgent {
    /// The hover-equilibrium input for a state with unit calibration.
    pub fn hover_input(&self) -> DVector<f64> {
        kinematic_input(self.params.gravity, 0.0, 0.0, 0.0, 0.0, 0.0)
    }
}
