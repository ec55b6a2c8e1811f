//! 3D dynamical drone model with force/torque inputs.
//!
//! Mass, inertia, and drag enter as auxiliary state variables (with zero
//! dynamics) so that observability analysis can treat them as unknowns.
//! Altitude and vertical velocity are positive up, as in the kinematic
//! model, so hovering requires a thrust force `u_z = m * gravity`.

use nalgebra::DVector;

use super::measurement::{apparent_airflow, FlightView, MeasurementCatalogue};
use super::{rk4_step, Label, SystemModel, VarKind};
use crate::error::Result;

/// Named view of the dynamical state vector. Parameter defaults are the
/// measured quadcopter values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicAgentState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
    pub phi: f64,
    pub theta: f64,
    pub psi: f64,
    pub omega_x: f64,
    pub omega_y: f64,
    pub omega_z: f64,
    pub w: f64,
    pub zeta: f64,
    /// Mass (kg), > 0.
    pub mass: f64,
    /// Roll inertia (kg·m²), > 0.
    pub inertia_x: f64,
    /// Pitch inertia (kg·m²), > 0.
    pub inertia_y: f64,
    /// Yaw inertia (kg·m²), > 0.
    pub inertia_z: f64,
    /// Translational damping (kg/s).
    pub drag: f64,
}

impl DynamicAgentState {
    /// Hovering agent at the given altitude with the measured quadcopter
    /// parameters: m = 2.529 kg, I_x = I_y = 0.040, I_z = 0.046 kg·m²,
    /// C = 0.1 kg/s.
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
            omega_x: 0.0,
            omega_y: 0.0,
            omega_z: 0.0,
            w: 0.0,
            zeta: 0.0,
            mass: 2.529,
            inertia_x: 0.040,
            inertia_y: 0.040,
            inertia_z: 0.046,
            drag: 0.1,
        }
    }

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_vec(vec![
            self.x,
            self.y,
            self.z,
            self.vx,
            self.vy,
            self.vz,
            self.phi,
            self.theta,
            self.psi,
            self.omega_x,
            self.omega_y,
            self.omega_z,
            self.w,
            self.zeta,
            self.mass,
            self.inertia_x,
            self.inertia_y,
            self.inertia_z,
            self.drag,
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
            omega_x: v[9],
            omega_y: v[10],
            omega_z: v[11],
            w: v[12],
            zeta: v[13],
            mass: v[14],
            inertia_x: v[15],
            inertia_y: v[16],
            inertia_z: v[17],
            drag: v[18],
        }
    }
}

mod idx {
    pub const Z: usize = 2;
    pub const VX: usize = 3;
    pub const VY: usize = 4;
    pub const VZ: usize = 5;
    pub const PHI: usize = 6;
    pub const THETA: usize = 7;
    pub const PSI: usize = 8;
    pub const WX: usize = 9;
    pub const WY: usize = 10;
    pub const WZ: usize = 11;
    pub const W: usize = 12;
    pub const ZETA: usize = 13;
    pub const MASS: usize = 14;
    pub const IX: usize = 15;
    pub const IY: usize = 16;
    pub const IZ: usize = 17;
    pub const DRAG: usize = 18;
}

/// Dynamical drone model with measurement catalogue bound at construction.
pub struct DynamicAgent {
    gravity: f64,
    catalogue: MeasurementCatalogue,
    state_labels: Vec<Label>,
    input_labels: Vec<Label>,
    measurement_labels: Vec<Label>,
}

impl DynamicAgent {
    pub fn new(catalogue: MeasurementCatalogue) -> Self {
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
            Label::new("omega_x", "rad/s", VarKind::Linear),
            Label::new("omega_y", "rad/s", VarKind::Linear),
            Label::new("omega_z", "rad/s", VarKind::Linear),
            Label::new("w", "m/s", VarKind::Magnitude),
            Label::new("zeta", "rad", VarKind::Angle),
            Label::new("m", "kg", VarKind::Magnitude),
            Label::new("I_x", "kg*m^2", VarKind::Magnitude),
            Label::new("I_y", "kg*m^2", VarKind::Magnitude),
            Label::new("I_z", "kg*m^2", VarKind::Magnitude),
            Label::new("C", "kg/s", VarKind::Magnitude),
        ];
        let input_labels = vec![
            Label::new("u_z", "N", VarKind::Linear),
            Label::new("u_phi", "N*m", VarKind::Linear),
            Label::new("u_theta", "N*m", VarKind::Linear),
            Label::new("u_psi", "N*m", VarKind::Linear),
            Label::new("u_w", "m/s^2", VarKind::Linear),
            Label::new("u_zeta", "rad/s", VarKind::Linear),
        ];
        let measurement_labels = catalogue.labels();
        Self {
            gravity: 9.81,
            catalogue,
            state_labels,
            input_labels,
            measurement_labels,
        }
    }

    pub fn gravity(&self) -> f64 {
        self.gravity
    }

    /// Continuous-time state derivative.
    pub fn derivative(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        use idx::*;
        let (ax, ay) = apparent_airflow(x[VX], x[VY], x[W], x[PSI], x[ZETA]);
        let (sin_phi, cos_phi) = x[PHI].sin_cos();
        let (sin_theta, cos_theta) = x[THETA].sin_cos();
        let (sin_psi, cos_psi) = x[PSI].sin_cos();
        let tan_theta = sin_theta / cos_theta;
        let m = x[MASS];
        let (ix, iy, iz) = (x[IX], x[IY], x[IZ]);
        let c = x[DRAG];
        let psi_dot = x[WY] * sin_phi / cos_theta - x[WZ] * cos_phi / cos_theta;

        let mut dx = DVector::zeros(19);
        dx[0] = x[VX] * cos_psi - x[VY] * sin_psi;
        dx[1] = x[VX] * sin_psi + x[VY] * cos_psi;
        dx[Z] = x[VZ];
        dx[VX] = (u[0] * cos_phi * sin_theta - c * ax) / m + x[VY] * psi_dot;
        dx[VY] = (-u[0] * sin_phi - c * ay) / m - x[VX] * psi_dot;
        dx[VZ] = (u[0] * cos_phi * cos_theta - c * x[VZ]) / m - self.gravity;
        dx[PHI] = x[WX] + tan_theta * (x[WY] * sin_phi + x[WZ] * cos_phi);
        dx[THETA] = x[WY] * cos_phi - x[WZ] * sin_phi;
        dx[PSI] = psi_dot;
        dx[WX] = u[1] / ix + (iy - iz) / ix * x[WY] * x[WZ];
        dx[WY] = u[2] / iy + (iz - ix) / iy * x[WX] * x[WZ];
        dx[WZ] = u[3] / iz + (ix - iy) / iz * x[WX] * x[WY];
        dx[W] = u[4];
        dx[ZETA] = u[5];
        // mass, inertia, and drag are constant auxiliary states
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

impl SystemModel for DynamicAgent {
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
