//! Measurement catalogue shared by the flying-agent models.
//!
//! Every measurement is a function of the state (and, through the state
//! derivative, of the current input). Angle measurements can optionally be
//! emitted as (sin, cos) pairs to avoid wrapping discontinuities.

use nalgebra::DVector;

use super::{Label, VarKind};
use crate::error::{Error, Result};

/// Apparent airflow in the body-level frame from ground velocity, wind
/// magnitude, heading, and wind direction.
pub fn apparent_airflow(vx: f64, vy: f64, w: f64, psi: f64, zeta: f64) -> (f64, f64) {
    let ax = vx - w * (psi - zeta).cos();
    let ay = vy + w * (psi - zeta).sin();
    (ax, ay)
}

/// One selectable sensor of the flying-agent measurement set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sensor {
    /// Yaw heading ψ (rad).
    Heading,
    /// Course angle β = atan2(v_y, v_x) (rad).
    CourseAngle,
    /// Apparent-airflow angle γ = atan2(a_y, a_x) (rad).
    AirflowAngle,
    /// Acceleration angle η = atan2(v̇_y, v̇_x) (rad).
    AccelAngle,
    /// Ground speed g = √(v_x² + v_y²) (m/s).
    GroundSpeed,
    /// Airspeed a = √(a_x² + a_y²) (m/s).
    Airspeed,
    /// Ventral optic flow r = g/z (1/s).
    OpticFlow,
    /// Acceleration magnitude q with the rotating-frame terms removed (m/s²).
    AccelMagnitude,
    /// Forward optic flow r_x = v_x/z (1/s).
    ForwardOpticFlow,
}

impl Sensor {
    pub fn name(&self) -> &'static str {
        match self {
            Sensor::Heading => "psi",
            Sensor::CourseAngle => "beta",
            Sensor::AirflowAngle => "gamma",
            Sensor::AccelAngle => "eta",
            Sensor::GroundSpeed => "g",
            Sensor::Airspeed => "a",
            Sensor::OpticFlow => "r",
            Sensor::AccelMagnitude => "q",
            Sensor::ForwardOpticFlow => "r_x",
        }
    }

    pub fn from_name(name: &str) -> Option<Sensor> {
        Some(match name {
            "psi" => Sensor::Heading,
            "beta" => Sensor::CourseAngle,
            "gamma" => Sensor::AirflowAngle,
            "eta" => Sensor::AccelAngle,
            "g" => Sensor::GroundSpeed,
            "a" => Sensor::Airspeed,
            "r" => Sensor::OpticFlow,
            "q" => Sensor::AccelMagnitude,
            "r_x" => Sensor::ForwardOpticFlow,
            _ => return None,
        })
    }

    pub fn is_angle(&self) -> bool {
        matches!(
            self,
            Sensor::Heading | Sensor::CourseAngle | Sensor::AirflowAngle | Sensor::AccelAngle
        )
    }

    fn unit(&self) -> &'static str {
        match self {
            Sensor::Heading | Sensor::CourseAngle | Sensor::AirflowAngle | Sensor::AccelAngle => {
                "rad"
            }
            Sensor::GroundSpeed | Sensor::Airspeed => "m/s",
            Sensor::OpticFlow | Sensor::ForwardOpticFlow => "1/s",
            Sensor::AccelMagnitude => "m/s^2",
        }
    }
}

/// Flight quantities a catalogue evaluation needs, extracted by each model.
#[derive(Debug, Clone, Copy)]
pub struct FlightView {
    pub z: f64,
    pub vx: f64,
    pub vy: f64,
    pub w: f64,
    pub zeta: f64,
    pub psi: f64,
    pub psi_dot: f64,
    pub vdot_x: f64,
    pub vdot_y: f64,
}

/// Ordered sensor selection with optional (sin, cos) expansion per angle.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementCatalogue {
    entries: Vec<(Sensor, bool)>,
}

impl MeasurementCatalogue {
    pub fn new() -> Self {
        Self {
            entries: Vec::new(),
        }
    }

    /// Sensor emitted as a single scalar.
    pub fn with(mut self, sensor: Sensor) -> Self {
        self.entries.push((sensor, false));
        self
    }

    /// Angle sensor emitted as a (sin, cos) pair.
    pub fn with_expanded(mut self, sensor: Sensor) -> Result<Self> {
        if !sensor.is_angle() {
            return Err(Error::InvalidArgument(format!(
                "sensor `{}` is not an angle and cannot be expanded",
                sensor.name()
            )));
        }
        self.entries.push((sensor, true));
        Ok(self)
    }

    /// Build from sensor names; names in `expand` are emitted as sin/cos.
    pub fn from_names(names: &[&str], expand: &[&str]) -> Result<Self> {
        let mut cat = Self::new();
        for name in names {
            let sensor = Sensor::from_name(name).ok_or_else(|| {
                Error::InvalidArgument(format!("unknown sensor `{name}`"))
            })?;
            if expand.contains(name) {
                cat = cat.with_expanded(sensor)?;
            } else {
                cat = cat.with(sensor);
            }
        }
        if cat.entries.is_empty() {
            return Err(Error::InvalidArgument(
                "measurement catalogue must select at least one sensor".to_string(),
            ));
        }
        Ok(cat)
    }

    pub fn sensors(&self) -> impl Iterator<Item = Sensor> + '_ {
        self.entries.iter().map(|(s, _)| *s)
    }

    /// Measurement labels in emission order.
    pub fn labels(&self) -> Vec<Label> {
        let mut labels = Vec::new();
        for (sensor, expand) in &self.entries {
            if *expand {
                labels.push(Label::new(
                    &format!("{}_sin", sensor.name()),
                    "-",
                    VarKind::Linear,
                ));
                labels.push(Label::new(
                    &format!("{}_cos", sensor.name()),
                    "-",
                    VarKind::Linear,
                ));
            } else {
                let kind = if sensor.is_angle() {
                    VarKind::Angle
                } else if matches!(sensor, Sensor::ForwardOpticFlow) {
                    VarKind::Linear
                } else {
                    VarKind::Magnitude
                };
                labels.push(Label::new(sensor.name(), sensor.unit(), kind));
            }
        }
        labels
    }

    /// Evaluate the selected sensors at the given flight quantities.
    pub fn evaluate(&self, view: &FlightView) -> Result<DVector<f64>> {
        let mut out = Vec::with_capacity(self.entries.len());
        for (sensor, expand) in &self.entries {
            let value = evaluate_sensor(*sensor, view)?;
            if *expand {
                out.push(value.sin());
                out.push(value.cos());
            } else {
                out.push(value);
            }
        }
        Ok(DVector::from_vec(out))
    }
}

impl Default for MeasurementCatalogue {
    fn default() -> Self {
        Self::new()
    }
}

fn undefined_angle(sensor: Sensor, x_name: &str, y_name: &str) -> Error {
    Error::UndefinedMeasurement {
        name: sensor.name().to_string(),
        reason: format!("({x_name}, {y_name}) = (0, 0) leaves the angle undefined"),
    }
}

fn evaluate_sensor(sensor: Sensor, view: &FlightView) -> Result<f64> {
    let (ax, ay) = apparent_airflow(view.vx, view.vy, view.w, view.psi, view.zeta);
    match sensor {
        Sensor::Heading => Ok(view.psi),
        Sensor::CourseAngle => {
            if view.vx == 0.0 && view.vy == 0.0 {
                return Err(undefined_angle(sensor, "v_x", "v_y"));
            }
            Ok(view.vy.atan2(view.vx))
        }
        Sensor::AirflowAngle => {
            if ax == 0.0 && ay == 0.0 {
                return Err(undefined_angle(sensor, "a_x", "a_y"));
            }
            Ok(ay.atan2(ax))
        }
        Sensor::AccelAngle => {
            if view.vdot_x == 0.0 && view.vdot_y == 0.0 {
                return Err(undefined_angle(sensor, "vdot_x", "vdot_y"));
            }
            Ok(view.vdot_y.atan2(view.vdot_x))
        }
        Sensor::GroundSpeed => Ok(view.vx.hypot(view.vy)),
        Sensor::Airspeed => Ok(ax.hypot(ay)),
        Sensor::OpticFlow => {
            if view.z <= 0.0 {
                return Err(Error::UndefinedMeasurement {
                    name: sensor.name().to_string(),
                    reason: format!("altitude z must be positive, got {}", view.z),
                });
            }
            Ok(view.vx.hypot(view.vy) / view.z)
        }
        Sensor::AccelMagnitude => {
            let fx = view.vdot_x - view.vy * view.psi_dot;
            let fy = view.vdot_y + view.vx * view.psi_dot;
            Ok(fx.hypot(fy))
        }
        Sensor::ForwardOpticFlow => {
            if view.z <= 0.0 {
                return Err(Error::UndefinedMeasurement {
                    name: sensor.name().to_string(),
                    reason: format!("altitude z must be positive, got {}", view.z),
                });
            }
            Ok(view.vx / view.z)
        }
    }
}
