//! Movement-motif setpoint generation.
//!
//! Motifs are composed onto a constant baseline in order. Ramps use cosine
//! easing so the setpoints stay C¹-continuous and tracking control does not
//! chase discontinuities.

use crate::error::{Error, Result};

/// The movement patterns evaluated as candidate active sensing motifs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotifKind {
    /// Forward speed increases by `amplitude` (m/s) and holds.
    Accelerate,
    /// Forward speed decreases by `amplitude` (m/s) and holds.
    Decelerate,
    /// Heading turns by `amplitude` (rad) with the course following it.
    HeadingTurn,
    /// Course swings out by `amplitude` (rad) and back while heading holds.
    OffsetTurn,
    /// Heading sweeps through the upwind direction over `amplitude` (rad).
    UpwindCrossing,
    /// Constants; useful as an explicit placeholder.
    Straight,
}

impl MotifKind {
    pub fn from_name(name: &str) -> Option<MotifKind> {
        Some(match name {
            "accelerate" => MotifKind::Accelerate,
            "decelerate" => MotifKind::Decelerate,
            "heading_turn" => MotifKind::HeadingTurn,
            "offset_turn" => MotifKind::OffsetTurn,
            "upwind_crossing" => MotifKind::UpwindCrossing,
            "straight" => MotifKind::Straight,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            MotifKind::Accelerate => "accelerate",
            MotifKind::Decelerate => "decelerate",
            MotifKind::HeadingTurn => "heading_turn",
            MotifKind::OffsetTurn => "offset_turn",
            MotifKind::UpwindCrossing => "upwind_crossing",
            MotifKind::Straight => "straight",
        }
    }
}

/// One motif instance placed on the timeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotifSpec {
    pub kind: MotifKind,
    /// Size of the excursion; unit depends on the kind (m/s or rad).
    pub amplitude: f64,
    /// Start time (s).
    pub start: f64,
    /// Duration (s), > 0.
    pub duration: f64,
}

/// Constant flight conditions the motifs are composed onto.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotifBaseline {
    /// Forward speed v_x (m/s).
    pub speed: f64,
    /// Initial heading ψ (rad).
    pub heading: f64,
    /// Ambient wind speed (m/s).
    pub wind_speed: f64,
    /// Ambient wind direction (rad).
    pub wind_dir: f64,
}

impl Default for MotifBaseline {
    fn default() -> Self {
        Self {
            speed: 1.0,
            heading: 0.0,
            wind_speed: 0.0,
            wind_dir: 0.0,
        }
    }
}

/// Tracked-variable setpoints over time.
#[derive(Debug, Clone, PartialEq)]
pub struct SetpointSeries {
    pub dt: f64,
    pub vx: Vec<f64>,
    pub vy: Vec<f64>,
    pub psi: Vec<f64>,
}

impl SetpointSeries {
    pub fn len(&self) -> usize {
        self.vx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vx.is_empty()
    }
}

/// Cosine easing: 0 → 1 with zero slope at both ends.
fn ease(s: f64) -> f64 {
    0.5 * (1.0 - (std::f64::consts::PI * s).cos())
}

/// Progress of a motif at time `t`: 0 before, eased in [start, start+dur], 1 after.
fn progress(spec: &MotifSpec, t: f64) -> f64 {
    if t <= spec.start {
        0.0
    } else if t >= spec.start + spec.duration {
        1.0
    } else {
        ease((t - spec.start) / spec.duration)
    }
}

/// Generate (v_x, v_y, ψ) setpoints for a motif sequence on a baseline.
///
/// Motifs are applied in list order; each one's change persists after its
/// window, except the offset turn, which swings the course out and back.
pub fn generate_motif_setpoints(
    specs: &[MotifSpec],
    baseline: &MotifBaseline,
    length: usize,
    dt: f64,
) -> Result<SetpointSeries> {
    if length == 0 || dt <= 0.0 {
        return Err(Error::InvalidArgument(
            "setpoint series needs length > 0 and dt > 0".to_string(),
        ));
    }
    let total = (length - 1) as f64 * dt;
    for spec in specs {
        if spec.duration <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "motif `{}` has non-positive duration {}",
                spec.kind.name(),
                spec.duration
            )));
        }
        if spec.start < 0.0 || spec.start + spec.duration > total + 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "motif `{}` spans [{}, {}] s outside the trajectory [0, {}] s",
                spec.kind.name(),
                spec.start,
                spec.start + spec.duration,
                total
            )));
        }
    }

    let mut vx = vec![baseline.speed; length];
    let mut vy = vec![0.0; length];
    let mut psi = vec![baseline.heading; length];

    for spec in specs {
        // heading at motif onset, for the upwind crossing direction choice
        let onset_index = (spec.start / dt).round() as usize;
        let psi_onset = psi[onset_index.min(length - 1)];
        for k in 0..length {
            let t = k as f64 * dt;
            let s = progress(spec, t);
            match spec.kind {
                MotifKind::Straight => {}
                MotifKind::Accelerate => vx[k] += spec.amplitude * s,
                MotifKind::Decelerate => vx[k] -= spec.amplitude * s,
                MotifKind::HeadingTurn => psi[k] += spec.amplitude * s,
                MotifKind::OffsetTurn => {
                    // out-and-back course excursion while heading is held
                    let bump = spec.amplitude * 0.5 * (1.0 - (2.0 * std::f64::consts::PI * s).cos());
                    let (sin_d, cos_d) = bump.sin_cos();
                    let (v_fwd, v_side) = (vx[k], vy[k]);
                    vx[k] = v_fwd * cos_d - v_side * sin_d;
                    vy[k] = v_fwd * sin_d + v_side * cos_d;
                }
                MotifKind::UpwindCrossing => {
                    // sweep the heading through the wind direction; the end
                    // point sits amplitude/2 past upwind on the far side
                    let target = if psi_onset <= baseline.wind_dir {
                        baseline.wind_dir + spec.amplitude * 0.5
                    } else {
                        baseline.wind_dir - spec.amplitude * 0.5
                    };
                    psi[k] += (target - psi_onset) * s;
                }
            }
        }
    }

    Ok(SetpointSeries { dt, vx, vy, psi })
}
