//! Randomized setpoint generation for estimator training data.
//!
//! Every generator is a pure function of (seed, parameters): the same seed
//! reproduces the same series bit for bit.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::motif::SetpointSeries;

/// Uniform sampling ranges for randomized flight snippets. Forward
/// acceleration is encoded as the final/initial speed ratio so flight stays
/// generally directed forward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomTrajectoryRanges {
    /// Wind speed (m/s).
    pub w: (f64, f64),
    /// Wind direction (rad).
    pub zeta: (f64, f64),
    /// Initial heading (rad).
    pub psi: (f64, f64),
    /// Heading rate (rad/s).
    pub psi_dot: (f64, f64),
    /// Heading acceleration (rad/s²).
    pub psi_ddot: (f64, f64),
    /// Initial forward speed (m/s).
    pub vx: (f64, f64),
    /// Final/initial forward speed ratio.
    pub vx_ratio: (f64, f64),
    /// Initial sideslip speed (m/s).
    pub vy: (f64, f64),
    /// Sideslip acceleration (m/s²).
    pub vy_dot: (f64, f64),
}

impl Default for RandomTrajectoryRanges {
    fn default() -> Self {
        use std::f64::consts::PI;
        Self {
            w: (0.0, 2.0),
            zeta: (-PI, PI),
            psi: (-PI, PI),
            psi_dot: (-0.11, 0.11),
            psi_ddot: (-2.08, 2.08),
            vx: (0.05, 5.0),
            vx_ratio: (0.05, 2.0),
            vy: (-0.2, 0.2),
            vy_dot: (-0.1, 0.1),
        }
    }
}

impl RandomTrajectoryRanges {
    fn validate(&self) {
        for (name, (lo, hi)) in [
            ("w", self.w),
            ("zeta", self.zeta),
            ("psi", self.psi),
            ("psi_dot", self.psi_dot),
            ("psi_ddot", self.psi_ddot),
            ("vx", self.vx),
            ("vx_ratio", self.vx_ratio),
            ("vy", self.vy),
            ("vy_dot", self.vy_dot),
        ] {
            assert!(lo <= hi, "range `{name}` has low > high");
        }
    }
}

/// One set of drawn trajectory parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomDraw {
    pub w: f64,
    pub zeta: f64,
    pub psi0: f64,
    pub psi_dot: f64,
    pub psi_ddot: f64,
    pub vx0: f64,
    pub vx_ratio: f64,
    pub vy0: f64,
    pub vy_dot: f64,
}

fn sample(rng: &mut ChaCha20Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

impl RandomDraw {
    pub fn sample(ranges: &RandomTrajectoryRanges, rng: &mut ChaCha20Rng) -> RandomDraw {
        RandomDraw {
            w: sample(rng, ranges.w),
            zeta: sample(rng, ranges.zeta),
            psi0: sample(rng, ranges.psi),
            psi_dot: sample(rng, ranges.psi_dot),
            psi_ddot: sample(rng, ranges.psi_ddot),
            vx0: sample(rng, ranges.vx),
            vx_ratio: sample(rng, ranges.vx_ratio),
            vy0: sample(rng, ranges.vy),
            vy_dot: sample(rng, ranges.vy_dot),
        }
    }

    /// Realize the drawn parameters as a setpoint series of `length` samples.
    pub fn setpoints(&self, length: usize, dt: f64) -> SetpointSeries {
        let total = (length.saturating_sub(1)) as f64 * dt;
        let mut vx = Vec::with_capacity(length);
        let mut vy = Vec::with_capacity(length);
        let mut psi = Vec::with_capacity(length);
        for k in 0..length {
            let t = k as f64 * dt;
            psi.push(self.psi0 + self.psi_dot * t + 0.5 * self.psi_ddot * t * t);
            let ramp = if total > 0.0 { t / total } else { 0.0 };
            vx.push(self.vx0 + (self.vx0 * self.vx_ratio - self.vx0) * ramp);
            vy.push(self.vy0 + self.vy_dot * t);
        }
        SetpointSeries { dt, vx, vy, psi }
    }
}

/// Draw one trajectory's parameters and realize its setpoints plus the
/// constant ambient wind (w, ζ).
pub fn generate_random_setpoints(
    ranges: &RandomTrajectoryRanges,
    seed: u64,
    length: usize,
    dt: f64,
) -> (SetpointSeries, f64, f64) {
    ranges.validate();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let draw = RandomDraw::sample(ranges, &mut rng);
    (draw.setpoints(length, dt), draw.w, draw.zeta)
}

/// Parameter ranges for the band-limited sum-of-sines forward velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumOfSinesSpec {
    pub components: usize,
    /// Component frequency (Hz).
    pub freq: (f64, f64),
    /// Component amplitude (m/s).
    pub amplitude: (f64, f64),
    /// Component phase (rad).
    pub phase: (f64, f64),
    /// Constant offset (m/s).
    pub offset: (f64, f64),
}

impl Default for SumOfSinesSpec {
    fn default() -> Self {
        use std::f64::consts::FRAC_PI_2;
        Self {
            components: 3,
            freq: (0.1, 0.9),
            amplitude: (-15.0, 15.0),
            phase: (-FRAC_PI_2, FRAC_PI_2),
            offset: (-10.0, 10.0),
        }
    }
}

/// Forward-velocity series v_x(t) = offset + Σ A_j sin(2π f_j t + φ_j).
pub fn sum_of_sines_velocity(
    spec: &SumOfSinesSpec,
    seed: u64,
    length: usize,
    dt: f64,
) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let offset = sample(&mut rng, spec.offset);
    let comps: Vec<(f64, f64, f64)> = (0..spec.components)
        .map(|_| {
            (
                sample(&mut rng, spec.freq),
                sample(&mut rng, spec.amplitude),
                sample(&mut rng, spec.phase),
            )
        })
        .collect();
    (0..length)
        .map(|k| {
            let t = k as f64 * dt;
            offset
                + comps
                    .iter()
                    .map(|(f, a, p)| a * (std::f64::consts::TAU * f * t + p).sin())
                    .sum::<f64>()
        })
        .collect()
}
