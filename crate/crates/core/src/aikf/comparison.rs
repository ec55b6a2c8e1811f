//! Paired filter comparison on the planar altitude scenario: straight
//! flight with a brief deceleration and later re-acceleration, zero-mean
//! measurement noise everywhere and a biased segment on the vertical
//! acceleration between the two events.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::{aikf_step, ukf_step, AugmentationSpec, FilterState, UnscentedParams};
use crate::dynamics::{Planar2D, SystemModel};
use crate::error::Result;
use crate::estimators::{EstimatorNet, WindowBuffer};

/// Scenario definition and sweep axes.
#[derive(Debug, Clone)]
pub struct ComparisonScenario {
    pub dt: f64,
    /// Total duration (s).
    pub duration: f64,
    pub true_altitude: f64,
    pub initial_speed: f64,
    /// Magnitude of the deceleration and re-acceleration events (m/s²).
    pub event_magnitude: f64,
    /// Event windows (start, duration) in seconds.
    pub decel: (f64, f64),
    pub accel: (f64, f64),
    /// Variance of the zero-mean Gaussian noise on every measured signal.
    pub meas_noise_var: f64,
    /// Baseline optic-flow variance the filters assume.
    pub flow_noise_var: f64,
    /// Bias added to the vertical-acceleration signal inside `bias_window`.
    pub bias: f64,
    pub bias_window: (f64, f64),
    pub z0_sweep: Vec<f64>,
    pub p0_scale_sweep: Vec<f64>,
    pub q_scale_sweep: Vec<f64>,
    /// Baseline initial covariance diagonal (z, vz, vx).
    pub p0_baseline: [f64; 3],
    /// Baseline process-noise level (scaled identity).
    pub q_baseline: f64,
    pub seed: u64,
}

impl Default for ComparisonScenario {
    fn default() -> Self {
        Self {
            dt: 0.1,
            duration: 18.0,
            true_altitude: 10.0,
            initial_speed: 5.0,
            event_magnitude: 1.0,
            decel: (4.0, 3.0),
            accel: (11.0, 3.0),
            meas_noise_var: 1e-2,
            flow_noise_var: 1e-3,
            bias: 0.3,
            bias_window: (7.0, 11.0),
            z0_sweep: vec![2.0, 5.0, 10.0, 20.0, 40.0],
            p0_scale_sweep: vec![1.0],
            q_scale_sweep: vec![1.0],
            p0_baseline: [100.0, 1.0, 1.0],
            q_baseline: 1e-4,
            seed: 0,
        }
    }
}

impl ComparisonScenario {
    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize + 1
    }

    /// True forward acceleration at time t.
    pub fn acceleration_at(&self, t: f64) -> f64 {
        if t >= self.decel.0 && t < self.decel.0 + self.decel.1 {
            -self.event_magnitude
        } else if t >= self.accel.0 && t < self.accel.0 + self.accel.1 {
            self.event_magnitude
        } else {
            0.0
        }
    }

    /// End of the first high-observability event.
    pub fn first_event_end(&self) -> f64 {
        self.decel.0 + self.decel.1
    }
}

/// One noisy realization of the scenario.
pub struct ScenarioRun {
    pub times: Vec<f64>,
    /// K×3 true states (z, vz, vx).
    pub truth: DMatrix<f64>,
    /// K×2 measured (noisy, possibly biased) acceleration inputs.
    pub inputs_measured: DMatrix<f64>,
    /// K noisy forward optic-flow measurements.
    pub flow_measured: DVector<f64>,
}

/// Simulate truth and draw one noise realization.
pub fn simulate_scenario_run(scenario: &ComparisonScenario, seed: u64) -> ScenarioRun {
    let model = Planar2D::with_forward_flow();
    let k_total = scenario.steps();
    let dt = scenario.dt;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, scenario.meas_noise_var.sqrt()).unwrap();

    let mut truth = DMatrix::zeros(k_total, 3);
    let mut inputs_measured = DMatrix::zeros(k_total, 2);
    let mut flow = DVector::zeros(k_total);
    let mut x = DVector::from_vec(vec![scenario.true_altitude, 0.0, scenario.initial_speed]);
    let mut times = Vec::with_capacity(k_total);
    for k in 0..k_total {
        let t = k as f64 * dt;
        times.push(t);
        truth.row_mut(k).copy_from(&x.transpose());
        let u_true = DVector::from_vec(vec![0.0, scenario.acceleration_at(t)]);
        flow[k] = x[2] / x[0] + noise.sample(&mut rng);
        let in_bias = t >= scenario.bias_window.0 && t < scenario.bias_window.1;
        inputs_measured[(k, 0)] =
            u_true[0] + noise.sample(&mut rng) + if in_bias { scenario.bias } else { 0.0 };
        inputs_measured[(k, 1)] = u_true[1] + noise.sample(&mut rng);
        if k + 1 < k_total {
            x = model.step(&x, &u_true, dt);
        }
    }
    ScenarioRun {
        times,
        truth,
        inputs_measured,
        flow_measured: flow,
    }
}

/// Estimate time series from one filter run; estimates after a filter
/// failure are NaN.
pub struct FilterTrace {
    pub z: Vec<f64>,
    pub vx: Vec<f64>,
    pub failure: Option<String>,
}

/// Run one filter over a realization. `augment` carries the estimator and
/// spec for the augmented variant; `None` runs the plain filter.
pub fn run_filter(
    scenario: &ComparisonScenario,
    run: &ScenarioRun,
    z0: f64,
    p0_scale: f64,
    q_scale: f64,
    augment: Option<(&EstimatorNet, &AugmentationSpec)>,
) -> FilterTrace {
    let model = Planar2D::with_forward_flow();
    let k_total = run.times.len();
    let dt = scenario.dt;

    let p0 = DMatrix::from_diagonal(&DVector::from_vec(
        scenario.p0_baseline.iter().map(|v| v * p0_scale).collect(),
    ));
    let q = DMatrix::identity(3, 3) * (scenario.q_baseline * q_scale);
    let r = DMatrix::from_element(1, 1, scenario.flow_noise_var);
    let mean0 = DVector::from_vec(vec![z0, 0.0, scenario.initial_speed]);
    let mut fs = match FilterState::new(mean0, p0, q, r, UnscentedParams::default()) {
        Ok(fs) => fs,
        Err(e) => {
            return FilterTrace {
                z: vec![f64::NAN; k_total],
                vx: vec![f64::NAN; k_total],
                failure: Some(e.to_string()),
            }
        }
    };

    let mut buffer = augment.map(|(net, _)| WindowBuffer::new(net.window, 2));
    let mut z_series = vec![f64::NAN; k_total];
    let mut vx_series = vec![f64::NAN; k_total];
    z_series[0] = fs.mean[0];
    vx_series[0] = fs.mean[2];
    let mut failure = None;

    for k in 1..k_total {
        let u = run.inputs_measured.row(k - 1).transpose();
        let y = DVector::from_vec(vec![run.flow_measured[k]]);
        let result = match augment {
            Some((net, spec)) => {
                if let Some(buf) = buffer.as_mut() {
                    buf.push(&[run.flow_measured[k], run.inputs_measured[(k, 1)]]);
                    aikf_step(&fs, &model, &u, &y, dt, buf, net, spec)
                } else {
                    unreachable!()
                }
            }
            None => ukf_step(&fs, &model, &u, &y, dt),
        };
        match result {
            Ok(next) => {
                fs = next;
                z_series[k] = fs.mean[0];
                vx_series[k] = fs.mean[2];
            }
            Err(e) => {
                failure = Some(format!("step {k}: {e}"));
                break;
            }
        }
    }
    FilterTrace {
        z: z_series,
        vx: vx_series,
        failure,
    }
}

/// One line of the comparison table.
#[derive(Debug, Clone)]
pub struct ComparisonRow {
    pub run_id: usize,
    pub filter: String,
    pub z0: f64,
    pub p0_scale: f64,
    pub q_scale: f64,
    pub median_err_z: f64,
    pub median_err_vx: f64,
    pub converged: bool,
}

fn median(values: &mut Vec<f64>) -> f64 {
    if values.is_empty() {
        return f64::INFINITY;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

fn trace_metrics(
    scenario: &ComparisonScenario,
    run: &ScenarioRun,
    trace: &FilterTrace,
) -> (f64, f64, bool) {
    if trace.failure.is_some() {
        return (f64::INFINITY, f64::INFINITY, false);
    }
    let event_end = scenario.first_event_end();
    let mut err_z = Vec::new();
    let mut err_vx = Vec::new();
    let mut tail_rel = Vec::new();
    let tail_start = scenario.duration - 2.0;
    for (k, &t) in run.times.iter().enumerate() {
        let ez = (trace.z[k] - run.truth[(k, 0)]).abs();
        let evx = (trace.vx[k] - run.truth[(k, 2)]).abs();
        if t > event_end {
            err_z.push(ez);
            err_vx.push(evx);
        }
        if t >= tail_start {
            tail_rel.push(ez / run.truth[(k, 0)].abs().max(1e-12));
        }
    }
    let med_z = median(&mut err_z);
    let med_vx = median(&mut err_vx);
    let mut tail = tail_rel;
    let converged = !tail.is_empty() && median(&mut tail) <= 0.1;
    (med_z, med_vx, converged)
}

/// Run both filters over the full (z₀ × P₀-scale × Q-scale) grid with
/// paired noise per cell and deterministic per-cell seeds. Failed runs are
/// recorded with infinite error rather than aborting the sweep.
pub fn run_comparison(
    scenario: &ComparisonScenario,
    net: &EstimatorNet,
    spec: &AugmentationSpec,
) -> Result<Vec<ComparisonRow>> {
    let mut cells = Vec::new();
    for &z0 in &scenario.z0_sweep {
        for &p0 in &scenario.p0_scale_sweep {
            for &q in &scenario.q_scale_sweep {
                cells.push((z0, p0, q));
            }
        }
    }

    let rows: Vec<Vec<ComparisonRow>> = cells
        .par_iter()
        .enumerate()
        .map(|(cell_idx, &(z0, p0_scale, q_scale))| {
            let run = simulate_scenario_run(scenario, scenario.seed + cell_idx as u64);
            let ukf_trace = run_filter(scenario, &run, z0, p0_scale, q_scale, None);
            let aikf_trace =
                run_filter(scenario, &run, z0, p0_scale, q_scale, Some((net, spec)));
            let (ukf_z, ukf_vx, ukf_conv) = trace_metrics(scenario, &run, &ukf_trace);
            let (aikf_z, aikf_vx, aikf_conv) = trace_metrics(scenario, &run, &aikf_trace);
            vec![
                ComparisonRow {
                    run_id: cell_idx,
                    filter: "ukf".to_string(),
                    z0,
                    p0_scale,
                    q_scale,
                    median_err_z: ukf_z,
                    median_err_vx: ukf_vx,
                    converged: ukf_conv,
                },
                ComparisonRow {
                    run_id: cell_idx,
                    filter: "aikf".to_string(),
                    z0,
                    p0_scale,
                    q_scale,
                    median_err_z: aikf_z,
                    median_err_vx: aikf_vx,
                    converged: aikf_conv,
                },
            ]
        })
        .collect();

    Ok(rows.into_iter().flatten().collect())
}
