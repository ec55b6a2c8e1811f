//! Receding-horizon input reconstruction.
//!
//! Finds the control inputs that drive a model along a desired state
//! trajectory with full state feedback. At each step a Gauss–Newton solver
//! minimizes the horizon sum of weighted squared setpoint errors plus
//! weighted squared inputs, with input sensitivities from finite
//! differences; only the first input of each solve is applied. Inputs not
//! listed as controlled (e.g. the ambient-wind inputs) are taken verbatim
//! from the baseline series.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{label_index, SystemModel};
use crate::error::{Error, Result};

/// Tracking-solver configuration.
#[derive(Debug, Clone)]
pub struct MpcConfig {
    /// Horizon length in steps, ≥ 1.
    pub horizon: usize,
    /// Tracked state names with their setpoint weights (≥ 0, at least one
    /// positive). Setpoint columns align with this list.
    pub tracked: Vec<(String, f64)>,
    /// Controlled input names with their quadratic penalties. Inputs not
    /// listed here are exogenous.
    pub input_penalty: Vec<(String, f64)>,
    /// Gauss–Newton iteration cap per receding-horizon step.
    pub max_iters: usize,
    /// Relative cost-decrease threshold that counts as converged.
    pub tol: f64,
}

impl MpcConfig {
    /// Defaults for the kinematic flying agent: track (v_x, v_y, v_z, ψ)
    /// with unit weights, penalize the four flight inputs at 1e-2.
    pub fn kinematic_default() -> Self {
        Self {
            horizon: 10,
            tracked: ["vx", "vy", "vz", "psi"]
                .iter()
                .map(|n| (n.to_string(), 1.0))
                .collect(),
            input_penalty: ["u_z", "u_phi", "u_theta", "u_psi"]
                .iter()
                .map(|n| (n.to_string(), 1e-2))
                .collect(),
            max_iters: 50,
            tol: 1e-9,
        }
    }

    fn validate(&self, model: &dyn SystemModel) -> Result<(Vec<usize>, Vec<usize>)> {
        if self.horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".to_string()));
        }
        if self.tracked.is_empty() || !self.tracked.iter().any(|(_, w)| *w > 0.0) {
            return Err(Error::InvalidArgument(
                "at least one tracked variable needs a positive weight".to_string(),
            ));
        }
        if self.tracked.iter().any(|(_, w)| *w < 0.0)
            || self.input_penalty.iter().any(|(_, w)| *w < 0.0)
        {
            return Err(Error::InvalidArgument(
                "weights must be nonnegative".to_string(),
            ));
        }
        let tracked_idx = self
            .tracked
            .iter()
            .map(|(name, _)| {
                label_index(model.state_labels(), name).ok_or_else(|| {
                    Error::InvalidArgument(format!("tracked variable `{name}` is not a state"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let controlled_idx = self
            .input_penalty
            .iter()
            .map(|(name, _)| {
                label_index(model.input_labels(), name).ok_or_else(|| {
                    Error::InvalidArgument(format!("controlled input `{name}` is not an input"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((tracked_idx, controlled_idx))
    }
}

/// Result of a tracking solve.
#[derive(Debug, Clone)]
pub struct MpcSolution {
    /// Full K×m input series (controlled columns solved, exogenous copied).
    pub inputs: DMatrix<f64>,
    /// Closed-loop states under those inputs, K×n. Row k resimulated from
    /// row 0 reproduces the series exactly.
    pub states: DMatrix<f64>,
    /// RMS tracking error per tracked variable over the whole trajectory.
    pub rms_tracking_error: Vec<f64>,
}

struct HorizonProblem<'a> {
    model: &'a dyn SystemModel,
    cfg: &'a MpcConfig,
    tracked_idx: &'a [usize],
    controlled_idx: &'a [usize],
    setpoints: &'a DMatrix<f64>,
    baseline: &'a DMatrix<f64>,
    dt: f64,
    /// Current trajectory step.
    k: usize,
    /// Horizon length for this solve.
    h: usize,
    x: DVector<f64>,
}

impl HorizonProblem<'_> {
    /// Residual vector for a candidate controlled-input block (h×nc).
    fn residuals(&self, u_block: &DMatrix<f64>) -> Result<DVector<f64>> {
        let nt = self.tracked_idx.len();
        let nc = self.controlled_idx.len();
        let mut res = DVector::zeros(self.h * (nt + nc));
        let mut x = self.x.clone();
        for j in 0..self.h {
            let mut u = self.baseline.row(self.k + j).transpose();
            for (c, &idx) in self.controlled_idx.iter().enumerate() {
                u[idx] = u_block[(j, c)];
            }
            x = self.model.step(&x, &u, self.dt);
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "horizon rollout diverged at trajectory step {} (+{j})",
                    self.k
                )));
            }
            for (t, &idx) in self.tracked_idx.iter().enumerate() {
                let w = self.cfg.tracked[t].1.sqrt();
                res[j * nt + t] = w * (x[idx] - self.setpoints[(self.k + 1 + j, t)]);
            }
        }
        let offset = self.h * nt;
        for j in 0..self.h {
            for (c, _) in self.controlled_idx.iter().enumerate() {
                let r = self.cfg.input_penalty[c].1.sqrt();
                res[offset + j * nc + c] = r * u_block[(j, c)];
            }
        }
        Ok(res)
    }

    fn cost(&self, u_block: &DMatrix<f64>) -> Result<f64> {
        Ok(self.residuals(u_block)?.norm_squared())
    }

    /// Gauss–Newton with forward-difference input sensitivities and a
    /// backtracking line search.
    fn solve(&self, warm_start: DMatrix<f64>) -> Result<DMatrix<f64>> {
        let nc = self.controlled_idx.len();
        let n_vars = self.h * nc;
        let mut u = warm_start;
        let mut cost = self.cost(&u)?;
        for _iter in 0..self.cfg.max_iters {
            let base = self.residuals(&u)?;
            let mut jac = DMatrix::zeros(base.len(), n_vars);
            for v in 0..n_vars {
                let (j, c) = (v / nc, v % nc);
                let delta = 1e-6 * u[(j, c)].abs().max(1.0);
                let mut u_pert = u.clone();
                u_pert[(j, c)] += delta;
                let pert = self.residuals(&u_pert)?;
                jac.set_column(v, &((pert - &base) / delta));
            }
            let jt = jac.transpose();
            let mut normal = &jt * &jac;
            for i in 0..n_vars {
                normal[(i, i)] += 1e-10;
            }
            let gradient = &jt * &base;
            let step = normal
                .lu()
                .solve(&(-&gradient))
                .ok_or(Error::Factorization {
                    context: "tracking normal equations".to_string(),
                })?;

            let mut improved = false;
            let mut alpha = 1.0;
            for _ in 0..25 {
                let mut candidate = u.clone();
                for v in 0..n_vars {
                    candidate[(v / nc, v % nc)] += alpha * step[v];
                }
                let c = self.cost(&candidate)?;
                if c < cost {
                    let decrease = cost - c;
                    u = candidate;
                    cost = c;
                    improved = true;
                    if decrease <= self.cfg.tol * cost.max(1e-12) {
                        return Ok(u);
                    }
                    break;
                }
                alpha *= 0.5;
            }
            if !improved {
                // no descent direction left: converged to numerical accuracy
                return Ok(u);
            }
        }
        Err(Error::MpcNoConvergence {
            step: self.k,
            iters: self.cfg.max_iters,
            best_cost: cost,
        })
    }
}

/// Reconstruct the inputs that track `setpoints` (columns aligned with
/// `cfg.tracked`) from `x0`, and simulate the closed-loop nominal
/// trajectory under them.
pub fn solve_tracking(
    model: &dyn SystemModel,
    cfg: &MpcConfig,
    setpoints: &DMatrix<f64>,
    baseline_inputs: &DMatrix<f64>,
    x0: &DVector<f64>,
    dt: f64,
) -> Result<MpcSolution> {
    let (tracked_idx, controlled_idx) = cfg.validate(model)?;
    let k_total = setpoints.nrows();
    if setpoints.ncols() != cfg.tracked.len() {
        return Err(Error::DimensionMismatch {
            context: "setpoint columns vs tracked variables".to_string(),
            expected: cfg.tracked.len(),
            got: setpoints.ncols(),
        });
    }
    if setpoints.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "setpoints contain non-finite values".to_string(),
        ));
    }
    if baseline_inputs.nrows() < k_total
        || baseline_inputs.ncols() != model.input_labels().len()
    {
        return Err(Error::DimensionMismatch {
            context: "baseline input series".to_string(),
            expected: k_total,
            got: baseline_inputs.nrows(),
        });
    }
    if k_total < 2 {
        return Err(Error::InvalidArgument(
            "tracking needs at least two setpoint samples".to_string(),
        ));
    }
    crate::dynamics::step(model, x0, &baseline_inputs.row(0).transpose(), dt)?;

    let n = model.state_labels().len();
    let m = model.input_labels().len();
    let nc = controlled_idx.len();
    let mut states = DMatrix::zeros(k_total, n);
    let mut inputs = DMatrix::zeros(k_total, m);
    let mut x = x0.clone();

    // warm-start block carried between receding-horizon solves
    let mut warm = DMatrix::zeros(cfg.horizon, nc);
    for (c, &idx) in controlled_idx.iter().enumerate() {
        for j in 0..cfg.horizon {
            warm[(j, c)] = baseline_inputs[(0, idx)];
        }
    }

    for k in 0..k_total - 1 {
        let h = cfg.horizon.min(k_total - 1 - k);
        let problem = HorizonProblem {
            model,
            cfg,
            tracked_idx: &tracked_idx,
            controlled_idx: &controlled_idx,
            setpoints,
            baseline: baseline_inputs,
            dt,
            k,
            h,
            x: x.clone(),
        };
        let warm_block = warm.rows(0, h).into_owned();
        let solution = problem.solve(warm_block)?;

        // apply the first input of the horizon solve
        states.row_mut(k).copy_from(&x.transpose());
        let mut u = baseline_inputs.row(k).transpose();
        for (c, &idx) in controlled_idx.iter().enumerate() {
            u[idx] = solution[(0, c)];
        }
        inputs.row_mut(k).copy_from(&u.transpose());
        x = model.step(&x, &u, dt);

        // shift the solution one step for the next warm start
        for j in 0..cfg.horizon {
            let src = (j + 1).min(solution.nrows() - 1);
            for c in 0..nc {
                warm[(j, c)] = solution[(src, c)];
            }
        }
    }
    states.row_mut(k_total - 1).copy_from(&x.transpose());
    let last = inputs.row(k_total - 2).into_owned();
    inputs.row_mut(k_total - 1).copy_from(&last);

    let mut rms = vec![0.0; tracked_idx.len()];
    for (t, &idx) in tracked_idx.iter().enumerate() {
        let mut acc = 0.0;
        for k in 0..k_total {
            let e = states[(k, idx)] - setpoints[(k, t)];
            acc += e * e;
        }
        rms[t] = (acc / k_total as f64).sqrt();
    }

    Ok(MpcSolution {
        inputs,
        states,
        rms_tracking_error: rms,
    })
}
