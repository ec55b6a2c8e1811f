use approx::{assert_abs_diff_eq, assert_relative_eq};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::*;
use crate::dynamics::{
    DiscreteLti, KinematicAgent, KinematicAgentState, Label, Planar2D, Planar2DState, SystemModel,
    VarKind,
};
use crate::trajectory::{Provenance, Trajectory};

fn no_inputs(window: usize) -> DMatrix<f64> {
    DMatrix::zeros(window, 0)
}

#[test]
fn scalar_decay_system_matches_analytic_column() {
    let a = DMatrix::from_row_slice(1, 1, &[0.9]);
    let c = DMatrix::from_row_slice(1, 1, &[1.0]);
    let lti = DiscreteLti::autonomous(a, c).unwrap();
    let x0 = DVector::from_vec(vec![2.0]);
    let o = empirical_observability(
        &lti,
        &x0,
        &no_inputs(3),
        1.0,
        3,
        &EmpiricalConfig::default(),
    )
    .unwrap();
    assert_eq!(o.values.shape(), (3, 1));
    assert_abs_diff_eq!(o.values[(0, 0)], 1.0, epsilon = 1e-9);
    assert_abs_diff_eq!(o.values[(1, 0)], 0.9, epsilon = 1e-9);
    assert_abs_diff_eq!(o.values[(2, 0)], 0.81, epsilon = 1e-9);
}

#[test]
fn one_step_identity_measurement_gives_identity_matrix() {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let a = DMatrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0));
    let c = DMatrix::identity(4, 4);
    let lti = DiscreteLti::autonomous(a, c).unwrap();
    let x0 = DVector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
    let o = empirical_observability(
        &lti,
        &x0,
        &no_inputs(1),
        1.0,
        1,
        &EmpiricalConfig::default(),
    )
    .unwrap();
    assert_relative_eq!(o.values, DMatrix::identity(4, 4), epsilon = 1e-9);
}

#[test]
fn planar_forward_flow_row_matches_partial_derivatives() {
    let model = Planar2D::with_forward_flow();
    let state = Planar2DState::new(4.0, 0.0, 2.0);
    let x0 = state.to_vector();
    let inputs = DMatrix::zeros(1, 2);
    let o = empirical_observability(&model, &x0, &inputs, 0.1, 1, &EmpiricalConfig::default())
        .unwrap();
    // r_x = vx / z: d/dz = -vx/z², d/dvz = 0, d/dvx = 1/z
    let expect = [-2.0 / 16.0, 0.0, 1.0 / 4.0];
    for (i, e) in expect.iter().enumerate() {
        if *e == 0.0 {
            assert_abs_diff_eq!(o.values[(0, i)], 0.0, epsilon = 1e-9);
        } else {
            assert_relative_eq!(o.values[(0, i)], *e, epsilon = 1e-6);
        }
    }
}

#[test]
fn magnitude_state_near_zero_requires_one_sided_fallback() {
    let model = KinematicAgent::with_angular_sensors();
    let mut s = KinematicAgentState::hover(10.0);
    s.vx = 1.0;
    s.w = 0.5e-5; // closer to zero than epsilon
    s.zeta = 1.0;
    let x0 = s.to_vector();
    let inputs = DMatrix::from_fn(5, 6, |_, j| if j == 0 { 9.81 } else { 0.0 });

    let err = empirical_observability(&model, &x0, &inputs, 0.1, 5, &EmpiricalConfig::default())
        .unwrap_err();
    match err {
        crate::Error::MagnitudePerturbation { label, .. } => assert_eq!(label, "w"),
        other => panic!("unexpected error {other:?}"),
    }

    let cfg = EmpiricalConfig {
        allow_one_sided: true,
        ..Default::default()
    };
    let o = empirical_observability(&model, &x0, &inputs, 0.1, 5, &cfg).unwrap();
    assert!(o.values.iter().all(|v| v.is_finite()));
}

#[test]
fn fisher_with_identity_noise_is_gram_matrix() {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let o = ObservabilityMatrix {
        values: DMatrix::from_fn(6, 3, |_, _| rng.random_range(-1.0..1.0)),
        epsilon: 1e-5,
        window: 2,
        window_start: 0,
        measurement_labels: (0..3)
            .map(|j| Label::new(&format!("y{j}"), "-", VarKind::Linear))
            .collect(),
        state_labels: (0..3)
            .map(|i| Label::new(&format!("x{i}"), "-", VarKind::Linear))
            .collect(),
    };
    let f = fisher(&o, &NoiseSpec::Uniform(1.0)).unwrap();
    assert_relative_eq!(f.matrix, o.values.transpose() * &o.values, epsilon = 1e-12);

    // scaling the noise by c scales the information by 1/c
    let f10 = fisher(&o, &NoiseSpec::Uniform(10.0)).unwrap();
    assert_relative_eq!(f10.matrix, &f.matrix / 10.0, epsilon = 1e-12);
}

#[test]
fn fisher_matches_blockwise_summation_oracle() {
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let (p, window, n) = (3, 2, 3);
    let values = DMatrix::from_fn(p * window, n, |_, _| rng.random_range(-2.0..2.0));
    let vars: Vec<f64> = (0..p).map(|_| rng.random_range(0.05..1.5)).collect();
    let o = ObservabilityMatrix {
        values: values.clone(),
        epsilon: 1e-5,
        window,
        window_start: 0,
        measurement_labels: (0..p)
            .map(|j| Label::new(&format!("y{j}"), "-", VarKind::Linear))
            .collect(),
        state_labels: (0..n)
            .map(|i| Label::new(&format!("x{i}"), "-", VarKind::Linear))
            .collect(),
    };

    // independent oracle: accumulate Σ_k H_kᵀ R_k⁻¹ H_k with explicit loops
    let mut oracle = DMatrix::zeros(n, n);
    for k in 0..window {
        let h = values.rows(k * p, p);
        let mut r_inv_h = DMatrix::zeros(p, n);
        for j in 0..p {
            for i in 0..n {
                r_inv_h[(j, i)] = h[(j, i)] / vars[j];
            }
        }
        oracle += h.transpose() * r_inv_h;
    }

    let f = fisher(&o, &NoiseSpec::PerChannel(vars.clone())).unwrap();
    assert_relative_eq!(f.matrix, oracle, epsilon = 1e-10);

    // the full block form agrees with the diagonal special case
    let block = DMatrix::from_diagonal(&DVector::from_vec(vars));
    let f_block = fisher(&o, &NoiseSpec::Block(block)).unwrap();
    assert_relative_eq!(f_block.matrix, oracle, epsilon = 1e-10);
}

#[test]
fn fisher_rejects_singular_noise() {
    let o = ObservabilityMatrix {
        values: DMatrix::identity(2, 2),
        epsilon: 1e-5,
        window: 1,
        window_start: 0,
        measurement_labels: vec![
            Label::new("y0", "-", VarKind::Linear),
            Label::new("y1", "-", VarKind::Linear),
        ],
        state_labels: vec![
            Label::new("x0", "-", VarKind::Linear),
            Label::new("x1", "-", VarKind::Linear),
        ],
    };
    assert!(fisher(&o, &NoiseSpec::Uniform(0.0)).is_err());
    let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
    assert!(fisher(&o, &NoiseSpec::Block(singular)).is_err());
}

fn fisher_from_matrix(m: DMatrix<f64>) -> FisherInfo {
    let n = m.nrows();
    FisherInfo {
        matrix: m,
        state_labels: (0..n)
            .map(|i| Label::new(&format!("x{i}"), "-", VarKind::Linear))
            .collect(),
    }
}

#[test]
fn chernoff_caps_unobservable_scalar_at_inverse_lambda() {
    let f = fisher_from_matrix(DMatrix::zeros(1, 1));
    let inv = chernoff_inverse(&f, 1e-6).unwrap();
    assert_relative_eq!(inv.min_error_variance.values[0], 1e6, epsilon = 1e-3);
    assert!(inv.min_error_variance.saturated[0]);
}

#[test]
fn chernoff_diagonal_case_and_pseudoinverse_contrast() {
    let f = fisher_from_matrix(DMatrix::from_partial_diagonal(2, 2, &[2.0, 0.0]));
    let inv = chernoff_inverse(&f, 1e-6).unwrap();
    assert_relative_eq!(inv.min_error_variance.values[0], 0.5, max_relative = 1e-6);
    assert_relative_eq!(inv.min_error_variance.values[1], 1e6, max_relative = 1e-6);
    assert!(!inv.min_error_variance.saturated[0]);
    assert!(inv.min_error_variance.saturated[1]);

    // the Moore–Penrose pseudoinverse reports 0 for the unobservable state,
    // which reads as perfectly observable
    let pinv = f.matrix.clone().pseudo_inverse(1e-12).unwrap();
    assert_relative_eq!(pinv[(0, 0)], 0.5, max_relative = 1e-9);
    assert_abs_diff_eq!(pinv[(1, 1)], 0.0, epsilon = 1e-12);
}

#[test]
fn chernoff_observable_subspace_matches_small_lambda_limit() {
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    let m = DMatrix::from_fn(2, 2, |_, _| rng.random_range(-1.0..1.0));
    let g = m.transpose() * m; // PSD rank 2
    let mut f = DMatrix::zeros(4, 4);
    f.view_mut((0, 0), (2, 2)).copy_from(&g);
    let f = fisher_from_matrix(f);

    let at_lambda = chernoff_inverse(&f, 1e-6).unwrap();
    let near_limit = chernoff_inverse(&f, 1e-10).unwrap();
    for i in 0..2 {
        assert_relative_eq!(
            at_lambda.min_error_variance.values[i],
            near_limit.min_error_variance.values[i],
            max_relative = 1e-3
        );
    }
    for i in 2..4 {
        assert_relative_eq!(
            at_lambda.min_error_variance.values[i],
            1e6,
            max_relative = 1e-6
        );
        assert!(at_lambda.min_error_variance.saturated[i]);
    }
}

#[test]
fn transform_identity_and_scaling() {
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    let labels: Vec<Label> = (0..3)
        .map(|i| Label::new(&format!("x{i}"), "-", VarKind::Linear))
        .collect();
    let o = ObservabilityMatrix {
        values: DMatrix::from_fn(6, 3, |_, _| rng.random_range(-1.0..1.0)),
        epsilon: 1e-5,
        window: 2,
        window_start: 0,
        measurement_labels: (0..3)
            .map(|j| Label::new(&format!("y{j}"), "-", VarKind::Linear))
            .collect(),
        state_labels: labels.clone(),
    };
    let x0 = DVector::from_vec(vec![0.3, -0.2, 1.1]);

    let identity = CoordinateTransform::identity(labels.clone());
    let o_id = transform_observability(&o, &identity, &x0).unwrap();
    assert_relative_eq!(o_id.values, o.values, epsilon = 1e-12);

    let double = CoordinateTransform::scaling(&labels, vec![2.0, 2.0, 2.0]);
    let o_2x = transform_observability(&o, &double, &x0).unwrap();
    assert_relative_eq!(o_2x.values, &o.values / 2.0, epsilon = 1e-12);
}

#[test]
fn scaling_transform_scales_fisher_by_inverse_square() {
    let mut rng = ChaCha20Rng::seed_from_u64(10);
    let labels: Vec<Label> = (0..2)
        .map(|i| Label::new(&format!("x{i}"), "m", VarKind::Linear))
        .collect();
    let o = ObservabilityMatrix {
        values: DMatrix::from_fn(4, 2, |_, _| rng.random_range(-1.0..1.0)),
        epsilon: 1e-5,
        window: 2,
        window_start: 0,
        measurement_labels: (0..2)
            .map(|j| Label::new(&format!("y{j}"), "-", VarKind::Linear))
            .collect(),
        state_labels: labels.clone(),
    };
    let c = 3.0;
    let x0 = DVector::from_vec(vec![1.0, -2.0]);
    let scale = CoordinateTransform::scaling(&labels, vec![c, c]);
    let o_z = transform_observability(&o, &scale, &x0).unwrap();
    let f_x = fisher(&o, &NoiseSpec::Uniform(0.1)).unwrap();
    let f_z = fisher(&o_z, &NoiseSpec::Uniform(0.1)).unwrap();
    // z = c·x carries units scaled by c, so information scales by 1/c²
    assert_relative_eq!(f_z.matrix, &f_x.matrix / (c * c), epsilon = 1e-12);

    // with the regularization co-scaled, the variance scales by c² exactly
    let inv_x = chernoff_inverse(&f_x, 1e-6).unwrap();
    let inv_z = chernoff_inverse(&f_z, 1e-6 / (c * c)).unwrap();
    for i in 0..2 {
        assert_relative_eq!(
            inv_z.min_error_variance.values[i],
            c * c * inv_x.min_error_variance.values[i],
            max_relative = 1e-10
        );
    }
}

/// The kinematic model re-expressed in polar velocity coordinates, used as
/// the direct re-parameterized simulation oracle for the transform.
struct PolarKinematic {
    inner: KinematicAgent,
    labels: Vec<Label>,
}

impl PolarKinematic {
    fn new() -> Self {
        let inner = KinematicAgent::with_angular_sensors();
        let mut labels = inner.state_labels().to_vec();
        labels[3] = Label::new("g", "m/s", VarKind::Magnitude);
        labels[4] = Label::new("beta", "rad", VarKind::Angle);
        Self { inner, labels }
    }

    fn to_cartesian(z: &DVector<f64>) -> DVector<f64> {
        let mut x = z.clone();
        x[3] = z[3] * z[4].cos();
        x[4] = z[3] * z[4].sin();
        x
    }

    fn to_polar(x: &DVector<f64>) -> DVector<f64> {
        let mut z = x.clone();
        z[3] = x[3].hypot(x[4]);
        z[4] = x[4].atan2(x[3]);
        z
    }
}

impl SystemModel for PolarKinematic {
    fn state_labels(&self) -> &[Label] {
        &self.labels
    }
    fn input_labels(&self) -> &[Label] {
        self.inner.input_labels()
    }
    fn measurement_labels(&self) -> &[Label] {
        self.inner.measurement_labels()
    }
    fn step(&self, z: &DVector<f64>, u: &DVector<f64>, dt: f64) -> DVector<f64> {
        Self::to_polar(&self.inner.step(&Self::to_cartesian(z), u, dt))
    }
    fn measure(&self, z: &DVector<f64>, u: &DVector<f64>) -> crate::Result<DVector<f64>> {
        self.inner.measure(&Self::to_cartesian(z), u)
    }
}

#[test]
fn polar_transform_matches_reparameterized_model() {
    let model = KinematicAgent::with_angular_sensors();
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    for _ in 0..3 {
        let mut s = KinematicAgentState::hover(10.0);
        s.vx = rng.random_range(0.8..2.0);
        s.vy = rng.random_range(-0.3..0.3);
        s.psi = rng.random_range(-0.5..0.5);
        s.w = rng.random_range(0.3..1.0);
        s.zeta = rng.random_range(-1.0..1.0);
        let x0 = s.to_vector();
        let mut inputs = DMatrix::zeros(5, 6);
        for k in 0..5 {
            inputs[(k, 0)] = 9.81;
            inputs[(k, 3)] = 0.3; // turn so the window has signal
        }

        let o_x =
            empirical_observability(&model, &x0, &inputs, 0.1, 5, &EmpiricalConfig::default())
                .unwrap();
        let transform = CoordinateTransform::polar_ground_speed(model.state_labels()).unwrap();
        let o_z = transform_observability(&o_x, &transform, &x0).unwrap();

        let polar = PolarKinematic::new();
        let z0 = PolarKinematic::to_polar(&x0);
        let o_direct =
            empirical_observability(&polar, &z0, &inputs, 0.1, 5, &EmpiricalConfig::default())
                .unwrap();

        let diff = (&o_z.values - &o_direct.values).norm();
        let scale = o_direct.values.norm();
        assert!(
            diff / scale < 1e-5,
            "relative deviation {} too large",
            diff / scale
        );
    }
}

#[test]
fn polar_transform_is_singular_at_zero_velocity() {
    let model = KinematicAgent::with_angular_sensors();
    let transform = CoordinateTransform::polar_ground_speed(model.state_labels()).unwrap();
    let o = ObservabilityMatrix {
        values: DMatrix::zeros(3, 15),
        epsilon: 1e-5,
        window: 1,
        window_start: 0,
        measurement_labels: model.measurement_labels().to_vec(),
        state_labels: model.state_labels().to_vec(),
    };
    let x0 = KinematicAgentState::hover(10.0).to_vector(); // vx = vy = 0
    let err = transform_observability(&o, &transform, &x0).unwrap_err();
    match err {
        crate::Error::SingularJacobian { cond, .. } => assert!(!cond.is_finite() || cond > 1e12),
        other => panic!("unexpected error {other:?}"),
    }
}

#[test]
fn slice_full_subsets_is_identity() {
    let mut rng = ChaCha20Rng::seed_from_u64(12);
    let o = ObservabilityMatrix {
        values: DMatrix::from_fn(15, 4, |_, _| rng.random_range(-1.0..1.0)),
        epsilon: 1e-5,
        window: 5,
        window_start: 0,
        measurement_labels: (0..3)
            .map(|j| Label::new(&format!("y{j}"), "-", VarKind::Linear))
            .collect(),
        state_labels: (0..4)
            .map(|i| Label::new(&format!("x{i}"), "-", VarKind::Linear))
            .collect(),
    };
    let full = slice(&o, &[0, 1, 2], &[0, 1, 2, 3, 4], &[0, 1, 2, 3]).unwrap();
    assert_eq!(full.values, o.values);
    assert!(slice(&o, &[], &[0], &[0]).is_err());
}

#[test]
fn slice_equals_recomputation_with_restricted_catalogue() {
    use crate::dynamics::{MeasurementCatalogue, Sensor};

    let full_cat = MeasurementCatalogue::new()
        .with(Sensor::Heading)
        .with(Sensor::CourseAngle)
        .with(Sensor::AirflowAngle);
    let model = KinematicAgent::new(Default::default(), full_cat);
    let mut s = KinematicAgentState::hover(10.0);
    s.vx = 1.5;
    s.w = 0.6;
    s.zeta = 0.8;
    let x0 = s.to_vector();
    let mut inputs = DMatrix::zeros(5, 6);
    for k in 0..5 {
        inputs[(k, 0)] = 9.81;
        inputs[(k, 3)] = 0.2;
    }
    let o_full =
        empirical_observability(&model, &x0, &inputs, 0.1, 5, &EmpiricalConfig::default())
            .unwrap();

    // single sensor (beta) at a single step
    let sliced = slice(&o_full, &[1], &[2], &(0..15).collect::<Vec<_>>()).unwrap();
    assert_eq!(sliced.values.shape(), (1, 15));

    let beta_model = KinematicAgent::new(
        Default::default(),
        MeasurementCatalogue::new().with(Sensor::CourseAngle),
    );
    let o_beta =
        empirical_observability(&beta_model, &x0, &inputs, 0.1, 5, &EmpiricalConfig::default())
            .unwrap();
    let recomputed = slice(&o_beta, &[0], &[2], &(0..15).collect::<Vec<_>>()).unwrap();
    assert_relative_eq!(sliced.values, recomputed.values, epsilon = 1e-12);

    // first-and-last window subset keeps shape (2p)×n
    let ends = slice(&o_full, &[0, 1, 2], &[0, 4], &(0..15).collect::<Vec<_>>()).unwrap();
    assert_eq!(ends.values.shape(), (6, 15));
    assert_eq!(ends.window, 2);
}

fn random_stable_system(
    rng: &mut ChaCha20Rng,
    n: usize,
    p: usize,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let raw = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let spectral_norm = raw.clone().singular_values().max();
    let a = raw * (0.9 / spectral_norm);
    let c = DMatrix::from_fn(p, n, |_, _| rng.random_range(-1.0..1.0));
    (a, c)
}

#[test]
fn empirical_matches_stacked_observability_for_random_stable_lti() {
    let mut rng = ChaCha20Rng::seed_from_u64(13);
    for _ in 0..10 {
        let n = rng.random_range(1..=5);
        let p = rng.random_range(1..=3);
        let window = rng.random_range(1..=6);
        let (a, c) = random_stable_system(&mut rng, n, p);
        let lti = DiscreteLti::autonomous(a, c).unwrap();
        let x0 = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
        let o = empirical_observability(
            &lti,
            &x0,
            &no_inputs(window),
            1.0,
            window,
            &EmpiricalConfig::default(),
        )
        .unwrap();
        let stacked = lti.stacked_observability(window);
        let rel = (&o.values - &stacked).norm() / stacked.norm().max(1e-12);
        assert!(rel <= 1e-6, "relative deviation {rel}");
    }
}

#[test]
fn adding_sensors_never_increases_variance() {
    let mut rng = ChaCha20Rng::seed_from_u64(14);
    for _ in 0..20 {
        let n = 4;
        let o = ObservabilityMatrix {
            values: DMatrix::from_fn(3 * 2, n, |_, _| rng.random_range(-1.0..1.0)),
            epsilon: 1e-5,
            window: 2,
            window_start: 0,
            measurement_labels: (0..3)
                .map(|j| Label::new(&format!("y{j}"), "-", VarKind::Linear))
                .collect(),
            state_labels: (0..n)
                .map(|i| Label::new(&format!("x{i}"), "-", VarKind::Linear))
                .collect(),
        };
        let noise = NoiseSpec::Uniform(0.1);
        let states: Vec<usize> = (0..n).collect();
        let steps = [0, 1];

        let two = slice(&o, &[0, 1], &steps, &states).unwrap();
        let three = slice(&o, &[0, 1, 2], &steps, &states).unwrap();
        let var2 = chernoff_inverse(&fisher(&two, &noise).unwrap(), 1e-6).unwrap();
        let var3 = chernoff_inverse(&fisher(&three, &noise).unwrap(), 1e-6).unwrap();
        for i in 0..n {
            assert!(
                var3.min_error_variance.values[i]
                    <= var2.min_error_variance.values[i] + 1e-10,
                "sensor monotonicity violated at state {i}"
            );
        }
    }
}

#[test]
fn extending_window_never_increases_variance() {
    let mut rng = ChaCha20Rng::seed_from_u64(15);
    for _ in 0..20 {
        let n = 4;
        let o = ObservabilityMatrix {
            values: DMatrix::from_fn(2 * 5, n, |_, _| rng.random_range(-1.0..1.0)),
            epsilon: 1e-5,
            window: 5,
            window_start: 0,
            measurement_labels: (0..2)
                .map(|j| Label::new(&format!("y{j}"), "-", VarKind::Linear))
                .collect(),
            state_labels: (0..n)
                .map(|i| Label::new(&format!("x{i}"), "-", VarKind::Linear))
                .collect(),
        };
        let noise = NoiseSpec::Uniform(0.1);
        let states: Vec<usize> = (0..n).collect();

        let short = slice(&o, &[0, 1], &[0, 1, 2], &states).unwrap();
        let long = slice(&o, &[0, 1], &[0, 1, 2, 3, 4], &states).unwrap();
        let var_short = chernoff_inverse(&fisher(&short, &noise).unwrap(), 1e-6).unwrap();
        let var_long = chernoff_inverse(&fisher(&long, &noise).unwrap(), 1e-6).unwrap();
        for i in 0..n {
            assert!(
                var_long.min_error_variance.values[i]
                    <= var_short.min_error_variance.values[i] + 1e-10,
                "window monotonicity violated at state {i}"
            );
        }
    }
}

#[test]
fn constant_state_cramer_rao_bound_is_sigma_squared_over_window() {
    // x constant, y = x + noise(σ²), window ω: the bound is σ²/ω
    let a = DMatrix::identity(1, 1);
    let c = DMatrix::identity(1, 1);
    let lti = DiscreteLti::autonomous(a, c).unwrap();
    let x0 = DVector::from_vec(vec![1.3]);
    let window = 5;
    let sigma2 = 0.1;
    let o = empirical_observability(
        &lti,
        &x0,
        &no_inputs(window),
        1.0,
        window,
        &EmpiricalConfig::default(),
    )
    .unwrap();
    let f = fisher(&o, &NoiseSpec::Uniform(sigma2)).unwrap();
    let inv = chernoff_inverse(&f, 1e-6).unwrap();
    let bound = inv.min_error_variance.values[0];
    assert_relative_eq!(bound, sigma2 / window as f64, epsilon = 1e-6);

    // Monte Carlo: the sample-mean estimator over the window cannot beat
    // the bound, and sits within 10% of it
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let normal = rand_distr::Normal::new(0.0, sigma2.sqrt()).unwrap();
    let trials = 10_000;
    let mut errors = Vec::with_capacity(trials);
    for _ in 0..trials {
        let mean: f64 = (0..window)
            .map(|_| x0[0] + rand_distr::Distribution::sample(&normal, &mut rng))
            .sum::<f64>()
            / window as f64;
        errors.push(mean - x0[0]);
    }
    let mc_var = errors.iter().map(|e| e * e).sum::<f64>() / trials as f64;
    assert!(
        mc_var >= bound && mc_var <= 1.1 * bound,
        "Monte Carlo variance {mc_var} outside [bound, 1.1·bound] = [{bound}, {}]",
        1.1 * bound
    );
}

fn constant_lti_trajectory(k: usize) -> (DiscreteLti, Trajectory) {
    let a = DMatrix::identity(2, 2);
    let c = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.0, 1.0]);
    let lti = DiscreteLti::autonomous(a, c).unwrap();
    let x0 = DVector::from_vec(vec![0.7, -0.4]);
    let inputs = DMatrix::zeros(k, 0);
    let traj = Trajectory::simulate(&lti, &x0, &inputs, 1.0, Provenance::Simulated { seed: 0 })
        .unwrap();
    (lti, traj)
}

#[test]
fn sliding_windows_are_constant_for_a_time_invariant_system() {
    let (lti, traj) = constant_lti_trajectory(12);
    let cfg = SlidingConfig {
        window: 4,
        ..Default::default()
    };
    let series = sliding_window_variance(&lti, &traj, &cfg, None).unwrap();
    assert_eq!(series.windows(), 9);
    for i in 0..2 {
        let column: Vec<f64> = series.values.column(i).iter().cloned().collect();
        for v in &column {
            assert_relative_eq!(*v, column[0], max_relative = 1e-9);
        }
    }
    // display timestamps are start + ω/2·dt
    assert_relative_eq!(series.t_display[0], 0.5 * 4.0 * 1.0, epsilon = 1e-12);
}

#[test]
fn sliding_parallel_and_serial_runs_are_bit_identical() {
    let (lti, traj) = constant_lti_trajectory(15);
    let serial = SlidingConfig {
        window: 5,
        parallel: false,
        ..Default::default()
    };
    let parallel = SlidingConfig {
        window: 5,
        parallel: true,
        ..Default::default()
    };
    let a = sliding_window_variance(&lti, &traj, &serial, None).unwrap();
    let b = sliding_window_variance(&lti, &traj, &parallel, None).unwrap();
    assert_eq!(a.values, b.values);
    assert_eq!(a.saturated, b.saturated);
}

#[test]
fn planar_altitude_saturates_without_acceleration_and_recovers_with_it() {
    let model = Planar2D::with_forward_flow();
    let k_total = 60;
    let mut inputs = DMatrix::zeros(k_total, 2);
    for k in 30..45 {
        inputs[(k, 1)] = 2.0; // forward acceleration pulse
    }
    let x0 = Planar2DState::new(10.0, 0.0, 5.0).to_vector();
    let traj = Trajectory::simulate(&model, &x0, &inputs, 0.1, Provenance::Simulated { seed: 0 })
        .unwrap();

    // optic flow carries its baseline noise variance of 1e-3
    let cfg = SlidingConfig {
        noise: NoiseSpec::Uniform(1e-3),
        ..Default::default()
    };
    let series = sliding_window_variance(&model, &traj, &cfg, None).unwrap();
    let z_idx = series.state_index("z").unwrap();

    // constant-velocity window: the observability matrix is rank deficient
    // (z and vx columns are parallel), so altitude saturates at ~1/λ
    let o_const = empirical_observability(
        &model,
        &traj.state_at(5),
        &traj.inputs.rows(5, 5).into_owned(),
        0.1,
        5,
        &EmpiricalConfig::default(),
    )
    .unwrap();
    let rank_const = o_const
        .values
        .clone()
        .singular_values()
        .iter()
        .filter(|&&s| s > 1e-8 * o_const.values.norm())
        .count();
    assert!(rank_const < 3, "expected rank deficiency, got {rank_const}");
    assert!(series.saturated[5][z_idx]);
    assert!(series.values[(5, z_idx)] >= 0.5 / cfg.lambda);

    // window inside the acceleration pulse: full rank, unsaturated
    let o_accel = empirical_observability(
        &model,
        &traj.state_at(35),
        &traj.inputs.rows(35, 5).into_owned(),
        0.1,
        5,
        &EmpiricalConfig::default(),
    )
    .unwrap();
    let rank_accel = o_accel
        .values
        .clone()
        .singular_values()
        .iter()
        .filter(|&&s| s > 1e-8 * o_accel.values.norm())
        .count();
    assert_eq!(rank_accel, 3);
    assert!(!series.saturated[35][z_idx]);
    assert!(series.values[(35, z_idx)] < 0.5 / cfg.lambda);
}
