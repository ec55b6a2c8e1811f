//! Trajectory data model, setpoint generation, and CSV persistence.

mod csv_io;
mod motif;
mod random;

pub use csv_io::{export_csv, ingest_csv, CsvSchema, DEFAULT_FLOW_SCALE};
pub use motif::{generate_motif_setpoints, MotifBaseline, MotifKind, MotifSpec, SetpointSeries};
pub use random::{
    generate_random_setpoints, sum_of_sines_velocity, RandomDraw, RandomTrajectoryRanges,
    SumOfSinesSpec,
};

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{measure_unwrapped, Label, SystemModel, VarKind};
use crate::error::{Error, Result};

/// Where a trajectory came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    Simulated { seed: u64 },
    Measured { source: String },
}

/// Uniformly sampled time series of states, inputs, and measurements.
///
/// All arrays share the sample count K; `inputs[k]` is held over the step
/// from sample k to k+1 and also feeds the measurement at sample k. Angle
/// columns are stored unwrapped. Measured trajectories may carry fewer
/// state columns than the bound model (reconstruction fills them in).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub state_labels: Vec<Label>,
    pub input_labels: Vec<Label>,
    pub measurement_labels: Vec<Label>,
    /// K×n states.
    pub states: DMatrix<f64>,
    /// K×m inputs.
    pub inputs: DMatrix<f64>,
    /// K×p measurements.
    pub measurements: DMatrix<f64>,
    pub provenance: Provenance,
}

impl Trajectory {
    /// Number of samples K.
    pub fn len(&self) -> usize {
        self.states.nrows().max(self.inputs.nrows()).max(self.measurements.nrows())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sample timestamps k·dt.
    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| k as f64 * self.dt).collect()
    }

    /// State at sample k as a column vector.
    pub fn state_at(&self, k: usize) -> DVector<f64> {
        self.states.row(k).transpose()
    }

    /// Input at sample k as a column vector.
    pub fn input_at(&self, k: usize) -> DVector<f64> {
        self.inputs.row(k).transpose()
    }

    /// Measurement at sample k as a column vector.
    pub fn measurement_at(&self, k: usize) -> DVector<f64> {
        self.measurements.row(k).transpose()
    }

    /// Index of a state column by name.
    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.state_labels.iter().position(|l| l.name == name)
    }

    /// Index of a measurement column by name.
    pub fn measurement_index(&self, name: &str) -> Option<usize> {
        self.measurement_labels.iter().position(|l| l.name == name)
    }

    /// Index of an input column by name.
    pub fn input_index(&self, name: &str) -> Option<usize> {
        self.input_labels.iter().position(|l| l.name == name)
    }

    /// Simulate a trajectory by repeatedly stepping `model` from `x0` under
    /// the given input rows. Measurements are evaluated at every sample and
    /// angle measurements are unwrapped along the series.
    pub fn simulate(
        model: &dyn SystemModel,
        x0: &DVector<f64>,
        inputs: &DMatrix<f64>,
        dt: f64,
        provenance: Provenance,
    ) -> Result<Trajectory> {
        let steps = inputs.nrows();
        if steps == 0 {
            return Err(Error::InvalidArgument(
                "input series must contain at least one sample".to_string(),
            ));
        }
        if inputs.ncols() != model.input_labels().len() {
            return Err(Error::DimensionMismatch {
                context: "input series".to_string(),
                expected: model.input_labels().len(),
                got: inputs.ncols(),
            });
        }
        let n = model.state_labels().len();
        let p = model.measurement_labels().len();
        let mut states = DMatrix::zeros(steps, n);
        let mut measurements = DMatrix::zeros(steps, p);
        let mut x = x0.clone();
        let mut y_prev: Option<DVector<f64>> = None;
        for k in 0..steps {
            let u = inputs.row(k).transpose();
            states.row_mut(k).copy_from(&x.transpose());
            let y = match &y_prev {
                Some(prev) => measure_unwrapped(model, &x, &u, prev)?,
                None => crate::dynamics::measure(model, &x, &u)?,
            };
            measurements.row_mut(k).copy_from(&y.transpose());
            y_prev = Some(y);
            if k + 1 < steps {
                x = crate::dynamics::step(model, &x, &u, dt)?;
            }
        }
        Ok(Trajectory {
            dt,
            state_labels: model.state_labels().to_vec(),
            input_labels: model.input_labels().to_vec(),
            measurement_labels: model.measurement_labels().to_vec(),
            states,
            inputs: inputs.clone(),
            measurements,
            provenance,
        })
    }

    /// Names of angle-kind measurement columns (used by noise injection and
    /// estimator input assembly).
    pub fn angle_measurement_indices(&self) -> Vec<usize> {
        self.measurement_labels
            .iter()
            .enumerate()
            .filter(|(_, l)| l.kind == VarKind::Angle)
            .map(|(i, _)| i)
            .collect()
    }
}
