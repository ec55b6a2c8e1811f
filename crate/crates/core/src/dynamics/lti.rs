//! Discrete linear time-invariant model x_{k+1} = A·x + B·u, y = C·x.
//!
//! Used as a reference system: its stacked observability matrix
//! [C; CA; …; CA^{ω−1}] is known in closed form.

use nalgebra::{DMatrix, DVector};

use super::{Label, SystemModel, VarKind};
use crate::error::{Error, Result};

pub struct DiscreteLti {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    state_labels: Vec<Label>,
    input_labels: Vec<Label>,
    measurement_labels: Vec<Label>,
}

impl DiscreteLti {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n || c.ncols() != n {
            return Err(Error::InvalidArgument(
                "inconsistent LTI matrix dimensions".to_string(),
            ));
        }
        let state_labels = (0..n)
            .map(|i| Label::new(&format!("x{i}"), "-", VarKind::Linear))
            .collect();
        let input_labels = (0..b.ncols())
            .map(|i| Label::new(&format!("u{i}"), "-", VarKind::Linear))
            .collect();
        let measurement_labels = (0..c.nrows())
            .map(|i| Label::new(&format!("y{i}"), "-", VarKind::Linear))
            .collect();
        Ok(Self {
            a,
            b,
            c,
            state_labels,
            input_labels,
            measurement_labels,
        })
    }

    /// Autonomous system (no inputs).
    pub fn autonomous(a: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        Self::new(a, DMatrix::zeros(n, 0), c)
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    /// Analytical stacked observability matrix over `window` steps.
    pub fn stacked_observability(&self, window: usize) -> DMatrix<f64> {
        let n = self.a.ncols();
        let p = self.c.nrows();
        let mut out = DMatrix::zeros(p * window, n);
        let mut power = DMatrix::identity(n, n);
        for k in 0..window {
            let block = &self.c * &power;
            out.view_mut((k * p, 0), (p, n)).copy_from(&block);
            power = &self.a * power;
        }
        out
    }
}

impl SystemModel for DiscreteLti {
    fn state_labels(&self) -> &[Label] {
        &self.state_labels
    }
    fn input_labels(&self) -> &[Label] {
        &self.input_labels
    }
    fn measurement_labels(&self) -> &[Label] {
        &self.measurement_labels
    }

    /// One discrete step; `dt` is ignored (the map itself is the step).
    fn step(&self, x: &DVector<f64>, u: &DVector<f64>, _dt: f64) -> DVector<f64> {
        if self.b.ncols() == 0 {
            &self.a * x
        } else {
            &self.a * x + &self.b * u
        }
    }

    fn measure(&self, x: &DVector<f64>, _u: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(&self.c * x)
    }
}
