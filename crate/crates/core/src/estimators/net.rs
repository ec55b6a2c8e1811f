//! Fully connected feed-forward estimator network.
//!
//! Hidden layers use the rectifier, the output layer is linear. The forward
//! pass is deterministic; training-time input noise lives in the trainer.
//! Nets serialize to a versioned flat text format with a dimensions header
//! and row-major weights at 17 significant digits, which round-trips f64
//! exactly.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

const FORMAT_TAG: &str = "obsbound-net v1";

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorNet {
    /// weights[l] has shape (dims[l+1], dims[l]).
    weights: Vec<DMatrix<f64>>,
    biases: Vec<DVector<f64>>,
    /// Gaussian input-noise std used during training (native input units).
    pub input_noise_std: f64,
    /// Measurement-history window length the inputs were assembled from.
    pub window: usize,
    /// Names of the per-step input columns, for self-description.
    pub input_columns: Vec<String>,
}

impl EstimatorNet {
    /// Random initialization scaled for rectifier layers.
    pub fn new(dims: &[usize], window: usize, input_columns: Vec<String>, seed: u64) -> Self {
        assert!(dims.len() >= 2, "need at least input and output dims");
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..dims.len() - 1 {
            let std = (2.0 / dims[l] as f64).sqrt();
            let normal = Normal::new(0.0, std).unwrap();
            weights.push(DMatrix::from_fn(dims[l + 1], dims[l], |_, _| {
                normal.sample(&mut rng)
            }));
            biases.push(DVector::zeros(dims[l + 1]));
        }
        Self {
            weights,
            biases,
            input_noise_std: 0.0,
            window,
            input_columns,
        }
    }

    /// All-zero parameters (outputs zero for any input).
    pub fn zeros(dims: &[usize], window: usize, input_columns: Vec<String>) -> Self {
        let mut net = Self::new(dims, window, input_columns, 0);
        for w in &mut net.weights {
            w.fill(0.0);
        }
        net
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.weights[0].ncols()];
        dims.extend(self.weights.iter().map(|w| w.nrows()));
        dims
    }

    pub fn input_dim(&self) -> usize {
        self.weights[0].ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.last().unwrap().nrows()
    }

    pub fn layer_count(&self) -> usize {
        self.weights.len()
    }

    pub(crate) fn params_mut(&mut self) -> (&mut Vec<DMatrix<f64>>, &mut Vec<DVector<f64>>) {
        (&mut self.weights, &mut self.biases)
    }

    pub(crate) fn params(&self) -> (&[DMatrix<f64>], &[DVector<f64>]) {
        (&self.weights, &self.biases)
    }

    /// Deterministic forward pass for one input window.
    pub fn forward(&self, input: &DVector<f64>) -> Result<DVector<f64>> {
        if input.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "estimator input".to_string(),
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        let mut a = input.clone();
        for l in 0..self.weights.len() {
            a = &self.weights[l] * a + &self.biases[l];
            if l + 1 < self.weights.len() {
                a.apply(|v| *v = v.max(0.0));
            }
        }
        Ok(a)
    }

    /// Forward pass reduced to the single output neuron.
    pub fn forward_scalar(&self, input: &DVector<f64>) -> Result<f64> {
        let out = self.forward(input)?;
        if out.len() != 1 {
            return Err(Error::DimensionMismatch {
                context: "scalar estimator output".to_string(),
                expected: 1,
                got: out.len(),
            });
        }
        Ok(out[0])
    }

    /// Batched forward pass over columns of `x`, returning all layer
    /// activations (A0 = x, …, A_L = output).
    pub(crate) fn forward_batch(&self, x: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        let mut activations = Vec::with_capacity(self.weights.len() + 1);
        activations.push(x.clone());
        for l in 0..self.weights.len() {
            let mut z = &self.weights[l] * activations.last().unwrap();
            for mut col in z.column_iter_mut() {
                col += &self.biases[l];
            }
            if l + 1 < self.weights.len() {
                z.apply(|v| *v = v.max(0.0));
            }
            activations.push(z);
        }
        activations
    }

    /// Backpropagate an output gradient (d_out × batch) to parameter
    /// gradients, given activations from `forward_batch`.
    pub(crate) fn backward_batch(
        &self,
        activations: &[DMatrix<f64>],
        output_grad: &DMatrix<f64>,
    ) -> (Vec<DMatrix<f64>>, Vec<DVector<f64>>) {
        let layers = self.weights.len();
        let mut grad_w = vec![DMatrix::zeros(0, 0); layers];
        let mut grad_b = vec![DVector::zeros(0); layers];
        let mut delta = output_grad.clone();
        for l in (0..layers).rev() {
            grad_w[l] = &delta * activations[l].transpose();
            grad_b[l] = DVector::from_iterator(
                delta.nrows(),
                delta.row_iter().map(|row| row.sum()),
            );
            if l > 0 {
                let mut upstream = self.weights[l].transpose() * delta;
                // rectifier mask from the stored activation
                upstream.zip_apply(&activations[l], |g, a| {
                    if a <= 0.0 {
                        *g = 0.0;
                    }
                });
                delta = upstream;
            }
        }
        (grad_w, grad_b)
    }

    /// Gradient of the scalar output with respect to every weight and bias.
    pub fn output_gradients(
        &self,
        input: &DVector<f64>,
    ) -> Result<(Vec<DMatrix<f64>>, Vec<DVector<f64>>)> {
        if self.output_dim() != 1 {
            return Err(Error::InvalidArgument(
                "output gradient is defined for single-output nets".to_string(),
            ));
        }
        let x = DMatrix::from_column_slice(input.len(), 1, input.as_slice());
        let activations = self.forward_batch(&x);
        let seed = DMatrix::from_element(1, 1, 1.0);
        Ok(self.backward_batch(&activations, &seed))
    }

    /// Serialize to the flat text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let dims: Vec<String> = self.dims().iter().map(|d| d.to_string()).collect();
        writeln!(out, "{FORMAT_TAG}").unwrap();
        writeln!(out, "dims {}", dims.join(" ")).unwrap();
        writeln!(out, "window {}", self.window).unwrap();
        writeln!(out, "input_noise_std {:.17e}", self.input_noise_std).unwrap();
        writeln!(
            out,
            "inputs {}",
            if self.input_columns.is_empty() {
                "-".to_string()
            } else {
                self.input_columns.join(",")
            }
        )
        .unwrap();
        for l in 0..self.weights.len() {
            writeln!(out, "layer {l} weight").unwrap();
            let w = &self.weights[l];
            let mut line = String::new();
            for r in 0..w.nrows() {
                for c in 0..w.ncols() {
                    if !line.is_empty() {
                        line.push(' ');
                    }
                    write!(line, "{:.17e}", w[(r, c)]).unwrap();
                }
            }
            writeln!(out, "{line}").unwrap();
            writeln!(out, "layer {l} bias").unwrap();
            let b: Vec<String> = self.biases[l].iter().map(|v| format!("{v:.17e}")).collect();
            writeln!(out, "{}", b.join(" ")).unwrap();
        }
        out
    }

    /// Parse the flat text format.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let tag = lines.next().unwrap_or_default();
        if tag.trim() != FORMAT_TAG {
            return Err(Error::NetFormat(format!(
                "unsupported format tag `{tag}` (expected `{FORMAT_TAG}`)"
            )));
        }
        let mut dims: Vec<usize> = Vec::new();
        let mut window = 0usize;
        let mut input_noise_std = 0.0;
        let mut input_columns = Vec::new();
        let mut weights: Vec<DMatrix<f64>> = Vec::new();
        let mut biases: Vec<DVector<f64>> = Vec::new();

        let parse_floats = |line: &str| -> Result<Vec<f64>> {
            line.split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>()
                        .map_err(|_| Error::NetFormat(format!("bad number `{tok}`")))
                })
                .collect()
        };

        while let Some(line) = lines.next() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("dims ") {
                dims = rest
                    .split_whitespace()
                    .map(|t| {
                        t.parse::<usize>()
                            .map_err(|_| Error::NetFormat(format!("bad dimension `{t}`")))
                    })
                    .collect::<Result<_>>()?;
            } else if let Some(rest) = line.strip_prefix("window ") {
                window = rest
                    .trim()
                    .parse()
                    .map_err(|_| Error::NetFormat("bad window".to_string()))?;
            } else if let Some(rest) = line.strip_prefix("input_noise_std ") {
                input_noise_std = rest
                    .trim()
                    .parse()
                    .map_err(|_| Error::NetFormat("bad input_noise_std".to_string()))?;
            } else if let Some(rest) = line.strip_prefix("inputs ") {
                let rest = rest.trim();
                if rest != "-" {
                    input_columns = rest.split(',').map(|s| s.to_string()).collect();
                }
            } else if line.starts_with("layer ") && line.ends_with("weight") {
                let l = weights.len();
                if dims.len() < l + 2 {
                    return Err(Error::NetFormat("weight block before dims".to_string()));
                }
                let (rows, cols) = (dims[l + 1], dims[l]);
                let values = parse_floats(lines.next().unwrap_or_default())?;
                if values.len() != rows * cols {
                    return Err(Error::NetFormat(format!(
                        "layer {l} weight expects {} values, got {}",
                        rows * cols,
                        values.len()
                    )));
                }
                weights.push(DMatrix::from_row_slice(rows, cols, &values));
            } else if line.starts_with("layer ") && line.ends_with("bias") {
                let l = biases.len();
                let rows = dims[l + 1];
                let values = parse_floats(lines.next().unwrap_or_default())?;
                if values.len() != rows {
                    return Err(Error::NetFormat(format!(
                        "layer {l} bias expects {rows} values, got {}",
                        values.len()
                    )));
                }
                biases.push(DVector::from_vec(values));
            } else {
                return Err(Error::NetFormat(format!("unrecognized line `{line}`")));
            }
        }
        if dims.len() < 2 || weights.len() != dims.len() - 1 || biases.len() != weights.len() {
            return Err(Error::NetFormat("incomplete net file".to_string()));
        }
        Ok(Self {
            weights,
            biases,
            input_noise_std,
            window,
            input_columns,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

/// Fixed-length history of per-step input rows, flattened time-major
/// (oldest step first) for estimator consumption.
#[derive(Debug, Clone)]
pub struct WindowBuffer {
    window: usize,
    columns: usize,
    rows: VecDeque<Vec<f64>>,
}

impl WindowBuffer {
    pub fn new(window: usize, columns: usize) -> Self {
        Self {
            window,
            columns,
            rows: VecDeque::with_capacity(window),
        }
    }

    pub fn push(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.columns);
        if self.rows.len() == self.window {
            self.rows.pop_front();
        }
        self.rows.push_back(row.to_vec());
    }

    pub fn is_full(&self) -> bool {
        self.rows.len() == self.window
    }

    pub fn clear(&mut self) {
        self.rows.clear();
    }

    /// Flattened window, oldest step first.
    pub fn as_input(&self) -> Option<DVector<f64>> {
        if !self.is_full() {
            return None;
        }
        let mut out = Vec::with_capacity(self.window * self.columns);
        for row in &self.rows {
            out.extend_from_slice(row);
        }
        Some(DVector::from_vec(out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_net_outputs_zero() {
        let net = EstimatorNet::zeros(&[4, 8, 1], 2, vec![]);
        let y = net
            .forward_scalar(&DVector::from_vec(vec![1.0, -2.0, 3.0, 0.5]))
            .unwrap();
        assert_eq!(y, 0.0);
    }

    #[test]
    fn identity_weight_passes_selected_input_through() {
        let mut net = EstimatorNet::zeros(&[3, 1], 1, vec![]);
        {
            let (w, _) = net.params_mut();
            w[0][(0, 1)] = 1.0;
        }
        let y = net
            .forward_scalar(&DVector::from_vec(vec![5.0, -7.5, 2.0]))
            .unwrap();
        assert_eq!(y, -7.5);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let net = EstimatorNet::zeros(&[3, 1], 1, vec![]);
        assert!(net.forward(&DVector::from_vec(vec![1.0, 2.0])).is_err());
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let mut net = EstimatorNet::new(&[4, 6, 5, 1], 2, vec![], 42);
        // give biases some structure so rectifiers are in mixed regimes
        {
            let (_, b) = net.params_mut();
            for (i, bias) in b[0].iter_mut().enumerate() {
                *bias = 0.05 * (i as f64 - 2.0);
            }
        }
        let input = DVector::from_vec(vec![0.4, -1.2, 0.8, 0.1]);
        let (grad_w, grad_b) = net.output_gradients(&input).unwrap();

        let step = 1e-5;
        for l in 0..net.layer_count() {
            let (rows, cols) = {
                let (w, _) = net.params();
                (w[l].nrows(), w[l].ncols())
            };
            for r in 0..rows {
                for c in 0..cols {
                    let mut plus = net.clone();
                    let mut minus = net.clone();
                    plus.params_mut().0[l][(r, c)] += step;
                    minus.params_mut().0[l][(r, c)] -= step;
                    let fd = (plus.forward_scalar(&input).unwrap()
                        - minus.forward_scalar(&input).unwrap())
                        / (2.0 * step);
                    let analytic = grad_w[l][(r, c)];
                    if fd.abs() > 1e-8 || analytic.abs() > 1e-8 {
                        assert_relative_eq!(analytic, fd, max_relative = 1e-4);
                    }
                }
            }
            for r in 0..rows {
                let mut plus = net.clone();
                let mut minus = net.clone();
                plus.params_mut().1[l][r] += step;
                minus.params_mut().1[l][r] -= step;
                let fd = (plus.forward_scalar(&input).unwrap()
                    - minus.forward_scalar(&input).unwrap())
                    / (2.0 * step);
                let analytic = grad_b[l][r];
                if fd.abs() > 1e-8 || analytic.abs() > 1e-8 {
                    assert_relative_eq!(analytic, fd, max_relative = 1e-4);
                }
            }
        }
    }

    #[test]
    fn text_round_trip_is_lossless() {
        let net = EstimatorNet::new(&[5, 7, 1], 3, vec!["r_x".into(), "u_x".into()], 9);
        let text = net.to_text();
        let back = EstimatorNet::from_text(&text).unwrap();
        assert_eq!(net, back);
    }

    #[test]
    fn window_buffer_flattens_time_major() {
        let mut buf = WindowBuffer::new(3, 2);
        assert!(buf.as_input().is_none());
        buf.push(&[1.0, 2.0]);
        buf.push(&[3.0, 4.0]);
        assert!(!buf.is_full());
        buf.push(&[5.0, 6.0]);
        let input = buf.as_input().unwrap();
        assert_eq!(input.as_slice(), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        buf.push(&[7.0, 8.0]);
        let input = buf.as_input().unwrap();
        assert_eq!(input.as_slice(), &[3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
    }
}
