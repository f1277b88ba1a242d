//! Value network: two hidden ReLU layers, linear output, with exact
//! analytic gradients.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::AgentError;

/// Weights of a 3-layer perceptron. Shapes: `w1` is h1 x n_i, `w2` is
/// h2 x h1, `w3` is n_o x h2.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParameters {
    pub w1: DMatrix<f64>,
    pub b1: DVector<f64>,
    pub w2: DMatrix<f64>,
    pub b2: DVector<f64>,
    pub w3: DMatrix<f64>,
    pub b3: DVector<f64>,
}

/// Parameter-shaped gradient bundle.
pub type MlpGradients = MlpParameters;

impl MlpParameters {
    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (
            self.w1.ncols(),
            self.w1.nrows(),
            self.w2.nrows(),
            self.w3.nrows(),
        )
    }

    pub fn zeros(n_i: usize, h1: usize, h2: usize, n_o: usize) -> Self {
        Self {
            w1: DMatrix::zeros(h1, n_i),
            b1: DVector::zeros(h1),
            w2: DMatrix::zeros(h2, h1),
            b2: DVector::zeros(h2),
            w3: DMatrix::zeros(n_o, h2),
            b3: DVector::zeros(n_o),
        }
    }

    /// Fan-in scaled uniform initialization: U(-1/sqrt(fan_in), +1/sqrt(fan_in)),
    /// zero biases, fully determined by the seed state.
    pub fn init(n_i: usize, h1: usize, h2: usize, n_o: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut fill = |rows: usize, cols: usize| -> DMatrix<f64> {
            let a = 1.0 / (cols as f64).sqrt();
            DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-a..a))
        };
        Self {
            w1: fill(h1, n_i),
            b1: DVector::zeros(h1),
            w2: fill(h2, h1),
            b2: DVector::zeros(h2),
            w3: fill(n_o, h2),
            b3: DVector::zeros(n_o),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.iter_values().all(|v| v.is_finite())
    }

    pub fn iter_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.w1
            .iter()
            .chain(self.b1.iter())
            .chain(self.w2.iter())
            .chain(self.b2.iter())
            .chain(self.w3.iter())
            .chain(self.b3.iter())
            .copied()
    }

    /// Elementwise update helper shared by the optimizers.
    pub fn zip_apply(&mut self, other: &Self, mut f: impl FnMut(&mut f64, f64)) {
        for (a, b) in self.w1.iter_mut().zip(other.w1.iter()) {
            f(a, *b);
        }
        for (a, b) in self.b1.iter_mut().zip(other.b1.iter()) {
            f(a, *b);
        }
        for (a, b) in self.w2.iter_mut().zip(other.w2.iter()) {
            f(a, *b);
        }
        for (a, b) in self.b2.iter_mut().zip(other.b2.iter()) {
            f(a, *b);
        }
        for (a, b) in self.w3.iter_mut().zip(other.w3.iter()) {
            f(a, *b);
        }
        for (a, b) in self.b3.iter_mut().zip(other.b3.iter()) {
            f(a, *b);
        }
    }
}

fn relu_inplace(m: &mut DMatrix<f64>) {
    for v in m.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Q-values for one flattened observation.
pub fn mlp_forward(params: &MlpParameters, input: &[f64]) -> Result<Vec<f64>, AgentError> {
    if input.len() != params.w1.ncols() {
        return Err(AgentError::DimensionMismatch {
            expected: params.w1.ncols(),
            got: input.len(),
        });
    }
    if !input.iter().all(|v| v.is_finite()) {
        return Err(AgentError::NonFiniteInput);
    }
    let x = DVector::from_column_slice(input);
    let mut h1 = &params.w1 * x + &params.b1;
    h1.apply(|v| {
        if *v < 0.0 {
            *v = 0.0;
        }
    });
    let mut h2 = &params.w2 * h1 + &params.b2;
    h2.apply(|v| {
        if *v < 0.0 {
            *v = 0.0;
        }
    });
    let q = &params.w3 * h2 + &params.b3;
    Ok(q.iter().copied().collect())
}

/// Batched forward pass keeping pre-activations; columns are samples.
pub struct ForwardTrace {
    pub x: DMatrix<f64>,
    pub z1: DMatrix<f64>,
    pub h1: DMatrix<f64>,
    pub z2: DMatrix<f64>,
    pub h2: DMatrix<f64>,
    pub q: DMatrix<f64>,
}

pub fn mlp_forward_batch(params: &MlpParameters, x: DMatrix<f64>) -> ForwardTrace {
    let ones = DMatrix::<f64>::from_element(1, x.ncols(), 1.0);
    let z1 = &params.w1 * &x + &params.b1 * &ones;
    let mut h1 = z1.clone();
    relu_inplace(&mut h1);
    let z2 = &params.w2 * &h1 + &params.b2 * &ones;
    let mut h2 = z2.clone();
    relu_inplace(&mut h2);
    let q = &params.w3 * &h2 + &params.b3 * &ones;
    ForwardTrace {
        x,
        z1,
        h1,
        z2,
        h2,
        q,
    }
}

/// Backpropagate `dl_dq` (same shape as the trace output) into parameter
/// gradients.
pub fn mlp_backward(params: &MlpParameters, trace: &ForwardTrace, dl_dq: &DMatrix<f64>) -> MlpGradients {
    let grad_w3 = dl_dq * trace.h2.transpose();
    let grad_b3 = DVector::from_iterator(dl_dq.nrows(), dl_dq.row_iter().map(|r| r.sum()));

    let mut g2 = params.w3.transpose() * dl_dq;
    for (g, z) in g2.iter_mut().zip(trace.z2.iter()) {
        if *z <= 0.0 {
            *g = 0.0;
        }
    }
    let grad_w2 = &g2 * trace.h1.transpose();
    let grad_b2 = DVector::from_iterator(g2.nrows(), g2.row_iter().map(|r| r.sum()));

    let mut g1 = params.w2.transpose() * g2;
    for (g, z) in g1.iter_mut().zip(trace.z1.iter()) {
        if *z <= 0.0 {
            *g = 0.0;
        }
    }
    let grad_w1 = &g1 * trace.x.transpose();
    let grad_b1 = DVector::from_iterator(g1.nrows(), g1.row_iter().map(|r| r.sum()));

    MlpGradients {
        w1: grad_w1,
        b1: grad_b1,
        w2: grad_w2,
        b2: grad_b2,
        w3: grad_w3,
        b3: grad_b3,
    }
}
