use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{shape_mismatch, Error, Result};
use crate::problems::{ObservationMask, SmoothLoss};
use crate::Matrix;

const ADJOINT_PROBES: usize = 3;
const ADJOINT_TOL: f64 = 1e-10;
const POWER_MAX_ITER: usize = 200;
const POWER_REL_TOL: f64 = 1e-8;
const LIPSCHITZ_INFLATION: f64 = 1.01;

/// A linear map from `m x n` matrices to vectors, together with its adjoint.
pub trait LinearOperator {
    fn input_shape(&self) -> (usize, usize);
    fn output_len(&self) -> usize;
    fn apply(&self, x: &Matrix) -> DVector<f64>;
    fn adjoint(&self, y: &DVector<f64>) -> Matrix;
}

/// Dense operator acting on the column-major vectorization of `X`.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    rows: usize,
    cols: usize,
    a: Matrix,
}

impl DenseOperator {
    /// `a` must have `rows * cols` columns.
    pub fn new(rows: usize, cols: usize, a: Matrix) -> Result<Self> {
        if a.ncols() != rows * cols {
            return Err(Error::Contract(format!(
                "operator has {} columns, expected {}",
                a.ncols(),
                rows * cols
            )));
        }
        Ok(Self { rows, cols, a })
    }

    pub fn identity(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            a: Matrix::identity(rows * cols, rows * cols),
        }
    }
}

impl LinearOperator for DenseOperator {
    fn input_shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }
    fn output_len(&self) -> usize {
        self.a.nrows()
    }
    fn apply(&self, x: &Matrix) -> DVector<f64> {
        &self.a * DVector::from_column_slice(x.as_slice())
    }
    fn adjoint(&self, y: &DVector<f64>) -> Matrix {
        let v = self.a.tr_mul(y);
        Matrix::from_column_slice(self.rows, self.cols, v.as_slice())
    }
}

/// Sparse operator stored as `(output row, input row, input col, value)` triplets.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    rows: usize,
    cols: usize,
    out_len: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseOperator {
    pub fn new(
        rows: usize,
        cols: usize,
        out_len: usize,
        triplets: &[(usize, usize, usize, f64)],
    ) -> Result<Self> {
        let mut entries = Vec::with_capacity(triplets.len());
        for &(k, i, j, v) in triplets {
            if k >= out_len || i >= rows || j >= cols {
                return Err(Error::Contract(format!(
                    "operator entry ({k}, {i}, {j}) out of range"
                )));
            }
            entries.push((k, i + j * rows, v));
        }
        Ok(Self {
            rows,
            cols,
            out_len,
            entries,
        })
    }
}

impl LinearOperator for SparseOperator {
    fn input_shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }
    fn output_len(&self) -> usize {
        self.out_len
    }
    fn apply(&self, x: &Matrix) -> DVector<f64> {
        let xs = x.as_slice();
        let mut out = DVector::zeros(self.out_len);
        for &(k, l, v) in &self.entries {
            out[k] += v * xs[l];
        }
        out
    }
    fn adjoint(&self, y: &DVector<f64>) -> Matrix {
        let mut out = Matrix::zeros(self.rows, self.cols);
        let os = out.as_mut_slice();
        for &(k, l, v) in &self.entries {
            os[l] += v * y[k];
        }
        out
    }
}

/// Entry sampling: `A(X)` lists the observed entries of `X` in mask order.
#[derive(Debug, Clone)]
pub struct SamplingOperator {
    mask: ObservationMask,
}

impl SamplingOperator {
    pub fn new(mask: ObservationMask) -> Self {
        Self { mask }
    }
}

impl LinearOperator for SamplingOperator {
    fn input_shape(&self) -> (usize, usize) {
        self.mask.shape()
    }
    fn output_len(&self) -> usize {
        self.mask.len()
    }
    fn apply(&self, x: &Matrix) -> DVector<f64> {
        let xs = x.as_slice();
        DVector::from_iterator(
            self.mask.len(),
            self.mask.linear_indices().iter().map(|&l| xs[l]),
        )
    }
    fn adjoint(&self, y: &DVector<f64>) -> Matrix {
        let (m, n) = self.mask.shape();
        let mut out = Matrix::zeros(m, n);
        let os = out.as_mut_slice();
        for (k, &l) in self.mask.linear_indices().iter().enumerate() {
            os[l] = y[k];
        }
        out
    }
}

/// `f(X) = 1/2 ||A(X) - b||^2` with `L(f) = ||A||_2^2`.
///
/// The spectral norm is estimated by power iteration on `A* A` and inflated
/// by 1% so that it does not under-estimate.
#[derive(Debug, Clone)]
pub struct LinearMeasurementProblem<A> {
    operator: A,
    target: DVector<f64>,
    lipschitz: f64,
}

impl<A: LinearOperator> LinearMeasurementProblem<A> {
    /// Checks adjoint consistency on random probes and estimates `L(f)`.
    pub fn new(operator: A, target: DVector<f64>) -> Result<Self> {
        if target.len() != operator.output_len() {
            return Err(Error::Contract(format!(
                "target has length {}, operator outputs {}",
                target.len(),
                operator.output_len()
            )));
        }
        check_adjoint(&operator)?;
        let lipschitz = LIPSCHITZ_INFLATION * operator_norm_squared(&operator);
        Ok(Self {
            operator,
            target,
            lipschitz,
        })
    }

    pub fn operator(&self) -> &A {
        &self.operator
    }

    pub fn target(&self) -> &DVector<f64> {
        &self.target
    }
}

fn probe_rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x1a2b_3c4d)
}

fn check_adjoint<A: LinearOperator>(op: &A) -> Result<()> {
    let (m, n) = op.input_shape();
    let mut rng = probe_rng();
    for _ in 0..ADJOINT_PROBES {
        let x = Matrix::from_fn(m, n, |_, _| rng.sample(StandardNormal));
        let y = DVector::from_fn(op.output_len(), |_, _| rng.sample::<f64, _>(StandardNormal));
        let ax = op.apply(&x);
        let aty = op.adjoint(&y);
        if ax.len() != y.len() || aty.shape() != (m, n) {
            return Err(Error::Contract("operator output has the wrong size".into()));
        }
        let lhs = ax.dot(&y);
        let rhs = x.dot(&aty);
        let scale = 1.0 + ax.norm() * y.norm() + x.norm() * aty.norm();
        if (lhs - rhs).abs() > ADJOINT_TOL * scale {
            return Err(Error::Contract(format!(
                "adjoint mismatch: <A x, y> = {lhs}, <x, A* y> = {rhs}"
            )));
        }
    }
    Ok(())
}

/// Power iteration for the largest eigenvalue of `A* A`.
fn operator_norm_squared<A: LinearOperator>(op: &A) -> f64 {
    let (m, n) = op.input_shape();
    let mut rng = probe_rng();
    let mut v = Matrix::from_fn(m, n, |_, _| rng.sample(StandardNormal));
    let norm = v.norm();
    if norm == 0.0 {
        return 0.0;
    }
    v /= norm;
    let mut estimate = 0.0;
    for _ in 0..POWER_MAX_ITER {
        let w = op.adjoint(&op.apply(&v));
        let next = w.norm();
        if next == 0.0 {
            return 0.0;
        }
        v = w / next;
        let converged = (next - estimate).abs() <= POWER_REL_TOL * next;
        estimate = next;
        if converged {
            break;
        }
    }
    estimate
}

impl<A: LinearOperator> SmoothLoss for LinearMeasurementProblem<A> {
    fn shape(&self) -> (usize, usize) {
        self.operator.input_shape()
    }

    fn value_grad(&self, x: &Matrix) -> Result<(f64, Matrix)> {
        if x.shape() != self.shape() {
            return Err(shape_mismatch("linear measurement", self.shape(), x.shape()));
        }
        let r = self.operator.apply(x) - &self.target;
        Ok((0.5 * r.norm_squared(), self.operator.adjoint(&r)))
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

/// Value and gradient of the linear-measurement loss.
pub fn linmap_value_grad<A: LinearOperator>(
    problem: &LinearMeasurementProblem<A>,
    x: &Matrix,
) -> Result<(f64, Matrix)> {
    problem.value_grad(x)
}
