use crate::error::{shape_mismatch, Error, Result};
use crate::problems::{ObservationMask, SmoothLoss};
use crate::Matrix;

/// `f(X) = 1/2 ||P_Omega(X - M)||_F^2`, whose gradient is 1-Lipschitz.
#[derive(Debug, Clone)]
pub struct MatrixCompletionProblem {
    observed: Matrix,
    mask: ObservationMask,
}

impl MatrixCompletionProblem {
    /// Keeps only the entries of `m` that lie in `mask`.
    pub fn new(m: &Matrix, mask: ObservationMask) -> Result<Self> {
        let observed = mask.project(m)?;
        if observed.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("observed entries must be finite".into()));
        }
        Ok(Self { observed, mask })
    }

    /// Builds the problem from `(row, col, value)` triplets.
    pub fn from_entries(rows: usize, cols: usize, entries: &[(usize, usize, f64)]) -> Result<Self> {
        let idx: Vec<_> = entries.iter().map(|&(i, j, _)| (i, j)).collect();
        let mask = ObservationMask::new(rows, cols, &idx)?;
        let mut m = Matrix::zeros(rows, cols);
        for &(i, j, v) in entries {
            m[(i, j)] = v;
        }
        Self::new(&m, mask)
    }

    pub fn mask(&self) -> &ObservationMask {
        &self.mask
    }

    /// `P_Omega(M)`, zero outside the mask.
    pub fn observed(&self) -> &Matrix {
        &self.observed
    }

    /// `||P_Omega(M)||_inf`, the scale used to seed continuation.
    pub fn observed_max_abs(&self) -> f64 {
        self.observed.amax()
    }

    fn residual(&self, x: &Matrix) -> Result<Matrix> {
        if x.shape() != self.mask.shape() {
            return Err(shape_mismatch("matrix completion", self.mask.shape(), x.shape()));
        }
        let mut r = Matrix::zeros(x.nrows(), x.ncols());
        let (xs, ms, rs) = (x.as_slice(), self.observed.as_slice(), r.as_mut_slice());
        for &l in self.mask.linear_indices() {
            rs[l] = xs[l] - ms[l];
        }
        Ok(r)
    }
}

impl SmoothLoss for MatrixCompletionProblem {
    fn shape(&self) -> (usize, usize) {
        self.mask.shape()
    }

    fn value_grad(&self, x: &Matrix) -> Result<(f64, Matrix)> {
        let r = self.residual(x)?;
        Ok((0.5 * r.norm_squared(), r))
    }

    fn lipschitz(&self) -> f64 {
        1.0
    }

    fn fit_residual(&self, x: &Matrix) -> Option<f64> {
        self.residual(x).ok().map(|r| r.norm())
    }
}

/// Value and gradient of the completion loss.
pub fn mc_value_grad(problem: &MatrixCompletionProblem, x: &Matrix) -> Result<(f64, Matrix)> {
    problem.value_grad(x)
}
