//! Smooth data-fidelity losses with gradients and Lipschitz constants.

mod completion;
mod linear;
mod mask;
mod tensor;

pub use completion::{mc_value_grad, MatrixCompletionProblem};
pub use linear::{
    linmap_value_grad, DenseOperator, LinearMeasurementProblem, LinearOperator, SamplingOperator, SparseOperator,
};
pub use mask::{project_mask, ObservationMask};
pub use tensor::{fold, mode_product, mode_unfold, tlrr_value_grads, Tensor3, TlrrLoss};

use crate::error::Result;
use crate::Matrix;

/// A smooth loss `f` of one matrix variable with an `L`-Lipschitz gradient.
pub trait SmoothLoss {
    /// Shape of the matrix variable.
    fn shape(&self) -> (usize, usize);

    fn value_grad(&self, x: &Matrix) -> Result<(f64, Matrix)>;

    fn value(&self, x: &Matrix) -> Result<f64> {
        self.value_grad(x).map(|(v, _)| v)
    }

    /// Lipschitz constant of the gradient.
    fn lipschitz(&self) -> f64;

    /// Observation-fit residual `||P_Omega(X - M)||_F`, for losses that have one.
    fn fit_residual(&self, _x: &Matrix) -> Option<f64> {
        None
    }
}

impl<T: SmoothLoss + ?Sized> SmoothLoss for &T {
    fn shape(&self) -> (usize, usize) {
        (**self).shape()
    }
    fn value_grad(&self, x: &Matrix) -> Result<(f64, Matrix)> {
        (**self).value_grad(x)
    }
    fn value(&self, x: &Matrix) -> Result<f64> {
        (**self).value(x)
    }
    fn lipschitz(&self) -> f64 {
        (**self).lipschitz()
    }
    fn fit_residual(&self, x: &Matrix) -> Option<f64> {
        (**self).fit_residual(x)
    }
}
