//! Dense third-order tensors, mode unfoldings and the tensor low-rank
//! representation loss.
//!
//! Storage is Fortran order: entry `(i1, i2, i3)` lives at
//! `i1 + m1 * (i2 + m2 * i3)`. Unfoldings use cyclic column ordering:
//!
//! | mode | row | column                |
//! |------|-----|-----------------------|
//! | 1    | i1  | `i2 + m2 * i3`        |
//! | 2    | i2  | `i3 + m3 * i1`        |
//! | 3    | i3  | `i1 + m1 * i2`        |

use crate::error::{Error, Result};
use crate::multiblock::BlockLoss;
use crate::prox::singular_values;
use crate::Matrix;

/// Number of modes handled by the tensor loss.
pub const MODES: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    dims: [usize; 3],
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(dims: [usize; 3]) -> Self {
        Self {
            dims,
            data: vec![0.0; dims.iter().product()],
        }
    }

    /// `data` in Fortran order (first index fastest).
    pub fn from_vec(dims: [usize; 3], data: Vec<f64>) -> Result<Self> {
        if data.len() != dims.iter().product::<usize>() {
            return Err(Error::Contract(format!(
                "tensor of dims {dims:?} needs {} values, got {}",
                dims.iter().product::<usize>(),
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn from_fn(dims: [usize; 3], mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(dims);
        for i3 in 0..dims[2] {
            for i2 in 0..dims[1] {
                for i1 in 0..dims[0] {
                    let l = t.offset(i1, i2, i3);
                    t.data[l] = f(i1, i2, i3);
                }
            }
        }
        t
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    fn offset(&self, i1: usize, i2: usize, i3: usize) -> usize {
        i1 + self.dims[0] * (i2 + self.dims[1] * i3)
    }

    pub fn get(&self, i1: usize, i2: usize, i3: usize) -> f64 {
        self.data[self.offset(i1, i2, i3)]
    }

    pub fn set(&mut self, i1: usize, i2: usize, i3: usize, v: f64) {
        let l = self.offset(i1, i2, i3);
        self.data[l] = v;
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn unfold(&self, mode: usize) -> Result<Matrix> {
        mode_unfold(self, mode)
    }
}

impl std::ops::Sub<&Tensor3> for &Tensor3 {
    type Output = Tensor3;

    fn sub(self, rhs: &Tensor3) -> Tensor3 {
        assert_eq!(self.dims, rhs.dims, "tensor dims differ");
        Tensor3 {
            dims: self.dims,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

fn check_mode(mode: usize) -> Result<()> {
    if (1..=MODES).contains(&mode) {
        Ok(())
    } else {
        Err(Error::Contract(format!("tensor mode must be 1, 2 or 3, got {mode}")))
    }
}

/// Maps `(i1, i2, i3)` to `(row, col)` of the mode-`mode` unfolding.
fn unfold_position(dims: [usize; 3], mode: usize, i1: usize, i2: usize, i3: usize) -> (usize, usize) {
    let [m1, m2, m3] = dims;
    match mode {
        1 => (i1, i2 + m2 * i3),
        2 => (i2, i3 + m3 * i1),
        _ => (i3, i1 + m1 * i2),
    }
}

fn unfold_shape(dims: [usize; 3], mode: usize) -> (usize, usize) {
    let total: usize = dims.iter().product();
    let rows = dims[mode - 1];
    (rows, if rows == 0 { 0 } else { total / rows })
}

/// Mode-`mode` unfolding (`mode` in 1..=3).
pub fn mode_unfold(t: &Tensor3, mode: usize) -> Result<Matrix> {
    check_mode(mode)?;
    if mode == 1 {
        let (r, c) = unfold_shape(t.dims, 1);
        return Ok(Matrix::from_column_slice(r, c, &t.data));
    }
    let (r, c) = unfold_shape(t.dims, mode);
    let mut out = Matrix::zeros(r, c);
    let [m1, m2, m3] = t.dims;
    for i3 in 0..m3 {
        for i2 in 0..m2 {
            for i1 in 0..m1 {
                out[unfold_position(t.dims, mode, i1, i2, i3)] = t.get(i1, i2, i3);
            }
        }
    }
    Ok(out)
}

/// Inverse of [`mode_unfold`].
pub fn fold(m: &Matrix, mode: usize, dims: [usize; 3]) -> Result<Tensor3> {
    check_mode(mode)?;
    let shape = unfold_shape(dims, mode);
    if m.shape() != shape {
        return Err(Error::Contract(format!(
            "mode-{mode} unfolding of {dims:?} is {}x{}, got {}x{}",
            shape.0,
            shape.1,
            m.nrows(),
            m.ncols()
        )));
    }
    if mode == 1 {
        return Tensor3::from_vec(dims, m.as_slice().to_vec());
    }
    Ok(Tensor3::from_fn(dims, |i1, i2, i3| {
        m[unfold_position(dims, mode, i1, i2, i3)]
    }))
}

/// `t x_mode p`: the tensor whose mode unfolding is `p * unfold(t)`.
pub fn mode_product(t: &Tensor3, mode: usize, p: &Matrix) -> Result<Tensor3> {
    check_mode(mode)?;
    let size = t.dims[mode - 1];
    if p.shape() != (size, size) {
        return Err(Error::Contract(format!(
            "mode-{mode} factor must be {size}x{size}, got {}x{}",
            p.nrows(),
            p.ncols()
        )));
    }
    fold(&(p * mode_unfold(t, mode)?), mode, t.dims)
}

/// The loss `1/2 || X - sum_j X x_j P_j ||_F^2` over three square factors.
///
/// Per-block Lipschitz constants are `3 * ||X_(j)||_2^2`, which satisfy the
/// multi-block descent inequality for a sum of three linear terms.
#[derive(Debug, Clone)]
pub struct TlrrLoss {
    tensor: Tensor3,
    unfoldings: [Matrix; MODES],
    lipschitz: [f64; MODES],
}

impl TlrrLoss {
    pub fn new(tensor: Tensor3) -> Result<Self> {
        if tensor.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("tensor has non-finite entries".into()));
        }
        let unfoldings = [
            mode_unfold(&tensor, 1)?,
            mode_unfold(&tensor, 2)?,
            mode_unfold(&tensor, 3)?,
        ];
        let mut lipschitz = [0.0; MODES];
        for (l, u) in lipschitz.iter_mut().zip(&unfoldings) {
            let top = singular_values(u)?.first().copied().unwrap_or(0.0);
            *l = MODES as f64 * top * top;
        }
        Ok(Self {
            tensor,
            unfoldings,
            lipschitz,
        })
    }

    pub fn tensor(&self) -> &Tensor3 {
        &self.tensor
    }

    fn check_factors(&self, ps: &[Matrix]) -> Result<()> {
        if ps.len() != MODES {
            return Err(Error::Contract(format!("expected {MODES} factors, got {}", ps.len())));
        }
        for (j, p) in ps.iter().enumerate() {
            let size = self.tensor.dims[j];
            if p.shape() != (size, size) {
                return Err(Error::Contract(format!(
                    "factor {} must be {size}x{size}, got {}x{}",
                    j + 1,
                    p.nrows(),
                    p.ncols()
                )));
            }
        }
        Ok(())
    }

    /// `R = X - sum_j X x_j P_j`.
    pub fn residual(&self, ps: &[Matrix]) -> Result<Tensor3> {
        self.check_factors(ps)?;
        let mut r = self.tensor.clone();
        for (j, p) in ps.iter().enumerate() {
            let term = fold(&(p * &self.unfoldings[j]), j + 1, self.tensor.dims)?;
            r = &r - &term;
        }
        Ok(r)
    }
}

impl BlockLoss for TlrrLoss {
    fn block_shapes(&self) -> Vec<(usize, usize)> {
        self.tensor.dims.iter().map(|&d| (d, d)).collect()
    }

    fn value_grads(&self, ps: &[Matrix]) -> Result<(f64, Vec<Matrix>)> {
        let r = self.residual(ps)?;
        let value = 0.5 * r.norm().powi(2);
        let grads = (0..MODES)
            .map(|j| Ok(-(mode_unfold(&r, j + 1)? * self.unfoldings[j].transpose())))
            .collect::<Result<Vec<_>>>()?;
        Ok((value, grads))
    }

    fn value(&self, ps: &[Matrix]) -> Result<f64> {
        Ok(0.5 * self.residual(ps)?.norm().powi(2))
    }

    fn lipschitz(&self) -> Vec<f64> {
        self.lipschitz.to_vec()
    }
}

/// Value, per-factor gradients and per-factor Lipschitz constants of the
/// tensor low-rank representation loss.
pub fn tlrr_value_grads(t: &Tensor3, ps: &[Matrix]) -> Result<(f64, Vec<Matrix>, Vec<f64>)> {
    let loss = TlrrLoss::new(t.clone())?;
    let (v, g) = loss.value_grads(ps)?;
    Ok((v, g, loss.lipschitz()))
}
