use crate::error::{shape_mismatch, Error, Result};
use crate::Matrix;

/// The set of observed positions of an `m x n` matrix.
///
/// Entries are kept as sorted column-major linear indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationMask {
    rows: usize,
    cols: usize,
    linear: Vec<usize>,
}

impl ObservationMask {
    /// Fails on out-of-range or duplicated positions.
    pub fn new(rows: usize, cols: usize, indices: &[(usize, usize)]) -> Result<Self> {
        let mut linear = Vec::with_capacity(indices.len());
        for &(i, j) in indices {
            if i >= rows || j >= cols {
                return Err(Error::Contract(format!(
                    "observed index ({i}, {j}) outside a {rows}x{cols} matrix"
                )));
            }
            linear.push(i + j * rows);
        }
        linear.sort_unstable();
        if linear.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Contract("observed indices contain duplicates".into()));
        }
        Ok(Self { rows, cols, linear })
    }

    pub(crate) fn from_sorted_linear(rows: usize, cols: usize, linear: Vec<usize>) -> Self {
        debug_assert!(linear.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(linear.last().is_none_or(|&l| l < rows * cols));
        Self { rows, cols, linear }
    }

    pub fn full(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            linear: (0..rows * cols).collect(),
        }
    }

    pub fn empty(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            linear: Vec::new(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Number of observed entries.
    pub fn len(&self) -> usize {
        self.linear.len()
    }

    pub fn is_empty(&self) -> bool {
        self.linear.is_empty()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i < self.rows && j < self.cols && self.linear.binary_search(&(i + j * self.rows)).is_ok()
    }

    /// Observed `(row, col)` pairs in column-major order.
    pub fn indices(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.linear.iter().map(|&l| (l % self.rows, l / self.rows))
    }

    pub(crate) fn linear_indices(&self) -> &[usize] {
        &self.linear
    }

    /// `P_Omega(x)`: keeps observed entries, zeros the rest.
    pub fn project(&self, x: &Matrix) -> Result<Matrix> {
        if x.shape() != self.shape() {
            return Err(shape_mismatch("project_mask", self.shape(), x.shape()));
        }
        let mut out = Matrix::zeros(self.rows, self.cols);
        let src = x.as_slice();
        let dst = out.as_mut_slice();
        for &l in &self.linear {
            dst[l] = src[l];
        }
        Ok(out)
    }

    /// The unobserved positions.
    pub fn complement(&self) -> ObservationMask {
        let mut linear = Vec::with_capacity(self.rows * self.cols - self.len());
        let mut it = self.linear.iter().peekable();
        for l in 0..self.rows * self.cols {
            if it.peek() == Some(&&l) {
                it.next();
            } else {
                linear.push(l);
            }
        }
        Self::from_sorted_linear(self.rows, self.cols, linear)
    }
}

pub fn project_mask(x: &Matrix, mask: &ObservationMask) -> Result<Matrix> {
    mask.project(x)
}
