//! Dense SVD and the weighted singular value thresholding (WSVT) operator.
//!
//! For nondecreasing weights `0 <= w_1 <= ... <= w_s`,
//!
//! ```text
//! argmin_X  scale * sum_i w_i sigma_i(X) + 1/2 ||X - Y||_F^2
//!     = U diag(max(sigma_i(Y) - scale * w_i, 0)) V^T
//! ```
//!
//! where `Y = U diag(sigma(Y)) V^T`. The weighted nuclear norm is nonconvex
//! for increasing weights, but the ordering makes the closed form globally
//! optimal.

use faer::linalg::solvers::Svd;

use crate::error::{Error, Result};
use crate::penalty::ExtendedWeight;
use crate::Matrix;

/// Thin SVD `X = U diag(sigma) V^T` with `sigma` sorted nonincreasing.
///
/// `u` is `m x s`, `v` is `n x s` with `s = min(m, n)`.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

impl SvdFactors {
    pub fn reconstruct(&self) -> Matrix {
        scaled_product(&self.u, &self.sigma, &self.v, self.sigma.len())
    }
}

fn check_finite(x: &Matrix) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric("matrix has non-finite entries".into()))
    }
}

fn faer_svd(x: &Matrix) -> Result<Svd<f64>> {
    check_finite(x)?;
    let (m, n) = x.shape();
    let view = faer::MatRef::from_column_major_slice(x.as_slice(), m, n);
    view.thin_svd()
        .map_err(|e| Error::Decomposition(format!("{e:?}")))
}

/// Copies the first `k` columns of a faer matrix into an nalgebra one.
fn leading_columns(src: faer::MatRef<'_, f64>, k: usize) -> Matrix {
    Matrix::from_fn(src.nrows(), k, |i, j| src[(i, j)])
}

fn spectrum(svd: &Svd<f64>) -> Vec<f64> {
    svd.S().column_vector().iter().map(|&s| s.max(0.0)).collect()
}

/// `U[:, :k] diag(s[:k]) V[:, :k]^T`.
fn scaled_product(u: &Matrix, s: &[f64], v: &Matrix, k: usize) -> Matrix {
    let (m, n) = (u.nrows(), v.nrows());
    if k == 0 {
        return Matrix::zeros(m, n);
    }
    let mut us = u.columns(0, k).into_owned();
    for (j, mut col) in us.column_iter_mut().enumerate() {
        col *= s[j];
    }
    us * v.columns(0, k).transpose()
}

/// Dense SVD of `x`.
pub fn svd(x: &Matrix) -> Result<SvdFactors> {
    let (m, n) = x.shape();
    let s = m.min(n);
    if s == 0 {
        return Ok(SvdFactors {
            u: Matrix::zeros(m, 0),
            sigma: Vec::new(),
            v: Matrix::zeros(n, 0),
        });
    }
    let f = faer_svd(x)?;
    let mut sigma = spectrum(&f);
    let mut u = leading_columns(f.U(), s);
    let mut v = leading_columns(f.V(), s);
    if sigma.windows(2).any(|w| w[0] < w[1]) {
        // backend contract is descending order; restore it if violated
        let mut order: Vec<usize> = (0..s).collect();
        order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));
        u = Matrix::from_fn(m, s, |i, j| u[(i, order[j])]);
        v = Matrix::from_fn(n, s, |i, j| v[(i, order[j])]);
        sigma = order.iter().map(|&k| sigma[k]).collect();
    }
    Ok(SvdFactors { u, sigma, v })
}

/// Singular values only, sorted nonincreasing.
pub fn singular_values(x: &Matrix) -> Result<Vec<f64>> {
    if x.nrows().min(x.ncols()) == 0 {
        return Ok(Vec::new());
    }
    check_finite(x)?;
    let (m, n) = x.shape();
    let view = faer::MatRef::from_column_major_slice(x.as_slice(), m, n);
    let mut s = view
        .singular_values()
        .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    s.iter_mut().for_each(|v| *v = v.max(0.0));
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Number of singular values above `rel_threshold * sigma_1`.
pub fn numerical_rank(sigma: &[f64], rel_threshold: f64) -> usize {
    match sigma.first() {
        Some(&top) if top > 0.0 => sigma.iter().filter(|&&s| s > rel_threshold * top).count(),
        _ => 0,
    }
}

/// Nonnegative, nondecreasing weights attached to sorted singular values.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<ExtendedWeight>);

impl WeightVector {
    pub fn new(weights: Vec<ExtendedWeight>) -> Result<Self> {
        if let Some(i) = weights.windows(2).position(|w| w[0] > w[1]) {
            return Err(Error::Contract(format!(
                "weights must be nondecreasing (index {} -> {})",
                i,
                i + 1
            )));
        }
        Ok(Self(weights))
    }

    pub fn from_values(values: &[f64]) -> Result<Self> {
        let w = values
            .iter()
            .map(|&v| ExtendedWeight::new(v))
            .collect::<Result<Vec<_>>>()?;
        Self::new(w)
    }

    pub fn uniform(value: f64, len: usize) -> Result<Self> {
        Self::new(vec![ExtendedWeight::new(value)?; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[ExtendedWeight] {
        &self.0
    }

    pub fn values(&self) -> Vec<f64> {
        self.0.iter().map(|w| w.value()).collect()
    }
}

/// `max(sigma_i - scale * w_i, 0)`, with infinite weights mapping to zero.
pub(crate) fn shrink(sigma: &[f64], weights: &WeightVector, scale: f64) -> Vec<f64> {
    sigma
        .iter()
        .zip(weights.as_slice())
        .map(|(&s, w)| {
            if w.is_infinite() {
                0.0
            } else {
                (s - scale * w.value()).max(0.0)
            }
        })
        .collect()
}

/// WSVT returning the output matrix together with its singular values.
pub(crate) fn wsvt_with_spectrum(
    y: &Matrix,
    weights: &WeightVector,
    scale: f64,
) -> Result<(Matrix, Vec<f64>)> {
    let (m, n) = y.shape();
    let s = m.min(n);
    if weights.len() != s {
        return Err(Error::Contract(format!(
            "expected {s} weights for a {m}x{n} matrix, got {}",
            weights.len()
        )));
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::Contract(format!(
            "threshold scale must be positive and finite, got {scale}"
        )));
    }
    if s == 0 {
        return Ok((Matrix::zeros(m, n), Vec::new()));
    }
    let f = faer_svd(y)?;
    let sigma = spectrum(&f);
    let shrunk = shrink(&sigma, weights, scale);
    // nonincreasing sigma and nondecreasing w keep the survivors a prefix
    let keep = shrunk.iter().take_while(|&&v| v > 0.0).count();
    if keep == 0 {
        return Ok((Matrix::zeros(m, n), shrunk));
    }
    let u = leading_columns(f.U(), keep);
    let v = leading_columns(f.V(), keep);
    Ok((scaled_product(&u, &shrunk, &v, keep), shrunk))
}

/// Weighted singular value thresholding of `y` with threshold `scale * w_i`.
pub fn wsvt(y: &Matrix, weights: &WeightVector, scale: f64) -> Result<Matrix> {
    wsvt_with_spectrum(y, weights, scale).map(|(x, _)| x)
}

/// Singular value thresholding: WSVT with unit weights and scale `tau`.
pub fn svt(y: &Matrix, tau: f64) -> Result<Matrix> {
    if tau.is_nan() || tau < 0.0 || tau.is_infinite() {
        return Err(Error::Contract(format!(
            "svt threshold must be nonnegative and finite, got {tau}"
        )));
    }
    if tau == 0.0 {
        check_finite(y)?;
        return Ok(y.clone());
    }
    let s = y.nrows().min(y.ncols());
    wsvt(y, &WeightVector::uniform(1.0, s)?, tau)
}

/// `scale * sum_i w_i sigma_i(x) + 1/2 ||x - y||_F^2`.
pub fn wsvt_objective(x: &Matrix, y: &Matrix, weights: &WeightVector, scale: f64) -> Result<f64> {
    let sigma = singular_values(x)?;
    let mut reg = 0.0;
    for (s, w) in sigma.iter().zip(weights.as_slice()) {
        if *s > 0.0 {
            reg += scale * w.value() * s;
        }
    }
    Ok(reg + 0.5 * (x - y).norm_squared())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn randn(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Matrix {
        Matrix::from_fn(m, n, |_, _| rng.sample(StandardNormal))
    }

    fn orthonormality_defect(q: &Matrix) -> f64 {
        let k = q.ncols();
        (q.transpose() * q - Matrix::identity(k, k)).amax()
    }

    #[test]
    fn svd_of_diagonal() {
        let f = svd(&Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0]))).unwrap();
        assert!((f.sigma[0] - 3.0).abs() < 1e-14 && (f.sigma[1] - 1.0).abs() < 1e-14);
        let f = svd(&Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 3.0]))).unwrap();
        assert!((f.sigma[0] - 3.0).abs() < 1e-14 && (f.sigma[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn svd_of_zero() {
        let f = svd(&Matrix::zeros(4, 3)).unwrap();
        assert_eq!(f.sigma, vec![0.0; 3]);
    }

    #[test]
    fn svd_contract_on_random_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &(m, n) in &[(6, 4), (4, 6), (1, 5), (7, 7), (30, 11)] {
            let x = randn(&mut rng, m, n);
            let f = svd(&x).unwrap();
            assert!((f.reconstruct() - &x).norm() <= 1e-10 * (1.0 + x.norm()));
            assert!(f.sigma.windows(2).all(|w| w[0] >= w[1]));
            assert!(orthonormality_defect(&f.u) < 1e-10);
            assert!(orthonormality_defect(&f.v) < 1e-10);
        }
    }

    #[test]
    fn svd_rejects_non_finite() {
        let mut x = Matrix::zeros(2, 2);
        x[(0, 1)] = f64::NAN;
        assert!(matches!(svd(&x), Err(Error::Numeric(_))));
        x[(0, 1)] = f64::INFINITY;
        assert!(matches!(wsvt(&x, &WeightVector::uniform(1.0, 2).unwrap(), 1.0), Err(Error::Numeric(_))));
    }

    #[test]
    fn zero_weights_return_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let y = randn(&mut rng, 5, 7);
        let x = wsvt(&y, &WeightVector::uniform(0.0, 5).unwrap(), 1.0).unwrap();
        assert!((x - y).amax() < 1e-12);
    }

    #[test]
    fn diagonal_example() {
        let y = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0]));
        let x = wsvt(&y, &WeightVector::from_values(&[1.0, 2.0]).unwrap(), 1.0).unwrap();
        let want = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 0.0]));
        assert!((x - want).amax() < 1e-12);

        let x = svt(&y, 2.0).unwrap();
        let want = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 0.0]));
        assert!((x - want).amax() < 1e-12);
    }

    #[test]
    fn svt_zero_threshold_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let y = randn(&mut rng, 4, 3);
        assert_eq!(svt(&y, 0.0).unwrap(), y);
        assert!(svt(&y, -1.0).is_err());
    }

    #[test]
    fn svt_equals_uniform_wsvt() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let y = randn(&mut rng, 6, 5);
            let tau = rng.random_range(0.1..2.0);
            let a = svt(&y, tau).unwrap();
            let b = wsvt(&y, &WeightVector::uniform(1.0, 5).unwrap(), tau).unwrap();
            assert!((a - b).amax() <= 1e-12);
        }
    }

    #[test]
    fn infinite_weights_zero_out_tail() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let y = randn(&mut rng, 6, 6);
        let mut w = vec![ExtendedWeight::new(0.1).unwrap(); 3];
        w.extend([ExtendedWeight::INFINITE; 3]);
        let x = wsvt(&y, &WeightVector::new(w).unwrap(), 0.5).unwrap();
        let s = singular_values(&x).unwrap();
        assert!(s[3..].iter().all(|&v| v < 1e-10));
        assert!(x.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn contract_errors() {
        assert!(matches!(
            WeightVector::from_values(&[2.0, 1.0]),
            Err(Error::Contract(_))
        ));
        assert!(matches!(
            WeightVector::from_values(&[-1.0, 1.0]),
            Err(Error::Contract(_))
        ));
        let y = Matrix::identity(3, 3);
        assert!(wsvt(&y, &WeightVector::uniform(1.0, 2).unwrap(), 1.0).is_err());
        assert!(wsvt(&y, &WeightVector::uniform(1.0, 3).unwrap(), 0.0).is_err());
    }

    #[test]
    fn orthogonal_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let y = randn(&mut rng, 5, 4);
            let q = svd(&randn(&mut rng, 5, 5)).unwrap().u;
            let r = svd(&randn(&mut rng, 4, 4)).unwrap().u;
            let mut w: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..1.5)).collect();
            w.sort_by(f64::total_cmp);
            let w = WeightVector::from_values(&w).unwrap();
            let lhs = wsvt(&(&q * &y * r.transpose()), &w, 0.8).unwrap();
            let rhs = &q * wsvt(&y, &w, 0.8).unwrap() * r.transpose();
            assert!((lhs - rhs).amax() < 1e-9);
        }
    }

    #[test]
    fn rank_bounded_by_surviving_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..20 {
            let y = randn(&mut rng, 6, 6);
            let mut w: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..3.0)).collect();
            w.sort_by(f64::total_cmp);
            let wv = WeightVector::from_values(&w).unwrap();
            let sy = singular_values(&y).unwrap();
            let bound = sy.iter().zip(&w).filter(|(s, w)| **s > 0.7 * **w).count();
            let x = wsvt(&y, &wv, 0.7).unwrap();
            let rank = numerical_rank(&singular_values(&x).unwrap(), 1e-10);
            assert!(rank <= bound);
        }
    }
}
