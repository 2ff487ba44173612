//! Recovery metrics.

use crate::error::{shape_mismatch, Error, Result};
use crate::Matrix;

/// Relative errors strictly below this count as a successful recovery.
pub const SUCCESS_THRESHOLD: f64 = 1e-3;

/// `||x_hat - m||_F / ||m||_F`.
pub fn relative_error(x_hat: &Matrix, m: &Matrix) -> Result<f64> {
    if x_hat.shape() != m.shape() {
        return Err(shape_mismatch("estimate", m.shape(), x_hat.shape()));
    }
    let denom = m.norm();
    if denom == 0.0 {
        return Err(Error::Domain("reference matrix has zero norm".into()));
    }
    Ok((x_hat - m).norm() / denom)
}

/// Fraction of `errors` strictly below `threshold`.
pub fn frequency_of_success(errors: &[f64], threshold: f64) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::Domain("no trials to score".into()));
    }
    let hits = errors.iter().filter(|&&e| e < threshold).count();
    Ok(hits as f64 / errors.len() as f64)
}

/// Peak signal-to-noise ratio in dB for 8-bit data, averaged over all
/// samples. Identical inputs give `f64::INFINITY`.
pub fn psnr(x_hat: &[f64], reference: &[f64]) -> Result<f64> {
    if x_hat.len() != reference.len() {
        return Err(Error::Contract(format!(
            "image sizes differ: {} vs {} samples",
            x_hat.len(),
            reference.len()
        )));
    }
    if reference.is_empty() {
        return Err(Error::Domain("empty image".into()));
    }
    let sse: f64 = x_hat.iter().zip(reference).map(|(a, b)| (a - b) * (a - b)).sum();
    let mse = sse / reference.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (255.0 * 255.0 / mse).log10())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_error_examples() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, -2.0, 3.0, 0.5]);
        assert_eq!(relative_error(&m, &m).unwrap(), 0.0);
        assert!((relative_error(&Matrix::zeros(2, 2), &m).unwrap() - 1.0).abs() < 1e-15);
        assert!((relative_error(&(&m * 2.0), &m).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(relative_error(&m, &Matrix::zeros(2, 2)), Err(Error::Domain(_))));
        assert!(relative_error(&Matrix::zeros(2, 3), &m).is_err());
    }

    #[test]
    fn frequency_examples() {
        assert_eq!(frequency_of_success(&[1e-5, 1e-4], SUCCESS_THRESHOLD).unwrap(), 1.0);
        assert_eq!(frequency_of_success(&[0.1, 1e-3], SUCCESS_THRESHOLD).unwrap(), 0.0);
        let errs = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        assert!((frequency_of_success(&errs, SUCCESS_THRESHOLD).unwrap() - 0.7).abs() < 1e-15);
        assert!(frequency_of_success(&[], SUCCESS_THRESHOLD).is_err());
    }

    #[test]
    fn psnr_examples() {
        let a = [10.0, 20.0, 30.0, 40.0];
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        let b = [11.0, 19.0, 31.0, 39.0];
        assert!((psnr(&b, &a).unwrap() - 48.130_803_608_679_1).abs() < 1e-9);
        let c = [265.0, 275.0, 285.0, 295.0];
        assert!(psnr(&c, &a).unwrap().abs() < 1e-12);
        assert!(psnr(&a[..3], &a).is_err());
    }

    #[test]
    fn psnr_matches_direct_formula() {
        let a: Vec<f64> = (0..300).map(|i| (i * 37 % 256) as f64).collect();
        let b: Vec<f64> = (0..300).map(|i| (i * 91 % 256) as f64).collect();
        let mse = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / 300.0;
        let want = 20.0 * 255f64.log10() - 10.0 * mse.log10();
        assert!((psnr(&a, &b).unwrap() - want).abs() < 1e-10);
    }
}
