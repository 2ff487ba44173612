//! Seeded synthetic low-rank completion instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::{MatrixCompletionProblem, ObservationMask};
use crate::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub m: usize,
    pub n: usize,
    pub rank: usize,
    pub sample_rate: f64,
    pub noise_sigma: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            m: 150,
            n: 150,
            rank: 5,
            sample_rate: 0.5,
            noise_sigma: 0.0,
            trials: 20,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::Parameter(format!("empty size {}x{}", self.m, self.n)));
        }
        if self.rank > self.m.min(self.n) {
            return Err(Error::Parameter(format!(
                "rank {} exceeds min({}, {})",
                self.rank, self.m, self.n
            )));
        }
        if !(self.sample_rate > 0.0 && self.sample_rate <= 1.0) {
            return Err(Error::Parameter(format!(
                "sample rate must lie in (0, 1], got {}",
                self.sample_rate
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Parameter(format!(
                "noise level must be nonnegative, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }

    /// `round(sample_rate * m * n)`.
    pub fn observed_count(&self) -> usize {
        (self.sample_rate * (self.m * self.n) as f64).round() as usize
    }
}

/// Ground truth, sampling pattern and (possibly noisy) observations.
#[derive(Debug, Clone)]
pub struct SyntheticInstance {
    pub truth: Matrix,
    pub mask: ObservationMask,
    /// `P_Omega(M) + noise` on the observed entries, zero elsewhere.
    pub observed: Matrix,
}

impl SyntheticInstance {
    pub fn problem(&self) -> Result<MatrixCompletionProblem> {
        MatrixCompletionProblem::new(&self.observed, self.mask.clone())
    }
}

/// Seed for one trial of a grid, from the master seed, rank and trial index.
///
/// The penalty is deliberately not mixed in, so every penalty in a grid
/// sees the same instances.
pub fn trial_seed(master: u64, rank: usize, trial: usize) -> u64 {
    // splitmix64 over the packed coordinates
    let mut z = master
        ^ (rank as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (trial as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `M = M_L M_R` with standard normal factors, a uniformly random mask of
/// exactly [`SyntheticSpec::observed_count`] entries, and Gaussian noise of
/// level `noise_sigma` on the observed entries. Uses `spec.seed` directly.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticInstance> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (m, n, r) = (spec.m, spec.n, spec.rank);
    let left = Matrix::from_fn(m, r, |_, _| rng.sample(StandardNormal));
    let right = Matrix::from_fn(r, n, |_, _| rng.sample(StandardNormal));
    let truth = &left * &right;
    let mut linear = rand::seq::index::sample(&mut rng, m * n, spec.observed_count()).into_vec();
    linear.sort_unstable();
    let mask = ObservationMask::from_sorted_linear(m, n, linear);
    let mut observed = mask.project(&truth)?;
    if spec.noise_sigma > 0.0 {
        let values = observed.as_mut_slice();
        for &k in mask.linear_indices() {
            let e: f64 = rng.sample(StandardNormal);
            values[k] += spec.noise_sigma * e;
        }
    }
    Ok(SyntheticInstance {
        truth,
        mask,
        observed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prox::{numerical_rank, singular_values};

    #[test]
    fn rank_one_truth() {
        let spec = SyntheticSpec {
            m: 12,
            n: 9,
            rank: 1,
            ..SyntheticSpec::default()
        };
        let inst = generate_synthetic(&spec).unwrap();
        assert_eq!(numerical_rank(&singular_values(&inst.truth).unwrap(), 1e-10), 1);
    }

    #[test]
    fn mask_count_is_exact() {
        for (rate, want) in [(0.5, 54), (1.0, 108), (0.3, 32), (0.01, 1)] {
            let spec = SyntheticSpec {
                m: 12,
                n: 9,
                rank: 2,
                sample_rate: rate,
                ..SyntheticSpec::default()
            };
            let inst = generate_synthetic(&spec).unwrap();
            assert_eq!(inst.mask.len(), want, "rate {rate}");
        }
    }

    #[test]
    fn full_rate_gives_full_mask() {
        let spec = SyntheticSpec {
            m: 7,
            n: 4,
            sample_rate: 1.0,
            rank: 2,
            ..SyntheticSpec::default()
        };
        let inst = generate_synthetic(&spec).unwrap();
        assert_eq!(inst.mask, ObservationMask::full(7, 4));
        assert_eq!(inst.observed, inst.truth);
    }

    #[test]
    fn regeneration_is_identical() {
        let spec = SyntheticSpec {
            m: 20,
            n: 30,
            rank: 3,
            noise_sigma: 0.1,
            seed: 99,
            ..SyntheticSpec::default()
        };
        let a = generate_synthetic(&spec).unwrap();
        let b = generate_synthetic(&spec).unwrap();
        assert_eq!(a.truth.as_slice(), b.truth.as_slice());
        assert_eq!(a.observed.as_slice(), b.observed.as_slice());
        assert_eq!(a.mask, b.mask);
    }

    #[test]
    fn noise_only_on_observed_entries() {
        let spec = SyntheticSpec {
            m: 10,
            n: 10,
            rank: 2,
            noise_sigma: 0.1,
            seed: 5,
            ..SyntheticSpec::default()
        };
        let inst = generate_synthetic(&spec).unwrap();
        let clean = inst.mask.project(&inst.truth).unwrap();
        let diff = &inst.observed - &clean;
        assert!(inst.mask.complement().project(&diff).unwrap().amax() == 0.0);
        assert!(diff.norm() > 0.0);
    }

    #[test]
    fn invalid_specs() {
        let bad_rank = SyntheticSpec {
            m: 3,
            n: 4,
            rank: 4,
            ..SyntheticSpec::default()
        };
        assert!(generate_synthetic(&bad_rank).is_err());
        let bad_rate = SyntheticSpec {
            sample_rate: 0.0,
            ..SyntheticSpec::default()
        };
        assert!(bad_rate.validate().is_err());
    }

    #[test]
    fn trial_seeds_differ() {
        let mut seen = std::collections::HashSet::new();
        for r in 0..40 {
            for t in 0..40 {
                assert!(seen.insert(trial_seed(7, r, t)));
            }
        }
        assert_ne!(trial_seed(1, 3, 4), trial_seed(2, 3, 4));
    }
}
