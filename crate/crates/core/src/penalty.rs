//! Concave surrogates of the L0 penalty, applied to singular values.
//!
//! Every penalty `g` here is continuous, concave and nondecreasing on
//! `[0, inf)` with `g(0) = 0`. Its supergradients are therefore nonnegative
//! and antimonotone, which is what makes the reweighted nuclear-norm step
//! solvable in closed form.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default penalty scale.
pub const DEFAULT_LAMBDA: f64 = 1.0;
/// Default shape parameter for the kinds that use one.
pub const DEFAULT_GAMMA: f64 = 1.5;
/// Default exponent for [`PenaltyKind::Lp`].
pub const DEFAULT_P: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum PenaltyKind {
    /// `lambda * theta^p`
    Lp,
    /// Smoothly clipped absolute deviation.
    Scad,
    /// `lambda * log(gamma*theta + 1) / log(gamma + 1)`
    Logarithm,
    /// Minimax concave penalty.
    Mcp,
    /// `lambda * min(theta, gamma)`
    CappedL1,
    /// Exponential-type penalty.
    Etp,
    /// `lambda * theta / (theta + gamma)`
    Geman,
    /// `lambda * (1 - exp(-theta / gamma))`
    Laplace,
    /// `lambda * theta`, i.e. the (convex) nuclear norm.
    Absolute,
}

impl PenaltyKind {
    pub const ALL: [PenaltyKind; 9] = [
        PenaltyKind::Lp,
        PenaltyKind::Scad,
        PenaltyKind::Logarithm,
        PenaltyKind::Mcp,
        PenaltyKind::CappedL1,
        PenaltyKind::Etp,
        PenaltyKind::Geman,
        PenaltyKind::Laplace,
        PenaltyKind::Absolute,
    ];

    /// Lowercase identifier used on the command line and in reports.
    pub fn name(self) -> &'static str {
        match self {
            PenaltyKind::Lp => "lp",
            PenaltyKind::Scad => "scad",
            PenaltyKind::Logarithm => "log",
            PenaltyKind::Mcp => "mcp",
            PenaltyKind::CappedL1 => "capped-l1",
            PenaltyKind::Etp => "etp",
            PenaltyKind::Geman => "geman",
            PenaltyKind::Laplace => "laplace",
            PenaltyKind::Absolute => "nuclear",
        }
    }

    pub fn uses_gamma(self) -> bool {
        !matches!(self, PenaltyKind::Lp | PenaltyKind::Absolute)
    }

    pub fn is_convex(self) -> bool {
        self == PenaltyKind::Absolute
    }
}

impl fmt::Display for PenaltyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PenaltyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let kind = match s.trim().to_ascii_lowercase().as_str() {
            "lp" => PenaltyKind::Lp,
            "scad" => PenaltyKind::Scad,
            "log" | "logarithm" => PenaltyKind::Logarithm,
            "mcp" => PenaltyKind::Mcp,
            "capped-l1" | "cappedl1" => PenaltyKind::CappedL1,
            "etp" => PenaltyKind::Etp,
            "geman" => PenaltyKind::Geman,
            "laplace" => PenaltyKind::Laplace,
            "nuclear" | "absolute" => PenaltyKind::Absolute,
            other => return Err(Error::Parameter(format!("unknown penalty '{other}'"))),
        };
        Ok(kind)
    }
}

impl From<PenaltyKind> for String {
    fn from(kind: PenaltyKind) -> Self {
        kind.name().to_owned()
    }
}

impl TryFrom<String> for PenaltyKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// A penalty kind together with its parameters.
///
/// `gamma` is ignored by [`PenaltyKind::Lp`] and [`PenaltyKind::Absolute`];
/// `p` is only read by [`PenaltyKind::Lp`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyParams {
    pub kind: PenaltyKind,
    pub lambda: f64,
    pub gamma: f64,
    pub p: f64,
}

impl PenaltyParams {
    /// Builds and validates a parameter set.
    pub fn new(kind: PenaltyKind, lambda: f64, gamma: f64, p: f64) -> Result<Self> {
        let params = Self {
            kind,
            lambda,
            gamma,
            p,
        };
        params.validate()?;
        Ok(params)
    }

    /// The kind with `lambda = 1`, `gamma = 1.5`, `p = 0.5`.
    pub fn with_defaults(kind: PenaltyKind) -> Self {
        Self {
            kind,
            lambda: DEFAULT_LAMBDA,
            gamma: DEFAULT_GAMMA,
            p: DEFAULT_P,
        }
    }

    pub fn nuclear(lambda: f64) -> Result<Self> {
        Self::new(PenaltyKind::Absolute, lambda, DEFAULT_GAMMA, DEFAULT_P)
    }

    pub fn lp(lambda: f64, p: f64) -> Result<Self> {
        Self::new(PenaltyKind::Lp, lambda, DEFAULT_GAMMA, p)
    }

    /// Same shape parameters, different scale. Used by continuation.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.kind, lambda, self.gamma, self.p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::Parameter(format!(
                "lambda must be positive and finite, got {}",
                self.lambda
            )));
        }
        match self.kind {
            PenaltyKind::Lp => {
                if !(self.p > 0.0 && self.p < 1.0) {
                    return Err(Error::Parameter(format!(
                        "lp exponent must lie in (0, 1), got {}",
                        self.p
                    )));
                }
            }
            PenaltyKind::Absolute => {}
            PenaltyKind::Scad => {
                // the middle branch divides by (gamma - 1)
                if !(self.gamma.is_finite() && self.gamma > 1.0) {
                    return Err(Error::Parameter(format!(
                        "scad requires gamma > 1, got {}",
                        self.gamma
                    )));
                }
            }
            _ => {
                if !(self.gamma.is_finite() && self.gamma > 0.0) {
                    return Err(Error::Parameter(format!(
                        "{} requires gamma > 0, got {}",
                        self.kind, self.gamma
                    )));
                }
            }
        }
        Ok(())
    }

    /// Evaluates `g(theta)`.
    pub fn value(&self, theta: f64) -> Result<f64> {
        self.validate()?;
        check_theta(theta)?;
        Ok(self.value_unchecked(theta))
    }

    /// Returns the canonical supergradient of `g` at `theta`.
    pub fn supergradient(&self, theta: f64) -> Result<ExtendedWeight> {
        self.validate()?;
        check_theta(theta)?;
        Ok(self.supergradient_unchecked(theta))
    }

    pub(crate) fn value_unchecked(&self, theta: f64) -> f64 {
        let PenaltyParams {
            lambda, gamma, p, ..
        } = *self;
        match self.kind {
            PenaltyKind::Lp => lambda * theta.powf(p),
            PenaltyKind::Scad => {
                if theta <= lambda {
                    lambda * theta
                } else if theta <= gamma * lambda {
                    (-theta * theta + 2.0 * gamma * lambda * theta - lambda * lambda)
                        / (2.0 * (gamma - 1.0))
                } else {
                    lambda * lambda * (gamma + 1.0) / 2.0
                }
            }
            PenaltyKind::Logarithm => lambda * (gamma * theta).ln_1p() / gamma.ln_1p(),
            PenaltyKind::Mcp => {
                if theta < gamma * lambda {
                    lambda * theta - theta * theta / (2.0 * gamma)
                } else {
                    0.5 * gamma * lambda * lambda
                }
            }
            PenaltyKind::CappedL1 => {
                if theta < gamma {
                    lambda * theta
                } else {
                    lambda * gamma
                }
            }
            PenaltyKind::Etp => lambda * (-(-gamma * theta).exp_m1()) / (-(-gamma).exp_m1()),
            PenaltyKind::Geman => lambda * theta / (theta + gamma),
            PenaltyKind::Laplace => -lambda * (-theta / gamma).exp_m1(),
            PenaltyKind::Absolute => lambda * theta,
        }
    }

    pub(crate) fn supergradient_unchecked(&self, theta: f64) -> ExtendedWeight {
        let PenaltyParams {
            lambda, gamma, p, ..
        } = *self;
        let v = match self.kind {
            PenaltyKind::Lp => {
                if theta == 0.0 {
                    return ExtendedWeight::INFINITE;
                }
                lambda * p * theta.powf(p - 1.0)
            }
            PenaltyKind::Scad => {
                if theta <= lambda {
                    lambda
                } else if theta <= gamma * lambda {
                    (gamma * lambda - theta) / (gamma - 1.0)
                } else {
                    0.0
                }
            }
            PenaltyKind::Logarithm => gamma * lambda / ((gamma * theta + 1.0) * gamma.ln_1p()),
            PenaltyKind::Mcp => {
                if theta < gamma * lambda {
                    lambda - theta / gamma
                } else {
                    0.0
                }
            }
            // at theta == gamma the superdifferential is [0, lambda]; take lambda
            PenaltyKind::CappedL1 => {
                if theta <= gamma {
                    lambda
                } else {
                    0.0
                }
            }
            PenaltyKind::Etp => {
                lambda * gamma * (-gamma * theta).exp() / (-(-gamma).exp_m1())
            }
            PenaltyKind::Geman => lambda * gamma / ((theta + gamma) * (theta + gamma)),
            PenaltyKind::Laplace => lambda / gamma * (-theta / gamma).exp(),
            PenaltyKind::Absolute => lambda,
        };
        // guard against tiny negative rounding in the SCAD/MCP linear pieces
        ExtendedWeight(v.max(0.0))
    }

    /// `sum_i g(sigma_i)`.
    pub fn total(&self, sigma: &[f64]) -> f64 {
        sigma.iter().map(|&s| self.value_unchecked(s.max(0.0))).sum()
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if theta.is_nan() || theta < 0.0 {
        return Err(Error::Domain(format!(
            "penalty argument must be nonnegative, got {theta}"
        )));
    }
    if theta.is_infinite() {
        return Err(Error::Domain("penalty argument must be finite".into()));
    }
    Ok(())
}

/// A nonnegative weight that may be `+inf`.
///
/// Only the Lp penalty at zero produces an infinite weight.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct ExtendedWeight(f64);

impl ExtendedWeight {
    pub const ZERO: ExtendedWeight = ExtendedWeight(0.0);
    pub const INFINITE: ExtendedWeight = ExtendedWeight(f64::INFINITY);

    /// Fails on NaN or negative input.
    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value < 0.0 {
            return Err(Error::Contract(format!(
                "weights must be nonnegative, got {value}"
            )));
        }
        Ok(ExtendedWeight(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }
}

impl From<ExtendedWeight> for f64 {
    fn from(w: ExtendedWeight) -> f64 {
        w.0
    }
}

pub fn penalty_value(params: &PenaltyParams, theta: f64) -> Result<f64> {
    params.value(theta)
}

pub fn penalty_supergradient(params: &PenaltyParams, theta: f64) -> Result<ExtendedWeight> {
    params.supergradient(theta)
}

/// Checks that `sigma` is finite, nonnegative and sorted nonincreasing.
pub(crate) fn check_sorted_spectrum(sigma: &[f64]) -> Result<()> {
    for (i, &s) in sigma.iter().enumerate() {
        if !s.is_finite() || s < 0.0 {
            return Err(Error::Contract(format!(
                "singular value {i} must be finite and nonnegative, got {s}"
            )));
        }
    }
    if let Some(i) = sigma.windows(2).position(|w| w[0] < w[1]) {
        return Err(Error::Contract(format!(
            "singular values must be sorted nonincreasing (index {} -> {})",
            i,
            i + 1
        )));
    }
    Ok(())
}

/// Per-singular-value weights `w_i = dg(sigma_i)`.
///
/// For sorted input the result is nonnegative and nondecreasing, and equal
/// singular values get equal weights.
pub fn weights_from_singular_values(
    params: &PenaltyParams,
    sigma: &[f64],
) -> Result<Vec<ExtendedWeight>> {
    params.validate()?;
    check_sorted_spectrum(sigma)?;
    Ok(sigma
        .iter()
        .map(|&s| params.supergradient_unchecked(s))
        .collect())
}
