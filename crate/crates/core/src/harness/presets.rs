//! Solver settings for the completion experiments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::penalty::{PenaltyKind, PenaltyParams};
use crate::problems::{MatrixCompletionProblem, SmoothLoss};
use crate::solver::{
    continuation_solve, ContinuationSchedule, Initialization, SolverConfig, SolverTrace,
    WeightRule, DEFAULT_MAX_ITER, DEFAULT_MU_FACTOR, DEFAULT_TOL,
};
use crate::Matrix;

/// Continuation and stopping settings for a completion solve.
///
/// `lambda0` is either fixed or `lambda0_scale * max|P_Omega(M)|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolvePreset {
    pub lambda0: Option<f64>,
    pub lambda0_scale: f64,
    pub eta: f64,
    pub lambda_t_factor: f64,
    pub mu_factor: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub fit_tol: Option<f64>,
    pub warm_start: bool,
    pub initialization: Initialization,
}

impl SolvePreset {
    /// `lambda0 = max|P_Omega(M)|`, `eta = 0.7`, `lambda_t = 1e-5 lambda0`.
    pub fn noise_free() -> Self {
        Self {
            lambda0: None,
            lambda0_scale: 1.0,
            eta: 0.7,
            lambda_t_factor: 1e-5,
            mu_factor: DEFAULT_MU_FACTOR,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            fit_tol: Some(1e-5),
            warm_start: true,
            initialization: Initialization::Auto,
        }
    }

    /// `lambda0 = 10 max|P_Omega(M)|`, `lambda_t = 0.1 lambda0`.
    pub fn noisy() -> Self {
        Self {
            lambda0_scale: 10.0,
            lambda_t_factor: 0.1,
            ..Self::noise_free()
        }
    }

    /// Noise-free preset when `noise_sigma == 0`, noisy otherwise.
    pub fn for_noise(noise_sigma: f64) -> Self {
        if noise_sigma > 0.0 {
            Self::noisy()
        } else {
            Self::noise_free()
        }
    }

    pub fn schedule(&self, problem: &MatrixCompletionProblem) -> Result<ContinuationSchedule> {
        let lambda0 = match self.lambda0 {
            Some(l) => l,
            None => {
                let peak = problem.observed_max_abs();
                if peak == 0.0 {
                    return Err(Error::Domain(
                        "automatic lambda0 needs a nonzero observation".into(),
                    ));
                }
                self.lambda0_scale * peak
            }
        };
        ContinuationSchedule::new(lambda0, self.eta, self.lambda_t_factor * lambda0, self.warm_start)
    }

    pub fn solver_config(&self, problem: &MatrixCompletionProblem) -> Result<SolverConfig> {
        Ok(SolverConfig {
            mu: self.mu_factor * problem.lipschitz(),
            tol: self.tol,
            max_iter: self.max_iter,
            fit_tol: self.fit_tol,
            continuation: Some(self.schedule(problem)?),
        })
    }
}

/// Shape parameters used for each penalty in the completion experiments;
/// the scale is set by continuation.
pub fn benchmark_penalty(kind: PenaltyKind) -> PenaltyParams {
    let (gamma, p) = match kind {
        PenaltyKind::Lp => (1.5, 0.5),
        PenaltyKind::Scad => (3.0, 0.5),
        PenaltyKind::Logarithm => (0.3, 0.5),
        PenaltyKind::Mcp => (3.0, 0.5),
        PenaltyKind::Etp => (0.1, 0.5),
        _ => (1.5, 0.5),
    };
    PenaltyParams::new(kind, 1.0, gamma, p).expect("benchmark parameters are valid")
}

/// Runs the continuation solve of `preset` on a completion problem.
pub fn solve_completion(
    problem: &MatrixCompletionProblem,
    penalty: &PenaltyParams,
    preset: &SolvePreset,
) -> Result<(Matrix, Vec<SolverTrace>)> {
    let config = preset.solver_config(problem)?;
    let rule = WeightRule::from(*penalty);
    let x0 = preset.initialization.initial_point(problem, &rule, config.mu)?;
    continuation_solve(problem, &rule, &x0, &config)
}
