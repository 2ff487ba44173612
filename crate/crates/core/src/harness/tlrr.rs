//! Tensor low-rank representation driven by IRNN-PS.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multiblock::{irnn_ps_solve, BlockLoss, BlockProblem, BlockSolverConfig};
use crate::penalty::PenaltyParams;
use crate::problems::{Tensor3, TlrrLoss};
use crate::solver::{SolverTrace, WeightRule};
use crate::Matrix;

#[derive(Debug, Clone)]
pub struct TlrrOutput {
    pub factors: Vec<Matrix>,
    pub trace: SolverTrace,
    pub summary: TlrrSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TlrrSummary {
    pub penalty: String,
    pub lambdas: [f64; 3],
    pub mus: Vec<f64>,
    pub lipschitz: Vec<f64>,
    pub final_objective: f64,
    pub loss: f64,
    pub factor_ranks: Vec<usize>,
    pub iterations: usize,
}

/// Solves `min sum_j sum_i g(sigma_i(P_j); lambda_j) + 1/2 ||X - sum_j X x_j P_j||^2`
/// from zero factors. With the nuclear penalty this is the convex problem.
///
/// Penalties whose weight is infinite at zero (Lp) start from one gradient
/// step instead, since zero factors are a fixed point for them.
pub fn run_tlrr(
    tensor: &Tensor3,
    penalty: &PenaltyParams,
    lambdas: [f64; 3],
    config: &BlockSolverConfig,
) -> Result<TlrrOutput> {
    let loss = TlrrLoss::new(tensor.clone())?;
    let rules = lambdas
        .iter()
        .map(|&l| Ok(WeightRule::from(penalty.with_lambda(l)?)))
        .collect::<Result<Vec<_>>>()?;
    let pins_zero = rules.iter().any(WeightRule::pins_zero);
    let lipschitz = loss.lipschitz();
    let problem = BlockProblem::new(loss, rules)?;
    let mus = config.mus.clone().unwrap_or_else(|| problem.default_mus());
    if mus.len() != 3 {
        return Err(Error::Config(format!("expected 3 mus, got {}", mus.len())));
    }
    let zeros: Vec<Matrix> = tensor.dims().iter().map(|&d| Matrix::zeros(d, d)).collect();
    let x0 = if pins_zero {
        let (_, grads) = problem.loss.value_grads(&zeros)?;
        grads.iter().zip(&mus).map(|(g, mu)| -g / *mu).collect()
    } else {
        zeros
    };
    let config = BlockSolverConfig {
        mus: Some(mus.clone()),
        ..config.clone()
    };
    let (state, trace) = irnn_ps_solve(&problem, x0, &config)?;
    let loss_value = problem.loss.value(&state.x)?;
    let factor_ranks = state
        .x
        .iter()
        .map(|p| {
            let s = crate::prox::singular_values(p)?;
            Ok(crate::prox::numerical_rank(&s, crate::solver::RANK_THRESHOLD))
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = TlrrSummary {
        penalty: penalty.kind.name().to_string(),
        lambdas,
        mus,
        lipschitz,
        final_objective: trace.final_objective().unwrap_or(f64::NAN),
        loss: loss_value,
        factor_ranks,
        iterations: trace.iterations,
    };
    Ok(TlrrOutput {
        factors: state.x,
        trace,
        summary,
    })
}
