//! Iteratively reweighted nuclear norm (IRNN) minimization of
//!
//! ```text
//! F(X) = sum_i g(sigma_i(X)) + f(X)
//! ```
//!
//! Each iteration linearizes `g` at the current singular values (giving
//! nondecreasing weights) and `f` at the current iterate (adding a proximal
//! term with weight `mu > L(f)`), then solves the resulting weighted problem
//! exactly with WSVT. The objective is nonincreasing along the iterates.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::penalty::{check_sorted_spectrum, ExtendedWeight, PenaltyParams};
use crate::problems::SmoothLoss;
use crate::prox::{numerical_rank, singular_values, wsvt, wsvt_with_spectrum, WeightVector};
use crate::Matrix;

/// Relative threshold for counting nonzero singular values in traces.
pub const RANK_THRESHOLD: f64 = 1e-8;
/// Ratio `mu / L(f)` used when the caller does not choose `mu`.
pub const DEFAULT_MU_FACTOR: f64 = 1.1;
pub const DEFAULT_TOL: f64 = 1e-7;
pub const DEFAULT_MAX_ITER: usize = 100;

// Relative slack tolerated when rounding makes a computed weight sequence
// decrease by a few ulps.
const WEIGHT_ROUNDING_SLACK: f64 = 1e-12;

/// How per-singular-value weights are produced from a sorted spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule")]
pub enum WeightRule {
    /// The same penalty on every singular value.
    Penalty(PenaltyParams),
    /// Penalty `g_i` on the `i`-th largest singular value.
    PerIndex(Vec<PenaltyParams>),
    /// Truncated nuclear norm: `scale * sum_{i > rank} sigma_i`.
    Truncated { rank: usize, scale: f64 },
}

impl From<PenaltyParams> for WeightRule {
    fn from(p: PenaltyParams) -> Self {
        WeightRule::Penalty(p)
    }
}

impl WeightRule {
    pub fn truncated(rank: usize) -> Self {
        WeightRule::Truncated { rank, scale: 1.0 }
    }

    /// Replaces the regularization scale (lambda for penalties).
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Ok(match self {
            WeightRule::Penalty(p) => WeightRule::Penalty(p.with_lambda(lambda)?),
            WeightRule::PerIndex(ps) => WeightRule::PerIndex(
                ps.iter()
                    .map(|p| p.with_lambda(lambda))
                    .collect::<Result<_>>()?,
            ),
            WeightRule::Truncated { rank, .. } => {
                if !(lambda.is_finite() && lambda > 0.0) {
                    return Err(Error::Parameter(format!("scale must be positive, got {lambda}")));
                }
                WeightRule::Truncated {
                    rank: *rank,
                    scale: lambda,
                }
            }
        })
    }

    /// Current regularization scale.
    pub fn lambda(&self) -> Option<f64> {
        match self {
            WeightRule::Penalty(p) => Some(p.lambda),
            WeightRule::PerIndex(ps) => ps.first().map(|p| p.lambda),
            WeightRule::Truncated { scale, .. } => Some(*scale),
        }
    }

    /// True when a zero singular value gets an infinite weight, so that a
    /// zero iterate can never move.
    pub fn pins_zero(&self) -> bool {
        match self {
            WeightRule::Penalty(p) => p.supergradient_unchecked(0.0).is_infinite(),
            WeightRule::PerIndex(ps) => ps.iter().any(|p| p.supergradient_unchecked(0.0).is_infinite()),
            WeightRule::Truncated { .. } => false,
        }
    }

    fn validate(&self, len: usize) -> Result<()> {
        match self {
            WeightRule::Penalty(p) => p.validate(),
            WeightRule::PerIndex(ps) => {
                if ps.len() < len {
                    return Err(Error::Contract(format!(
                        "{} per-index penalties for {len} singular values",
                        ps.len()
                    )));
                }
                ps.iter().try_for_each(PenaltyParams::validate)
            }
            WeightRule::Truncated { scale, .. } => {
                if scale.is_finite() && *scale > 0.0 {
                    Ok(())
                } else {
                    Err(Error::Parameter(format!("scale must be positive, got {scale}")))
                }
            }
        }
    }

    /// `sum_i g_i(sigma_i)`.
    pub fn penalty_total(&self, sigma: &[f64]) -> f64 {
        match self {
            WeightRule::Penalty(p) => p.total(sigma),
            WeightRule::PerIndex(ps) => sigma
                .iter()
                .zip(ps)
                .map(|(&s, p)| p.value_unchecked(s.max(0.0)))
                .sum(),
            WeightRule::Truncated { rank, scale } => {
                scale * sigma.iter().skip(*rank).sum::<f64>()
            }
        }
    }

    /// Supergradient weights at a sorted spectrum.
    pub fn weights(&self, sigma: &[f64]) -> Result<WeightVector> {
        self.validate(sigma.len())?;
        check_sorted_spectrum(sigma)?;
        let raw: Vec<ExtendedWeight> = match self {
            WeightRule::Penalty(p) => sigma.iter().map(|&s| p.supergradient_unchecked(s)).collect(),
            WeightRule::PerIndex(ps) => sigma
                .iter()
                .zip(ps)
                .map(|(&s, p)| p.supergradient_unchecked(s))
                .collect(),
            WeightRule::Truncated { rank, scale } => {
                let on = ExtendedWeight::new(*scale)?;
                (0..sigma.len())
                    .map(|i| if i < *rank { ExtendedWeight::ZERO } else { on })
                    .collect()
            }
        };
        let repaired = match self {
            // antimonotone in exact arithmetic; only rounding can break order
            WeightRule::Penalty(_) => repair_rounding(raw)?,
            _ => raw,
        };
        WeightVector::new(repaired)
    }
}

fn repair_rounding(mut w: Vec<ExtendedWeight>) -> Result<Vec<ExtendedWeight>> {
    for i in 1..w.len() {
        if w[i] < w[i - 1] {
            let (prev, cur) = (w[i - 1].value(), w[i].value());
            if prev - cur > WEIGHT_ROUNDING_SLACK * prev.abs() {
                return Err(Error::Contract(format!(
                    "penalty produced decreasing weights {prev} > {cur}"
                )));
            }
            w[i] = w[i - 1];
        }
    }
    Ok(w)
}

/// Weights from a generalized per-index rule.
pub fn generalized_weights(rule: &WeightRule, sigma: &[f64]) -> Result<WeightVector> {
    rule.weights(sigma)
}

/// One IRNN update: `wsvt(x_k - grad / mu, weights, 1 / mu)`.
pub fn irnn_step(x_k: &Matrix, weights: &WeightVector, grad: &Matrix, mu: f64) -> Result<Matrix> {
    if grad.shape() != x_k.shape() {
        return Err(crate::error::shape_mismatch("irnn_step gradient", x_k.shape(), grad.shape()));
    }
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::Contract(format!("mu must be positive, got {mu}")));
    }
    let y = x_k - grad / mu;
    wsvt(&y, weights, 1.0 / mu)
}

/// Geometric continuation `lambda_k = eta^k * lambda0` down to a target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuationSchedule {
    pub lambda0: f64,
    pub eta: f64,
    pub lambda_target: f64,
    pub warm_start: bool,
}

impl ContinuationSchedule {
    pub fn new(lambda0: f64, eta: f64, lambda_target: f64, warm_start: bool) -> Result<Self> {
        let s = Self {
            lambda0,
            eta,
            lambda_target,
            warm_start,
        };
        s.validate()?;
        Ok(s)
    }

    /// One stage at `lambda`.
    pub fn single(lambda: f64) -> Result<Self> {
        Self::new(lambda, 0.5, lambda, true)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda0.is_finite() && self.lambda0 > 0.0) {
            return Err(Error::Parameter(format!("lambda0 must be positive, got {}", self.lambda0)));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::Parameter(format!("eta must lie in (0, 1), got {}", self.eta)));
        }
        if !(self.lambda_target > 0.0 && self.lambda_target <= self.lambda0) {
            return Err(Error::Parameter(format!(
                "lambda target must lie in (0, lambda0], got {}",
                self.lambda_target
            )));
        }
        Ok(())
    }

    /// The strictly decreasing stage values; the last one is the first
    /// value `<= lambda_target`.
    pub fn lambdas(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for k in 0.. {
            let lambda = self.lambda0 * self.eta.powi(k);
            out.push(lambda);
            // relative slack so that lambda0 == target yields one stage and
            // targets hit exactly by eta^k are not overshot by rounding
            if lambda <= self.lambda_target * (1.0 + 1e-12) {
                break;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Proximal weight; must exceed the problem's Lipschitz constant.
    pub mu: f64,
    /// Relative step-norm tolerance.
    pub tol: f64,
    /// Iteration budget per stage.
    pub max_iter: usize,
    /// Stop once `||P_Omega(X - M)||_F <= fit_tol`, for problems that expose it.
    pub fit_tol: Option<f64>,
    pub continuation: Option<ContinuationSchedule>,
}

impl SolverConfig {
    /// `mu = 1.1 L(f)` with default tolerances and no continuation.
    pub fn for_problem<P: SmoothLoss + ?Sized>(problem: &P) -> Self {
        Self::with_mu(DEFAULT_MU_FACTOR * problem.lipschitz())
    }

    pub fn with_mu(mu: f64) -> Self {
        Self {
            mu,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            fit_tol: None,
            continuation: None,
        }
    }

    fn validate(&self, lipschitz: f64) -> Result<()> {
        if !(self.mu.is_finite() && self.mu > lipschitz) {
            return Err(Error::Config(format!(
                "mu = {} must exceed the Lipschitz constant {lipschitz}",
                self.mu
            )));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::Config(format!("tol must be nonnegative, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    StepTolerance,
    FitTolerance,
    MaxIterations,
}

/// Per-iteration record of one solve (or one continuation stage).
///
/// `objective` and `ranks` include the starting point, so they hold
/// `iterations + 1` entries; `step_norms` holds `iterations`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SolverTrace {
    pub lambda: Option<f64>,
    pub objective: Vec<f64>,
    pub step_norms: Vec<f64>,
    pub ranks: Vec<usize>,
    pub iterations: usize,
    pub wall_time: f64,
    pub stop_reason: Option<StopReason>,
}

impl SolverTrace {
    /// True when the objective never increases by more than `slack`.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.objective.windows(2).all(|w| w[1] <= w[0] + slack)
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.objective.last().copied()
    }

    /// CSV with header `iteration,objective,step_norm,rank`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,objective,step_norm,rank\n");
        for (k, (f, r)) in self.objective.iter().zip(&self.ranks).enumerate() {
            let step = if k == 0 {
                String::new()
            } else {
                format!("{:e}", self.step_norms[k - 1])
            };
            out.push_str(&format!("{k},{f:e},{step},{r}\n"));
        }
        out
    }
}

/// Iteration state for one IRNN run; exposes each iterate.
pub struct Irnn<'a, P: SmoothLoss + ?Sized> {
    problem: &'a P,
    rule: WeightRule,
    mu: f64,
    x: Matrix,
    sigma: Vec<f64>,
    grad: Matrix,
    objective: f64,
}

/// Outcome of a single [`Irnn::step`].
#[derive(Debug, Clone, Copy)]
pub struct StepInfo {
    pub step_norm: f64,
    /// `||X^k||_F` before the step.
    pub previous_norm: f64,
    pub objective: f64,
    pub rank: usize,
}

impl<'a, P: SmoothLoss + ?Sized> Irnn<'a, P> {
    /// Fails when `mu <= L(f)` or `x0` has the wrong shape.
    pub fn new(problem: &'a P, rule: WeightRule, x0: Matrix, mu: f64) -> Result<Self> {
        let lipschitz = problem.lipschitz();
        if !(mu.is_finite() && mu > lipschitz) {
            return Err(Error::Config(format!(
                "mu = {mu} must exceed the Lipschitz constant {lipschitz}"
            )));
        }
        if x0.shape() != problem.shape() {
            return Err(crate::error::shape_mismatch("initial point", problem.shape(), x0.shape()));
        }
        rule.validate(x0.nrows().min(x0.ncols()))?;
        let sigma = singular_values(&x0)?;
        let (fval, grad) = problem.value_grad(&x0)?;
        let objective = rule.penalty_total(&sigma) + fval;
        Ok(Self {
            problem,
            rule,
            mu,
            x: x0,
            sigma,
            grad,
            objective,
        })
    }

    pub fn iterate(&self) -> &Matrix {
        &self.x
    }

    pub fn into_iterate(self) -> Matrix {
        self.x
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.sigma
    }

    pub fn gradient(&self) -> &Matrix {
        &self.grad
    }

    /// `F(X^k)` at the current iterate.
    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn rank(&self) -> usize {
        numerical_rank(&self.sigma, RANK_THRESHOLD)
    }

    /// Refreshes the weights at the current spectrum and takes one step.
    pub fn step(&mut self) -> Result<StepInfo> {
        let weights = self.rule.weights(&self.sigma)?;
        let y = &self.x - &self.grad / self.mu;
        let (next, sigma) = wsvt_with_spectrum(&y, &weights, 1.0 / self.mu)?;
        let previous_norm = self.x.norm();
        let step_norm = (&next - &self.x).norm();
        let (fval, grad) = self.problem.value_grad(&next)?;
        self.objective = self.rule.penalty_total(&sigma) + fval;
        self.x = next;
        self.sigma = sigma;
        self.grad = grad;
        Ok(StepInfo {
            step_norm,
            previous_norm,
            objective: self.objective,
            rank: self.rank(),
        })
    }
}

/// Runs IRNN from `x0` with the rule's own regularization scale.
///
/// Stops when the relative step norm drops below `config.tol`, when the
/// observation fit reaches `config.fit_tol`, or after `config.max_iter`
/// iterations. `config.continuation` is ignored here; see
/// [`continuation_solve`].
pub fn irnn_solve<P: SmoothLoss + ?Sized>(
    problem: &P,
    rule: &WeightRule,
    x0: &Matrix,
    config: &SolverConfig,
) -> Result<(Matrix, SolverTrace)> {
    config.validate(problem.lipschitz())?;
    let start = Instant::now();
    let mut state = Irnn::new(problem, rule.clone(), x0.clone(), config.mu)?;
    let mut trace = SolverTrace {
        lambda: rule.lambda(),
        objective: vec![state.objective()],
        ranks: vec![state.rank()],
        ..SolverTrace::default()
    };
    let fit_reached = |x: &Matrix| match (config.fit_tol, problem.fit_residual(x)) {
        (Some(tol), Some(r)) => r <= tol,
        _ => false,
    };
    if fit_reached(state.iterate()) {
        trace.stop_reason = Some(StopReason::FitTolerance);
    }
    while trace.stop_reason.is_none() {
        let info = state.step()?;
        trace.iterations += 1;
        trace.objective.push(info.objective);
        trace.step_norms.push(info.step_norm);
        trace.ranks.push(info.rank);
        if !info.objective.is_finite() || !info.step_norm.is_finite() {
            trace.wall_time = start.elapsed().as_secs_f64();
            return Err(Error::Diverged {
                message: format!("objective became {}", info.objective),
                trace: Box::new(trace),
            });
        }
        if fit_reached(state.iterate()) {
            trace.stop_reason = Some(StopReason::FitTolerance);
        } else if info.step_norm <= config.tol * info.previous_norm.max(1.0) {
            trace.stop_reason = Some(StopReason::StepTolerance);
        } else if trace.iterations >= config.max_iter {
            trace.stop_reason = Some(StopReason::MaxIterations);
        }
    }
    trace.wall_time = start.elapsed().as_secs_f64();
    Ok((state.into_iterate(), trace))
}

/// Runs one [`irnn_solve`] per continuation stage, overriding the rule's
/// scale with the stage value.
///
/// With `warm_start` each stage starts from the previous stage's result,
/// otherwise from `x0`. Reaching `fit_tol` ends the whole run. Without a
/// schedule this is a single stage at the rule's own scale.
pub fn continuation_solve<P: SmoothLoss + ?Sized>(
    problem: &P,
    rule: &WeightRule,
    x0: &Matrix,
    config: &SolverConfig,
) -> Result<(Matrix, Vec<SolverTrace>)> {
    let Some(schedule) = config.continuation else {
        let (x, trace) = irnn_solve(problem, rule, x0, config)?;
        return Ok((x, vec![trace]));
    };
    schedule.validate()?;
    let mut traces = Vec::new();
    let mut x = x0.clone();
    for lambda in schedule.lambdas() {
        let stage_rule = rule.with_lambda(lambda)?;
        let start = if schedule.warm_start { &x } else { x0 };
        let (next, trace) = irnn_solve(problem, &stage_rule, start, config)?;
        let done = trace.stop_reason == Some(StopReason::FitTolerance);
        x = next;
        traces.push(trace);
        if done {
            break;
        }
    }
    Ok((x, traces))
}

/// Where a solve starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Initialization {
    /// `X^0 = 0`.
    Zero,
    /// `X^0 = -grad f(0) / mu`, the first gradient step from zero.
    GradientStep,
    /// [`Initialization::Zero`] unless the rule pins zero singular values
    /// (Lp), in which case [`Initialization::GradientStep`].
    #[default]
    Auto,
}

impl Initialization {
    pub fn initial_point<P: SmoothLoss + ?Sized>(
        self,
        problem: &P,
        rule: &WeightRule,
        mu: f64,
    ) -> Result<Matrix> {
        let (m, n) = problem.shape();
        let zero = Matrix::zeros(m, n);
        let gradient_step = match self {
            Initialization::Zero => false,
            Initialization::GradientStep => true,
            Initialization::Auto => rule.pins_zero(),
        };
        if gradient_step {
            let (_, g) = problem.value_grad(&zero)?;
            Ok(-g / mu)
        } else {
            Ok(zero)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penalty::PenaltyKind;
    use crate::problems::{MatrixCompletionProblem, ObservationMask};
    use crate::prox::svt;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn randn(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Matrix {
        Matrix::from_fn(m, n, |_, _| rng.sample(StandardNormal))
    }

    fn completion(rng: &mut ChaCha8Rng, m: usize, n: usize, r: usize, rate: f64) -> (Matrix, MatrixCompletionProblem) {
        let truth = randn(rng, m, r) * randn(rng, r, n);
        let idx: Vec<_> = (0..m)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|_| rng.random_bool(rate))
            .collect();
        let mask = ObservationMask::new(m, n, &idx).unwrap();
        let p = MatrixCompletionProblem::new(&truth, mask).unwrap();
        (truth, p)
    }

    #[test]
    fn truncated_rule_weights() {
        let w = generalized_weights(&WeightRule::truncated(2), &[5.0, 4.0, 3.0, 2.0]).unwrap();
        assert_eq!(w.values(), vec![0.0, 0.0, 1.0, 1.0]);
        let w = generalized_weights(&WeightRule::truncated(0), &[5.0, 4.0, 3.0]).unwrap();
        assert_eq!(w.values(), vec![1.0; 3]);
        let w = generalized_weights(&WeightRule::truncated(3), &[5.0, 4.0, 3.0]).unwrap();
        assert_eq!(w.values(), vec![0.0; 3]);
    }

    #[test]
    fn per_index_rule_must_be_nondecreasing() {
        let big = PenaltyParams::nuclear(2.0).unwrap();
        let small = PenaltyParams::nuclear(1.0).unwrap();
        let ok = WeightRule::PerIndex(vec![small, big]);
        assert_eq!(generalized_weights(&ok, &[2.0, 1.0]).unwrap().values(), vec![1.0, 2.0]);
        let bad = WeightRule::PerIndex(vec![big, small]);
        assert!(matches!(generalized_weights(&bad, &[2.0, 1.0]), Err(Error::Contract(_))));
    }

    #[test]
    fn step_fixed_point_with_zero_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = randn(&mut rng, 4, 5);
        let out = irnn_step(&x, &WeightVector::uniform(0.0, 4).unwrap(), &Matrix::zeros(4, 5), 1.0).unwrap();
        assert!((out - x).amax() < 1e-12);
    }

    #[test]
    fn step_with_constant_weights_is_svt() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = randn(&mut rng, 5, 4);
        let g = randn(&mut rng, 5, 4);
        let (lambda, mu) = (0.6, 1.3);
        let a = irnn_step(&x, &WeightVector::uniform(lambda, 4).unwrap(), &g, mu).unwrap();
        let b = svt(&(&x - &g / mu), lambda / mu).unwrap();
        assert!((a - b).amax() < 1e-12);
    }

    #[test]
    fn step_shape_mismatch() {
        let err = irnn_step(&Matrix::zeros(2, 2), &WeightVector::uniform(1.0, 2).unwrap(), &Matrix::zeros(2, 3), 1.0);
        assert!(matches!(err, Err(Error::Contract(_))));
    }

    #[test]
    fn lp_keeps_zero_singular_values_at_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // rank-2 iterate, arbitrary gradient
        let x = randn(&mut rng, 6, 2) * randn(&mut rng, 2, 5);
        let g = randn(&mut rng, 6, 5);
        let pen = PenaltyParams::lp(0.3, 0.5).unwrap();
        let w = WeightRule::from(pen).weights(&singular_values(&x).unwrap()).unwrap();
        // rounding leaves tiny nonzero tails, so the weights are huge rather than infinite
        assert!(w.as_slice()[2..].iter().all(|w| w.value() > 1e6));
        let next = irnn_step(&x, &w, &g, 1.1).unwrap();
        let s = singular_values(&next).unwrap();
        assert!(numerical_rank(&s, RANK_THRESHOLD) <= 2);
    }

    #[test]
    fn mu_must_exceed_lipschitz() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (_, p) = completion(&mut rng, 5, 5, 1, 0.5);
        let rule = WeightRule::from(PenaltyParams::with_defaults(PenaltyKind::Logarithm));
        let cfg = SolverConfig::with_mu(1.0);
        assert!(matches!(irnn_solve(&p, &rule, &Matrix::zeros(5, 5), &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn schedule_values() {
        let s = ContinuationSchedule::new(1.0, 0.5, 0.1, true).unwrap();
        assert_eq!(s.lambdas(), vec![1.0, 0.5, 0.25, 0.125, 0.0625]);
        assert_eq!(ContinuationSchedule::single(2.0).unwrap().lambdas(), vec![2.0]);
        let s = ContinuationSchedule::new(1.0, 0.5, 0.25, true).unwrap();
        assert_eq!(s.lambdas(), vec![1.0, 0.5, 0.25]);
        assert!(ContinuationSchedule::new(1.0, 1.0, 0.1, true).is_err());
        assert!(ContinuationSchedule::new(1.0, 0.5, 2.0, true).is_err());
    }

    #[test]
    fn single_stage_continuation_equals_plain_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (_, p) = completion(&mut rng, 12, 10, 2, 0.6);
        let rule = WeightRule::from(PenaltyParams::new(PenaltyKind::Mcp, 0.5, 3.0, 0.5).unwrap());
        let mut cfg = SolverConfig::for_problem(&p);
        let x0 = Matrix::zeros(12, 10);
        let (a, ta) = irnn_solve(&p, &rule, &x0, &cfg).unwrap();
        cfg.continuation = Some(ContinuationSchedule::single(0.5).unwrap());
        let (b, tb) = continuation_solve(&p, &rule, &x0, &cfg).unwrap();
        assert_eq!(tb.len(), 1);
        assert_eq!(a, b);
        assert_eq!(ta.objective, tb[0].objective);
    }

    #[test]
    fn fully_observed_recovers_target_as_lambda_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let m = randn(&mut rng, 8, 3) * randn(&mut rng, 3, 7);
        let p = MatrixCompletionProblem::new(&m, ObservationMask::full(8, 7)).unwrap();
        let rule = WeightRule::from(PenaltyParams::nuclear(1.0).unwrap());
        let mut cfg = SolverConfig::for_problem(&p);
        cfg.continuation = Some(ContinuationSchedule::new(m.amax(), 0.5, 1e-9 * m.amax(), true).unwrap());
        let (x, _) = continuation_solve(&p, &rule, &Matrix::zeros(8, 7), &cfg).unwrap();
        assert!((x - &m).norm() / m.norm() <= 1e-6);
    }

    #[test]
    fn objective_monotone_for_every_penalty() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for kind in PenaltyKind::ALL {
            let (_, p) = completion(&mut rng, 15, 12, 3, 0.5);
            let rule = WeightRule::from(PenaltyParams::new(kind, 0.5, 2.0, 0.5).unwrap());
            let cfg = SolverConfig::for_problem(&p);
            let x0 = Initialization::Auto.initial_point(&p, &rule, cfg.mu).unwrap();
            let (_, trace) = irnn_solve(&p, &rule, &x0, &cfg).unwrap();
            assert!(trace.is_monotone(1e-9), "{kind}");
            assert_eq!(trace.objective.len(), trace.iterations + 1);
        }
    }

    #[test]
    fn auto_initialization_moves_lp_off_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (_, p) = completion(&mut rng, 10, 10, 2, 0.5);
        let lp = WeightRule::from(PenaltyParams::lp(0.1, 0.5).unwrap());
        let log = WeightRule::from(PenaltyParams::with_defaults(PenaltyKind::Logarithm));
        let x0 = Initialization::Auto.initial_point(&p, &lp, 1.1).unwrap();
        assert!((x0 - p.observed() / 1.1).amax() < 1e-15);
        let x0 = Initialization::Auto.initial_point(&p, &log, 1.1).unwrap();
        assert_eq!(x0, Matrix::zeros(10, 10));
        // from zero, Lp never moves
        let (x, _) = irnn_solve(&p, &lp, &Matrix::zeros(10, 10), &SolverConfig::for_problem(&p)).unwrap();
        assert_eq!(x, Matrix::zeros(10, 10));
    }

    #[test]
    fn trace_csv_has_row_per_iterate() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (_, p) = completion(&mut rng, 6, 6, 1, 0.7);
        let rule = WeightRule::from(PenaltyParams::nuclear(0.2).unwrap());
        let (_, trace) = irnn_solve(&p, &rule, &Matrix::zeros(6, 6), &SolverConfig::for_problem(&p)).unwrap();
        let csv = trace.to_csv();
        assert_eq!(csv.lines().count(), trace.iterations + 2);
        assert!(csv.starts_with("iteration,objective,step_norm,rank"));
    }
}
