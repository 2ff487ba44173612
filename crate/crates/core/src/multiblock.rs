//! IRNN with parallel splitting (IRNN-PS) for losses of several matrix blocks:
//!
//! ```text
//! F(X_1, ..., X_p) = sum_j sum_i g_j(sigma_i(X_j)) + f(X_1, ..., X_p)
//! ```
//!
//! Every block is updated from the same snapshot `X^k` with its own proximal
//! weight `mu_j > L_j(f)`, so the updates are independent and may run
//! concurrently.

use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::prox::{numerical_rank, singular_values, wsvt_with_spectrum};
use crate::solver::{SolverTrace, StopReason, WeightRule, DEFAULT_MAX_ITER, DEFAULT_MU_FACTOR, DEFAULT_TOL, RANK_THRESHOLD};
use crate::Matrix;

/// A smooth loss of `p` matrix blocks with per-block Lipschitz constants
/// `L_j` satisfying
///
/// ```text
/// |f(x) - f(y) - <grad f(y), x - y>| <= sum_j L_j / 2 ||x_j - y_j||^2
/// ```
pub trait BlockLoss {
    fn block_shapes(&self) -> Vec<(usize, usize)>;

    fn value_grads(&self, xs: &[Matrix]) -> Result<(f64, Vec<Matrix>)>;

    fn value(&self, xs: &[Matrix]) -> Result<f64> {
        self.value_grads(xs).map(|(v, _)| v)
    }

    fn lipschitz(&self) -> Vec<f64>;
}

/// `f(X) = 1/2 || sum_j A_j vec(X_j) - b ||^2` with `L_j = p ||A_j||_2^2`.
#[derive(Debug, Clone)]
pub struct StackedLinearLoss {
    shapes: Vec<(usize, usize)>,
    operators: Vec<Matrix>,
    target: DVector<f64>,
    lipschitz: Vec<f64>,
}

impl StackedLinearLoss {
    pub fn new(shapes: Vec<(usize, usize)>, operators: Vec<Matrix>, target: DVector<f64>) -> Result<Self> {
        if shapes.len() != operators.len() || shapes.is_empty() {
            return Err(Error::Contract("need one operator per block".into()));
        }
        for (&(m, n), a) in shapes.iter().zip(&operators) {
            if a.ncols() != m * n || a.nrows() != target.len() {
                return Err(Error::Contract(format!(
                    "operator is {}x{}, expected {}x{}",
                    a.nrows(),
                    a.ncols(),
                    target.len(),
                    m * n
                )));
            }
        }
        let p = operators.len() as f64;
        let lipschitz = operators
            .iter()
            .map(|a| {
                let top = singular_values(a)?.first().copied().unwrap_or(0.0);
                Ok(p * top * top)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            shapes,
            operators,
            target,
            lipschitz,
        })
    }
}

impl BlockLoss for StackedLinearLoss {
    fn block_shapes(&self) -> Vec<(usize, usize)> {
        self.shapes.clone()
    }

    fn value_grads(&self, xs: &[Matrix]) -> Result<(f64, Vec<Matrix>)> {
        check_shapes(&self.shapes, xs)?;
        let mut r = -self.target.clone();
        for (a, x) in self.operators.iter().zip(xs) {
            r += a * DVector::from_column_slice(x.as_slice());
        }
        let grads = self
            .operators
            .iter()
            .zip(&self.shapes)
            .map(|(a, &(m, n))| Matrix::from_column_slice(m, n, a.tr_mul(&r).as_slice()))
            .collect();
        Ok((0.5 * r.norm_squared(), grads))
    }

    fn lipschitz(&self) -> Vec<f64> {
        self.lipschitz.clone()
    }
}

fn check_shapes(shapes: &[(usize, usize)], xs: &[Matrix]) -> Result<()> {
    if xs.len() != shapes.len() {
        return Err(Error::Contract(format!("expected {} blocks, got {}", shapes.len(), xs.len())));
    }
    for (j, (x, &s)) in xs.iter().zip(shapes).enumerate() {
        if x.shape() != s {
            return Err(crate::error::shape_mismatch(&format!("block {j}"), s, x.shape()));
        }
    }
    Ok(())
}

/// A block loss together with one weight rule per block.
#[derive(Debug, Clone)]
pub struct BlockProblem<L> {
    pub loss: L,
    pub rules: Vec<WeightRule>,
}

impl<L: BlockLoss> BlockProblem<L> {
    pub fn new(loss: L, rules: Vec<WeightRule>) -> Result<Self> {
        let blocks = loss.block_shapes().len();
        if rules.len() != blocks {
            return Err(Error::Contract(format!(
                "{} weight rules for {blocks} blocks",
                rules.len()
            )));
        }
        Ok(Self { loss, rules })
    }

    pub fn blocks(&self) -> usize {
        self.rules.len()
    }

    /// `mu_j = 1.1 L_j`, or 1 for a block the loss does not depend on.
    pub fn default_mus(&self) -> Vec<f64> {
        self.loss
            .lipschitz()
            .into_iter()
            .map(|l| if l > 0.0 { DEFAULT_MU_FACTOR * l } else { 1.0 })
            .collect()
    }

    /// Joint objective `F(X)`.
    pub fn objective(&self, xs: &[Matrix]) -> Result<f64> {
        let mut total = self.loss.value(xs)?;
        for (rule, x) in self.rules.iter().zip(xs) {
            total += rule.penalty_total(&singular_values(x)?);
        }
        Ok(total)
    }

    fn check_mus(&self, mus: &[f64]) -> Result<()> {
        let lips = self.loss.lipschitz();
        if mus.len() != lips.len() {
            return Err(Error::Config(format!("{} mus for {} blocks", mus.len(), lips.len())));
        }
        for (j, (&mu, &l)) in mus.iter().zip(&lips).enumerate() {
            if !(mu.is_finite() && mu > l) {
                return Err(Error::Config(format!(
                    "block {j}: mu = {mu} must exceed the Lipschitz constant {l}"
                )));
            }
        }
        Ok(())
    }
}

/// Order in which block updates are executed within one iteration.
///
/// All schedules read the same snapshot, so they yield identical iterates.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum BlockSchedule {
    #[default]
    Parallel,
    Sequential,
    /// Sequential in the given block order.
    Permuted(Vec<usize>),
}

/// Current blocks plus the trace of the joint objective.
#[derive(Debug, Clone)]
pub struct BlockState {
    pub x: Vec<Matrix>,
    pub trace: SolverTrace,
}

impl BlockState {
    pub fn new(x: Vec<Matrix>) -> Self {
        Self {
            x,
            trace: SolverTrace::default(),
        }
    }
}

/// One block's contribution to a step.
struct BlockUpdate {
    x: Matrix,
    sigma: Vec<f64>,
}

fn update_block(
    rule: &WeightRule,
    x: &Matrix,
    sigma: &[f64],
    grad: &Matrix,
    mu: f64,
) -> Result<BlockUpdate> {
    let weights = rule.weights(sigma)?;
    let y = x - grad / mu;
    let (x, sigma) = wsvt_with_spectrum(&y, &weights, 1.0 / mu)?;
    Ok(BlockUpdate { x, sigma })
}

/// Iteration state for IRNN-PS.
pub struct IrnnPs<'a, L: BlockLoss> {
    problem: &'a BlockProblem<L>,
    mus: Vec<f64>,
    xs: Vec<Matrix>,
    sigmas: Vec<Vec<f64>>,
    grads: Vec<Matrix>,
    objective: f64,
}

/// Outcome of one IRNN-PS iteration.
#[derive(Debug, Clone)]
pub struct BlockStepInfo {
    /// `||X_j^{k+1} - X_j^k||_F` per block.
    pub block_step_norms: Vec<f64>,
    pub objective: f64,
    /// `sum_j ||X_j^k||_F` before the step.
    pub previous_norm: f64,
    pub rank: usize,
}

impl BlockStepInfo {
    pub fn joint_step_norm(&self) -> f64 {
        self.block_step_norms.iter().sum()
    }
}

impl<'a, L: BlockLoss + Sync> IrnnPs<'a, L> {
    pub fn new(problem: &'a BlockProblem<L>, x0: Vec<Matrix>, mus: Vec<f64>) -> Result<Self> {
        problem.check_mus(&mus)?;
        check_shapes(&problem.loss.block_shapes(), &x0)?;
        let sigmas = x0.iter().map(singular_values).collect::<Result<Vec<_>>>()?;
        let (fval, grads) = problem.loss.value_grads(&x0)?;
        let objective = fval
            + problem
                .rules
                .iter()
                .zip(&sigmas)
                .map(|(r, s)| r.penalty_total(s))
                .sum::<f64>();
        Ok(Self {
            problem,
            mus,
            xs: x0,
            sigmas,
            grads,
            objective,
        })
    }

    pub fn blocks(&self) -> &[Matrix] {
        &self.xs
    }

    pub fn into_blocks(self) -> Vec<Matrix> {
        self.xs
    }

    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn rank(&self) -> usize {
        self.sigmas.iter().map(|s| numerical_rank(s, RANK_THRESHOLD)).sum()
    }

    pub fn step(&mut self, schedule: &BlockSchedule) -> Result<BlockStepInfo> {
        let p = self.xs.len();
        let run = |j: usize| {
            update_block(
                &self.problem.rules[j],
                &self.xs[j],
                &self.sigmas[j],
                &self.grads[j],
                self.mus[j],
            )
        };
        let updates: Vec<BlockUpdate> = match schedule {
            BlockSchedule::Parallel => (0..p).into_par_iter().map(run).collect::<Result<_>>()?,
            BlockSchedule::Sequential => (0..p).map(run).collect::<Result<_>>()?,
            BlockSchedule::Permuted(order) => {
                let mut sorted = order.clone();
                sorted.sort_unstable();
                if sorted != (0..p).collect::<Vec<_>>() {
                    return Err(Error::Contract(format!("{order:?} is not a permutation of 0..{p}")));
                }
                let mut slots: Vec<Option<BlockUpdate>> = (0..p).map(|_| None).collect();
                for &j in order {
                    slots[j] = Some(run(j)?);
                }
                slots.into_iter().map(|u| u.expect("every block updated")).collect()
            }
        };
        let previous_norm = self.xs.iter().map(|x| x.norm()).sum();
        let block_step_norms = updates
            .iter()
            .zip(&self.xs)
            .map(|(u, x)| (&u.x - x).norm())
            .collect();
        let (xs, sigmas): (Vec<_>, Vec<_>) = updates.into_iter().map(|u| (u.x, u.sigma)).unzip();
        let (fval, grads) = self.problem.loss.value_grads(&xs)?;
        self.objective = fval
            + self
                .problem
                .rules
                .iter()
                .zip(&sigmas)
                .map(|(r, s)| r.penalty_total(s))
                .sum::<f64>();
        self.xs = xs;
        self.sigmas = sigmas;
        self.grads = grads;
        Ok(BlockStepInfo {
            block_step_norms,
            objective: self.objective,
            previous_norm,
            rank: self.rank(),
        })
    }
}

/// A single IRNN-PS update from `state` (whose trace is carried over).
pub fn irnn_ps_step<L: BlockLoss + Sync>(
    state: &BlockState,
    problem: &BlockProblem<L>,
    mus: &[f64],
    schedule: &BlockSchedule,
) -> Result<BlockState> {
    let mut it = IrnnPs::new(problem, state.x.clone(), mus.to_vec())?;
    let info = it.step(schedule)?;
    let mut trace = state.trace.clone();
    trace.objective.push(info.objective);
    trace.step_norms.push(info.joint_step_norm());
    trace.ranks.push(info.rank);
    trace.iterations += 1;
    Ok(BlockState {
        x: it.into_blocks(),
        trace,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockSolverConfig {
    /// Per-block proximal weights; `None` means [`BlockProblem::default_mus`].
    pub mus: Option<Vec<f64>>,
    /// Relative tolerance on the joint step norm `sum_j ||dX_j||_F`.
    pub tol: f64,
    pub max_iter: usize,
    pub schedule: BlockSchedule,
}

impl Default for BlockSolverConfig {
    fn default() -> Self {
        Self {
            mus: None,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            schedule: BlockSchedule::Parallel,
        }
    }
}

/// Iterates IRNN-PS until the joint step norm falls below
/// `tol * max(1, sum_j ||X_j^k||_F)` or `max_iter` is reached.
pub fn irnn_ps_solve<L: BlockLoss + Sync>(
    problem: &BlockProblem<L>,
    x0: Vec<Matrix>,
    config: &BlockSolverConfig,
) -> Result<(BlockState, SolverTrace)> {
    if config.max_iter == 0 {
        return Err(Error::Config("max_iter must be positive".into()));
    }
    let start = Instant::now();
    let mus = config.mus.clone().unwrap_or_else(|| problem.default_mus());
    let mut it = IrnnPs::new(problem, x0, mus)?;
    let mut trace = SolverTrace {
        objective: vec![it.objective()],
        ranks: vec![it.rank()],
        ..SolverTrace::default()
    };
    loop {
        let info = it.step(&config.schedule)?;
        let step = info.joint_step_norm();
        trace.iterations += 1;
        trace.objective.push(info.objective);
        trace.step_norms.push(step);
        trace.ranks.push(info.rank);
        if !info.objective.is_finite() || !step.is_finite() {
            trace.wall_time = start.elapsed().as_secs_f64();
            return Err(Error::Diverged {
                message: format!("objective became {}", info.objective),
                trace: Box::new(trace),
            });
        }
        if step <= config.tol * info.previous_norm.max(1.0) {
            trace.stop_reason = Some(StopReason::StepTolerance);
            break;
        }
        if trace.iterations >= config.max_iter {
            trace.stop_reason = Some(StopReason::MaxIterations);
            break;
        }
    }
    trace.wall_time = start.elapsed().as_secs_f64();
    let state = BlockState {
        x: it.into_blocks(),
        trace: trace.clone(),
    };
    Ok((state, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penalty::{PenaltyKind, PenaltyParams};
    use crate::problems::{MatrixCompletionProblem, ObservationMask, SmoothLoss, Tensor3, TlrrLoss};
    use crate::solver::irnn_step;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn randn(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Matrix {
        Matrix::from_fn(m, n, |_, _| rng.sample(StandardNormal))
    }

    /// Single-block adapter around a matrix-completion loss.
    struct One(MatrixCompletionProblem);
    impl BlockLoss for One {
        fn block_shapes(&self) -> Vec<(usize, usize)> {
            vec![self.0.shape()]
        }
        fn value_grads(&self, xs: &[Matrix]) -> Result<(f64, Vec<Matrix>)> {
            let (v, g) = self.0.value_grad(&xs[0])?;
            Ok((v, vec![g]))
        }
        fn lipschitz(&self) -> Vec<f64> {
            vec![1.0]
        }
    }

    fn stacked(rng: &mut ChaCha8Rng) -> StackedLinearLoss {
        let shapes = vec![(3, 4), (2, 5)];
        let ops = shapes.iter().map(|&(m, n)| randn(rng, 9, m * n)).collect();
        let b = DVector::from_fn(9, |_, _| rng.sample(StandardNormal));
        StackedLinearLoss::new(shapes, ops, b).unwrap()
    }

    #[test]
    fn single_block_matches_irnn_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = randn(&mut rng, 6, 2) * randn(&mut rng, 2, 5);
        let idx: Vec<_> = (0..6).flat_map(|i| (0..5).map(move |j| (i, j))).filter(|_| rng.random_bool(0.6)).collect();
        let mc = MatrixCompletionProblem::new(&m, ObservationMask::new(6, 5, &idx).unwrap()).unwrap();
        let rule = WeightRule::from(PenaltyParams::with_defaults(PenaltyKind::Logarithm));
        let x0 = randn(&mut rng, 6, 5);
        let (_, g) = mc.value_grad(&x0).unwrap();
        let w = rule.weights(&singular_values(&x0).unwrap()).unwrap();
        let want = irnn_step(&x0, &w, &g, 1.1).unwrap();
        let problem = BlockProblem::new(One(mc), vec![rule]).unwrap();
        let next = irnn_ps_step(&BlockState::new(vec![x0]), &problem, &[1.1], &BlockSchedule::Parallel).unwrap();
        assert!((&next.x[0] - want).amax() < 1e-13);
    }

    #[test]
    fn zero_gradient_zero_weight_is_fixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        // b = A1 x1 + A2 x2 makes the gradient vanish at (x1, x2)
        let shapes = vec![(2, 3), (3, 3)];
        let xs: Vec<Matrix> = shapes.iter().map(|&(m, n)| randn(&mut rng, m, n)).collect();
        let ops: Vec<Matrix> = shapes.iter().map(|&(m, n)| randn(&mut rng, 7, m * n)).collect();
        let b = ops.iter().zip(&xs).fold(DVector::zeros(7), |acc, (a, x)| acc + a * DVector::from_column_slice(x.as_slice()));
        let loss = StackedLinearLoss::new(shapes, ops, b).unwrap();
        let rules = vec![WeightRule::truncated(2), WeightRule::truncated(3)];
        let problem = BlockProblem::new(loss, rules).unwrap();
        let mus = problem.default_mus();
        let next = irnn_ps_step(&BlockState::new(xs.clone()), &problem, &mus, &BlockSchedule::Sequential).unwrap();
        for (a, b) in next.x.iter().zip(&xs) {
            assert!((a - b).amax() < 1e-12);
        }
    }

    #[test]
    fn schedules_agree_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let loss = stacked(&mut rng);
        let rules = vec![
            WeightRule::from(PenaltyParams::new(PenaltyKind::Scad, 0.3, 3.0, 0.5).unwrap()),
            WeightRule::from(PenaltyParams::with_defaults(PenaltyKind::Etp)),
        ];
        let problem = BlockProblem::new(loss, rules).unwrap();
        let mus = problem.default_mus();
        let x0 = vec![randn(&mut rng, 3, 4), randn(&mut rng, 2, 5)];
        let state = BlockState::new(x0);
        let a = irnn_ps_step(&state, &problem, &mus, &BlockSchedule::Parallel).unwrap();
        let b = irnn_ps_step(&state, &problem, &mus, &BlockSchedule::Sequential).unwrap();
        let c = irnn_ps_step(&state, &problem, &mus, &BlockSchedule::Permuted(vec![1, 0])).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.x, c.x);
        assert!(irnn_ps_step(&state, &problem, &mus, &BlockSchedule::Permuted(vec![0, 0])).is_err());
    }

    #[test]
    fn mu_below_lipschitz_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let loss = stacked(&mut rng);
        let l = loss.lipschitz();
        let problem = BlockProblem::new(loss, vec![WeightRule::truncated(0), WeightRule::truncated(0)]).unwrap();
        let x0 = vec![Matrix::zeros(3, 4), Matrix::zeros(2, 5)];
        let err = irnn_ps_step(&BlockState::new(x0), &problem, &[l[0] * 0.9, l[1] * 2.0], &BlockSchedule::Parallel);
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn stacked_loss_lipschitz_certificate() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let loss = stacked(&mut rng);
        let lips = loss.lipschitz();
        for _ in 0..500 {
            let x = vec![randn(&mut rng, 3, 4), randn(&mut rng, 2, 5)];
            let y = vec![randn(&mut rng, 3, 4), randn(&mut rng, 2, 5)];
            let (fy, gy) = loss.value_grads(&y).unwrap();
            let fx = loss.value(&x).unwrap();
            let lin: f64 = gy.iter().zip(x.iter().zip(&y)).map(|(g, (a, b))| g.dot(&(a - b))).sum();
            let bound: f64 = lips.iter().zip(x.iter().zip(&y)).map(|(l, (a, b))| 0.5 * l * (a - b).norm_squared()).sum();
            assert!((fx - fy - lin).abs() <= bound + 1e-9);
        }
    }

    #[test]
    fn lambda_free_absolute_is_gradient_descent() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let loss = stacked(&mut rng);
        // tiny lambda: weights negligible, iterates follow gradient descent
        let rules = vec![
            WeightRule::from(PenaltyParams::nuclear(1e-300).unwrap()),
            WeightRule::from(PenaltyParams::nuclear(1e-300).unwrap()),
        ];
        let problem = BlockProblem::new(loss, rules).unwrap();
        let cfg = BlockSolverConfig {
            max_iter: 60,
            tol: 0.0,
            ..BlockSolverConfig::default()
        };
        let x0 = vec![randn(&mut rng, 3, 4), randn(&mut rng, 2, 5)];
        let (_, trace) = irnn_ps_solve(&problem, x0, &cfg).unwrap();
        assert!(trace.is_monotone(1e-9));
    }

    #[test]
    fn tlrr_objective_decreases() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t = Tensor3::from_fn([4, 5, 3], |_, _, _| rng.sample(StandardNormal));
        let loss = TlrrLoss::new(t).unwrap();
        let rule = WeightRule::from(PenaltyParams::new(PenaltyKind::Logarithm, 1.0, 1.5, 0.5).unwrap());
        let problem = BlockProblem::new(loss, vec![rule.clone(), rule.clone(), rule]).unwrap();
        let x0 = vec![Matrix::zeros(4, 4), Matrix::zeros(5, 5), Matrix::zeros(3, 3)];
        let (state, trace) = irnn_ps_solve(&problem, x0, &BlockSolverConfig::default()).unwrap();
        assert!(trace.is_monotone(1e-9));
        let f = problem.objective(&state.x).unwrap();
        assert!((f - trace.final_objective().unwrap()).abs() < 1e-8 * (1.0 + f.abs()));
    }
}
