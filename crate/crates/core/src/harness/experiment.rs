//! Phase-transition grids over ranks and penalties.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::metrics::{frequency_of_success, relative_error, SUCCESS_THRESHOLD};
use crate::harness::presets::{solve_completion, SolvePreset};
use crate::harness::synth::{generate_synthetic, trial_seed, SyntheticSpec};
use crate::penalty::PenaltyParams;
use crate::solver::SolverTrace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTransitionConfig {
    pub m: usize,
    pub n: usize,
    pub sample_rate: f64,
    pub noise_sigma: f64,
    pub ranks: Vec<usize>,
    pub penalties: Vec<PenaltyParams>,
    pub trials: usize,
    pub seed: u64,
    pub preset: SolvePreset,
    pub success_threshold: f64,
}

impl PhaseTransitionConfig {
    /// 150x150, half observed, 20 trials, preset chosen by the noise level.
    pub fn new(ranks: Vec<usize>, penalties: Vec<PenaltyParams>, noise_sigma: f64, seed: u64) -> Self {
        Self {
            m: 150,
            n: 150,
            sample_rate: 0.5,
            noise_sigma,
            ranks,
            penalties,
            trials: 20,
            seed,
            preset: SolvePreset::for_noise(noise_sigma),
            success_threshold: SUCCESS_THRESHOLD,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.ranks.is_empty() || self.penalties.is_empty() || self.trials == 0 {
            return Err(Error::Parameter("empty experiment grid".into()));
        }
        for &rank in &self.ranks {
            self.spec(rank, 0).validate()?;
        }
        for p in &self.penalties {
            p.validate()?;
        }
        Ok(())
    }

    fn spec(&self, rank: usize, trial: usize) -> SyntheticSpec {
        SyntheticSpec {
            m: self.m,
            n: self.n,
            rank,
            sample_rate: self.sample_rate,
            noise_sigma: self.noise_sigma,
            trials: self.trials,
            seed: trial_seed(self.seed, rank, trial),
        }
    }
}

/// One (penalty, rank) cell of the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub penalty: String,
    pub params: PenaltyParams,
    pub rank: usize,
    pub frequency_of_success: f64,
    pub mean_relative_error: f64,
    pub mean_iterations: f64,
    /// Trials whose solve returned an error; their relative error is 1.
    pub failures: usize,
    pub relative_errors: Vec<f64>,
    pub iterations: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub seed_derivation: String,
    pub config: PhaseTransitionConfig,
}

/// Deterministic part of an experiment: identical inputs give identical
/// serializations. Timing lives in [`ExperimentTimings`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub metadata: ReportMetadata,
    pub rows: Vec<ReportRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub penalty: String,
    pub rank: usize,
    pub mean_wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentTimings {
    pub total_wall_time: f64,
    pub rows: Vec<TimingRow>,
}

/// Per-stage traces of one solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub penalty: String,
    pub rank: usize,
    pub trial: usize,
    pub stages: Vec<SolverTrace>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub report: ExperimentReport,
    pub timings: ExperimentTimings,
    /// Filled only when traces were requested.
    pub traces: Vec<RunTrace>,
}

struct TrialOutcome {
    error: f64,
    iterations: usize,
    failed: bool,
    wall_time: f64,
    stages: Vec<SolverTrace>,
}

impl ExperimentReport {
    pub fn row(&self, penalty: &str, rank: usize) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.penalty == penalty && r.rank == rank)
    }

    /// Largest rank whose success frequency is at least `level`.
    pub fn largest_rank_at(&self, penalty: &str, level: f64) -> Option<usize> {
        self.rows
            .iter()
            .filter(|r| r.penalty == penalty && r.frequency_of_success >= level)
            .map(|r| r.rank)
            .max()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("penalty,rank,frequency_of_success,mean_relative_error,mean_iterations,failures\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{:e},{},{}\n",
                r.penalty, r.rank, r.frequency_of_success, r.mean_relative_error, r.mean_iterations, r.failures
            ));
        }
        out
    }
}

fn run_trial(instance: &crate::harness::synth::SyntheticInstance, penalty: &PenaltyParams, preset: &SolvePreset, keep: bool) -> TrialOutcome {
    let start = Instant::now();
    let outcome = instance
        .problem()
        .and_then(|p| solve_completion(&p, penalty, preset))
        .and_then(|(x, stages)| Ok((relative_error(&x, &instance.truth)?, stages)));
    let wall_time = start.elapsed().as_secs_f64();
    match outcome {
        Ok((error, stages)) => TrialOutcome {
            error,
            iterations: stages.iter().map(|s| s.iterations).sum(),
            failed: false,
            wall_time,
            stages: if keep { stages } else { Vec::new() },
        },
        Err(_) => TrialOutcome {
            error: 1.0,
            iterations: 0,
            failed: true,
            wall_time,
            stages: Vec::new(),
        },
    }
}

fn mean(values: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = values.len() as f64;
    values.sum::<f64>() / n
}

/// Runs every (rank, trial) instance through every penalty.
///
/// Instances depend only on the master seed, the rank and the trial index,
/// so all penalties are compared on the same data. Trials run in parallel;
/// results are assembled in grid order.
pub fn run_phase_transition(config: &PhaseTransitionConfig, keep_traces: bool) -> Result<ExperimentOutput> {
    config.validate()?;
    let start = Instant::now();
    let cells: Vec<(usize, usize)> = config
        .ranks
        .iter()
        .flat_map(|&r| (0..config.trials).map(move |t| (r, t)))
        .collect();
    // outcomes[cell][penalty]
    let outcomes: Vec<Vec<TrialOutcome>> = cells
        .par_iter()
        .map(|&(rank, trial)| {
            let instance = generate_synthetic(&config.spec(rank, trial))?;
            Ok(config
                .penalties
                .iter()
                .map(|p| run_trial(&instance, p, &config.preset, keep_traces))
                .collect())
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut timing_rows = Vec::new();
    let mut traces = Vec::new();
    for (pi, penalty) in config.penalties.iter().enumerate() {
        for (ri, &rank) in config.ranks.iter().enumerate() {
            let trials = &outcomes[ri * config.trials..(ri + 1) * config.trials];
            let errors: Vec<f64> = trials.iter().map(|t| t[pi].error).collect();
            let iterations: Vec<usize> = trials.iter().map(|t| t[pi].iterations).collect();
            rows.push(ReportRow {
                penalty: penalty.kind.name().to_string(),
                params: *penalty,
                rank,
                frequency_of_success: frequency_of_success(&errors, config.success_threshold)?,
                mean_relative_error: mean(errors.iter().copied()),
                mean_iterations: mean(iterations.iter().map(|&i| i as f64)),
                failures: trials.iter().filter(|t| t[pi].failed).count(),
                relative_errors: errors,
                iterations,
            });
            timing_rows.push(TimingRow {
                penalty: penalty.kind.name().to_string(),
                rank,
                mean_wall_time: mean(trials.iter().map(|t| t[pi].wall_time)),
            });
            if keep_traces {
                for (trial, t) in trials.iter().enumerate() {
                    traces.push(RunTrace {
                        penalty: penalty.kind.name().to_string(),
                        rank,
                        trial,
                        stages: t[pi].stages.clone(),
                    });
                }
            }
        }
    }
    Ok(ExperimentOutput {
        report: ExperimentReport {
            metadata: ReportMetadata {
                tool: env!("CARGO_PKG_NAME").to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                seed: config.seed,
                seed_derivation: "splitmix64(master, rank, trial); shared across penalties".to_string(),
                config: config.clone(),
            },
            rows,
        },
        timings: ExperimentTimings {
            total_wall_time: start.elapsed().as_secs_f64(),
            rows: timing_rows,
        },
        traces,
    })
}
