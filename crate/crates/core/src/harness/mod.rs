//! Synthetic data, metrics, experiment drivers and file formats.

pub mod experiment;
pub mod image;
pub mod io;
pub mod metrics;
pub mod presets;
pub mod synth;
pub mod tlrr;

pub use experiment::{
    run_phase_transition, ExperimentOutput, ExperimentReport, ExperimentTimings,
    PhaseTransitionConfig, ReportRow,
};
pub use image::{run_image_recovery, Corruption, ImageRecovery, ImageReport, ImageTask};
pub use metrics::{frequency_of_success, psnr, relative_error, SUCCESS_THRESHOLD};
pub use presets::{benchmark_penalty, solve_completion, SolvePreset};
pub use synth::{generate_synthetic, trial_seed, SyntheticInstance, SyntheticSpec};
pub use tlrr::{run_tlrr, TlrrOutput, TlrrSummary};
