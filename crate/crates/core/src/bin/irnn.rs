use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use irnn_core::harness::experiment::{run_phase_transition, PhaseTransitionConfig};
use irnn_core::harness::image::{load_rgb, run_image_recovery, write_image_outputs, Corruption, ImageTask};
use irnn_core::harness::io::{read_completion_problem, read_tensor, write_csv_matrix, write_json};
use irnn_core::harness::presets::{benchmark_penalty, solve_completion, SolvePreset};
use irnn_core::harness::tlrr::run_tlrr;
use irnn_core::multiblock::BlockSolverConfig;
use irnn_core::{Error, PenaltyKind, PenaltyParams, Result};

#[derive(Parser)]
#[command(name = "irnn", version, about = "Low-rank recovery with iteratively reweighted nuclear norms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Phase-transition grid on synthetic completion problems.
    Synth(SynthArgs),
    /// Complete a matrix from observed entries.
    Complete(CompleteArgs),
    /// Inpaint an RGB image.
    Image(ImageArgs),
    /// Tensor low-rank representation.
    Tlrr(TlrrArgs),
}

/// Overrides for the continuation preset.
#[derive(Args, Clone)]
struct SolveArgs {
    /// Initial regularization; `auto` scales the largest observed magnitude.
    #[arg(long, default_value = "auto")]
    lambda0: String,
    #[arg(long)]
    eta: Option<f64>,
    /// Final regularization as a fraction of lambda0.
    #[arg(long)]
    lambda_t_factor: Option<f64>,
    /// Proximal weight as a multiple of the Lipschitz constant.
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    /// Iteration budget per continuation stage.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Stop once the observed-entry residual norm is this small.
    #[arg(long)]
    fit_tol: Option<f64>,
    /// Restart every stage from the initial point.
    #[arg(long)]
    cold_start: bool,
}

impl SolveArgs {
    fn apply(&self, mut preset: SolvePreset) -> Result<SolvePreset> {
        if self.lambda0 != "auto" {
            preset.lambda0 = Some(parse_num(&self.lambda0, "lambda0")?);
        }
        if let Some(v) = self.eta {
            preset.eta = v;
        }
        if let Some(v) = self.lambda_t_factor {
            preset.lambda_t_factor = v;
        }
        if let Some(v) = self.mu {
            preset.mu_factor = v;
        }
        if let Some(v) = self.tol {
            preset.tol = v;
        }
        if let Some(v) = self.max_iter {
            preset.max_iter = v;
        }
        if let Some(v) = self.fit_tol {
            preset.fit_tol = Some(v);
        }
        if self.cold_start {
            preset.warm_start = false;
        }
        Ok(preset)
    }
}

#[derive(Args)]
struct SynthArgs {
    /// Inclusive rank range `lo:hi` or a single rank.
    #[arg(long, default_value = "15:35")]
    ranks: String,
    #[arg(long, default_value = "150x150")]
    size: String,
    #[arg(long, default_value_t = 0.5)]
    sample_rate: f64,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value = "lp,scad,log,mcp,etp,nuclear")]
    penalties: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Relative error below which a trial counts as recovered.
    #[arg(long, default_value_t = irnn_core::harness::SUCCESS_THRESHOLD)]
    threshold: f64,
    /// Report paths; `.json` and `.csv` are recognized, comma-separated.
    #[arg(long, default_value = "report.json")]
    out: String,
    /// Also write per-run stage traces to this JSON file.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    solve: SolveArgs,
}

#[derive(Args)]
struct CompleteArgs {
    /// MatrixMarket coordinate file of observed entries.
    #[arg(long)]
    observed: PathBuf,
    #[arg(long, default_value = "log")]
    penalty: String,
    /// Penalty shape parameter; defaults to the benchmark value.
    #[arg(long)]
    gamma: Option<f64>,
    /// Lp exponent.
    #[arg(long)]
    p: Option<f64>,
    /// Use the noisy preset (lambda0 = 10 max|P(M)|, lambda_t = 0.1 lambda0).
    #[arg(long)]
    noisy: bool,
    #[arg(long, default_value = "x.csv")]
    out: PathBuf,
    /// Write per-stage traces as JSON.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    solve: SolveArgs,
}

#[derive(Args)]
struct ImageArgs {
    #[arg(long)]
    input: PathBuf,
    /// `random:<fraction>` or `mask:<path>` (nonzero mask pixels are lost).
    #[arg(long, default_value = "random:0.5")]
    corrupt: String,
    #[arg(long, default_value = "lp,scad,nuclear")]
    penalties: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
    #[command(flatten)]
    solve: SolveArgs,
}

#[derive(Args)]
struct TlrrArgs {
    #[arg(long)]
    tensor: PathBuf,
    #[arg(long, default_value = "log")]
    penalty: String,
    /// One regularization weight per mode.
    #[arg(long, default_value = "1,1,1")]
    lambdas: String,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, default_value_t = irnn_core::solver::DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    /// Update blocks one after another instead of in parallel.
    #[arg(long)]
    sequential: bool,
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad {what}: {s:?}")))
}

fn parse_ranks(s: &str) -> Result<Vec<usize>> {
    match s.split_once(':') {
        Some((lo, hi)) => {
            let (lo, hi): (usize, usize) = (parse_num(lo, "rank")?, parse_num(hi, "rank")?);
            if lo > hi {
                return Err(Error::Parse(format!("empty rank range {s:?}")));
            }
            Ok((lo..=hi).collect())
        }
        None => s.split(',').map(|r| parse_num(r, "rank")).collect(),
    }
}

fn parse_size(s: &str) -> Result<(usize, usize)> {
    let (m, n) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| Error::Parse(format!("size must look like 150x150, got {s:?}")))?;
    Ok((parse_num(m, "size")?, parse_num(n, "size")?))
}

fn penalty(name: &str, gamma: Option<f64>, p: Option<f64>) -> Result<PenaltyParams> {
    let kind: PenaltyKind = name.parse()?;
    let base = benchmark_penalty(kind);
    PenaltyParams::new(kind, base.lambda, gamma.unwrap_or(base.gamma), p.unwrap_or(base.p))
}

fn penalty_list(names: &str) -> Result<Vec<PenaltyParams>> {
    names.split(',').map(|n| penalty(n.trim(), None, None)).collect()
}

fn synth(args: SynthArgs) -> Result<()> {
    let (m, n) = parse_size(&args.size)?;
    let base = PhaseTransitionConfig::new(parse_ranks(&args.ranks)?, penalty_list(&args.penalties)?, args.noise, args.seed);
    let config = PhaseTransitionConfig {
        m,
        n,
        sample_rate: args.sample_rate,
        trials: args.trials,
        success_threshold: args.threshold,
        preset: args.solve.apply(base.preset)?,
        ..base
    };
    let out = run_phase_transition(&config, args.trace.is_some())?;
    let mut wrote_json = None;
    for target in args.out.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let path = Path::new(target);
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => std::fs::write(path, out.report.to_csv())?,
            Some("json") => {
                std::fs::write(path, out.report.to_json()?)?;
                wrote_json = Some(path.to_path_buf());
            }
            _ => return Err(Error::Parse(format!("unknown report format for {target:?}"))),
        }
    }
    let timing = match &wrote_json {
        Some(p) => p.with_extension("timing.json"),
        None => PathBuf::from("timing.json"),
    };
    write_json(&timing, &out.timings)?;
    if let Some(path) = args.trace {
        write_json(&path, &out.traces)?;
    }
    for row in &out.report.rows {
        println!(
            "{:>8} rank {:>3}: success {:.2}  mean error {:.3e}",
            row.penalty, row.rank, row.frequency_of_success, row.mean_relative_error
        );
    }
    Ok(())
}

fn complete(args: CompleteArgs) -> Result<()> {
    let problem = read_completion_problem(&args.observed)?;
    let preset = args.solve.apply(if args.noisy { SolvePreset::noisy() } else { SolvePreset::noise_free() })?;
    let pen = penalty(&args.penalty, args.gamma, args.p)?;
    let (x, traces) = solve_completion(&problem, &pen, &preset)?;
    write_csv_matrix(&args.out, &x)?;
    if let Some(path) = args.trace {
        write_json(&path, &traces)?;
    }
    let iterations: usize = traces.iter().map(|t| t.iterations).sum();
    println!("{} stages, {iterations} iterations", traces.len());
    Ok(())
}

fn image(args: ImageArgs) -> Result<()> {
    let task = ImageTask {
        image: load_rgb(&args.input)?,
        corruption: args.corrupt.parse::<Corruption>()?,
        seed: args.seed,
    };
    let preset = args.solve.apply(SolvePreset::noisy())?;
    let out = run_image_recovery(&task, &penalty_list(&args.penalties)?, &preset)?;
    write_image_outputs(&args.out_dir, &out)?;
    println!("corrupted: {:.2} dB", out.report.corrupted_psnr);
    for r in &out.report.results {
        println!("{:>8}: {:.2} dB", r.penalty, r.psnr);
    }
    Ok(())
}

fn tlrr(args: TlrrArgs) -> Result<()> {
    let tensor = read_tensor(&args.tensor)?;
    let lambdas: Vec<f64> = args.lambdas.split(',').map(|l| parse_num(l, "lambda")).collect::<Result<_>>()?;
    let lambdas: [f64; 3] = lambdas
        .try_into()
        .map_err(|_| Error::Parse("--lambdas needs exactly three values".into()))?;
    let pen = penalty(&args.penalty, args.gamma, args.p)?;
    let config = BlockSolverConfig {
        tol: args.tol,
        max_iter: args.max_iter,
        schedule: if args.sequential {
            irnn_core::BlockSchedule::Sequential
        } else {
            irnn_core::BlockSchedule::Parallel
        },
        ..BlockSolverConfig::default()
    };
    let out = run_tlrr(&tensor, &pen, lambdas, &config)?;
    std::fs::create_dir_all(&args.out_dir)?;
    for (j, p) in out.factors.iter().enumerate() {
        write_csv_matrix(&args.out_dir.join(format!("P{}.csv", j + 1)), p)?;
    }
    write_json(&args.out_dir.join("trace.json"), &out.trace)?;
    std::fs::write(args.out_dir.join("trace.csv"), out.trace.to_csv())?;
    write_json(&args.out_dir.join("summary.json"), &out.summary)?;
    println!(
        "{} iterations, objective {:.6e}, factor ranks {:?}",
        out.summary.iterations, out.summary.final_objective, out.summary.factor_ranks
    );
    Ok(())
}

fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::Synth(a) => synth(a),
        Command::Complete(a) => complete(a),
        Command::Image(a) => image(a),
        Command::Tlrr(a) => tlrr(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
