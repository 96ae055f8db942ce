//! `ugleason`: round trips, weight audits, reconstruction from sample files,
//! and the dimension-2 counterexample, all with JSON output.

mod io;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use ugleason::experiment::{counterexample_frame, run_counterexample, run_roundtrip, DEFAULT_EXTRA_SAMPLES};
use ugleason::frame::{audit_weight, BasisFamily, FrameFunction, FrameSamples};
use ugleason::linalg::{random_psd, Operator, SpaceSpec};
use ugleason::reconstruct::{solve_t, DesignSystem, ReconstructionResult};
use ugleason::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags or unusable input; exit 2.
    #[error("{0}")]
    Input(String),
    /// Tolerance or solver failure; exit 1.
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Failure(_) => 1,
            Self::Input(_) => 2,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidSpace(_)
            | Error::InvalidArgument(_)
            | Error::DimensionOverflow { .. }
            | Error::DimensionMismatch { .. }
            | Error::SpaceMismatch(_)
            | Error::NotUnitVector { .. }
            | Error::NonFinite
            | Error::NotPsd(_)
            | Error::NotHermitian(_)
            | Error::Json(_) => Self::Input(e.to_string()),
            _ => Self::Failure(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "ugleason", version, about = "Unentangled frame functions: reconstruction and basis-sum audits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Random PSD operator -> frame values -> reconstructed operator.
    Roundtrip {
        #[command(flatten)]
        run: RunArgs,
        /// Also write the frame samples used (spanning grid plus extra random tuples).
        #[arg(long)]
        samples_out: Option<PathBuf>,
        /// Random simple tensors appended to the samples file.
        #[arg(long, default_value_t = DEFAULT_EXTRA_SAMPLES)]
        extra: usize,
    },
    /// Sum a frame function over sampled unentangled bases and check the sums agree.
    Audit {
        #[command(flatten)]
        run: RunArgs,
        /// Built-in frame function, ignored when --in is given.
        #[arg(long, value_enum, default_value_t = FrameChoice::Induced)]
        frame: FrameChoice,
    },
    /// Least-squares reconstruction of T from a frame-samples file.
    Reconstruct {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Pathological sine frame on the dimension-2 factors times an honest frame elsewhere.
    Counterexample {
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum FrameChoice {
    /// Tr((⊗ pₖ) T) for a random PSD T.
    Induced,
    /// The counterexample product frame; needs a dimension-2 factor.
    Pathological,
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    /// Factor dimensions, comma separated.
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma list of product|branching|patchwork|searched.
    #[arg(long, value_delimiter = ',')]
    families: Option<Vec<BasisFamily>>,
}

/// Validated flags.
#[derive(Debug, Clone)]
struct RunConfig {
    dims: Option<SpaceSpec>,
    seed: u64,
    tol: f64,
    trials: usize,
    input: Option<PathBuf>,
    output: Option<PathBuf>,
    families: Vec<BasisFamily>,
}

impl RunArgs {
    fn validate(self, default_tol: f64, default_trials: usize) -> Result<RunConfig, CliError> {
        let dims = self.dims.map(SpaceSpec::new).transpose()?;
        let tol = self.tol.unwrap_or(default_tol);
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::Input(format!("--tol must be positive, got {tol}")));
        }
        let trials = self.trials.unwrap_or(default_trials);
        if trials == 0 {
            return Err(CliError::Input("--trials must be at least 1".into()));
        }
        let families = self.families.unwrap_or_else(|| BasisFamily::ALL.to_vec());
        if families.is_empty() {
            return Err(CliError::Input("--families is empty".into()));
        }
        Ok(RunConfig { dims, seed: self.seed, tol, trials, input: self.input, output: self.out, families })
    }
}

impl RunConfig {
    fn require_dims(&self) -> Result<&SpaceSpec, CliError> {
        self.dims.as_ref().ok_or_else(|| CliError::Input("--dims is required".into()))
    }

    fn emit<T: Serialize>(&self, report: &T) -> Result<(), CliError> {
        let text = io::to_json(report)?;
        if let Some(path) = &self.output {
            io::write_atomic(path, &text)?;
        }
        let mut stdout = std::io::stdout().lock();
        match writeln!(stdout, "{text}") {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Failure(format!("stdout: {e}"))),
            _ => Ok(()),
        }
    }
}

fn cmd_roundtrip(cfg: RunConfig, samples_out: Option<&Path>, extra: usize) -> Result<(), CliError> {
    let spec = cfg.require_dims()?;
    let rt = run_roundtrip(spec, cfg.seed, extra)?;
    if let Some(path) = samples_out {
        io::write_atomic(path, &io::to_json(&rt.samples)?)?;
    }
    cfg.emit(&rt.report)?;
    eprintln!(
        "roundtrip {spec} seed {}: error {:.3e}, residual {:.3e}, condition {:.3e}",
        cfg.seed, rt.report.error, rt.report.residual, rt.report.condition
    );
    if rt.report.error <= cfg.tol {
        Ok(())
    } else {
        Err(CliError::Failure(format!("reconstruction error {:.3e} exceeds tolerance {:.3e}", rt.report.error, cfg.tol)))
    }
}

/// Operator JSON is used as `T`; a samples file is reconstructed first.
fn frame_from_file(path: &Path, dims: Option<&SpaceSpec>) -> Result<FrameFunction, CliError> {
    let value: Value = io::read_json(path)?;
    let at = |e: serde_json::Error| CliError::Input(format!("{}: {e}", path.display()));
    if value.get("samples").is_some() {
        let samples: FrameSamples = serde_json::from_value(value).map_err(at)?;
        if dims.is_some_and(|d| *d != samples.space) {
            return Err(CliError::Input(format!("--dims disagrees with the samples space {}", samples.space)));
        }
        let r = solve_t(&DesignSystem::from_samples(&samples)?)?;
        Ok(FrameFunction::operator_induced(samples.space, r.t_hat)?)
    } else {
        let t: Operator = serde_json::from_value(value).map_err(at)?;
        let spec = match dims {
            Some(d) => d.clone(),
            None => SpaceSpec::single(t.dim())?,
        };
        Ok(FrameFunction::operator_induced(spec, t)?)
    }
}

fn cmd_audit(cfg: RunConfig, frame: FrameChoice) -> Result<(), CliError> {
    let f = match (&cfg.input, frame) {
        (Some(path), _) => frame_from_file(path, cfg.dims.as_ref())?,
        (None, FrameChoice::Induced) => {
            let spec = cfg.require_dims()?;
            FrameFunction::operator_induced(spec.clone(), random_psd(spec.total_dim(), cfg.seed))?
        }
        (None, FrameChoice::Pathological) => counterexample_frame(cfg.require_dims()?, cfg.seed)?,
    };
    let spec = f.space().clone();
    let report = audit_weight(&f, &spec, &cfg.families, cfg.trials, cfg.seed, cfg.tol)?;
    cfg.emit(&report)?;
    if report.is_constant() {
        Ok(())
    } else {
        Err(CliError::Failure(format!("basis sums spread {:.3e} beyond tolerance {:.3e}", report.spread, cfg.tol)))
    }
}

fn cmd_reconstruct(cfg: RunConfig) -> Result<(), CliError> {
    let path = cfg.input.as_ref().ok_or_else(|| CliError::Input("--in <samples.json> is required".into()))?;
    let samples: FrameSamples = io::read_json(path)?;
    if samples.samples.is_empty() {
        return Err(CliError::Input(format!("{}: no samples", path.display())));
    }
    if cfg.dims.as_ref().is_some_and(|d| *d != samples.space) {
        return Err(CliError::Input(format!("--dims disagrees with the samples space {}", samples.space)));
    }
    let ds = DesignSystem::from_samples(&samples)?;
    let result: ReconstructionResult = solve_t(&ds)?;
    if !result.unique {
        eprintln!("warning: rank deficient design ({} of {} unknowns determined)", result.rank, ds.unknowns());
    }
    cfg.emit(&result)
}

fn cmd_counterexample(cfg: RunConfig) -> Result<(), CliError> {
    let spec = cfg.require_dims()?;
    let report = run_counterexample(spec, cfg.seed, cfg.trials, &cfg.families, cfg.tol)?;
    cfg.emit(&report)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Roundtrip { run, samples_out, extra } => {
            cmd_roundtrip(run.validate(1e-8, 1)?, samples_out.as_deref(), extra)
        }
        Command::Audit { run, frame } => cmd_audit(run.validate(1e-9, 20)?, frame),
        Command::Reconstruct { run } => cmd_reconstruct(run.validate(1e-8, 1)?),
        Command::Counterexample { run } => cmd_counterexample(run.validate(1e-9, 20)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
