//! Command-line front end: flag parsing into an [`ExperimentConfig`] and
//! dispatch to the experiment drivers.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::experiments::{self as ex, ExperimentConfig, ExperimentKind, SnrGrid};
use crate::model::DEFAULT_MEMORY_CAP;
use crate::table::{write_results, OutputFormat, Table};
use crate::trace::{EngineKind, StopRuleConfig};

#[derive(Debug, Parser)]
#[command(
    name = "tensor-power",
    version,
    about = "Tensor power iteration on the spiked tensor model"
)]
struct Cli {
    #[command(flatten)]
    globals: Globals,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Globals {
    /// Master seed; replication r uses the stream split from (seed, r).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Output file. Secondary tables go next to it as <stem>.<name>.<ext>.
    /// Without it the primary table is printed to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,

    /// Memory cap in bytes for dense tensors and the conditioned store.
    #[arg(long, global = true, default_value_t = DEFAULT_MEMORY_CAP)]
    memory_cap: u64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample one spiked tensor and dump the signal and entries.
    Generate(ModelArgs),
    /// Replicated power iteration runs: per-step traces and summaries.
    Run(ModelArgs),
    /// Simulate the scalar surrogate recurrence.
    Recurrence(ModelArgs),
    /// Tabulate convergence-time bounds and their constants.
    Bounds(BoundsArgs),
    #[command(subcommand)]
    Experiment(ExperimentCommand),
}

#[derive(Debug, Subcommand)]
enum ExperimentCommand {
    /// Marginals of the alignment against the surrogate recurrence.
    Histograms(HistogramArgs),
    /// Mean absolute correlation per iteration.
    Correlation(ModelArgs),
    /// Empirical probability of reaching correlation 0.99.
    Probability(ModelArgs),
    /// Stopping times and correlation at the stop.
    Stopping(StoppingArgs),
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Dimension(s); comma-separated or repeated.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,

    /// Tensor order(s) [default: 3].
    #[arg(long, value_delimiter = ',')]
    k: Vec<usize>,

    /// Normalized signal strength(s).
    #[arg(long, value_delimiter = ',', conflicts_with = "lambda")]
    gamma: Vec<f64>,

    /// Raw signal strength(s).
    #[arg(long, value_delimiter = ',')]
    lambda: Vec<f64>,

    #[arg(long)]
    reps: Option<usize>,

    /// Iteration budget.
    #[arg(long)]
    iters: Option<usize>,

    #[arg(long, value_enum)]
    engine: Option<EngineKind>,

    #[arg(long)]
    conv_delta: Option<f64>,

    #[arg(long)]
    stop_threshold: Option<f64>,

    /// Lag between the two iterates compared by the stopping rule.
    #[arg(long)]
    stop_lag: Option<usize>,

    /// Hitting level exponent: the level is n^eps.
    #[arg(long)]
    hit_eps: Option<f64>,
}

#[derive(Debug, Args)]
struct HistogramArgs {
    #[command(flatten)]
    model: ModelArgs,

    /// Steps to compare [default: 1,2,3,4].
    #[arg(long, value_delimiter = ',')]
    steps: Vec<usize>,
}

#[derive(Debug, Args)]
struct StoppingArgs {
    #[command(flatten)]
    model: ModelArgs,

    /// Overlap thresholds to sweep [default: 0.3,0.5,0.7].
    #[arg(long, value_delimiter = ',')]
    thresholds: Vec<f64>,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,

    #[arg(long, value_delimiter = ',')]
    k: Vec<usize>,

    #[arg(long, value_delimiter = ',', required = true)]
    gamma: Vec<f64>,

    /// [default: 0.5]
    #[arg(long, value_delimiter = ',')]
    eta: Vec<f64>,
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

impl ModelArgs {
    fn into_config(self, kind: ExperimentKind, base: &Globals) -> Result<ExperimentConfig> {
        let needs_n = kind != ExperimentKind::Recurrence;
        if needs_n && self.n.is_empty() {
            return Err(usage("--n is required"));
        }
        let snr = match (self.gamma.is_empty(), self.lambda.is_empty()) {
            (false, true) => SnrGrid::Gamma(self.gamma),
            (true, false) if needs_n => SnrGrid::Lambda(self.lambda),
            (true, false) => return Err(usage("recurrence takes --gamma, not --lambda")),
            (true, true) => return Err(usage("one of --gamma or --lambda is required")),
            (false, false) => return Err(usage("--gamma and --lambda are mutually exclusive")),
        };
        let (default_reps, default_iters) = match kind {
            ExperimentKind::Generate | ExperimentKind::SingleRun | ExperimentKind::Recurrence => {
                (1, 50)
            }
            ExperimentKind::Correlation => (100, 10),
            _ => (100, 50),
        };
        let defaults = StopRuleConfig::default();
        let mut cfg = ExperimentConfig::new(
            kind,
            if needs_n { self.n } else { vec![2] },
            if self.k.is_empty() { vec![3] } else { self.k },
            Vec::new(),
        );
        cfg.snr = snr;
        cfg.reps = self.reps.unwrap_or(default_reps);
        cfg.engine = self.engine.unwrap_or(EngineKind::Conditioned);
        cfg.rules = StopRuleConfig {
            conv_delta: self.conv_delta.unwrap_or(defaults.conv_delta),
            stop_threshold: self.stop_threshold.unwrap_or(defaults.stop_threshold),
            stop_lag: self.stop_lag.unwrap_or(defaults.stop_lag),
            hit_eps: self.hit_eps.or(defaults.hit_eps),
            max_iters: self.iters.unwrap_or(default_iters),
        };
        base.apply_globals(&mut cfg);
        Ok(cfg)
    }
}

impl Globals {
    fn apply_globals(&self, cfg: &mut ExperimentConfig) {
        cfg.master_seed = self.seed;
        cfg.output = self.out.clone();
        cfg.format = self.format;
        cfg.memory_cap = self.memory_cap;
    }
}

impl Cli {
    fn into_config(self) -> Result<ExperimentConfig> {
        let g = &self.globals;
        let cfg = match self.command {
            Command::Generate(m) => m.into_config(ExperimentKind::Generate, g)?,
            Command::Run(m) => m.into_config(ExperimentKind::SingleRun, g)?,
            Command::Recurrence(m) => m.into_config(ExperimentKind::Recurrence, g)?,
            Command::Bounds(b) => {
                let mut cfg = ExperimentConfig::new(
                    ExperimentKind::BoundsTable,
                    b.n,
                    if b.k.is_empty() { vec![3] } else { b.k },
                    b.gamma,
                );
                if !b.eta.is_empty() {
                    cfg.etas = b.eta;
                }
                g.apply_globals(&mut cfg);
                cfg
            }
            Command::Experiment(ExperimentCommand::Histograms(h)) => {
                let max_t = h.steps.iter().copied().max();
                let mut cfg = h.model.into_config(ExperimentKind::Histograms, g)?;
                if !h.steps.is_empty() {
                    cfg.steps = h.steps;
                }
                if let Some(t) = max_t {
                    cfg.rules.max_iters = cfg.rules.max_iters.max(t);
                }
                cfg
            }
            Command::Experiment(ExperimentCommand::Correlation(m)) => {
                m.into_config(ExperimentKind::Correlation, g)?
            }
            Command::Experiment(ExperimentCommand::Probability(m)) => {
                m.into_config(ExperimentKind::Probability, g)?
            }
            Command::Experiment(ExperimentCommand::Stopping(s)) => {
                let mut cfg = s.model.into_config(ExperimentKind::Stopping, g)?;
                if !s.thresholds.is_empty() {
                    cfg.stop_thresholds = s.thresholds;
                }
                cfg
            }
        };
        check(&cfg)?;
        Ok(cfg)
    }
}

/// Validation at parse time: bad values are usage errors, an oversized
/// dense request stays a resource error.
fn check(cfg: &ExperimentConfig) -> Result<()> {
    let res = match cfg.kind {
        ExperimentKind::BoundsTable => cfg.grid().map(|_| ()),
        ExperimentKind::Recurrence => cfg.rules.validate(),
        _ => cfg.validate(),
    };
    res.map_err(|e| match e {
        Error::InvalidArgument(m) => usage(m),
        Error::InvalidDimension(n) => usage(format!("invalid dimension n = {n}: need n >= 2")),
        other => other,
    })
}

/// Parses `argv` (program name first) into a validated configuration.
pub fn parse_cli<I, T>(argv: I) -> Result<ExperimentConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    Cli::try_parse_from(argv)
        .map_err(|e| usage(e.to_string()))?
        .into_config()
}

/// Parses, executes, and reports; returns the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match cli.into_config().and_then(|cfg| execute(&cfg)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// `<dir>/<stem>.<name>.<ext>` next to `out`.
pub fn sibling_path(out: &Path, name: &str, format: OutputFormat) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ext = out
        .extension()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| match format {
            OutputFormat::Csv => "csv".into(),
            OutputFormat::Json => "json".into(),
        });
    out.with_file_name(format!("{stem}.{name}.{ext}"))
}

fn emit(cfg: &ExperimentConfig, primary: &Table, extra: &[(&str, &Table)]) -> Result<()> {
    match &cfg.output {
        Some(out) => {
            write_results(primary, out, cfg.format)?;
            for (name, t) in extra {
                write_results(t, &sibling_path(out, name, cfg.format), cfg.format)?;
            }
        }
        None => match cfg.format {
            OutputFormat::Csv => print!("{}", primary.to_csv_string()),
            OutputFormat::Json => println!("{}", primary.to_json_value()),
        },
    }
    Ok(())
}

/// Runs the configured job and writes its tables.
pub fn execute(cfg: &ExperimentConfig) -> Result<()> {
    match cfg.kind {
        ExperimentKind::Generate => emit(cfg, &ex::generate_table(cfg)?, &[]),
        ExperimentKind::SingleRun => {
            let (traces, summary) = ex::single_runs(cfg)?;
            emit(cfg, &traces, &[("summary", &summary)])
        }
        ExperimentKind::Recurrence => emit(cfg, &ex::recurrence_table(cfg)?, &[]),
        ExperimentKind::BoundsTable => emit(cfg, &ex::bounds_table(cfg)?, &[]),
        ExperimentKind::Histograms => {
            let pts = ex::experiment_histograms(cfg)?;
            for p in &pts {
                for (t, d) in p.steps.iter().zip(&p.ks) {
                    eprintln!(
                        "n={} k={} gamma={} t={t}: KS = {d:.4}",
                        p.config.n, p.config.k, p.config.gamma
                    );
                }
            }
            emit(
                cfg,
                &ex::histogram_samples_table(&pts),
                &[("ks", &ex::histogram_ks_table(&pts))],
            )
        }
        ExperimentKind::Correlation => emit(
            cfg,
            &ex::correlation_table(&ex::experiment_correlation(cfg)?),
            &[],
        ),
        ExperimentKind::Probability => {
            let pts = ex::experiment_probability(cfg)?;
            for p in &pts {
                eprintln!(
                    "n={} k={} gamma={}: P = {:.3} +/- {:.3} ({} reps)",
                    p.config.n,
                    p.config.k,
                    p.config.gamma,
                    p.converged.estimate,
                    p.converged.std_error,
                    p.converged.trials
                );
            }
            emit(cfg, &ex::probability_table(&pts), &[])
        }
        ExperimentKind::Stopping => {
            let res = ex::experiment_stopping(cfg)?;
            emit(
                cfg,
                &ex::stopping_table(&res),
                &[("traces", &ex::stopping_traces_table(&res))],
            )
        }
    }
}
