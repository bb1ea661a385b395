//! Monte Carlo harness: replicated runs on a model grid, the four
//! reproduction experiments, and their tables.
//!
//! Replication `rep` always draws from `Stream::replication(master_seed, rep)`,
//! whatever the grid point or engine, and results are collected in
//! replication order, so parallel execution gives byte-identical output.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds;
use crate::conditioned;
use crate::dense;
use crate::error::{Error, Result};
use crate::model::{sample_signal, ModelConfig, SpikedTensor, DEFAULT_MEMORY_CAP};
use crate::recurrence::{run_recurrence, RecurrenceTrace};
use crate::rng::{labels, Stream};
use crate::stats::{ks_statistic, mean, Proportion};
use crate::table::{Cell, OutputFormat, Table};
use crate::trace::{t_conv, t_hit, t_stop_with_lag, EngineKind, IterateTrace, StopRuleConfig};

/// Correlation level counted as convergence by the probability experiment.
pub const CONVERGENCE_LEVEL: f64 = 0.99;

pub const TRACE_COLUMNS: [&str; 10] = [
    "rep",
    "t",
    "alignment",
    "correlation",
    "overlap",
    "norm",
    "zeta",
    "b",
    "c",
    "z",
];
pub const SUMMARY_COLUMNS: [&str; 10] = [
    "n",
    "k",
    "gamma",
    "rep",
    "t_conv",
    "t_stop",
    "t_hit",
    "final_corr",
    "corr_at_stop",
    "flag",
];
pub const BOUNDS_COLUMNS: [&str; 10] = [
    "n", "k", "gamma", "eta", "c_k", "eps_k", "lower", "upper", "M", "N",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Generate,
    SingleRun,
    Recurrence,
    BoundsTable,
    Histograms,
    Correlation,
    Probability,
    Stopping,
}

/// Signal strength grid, given either normalized or raw.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SnrGrid {
    Gamma(Vec<f64>),
    Lambda(Vec<f64>),
}

impl SnrGrid {
    fn len(&self) -> usize {
        match self {
            SnrGrid::Gamma(v) | SnrGrid::Lambda(v) => v.len(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub ns: Vec<usize>,
    pub ks: Vec<usize>,
    pub snr: SnrGrid,
    pub reps: usize,
    pub engine: EngineKind,
    pub rules: StopRuleConfig,
    pub master_seed: u64,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
    /// Steps compared by the histogram experiment.
    pub steps: Vec<usize>,
    /// Overlap thresholds swept by the stopping experiment.
    pub stop_thresholds: Vec<f64>,
    /// `eta` values for the bounds table.
    pub etas: Vec<f64>,
    /// Test hook: run the dense engine on the noise-free tensor.
    pub noiseless: bool,
    pub memory_cap: u64,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind, ns: Vec<usize>, ks: Vec<usize>, gammas: Vec<f64>) -> Self {
        Self {
            kind,
            ns,
            ks,
            snr: SnrGrid::Gamma(gammas),
            reps: 100,
            engine: EngineKind::Conditioned,
            rules: StopRuleConfig::default(),
            master_seed: 0,
            output: None,
            format: OutputFormat::Csv,
            steps: vec![1, 2, 3, 4],
            stop_thresholds: vec![0.3, 0.5, 0.7],
            etas: vec![0.5],
            noiseless: false,
            memory_cap: DEFAULT_MEMORY_CAP,
        }
    }

    /// Every `(n, k, snr)` combination, in grid order.
    pub fn grid(&self) -> Result<Vec<ModelConfig>> {
        let mut out = Vec::new();
        for &n in &self.ns {
            for &k in &self.ks {
                match &self.snr {
                    SnrGrid::Gamma(gs) => {
                        for &g in gs {
                            out.push(ModelConfig::from_gamma(n, k, g)?);
                        }
                    }
                    SnrGrid::Lambda(ls) => {
                        for &l in ls {
                            out.push(ModelConfig::from_lambda(n, k, l)?);
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::invalid("reps must be >= 1"));
        }
        if self.ns.is_empty() || self.ks.is_empty() || self.snr.len() == 0 {
            return Err(Error::invalid("model grid must be non-empty"));
        }
        self.rules.validate()?;
        let grid = self.grid()?;
        if self.engine == EngineKind::Dense
            || self.noiseless
            || self.kind == ExperimentKind::Generate
        {
            for cfg in &grid {
                cfg.check_dense_budget(self.memory_cap)?;
            }
        }
        if self.noiseless && self.engine != EngineKind::Dense {
            return Err(Error::invalid("the noiseless hook needs the dense engine"));
        }
        if self.stop_thresholds.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
            return Err(Error::invalid("stop thresholds must lie in (0, 1)"));
        }
        if self.steps.contains(&0) {
            return Err(Error::invalid("histogram steps must be >= 1"));
        }
        Ok(())
    }
}

/// One replicated run with the configured engine.
pub fn simulate(
    config: ModelConfig,
    engine: EngineKind,
    rules: &StopRuleConfig,
    master_seed: u64,
    rep: u64,
    noiseless: bool,
    cap: u64,
) -> Result<IterateTrace> {
    match engine {
        EngineKind::Dense => {
            dense::run_replication_with(config, rules, master_seed, rep, noiseless, cap)
        }
        EngineKind::Conditioned => {
            conditioned::check_store_budget(&config, rules.max_iters, cap)?;
            Ok(conditioned::run_replication(config, rules, master_seed, rep)?.0)
        }
    }
}

/// Runs `reps` replications of `config` in parallel, in replication order.
pub fn replicate(
    cfg: &ExperimentConfig,
    config: ModelConfig,
    rules: &StopRuleConfig,
) -> Result<Vec<IterateTrace>> {
    (0..cfg.reps as u64)
        .into_par_iter()
        .map(|rep| {
            simulate(
                config,
                cfg.engine,
                rules,
                cfg.master_seed,
                rep,
                cfg.noiseless,
                cfg.memory_cap,
            )
        })
        .collect()
}

/// Surrogate traces, one per replication, from the recurrence sub-stream.
pub fn replicate_recurrence(
    gamma: f64,
    k: usize,
    steps: usize,
    reps: usize,
    master_seed: u64,
) -> Result<Vec<RecurrenceTrace>> {
    (0..reps as u64)
        .into_par_iter()
        .map(|rep| {
            let mut s = Stream::replication(master_seed, rep).split(labels::RECURRENCE);
            run_recurrence(gamma, k, steps, &mut s)
        })
        .collect()
}

/// Per-replication outcome of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub n: usize,
    pub k: usize,
    pub gamma: f64,
    pub master_seed: u64,
    pub rep: u64,
    pub t_conv: Option<usize>,
    pub t_stop: Option<usize>,
    pub t_hit: Option<usize>,
    pub final_corr: f64,
    /// `|<v~^{T_stop}, v>|`, if the designated iterate was computed.
    pub corr_at_stop: Option<f64>,
    pub trace_len: usize,
    pub flag: String,
}

impl RunSummary {
    pub fn from_trace(
        trace: &IterateTrace,
        rules: &StopRuleConfig,
        stop_threshold: f64,
    ) -> Result<Self> {
        let cfg = trace.config;
        let prov = trace.provenance.unwrap_or(crate::trace::Provenance {
            master_seed: 0,
            rep: 0,
        });
        let t_stop = t_stop_with_lag(trace, stop_threshold, rules.stop_lag);
        Ok(Self {
            n: cfg.n,
            k: cfg.k,
            gamma: cfg.gamma,
            master_seed: prov.master_seed,
            rep: prov.rep,
            t_conv: t_conv(trace, rules.conv_delta),
            t_stop,
            t_hit: t_hit(trace, rules.hit_level(cfg.n, cfg.k)?),
            final_corr: trace.final_correlation(),
            corr_at_stop: t_stop.and_then(|t| trace.correlation_at(t)).map(f64::abs),
            trace_len: trace.records.len(),
            flag: trace.flags.label(),
        })
    }

    fn row(&self) -> Vec<Cell> {
        vec![
            self.n.into(),
            self.k.into(),
            self.gamma.into(),
            self.rep.into(),
            self.t_conv.into(),
            self.t_stop.into(),
            self.t_hit.into(),
            self.final_corr.into(),
            self.corr_at_stop.into(),
            self.flag.as_str().into(),
        ]
    }
}

pub fn summary_table(rows: &[RunSummary]) -> Table {
    let mut t = Table::new(&SUMMARY_COLUMNS);
    for r in rows {
        t.push(r.row());
    }
    t
}

/// Trace rows for one replication.
pub fn push_trace_rows(table: &mut Table, rep: u64, trace: &IterateTrace) {
    for r in &trace.records {
        table.push(vec![
            rep.into(),
            r.t.into(),
            r.alignment.into(),
            r.correlation.into(),
            r.overlap.into(),
            r.norm.into(),
            r.zeta.into(),
            r.b.into(),
            r.c.into(),
            r.z.into(),
        ]);
    }
}

pub fn trace_table(traces: &[IterateTrace]) -> Table {
    let mut t = Table::new(&TRACE_COLUMNS);
    for (i, tr) in traces.iter().enumerate() {
        let rep = tr.provenance.map_or(i as u64, |p| p.rep);
        push_trace_rows(&mut t, rep, tr);
    }
    t
}

// ---------------------------------------------------------------- histograms

/// Samples of `alpha_t` and `X_t` at one grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramPoint {
    pub config: ModelConfig,
    pub steps: Vec<usize>,
    /// `alignment[i]` holds `alpha_{steps[i]}` over replications.
    pub alignment: Vec<Vec<f64>>,
    pub recurrence: Vec<Vec<f64>>,
    pub ks: Vec<f64>,
}

/// `X_t`, with an overflowed trajectory reported as an infinity of the sign
/// it was heading to.
fn recurrence_value(tr: &RecurrenceTrace, t: usize) -> f64 {
    if let Some(&x) = tr.x.get(t) {
        return x;
    }
    let last = tr.x.len() - 1;
    let base = tr.x[last] + tr.z.get(last).copied().unwrap_or(0.0);
    let sign = if (tr.k - 1).is_multiple_of(2) {
        1.0
    } else {
        base.signum()
    } * tr.gamma.signum();
    sign * f64::INFINITY
}

pub fn experiment_histograms(cfg: &ExperimentConfig) -> Result<Vec<HistogramPoint>> {
    cfg.validate()?;
    let max_t = cfg.steps.iter().copied().max().unwrap_or(1);
    let rules = StopRuleConfig {
        max_iters: max_t,
        ..cfg.rules
    };
    cfg.grid()?
        .into_iter()
        .map(|config| {
            let traces = replicate(cfg, config, &rules)?;
            let rec =
                replicate_recurrence(config.gamma, config.k, max_t, cfg.reps, cfg.master_seed)?;
            let mut alignment = Vec::new();
            let mut recurrence = Vec::new();
            let mut ks = Vec::new();
            for &t in &cfg.steps {
                let a: Vec<f64> = traces.iter().map(|tr| tr.records[t].alignment).collect();
                let x: Vec<f64> = rec.iter().map(|r| recurrence_value(r, t)).collect();
                ks.push(ks_statistic(&a, &x)?);
                alignment.push(a);
                recurrence.push(x);
            }
            Ok(HistogramPoint {
                config,
                steps: cfg.steps.clone(),
                alignment,
                recurrence,
                ks,
            })
        })
        .collect()
}

/// Raw samples: `n,k,gamma,source,rep,t,value` with source `alignment` or
/// `recurrence`.
pub fn histogram_samples_table(points: &[HistogramPoint]) -> Table {
    let mut t = Table::new(&["n", "k", "gamma", "source", "rep", "t", "value"]);
    for p in points {
        for (i, &step) in p.steps.iter().enumerate() {
            for (source, samples) in [
                ("alignment", &p.alignment[i]),
                ("recurrence", &p.recurrence[i]),
            ] {
                for (rep, &x) in samples.iter().enumerate() {
                    t.push(vec![
                        p.config.n.into(),
                        p.config.k.into(),
                        p.config.gamma.into(),
                        source.into(),
                        rep.into(),
                        step.into(),
                        x.into(),
                    ]);
                }
            }
        }
    }
    t
}

pub fn histogram_ks_table(points: &[HistogramPoint]) -> Table {
    let mut t = Table::new(&["n", "k", "gamma", "t", "ks", "reps"]);
    for p in points {
        for (i, &step) in p.steps.iter().enumerate() {
            t.push(vec![
                p.config.n.into(),
                p.config.k.into(),
                p.config.gamma.into(),
                step.into(),
                p.ks[i].into(),
                p.alignment[i].len().into(),
            ]);
        }
    }
    t
}

// --------------------------------------------------------------- correlation

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationPoint {
    pub config: ModelConfig,
    pub reps: usize,
    /// Mean of `|<v~^t, v>|` over replications, for `t = 0..=max_iters`.
    pub mean_abs_corr: Vec<f64>,
}

impl CorrelationPoint {
    /// First `t` at which the mean correlation reaches `level`.
    pub fn first_crossing(&self, level: f64) -> Option<usize> {
        self.mean_abs_corr.iter().position(|&c| c >= level)
    }
}

pub fn experiment_correlation(cfg: &ExperimentConfig) -> Result<Vec<CorrelationPoint>> {
    cfg.validate()?;
    cfg.grid()?
        .into_iter()
        .map(|config| {
            let traces = replicate(cfg, config, &cfg.rules)?;
            let mean_abs_corr = (0..=cfg.rules.max_iters)
                .map(|t| {
                    let xs: Vec<f64> = traces
                        .iter()
                        .map(|tr| tr.records[t].correlation.abs())
                        .collect();
                    mean(&xs)
                })
                .collect();
            Ok(CorrelationPoint {
                config,
                reps: cfg.reps,
                mean_abs_corr,
            })
        })
        .collect()
}

pub fn correlation_table(points: &[CorrelationPoint]) -> Table {
    let mut t = Table::new(&["n", "k", "gamma", "t", "mean_abs_corr", "reps"]);
    for p in points {
        for (step, &c) in p.mean_abs_corr.iter().enumerate() {
            t.push(vec![
                p.config.n.into(),
                p.config.k.into(),
                p.config.gamma.into(),
                step.into(),
                c.into(),
                p.reps.into(),
            ]);
        }
    }
    t
}

// --------------------------------------------------------------- probability

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityPoint {
    pub config: ModelConfig,
    pub converged: Proportion,
}

/// Whether some iterate `t >= 1` has `|<v~^t, v>| > level`.
pub fn ever_converged(trace: &IterateTrace, level: f64) -> bool {
    trace
        .records
        .iter()
        .skip(1)
        .any(|r| r.correlation.abs() > level)
}

pub fn experiment_probability(cfg: &ExperimentConfig) -> Result<Vec<ProbabilityPoint>> {
    cfg.validate()?;
    cfg.grid()?
        .into_iter()
        .map(|config| {
            let hits: Vec<bool> = (0..cfg.reps as u64)
                .into_par_iter()
                .map(|rep| {
                    simulate(
                        config,
                        cfg.engine,
                        &cfg.rules,
                        cfg.master_seed,
                        rep,
                        cfg.noiseless,
                        cfg.memory_cap,
                    )
                    .map(|tr| ever_converged(&tr, CONVERGENCE_LEVEL))
                })
                .collect::<Result<_>>()?;
            Ok(ProbabilityPoint {
                config,
                converged: Proportion::new(hits.iter().filter(|&&h| h).count(), cfg.reps),
            })
        })
        .collect()
}

pub fn probability_table(points: &[ProbabilityPoint]) -> Table {
    let mut t = Table::new(&[
        "n",
        "k",
        "gamma",
        "reps",
        "successes",
        "probability",
        "std_error",
    ]);
    for p in points {
        t.push(vec![
            p.config.n.into(),
            p.config.k.into(),
            p.config.gamma.into(),
            p.converged.trials.into(),
            p.converged.successes.into(),
            p.converged.estimate.into(),
            p.converged.std_error.into(),
        ]);
    }
    t
}

// ------------------------------------------------------------------ stopping

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoppingPoint {
    pub config: ModelConfig,
    pub threshold: f64,
    pub runs: Vec<RunSummary>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StoppingResult {
    pub points: Vec<StoppingPoint>,
    /// Traces per grid point (shared by all thresholds).
    pub traces: Vec<(ModelConfig, Vec<IterateTrace>)>,
}

pub fn experiment_stopping(cfg: &ExperimentConfig) -> Result<StoppingResult> {
    cfg.validate()?;
    let mut points = Vec::new();
    let mut traces_out = Vec::new();
    for config in cfg.grid()? {
        let traces = replicate(cfg, config, &cfg.rules)?;
        for &threshold in &cfg.stop_thresholds {
            let runs = traces
                .iter()
                .map(|tr| RunSummary::from_trace(tr, &cfg.rules, threshold))
                .collect::<Result<_>>()?;
            points.push(StoppingPoint {
                config,
                threshold,
                runs,
            });
        }
        traces_out.push((config, traces));
    }
    Ok(StoppingResult {
        points,
        traces: traces_out,
    })
}

/// Summary columns plus a trailing `threshold` column.
pub fn stopping_table(result: &StoppingResult) -> Table {
    let mut cols: Vec<&str> = SUMMARY_COLUMNS.to_vec();
    cols.push("threshold");
    let mut t = Table::new(&cols);
    for p in &result.points {
        for r in &p.runs {
            let mut row = r.row();
            row.push(p.threshold.into());
            t.push(row);
        }
    }
    t
}

/// Trace table with leading `n,k,gamma` columns for every grid point.
pub fn stopping_traces_table(result: &StoppingResult) -> Table {
    let mut cols = vec!["n", "k", "gamma"];
    cols.extend(TRACE_COLUMNS);
    let mut t = Table::new(&cols);
    for (config, traces) in &result.traces {
        let inner = trace_table(traces);
        for row in inner.rows {
            let mut full: Vec<Cell> = vec![config.n.into(), config.k.into(), config.gamma.into()];
            full.extend(row);
            t.push(full);
        }
    }
    t
}

// -------------------------------------------------------------- bounds table

pub fn bounds_table(cfg: &ExperimentConfig) -> Result<Table> {
    let mut t = Table::new(&BOUNDS_COLUMNS);
    for config in cfg.grid()? {
        for &eta in &cfg.etas {
            let (lower, upper) = bounds::conv_bounds(config.n, config.k, config.gamma, eta)?;
            let (m, nn) = bounds::prop_f1_constants(config.k, config.gamma, 0.0)?;
            t.push(vec![
                config.n.into(),
                config.k.into(),
                config.gamma.into(),
                eta.into(),
                bounds::c_k(config.k)?.into(),
                bounds::epsilon_k(config.k)?.into(),
                lower.into(),
                upper.into(),
                m.into(),
                nn.into(),
            ]);
        }
    }
    Ok(t)
}

// ------------------------------------------------------- run / recurrence / generate

/// Replicated runs: trace table and summary table.
pub fn single_runs(cfg: &ExperimentConfig) -> Result<(Table, Table)> {
    cfg.validate()?;
    let mut traces = Vec::new();
    let mut summaries = Vec::new();
    for config in cfg.grid()? {
        let trs = replicate(cfg, config, &cfg.rules)?;
        for tr in &trs {
            summaries.push(RunSummary::from_trace(
                tr,
                &cfg.rules,
                cfg.rules.stop_threshold,
            )?);
        }
        traces.extend(trs);
    }
    Ok((trace_table(&traces), summary_table(&summaries)))
}

/// `k,gamma,rep,t,x,z` for replicated surrogate runs.
pub fn recurrence_table(cfg: &ExperimentConfig) -> Result<Table> {
    if cfg.reps == 0 {
        return Err(Error::invalid("reps must be >= 1"));
    }
    let gammas = match &cfg.snr {
        SnrGrid::Gamma(g) => g.clone(),
        SnrGrid::Lambda(_) => {
            return Err(Error::Usage(
                "recurrence takes --gamma, not --lambda".into(),
            ))
        }
    };
    let mut t = Table::new(&["k", "gamma", "rep", "t", "x", "z"]);
    for &k in &cfg.ks {
        for &g in &gammas {
            let traces =
                replicate_recurrence(g, k, cfg.rules.max_iters, cfg.reps, cfg.master_seed)?;
            for (rep, tr) in traces.iter().enumerate() {
                for (step, &x) in tr.x.iter().enumerate() {
                    t.push(vec![
                        k.into(),
                        g.into(),
                        rep.into(),
                        step.into(),
                        x.into(),
                        tr.z.get(step).copied().into(),
                    ]);
                }
            }
        }
    }
    Ok(t)
}

/// One sampled tensor per grid point (replication 0): rows
/// `n,k,gamma,component,index,value` for the signal and every entry.
pub fn generate_table(cfg: &ExperimentConfig) -> Result<Table> {
    cfg.validate()?;
    let mut t = Table::new(&["n", "k", "gamma", "component", "index", "value"]);
    for config in cfg.grid()? {
        let stream = Stream::replication(cfg.master_seed, 0);
        let signal = sample_signal(config.n, &mut stream.split(labels::SIGNAL))?;
        let tensor = SpikedTensor::sample_with_cap(
            config,
            signal,
            &mut stream.split(labels::NOISE),
            cfg.memory_cap,
        )?;
        let head = |t: &mut Table, comp: &str, i: usize, x: f64| {
            t.push(vec![
                config.n.into(),
                config.k.into(),
                config.gamma.into(),
                comp.into(),
                i.into(),
                x.into(),
            ])
        };
        for (i, &x) in tensor.signal().as_slice().iter().enumerate() {
            head(&mut t, "signal", i, x);
        }
        for (i, &x) in tensor.entries().iter().enumerate() {
            head(&mut t, "entry", i, x);
        }
    }
    Ok(t)
}
