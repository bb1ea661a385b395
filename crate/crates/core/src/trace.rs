//! Per-step trajectory records and the stopping/hitting-time functionals
//! evaluated on them.

use serde::{Deserialize, Serialize};

use crate::bounds;
use crate::error::{Error, Result};
use crate::model::ModelConfig;

/// Which engine produced a trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Dense,
    Conditioned,
}

impl std::fmt::Display for EngineKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EngineKind::Dense => "dense",
            EngineKind::Conditioned => "conditioned",
        })
    }
}

/// `(master_seed, replication)` that reproduces a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub master_seed: u64,
    pub rep: u64,
}

/// One step `t` of power iteration.
///
/// `alignment` is `alpha_t = lambda <v, v~^{t-1}>^{k-1}` (0 at t = 0),
/// `correlation` is `<v~^t, v>`, `overlap` is `<v~^t, v~^{t-1}>` (absent at
/// t = 0) and `norm` is `||v^t||` (1 at t = 0). The error terms describe
/// the decomposition `<v^t, v> = alpha_t + b_t + c_t Z_t`; the dense engine
/// can only fill `zeta` and `c`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    pub alignment: f64,
    pub correlation: f64,
    pub overlap: Option<f64>,
    pub norm: f64,
    pub zeta: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
    pub z: Option<f64>,
}

impl StepRecord {
    pub fn new(t: usize, alignment: f64, correlation: f64) -> Self {
        Self {
            t,
            alignment,
            correlation,
            overlap: None,
            norm: 1.0,
            zeta: None,
            b: None,
            c: None,
            z: None,
        }
    }
}

/// Anomalies seen during a run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceFlags {
    /// Step at which the iterate became exactly zero; the run froze there.
    pub zero_iterate: Option<usize>,
    /// Steps at which a new iterate was (numerically) in the span of the
    /// earlier ones, so no new basis direction was added.
    pub basis_degenerate: Vec<usize>,
}

impl TraceFlags {
    pub fn is_clean(&self) -> bool {
        self.zero_iterate.is_none() && self.basis_degenerate.is_empty()
    }

    /// Short label for tabular output.
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.zero_iterate.is_some() {
            parts.push("zero-iterate");
        }
        if !self.basis_degenerate.is_empty() {
            parts.push("basis-degenerate");
        }
        if parts.is_empty() {
            "ok".to_string()
        } else {
            parts.join("+")
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterateTrace {
    pub config: ModelConfig,
    pub engine: EngineKind,
    pub provenance: Option<Provenance>,
    pub records: Vec<StepRecord>,
    pub flags: TraceFlags,
    /// The last normalized iterate `v~^T`.
    pub final_iterate: Vec<f64>,
}

impl IterateTrace {
    /// Number of power steps taken (records minus the t = 0 record).
    pub fn steps(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn correlation_at(&self, t: usize) -> Option<f64> {
        self.records.get(t).map(|r| r.correlation)
    }

    pub fn final_correlation(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.correlation)
    }

    pub fn alignments(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.alignment)
    }

    pub fn correlations(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.correlation)
    }
}

/// Stopping/convergence parameters shared by the engines and experiments.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StopRuleConfig {
    /// `delta` in `|<v~^t, v>| >= 1 - delta`.
    pub conv_delta: f64,
    /// Overlap threshold of the stopping rule.
    pub stop_threshold: f64,
    /// The rule fires at the first `t` with `|<v~^{t-lag}, v~^{t-lag-1}>| >=
    /// threshold`. The default lag is 2; lag 0 gives the plain
    /// consecutive-iterate variant.
    pub stop_lag: usize,
    /// Exponent `eps` of the hitting level `n^eps`; `None` means `eps_k`.
    pub hit_eps: Option<f64>,
    pub max_iters: usize,
}

impl Default for StopRuleConfig {
    fn default() -> Self {
        Self {
            conv_delta: 0.01,
            stop_threshold: 0.5,
            stop_lag: 2,
            hit_eps: None,
            max_iters: 50,
        }
    }
}

impl StopRuleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.conv_delta > 0.0 && self.conv_delta < 1.0) {
            return Err(Error::invalid(format!(
                "conv_delta = {} not in (0, 1)",
                self.conv_delta
            )));
        }
        if !(self.stop_threshold > 0.0 && self.stop_threshold < 1.0) {
            return Err(Error::invalid(format!(
                "stop_threshold = {} not in (0, 1)",
                self.stop_threshold
            )));
        }
        if let Some(eps) = self.hit_eps {
            if !eps.is_finite() {
                return Err(Error::invalid("hit_eps must be finite"));
            }
        }
        Ok(())
    }

    /// The hitting level `n^eps` (with `eps_k` unless overridden).
    pub fn hit_level(&self, n: usize, k: usize) -> Result<f64> {
        let eps = match self.hit_eps {
            Some(e) => e,
            None => bounds::epsilon_k(k)?,
        };
        Ok((n as f64).powf(eps))
    }
}

fn first_from_one(values: impl Iterator<Item = f64>, pred: impl Fn(f64) -> bool) -> Option<usize> {
    values
        .enumerate()
        .skip(1)
        .find(|&(_, x)| pred(x))
        .map(|(t, _)| t)
}

/// Convergence time: the first `t >= 1` with `|<v~^t, v>| >= 1 - delta`.
pub fn t_conv(trace: &IterateTrace, delta: f64) -> Option<usize> {
    first_from_one(trace.correlations(), |c| c.abs() >= 1.0 - delta)
}

/// Hitting time: the first `t >= 1` with `|alpha_t| >= level`.
pub fn t_hit(trace: &IterateTrace, level: f64) -> Option<usize> {
    first_from_one(trace.alignments(), |a| a.abs() >= level)
}

/// Stopping time with the default lag of 2: the first `t` with
/// `|<v~^{t-2}, v~^{t-3}>| >= threshold`, so never earlier than 3.
pub fn t_stop(trace: &IterateTrace, threshold: f64) -> Option<usize> {
    t_stop_with_lag(trace, threshold, 2)
}

/// The result may exceed the number of recorded steps: an overlap seen at
/// the last step designates an iterate that was never computed.
pub fn t_stop_with_lag(trace: &IterateTrace, threshold: f64, lag: usize) -> Option<usize> {
    trace
        .records
        .iter()
        .skip(1)
        .find(|r| r.overlap.is_some_and(|o| o.abs() >= threshold))
        .map(|r| r.t + lag)
}
