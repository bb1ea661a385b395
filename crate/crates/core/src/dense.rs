//! Tensor power iteration on a materialized tensor.

use crate::basis::OrthoBasis;
use crate::error::{Error, Result};
use crate::model::{sample_signal, ModelConfig, SpikedTensor, UnitVector, DEFAULT_MEMORY_CAP};
use crate::rng::{labels, Stream};
use crate::trace::{EngineKind, IterateTrace, Provenance, StepRecord, StopRuleConfig, TraceFlags};
use crate::vecops::{dot, normalized};

/// Alignments beyond `1e300^{1/(k-1)}` abort the run.
pub fn alignment_limit(k: usize) -> f64 {
    1e300f64.powf(1.0 / (k as f64 - 1.0))
}

/// One power step: `raw = T[u^{(x)(k-1)}]` and `raw / ||raw||` (the zero
/// vector stays zero). `step` only labels overflow errors.
pub fn power_step(
    tensor: &SpikedTensor,
    current: &[f64],
    step: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let raw = tensor.contract(current)?;
    if raw.iter().any(|x| !x.is_finite()) {
        return Err(Error::Overflow {
            step,
            detail: "non-finite entry in T[u^(k-1)]".into(),
        });
    }
    let (unit, _) = normalized(&raw);
    Ok((raw, unit))
}

/// Runs `rules.max_iters` power steps from `init`, recording every step.
pub fn run(
    tensor: &SpikedTensor,
    init: &UnitVector,
    rules: &StopRuleConfig,
) -> Result<IterateTrace> {
    rules.validate()?;
    let cfg = *tensor.config();
    if init.dim() != cfg.n {
        return Err(Error::invalid(format!(
            "init has dimension {}, expected {}",
            init.dim(),
            cfg.n
        )));
    }
    let k = cfg.k as i32;
    let sqrt_n = (cfg.n as f64).sqrt();
    let v = tensor.signal().as_slice();
    let limit = alignment_limit(cfg.k);

    let mut current = init.as_slice().to_vec();
    let mut record = StepRecord::new(0, 0.0, dot(&current, v));
    record.zeta = Some(1.0);
    record.c = Some(1.0);
    let mut records = vec![record];
    let mut flags = TraceFlags::default();
    let mut basis = OrthoBasis::new();

    for t in 1..=rules.max_iters {
        let prev_corr = records[t - 1].correlation;
        let alignment = cfg.lambda * prev_corr.powi(k - 1);
        if alignment.abs() > limit {
            return Err(Error::Overflow {
                step: t,
                detail: format!("|alignment| = {} exceeds {limit}", alignment.abs()),
            });
        }
        // c_t uses the part of v~^{t-1} inside span{v~^0, .., v~^{t-2}}.
        let parallel_sq: f64 = basis.coefficients(&current).iter().map(|c| c * c).sum();
        let c = (1.0 - parallel_sq.min(1.0).powi(k - 1)).max(0.0).sqrt();
        basis.extend(&current);

        let (raw, next) = power_step(tensor, &current, t)?;
        let norm = crate::vecops::norm(&raw);
        if norm == 0.0 && flags.zero_iterate.is_none() {
            flags.zero_iterate = Some(t);
        }
        let mut rec = StepRecord::new(t, alignment, dot(&next, v));
        rec.overlap = Some(dot(&next, &current));
        rec.norm = norm;
        rec.zeta = (norm > 0.0).then(|| (sqrt_n / norm).powi(k - 1));
        rec.c = Some(c);
        records.push(rec);
        current = next;
    }

    Ok(IterateTrace {
        config: cfg,
        engine: EngineKind::Dense,
        provenance: None,
        records,
        flags,
        final_iterate: current,
    })
}

/// Samples `v`, `v~^0` and the tensor from replication `rep` of
/// `master_seed` and runs power iteration.
pub fn run_replication(
    config: ModelConfig,
    rules: &StopRuleConfig,
    master_seed: u64,
    rep: u64,
) -> Result<IterateTrace> {
    run_replication_with(config, rules, master_seed, rep, false, DEFAULT_MEMORY_CAP)
}

/// As [`run_replication`]; `noiseless` replaces the noise by zeros.
pub fn run_replication_with(
    config: ModelConfig,
    rules: &StopRuleConfig,
    master_seed: u64,
    rep: u64,
    noiseless: bool,
    cap: u64,
) -> Result<IterateTrace> {
    config.check_dense_budget(cap)?;
    let stream = Stream::replication(master_seed, rep);
    let signal = sample_signal(config.n, &mut stream.split(labels::SIGNAL))?;
    let init = sample_signal(config.n, &mut stream.split(labels::INIT))?;
    let tensor = if noiseless {
        SpikedTensor::noiseless(config, signal)?
    } else {
        SpikedTensor::sample_with_cap(config, signal, &mut stream.split(labels::NOISE), cap)?
    };
    let mut trace = run(&tensor, &init, rules)?;
    trace.provenance = Some(Provenance { master_seed, rep });
    Ok(trace)
}
