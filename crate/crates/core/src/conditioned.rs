//! Exact-law simulation of power iteration without the `n^k` tensor.
//!
//! Let `q_0, q_1, ..` be the orthonormal basis obtained by Gram-Schmidt on
//! the iterates `v~^0, v~^1, ..`. The noise enters power iteration only
//! through the vectors `w_{i_1..i_{k-1}} = W[q_{i_1} (x) .. (x) q_{i_{k-1}}]`,
//! which are i.i.d. `N(0, I_n)`, and those whose multi-index contains the
//! newest basis index are independent of everything revealed so far. So
//!
//! ```text
//! v^{t+1} = alpha_{t+1} v + sum_{H_t} beta^(t) w,   beta^(t)_{i..} = prod_j <v~^t, q_{i_j}>
//! ```
//!
//! can be sampled by drawing each `w` lazily, the first time its
//! multi-index appears. The old-shell part of the sum is `h_{t+1}`; the
//! new-shell part is `c_{t+1} g_{t+1}` with `g_{t+1} ~ N(0, I_n)`.
//!
//! Two Gaussians share the letter `g` in the literature: the initialization
//! draw (here `init_gaussian`, normalized into `v~^0`) and the per-step shell
//! aggregate `g_t` (here the `shell_gaussian`). They are unrelated.

use serde::{Deserialize, Serialize};

use crate::basis::OrthoBasis;
use crate::error::{Error, Result};
use crate::model::{sample_signal, ModelConfig, UnitVector, DEFAULT_MEMORY_CAP};
use crate::rng::{labels, Stream};
use crate::trace::{EngineKind, IterateTrace, Provenance, StepRecord, StopRuleConfig, TraceFlags};
use crate::vecops::{axpy, dot, norm, normalized};

/// Error terms of the alignment recurrence at step `t`:
/// `alpha_{t+1} = gamma zeta_t (alpha_t + b_t + c_t z_t)^{k-1}`.
///
/// At `t = 0` the convention is `zeta = 1, b = 0, c = 1` and `z` is
/// `sqrt(n) <v, v~^0>`, which is exactly what makes the identity hold there;
/// it is only asymptotically standard normal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorTermRecord {
    pub t: usize,
    pub zeta: f64,
    pub b: f64,
    pub c: f64,
    pub z: f64,
}

/// `prod_j coeffs[i_j]`.
pub fn beta_from_coeffs(coeffs: &[f64], multi_index: &[usize]) -> Result<f64> {
    multi_index.iter().try_fold(1.0, |acc, &i| {
        coeffs.get(i).map(|c| acc * c).ok_or_else(|| {
            Error::invalid(format!(
                "basis index {i} out of range (have {})",
                coeffs.len()
            ))
        })
    })
}

/// Multi-indices in `{0..=d}^{len}` containing `d`, in lexicographic order.
pub fn shell_indices(d: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity((d + 1).pow(len as u32) - d.pow(len as u32));
    let mut idx = vec![0usize; len];
    loop {
        if idx.contains(&d) {
            out.push(idx.clone());
        }
        // odometer, last position fastest
        let mut pos = len;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            if idx[pos] < d {
                idx[pos] += 1;
                for x in &mut idx[pos + 1..] {
                    *x = 0;
                }
                break;
            }
        }
    }
}

/// Bytes of Gaussian storage after `steps` steps: `(steps+1)^{k-1} n` doubles.
pub fn projected_store_bytes(n: usize, k: usize, steps: usize) -> u128 {
    (steps as u128 + 1)
        .saturating_pow(k as u32 - 1)
        .saturating_mul(n as u128)
        .saturating_mul(8)
}

#[derive(Clone, Debug)]
pub struct ConditioningState {
    config: ModelConfig,
    signal: Vec<f64>,
    basis: OrthoBasis,
    /// `<v~^t, q_i>` for every basis vector.
    coeffs: Vec<f64>,
    /// Whether `v~^t` contributed the newest basis vector.
    newest_is_current: bool,
    /// Multi-indices of the stored Gaussians, `k - 1` per entry, in draw order.
    w_index: Vec<usize>,
    /// Stored Gaussians, `n` per entry.
    w_data: Vec<f64>,
    /// Gaussians exist for every multi-index in `{0..drawn_dim}^{k-1}`.
    drawn_dim: usize,
    t: usize,
    alignment: f64,
    raw: Vec<f64>,
    current: Vec<f64>,
    terms: ErrorTermRecord,
    flags: TraceFlags,
    noise: Stream,
}

impl ConditioningState {
    /// Draws `v`, `v~^0` and the Gaussian store from the sub-streams of
    /// `stream` (same labels as the dense engine).
    pub fn init(config: ModelConfig, stream: &Stream) -> Result<Self> {
        let signal = sample_signal(config.n, &mut stream.split(labels::SIGNAL))?;
        let init = sample_signal(config.n, &mut stream.split(labels::INIT))?;
        Self::with_vectors(config, &signal, &init, stream.split(labels::NOISE))
    }

    pub fn with_vectors(
        config: ModelConfig,
        signal: &UnitVector,
        init: &UnitVector,
        noise: Stream,
    ) -> Result<Self> {
        config.validate()?;
        if signal.dim() != config.n || init.dim() != config.n {
            return Err(Error::invalid("signal and init must have dimension n"));
        }
        let v = signal.as_slice().to_vec();
        let current = init.as_slice().to_vec();
        let mut basis = OrthoBasis::new();
        basis.extend(&current);
        let coeffs = basis.coefficients(&current);
        let z0 = (config.n as f64).sqrt() * dot(&v, &current);
        Ok(Self {
            config,
            signal: v,
            basis,
            coeffs,
            newest_is_current: true,
            w_index: Vec::new(),
            w_data: Vec::new(),
            drawn_dim: 0,
            t: 0,
            alignment: 0.0,
            raw: current.clone(),
            current,
            terms: ErrorTermRecord {
                t: 0,
                zeta: 1.0,
                b: 0.0,
                c: 1.0,
                z: z0,
            },
            flags: TraceFlags::default(),
            noise,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn signal(&self) -> &[f64] {
        &self.signal
    }

    pub fn step_index(&self) -> usize {
        self.t
    }

    pub fn basis(&self) -> &OrthoBasis {
        &self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn current(&self) -> &[f64] {
        &self.current
    }

    /// `v^t` before normalization.
    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    pub fn flags(&self) -> &TraceFlags {
        &self.flags
    }

    /// Error terms for the current step.
    pub fn error_terms(&self) -> ErrorTermRecord {
        self.terms
    }

    /// The record for the current step `t`.
    pub fn record(&self, previous: Option<&[f64]>) -> StepRecord {
        let mut r = StepRecord::new(self.t, self.alignment, dot(&self.current, &self.signal));
        r.overlap = previous.map(|p| dot(&self.current, p));
        r.norm = norm(&self.raw);
        r.zeta = Some(self.terms.zeta);
        r.b = Some(self.terms.b);
        r.c = Some(self.terms.c);
        r.z = Some(self.terms.z);
        r
    }

    /// Number of stored Gaussian vectors.
    pub fn w_count(&self) -> usize {
        self.w_index.len() / (self.config.k - 1)
    }

    /// Stored Gaussian for `multi_index`, if drawn.
    pub fn w(&self, multi_index: &[usize]) -> Option<&[f64]> {
        let km1 = self.config.k - 1;
        let n = self.config.n;
        self.w_index
            .chunks_exact(km1)
            .position(|ix| ix == multi_index)
            .map(|j| &self.w_data[j * n..(j + 1) * n])
    }

    /// `beta^(t)` for a multi-index of basis indices.
    pub fn beta_coefficient(&self, multi_index: &[usize]) -> Result<f64> {
        if multi_index.len() != self.config.k - 1 {
            return Err(Error::invalid(format!(
                "multi-index has {} entries, expected k - 1 = {}",
                multi_index.len(),
                self.config.k - 1
            )));
        }
        beta_from_coeffs(&self.coeffs, multi_index)
    }

    /// `sum_i c_i^2`; 1 when `v~^t` lies in the span of the basis.
    pub fn coeff_square_sum(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// `sum_{H} beta^2 = (sum_i c_i^2)^{k-1}` over all multi-indices of the basis.
    pub fn beta_square_sum(&self) -> f64 {
        self.coeff_square_sum().powi(self.config.k as i32 - 1)
    }

    /// `||v~^t_par||`: the part of `v~^t` in the span of the earlier iterates.
    pub fn parallel_norm(&self) -> f64 {
        let m = if self.newest_is_current {
            self.coeffs.len() - 1
        } else {
            self.coeffs.len()
        };
        self.coeffs[..m].iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    fn draw_new_shells(&mut self) {
        let km1 = self.config.k - 1;
        let n = self.config.n;
        while self.drawn_dim < self.basis.len() {
            for ix in shell_indices(self.drawn_dim, km1) {
                self.w_index.extend_from_slice(&ix);
                let start = self.w_data.len();
                self.w_data.resize(start + n, 0.0);
                self.noise.fill_standard_normal(&mut self.w_data[start..]);
            }
            self.drawn_dim += 1;
        }
    }

    /// Advances one power step. Returns the new step record and error terms.
    pub fn step(&mut self) -> Result<(StepRecord, ErrorTermRecord)> {
        let cfg = self.config;
        let k = cfg.k as i32;
        let n = cfg.n;
        let km1 = cfg.k - 1;
        let t = self.t;

        let old_count = self.w_count();
        self.draw_new_shells();

        let corr = dot(&self.current, &self.signal);
        let alignment = cfg.lambda * corr.powi(k - 1);
        let limit = crate::dense::alignment_limit(cfg.k);
        if alignment.abs() > limit {
            return Err(Error::Overflow {
                step: t + 1,
                detail: format!("|alignment| = {} exceeds {limit}", alignment.abs()),
            });
        }

        let mut h = vec![0.0; n];
        let mut fresh = vec![0.0; n];
        for (j, ix) in self.w_index.chunks_exact(km1).enumerate() {
            let beta: f64 = ix.iter().map(|&i| self.coeffs[i]).product();
            if beta == 0.0 {
                continue;
            }
            let w = &self.w_data[j * n..(j + 1) * n];
            if j < old_count {
                axpy(beta, w, &mut h);
            } else {
                axpy(beta, w, &mut fresh);
            }
        }
        let par = self.parallel_norm();
        let c = (1.0 - (par * par).min(1.0).powi(k - 1)).max(0.0).sqrt();
        let z = if c > 0.0 {
            dot(&fresh, &self.signal) / c
        } else {
            0.0
        };
        let b = dot(&h, &self.signal);

        let mut raw = h;
        axpy(1.0, &fresh, &mut raw);
        axpy(alignment, &self.signal, &mut raw);
        if raw.iter().any(|x| !x.is_finite()) {
            return Err(Error::Overflow {
                step: t + 1,
                detail: "non-finite iterate".into(),
            });
        }
        let (next, r) = normalized(&raw);
        let zeta = if r > 0.0 {
            ((n as f64).sqrt() / r).powi(k - 1)
        } else {
            f64::INFINITY
        };

        let previous = std::mem::replace(&mut self.current, next);
        self.raw = raw;
        self.t = t + 1;
        self.alignment = alignment;
        self.terms = ErrorTermRecord {
            t: t + 1,
            zeta,
            b,
            c,
            z,
        };

        if r == 0.0 {
            self.flags.zero_iterate.get_or_insert(t + 1);
            self.newest_is_current = false;
        } else {
            let ext = self.basis.extend(&self.current);
            self.newest_is_current = ext.added();
            if !ext.added() {
                self.flags.basis_degenerate.push(t + 1);
            }
        }
        self.coeffs = self.basis.coefficients(&self.current);

        Ok((self.record(Some(&previous)), self.terms))
    }
}

/// Runs `rules.max_iters` conditioned steps with the default memory cap.
pub fn run_conditioned(
    config: ModelConfig,
    rules: &StopRuleConfig,
    stream: &Stream,
) -> Result<(IterateTrace, Vec<ErrorTermRecord>)> {
    run_conditioned_with_cap(config, rules, stream, DEFAULT_MEMORY_CAP)
}

pub fn run_conditioned_with_cap(
    config: ModelConfig,
    rules: &StopRuleConfig,
    stream: &Stream,
    cap: u64,
) -> Result<(IterateTrace, Vec<ErrorTermRecord>)> {
    rules.validate()?;
    check_store_budget(&config, rules.max_iters, cap)?;
    let state = ConditioningState::init(config, stream)?;
    run_from(state, rules.max_iters)
}

pub fn check_store_budget(config: &ModelConfig, max_iters: usize, cap: u64) -> Result<()> {
    let required = projected_store_bytes(config.n, config.k, max_iters);
    if required > cap as u128 {
        return Err(Error::Resource {
            what: format!(
                "Gaussian store of (max_iters + 1)^(k-1) = {} shell vectors of length n = {}",
                (max_iters as u128 + 1).saturating_pow(config.k as u32 - 1),
                config.n
            ),
            required,
            cap,
            hint: "; lower --iters",
        });
    }
    Ok(())
}

/// Steps an initialized state `steps` times.
pub fn run_from(
    mut state: ConditioningState,
    steps: usize,
) -> Result<(IterateTrace, Vec<ErrorTermRecord>)> {
    let mut records = vec![state.record(None)];
    let mut terms = vec![state.error_terms()];
    for _ in 0..steps {
        let (rec, et) = state.step()?;
        records.push(rec);
        terms.push(et);
    }
    let trace = IterateTrace {
        config: state.config,
        engine: EngineKind::Conditioned,
        provenance: None,
        records,
        flags: state.flags.clone(),
        final_iterate: state.current.clone(),
    };
    Ok((trace, terms))
}

/// Conditioned run for replication `rep` of `master_seed`.
pub fn run_replication(
    config: ModelConfig,
    rules: &StopRuleConfig,
    master_seed: u64,
    rep: u64,
) -> Result<(IterateTrace, Vec<ErrorTermRecord>)> {
    let stream = Stream::replication(master_seed, rep);
    let (mut trace, terms) = run_conditioned(config, rules, &stream)?;
    trace.provenance = Some(Provenance { master_seed, rep });
    Ok((trace, terms))
}
