//! The scalar surrogate `X_0 = 0, X_{t+1} = gamma (X_t + Z_t)^{k-1}` and the
//! deterministic envelopes `b_{t+1} = gamma (1 +/- Delta)^k b_t^{k-1}` that
//! sandwich it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Stream;

/// `gamma (x + z)^{k-1}` with an integer power.
pub fn recurrence_step(x: f64, z: f64, gamma: f64, k: usize) -> Result<f64> {
    if k < 3 {
        return Err(Error::invalid(format!("tensor order k = {k}: need k >= 3")));
    }
    let next = gamma * (x + z).powi(k as i32 - 1);
    if !next.is_finite() {
        return Err(Error::Overflow {
            step: 0,
            detail: format!("gamma (x + z)^(k-1) with x = {x}, z = {z}"),
        });
    }
    Ok(next)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceTrace {
    pub gamma: f64,
    pub k: usize,
    /// `X_0, X_1, ..`
    pub x: Vec<f64>,
    /// `Z_0, Z_1, ..`; `z[t]` drives `x[t] -> x[t+1]`.
    pub z: Vec<f64>,
    /// Set when `X` left the representable range; `x` stops at the last
    /// finite value.
    pub overflowed: bool,
}

impl RecurrenceTrace {
    /// Recomputes `X` from the recorded noise.
    pub fn replay(&self) -> Result<Vec<f64>> {
        let mut x = vec![0.0];
        for (t, &z) in self.z.iter().enumerate().take(self.x.len() - 1) {
            x.push(recurrence_step(x[t], z, self.gamma, self.k)?);
        }
        Ok(x)
    }
}

/// Simulates `steps` transitions from `X_0 = 0`, drawing `Z_t` from `rng`.
pub fn run_recurrence(
    gamma: f64,
    k: usize,
    steps: usize,
    rng: &mut Stream,
) -> Result<RecurrenceTrace> {
    if k < 3 {
        return Err(Error::invalid(format!("tensor order k = {k}: need k >= 3")));
    }
    let mut x = Vec::with_capacity(steps + 1);
    let mut z = Vec::with_capacity(steps);
    x.push(0.0);
    let mut overflowed = false;
    for t in 0..steps {
        let zt = rng.standard_normal();
        z.push(zt);
        match recurrence_step(x[t], zt, gamma, k) {
            Ok(next) => x.push(next),
            Err(_) => {
                overflowed = true;
                break;
            }
        }
    }
    Ok(RecurrenceTrace {
        gamma,
        k,
        x,
        z,
        overflowed,
    })
}

/// First `t >= 1` with `|X_t| >= level`.
///
/// An overflowed trace that never reached `level` on its finite part is
/// treated as hitting at the step it overflowed.
pub fn hitting_time(trace: &RecurrenceTrace, level: f64) -> Option<usize> {
    trace
        .x
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, x)| x.abs() >= level)
        .map(|(t, _)| t)
        .or_else(|| trace.overflowed.then_some(trace.x.len()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvelopeSide {
    /// Factor `(1 + Delta)^k`.
    Upper,
    /// Factor `(1 - Delta)^k`.
    Lower,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominantSeqParams {
    pub delta_env: f64,
    pub gamma: f64,
    pub k: usize,
    pub b0: f64,
    pub side: EnvelopeSide,
}

impl DominantSeqParams {
    pub fn validate(&self) -> Result<()> {
        if self.k < 3 {
            return Err(Error::invalid("need k >= 3"));
        }
        if !(self.delta_env > 0.0 && self.delta_env <= 1.0) {
            return Err(Error::invalid(format!(
                "Delta = {} not in (0, 1]",
                self.delta_env
            )));
        }
        if !(self.b0 >= 0.0) || !(self.gamma >= 0.0) {
            return Err(Error::invalid("need b0 >= 0 and gamma >= 0"));
        }
        Ok(())
    }

    /// `ln(gamma (1 +/- Delta)^k)`; `-inf` when the factor is 0.
    fn log_factor(&self) -> f64 {
        let base = match self.side {
            EnvelopeSide::Upper => 1.0 + self.delta_env,
            EnvelopeSide::Lower => 1.0 - self.delta_env,
        };
        self.gamma.ln() + self.k as f64 * base.ln()
    }
}

/// `ln b_t` from the closed form
/// `b_t = (gamma (1 +/- Delta)^k)^{((k-1)^t - 1)/(k-2)} b_0^{(k-1)^t}`.
///
/// Returns `-inf` for a zero envelope.
pub fn log_dominant_closed_form(params: &DominantSeqParams, t: u32) -> Result<f64> {
    params.validate()?;
    if t == 0 {
        return Ok(params.b0.ln());
    }
    let km1 = params.k as f64 - 1.0;
    let power = km1.powi(t as i32);
    let exponent = (power - 1.0) / (params.k as f64 - 2.0);
    let lf = params.log_factor();
    let lb = params.b0.ln();
    if lf == f64::NEG_INFINITY || lb == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(exponent * lf + power * lb)
}

/// `b_t` from the closed form, evaluated in log space. Values past the f64
/// range come back as `+inf`.
pub fn dominant_closed_form(params: &DominantSeqParams, t: u32) -> Result<f64> {
    if t == 0 {
        params.validate()?;
        return Ok(params.b0);
    }
    Ok(log_dominant_closed_form(params, t)?.exp())
}

/// `ln b_t` by iterating `ln b_{s+1} = ln(gamma (1 +/- Delta)^k) + (k-1) ln b_s`.
pub fn log_dominant_iterated(params: &DominantSeqParams, t: u32) -> Result<f64> {
    params.validate()?;
    let lf = params.log_factor();
    let km1 = params.k as f64 - 1.0;
    let mut lb = params.b0.ln();
    for _ in 0..t {
        if lb == f64::NEG_INFINITY || lf == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        lb = lf + km1 * lb;
    }
    Ok(lb)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(delta: f64, gamma: f64, k: usize, b0: f64, side: EnvelopeSide) -> DominantSeqParams {
        DominantSeqParams {
            delta_env: delta,
            gamma,
            k,
            b0,
            side,
        }
    }

    #[test]
    fn step_examples() {
        assert_eq!(recurrence_step(0.0, 1.0, 1.0, 3).unwrap(), 1.0);
        assert_eq!(recurrence_step(3.0, -7.5, 0.0, 5).unwrap(), 0.0);
        assert_eq!(recurrence_step(1.0, 1.0, 0.5, 4).unwrap(), 4.0);
        assert_eq!(recurrence_step(0.0, -2.0, 1.0, 4).unwrap(), -8.0);
        assert!(recurrence_step(1e200, 0.0, 1.0, 3).is_err());
    }

    #[test]
    fn run_shapes_and_replay() {
        let tr = run_recurrence(1.0, 3, 0, &mut Stream::from_seed(1)).unwrap();
        assert_eq!(tr.x, vec![0.0]);
        let a = run_recurrence(1.0, 3, 12, &mut Stream::from_seed(5)).unwrap();
        let b = run_recurrence(1.0, 3, 12, &mut Stream::from_seed(5)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.replay().unwrap(), a.x);
    }

    #[test]
    fn strong_signal_overflows_and_truncates() {
        let tr = run_recurrence(50.0, 3, 200, &mut Stream::from_seed(2)).unwrap();
        assert!(tr.overflowed);
        assert!(tr.x.iter().all(|x| x.is_finite()));
        assert_eq!(tr.z.len(), tr.x.len());
        assert_eq!(hitting_time(&tr, f64::MAX), Some(tr.x.len()));
    }

    #[test]
    fn hitting_examples() {
        let tr = |x: Vec<f64>| RecurrenceTrace {
            gamma: 1.0,
            k: 3,
            z: vec![0.0; x.len() - 1],
            x,
            overflowed: false,
        };
        assert_eq!(hitting_time(&tr(vec![0.0, 0.5, 3.0]), 2.0), Some(2));
        assert_eq!(hitting_time(&tr(vec![0.0, -4.0]), 2.0), Some(1));
        assert_eq!(hitting_time(&tr(vec![0.0, 1.0]), 2.0), None);
    }

    #[test]
    fn closed_form_examples() {
        let p = params(1.0, 1.0, 3, 1.0, EnvelopeSide::Upper);
        assert_eq!(dominant_closed_form(&p, 0).unwrap(), 1.0);
        assert!((dominant_closed_form(&p, 1).unwrap() - 8.0).abs() < 1e-12);
        assert!((dominant_closed_form(&p, 2).unwrap() - 512.0).abs() < 1e-9);
        let lower = params(1.0, 1.0, 3, 2.5, EnvelopeSide::Lower);
        assert_eq!(dominant_closed_form(&lower, 0).unwrap(), 2.5);
        for t in 1..6 {
            assert_eq!(dominant_closed_form(&lower, t).unwrap(), 0.0);
        }
        let huge = params(0.5, 3.0, 5, 10.0, EnvelopeSide::Upper);
        assert_eq!(dominant_closed_form(&huge, 40).unwrap(), f64::INFINITY);
        assert!(log_dominant_closed_form(&huge, 40).unwrap().is_finite());
    }
}
