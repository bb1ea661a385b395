//! Closed-form constants and convergence-time bounds.
//!
//! Logs written `log_{k-1}` are base `k - 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_order(k: usize) -> Result<()> {
    if k < 3 {
        return Err(Error::invalid(format!("tensor order k = {k}: need k >= 3")));
    }
    Ok(())
}

/// `C_k = (k-2)^{k-2} / (k-1)^{k-1}`.
pub fn c_k(k: usize) -> Result<f64> {
    check_order(k)?;
    let a = (k - 2) as f64;
    let b = (k - 1) as f64;
    Ok(a.powi(k as i32 - 2) / b.powi(k as i32 - 1))
}

/// `eps_k = (6k - 11) / (12 (k - 1))`, the hitting-level exponent.
pub fn epsilon_k(k: usize) -> Result<f64> {
    check_order(k)?;
    let k = k as f64;
    Ok((6.0 * k - 11.0) / (12.0 * (k - 1.0)))
}

fn log_base(x: f64, base: f64) -> f64 {
    x.ln() / base.ln()
}

/// `log_{k-1}( log_{k-1} n / max{log_{k-1} gamma, 1} )`.
pub fn log_log_term(n: usize, k: usize, gamma: f64) -> Result<f64> {
    check_order(k)?;
    let base = (k - 1) as f64;
    let inner = log_base(n as f64, base) / log_base(gamma, base).max(1.0);
    if !(inner > 0.0) {
        return Err(Error::invalid(format!(
            "outer log argument {inner} is not positive (n = {n}, gamma = {gamma})"
        )));
    }
    Ok(log_base(inner, base))
}

/// Lower and upper bounds on the convergence time at slack `eta`.
///
/// lower = max{ exp((1-eta)/2 (C_k/gamma)^{2/(k-2)}), (1-eta) L },
/// upper = exp((1+eta)/2 (1/gamma)^{2/(k-2)}) + (1+eta) L,
/// with `L` the [`log_log_term`].
pub fn conv_bounds(n: usize, k: usize, gamma: f64, eta: f64) -> Result<(f64, f64)> {
    check_order(k)?;
    if n < 3 {
        return Err(Error::invalid(format!("n = {n}: need n >= 3")));
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::invalid(format!("gamma = {gamma}: need gamma > 0")));
    }
    if !(0.0..1.0).contains(&eta) {
        return Err(Error::invalid(format!("eta = {eta} not in [0, 1)")));
    }
    let p = 2.0 / (k as f64 - 2.0);
    let ll = log_log_term(n, k, gamma)?;
    let lower = ((1.0 - eta) / 2.0 * (c_k(k)? / gamma).powf(p))
        .exp()
        .max((1.0 - eta) * ll);
    let upper = ((1.0 + eta) / 2.0 * (1.0 / gamma).powf(p)).exp() + (1.0 + eta) * ll;
    if !lower.is_finite() || !upper.is_finite() {
        return Err(Error::Overflow {
            step: 0,
            detail: format!("bounds not finite for n = {n}, k = {k}, gamma = {gamma}, eta = {eta}"),
        });
    }
    Ok((lower, upper))
}

/// `(M, N)` controlling how long the surrogate stays below `M`:
///
/// M = (1/(k-2)) (C_k / (gamma (1+delta)))^{1/(k-2)},
/// N = (1/(1+delta)) (C_k / (gamma (1+delta)))^{1/(k-2)} - delta/(1+delta).
pub fn prop_f1_constants(k: usize, gamma: f64, delta: f64) -> Result<(f64, f64)> {
    check_order(k)?;
    if !(gamma > 0.0) || !(delta >= 0.0) {
        return Err(Error::invalid(format!(
            "need gamma > 0 and delta >= 0 (got {gamma}, {delta})"
        )));
    }
    let root = (c_k(k)? / (gamma * (1.0 + delta))).powf(1.0 / (k as f64 - 2.0));
    let m = root / (k as f64 - 2.0);
    let nn = root / (1.0 + delta) - delta / (1.0 + delta);
    Ok((m, nn))
}

/// `m(Delta, L) = max{ ((1+Delta) / (gamma (1-Delta)^k))^{1/(k-2)}, L }`.
pub fn m_threshold(delta_env: f64, l: f64, gamma: f64, k: usize) -> Result<f64> {
    check_order(k)?;
    if !(delta_env > 0.0 && delta_env < 1.0) {
        return Err(Error::invalid(format!("Delta = {delta_env} not in (0, 1)")));
    }
    if !(l > 0.0) || !(gamma > 0.0) {
        return Err(Error::invalid("need L > 0 and gamma > 0"));
    }
    let first = ((1.0 + delta_env) / (gamma * (1.0 - delta_env).powi(k as i32)))
        .powf(1.0 / (k as f64 - 2.0));
    Ok(first.max(l))
}

/// All closed-form quantities for one `(n, k, gamma, eta)` point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub n: usize,
    pub k: usize,
    pub gamma: f64,
    pub eta: f64,
    pub c_k: f64,
    pub eps_k: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    /// Slack used for `M` and `N`.
    pub delta: f64,
    pub m: f64,
    pub n_const: f64,
    pub delta_env: f64,
    pub l: f64,
    pub m_threshold: f64,
}

/// Evaluates every bound at one point. `delta` feeds `M`/`N`; `delta_env`
/// and `l` feed `m(Delta, L)`.
pub fn report(
    n: usize,
    k: usize,
    gamma: f64,
    eta: f64,
    delta: f64,
    delta_env: f64,
    l: f64,
) -> Result<BoundsReport> {
    let (lower_bound, upper_bound) = conv_bounds(n, k, gamma, eta)?;
    let (m, n_const) = prop_f1_constants(k, gamma, delta)?;
    Ok(BoundsReport {
        n,
        k,
        gamma,
        eta,
        c_k: c_k(k)?,
        eps_k: epsilon_k(k)?,
        lower_bound,
        upper_bound,
        delta,
        m,
        n_const,
        delta_env,
        l,
        m_threshold: m_threshold(delta_env, l, gamma, k)?,
    })
}
