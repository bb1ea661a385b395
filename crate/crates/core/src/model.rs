//! The spiked tensor model `T = lambda * v^{(x)k} + W` with i.i.d. standard
//! Gaussian (non-symmetrized) noise, and dense order-k contraction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::vecops;

/// Default cap on dense storage and on the conditioned engine's Gaussian store.
pub const DEFAULT_MEMORY_CAP: u64 = 8 << 30;

const LAMBDA_GAMMA_RTOL: f64 = 1e-12;
const UNIT_TOL: f64 = 1e-12;

/// Problem parameters. `lambda = gamma * n^((k-1)/2)` always holds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n: usize,
    pub k: usize,
    pub gamma: f64,
    pub lambda: f64,
}

impl ModelConfig {
    /// `n^((k-1)/2)`, the factor between the raw and normalized SNR.
    pub fn snr_scale(n: usize, k: usize) -> f64 {
        (n as f64).powf((k as f64 - 1.0) / 2.0)
    }

    pub fn from_gamma(n: usize, k: usize, gamma: f64) -> Result<Self> {
        check_shape(n, k)?;
        check_snr("gamma", gamma)?;
        Ok(Self {
            n,
            k,
            gamma,
            lambda: gamma * Self::snr_scale(n, k),
        })
    }

    pub fn from_lambda(n: usize, k: usize, lambda: f64) -> Result<Self> {
        check_shape(n, k)?;
        check_snr("lambda", lambda)?;
        Ok(Self {
            n,
            k,
            gamma: lambda / Self::snr_scale(n, k),
            lambda,
        })
    }

    /// Both SNRs given; they must agree to 1e-12 relative.
    pub fn new(n: usize, k: usize, gamma: f64, lambda: f64) -> Result<Self> {
        let cfg = Self::from_gamma(n, k, gamma)?;
        check_snr("lambda", lambda)?;
        let scale = cfg.lambda.abs().max(lambda.abs());
        if (cfg.lambda - lambda).abs() > LAMBDA_GAMMA_RTOL * scale {
            return Err(Error::invalid(format!(
                "lambda = {lambda} inconsistent with gamma = {gamma} (expected {})",
                cfg.lambda
            )));
        }
        Ok(Self { lambda, ..cfg })
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.n, self.k, self.gamma, self.lambda).map(|_| ())
    }

    /// Number of tensor entries `n^k`, or `None` on overflow.
    pub fn entry_count(&self) -> Option<u128> {
        (self.n as u128).checked_pow(self.k as u32)
    }

    /// Bytes needed to hold the dense tensor.
    pub fn dense_bytes(&self) -> u128 {
        self.entry_count()
            .map_or(u128::MAX, |c| c.saturating_mul(8))
    }

    pub fn check_dense_budget(&self, cap: u64) -> Result<()> {
        let required = self.dense_bytes();
        if required > cap as u128 {
            return Err(Error::Resource {
                what: format!("dense tensor with n = {}, k = {}", self.n, self.k),
                required,
                cap,
                hint: "; use the conditioned engine instead",
            });
        }
        Ok(())
    }
}

fn check_shape(n: usize, k: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidDimension(n));
    }
    if k < 3 {
        return Err(Error::invalid(format!("tensor order k = {k}: need k >= 3")));
    }
    Ok(())
}

fn check_snr(name: &str, value: f64) -> Result<()> {
    if !value.is_finite() || value < 0.0 {
        return Err(Error::invalid(format!(
            "{name} = {value}: need a finite value >= 0"
        )));
    }
    Ok(())
}

/// A vector on the unit sphere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitVector(Vec<f64>);

impl UnitVector {
    /// Rescales `coords` to unit length. Fails on the zero vector.
    pub fn normalize(coords: Vec<f64>) -> Result<Self> {
        let (v, r) = vecops::normalized(&coords);
        if r == 0.0 || !r.is_finite() {
            return Err(Error::invalid(
                "cannot normalize a zero or non-finite vector",
            ));
        }
        Ok(Self(v))
    }

    /// Accepts `coords` as-is if its norm is 1 within 1e-12.
    pub fn from_unit(coords: Vec<f64>) -> Result<Self> {
        let r = vecops::norm(&coords);
        if (r - 1.0).abs() > UNIT_TOL {
            return Err(Error::invalid(format!("vector norm {r} is not 1")));
        }
        Ok(Self(coords))
    }

    /// Standard basis vector `e_i` in dimension `n`.
    pub fn basis(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(Error::invalid(format!(
                "basis index {i} out of range for n = {n}"
            )));
        }
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        Ok(Self(v))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for UnitVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Uniform draw from the sphere `S^{n-1}`: i.i.d. standard Gaussians, normalized.
pub fn sample_signal(n: usize, rng: &mut Stream) -> Result<UnitVector> {
    if n < 2 {
        return Err(Error::InvalidDimension(n));
    }
    loop {
        let g = rng.standard_normal_vec(n);
        if let Ok(u) = UnitVector::normalize(g) {
            return Ok(u);
        }
    }
}

/// Dense order-k array with `n^k` entries in row-major order: the entry
/// `(i_1, ..., i_k)` lives at `((i_1 * n + i_2) * n + ...) * n + i_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    n: usize,
    k: usize,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn from_vec(n: usize, k: usize, data: Vec<f64>) -> Result<Self> {
        let expected = (n as u128).checked_pow(k as u32);
        if k < 1 || expected != Some(data.len() as u128) {
            return Err(Error::invalid(format!(
                "tensor data has {} entries, expected n^k with n = {n}, k = {k}",
                data.len()
            )));
        }
        Ok(Self { n, k, data })
    }

    pub fn zeros(n: usize, k: usize) -> Result<Self> {
        let len = (n as u128)
            .checked_pow(k as u32)
            .and_then(|c| usize::try_from(c).ok())
            .ok_or_else(|| Error::invalid("n^k overflows"))?;
        Self::from_vec(n, k, vec![0.0; len])
    }

    /// `scale * u_1 (x) u_2 (x) ... (x) u_k` for equal-length factors.
    pub fn rank_one(scale: f64, factors: &[&[f64]]) -> Result<Self> {
        let n = factors.first().map_or(0, |f| f.len());
        if factors.is_empty() || factors.iter().any(|f| f.len() != n) {
            return Err(Error::invalid(
                "rank-one factors must be non-empty and equal length",
            ));
        }
        let mut data = vec![scale];
        for f in factors {
            data = data
                .iter()
                .flat_map(|&a| f.iter().map(move |&x| a * x))
                .collect();
        }
        Self::from_vec(n, factors.len(), data)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    pub fn entries_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn flat_index(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.k);
        index.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.flat_index(index)]
    }

    pub fn set(&mut self, index: &[usize], value: f64) {
        let at = self.flat_index(index);
        self.data[at] = value;
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            n: self.n,
            k: self.k,
            data: self.data.iter().map(|x| c * x).collect(),
        }
    }

    /// `T[u^{(x)(k-1)}]`: the vector with entries
    /// `sum_{i_2..i_k} T[i, i_2, .., i_k] u_{i_2} .. u_{i_k}`.
    ///
    /// Computed as k-1 successive contractions of the trailing mode, each a
    /// contiguous sweep over the current buffer.
    pub fn contract(&self, u: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        if u.len() != n {
            return Err(Error::invalid(format!(
                "contraction vector has length {}, expected {n}",
                u.len()
            )));
        }
        if self.k == 1 {
            return Ok(self.data.clone());
        }
        let mut out = contract_last(&self.data, u);
        for _ in 2..self.k {
            out = contract_last(&out, u);
        }
        Ok(out)
    }
}

fn contract_last(src: &[f64], u: &[f64]) -> Vec<f64> {
    src.chunks_exact(u.len())
        .map(|row| vecops::dot(row, u))
        .collect()
}

/// Observed tensor together with the planted signal it was built from.
#[derive(Clone, Debug)]
pub struct SpikedTensor {
    config: ModelConfig,
    signal: UnitVector,
    tensor: DenseTensor,
}

impl SpikedTensor {
    /// Builds `lambda * v^{(x)k} + noise` from an explicit noise array.
    pub fn from_noise(config: ModelConfig, signal: UnitVector, noise: Vec<f64>) -> Result<Self> {
        config.validate()?;
        if signal.dim() != config.n {
            return Err(Error::invalid(format!(
                "signal has dimension {}, config has n = {}",
                signal.dim(),
                config.n
            )));
        }
        let mut tensor = DenseTensor::from_vec(config.n, config.k, noise)?;
        let factors: Vec<&[f64]> = vec![signal.as_slice(); config.k];
        let spike = DenseTensor::rank_one(config.lambda, &factors)?;
        for (t, s) in tensor.data.iter_mut().zip(&spike.data) {
            *t += s;
        }
        Ok(Self {
            config,
            signal,
            tensor,
        })
    }

    /// Samples the model with the default memory cap.
    pub fn sample(config: ModelConfig, signal: UnitVector, rng: &mut Stream) -> Result<Self> {
        Self::sample_with_cap(config, signal, rng, DEFAULT_MEMORY_CAP)
    }

    pub fn sample_with_cap(
        config: ModelConfig,
        signal: UnitVector,
        rng: &mut Stream,
        cap: u64,
    ) -> Result<Self> {
        config.check_dense_budget(cap)?;
        let noise = rng.standard_normal_vec(config.entry_count().unwrap() as usize);
        Self::from_noise(config, signal, noise)
    }

    /// Noise-free tensor `lambda * v^{(x)k}`.
    pub fn noiseless(config: ModelConfig, signal: UnitVector) -> Result<Self> {
        config.check_dense_budget(DEFAULT_MEMORY_CAP)?;
        let len = config.entry_count().unwrap() as usize;
        Self::from_noise(config, signal, vec![0.0; len])
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn signal(&self) -> &UnitVector {
        &self.signal
    }

    pub fn tensor(&self) -> &DenseTensor {
        &self.tensor
    }

    pub fn entries(&self) -> &[f64] {
        self.tensor.entries()
    }

    pub fn contract(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.tensor.contract(u)
    }

    /// `c * T` with the signal left unchanged; the config is not rescaled.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            config: self.config,
            signal: self.signal.clone(),
            tensor: self.tensor.scaled(c),
        }
    }
}

/// Convenience: `sample_spiked_tensor(config, signal, rng)`.
pub fn sample_spiked_tensor(
    config: ModelConfig,
    signal: UnitVector,
    rng: &mut Stream,
) -> Result<SpikedTensor> {
    SpikedTensor::sample(config, signal, rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_contract3(t: &DenseTensor, u: &[f64]) -> Vec<f64> {
        let n = t.n();
        (0..n)
            .map(|i| {
                let mut s = 0.0;
                for j in 0..n {
                    for l in 0..n {
                        s += t.get(&[i, j, l]) * u[j] * u[l];
                    }
                }
                s
            })
            .collect()
    }

    #[test]
    fn config_consistency() {
        let c = ModelConfig::from_gamma(100, 3, 1.0).unwrap();
        assert!((c.lambda - 100.0).abs() < 1e-12);
        let d = ModelConfig::from_lambda(100, 4, 1000.0).unwrap();
        assert!((d.gamma - 1.0).abs() < 1e-12);
        assert!(ModelConfig::new(100, 3, 1.0, 100.0).is_ok());
        assert!(ModelConfig::new(100, 3, 1.0, 101.0).is_err());
        assert!(ModelConfig::from_gamma(1, 3, 1.0).is_err());
        assert!(ModelConfig::from_gamma(10, 2, 1.0).is_err());
        assert!(ModelConfig::from_gamma(10, 3, -1.0).is_err());
    }

    #[test]
    fn sample_signal_unit_and_deterministic() {
        let mut s = Stream::from_seed(1);
        let v = sample_signal(3, &mut s).unwrap();
        assert!((vecops::norm(v.as_slice()) - 1.0).abs() < 1e-12);

        let a = sample_signal(2, &mut Stream::from_seed(9)).unwrap();
        let b = sample_signal(2, &mut Stream::from_seed(9)).unwrap();
        assert_eq!(a, b);
        assert!(matches!(
            sample_signal(1, &mut Stream::from_seed(9)),
            Err(Error::InvalidDimension(1))
        ));
    }

    #[test]
    fn zero_noise_rank_one_entry() {
        let cfg = ModelConfig::from_lambda(2, 3, 2.0).unwrap();
        let v = UnitVector::basis(2, 0).unwrap();
        let t = SpikedTensor::from_noise(cfg, v, vec![0.0; 8]).unwrap();
        for (idx, &x) in t.entries().iter().enumerate() {
            assert_eq!(x, if idx == 0 { 2.0 } else { 0.0 });
        }
    }

    #[test]
    fn lambda_zero_is_pure_noise() {
        let cfg = ModelConfig::from_gamma(10, 3, 0.0).unwrap();
        let mut s = Stream::from_seed(4);
        let v = sample_signal(10, &mut s).unwrap();
        let t = SpikedTensor::sample(cfg, v, &mut s).unwrap();
        let m = t.entries().len() as f64;
        let mean = t.entries().iter().sum::<f64>() / m;
        let var = t.entries().iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
        assert!((var - 1.0).abs() < 0.1, "variance {var}");
    }

    #[test]
    fn single_entry_contraction() {
        let mut t = DenseTensor::zeros(2, 3).unwrap();
        t.set(&[0, 1, 1], 3.0);
        assert_eq!(t.contract(&[0.0, 1.0]).unwrap(), vec![3.0, 0.0]);
    }

    #[test]
    fn rank_one_fixed_point() {
        let e1 = [1.0, 0.0, 0.0];
        let t = DenseTensor::rank_one(1.0, &[&e1, &e1, &e1]).unwrap();
        assert_eq!(t.contract(&e1).unwrap(), e1.to_vec());
    }

    #[test]
    fn contraction_matches_naive_loops() {
        let mut s = Stream::from_seed(21);
        let t = DenseTensor::from_vec(5, 3, s.standard_normal_vec(125)).unwrap();
        let u = s.standard_normal_vec(5);
        let fast = t.contract(&u).unwrap();
        let slow = naive_contract3(&t, &u);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let t = DenseTensor::zeros(3, 3).unwrap();
        assert!(t.contract(&[1.0, 0.0]).is_err());
        assert!(DenseTensor::from_vec(3, 3, vec![0.0; 26]).is_err());
    }

    #[test]
    fn dense_budget() {
        let cfg = ModelConfig::from_gamma(2000, 4, 1.0).unwrap();
        assert!(matches!(
            cfg.check_dense_budget(DEFAULT_MEMORY_CAP),
            Err(Error::Resource { .. })
        ));
        let small = ModelConfig::from_gamma(10, 3, 1.0).unwrap();
        assert!(small.check_dense_budget(DEFAULT_MEMORY_CAP).is_ok());
        assert!(small.check_dense_budget(100).is_err());
    }
}
