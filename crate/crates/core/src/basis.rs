//! Incrementally built orthonormal basis (classical Gram-Schmidt, applied twice).

use crate::vecops::{axpy, dot, norm, scale};

/// Residual norm below which a new direction is treated as already spanned.
pub const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Extension {
    /// A new basis vector was appended; `residual` is the norm of the
    /// component of the input orthogonal to the previous basis.
    Added { residual: f64 },
    /// The input already lies in the span (up to [`DEGENERACY_TOL`]).
    Degenerate { residual: f64 },
}

impl Extension {
    pub fn residual(&self) -> f64 {
        match *self {
            Extension::Added { residual } | Extension::Degenerate { residual } => residual,
        }
    }

    pub fn added(&self) -> bool {
        matches!(self, Extension::Added { .. })
    }
}

#[derive(Clone, Debug, Default)]
pub struct OrthoBasis {
    vectors: Vec<Vec<f64>>,
}

impl OrthoBasis {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// Projects `x` off the current span and appends the normalized residual
    /// unless it is below [`DEGENERACY_TOL`].
    pub fn extend(&mut self, x: &[f64]) -> Extension {
        let mut r = x.to_vec();
        for _pass in 0..2 {
            for q in &self.vectors {
                let c = dot(q, &r);
                axpy(-c, q, &mut r);
            }
        }
        let residual = norm(&r);
        if residual < DEGENERACY_TOL || !residual.is_finite() {
            return Extension::Degenerate { residual };
        }
        scale(1.0 / residual, &mut r);
        self.vectors.push(r);
        Extension::Added { residual }
    }

    /// Coordinates `<x, q_i>` for every basis vector.
    pub fn coefficients(&self, x: &[f64]) -> Vec<f64> {
        self.vectors.iter().map(|q| dot(q, x)).collect()
    }

    /// Largest `|<q_i, q_j> - [i == j]|` over all pairs.
    pub fn max_gram_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in self.vectors.iter().enumerate() {
            for (j, b) in self.vectors.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(a, b) - target).abs());
            }
        }
        worst
    }
}
