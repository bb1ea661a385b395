//! Small dense vector helpers shared by the engines.

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: f64, x: &mut [f64]) {
    for xi in x {
        *xi *= alpha;
    }
}

/// `x / ||x||`, or `x` unchanged when it is exactly zero.
pub fn normalized(x: &[f64]) -> (Vec<f64>, f64) {
    let r = norm(x);
    if r == 0.0 {
        (x.to_vec(), 0.0)
    } else {
        (x.iter().map(|xi| xi / r).collect(), r)
    }
}
