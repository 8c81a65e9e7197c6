//! Small dense-vector helpers used throughout the crate.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// a += s * b
pub fn axpy(a: &mut [f64], s: f64, b: &[f64]) {
    debug_assert_eq!(a.len(), b.len());
    for (x, y) in a.iter_mut().zip(b) {
        *x += s * y;
    }
}

/// The p-momentum map v -> |v|^{p-2} v.
///
/// For 1 < p < 2 the power is singular at v = 0; the squared norm is shifted
/// by eps^2 inside the (p-2)/2 power so the map stays defined there.
pub fn momentum(v: &[f64], p: f64, eps: f64) -> Vec<f64> {
    let n2 = dot(v, v);
    if p >= 2.0 {
        if n2 == 0.0 {
            return vec![0.0; v.len()];
        }
        let f = n2.powf((p - 2.0) / 2.0);
        scale(v, f)
    } else {
        let f = (n2 + eps * eps).powf((p - 2.0) / 2.0);
        scale(v, f)
    }
}

/// |v|^p, with the same eps-regularization as [`momentum`] when p < 2 so that
/// the pair (value, gradient) stays consistent inside the optimizer.
pub fn speed_power(v: &[f64], p: f64, eps: f64) -> f64 {
    let n2 = dot(v, v);
    if p >= 2.0 {
        n2.powf(p / 2.0)
    } else {
        (n2 + eps * eps).powf(p / 2.0)
    }
}
