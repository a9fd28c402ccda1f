//! Gauss-Legendre panels used by the deformed-contour quadratures.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// Legendre polynomial P_n and its derivative at x, by the three-term recurrence.
fn legendre_and_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
/// Rules are cached per point count (they are requested millions of times
/// by the contour quadratures).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    static CACHE: OnceLock<Mutex<HashMap<usize, (Vec<f64>, Vec<f64>)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = cache.lock().unwrap().get(&n) {
        return rule.clone();
    }
    let rule = gauss_legendre_uncached(n);
    cache.lock().unwrap().insert(n, rule.clone());
    rule
}

fn gauss_legendre_uncached(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev initial guess, refined by Newton.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_deriv(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_deriv(n, x);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Composite Gauss-Legendre rule over the panels defined by `breaks`
/// (an increasing sequence), `pts` points per panel. Returns (nodes, weights).
pub fn composite_gauss(breaks: &[f64], pts: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(pts);
    let mut nodes = Vec::with_capacity(pts * (breaks.len() - 1));
    let mut weights = Vec::with_capacity(pts * (breaks.len() - 1));
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        for (x, wt) in gx.iter().zip(&gw) {
            nodes.push(mid + half * x);
            weights.push(half * wt);
        }
    }
    (nodes, weights)
}

/// Geometrically spaced panel boundaries from `a` to `b` (both > 0).
pub fn log_breaks(a: f64, b: f64, panels: usize) -> Vec<f64> {
    assert!(a > 0.0 && b > a);
    let ratio = (b / a).ln() / panels as f64;
    (0..=panels).map(|j| a * (ratio * j as f64).exp()).collect()
}
