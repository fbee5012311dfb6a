//! Fixed-order Gauss-Legendre quadrature for expectations over the uniform
//! SNR interval. Order 64 is far beyond what the smooth integrands need.

use std::sync::OnceLock;

const ORDER: usize = 64;

/// Mean value of `f` over `[lo, hi]`: `(1/(hi-lo)) * integral of f`.
/// A degenerate interval evaluates `f` at the single point.
pub fn mean_over_interval<F: Fn(f64) -> f64>(lo: f64, hi: f64, f: F) -> f64 {
    let mid = 0.5 * (hi + lo);
    let half = 0.5 * (hi - lo);
    // Weights sum to 2 on [-1, 1], so the mean is the weighted sum halved.
    nodes()
        .iter()
        .map(|&(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * 0.5
}

fn nodes() -> &'static [(f64, f64); ORDER] {
    static NODES: OnceLock<[(f64, f64); ORDER]> = OnceLock::new();
    NODES.get_or_init(gauss_legendre)
}

/// Nodes and weights of the order-64 rule on [-1, 1], by Newton iteration on
/// the Legendre recurrence.
fn gauss_legendre() -> [(f64, f64); ORDER] {
    let n = ORDER;
    let mut out = [(0.0f64, 0.0f64); ORDER];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z_next = z - p1 / pp;
            if (z - z_next).abs() < 1e-15 {
                z = z_next;
                break;
            }
            z = z_next;
        }
        let w = 2.0 / ((1.0 - z * z) * pp * pp);
        out[i] = (-z, w);
        out[n - 1 - i] = (z, w);
    }
    out
}
