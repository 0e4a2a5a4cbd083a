//! Small numeric helpers: Riemann zeta sums used by the offspring kernels.

/// Riemann zeta `zeta(s) = sum_{k>=1} k^-s` for real `s > 1`.
///
/// Partial sum to `N` plus an Euler-Maclaurin tail; accurate to a few ulps
/// for s in the range used here (s > 1.1 or so).
pub fn zeta(s: f64) -> f64 {
    assert!(s > 1.0, "zeta(s) requires s > 1, got {s}");
    let n = 64usize;
    let mut sum = 0.0;
    for k in 1..n {
        sum += (k as f64).powf(-s);
    }
    sum + zeta_tail(s, n as f64)
}

/// Tail sum `sum_{k>=m} k^-s` by Euler-Maclaurin.
///
/// Three correction terms; for m >= 16 the truncation error is far below
/// 1e-15 relative at the exponents used in this crate.
pub fn zeta_tail(s: f64, m: f64) -> f64 {
    debug_assert!(m >= 2.0 && s > 1.0);
    let int = m.powf(1.0 - s) / (s - 1.0);
    let half = 0.5 * m.powf(-s);
    let b2 = s * m.powf(-s - 1.0) / 12.0;
    let b4 = s * (s + 1.0) * (s + 2.0) * m.powf(-s - 3.0) / 720.0;
    int + half + b2 - b4
}
