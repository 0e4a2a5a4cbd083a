//! Size-biased spine sampling and the associated perpetuity.
//!
//! Under the size-biased change of measure, the weight martingale admits the
//! conditional representation `1 + sum_k Pi_{k-1} (S_k - 1)` with i.i.d.
//! steps `(M_k, S_k)`: `S` is the size-biased one-generation weight sum and
//! `M` the weight of the distinguished (spine) child, jointly defined by
//!
//! `E sum_u Y_u h(Y_u, sum_v Y_v) = E h(M, S)`.
//!
//! This module samples `(M, S)` directly from the closed-form size-biased
//! offspring law of each supported family (no rejection against the plain
//! law, whose acceptance cost would be unbounded under size-biasing),
//! accumulates the perpetuity `R`, and converts plain-measure samples into
//! size-biased tail estimates via the identity `E_Q r(W) = E W r(W)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{Displacement, Family, Model};
use crate::sampling::RandomStream;
use crate::special::zeta_tail;

/// Hard cap on perpetuity steps before declaring non-contraction.
pub const PERPETUITY_STEP_CAP: usize = 100_000;

/// One spine step: the spine child's weight and the generation weight sum.
#[derive(Debug, Clone, Copy)]
pub struct SpineStep {
    /// Spine weight `M_k > 0`.
    pub m: f64,
    /// Size-biased generation sum `S_k >= M_k`.
    pub s: f64,
}

/// One perpetuity path with full step history.
#[derive(Debug, Clone)]
pub struct PerpetuityPath {
    pub steps: Vec<SpineStep>,
    /// `Pi_0 = 1, Pi_k = M_1 ... M_k`.
    pub partial_products: Vec<f64>,
    /// `1 + sum_{k<=truncation_k} Pi_{k-1} (S_k - 1)`.
    pub r_value: f64,
    /// Steps taken before the products fell below the truncation level.
    pub truncation_k: usize,
    /// `Pi_K` times the family's mean-residual envelope; infinite when no
    /// envelope exists (beta <= 2).
    pub residual_bound: f64,
}

/// Lean per-path result for bulk runs.
#[derive(Debug, Clone, Copy)]
pub struct PerpetuitySummary {
    pub r_value: f64,
    pub truncation_k: u32,
    pub residual_bound: f64,
}

/// Draw one `(M, S)` step under the size-biased measure.
///
/// Supported families: `Deterministic` (degenerate: `S = 1`), `IidCluster`
/// (size-biased offspring count, exponentially tilted spine displacement),
/// `GaussianBinary` (tilted spine displacement). The infinite point-process
/// families have no closed-form size-biased law here.
pub fn sample_ms(model: &Model, rng: &mut RandomStream) -> Result<SpineStep> {
    let spec = model.spec();
    match spec.family {
        Family::Deterministic { children, .. } => Ok(SpineStep {
            m: 1.0 / f64::from(children),
            s: 1.0,
        }),
        Family::IidCluster { displacement } => {
            let beta = spec.beta;
            let gamma = spec.gamma;
            let ek = model.laplace_m(0.0)?; // m(0) = E K for this family
            let khat = sample_size_biased_k(beta, ek, rng);
            match displacement {
                Displacement::Constant { .. } => {
                    // all weights equal 1/EK; the spine pick changes nothing
                    let w = 1.0 / ek;
                    Ok(SpineStep {
                        m: w,
                        s: khat as f64 * w,
                    })
                }
                Displacement::Gaussian { mu, sigma } => {
                    let norm = model.m_gamma();
                    // spine displacement is tilted by e^{gamma x}: N(mu + gamma sigma^2, sigma^2)
                    let spine =
                        (gamma * (mu + gamma * sigma * sigma + sigma * rng.standard_normal())).exp()
                            / norm;
                    let mut s = spine;
                    for _ in 1..khat {
                        s += (gamma * (mu + sigma * rng.standard_normal())).exp() / norm;
                    }
                    Ok(SpineStep { m: spine, s })
                }
            }
        }
        Family::GaussianBinary { mu, sigma } => {
            let gamma = spec.gamma;
            let norm = model.m_gamma();
            let spine =
                (gamma * (mu + gamma * sigma * sigma + sigma * rng.standard_normal())).exp() / norm;
            let other = (gamma * (mu + sigma * rng.standard_normal())).exp() / norm;
            Ok(SpineStep {
                m: spine,
                s: spine + other,
            })
        }
        Family::PoissonPoints { .. } | Family::RenewalExp { .. } => {
            Err(Error::UnsupportedFamily(spec.family.name().into()))
        }
    }
}

/// Exact inverse-CDF draw of the size-biased offspring count:
/// `P{Khat = k} = k P{K = k} / E K` with `P{K >= k} = k^-beta`.
///
/// The CDF walk resolves the bulk (mean under two steps); deep-tail draws
/// invert the closed-form survival `P{Khat > k} = ((k+1)^{1-beta} +
/// sum_{j >= k+2} j^-beta) / EK` by bisection.
fn sample_size_biased_k(beta: f64, ek: f64, rng: &mut RandomStream) -> u64 {
    let u = rng.uniform();
    let mut acc = 0.0;
    for k in 1..=64u64 {
        let kf = k as f64;
        let pk = kf.powf(-beta) - (kf + 1.0).powf(-beta);
        acc += kf * pk / ek;
        if u < acc {
            return k;
        }
    }
    let target = 1.0 - u; // survival level to invert
    let surv = |k: f64| ((k + 1.0).powf(1.0 - beta) + zeta_tail(beta, k + 2.0)) / ek;
    let mut lo = 64u64;
    let mut hi = 128u64;
    while surv(hi as f64) > target && hi < (1u64 << 50) {
        lo = hi;
        hi *= 2;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if surv(mid as f64) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// The mean-residual envelope `(E_Q S - 1)/(1 - E_Q M)` used to bound the
/// truncated remainder of `R`; `E_Q S = E W_1^2` and `E_Q M = k_2`.
fn residual_envelope(model: &Model) -> Option<f64> {
    let eqs = model.second_moment_w1().ok()?;
    let k2 = model.k_exponent(2.0).ok()?;
    if k2 >= 1.0 {
        return None;
    }
    Some((eqs - 1.0) / (1.0 - k2))
}

fn run_perpetuity(
    model: &Model,
    eps_trunc: f64,
    rng: &mut RandomStream,
    mut sink: impl FnMut(SpineStep, f64),
) -> Result<(f64, usize, f64)> {
    if !(eps_trunc > 0.0 && eps_trunc < 1.0) {
        return Err(Error::ConfigInvalid(format!(
            "eps_trunc must lie in (0, 1), got {eps_trunc}"
        )));
    }
    let envelope = residual_envelope(model);
    let mut pi = 1.0;
    let mut r = 1.0;
    let mut k = 0usize;
    while pi >= eps_trunc {
        if k >= PERPETUITY_STEP_CAP {
            return Err(Error::NonContracting(PERPETUITY_STEP_CAP));
        }
        let step = sample_ms(model, rng)?;
        r += pi * (step.s - 1.0);
        pi *= step.m;
        k += 1;
        sink(step, pi);
    }
    let bound = match envelope {
        Some(env) => pi * env,
        None => f64::INFINITY,
    };
    Ok((r, k, bound))
}

/// Simulate one perpetuity path, recording every step.
pub fn simulate_perpetuity(
    model: &Model,
    eps_trunc: f64,
    rng: &mut RandomStream,
) -> Result<PerpetuityPath> {
    let mut steps = Vec::new();
    let mut partial_products = vec![1.0];
    let (r_value, truncation_k, residual_bound) = run_perpetuity(model, eps_trunc, rng, |s, pi| {
        steps.push(s);
        partial_products.push(pi);
    })?;
    Ok(PerpetuityPath {
        steps,
        partial_products,
        r_value,
        truncation_k,
        residual_bound,
    })
}

/// Simulate one perpetuity path, keeping only the summary.
pub fn perpetuity_value(
    model: &Model,
    eps_trunc: f64,
    rng: &mut RandomStream,
) -> Result<PerpetuitySummary> {
    let (r_value, truncation_k, residual_bound) = run_perpetuity(model, eps_trunc, rng, |_, _| {})?;
    Ok(PerpetuitySummary {
        r_value,
        truncation_k: truncation_k as u32,
        residual_bound,
    })
}

/// The tail constant of the perpetuity under the size-biased measure:
/// `beta / ((beta - 1)(1 - k_beta))`.
///
/// Valid in the `beta > 2` regime of the perpetuity tail argument.
pub fn grey_constant(model: &Model) -> Result<f64> {
    let beta = model.beta();
    if beta <= 2.0 {
        return Err(Error::BetaOutOfRange(beta));
    }
    let k_beta = model.k_exponent(beta)?;
    Ok(beta / ((beta - 1.0) * (1.0 - k_beta)))
}

/// Size-biased survival estimated from plain-measure samples.
#[derive(Debug, Clone, Serialize)]
pub struct QSurvivalCurve {
    pub thresholds: Vec<f64>,
    /// `(1/n) sum w_i 1{w_i > x}`, the importance-weighted tail mass.
    pub q: Vec<f64>,
    pub se: Vec<f64>,
    pub n: usize,
}

/// Estimate `Q{W > x} = E[W 1{W > x}]` per threshold from samples of `W`
/// drawn under the plain measure.
pub fn q_survival_from_plain(w_samples: &[f64], thresholds: &[f64]) -> Result<QSurvivalCurve> {
    if w_samples.is_empty() {
        return Err(Error::EmptySample);
    }
    if w_samples.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
        return Err(Error::BadData("weights must be finite and nonnegative".into()));
    }
    if thresholds.windows(2).any(|p| p[0] > p[1]) {
        return Err(Error::BadData("thresholds must be sorted ascending".into()));
    }
    let mut xs = w_samples.to_vec();
    xs.sort_unstable_by(f64::total_cmp);
    let n = xs.len();
    // suffix sums of w and w^2 give every threshold in O(log n)
    let mut suf = vec![0.0f64; n + 1];
    let mut sufsq = vec![0.0f64; n + 1];
    for i in (0..n).rev() {
        suf[i] = suf[i + 1] + xs[i];
        sufsq[i] = sufsq[i + 1] + xs[i] * xs[i];
    }
    let nf = n as f64;
    let mut q = Vec::with_capacity(thresholds.len());
    let mut se = Vec::with_capacity(thresholds.len());
    for &t in thresholds {
        let idx = xs.partition_point(|&v| v <= t);
        let mean = suf[idx] / nf;
        let var = (sufsq[idx] / nf - mean * mean).max(0.0);
        q.push(mean);
        se.push((var / nf).sqrt());
    }
    Ok(QSurvivalCurve {
        thresholds: thresholds.to_vec(),
        q,
        se,
        n,
    })
}
