//! Point-process model families and their closed-form moment functions.
//!
//! A model describes the offspring point process of a branching random walk:
//! one particle dies and leaves children displaced on the line. With a tilt
//! `gamma` and normalization `m(gamma)`, each child carries the weight
//! `Y = e^{gamma A} / m(gamma)`, so the per-generation weight sums form a
//! mean-one nonnegative martingale.
//!
//! Every family here has closed forms for
//!
//! * `m(y)  = E sum_u e^{y A_u}` (Laplace transform of the intensity),
//! * `k_x   = E sum_u Y_u^x`     (tilted offspring moments, `k_1 = 1`),
//!
//! which is what makes the statistical suites verifiable: no constant in a
//! report is estimated by Monte Carlo when a formula exists.
//!
//! Families:
//!
//! * `IidCluster` — a heavy-tailed number `K` of children
//!   (`P{K >= k} = k^-beta`) with i.i.d. displacements. The only family
//!   satisfying the regular-variation condition on `W_1`; with constant
//!   displacement the weights collapse to `1/EK` and `k_x = EK^{1-x}`
//!   exactly.
//! * `GaussianBinary` — two children with Gaussian displacements
//!   (lognormal weights). Negative control: the `W_1` tail decays faster
//!   than any power.
//! * `Deterministic` — `J0` children with equal weights `1/J0`; `W_n = 1`
//!   identically. Exactness control.
//! * `PoissonPoints` — Poisson arrivals `tau_i` with weights
//!   `h(tau) = c e^{-tau/theta}`. Infinitely many points; negative control.
//! * `RenewalExp` — renewal (Erlang-2 interarrival) analogue of the above;
//!   `W_1` has an exponentially decreasing tail. Negative control.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::{discrete_pareto_sample, RandomStream};
use crate::special::zeta;

/// Domain extension beyond `beta` for `k_exponent`.
pub const DELTA_MAX: f64 = 0.5;
/// Epsilon used when checking finiteness of `k_{beta+eps}`.
pub const MOM_EPSILON: f64 = 0.5;
/// Residual-mass cutoff for enumerating infinite point processes.
pub const TRUNCATION_CUTOFF: f64 = 1e-12;
/// Hard cap on enumerated points per offspring draw.
pub const POINT_CAP: usize = 200_000;

/// Displacement law for the `IidCluster` family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Displacement {
    /// All children displaced by the same constant; the tilt cancels and
    /// weights are exactly `1/EK`.
    Constant { d: f64 },
    /// I.i.d. Gaussian displacements; weights are lognormal scaled by `1/EK`.
    Gaussian { mu: f64, sigma: f64 },
}

/// Offspring point-process family with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Deterministic { children: u32, displacement: f64 },
    IidCluster { displacement: Displacement },
    GaussianBinary { mu: f64, sigma: f64 },
    PoissonPoints { lambda: f64, theta: f64 },
    RenewalExp { rate: f64, theta: f64 },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Deterministic { .. } => "deterministic",
            Family::IidCluster { .. } => "iid-cluster",
            Family::GaussianBinary { .. } => "gaussian-binary",
            Family::PoissonPoints { .. } => "poisson-points",
            Family::RenewalExp { .. } => "renewal-exp",
        }
    }
}

/// Validated description of a model: family, target tail index, tilt.
///
/// For `IidCluster`, `beta` is also the offspring tail index
/// (`P{K >= k} = k^-beta`), which is what gives `W_1` a regularly varying
/// tail with the same index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub family: Family,
    pub beta: f64,
    pub gamma: f64,
}

/// One sampled generation: the multiset of child weights of one particle.
#[derive(Debug, Clone)]
pub struct Realization {
    /// Normalized child weights `Y_u`, all strictly positive and finite.
    pub weights: Vec<f64>,
    /// Whether point enumeration was truncated (infinite-point families).
    pub truncated: bool,
    /// Upper bound on the conditional mean of the discarded weight mass.
    /// Zero when `truncated` is false.
    pub truncated_mass_bound: f64,
}

/// Per-family precomputed sampling constants.
#[derive(Debug, Clone, Copy)]
enum Kernel {
    Deterministic { weight: f64, children: u32 },
    /// Constant displacement: every child weighs exactly `1/EK`.
    IidConst { ek: f64, weight: f64 },
    /// Gaussian displacement: child weight `e^{gamma D}/m(gamma)`.
    IidGauss { ek: f64, mu: f64, sigma: f64, norm: f64 },
    GaussBinary { norm: f64 },
    /// Weight function `h(u) = c e^{-u/theta}` over Poisson arrivals.
    Poisson { c: f64 },
    /// Same weight function over an Erlang-2 renewal process.
    Renewal { c: f64 },
}

/// A built model: validated spec plus closed-form constants.
#[derive(Debug, Clone)]
pub struct Model {
    spec: ModelSpec,
    m_gamma: f64,
    heavy_tail: bool,
    /// The constant standing in for the slowly varying factor of the `W_1`
    /// tail, `P{W_1 > x} ~ c x^-beta`; only for heavy-tail families.
    slowly_varying_const: Option<f64>,
    kernel: Kernel,
}

impl Model {
    /// Validate a spec and derive the closed-form constants (`build_model`).
    ///
    /// Heavy-tail families must satisfy the contraction condition
    /// `k_beta < 1`; specs violating it are rejected with the computed value.
    pub fn build(spec: ModelSpec) -> Result<Self> {
        if !(spec.beta > 1.0) || !spec.beta.is_finite() {
            return Err(Error::InvalidSpec(format!("beta must be > 1, got {}", spec.beta)));
        }
        if !(spec.gamma > 0.0) || !spec.gamma.is_finite() {
            return Err(Error::InvalidSpec(format!("gamma must be > 0, got {}", spec.gamma)));
        }
        let (kernel, m_gamma, heavy_tail) = match spec.family {
            Family::Deterministic { children, displacement } => {
                if children == 0 {
                    return Err(Error::InvalidSpec("deterministic family needs children >= 1".into()));
                }
                if !displacement.is_finite() {
                    return Err(Error::InvalidSpec("displacement must be finite".into()));
                }
                let j = f64::from(children);
                let m_gamma = j * (spec.gamma * displacement).exp();
                (
                    Kernel::Deterministic { weight: 1.0 / j, children },
                    m_gamma,
                    false,
                )
            }
            Family::IidCluster { displacement } => {
                let ek = zeta(spec.beta);
                match displacement {
                    Displacement::Constant { d } => {
                        if !d.is_finite() {
                            return Err(Error::InvalidSpec("displacement must be finite".into()));
                        }
                        let m_gamma = ek * (spec.gamma * d).exp();
                        (Kernel::IidConst { ek, weight: 1.0 / ek }, m_gamma, true)
                    }
                    Displacement::Gaussian { mu, sigma } => {
                        if !(sigma >= 0.0) || !mu.is_finite() || !sigma.is_finite() {
                            return Err(Error::InvalidSpec("gaussian displacement needs finite mu, sigma >= 0".into()));
                        }
                        let norm = ek * mgf_normal(mu, sigma, spec.gamma);
                        (Kernel::IidGauss { ek, mu, sigma, norm }, norm, true)
                    }
                }
            }
            Family::GaussianBinary { mu, sigma } => {
                if !(sigma >= 0.0) || !mu.is_finite() || !sigma.is_finite() {
                    return Err(Error::InvalidSpec("gaussian binary needs finite mu, sigma >= 0".into()));
                }
                let norm = 2.0 * mgf_normal(mu, sigma, spec.gamma);
                (Kernel::GaussBinary { norm }, norm, false)
            }
            Family::PoissonPoints { lambda, theta } => {
                if !(lambda > 0.0) || !(theta > 0.0) {
                    return Err(Error::InvalidSpec("poisson points needs lambda > 0, theta > 0".into()));
                }
                // normalization E sum h(tau_i) = lambda c theta = 1
                let c = 1.0 / (lambda * theta);
                (Kernel::Poisson { c }, 1.0, false)
            }
            Family::RenewalExp { rate, theta } => {
                if !(rate > 0.0) || !(theta > 0.0) {
                    return Err(Error::InvalidSpec("renewal-exp needs rate > 0, theta > 0".into()));
                }
                // Erlang-2 interarrival Laplace transform at 1/theta
                let phi1 = erlang2_lt(rate, theta, 1.0);
                // normalization c phi1 / (1 - phi1) = 1
                let c = (1.0 - phi1) / phi1;
                (Kernel::Renewal { c }, 1.0, false)
            }
        };
        let slowly_varying_const = if heavy_tail {
            // P{W_1 > x} ~ P{K > x / E Y} with E Y = 1/EK, so c = EK^-beta
            Some(zeta(spec.beta).powf(-spec.beta))
        } else {
            None
        };
        let model = Model { spec, m_gamma, heavy_tail, slowly_varying_const, kernel };
        if heavy_tail {
            let k_beta = model.k_closed(spec.beta);
            if !(k_beta < 1.0) {
                return Err(Error::MomentConditionViolated { k_beta });
            }
            let k_eps = model.k_closed(spec.beta + MOM_EPSILON);
            if !k_eps.is_finite() {
                return Err(Error::InvalidSpec(format!(
                    "k_{{beta+eps}} must be finite, got {k_eps}"
                )));
            }
        }
        Ok(model)
    }

    /// Build one of the named presets.
    pub fn preset(name: &str) -> Result<Self> {
        let spec = preset_spec(name)?;
        Model::build(spec)
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn beta(&self) -> f64 {
        self.spec.beta
    }

    pub fn gamma(&self) -> f64 {
        self.spec.gamma
    }

    /// The normalizer `m(gamma)`.
    pub fn m_gamma(&self) -> f64 {
        self.m_gamma
    }

    /// Whether `W_1` has a regularly varying tail (versus a negative control).
    pub fn is_heavy_tail(&self) -> bool {
        self.heavy_tail
    }

    /// The constant `c` in `P{W_1 > x} ~ c x^-beta` for heavy-tail families.
    pub fn slowly_varying_const(&self) -> Result<f64> {
        self.slowly_varying_const
            .ok_or_else(|| Error::NotHeavyTail(self.spec.family.name().into()))
    }

    /// Laplace transform `m(y) = E sum_u e^{y A_u}` in closed form.
    pub fn laplace_m(&self, y: f64) -> Result<f64> {
        if !y.is_finite() {
            return Err(Error::OutOfDomain(format!("m(y) needs finite y, got {y}")));
        }
        match self.kernel {
            Kernel::Deterministic { children, .. } => {
                let d = match self.spec.family {
                    Family::Deterministic { displacement, .. } => displacement,
                    _ => unreachable!(),
                };
                Ok(f64::from(children) * (y * d).exp())
            }
            Kernel::IidConst { ek, .. } => {
                let d = match self.spec.family {
                    Family::IidCluster { displacement: Displacement::Constant { d } } => d,
                    _ => unreachable!(),
                };
                Ok(ek * (y * d).exp())
            }
            Kernel::IidGauss { ek, mu, sigma, .. } => Ok(ek * mgf_normal(mu, sigma, y)),
            Kernel::GaussBinary { .. } => {
                let (mu, sigma) = match self.spec.family {
                    Family::GaussianBinary { mu, sigma } => (mu, sigma),
                    _ => unreachable!(),
                };
                Ok(2.0 * mgf_normal(mu, sigma, y))
            }
            // h-families place points at A = gamma^-1 log h(tau), so
            // m(y) = E sum h(tau)^{y/gamma} = k_{y/gamma}; finite iff y > 0.
            Kernel::Poisson { .. } | Kernel::Renewal { .. } => {
                if y <= 0.0 {
                    return Err(Error::OutOfDomain(format!(
                        "m(y) = infinity for y <= 0 in the {} family",
                        self.spec.family.name()
                    )));
                }
                Ok(self.k_closed(y / self.spec.gamma))
            }
        }
    }

    /// Tilted offspring moment `k_x = E sum_u Y_u^x` for
    /// `x` in `[1, beta + DELTA_MAX]`.
    pub fn k_exponent(&self, x: f64) -> Result<f64> {
        if !(1.0 <= x && x <= self.spec.beta + DELTA_MAX) {
            return Err(Error::OutOfDomain(format!(
                "k_x domain is [1, {}], got x = {x}",
                self.spec.beta + DELTA_MAX
            )));
        }
        Ok(self.k_closed(x))
    }

    /// `k_x` without the domain guard (used internally where finiteness is
    /// known, e.g. the moment-condition check at beta + epsilon).
    fn k_closed(&self, x: f64) -> f64 {
        match self.kernel {
            Kernel::Deterministic { children, .. } => f64::from(children).powf(1.0 - x),
            Kernel::IidConst { ek, .. } => ek.powf(1.0 - x),
            Kernel::IidGauss { ek, sigma, .. } => {
                let g = self.spec.gamma;
                ek.powf(1.0 - x) * ((x * x - x) * g * g * sigma * sigma / 2.0).exp()
            }
            Kernel::GaussBinary { .. } => {
                let sigma = match self.spec.family {
                    Family::GaussianBinary { sigma, .. } => sigma,
                    _ => unreachable!(),
                };
                let g = self.spec.gamma;
                2f64.powf(1.0 - x) * ((x * x - x) * g * g * sigma * sigma / 2.0).exp()
            }
            // k_x = lambda integral h^x = c^{x-1} / x
            Kernel::Poisson { c } => c.powf(x - 1.0) / x,
            // k_x = c^x phi_x / (1 - phi_x)
            Kernel::Renewal { c } => {
                let (rate, theta) = match self.spec.family {
                    Family::RenewalExp { rate, theta } => (rate, theta),
                    _ => unreachable!(),
                };
                let phi = erlang2_lt(rate, theta, x);
                c.powf(x) * phi / (1.0 - phi)
            }
        }
    }

    /// The universal tail constant `(1 - k_beta)^-1` of the heavy-tail laws.
    pub fn theoretical_tail_constant(&self) -> Result<f64> {
        if !self.heavy_tail {
            return Err(Error::NotHeavyTail(self.spec.family.name().into()));
        }
        Ok(1.0 / (1.0 - self.k_closed(self.spec.beta)))
    }

    /// Second moment of `W_1` in closed form.
    ///
    /// For the cluster family this needs `beta > 2` (otherwise `E K^2`
    /// diverges and so does `E W_1^2`).
    pub fn second_moment_w1(&self) -> Result<f64> {
        match self.kernel {
            Kernel::Deterministic { .. } => Ok(1.0),
            Kernel::IidConst { ek, .. } | Kernel::IidGauss { ek, .. } => {
                let beta = self.spec.beta;
                if beta <= 2.0 {
                    return Err(Error::BetaOutOfRange(beta));
                }
                // E K^2 = 2 zeta(beta-1) - zeta(beta) via P{K >= k} = k^-beta
                let ek2 = 2.0 * zeta(beta - 1.0) - ek;
                // E W_1^2 = k_2 + (E K^2 - E K) (E Y)^2 with E Y = 1/EK
                Ok(self.k_closed(2.0) + (ek2 - ek) / (ek * ek))
            }
            // J = 2 children with E Y = 1/2
            Kernel::GaussBinary { .. } => Ok(self.k_closed(2.0) + 0.5),
            // Campbell: Var W_1 = lambda integral h^2 = k_2
            Kernel::Poisson { .. } => Ok(1.0 + self.k_closed(2.0)),
            // E W_1^2 = k_2 + 2 k_2 phi_1/((1-phi_1) c) = k_2 (1 + 2/c)
            Kernel::Renewal { c } => Ok(self.k_closed(2.0) * (1.0 + 2.0 / c)),
        }
    }

    /// Draw one offspring generation: the i.i.d. child-weight multiset.
    ///
    /// Infinite-point families are enumerated until the conditional expected
    /// residual mass drops below [`TRUNCATION_CUTOFF`]; the bound reached is
    /// recorded on the realization.
    pub fn sample_offspring(&self, rng: &mut RandomStream) -> Result<Realization> {
        match self.kernel {
            Kernel::Deterministic { weight, children } => Ok(Realization {
                weights: vec![weight; children as usize],
                truncated: false,
                truncated_mass_bound: 0.0,
            }),
            Kernel::IidConst { weight, .. } => {
                let k = discrete_pareto_sample(self.spec.beta, rng) as usize;
                Ok(Realization {
                    weights: vec![weight; k],
                    truncated: false,
                    truncated_mass_bound: 0.0,
                })
            }
            Kernel::IidGauss { mu, sigma, norm, .. } => {
                let k = discrete_pareto_sample(self.spec.beta, rng) as usize;
                let g = self.spec.gamma;
                let weights = (0..k)
                    .map(|_| (g * (mu + sigma * rng.standard_normal())).exp() / norm)
                    .collect();
                Ok(Realization {
                    weights,
                    truncated: false,
                    truncated_mass_bound: 0.0,
                })
            }
            Kernel::GaussBinary { norm } => {
                let (mu, sigma) = match self.spec.family {
                    Family::GaussianBinary { mu, sigma } => (mu, sigma),
                    _ => unreachable!(),
                };
                let g = self.spec.gamma;
                let w0 = (g * (mu + sigma * rng.standard_normal())).exp() / norm;
                let w1 = (g * (mu + sigma * rng.standard_normal())).exp() / norm;
                Ok(Realization {
                    weights: vec![w0, w1],
                    truncated: false,
                    truncated_mass_bound: 0.0,
                })
            }
            Kernel::Poisson { c } => {
                let (lambda, theta) = match self.spec.family {
                    Family::PoissonPoints { lambda, theta } => (lambda, theta),
                    _ => unreachable!(),
                };
                self.enumerate_h_points(c, theta, rng, |rng| rng.exponential(lambda))
            }
            Kernel::Renewal { c } => {
                let (rate, theta) = match self.spec.family {
                    Family::RenewalExp { rate, theta } => (rate, theta),
                    _ => unreachable!(),
                };
                self.enumerate_h_points(c, theta, rng, |rng| {
                    rng.exponential(rate) + rng.exponential(rate)
                })
            }
        }
    }

    /// Enumerate `h(tau_i) = c e^{-tau_i/theta}` until the conditional mean
    /// of the remaining mass, `e^{-tau/theta}` (equal for both arrival laws
    /// by the normalization), falls below the cutoff.
    fn enumerate_h_points(
        &self,
        c: f64,
        theta: f64,
        rng: &mut RandomStream,
        mut interarrival: impl FnMut(&mut RandomStream) -> f64,
    ) -> Result<Realization> {
        let mut tau = 0.0;
        let mut weights = Vec::with_capacity(64);
        loop {
            let bound = (-tau / theta).exp();
            if bound < TRUNCATION_CUTOFF {
                return Ok(Realization {
                    weights,
                    truncated: true,
                    truncated_mass_bound: bound,
                });
            }
            if weights.len() >= POINT_CAP {
                return Err(Error::TruncationBudgetExceeded {
                    bound,
                    points: weights.len(),
                });
            }
            tau += interarrival(rng);
            weights.push(c * (-tau / theta).exp());
        }
    }
}

fn mgf_normal(mu: f64, sigma: f64, y: f64) -> f64 {
    (y * mu + y * y * sigma * sigma / 2.0).exp()
}

/// Laplace transform of an Erlang-2(rate) interarrival at `x/theta`:
/// `(rate theta / (rate theta + x))^2`.
fn erlang2_lt(rate: f64, theta: f64, x: f64) -> f64 {
    let a = rate * theta;
    (a / (a + x)) * (a / (a + x))
}

/// Model presets addressable by name from the CLI and configs.
pub fn preset_spec(name: &str) -> Result<ModelSpec> {
    let spec = match name {
        "iid-cluster-b3" => ModelSpec {
            family: Family::IidCluster { displacement: Displacement::Constant { d: 0.0 } },
            beta: 3.0,
            gamma: 1.0,
        },
        // same cluster law with continuous (lognormal) weights
        "iid-cluster-b3-gauss" => ModelSpec {
            family: Family::IidCluster {
                displacement: Displacement::Gaussian { mu: 0.0, sigma: 0.25 },
            },
            beta: 3.0,
            gamma: 1.0,
        },
        "gauss-binary" => ModelSpec {
            family: Family::GaussianBinary { mu: 0.0, sigma: 0.3 },
            beta: 3.0,
            gamma: 1.0,
        },
        "det-2" => ModelSpec {
            family: Family::Deterministic { children: 2, displacement: -std::f64::consts::LN_2 },
            beta: 3.0,
            gamma: 1.0,
        },
        "poisson" => ModelSpec {
            family: Family::PoissonPoints { lambda: 2.0, theta: 1.0 },
            beta: 3.0,
            gamma: 1.0,
        },
        "renewal-exp" => ModelSpec {
            family: Family::RenewalExp { rate: 2.0, theta: 1.0 },
            beta: 3.0,
            gamma: 1.0,
        },
        other => return Err(Error::UnknownPreset(other.into())),
    };
    Ok(spec)
}

/// Names accepted by [`preset_spec`], in display order.
pub const PRESET_NAMES: [&str; 6] = [
    "iid-cluster-b3",
    "iid-cluster-b3-gauss",
    "gauss-binary",
    "det-2",
    "poisson",
    "renewal-exp",
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::stream_rng;

    /// Brute-force partial-sum oracle for zeta-type constants, independent of
    /// the Euler-Maclaurin path used by the implementation.
    fn zeta_brute(s: f64) -> f64 {
        let t = 2_000_000u64;
        let head: f64 = (1..=t).map(|k| (k as f64).powf(-s)).sum();
        head + (t as f64).powf(1.0 - s) / (s - 1.0)
    }

    #[test]
    fn deterministic_k_values() {
        let m = Model::preset("det-2").unwrap();
        assert!((m.k_exponent(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((m.k_exponent(3.0).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn iid_cluster_k_values_match_summation_oracle() {
        let m = Model::preset("iid-cluster-b3").unwrap();
        let ek = zeta_brute(3.0);
        assert!((ek - 1.20206).abs() < 1e-4);
        assert!((m.k_exponent(1.0).unwrap() - 1.0).abs() < 1e-12);
        let k3 = ek.powf(-2.0);
        assert!((m.k_exponent(3.0).unwrap() - k3).abs() < 1e-10);
        assert!((k3 - 0.6921).abs() < 1e-4);
    }

    #[test]
    fn gaussian_binary_k_values() {
        let m = Model::preset("gauss-binary").unwrap();
        // k_3 = 0.25 e^{0.27}, k_2 = 0.5 e^{0.09}
        assert!((m.k_exponent(3.0).unwrap() - 0.25 * 0.27f64.exp()).abs() < 1e-12);
        assert!((m.k_exponent(3.0).unwrap() - 0.32749).abs() < 1e-5);
        assert!((m.k_exponent(2.0).unwrap() - 0.5471).abs() < 1e-4);
    }

    #[test]
    fn laplace_values() {
        // det-2 with displacement -log 2 normalizes m(1) = 1
        let det = Model::preset("det-2").unwrap();
        assert!((det.laplace_m(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((det.m_gamma() - 1.0).abs() < 1e-15);

        let gb = Model::preset("gauss-binary").unwrap();
        assert!((gb.laplace_m(1.0).unwrap() - 2.0 * 0.045f64.exp()).abs() < 1e-12);
        assert!((gb.laplace_m(1.0).unwrap() - 2.0920).abs() < 1e-4);

        // iid cluster: m(y) = zeta(beta) e^{y d}
        let spec = ModelSpec {
            family: Family::IidCluster { displacement: Displacement::Constant { d: 0.7 } },
            beta: 3.0,
            gamma: 2.0,
        };
        let m = Model::build(spec).unwrap();
        let want = zeta_brute(3.0) * (1.3f64 * 0.7).exp();
        assert!((m.laplace_m(1.3).unwrap() - want).abs() < 1e-9 * want);

        // h-families reject y <= 0
        let p = Model::preset("poisson").unwrap();
        assert!(matches!(p.laplace_m(0.0), Err(Error::OutOfDomain(_))));
        assert!((p.laplace_m(1.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn k_domain_is_enforced() {
        let m = Model::preset("iid-cluster-b3").unwrap();
        assert!(matches!(m.k_exponent(0.9), Err(Error::OutOfDomain(_))));
        assert!(matches!(m.k_exponent(3.6), Err(Error::OutOfDomain(_))));
        assert!(m.k_exponent(3.5).is_ok());
    }

    #[test]
    fn tail_constant_values() {
        let m = Model::preset("iid-cluster-b3").unwrap();
        let k3 = zeta_brute(3.0).powf(-2.0);
        let want = 1.0 / (1.0 - k3);
        let got = m.theoretical_tail_constant().unwrap();
        assert!((got - want).abs() < 1e-9);
        assert!((got - 3.2475).abs() < 1e-4);

        for preset in ["det-2", "gauss-binary", "poisson", "renewal-exp"] {
            let m = Model::preset(preset).unwrap();
            assert!(matches!(m.theoretical_tail_constant(), Err(Error::NotHeavyTail(_))));
        }
    }

    #[test]
    fn moment_condition_rejection() {
        // widen the displacement spread until k_beta >= 1
        let spec = ModelSpec {
            family: Family::IidCluster {
                displacement: Displacement::Gaussian { mu: 0.0, sigma: 0.5 },
            },
            beta: 3.0,
            gamma: 1.0,
        };
        match Model::build(spec) {
            Err(Error::MomentConditionViolated { k_beta }) => {
                // oracle: k_3 = EK^-2 e^{3 sigma^2} with sigma = 0.5
                let want = zeta_brute(3.0).powf(-2.0) * (3.0 * 0.25f64).exp();
                assert!(want >= 1.0);
                assert!((k_beta - want).abs() < 1e-9, "reported {k_beta}, oracle {want}");
            }
            other => panic!("expected MomentConditionViolated, got {other:?}"),
        }
    }

    #[test]
    fn all_presets_build_and_classify() {
        for name in PRESET_NAMES {
            let m = Model::preset(name).unwrap();
            let heavy = matches!(m.spec().family, Family::IidCluster { .. });
            assert_eq!(m.is_heavy_tail(), heavy, "{name}");
            if heavy {
                let c = m.slowly_varying_const().unwrap();
                assert!((c - zeta_brute(3.0).powf(-3.0)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn offspring_examples() {
        let det = Model::preset("det-2").unwrap();
        let mut rng = stream_rng(1, 0);
        let r = det.sample_offspring(&mut rng).unwrap();
        assert_eq!(r.weights, vec![0.5, 0.5]);
        assert!(!r.truncated);
        assert_eq!(r.truncated_mass_bound, 0.0);

        let iid = Model::preset("iid-cluster-b3").unwrap();
        let r = iid.sample_offspring(&mut rng).unwrap();
        let w = 1.0 / zeta_brute(3.0);
        for &y in &r.weights {
            assert!((y - w).abs() < 1e-9);
            assert!((y - 0.8319).abs() < 1e-4);
        }
    }

    #[test]
    fn offspring_mean_mass_and_moments() {
        // sample mean of sum Y and sum Y^x vs closed form, all families
        let reps = 100_000usize;
        for (si, name) in PRESET_NAMES.iter().enumerate() {
            let m = Model::preset(name).unwrap();
            let beta = m.beta();
            let xs = [beta - MOM_EPSILON, 2.0, beta];
            let mut rng = stream_rng(100 + si as u64, 0);
            let mut mass = OnlineMoments::default();
            let mut moms = [OnlineMoments::default(), OnlineMoments::default(), OnlineMoments::default()];
            for _ in 0..reps {
                let r = m.sample_offspring(&mut rng).unwrap();
                mass.push(r.weights.iter().sum());
                for (j, &x) in xs.iter().enumerate() {
                    moms[j].push(r.weights.iter().map(|y| y.powf(x)).sum());
                }
            }
            let (mean, se) = mass.mean_se();
            assert!(
                (mean - 1.0).abs() <= 3.0 * se,
                "{name}: mean mass {mean} +- {se}"
            );
            for (j, &x) in xs.iter().enumerate() {
                let want = m.k_exponent(x).unwrap();
                let (mean, se) = moms[j].mean_se();
                assert!(
                    (mean - want).abs() <= 3.0 * se.max(1e-12),
                    "{name}: k_{x} sample {mean} +- {se}, closed form {want}"
                );
            }
        }
    }

    #[test]
    fn k_is_log_convex_on_grid() {
        for name in PRESET_NAMES {
            let m = Model::preset(name).unwrap();
            for x in [1.2f64, 1.6, 2.0, 2.4, 2.8] {
                let (lo, hi) = (x - 0.2, x + 0.2);
                if lo < 1.0 || hi > m.beta() + DELTA_MAX {
                    continue;
                }
                let kx = m.k_exponent(x).unwrap();
                let prod = m.k_exponent(lo).unwrap() * m.k_exponent(hi).unwrap();
                assert!(kx * kx <= prod * (1.0 + 1e-12), "{name} at x={x}");
            }
        }
    }

    #[test]
    fn infinite_families_truncate_with_recorded_bound() {
        for name in ["poisson", "renewal-exp"] {
            let m = Model::preset(name).unwrap();
            let mut rng = stream_rng(42, 9);
            let r = m.sample_offspring(&mut rng).unwrap();
            assert!(r.truncated);
            assert!(r.truncated_mass_bound > 0.0 && r.truncated_mass_bound < TRUNCATION_CUTOFF);
            assert!(r.weights.iter().all(|&w| w > 0.0 && w.is_finite()));
            // with theta = 1 the enumeration runs to tau ~ 27.6
            assert!(r.weights.len() > 10);
        }
    }

    #[derive(Default)]
    struct OnlineMoments {
        n: u64,
        sum: f64,
        sumsq: f64,
    }

    impl OnlineMoments {
        fn push(&mut self, x: f64) {
            self.n += 1;
            self.sum += x;
            self.sumsq += x * x;
        }

        fn mean_se(&self) -> (f64, f64) {
            let n = self.n as f64;
            let mean = self.sum / n;
            let var = (self.sumsq / n - mean * mean).max(0.0);
            (mean, (var / n).sqrt())
        }
    }
}
