//! Trajectory simulation for the weight martingale `W_0..W_N` and its
//! pathwise functionals.
//!
//! One replicate grows the tree depth-first: a particle of weight `y` at
//! depth `j` adds `y` to `W_j` and, below the horizon, spawns children with
//! weights `y * Y_child` from a fresh offspring draw. Depth-first traversal
//! keeps memory at O(depth x branching); the tree is never materialized.
//!
//! Each replicate owns one random stream, consumed in traversal order, so a
//! replicate is a pure function of `(seed, stream_id)`.

use crate::error::{Error, Result};
use crate::models::{Model, Realization};
use crate::sampling::RandomStream;

/// Resource limits and horizons for one simulated trajectory.
#[derive(Debug, Clone, Copy)]
pub struct SimCaps {
    /// Number of generations `N`; the path is `W_0..W_N`.
    pub max_depth: usize,
    /// Budget of particles processed per replicate. A replicate that
    /// exhausts it is flagged `failed` and excluded by callers; failure is
    /// data, not an error.
    pub population_cap: u64,
    /// Subtrees whose root weight falls below this floor are dropped and
    /// accounted in `pruned_mass`. Zero means exact.
    pub weight_floor: f64,
    /// Horizon `N0 < N` for the limit-deviation proxies.
    pub m_proxy_horizon: usize,
}

impl SimCaps {
    pub const DEFAULT_POPULATION_CAP: u64 = 1_000_000;

    /// Caps with depth `n`, proxy horizon `n/2`, default budget, no floor.
    pub fn new(max_depth: usize) -> Result<Self> {
        Self::with_horizon(max_depth, (max_depth / 2).max(1))
    }

    pub fn with_horizon(max_depth: usize, m_proxy_horizon: usize) -> Result<Self> {
        let caps = SimCaps {
            max_depth,
            population_cap: Self::DEFAULT_POPULATION_CAP,
            weight_floor: 0.0,
            m_proxy_horizon,
        };
        caps.validate()?;
        Ok(caps)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_depth < 2 || self.max_depth > 10_000 {
            return Err(Error::ConfigInvalid(format!(
                "depth must be in [2, 10000], got {}",
                self.max_depth
            )));
        }
        if !(self.m_proxy_horizon >= 1 && self.m_proxy_horizon < self.max_depth) {
            return Err(Error::ConfigInvalid(format!(
                "proxy horizon must satisfy 1 <= N0 < N, got N0 = {}, N = {}",
                self.m_proxy_horizon, self.max_depth
            )));
        }
        if self.population_cap == 0 {
            return Err(Error::ConfigInvalid("population cap must be >= 1".into()));
        }
        if !(self.weight_floor >= 0.0) {
            return Err(Error::ConfigInvalid("weight floor must be >= 0".into()));
        }
        Ok(())
    }
}

/// One replicate's path `W_0..W_N` with its martingale differences.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// `w[k] = W_k`; `w[0] = 1`.
    pub w: Vec<f64>,
    /// `d[k-1] = W_k - W_{k-1}` for `k = 1..N`.
    pub d: Vec<f64>,
    /// Accounted bound on mass dropped by pruning/truncation: the expected
    /// contribution of dropped subtrees to each subsequent generation sum.
    pub pruned_mass: f64,
    /// Population budget exhausted; the path is incomplete and must be
    /// excluded from statistics.
    pub failed: bool,
}

/// Pathwise functionals of a trajectory.
#[derive(Debug, Clone)]
pub struct Functionals {
    /// Running maximum `max_{0<=k<=N} W_k`.
    pub w_star: f64,
    /// Square function `(1 + sum d_k^2)^{1/2}`.
    pub s: f64,
    /// Largest single increment `max |d_k|`.
    pub delta: f64,
    /// `W_N`, standing in for the almost-sure limit.
    pub w_limit_proxy: f64,
    /// `max_{0<=n<=N0} |W_N - W_n|`, the finite-horizon proxy for the
    /// maximal deviation from the limit.
    pub m_proxy: f64,
    /// `sup_from[n] = max_{n<=m<=N} W_m` for `n = 0..=N0`.
    pub sup_from: Vec<f64>,
    /// `dev_from[n] = max_{n<=m<=N0} |W_N - W_m|` for `n = 0..=N0`: the
    /// from-`n` tail deviation family; `dev_from[0] = m_proxy`.
    pub dev_from: Vec<f64>,
}

struct Walk<'a> {
    model: &'a Model,
    caps: &'a SimCaps,
    w: Vec<f64>,
    visited: u64,
    pruned: f64,
    failed: bool,
}

impl Walk<'_> {
    fn visit(&mut self, rng: &mut RandomStream, depth: usize, weight: f64) {
        if self.failed {
            return;
        }
        self.visited += 1;
        if self.visited > self.caps.population_cap {
            self.failed = true;
            return;
        }
        self.w[depth] += weight;
        if depth == self.caps.max_depth {
            return;
        }
        let realization: Realization = match self.model.sample_offspring(rng) {
            Ok(r) => r,
            Err(_) => {
                self.failed = true;
                return;
            }
        };
        self.pruned += weight * realization.truncated_mass_bound;
        for &y in &realization.weights {
            let child = weight * y;
            if child < self.caps.weight_floor {
                self.pruned += child;
                continue;
            }
            self.visit(rng, depth + 1, child);
            if self.failed {
                return;
            }
        }
    }
}

/// Simulate one trajectory `W_0..W_N`.
///
/// Exact when `weight_floor` is zero and the population budget holds;
/// otherwise `pruned_mass` accounts for what was dropped and `failed` flags
/// budget exhaustion.
pub fn simulate_trajectory(model: &Model, caps: &SimCaps, rng: &mut RandomStream) -> Trajectory {
    let mut walk = Walk {
        model,
        caps,
        w: vec![0.0; caps.max_depth + 1],
        visited: 0,
        pruned: 0.0,
        failed: false,
    };
    walk.visit(rng, 0, 1.0);
    let w = walk.w;
    let d = w.windows(2).map(|p| p[1] - p[0]).collect();
    Trajectory {
        w,
        d,
        pruned_mass: walk.pruned,
        failed: walk.failed,
    }
}

/// Compute all functionals of a completed trajectory.
pub fn functionals(traj: &Trajectory, caps: &SimCaps) -> Result<Functionals> {
    if traj.failed {
        return Err(Error::FailedTrajectory);
    }
    let n = caps.max_depth;
    let n0 = caps.m_proxy_horizon;
    debug_assert_eq!(traj.w.len(), n + 1);

    let w_star = traj.w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s = (1.0 + traj.d.iter().map(|d| d * d).sum::<f64>()).sqrt();
    let delta = traj.d.iter().fold(0.0f64, |a, d| a.max(d.abs()));
    let w_n = traj.w[n];
    let m_proxy = traj.w[..=n0]
        .iter()
        .fold(0.0f64, |a, &wk| a.max((w_n - wk).abs()));

    // suffix maxima of w give sup_from in one backward pass
    let mut suffix = vec![0.0; n + 1];
    let mut run = f64::NEG_INFINITY;
    for k in (0..=n).rev() {
        run = run.max(traj.w[k]);
        suffix[k] = run;
    }
    let sup_from = suffix[..=n0].to_vec();

    let mut dev_from = Vec::with_capacity(n0 + 1);
    let mut run = 0.0f64;
    for start in (0..=n0).rev() {
        run = run.max((w_n - traj.w[start]).abs());
        dev_from.push(run);
    }
    dev_from.reverse();

    Ok(Functionals {
        w_star,
        s,
        delta,
        w_limit_proxy: w_n,
        m_proxy,
        sup_from,
        dev_from,
    })
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy)]
pub struct MomentEstimate {
    pub mean: f64,
    pub se: f64,
    pub reps: u64,
}

/// Estimate the generation moment `E sum_{|u|=n} Y_u^x` over `reps`
/// replicates; its exact value is `k_x^n`.
pub fn generation_moment(
    model: &Model,
    n: usize,
    x: f64,
    reps: u64,
    rng: &mut RandomStream,
) -> Result<MomentEstimate> {
    model.k_exponent(x)?; // domain check
    if n == 0 || reps == 0 {
        return Err(Error::ConfigInvalid("generation_moment needs n >= 1, reps >= 1".into()));
    }
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    let mut used = 0u64;
    for _ in 0..reps {
        if let Some(v) = moment_walk(model, rng, n, x, &mut 0) {
            sum += v;
            sumsq += v * v;
            used += 1;
        }
    }
    if used == 0 {
        return Err(Error::FailedTrajectory);
    }
    let mean = sum / used as f64;
    let var = (sumsq / used as f64 - mean * mean).max(0.0);
    Ok(MomentEstimate {
        mean,
        se: (var / used as f64).sqrt(),
        reps: used,
    })
}

const MOMENT_NODE_BUDGET: u64 = 10_000_000;

fn moment_walk(model: &Model, rng: &mut RandomStream, n: usize, x: f64, nodes: &mut u64) -> Option<f64> {
    fn go(
        model: &Model,
        rng: &mut RandomStream,
        depth: usize,
        weight: f64,
        n: usize,
        x: f64,
        nodes: &mut u64,
    ) -> Option<f64> {
        *nodes += 1;
        if *nodes > MOMENT_NODE_BUDGET {
            return None;
        }
        if depth == n {
            return Some(weight.powf(x));
        }
        let r = model.sample_offspring(rng).ok()?;
        let mut acc = 0.0;
        for &y in &r.weights {
            acc += go(model, rng, depth + 1, weight * y, n, x, nodes)?;
        }
        Some(acc)
    }
    go(model, rng, 0, 1.0, n, x, nodes)
}
