//! Block-count chain of the Poisson-Dirichlet coalescent.
//!
//! From `m` blocks the chain jumps to `J_θ(m) = k` with probability
//! `θ^k [m,k] / ([θ]_m - θ^m)`, `1 <= k < m`, where `[m,k]` are unsigned
//! Stirling numbers of the first kind. `J_θ(m)` is a θ-record count
//! conditioned to be below `m`, which is how it is sampled.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::limits::{LimitEstimate, LimitKind};
use crate::numerics::{log_star, standard_tetration, Magnitude, TowerReal};
use crate::records::{approx_count_records, count_records, RecordSamplerConfig};
use crate::stats::{mean_ci, EmpiricalDist};

/// Default size up to which Stirling numbers are kept exactly.
pub const DEFAULT_EXACT_CAP: usize = 64;

fn log_sum_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Unsigned Stirling numbers of the first kind `[n,k]` for `n <= n_max`.
#[derive(Clone, Debug)]
pub struct StirlingTable {
    exact: Vec<Vec<BigUint>>,
    log_values: Vec<Vec<f64>>,
}

impl StirlingTable {
    /// Exact rows up to `n_exact_cap`, log-domain rows up to `n_max`.
    pub fn new(n_max: usize, n_exact_cap: usize) -> Self {
        let cap = n_exact_cap.min(n_max);
        let mut exact: Vec<Vec<BigUint>> = vec![vec![BigUint::one()]];
        for n in 0..cap {
            let prev = &exact[n];
            let mut row = vec![BigUint::zero(); n + 2];
            for k in 1..=n + 1 {
                let mut v = prev.get(k - 1).cloned().unwrap_or_default();
                if k <= n {
                    v += &prev[k] * BigUint::from(n as u64);
                }
                row[k] = v;
            }
            exact.push(row);
        }
        let mut log_values: Vec<Vec<f64>> = exact
            .iter()
            .map(|row| {
                row.iter()
                    .map(|v| if v.is_zero() { f64::NEG_INFINITY } else { big_ln(v) })
                    .collect()
            })
            .collect();
        for n in cap..n_max {
            let prev = &log_values[n];
            let ln_n = (n as f64).ln();
            let mut row = vec![f64::NEG_INFINITY; n + 2];
            for k in 1..=n + 1 {
                let carry = if k <= n { ln_n + prev[k] } else { f64::NEG_INFINITY };
                row[k] = log_sum_exp(carry, prev[k - 1]);
            }
            log_values.push(row);
        }
        StirlingTable { exact, log_values }
    }

    pub fn n_max(&self) -> usize {
        self.log_values.len() - 1
    }

    pub fn n_exact_cap(&self) -> usize {
        self.exact.len() - 1
    }

    pub fn exact(&self, n: usize, k: usize) -> Option<&BigUint> {
        self.exact.get(n).and_then(|r| r.get(k))
    }

    /// `ln [n,k]`, `-inf` where the number vanishes.
    pub fn ln(&self, n: usize, k: usize) -> f64 {
        self.log_values
            .get(n)
            .and_then(|r| r.get(k))
            .copied()
            .unwrap_or(f64::NEG_INFINITY)
    }

    /// `P{J_θ(n) = k}` for `k = 1..n`, as a vector indexed by `k - 1`.
    pub fn pmf_j_row(&self, n: usize, theta: f64) -> Result<Vec<f64>> {
        if n < 2 || n > self.n_max() {
            return domain(format!("pmf_J row needs 2 <= n <= {}, got {n}", self.n_max()));
        }
        if !(theta > 0.0) {
            return domain("theta must be positive");
        }
        if theta == 1.0 && n <= self.n_exact_cap() {
            let row = &self.exact[n];
            let denom: BigUint = row[1..n].iter().sum();
            return Ok(row[1..n].iter().map(|v| big_ratio(v, &denom)).collect());
        }
        let lt = theta.ln();
        let logs: Vec<f64> = (1..n).map(|k| k as f64 * lt + self.ln(n, k)).collect();
        let norm = logs.iter().copied().fold(f64::NEG_INFINITY, log_sum_exp);
        Ok(logs.iter().map(|l| (l - norm).exp()).collect())
    }

    pub fn pmf_j(&self, n: usize, k: usize, theta: f64) -> Result<f64> {
        if k < 1 || k >= n {
            return domain(format!("pmf_J needs 1 <= k < n, got n={n}, k={k}"));
        }
        Ok(self.pmf_j_row(n, theta)?[k - 1])
    }
}

fn big_ln(v: &BigUint) -> f64 {
    let bits = v.bits();
    if bits < 1000 {
        return v.to_f64().expect("finite below 2^1000").ln();
    }
    let shift = bits - 64;
    (v >> shift).to_f64().expect("64-bit mantissa").ln() + shift as f64 * std::f64::consts::LN_2
}

fn big_ratio(a: &BigUint, b: &BigUint) -> f64 {
    (big_ln(a) - big_ln(b)).exp()
}

/// `P{J_θ(n) = k}`.
pub fn pmf_j(n: usize, k: usize, theta: f64) -> Result<f64> {
    StirlingTable::new(n, DEFAULT_EXACT_CAP).pmf_j(n, k, theta)
}

/// Draws `J_θ(n)` by rejecting record counts equal to `n`.
pub fn sample_j<R: Rng + ?Sized>(n: u64, theta: f64, rng: &mut R) -> Result<u64> {
    if n < 2 {
        return domain("J_theta(n) needs n >= 2");
    }
    let cfg = RecordSamplerConfig::with_theta(theta);
    loop {
        let k = count_records(n, &cfg, rng)?;
        if k < n {
            return Ok(k);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoalescentChain {
    pub theta: f64,
    /// Approximate initial states above the population threshold.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub approx_prefix: Vec<TowerReal>,
    /// Exact states, strictly decreasing to 1.
    pub path: Vec<u64>,
    /// `X_θ(n)`, the number of collisions.
    pub collisions: u32,
}

/// Runs the chain from `n` exact blocks down to one.
pub fn run_coalescent<R: Rng + ?Sized>(n: u64, theta: f64, rng: &mut R) -> Result<CoalescentChain> {
    if n == 0 {
        return domain("need at least one block");
    }
    let mut path = vec![n];
    let mut m = n;
    while m > 1 {
        m = sample_j(m, theta, rng)?;
        path.push(m);
    }
    Ok(CoalescentChain { theta, approx_prefix: Vec::new(), collisions: path.len() as u32 - 1, path })
}

/// Runs the chain (θ = 1) from a possibly tower-sized number of blocks.
///
/// States above `threshold` move by the approximate record count; the
/// conditioning on a genuine merger is dropped there.
pub fn run_coalescent_tower<R: Rng + ?Sized>(n: TowerReal, threshold: u64, rng: &mut R) -> Result<CoalescentChain> {
    let mut prefix = Vec::new();
    let mut cur = n;
    while cur.to_f64() > threshold as f64 {
        prefix.push(cur);
        cur = approx_count_records(cur, rng);
    }
    let mut chain = run_coalescent(cur.to_f64().floor() as u64, 1.0, rng)?;
    chain.collisions += prefix.len() as u32;
    chain.approx_prefix = prefix;
    Ok(chain)
}

/// `⌊Ẽ_n(ρ)⌋` as a population.
pub fn standard_tetration_population(n: u32, rho: f64) -> Result<TowerReal> {
    match standard_tetration(n, rho) {
        Magnitude::Real(x) if x >= 1.0 => TowerReal::from_f64(x.floor()),
        Magnitude::Real(x) => domain(format!("population Ẽ_{n}({rho}) = {x} is below 1")),
        Magnitude::Tower(t) => Ok(t),
    }
}

/// Samples of `X_1(⌊Ẽ_n(ρ)⌋) - n`.
pub fn x1_shift_samples<R: Rng + ?Sized>(rho: f64, n_level: u32, n_samples: usize, rng: &mut R) -> Result<Vec<i64>> {
    let pop = standard_tetration_population(n_level, rho)?;
    (0..n_samples)
        .map(|_| {
            run_coalescent_tower(pop, crate::election::ElectionConfig::default().clt_population_threshold, rng)
                .map(|c| c.collisions as i64 - n_level as i64)
        })
        .collect()
}

/// Empirical law of `X_1(⌊Ẽ_n(ρ)⌋) - n`.
pub fn estimate_x1_limit<R: Rng + ?Sized>(rho: f64, n_level: u32, n_samples: usize, rng: &mut R) -> Result<LimitEstimate> {
    let samples = x1_shift_samples(rho, n_level, n_samples, rng)?;
    Ok(LimitEstimate::pmf(LimitKind::X1Shift, vec![("rho", rho), ("n_level", n_level as f64)], samples))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: f64,
    pub log_star: u32,
    pub mean_ratio: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub reps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub theta: f64,
    pub rows: Vec<ScalingRow>,
}

/// Mean of `X_θ(n) / log*_θ(n)` with 99% intervals over a grid of `n`.
pub fn log_star_scaling_check<R: Rng + ?Sized>(grid: &[u64], theta: f64, reps: usize, rng: &mut R) -> Result<ScalingReport> {
    let mut rows = Vec::with_capacity(grid.len());
    for &n in grid {
        let ls = log_star(n as f64, theta)?;
        if ls == 0 {
            return domain(format!("log*_theta({n}) is zero"));
        }
        let ratios: Vec<f64> = (0..reps)
            .map(|_| run_coalescent(n, theta, rng).map(|c| c.collisions as f64 / ls as f64))
            .collect::<Result<_>>()?;
        let dist = EmpiricalDist::new(ratios)?;
        let (ci_low, ci_high) = mean_ci(&dist, 0.99)?;
        rows.push(ScalingRow { n: n as f64, log_star: ls, mean_ratio: dist.mean(), ci_low, ci_high, reps });
    }
    Ok(ScalingReport { theta, rows })
}
