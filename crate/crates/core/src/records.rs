//! Record indicators, record counts `K(m)` and record times `ν(k)`.
//!
//! For θ = 1 the record times satisfy Williams' recursion
//! `R(1) = 1, R(n+1) = ⌈R(n)/U_n⌉`, which lets a round over `m` players be
//! sampled in `O(log m)` steps. For general θ the indicators are Bernoulli
//! with success probability `θ/(i+θ-1)` and are scanned one by one.

use std::cmp::Ordering;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::numerics::{harmonic_pair, tower_harmonic, Magnitude, TowerReal};
use crate::rng::{bernoulli, unit_numerator, UNIT_BITS};

/// Exact record times are carried as integers below this bound.
pub const EXACT_RECORD_CAP: u128 = 1 << 62;

/// Record-time arguments whose logarithm exceeds this are not queried; the
/// change they would cause in any iterated logarithm is below `e^-300`.
pub const LOG_INDEX_CAP: f64 = 700.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordSamplerConfig {
    pub theta: f64,
    /// Record times `ν(k)` with `k` up to this are sampled exactly.
    pub exact_record_time_threshold: u64,
    /// Populations above this use the approximate record count.
    pub clt_population_threshold: u64,
}

impl Default for RecordSamplerConfig {
    fn default() -> Self {
        RecordSamplerConfig {
            theta: 1.0,
            exact_record_time_threshold: 15,
            clt_population_threshold: 10_000_000,
        }
    }
}

impl RecordSamplerConfig {
    pub fn with_theta(theta: f64) -> Self {
        RecordSamplerConfig { theta, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0) || !self.theta.is_finite() {
            return domain(format!("theta must be positive, got {}", self.theta));
        }
        if self.exact_record_time_threshold < 2 || self.clt_population_threshold < 2 {
            return domain("sampler thresholds must be at least 2");
        }
        Ok(())
    }
}

/// Survivors of one round, by their current numbers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub survivor_indices: Vec<u64>,
}

impl RoundOutcome {
    pub fn count(&self) -> u64 {
        self.survivor_indices.len() as u64
    }
}

/// One step of Williams' recursion, `⌈r / U⌉` with `U = u/2^53`, `u` in `1..=2^53`.
#[inline]
pub fn williams_step<R: Rng + ?Sized>(r: u128, rng: &mut R) -> u128 {
    let u = unit_numerator(rng) as u128;
    ((r << UNIT_BITS) + u - 1) / u
}

fn check_population(m: u64, cfg: &RecordSamplerConfig) -> Result<()> {
    cfg.validate()?;
    if m == 0 {
        return domain("population must be at least 1");
    }
    Ok(())
}

/// Visits the record indices in `1..=m` in increasing order.
fn for_each_record<R: Rng + ?Sized>(m: u64, theta: f64, rng: &mut R, mut visit: impl FnMut(u64)) {
    visit(1);
    if theta == 1.0 {
        let mut r: u128 = 1;
        loop {
            r = williams_step(r, rng);
            if r > m as u128 {
                break;
            }
            visit(r as u64);
        }
    } else {
        for i in 2..=m {
            if bernoulli(rng, theta / (i as f64 + theta - 1.0)) {
                visit(i);
            }
        }
    }
}

/// Plays one round among players `1..=m`.
pub fn sample_round<R: Rng + ?Sized>(
    m: u64,
    cfg: &RecordSamplerConfig,
    rng: &mut R,
) -> Result<RoundOutcome> {
    check_population(m, cfg)?;
    let mut survivor_indices = Vec::new();
    for_each_record(m, cfg.theta, rng, |i| survivor_indices.push(i));
    Ok(RoundOutcome { survivor_indices })
}

/// `K(m)`, the number of records among the first `m` observations.
pub fn count_records<R: Rng + ?Sized>(m: u64, cfg: &RecordSamplerConfig, rng: &mut R) -> Result<u64> {
    check_population(m, cfg)?;
    let mut k = 0;
    for_each_record(m, cfg.theta, rng, |_| k += 1);
    Ok(k)
}

/// Populations up to this are counted exactly inside [`approx_count_records`].
const APPROX_EXACT_PREFIX: u64 = 1 << 40;

/// Above this mean the Poisson count is replaced by a normal one.
const POISSON_MAX_MEAN: f64 = 1e15;

/// Approximate `K(m)` (θ = 1) for populations too large to scan.
///
/// The records in `1..=2^40` are sampled exactly; the count of the remaining
/// independent indicators is Poisson with mean `H_m - H_{2^40}` (normal once
/// the mean exceeds `1e15`). Smaller populations are counted exactly.
pub fn approx_count_records<R: Rng + ?Sized>(m: TowerReal, rng: &mut R) -> TowerReal {
    let mf = m.to_f64();
    if mf <= APPROX_EXACT_PREFIX as f64 {
        let k = count_records(mf.floor() as u64, &RecordSamplerConfig::default(), rng)
            .expect("population >= 1");
        return TowerReal::from_f64(k as f64).expect("count >= 1");
    }
    let base = count_records(APPROX_EXACT_PREFIX, &RecordSamplerConfig::default(), rng)
        .expect("population >= 1") as f64;
    let h_prefix = harmonic_pair(APPROX_EXACT_PREFIX).0;
    let z: f64 = StandardNormal.sample(rng);
    match tower_harmonic(m).mean {
        Magnitude::Real(h) => {
            let lambda = h - h_prefix;
            let extra = if lambda <= POISSON_MAX_MEAN {
                Poisson::new(lambda).expect("finite positive mean").sample(rng)
            } else {
                lambda + lambda.sqrt() * z
            };
            TowerReal::from_f64((base + extra).max(1.0)).expect("finite count")
        }
        Magnitude::Tower(h) => {
            // relative noise z/sqrt(H_m) is below double precision here
            let sd_ratio = match h.ln() {
                Magnitude::Real(l) if l < 2.0 * LOG_INDEX_CAP => z * (-0.5 * l).exp(),
                _ => 0.0,
            };
            let shifted = h.offset(base - h_prefix).unwrap_or(h);
            shifted.offset_ratio(sd_ratio).unwrap_or(shifted)
        }
    }
}

/// A record time, exact or through its natural logarithm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum RecordIndex {
    Exact(u64),
    /// `ln ν`.
    Log(f64),
}

impl RecordIndex {
    pub fn ln(&self) -> f64 {
        match *self {
            RecordIndex::Exact(v) => (v as f64).ln(),
            RecordIndex::Log(l) => l,
        }
    }

    pub fn as_f64(&self) -> f64 {
        match *self {
            RecordIndex::Exact(v) => v as f64,
            RecordIndex::Log(l) => l.exp(),
        }
    }

    /// `L_n` of the index, `n >= 1` for log-domain values.
    pub fn iterlog(&self, n: u32) -> f64 {
        let (mut y, steps) = match *self {
            RecordIndex::Exact(v) => (v as f64, n),
            RecordIndex::Log(l) if n == 0 => (l.exp(), 0),
            RecordIndex::Log(l) => (1.0 + l, n - 1),
        };
        for _ in 0..steps {
            y = 1.0 + y.ln();
        }
        y
    }

    fn cmp_value(&self, other: &RecordIndex) -> Ordering {
        match (self, other) {
            (RecordIndex::Exact(a), RecordIndex::Exact(b)) => a.cmp(b),
            _ => self.ln().total_cmp(&other.ln()),
        }
    }
}

/// Joint sampler of one record-time sequence `k ↦ ν(k)`, queried at
/// increasing arguments.
///
/// Arguments up to the exact threshold are served by Williams' recursion. A
/// jump from `ν(a)` to `ν(b)` beyond it uses `ln ν(b) ≈ ln ν(a) + Γ(b - a)`,
/// which is Williams' recursion with the ceiling dropped.
#[derive(Clone, Debug)]
pub struct RecordTimeProcess {
    threshold: u64,
    position: RecordIndex,
    value: RecordIndex,
}

impl RecordTimeProcess {
    pub fn new(exact_threshold: u64) -> Self {
        RecordTimeProcess {
            threshold: exact_threshold,
            position: RecordIndex::Exact(1),
            value: RecordIndex::Exact(1),
        }
    }

    fn step_exact<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.value = match self.value {
            RecordIndex::Exact(r) => {
                let next = williams_step(r as u128, rng);
                if next < EXACT_RECORD_CAP {
                    RecordIndex::Exact(next as u64)
                } else {
                    RecordIndex::Log((next as f64).ln())
                }
            }
            RecordIndex::Log(l) => {
                let e: f64 = Exp1.sample(rng);
                RecordIndex::Log(l + e)
            }
        };
        if let RecordIndex::Exact(k) = self.position {
            self.position = RecordIndex::Exact(k + 1);
        }
    }

    /// `ν(arg)`; `arg` must not decrease between calls. Returns `None` once
    /// `ln arg` exceeds [`LOG_INDEX_CAP`] or `ln ν(arg)` overflows.
    pub fn at<R: Rng + ?Sized>(&mut self, arg: RecordIndex, rng: &mut R) -> Option<RecordIndex> {
        if arg.ln() > LOG_INDEX_CAP {
            return None;
        }
        debug_assert!(arg.cmp_value(&self.position) != Ordering::Less);
        if let RecordIndex::Exact(target) = arg {
            let stop = target.min(self.threshold);
            while let RecordIndex::Exact(k) = self.position {
                if k >= stop {
                    break;
                }
                self.step_exact(rng);
            }
        }
        if arg.cmp_value(&self.position) == Ordering::Greater {
            let gap = match (arg, self.position) {
                (RecordIndex::Exact(a), RecordIndex::Exact(b)) => (a - b) as f64,
                _ => {
                    let (la, lp) = (arg.ln(), self.position.ln());
                    la.exp() * -(lp - la).exp_m1()
                }
            };
            let jump: f64 = Gamma::new(gap, 1.0).expect("positive shape").sample(rng);
            self.value = RecordIndex::Log(self.value.ln() + jump);
            self.position = arg;
        }
        if !self.value.ln().is_finite() {
            return None;
        }
        Some(self.value)
    }
}

/// `ν(k)` for θ = 1: exact for `k` up to the threshold, log-domain beyond.
pub fn record_time<R: Rng + ?Sized>(k: u64, cfg: &RecordSamplerConfig, rng: &mut R) -> Result<RecordIndex> {
    cfg.validate()?;
    if k == 0 {
        return domain("record index must be at least 1");
    }
    if cfg.theta != 1.0 {
        return domain("record_time requires theta = 1; use record_time_scan");
    }
    let mut p = RecordTimeProcess::new(cfg.exact_record_time_threshold);
    p.at(RecordIndex::Exact(k), rng)
        .ok_or_else(|| crate::Error::Domain(format!("record time of index {k} exceeds the tracked range")))
}

/// `ν(k)` by sequential scan of the θ-indicators; `None` if it exceeds `max_index`.
pub fn record_time_scan<R: Rng + ?Sized>(k: u64, theta: f64, max_index: u64, rng: &mut R) -> Result<Option<u64>> {
    RecordSamplerConfig::with_theta(theta).validate()?;
    if k == 0 {
        return domain("record index must be at least 1");
    }
    let mut found = 1;
    if k == 1 {
        return Ok(Some(1));
    }
    for i in 2..=max_index {
        if bernoulli(rng, theta / (i as f64 + theta - 1.0)) {
            found += 1;
            if found == k {
                return Ok(Some(i));
            }
        }
    }
    Ok(None)
}

/// Exact Williams path `R(1..=n)` together with the products `U_1⋯U_{i-1}`.
pub fn williams_path<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<(u128, f64)> {
    let mut out = Vec::with_capacity(n);
    let mut r: u128 = 1;
    let mut prod = 1.0;
    out.push((r, prod));
    for _ in 1..n {
        if r >= EXACT_RECORD_CAP {
            break;
        }
        let u = unit_numerator(rng) as u128;
        r = ((r << UNIT_BITS) + u - 1) / u;
        prod *= u as f64 / (1u64 << UNIT_BITS) as f64;
        out.push((r, prod));
    }
    out
}

/// Expected record count `H_m` for θ = 1, or `Σ θ/(i+θ-1)` otherwise.
pub fn expected_record_count(m: u64, theta: f64) -> f64 {
    if theta == 1.0 {
        return harmonic_pair(m).0;
    }
    (1..=m).map(|i| theta / (i as f64 + theta - 1.0)).sum()
}

/// Exact law of `K(m)` for small `m` by convolving the indicators.
pub fn record_count_pmf(m: usize, theta: f64) -> Vec<f64> {
    let mut pmf = vec![0.0; m + 1];
    pmf[0] = 1.0;
    for i in 1..=m {
        let p = theta / (i as f64 + theta - 1.0);
        for k in (1..=i).rev() {
            pmf[k] = pmf[k] * (1.0 - p) + pmf[k - 1] * p;
        }
        pmf[0] *= 1.0 - p;
    }
    pmf
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use proptest::prelude::*;

    #[test]
    fn round_of_one() {
        let cfg = RecordSamplerConfig::default();
        let mut rng = stream_rng(1, 0);
        for theta in [0.5, 1.0, 3.0] {
            let c = RecordSamplerConfig::with_theta(theta);
            assert_eq!(sample_round(1, &c, &mut rng).unwrap().survivor_indices, vec![1]);
        }
        assert!(sample_round(0, &cfg, &mut rng).is_err());
    }

    #[test]
    fn record_count_pmf_oracle() {
        let p = record_count_pmf(3, 1.0);
        assert!((p[1] - 1.0 / 3.0).abs() < 1e-15);
        assert!((p[2] - 0.5).abs() < 1e-15);
        assert!((p[3] - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn process_is_monotone() {
        let mut rng = stream_rng(2, 0);
        let mut p = RecordTimeProcess::new(15);
        let mut prev = 0.0;
        for k in [1u64, 2, 5, 15, 16, 40, 400] {
            let v = p.at(RecordIndex::Exact(k), &mut rng).unwrap();
            assert!(v.ln() >= prev);
            prev = v.ln();
        }
    }

    #[test]
    fn approx_count_small_is_exact_path() {
        let mut rng = stream_rng(3, 0);
        let v = approx_count_records(TowerReal::from_f64(1.0).unwrap(), &mut rng);
        assert_eq!(v.to_f64(), 1.0);
    }

    #[test]
    fn approx_count_tower_drops_one_level() {
        let mut rng = stream_rng(4, 0);
        let m = crate::numerics::modified_tetration(5, 2.0).unwrap();
        for _ in 0..1000 {
            assert_eq!(approx_count_records(m, &mut rng).level(), 4);
        }
    }

    #[test]
    fn record_time_scan_theta_one_is_small_for_k1() {
        let mut rng = stream_rng(5, 0);
        assert_eq!(record_time_scan(1, 2.0, 10, &mut rng).unwrap(), Some(1));
    }

    proptest! {
        #[test]
        fn count_in_range(m in 1u64..5000, seed in 0u64..1000) {
            let mut rng = stream_rng(seed, 0);
            let k = count_records(m, &RecordSamplerConfig::default(), &mut rng).unwrap();
            prop_assert!(k >= 1 && k <= m);
        }

        #[test]
        fn survivors_strictly_increasing(m in 1u64..5000, theta in 0.2f64..4.0, seed in 0u64..1000) {
            let mut rng = stream_rng(seed, 1);
            let out = sample_round(m, &RecordSamplerConfig::with_theta(theta), &mut rng).unwrap();
            prop_assert_eq!(out.survivor_indices[0], 1);
            prop_assert!(out.survivor_indices.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(*out.survivor_indices.last().unwrap() <= m);
        }

        #[test]
        fn williams_lower_bound(seed in 0u64..2000) {
            let mut rng = stream_rng(seed, 2);
            let path = williams_path(15, &mut rng);
            for w in path.windows(2) {
                prop_assert!(w[0].0 <= w[1].0);
            }
            for &(r, prod) in &path {
                prop_assert!(r as f64 >= (1.0 / prod) * (1.0 - 1e-12));
            }
        }
    }
}
