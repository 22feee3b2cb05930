//! Empirical distributions and goodness-of-fit tests.
//!
//! All null distributions are asymptotic: Kolmogorov for the KS statistics
//! and chi-square for the cell-count tests, with sparse cells pooled until
//! every retained cell expects at least five observations.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Minimum expected count per retained chi-square cell.
pub const MIN_EXPECTED: f64 = 5.0;

/// Default significance level of [`TestReport::rejected`].
pub const DEFAULT_ALPHA: f64 = 0.01;

/// Sorted sample with CDF, quantile and moment queries.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDist {
    samples: Vec<f64>,
}

impl EmpiricalDist {
    /// Sorts the sample; NaN values are rejected.
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.iter().any(|x| x.is_nan()) {
            return Err(Error::Domain("sample contains NaN".into()));
        }
        samples.sort_by(f64::total_cmp);
        Ok(EmpiricalDist { samples })
    }

    pub fn from_integers<I: IntoIterator<Item = i64>>(it: I) -> Self {
        Self::new(it.into_iter().map(|k| k as f64).collect()).expect("integers are not NaN")
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Fraction of the sample `<= x`.
    pub fn cdf(&self, x: f64) -> f64 {
        if self.samples.is_empty() {
            return f64::NAN;
        }
        self.samples.partition_point(|&s| s <= x) as f64 / self.len() as f64
    }

    /// Binomial standard error of [`cdf`](Self::cdf).
    pub fn cdf_sigma(&self, x: f64) -> f64 {
        let p = self.cdf(x);
        (p * (1.0 - p) / self.len() as f64).sqrt()
    }

    /// Fraction of the sample in the closed interval `[lo, hi]`.
    pub fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        if hi < lo {
            return 0.0;
        }
        let a = self.samples.partition_point(|&s| s < lo);
        let b = self.samples.partition_point(|&s| s <= hi);
        (b - a) as f64 / self.len() as f64
    }

    /// Smallest sample value `x` with `cdf(x) >= p`.
    pub fn quantile(&self, p: f64) -> f64 {
        if self.samples.is_empty() {
            return f64::NAN;
        }
        let n = self.len();
        let idx = ((p * n as f64).ceil() as usize).clamp(1, n) - 1;
        self.samples[idx]
    }

    pub fn min(&self) -> f64 {
        self.samples.first().copied().unwrap_or(f64::NAN)
    }

    pub fn max(&self) -> f64 {
        self.samples.last().copied().unwrap_or(f64::NAN)
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.len() as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let n = self.len() as f64;
        let m = self.mean();
        self.samples.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
    }

    pub fn std_err(&self) -> f64 {
        (self.variance() / self.len() as f64).sqrt()
    }

    /// Counts per integer value (the sample is rounded).
    pub fn integer_counts(&self) -> BTreeMap<i64, u64> {
        let mut out = BTreeMap::new();
        for &x in &self.samples {
            *out.entry(x.round() as i64).or_insert(0) += 1;
        }
        out
    }

    /// Relative frequency of the integer `k`.
    pub fn pmf(&self, k: i64) -> f64 {
        self.mass_between(k as f64 - 0.5, k as f64 + 0.5)
    }
}

/// Critical values at the 10%, 5% and 1% levels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalValues {
    pub p10: f64,
    pub p05: f64,
    pub p01: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub test: String,
    pub statistic: f64,
    pub critical: CriticalValues,
    pub p_value: f64,
    pub alpha: f64,
    /// `p_value < alpha`, equivalently `statistic` above the level-`alpha` critical value.
    pub rejected: bool,
    pub sample_sizes: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dof: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl TestReport {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn at_level(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self.rejected = self.p_value < alpha;
        self
    }

    pub fn rejected_at(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// Kolmogorov survival function `P{K > λ}`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.0 {
        // Jacobi theta form, accurate for small λ
        let c = -std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let s: f64 = (1..=20)
            .map(|k| {
                let j = (2 * k - 1) as f64;
                (c * j * j).exp()
            })
            .sum();
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0);
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let t = (-2.0 * kf * kf * lambda * lambda).exp();
        s += if k % 2 == 1 { t } else { -t };
        if t < 1e-18 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// `λ` with `kolmogorov_sf(λ) = alpha`.
pub fn kolmogorov_quantile(alpha: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_sf(mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// KS critical distance at level `alpha` for effective size `n`.
pub fn ks_critical(alpha: f64, n_eff: f64) -> f64 {
    kolmogorov_quantile(alpha) / n_eff.sqrt()
}

fn ks_report(test: &str, d: f64, n_eff: f64, sizes: Vec<usize>) -> TestReport {
    let p_value = kolmogorov_sf(n_eff.sqrt() * d);
    TestReport {
        test: test.into(),
        statistic: d,
        critical: CriticalValues {
            p10: ks_critical(0.10, n_eff),
            p05: ks_critical(0.05, n_eff),
            p01: ks_critical(0.01, n_eff),
        },
        p_value,
        alpha: DEFAULT_ALPHA,
        rejected: p_value < DEFAULT_ALPHA,
        sample_sizes: sizes,
        dof: None,
        seed: None,
    }
}

/// One-sample KS test against a continuous or discrete reference CDF.
pub fn ks_one_sample(dist: &EmpiricalDist, reference: impl Fn(f64) -> f64) -> Result<TestReport> {
    if dist.is_empty() {
        return Err(Error::EmptySample);
    }
    let xs = dist.samples();
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let x = xs[i];
        let mut j = i;
        while j < xs.len() && xs[j] == x {
            j += 1;
        }
        let f = reference(x);
        d = d.max((j as f64 / n - f).abs()).max((i as f64 / n - f).abs());
        i = j;
    }
    Ok(ks_report("ks_one_sample", d, n, vec![xs.len()]))
}

/// Two-sample KS test.
pub fn ks_two_sample(a: &EmpiricalDist, b: &EmpiricalDist) -> Result<TestReport> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let (xa, xb) = (a.samples(), b.samples());
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] == x {
            i += 1;
        }
        while j < xb.len() && xb[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let n_eff = na * nb / (na + nb);
    Ok(ks_report("ks_two_sample", d, n_eff, vec![xa.len(), xb.len()]))
}

fn chi_square_report(test: &str, stat: f64, dof: usize, sizes: Vec<usize>) -> TestReport {
    if dof == 0 {
        return TestReport {
            test: test.into(),
            statistic: stat,
            critical: CriticalValues { p10: 0.0, p05: 0.0, p01: 0.0 },
            p_value: 1.0,
            alpha: DEFAULT_ALPHA,
            rejected: false,
            sample_sizes: sizes,
            dof: Some(0),
            seed: None,
        };
    }
    let chi = ChiSquared::new(dof as f64).expect("positive dof");
    let p_value = chi.sf(stat);
    TestReport {
        test: test.into(),
        statistic: stat,
        critical: CriticalValues {
            p10: chi.inverse_cdf(0.90),
            p05: chi.inverse_cdf(0.95),
            p01: chi.inverse_cdf(0.99),
        },
        p_value,
        alpha: DEFAULT_ALPHA,
        rejected: p_value < DEFAULT_ALPHA,
        sample_sizes: sizes,
        dof: Some(dof),
        seed: None,
    }
}

/// Groups consecutive cells until each group's weight reaches `min`; a short
/// final group is merged into its predecessor.
fn pool_cells(weights: &[f64], min: f64) -> Vec<std::ops::Range<usize>> {
    let mut groups: Vec<std::ops::Range<usize>> = Vec::new();
    let mut start = 0;
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if acc >= min {
            groups.push(start..i + 1);
            start = i + 1;
            acc = 0.0;
        }
    }
    if start < weights.len() {
        match groups.last_mut() {
            Some(last) => last.end = weights.len(),
            None => groups.push(0..weights.len()),
        }
    }
    groups
}

/// Chi-square goodness of fit of `counts` to `expected_probs`, which must sum to 1.
pub fn chi_square_gof(counts: &[u64], expected_probs: &[f64]) -> Result<TestReport> {
    if counts.len() != expected_probs.len() {
        return Err(Error::LengthMismatch(counts.len(), expected_probs.len()));
    }
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let total_p: f64 = expected_probs.iter().sum();
    if (total_p - 1.0).abs() > 1e-6 {
        return Err(Error::Domain(format!("expected probabilities sum to {total_p}, not 1")));
    }
    let expected: Vec<f64> = expected_probs.iter().map(|p| p * n as f64).collect();
    let groups = pool_cells(&expected, MIN_EXPECTED);
    let stat: f64 = groups
        .iter()
        .map(|g| {
            let o: f64 = counts[g.clone()].iter().map(|&c| c as f64).sum();
            let e: f64 = expected[g.clone()].iter().sum();
            if e > 0.0 {
                (o - e).powi(2) / e
            } else if o > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .sum();
    Ok(chi_square_report("chi_square_gof", stat, groups.len() - 1, vec![n as usize]))
}

/// Chi-square homogeneity test of two integer-valued samples.
pub fn chi_square_two_sample(a: &EmpiricalDist, b: &EmpiricalDist) -> Result<TestReport> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let (ca, cb) = (a.integer_counts(), b.integer_counts());
    let keys: Vec<i64> = ca.keys().chain(cb.keys()).copied().collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let oa: Vec<f64> = keys.iter().map(|k| *ca.get(k).unwrap_or(&0) as f64).collect();
    let ob: Vec<f64> = keys.iter().map(|k| *cb.get(k).unwrap_or(&0) as f64).collect();
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let share = na.min(nb) / (na + nb);
    // a cell qualifies once the smaller sample expects MIN_EXPECTED in it
    let weights: Vec<f64> = oa.iter().zip(&ob).map(|(x, y)| (x + y) * share).collect();
    let groups = pool_cells(&weights, MIN_EXPECTED);
    let mut stat = 0.0;
    for g in &groups {
        let ga: f64 = oa[g.clone()].iter().sum();
        let gb: f64 = ob[g.clone()].iter().sum();
        let tot = ga + gb;
        let ea = tot * na / (na + nb);
        let eb = tot * nb / (na + nb);
        stat += (ga - ea).powi(2) / ea + (gb - eb).powi(2) / eb;
    }
    Ok(chi_square_report("chi_square_two_sample", stat, groups.len() - 1, vec![a.len(), b.len()]))
}

/// Normal-approximation confidence interval for the mean.
pub fn mean_ci(dist: &EmpiricalDist, level: f64) -> Result<(f64, f64)> {
    if dist.len() < 2 {
        return Err(Error::InsufficientDimension("mean_ci needs at least 2 samples".into()));
    }
    let z = standard_normal_quantile(0.5 + level / 2.0);
    let (m, se) = (dist.mean(), dist.std_err());
    Ok((m - z * se, m + z * se))
}

/// `(mean(a) - mean(b)) / sqrt(se_a² + se_b²)`.
pub fn mean_difference_z(a: &EmpiricalDist, b: &EmpiricalDist) -> f64 {
    let se = (a.std_err().powi(2) + b.std_err().powi(2)).sqrt();
    let diff = a.mean() - b.mean();
    if se == 0.0 {
        if diff == 0.0 { 0.0 } else { diff.signum() * f64::INFINITY }
    } else {
        diff / se
    }
}

/// Sample Pearson correlation.
pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

pub fn standard_normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

pub fn standard_normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

pub fn exp1_cdf(x: f64) -> f64 {
    if x <= 0.0 { 0.0 } else { -(-x).exp_m1() }
}
