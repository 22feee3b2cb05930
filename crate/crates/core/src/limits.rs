//! Monte Carlo estimators of the limit objects.
//!
//! The limit point process `1 = S*_1 <= S*_2 <= ...` is sampled by backward
//! iteration: `η_j^{(n)} = ν^{(n)}(η_j^{(n-1)})`, `η_j^{(0)} = j`, with one
//! record-time sequence `ν^{(n)}` per level shared by all coordinates, and
//! `X_{n,j} = L_n(η_j^{(n)}) → S*_j`. Coordinates can be requested at any
//! sorted index set, so sparse queries such as `{200, 201}` do not require
//! the coordinates below them.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::election::{run_election_tower, ElectionConfig};
use crate::error::{domain, Error, Result};
use crate::numerics::{conjugacy_f, modified_log, modified_tetration, TowerReal};
use crate::records::{count_records, RecordIndex, RecordSamplerConfig, RecordTimeProcess};
use crate::stats::{chi_square_two_sample, ks_two_sample, EmpiricalDist, TestReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitKind {
    SStarCdf,
    TStarPmf,
    T0StarPmf,
    TShiftPmf,
    X1Shift,
    NStar,
    Spacings,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub x: f64,
    pub value: f64,
    pub mc_sigma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitEstimate {
    pub kind: LimitKind,
    pub parameters: BTreeMap<String, f64>,
    pub rows: Vec<EstimateRow>,
    pub dist: EmpiricalDist,
    pub n_samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn params(p: Vec<(&str, f64)>) -> BTreeMap<String, f64> {
    p.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

impl LimitEstimate {
    /// PMF over the observed integer values.
    pub fn pmf(kind: LimitKind, parameters: Vec<(&str, f64)>, samples: Vec<i64>) -> Self {
        let dist = EmpiricalDist::from_integers(samples);
        let n = dist.len() as f64;
        let rows = dist
            .integer_counts()
            .into_iter()
            .map(|(k, c)| {
                let p = c as f64 / n;
                EstimateRow { x: k as f64, value: p, mc_sigma: (p * (1.0 - p) / n).sqrt() }
            })
            .collect();
        LimitEstimate { kind, parameters: params(parameters), rows, n_samples: dist.len(), dist, seed: None }
    }

    /// Empirical CDF on `grid`.
    pub fn cdf(kind: LimitKind, parameters: Vec<(&str, f64)>, dist: EmpiricalDist, grid: &[f64]) -> Self {
        let rows = grid
            .iter()
            .map(|&x| EstimateRow { x, value: dist.cdf(x), mc_sigma: dist.cdf_sigma(x) })
            .collect();
        LimitEstimate { kind, parameters: params(parameters), rows, n_samples: dist.len(), dist, seed: None }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn total(&self) -> f64 {
        self.rows.iter().map(|r| r.value).sum()
    }

    /// Estimated value in the row at `x`, zero if absent.
    pub fn value_at(&self, x: f64) -> f64 {
        self.rows.iter().find(|r| r.x == x).map_or(0.0, |r| r.value)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackwardIterConfig {
    /// Stop once every coordinate moved by less than this in one level.
    pub tol: f64,
    pub max_levels: u32,
    /// Record times up to this argument are sampled exactly.
    pub exact_record_time_threshold: u64,
    pub keep_trajectory: bool,
}

impl Default for BackwardIterConfig {
    fn default() -> Self {
        BackwardIterConfig {
            tol: 1e-9,
            max_levels: 60,
            exact_record_time_threshold: RecordSamplerConfig::default().exact_record_time_threshold,
            keep_trajectory: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackwardIterSample {
    pub indices: Vec<u64>,
    /// `X_{n,j}` at the final level, one per index.
    pub coords: Vec<f64>,
    pub levels_used: u32,
    pub converged: Vec<bool>,
    /// `trajectory[n - 1][i]` is `X_{n, indices[i]}`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Vec<Vec<f64>>>,
}

impl BackwardIterSample {
    pub fn coord(&self, j: u64) -> Option<f64> {
        self.indices.binary_search(&j).ok().map(|i| self.coords[i])
    }

    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }
}

/// Runs the backward iteration for the given strictly increasing indices.
///
/// A coordinate is frozen once its record time can no longer be tracked;
/// the remaining change is then far below `tol`.
pub fn sample_s_star_at<R: Rng + ?Sized>(
    indices: &[u64],
    cfg: &BackwardIterConfig,
    rng: &mut R,
) -> Result<BackwardIterSample> {
    if indices.is_empty() || indices[0] == 0 || !indices.windows(2).all(|w| w[0] < w[1]) {
        return domain("indices must be strictly increasing and positive");
    }
    if !(cfg.tol > 0.0) || cfg.max_levels == 0 {
        return domain("tolerance and level cap must be positive");
    }
    let m = indices.len();
    let mut eta: Vec<RecordIndex> = indices.iter().map(|&j| RecordIndex::Exact(j)).collect();
    let mut x: Vec<f64> = indices.iter().map(|&j| j as f64).collect();
    let mut frozen = vec![false; m];
    let mut small = vec![false; m];
    for (i, &j) in indices.iter().enumerate() {
        if j == 1 {
            frozen[i] = true;
            small[i] = true;
        }
    }
    let mut trajectory = cfg.keep_trajectory.then(Vec::new);
    let mut levels_used = 0;
    for n in 1..=cfg.max_levels {
        let mut env = RecordTimeProcess::new(cfg.exact_record_time_threshold);
        for i in 0..m {
            if frozen[i] {
                continue;
            }
            match env.at(eta[i], rng) {
                Some(v) => {
                    eta[i] = v;
                    let next = v.iterlog(n);
                    small[i] = (next - x[i]).abs() < cfg.tol;
                    x[i] = next;
                }
                None => {
                    frozen[i] = true;
                    small[i] = true;
                }
            }
        }
        levels_used = n;
        if let Some(t) = trajectory.as_mut() {
            t.push(x.clone());
        }
        if small.iter().all(|&s| s) {
            break;
        }
    }
    Ok(BackwardIterSample { indices: indices.to_vec(), coords: x, levels_used, converged: small, trajectory })
}

/// `(S*_1, ..., S*_J)` by backward iteration.
pub fn sample_s_star<R: Rng + ?Sized>(j: usize, cfg: &BackwardIterConfig, rng: &mut R) -> Result<BackwardIterSample> {
    if j < 2 {
        return domain(format!("need J >= 2, got {j}"));
    }
    let idx: Vec<u64> = (1..=j as u64).collect();
    sample_s_star_at(&idx, cfg, rng)
}

/// Independent draws of `S*_k`.
pub fn s_star_samples<R: Rng + ?Sized>(k: u64, n_samples: usize, cfg: &BackwardIterConfig, rng: &mut R) -> Result<Vec<f64>> {
    (0..n_samples).map(|_| sample_s_star_at(&[k], cfg, rng).map(|s| s.coords[0])).collect()
}

/// Empirical CDF of `S*_k` on `grid`.
pub fn estimate_s_star_cdf<R: Rng + ?Sized>(k: u64, grid: &[f64], n_samples: usize, rng: &mut R) -> Result<LimitEstimate> {
    if k < 2 {
        return domain("S*_k CDF needs k >= 2");
    }
    let samples = s_star_samples(k, n_samples, &BackwardIterConfig::default(), rng)?;
    Ok(LimitEstimate::cdf(LimitKind::SStarCdf, vec![("k", k as f64)], EmpiricalDist::new(samples)?, grid))
}

/// `L_k(ρ)` for any integer `k` as `f64` (`+inf` when too large).
pub fn iterlog_signed(k: i64, rho: f64) -> Result<f64> {
    Ok(TowerReal::from_f64(rho)?.iterlog_f64(k))
}

/// `T*(ρ) = min{k : S*_2 > L_k(ρ)}` for one realization of `S*_2`.
pub fn t_star_from_s2(rho: f64, s2: f64) -> Result<i64> {
    if !(rho > 1.0) {
        return domain(format!("T*(rho) needs rho > 1, got {rho}"));
    }
    if !(s2 > 1.0) {
        return domain(format!("S*_2 sample must exceed 1, got {s2}"));
    }
    let t = TowerReal::from_f64(rho)?;
    let mut k: i64 = 0;
    if t.iterlog_f64(0) < s2 {
        while t.iterlog_f64(k - 1) < s2 {
            k -= 1;
        }
    } else {
        while t.iterlog_f64(k) >= s2 {
            k += 1;
            if k > 10_000_000 {
                return domain("T* search did not terminate");
            }
        }
    }
    Ok(k)
}

/// `P{T*(ρ) = k} = P{L_k(ρ) < S*_2 <= L_{k-1}(ρ)}` for `k` in `kmin..=kmax`.
pub fn t_star_pmf_from_s2(rho: f64, kmin: i64, kmax: i64, s2: &EmpiricalDist) -> Result<LimitEstimate> {
    if !(rho > 1.0) {
        return domain(format!("T*(rho) needs rho > 1, got {rho}"));
    }
    if kmin > kmax {
        return domain("empty k range");
    }
    let n = s2.len() as f64;
    let mut rows = Vec::new();
    for k in kmin..=kmax {
        let hi = iterlog_signed(k - 1, rho)?;
        let lo = iterlog_signed(k, rho)?;
        let p = s2.cdf(hi) - s2.cdf(lo);
        rows.push(EstimateRow { x: k as f64, value: p, mc_sigma: (p * (1.0 - p) / n).sqrt() });
    }
    Ok(LimitEstimate {
        kind: LimitKind::TStarPmf,
        parameters: params(vec![("rho", rho), ("kmin", kmin as f64), ("kmax", kmax as f64)]),
        rows,
        n_samples: s2.len(),
        dist: s2.clone(),
        seed: None,
    })
}

/// PMF of `T*(ρ)` from freshly sampled `S*_2`.
pub fn estimate_t_star_pmf<R: Rng + ?Sized>(rho: f64, kmin: i64, kmax: i64, n_samples: usize, rng: &mut R) -> Result<LimitEstimate> {
    if !(rho > 1.0) {
        return domain(format!("T*(rho) needs rho > 1, got {rho}"));
    }
    let s2 = EmpiricalDist::new(s_star_samples(2, n_samples, &BackwardIterConfig::default(), rng)?)?;
    t_star_pmf_from_s2(rho, kmin, kmax, &s2)
}

/// PMF of `T̃*(ρ) = T*(f(ρ))`.
pub fn estimate_t_tilde_star<R: Rng + ?Sized>(rho: f64, kmin: i64, kmax: i64, n_samples: usize, rng: &mut R) -> Result<LimitEstimate> {
    let mut est = estimate_t_star_pmf(conjugacy_f(rho), kmin, kmax, n_samples, rng)?;
    est.parameters.insert("rho_tilde".into(), rho);
    Ok(est)
}

/// `Σ_{n=nmin}^{nmax} P{T*(E_n(ρ)) = 0}` and its binomial standard error.
///
/// The sum telescopes to `P{L_{-nmin}(ρ) < S*_2 <= E_{nmax+1}(ρ)}`.
pub fn p0_star_window_sum(rho: f64, nmin: i64, nmax: i64, s2: &EmpiricalDist) -> Result<(f64, f64)> {
    let lo = iterlog_signed(-nmin, rho)?;
    let hi = iterlog_signed(-(nmax + 1), rho)?;
    let p = s2.cdf(hi) - s2.cdf(lo);
    Ok((p, (p * (1.0 - p) / s2.len() as f64).sqrt()))
}

/// Election starting population `⌊E_n(ρ)⌋`.
pub fn modified_tetration_population(n: u32, rho: f64) -> Result<TowerReal> {
    let t = modified_tetration(n, rho)?;
    let v = t.to_f64();
    if v.is_finite() {
        TowerReal::from_f64(v.floor())
    } else {
        Ok(t)
    }
}

/// Samples of `(T - n, T0 - n)` for elections started at `⌊E_n(ρ)⌋`.
pub fn election_shift_samples<R: Rng + ?Sized>(
    population: TowerReal,
    n_level: u32,
    n_samples: usize,
    rng: &mut R,
) -> Result<Vec<(i64, i64)>> {
    let cfg = ElectionConfig { keep_labels: false, ..ElectionConfig::default() };
    (0..n_samples)
        .map(|_| {
            run_election_tower(population, &cfg, rng)
                .map(|t| (t.t as i64 - n_level as i64, t.t0 as i64 - n_level as i64))
        })
        .collect()
}

/// Empirical PMF of `T0(⌊E_n(ρ)⌋) - n`.
pub fn estimate_t0_star_pmf<R: Rng + ?Sized>(rho: f64, n_level: u32, n_samples: usize, rng: &mut R) -> Result<LimitEstimate> {
    let pop = modified_tetration_population(n_level, rho)?;
    let s = election_shift_samples(pop, n_level, n_samples, rng)?;
    Ok(LimitEstimate::pmf(
        LimitKind::T0StarPmf,
        vec![("rho", rho), ("n_level", n_level as f64)],
        s.into_iter().map(|(_, t0)| t0).collect(),
    ))
}

/// Empirical PMF of `T(⌊E_n(ρ)⌋) - n`.
pub fn estimate_t_shift_pmf<R: Rng + ?Sized>(rho: f64, n_level: u32, n_samples: usize, rng: &mut R) -> Result<LimitEstimate> {
    let pop = modified_tetration_population(n_level, rho)?;
    let s = election_shift_samples(pop, n_level, n_samples, rng)?;
    Ok(LimitEstimate::pmf(
        LimitKind::TShiftPmf,
        vec![("rho", rho), ("n_level", n_level as f64)],
        s.into_iter().map(|(t, _)| t).collect(),
    ))
}

/// Stabilization of the `T0`-shift law: chi-square of level `n` against `n - 1` and `n + 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilizationReport {
    pub n_level: u32,
    pub vs_lower: Option<TestReport>,
    pub vs_upper: TestReport,
}

pub fn t0_stabilization<R: Rng + ?Sized>(rho: f64, n_level: u32, n_samples: usize, rng: &mut R) -> Result<StabilizationReport> {
    let mid = estimate_t0_star_pmf(rho, n_level, n_samples, rng)?;
    let upper = estimate_t0_star_pmf(rho, n_level + 1, n_samples, rng)?;
    let vs_lower = if n_level > 0 {
        let lower = estimate_t0_star_pmf(rho, n_level - 1, n_samples, rng)?;
        Some(chi_square_two_sample(&mid.dist, &lower.dist)?)
    } else {
        None
    };
    Ok(StabilizationReport { n_level, vs_lower, vs_upper: chi_square_two_sample(&mid.dist, &upper.dist)? })
}

/// Consecutive spacings `S*_{k+i} - S*_{k+i-1}`, `i = 1..=m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpacingsEstimate {
    pub k: u64,
    pub m: u64,
    /// `spacings[s][i]` belongs to sample `s`.
    pub spacings: Vec<Vec<f64>>,
}

impl SpacingsEstimate {
    pub fn column(&self, i: usize) -> Vec<f64> {
        self.spacings.iter().map(|row| row[i]).collect()
    }
}

pub fn estimate_spacings<R: Rng + ?Sized>(k: u64, m: u64, n_samples: usize, rng: &mut R) -> Result<SpacingsEstimate> {
    if k < 2 || m < 1 {
        return domain("spacings need k >= 2 and m >= 1");
    }
    let idx: Vec<u64> = (k..=k + m).collect();
    let cfg = BackwardIterConfig::default();
    let spacings = (0..n_samples)
        .map(|_| sample_s_star_at(&idx, &cfg, rng).map(|s| s.coords.windows(2).map(|w| w[1] - w[0]).collect()))
        .collect::<Result<_>>()?;
    Ok(SpacingsEstimate { k, m, spacings })
}

/// Per-coordinate comparison of `ψ(S*)_j` against `S*_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiReport {
    pub j_max: usize,
    pub coordinates: Vec<(usize, TestReport)>,
}

/// `ψ(S*)_j = L_1(S*_{ν(j)})` for `j = 1..=m` with fresh record times.
///
/// `S*` is evaluated only at the indices `ν(1..=m)`, so no truncation of the
/// vector at `J` is involved; `J` bounds the checked coordinates.
pub fn psi_image_sample<R: Rng + ?Sized>(m: usize, cfg: &BackwardIterConfig, rng: &mut R) -> Result<Vec<f64>> {
    let mut env = RecordTimeProcess::new(cfg.exact_record_time_threshold);
    let mut nu = Vec::with_capacity(m);
    for j in 1..=m as u64 {
        match env.at(RecordIndex::Exact(j), rng) {
            Some(RecordIndex::Exact(v)) => nu.push(v),
            _ => return Err(Error::InsufficientDimension(format!("record time of {j} left the exact range"))),
        }
    }
    let s = sample_s_star_at(&nu, cfg, rng)?;
    Ok(s.coords.iter().map(|&x| modified_log(x)).collect())
}

pub fn check_fixed_point_psi<R: Rng + ?Sized>(j_max: usize, m: usize, n_samples: usize, rng: &mut R) -> Result<PsiReport> {
    if m < 1 || m > j_max {
        return Err(Error::InsufficientDimension(format!("cannot check {m} coordinates with J = {j_max}")));
    }
    if m as u64 > RecordSamplerConfig::default().exact_record_time_threshold {
        return Err(Error::InsufficientDimension(format!("m = {m} exceeds the exact record-time range")));
    }
    let cfg = BackwardIterConfig::default();
    let idx: Vec<u64> = (1..=m as u64).collect();
    let mut direct: Vec<Vec<f64>> = vec![Vec::with_capacity(n_samples); m];
    let mut image: Vec<Vec<f64>> = vec![Vec::with_capacity(n_samples); m];
    for _ in 0..n_samples {
        let s = sample_s_star_at(&idx, &cfg, rng)?;
        let p = psi_image_sample(m, &cfg, rng)?;
        for j in 0..m {
            direct[j].push(s.coords[j]);
            image[j].push(p[j]);
        }
    }
    let mut coordinates = Vec::new();
    for j in 0..m {
        let a = EmpiricalDist::new(std::mem::take(&mut image[j]))?;
        let b = EmpiricalDist::new(std::mem::take(&mut direct[j]))?;
        coordinates.push((j + 1, ks_two_sample(&a, &b)?));
    }
    Ok(PsiReport { j_max, coordinates })
}

/// `N*(ρ) = #{k : S*_k <= ρ}` on a grid, from one `S*` vector per sample.
pub fn n_star_samples<R: Rng + ?Sized>(rho_grid: &[f64], n_samples: usize, rng: &mut R) -> Result<Vec<Vec<u64>>> {
    if rho_grid.iter().any(|&r| !(r >= 1.0)) {
        return domain("N* grid must lie in [1, inf)");
    }
    let rho_max = rho_grid.iter().copied().fold(1.0, f64::max);
    let j = (3.0 * rho_max + 30.0).ceil() as usize;
    let cfg = BackwardIterConfig::default();
    (0..n_samples)
        .map(|_| {
            let s = sample_s_star(j, &cfg, rng)?;
            if s.coords[j - 1] <= rho_max {
                return Err(Error::InsufficientDimension(format!("S*_{j} <= {rho_max}; increase J")));
            }
            Ok(rho_grid.iter().map(|&r| s.coords.partition_point(|&x| x <= r) as u64).collect())
        })
        .collect()
}

/// PMF of `N*(ρ)` at each grid point.
pub fn estimate_n_star<R: Rng + ?Sized>(rho_grid: &[f64], n_samples: usize, rng: &mut R) -> Result<Vec<LimitEstimate>> {
    let s = n_star_samples(rho_grid, n_samples, rng)?;
    Ok(rho_grid
        .iter()
        .enumerate()
        .map(|(i, &rho)| LimitEstimate::pmf(LimitKind::NStar, vec![("rho", rho)], s.iter().map(|row| row[i] as i64).collect()))
        .collect())
}

/// Chi-square comparison of `K(N*(ρ))` (independent `K`) with `N*(1 + ln ρ)`.
pub fn check_n_star_fixed_point<R: Rng + ?Sized>(rho: f64, n_samples: usize, rng: &mut R) -> Result<TestReport> {
    let grid = [rho, modified_log(rho)];
    let s = n_star_samples(&grid, n_samples, rng)?;
    let cfg = RecordSamplerConfig::default();
    let lhs: Vec<i64> = s.iter().map(|row| count_records(row[0], &cfg, rng).map(|k| k as i64)).collect::<Result<_>>()?;
    let t = n_star_samples(&grid, n_samples, rng)?;
    let rhs: Vec<i64> = t.iter().map(|row| row[1] as i64).collect();
    chi_square_two_sample(&EmpiricalDist::from_integers(lhs), &EmpiricalDist::from_integers(rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn first_coordinate_is_one() {
        let mut rng = stream_rng(1, 0);
        for _ in 0..200 {
            let s = sample_s_star(5, &BackwardIterConfig { keep_trajectory: true, ..Default::default() }, &mut rng).unwrap();
            assert_eq!(s.coords[0], 1.0);
            assert!(s.coords.windows(2).all(|w| w[0] <= w[1]), "{:?}", s.coords);
            assert!(s.trajectory.unwrap().iter().all(|lvl| lvl[0] == 1.0));
        }
        assert!(sample_s_star(1, &BackwardIterConfig::default(), &mut rng).is_err());
    }

    #[test]
    fn t_star_from_s2_matches_intervals() {
        for &(rho, s2) in &[(2.0, 1.5), (2.0, 3.0), (2.0, 100.0), (4.0, 1.01)] {
            let k = t_star_from_s2(rho, s2).unwrap();
            assert!(iterlog_signed(k, rho).unwrap() < s2);
            assert!(iterlog_signed(k - 1, rho).unwrap() >= s2);
        }
        assert!(t_star_from_s2(1.0, 2.0).is_err());
    }

    #[test]
    fn window_sum_telescopes() {
        let s2 = EmpiricalDist::new(vec![1.1, 1.3, 2.0, 3.0, 7.0, 40.0]).unwrap();
        let est = t_star_pmf_from_s2(2.0, -6, 6, &s2).unwrap();
        let (sum, _) = p0_star_window_sum(2.0, -6, 6, &s2).unwrap();
        // P{T*(E_n ρ) = 0} = P{T*(ρ) = -n}
        assert!((est.total() - sum).abs() < 1e-12);
    }

    #[test]
    fn n_star_at_one() {
        let mut rng = stream_rng(2, 0);
        let s = n_star_samples(&[1.0, 4.0], 100, &mut rng).unwrap();
        assert!(s.iter().all(|row| row[0] == 1 && row[1] >= 1));
    }

    #[test]
    fn psi_first_coordinate() {
        let mut rng = stream_rng(3, 0);
        let p = psi_image_sample(3, &BackwardIterConfig::default(), &mut rng).unwrap();
        assert_eq!(p[0], 1.0);
        assert!(check_fixed_point_psi(2, 3, 10, &mut rng).is_err());
    }
}
