//! Iterated logarithms, modified and standard tetrations, `log*`, and the
//! conjugacy function `f`.
//!
//! Notation: `E_1(x) = e^{x-1}`, `L_1(x) = 1 + ln x`, `E_n`/`L_n` their
//! `n`-fold iterates and `Ẽ_n` the `n`-fold ordinary exponential. Values too
//! large for `f64` are carried as [`TowerReal`].

use std::cmp::Ordering;
use std::f64::consts::E;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Threshold above which `f(z)` is seeded by `z + 1`.
pub const F_SEED_CUT: f64 = 40.0;

/// Arguments above this are too large for `exp` in `f64`.
const EXP_MAX_ARG: f64 = 709.0;

/// Largest `f64` strictly below `e`.
const E_BELOW: f64 = 2.718_281_828_459_045 - f64::EPSILON;

/// `E_j(y)` in `f64`, saturating at `+inf`.
fn exp_chain(mut y: f64, j: u32) -> f64 {
    for _ in 0..j {
        if y - 1.0 > EXP_MAX_ARG {
            return f64::INFINITY;
        }
        y = modified_exp(y);
    }
    y
}

/// `E_1(x) = e^{x-1}`.
#[inline]
pub fn modified_exp(x: f64) -> f64 {
    (x - 1.0).exp()
}

/// `L_1(x) = 1 + ln x`.
#[inline]
pub fn modified_log(x: f64) -> f64 {
    1.0 + x.ln()
}

/// A real `v >= 1` stored as `E_level(residue)` with `residue` in `[1, e)`.
///
/// The level is the least `n` with `L_n(v) < e`, so that any level above zero
/// has `residue >= 2`. Values that fit in `f64` are also kept verbatim, so
/// integers survive a round trip.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "TowerParts", into = "TowerParts")]
pub struct TowerReal {
    level: u32,
    residue: f64,
    value: f64,
}

#[derive(Serialize, Deserialize)]
struct TowerParts {
    level: u32,
    residue: f64,
}

impl From<TowerParts> for TowerReal {
    fn from(p: TowerParts) -> Self {
        TowerReal::normalized(p.level, p.residue.max(1.0))
    }
}

impl From<TowerReal> for TowerParts {
    fn from(t: TowerReal) -> Self {
        TowerParts { level: t.level, residue: t.residue }
    }
}

impl TowerReal {
    pub const ONE: TowerReal = TowerReal { level: 0, residue: 1.0, value: 1.0 };

    /// Builds `E_level(y)` and normalizes it. Requires `y >= 1` and finite.
    pub fn new(level: u32, y: f64) -> Result<Self> {
        if !(y >= 1.0) || !y.is_finite() {
            return domain(format!("tower residue must be finite and >= 1, got {y}"));
        }
        Ok(Self::normalized(level, y))
    }

    pub fn from_f64(v: f64) -> Result<Self> {
        if !(v >= 1.0) || !v.is_finite() {
            return domain(format!("tower value must be finite and >= 1, got {v}"));
        }
        let mut t = Self::normalized(0, v);
        t.value = v;
        Ok(t)
    }

    fn normalized(mut level: u32, mut y: f64) -> Self {
        let direct = if level == 0 { Some(y) } else { None };
        while y >= E {
            y = modified_log(y);
            level += 1;
        }
        while level > 0 && y < 2.0 {
            y = modified_exp(y);
            level -= 1;
        }
        let residue = y.clamp(1.0, E_BELOW);
        let value = direct.unwrap_or_else(|| exp_chain(residue, level));
        TowerReal { level, residue, value }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn residue(&self) -> f64 {
        self.residue
    }

    /// The represented value, or `+inf` if it exceeds `f64`.
    pub fn to_f64(&self) -> f64 {
        self.value
    }

    /// `E_j(residue)` as `f64`, saturating at `+inf`.
    fn apply_exp(&self, j: u32) -> f64 {
        if j == self.level {
            return self.value;
        }
        exp_chain(self.residue, j)
    }

    pub fn is_finite_f64(&self) -> bool {
        self.value.is_finite()
    }

    /// `L_n(v)`; negative `n` applies `E_{|n|}`.
    pub fn iterlog(&self, n: i64) -> TowerReal {
        if n < 0 {
            let up = u32::try_from(n.unsigned_abs()).unwrap_or(u32::MAX);
            if self.value.is_finite() && up <= 8 {
                let mut y = self.value;
                for _ in 0..up {
                    y = modified_exp(y);
                }
                if y.is_finite() {
                    return TowerReal::from_f64(y).expect("E_n maps [1, inf) into itself");
                }
            }
            return Self::normalized(self.level.saturating_add(up), self.residue);
        }
        if self.value.is_finite() {
            let mut y = self.value;
            for _ in 0..n {
                if y == 1.0 {
                    break;
                }
                y = modified_log(y);
            }
            return TowerReal::from_f64(y.max(1.0)).expect("L_n maps [1, inf) into itself");
        }
        let n = n as u64;
        if n <= self.level as u64 {
            return Self::normalized(self.level - n as u32, self.residue);
        }
        let mut y = self.residue;
        for _ in 0..(n - self.level as u64) {
            y = modified_log(y);
        }
        Self::normalized(0, y)
    }

    /// `L_n(v)` as `f64` (`+inf` if it does not fit).
    pub fn iterlog_f64(&self, n: i64) -> f64 {
        self.iterlog(n).to_f64()
    }

    /// `v + d`, or `None` if the result would drop below 1.
    pub fn offset(&self, d: f64) -> Option<TowerReal> {
        if self.value.is_finite() {
            return TowerReal::from_f64(self.value + d).ok();
        }
        self.propagate(self.level, d)
    }

    /// `v * (1 + eps)`, or `None` if the result would drop below 1.
    pub fn offset_ratio(&self, eps: f64) -> Option<TowerReal> {
        if eps <= -1.0 {
            return None;
        }
        if self.value.is_finite() {
            return TowerReal::from_f64(self.value * (1.0 + eps)).ok();
        }
        self.propagate(self.level - 1, eps.ln_1p())
    }

    /// Adds `d` to the level-`j` intermediate `E_j(residue)` and rebuilds.
    fn propagate(&self, mut j: u32, mut d: f64) -> Option<TowerReal> {
        while j > 0 && d != 0.0 {
            let c = self.apply_exp(j);
            if !c.is_finite() {
                d = 0.0;
                break;
            }
            let ratio = d / c;
            if ratio <= -1.0 {
                return None;
            }
            d = ratio.ln_1p();
            j -= 1;
        }
        let y = self.residue + d;
        if !(y >= 1.0) {
            return None;
        }
        Some(Self::normalized(self.level, y))
    }

    /// Natural logarithm.
    pub fn ln(&self) -> Magnitude {
        if self.value.is_finite() {
            return Magnitude::Real(self.value.ln());
        }
        // ln E_k(r) = E_{k-1}(r) - 1
        let below = TowerReal::normalized(self.level - 1, self.residue);
        let inner = below.to_f64();
        if inner.is_finite() {
            return Magnitude::Real(inner - 1.0);
        }
        Magnitude::Tower(below.offset(-1.0).unwrap_or(below))
    }
}

impl PartialOrd for TowerReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Eq for TowerReal {}

impl Ord for TowerReal {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.value.is_finite(), other.value.is_finite()) {
            (true, true) => self.value.total_cmp(&other.value),
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            (false, false) => self
                .level
                .cmp(&other.level)
                .then(self.residue.total_cmp(&other.residue)),
        }
    }
}

impl fmt::Display for TowerReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.to_f64();
        if v.is_finite() {
            write!(f, "{v}")
        } else {
            write!(f, "E({},{})", self.level, self.residue)
        }
    }
}

/// A nonnegative real that may be below 1 or tower-sized.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Magnitude {
    Real(f64),
    Tower(TowerReal),
}

impl Magnitude {
    pub fn to_f64(&self) -> f64 {
        match self {
            Magnitude::Real(x) => *x,
            Magnitude::Tower(t) => t.to_f64(),
        }
    }

    /// Tower form for values `>= 1`.
    pub fn to_tower(&self) -> Option<TowerReal> {
        match self {
            Magnitude::Real(x) => TowerReal::from_f64(*x).ok(),
            Magnitude::Tower(t) => Some(*t),
        }
    }
}

/// `E_n(rho)` in tower form.
pub fn modified_tetration(n: u32, rho: f64) -> Result<TowerReal> {
    TowerReal::new(n, rho)
}

/// `L_n(v)` for `v >= 1`; negative `n` gives `E_{|n|}`.
pub fn modified_iterlog(n: i64, v: TowerReal) -> TowerReal {
    v.iterlog(n)
}

/// `L_n(x)` for a plain real `x >= 1`.
pub fn modified_iterlog_f64(n: u32, x: f64) -> Result<f64> {
    if !(x >= 1.0) {
        return domain(format!("L_n requires x >= 1, got {x}"));
    }
    let mut y = x;
    for _ in 0..n {
        y = modified_log(y);
    }
    Ok(y)
}

/// `f_n(z) = L_n(Ẽ_n(z))`; `n = None` gives the limit `f(z)`.
fn conjugacy_partial(n: Option<u32>, z: f64) -> f64 {
    let mut zs = Vec::with_capacity(8);
    let mut cur = z;
    let mut remaining = n;
    loop {
        match remaining {
            Some(0) => break,
            Some(1) => {
                cur += 1.0;
                break;
            }
            _ if cur >= F_SEED_CUT => {
                cur += 1.0;
                break;
            }
            _ => {}
        }
        zs.push(cur);
        cur = cur.exp();
        remaining = remaining.map(|m| m - 1);
    }
    for _ in zs.iter().rev() {
        cur = modified_log(cur);
    }
    cur
}

/// Partial iterate `f_n(z) = L_n(Ẽ_n(z))`.
pub fn conjugacy_f_partial(n: u32, z: f64) -> f64 {
    conjugacy_partial(Some(n), z)
}

/// The conjugacy function `f = lim f_n`, solving `f(z) = 1 + ln f(e^z)`.
///
/// Accepts `f64::NEG_INFINITY`, for which the result is `1 + ln f(0)`.
pub fn conjugacy_f(z: f64) -> f64 {
    if z == f64::NEG_INFINITY {
        return modified_log(conjugacy_partial(None, 0.0));
    }
    conjugacy_partial(None, z)
}

/// `f(-inf)`.
pub fn conjugacy_f_minus_infinity() -> f64 {
    conjugacy_f(f64::NEG_INFINITY)
}

/// `Ẽ_n(rho)`, the `n`-fold exponential.
pub fn standard_tetration(n: u32, rho: f64) -> Magnitude {
    match n {
        0 => Magnitude::Real(rho),
        1 => {
            let v = rho.exp();
            if v.is_finite() {
                Magnitude::Real(v)
            } else {
                // e^rho = E_1(1 + rho)
                Magnitude::Tower(TowerReal::normalized(1, 1.0 + rho))
            }
        }
        _ => {
            // Ẽ_n = E_n ∘ f_n, and f_n >= 1 for n >= 2
            let t = TowerReal::normalized(n, conjugacy_f_partial(n, rho).max(1.0));
            let v = t.to_f64();
            if v.is_finite() {
                Magnitude::Real(v)
            } else {
                Magnitude::Tower(t)
            }
        }
    }
}

/// Knuth's `e↑↑j` (`e↑↑0 = 1`).
pub fn up_arrow_e(j: u32) -> Magnitude {
    standard_tetration(j, 1.0)
}

fn log_star_std(mut x: f64) -> u32 {
    let mut count = 0;
    while x >= 1.0 {
        x = x.ln();
        count += 1;
    }
    count
}

/// Cutoff `x0 = e^{max(2θ, 1)} + 1` of the θ-iterated logarithm.
pub fn theta_log_star_cutoff(theta: f64) -> f64 {
    (2.0 * theta).max(1.0).exp() + 1.0
}

/// `log*`: zero on `[0, 1)` and `1 + log*(ln x)` above. For `theta != 1`
/// the θ-variant with cutoff [`theta_log_star_cutoff`] and step `θ ln x`.
pub fn log_star(x: f64, theta: f64) -> Result<u32> {
    if !(x >= 0.0) {
        return domain(format!("log* requires x >= 0, got {x}"));
    }
    if !(theta > 0.0) || !theta.is_finite() {
        return domain(format!("theta must be positive, got {theta}"));
    }
    if theta == 1.0 {
        return Ok(log_star_std(x));
    }
    let x0 = theta_log_star_cutoff(theta);
    let mut count = 0;
    let mut y = x;
    while y >= x0 {
        y = theta * y.ln();
        count += 1;
    }
    Ok(count)
}

/// `log*` of a tower-sized value (θ = 1).
pub fn log_star_tower(v: TowerReal) -> u32 {
    let mut count = 0;
    let mut cur = Magnitude::Tower(v);
    loop {
        match cur {
            Magnitude::Real(x) => return count + log_star_std(x),
            Magnitude::Tower(t) => {
                let x = t.to_f64();
                if x.is_finite() {
                    return count + log_star_std(x);
                }
                cur = t.ln();
                count += 1;
            }
        }
    }
}

/// Mean and variance of the record count `K(⌊v⌋)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicMoments {
    /// `H_m`.
    pub mean: Magnitude,
    /// `H_m - H_m^{(2)}`.
    pub variance: Magnitude,
}

const HARMONIC_DIRECT_MAX: u64 = 256;

fn harmonic_direct(m: u64) -> (f64, f64) {
    let mut h = 0.0;
    let mut h2 = 0.0;
    for i in (1..=m).rev() {
        let x = 1.0 / i as f64;
        h += x;
        h2 += x * x;
    }
    (h, h2)
}

fn harmonic_asymptotic(m: f64) -> (f64, f64) {
    let r = 1.0 / m;
    let r2 = r * r;
    let h = m.ln() + EULER_GAMMA + 0.5 * r - r2 / 12.0 + r2 * r2 / 120.0 - r2 * r2 * r2 / 252.0;
    let h2 = std::f64::consts::PI.powi(2) / 6.0 - r + 0.5 * r2 - r2 * r / 6.0
        + r2 * r2 * r / 30.0
        - r2 * r2 * r2 * r / 42.0;
    (h, h2)
}

/// `H_m` and `H_m^{(2)}` for `m = ⌊v⌋` as plain reals.
pub fn harmonic_pair(m: u64) -> (f64, f64) {
    if m <= HARMONIC_DIRECT_MAX {
        harmonic_direct(m)
    } else {
        harmonic_asymptotic(m as f64)
    }
}

/// Moments of `K(⌊v⌋)`: `H_m` and `H_m - H_m^{(2)}`.
pub fn tower_harmonic(v: TowerReal) -> HarmonicMoments {
    let x = v.to_f64();
    if x.is_finite() {
        let (h, h2) = if x < 9.0e15 {
            harmonic_pair(x.floor() as u64)
        } else {
            harmonic_asymptotic(x)
        };
        return HarmonicMoments {
            mean: Magnitude::Real(h),
            variance: Magnitude::Real((h - h2).max(0.0)),
        };
    }
    let zeta2 = std::f64::consts::PI.powi(2) / 6.0;
    match v.ln() {
        Magnitude::Real(l) => HarmonicMoments {
            mean: Magnitude::Real(l + EULER_GAMMA),
            variance: Magnitude::Real(l + EULER_GAMMA - zeta2),
        },
        Magnitude::Tower(t) => HarmonicMoments {
            mean: Magnitude::Tower(t.offset(EULER_GAMMA).unwrap_or(t)),
            variance: Magnitude::Tower(t.offset(EULER_GAMMA - zeta2).unwrap_or(t)),
        },
    }
}

/// θ-modified exponential iterate: `E^θ_n = exp((E^θ_{n-1} - 1)/θ)`.
pub fn theta_modified_exp(n: u32, rho: f64, theta: f64) -> f64 {
    let mut y = rho;
    for _ in 0..n {
        y = ((y - 1.0) / theta).exp();
    }
    y
}

/// θ-modified logarithm iterate: `L^θ_n = 1 + θ ln L^θ_{n-1}`.
pub fn theta_modified_log(n: u32, x: f64, theta: f64) -> f64 {
    let mut y = x;
    for _ in 0..n {
        y = 1.0 + theta * y.ln();
    }
    y
}

/// θ-standard exponential iterate: `Ẽ^θ_n = exp(Ẽ^θ_{n-1}/θ)`.
pub fn theta_standard_exp(n: u32, rho: f64, theta: f64) -> f64 {
    let mut y = rho;
    for _ in 0..n {
        y = (y / theta).exp();
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn log_star_examples() {
        assert_eq!(log_star(0.5, 1.0).unwrap(), 0);
        assert_eq!(log_star(1.0, 1.0).unwrap(), 1);
        assert_eq!(log_star(16.0, 1.0).unwrap(), 3);
        assert_eq!(log_star(15.0, 1.0).unwrap(), 2);
        assert!(log_star(-1.0, 1.0).is_err());
    }

    #[test]
    fn theta_log_star_uses_cutoff() {
        let x0 = theta_log_star_cutoff(2.0);
        assert_abs_diff_eq!(x0, 4f64.exp() + 1.0);
        assert_eq!(log_star(x0 - 1e-9, 2.0).unwrap(), 0);
        assert_eq!(log_star(x0, 2.0).unwrap(), 1);
    }

    #[test]
    fn modified_tetration_examples() {
        assert_eq!(modified_tetration(3, 1.0).unwrap().to_f64(), 1.0);
        assert_abs_diff_eq!(modified_tetration(1, 2.0).unwrap().to_f64(), E, epsilon = 1e-12);
        assert_abs_diff_eq!(
            modified_tetration(2, 2.0).unwrap().to_f64(),
            (E - 1.0).exp(),
            epsilon = 1e-12
        );
        assert!(modified_tetration(2, 0.5).is_err());
    }

    #[test]
    fn iterlog_examples() {
        let e = TowerReal::from_f64(E).unwrap();
        assert_abs_diff_eq!(e.iterlog_f64(1), 2.0, epsilon = 1e-12);
        let e23 = modified_tetration(2, 3.0).unwrap();
        assert_abs_diff_eq!(e23.iterlog_f64(2), 3.0, epsilon = 1e-12);
        let e22 = modified_tetration(2, 2.0).unwrap();
        assert_abs_diff_eq!(e22.iterlog_f64(1), E, epsilon = 1e-12);
    }

    #[test]
    fn canonical_form() {
        let t = TowerReal::from_f64(1e300).unwrap();
        assert!(t.level() >= 1 && t.residue() >= 2.0 && t.residue() < E);
        assert_eq!(TowerReal::from_f64(2.5).unwrap().level(), 0);
        assert_eq!(TowerReal::from_f64(E).unwrap().level(), 1);
    }

    #[test]
    fn standard_tetration_examples() {
        assert_eq!(standard_tetration(0, 0.7), Magnitude::Real(0.7));
        assert_abs_diff_eq!(standard_tetration(2, 0.0).to_f64(), E, epsilon = 1e-12);
        assert_abs_diff_eq!(standard_tetration(3, 1.0).to_f64(), 3_814_279.104_760_2, epsilon = 1e-3);
        assert_abs_diff_eq!(standard_tetration(3, 0.0).to_f64(), E.exp(), epsilon = 1e-9);
        let big = standard_tetration(5, 0.5);
        assert!(matches!(big, Magnitude::Tower(_)));
        assert_eq!(log_star_tower(big.to_tower().unwrap()), 5);
    }

    #[test]
    fn up_arrow_breakpoints_match_log_star() {
        for j in 1..4 {
            let b = up_arrow_e(j).to_f64();
            assert_eq!(log_star(b * (1.0 + 1e-12), 1.0).unwrap(), j + 1);
            assert_eq!(log_star(b * (1.0 - 1e-12), 1.0).unwrap(), j);
        }
    }

    #[test]
    fn f_minus_infinity_constant() {
        assert_abs_diff_eq!(conjugacy_f_minus_infinity(), 1.613_019_892_345_134_5, epsilon = 1e-12);
        assert_eq!(conjugacy_f_minus_infinity(), modified_log(conjugacy_f(0.0)));
    }

    #[test]
    fn f_large_argument() {
        assert_abs_diff_eq!(conjugacy_f(50.0), 51.0, epsilon = 1e-12);
    }

    #[test]
    fn f_functional_equation() {
        let mut z = -6.0;
        while z <= 4.0 {
            let r = conjugacy_f(z) - modified_log(conjugacy_f(z.exp()));
            assert!(r.abs() <= 1e-12, "z={z} residual={r}");
            z += 0.01;
        }
    }

    #[test]
    fn harmonic_examples() {
        let h = |v: f64| tower_harmonic(TowerReal::from_f64(v).unwrap());
        assert_eq!(h(1.0).mean.to_f64(), 1.0);
        assert_eq!(h(1.0).variance.to_f64(), 0.0);
        assert_abs_diff_eq!(h(4.0).mean.to_f64(), 25.0 / 12.0, epsilon = 1e-14);
        assert_abs_diff_eq!(h(1e6).mean.to_f64(), 1e6f64.ln() + EULER_GAMMA, epsilon = 1e-6);
        // asymptotic branch against the direct sum just above the switch
        let (a, a2) = harmonic_asymptotic(300.0);
        let (d, d2) = harmonic_direct(300);
        assert_abs_diff_eq!(a, d, epsilon = 1e-13);
        assert_abs_diff_eq!(a2, d2, epsilon = 1e-13);
        let huge = tower_harmonic(modified_tetration(6, 2.0).unwrap());
        assert!(matches!(huge.mean, Magnitude::Tower(_)));
    }

    #[test]
    fn offset_small_and_tower() {
        let t = TowerReal::from_f64(10.0).unwrap();
        assert_abs_diff_eq!(t.offset(2.5).unwrap().to_f64(), 12.5, epsilon = 1e-9);
        assert!(t.offset(-9.5).is_none());
        let big = modified_tetration(5, 2.0).unwrap();
        assert_eq!(big.offset(1e6).unwrap(), big);
        assert_abs_diff_eq!(t.offset_ratio(0.1).unwrap().to_f64(), 11.0, epsilon = 1e-9);
    }

    #[test]
    fn tower_ln() {
        let t = TowerReal::from_f64(1e100).unwrap();
        assert_abs_diff_eq!(t.ln().to_f64(), 100.0 * 10f64.ln(), epsilon = 1e-9);
        let big = modified_tetration(4, 3.0).unwrap();
        let l = big.ln().to_tower().unwrap();
        assert_eq!(l.level(), big.level() - 1);
    }

    #[test]
    fn theta_functions_reduce_at_one() {
        assert_abs_diff_eq!(theta_modified_exp(2, 2.0, 1.0), (E - 1.0).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(theta_modified_log(1, E, 1.0), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(theta_standard_exp(2, 0.0, 1.0), E, epsilon = 1e-12);
        assert_abs_diff_eq!(theta_modified_log(1, theta_modified_exp(1, 3.0, 2.0), 2.0), 3.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn round_trip(s in 1.0f64..50.0, n in 0u32..=8) {
            let t = modified_tetration(n, s).unwrap();
            prop_assert!((t.iterlog_f64(n as i64) - s).abs() <= 1e-10);
        }

        #[test]
        fn group_property(s in 1.0f64..50.0, n in 0i64..=8, m in 0u32..=8) {
            prop_assume!(n >= m as i64);
            let lhs = modified_tetration(m, s).unwrap().iterlog_f64(n);
            let rhs = modified_iterlog_f64((n - m as i64) as u32, s).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-10);
        }

        #[test]
        fn e_n_of_one(n in 0u32..1000) {
            prop_assert_eq!(modified_tetration(n, 1.0).unwrap().to_f64(), 1.0);
        }

        #[test]
        fn comparison_agrees_with_reals(a in 1.0f64..1e300, b in 1.0f64..1e300) {
            let (ta, tb) = (TowerReal::from_f64(a).unwrap(), TowerReal::from_f64(b).unwrap());
            prop_assert_eq!(ta.cmp(&tb), a.partial_cmp(&b).unwrap());
        }

        #[test]
        fn f_monotone(z1 in -8.0f64..6.0, dz in 1e-3f64..2.0) {
            prop_assert!(conjugacy_f(z1) < conjugacy_f(z1 + dz));
        }

        #[test]
        fn f_partial_bounds(z in -8.0f64..8.0, n in 2u32..10) {
            let v = conjugacy_f_partial(n, z);
            prop_assert!(v >= 1f64.max(z) - 1e-12);
            prop_assert!(v <= (E + z).max(E + 1.0) + 1e-12);
        }

        #[test]
        fn conjugation(z in -2.0f64..1.0, n in 0u32..=3) {
            let lhs = modified_tetration(n, conjugacy_f(z)).unwrap().to_f64();
            let inner = standard_tetration(n, z).to_f64();
            let rhs = conjugacy_f(inner);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.max(1.0), "{} vs {}", lhs, rhs);
        }

        #[test]
        fn log_star_brute_force(x in 0.0f64..1e6) {
            let mut y = x;
            let mut c = 0;
            while y >= 1.0 { y = y.ln(); c += 1; }
            prop_assert_eq!(log_star(x, 1.0).unwrap(), c);
        }
    }
}
