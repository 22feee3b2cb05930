//! CSV writers for the estimator outputs.
//!
//! Comma separated, `.` decimal point, LF line endings and shortest
//! round-trip float formatting, so equal inputs give byte-identical files.

use std::fmt::Write;

use crate::limits::{LimitEstimate, SpacingsEstimate};
use crate::numerics::conjugacy_f;

/// `rho,k,pmf,mc_sigma` rows for one or more `T*` estimates.
pub fn t_star_pmf_csv(estimates: &[LimitEstimate]) -> String {
    let mut out = String::from("rho,k,pmf,mc_sigma\n");
    for e in estimates {
        let rho = e.parameters.get("rho").copied().unwrap_or(f64::NAN);
        for r in &e.rows {
            writeln!(out, "{},{},{},{}", rho, r.x as i64, r.value, r.mc_sigma).unwrap();
        }
    }
    out
}

/// `k,x,cdf` rows for one or more `S*_k` CDF estimates.
pub fn s_star_cdf_csv(estimates: &[LimitEstimate]) -> String {
    let mut out = String::from("k,x,cdf\n");
    for e in estimates {
        let k = e.parameters.get("k").copied().unwrap_or(f64::NAN) as i64;
        for r in &e.rows {
            writeln!(out, "{},{},{}", k, r.x, r.value).unwrap();
        }
    }
    out
}

/// Grid `zmin, zmin + step, ...` up to `zmax` (inclusive up to rounding).
pub fn grid(min: f64, max: f64, step: f64) -> Vec<f64> {
    let n = ((max - min) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| min + i as f64 * step).collect()
}

/// `z,f` rows of the conjugacy function.
pub fn f_curve_csv(zs: &[f64]) -> String {
    let mut out = String::from("z,f\n");
    for &z in zs {
        writeln!(out, "{},{}", z, conjugacy_f(z)).unwrap();
    }
    out
}

/// `rho,n_level,k,pmf,mc_sigma` rows for shift-statistic PMFs.
pub fn shift_pmf_csv(estimates: &[LimitEstimate]) -> String {
    let mut out = String::from("rho,n_level,k,pmf,mc_sigma\n");
    for e in estimates {
        let rho = e.parameters.get("rho").copied().unwrap_or(f64::NAN);
        let n = e.parameters.get("n_level").copied().unwrap_or(f64::NAN) as i64;
        for r in &e.rows {
            writeln!(out, "{},{},{},{},{}", rho, n, r.x as i64, r.value, r.mc_sigma).unwrap();
        }
    }
    out
}

/// `rho,count,pmf,mc_sigma` rows for `N*` estimates.
pub fn n_star_csv(estimates: &[LimitEstimate]) -> String {
    let mut out = String::from("rho,count,pmf,mc_sigma\n");
    for e in estimates {
        let rho = e.parameters.get("rho").copied().unwrap_or(f64::NAN);
        for r in &e.rows {
            writeln!(out, "{},{},{},{}", rho, r.x as i64, r.value, r.mc_sigma).unwrap();
        }
    }
    out
}

/// `sample,k,index,spacing` rows, `index` counting from `k + 1`.
pub fn spacings_csv(est: &SpacingsEstimate) -> String {
    let mut out = String::from("sample,k,index,spacing\n");
    for (s, row) in est.spacings.iter().enumerate() {
        for (i, d) in row.iter().enumerate() {
            writeln!(out, "{},{},{},{}", s, est.k, est.k + 1 + i as u64, d).unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_curve_header_and_rows() {
        let csv = f_curve_csv(&grid(-1.0, 1.0, 0.5));
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "z,f");
        assert_eq!(lines.len(), 6);
        assert!(lines[1].starts_with("-1,"));
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn grid_includes_endpoint() {
        let g = grid(-6.0, 4.0, 0.05);
        assert_eq!(g.len(), 201);
        assert!((g[200] - 4.0).abs() < 1e-9);
    }
}
