use record_election::export::grid;
use record_election::limits::{s_star_samples, t_star_pmf_from_s2, BackwardIterConfig};
use record_election::numerics::conjugacy_f;
use record_election::rng::par_streams;
use record_election::stats::EmpiricalDist;
use record_election::{Error, Result};
use wasm_bindgen::prelude::*;

/// Substreams used for sampling; matches the CLI default, so equal seeds give equal curves.
pub const STREAMS: usize = 8;

fn checked_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(max >= min) || (max - min) / step > 1e5 {
        return Err(Error::Domain(format!("invalid grid [{min}, {max}] with step {step}")));
    }
    Ok(grid(min, max, step))
}

fn s_star(k: u64, samples: usize, seed: u64) -> Result<EmpiricalDist> {
    if samples == 0 {
        return Err(Error::Domain("samples must be positive".into()));
    }
    let cfg = BackwardIterConfig::default();
    let chunks = par_streams(seed, STREAMS, samples, |rng, c| vec![s_star_samples(k, c, &cfg, rng)]);
    let mut out = Vec::with_capacity(samples);
    for c in chunks {
        out.extend(c?);
    }
    EmpiricalDist::new(out)
}

/// Flattened `[z0, f(z0), z1, f(z1), ...]` on the grid `zmin..=zmax`.
pub fn f_curve(zmin: f64, zmax: f64, step: f64) -> Result<Vec<f64>> {
    Ok(checked_grid(zmin, zmax, step)?.into_iter().flat_map(|z| [z, conjugacy_f(z)]).collect())
}

/// Flattened `[x, cdf_k1(x), cdf_k2(x), ...]` rows, one CDF column per entry of `ks`.
pub fn s_star_cdfs(ks: &[u32], xmin: f64, xmax: f64, step: f64, samples: usize, seed: u64) -> Result<Vec<f64>> {
    let xs = checked_grid(xmin, xmax, step)?;
    let mut dists = Vec::with_capacity(ks.len());
    for &k in ks {
        if k < 2 {
            return Err(Error::Domain(format!("S*_k CDF needs k >= 2, got {k}")));
        }
        dists.push(s_star(k as u64, samples, seed)?);
    }
    Ok(xs.iter().flat_map(|&x| std::iter::once(x).chain(dists.iter().map(move |d| d.cdf(x)))).collect())
}

/// Flattened `[k, pmf_rho1(k), pmf_rho2(k), ...]` rows for `k = kmin..=kmax`, all curves from one S*_2 sample.
pub fn t_star_pmfs(rhos: &[f64], kmin: i32, kmax: i32, samples: usize, seed: u64) -> Result<Vec<f64>> {
    if kmin > kmax {
        return Err(Error::Domain(format!("kmin {kmin} exceeds kmax {kmax}")));
    }
    let s2 = s_star(2, samples, seed)?;
    let curves = rhos
        .iter()
        .map(|&r| t_star_pmf_from_s2(r, kmin as i64, kmax as i64, &s2))
        .collect::<Result<Vec<_>>>()?;
    Ok((kmin..=kmax)
        .enumerate()
        .flat_map(|(i, k)| std::iter::once(k as f64).chain(curves.iter().map(move |c| c.rows[i].value)))
        .collect())
}

fn js<T>(r: Result<T>) -> std::result::Result<T, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = fCurve)]
pub fn f_curve_js(zmin: f64, zmax: f64, step: f64) -> std::result::Result<Vec<f64>, JsError> {
    js(f_curve(zmin, zmax, step))
}

#[wasm_bindgen(js_name = sStarCdfs)]
pub fn s_star_cdfs_js(
    ks: Vec<u32>,
    xmin: f64,
    xmax: f64,
    step: f64,
    samples: usize,
    seed: u32,
) -> std::result::Result<Vec<f64>, JsError> {
    js(s_star_cdfs(&ks, xmin, xmax, step, samples, seed as u64))
}

#[wasm_bindgen(js_name = tStarPmfs)]
pub fn t_star_pmfs_js(
    rhos: Vec<f64>,
    kmin: i32,
    kmax: i32,
    samples: usize,
    seed: u32,
) -> std::result::Result<Vec<f64>, JsError> {
    js(t_star_pmfs(&rhos, kmin, kmax, samples, seed as u64))
}
