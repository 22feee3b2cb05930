use clap::{Args, Subcommand};
use record_election::coalescent::x1_shift_samples;
use record_election::export::{
    f_curve_csv, grid, n_star_csv, s_star_cdf_csv, shift_pmf_csv, spacings_csv, t_star_pmf_csv,
};
use record_election::limits::{
    election_shift_samples, estimate_spacings, modified_tetration_population, n_star_samples, s_star_samples,
    t_star_pmf_from_s2, BackwardIterConfig, EstimateRow, LimitEstimate, LimitKind, SpacingsEstimate,
};
use record_election::numerics::conjugacy_f;
use record_election::rng::{par_streams, SimRng};
use record_election::stats::EmpiricalDist;
use record_election::Error;
use serde::Serialize;

use crate::{Format, OutputArgs, RunConfig};

#[derive(Args)]
pub struct EstimateArgs {
    #[command(subcommand)]
    target: Target,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Subcommand)]
enum Target {
    /// CDF of S*_k on a grid (k,x,cdf).
    SStarCdf {
        #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
        k: Vec<u64>,
        #[arg(long, default_value_t = 1.0)]
        xmin: f64,
        #[arg(long, default_value_t = 6.0)]
        xmax: f64,
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// PMF of T*(rho), rho > 1 (rho,k,pmf,mc_sigma).
    TStarPmf {
        #[arg(long, value_delimiter = ',', default_value = "2", allow_negative_numbers = true)]
        rho: Vec<f64>,
        #[arg(long, default_value_t = -4, allow_negative_numbers = true)]
        kmin: i64,
        #[arg(long, default_value_t = 4, allow_negative_numbers = true)]
        kmax: i64,
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
    },
    /// PMF of T0 - n for elections started at floor(E_n(rho)).
    T0StarPmf {
        #[arg(long, value_delimiter = ',', default_value = "2", allow_negative_numbers = true)]
        rho: Vec<f64>,
        #[arg(long, default_value_t = 6)]
        n_level: u32,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// PMF of X_1 - n for the coalescent started at floor(Ẽ_n(rho)).
    X1Shift {
        #[arg(long, value_delimiter = ',', default_value = "0", allow_negative_numbers = true)]
        rho: Vec<f64>,
        #[arg(long, default_value_t = 3)]
        n_level: u32,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// The conjugacy function f on a grid (z,f).
    FCurve {
        #[arg(long, default_value_t = -6.0, allow_negative_numbers = true)]
        zmin: f64,
        #[arg(long, default_value_t = 4.0, allow_negative_numbers = true)]
        zmax: f64,
        #[arg(long, default_value_t = 0.05)]
        step: f64,
    },
    /// Spacings S*_{k+i} - S*_{k+i-1}, i = 1..=m.
    Spacings {
        #[arg(long, default_value_t = 200)]
        k: u64,
        #[arg(long, default_value_t = 1)]
        m: u64,
        #[arg(long, default_value_t = 2_000)]
        samples: usize,
    },
    /// PMF of N*(rho) = #{k : S*_k <= rho}.
    NStar {
        #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
        rho: Vec<f64>,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
}

#[derive(Serialize)]
struct EstimateView<'a> {
    kind: LimitKind,
    parameters: &'a std::collections::BTreeMap<String, f64>,
    n_samples: usize,
    rows: &'a [EstimateRow],
}

#[derive(Serialize)]
struct Envelope<T: Serialize> {
    target: &'static str,
    seed: u64,
    streams: usize,
    result: T,
}

#[derive(Serialize)]
struct CurvePoint {
    z: f64,
    f: f64,
}

fn sampled<T: Send>(
    run: &RunConfig,
    n: usize,
    f: impl Fn(&mut SimRng, usize) -> record_election::Result<Vec<T>> + Sync,
) -> record_election::Result<Vec<T>> {
    let chunks: Vec<record_election::Result<Vec<T>>> = par_streams(run.seed, run.streams, n, |rng, count| vec![f(rng, count)]);
    let mut out = Vec::with_capacity(n);
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

fn positive(samples: usize) -> record_election::Result<()> {
    if samples == 0 {
        return Err(Error::Domain("--samples must be positive".into()));
    }
    Ok(())
}

fn step_grid(min: f64, max: f64, step: f64) -> record_election::Result<Vec<f64>> {
    if !(step > 0.0) || !(max >= min) {
        return Err(Error::Domain(format!("invalid grid [{min}, {max}] with step {step}")));
    }
    Ok(grid(min, max, step))
}

fn json<T: Serialize>(run: &RunConfig, target: &'static str, result: T) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(&Envelope { target, seed: run.seed, streams: run.streams, result })? + "\n")
}

fn views(estimates: &[LimitEstimate]) -> Vec<EstimateView<'_>> {
    estimates
        .iter()
        .map(|e| EstimateView { kind: e.kind, parameters: &e.parameters, n_samples: e.n_samples, rows: &e.rows })
        .collect()
}

pub fn run(run: &RunConfig, args: &EstimateArgs) -> anyhow::Result<()> {
    let fmt = args.output.format;
    let cfg = BackwardIterConfig::default();
    let body = match &args.target {
        Target::SStarCdf { k, xmin, xmax, step, samples } => {
            positive(*samples)?;
            let xs = step_grid(*xmin, *xmax, *step)?;
            let mut est = Vec::new();
            for &kk in k {
                if kk < 2 {
                    return Err(Error::Domain(format!("S*_k CDF needs k >= 2, got {kk}")).into());
                }
                let s = sampled(run, *samples, |rng, c| s_star_samples(kk, c, &cfg, rng))?;
                let e = LimitEstimate::cdf(LimitKind::SStarCdf, vec![("k", kk as f64)], EmpiricalDist::new(s)?, &xs);
                est.push(e.with_seed(run.seed));
            }
            match fmt {
                Format::Csv => s_star_cdf_csv(&est),
                Format::Json => json(run, "s-star-cdf", views(&est))?,
            }
        }
        Target::TStarPmf { rho, kmin, kmax, samples } => {
            positive(*samples)?;
            if let Some(bad) = rho.iter().find(|r| !(**r > 1.0)) {
                return Err(Error::Domain(format!("T*(rho) needs rho > 1, got {bad}")).into());
            }
            // one S*_2 sample serves every rho, so the curves are coupled
            let s2 = EmpiricalDist::new(sampled(run, *samples, |rng, c| s_star_samples(2, c, &cfg, rng))?)?;
            let est = rho
                .iter()
                .map(|&r| t_star_pmf_from_s2(r, *kmin, *kmax, &s2).map(|e| e.with_seed(run.seed)))
                .collect::<record_election::Result<Vec<_>>>()?;
            match fmt {
                Format::Csv => t_star_pmf_csv(&est),
                Format::Json => json(run, "t-star-pmf", views(&est))?,
            }
        }
        Target::T0StarPmf { rho, n_level, samples } => {
            positive(*samples)?;
            let mut est = Vec::new();
            for &r in rho {
                let pop = modified_tetration_population(*n_level, r)?;
                let s = sampled(run, *samples, |rng, c| election_shift_samples(pop, *n_level, c, rng))?;
                let e = LimitEstimate::pmf(
                    LimitKind::T0StarPmf,
                    vec![("rho", r), ("n_level", *n_level as f64)],
                    s.into_iter().map(|(_, t0)| t0).collect(),
                );
                est.push(e.with_seed(run.seed));
            }
            match fmt {
                Format::Csv => shift_pmf_csv(&est),
                Format::Json => json(run, "t0-star-pmf", views(&est))?,
            }
        }
        Target::X1Shift { rho, n_level, samples } => {
            positive(*samples)?;
            let mut est = Vec::new();
            for &r in rho {
                let s = sampled(run, *samples, |rng, c| x1_shift_samples(r, *n_level, c, rng))?;
                let e = LimitEstimate::pmf(LimitKind::X1Shift, vec![("rho", r), ("n_level", *n_level as f64)], s);
                est.push(e.with_seed(run.seed));
            }
            match fmt {
                Format::Csv => shift_pmf_csv(&est),
                Format::Json => json(run, "x1-shift", views(&est))?,
            }
        }
        Target::FCurve { zmin, zmax, step } => {
            let zs = step_grid(*zmin, *zmax, *step)?;
            match fmt {
                Format::Csv => f_curve_csv(&zs),
                Format::Json => {
                    let pts: Vec<CurvePoint> = zs.iter().map(|&z| CurvePoint { z, f: conjugacy_f(z) }).collect();
                    json(run, "f-curve", pts)?
                }
            }
        }
        Target::Spacings { k, m, samples } => {
            positive(*samples)?;
            let rows = sampled(run, *samples, |rng, c| estimate_spacings(*k, *m, c, rng).map(|e| e.spacings))?;
            let est = SpacingsEstimate { k: *k, m: *m, spacings: rows };
            match fmt {
                Format::Csv => spacings_csv(&est),
                Format::Json => json(run, "spacings", &est)?,
            }
        }
        Target::NStar { rho, samples } => {
            positive(*samples)?;
            let s = sampled(run, *samples, |rng, c| n_star_samples(rho, c, rng))?;
            let est: Vec<LimitEstimate> = rho
                .iter()
                .enumerate()
                .map(|(i, &r)| {
                    LimitEstimate::pmf(LimitKind::NStar, vec![("rho", r)], s.iter().map(|row| row[i] as i64).collect())
                        .with_seed(run.seed)
                })
                .collect();
            match fmt {
                Format::Csv => n_star_csv(&est),
                Format::Json => json(run, "n-star", views(&est))?,
            }
        }
    };
    args.output.write(&body)
}
