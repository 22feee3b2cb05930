use std::collections::BTreeMap;
use std::fmt::Write;

use clap::{Args, ValueEnum};
use record_election::coalescent::{run_coalescent, run_coalescent_tower};
use record_election::election::{run_election_tower, ElectionConfig};
use record_election::population::parse_population;
use record_election::rng::par_streams;
use record_election::stats::{mean_ci, EmpiricalDist};
use record_election::TowerReal;
use serde::Serialize;

use crate::{Format, OutputArgs, RunConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Election,
    Coalescent,
}

fn population(s: &str) -> Result<TowerReal, String> {
    parse_population(s).map_err(|e| e.to_string())
}

#[derive(Args)]
pub struct SimulateArgs {
    #[arg(value_enum)]
    kind: Kind,
    /// Number of players: an integer, E(n,rho) or EE(n,rho).
    #[arg(long = "M", alias = "m", value_parser = population, required_if_eq("kind", "election"))]
    players: Option<TowerReal>,
    /// Number of blocks: an integer, E(n,rho) or EE(n,rho).
    #[arg(long = "n", value_parser = population, required_if_eq("kind", "coalescent"))]
    blocks: Option<TowerReal>,
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Serialize)]
struct Summary {
    mean: f64,
    ci_low: f64,
    ci_high: f64,
}

#[derive(Serialize)]
struct Report<'a> {
    kind: &'a str,
    population: TowerReal,
    theta: f64,
    seed: u64,
    streams: usize,
    reps: usize,
    columns: &'a [&'a str],
    rows: Vec<BTreeMap<&'a str, u32>>,
    summary: BTreeMap<&'a str, Summary>,
}

fn summarize(rows: &[Vec<u32>], col: usize) -> anyhow::Result<Summary> {
    let d = EmpiricalDist::from_integers(rows.iter().map(|r| r[col] as i64));
    let mean = d.mean();
    let (ci_low, ci_high) = if d.len() >= 2 { mean_ci(&d, 0.99)? } else { (mean, mean) };
    Ok(Summary { mean, ci_low, ci_high })
}

pub fn run(run: &RunConfig, args: &SimulateArgs) -> anyhow::Result<()> {
    if args.reps == 0 {
        anyhow::bail!(record_election::Error::Domain("--reps must be positive".into()));
    }
    let (name, pop, columns): (&str, TowerReal, &[&str]) = match args.kind {
        Kind::Election => ("election", args.players.expect("required by clap"), &["T", "T0"]),
        Kind::Coalescent => ("coalescent", args.blocks.expect("required by clap"), &["collisions"]),
    };
    let theta = args.theta;
    let rows: Vec<record_election::Result<Vec<u32>>> = par_streams(run.seed, run.streams, args.reps, |rng, count| {
        (0..count)
            .map(|_| match args.kind {
                Kind::Election => {
                    let cfg = ElectionConfig { keep_labels: false, ..ElectionConfig::with_theta(theta) };
                    run_election_tower(pop, &cfg, rng).map(|t| vec![t.t, t.t0])
                }
                Kind::Coalescent if theta == 1.0 => {
                    let threshold = ElectionConfig::default().clt_population_threshold;
                    run_coalescent_tower(pop, threshold, rng).map(|c| vec![c.collisions])
                }
                Kind::Coalescent => {
                    let n = pop.to_f64();
                    if n > ElectionConfig::default().clt_population_threshold as f64 {
                        return Err(record_election::Error::Domain(format!(
                            "theta != 1 needs an exact number of blocks, got {pop}"
                        )));
                    }
                    run_coalescent(n as u64, theta, rng).map(|c| vec![c.collisions])
                }
            })
            .collect()
    });
    let rows = rows.into_iter().collect::<record_election::Result<Vec<_>>>()?;
    let summary = (0..columns.len()).map(|c| summarize(&rows, c)).collect::<anyhow::Result<Vec<_>>>()?;

    let body = match args.output.format {
        Format::Json => {
            let report = Report {
                kind: name,
                population: pop,
                theta,
                seed: run.seed,
                streams: run.streams,
                reps: args.reps,
                columns,
                rows: rows.iter().map(|r| columns.iter().copied().zip(r.iter().copied()).collect()).collect(),
                summary: columns.iter().copied().zip(summary).collect(),
            };
            serde_json::to_string_pretty(&report)? + "\n"
        }
        Format::Csv => {
            let mut out = format!("rep,{}\n", columns.join(","));
            for (i, r) in rows.iter().enumerate() {
                let cells: Vec<String> = r.iter().map(|v| v.to_string()).collect();
                writeln!(out, "{i},{}", cells.join(","))?;
            }
            for (label, pick) in [("mean", 0), ("ci_low", 1), ("ci_high", 2)] {
                let cells: Vec<String> = summary
                    .iter()
                    .map(|s| [s.mean, s.ci_low, s.ci_high][pick].to_string())
                    .collect();
                writeln!(out, "{label},{}", cells.join(","))?;
            }
            out
        }
    };
    args.output.write(&body)
}
