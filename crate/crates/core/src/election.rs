//! Forward simulation of the election.
//!
//! Starting from `M` players, each round keeps the record holders among the
//! current players until only player 1 is left. Populations above the
//! approximation threshold are advanced with [`approx_count_records`]; all
//! smaller populations are simulated exactly.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::numerics::{log_star, log_star_tower, TowerReal};
use crate::records::{approx_count_records, sample_round, RecordSamplerConfig};
use crate::rng::stream_rng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElectionConfig {
    pub theta: f64,
    /// Rounds starting above this population are approximated.
    pub clt_population_threshold: u64,
    /// Survivor labels are kept only while the population is at most this.
    pub label_population_cap: u64,
    pub keep_labels: bool,
}

impl Default for ElectionConfig {
    fn default() -> Self {
        ElectionConfig {
            theta: 1.0,
            clt_population_threshold: 10_000_000,
            label_population_cap: 100_000,
            keep_labels: true,
        }
    }
}

impl ElectionConfig {
    pub fn with_theta(theta: f64) -> Self {
        ElectionConfig { theta, ..Self::default() }
    }

    fn sampler(&self) -> RecordSamplerConfig {
        RecordSamplerConfig {
            theta: self.theta,
            clt_population_threshold: self.clt_population_threshold,
            ..RecordSamplerConfig::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub population_after: TowerReal,
    pub conclusive: bool,
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElectionTrace {
    pub initial_population: TowerReal,
    pub rounds: Vec<RoundRecord>,
    #[serde(rename = "T")]
    pub t: u32,
    #[serde(rename = "T0")]
    pub t0: u32,
    /// Entry `n - 1` lists the original numbers of the players surviving
    /// round `n`, for an initial run of rounds.
    pub survivor_labels: Option<Vec<Vec<u64>>>,
}

impl ElectionTrace {
    /// Population after round `n` (1-based), or the initial one for `n = 0`.
    pub fn population(&self, n: usize) -> TowerReal {
        if n == 0 {
            self.initial_population
        } else {
            self.rounds[n - 1].population_after
        }
    }

    pub fn inconclusive_rounds(&self) -> u32 {
        self.t - self.t0
    }

    /// Checks the structural invariants of a trace.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let mut prev = self.initial_population;
        let mut conclusive = 0;
        for (i, r) in self.rounds.iter().enumerate() {
            if r.population_after > prev {
                return Err(format!("population increased in round {}", i + 1));
            }
            if r.conclusive != (r.population_after < prev) {
                return Err(format!("conclusive flag wrong in round {}", i + 1));
            }
            conclusive += u32::from(r.conclusive);
            prev = r.population_after;
        }
        if prev != TowerReal::ONE {
            return Err("final population is not 1".into());
        }
        if self.t as usize != self.rounds.len() || self.t0 != conclusive {
            return Err("round counters disagree with the rounds".into());
        }
        if let Some(labels) = &self.survivor_labels {
            let mut prev_labels: Option<&Vec<u64>> = None;
            for (i, l) in labels.iter().enumerate() {
                if l.first() != Some(&1) || !l.windows(2).all(|w| w[0] < w[1]) {
                    return Err(format!("labels of round {} are not increasing from 1", i + 1));
                }
                if l.len() as f64 != self.rounds[i].population_after.to_f64() {
                    return Err(format!("label count differs from population in round {}", i + 1));
                }
                if let Some(p) = prev_labels {
                    let mut it = p.iter();
                    if !l.iter().all(|x| it.any(|y| y == x)) {
                        return Err(format!("labels of round {} are not a subsequence", i + 1));
                    }
                }
                prev_labels = Some(l);
            }
        }
        Ok(())
    }
}

/// Supplies the generator used in each round.
trait RoundStreams {
    fn with_round<T>(&mut self, n: u32, f: impl FnOnce(&mut dyn RngCore) -> T) -> T;
}

struct Shared<'a, R: ?Sized>(&'a mut R);

impl<R: RngCore + ?Sized> RoundStreams for Shared<'_, R> {
    fn with_round<T>(&mut self, _n: u32, f: impl FnOnce(&mut dyn RngCore) -> T) -> T {
        let mut r: &mut R = self.0;
        f(&mut r)
    }
}

struct PerRound(u64);

impl RoundStreams for PerRound {
    fn with_round<T>(&mut self, n: u32, f: impl FnOnce(&mut dyn RngCore) -> T) -> T {
        let mut rng = stream_rng(self.0, n as u64);
        f(&mut rng)
    }
}

/// Continues an election from `m` players with exact rounds.
fn exact_rounds(
    m: u64,
    first_round: u32,
    cfg: &ElectionConfig,
    with_labels: bool,
    streams: &mut impl RoundStreams,
    rounds: &mut Vec<RoundRecord>,
) -> Result<Option<Vec<Vec<u64>>>> {
    let sampler = cfg.sampler();
    let mut n = m;
    let mut round = first_round;
    let mut labels: Option<Vec<Vec<u64>>> = with_labels.then(Vec::new);
    let mut tracking = with_labels;
    loop {
        let outcome = streams.with_round(round, |r| sample_round(n, &sampler, r))?;
        let next = outcome.count();
        if tracking {
            let all = labels.as_mut().expect("labels enabled");
            if next <= cfg.label_population_cap {
                let mapped: Vec<u64> = match all.last() {
                    Some(prev) => outcome.survivor_indices.iter().map(|&i| prev[(i - 1) as usize]).collect(),
                    None => outcome.survivor_indices,
                };
                all.push(mapped);
            } else {
                tracking = false;
            }
        }
        rounds.push(RoundRecord {
            population_after: TowerReal::from_f64(next as f64)?,
            conclusive: next < n,
            exact: true,
        });
        n = next;
        round += 1;
        if n == 1 {
            break;
        }
    }
    Ok(labels)
}

fn finish(initial: TowerReal, rounds: Vec<RoundRecord>, labels: Option<Vec<Vec<u64>>>) -> ElectionTrace {
    let t = rounds.len() as u32;
    let t0 = rounds.iter().filter(|r| r.conclusive).count() as u32;
    ElectionTrace { initial_population: initial, rounds, t, t0, survivor_labels: labels }
}

fn run_exact_with(m: u64, cfg: &ElectionConfig, streams: &mut impl RoundStreams) -> Result<ElectionTrace> {
    if m == 0 {
        return domain("population must be at least 1");
    }
    cfg.sampler().validate()?;
    let mut rounds = Vec::new();
    let labels = exact_rounds(m, 1, cfg, cfg.keep_labels, streams, &mut rounds)?;
    Ok(finish(TowerReal::from_f64(m as f64)?, rounds, labels))
}

/// Exact election among `M` players.
pub fn run_election_exact<R: Rng + ?Sized>(m: u64, cfg: &ElectionConfig, rng: &mut R) -> Result<ElectionTrace> {
    run_exact_with(m, cfg, &mut Shared(rng))
}

/// Exact election whose round `n` draws from substream `n` of `seed`.
///
/// Runs with the same seed and different `M` are coupled: the survivors of
/// the smaller run are the first survivors of the larger one in every round.
pub fn run_election_exact_coupled(m: u64, cfg: &ElectionConfig, seed: u64) -> Result<ElectionTrace> {
    run_exact_with(m, cfg, &mut PerRound(seed))
}

/// Election started from a possibly tower-sized population.
///
/// Populations that fit in `f64` are first rounded down to an integer.
pub fn run_election_tower<R: Rng + ?Sized>(m: TowerReal, cfg: &ElectionConfig, rng: &mut R) -> Result<ElectionTrace> {
    let threshold = cfg.clt_population_threshold as f64;
    let mf = m.to_f64();
    if mf <= threshold {
        return run_election_exact(mf.floor() as u64, cfg, rng);
    }
    if cfg.theta != 1.0 {
        return domain("approximate rounds are only available for theta = 1");
    }
    let initial = if mf.is_finite() { TowerReal::from_f64(mf.floor())? } else { m };
    let mut rounds = Vec::new();
    let mut pop = initial;
    while pop.to_f64() > threshold {
        let next = approx_count_records(pop, rng);
        rounds.push(RoundRecord { population_after: next, conclusive: true, exact: false });
        pop = next;
    }
    let n = pop.to_f64().floor() as u64;
    if n > 1 {
        let first = rounds.len() as u32 + 1;
        exact_rounds(n, first, cfg, false, &mut Shared(rng), &mut rounds)?;
    }
    Ok(finish(initial, rounds, None))
}

/// `T(M) - log* M` together with `T(M)` and `log* M`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElectionStatistic {
    #[serde(rename = "T")]
    pub t: u32,
    #[serde(rename = "T0")]
    pub t0: u32,
    pub log_star: u32,
    pub shift: i64,
    pub ratio: f64,
}

pub fn leader_election_statistic<R: Rng + ?Sized>(
    m: TowerReal,
    cfg: &ElectionConfig,
    rng: &mut R,
) -> Result<ElectionStatistic> {
    let light = ElectionConfig { keep_labels: false, ..*cfg };
    let trace = run_election_tower(m, &light, rng)?;
    let mf = trace.initial_population.to_f64();
    let ls = if mf.is_finite() { log_star(mf, 1.0)? } else { log_star_tower(trace.initial_population) };
    Ok(ElectionStatistic {
        t: trace.t,
        t0: trace.t0,
        log_star: ls,
        shift: trace.t as i64 - ls as i64,
        ratio: trace.t as f64 / ls as f64,
    })
}
