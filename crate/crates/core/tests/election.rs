use record_election::election::{leader_election_statistic, run_election_exact, run_election_tower, ElectionConfig};
use record_election::limits::modified_tetration_population;
use record_election::numerics::{log_star, standard_tetration};
use record_election::records::{sample_round, RecordSamplerConfig};
use record_election::rng::stream_rng;
use record_election::stats::{chi_square_gof, ks_two_sample, EmpiricalDist};
use record_election::TowerReal;

fn light() -> ElectionConfig {
    ElectionConfig { keep_labels: false, ..ElectionConfig::default() }
}

fn shifts(m: u64, reps: usize, seed: u64) -> Vec<i64> {
    let ls = log_star(m as f64, 1.0).unwrap() as i64;
    let mut rng = stream_rng(seed, 0);
    (0..reps).map(|_| run_election_exact(m, &light(), &mut rng).unwrap().t as i64 - ls).collect()
}

// unsigned Stirling numbers of the first kind as f64, independent of the crate
fn stirling_rows(n: usize) -> Vec<Vec<f64>> {
    let mut s = vec![vec![0.0; n + 1]; n + 1];
    s[0][0] = 1.0;
    for i in 1..=n {
        for k in 1..=i {
            s[i][k] = (i - 1) as f64 * s[i - 1][k] + s[i - 1][k - 1];
        }
    }
    s
}

#[test]
fn two_players() {
    let mut rng = stream_rng(21, 0);
    let traces: Vec<_> = (0..20_000).map(|_| run_election_exact(2, &light(), &mut rng).unwrap()).collect();
    assert!(traces.iter().all(|t| t.t0 == 1));
    let d = EmpiricalDist::from_integers(traces.iter().map(|t| t.t as i64));
    assert!((d.mean() - 2.0).abs() <= 3.0 * d.std_err(), "{}", d.mean());
}

#[test]
fn mean_absorption_time_of_ten_matches_chain() {
    let s = stirling_rows(10);
    let fact = |m: usize| (1..=m).map(|i| i as f64).product::<f64>();
    // E T(m) (1 - P(m -> m)) = 1 + sum_{2 <= k < m} P(m -> k) E T(k)
    let mut et = vec![0.0; 11];
    et[1] = 1.0;
    for m in 2..=10 {
        let p = |k: usize| s[m][k] / fact(m);
        let rest: f64 = (2..m).map(|k| p(k) * et[k]).sum();
        et[m] = (1.0 + rest) / (1.0 - p(m));
    }
    let mut rng = stream_rng(22, 0);
    let d = EmpiricalDist::from_integers((0..50_000).map(|_| run_election_exact(10, &light(), &mut rng).unwrap().t as i64));
    assert!((d.mean() - et[10]).abs() <= 3.0 * d.std_err(), "{} vs {}", d.mean(), et[10]);
}

#[test]
fn inconclusive_round_probability() {
    let cfg = RecordSamplerConfig::default();
    let mut rng = stream_rng(23, 0);
    for k in 2..=4u64 {
        let q = 1.0 / (1..=k).product::<u64>() as f64;
        let n = 100_000;
        let stay = (0..n).filter(|_| sample_round(k, &cfg, &mut rng).unwrap().count() == k).count() as u64;
        let r = chi_square_gof(&[stay, n - stay], &[q, 1.0 - q]).unwrap();
        assert!(!r.rejected_at(0.01), "k = {k}: {r:?}");
    }
}

#[test]
fn inconclusive_rounds_are_dominated() {
    // sum over k >= 2 of E(G_k - 1) with G_k geometric(1 - 1/k!)
    let mut bound = 0.0;
    let mut q = 1.0;
    for k in 2..30 {
        q /= k as f64;
        bound += q / (1.0 - q);
    }
    let mut rng = stream_rng(24, 0);
    let traces: Vec<_> = (0..20_000).map(|_| run_election_exact(10_000, &light(), &mut rng).unwrap()).collect();
    assert!(traces.iter().all(|t| t.t0 <= t.t));
    let d = EmpiricalDist::from_integers(traces.iter().map(|t| (t.t - t.t0) as i64));
    assert!(d.mean() <= bound + 3.0 * d.std_err(), "{} vs {bound}", d.mean());
}

#[test]
fn ratio_to_log_star() {
    let mut spreads = Vec::new();
    for (i, m) in [15u64, 1_000, 100_000].into_iter().enumerate() {
        let ls = log_star(m as f64, 1.0).unwrap() as f64;
        let mut rng = stream_rng(25, i as u64);
        let d = EmpiricalDist::new(
            (0..10_000).map(|_| run_election_exact(m, &light(), &mut rng).unwrap().t as f64 / ls).collect(),
        )
        .unwrap();
        assert!((0.5..=1.5).contains(&d.mean()), "M = {m}: {}", d.mean());
        spreads.push(d.variance().sqrt());
    }
    assert!(spreads.windows(2).all(|w| w[1] < w[0]), "{spreads:?}");
}

#[test]
fn shift_bounded_at_tetration_three_of_one() {
    let m = standard_tetration(3, 1.0).to_f64();
    assert!((m - 3_814_279.1).abs() < 1.0);
    let s = shifts(m.floor() as u64, 10_000, 26);
    let inside = s.iter().filter(|x| x.abs() <= 6).count();
    assert!(inside >= 9_900, "{inside}");
}

#[test]
fn shift_variance_bounded() {
    for (i, m) in [100u64, 10_000, 1_000_000].into_iter().enumerate() {
        let d = EmpiricalDist::from_integers(shifts(m, 10_000, 27 + i as u64));
        assert!(d.variance() <= 4.0, "M = {m}: variance {}", d.variance());
    }
}

#[test]
fn shift_support_at_tetration_three_of_zero() {
    let m = standard_tetration(3, 0.0).to_f64().floor() as u64;
    assert_eq!(m, 15);
    let d = EmpiricalDist::from_integers(shifts(m, 10_000, 30));
    let support = d.integer_counts().len();
    assert!(support <= 7, "support of T - log* M has {support} points");
}

#[test]
fn shift_law_stabilizes_across_levels() {
    let mut laws = Vec::new();
    for n in 6..=8u32 {
        let pop = modified_tetration_population(n, 2.0).unwrap();
        let mut rng = stream_rng(31, n as u64);
        laws.push(EmpiricalDist::from_integers(
            (0..10_000).map(|_| run_election_tower(pop, &light(), &mut rng).unwrap().t as i64 - n as i64),
        ));
    }
    for w in laws.windows(2) {
        let r = ks_two_sample(&w[0], &w[1]).unwrap();
        assert!(!r.rejected_at(0.01), "{r:?}");
    }
}

#[test]
fn single_player_tower() {
    let mut rng = stream_rng(32, 0);
    let t = run_election_tower(TowerReal::ONE, &ElectionConfig::default(), &mut rng).unwrap();
    assert_eq!((t.t, t.t0), (1, 0));
    assert_eq!(leader_election_statistic(TowerReal::ONE, &ElectionConfig::default(), &mut rng).unwrap().shift, 0);
}
