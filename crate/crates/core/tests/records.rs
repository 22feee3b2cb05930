use record_election::numerics::{harmonic_pair, modified_tetration};
use record_election::records::{
    approx_count_records, count_records, record_time, sample_round, RecordIndex, RecordSamplerConfig,
};
use record_election::rng::{stream_rng, unit_numerator};
use record_election::stats::{chi_square_gof, ks_critical, ks_two_sample, EmpiricalDist};

fn counts_of(samples: impl Iterator<Item = u64>, cells: usize) -> Vec<u64> {
    let mut c = vec![0u64; cells];
    for s in samples {
        c[s as usize - 1] += 1;
    }
    c
}

#[test]
fn round_of_two_survivor_count() {
    let cfg = RecordSamplerConfig::default();
    let mut rng = stream_rng(11, 0);
    let c = counts_of((0..100_000).map(|_| sample_round(2, &cfg, &mut rng).unwrap().count()), 2);
    let r = chi_square_gof(&c, &[0.5, 0.5]).unwrap();
    assert!(!r.rejected_at(0.01), "{r:?}");
}

#[test]
fn count_of_three_matches_brute_force() {
    // enumerate (ξ2, ξ3) with P{ξ_i = 1} = 1/i
    let mut exact = [0.0f64; 3];
    for x2 in 0..2 {
        for x3 in 0..2 {
            let p = 0.5 * if x3 == 1 { 1.0 / 3.0 } else { 2.0 / 3.0 };
            exact[x2 + x3] += p;
        }
    }
    assert!((exact[0] - 1.0 / 3.0).abs() < 1e-15 && (exact[1] - 0.5).abs() < 1e-15);
    let cfg = RecordSamplerConfig::default();
    let mut rng = stream_rng(12, 0);
    let c = counts_of((0..100_000).map(|_| count_records(3, &cfg, &mut rng).unwrap()), 3);
    let r = chi_square_gof(&c, &exact).unwrap();
    assert!(!r.rejected_at(0.01), "{r:?}");
}

#[test]
fn count_records_mean_at_one_million() {
    let cfg = RecordSamplerConfig::default();
    let mut rng = stream_rng(13, 0);
    let d = EmpiricalDist::from_integers((0..20_000).map(|_| count_records(1_000_000, &cfg, &mut rng).unwrap() as i64));
    let h = harmonic_pair(1_000_000).0;
    assert!((h - 14.392_726_722_865_72).abs() < 1e-9);
    assert!((d.mean() - h).abs() <= 4.0 * d.std_err(), "{} vs {h}", d.mean());
    assert!(d.min() >= 1.0 && d.max() <= 1e6);
}

#[test]
fn first_record_time_is_one() {
    let cfg = RecordSamplerConfig::default();
    let mut rng = stream_rng(14, 0);
    for _ in 0..1000 {
        assert_eq!(record_time(1, &cfg, &mut rng).unwrap(), RecordIndex::Exact(1));
    }
}

// R(n+1) = ceil(R(n) / U) in 128-bit integers past the library's handoff cap;
// beyond 2^74 the ceiling no longer matters and plain division is used
fn williams_uncapped(n: usize, rng: &mut impl rand::RngCore) -> f64 {
    let mut r: u128 = 1;
    let mut big: Option<f64> = None;
    for _ in 1..n {
        let u = unit_numerator(rng) as u128;
        match big.as_mut() {
            Some(x) => *x *= (1u64 << 53) as f64 / u as f64,
            None if r >= 1 << 74 => big = Some(r as f64 * (1u64 << 53) as f64 / u as f64),
            None => r = ((r << 53) + u - 1) / u,
        }
    }
    big.unwrap_or(r as f64)
}

#[test]
fn exact_and_bridged_record_times_weld() {
    // exact Williams at k = 25 against the log-domain bridge from the threshold 15
    let n = 100_000;
    let mut rng = stream_rng(15, 0);
    let exact: Vec<f64> = (0..n).map(|_| williams_uncapped(25, &mut rng).ln()).collect();
    let cfg = RecordSamplerConfig::default();
    let mut rng = stream_rng(15, 1);
    let bridged: Vec<f64> = (0..n).map(|_| record_time(25, &cfg, &mut rng).unwrap().ln()).collect();
    assert!(bridged.iter().all(|b| *b >= 25f64.ln()));
    let r = ks_two_sample(&EmpiricalDist::new(exact).unwrap(), &EmpiricalDist::new(bridged).unwrap()).unwrap();
    let crit = ks_critical(0.001, n as f64 / 2.0);
    assert!(r.statistic < crit, "D = {} >= {crit}", r.statistic);
}

#[test]
fn approx_count_examples() {
    let mut rng = stream_rng(16, 0);

    let m = modified_tetration(3, 1.5).unwrap();
    let e2 = modified_tetration(2, 1.5).unwrap().to_f64();
    let inside = (0..10_000)
        .filter(|_| {
            let k = approx_count_records(m, &mut rng).to_f64();
            (0.5 * e2..=2.0 * e2).contains(&k)
        })
        .count();
    assert!(inside as f64 >= 0.999 * 10_000.0, "{inside}");

    let m = modified_tetration(5, 2.0).unwrap();
    assert_eq!(m.level(), 5);
    let at_four = (0..10_000).filter(|_| approx_count_records(m, &mut rng).level() == 4).count();
    assert!(at_four >= 9_990, "{at_four}");
}

#[test]
fn approx_count_mean_at_1e8() {
    let mut rng = stream_rng(17, 0);
    let m = record_election::TowerReal::from_f64(1e8).unwrap();
    let d = EmpiricalDist::new((0..20_000).map(|_| approx_count_records(m, &mut rng).to_f64()).collect()).unwrap();
    let h = harmonic_pair(100_000_000).0;
    assert!((d.mean() - h).abs() <= 4.0 * d.std_err(), "{} vs {h}", d.mean());
    assert!(d.min() >= 1.0);
}

#[test]
fn approx_count_above_exact_prefix() {
    let mut rng = stream_rng(18, 0);
    let m = record_election::TowerReal::from_f64(1e20).unwrap();
    let d = EmpiricalDist::new((0..2_000).map(|_| approx_count_records(m, &mut rng).to_f64()).collect()).unwrap();
    let h = 1e20f64.ln() + record_election::numerics::EULER_GAMMA;
    assert!((d.mean() - h).abs() <= 4.0 * d.std_err(), "{} vs {h}", d.mean());
    assert!(d.samples().iter().all(|x| x.fract() == 0.0));
}
