use record_election::limits::{
    check_n_star_fixed_point, estimate_s_star_cdf, estimate_spacings, estimate_t0_star_pmf, estimate_t_tilde_star,
    n_star_samples, s_star_samples, sample_s_star_at, t_star_from_s2, t_star_pmf_from_s2, BackwardIterConfig,
    LimitEstimate,
};
use record_election::numerics::{conjugacy_f, conjugacy_f_minus_infinity};
use record_election::rng::stream_rng;
use record_election::stats::{chi_square_two_sample, correlation, EmpiricalDist};

fn s2(n: usize, seed: u64) -> EmpiricalDist {
    let mut rng = stream_rng(seed, 0);
    EmpiricalDist::new(s_star_samples(2, n, &BackwardIterConfig::default(), &mut rng).unwrap()).unwrap()
}

fn close(a: &LimitEstimate, b: &LimitEstimate, z: f64) -> bool {
    a.rows.iter().zip(&b.rows).all(|(x, y)| {
        let s = (x.mc_sigma.powi(2) + y.mc_sigma.powi(2)).sqrt();
        (x.value - y.value).abs() <= z * s + 1e-12
    })
}

#[test]
fn s2_law_has_no_atom_at_one() {
    let mut rng = stream_rng(41, 0);
    // interior points where the mass on either side is resolvable with 1e4 samples
    let grid = [1.0, 1.25, 1.5, 2.0, 3.0, 5.0, 8.0];
    let est = estimate_s_star_cdf(2, &grid, 10_000, &mut rng).unwrap();
    assert_eq!(est.rows[0].value, 0.0);
    assert!(est.rows[1..].iter().all(|r| r.value > 0.0 && r.value < 1.0), "{:?}", est.rows);
    assert!(est.rows.windows(2).all(|w| w[0].value <= w[1].value));
}

#[test]
fn s3_mean_near_three() {
    let mut rng = stream_rng(42, 0);
    let d = EmpiricalDist::new(s_star_samples(3, 10_000, &BackwardIterConfig::default(), &mut rng).unwrap()).unwrap();
    assert!((d.mean() - 3.0).abs() <= 3.0 * 3f64.sqrt(), "{}", d.mean());
}

#[test]
fn s2_has_no_repeated_values() {
    let d = s2(10_000, 43);
    let mut keys: Vec<i64> = d.samples().iter().map(|x| (x * 1e12).round() as i64).collect();
    keys.dedup();
    assert_eq!(keys.len(), 10_000);
}

#[test]
fn total_variation_decays_in_j() {
    let idx = [2u64, 4, 8, 16];
    let cfg = BackwardIterConfig { keep_trajectory: true, ..Default::default() };
    let mut rng = stream_rng(44, 0);
    let reps = 20_000;
    let mut tv = vec![Vec::with_capacity(reps); idx.len()];
    for _ in 0..reps {
        let s = sample_s_star_at(&idx, &cfg, &mut rng).unwrap();
        let traj = s.trajectory.unwrap();
        assert!(traj.iter().all(|level| level.windows(2).all(|w| w[0] <= w[1])));
        for i in 0..idx.len() {
            tv[i].push(traj.windows(2).map(|w| (w[1][i] - w[0][i]).abs()).sum::<f64>());
        }
    }
    let d: Vec<EmpiricalDist> = tv.into_iter().map(|v| EmpiricalDist::new(v).unwrap()).collect();
    let means: Vec<f64> = d.iter().map(|x| x.mean()).collect();
    assert!(means.windows(2).all(|w| w[1] < w[0]), "{means:?}");
    // C'/j^(1/4) from j = 2 to j = 16
    let bound = means[0] * (2.0f64 / 16.0).powf(0.25);
    assert!(means[3] <= bound + 3.0 * d[3].std_err(), "{means:?}");
}

#[test]
fn t_star_probabilities_positive() {
    let d = s2(20_000, 45);
    // k ranges whose probabilities are not astronomically small
    for (rho, kmin, kmax) in [(1.5, -3, 3), (2.0, -2, 4), (4.0, 0, 4)] {
        let est = t_star_pmf_from_s2(rho, kmin, kmax, &d).unwrap();
        assert!(est.rows.iter().all(|r| r.value > 0.0), "rho = {rho}: {:?}", est.rows);
    }
}

#[test]
fn t_star_cdf_dominated_in_rho() {
    let (a, b) = (s2(20_000, 46), s2(20_000, 47));
    for (r1, r2) in [(1.5, 2.0), (2.0, 4.0), (1.5, 10.0)] {
        let p = t_star_pmf_from_s2(r1, -6, 8, &a).unwrap();
        let q = t_star_pmf_from_s2(r2, -6, 8, &b).unwrap();
        let (mut fp, mut fq) = (0.0, 0.0);
        for (x, y) in p.rows.iter().zip(&q.rows) {
            fp += x.value;
            fq += y.value;
            let s = ((fp * (1.0 - fp) + fq * (1.0 - fq)) / 20_000.0).sqrt();
            assert!(fp >= fq - 3.0 * s, "rho {r1} vs {r2} at k = {}: {fp} < {fq}", x.x);
        }
    }
}

#[test]
fn t_tilde_star_examples() {
    let mut rng = stream_rng(48, 0);
    let far = estimate_t_tilde_star(-10.0, -4, 4, 20_000, &mut rng).unwrap();
    let d = s2(20_000, 49);
    let limit = t_star_pmf_from_s2(conjugacy_f_minus_infinity(), -4, 4, &d).unwrap();
    assert!(close(&far, &limit, 3.0), "{:?}\n{:?}", far.rows, limit.rows);

    let zero = estimate_t_tilde_star(0.0, -30, 30, 20_000, &mut rng).unwrap();
    assert!((zero.total() - 1.0).abs() < 1e-12);

    // T~*(e^rho) against T~*(rho) + 1
    let rho: f64 = 0.5;
    let (a, b) = (s2(20_000, 50), s2(20_000, 51));
    let lhs: Vec<i64> = a.samples().iter().map(|&x| t_star_from_s2(conjugacy_f(rho.exp()), x).unwrap()).collect();
    let rhs: Vec<i64> = b.samples().iter().map(|&x| t_star_from_s2(conjugacy_f(rho), x).unwrap() + 1).collect();
    let r = chi_square_two_sample(&EmpiricalDist::from_integers(lhs), &EmpiricalDist::from_integers(rhs)).unwrap();
    assert!(!r.rejected_at(0.01), "{r:?}");
}

#[test]
fn t0_star_properties() {
    let mut rng = stream_rng(52, 0);
    let lo = estimate_t0_star_pmf(1.5, 5, 10_000, &mut rng).unwrap();
    let hi = estimate_t0_star_pmf(6.0, 5, 10_000, &mut rng).unwrap();
    assert!((lo.total() - 1.0).abs() < 1e-12);
    let atoms = lo.rows.iter().filter(|r| r.value > 0.01).count();
    assert!(atoms >= 2, "{:?}", lo.rows);
    let grid: Vec<f64> = (-10..=10).map(|k| k as f64).collect();
    for x in grid {
        let (f1, f2) = (lo.dist.cdf(x), hi.dist.cdf(x));
        let s = (lo.dist.cdf_sigma(x).powi(2) + hi.dist.cdf_sigma(x).powi(2)).sqrt();
        assert!(f1 >= f2 - 3.0 * s, "at {x}: {f1} < {f2}");
    }
}

#[test]
fn consecutive_spacings_uncorrelated() {
    let mut rng = stream_rng(53, 0);
    let est = estimate_spacings(200, 2, 10_000, &mut rng).unwrap();
    let c = correlation(&est.column(0), &est.column(1));
    assert!(c.abs() <= 0.05, "{c}");
}

#[test]
fn n_star_grows_like_rho() {
    let mut rng = stream_rng(54, 0);
    let rho = 100.0;
    let s = n_star_samples(&[rho], 2_000, &mut rng).unwrap();
    let d = EmpiricalDist::new(s.iter().map(|row| row[0] as f64 / rho).collect()).unwrap();
    assert!((d.mean() - 1.0).abs() <= 0.05, "{} +- {}", d.mean(), d.std_err());
}

#[test]
fn n_star_fixed_point_at_four() {
    let mut rng = stream_rng(55, 0);
    let r = check_n_star_fixed_point(4.0, 20_000, &mut rng).unwrap();
    assert!(!r.rejected_at(0.01), "{r:?}");
}
