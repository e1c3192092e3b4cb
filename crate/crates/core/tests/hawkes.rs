mod common;

use common::{direct_intensity, hawkes, quadrature_log_likelihood, random_times, rng};
use gchp::hawkes::*;
use gchp::Error;
use proptest::prelude::*;
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Poisson};

#[test]
fn intensity_examples() {
    let p = hawkes(1.0, 0.5, 1.0);
    let empty = EventSeries::new(vec![], 10.0).unwrap();
    assert_eq!(intensity_at(&p, &empty, 5.0), 1.0);
    let one = EventSeries::new(vec![0.0], 10.0).unwrap();
    assert!((intensity_at(&p, &one, 2f64.ln()) - 1.25).abs() < 1e-15);

    let q = hawkes(2.0, 0.3, 0.7);
    let times = vec![1.0, 2.0, 3.5];
    let ev = EventSeries::new(times.clone(), 10.0).unwrap();
    let oracle = direct_intensity(2.0, 0.3, 0.7, &times, 4.0);
    assert!((intensity_at(&q, &ev, 4.0) - oracle).abs() < 1e-12);
}

#[test]
fn intensity_jumps_by_alpha_and_is_right_continuous() {
    let p = hawkes(1.0, 0.4, 2.0);
    let ev = EventSeries::new(vec![1.0, 1.5, 3.0], 5.0).unwrap();
    for &t in ev.times() {
        let before = intensity_at(&p, &ev, t);
        let after = intensity_at(&p, &ev, t.next_up());
        assert!((after - before - 0.4).abs() < 1e-9, "{t}: {before} -> {after}");
        let later = intensity_at(&p, &ev, t + 1e-9);
        assert!((later - after).abs() < 1e-8);
    }
}

#[test]
fn likelihood_examples() {
    let empty = EventSeries::new(vec![], 10.0).unwrap();
    assert!((log_likelihood(&HawkesParams::poisson(0.7).unwrap(), &empty) + 7.0).abs() < 1e-12);

    let three = EventSeries::new(vec![0.5, 2.0, 9.0], 10.0).unwrap();
    assert!((log_likelihood(&HawkesParams::poisson(1.0).unwrap(), &three) + 10.0).abs() < 1e-12);

    let times = vec![1.0, 1.3, 4.2];
    let ev = EventSeries::new(times.clone(), 5.0).unwrap();
    let exact = log_likelihood(&hawkes(1.0, 0.5, 1.0), &ev);
    let oracle = quadrature_log_likelihood(1.0, 0.5, 1.0, &times, 5.0);
    assert!(((exact - oracle) / oracle).abs() < 1e-6);
}

#[test]
fn likelihood_matches_quadrature_on_random_instances() {
    let mut r = rng(101);
    for case in 0..120 {
        let l = 0.1 + 3.0 * r.random::<f64>();
        let b = 0.05 + 5.0 * r.random::<f64>();
        let a = b * 0.95 * r.random::<f64>();
        let horizon = 1.0 + 50.0 * r.random::<f64>();
        let n = r.random_range(0..40);
        let times = random_times(&mut r, n, horizon);
        let ev = EventSeries::new(times.clone(), horizon).unwrap();
        let exact = log_likelihood(&hawkes(l, a, b), &ev);
        let oracle = quadrature_log_likelihood(l, a, b, &times, horizon);
        let rel = ((exact - oracle) / oracle.abs().max(1e-300)).abs();
        assert!(rel < 1e-6, "case {case}: {exact} vs {oracle}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn poisson_likelihood_reduces_exactly(rate in 0.01f64..10.0, n in 0usize..50, horizon in 1.0f64..100.0) {
        let times: Vec<f64> = (1..=n).map(|i| horizon * i as f64 / (n + 1) as f64).collect();
        let ev = EventSeries::new(times, horizon).unwrap();
        let ll = log_likelihood(&HawkesParams::poisson(rate).unwrap(), &ev);
        let expected = n as f64 * rate.ln() - rate * horizon;
        prop_assert!((ll - expected).abs() <= 1e-9 * expected.abs().max(1.0));
    }

    #[test]
    fn intensity_never_below_background(l in 0.01f64..5.0, ratio in 0.0f64..0.99, b in 0.01f64..10.0, t in 0.0f64..30.0) {
        let p = HawkesParams::new(l, ratio * b, b).unwrap();
        let ev = EventSeries::new(vec![1.0, 2.0, 2.5, 10.0], 30.0).unwrap();
        prop_assert!(intensity_at(&p, &ev, t) >= l);
    }

    #[test]
    fn simulated_series_are_valid(seed in 0u64..1000, horizon in 1.0f64..200.0) {
        let ev = simulate(&hawkes(1.0, 0.6, 1.5), horizon, seed);
        prop_assert!(ev.times().windows(2).all(|w| w[1] > w[0]));
        prop_assert!(ev.times().iter().all(|&t| (0.0..=horizon).contains(&t)));
    }
}

#[test]
fn invalid_params_and_events_are_rejected() {
    assert!(HawkesParams::new(0.0, 0.1, 1.0).is_err());
    assert!(HawkesParams::new(1.0, -0.1, 1.0).is_err());
    assert!(HawkesParams::new(1.0, 1.0, 1.0).is_err());
    assert!(EventSeries::new(vec![1.0, 1.0], 5.0).is_err());
    assert!(EventSeries::new(vec![1.0, 6.0], 5.0).is_err());
    assert!(EventSeries::new(vec![-1.0], 5.0).is_err());
}

#[test]
fn branching_ratio_examples() {
    assert_eq!(branching_ratio(&hawkes(1.0, 0.0, 1.0)), 0.0);
    assert_eq!(branching_ratio(&hawkes(1.0, 0.5, 1.0)), 0.5);
    assert!((branching_ratio(&hawkes(2.0, 0.3, 0.8)) - 0.375).abs() < 1e-15);
}

#[test]
fn simulation_is_deterministic() {
    let p = hawkes(1.0, 0.5, 1.0);
    let a = simulate(&p, 500.0, 42);
    let b = simulate(&p, 500.0, 42);
    assert_eq!(a, b);
    assert_ne!(a, simulate(&p, 500.0, 43));
}

#[test]
fn poisson_mean_count() {
    let p = HawkesParams::poisson(3.0).unwrap();
    let counts: Vec<f64> = (0..1000).map(|s| simulate(&p, 1000.0, s).len() as f64).collect();
    let mean = counts.iter().sum::<f64>() / counts.len() as f64;
    let band = 3.0 * (3.0f64 * 1000.0).sqrt() / 1000f64.sqrt();
    assert!((mean - 3000.0).abs() < band, "mean {mean}");
}

fn chi_square_p_value(counts: &[u64], rate_t: f64) -> f64 {
    let law = Poisson::new(rate_t).unwrap();
    // pooled cells keep every expected count above 5
    let edges: Vec<u64> = (10..=31).collect();
    let mut observed = vec![0.0; edges.len() + 1];
    for &c in counts {
        let i = edges.iter().position(|&e| c < e).unwrap_or(edges.len());
        observed[i] += 1.0;
    }
    let n = counts.len() as f64;
    let mut expected = Vec::new();
    let mut below = 0.0;
    for &e in &edges {
        let cdf: f64 = (0..e).map(|k| law.pmf(k)).sum();
        expected.push((cdf - below) * n);
        below = cdf;
    }
    expected.push((1.0 - below) * n);
    assert!(expected.iter().all(|&e| e > 5.0));
    let stat: f64 = observed.iter().zip(&expected).map(|(o, e)| (o - e).powi(2) / e).sum();
    1.0 - ChiSquared::new((observed.len() - 1) as f64).unwrap().cdf(stat)
}

/// Ten independent blocks, each a chi-square test at 1%. A correct
/// simulator rejects two or more blocks with probability about 0.004.
#[test]
fn poisson_counts_pass_chi_square() {
    let p = HawkesParams::poisson(2.0).unwrap();
    let mut rejections = Vec::new();
    for block in 0..10u64 {
        let counts: Vec<u64> = (0..4000)
            .map(|s| simulate(&p, 10.0, gchp::rng::derive_seed(block, s)).len() as u64)
            .collect();
        let pv = chi_square_p_value(&counts, 20.0);
        if pv < 0.01 {
            rejections.push((block, pv));
        }
    }
    assert!(rejections.len() <= 1, "rejected blocks: {rejections:?}");
}

#[test]
fn stationary_rate_mean_count() {
    let p = hawkes(1.0, 0.5, 1.0);
    let counts: Vec<f64> = (0..1000).map(|s| simulate(&p, 1000.0, 50_000 + s).len() as f64).collect();
    let mean = counts.iter().sum::<f64>() / counts.len() as f64;
    assert!((mean / 2000.0 - 1.0).abs() < 0.02, "mean {mean}");
    // the transient-corrected expectation is closer still
    assert!((mean - p.expected_count(1000.0)).abs() < 0.01 * 2000.0);
}

#[test]
fn fit_recovers_generating_parameters() {
    let truth = hawkes(1.0, 0.5, 1.0);
    for seed in [0, 1, 2] {
        let ev = simulate(&truth, 20_000.0, seed);
        let fit = fit_mle(&ev, &FitConfig::default()).unwrap();
        let p = fit.params;
        for (got, want) in [(p.lambda0(), 1.0), (p.alpha(), 0.5), (p.beta(), 1.0)] {
            assert!((got / want - 1.0).abs() < 0.1, "seed {seed}: {p:?}");
        }
    }
}

#[test]
fn fit_beats_every_start_point_and_is_deterministic() {
    let ev = simulate(&hawkes(0.5, 0.3, 0.9), 2_000.0, 5);
    let cfg = FitConfig::default();
    let fit = fit_mle(&ev, &cfg).unwrap();
    for s in start_points(&ev, &cfg) {
        assert!(fit.log_likelihood >= log_likelihood(&s, &ev) - 1e-9);
    }
    let again = fit_mle(&ev, &cfg).unwrap();
    assert_eq!(fit.params, again.params);
    assert_eq!(fit.log_likelihood, again.log_likelihood);
    assert!((fit.log_likelihood - log_likelihood(&fit.params, &ev)).abs() < 1e-9);
}

/// Under Poisson data the fitted branching ratio sits on its lower boundary
/// with a boundary-mixture law, so a single replicate can exceed 0.05 by
/// chance; the example is checked across replicates.
#[test]
fn poisson_data_fits_near_zero_excitation() {
    let p = HawkesParams::poisson(2.0).unwrap();
    let mut good = 0;
    let seeds = 12;
    for seed in 0..seeds {
        let ev = simulate(&p, 10_000.0, seed);
        let fit = fit_mle(&ev, &FitConfig::default()).unwrap();
        let lambda_ok = (fit.params.lambda0() / 2.0 - 1.0).abs() < 0.05;
        let mu_ok = fit.params.branching_ratio() < 0.05;
        if lambda_ok && mu_ok {
            good += 1;
        }
        assert!(fit.params.branching_ratio() < 0.2, "seed {seed}: {:?}", fit.params);
    }
    assert!(good >= 8, "{good}/{seeds} replicates within tolerance");
}

#[test]
fn fit_needs_two_events() {
    let ev = EventSeries::new(vec![1.0], 10.0).unwrap();
    assert!(matches!(
        fit_mle(&ev, &FitConfig::default()),
        Err(Error::TooFewEvents { needed: 2, got: 1 })
    ));
}

#[test]
fn explosive_bursts_report_non_stationary_fit() {
    // one background event followed by a long self-triggered cascade
    let mut times = vec![1.0];
    let mut t = 1.0;
    for k in 0..2000 {
        t += 1e-3 * (1.0 + (k % 7) as f64 * 0.1);
        times.push(t);
    }
    let ev = EventSeries::new(times, 1.0e6).unwrap();
    assert!(matches!(
        fit_mle(&ev, &FitConfig::default()),
        Err(Error::NonStationaryFit { .. })
    ));
}
