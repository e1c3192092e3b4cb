mod common;

use common::{chain_variance_mc, hawkes, random_stochastic, rng};
use gchp::limits::*;
use gchp::states::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

fn tm(rows: Vec<Vec<f64>>) -> TransitionMatrix {
    TransitionMatrix::from_probabilities(rows).unwrap()
}

fn params(values: &[f64], p: &TransitionMatrix, l: f64, mu: f64) -> LimitParams {
    let pi = stationary_distribution(p).unwrap();
    limit_params_from_values(values, p, &pi, &hawkes(l, mu, 1.0)).unwrap()
}

/// `Π*` approximated by a high power of `P`, then `g` by a fresh solve.
fn g_via_matrix_power(values: &[f64], p: &TransitionMatrix) -> Vec<f64> {
    let m = p.to_matrix();
    let mut power = m.clone();
    for _ in 0..12 {
        power = &power * &power;
    }
    let n = values.len();
    let pi: Vec<f64> = (0..n).map(|j| power[(0, j)]).collect();
    let a_star: f64 = pi.iter().zip(values).map(|(w, a)| w * a).sum();
    let b = DVector::from_iterator(n, values.iter().map(|a| a - a_star));
    let lhs = &m + &power - DMatrix::identity(n, n);
    lhs.lu().solve(&b).unwrap().iter().copied().collect()
}

#[test]
fn symmetric_two_state_matches_hand_derivation() {
    let d = 0.005;
    let p = tm(vec![vec![0.5, 0.5], vec![0.5, 0.5]]);
    let lp = params(&[d, -d], &p, 1.0, 0.5);
    assert!(lp.a_star.abs() < 1e-12);
    assert!((lp.b[0] - d).abs() < 1e-12 && (lp.b[1] + d).abs() < 1e-12);
    assert!((lp.g[0] + d).abs() < 1e-12 && (lp.g[1] - d).abs() < 1e-12);
    for v in &lp.v {
        assert!((v - d * d).abs() < 1e-12);
    }
    assert!((lp.sigma_sq - d * d).abs() < 1e-12);
    assert!((lp.sigma_star - d * 2f64.sqrt()).abs() < 1e-12);
    assert!((lp.sigma_bar - lp.sigma_star).abs() < 1e-12);
}

#[test]
fn fundamental_solution_matches_matrix_power_route() {
    let mut r = rng(21);
    for n in 2..=6 {
        let p = random_stochastic(&mut r, n, 0.02);
        let values: Vec<f64> = (0..n).map(|i| (n as f64 / 2.0 - i as f64) * 0.005 + 0.001).collect();
        let lp = params(&values, &p, 1.0, 0.2);
        let oracle = g_via_matrix_power(&values, &p);
        for (a, b) in lp.g.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-10, "n={n}: {:?} vs {oracle:?}", lp.g);
        }
    }
}

#[test]
fn structural_invariants_hold_on_random_chains() {
    let mut r = rng(5);
    for _ in 0..200 {
        let n = r.random_range(2..7);
        let p = random_stochastic(&mut r, n, 0.01);
        let values: Vec<f64> = (0..n).map(|_| r.random_range(-0.05..0.05)).collect();
        let pi = stationary_distribution(&p).unwrap();
        let l = r.random_range(0.1..3.0);
        let mu = r.random_range(0.0..0.9);
        let h = hawkes(l, mu, 1.0);
        let lp = limit_params_from_values(&values, &p, &pi, &h).unwrap();
        let centered: f64 = pi.probabilities().iter().zip(&lp.b).map(|(w, b)| w * b).sum();
        assert!(centered.abs() < 1e-10);
        assert!(lp.v.iter().all(|v| *v >= 0.0));
        assert!(lp.sigma_bar >= lp.sigma_star && lp.sigma_star >= 0.0);
        let gap = lp.sigma_bar.powi(2) - lp.sigma_star.powi(2);
        let want = lp.a_star.powi(2) * l / (1.0 - mu).powi(3);
        assert!((gap - want).abs() <= 1e-12 * lp.sigma_bar.powi(2), "{gap} vs {want}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shift_and_scale_covariance(seed in 0u64..10_000, c in -1.0f64..1.0, s in 0.1f64..10.0) {
        let mut r = rng(seed);
        let p = random_stochastic(&mut r, 3, 0.05);
        let values = [0.02, 0.004, -0.013];
        let base = params(&values, &p, 1.0, 0.4);

        let shifted: Vec<f64> = values.iter().map(|a| a + c).collect();
        let sh = params(&shifted, &p, 1.0, 0.4);
        prop_assert!((sh.a_star - base.a_star - c).abs() < 1e-12);
        for i in 0..3 {
            prop_assert!((sh.b[i] - base.b[i]).abs() < 1e-12);
            prop_assert!((sh.g[i] - base.g[i]).abs() < 1e-10);
            prop_assert!((sh.v[i] - base.v[i]).abs() < 1e-10);
        }
        prop_assert!((sh.sigma_sq - base.sigma_sq).abs() < 1e-10);

        let scaled: Vec<f64> = values.iter().map(|a| a * s).collect();
        let sc = params(&scaled, &p, 1.0, 0.4);
        prop_assert!((sc.a_star - s * base.a_star).abs() < 1e-12);
        for i in 0..3 {
            prop_assert!((sc.b[i] - s * base.b[i]).abs() < 1e-12);
            prop_assert!((sc.g[i] - s * base.g[i]).abs() < 1e-10);
        }
        prop_assert!((sc.sigma_sq / base.sigma_sq - s * s).abs() < 1e-9 * s * s);
    }
}

#[test]
fn sigma_star_increases_with_branching_ratio() {
    let p = tm(vec![vec![0.7, 0.3], vec![0.4, 0.6]]);
    let mut last = 0.0;
    for k in 0..100 {
        let mu = k as f64 / 100.0;
        let lp = params(&[0.005, -0.005], &p, 1.0, mu);
        assert!(lp.sigma_star > last, "mu={mu}");
        last = lp.sigma_star;
    }
}

#[test]
fn plus_minus_one_drift_is_two_pi_one_minus_one() {
    let mut r = rng(8);
    for _ in 0..1000 {
        let p: f64 = r.random_range(0.01..0.99);
        let q: f64 = r.random_range(0.01..0.99);
        let m = tm(vec![vec![1.0 - p, p], vec![q, 1.0 - q]]);
        let pi = stationary_distribution(&m).unwrap();
        let lp = params(&[1.0, -1.0], &m, 1.0, 0.0);
        assert!((lp.a_star - (2.0 * pi.get(0) - 1.0)).abs() < 1e-12);
    }
}

#[test]
fn sigma_squared_matches_chain_variance_monte_carlo() {
    let mut r = rng(31);
    let p = random_stochastic(&mut r, 3, 0.05);
    let values = [0.01, 0.005, -0.01];
    let lp = params(&values, &p, 1.0, 0.0);
    let mc = chain_variance_mc(&values, &p, 2_000_000, 100, 17);
    assert!((mc / lp.sigma_sq - 1.0).abs() < 0.05, "mc {mc} vs {}", lp.sigma_sq);
}

#[test]
fn reducible_chain_is_reported() {
    // two closed classes: stationary law is not unique
    let p = tm(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    assert!(stationary_distribution(&p).is_err());
}
