//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use gchp::hawkes::HawkesParams;
use gchp::states::TransitionMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let m = 0.5 * (a + b);
    (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
}

fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let left = simpson(f, a, m);
    let right = simpson(f, m, b);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive(f, a, m, left, tol / 2.0, depth - 1) + adaptive(f, m, b, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    adaptive(f, a, b, simpson(f, a, b), tol, 50)
}

/// Intensity from the defining sum over strictly earlier events.
pub fn direct_intensity(l: f64, a: f64, b: f64, times: &[f64], t: f64) -> f64 {
    l + times.iter().filter(|&&s| s < t).map(|&s| a * (-b * (t - s)).exp()).sum::<f64>()
}

/// Log-likelihood with the log-intensity sum taken term by term and the
/// compensator integrated numerically between consecutive events.
pub fn quadrature_log_likelihood(l: f64, a: f64, b: f64, times: &[f64], horizon: f64) -> f64 {
    let log_sum: f64 = times.iter().map(|&t| direct_intensity(l, a, b, times, t).ln()).sum();
    let mut knots = vec![0.0];
    knots.extend_from_slice(times);
    knots.push(horizon);
    let mut compensator = 0.0;
    for w in knots.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        // on (lo, hi] the earlier events are exactly those ≤ lo
        let past: Vec<f64> = times.iter().copied().filter(|&s| s <= lo).collect();
        let f = move |u: f64| l + past.iter().map(|&s| a * (-b * (u - s)).exp()).sum::<f64>();
        compensator += integrate(&f, lo, hi, 1e-13);
    }
    log_sum - compensator
}

/// Random sorted event times on `(0, horizon)`.
pub fn random_times(r: &mut ChaCha8Rng, n: usize, horizon: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| r.random::<f64>() * horizon).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Random row-stochastic matrix with every entry at least `floor`.
pub fn random_stochastic(r: &mut ChaCha8Rng, n: usize, floor: f64) -> TransitionMatrix {
    let rows = (0..n)
        .map(|_| {
            let raw: Vec<f64> = (0..n).map(|_| r.random::<f64>()).collect();
            let s: f64 = raw.iter().sum();
            let free = 1.0 - floor * n as f64;
            let mut row: Vec<f64> = raw.iter().map(|x| floor + free * x / s).collect();
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|x| *x /= total);
            row
        })
        .collect();
    TransitionMatrix::from_probabilities(rows).unwrap()
}

/// Monte-Carlo estimate of `lim Var(Σ_{k≤m} a(X_k)) / m` from one long
/// chain path started in state 0: the sample autocovariances summed over
/// lags `|h| ≤ max_lag`. `max_lag` must exceed the mixing time by a wide
/// margin; beyond it the truncation bias is negligible.
pub fn chain_variance_mc(values: &[f64], p: &TransitionMatrix, steps: usize, max_lag: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let cumulative: Vec<Vec<f64>> = p
        .rows()
        .iter()
        .map(|row| {
            row.iter()
                .scan(0.0, |acc, x| {
                    *acc += x;
                    Some(*acc)
                })
                .collect()
        })
        .collect();
    let mut state = 0usize;
    let step = |r: &mut ChaCha8Rng, state: &mut usize| {
        let u: f64 = r.random();
        *state = cumulative[*state].iter().position(|&c| u < c).unwrap_or(values.len() - 1);
    };
    // burn-in
    for _ in 0..1000 {
        step(&mut r, &mut state);
    }
    let mut xs = Vec::with_capacity(steps);
    for _ in 0..steps {
        step(&mut r, &mut state);
        xs.push(values[state]);
    }
    let mean = xs.iter().sum::<f64>() / steps as f64;
    xs.iter_mut().for_each(|x| *x -= mean);
    let autocov = |h: usize| xs[h..].iter().zip(&xs).map(|(a, b)| a * b).sum::<f64>() / steps as f64;
    autocov(0) + 2.0 * (1..=max_lag).map(autocov).sum::<f64>()
}

/// Mean and standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

pub fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

pub fn hawkes(l: f64, a: f64, b: f64) -> HawkesParams {
    HawkesParams::new(l, a, b).unwrap()
}

/// One-sided binomial tail `P(X ≥ k)` for `X ~ Bin(n, 1/2)`.
pub fn sign_test_p(k: usize, n: usize) -> f64 {
    let mut p = 0.0;
    let mut c = 1.0f64;
    for i in 0..=n {
        if i >= k {
            p += c;
        }
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    p / 2f64.powi(n as i32)
}
