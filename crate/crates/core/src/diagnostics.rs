//! Evidence that mid-price change arrivals are not Poisson: per-window event
//! counts, maximum-likelihood fits of candidate inter-arrival laws ranked by
//! Kolmogorov-Smirnov distance, and the autocorrelation of counts in lagged
//! windows.

use std::f64::consts::SQRT_2;
use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Gamma as GammaDist};
use statrs::function::erf::erfc;
use statrs::function::gamma::digamma;

use crate::error::{Error, Result};
use crate::hawkes::EventSeries;

/// Cap applied to every fitted shape parameter.
pub const SHAPE_BOUNDS: (f64, f64) = (1e-3, 1e3);
pub const MIN_INTERARRIVALS: usize = 10;
pub const MIN_PAIRS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowCounts {
    pub tau: f64,
    pub counts: Vec<u64>,
}

impl WindowCounts {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        if self.counts.is_empty() {
            return f64::NAN;
        }
        self.total() as f64 / self.counts.len() as f64
    }
}

/// Events per consecutive `[kτ, (k+1)τ)` window; the trailing partial window
/// is dropped.
pub fn window_counts(events: &EventSeries, tau: f64) -> Result<WindowCounts> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParams(format!("window length must be > 0, got {tau}")));
    }
    let windows = (events.horizon() / tau).floor() as usize;
    let times = events.times();
    let counts = (0..windows)
        .map(|k| {
            let lo = times.partition_point(|&t| t < k as f64 * tau);
            let hi = times.partition_point(|&t| t < (k + 1) as f64 * tau);
            (hi - lo) as u64
        })
        .collect();
    Ok(WindowCounts { tau, counts })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    Exponential,
    Gamma,
    Weibull,
    Reciprocal,
    Wald,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Exponential,
        Family::Gamma,
        Family::Weibull,
        Family::Reciprocal,
        Family::Wald,
    ];

    pub fn parameters(&self) -> usize {
        match self {
            Family::Exponential => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::Exponential => "exponential",
            Family::Gamma => "gamma",
            Family::Weibull => "weibull",
            Family::Reciprocal => "reciprocal",
            Family::Wald => "wald",
        };
        f.write_str(s)
    }
}

/// A fitted inter-arrival law.
///
/// `Reciprocal` is the log-uniform law on `[lower, upper]`, taken as the
/// sample minimum and maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Fitted {
    Exponential { rate: f64 },
    Gamma { shape: f64, rate: f64 },
    Weibull { shape: f64, scale: f64 },
    Reciprocal { lower: f64, upper: f64 },
    Wald { mean: f64, shape: f64 },
}

impl Fitted {
    pub fn family(&self) -> Family {
        match self {
            Fitted::Exponential { .. } => Family::Exponential,
            Fitted::Gamma { .. } => Family::Gamma,
            Fitted::Weibull { .. } => Family::Weibull,
            Fitted::Reciprocal { .. } => Family::Reciprocal,
            Fitted::Wald { .. } => Family::Wald,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match *self {
            Fitted::Exponential { rate } => -(-rate * x).exp_m1(),
            Fitted::Gamma { shape, rate } => GammaDist::new(shape, rate).map(|g| g.cdf(x)).unwrap_or(f64::NAN),
            Fitted::Weibull { shape, scale } => -(-(x / scale).powf(shape)).exp_m1(),
            Fitted::Reciprocal { lower, upper } => {
                if x < lower {
                    0.0
                } else if x >= upper {
                    1.0
                } else {
                    (x / lower).ln() / (upper / lower).ln()
                }
            }
            Fitted::Wald { mean, shape } => wald_cdf(x, mean, shape),
        }
    }
}

fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// `ln(1 − Φ(z))`, accurate far into the tail.
fn ln_norm_sf(z: f64) -> f64 {
    if z < 25.0 {
        (0.5 * erfc(z / SQRT_2)).ln()
    } else {
        let z2 = z * z;
        -0.5 * z2 - z.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() + (1.0 - 1.0 / z2 + 3.0 / (z2 * z2)).ln()
    }
}

fn wald_cdf(x: f64, mean: f64, shape: f64) -> f64 {
    let r = (shape / x).sqrt();
    let first = norm_cdf(r * (x / mean - 1.0));
    let second = (2.0 * shape / mean + ln_norm_sf(r * (x / mean + 1.0))).exp();
    (first + second).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionFit {
    pub fitted: Fitted,
    pub ks_distance: f64,
    /// `ks_distance` plus `1/√n` per parameter beyond the first.
    pub score: f64,
}

/// Plot data: evaluation grid, empirical CDF and every fitted CDF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfTable {
    pub x: Vec<f64>,
    pub empirical: Vec<f64>,
    pub fitted: Vec<(Family, Vec<f64>)>,
}

impl CdfTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,empirical");
        for (f, _) in &self.fitted {
            out.push(',');
            out.push_str(&f.to_string());
        }
        out.push('\n');
        for i in 0..self.x.len() {
            out.push_str(&format!("{},{}", self.x[i], self.empirical[i]));
            for (_, col) in &self.fitted {
                out.push_str(&format!(",{}", col[i]));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterarrivalFits {
    /// Ascending by score. Nested families fitted to the same sample differ
    /// in KS distance by about `1/√n` through noise alone, so each extra
    /// parameter costs one such unit.
    pub ranked: Vec<DistributionFit>,
    pub samples: usize,
    pub table: CdfTable,
}

impl InterarrivalFits {
    pub fn best(&self) -> &DistributionFit {
        &self.ranked[0]
    }

    pub fn rank_of(&self, family: Family) -> Option<usize> {
        self.ranked.iter().position(|f| f.fitted.family() == family)
    }
}

/// `sup |F_n − F|` over a sorted sample.
pub fn ks_distance(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let above = (i + 1) as f64 / n - f;
            let below = f - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max)
        .clamp(0.0, 1.0)
}

fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let x2 = 1.0 / (x * x);
    acc + 1.0 / x + x2 / 2.0 + (1.0 / x) * x2 * (1.0 / 6.0 - x2 * (1.0 / 30.0 - x2 * (1.0 / 42.0 - x2 / 30.0)))
}

fn clamp_shape(k: f64) -> f64 {
    if k.is_nan() {
        SHAPE_BOUNDS.1
    } else {
        k.clamp(SHAPE_BOUNDS.0, SHAPE_BOUNDS.1)
    }
}

fn fit_gamma(mean: f64, mean_log: f64) -> Fitted {
    let s = mean.ln() - mean_log;
    let shape = if s <= 1e-12 {
        SHAPE_BOUNDS.1
    } else {
        // Minka's starting point, then Newton on ln k − ψ(k) = s
        let mut k = (3.0 - s + ((s - 3.0).powi(2) + 24.0 * s).sqrt()) / (12.0 * s);
        for _ in 0..100 {
            let f = k.ln() - digamma(k) - s;
            let df = 1.0 / k - trigamma(k);
            let next = clamp_shape(k - f / df);
            if (next - k).abs() <= 1e-12 * k {
                k = next;
                break;
            }
            k = next;
        }
        clamp_shape(k)
    };
    Fitted::Gamma {
        shape,
        rate: shape / mean,
    }
}

fn fit_weibull(xs: &[f64]) -> Fitted {
    let xmax = xs.iter().copied().fold(0.0, f64::max);
    let logs: Vec<f64> = xs.iter().map(|x| (x / xmax).ln()).collect();
    let mean_log = logs.iter().sum::<f64>() / logs.len() as f64;
    // g(k) = Σ yᵏ ln y / Σ yᵏ − 1/k − mean(ln y), increasing in k
    let g = |k: f64| -> (f64, f64) {
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for &l in &logs {
            let w = (k * l).exp();
            s0 += w;
            s1 += w * l;
            s2 += w * l * l;
        }
        let m1 = s1 / s0;
        (m1 - 1.0 / k - mean_log, s2 / s0 - m1 * m1 + 1.0 / (k * k))
    };
    let (mut lo, mut hi) = SHAPE_BOUNDS;
    let shape = if g(hi).0 < 0.0 {
        hi
    } else if g(lo).0 > 0.0 {
        lo
    } else {
        let mut k = 1.0;
        for _ in 0..200 {
            let (v, dv) = g(k);
            if v > 0.0 {
                hi = k;
            } else {
                lo = k;
            }
            let mut next = k - v / dv;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - k).abs() <= 1e-12 * k {
                k = next;
                break;
            }
            k = next;
        }
        k
    };
    let mean_pow = logs.iter().map(|l| (shape * l).exp()).sum::<f64>() / logs.len() as f64;
    Fitted::Weibull {
        shape,
        scale: xmax * mean_pow.powf(1.0 / shape),
    }
}

fn fit_wald(xs: &[f64], mean: f64) -> Fitted {
    let n = xs.len() as f64;
    let denom: f64 = xs.iter().map(|x| 1.0 / x - 1.0 / mean).sum();
    // shape/mean is the dimensionless shape parameter that gets capped
    let ratio = if denom > 0.0 { n / denom / mean } else { SHAPE_BOUNDS.1 };
    Fitted::Wald {
        mean,
        shape: clamp_shape(ratio) * mean,
    }
}

/// Maximum-likelihood fits of the five candidate laws to the positive
/// inter-arrival times, ranked by parsimony-penalised KS distance.
pub fn fit_interarrival_distributions(events: &EventSeries) -> Result<InterarrivalFits> {
    let mut xs: Vec<f64> = events.interarrivals().into_iter().filter(|x| *x > 0.0).collect();
    fit_sample(&mut xs)
}

pub fn fit_sample(xs: &mut [f64]) -> Result<InterarrivalFits> {
    if xs.len() < MIN_INTERARRIVALS {
        return Err(Error::TooFewSamples {
            needed: MIN_INTERARRIVALS,
            got: xs.len(),
        });
    }
    if xs.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::InvalidParams("inter-arrival samples must be finite and > 0".into()));
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let mean_log = xs.iter().map(|x| x.ln()).sum::<f64>() / n;

    let candidates = [
        Fitted::Exponential { rate: 1.0 / mean },
        fit_gamma(mean, mean_log),
        fit_weibull(xs),
        Fitted::Reciprocal {
            lower: xs[0],
            upper: xs[xs.len() - 1],
        },
        fit_wald(xs, mean),
    ];
    let mut ranked: Vec<DistributionFit> = candidates
        .iter()
        .map(|&fitted| {
            let ks = ks_distance(xs, |x| fitted.cdf(x));
            DistributionFit {
                fitted,
                ks_distance: ks,
                score: ks + (fitted.family().parameters() - 1) as f64 / n.sqrt(),
            }
        })
        .collect();
    ranked.sort_by(|a, b| a.score.total_cmp(&b.score));

    let table = cdf_table(xs, &candidates, 200);
    Ok(InterarrivalFits {
        ranked,
        samples: xs.len(),
        table,
    })
}

fn cdf_table(sorted: &[f64], fits: &[Fitted], points: usize) -> CdfTable {
    let n = sorted.len();
    // grid on the sample's 0.5%..99.5% range keeps the long tail from flattening the plot
    let lo = sorted[0];
    let hi = crate::states::quantile_sorted(sorted, 0.995).max(lo);
    let x: Vec<f64> = (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1).max(1) as f64)
        .collect();
    let empirical = x
        .iter()
        .map(|&v| sorted.partition_point(|&s| s <= v) as f64 / n as f64)
        .collect();
    let fitted = fits
        .iter()
        .map(|f| (f.family(), x.iter().map(|&v| f.cdf(v)).collect()))
        .collect();
    CdfTable { x, empirical, fitted }
}

#[derive(Debug)]
pub struct LagCorrelation {
    pub delta: f64,
    pub pairs: usize,
    pub correlation: Result<f64>,
}

impl LagCorrelation {
    pub fn value(&self) -> Option<f64> {
        self.correlation.as_ref().ok().copied()
    }
}

/// `C(τ, δ)`: correlation between event counts on `[t, t+τ)` and
/// `[t+τ+δ, t+2τ+δ)` with `t` stepping through `0, τ, 2τ, …`.
pub fn autocorrelation(events: &EventSeries, tau: f64, deltas: &[f64]) -> Result<Vec<LagCorrelation>> {
    autocorrelation_from(events, 0.0, tau, deltas)
}

/// As [`autocorrelation`], with windows anchored at `origin`.
pub fn autocorrelation_from(events: &EventSeries, origin: f64, tau: f64, deltas: &[f64]) -> Result<Vec<LagCorrelation>> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParams(format!("window length must be > 0, got {tau}")));
    }
    let times = events.times();
    let count = |a: f64, b: f64| -> f64 {
        (times.partition_point(|&t| t < b) - times.partition_point(|&t| t < a)) as f64
    };
    let span = events.horizon() - origin;
    Ok(deltas
        .iter()
        .map(|&delta| {
            if delta < -tau {
                return LagCorrelation {
                    delta,
                    pairs: 0,
                    correlation: Err(Error::InvalidParams(format!("lag {delta} is below -tau"))),
                };
            }
            let mut first = Vec::new();
            let mut second = Vec::new();
            let mut k = 0usize;
            loop {
                // offsets from the origin keep the bins identical under origin shifts
                let rel = k as f64 * tau;
                if rel + 2.0 * tau + delta > span {
                    break;
                }
                let t = origin + rel;
                first.push(count(t, t + tau));
                let s = origin + rel + tau + delta;
                second.push(count(s, s + tau));
                k += 1;
            }
            let pairs = first.len();
            let correlation = if pairs < MIN_PAIRS {
                Err(Error::InsufficientData(format!(
                    "lag {delta}: {pairs} window pairs, need {MIN_PAIRS}"
                )))
            } else {
                pearson(&first, &second).ok_or_else(|| {
                    Error::InsufficientData(format!("lag {delta}: window counts have zero variance"))
                })
            };
            LagCorrelation {
                delta,
                pairs,
                correlation,
            }
        })
        .collect())
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// `(delta, C)` rows for plotting; lags that failed are omitted.
pub fn autocorrelation_csv(rows: &[LagCorrelation]) -> String {
    let mut out = String::from("delta,pairs,correlation\n");
    for r in rows {
        if let Some(c) = r.value() {
            out.push_str(&format!("{},{},{}\n", r.delta, r.pairs, c));
        }
    }
    out
}
