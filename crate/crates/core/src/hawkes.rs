//! One-dimensional Hawkes process with an exponential excitation kernel.
//!
//! ```text
//! λ(t) = λ₀ + Σ_{tᵢ < t} α e^{−β (t − tᵢ)}
//! ```
//!
//! The branching ratio `α/β` is the expected number of events directly
//! triggered by one event and must stay below one for stationarity.

use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{nelder_mead, scale_to_box, scrambled_halton, Bounds, NelderMeadConfig};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HawkesParams {
    lambda0: f64,
    alpha: f64,
    beta: f64,
}

impl HawkesParams {
    pub fn new(lambda0: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(lambda0.is_finite() && lambda0 > 0.0) {
            return Err(Error::InvalidParams(format!("background intensity must be > 0, got {lambda0}")));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidParams(format!("decay must be > 0, got {beta}")));
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::InvalidParams(format!("excitation must be >= 0, got {alpha}")));
        }
        if alpha >= beta {
            return Err(Error::InvalidParams(format!(
                "branching ratio alpha/beta = {} must be < 1",
                alpha / beta
            )));
        }
        Ok(Self { lambda0, alpha, beta })
    }

    /// Homogeneous Poisson process with the given rate.
    pub fn poisson(rate: f64) -> Result<Self> {
        Self::new(rate, 0.0, 1.0)
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn branching_ratio(&self) -> f64 {
        self.alpha / self.beta
    }

    /// Long-run event rate `λ₀ / (1 − α/β)`.
    pub fn stationary_rate(&self) -> f64 {
        self.lambda0 / (1.0 - self.branching_ratio())
    }

    /// `E[N(t)]` for a process started with empty history at time 0.
    ///
    /// The mean intensity `m` solves `m' = βλ₀ − (β − α) m`, `m(0) = λ₀`.
    pub fn expected_count(&self, t: f64) -> f64 {
        let m_inf = self.stationary_rate();
        let kappa = self.beta - self.alpha;
        m_inf * t + (self.lambda0 - m_inf) * (-(-kappa * t).exp_m1()) / kappa
    }
}

pub fn branching_ratio(params: &HawkesParams) -> f64 {
    params.branching_ratio()
}

/// Strictly increasing event times on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSeries {
    times: Vec<f64>,
    horizon: f64,
}

impl EventSeries {
    pub fn new(times: Vec<f64>, horizon: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon >= 0.0) {
            return Err(Error::InvalidEvents(format!("horizon must be finite and >= 0, got {horizon}")));
        }
        if let Some(&first) = times.first() {
            if !(first >= 0.0) {
                return Err(Error::InvalidEvents(format!("negative event time {first}")));
            }
        }
        for (i, w) in times.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidEvents(format!(
                    "event times must be strictly increasing: t[{}]={} then t[{}]={}",
                    i,
                    w[0],
                    i + 1,
                    w[1]
                )));
            }
        }
        if let Some(&last) = times.last() {
            if last > horizon {
                return Err(Error::InvalidEvents(format!("event at {last} beyond horizon {horizon}")));
            }
        }
        Ok(Self { times, horizon })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// N(t): number of events at or before `t`.
    pub fn count_until(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t)
    }

    /// Number of events in the half-open interval `(a, b]`.
    pub fn count_between(&self, a: f64, b: f64) -> usize {
        self.count_until(b).saturating_sub(self.count_until(a))
    }

    pub fn interarrivals(&self) -> Vec<f64> {
        self.times.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Same events shifted by `offset`, horizon extended to match.
    pub fn shifted(&self, offset: f64) -> Result<Self> {
        Self::new(
            self.times.iter().map(|t| t + offset).collect(),
            self.horizon + offset,
        )
    }
}

/// Conditional intensity at `t`, counting only events strictly before `t`.
pub fn intensity_at(params: &HawkesParams, events: &EventSeries, t: f64) -> f64 {
    let past = events.times.partition_point(|&s| s < t);
    let excitation: f64 = events.times[..past]
        .iter()
        .map(|&s| (-params.beta * (t - s)).exp())
        .sum();
    params.lambda0 + params.alpha * excitation
}

/// Exact log-likelihood `Σ log λ(tᵢ) − ∫₀ᵀ λ(u) du` in O(n).
pub fn log_likelihood(params: &HawkesParams, events: &EventSeries) -> f64 {
    log_likelihood_raw(params.lambda0, params.alpha, params.beta, events)
}

fn log_likelihood_raw(lambda0: f64, alpha: f64, beta: f64, events: &EventSeries) -> f64 {
    let times = &events.times;
    let horizon = events.horizon;
    // decayed sum of past kernels, Σ_{j<i} e^{−β(tᵢ−tⱼ)}
    let mut decayed = 0.0;
    let mut log_sum = 0.0;
    let mut prev: Option<f64> = None;
    for &t in times {
        if let Some(p) = prev {
            decayed = (-beta * (t - p)).exp() * (1.0 + decayed);
        }
        let intensity = lambda0 + alpha * decayed;
        if !(intensity > 0.0) {
            return f64::NEG_INFINITY;
        }
        log_sum += intensity.ln();
        prev = Some(t);
    }
    let tail = match prev {
        // Σᵢ e^{−β(T−tᵢ)} = e^{−β(T−tₙ)} (1 + decayedₙ)
        Some(last) => (-beta * (horizon - last)).exp() * (1.0 + decayed),
        None => 0.0,
    };
    let compensator = lambda0 * horizon + (alpha / beta) * (times.len() as f64 - tail);
    log_sum - compensator
}

/// Ogata thinning. The intensity only decays between events, so its value
/// just after the current time bounds it until the next accepted event.
pub fn simulate(params: &HawkesParams, horizon: f64, seed: u64) -> EventSeries {
    let mut rng = rng_from_seed(seed);
    let times = simulate_with(params, horizon, &mut rng);
    EventSeries { times, horizon }
}

pub(crate) fn simulate_with<R: rand::Rng + ?Sized>(params: &HawkesParams, horizon: f64, rng: &mut R) -> Vec<f64> {
    let mut times = Vec::new();
    let mut t = 0.0;
    let mut excitation = 0.0;
    loop {
        let bound = params.lambda0 + excitation;
        let wait: f64 = Exp1.sample(rng);
        let wait = wait / bound;
        t += wait;
        if t > horizon {
            break;
        }
        excitation *= (-params.beta * wait).exp();
        let intensity = params.lambda0 + excitation;
        let u: f64 = rng.random();
        if u * bound <= intensity {
            // equal times would break strict ordering; only possible when wait underflows
            if times.last().is_some_and(|&last| t <= last) {
                continue;
            }
            times.push(t);
            excitation += params.alpha;
        }
    }
    times
}

/// Number of events of one simulated path on `[0, horizon]`.
pub(crate) fn simulate_count<R: rand::Rng + ?Sized>(params: &HawkesParams, horizon: f64, rng: &mut R) -> usize {
    let mut count = 0usize;
    let mut t = 0.0;
    let mut excitation = 0.0;
    loop {
        let bound = params.lambda0 + excitation;
        let wait: f64 = Exp1.sample(rng);
        let wait = wait / bound;
        t += wait;
        if t > horizon {
            break;
        }
        excitation *= (-params.beta * wait).exp();
        let u: f64 = rng.random();
        if u * bound <= params.lambda0 + excitation {
            count += 1;
            excitation += params.alpha;
        }
    }
    count
}

/// Search box and multi-start settings for [`fit_mle`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitConfig {
    /// Number of multi-start points.
    pub starts: usize,
    /// Seed of the Halton digit scrambling that fixes the start points.
    pub start_seed: u64,
    /// Upper bound on α/β.
    pub max_branching: f64,
    /// Background intensity box; defaults to `[1e-3, 10] × (events / T)`.
    pub lambda_bounds: Option<(f64, f64)>,
    /// Decay box; defaults to `[1/T, 1e3 × events / T]`.
    pub beta_bounds: Option<(f64, f64)>,
    /// Optional cap on α.
    pub alpha_max: Option<f64>,
    pub max_evals: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            starts: 16,
            start_seed: 0x6c62_272e_07bb_0142,
            max_branching: 0.999,
            lambda_bounds: None,
            beta_bounds: None,
            alpha_max: None,
            max_evals: 2000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HawkesFit {
    pub params: HawkesParams,
    pub log_likelihood: f64,
    /// Index of the start whose local search won.
    pub best_start: usize,
    pub evaluations: usize,
}

/// Maximum-likelihood fit by multi-start Nelder-Mead over
/// `(ln λ₀, ln β, α/β)`, each coordinate box-clipped.
pub fn fit_mle(events: &EventSeries, config: &FitConfig) -> Result<HawkesFit> {
    const MIN_EVENTS: usize = 2;
    if events.len() < MIN_EVENTS {
        return Err(Error::TooFewEvents {
            needed: MIN_EVENTS,
            got: events.len(),
        });
    }
    if config.starts == 0 {
        return Err(Error::InvalidParams("fit needs at least one start".into()));
    }
    if !(config.max_branching > 0.0 && config.max_branching < 1.0) {
        return Err(Error::InvalidParams(format!(
            "max_branching must lie in (0, 1), got {}",
            config.max_branching
        )));
    }
    let horizon = events.horizon();
    if !(horizon > 0.0) {
        return Err(Error::InvalidEvents("fit needs a positive horizon".into()));
    }
    let rate = events.len() as f64 / horizon;
    let (lam_lo, lam_hi) = config.lambda_bounds.unwrap_or((1e-3 * rate, 10.0 * rate));
    let (beta_lo, beta_hi) = config.beta_bounds.unwrap_or((1.0 / horizon, 1e3 * rate));
    if !(lam_lo > 0.0 && lam_hi >= lam_lo && beta_lo > 0.0 && beta_hi >= beta_lo) {
        return Err(Error::InvalidParams(format!(
            "bad search box: lambda [{lam_lo}, {lam_hi}], beta [{beta_lo}, {beta_hi}]"
        )));
    }
    let bounds = [
        Bounds::new(lam_lo.ln(), lam_hi.ln()),
        Bounds::new(beta_lo.ln(), beta_hi.ln()),
        Bounds::new(0.0, config.max_branching),
    ];
    let alpha_max = config.alpha_max;
    let decode = move |x: &[f64]| -> (f64, f64, f64) {
        let lambda0 = x[0].exp();
        let beta = x[1].exp();
        let mut branching = x[2];
        if let Some(cap) = alpha_max {
            branching = branching.min(cap / beta);
        }
        (lambda0, branching * beta, beta)
    };
    let objective = |x: &[f64]| {
        let (l, a, b) = decode(x);
        -log_likelihood_raw(l, a, b, events)
    };

    let coarse = NelderMeadConfig {
        max_evals: config.max_evals,
        f_tol: 1e-7,
        x_tol: 1e-4,
        ..NelderMeadConfig::default()
    };
    let polish = NelderMeadConfig {
        max_evals: config.max_evals,
        initial_step: 1e-3,
        ..NelderMeadConfig::default()
    };
    let starts = scrambled_halton(config.starts, 3, config.start_seed);
    let mut best: Option<(usize, crate::optim::Minimum)> = None;
    let mut evaluations = 0;
    let mut at_boundary = 0;
    for (i, unit) in starts.iter().enumerate() {
        let start = scale_to_box(unit, &bounds);
        let m = nelder_mead(objective, &start, &bounds, &coarse);
        evaluations += m.evals;
        if m.x[2] >= config.max_branching - 1e-6 {
            at_boundary += 1;
        }
        if best.as_ref().is_none_or(|(_, b)| m.value < b.value) {
            best = Some((i, m));
        }
    }
    if at_boundary == config.starts {
        return Err(Error::NonStationaryFit {
            boundary: config.max_branching,
        });
    }
    let (best_start, rough) = best.expect("at least one start");
    let refined = nelder_mead(objective, &rough.x, &bounds, &polish);
    evaluations += refined.evals;
    let m = if refined.value <= rough.value { refined } else { rough };
    let (lambda0, alpha, beta) = decode(&m.x);
    // α = μ̂β with μ̂ ≤ max_branching < 1, so construction cannot fail
    let params = HawkesParams::new(lambda0, alpha, beta)?;
    Ok(HawkesFit {
        params,
        log_likelihood: -m.value,
        best_start,
        evaluations,
    })
}

/// Start points `fit_mle` would use, as parameter triples. Exposed so callers
/// can check the fit against every seed point.
pub fn start_points(events: &EventSeries, config: &FitConfig) -> Vec<HawkesParams> {
    let horizon = events.horizon();
    let rate = events.len() as f64 / horizon;
    let (lam_lo, lam_hi) = config.lambda_bounds.unwrap_or((1e-3 * rate, 10.0 * rate));
    let (beta_lo, beta_hi) = config.beta_bounds.unwrap_or((1.0 / horizon, 1e3 * rate));
    let bounds = [
        Bounds::new(lam_lo.ln(), lam_hi.ln()),
        Bounds::new(beta_lo.ln(), beta_hi.ln()),
        Bounds::new(0.0, config.max_branching),
    ];
    scrambled_halton(config.starts, 3, config.start_seed)
        .iter()
        .filter_map(|u| {
            let x = scale_to_box(u, &bounds);
            let beta = x[1].exp();
            let mut branching = x[2];
            if let Some(cap) = config.alpha_max {
                branching = branching.min(cap / beta);
            }
            HawkesParams::new(x[0].exp(), branching * beta, beta).ok()
        })
        .collect()
}
