//! Walk-forward mid-price prediction and its classification scoring.
//!
//! Four predictors of `S(t)` given `S(0) = s0`:
//!
//! ```text
//! DiffusiveMean       s0 + a* λ/(1−μ̂) t
//! DiffusiveNoisy      mean over draws of s0 + a* λ/(1−μ̂) t + σ̄ √t Z
//! JumpDiffusionNoisy  mean over draws of s0 + N(t) a* + vol √t Z,  N(t) a simulated Hawkes count
//! MonteCarlo          mean endpoint of simulated compound Hawkes paths
//! ```

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{sample_std, select_model, CalibrationConfig, GchpModel, VolatilityConvention};
use crate::error::{Error, Result};
use crate::hawkes::{simulate_count, simulate_with};
use crate::lob::MidSeries;
use crate::rng::{derive_seed, rng_from_seed};
use crate::states::{step_chain, ModelKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    DiffusiveMean,
    DiffusiveNoisy,
    JumpDiffusionNoisy,
    MonteCarlo,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::DiffusiveMean,
        Method::DiffusiveNoisy,
        Method::JumpDiffusionNoisy,
        Method::MonteCarlo,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::DiffusiveMean => "diffusive-mean",
            Method::DiffusiveNoisy => "diffusive-noisy",
            Method::JumpDiffusionNoisy => "jump-diffusion-noisy",
            Method::MonteCarlo => "monte-carlo",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect();
        match key.as_str() {
            "diffusivemean" | "mean" => Ok(Method::DiffusiveMean),
            "diffusivenoisy" | "noisy" => Ok(Method::DiffusiveNoisy),
            "jumpdiffusionnoisy" | "jumpdiffusion" => Ok(Method::JumpDiffusionNoisy),
            "montecarlo" | "mc" => Ok(Method::MonteCarlo),
            _ => Err(Error::Config(format!(
                "unknown method `{s}` (expected diffusive-mean, diffusive-noisy, jump-diffusion-noisy or monte-carlo)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictConfig {
    pub train_len: f64,
    pub test_len: f64,
    pub step: f64,
    pub alpha3: f64,
    pub alpha2: f64,
    pub method: Method,
    pub paths: usize,
    pub draws: usize,
    pub seed: u64,
    pub convention: VolatilityConvention,
}

impl Default for PredictConfig {
    fn default() -> Self {
        Self {
            train_len: 3.0 * 3600.0,
            test_len: 2.0 * 3600.0,
            step: 3600.0,
            alpha3: 0.025,
            alpha2: 0.04,
            method: Method::DiffusiveMean,
            paths: 250,
            draws: 1000,
            seed: 0,
            convention: VolatilityConvention::Derived,
        }
    }
}

impl PredictConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be > 0, got {v}")))
            }
        };
        positive("train", self.train_len)?;
        positive("test", self.test_len)?;
        positive("step", self.step)?;
        positive("alpha3", self.alpha3)?;
        positive("alpha2", self.alpha2)?;
        if self.paths == 0 {
            return Err(Error::Config("paths must be >= 1".into()));
        }
        if self.draws == 0 {
            return Err(Error::Config("draws must be >= 1".into()));
        }
        Ok(())
    }
}

fn check_horizon(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("prediction horizon must be > 0, got {t}")))
    }
}

/// `s0 + a* λ/(1−μ̂) t`.
pub fn predict_diffusive_mean(model: &GchpModel, s0: f64, t: f64) -> Result<f64> {
    check_horizon(t)?;
    Ok(s0 + model.a_star() * model.event_rate() * t)
}

fn mean_normal(draws: usize, rng: &mut impl rand::Rng) -> f64 {
    let sum: f64 = (0..draws).map(|_| -> f64 { StandardNormal.sample(rng) }).sum();
    sum / draws as f64
}

/// Average of `draws` Gaussian perturbations of the mean prediction with
/// volatility `σ̄`.
pub fn predict_diffusive_noisy(model: &GchpModel, s0: f64, t: f64, draws: usize, seed: u64) -> Result<f64> {
    if draws == 0 {
        return Err(Error::InvalidParams("draws must be >= 1".into()));
    }
    let mean = predict_diffusive_mean(model, s0, t)?;
    let mut rng = rng_from_seed(seed);
    Ok(mean + model.limits.sigma_bar * t.sqrt() * mean_normal(draws, &mut rng))
}

/// Each draw simulates a Hawkes count on `[0, t]` and adds a Gaussian term
/// whose scale follows `convention`.
pub fn predict_jump_diffusion_noisy(
    model: &GchpModel,
    s0: f64,
    t: f64,
    draws: usize,
    seed: u64,
    convention: VolatilityConvention,
) -> Result<f64> {
    check_horizon(t)?;
    if draws == 0 {
        return Err(Error::InvalidParams("draws must be >= 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    let mut count_sum = 0.0;
    let mut z_sum = 0.0;
    for _ in 0..draws {
        count_sum += simulate_count(&model.hawkes, t, &mut rng) as f64;
        let z: f64 = StandardNormal.sample(&mut rng);
        z_sum += z;
    }
    let vol = convention.coefficient(&model.limits, &model.hawkes);
    let n = draws as f64;
    Ok(s0 + model.a_star() * count_sum / n + vol * t.sqrt() * z_sum / n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloPrediction {
    pub mean: f64,
    pub endpoints: Vec<f64>,
}

/// Endpoint of one simulated path: fresh Hawkes times on `[0, t]`, chain
/// stepped from `state` at each event.
fn simulate_endpoint(model: &GchpModel, s0: f64, state: usize, t: f64, seed: u64) -> f64 {
    let mut rng = rng_from_seed(seed);
    let events = simulate_with(&model.hawkes, t, &mut rng);
    let mut state = state;
    let mut s = s0;
    for _ in events {
        state = step_chain(&model.transition, state, rng.random());
        s += model.space.value(state);
    }
    s
}

/// Mean endpoint over `paths` simulated paths; path `i` uses the seed
/// derived from `(seed, i)`, so the result does not depend on scheduling.
pub fn predict_monte_carlo(
    model: &GchpModel,
    s0: f64,
    last_state: usize,
    t: f64,
    paths: usize,
    seed: u64,
) -> Result<MonteCarloPrediction> {
    check_horizon(t)?;
    if paths == 0 {
        return Err(Error::InvalidParams("paths must be >= 1".into()));
    }
    if last_state >= model.space.len() {
        return Err(Error::InvalidParams(format!(
            "state {last_state} out of range for {} states",
            model.space.len()
        )));
    }
    let endpoints: Vec<f64> = (0..paths as u64)
        .into_par_iter()
        .map(|i| simulate_endpoint(model, s0, last_state, t, derive_seed(seed, i)))
        .collect();
    let mean = endpoints.iter().sum::<f64>() / paths as f64;
    Ok(MonteCarloPrediction { mean, endpoints })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Up,
    Stationary,
    Down,
}

impl Direction {
    pub const ALL: [Direction; 3] = [Direction::Up, Direction::Stationary, Direction::Down];

    pub fn index(&self) -> usize {
        match self {
            Direction::Up => 0,
            Direction::Stationary => 1,
            Direction::Down => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Activity {
    Volatile,
    Calm,
}

impl Activity {
    pub const ALL: [Activity; 2] = [Activity::Volatile, Activity::Calm];

    pub fn index(&self) -> usize {
        match self {
            Activity::Volatile => 0,
            Activity::Calm => 1,
        }
    }
}

/// Moves of exactly `±alpha3` are `Stationary`.
pub fn classify3(delta: f64, alpha3: f64) -> Direction {
    if delta > alpha3 {
        Direction::Up
    } else if delta < -alpha3 {
        Direction::Down
    } else {
        Direction::Stationary
    }
}

/// Moves of exactly `±alpha2` are `Calm`.
pub fn classify2(delta: f64, alpha2: f64) -> Activity {
    if delta.abs() > alpha2 {
        Activity::Volatile
    } else {
        Activity::Calm
    }
}

/// Starts of every walk-forward window that fits in the session.
pub fn window_starts(session_len: f64, train: f64, test: f64, step: f64) -> Vec<f64> {
    let mut out = Vec::new();
    if !(step > 0.0) {
        return out;
    }
    let slack = 1e-9 * session_len.abs().max(1.0);
    let mut k = 0u64;
    loop {
        let s = k as f64 * step;
        if s + train + test > session_len + slack {
            break;
        }
        out.push(s);
        k += 1;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub window: usize,
    pub start: f64,
    pub kind: ModelKind,
    /// Last mid of the training window; the prediction starts from it.
    pub s0: f64,
    pub s_true: f64,
    pub s_pred: f64,
    pub delta_true: f64,
    pub delta_pred: f64,
    pub class3_true: Direction,
    pub class3_pred: Direction,
    pub class2_true: Activity,
    pub class2_pred: Activity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedRecord {
    pub window: usize,
    pub start: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lower: f64,
    pub width: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// `bins` equal-width bins spanning the data; a constant sample gets one
    /// zero-width bin.
    pub fn fixed_width(xs: &[f64], bins: usize) -> Option<Self> {
        if xs.is_empty() || bins == 0 {
            return None;
        }
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi == lo {
            return Some(Self {
                lower: lo,
                width: 0.0,
                counts: vec![xs.len() as u64],
            });
        }
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0u64; bins];
        for &x in xs {
            let b = (((x - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        Some(Self {
            lower: lo,
            width,
            counts,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lower,bin_upper,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            let a = self.lower + i as f64 * self.width;
            out.push_str(&format!("{},{},{}\n", a, a + self.width, c));
        }
        out
    }
}

pub const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub mean: f64,
    pub std: f64,
    pub histogram: Histogram,
}

impl ErrorStats {
    fn from_errors(errors: &[f64]) -> Option<Self> {
        let histogram = Histogram::fixed_width(errors, HISTOGRAM_BINS)?;
        let mean = errors.iter().sum::<f64>() / errors.len() as f64;
        let std = if errors.len() > 1 { sample_std(errors) } else { 0.0 };
        Some(Self { mean, std, histogram })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub session: String,
    pub method: Method,
    pub records: Vec<WindowRecord>,
    pub skipped: Vec<SkippedRecord>,
    /// `[truth][prediction]`, in `Direction::ALL` order.
    pub confusion3: [[u64; 3]; 3],
    /// `[truth][prediction]`, in `Activity::ALL` order.
    pub confusion2: [[u64; 2]; 2],
    /// Statistics of `S_pred − S_true`.
    pub errors: Option<ErrorStats>,
}

impl BacktestReport {
    pub fn from_records(session: &str, method: Method, records: Vec<WindowRecord>, skipped: Vec<SkippedRecord>) -> Self {
        let mut confusion3 = [[0u64; 3]; 3];
        let mut confusion2 = [[0u64; 2]; 2];
        for r in &records {
            confusion3[r.class3_true.index()][r.class3_pred.index()] += 1;
            confusion2[r.class2_true.index()][r.class2_pred.index()] += 1;
        }
        let errs: Vec<f64> = records.iter().map(|r| r.s_pred - r.s_true).collect();
        Self {
            session: session.to_string(),
            method,
            errors: ErrorStats::from_errors(&errs),
            records,
            skipped,
            confusion3,
            confusion2,
        }
    }

    /// Pools several reports, e.g. one per session.
    pub fn merge(session: &str, method: Method, reports: &[BacktestReport]) -> Self {
        let records = reports.iter().flat_map(|r| r.records.iter().cloned()).collect();
        let skipped = reports.iter().flat_map(|r| r.skipped.iter().cloned()).collect();
        Self::from_records(session, method, records, skipped)
    }
}

fn predict_with(model: &GchpModel, s0: f64, t: f64, cfg: &PredictConfig, seed: u64) -> Result<f64> {
    match cfg.method {
        Method::DiffusiveMean => predict_diffusive_mean(model, s0, t),
        Method::DiffusiveNoisy => predict_diffusive_noisy(model, s0, t, cfg.draws, seed),
        Method::JumpDiffusionNoisy => predict_jump_diffusion_noisy(model, s0, t, cfg.draws, seed, cfg.convention),
        Method::MonteCarlo => predict_monte_carlo(model, s0, model.last_state, t, cfg.paths, seed).map(|p| p.mean),
    }
}

fn run_window(
    mid: &MidSeries,
    window: usize,
    start: f64,
    cfg: &PredictConfig,
    kinds: &[ModelKind],
    cal: &CalibrationConfig,
) -> std::result::Result<WindowRecord, SkippedRecord> {
    let skip = |reason: String| SkippedRecord { window, start, reason };
    let train_end = start + cfg.train_len;
    let test_end = train_end + cfg.test_len;
    // the training slice excludes every point at or after train_end
    let train = mid.window(start, train_end).map_err(|e| skip(e.to_string()))?;
    let report = select_model(&train, kinds, cal).map_err(|e| skip(e.to_string()))?;
    let model = &report.chosen_report().model;
    let s0 = *train.mids().last().expect("window has an opening point");
    let s_pred = predict_with(model, s0, cfg.test_len, cfg, derive_seed(cfg.seed, window as u64))
        .map_err(|e| skip(e.to_string()))?;
    let at = |t: f64| mid.mid_at(t).expect("non-empty series");
    let s_true = at(test_end);
    let delta_true = s_true - at(train_end);
    let delta_pred = s_pred - s0;
    Ok(WindowRecord {
        window,
        start,
        kind: report.chosen,
        s0,
        s_true,
        s_pred,
        delta_true,
        delta_pred,
        class3_true: classify3(delta_true, cfg.alpha3),
        class3_pred: classify3(delta_pred, cfg.alpha3),
        class2_true: classify2(delta_true, cfg.alpha2),
        class2_pred: classify2(delta_pred, cfg.alpha2),
    })
}

/// Slides train/test windows across one session. Each window selects a
/// model on its training slice only and predicts the mid at the end of the
/// test slice. Windows whose fit fails become skip records.
pub fn walk_forward(mid: &MidSeries, cfg: &PredictConfig, kinds: &[ModelKind], cal: &CalibrationConfig) -> Result<BacktestReport> {
    cfg.validate()?;
    let starts = window_starts(mid.horizon(), cfg.train_len, cfg.test_len, cfg.step);
    if starts.is_empty() {
        return Err(Error::InsufficientData(format!(
            "session of {}s is shorter than train {}s + test {}s",
            mid.horizon(),
            cfg.train_len,
            cfg.test_len
        )));
    }
    if mid.is_empty() {
        return Err(Error::InsufficientData("empty session".into()));
    }
    let outcomes: Vec<_> = starts
        .par_iter()
        .enumerate()
        .map(|(i, &s)| run_window(mid, i, s, cfg, kinds, cal))
        .collect();
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => records.push(r),
            Err(s) => skipped.push(s),
        }
    }
    Ok(BacktestReport::from_records(mid.session(), cfg.method, records, skipped))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub scored: usize,
    /// Per truth class, `None` when the class never occurred.
    pub recall3: [Option<f64>; 3],
    pub accuracy3: f64,
    pub recall2: [Option<f64>; 2],
    pub accuracy2: f64,
    pub error_mean: f64,
    pub error_std: f64,
    pub histogram: Histogram,
}

fn recall_and_accuracy<const K: usize>(m: &[[u64; K]; K]) -> ([Option<f64>; K], f64) {
    let mut recall = [None; K];
    let mut correct = 0u64;
    let mut total = 0u64;
    for i in 0..K {
        let row: u64 = m[i].iter().sum();
        if row > 0 {
            recall[i] = Some(m[i][i] as f64 / row as f64);
        }
        correct += m[i][i];
        total += row;
    }
    (recall, correct as f64 / total as f64)
}

pub fn report_metrics(report: &BacktestReport) -> Result<Metrics> {
    let stats = report.errors.as_ref().ok_or(Error::EmptyReport)?;
    if report.records.is_empty() {
        return Err(Error::EmptyReport);
    }
    let (recall3, accuracy3) = recall_and_accuracy(&report.confusion3);
    let (recall2, accuracy2) = recall_and_accuracy(&report.confusion2);
    Ok(Metrics {
        scored: report.records.len(),
        recall3,
        accuracy3,
        recall2,
        accuracy2,
        error_mean: stats.mean,
        error_std: stats.std,
        histogram: stats.histogram.clone(),
    })
}

/// Confusion matrices as `truth,prediction,count` rows.
pub fn confusion_csv(report: &BacktestReport) -> String {
    let mut out = String::from("problem,truth,prediction,count\n");
    for t in Direction::ALL {
        for p in Direction::ALL {
            out.push_str(&format!("3-class,{t:?},{p:?},{}\n", report.confusion3[t.index()][p.index()]));
        }
    }
    for t in Activity::ALL {
        for p in Activity::ALL {
            out.push_str(&format!("2-class,{t:?},{p:?},{}\n", report.confusion2[t.index()][p.index()]));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_boundaries() {
        assert_eq!(classify3(0.03, 0.025), Direction::Up);
        assert_eq!(classify3(0.025, 0.025), Direction::Stationary);
        assert_eq!(classify3(-0.025, 0.025), Direction::Stationary);
        assert_eq!(classify3(-0.03, 0.025), Direction::Down);
        assert_eq!(classify2(0.04, 0.04), Activity::Calm);
        assert_eq!(classify2(-0.05, 0.04), Activity::Volatile);
    }

    #[test]
    fn window_count_arithmetic() {
        let h = 3600.0;
        assert_eq!(window_starts(5.0 * h, 3.0 * h, 2.0 * h, h), vec![0.0]);
        assert_eq!(window_starts(8.0 * h, 3.0 * h, 2.0 * h, h), vec![0.0, h, 2.0 * h, 3.0 * h]);
        assert!(window_starts(4.0 * h, 3.0 * h, 2.0 * h, h).is_empty());
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("nope".parse::<Method>().is_err());
    }

    #[test]
    fn metrics_of_perfect_and_wrong_matrices() {
        let mut report = BacktestReport::from_records("s", Method::DiffusiveMean, vec![], vec![]);
        assert!(matches!(report_metrics(&report), Err(Error::EmptyReport)));
        report.confusion3 = [[2, 0, 0], [0, 3, 0], [0, 0, 5]];
        let (recall, acc) = recall_and_accuracy(&report.confusion3);
        assert_eq!(acc, 1.0);
        assert_eq!(recall, [Some(1.0); 3]);
        let (_, acc2) = recall_and_accuracy(&[[0, 2], [2, 0]]);
        assert_eq!(acc2, 0.0);
    }

    #[test]
    fn histogram_covers_every_value() {
        let xs = [-1.0, 0.0, 0.5, 2.0];
        let h = Histogram::fixed_width(&xs, 4).unwrap();
        assert_eq!(h.counts.iter().sum::<u64>(), 4);
        assert_eq!(h.counts[3], 1);
        let flat = Histogram::fixed_width(&[1.0, 1.0], 4).unwrap();
        assert_eq!(flat.counts, vec![2]);
    }
}
