//! Fit-and-select: per-kind model fits, the empirical window-deviation
//! curve, a zero-intercept regression of `std²` on `n`, and the error rate
//! that picks the best kind.
//!
//! ```text
//! S*ᵢ      = S((i+1)n) − S(in) − (N((i+1)n) − N(in)) a*
//! std(S*ᵢ) ≈ √n σ √(λ/(1−μ̂))
//! c        = Σ n std² / Σ n²
//! error    = |(√c − σ√(λ/(1−μ̂))) / √c|
//! ```

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hawkes::{fit_mle, EventSeries, FitConfig, HawkesParams};
use crate::limits::{compute_limit_params, LimitParams};
use crate::lob::MidSeries;
use crate::states::{
    build_state_space, estimate_transition_matrix, stationary_distribution, ModelKind, StateSpace,
    StationaryDistribution, TransitionMatrix,
};

pub const DEFAULT_WINDOW_GRID: [f64; 6] = [30.0, 60.0, 120.0, 300.0, 600.0, 1200.0];

/// Which volatility coefficient stands for `std(S*ᵢ)/√n`.
///
/// `Derived` is `σ√(λ/(1−μ̂))`, i.e. `σ*`. `Printed` multiplies `σ*` by
/// `√(λ/(1−μ̂))` once more.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VolatilityConvention {
    #[default]
    Derived,
    Printed,
}

impl VolatilityConvention {
    pub fn coefficient(&self, limits: &LimitParams, hawkes: &HawkesParams) -> f64 {
        match self {
            VolatilityConvention::Derived => limits.sigma_star,
            VolatilityConvention::Printed => limits.sigma_star * hawkes.stationary_rate().sqrt(),
        }
    }
}

impl FromStr for VolatilityConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "derived" => Ok(Self::Derived),
            "printed" => Ok(Self::Printed),
            _ => Err(Error::Config(format!("unknown volatility convention `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub min_events: usize,
    pub window_grid: Vec<f64>,
    pub min_windows: usize,
    pub nsdo_states: Option<usize>,
    pub convention: VolatilityConvention,
    pub fit: FitConfig,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            min_events: 50,
            window_grid: DEFAULT_WINDOW_GRID.to_vec(),
            min_windows: 10,
            nsdo_states: None,
            convention: VolatilityConvention::Derived,
            fit: FitConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GchpModel {
    pub kind: ModelKind,
    pub hawkes: HawkesParams,
    pub space: StateSpace,
    pub transition: TransitionMatrix,
    pub stationary: StationaryDistribution,
    pub limits: LimitParams,
    /// State of the last observed move.
    pub last_state: usize,
}

impl GchpModel {
    /// Assembles a model, deriving the stationary law and limit parameters.
    pub fn from_parts(
        kind: ModelKind,
        hawkes: HawkesParams,
        space: StateSpace,
        transition: TransitionMatrix,
        last_state: usize,
    ) -> Result<Self> {
        if transition.len() != space.len() {
            return Err(Error::InvalidParams(format!(
                "{}-state space with a {}-state chain",
                space.len(),
                transition.len()
            )));
        }
        if last_state >= space.len() {
            return Err(Error::InvalidParams(format!("last state {last_state} out of range")));
        }
        let stationary = stationary_distribution(&transition)?;
        let limits = compute_limit_params(&space, &transition, &stationary, &hawkes)?;
        Ok(Self {
            kind,
            hawkes,
            space,
            transition,
            stationary,
            limits,
            last_state,
        })
    }

    pub fn a_star(&self) -> f64 {
        self.limits.a_star
    }

    /// `λ/(1−μ̂)`.
    pub fn event_rate(&self) -> f64 {
        self.hawkes.stationary_rate()
    }
}

fn tagged(kind: ModelKind) -> impl Fn(Error) -> Error {
    move |e| Error::KindFailed {
        kind,
        source: Box::new(e),
    }
}

fn check_floor(mid: &MidSeries, cfg: &CalibrationConfig) -> Result<()> {
    let got = mid.len().saturating_sub(1);
    if got < cfg.min_events {
        return Err(Error::TooFewEvents {
            needed: cfg.min_events,
            got,
        });
    }
    Ok(())
}

/// Fits one kind: Hawkes MLE on the change times, then the state space,
/// transition frequencies and limit parameters.
pub fn fit_gchp(mid: &MidSeries, kind: ModelKind, cfg: &CalibrationConfig) -> Result<GchpModel> {
    let tag = tagged(kind);
    check_floor(mid, cfg).map_err(&tag)?;
    let hawkes = fit_mle(&mid.events(), &cfg.fit).map_err(&tag)?.params;
    fit_gchp_with_hawkes(mid, kind, hawkes, cfg)
}

/// As [`fit_gchp`] with the arrival process already fitted.
pub fn fit_gchp_with_hawkes(
    mid: &MidSeries,
    kind: ModelKind,
    hawkes: HawkesParams,
    cfg: &CalibrationConfig,
) -> Result<GchpModel> {
    let tag = tagged(kind);
    check_floor(mid, cfg).map_err(&tag)?;
    let moves = mid.moves();
    let space = build_state_space(&moves, kind, cfg.nsdo_states).map_err(&tag)?;
    let states = space.classify_all(moves.deltas()).map_err(&tag)?;
    let transition = estimate_transition_matrix(&states, space.len()).map_err(&tag)?;
    let last_state = *states.last().expect("floor guarantees moves");
    GchpModel::from_parts(kind, hawkes, space, transition, last_state).map_err(tag)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: f64,
    pub std: f64,
    pub windows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedWindow {
    pub n: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DeviationCurve {
    pub points: Vec<CurvePoint>,
    pub skipped: Vec<SkippedWindow>,
}

/// Sample standard deviation of `S*ᵢ` over disjoint windows of each size.
/// Sizes that leave fewer than `min_windows` windows are skipped and
/// reported.
pub fn window_deviations(
    mid: &MidSeries,
    events: &EventSeries,
    a_star: f64,
    sizes: &[f64],
    min_windows: usize,
) -> Result<DeviationCurve> {
    let horizon = mid.horizon();
    let half = mid.tick() / 2.0;
    let mut curve = DeviationCurve::default();
    for &n in sizes {
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidParams(format!("window size must be > 0, got {n}")));
        }
        let windows = (horizon / n).floor() as usize;
        let needed = min_windows.max(2);
        if windows < needed {
            let e = Error::WindowTooLarge { window: n, windows, needed };
            curve.skipped.push(SkippedWindow {
                n,
                reason: e.to_string(),
            });
            continue;
        }
        let units = |t: f64| mid.units_at(t).unwrap_or(0);
        let values: Vec<f64> = (0..windows)
            .map(|i| {
                let (lo, hi) = (i as f64 * n, (i + 1) as f64 * n);
                let ds = (units(hi) - units(lo)) as f64 * half;
                let dn = (events.count_until(hi) - events.count_until(lo)) as f64;
                ds - dn * a_star
            })
            .collect();
        curve.points.push(CurvePoint {
            n,
            std: sample_std(&values),
            windows,
        });
    }
    Ok(curve)
}

pub(crate) fn sample_std(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (ss / (n - 1.0)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regression {
    /// Slope of `std²` against `n`, price units² per second.
    pub c: f64,
    /// Model coefficient, price units per √second.
    pub theoretical: f64,
    pub error_rate: f64,
}

/// Zero-intercept least-squares slope `Σ n·std² / Σ n²`.
pub fn regression_slope(points: &[CurvePoint]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::DegenerateCurve(format!("{} curve points, need 2", points.len())));
    }
    if points.iter().all(|p| p.std == 0.0) {
        return Err(Error::DegenerateCurve("every window deviation is zero".into()));
    }
    let num: f64 = points.iter().map(|p| p.n * p.std * p.std).sum();
    let den: f64 = points.iter().map(|p| p.n * p.n).sum();
    Ok(num / den)
}

pub fn error_rate(c: f64, theoretical: f64) -> f64 {
    let root = c.sqrt();
    ((root - theoretical) / root).abs()
}

pub fn regression_error_rate(
    curve: &[CurvePoint],
    limits: &LimitParams,
    hawkes: &HawkesParams,
    convention: VolatilityConvention,
) -> Result<Regression> {
    let c = regression_slope(curve)?;
    let theoretical = convention.coefficient(limits, hawkes);
    Ok(Regression {
        c,
        theoretical,
        error_rate: error_rate(c, theoretical),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindReport {
    pub kind: ModelKind,
    pub model: GchpModel,
    pub curve: DeviationCurve,
    pub regression: Regression,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindFailure {
    pub kind: ModelKind,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub session: String,
    pub events: usize,
    pub chosen: ModelKind,
    pub kinds: Vec<KindReport>,
    pub failures: Vec<KindFailure>,
}

impl FitReport {
    pub fn chosen_report(&self) -> &KindReport {
        self.kinds
            .iter()
            .find(|k| k.kind == self.chosen)
            .expect("chosen kind has a report")
    }

    /// `n, kind, std_empirical, std_theoretical` rows.
    pub fn curves_csv(&self) -> String {
        let mut out = String::from("kind,n,std_empirical,std_theoretical\n");
        for k in &self.kinds {
            for p in &k.curve.points {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    k.kind.name(),
                    p.n,
                    p.std,
                    k.regression.theoretical * p.n.sqrt()
                ));
            }
        }
        out
    }
}

fn evaluate_kind(mid: &MidSeries, events: &EventSeries, kind: ModelKind, hawkes: HawkesParams, cfg: &CalibrationConfig) -> Result<KindReport> {
    let model = fit_gchp_with_hawkes(mid, kind, hawkes, cfg)?;
    let tag = tagged(kind);
    let curve = window_deviations(mid, events, model.a_star(), &cfg.window_grid, cfg.min_windows).map_err(&tag)?;
    let regression = regression_error_rate(&curve.points, &model.limits, &model.hawkes, cfg.convention).map_err(&tag)?;
    Ok(KindReport {
        kind,
        model,
        curve,
        regression,
    })
}

/// Fits every kind on one shared Hawkes fit and picks the smallest error
/// rate. Ties go to the kind listed first.
pub fn select_model(mid: &MidSeries, kinds: &[ModelKind], cfg: &CalibrationConfig) -> Result<FitReport> {
    if kinds.is_empty() {
        return Err(Error::InvalidParams("no model kinds to fit".into()));
    }
    let events = mid.events();
    let shared = check_floor(mid, cfg).and_then(|_| fit_mle(&events, &cfg.fit).map(|f| f.params));
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for &kind in kinds {
        let outcome = match &shared {
            Ok(h) => evaluate_kind(mid, &events, kind, *h, cfg).map_err(|e| e.to_string()),
            Err(e) => Err(format!("{kind}: {e}")),
        };
        match outcome {
            Ok(r) => reports.push(r),
            Err(reason) => failures.push(KindFailure { kind, reason }),
        }
    }
    let chosen = reports
        .iter()
        .min_by(|a, b| a.regression.error_rate.total_cmp(&b.regression.error_rate))
        .map(|r| r.kind)
        .ok_or_else(|| {
            let reasons: Vec<String> = failures.iter().map(|f| f.reason.clone()).collect();
            Error::AllKindsFailed(reasons.join("; "))
        })?;
    Ok(FitReport {
        session: mid.session().to_string(),
        events: events.len(),
        chosen,
        kinds: reports,
        failures,
    })
}

/// One row of the cross-session model-choice summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub kind: ModelKind,
    pub sessions: usize,
    pub best_fit: usize,
    pub percent_best: f64,
    pub mean_error: f64,
    pub best_error: f64,
    pub worst_error: f64,
}

/// Per kind: how often it was chosen and its error-rate mean, minimum and
/// maximum over the sessions where it fitted.
pub fn summarize(reports: &[FitReport]) -> Vec<SummaryRow> {
    let mut by_kind: BTreeMap<usize, (ModelKind, Vec<f64>, usize)> = BTreeMap::new();
    for r in reports {
        for k in &r.kinds {
            let order = ModelKind::ALL.iter().position(|m| *m == k.kind).unwrap_or(usize::MAX);
            let entry = by_kind.entry(order).or_insert((k.kind, Vec::new(), 0));
            entry.1.push(k.regression.error_rate);
            if r.chosen == k.kind {
                entry.2 += 1;
            }
        }
    }
    let total = reports.len().max(1) as f64;
    by_kind
        .into_values()
        .map(|(kind, errors, best_fit)| SummaryRow {
            kind,
            sessions: errors.len(),
            best_fit,
            percent_best: 100.0 * best_fit as f64 / total,
            mean_error: errors.iter().sum::<f64>() / errors.len() as f64,
            best_error: errors.iter().copied().fold(f64::INFINITY, f64::min),
            worst_error: errors.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
        .collect()
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("model,best_fit,percent_best,mean_error_rate,best_error_rate,worst_error_rate\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.2},{},{},{}\n",
            r.kind, r.best_fit, r.percent_best, r.mean_error, r.best_error, r.worst_error
        ));
    }
    out
}
