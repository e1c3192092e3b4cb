//! Run configuration: one TOML file, every field defaulted, command-line
//! overrides applied on top.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::calibration::{CalibrationConfig, VolatilityConvention, DEFAULT_WINDOW_GRID};
use crate::error::{Error, Result};
use crate::generator::GchpGenerator;
use crate::hawkes::{FitConfig, HawkesParams};
use crate::lob::{FormatSpec, SessionCalendar, MAX_DEPTH};
use crate::predict::{Method, PredictConfig};
use crate::states::{ModelKind, TransitionMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub data: DataConfig,
    pub session: SessionConfig,
    pub model: ModelConfig,
    pub predict: PredictSection,
    pub diagnose: DiagnoseConfig,
    pub simulate: SimulateConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("out"),
            data: DataConfig::default(),
            session: SessionConfig::default(),
            model: ModelConfig::default(),
            predict: PredictSection::default(),
            diagnose: DiagnoseConfig::default(),
            simulate: SimulateConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Raw book files read by `ingest`.
    pub inputs: Vec<PathBuf>,
    pub format: String,
    pub depth: usize,
    pub tick: f64,
    pub delimiter: Option<char>,
    pub has_header: Option<bool>,
    pub time_scale: Option<f64>,
    pub price_scale: Option<f64>,
    pub max_reject_ratio: f64,
    pub message_path: Option<PathBuf>,
    /// Canonical event files used by `diagnose`, `fit` and `backtest`;
    /// defaults to `<out>/events`.
    pub events_dir: Option<PathBuf>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            inputs: Vec::new(),
            format: "levels-10".into(),
            depth: MAX_DEPTH,
            tick: 0.01,
            delimiter: None,
            has_header: None,
            time_scale: None,
            price_scale: None,
            max_reject_ratio: 0.01,
            message_path: None,
            events_dir: None,
        }
    }
}

/// Trading hours as `HH:MM[:SS]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub open: Option<String>,
    pub close: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub kinds: Vec<String>,
    pub nsdo_states: Option<usize>,
    pub window_grid: Vec<f64>,
    pub min_events: usize,
    pub min_windows: usize,
    pub convention: String,
    pub fit_starts: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let cal = CalibrationConfig::default();
        Self {
            kinds: ModelKind::ALL.iter().map(|k| k.name().to_string()).collect(),
            nsdo_states: None,
            window_grid: DEFAULT_WINDOW_GRID.to_vec(),
            min_events: cal.min_events,
            min_windows: cal.min_windows,
            convention: "derived".into(),
            fit_starts: FitConfig::default().starts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictSection {
    pub train: f64,
    pub test: f64,
    pub step: f64,
    pub alpha3: f64,
    pub alpha2: f64,
    pub method: String,
    pub paths: usize,
    pub draws: usize,
}

impl Default for PredictSection {
    fn default() -> Self {
        let p = PredictConfig::default();
        Self {
            train: p.train_len,
            test: p.test_len,
            step: p.step,
            alpha3: p.alpha3,
            alpha2: p.alpha2,
            method: p.method.name().into(),
            paths: p.paths,
            draws: p.draws,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnoseConfig {
    /// Window lengths for the per-window count tables.
    pub count_windows: Vec<f64>,
    pub tau: f64,
    pub deltas: Vec<f64>,
}

impl Default for DiagnoseConfig {
    fn default() -> Self {
        Self {
            count_windows: vec![60.0, 300.0],
            tau: 60.0,
            deltas: (0..=10).map(|k| k as f64 * 60.0).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub lambda0: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Price move of each state, on the half-tick grid.
    pub values: Vec<f64>,
    pub transition: Vec<Vec<f64>>,
    pub initial_state: Option<usize>,
    pub s0: f64,
    pub days: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            lambda0: 0.1,
            alpha: 0.05,
            beta: 0.1,
            values: vec![0.005, -0.005],
            transition: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            initial_state: None,
            s0: 100.0,
            days: 1,
        }
    }
}

/// Command-line values that replace config-file values when present.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub kinds: Option<Vec<String>>,
    pub method: Option<String>,
    pub paths: Option<usize>,
    pub train: Option<f64>,
    pub test: Option<f64>,
    pub step: Option<f64>,
    pub alpha3: Option<f64>,
    pub alpha2: Option<f64>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = &o.out {
            self.out = v.clone();
        }
        if let Some(v) = &o.format {
            self.data.format = v.clone();
        }
        if let Some(v) = &o.kinds {
            self.model.kinds = v.clone();
        }
        if let Some(v) = &o.method {
            self.predict.method = v.clone();
        }
        if let Some(v) = o.paths {
            self.predict.paths = v;
        }
        if let Some(v) = o.train {
            self.predict.train = v;
        }
        if let Some(v) = o.test {
            self.predict.test = v;
        }
        if let Some(v) = o.step {
            self.predict.step = v;
        }
        if let Some(v) = o.alpha3 {
            self.predict.alpha3 = v;
        }
        if let Some(v) = o.alpha2 {
            self.predict.alpha2 = v;
        }
    }

    /// SHA-256 of the effective configuration, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn format_spec(&self) -> Result<FormatSpec> {
        let d = &self.data;
        if d.depth == 0 || d.depth > MAX_DEPTH {
            return Err(Error::Config(format!("depth must be 1..={MAX_DEPTH}, got {}", d.depth)));
        }
        let mut spec = FormatSpec::named(&d.format, d.depth)?;
        if let Some(c) = d.delimiter {
            spec.delimiter = c;
        }
        if let Some(h) = d.has_header {
            spec.has_header = h;
        }
        if let Some(s) = d.time_scale {
            spec.time_scale = s;
        }
        if let Some(s) = d.price_scale {
            spec.price_scale = s;
        }
        spec.max_reject_ratio = d.max_reject_ratio;
        spec.message_path = d.message_path.clone();
        Ok(spec)
    }

    pub fn calendar(&self) -> Result<SessionCalendar> {
        let (Some(open), Some(close)) = (&self.session.open, &self.session.close) else {
            return Err(Error::Config("[session] open and close are required".into()));
        };
        SessionCalendar::new(SessionCalendar::parse_clock(open)?, SessionCalendar::parse_clock(close)?)
    }

    pub fn kinds(&self) -> Result<Vec<ModelKind>> {
        if self.model.kinds.is_empty() {
            return Err(Error::Config("no model kinds configured".into()));
        }
        self.model.kinds.iter().map(|k| k.parse()).collect()
    }

    pub fn calibration(&self) -> Result<CalibrationConfig> {
        let m = &self.model;
        if m.fit_starts == 0 {
            return Err(Error::Config("fit_starts must be >= 1".into()));
        }
        Ok(CalibrationConfig {
            min_events: m.min_events,
            window_grid: m.window_grid.clone(),
            min_windows: m.min_windows,
            nsdo_states: m.nsdo_states,
            convention: m.convention.parse::<VolatilityConvention>()?,
            fit: FitConfig {
                starts: m.fit_starts,
                ..FitConfig::default()
            },
        })
    }

    pub fn predict_config(&self) -> Result<PredictConfig> {
        let p = &self.predict;
        let cfg = PredictConfig {
            train_len: p.train,
            test_len: p.test,
            step: p.step,
            alpha3: p.alpha3,
            alpha2: p.alpha2,
            method: p.method.parse::<Method>()?,
            paths: p.paths,
            draws: p.draws,
            seed: self.seed,
            convention: self.model.convention.parse()?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn generator(&self) -> Result<GchpGenerator> {
        let s = &self.simulate;
        let hawkes = HawkesParams::new(s.lambda0, s.alpha, s.beta).map_err(|e| Error::Config(e.to_string()))?;
        let p = TransitionMatrix::from_probabilities(s.transition.clone()).map_err(|e| Error::Config(e.to_string()))?;
        GchpGenerator::new(hawkes, self.data.tick, s.values.clone(), p, s.initial_state, s.s0)
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn events_dir(&self) -> PathBuf {
        self.data.events_dir.clone().unwrap_or_else(|| self.out.join("events"))
    }

    /// Checks everything a command might need up front.
    pub fn validate(&self) -> Result<()> {
        if !(self.data.tick > 0.0 && self.data.tick.is_finite()) {
            return Err(Error::Config(format!("tick must be > 0, got {}", self.data.tick)));
        }
        self.format_spec()?;
        self.kinds()?;
        self.calibration()?;
        self.predict_config()?;
        if !(self.diagnose.tau > 0.0) {
            return Err(Error::Config("diagnose.tau must be > 0".into()));
        }
        Ok(())
    }
}
