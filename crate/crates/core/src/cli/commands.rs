//! The five subcommands. Each is a pure function of the configuration,
//! its input files and the seed; outputs are written atomically and carry
//! the config hash and seed.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::calibration::{select_model, summarize, summary_csv, FitReport};
use crate::diagnostics::{autocorrelation, autocorrelation_csv, fit_interarrival_distributions, window_counts};
use crate::error::{Error, Result};
use crate::lob::{
    levels_header, parse_lob_file, read_event_file, sessions_from_updates, synthetic_book_row, write_event_file,
    MidSeries, ParseReport, Provenance, SessionCalendar,
};
use crate::predict::{confusion_csv, report_metrics, walk_forward, BacktestReport, Metrics};
use crate::rng::derive_seed;

use super::config::RunConfig;

/// Files written by a command, in write order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Written {
    pub files: Vec<PathBuf>,
}

impl Written {
    fn push(&mut self, p: PathBuf) {
        self.files.push(p);
    }
}

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    config_hash: &'a str,
    seed: u64,
    report: &'a T,
}

struct Ctx {
    hash: String,
    seed: u64,
}

impl Ctx {
    fn new(cfg: &RunConfig) -> Self {
        Self {
            hash: cfg.hash(),
            seed: cfg.seed,
        }
    }

    fn json<T: Serialize>(&self, path: &Path, report: &T, written: &mut Written) -> Result<()> {
        let env = Envelope {
            config_hash: &self.hash,
            seed: self.seed,
            report,
        };
        let mut text = serde_json::to_string_pretty(&env).map_err(|e| Error::data(path, e.to_string()))?;
        text.push('\n');
        write_atomic(path, text.as_bytes())?;
        written.push(path.to_path_buf());
        Ok(())
    }

    fn csv(&self, path: &Path, body: &str, written: &mut Written) -> Result<()> {
        let text = format!("# config_hash={}\n# seed={}\n{body}", self.hash, self.seed);
        write_atomic(path, text.as_bytes())?;
        written.push(path.to_path_buf());
        Ok(())
    }

    fn provenance(&self) -> Provenance {
        Provenance {
            config_hash: self.hash.clone(),
            seed: self.seed,
        }
    }

    fn events(&self, path: &Path, series: &MidSeries, written: &mut Written) -> Result<()> {
        let mut buf = Vec::new();
        write_event_file(&mut buf, series, &self.provenance()).map_err(|e| Error::io(path, e))?;
        write_atomic(path, &buf)?;
        written.push(path.to_path_buf());
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
struct SessionSummary {
    session: String,
    events: usize,
    horizon: f64,
}

#[derive(Debug, Clone, Serialize)]
struct IngestReport {
    files: Vec<ParseReport>,
    sessions: Vec<SessionSummary>,
}

/// Parses every input book file, splits it into sessions and writes one
/// canonical event file per session. A reject ratio above the cap fails
/// the command after the report is written.
pub fn cmd_ingest(cfg: &RunConfig) -> Result<Written> {
    cfg.validate()?;
    let ctx = Ctx::new(cfg);
    let format = cfg.format_spec()?;
    let calendar = cfg.calendar()?;
    if cfg.data.inputs.is_empty() {
        return Err(Error::Config("[data] inputs lists no files".into()));
    }
    for p in &cfg.data.inputs {
        if !p.exists() {
            return Err(Error::io(p, std::io::Error::new(std::io::ErrorKind::NotFound, "input file not found")));
        }
    }
    let mut written = Written::default();
    let mut reports = Vec::new();
    let mut sessions: Vec<MidSeries> = Vec::new();
    let mut breach = None;
    for path in &cfg.data.inputs {
        let mut reader = parse_lob_file(path, &format)?;
        let found = sessions_from_updates(&mut reader, cfg.data.tick, &calendar)?;
        let report = reader.into_report();
        if breach.is_none() {
            breach = report.check_ratio(format.max_reject_ratio).err();
        }
        reports.push(report);
        sessions.extend(found);
    }
    sessions.sort_by(|a, b| a.session().cmp(b.session()));
    let events_dir = cfg.events_dir();
    let mut summaries = Vec::new();
    if breach.is_none() {
        for s in &sessions {
            ctx.events(&events_dir.join(format!("{}.csv", s.session())), s, &mut written)?;
            summaries.push(SessionSummary {
                session: s.session().to_string(),
                events: s.len().saturating_sub(1),
                horizon: s.horizon(),
            });
        }
    }
    let report = IngestReport {
        files: reports,
        sessions: summaries,
    };
    ctx.json(&cfg.out.join("ingest_report.json"), &report, &mut written)?;
    match breach {
        Some(e) => Err(e),
        None => Ok(written),
    }
}

fn load_sessions(cfg: &RunConfig) -> Result<Vec<MidSeries>> {
    let dir = cfg.events_dir();
    let entries = fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::data(&dir, "no canonical event files"));
    }
    paths.iter().map(|p| read_event_file(p)).collect()
}

#[derive(Debug, Clone, Serialize)]
struct Skip {
    session: String,
    analysis: String,
    reason: String,
}

#[derive(Debug, Clone, Serialize)]
struct DiagnoseReport {
    sessions: Vec<String>,
    skipped: Vec<Skip>,
}

/// Window counts, inter-arrival fits and autocorrelation tables per
/// session. Analyses that cannot run on a session are skipped and listed.
pub fn cmd_diagnose(cfg: &RunConfig) -> Result<Written> {
    cfg.validate()?;
    let ctx = Ctx::new(cfg);
    let sessions = load_sessions(cfg)?;
    let root = cfg.out.join("diagnostics");
    let mut written = Written::default();
    let mut skipped = Vec::new();
    for s in &sessions {
        let name = s.session();
        let events = s.events();
        let dir = root.join(name);
        let skip = |analysis: &str, reason: String| Skip {
            session: name.to_string(),
            analysis: analysis.to_string(),
            reason,
        };

        let mut counts = String::from("tau,window,count\n");
        for &tau in &cfg.diagnose.count_windows {
            let wc = window_counts(&events, tau)?;
            for (i, c) in wc.counts.iter().enumerate() {
                counts.push_str(&format!("{tau},{i},{c}\n"));
            }
        }
        ctx.csv(&dir.join("window_counts.csv"), &counts, &mut written)?;

        match fit_interarrival_distributions(&events) {
            Ok(fits) => {
                ctx.csv(&dir.join("interarrival_cdf.csv"), &fits.table.to_csv(), &mut written)?;
                ctx.json(&dir.join("interarrival_fits.json"), &fits.ranked, &mut written)?;
            }
            Err(e) => skipped.push(skip("interarrival", e.to_string())),
        }

        let rows = autocorrelation(&events, cfg.diagnose.tau, &cfg.diagnose.deltas)?;
        for r in &rows {
            if let Err(e) = &r.correlation {
                skipped.push(skip("autocorrelation", e.to_string()));
            }
        }
        ctx.csv(&dir.join("autocorrelation.csv"), &autocorrelation_csv(&rows), &mut written)?;
    }
    let report = DiagnoseReport {
        sessions: sessions.iter().map(|s| s.session().to_string()).collect(),
        skipped,
    };
    ctx.json(&root.join("report.json"), &report, &mut written)?;
    Ok(written)
}

#[derive(Debug, Clone, Serialize)]
struct FitSkip {
    session: String,
    reason: String,
}

#[derive(Debug, Clone, Serialize)]
struct FitSummary {
    sessions: usize,
    fitted: usize,
    skipped: Vec<FitSkip>,
    models: Vec<crate::calibration::SummaryRow>,
}

/// Fit-and-select on every session plus the cross-session summary. Fails
/// with `AllKindsFailed` only when no session produced a fit.
pub fn cmd_fit(cfg: &RunConfig) -> Result<Written> {
    cfg.validate()?;
    let ctx = Ctx::new(cfg);
    let sessions = load_sessions(cfg)?;
    let kinds = cfg.kinds()?;
    let cal = cfg.calibration()?;
    let outcomes: Vec<Result<FitReport>> = sessions.par_iter().map(|s| select_model(s, &kinds, &cal)).collect();
    let root = cfg.out.join("fit");
    let mut written = Written::default();
    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    for (s, o) in sessions.iter().zip(outcomes) {
        match o {
            Ok(r) => {
                ctx.json(&root.join(format!("{}.json", s.session())), &r, &mut written)?;
                ctx.csv(&root.join(format!("{}_curves.csv", s.session())), &r.curves_csv(), &mut written)?;
                reports.push(r);
            }
            Err(e) => skipped.push(FitSkip {
                session: s.session().to_string(),
                reason: e.to_string(),
            }),
        }
    }
    let rows = summarize(&reports);
    ctx.csv(&root.join("summary.csv"), &summary_csv(&rows), &mut written)?;
    let summary = FitSummary {
        sessions: sessions.len(),
        fitted: reports.len(),
        skipped: skipped.clone(),
        models: rows,
    };
    ctx.json(&root.join("summary.json"), &summary, &mut written)?;
    if reports.is_empty() {
        let reasons: Vec<String> = skipped.iter().map(|s| format!("{}: {}", s.session, s.reason)).collect();
        return Err(Error::AllKindsFailed(reasons.join("; ")));
    }
    Ok(written)
}

#[derive(Debug, Clone, Serialize)]
struct BacktestSummary {
    sessions: usize,
    session_skips: Vec<FitSkip>,
    metrics: Option<Metrics>,
    pooled: BacktestReport,
}

/// Walk-forward backtest of every session, pooled into one report.
pub fn cmd_backtest(cfg: &RunConfig) -> Result<Written> {
    cfg.validate()?;
    let ctx = Ctx::new(cfg);
    let sessions = load_sessions(cfg)?;
    let kinds = cfg.kinds()?;
    let cal = cfg.calibration()?;
    let base = cfg.predict_config()?;
    let outcomes: Vec<Result<BacktestReport>> = sessions
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let pc = crate::predict::PredictConfig {
                seed: derive_seed(base.seed, i as u64),
                ..base.clone()
            };
            walk_forward(s, &pc, &kinds, &cal)
        })
        .collect();
    let root = cfg.out.join("backtest");
    let mut written = Written::default();
    let mut reports = Vec::new();
    let mut session_skips = Vec::new();
    for (s, o) in sessions.iter().zip(outcomes) {
        match o {
            Ok(r) => {
                ctx.json(&root.join(format!("{}.json", s.session())), &r, &mut written)?;
                reports.push(r);
            }
            Err(e) => session_skips.push(FitSkip {
                session: s.session().to_string(),
                reason: e.to_string(),
            }),
        }
    }
    let pooled = BacktestReport::merge("all", base.method, &reports);
    let metrics = report_metrics(&pooled).ok();
    ctx.csv(&root.join("confusion.csv"), &confusion_csv(&pooled), &mut written)?;
    let hist = pooled
        .errors
        .as_ref()
        .map(|e| e.histogram.to_csv())
        .unwrap_or_else(|| "bin_lower,bin_upper,count\n".into());
    ctx.csv(&root.join("error_histogram.csv"), &hist, &mut written)?;
    let fitting_failed = pooled.records.is_empty() && !pooled.skipped.is_empty();
    let reasons: Vec<String> = pooled.skipped.iter().map(|s| s.reason.clone()).collect();
    let summary = BacktestSummary {
        sessions: sessions.len(),
        session_skips,
        metrics,
        pooled,
    };
    ctx.json(&root.join("summary.json"), &summary, &mut written)?;
    if fitting_failed {
        return Err(Error::AllKindsFailed(reasons.join("; ")));
    }
    Ok(written)
}

/// Simulates `days` sessions from the configured generator and writes both
/// an ingestible book file and the canonical event files.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<Written> {
    cfg.validate()?;
    let ctx = Ctx::new(cfg);
    let generator = cfg.generator()?;
    let calendar: SessionCalendar = cfg.calendar()?;
    if cfg.simulate.days == 0 {
        return Err(Error::Config("simulate.days must be >= 1".into()));
    }
    let root = cfg.out.join("simulated");
    let mut written = Written::default();
    let depth = cfg.data.depth;
    let mut book = format!("{}\n", levels_header(depth));
    for day in 0..cfg.simulate.days {
        let name = SessionCalendar::session_name(day as i64);
        let series = generator.simulate(&name, calendar.session_length(), derive_seed(cfg.seed, day as u64))?;
        let offset = day as f64 * calendar.day_length + calendar.open;
        for (t, u) in series.times().iter().zip(series.half_tick_units()) {
            book.push_str(&synthetic_book_row(offset + t, *u, cfg.data.tick, depth));
            book.push('\n');
        }
        ctx.events(&root.join("events").join(format!("{name}.csv")), &series, &mut written)?;
    }
    let path = root.join("book.csv");
    ctx.csv(&path, &book, &mut written)?;
    Ok(written)
}
