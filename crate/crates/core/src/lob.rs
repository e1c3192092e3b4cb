//! Limit-order-book ingestion: streaming parsers for level files, mid-price
//! change extraction, session splitting and the canonical event file.
//!
//! Two layouts are built in. `levels-10` has one row per book update with a
//! timestamp followed by `bid_price, bid_size, ask_price, ask_size` for each
//! level. `lobster-like` pairs a message file (timestamp in the first column)
//! with an order-book file holding `ask_price, ask_size, bid_price,
//! bid_size` per level, row for row. Both column maps can be overridden.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hawkes::EventSeries;
use crate::states::PriceMoveSeries;

pub const MAX_DEPTH: usize = 10;
/// Reasons kept verbatim in a parse report; the rest are only counted.
const MAX_REPORTED_REJECTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormatKind {
    Levels10,
    LobsterLike,
}

impl std::str::FromStr for FormatKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "levels-10" => Ok(FormatKind::Levels10),
            "lobster-like" => Ok(FormatKind::LobsterLike),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

/// Column indices (zero-based) of each level's fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub timestamp: usize,
    pub bid_price: Vec<usize>,
    pub bid_size: Vec<usize>,
    pub ask_price: Vec<usize>,
    pub ask_size: Vec<usize>,
}

impl ColumnMap {
    pub fn levels(depth: usize) -> Self {
        Self {
            timestamp: 0,
            bid_price: (0..depth).map(|i| 1 + 4 * i).collect(),
            bid_size: (0..depth).map(|i| 2 + 4 * i).collect(),
            ask_price: (0..depth).map(|i| 3 + 4 * i).collect(),
            ask_size: (0..depth).map(|i| 4 + 4 * i).collect(),
        }
    }

    /// Order-book file columns; the timestamp index refers to the message file.
    pub fn lobster(depth: usize) -> Self {
        Self {
            timestamp: 0,
            ask_price: (0..depth).map(|i| 4 * i).collect(),
            ask_size: (0..depth).map(|i| 1 + 4 * i).collect(),
            bid_price: (0..depth).map(|i| 2 + 4 * i).collect(),
            bid_size: (0..depth).map(|i| 3 + 4 * i).collect(),
        }
    }

    pub fn depth(&self) -> usize {
        self.bid_price.len()
    }

    fn validate(&self) -> Result<()> {
        let d = self.depth();
        if d == 0 || d > MAX_DEPTH {
            return Err(Error::Config(format!("depth must be in 1..={MAX_DEPTH}, got {d}")));
        }
        if [&self.bid_size, &self.ask_price, &self.ask_size].iter().any(|c| c.len() != d) {
            return Err(Error::Config("column map lists differ in length".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormatSpec {
    pub kind: FormatKind,
    pub delimiter: char,
    pub has_header: bool,
    pub columns: ColumnMap,
    /// Raw timestamp × time_scale = seconds.
    pub time_scale: f64,
    /// Raw price / price_scale = price units.
    pub price_scale: f64,
    /// Largest tolerated share of rejected rows.
    pub max_reject_ratio: f64,
    /// Message file for `lobster-like`; derived from the order-book file
    /// name when absent.
    pub message_path: Option<PathBuf>,
}

impl FormatSpec {
    pub fn levels_10() -> Self {
        Self::levels(MAX_DEPTH)
    }

    pub fn levels(depth: usize) -> Self {
        Self {
            kind: FormatKind::Levels10,
            delimiter: ',',
            has_header: true,
            columns: ColumnMap::levels(depth),
            time_scale: 1.0,
            price_scale: 1.0,
            max_reject_ratio: 0.01,
            message_path: None,
        }
    }

    pub fn lobster_like(depth: usize) -> Self {
        Self {
            kind: FormatKind::LobsterLike,
            delimiter: ',',
            has_header: false,
            columns: ColumnMap::lobster(depth),
            time_scale: 1.0,
            price_scale: 10_000.0,
            max_reject_ratio: 0.01,
            message_path: None,
        }
    }

    pub fn named(name: &str, depth: usize) -> Result<Self> {
        match name.parse::<FormatKind>()? {
            FormatKind::Levels10 => Ok(Self::levels(depth)),
            FormatKind::LobsterLike => Ok(Self::lobster_like(depth)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub price: f64,
    pub size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LobUpdate {
    pub timestamp: f64,
    pub bids: Vec<Level>,
    pub asks: Vec<Level>,
}

impl LobUpdate {
    pub fn best_bid(&self) -> f64 {
        self.bids[0].price
    }

    pub fn best_ask(&self) -> f64 {
        self.asks[0].price
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.best_bid() + self.best_ask())
    }

    /// Uncrossed touch and levels moving strictly away from it. Empty levels
    /// (size ≤ 0) past the touch are ignored.
    pub fn check(&self) -> std::result::Result<(), String> {
        if self.bids.is_empty() || self.asks.is_empty() {
            return Err("missing top of book".into());
        }
        if !(self.best_ask() > self.best_bid()) {
            return Err(format!("crossed book: bid {} >= ask {}", self.best_bid(), self.best_ask()));
        }
        let present = |l: &&Level| l.size > 0.0;
        let bids: Vec<f64> = self.bids.iter().skip(1).filter(present).map(|l| l.price).collect();
        let asks: Vec<f64> = self.asks.iter().skip(1).filter(present).map(|l| l.price).collect();
        let mut prev = self.best_bid();
        for p in bids {
            if !(p < prev) {
                return Err(format!("bid levels not descending at {p}"));
            }
            prev = p;
        }
        let mut prev = self.best_ask();
        for p in asks {
            if !(p > prev) {
                return Err(format!("ask levels not ascending at {p}"));
            }
            prev = p;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParseReport {
    pub path: PathBuf,
    pub rows: usize,
    pub accepted: usize,
    pub rejected: usize,
    /// `(row number, reason)` for the first rejections.
    pub reasons: Vec<(usize, String)>,
}

impl ParseReport {
    pub fn reject_ratio(&self) -> f64 {
        if self.rows == 0 {
            0.0
        } else {
            self.rejected as f64 / self.rows as f64
        }
    }

    pub fn check_ratio(&self, max_ratio: f64) -> Result<()> {
        if self.reject_ratio() > max_ratio {
            return Err(Error::RejectRatioExceeded {
                path: self.path.clone(),
                rejected: self.rejected,
                total: self.rows,
                max_ratio,
            });
        }
        Ok(())
    }
}

fn parse_field(record: &csv::StringRecord, idx: usize, what: &str) -> std::result::Result<f64, String> {
    let raw = record.get(idx).ok_or_else(|| format!("missing column {idx} ({what})"))?;
    let v: f64 = raw.trim().parse().map_err(|_| format!("bad {what} `{raw}` in column {idx}"))?;
    if !v.is_finite() {
        return Err(format!("non-finite {what} in column {idx}"));
    }
    Ok(v)
}

fn levels_from(
    record: &csv::StringRecord,
    prices: &[usize],
    sizes: &[usize],
    price_scale: f64,
) -> std::result::Result<Vec<Level>, String> {
    prices
        .iter()
        .zip(sizes)
        .map(|(&pi, &si)| {
            Ok(Level {
                price: parse_field(record, pi, "price")? / price_scale,
                size: parse_field(record, si, "size")?,
            })
        })
        .collect()
}

fn csv_reader<R: Read>(reader: R, format: &FormatSpec, has_header: bool) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .delimiter(format.delimiter as u8)
        .has_headers(has_header)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(reader)
}

/// Streaming book-update parser. Rejected rows are skipped and counted;
/// call [`LobReader::report`] after exhausting the iterator.
pub struct LobReader<R: Read> {
    book: csv::StringRecordsIntoIter<R>,
    messages: Option<csv::StringRecordsIntoIter<Box<dyn Read>>>,
    format: FormatSpec,
    report: ParseReport,
}

impl<R: Read> LobReader<R> {
    pub fn report(&self) -> &ParseReport {
        &self.report
    }

    pub fn into_report(self) -> ParseReport {
        self.report
    }

    fn reject(&mut self, reason: String) {
        self.report.rejected += 1;
        if self.report.reasons.len() < MAX_REPORTED_REJECTS {
            self.report.reasons.push((self.report.rows, reason));
        }
    }

    fn decode(&mut self, book: csv::StringRecord) -> std::result::Result<LobUpdate, String> {
        let cols = &self.format.columns;
        let raw_time = match self.messages.as_mut() {
            Some(messages) => match messages.next() {
                Some(Ok(msg)) => parse_field(&msg, cols.timestamp, "timestamp")?,
                Some(Err(e)) => return Err(format!("message file: {e}")),
                None => return Err("message file ended before order-book file".into()),
            },
            None => parse_field(&book, cols.timestamp, "timestamp")?,
        };
        let update = LobUpdate {
            timestamp: raw_time * self.format.time_scale,
            bids: levels_from(&book, &cols.bid_price, &cols.bid_size, self.format.price_scale)?,
            asks: levels_from(&book, &cols.ask_price, &cols.ask_size, self.format.price_scale)?,
        };
        update.check()?;
        Ok(update)
    }
}

impl<R: Read> Iterator for LobReader<R> {
    type Item = LobUpdate;

    fn next(&mut self) -> Option<LobUpdate> {
        loop {
            let record = self.book.next()?;
            self.report.rows += 1;
            let decoded = match record {
                Ok(rec) => self.decode(rec),
                Err(e) => Err(e.to_string()),
            };
            match decoded {
                Ok(u) => {
                    self.report.accepted += 1;
                    return Some(u);
                }
                Err(reason) => self.reject(reason),
            }
        }
    }
}

/// Parses book updates from any reader (levels layout, or lobster-like when
/// `messages` is supplied).
pub fn parse_lob_reader<R: Read>(
    reader: R,
    messages: Option<Box<dyn Read>>,
    format: &FormatSpec,
) -> Result<LobReader<R>> {
    format.columns.validate()?;
    if format.kind == FormatKind::LobsterLike && messages.is_none() {
        return Err(Error::Config("lobster-like input needs a message stream".into()));
    }
    let book = csv_reader(reader, format, format.has_header).into_records();
    let messages = messages.map(|m| csv_reader(m, format, format.has_header).into_records());
    Ok(LobReader {
        book,
        messages,
        format: format.clone(),
        report: ParseReport::default(),
    })
}

fn lobster_message_path(orderbook: &Path) -> Option<PathBuf> {
    let name = orderbook.file_name()?.to_str()?;
    name.contains("orderbook")
        .then(|| orderbook.with_file_name(name.replacen("orderbook", "message", 1)))
}

pub fn parse_lob_file(path: &Path, format: &FormatSpec) -> Result<LobReader<BufReader<File>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let messages: Option<Box<dyn Read>> = match format.kind {
        FormatKind::Levels10 => None,
        FormatKind::LobsterLike => {
            let mpath = format
                .message_path
                .clone()
                .or_else(|| lobster_message_path(path))
                .ok_or_else(|| Error::data(path, "cannot derive the message file name; set message_path"))?;
            let m = File::open(&mpath).map_err(|e| Error::io(&mpath, e))?;
            Some(Box::new(BufReader::new(m)))
        }
    };
    let mut reader = parse_lob_reader(BufReader::new(file), messages, format)?;
    reader.report.path = path.to_path_buf();
    Ok(reader)
}

/// Change-compressed mid prices of one session, stored in half-tick units.
///
/// Times are seconds from the session open. The first point is the opening
/// mid; each later point is a mid-price change event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MidSeries {
    session: String,
    horizon: f64,
    tick: f64,
    times: Vec<f64>,
    units: Vec<i64>,
}

impl MidSeries {
    pub fn new(session: impl Into<String>, horizon: f64, tick: f64, times: Vec<f64>, mids: &[f64]) -> Result<Self> {
        if !(tick.is_finite() && tick > 0.0) {
            return Err(Error::InvalidParams(format!("tick must be > 0, got {tick}")));
        }
        let half = tick / 2.0;
        let units = mids
            .iter()
            .map(|m| {
                let u = m / half;
                if (u - u.round()).abs() > 1e-6 {
                    Err(Error::InvalidParams(format!("mid {m} is off the half-tick grid ({half})")))
                } else {
                    Ok(u.round() as i64)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_units(session, horizon, tick, times, units)
    }

    pub fn from_units(session: impl Into<String>, horizon: f64, tick: f64, times: Vec<f64>, units: Vec<i64>) -> Result<Self> {
        if times.len() != units.len() {
            return Err(Error::InvalidParams("times and mids differ in length".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidEvents("mid timestamps must be strictly increasing".into()));
        }
        if units.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidEvents("consecutive mids must differ".into()));
        }
        if let (Some(&first), Some(&last)) = (times.first(), times.last()) {
            if first < 0.0 || last > horizon {
                return Err(Error::InvalidEvents(format!(
                    "mid timestamps [{first}, {last}] outside [0, {horizon}]"
                )));
            }
        }
        Ok(Self {
            session: session.into(),
            horizon,
            tick,
            times,
            units,
        })
    }

    pub fn session(&self) -> &str {
        &self.session
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn tick(&self) -> f64 {
        self.tick
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn half_tick_units(&self) -> &[i64] {
        &self.units
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn price(&self, units: i64) -> f64 {
        units as f64 * (self.tick / 2.0)
    }

    pub fn mid(&self, i: usize) -> f64 {
        self.price(self.units[i])
    }

    pub fn mids(&self) -> Vec<f64> {
        self.units.iter().map(|&u| self.price(u)).collect()
    }

    /// Index of the last point at or before `t`; the first point stands in
    /// for anything earlier.
    fn index_at(&self, t: f64) -> Option<usize> {
        if self.is_empty() {
            return None;
        }
        Some(self.times.partition_point(|&s| s <= t).saturating_sub(1))
    }

    /// Last observed mid at or before `t`.
    pub fn mid_at(&self, t: f64) -> Option<f64> {
        self.index_at(t).map(|i| self.mid(i))
    }

    pub(crate) fn units_at(&self, t: f64) -> Option<i64> {
        self.index_at(t).map(|i| self.units[i])
    }

    /// Change events: every point after the opening one.
    pub fn events(&self) -> EventSeries {
        let times = self.times.iter().skip(1).copied().collect();
        EventSeries::new(times, self.horizon).expect("mid series invariants imply a valid event series")
    }

    pub fn moves(&self) -> PriceMoveSeries {
        let half = self.tick / 2.0;
        let times = self.times.iter().skip(1).copied().collect();
        let deltas = self.units.windows(2).map(|w| (w[1] - w[0]) as f64 * half).collect();
        PriceMoveSeries::new(times, deltas, self.tick).expect("mid series invariants imply valid moves")
    }

    /// The sub-series on `[start, end)`, re-based to start at zero. Its
    /// opening point is the mid prevailing at `start`; points at or after
    /// `end` are excluded.
    pub fn window(&self, start: f64, end: f64) -> Result<MidSeries> {
        if !(end > start) {
            return Err(Error::InvalidParams(format!("empty window [{start}, {end})")));
        }
        let open = self
            .units_at(start)
            .ok_or_else(|| Error::InsufficientData("window of an empty series".into()))?;
        let mut times = vec![0.0];
        let mut units = vec![open];
        let from = self.times.partition_point(|&s| s <= start);
        let to = self.times.partition_point(|&s| s < end);
        for i in from..to {
            times.push(self.times[i] - start);
            units.push(self.units[i]);
        }
        enforce_strict_order(&mut times);
        MidSeries::from_units(self.session.clone(), end - start, self.tick, times, units)
    }

    /// All mids shifted by `half_ticks` half-ticks.
    pub fn shifted_price(&self, half_ticks: i64) -> MidSeries {
        MidSeries {
            units: self.units.iter().map(|u| u + half_ticks).collect(),
            ..self.clone()
        }
    }
}

/// Nudges ties and inversions forward by the smallest representable step.
fn enforce_strict_order(times: &mut [f64]) {
    for i in 1..times.len() {
        if !(times[i] > times[i - 1]) {
            times[i] = times[i - 1].next_up();
        }
    }
}

/// Mid prices of a time-ordered run of updates from one session, keeping
/// only changes. Mids are snapped to the half-tick grid.
pub fn extract_mid_events<I>(updates: I, tick: f64, session: &str) -> Result<(MidSeries, PriceMoveSeries)>
where
    I: IntoIterator<Item = LobUpdate>,
{
    let (times, units, horizon) = compress_updates(updates, tick, None);
    let mid = MidSeries::from_units(session, horizon, tick, times, units)?;
    let moves = mid.moves();
    Ok((mid, moves))
}

fn compress_updates<I>(updates: I, tick: f64, origin: Option<f64>) -> (Vec<f64>, Vec<i64>, f64)
where
    I: IntoIterator<Item = LobUpdate>,
{
    let half = tick / 2.0;
    let mut times: Vec<f64> = Vec::new();
    let mut units: Vec<i64> = Vec::new();
    let mut last_time = 0.0f64;
    for u in updates {
        let t = u.timestamp - origin.unwrap_or(0.0);
        last_time = last_time.max(t);
        let k = (u.mid() / half).round() as i64;
        if units.last() == Some(&k) {
            continue;
        }
        times.push(t);
        units.push(k);
    }
    enforce_strict_order(&mut times);
    let horizon = times.last().copied().unwrap_or(0.0).max(last_time);
    (times, units, horizon)
}

/// Daily trading hours, as seconds of day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionCalendar {
    pub open: f64,
    pub close: f64,
    pub day_length: f64,
}

impl SessionCalendar {
    pub fn new(open: f64, close: f64) -> Result<Self> {
        if !(0.0 <= open && open < close && close <= 86_400.0) {
            return Err(Error::Config(format!("session hours must satisfy 0 <= open < close <= 86400, got {open}..{close}")));
        }
        Ok(Self {
            open,
            close,
            day_length: 86_400.0,
        })
    }

    /// Parses `HH:MM[:SS]`.
    pub fn parse_clock(s: &str) -> Result<f64> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        if !(2..=3).contains(&parts.len()) {
            return Err(Error::Config(format!("bad clock time `{s}` (expected HH:MM[:SS])")));
        }
        let mut secs = 0.0;
        for (i, p) in parts.iter().enumerate() {
            let v: f64 = p.parse().map_err(|_| Error::Config(format!("bad clock time `{s}`")))?;
            secs += v * [3600.0, 60.0, 1.0][i];
        }
        Ok(secs)
    }

    pub fn session_length(&self) -> f64 {
        self.close - self.open
    }

    /// Day index and session-relative time for an absolute timestamp, or
    /// `None` outside trading hours.
    pub fn locate(&self, t: f64) -> Option<(i64, f64)> {
        let day = (t / self.day_length).floor();
        let tod = t - day * self.day_length;
        (self.open..=self.close)
            .contains(&tod)
            .then(|| (day as i64, tod - self.open))
    }

    pub fn session_name(day: i64) -> String {
        format!("d{day:05}")
    }
}

/// Splits a multi-day series into per-session series. Each day's first
/// in-session point opens that day, so overnight moves are never formed.
pub fn split_sessions(series: &MidSeries, calendar: &SessionCalendar) -> Result<Vec<MidSeries>> {
    let mut out: Vec<(i64, Vec<f64>, Vec<i64>)> = Vec::new();
    for (&t, &u) in series.times.iter().zip(&series.units) {
        let Some((day, rel)) = calendar.locate(t) else {
            continue;
        };
        match out.last_mut() {
            Some((d, times, units)) if *d == day => {
                if units.last() != Some(&u) {
                    times.push(rel);
                    units.push(u);
                }
            }
            _ => out.push((day, vec![rel], vec![u])),
        }
    }
    out.into_iter()
        .map(|(day, mut times, units)| {
            enforce_strict_order(&mut times);
            MidSeries::from_units(
                SessionCalendar::session_name(day),
                calendar.session_length(),
                series.tick,
                times,
                units,
            )
        })
        .collect()
}

/// Groups raw updates by session and extracts each session's mid series
/// with session-relative times.
pub fn sessions_from_updates<I>(updates: I, tick: f64, calendar: &SessionCalendar) -> Result<Vec<MidSeries>>
where
    I: IntoIterator<Item = LobUpdate>,
{
    let mut sessions = Vec::new();
    let mut current: Option<(i64, Vec<LobUpdate>)> = None;
    let flush = |day: i64, batch: Vec<LobUpdate>, sessions: &mut Vec<MidSeries>| -> Result<()> {
        let (times, units, _) = compress_updates(batch, tick, None);
        sessions.push(MidSeries::from_units(
            SessionCalendar::session_name(day),
            calendar.session_length(),
            tick,
            times,
            units,
        )?);
        Ok(())
    };
    for mut u in updates {
        let Some((day, rel)) = calendar.locate(u.timestamp) else {
            continue;
        };
        u.timestamp = rel;
        match current.as_mut() {
            Some((d, batch)) if *d == day => batch.push(u),
            _ => {
                if let Some((d, batch)) = current.take() {
                    flush(d, batch, &mut sessions)?;
                }
                current = Some((day, vec![u]));
            }
        }
    }
    if let Some((d, batch)) = current.take() {
        flush(d, batch, &mut sessions)?;
    }
    Ok(sessions)
}

/// Header lines written before the canonical table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

/// Writes the canonical `timestamp,mid` event file.
pub fn write_event_file<W: Write>(out: &mut W, series: &MidSeries, provenance: &Provenance) -> std::io::Result<()> {
    writeln!(out, "# gchp canonical mid events")?;
    writeln!(out, "# session={}", series.session)?;
    writeln!(out, "# horizon={}", series.horizon)?;
    writeln!(out, "# tick={}", series.tick)?;
    writeln!(out, "# config_hash={}", provenance.config_hash)?;
    writeln!(out, "# seed={}", provenance.seed)?;
    writeln!(out, "timestamp,mid")?;
    for i in 0..series.len() {
        writeln!(out, "{},{}", series.times[i], series.mid(i))?;
    }
    Ok(())
}

pub fn read_event_file(path: &Path) -> Result<MidSeries> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_events(BufReader::new(file), path)
}

fn read_events<R: BufRead>(reader: R, path: &Path) -> Result<MidSeries> {
    let mut session = None;
    let mut horizon = None;
    let mut tick = None;
    let mut times = Vec::new();
    let mut mids = Vec::new();
    let mut saw_header = false;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            if let Some((k, v)) = meta.trim().split_once('=') {
                match k.trim() {
                    "session" => session = Some(v.trim().to_string()),
                    "horizon" => horizon = v.trim().parse::<f64>().ok(),
                    "tick" => tick = v.trim().parse::<f64>().ok(),
                    _ => {}
                }
            }
            continue;
        }
        if !saw_header {
            saw_header = true;
            if line.starts_with("timestamp") {
                continue;
            }
        }
        let (t, m) = line
            .split_once(',')
            .ok_or_else(|| Error::data(path, format!("line {}: expected `timestamp,mid`", lineno + 1)))?;
        let t: f64 = t
            .trim()
            .parse()
            .map_err(|_| Error::data(path, format!("line {}: bad timestamp", lineno + 1)))?;
        let m: f64 = m
            .trim()
            .parse()
            .map_err(|_| Error::data(path, format!("line {}: bad mid", lineno + 1)))?;
        times.push(t);
        mids.push(m);
    }
    let tick = tick.ok_or_else(|| Error::data(path, "missing `# tick=` header"))?;
    let horizon = horizon.unwrap_or_else(|| times.last().copied().unwrap_or(0.0));
    let session = session.unwrap_or_else(|| {
        path.file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("session")
            .to_string()
    });
    MidSeries::new(session, horizon, tick, times, &mids).map_err(|e| Error::data(path, e.to_string()))
}

/// One `levels` row for a book whose touch straddles `mid`.
pub fn synthetic_book_row(timestamp: f64, mid_units: i64, tick: f64, depth: usize) -> String {
    let half = tick / 2.0;
    // an odd unit count sits between ticks: one-tick spread; otherwise two ticks
    let spread_units = if mid_units.rem_euclid(2) == 1 { 1 } else { 2 };
    let bid_units = mid_units - spread_units;
    let ask_units = mid_units + spread_units;
    let mut row = format!("{timestamp}");
    for level in 0..depth as i64 {
        let bid = (bid_units - 2 * level) as f64 * half;
        let ask = (ask_units + 2 * level) as f64 * half;
        row.push_str(&format!(",{bid},{},{ask},{}", 10 + level, 10 + level));
    }
    row
}

pub fn levels_header(depth: usize) -> String {
    let mut h = String::from("timestamp");
    for i in 1..=depth {
        h.push_str(&format!(",bid_price_{i},bid_size_{i},ask_price_{i},ask_size_{i}"));
    }
    h
}
