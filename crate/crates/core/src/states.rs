//! Markov state spaces for price moves.
//!
//! Four variants map an observed mid-price change onto a state value `a(i)`:
//!
//! - `DO`: two states fixed at `±tick`.
//! - `2SDO`: the mean upward and the mean downward move.
//! - `4DO`: upward and downward moves split at one tick (`≥ tick` vs
//!   `[tick/2, tick)`), each cell valued at its mean.
//! - `NSDO`: moves of each sign cut at evenly spaced quantiles, each cell
//!   valued at its mean.
//!
//! States are always ordered by value, most positive first, and indexed
//! from zero.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Relative slack when comparing a move against a tick boundary.
const TICK_EPS: f64 = 1e-9;

/// Timestamped nonzero mid-price changes on a half-tick grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceMoveSeries {
    times: Vec<f64>,
    deltas: Vec<f64>,
    tick: f64,
}

impl PriceMoveSeries {
    pub fn new(times: Vec<f64>, deltas: Vec<f64>, tick: f64) -> Result<Self> {
        if !(tick.is_finite() && tick > 0.0) {
            return Err(Error::InvalidParams(format!("tick must be > 0, got {tick}")));
        }
        if times.len() != deltas.len() {
            return Err(Error::InvalidParams(format!(
                "{} timestamps but {} deltas",
                times.len(),
                deltas.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidEvents("move timestamps must be strictly increasing".into()));
        }
        let half = tick / 2.0;
        for &d in &deltas {
            if d == 0.0 {
                return Err(Error::ZeroDelta);
            }
            let units = d / half;
            if (units - units.round()).abs() > 1e-6 {
                return Err(Error::InvalidParams(format!(
                    "move {d} is not a multiple of half a tick ({half})"
                )));
            }
        }
        Ok(Self { times, deltas, tick })
    }

    /// Moves without timestamps; times are set to 1, 2, 3, ...
    pub fn from_deltas(deltas: Vec<f64>, tick: f64) -> Result<Self> {
        let times = (1..=deltas.len()).map(|i| i as f64).collect();
        Self::new(times, deltas, tick)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn tick(&self) -> f64 {
        self.tick
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    /// Each move in integer half-tick units.
    pub fn half_ticks(&self) -> Vec<i64> {
        let half = self.tick / 2.0;
        self.deltas.iter().map(|d| (d / half).round() as i64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "DO")]
    Do,
    #[serde(rename = "2SDO")]
    TwoSdo,
    #[serde(rename = "4DO")]
    FourDo,
    #[serde(rename = "NSDO")]
    NSdo,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Do, ModelKind::TwoSdo, ModelKind::FourDo, ModelKind::NSdo];

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Do => "DO",
            ModelKind::TwoSdo => "2SDO",
            ModelKind::FourDo => "4DO",
            ModelKind::NSdo => "NSDO",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GCHP{}", self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_uppercase();
        let key = key.strip_prefix("GCHP").unwrap_or(&key);
        match key {
            "DO" => Ok(ModelKind::Do),
            "2SDO" => Ok(ModelKind::TwoSdo),
            "4DO" => Ok(ModelKind::FourDo),
            "NSDO" => Ok(ModelKind::NSdo),
            _ => Err(Error::Config(format!("unknown model kind `{s}` (expected DO, 2SDO, 4DO or NSDO)"))),
        }
    }
}

/// Cells of one sign, ordered by magnitude ascending. A move of magnitude
/// `m` lands in cell `#{b in breaks : m ≥ b}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SideCells {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

impl SideCells {
    fn cell_of(&self, magnitude: f64) -> usize {
        self.breaks
            .iter()
            .take_while(|&&b| magnitude >= b * (1.0 - TICK_EPS))
            .count()
    }

    /// Builds cells from sorted magnitudes and candidate lower bounds of every
    /// cell but the first; empty cells are merged away.
    fn from_breaks(magnitudes: &[f64], candidate_breaks: &[f64], sign: f64) -> Self {
        let probe = SideCells {
            breaks: candidate_breaks.to_vec(),
            values: Vec::new(),
        };
        let cells = candidate_breaks.len() + 1;
        let mut sums = vec![0.0; cells];
        let mut counts = vec![0usize; cells];
        for &m in magnitudes {
            let c = probe.cell_of(m);
            sums[c] += m;
            counts[c] += 1;
        }
        let mut breaks = Vec::new();
        let mut values = Vec::new();
        for c in 0..cells {
            if counts[c] == 0 {
                continue;
            }
            if !values.is_empty() {
                breaks.push(candidate_breaks[c - 1]);
            }
            values.push(sign * sums[c] / counts[c] as f64);
        }
        SideCells { breaks, values }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpace {
    kind: ModelKind,
    tick: f64,
    up: SideCells,
    down: SideCells,
}

impl StateSpace {
    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn tick(&self) -> f64 {
        self.tick
    }

    pub fn len(&self) -> usize {
        self.up.values.len() + self.down.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn up_states(&self) -> usize {
        self.up.values.len()
    }

    /// State values `a(0), …, a(n−1)`, descending.
    pub fn values(&self) -> Vec<f64> {
        self.up
            .values
            .iter()
            .rev()
            .chain(self.down.values.iter())
            .copied()
            .collect()
    }

    pub fn value(&self, state: usize) -> f64 {
        let n_up = self.up_states();
        if state < n_up {
            self.up.values[n_up - 1 - state]
        } else {
            self.down.values[state - n_up]
        }
    }

    /// Breakpoints as signed prices: upward lower bounds then downward
    /// upper bounds.
    pub fn boundaries(&self) -> Vec<f64> {
        self.up
            .breaks
            .iter()
            .copied()
            .chain(self.down.breaks.iter().map(|b| -b))
            .collect()
    }

    pub fn classify(&self, delta: f64) -> Result<usize> {
        if delta == 0.0 || delta.is_nan() {
            return Err(Error::ZeroDelta);
        }
        if delta > 0.0 {
            if self.up.values.is_empty() {
                return Err(Error::OneSidedData);
            }
            let cell = self.up.cell_of(delta);
            Ok(self.up_states() - 1 - cell)
        } else {
            if self.down.values.is_empty() {
                return Err(Error::OneSidedData);
            }
            Ok(self.up_states() + self.down.cell_of(-delta))
        }
    }

    pub fn classify_all(&self, deltas: &[f64]) -> Result<Vec<usize>> {
        deltas.iter().map(|&d| self.classify(d)).collect()
    }

    /// Builds a space from explicit values (descending, positive ones first)
    /// with no breakpoints inside a sign: any upward move maps to the
    /// smallest upward state. Intended for generators and tests.
    pub fn from_values(kind: ModelKind, tick: f64, values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParams("state space needs at least one state".into()));
        }
        if values.iter().any(|v| *v == 0.0 || !v.is_finite()) {
            return Err(Error::InvalidParams("state values must be finite and nonzero".into()));
        }
        if values.windows(2).any(|w| !(w[0] > w[1])) {
            return Err(Error::InvalidParams("state values must be strictly descending".into()));
        }
        let mut up: Vec<f64> = values.iter().copied().filter(|v| *v > 0.0).collect();
        up.reverse();
        let down: Vec<f64> = values.iter().copied().filter(|v| *v < 0.0).collect();
        // cells split halfway between neighbouring magnitudes
        let mids = |mags: &[f64]| -> Vec<f64> { mags.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect() };
        let up_mags: Vec<f64> = up.clone();
        let down_mags: Vec<f64> = down.iter().map(|v| -v).collect();
        Ok(Self {
            kind,
            tick,
            up: SideCells {
                breaks: mids(&up_mags),
                values: up,
            },
            down: SideCells {
                breaks: mids(&down_mags),
                values: down,
            },
        })
    }
}

/// Default number of NSDO states (half per sign).
pub const DEFAULT_NSDO_STATES: usize = 8;

/// Type-7 (linear interpolation) sample quantile of sorted data.
pub(crate) fn quantile_sorted(sorted: &[f64], level: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * level;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn quantile_breaks(sorted: &[f64], cells: usize) -> Vec<f64> {
    let mut qs: Vec<f64> = (1..cells)
        .map(|j| quantile_sorted(sorted, j as f64 / cells as f64))
        .collect();
    qs.dedup();
    qs
}

pub fn build_state_space(moves: &PriceMoveSeries, kind: ModelKind, n: Option<usize>) -> Result<StateSpace> {
    let tick = moves.tick();
    let mut up: Vec<f64> = moves.deltas().iter().copied().filter(|d| *d > 0.0).collect();
    let mut down: Vec<f64> = moves.deltas().iter().filter(|d| **d < 0.0).map(|d| -d).collect();
    if up.is_empty() || down.is_empty() {
        return Err(Error::OneSidedData);
    }
    up.sort_by(f64::total_cmp);
    down.sort_by(f64::total_cmp);

    let (up_cells, down_cells) = match kind {
        ModelKind::Do => (
            SideCells {
                breaks: vec![],
                values: vec![tick],
            },
            SideCells {
                breaks: vec![],
                values: vec![-tick],
            },
        ),
        ModelKind::TwoSdo => (
            SideCells::from_breaks(&up, &[], 1.0),
            SideCells::from_breaks(&down, &[], -1.0),
        ),
        ModelKind::FourDo => (
            SideCells::from_breaks(&up, &[tick], 1.0),
            SideCells::from_breaks(&down, &[tick], -1.0),
        ),
        ModelKind::NSdo => {
            let n = n.unwrap_or(DEFAULT_NSDO_STATES);
            if n < 2 || n % 2 != 0 {
                return Err(Error::InvalidParams(format!("NSDO needs an even state count >= 2, got {n}")));
            }
            let per_sign = n / 2;
            (
                SideCells::from_breaks(&up, &quantile_breaks(&up, per_sign), 1.0),
                SideCells::from_breaks(&down, &quantile_breaks(&down, per_sign), -1.0),
            )
        }
    };
    Ok(StateSpace {
        kind,
        tick,
        up: up_cells,
        down: down_cells,
    })
}

pub fn classify_move(space: &StateSpace, delta: f64) -> Result<usize> {
    space.classify(delta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    probs: Vec<Vec<f64>>,
    counts: Vec<Vec<u64>>,
}

impl TransitionMatrix {
    /// Wraps a given row-stochastic matrix (no counts).
    pub fn from_probabilities(probs: Vec<Vec<f64>>) -> Result<Self> {
        let n = probs.len();
        if n == 0 {
            return Err(Error::InvalidParams("empty transition matrix".into()));
        }
        for (i, row) in probs.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidParams(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::InvalidParams(format!("row {i} has an entry outside [0, 1]")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParams(format!("row {i} sums to {s}")));
            }
        }
        let probs = probs
            .into_iter()
            .map(|row| {
                let s: f64 = row.iter().sum();
                row.into_iter().map(|p| p / s).collect()
            })
            .collect();
        Ok(Self {
            probs,
            counts: vec![vec![0; n]; n],
        })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.probs[i][j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.probs[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.probs
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| self.probs[i][j])
    }
}

/// Empirical transition frequencies; rows never left are uniform.
pub fn estimate_transition_matrix(states: &[usize], n: usize) -> Result<TransitionMatrix> {
    if n == 0 {
        return Err(Error::InvalidParams("state count must be positive".into()));
    }
    if states.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "transition estimate needs at least 2 states, got {}",
            states.len()
        )));
    }
    if let Some(&bad) = states.iter().find(|&&s| s >= n) {
        return Err(Error::InvalidParams(format!("state {bad} out of range for {n} states")));
    }
    let mut counts = vec![vec![0u64; n]; n];
    for w in states.windows(2) {
        counts[w[0]][w[1]] += 1;
    }
    let probs = counts
        .iter()
        .map(|row| {
            let total: u64 = row.iter().sum();
            if total == 0 {
                vec![1.0 / n as f64; n]
            } else {
                row.iter().map(|&c| c as f64 / total as f64).collect()
            }
        })
        .collect();
    Ok(TransitionMatrix { probs, counts })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryDistribution {
    pi: Vec<f64>,
    /// Power-iteration steps used.
    iterations: usize,
}

impl StationaryDistribution {
    pub fn probabilities(&self) -> &[f64] {
        &self.pi
    }

    pub fn get(&self, i: usize) -> f64 {
        self.pi[i]
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }
}

const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITER: usize = 1_000_000;
const AGREEMENT_TOL: f64 = 1e-10;
const MAX_CONDITION: f64 = 1e12;

/// Solves `π (P − I) = 0`, `Σπ = 1` directly: one balance equation is
/// replaced by the normalization.
pub fn stationary_by_linear_solve(p: &TransitionMatrix) -> Result<Vec<f64>> {
    let n = p.len();
    let mut a = p.to_matrix().transpose() - DMatrix::identity(n, n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let (solution, condition) = crate::limits::solve_with_condition(&a, &rhs)
        .ok_or_else(|| Error::NonConvergent("balance equations are singular (reducible chain)".into()))?;
    if condition > MAX_CONDITION {
        return Err(Error::NonConvergent(format!(
            "balance equations are ill-conditioned ({condition:.3e}); chain is likely reducible"
        )));
    }
    Ok(solution.iter().copied().collect())
}

/// Power iteration `π ← π P` from the uniform vector.
pub fn stationary_by_power_iteration(p: &TransitionMatrix) -> Result<(Vec<f64>, usize)> {
    let n = p.len();
    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for iter in 1..=POWER_MAX_ITER {
        next.iter_mut().for_each(|x| *x = 0.0);
        for (i, row) in p.rows().iter().enumerate() {
            for (j, &pij) in row.iter().enumerate() {
                next[j] += pi[i] * pij;
            }
        }
        let s: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= s);
        let diff = pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        std::mem::swap(&mut pi, &mut next);
        if diff <= POWER_TOL {
            return Ok((pi, iter));
        }
    }
    Err(Error::NonConvergent(format!(
        "power iteration did not settle within {POWER_MAX_ITER} steps (periodic chain?)"
    )))
}

/// Stationary distribution by power iteration, cross-checked against the
/// direct solve.
pub fn stationary_distribution(p: &TransitionMatrix) -> Result<StationaryDistribution> {
    let (power, iterations) = stationary_by_power_iteration(p)?;
    let direct = stationary_by_linear_solve(p)?;
    let gap = power.iter().zip(&direct).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if gap > AGREEMENT_TOL {
        return Err(Error::NonConvergent(format!(
            "power iteration and direct solve disagree by {gap:.3e}"
        )));
    }
    // the direct solve is the more accurate of the two
    let mut pi: Vec<f64> = direct.into_iter().map(|x| x.max(0.0)).collect();
    let s: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|x| *x /= s);
    Ok(StationaryDistribution { pi, iterations })
}

/// Draws the next state from row `from` with a uniform variate.
pub(crate) fn step_chain(p: &TransitionMatrix, from: usize, u: f64) -> usize {
    let row = p.row(from);
    let mut acc = 0.0;
    for (j, &pij) in row.iter().enumerate() {
        acc += pij;
        if u < acc {
            return j;
        }
    }
    // rounding left u beyond the accumulated mass: take the last reachable state
    row.iter().rposition(|&x| x > 0.0).unwrap_or(row.len() - 1)
}

/// `k` successive states after `initial` (which is not included).
pub fn simulate_chain(p: &TransitionMatrix, initial: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if initial >= p.len() {
        return Err(Error::InvalidParams(format!(
            "initial state {initial} out of range for {} states",
            p.len()
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut state = initial;
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        state = step_chain(p, state, rng.random());
        out.push(state);
    }
    Ok(out)
}
