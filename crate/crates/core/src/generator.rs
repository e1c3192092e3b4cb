//! Forward simulation of a compound Hawkes mid-price path: Hawkes event
//! times, a Markov chain over jump states, and `S(t) = S(0) + Σ a(X_k)`.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hawkes::{simulate_with, HawkesParams};
use crate::lob::MidSeries;
use crate::rng::rng_from_seed;
use crate::states::{step_chain, stationary_distribution, TransitionMatrix};

/// Generator parameters. State values are price moves and must sit on the
/// half-tick grid, since generated mids are stored exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GchpGenerator {
    pub hawkes: HawkesParams,
    pub tick: f64,
    pub values: Vec<f64>,
    pub transition: TransitionMatrix,
    /// Chain state before the first event; `None` draws it from the
    /// stationary law.
    pub initial_state: Option<usize>,
    pub s0: f64,
}

impl GchpGenerator {
    pub fn new(
        hawkes: HawkesParams,
        tick: f64,
        values: Vec<f64>,
        transition: TransitionMatrix,
        initial_state: Option<usize>,
        s0: f64,
    ) -> Result<Self> {
        let g = Self {
            hawkes,
            tick,
            values,
            transition,
            initial_state,
            s0,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tick.is_finite() && self.tick > 0.0) {
            return Err(Error::InvalidParams(format!("tick must be > 0, got {}", self.tick)));
        }
        if self.values.len() != self.transition.len() {
            return Err(Error::InvalidParams(format!(
                "{} state values for a {}-state chain",
                self.values.len(),
                self.transition.len()
            )));
        }
        self.unit_values()?;
        to_units(self.s0, self.tick)?;
        if let Some(s) = self.initial_state {
            if s >= self.values.len() {
                return Err(Error::InvalidParams(format!("initial state {s} out of range")));
            }
        }
        Ok(())
    }

    fn unit_values(&self) -> Result<Vec<i64>> {
        self.values
            .iter()
            .map(|&v| match to_units(v, self.tick)? {
                0 => Err(Error::InvalidParams("state values must be nonzero".into())),
                u => Ok(u),
            })
            .collect()
    }

    /// One path on `[0, horizon]`. The returned series opens at `s0` at time
    /// zero; every later point is one event.
    pub fn simulate(&self, session: &str, horizon: f64, seed: u64) -> Result<MidSeries> {
        self.validate()?;
        let units = self.unit_values()?;
        let mut rng = rng_from_seed(seed);
        let mut state = match self.initial_state {
            Some(s) => s,
            None => {
                let pi = stationary_distribution(&self.transition)?;
                let u: f64 = rng.random();
                let mut acc = 0.0;
                pi.probabilities()
                    .iter()
                    .position(|&p| {
                        acc += p;
                        u < acc
                    })
                    .unwrap_or(pi.len() - 1)
            }
        };
        let events = simulate_with(&self.hawkes, horizon, &mut rng);
        let mut level = to_units(self.s0, self.tick)?;
        let mut times = Vec::with_capacity(events.len() + 1);
        let mut mids = Vec::with_capacity(events.len() + 1);
        times.push(0.0);
        mids.push(level);
        for t in events {
            state = step_chain(&self.transition, state, rng.random());
            level += units[state];
            times.push(t);
            mids.push(level);
        }
        MidSeries::from_units(session, horizon, self.tick, times, mids)
    }
}

fn to_units(price: f64, tick: f64) -> Result<i64> {
    let u = price / (tick / 2.0);
    if !u.is_finite() || (u - u.round()).abs() > 1e-6 {
        return Err(Error::InvalidParams(format!("{price} is off the half-tick grid of tick {tick}")));
    }
    Ok(u.round() as i64)
}
