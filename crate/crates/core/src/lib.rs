//! Compound Hawkes models of limit-order-book mid-price dynamics.
//!
//! The mid-price is modelled as `S(t) = S(0) + Σ_{k ≤ N(t)} a(X_k)`, where
//! `N` is a Hawkes process counting mid-price changes and `X_k` is a Markov
//! chain over move sizes. The crate covers the whole workflow:
//!
//! - [`hawkes`]: intensity, exact likelihood, MLE fitting and simulation.
//! - [`states`]: the four state-space variants, transition matrices and
//!   stationary laws.
//! - [`limits`]: diffusive-limit volatility parameters.
//! - [`lob`]: order-book ingestion and mid-price change extraction.
//! - [`diagnostics`]: clustering, inter-arrival fits and count
//!   autocorrelation.
//! - [`calibration`]: window-deviation curves, error rates and model
//!   selection.
//! - [`predict`]: diffusive and Monte-Carlo prediction with walk-forward
//!   evaluation.
//! - [`cli`]: config-driven commands behind the `gchp` binary.

pub mod calibration;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod generator;
pub mod hawkes;
pub mod limits;
pub mod lob;
pub mod optim;
pub mod predict;
pub mod rng;
pub mod states;

pub use error::{Error, Result};
pub use hawkes::{EventSeries, FitConfig, HawkesParams};
pub use limits::LimitParams;
pub use lob::{MidSeries, SessionCalendar};
pub use states::{ModelKind, PriceMoveSeries, StateSpace, StationaryDistribution, TransitionMatrix};
