//! Event-driven forex price forecasting.
//!
//! The pipeline: OHLC candles ([`market_data`]) → 28 technical indicators
//! ([`indicators`]) → pivot / crossover / retracement sequences ([`events`])
//! → one window per crossover ([`dataset`]) → recurrent regressors
//! ([`recurrent`], built on [`nn`]) → metrics and experiment grids
//! ([`evaluation`]).

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod events;
pub mod indicators;
pub mod market_data;
pub mod nn;
pub mod recurrent;

pub use error::{Error, Result};
