//! Event detection: ZigZag pivots (e1), moving-average crossovers (e2) and
//! retracement points (e3).

mod crossover;
mod sequence;
mod zigzag;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use crossover::{crossovers, CrossDirection, CrossEvent};
pub use sequence::{
    assemble_sequences, find_retracement, Assembly, AssemblyDiagnostics, EventSequence,
    RetraceParams, Trend,
};
pub use zigzag::{zigzag, Pivot, PivotKind, ZigZagParams};

use crate::error::{Error, Result};
use crate::indicators::{ema, sma};
use crate::market_data::CandleSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MovingAverage {
    Ema,
    Sma,
}

/// The moving-average pair whose crossings form e2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossoverParams {
    pub kind: MovingAverage,
    pub fast: usize,
    pub slow: usize,
}

impl Default for CrossoverParams {
    fn default() -> Self {
        Self {
            kind: MovingAverage::Ema,
            fast: 5,
            slow: 20,
        }
    }
}

impl CrossoverParams {
    pub fn validate(&self) -> Result<()> {
        if self.fast == 0 || self.fast >= self.slow {
            return Err(Error::config(format!(
                "crossover periods must satisfy 1 <= fast < slow, got {}/{}",
                self.fast, self.slow
            )));
        }
        Ok(())
    }

    pub fn lines(&self, close: &[f64]) -> (Vec<Option<f64>>, Vec<Option<f64>>) {
        match self.kind {
            MovingAverage::Ema => (
                ema(close, self.fast).into_iter().map(Some).collect(),
                ema(close, self.slow).into_iter().map(Some).collect(),
            ),
            MovingAverage::Sma => (sma(close, self.fast), sma(close, self.slow)),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EventConfig {
    pub zigzag: ZigZagParams,
    pub crossover: CrossoverParams,
    pub retrace: RetraceParams,
    /// Drop sequences whose crossover comes before the pivot is confirmed.
    pub causal_filter: bool,
}

impl EventConfig {
    pub fn validate(&self) -> Result<()> {
        self.zigzag.validate()?;
        self.crossover.validate()?;
        self.retrace.validate()
    }
}

/// Everything found on one series.
#[derive(Debug, Clone, PartialEq)]
pub struct EventDetection {
    pub pivots: Vec<Pivot>,
    pub crosses: Vec<CrossEvent>,
    pub assembly: Assembly,
}

impl EventDetection {
    pub fn sequences(&self) -> &[EventSequence] {
        &self.assembly.sequences
    }
}

pub fn detect_events(series: &CandleSeries, config: &EventConfig) -> Result<EventDetection> {
    config.validate()?;
    let pivots = zigzag(series, &config.zigzag)?;
    let (fast, slow) = config.crossover.lines(&series.closes());
    let crosses = crossovers(&fast, &slow)?;
    let assembly = assemble_sequences(
        &pivots,
        &crosses,
        series,
        &config.retrace,
        config.causal_filter,
    );
    Ok(EventDetection {
        pivots,
        crosses,
        assembly,
    })
}

/// Writes `kind,index,timestamp,price,direction` rows: every pivot, every
/// crossover, then the e1/e2/e3 rows of each assembled sequence.
pub fn write_events_csv(
    series: &CandleSeries,
    events: &EventDetection,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let candles = series.candles();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut rows = vec![];
    for p in &events.pivots {
        rows.push(("pivot", p.index, p.price, p.kind.as_str()));
    }
    for c in &events.crosses {
        rows.push((
            "cross",
            c.index,
            candles[c.index].close,
            c.direction.as_str(),
        ));
    }
    for s in events.sequences() {
        let trend = s.trend.as_str();
        rows.push(("e1", s.e1.index, s.e1.price, trend));
        rows.push(("e2", s.e2.index, candles[s.e2.index].close, trend));
        rows.push(("e3", s.e3_index, s.e3_price, trend));
    }
    let write = || -> std::io::Result<()> {
        writeln!(w, "kind,index,timestamp,price,direction")?;
        for (kind, index, price, direction) in rows {
            writeln!(
                w,
                "{kind},{index},{},{price},{direction}",
                candles[index].timestamp
            )?;
        }
        w.flush()
    };
    write().map_err(|e| Error::io(path, e))
}
