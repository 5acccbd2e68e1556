use serde::{Deserialize, Serialize};

use super::crossover::{CrossDirection, CrossEvent};
use super::zigzag::{Pivot, PivotKind};
use crate::error::{Error, Result};
use crate::market_data::CandleSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    Up,
    Down,
}

impl Trend {
    pub fn as_str(self) -> &'static str {
        match self {
            Trend::Up => "up",
            Trend::Down => "down",
        }
    }
}

/// Retracement search: a strict local extremum of the close within
/// `local_radius` bars, no more than `lookahead` bars after the crossover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetraceParams {
    pub local_radius: usize,
    pub lookahead: usize,
}

impl Default for RetraceParams {
    fn default() -> Self {
        Self {
            local_radius: 3,
            lookahead: 60,
        }
    }
}

impl RetraceParams {
    pub fn validate(&self) -> Result<()> {
        if self.local_radius == 0 {
            return Err(Error::config("retracement local_radius must be >= 1"));
        }
        if self.lookahead <= self.local_radius {
            return Err(Error::config(
                "retracement lookahead must exceed local_radius",
            ));
        }
        Ok(())
    }
}

/// One e1 → e2 → e3 chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventSequence {
    pub e1: Pivot,
    pub e2: CrossEvent,
    pub e3_index: usize,
    /// Close at `e3_index`.
    pub e3_price: f64,
    pub trend: Trend,
}

/// First bar `t` in `(e2.index, min(e2.index + lookahead, barrier))` whose
/// close is a strict local minimum (uptrend) or maximum (downtrend) over
/// `[t - m, t + m]` and lies beyond the crossover close.
pub fn find_retracement(
    series: &CandleSeries,
    e2: &CrossEvent,
    trend: Trend,
    params: &RetraceParams,
    barrier: usize,
) -> Option<(usize, f64)> {
    let candles = series.candles();
    let m = params.local_radius;
    let len = candles.len();
    if e2.index + m >= len {
        return None;
    }
    let anchor = candles[e2.index].close;
    let end = (e2.index + params.lookahead).min(barrier).min(len);
    (e2.index + 1..end)
        .filter(|&t| t >= m && t + m < len)
        .find(|&t| {
            let c = candles[t].close;
            let beyond = match trend {
                Trend::Up => c < anchor,
                Trend::Down => c > anchor,
            };
            beyond
                && (t - m..=t + m).filter(|&j| j != t).all(|j| match trend {
                    Trend::Up => c < candles[j].close,
                    Trend::Down => c > candles[j].close,
                })
        })
        .map(|t| (t, candles[t].close))
}

/// Why pivots or crossovers did not turn into sequences.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssemblyDiagnostics {
    pub pivots: usize,
    pub crossovers: usize,
    /// Pivots paired with a matching crossover before the next pivot.
    pub eligible_crossovers: usize,
    pub missing_crossover: usize,
    pub missing_retracement: usize,
    pub causal_dropped: usize,
}

impl AssemblyDiagnostics {
    pub fn skipped(&self) -> usize {
        self.missing_retracement + self.causal_dropped
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assembly {
    pub sequences: Vec<EventSequence>,
    pub diagnostics: AssemblyDiagnostics,
}

/// Pairs each pivot with the first direction-matching crossover before the
/// next pivot, then searches for the retracement up to that next pivot.
///
/// With `causal_filter`, sequences whose crossover precedes the pivot's
/// confirmation bar are dropped.
pub fn assemble_sequences(
    pivots: &[Pivot],
    crosses: &[CrossEvent],
    series: &CandleSeries,
    params: &RetraceParams,
    causal_filter: bool,
) -> Assembly {
    let mut diagnostics = AssemblyDiagnostics {
        pivots: pivots.len(),
        crossovers: crosses.len(),
        ..Default::default()
    };
    let mut sequences = Vec::new();
    let mut next_cross = 0;
    for (k, e1) in pivots.iter().enumerate() {
        let barrier = pivots.get(k + 1).map_or(series.len(), |p| p.index);
        let (wanted, trend) = match e1.kind {
            PivotKind::Trough => (CrossDirection::Bullish, Trend::Up),
            PivotKind::Peak => (CrossDirection::Bearish, Trend::Down),
        };
        while next_cross < crosses.len() && crosses[next_cross].index <= e1.index {
            next_cross += 1;
        }
        let e2 = crosses[next_cross..]
            .iter()
            .take_while(|c| c.index < barrier)
            .find(|c| c.direction == wanted);
        let Some(e2) = e2 else {
            diagnostics.missing_crossover += 1;
            continue;
        };
        diagnostics.eligible_crossovers += 1;

        if causal_filter && e2.index < e1.confirm_index {
            diagnostics.causal_dropped += 1;
            continue;
        }
        match find_retracement(series, e2, trend, params, barrier) {
            Some((e3_index, e3_price)) => sequences.push(EventSequence {
                e1: *e1,
                e2: *e2,
                e3_index,
                e3_price,
                trend,
            }),
            None => diagnostics.missing_retracement += 1,
        }
    }
    sequences.sort_by_key(|s| s.e2.index);
    Assembly {
        sequences,
        diagnostics,
    }
}
