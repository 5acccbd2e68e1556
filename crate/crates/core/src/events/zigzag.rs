//! ZigZag pivot detection.
//!
//! A bar is a trough candidate when its low is the lowest low within
//! `depth` bars on both sides (ties go to the earliest bar), and a peak
//! candidate symmetrically on highs. Candidates are then filtered in index
//! order, troughs before peaks at the same bar:
//!
//! * the first candidate becomes the first pivot;
//! * a candidate of the same kind as the last pivot replaces it only if it
//!   is strictly more extreme;
//! * a candidate of the opposite kind is appended when it lies strictly
//!   after the last pivot, at least `backstep` bars later, and price moved
//!   at least `deviation_pips * pip_size` in its direction (a peak above the
//!   last trough, a trough below the last peak).
//!
//! The detector streams over the series once; candidate status for bar `c`
//! is known at bar `c + depth`, which is recorded as the pivot's
//! `confirm_index`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::CandleSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PivotKind {
    Peak,
    Trough,
}

impl PivotKind {
    pub fn opposite(self) -> Self {
        match self {
            PivotKind::Peak => PivotKind::Trough,
            PivotKind::Trough => PivotKind::Peak,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PivotKind::Peak => "peak",
            PivotKind::Trough => "trough",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pivot {
    pub index: usize,
    pub kind: PivotKind,
    /// High for a peak, low for a trough.
    pub price: f64,
    pub confirm_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZigZagParams {
    pub depth: usize,
    pub deviation_pips: f64,
    pub backstep: usize,
}

impl Default for ZigZagParams {
    fn default() -> Self {
        Self {
            depth: 12,
            deviation_pips: 5.0,
            backstep: 3,
        }
    }
}

impl ZigZagParams {
    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return Err(Error::config("zigzag depth must be >= 1"));
        }
        if !(self.deviation_pips > 0.0 && self.deviation_pips.is_finite()) {
            return Err(Error::config("zigzag deviation_pips must be positive"));
        }
        Ok(())
    }
}

/// A pivot candidate before filtering.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    index: usize,
    kind: PivotKind,
    price: f64,
}

/// The filtering state machine shared by the streaming detector.
#[derive(Debug, Default)]
struct PivotFilter {
    pivots: Vec<Pivot>,
}

impl PivotFilter {
    fn offer(&mut self, c: Candidate, depth: usize, min_move: f64, backstep: usize) {
        let pivot = Pivot {
            index: c.index,
            kind: c.kind,
            price: c.price,
            confirm_index: c.index + depth,
        };
        let Some(last) = self.pivots.last_mut() else {
            self.pivots.push(pivot);
            return;
        };
        if c.kind == last.kind {
            let more_extreme = match c.kind {
                PivotKind::Peak => c.price > last.price,
                PivotKind::Trough => c.price < last.price,
            };
            if more_extreme {
                *last = pivot;
            }
        } else {
            let moved = match c.kind {
                PivotKind::Peak => c.price - last.price,
                PivotKind::Trough => last.price - c.price,
            };
            if c.index > last.index && c.index - last.index >= backstep && moved >= min_move {
                self.pivots.push(pivot);
            }
        }
    }
}

/// Sliding-window extremum tracker; keeps the earliest index on ties.
struct WindowExtreme {
    deque: VecDeque<usize>,
}

impl WindowExtreme {
    fn new() -> Self {
        Self {
            deque: VecDeque::new(),
        }
    }

    fn push(&mut self, values: &[f64], t: usize, better: impl Fn(f64, f64) -> bool) {
        while self
            .deque
            .back()
            .is_some_and(|&j| better(values[t], values[j]))
        {
            self.deque.pop_back();
        }
        self.deque.push_back(t);
    }

    fn front(&mut self, window_start: usize) -> usize {
        while self.deque[0] < window_start {
            self.deque.pop_front();
        }
        self.deque[0]
    }
}

pub fn zigzag(series: &CandleSeries, params: &ZigZagParams) -> Result<Vec<Pivot>> {
    params.validate()?;
    let (high, low) = (series.highs(), series.lows());
    let d = params.depth;
    let min_move = params.deviation_pips * series.pip_size();
    let mut filter = PivotFilter::default();
    if high.len() < 2 * d + 1 {
        return Ok(filter.pivots);
    }

    let mut max_high = WindowExtreme::new();
    let mut min_low = WindowExtreme::new();
    for t in 0..high.len() {
        max_high.push(&high, t, |a, b| a > b);
        min_low.push(&low, t, |a, b| a < b);
        if t < 2 * d {
            continue;
        }
        let center = t - d;
        let window_start = center - d;
        if min_low.front(window_start) == center {
            filter.offer(
                Candidate {
                    index: center,
                    kind: PivotKind::Trough,
                    price: low[center],
                },
                d,
                min_move,
                params.backstep,
            );
        }
        if max_high.front(window_start) == center {
            filter.offer(
                Candidate {
                    index: center,
                    kind: PivotKind::Peak,
                    price: high[center],
                },
                d,
                min_move,
                params.backstep,
            );
        }
    }
    Ok(filter.pivots)
}
