use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrossDirection {
    /// Fast line crosses above the slow line.
    Bullish,
    /// Fast line crosses below the slow line.
    Bearish,
}

impl CrossDirection {
    pub fn as_str(self) -> &'static str {
        match self {
            CrossDirection::Bullish => "bullish",
            CrossDirection::Bearish => "bearish",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossEvent {
    pub index: usize,
    pub direction: CrossDirection,
}

/// Sign changes of `fast - slow`.
///
/// Exact zeros carry the sign that preceded them, so a touch that bounces
/// back never fires and a cross through a run of zeros fires once, at the
/// first bar with the new sign. Undefined bars reset the tracker.
pub fn crossovers(fast: &[Option<f64>], slow: &[Option<f64>]) -> Result<Vec<CrossEvent>> {
    if fast.len() != slow.len() {
        return Err(Error::Shape {
            context: "crossovers fast/slow",
            left: (fast.len(), 1),
            right: (slow.len(), 1),
        });
    }
    let mut events = Vec::new();
    let mut prev_sign: Option<bool> = None; // true = fast above
    for (t, (f, s)) in fast.iter().zip(slow).enumerate() {
        let (Some(f), Some(s)) = (f, s) else {
            prev_sign = None;
            continue;
        };
        let d = f - s;
        if d == 0.0 {
            continue;
        }
        let above = d > 0.0;
        match prev_sign {
            Some(false) if above => events.push(CrossEvent {
                index: t,
                direction: CrossDirection::Bullish,
            }),
            Some(true) if !above => events.push(CrossEvent {
                index: t,
                direction: CrossDirection::Bearish,
            }),
            _ => {}
        }
        prev_sign = Some(above);
    }
    Ok(events)
}
