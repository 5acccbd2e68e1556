//! Candle ingestion, validation, chronological splitting and a seeded
//! synthetic generator.
//!
//! Timestamps are epoch seconds (UTC). Only strictly increasing order is
//! required; session gaps are fine because everything downstream is
//! index-based.

use std::f64::consts::TAU;
use std::fs::File;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_PIP_SIZE: f64 = 1e-4;

/// One OHLC bar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candle {
    pub timestamp: i64,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
}

impl Candle {
    /// Checks `high >= max(open, close)`, `low <= min(open, close)` and
    /// positive, finite prices.
    pub fn check(&self) -> std::result::Result<(), String> {
        let prices = [self.open, self.high, self.low, self.close];
        if prices.iter().any(|p| !p.is_finite()) {
            return Err("non-finite price".into());
        }
        if prices.iter().any(|&p| p <= 0.0) {
            return Err("prices must be positive".into());
        }
        if self.high < self.open.max(self.close) {
            return Err(format!(
                "high {} below max(open, close) {}",
                self.high,
                self.open.max(self.close)
            ));
        }
        if self.low > self.open.min(self.close) {
            return Err(format!(
                "low {} above min(open, close) {}",
                self.low,
                self.open.min(self.close)
            ));
        }
        Ok(())
    }
}

/// A validated, time-ordered candle series for one symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct CandleSeries {
    symbol: String,
    pip_size: f64,
    candles: Vec<Candle>,
}

impl CandleSeries {
    /// Validates and builds a series. Out-of-order candles are sorted;
    /// duplicate timestamps and broken OHLC invariants are rejected.
    pub fn new(symbol: impl Into<String>, pip_size: f64, mut candles: Vec<Candle>) -> Result<Self> {
        if !(pip_size > 0.0 && pip_size.is_finite()) {
            return Err(Error::config(format!(
                "pip_size must be positive, got {pip_size}"
            )));
        }
        if candles.is_empty() {
            return Err(Error::config("candle series is empty"));
        }
        for (i, c) in candles.iter().enumerate() {
            c.check().map_err(|message| Error::InvalidBar {
                row: i + 1,
                timestamp: c.timestamp,
                message,
            })?;
        }
        check_order(&mut candles, |i| i + 1)?;
        Ok(Self {
            symbol: symbol.into(),
            pip_size,
            candles,
        })
    }

    /// Builds a possibly empty series from candles already known to be valid
    /// and ordered (slices of a validated series).
    fn from_validated(symbol: &str, pip_size: f64, candles: Vec<Candle>) -> Self {
        Self {
            symbol: symbol.to_string(),
            pip_size,
            candles,
        }
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn pip_size(&self) -> f64 {
        self.pip_size
    }

    pub fn candles(&self) -> &[Candle] {
        &self.candles
    }

    pub fn len(&self) -> usize {
        self.candles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candles.is_empty()
    }

    pub fn timestamps(&self) -> Vec<i64> {
        self.candles.iter().map(|c| c.timestamp).collect()
    }

    pub fn opens(&self) -> Vec<f64> {
        self.candles.iter().map(|c| c.open).collect()
    }

    pub fn highs(&self) -> Vec<f64> {
        self.candles.iter().map(|c| c.high).collect()
    }

    pub fn lows(&self) -> Vec<f64> {
        self.candles.iter().map(|c| c.low).collect()
    }

    pub fn closes(&self) -> Vec<f64> {
        self.candles.iter().map(|c| c.close).collect()
    }

    /// Copies `candles[start..]` into a new series (empty if out of range).
    pub fn suffix(&self, start: usize) -> Self {
        let start = start.min(self.candles.len());
        Self::from_validated(&self.symbol, self.pip_size, self.candles[start..].to_vec())
    }

    /// Writes the series as `timestamp,open,high,low,close` with epoch-second
    /// timestamps and shortest round-trip float formatting.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(["timestamp", "open", "high", "low", "close"])?;
        for c in &self.candles {
            w.write_record([
                c.timestamp.to_string(),
                c.open.to_string(),
                c.high.to_string(),
                c.low.to_string(),
                c.close.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

fn check_order(candles: &mut [Candle], row_of: impl Fn(usize) -> usize) -> Result<()> {
    if candles.windows(2).any(|w| w[0].timestamp >= w[1].timestamp) {
        // stable sort keeps original row order among equal timestamps
        let mut order: Vec<usize> = (0..candles.len()).collect();
        order.sort_by_key(|&i| candles[i].timestamp);
        for w in order.windows(2) {
            if candles[w[0]].timestamp == candles[w[1]].timestamp {
                return Err(Error::DuplicateTimestamp {
                    row: row_of(w[1]),
                    timestamp: candles[w[1]].timestamp,
                });
            }
        }
        candles.sort_by_key(|c| c.timestamp);
    }
    Ok(())
}

/// Parses an epoch-seconds integer or an ISO-8601 UTC timestamp.
pub fn parse_timestamp(raw: &str) -> std::result::Result<i64, String> {
    let raw = raw.trim();
    if let Ok(secs) = raw.parse::<i64>() {
        return Ok(secs);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Ok(dt.timestamp());
    }
    for fmt in [
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Ok(dt.and_utc().timestamp());
        }
    }
    Err(format!("unrecognised timestamp {raw:?}"))
}

/// Loads a `timestamp,open,high,low,close` CSV (header required, extra
/// columns such as volume ignored). Row numbers in errors count data rows
/// from 1.
pub fn load_csv(path: impl AsRef<Path>, symbol: &str, pip_size: f64) -> Result<CandleSeries> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);

    let headers = reader.headers()?.clone();
    let column = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Parse(format!("{}: missing column {name:?}", path.display())))
    };
    let idx = [
        column("timestamp")?,
        column("open")?,
        column("high")?,
        column("low")?,
        column("close")?,
    ];

    let mut candles = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let malformed = |message: String| Error::MalformedRow { row, line, message };
        let field = |k: usize| {
            record
                .get(idx[k])
                .ok_or_else(|| malformed("missing field".into()))
        };

        let timestamp = parse_timestamp(field(0)?).map_err(malformed)?;
        let mut prices = [0.0; 4];
        for (k, p) in prices.iter_mut().enumerate() {
            let raw = field(k + 1)?;
            *p = raw
                .parse::<f64>()
                .map_err(|_| malformed(format!("cannot parse price {raw:?}")))?;
        }
        let candle = Candle {
            timestamp,
            open: prices[0],
            high: prices[1],
            low: prices[2],
            close: prices[3],
        };
        candle.check().map_err(|message| Error::InvalidBar {
            row,
            timestamp,
            message,
        })?;
        candles.push(candle);
    }
    if candles.is_empty() {
        return Err(Error::Parse(format!("{}: no data rows", path.display())));
    }
    check_order(&mut candles, |i| i + 1)?;
    CandleSeries::new(symbol, pip_size, candles)
}

/// Chronological split point: candles strictly before `cutoff_timestamp`
/// go to train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub cutoff_timestamp: i64,
}

#[derive(Debug, Clone)]
pub struct Split {
    pub train: CandleSeries,
    pub test: CandleSeries,
    pub warnings: Vec<String>,
}

pub fn split_by_date(series: &CandleSeries, spec: SplitSpec) -> Split {
    let at = series
        .candles
        .partition_point(|c| c.timestamp < spec.cutoff_timestamp);
    let train = CandleSeries::from_validated(
        &series.symbol,
        series.pip_size,
        series.candles[..at].to_vec(),
    );
    let test = CandleSeries::from_validated(
        &series.symbol,
        series.pip_size,
        series.candles[at..].to_vec(),
    );
    let mut warnings = Vec::new();
    if train.is_empty() {
        warnings.push(format!(
            "cutoff {} leaves the train partition empty",
            spec.cutoff_timestamp
        ));
    }
    if test.is_empty() {
        warnings.push(format!(
            "cutoff {} leaves the test partition empty",
            spec.cutoff_timestamp
        ));
    }
    for w in &warnings {
        log::warn!("{}: {w}", series.symbol);
    }
    Split {
        train,
        test,
        warnings,
    }
}

/// Parameters of the synthetic generator.
///
/// Prices follow a piecewise-linear skeleton of alternating swings. Each
/// swing is a short impulse leg, an optional brief pullback that gives back a
/// fraction of the impulse, a fast recovery past the impulse extreme, and a
/// continuation leg. With the defaults the pullback stays inside the ZigZag
/// depth window, so it shows up as a retracement rather than a pivot. A sinusoid and Gaussian noise are
/// added on top. Amplitudes shrink when price is far from `start_price` in
/// the swing direction, which keeps long series inside a band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthRegime {
    pub symbol: String,
    pub start_price: f64,
    pub pip_size: f64,
    pub start_timestamp: i64,
    pub bar_seconds: i64,
    pub impulse_bars: (usize, usize),
    pub impulse_pips: (f64, f64),
    pub pullback_bars: (usize, usize),
    pub pullback_frac: (f64, f64),
    /// Bars to climb back past the impulse extreme after a pullback.
    pub recovery_bars: (usize, usize),
    /// How far past the impulse extreme the recovery goes, as a fraction of
    /// the impulse.
    pub recovery_overshoot: f64,
    pub trend_bars: (usize, usize),
    pub trend_pips: (f64, f64),
    pub reversals: bool,
    pub band_pips: f64,
    pub osc_pips: f64,
    pub osc_period: f64,
    pub noise_pips: f64,
    pub wick_pips: f64,
}

impl Default for SynthRegime {
    fn default() -> Self {
        Self {
            symbol: "SYN/USD".into(),
            start_price: 0.88,
            pip_size: DEFAULT_PIP_SIZE,
            start_timestamp: 1_104_537_600, // 2005-01-01T00:00:00Z
            bar_seconds: 900,
            impulse_bars: (8, 9),
            impulse_pips: (60.0, 90.0),
            pullback_bars: (2, 3),
            pullback_frac: (0.6, 0.8),
            recovery_bars: (3, 5),
            recovery_overshoot: 0.25,
            trend_bars: (18, 26),
            trend_pips: (60.0, 120.0),
            reversals: true,
            band_pips: 300.0,
            osc_pips: 1.5,
            osc_period: 11.0,
            noise_pips: 1.0,
            wick_pips: 1.5,
        }
    }
}

impl SynthRegime {
    /// Noise-free monotone ramp rising `pips_per_bar` each bar.
    pub fn ramp(pips_per_bar: f64) -> Self {
        Self {
            impulse_bars: (10, 10),
            impulse_pips: (10.0 * pips_per_bar, 10.0 * pips_per_bar),
            pullback_frac: (0.0, 0.0),
            trend_bars: (10, 10),
            trend_pips: (10.0 * pips_per_bar, 10.0 * pips_per_bar),
            reversals: false,
            band_pips: f64::INFINITY,
            osc_pips: 0.0,
            noise_pips: 0.0,
            wick_pips: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ranges_ok = |(a, b): (usize, usize)| a >= 1 && a <= b;
        let pips_ok = |(a, b): (f64, f64)| a >= 0.0 && a <= b && b.is_finite();
        let checks = [
            (
                self.start_price > 0.0 && self.start_price.is_finite(),
                "start_price must be positive",
            ),
            (self.pip_size > 0.0, "pip_size must be positive"),
            (self.bar_seconds > 0, "bar_seconds must be positive"),
            (
                ranges_ok(self.impulse_bars),
                "impulse_bars must be 1 <= min <= max",
            ),
            (
                ranges_ok(self.pullback_bars),
                "pullback_bars must be 1 <= min <= max",
            ),
            (
                ranges_ok(self.trend_bars),
                "trend_bars must be 1 <= min <= max",
            ),
            (
                ranges_ok(self.recovery_bars),
                "recovery_bars must be 1 <= min <= max",
            ),
            (
                self.recovery_overshoot >= 0.0,
                "recovery_overshoot must be non-negative",
            ),
            (
                pips_ok(self.impulse_pips),
                "impulse_pips must be 0 <= min <= max",
            ),
            (
                pips_ok(self.trend_pips),
                "trend_pips must be 0 <= min <= max",
            ),
            (
                self.pullback_frac.0 >= 0.0 && self.pullback_frac.0 <= self.pullback_frac.1,
                "pullback_frac must be 0 <= min <= max",
            ),
            (self.band_pips > 0.0, "band_pips must be positive"),
            (self.osc_period > 0.0, "osc_period must be positive"),
            (
                self.osc_pips >= 0.0 && self.noise_pips >= 0.0 && self.wick_pips >= 0.0,
                "amplitudes must be non-negative",
            ),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::config(format!("synthetic regime: {msg}"))),
            None => Ok(()),
        }
    }
}

fn uniform_usize(rng: &mut ChaCha8Rng, (lo, hi): (usize, usize)) -> usize {
    rng.gen_range(lo..=hi)
}

fn uniform_f64(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}

/// Deterministic synthetic series: a pure function of `(seed, n, regime)`.
pub fn synthetic_series(seed: u64, n: usize, regime: &SynthRegime) -> Result<CandleSeries> {
    if n == 0 {
        return Err(Error::config("synthetic series length must be >= 1"));
    }
    regime.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // skeleton in pips relative to start_price
    let mut skeleton = Vec::with_capacity(n + 64);
    let mut level = 0.0_f64;
    let mut direction = 1.0_f64;
    while skeleton.len() < n {
        let scale = (1.0 - direction * level / regime.band_pips).clamp(0.25, 1.75);
        let impulse = uniform_f64(&mut rng, regime.impulse_pips) * scale;
        let mut legs = vec![(
            uniform_usize(&mut rng, regime.impulse_bars),
            direction * impulse,
        )];
        let frac = uniform_f64(&mut rng, regime.pullback_frac);
        if frac > 0.0 {
            legs.push((
                uniform_usize(&mut rng, regime.pullback_bars),
                -direction * frac * impulse,
            ));
            let recovery = (frac + regime.recovery_overshoot) * impulse;
            legs.push((
                uniform_usize(&mut rng, regime.recovery_bars),
                direction * recovery,
            ));
        }
        let trend = uniform_f64(&mut rng, regime.trend_pips) * scale;
        legs.push((
            uniform_usize(&mut rng, regime.trend_bars),
            direction * trend,
        ));
        for (bars, delta) in legs {
            for k in 1..=bars {
                skeleton.push(level + delta * k as f64 / bars as f64);
            }
            level += delta;
        }
        if regime.reversals {
            direction = -direction;
        }
    }
    skeleton.truncate(n);

    let phase = rng.gen_range(0.0..TAU);
    let pip = regime.pip_size;
    let mut closes = Vec::with_capacity(n);
    for (t, s) in skeleton.iter().enumerate() {
        let osc = regime.osc_pips * (TAU * t as f64 / regime.osc_period + phase).sin();
        let noise: f64 = if regime.noise_pips > 0.0 {
            regime.noise_pips * rng.sample::<f64, _>(StandardNormal)
        } else {
            0.0
        };
        let close = regime.start_price + (s + osc + noise) * pip;
        closes.push(close.max(regime.start_price * 0.05));
    }

    let mut candles = Vec::with_capacity(n);
    for t in 0..n {
        let close = closes[t];
        let open = if t == 0 {
            regime.start_price
        } else {
            closes[t - 1]
        };
        let (wick_hi, wick_lo) = if regime.wick_pips > 0.0 {
            (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0))
        } else {
            (0.0, 0.0)
        };
        let high = open.max(close) + regime.wick_pips * pip * wick_hi;
        let low = (open.min(close) - regime.wick_pips * pip * wick_lo).max(open.min(close) * 0.5);
        candles.push(Candle {
            timestamp: regime.start_timestamp + t as i64 * regime.bar_seconds,
            open,
            high,
            low,
            close,
        });
    }
    CandleSeries::new(regime.symbol.clone(), regime.pip_size, candles)
}
