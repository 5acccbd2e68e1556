//! Non-volume technical indicators and the 28-column feature matrix.
//!
//! Kernels return one value per input bar. Warm-up bars are `None`, never
//! zero. EMA and MACD are seeded with the first price and so are defined from
//! index 0. RSI and ADX use Wilder smoothing.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::CandleSeries;

pub const FEATURE_COUNT: usize = 28;

/// Indicator periods. The list lengths are fixed so that the feature matrix
/// always has 28 columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IndicatorParams {
    pub macd_fast: usize,
    pub macd_slow: usize,
    pub macd_signal: usize,
    pub boll_window: usize,
    pub boll_k: f64,
    pub sma: [usize; 7],
    pub rsi: [usize; 4],
    pub adx: [usize; 7],
    pub wr: [usize; 4],
}

impl Default for IndicatorParams {
    fn default() -> Self {
        Self {
            macd_fast: 12,
            macd_slow: 26,
            macd_signal: 9,
            boll_window: 20,
            boll_k: 2.0,
            sma: [5, 10, 15, 20, 25, 30, 36],
            rsi: [5, 14, 20, 25],
            adx: [5, 10, 15, 20, 25, 30, 35],
            wr: [5, 14, 20, 25],
        }
    }
}

impl IndicatorParams {
    pub fn validate(&self) -> Result<()> {
        let periods = [self.macd_fast, self.macd_slow, self.macd_signal]
            .into_iter()
            .chain(self.sma)
            .chain(self.rsi)
            .chain(self.adx)
            .chain(self.wr);
        if periods.into_iter().any(|p| p == 0) {
            return Err(Error::config("indicator periods must be >= 1"));
        }
        if self.macd_fast >= self.macd_slow {
            return Err(Error::config(format!(
                "macd_fast ({}) must be below macd_slow ({})",
                self.macd_fast, self.macd_slow
            )));
        }
        if self.boll_window < 2 {
            return Err(Error::config("boll_window must be >= 2"));
        }
        if !(self.boll_k >= 0.0 && self.boll_k.is_finite()) {
            return Err(Error::config("boll_k must be a non-negative number"));
        }
        Ok(())
    }

    /// Column names in canonical order.
    pub fn column_names(&self) -> Vec<String> {
        let mut names = vec!["MACD".to_string(), "MACD_signal".into(), "MACD_hist".into()];
        names.extend(self.sma.iter().map(|p| format!("SMA{p}")));
        names.extend(self.rsi.iter().map(|p| format!("RSI{p}")));
        names.extend(self.adx.iter().map(|p| format!("ADX{p}")));
        names.extend([
            "BB_lower".to_string(),
            "BB_middle".into(),
            "BB_upper".into(),
        ]);
        names.extend(self.wr.iter().map(|p| format!("WR{p}")));
        names
    }

    /// First index at which every column is defined.
    pub fn warmup_len(&self) -> usize {
        let sma = self.sma.iter().map(|p| p - 1);
        let rsi = self.rsi.iter().copied();
        let adx = self.adx.iter().map(|p| 2 * p - 1);
        let wr = self.wr.iter().map(|p| p - 1);
        sma.chain(rsi)
            .chain(adx)
            .chain(wr)
            .chain([self.boll_window - 1])
            .max()
            .unwrap_or(0)
    }
}

fn check_aligned(high: &[f64], low: &[f64], close: &[f64]) -> Result<()> {
    if high.len() != low.len() || low.len() != close.len() {
        return Err(Error::Shape {
            context: "high/low/close",
            left: (high.len(), low.len()),
            right: (close.len(), close.len()),
        });
    }
    Ok(())
}

/// Simple moving average; defined from index `n - 1`.
pub fn sma(close: &[f64], n: usize) -> Vec<Option<f64>> {
    let mut out = vec![None; close.len()];
    if n == 0 || n > close.len() {
        return out;
    }
    let mut sum: f64 = close[..n - 1].iter().sum();
    for t in n - 1..close.len() {
        sum += close[t];
        out[t] = Some(sum / n as f64);
        sum -= close[t + 1 - n];
    }
    out
}

/// Exponential moving average with `k = 2 / (n + 1)` seeded by the first
/// price.
pub fn ema(close: &[f64], n: usize) -> Vec<f64> {
    let k = 2.0 / (n as f64 + 1.0);
    let mut out = Vec::with_capacity(close.len());
    let mut prev = match close.first() {
        Some(&c) => c,
        None => return out,
    };
    out.push(prev);
    for &price in &close[1..] {
        prev = price * k + prev * (1.0 - k);
        out.push(prev);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Macd {
    pub macd: Vec<f64>,
    pub signal: Vec<f64>,
    pub histogram: Vec<f64>,
}

pub fn macd(close: &[f64], params: &IndicatorParams) -> Result<Macd> {
    if params.macd_fast == 0 || params.macd_signal == 0 || params.macd_fast >= params.macd_slow {
        return Err(Error::config(format!(
            "invalid MACD periods {}/{}/{}",
            params.macd_fast, params.macd_slow, params.macd_signal
        )));
    }
    let fast = ema(close, params.macd_fast);
    let slow = ema(close, params.macd_slow);
    let macd: Vec<f64> = fast.iter().zip(&slow).map(|(f, s)| f - s).collect();
    let signal = ema(&macd, params.macd_signal);
    let histogram = macd.iter().zip(&signal).map(|(m, s)| m - s).collect();
    Ok(Macd {
        macd,
        signal,
        histogram,
    })
}

/// Running Wilder average: the first value (at `n - 1` within `values`) is
/// the plain mean of the first `n`, then `avg = (prev * (n - 1) + x) / n`.
fn wilder(values: impl Iterator<Item = f64>, n: usize) -> Vec<Option<f64>> {
    let mut out = Vec::new();
    let mut acc = 0.0;
    let mut avg = None;
    for (i, x) in values.enumerate() {
        match avg {
            None => {
                acc += x;
                if i + 1 == n {
                    avg = Some(acc / n as f64);
                }
            }
            Some(prev) => avg = Some((prev * (n as f64 - 1.0) + x) / n as f64),
        }
        out.push(avg);
    }
    out
}

/// Wilder's RSI, defined from index `n`. Zero movement over the averaging
/// window gives 50.
pub fn rsi(close: &[f64], n: usize) -> Vec<Option<f64>> {
    let mut out = vec![None; close.len()];
    if n == 0 || close.len() <= n {
        return out;
    }
    let deltas = || close.windows(2).map(|w| w[1] - w[0]);
    let gains = wilder(deltas().map(|d| d.max(0.0)), n);
    let losses = wilder(deltas().map(|d| (-d).max(0.0)), n);
    for (i, (g, l)) in gains.into_iter().zip(losses).enumerate() {
        if let (Some(g), Some(l)) = (g, l) {
            out[i + 1] = Some(rsi_value(g, l));
        }
    }
    out
}

fn rsi_value(avg_gain: f64, avg_loss: f64) -> f64 {
    if avg_loss == 0.0 {
        if avg_gain == 0.0 {
            50.0
        } else {
            100.0
        }
    } else {
        100.0 - 100.0 / (1.0 + avg_gain / avg_loss)
    }
}

/// Wilder's ADX, defined from index `2n - 1`. A step whose +DI and -DI sum to
/// zero contributes DX = 0.
pub fn adx(high: &[f64], low: &[f64], close: &[f64], n: usize) -> Result<Vec<Option<f64>>> {
    check_aligned(high, low, close)?;
    let len = close.len();
    let mut out = vec![None; len];
    if n == 0 || len < 2 * n {
        return Ok(out);
    }
    let mut plus_dm = Vec::with_capacity(len - 1);
    let mut minus_dm = Vec::with_capacity(len - 1);
    let mut tr = Vec::with_capacity(len - 1);
    for t in 1..len {
        let up = high[t] - high[t - 1];
        let down = low[t - 1] - low[t];
        plus_dm.push(if up > down && up > 0.0 { up } else { 0.0 });
        minus_dm.push(if down > up && down > 0.0 { down } else { 0.0 });
        tr.push(
            (high[t] - low[t])
                .max((high[t] - close[t - 1]).abs())
                .max((low[t] - close[t - 1]).abs()),
        );
    }
    let plus = wilder(plus_dm.into_iter(), n);
    let minus = wilder(minus_dm.into_iter(), n);
    let range = wilder(tr.into_iter(), n);

    // dx[j] belongs to bar j + 1; first defined at j = n - 1 (bar n)
    let dx: Vec<f64> = (n - 1..len - 1)
        .map(|j| {
            let (p, m, r) = (plus[j].unwrap(), minus[j].unwrap(), range[j].unwrap());
            let (pdi, mdi) = if r > 0.0 {
                (100.0 * p / r, 100.0 * m / r)
            } else {
                (0.0, 0.0)
            };
            if pdi + mdi > 0.0 {
                // the ratio can round a hair above 1
                (100.0 * (pdi - mdi).abs() / (pdi + mdi)).min(100.0)
            } else {
                0.0
            }
        })
        .collect();
    for (k, v) in wilder(dx.into_iter(), n).into_iter().enumerate() {
        out[k + n] = v;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bollinger {
    pub lower: Vec<Option<f64>>,
    pub middle: Vec<Option<f64>>,
    pub upper: Vec<Option<f64>>,
}

/// Bollinger bands: SMA ± k·σ with the population standard deviation.
pub fn bollinger(close: &[f64], params: &IndicatorParams) -> Result<Bollinger> {
    let n = params.boll_window;
    if n < 2 {
        return Err(Error::config("boll_window must be >= 2"));
    }
    let middle = sma(close, n);
    let mut lower = vec![None; close.len()];
    let mut upper = vec![None; close.len()];
    for (t, m) in middle.iter().enumerate() {
        if let Some(mean) = *m {
            let window = &close[t + 1 - n..=t];
            let var = window.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
            let band = params.boll_k * var.sqrt();
            lower[t] = Some(mean - band);
            upper[t] = Some(mean + band);
        }
    }
    Ok(Bollinger {
        lower,
        middle,
        upper,
    })
}

/// Trailing-window extremum via a monotone deque. `better(a, b)` is true when
/// `a` should evict `b`.
fn rolling_extreme(
    values: &[f64],
    n: usize,
    better: impl Fn(f64, f64) -> bool,
) -> Vec<Option<f64>> {
    let mut out = vec![None; values.len()];
    if n == 0 {
        return out;
    }
    let mut deque: VecDeque<usize> = VecDeque::new();
    for (t, &v) in values.iter().enumerate() {
        while deque
            .back()
            .is_some_and(|&j| better(v, values[j]) || v == values[j])
        {
            deque.pop_back();
        }
        deque.push_back(t);
        if deque[0] + n <= t {
            deque.pop_front();
        }
        if t + 1 >= n {
            out[t] = Some(values[deque[0]]);
        }
    }
    out
}

/// Williams %R over the trailing `n` bars, in [-100, 0]. A flat window gives
/// -50.
pub fn williams_r(high: &[f64], low: &[f64], close: &[f64], n: usize) -> Result<Vec<Option<f64>>> {
    check_aligned(high, low, close)?;
    let hh = rolling_extreme(high, n, |a, b| a > b);
    let ll = rolling_extreme(low, n, |a, b| a < b);
    Ok(hh
        .iter()
        .zip(&ll)
        .zip(close)
        .map(|((h, l), &c)| match (h, l) {
            (Some(h), Some(l)) if h > l => Some((h - c) / (h - l) * -100.0),
            (Some(_), Some(_)) => Some(-50.0),
            _ => None,
        })
        .collect())
}

/// Per-bar indicator values, one row per source candle.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    columns: Vec<String>,
    timestamps: Vec<i64>,
    rows: Vec<[Option<f64>; FEATURE_COUNT]>,
    warmup_len: usize,
}

impl FeatureMatrix {
    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Number of leading rows with at least one undefined value.
    pub fn warmup_len(&self) -> usize {
        self.warmup_len
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    pub fn row(&self, t: usize) -> &[Option<f64>; FEATURE_COUNT] {
        &self.rows[t]
    }

    /// Row `t` as plain values; `None` inside the warm-up region.
    pub fn defined_row(&self, t: usize) -> Option<[f64; FEATURE_COUNT]> {
        if t < self.warmup_len || t >= self.rows.len() {
            return None;
        }
        Some(self.rows[t].map(|v| v.expect("rows past warm-up are fully defined")))
    }

    /// Column `j` over all rows.
    pub fn column(&self, j: usize) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// Writes `timestamp` plus the 28 named columns; undefined cells are
    /// left empty.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut line = String::from("timestamp");
        for c in &self.columns {
            line.push(',');
            line.push_str(c);
        }
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
        for (ts, row) in self.timestamps.iter().zip(&self.rows) {
            line.clear();
            write!(line, "{ts}").unwrap();
            for v in row {
                line.push(',');
                if let Some(v) = v {
                    write!(line, "{v}").unwrap();
                }
            }
            writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Assembles the 28 indicator columns in canonical order: MACD triple,
/// SMA x7, RSI x4, ADX x7, Bollinger lower/middle/upper, WR x4.
pub fn feature_matrix(series: &CandleSeries, params: &IndicatorParams) -> Result<FeatureMatrix> {
    params.validate()?;
    let (high, low, close) = (series.highs(), series.lows(), series.closes());

    let m = macd(&close, params)?;
    let mut columns: Vec<Vec<Option<f64>>> = Vec::with_capacity(FEATURE_COUNT);
    for c in [m.macd, m.signal, m.histogram] {
        columns.push(c.into_iter().map(Some).collect());
    }
    for &p in &params.sma {
        columns.push(sma(&close, p));
    }
    for &p in &params.rsi {
        columns.push(rsi(&close, p));
    }
    for &p in &params.adx {
        columns.push(adx(&high, &low, &close, p)?);
    }
    let b = bollinger(&close, params)?;
    columns.extend([b.lower, b.middle, b.upper]);
    for &p in &params.wr {
        columns.push(williams_r(&high, &low, &close, p)?);
    }
    debug_assert_eq!(columns.len(), FEATURE_COUNT);

    let warmup_len = params.warmup_len();
    if series.len() <= warmup_len {
        log::warn!(
            "{}: {} bars is not enough to clear the {}-bar indicator warm-up",
            series.symbol(),
            series.len(),
            warmup_len
        );
    }
    let rows = (0..series.len())
        .map(|t| std::array::from_fn(|j| columns[j][t]))
        .collect();
    Ok(FeatureMatrix {
        columns: params.column_names(),
        timestamps: series.timestamps(),
        rows,
        warmup_len,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::Candle;

    fn flat_series(len: usize, price: f64) -> CandleSeries {
        let candles = (0..len)
            .map(|t| Candle {
                timestamp: t as i64 * 60,
                open: price,
                high: price,
                low: price,
                close: price,
            })
            .collect();
        CandleSeries::new("FLAT", 1e-4, candles).unwrap()
    }

    #[test]
    fn sma_small_case() {
        assert_eq!(
            sma(&[1.0, 2.0, 3.0, 4.0], 2),
            vec![None, Some(1.5), Some(2.5), Some(3.5)]
        );
        assert_eq!(sma(&[1.0, 2.0], 3), vec![None, None]);
        assert!(sma(&[5.0; 10], 4).iter().flatten().all(|&v| v == 5.0));
    }

    #[test]
    fn ema_cases() {
        assert_eq!(ema(&[1.0, 2.0, 3.0], 3), vec![1.0, 1.5, 2.25]);
        let xs = [1.3, 0.2, 5.0, -1.0];
        assert_eq!(ema(&xs, 1), xs.to_vec());
        assert!(ema(&[2.5; 20], 7).iter().all(|&v| v == 2.5));
        assert!(ema(&[], 5).is_empty());
    }

    #[test]
    fn macd_identities() {
        let p = IndicatorParams::default();
        let flat = macd(&[1.2; 50], &p).unwrap();
        assert!(flat
            .macd
            .iter()
            .chain(&flat.signal)
            .chain(&flat.histogram)
            .all(|&v| v == 0.0));

        let xs: Vec<f64> = (0..80).map(|i| (i as f64 * 0.3).sin() + 2.0).collect();
        let m = macd(&xs, &p).unwrap();
        for t in 0..xs.len() {
            assert_eq!(m.histogram[t], m.macd[t] - m.signal[t]);
        }
        let bad = IndicatorParams { macd_fast: 30, ..p };
        assert!(macd(&xs, &bad).is_err());
    }

    #[test]
    fn rsi_monotone_extremes() {
        let up: Vec<f64> = (0..30).map(|i| 1.0 + i as f64 * 0.01).collect();
        let r = rsi(&up, 5);
        assert!(r[..5].iter().all(Option::is_none));
        assert!(r[5..].iter().all(|v| *v == Some(100.0)));

        let down: Vec<f64> = up.iter().rev().copied().collect();
        assert!(rsi(&down, 5)[5..].iter().all(|v| *v == Some(0.0)));
        assert!(rsi(&[1.0; 10], 3)[3..].iter().all(|v| *v == Some(50.0)));
        assert!(rsi(&[1.0, 2.0], 2).iter().all(Option::is_none));
    }

    #[test]
    fn adx_flat_and_rising() {
        let flat = vec![1.0; 40];
        let a = adx(&flat, &flat, &flat, 5).unwrap();
        assert!(a[..9].iter().all(Option::is_none));
        assert!(a[9..].iter().all(|v| *v == Some(0.0)));

        // each bar strictly above the previous
        let close: Vec<f64> = (0..40).map(|i| 1.0 + i as f64 * 0.01).collect();
        let high: Vec<f64> = close.iter().map(|c| c + 0.002).collect();
        let low: Vec<f64> = close.iter().map(|c| c - 0.002).collect();
        let a = adx(&high, &low, &close, 5).unwrap();
        // pure up-moves: -DM is always zero, so DX (and ADX) saturate at 100
        assert!(a[9..].iter().all(|v| (v.unwrap() - 100.0).abs() < 1e-9));
        assert!(adx(&high, &low[..10], &close, 5).is_err());
    }

    #[test]
    fn bollinger_flat_and_symmetric() {
        let p = IndicatorParams::default();
        let b = bollinger(&[0.9; 30], &p).unwrap();
        for t in 19..30 {
            assert_eq!(b.lower[t], Some(0.9));
            assert_eq!(b.middle[t], Some(0.9));
            assert_eq!(b.upper[t], Some(0.9));
        }
        let xs: Vec<f64> = (0..60).map(|i| (i as f64 * 0.7).cos()).collect();
        let b = bollinger(&xs, &p).unwrap();
        for t in 19..60 {
            let (l, m, u) = (
                b.lower[t].unwrap(),
                b.middle[t].unwrap(),
                b.upper[t].unwrap(),
            );
            assert!(((u - m) - (m - l)).abs() < 1e-12);
        }
    }

    #[test]
    fn williams_r_bounds() {
        let high = [1.0, 2.0, 3.0, 2.5];
        let low = [0.5, 1.0, 2.0, 1.5];
        let at_high = williams_r(&high, &low, &[0.8, 1.5, 3.0, 2.0], 3).unwrap();
        assert_eq!(at_high[2], Some(0.0));
        let low_close = [0.5, 1.0, 2.0, 0.9];
        let at_low = williams_r(&high, &low_close, &[0.8, 1.5, 2.5, 0.9], 3).unwrap();
        assert_eq!(at_low[3], Some(-100.0));
        let flat = williams_r(&[1.0; 5], &[1.0; 5], &[1.0; 5], 3).unwrap();
        assert_eq!(
            flat,
            vec![None, None, Some(-50.0), Some(-50.0), Some(-50.0)]
        );
    }

    #[test]
    fn feature_matrix_shape_and_names() {
        let p = IndicatorParams::default();
        let fm = feature_matrix(&flat_series(120, 1.1), &p).unwrap();
        let expected = [
            "MACD",
            "MACD_signal",
            "MACD_hist",
            "SMA5",
            "SMA10",
            "SMA15",
            "SMA20",
            "SMA25",
            "SMA30",
            "SMA36",
            "RSI5",
            "RSI14",
            "RSI20",
            "RSI25",
            "ADX5",
            "ADX10",
            "ADX15",
            "ADX20",
            "ADX25",
            "ADX30",
            "ADX35",
            "BB_lower",
            "BB_middle",
            "BB_upper",
            "WR5",
            "WR14",
            "WR20",
            "WR25",
        ];
        assert_eq!(fm.columns(), expected);
        assert_eq!(fm.len(), 120);
        assert_eq!(fm.warmup_len(), 69);
        assert!(fm.row(68).iter().any(Option::is_none));
        for t in 69..120 {
            let row = fm.defined_row(t).unwrap();
            assert!(row[..3].iter().all(|&v| v == 0.0));
            assert!(row[3..10].iter().all(|&v| (v - 1.1).abs() < 1e-12));
            assert!(row[10..14].iter().all(|&v| v == 50.0));
            assert!(row[14..21].iter().all(|&v| v == 0.0));
            assert!(row[21..24].iter().all(|&v| (v - 1.1).abs() < 1e-12));
            assert!(row[24..].iter().all(|&v| v == -50.0));
        }
    }

    #[test]
    fn short_series_yields_no_defined_rows() {
        let fm = feature_matrix(&flat_series(30, 1.0), &IndicatorParams::default()).unwrap();
        assert_eq!(fm.len(), 30);
        assert!((0..30).all(|t| fm.defined_row(t).is_none()));
    }

    #[test]
    fn params_validation() {
        let mut p = IndicatorParams::default();
        p.sma[2] = 0;
        assert!(p.validate().is_err());
        let p = IndicatorParams {
            macd_fast: 26,
            ..IndicatorParams::default()
        };
        assert!(p.validate().is_err());
    }
}
