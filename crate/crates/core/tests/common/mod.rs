//! Definitional oracles and random inputs shared by the integration tests.
//! The oracles favour the most literal reading of each definition over
//! speed, and share no code with the library kernels.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use retrace::events::{PivotKind, ZigZagParams};
use retrace::market_data::{Candle, CandleSeries};
use retrace::nn::{grad_check, Matrix, Parameterized};
use retrace::recurrent::{Architecture, ModelConfig, RecurrentModel};

pub const PIP: f64 = 1e-4;

/// Random-walk candles whose prices sit on a pip grid, so ties are exact.
pub fn pip_grid_series(
    rng: &mut ChaCha8Rng,
    len: usize,
    max_step: i64,
    max_wick: i64,
) -> CandleSeries {
    let mut level: i64 = 10_000;
    let candles = (0..len)
        .map(|t| {
            let open = level;
            level = (level + rng.gen_range(-max_step..=max_step)).max(1_000);
            let close = level;
            let high = open.max(close) + rng.gen_range(0..=max_wick);
            let low = open.min(close) - rng.gen_range(0..=max_wick);
            let p = |k: i64| k as f64 * PIP;
            Candle {
                timestamp: t as i64 * 900,
                open: p(open),
                high: p(high),
                low: p(low),
                close: p(close),
            }
        })
        .collect();
    CandleSeries::new("RND", PIP, candles).unwrap()
}

/// Random-walk candles with continuous prices and occasional flat stretches.
pub fn random_series(seed: u64, len: usize) -> CandleSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut close: f64 = 1.0 + rng.gen_range(-0.2..0.2);
    let mut flat = 0;
    let candles = (0..len)
        .map(|t| {
            let open = close;
            if flat > 0 {
                flat -= 1;
            } else if rng.gen_bool(0.01) {
                flat = rng.gen_range(3..30);
            } else {
                close = (close + rng.gen_range(-0.003..0.003)).max(0.2);
            }
            let wick = if flat > 0 { 0.0 } else { 0.002 };
            let high = open.max(close) + rng.gen_range(0.0..=wick);
            let low = open.min(close) - rng.gen_range(0.0..=wick);
            Candle {
                timestamp: t as i64 * 900,
                open,
                high,
                low,
                close,
            }
        })
        .collect();
    CandleSeries::new("RND", PIP, candles).unwrap()
}

pub fn oracle_sma(close: &[f64], n: usize) -> Vec<Option<f64>> {
    (0..close.len())
        .map(|t| (t + 1 >= n).then(|| close[t + 1 - n..=t].iter().sum::<f64>() / n as f64))
        .collect()
}

/// Closed form of the first-price-seeded EMA:
/// `ema_t = (1-k)^t x_0 + sum_{j=1..t} k (1-k)^(t-j) x_j`.
pub fn oracle_ema(xs: &[f64], n: usize) -> Vec<f64> {
    let k = 2.0 / (n as f64 + 1.0);
    let decay: Vec<f64> = (0..xs.len()).map(|m| (1.0 - k).powi(m as i32)).collect();
    (0..xs.len())
        .map(|t| decay[t] * xs[0] + (1..=t).map(|j| k * decay[t - j] * xs[j]).sum::<f64>())
        .collect()
}

/// Wilder smoothing: the mean of the first `n` values, then
/// `avg = (avg (n-1) + x) / n`. NaN before the seed.
pub fn oracle_wilder(xs: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![f64::NAN; xs.len()];
    if xs.len() < n {
        return out;
    }
    let mut avg = xs[..n].iter().sum::<f64>() / n as f64;
    out[n - 1] = avg;
    for j in n..xs.len() {
        avg = (avg * (n as f64 - 1.0) + xs[j]) / n as f64;
        out[j] = avg;
    }
    out
}

pub fn oracle_rsi(close: &[f64], n: usize) -> Vec<Option<f64>> {
    let mut out = vec![None; close.len()];
    if close.len() <= n {
        return out;
    }
    let gains: Vec<f64> = (1..close.len())
        .map(|t| (close[t] - close[t - 1]).max(0.0))
        .collect();
    let losses: Vec<f64> = (1..close.len())
        .map(|t| (close[t - 1] - close[t]).max(0.0))
        .collect();
    let (g, l) = (oracle_wilder(&gains, n), oracle_wilder(&losses, n));
    for t in n..close.len() {
        let (g, l) = (g[t - 1], l[t - 1]);
        out[t] = Some(if l == 0.0 && g == 0.0 {
            50.0
        } else if l == 0.0 {
            100.0
        } else {
            100.0 * g / (g + l)
        });
    }
    out
}

pub fn oracle_adx(high: &[f64], low: &[f64], close: &[f64], n: usize) -> Vec<Option<f64>> {
    let len = close.len();
    let mut out = vec![None; len];
    if len < 2 * n {
        return out;
    }
    let mut tr = vec![];
    let mut plus = vec![];
    let mut minus = vec![];
    for t in 1..len {
        let up = high[t] - high[t - 1];
        let down = low[t - 1] - low[t];
        plus.push(if up > 0.0 && up > down { up } else { 0.0 });
        minus.push(if down > 0.0 && down > up { down } else { 0.0 });
        let ranges = [
            high[t] - low[t],
            (high[t] - close[t - 1]).abs(),
            (low[t] - close[t - 1]).abs(),
        ];
        tr.push(ranges.into_iter().fold(f64::MIN, f64::max));
    }
    let (sp, sm, st) = (
        oracle_wilder(&plus, n),
        oracle_wilder(&minus, n),
        oracle_wilder(&tr, n),
    );
    let dx: Vec<f64> = (n - 1..len - 1)
        .map(|j| {
            if st[j] == 0.0 {
                return 0.0;
            }
            let (pdi, mdi) = (100.0 * sp[j] / st[j], 100.0 * sm[j] / st[j]);
            if pdi + mdi == 0.0 {
                0.0
            } else {
                100.0 * (pdi - mdi).abs() / (pdi + mdi)
            }
        })
        .collect();
    // dx[k] belongs to bar k + n
    let adx = oracle_wilder(&dx, n);
    for (k, v) in adx.into_iter().enumerate() {
        if !v.is_nan() {
            out[k + n] = Some(v);
        }
    }
    out
}

/// (lower, middle, upper) with the population standard deviation.
pub fn oracle_bollinger(close: &[f64], n: usize, k: f64) -> Vec<Option<(f64, f64, f64)>> {
    (0..close.len())
        .map(|t| {
            (t + 1 >= n).then(|| {
                let w = &close[t + 1 - n..=t];
                let mean = w.iter().sum::<f64>() / n as f64;
                let sd = (w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
                (mean - k * sd, mean, mean + k * sd)
            })
        })
        .collect()
}

pub fn oracle_wr(high: &[f64], low: &[f64], close: &[f64], n: usize) -> Vec<Option<f64>> {
    (0..close.len())
        .map(|t| {
            (t + 1 >= n).then(|| {
                let hh = high[t + 1 - n..=t].iter().cloned().fold(f64::MIN, f64::max);
                let ll = low[t + 1 - n..=t].iter().cloned().fold(f64::MAX, f64::min);
                if hh == ll {
                    -50.0
                } else {
                    -100.0 * (hh - close[t]) / (hh - ll)
                }
            })
        })
        .collect()
}

pub fn max_gap(a: &[Option<f64>], b: &[Option<f64>]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| match (x, y) {
            (Some(x), Some(y)) => (x - y).abs(),
            (None, None) => 0.0,
            _ => f64::INFINITY,
        })
        .fold(0.0, f64::max)
}

/// ZigZag straight from its definition: list every candidate by scanning
/// the full window around each bar, then filter the list in order.
pub fn oracle_zigzag(series: &CandleSeries, p: &ZigZagParams) -> Vec<(usize, PivotKind, f64)> {
    let (high, low) = (series.highs(), series.lows());
    let d = p.depth;
    let mut candidates = vec![];
    for i in d..high.len() {
        if i + d >= high.len() {
            break;
        }
        // earliest bar wins ties: strictly better than everything before it
        let trough =
            (i - d..i).all(|j| low[j] > low[i]) && (i + 1..=i + d).all(|j| low[j] >= low[i]);
        let peak =
            (i - d..i).all(|j| high[j] < high[i]) && (i + 1..=i + d).all(|j| high[j] <= high[i]);
        if trough {
            candidates.push((i, PivotKind::Trough, low[i]));
        }
        if peak {
            candidates.push((i, PivotKind::Peak, high[i]));
        }
    }
    let min_move = p.deviation_pips * series.pip_size();
    let mut pivots: Vec<(usize, PivotKind, f64)> = vec![];
    for c in candidates {
        match pivots.last_mut() {
            None => pivots.push(c),
            Some(last) if last.1 == c.1 => {
                let better = if c.1 == PivotKind::Peak {
                    c.2 > last.2
                } else {
                    c.2 < last.2
                };
                if better {
                    *last = c;
                }
            }
            Some(last) => {
                let moved = if c.1 == PivotKind::Peak {
                    c.2 - last.2
                } else {
                    last.2 - c.2
                };
                if c.0 > last.0 && c.0 - last.0 >= p.backstep && moved >= min_move {
                    pivots.push(c);
                }
            }
        }
    }
    pivots
}

pub fn random_window(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.5..1.5))
}

/// Finite-difference check (step 1e-5) of a whole model on a squared-error
/// loss; returns the largest relative error.
pub fn model_grad_error(arch: Architecture, hidden: usize, n: usize, input: usize) -> f64 {
    let cfg = ModelConfig {
        hidden,
        input_dim: input,
        ..ModelConfig::new(arch, n, 7 + arch.id())
    };
    let mut model = RecurrentModel::new(cfg).unwrap();
    let window = random_window(n, input, 100 + hidden as u64);
    let target = 0.3;
    let report = grad_check(
        &mut model,
        1e-5,
        |m| {
            let y = m.predict_one(&window)?;
            Ok((y - target) * (y - target))
        },
        |m| {
            let y = m.model_forward(&window)?;
            m.model_backward(2.0 * (y - target))
        },
    )
    .unwrap();
    assert_eq!(report.checked, model.param_count());
    report.max_rel_error
}

/// Largest absolute gap between each of the seven kernels and its oracle over
/// `series_count` random series of length `len`, with the default periods
/// plus one random period per kernel and series.
pub fn indicator_oracle_gaps(series_count: u64, len: usize) -> Vec<(&'static str, f64)> {
    use retrace::indicators::{adx, bollinger, ema, macd, rsi, sma, williams_r, IndicatorParams};
    let mut gaps = vec![
        ("SMA", 0.0),
        ("EMA", 0.0),
        ("MACD", 0.0),
        ("RSI", 0.0),
        ("ADX", 0.0),
        ("Bollinger", 0.0),
        ("WR", 0.0),
    ];
    let defaults = IndicatorParams::default();
    for seed in 0..series_count {
        let s = random_series(seed, len);
        let (h, l, c) = (s.highs(), s.lows(), s.closes());
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + seed);
        fn pick(rng: &mut ChaCha8Rng, fixed: &[usize]) -> Vec<usize> {
            let mut v = fixed.to_vec();
            v.push(rng.gen_range(1..60));
            v
        }
        let mut bump = |i: usize, g: f64| gaps[i].1 = f64::max(gaps[i].1, g);

        for n in pick(&mut rng, &defaults.sma) {
            bump(0, max_gap(&sma(&c, n), &oracle_sma(&c, n)));
        }
        for n in pick(&mut rng, &[5, 20]) {
            let got: Vec<Option<f64>> = ema(&c, n).into_iter().map(Some).collect();
            let want: Vec<Option<f64>> = oracle_ema(&c, n).into_iter().map(Some).collect();
            bump(1, max_gap(&got, &want));
        }
        let mut params = defaults.clone();
        if seed % 2 == 1 {
            params.macd_fast = rng.gen_range(2..10);
            params.macd_slow = params.macd_fast + rng.gen_range(1..30);
            params.macd_signal = rng.gen_range(2..15);
            params.boll_window = rng.gen_range(2..50);
            params.boll_k = rng.gen_range(0.5..3.0);
        }
        let m = macd(&c, &params).unwrap();
        let fast = oracle_ema(&c, params.macd_fast);
        let slow = oracle_ema(&c, params.macd_slow);
        let line: Vec<f64> = fast.iter().zip(&slow).map(|(f, s)| f - s).collect();
        let signal = oracle_ema(&line, params.macd_signal);
        for t in 0..c.len() {
            let hist = line[t] - signal[t];
            let g = (m.macd[t] - line[t])
                .abs()
                .max((m.signal[t] - signal[t]).abs())
                .max((m.histogram[t] - hist).abs());
            bump(2, g);
        }
        for n in pick(&mut rng, &defaults.rsi) {
            bump(3, max_gap(&rsi(&c, n), &oracle_rsi(&c, n)));
        }
        for n in pick(&mut rng, &defaults.adx) {
            bump(
                4,
                max_gap(&adx(&h, &l, &c, n).unwrap(), &oracle_adx(&h, &l, &c, n)),
            );
        }
        let b = bollinger(&c, &params).unwrap();
        let want = oracle_bollinger(&c, params.boll_window, params.boll_k);
        for part in 0..3 {
            let got = [&b.lower, &b.middle, &b.upper][part];
            let want: Vec<Option<f64>> = want
                .iter()
                .map(|v| v.map(|(lo, mid, up)| [lo, mid, up][part]))
                .collect();
            bump(5, max_gap(got, &want));
        }
        for n in pick(&mut rng, &defaults.wr) {
            bump(
                6,
                max_gap(
                    &williams_r(&h, &l, &c, n).unwrap(),
                    &oracle_wr(&h, &l, &c, n),
                ),
            );
        }
    }
    gaps
}

/// Boundary identities of the indicator kernels over `series_count` random
/// series; each entry is (identity, holds).
pub fn indicator_identities(series_count: u64, len: usize) -> Vec<(&'static str, bool)> {
    use retrace::indicators::{adx, bollinger, rsi, williams_r, IndicatorParams};
    let rise: Vec<f64> = (0..200)
        .map(|i| 1.0 + i as f64 * 1e-4 + (i as f64 * 0.1).sin().abs() * 1e-6)
        .collect();
    let rise: Vec<f64> = rise
        .iter()
        .scan(0.0f64, |m, &x| {
            *m = m.max(x) + 1e-7;
            Some(*m)
        })
        .collect();
    let rsi_rise = [2usize, 5, 14, 25]
        .iter()
        .all(|&n| rsi(&rise, n)[n..].iter().all(|v| *v == Some(100.0)));

    let (mut wr_ok, mut rsi_ok, mut adx_ok, mut boll_ok) = (true, true, true, true);
    let params = IndicatorParams::default();
    for seed in 0..series_count {
        let s = random_series(500 + seed, len);
        let (h, l, c) = (s.highs(), s.lows(), s.closes());
        for n in [1usize, 5, 14, 25] {
            wr_ok &= williams_r(&h, &l, &c, n)
                .unwrap()
                .iter()
                .flatten()
                .all(|v| (-100.0..=0.0).contains(v));
            rsi_ok &= rsi(&c, n)
                .iter()
                .flatten()
                .all(|v| (0.0..=100.0).contains(v));
            adx_ok &= adx(&h, &l, &c, n)
                .unwrap()
                .iter()
                .flatten()
                .all(|v| (0.0..=100.0).contains(v));
        }
        let b = bollinger(&c, &params).unwrap();
        for t in 0..c.len() {
            if let (Some(lo), Some(mid), Some(up)) = (b.lower[t], b.middle[t], b.upper[t]) {
                let symmetric = ((up - mid) - (mid - lo)).abs() <= 1e-12 * mid.abs();
                boll_ok &= lo <= mid && mid <= up && symmetric;
            }
        }
    }
    vec![
        ("RSI = 100 on a monotone rise", rsi_rise),
        ("RSI in [0, 100]", rsi_ok),
        ("WR in [-100, 0]", wr_ok),
        ("ADX in [0, 100]", adx_ok),
        ("Bollinger lower <= middle <= upper, symmetric", boll_ok),
    ]
}

/// Runs the streaming ZigZag against the oracle on `count` random pip-grid
/// series (length <= 256) with random parameters; returns the number of
/// mismatching series and the number of pivots compared.
pub fn zigzag_oracle_mismatches(count: u64) -> (usize, usize) {
    use retrace::events::zigzag;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5a5a);
    let (mut bad, mut pivots) = (0, 0);
    for _ in 0..count {
        let len = rng.gen_range(1..=256);
        let step = rng.gen_range(0..=8);
        let wick = rng.gen_range(0..=4);
        let series = pip_grid_series(&mut rng, len, step, wick);
        let params = ZigZagParams {
            depth: rng.gen_range(1..=16),
            deviation_pips: rng.gen_range(0.5..25.0),
            backstep: rng.gen_range(0..=8),
        };
        let got: Vec<(usize, PivotKind, f64)> = zigzag(&series, &params)
            .unwrap()
            .iter()
            .map(|p| (p.index, p.kind, p.price))
            .collect();
        let confirm_ok = zigzag(&series, &params)
            .unwrap()
            .iter()
            .all(|p| p.confirm_index == p.index + params.depth && p.confirm_index < series.len());
        let want = oracle_zigzag(&series, &params);
        pivots += want.len();
        if got != want || !confirm_ok {
            bad += 1;
        }
    }
    (bad, pivots)
}

/// Checks every emitted sequence on `count` synthetic series of `len` bars.
/// Returns (violations, sequences checked, identity failures).
pub fn event_invariant_violations(count: u64, len: usize) -> (Vec<String>, usize, usize) {
    use retrace::events::{detect_events, CrossDirection, EventConfig, Trend};
    use retrace::market_data::{synthetic_series, SynthRegime};
    let mut violations = vec![];
    let (mut checked, mut identity_failures) = (0, 0);
    for seed in 0..count {
        let config = EventConfig {
            causal_filter: seed % 4 == 3,
            ..EventConfig::default()
        };
        let series = synthetic_series(seed, len, &SynthRegime::default()).unwrap();
        let closes = series.closes();
        let ev = detect_events(&series, &config).unwrap();
        let d = ev.assembly.diagnostics;
        let seqs = ev.sequences();
        if seqs.len() + d.missing_retracement + d.causal_dropped != d.eligible_crossovers
            || d.eligible_crossovers + d.missing_crossover != d.pivots
            || seqs.len() > ev.crosses.len()
        {
            identity_failures += 1;
        }
        for s in seqs {
            checked += 1;
            let mut fail =
                |what: &str| violations.push(format!("seed {seed} e2 {}: {what}", s.e2.index));
            if !(s.e1.index < s.e2.index && s.e2.index < s.e3_index) {
                fail("ordering");
            }
            let consistent = match s.trend {
                Trend::Up => {
                    s.e1.kind == PivotKind::Trough && s.e2.direction == CrossDirection::Bullish
                }
                Trend::Down => {
                    s.e1.kind == PivotKind::Peak && s.e2.direction == CrossDirection::Bearish
                }
            };
            if !consistent {
                fail("trend/direction");
            }
            let k = ev.pivots.iter().position(|p| *p == s.e1);
            let Some(k) = k else {
                fail("e1 is not a pivot");
                continue;
            };
            let barrier = ev.pivots.get(k + 1).map_or(series.len(), |p| p.index);
            if s.e3_index >= (s.e2.index + config.retrace.lookahead).min(barrier) {
                fail("e3 outside the lookahead window");
            }
            if s.e2.index >= barrier || !ev.crosses.contains(&s.e2) {
                fail("e2 is not a crossover before the next pivot");
            }
            let beyond = match s.trend {
                Trend::Up => s.e3_price < closes[s.e2.index],
                Trend::Down => s.e3_price > closes[s.e2.index],
            };
            if s.e3_price != closes[s.e3_index] || !beyond {
                fail("e3 price");
            }
            if config.causal_filter && s.e2.index < s.e1.confirm_index {
                fail("causal filter");
            }
        }
    }
    (violations, checked, identity_failures)
}

/// Dataset windowing checks on the default synthetic series for each
/// timestep count: (windows are exact slices with shape n x 28, no window
/// touches the warm-up, samples + skipped = sequences, worst relative target
/// round-trip error).
pub fn dataset_window_checks(
    seed: u64,
    candles: usize,
    timesteps: &[usize],
) -> (bool, bool, bool, f64) {
    use retrace::dataset::{
        apply_norm, build_samples, fit_normalizer, invert_target, partition_by_cutoff,
    };
    use retrace::events::{detect_events, EventConfig};
    use retrace::indicators::{feature_matrix, IndicatorParams, FEATURE_COUNT};
    use retrace::market_data::{synthetic_series, SynthRegime};
    let series = synthetic_series(seed, candles, &SynthRegime::default()).unwrap();
    let features = feature_matrix(&series, &IndicatorParams::default()).unwrap();
    let events = detect_events(&series, &EventConfig::default()).unwrap();
    let (mut slices, mut warmup, mut tally) = (true, true, true);
    let mut worst = 0.0f64;
    for &n in timesteps {
        let w = build_samples(&features, events.sequences(), n, &series).unwrap();
        tally &= w.samples.len() + w.skipped == events.sequences().len();
        for s in &w.samples {
            let e2 = s.e2_index.unwrap();
            slices &= s.window.shape() == (n, FEATURE_COUNT);
            warmup &= e2 + 1 >= n && e2 + 1 - n >= features.warmup_len();
            if !warmup {
                continue;
            }
            for (r, t) in (e2 + 1 - n..=e2).enumerate() {
                let row = features.row(t);
                slices &= s
                    .window
                    .row(r)
                    .iter()
                    .zip(row)
                    .all(|(a, b)| Some(a.to_bits()) == b.map(f64::to_bits));
            }
        }
        let cutoff = w.samples[w.samples.len() * 4 / 5].e2_timestamp;
        let (train, test) = partition_by_cutoff(w.samples, n, cutoff).unwrap();
        let stats = fit_normalizer(&train).unwrap();
        for ds in [&train, &test] {
            let normed = apply_norm(ds, &stats);
            for (raw, z) in ds.samples.iter().zip(&normed.samples) {
                let back = invert_target(z.target, &stats);
                worst = worst.max((back - raw.target).abs() / raw.target.abs());
            }
        }
    }
    (slices, warmup, tally, worst)
}

/// Metric identities: worst relative gap between rmse^2 and mse over
/// `count` random vector pairs, the hand case, and the published-table
/// consistency check. Entries are (name, holds, detail).
pub fn metric_fidelity(count: u64) -> Vec<(&'static str, bool, String)> {
    use retrace::evaluation::{mae, mape, mse, rmse};
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    for _ in 0..count {
        let len = rng.gen_range(1..200);
        let scale = 10f64.powi(rng.gen_range(-6..4));
        let t: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0) * scale).collect();
        let p: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0) * scale).collect();
        let (m, r) = (mse(&t, &p).unwrap(), rmse(&t, &p).unwrap());
        worst = worst.max((r * r - m).abs() / m);
    }
    let hand = (
        mse(&[2.0], &[1.0]).unwrap(),
        rmse(&[2.0], &[1.0]).unwrap(),
        mae(&[2.0], &[1.0]).unwrap(),
        mape(&[2.0], &[1.0]).unwrap(),
    );
    // a 3-decimal MSE of 1.846e-3 stands for any value in [1.8455, 1.8465)e-3
    let (lo, hi) = ((1.8455e-3f64).sqrt() * 1e3, (1.8465e-3f64).sqrt() * 1e3);
    let table =
        (lo..hi).contains(&42.960) && format!("{:.2}", (1.846e-3f64).sqrt() * 1e3) == "42.97";
    vec![
        ("rmse^2 = mse (rel 1e-12)", worst < 1e-12, format!("worst {worst:.2e} over {count} vectors")),
        ("hand case (1, 1, 1, 50%)", hand == (1.0, 1.0, 1.0, 50.0), format!("{hand:?}")),
        (
            "sqrt(1.846e-3) vs 42.960e-3",
            table,
            format!("sqrt(1.846e-3) = {:.3}e-3, MSE rounding interval gives RMSE in [{lo:.3}, {hi:.3})e-3", (1.846e-3f64).sqrt() * 1e3),
        ),
    ]
}

/// The default grid (4 kinds x {30, 60}) with a small network and a short
/// training budget, writing into `dir`.
pub fn quick_grid_config(dir: &std::path::Path) -> retrace::evaluation::ExperimentConfig {
    use retrace::evaluation::ExperimentConfig;
    let mut c = ExperimentConfig::default();
    c.grid.hidden = 6;
    c.training.max_epochs = 3;
    c.output.dir = dir.to_path_buf();
    c
}

/// Files (relative to the output directories) whose bytes differ.
pub fn differing_files(
    a: &std::path::Path,
    b: &std::path::Path,
    files: &[std::path::PathBuf],
) -> Vec<String> {
    files
        .iter()
        .filter(|f| {
            std::fs::read(a.join(f)).ok() != std::fs::read(b.join(f)).ok() || !a.join(f).is_file()
        })
        .map(|f| f.display().to_string())
        .collect()
}

/// Runs `config` twice into the same output directory and returns the
/// files whose bytes changed between the runs.
pub fn rerun_differences(config: &retrace::evaluation::ExperimentConfig) -> Vec<String> {
    use retrace::evaluation::{output_files, run_experiment};
    let files = output_files(config);
    run_experiment(config).unwrap();
    let first: Vec<Option<Vec<u8>>> = files
        .iter()
        .map(|f| std::fs::read(config.output.dir.join(f)).ok())
        .collect();
    run_experiment(config).unwrap();
    files
        .iter()
        .zip(first)
        .filter(|(f, bytes)| {
            bytes.is_none() || std::fs::read(config.output.dir.join(f)).ok() != *bytes
        })
        .map(|(f, _)| f.display().to_string())
        .collect()
}
