//! Browser bindings for the static demo in `www/`.
//!
//! Every export takes plain numbers and strings and returns a JSON document;
//! failures come back as `{"error": "..."}` so the page needs no exception
//! handling. The same functions run natively, which is how they are tested.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use retrace::dataset::{apply_norm, build_samples, fit_normalizer, partition_by_cutoff};
use retrace::evaluation::{baseline_persistence, split_cutoff, ExperimentConfig, MetricsReport};
use retrace::events::detect_events;
use retrace::indicators::feature_matrix;
use retrace::market_data::{synthetic_series, CandleSeries};
use retrace::recurrent::{predict, train, Architecture, ModelConfig};
use retrace::Result;

/// Series longer than this would make the page sluggish.
const MAX_CANDLES: usize = 20_000;

fn respond<T: Serialize>(result: Result<T>) -> String {
    let json = match result {
        Ok(body) => serde_json::to_string(&body),
        Err(e) => serde_json::to_string(&serde_json::json!({ "error": e.to_string() })),
    };
    json.expect("demo payloads serialise")
}

fn series(config: &ExperimentConfig, seed: u32, candles: u32) -> Result<CandleSeries> {
    let n = (candles as usize).min(MAX_CANDLES);
    synthetic_series(seed as u64, n, &config.data.regime)
}

#[derive(Serialize)]
struct PivotOut {
    index: usize,
    kind: &'static str,
    price: f64,
}

#[derive(Serialize)]
struct SequenceOut {
    e1: usize,
    e1_price: f64,
    e2: usize,
    e2_close: f64,
    e3: usize,
    e3_price: f64,
    trend: &'static str,
}

#[derive(Serialize)]
struct EventsOut {
    open: Vec<f64>,
    high: Vec<f64>,
    low: Vec<f64>,
    close: Vec<f64>,
    fast: Vec<Option<f64>>,
    slow: Vec<Option<f64>>,
    pivots: Vec<PivotOut>,
    crossovers: Vec<(usize, &'static str)>,
    sequences: Vec<SequenceOut>,
    missing_crossover: usize,
    missing_retracement: usize,
}

fn events_impl(seed: u32, candles: u32, depth: u32, deviation_pips: f64) -> Result<EventsOut> {
    let mut config = ExperimentConfig::default();
    config.events.zigzag.depth = depth as usize;
    config.events.zigzag.deviation_pips = deviation_pips;
    config.events.validate()?;
    let s = series(&config, seed, candles)?;
    let ev = detect_events(&s, &config.events)?;
    let (fast, slow) = config.events.crossover.lines(&s.closes());
    let c = s.candles();
    let d = ev.assembly.diagnostics;
    Ok(EventsOut {
        open: c.iter().map(|k| k.open).collect(),
        high: c.iter().map(|k| k.high).collect(),
        low: c.iter().map(|k| k.low).collect(),
        close: c.iter().map(|k| k.close).collect(),
        fast,
        slow,
        pivots: ev
            .pivots
            .iter()
            .map(|p| PivotOut {
                index: p.index,
                kind: p.kind.as_str(),
                price: p.price,
            })
            .collect(),
        crossovers: ev
            .crosses
            .iter()
            .map(|x| (x.index, x.direction.as_str()))
            .collect(),
        sequences: ev
            .sequences()
            .iter()
            .map(|q| SequenceOut {
                e1: q.e1.index,
                e1_price: q.e1.price,
                e2: q.e2.index,
                e2_close: c[q.e2.index].close,
                e3: q.e3_index,
                e3_price: q.e3_price,
                trend: q.trend.as_str(),
            })
            .collect(),
        missing_crossover: d.missing_crossover,
        missing_retracement: d.missing_retracement,
    })
}

/// Synthetic candles with their ZigZag pivots, moving-average crossovers and
/// pivot/crossover/retracement sequences.
#[wasm_bindgen]
pub fn detect(seed: u32, candles: u32, depth: u32, deviation_pips: f64) -> String {
    respond(events_impl(seed, candles, depth, deviation_pips))
}

#[derive(Serialize)]
struct IndicatorsOut {
    columns: Vec<String>,
    values: Vec<Vec<Option<f64>>>,
    warmup: usize,
}

fn indicators_impl(
    seed: u32,
    candles: u32,
    boll_window: u32,
    boll_k: f64,
) -> Result<IndicatorsOut> {
    let mut config = ExperimentConfig::default();
    config.indicators.boll_window = boll_window as usize;
    config.indicators.boll_k = boll_k;
    config.indicators.validate()?;
    let s = series(&config, seed, candles)?;
    let f = feature_matrix(&s, &config.indicators)?;
    Ok(IndicatorsOut {
        columns: f.columns().to_vec(),
        values: (0..f.columns().len()).map(|j| f.column(j)).collect(),
        warmup: f.warmup_len(),
    })
}

/// The 28 feature columns, `null` during each indicator's warm-up. The
/// Bollinger window and width are adjustable.
#[wasm_bindgen]
pub fn indicators(seed: u32, candles: u32, boll_window: u32, boll_k: f64) -> String {
    respond(indicators_impl(seed, candles, boll_window, boll_k))
}

#[derive(Serialize)]
struct ForecastOut {
    train_samples: usize,
    test_samples: usize,
    train_loss: Vec<f64>,
    val_loss: Vec<f64>,
    best_epoch: usize,
    truth: Vec<f64>,
    predicted: Vec<f64>,
    persistence: Vec<f64>,
    metrics: Vec<MetricsReport>,
}

fn forecast_impl(
    seed: u32,
    candles: u32,
    kind: &str,
    timesteps: u32,
    hidden: u32,
    epochs: u32,
) -> Result<ForecastOut> {
    let arch: Architecture = kind.parse()?;
    let n = timesteps as usize;
    let mut config = ExperimentConfig::default();
    config.training.max_epochs = epochs as usize;
    config.training.validate()?;
    let s = series(&config, seed, candles)?;
    let features = feature_matrix(&s, &config.indicators)?;
    let ev = detect_events(&s, &config.events)?;
    let cutoff = split_cutoff(&config.split, &s, ev.sequences())?;
    let windowed = build_samples(&features, ev.sequences(), n, &s)?;
    let (train_raw, test_raw) = partition_by_cutoff(windowed.samples, n, cutoff)?;
    if train_raw.is_empty() || test_raw.is_empty() {
        return Err(retrace::Error::Config(format!(
            "{} train and {} test windows; use more candles or fewer timesteps",
            train_raw.len(),
            test_raw.len()
        )));
    }
    let stats = fit_normalizer(&train_raw)?;
    let model_config = ModelConfig {
        hidden: hidden as usize,
        ..ModelConfig::new(arch, n, seed as u64)
    };
    let (model, report) = train(
        &apply_norm(&train_raw, &stats),
        &model_config,
        &config.training,
    )?;
    let predicted = predict(&model, &apply_norm(&test_raw, &stats), &stats)?;
    let persistence = baseline_persistence(&test_raw, &s)?;
    let truth = test_raw.targets();
    let metrics = vec![
        MetricsReport::compute(arch.name(), n, &truth, &predicted)?,
        MetricsReport::compute("Persist", n, &truth, &persistence)?,
    ];
    Ok(ForecastOut {
        train_samples: train_raw.len(),
        test_samples: test_raw.len(),
        train_loss: report.train_loss,
        val_loss: report.val_loss,
        best_epoch: report.best_epoch,
        truth,
        predicted,
        persistence,
        metrics,
    })
}

/// Trains one model on the chronological training split and scores it
/// against persistence on the held-out sequences.
#[wasm_bindgen]
pub fn forecast(
    seed: u32,
    candles: u32,
    kind: &str,
    timesteps: u32,
    hidden: u32,
    epochs: u32,
) -> String {
    respond(forecast_impl(
        seed, candles, kind, timesteps, hidden, epochs,
    ))
}
