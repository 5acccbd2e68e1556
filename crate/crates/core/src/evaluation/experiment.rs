use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, SplitConfig};
use super::metrics::{baseline_persistence, emit_predictions, MetricsReport};
use crate::dataset::{
    apply_norm, build_samples, fit_normalizer, partition_by_cutoff, Dataset, NormStats,
};
use crate::error::{Error, Result};
use crate::events::{detect_events, AssemblyDiagnostics, EventSequence};
use crate::indicators::feature_matrix;
use crate::market_data::{load_csv, synthetic_series, CandleSeries};
use crate::recurrent::{predict, train, Architecture, ModelConfig, TrainReport};

/// splitmix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one grid cell: depends only on the global seed, the model kind
/// and the timestep count, never on the cell's position in the grid.
pub fn cell_seed(global: u64, arch: Architecture, n_timesteps: usize) -> u64 {
    mix(global ^ mix((arch.id() << 32) | n_timesteps as u64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub symbol: String,
    pub candles: usize,
    pub first_timestamp: i64,
    pub last_timestamp: i64,
    pub data_seed: Option<u64>,
    pub warmup_len: usize,
    pub diagnostics: AssemblyDiagnostics,
    pub sequences: usize,
    pub cutoff_timestamp: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSummary {
    pub n_timesteps: usize,
    pub samples: usize,
    pub skipped: usize,
    pub train_samples: usize,
    pub test_samples: usize,
    pub norm_fingerprint: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub model: Architecture,
    pub n_timesteps: usize,
    pub seed: u64,
    pub predictions: Option<String>,
    pub train_report: Option<TrainReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub model: Architecture,
    pub n_timesteps: usize,
    pub error: String,
}

/// Everything one run produced; also written to the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub data: DataSummary,
    pub windows: Vec<WindowSummary>,
    /// One row per successful grid cell, in grid order.
    pub rows: Vec<MetricsReport>,
    /// Persistence baseline on each timestep value's test set.
    pub baselines: Vec<MetricsReport>,
    pub failures: Vec<CellFailure>,
    pub cells: Vec<CellRecord>,
}

impl ExperimentOutcome {
    pub fn row(&self, model: Architecture, n_timesteps: usize) -> Option<&MetricsReport> {
        self.rows
            .iter()
            .find(|r| r.model == model.name() && r.n_timesteps == n_timesteps)
    }

    pub fn baseline(&self, n_timesteps: usize) -> Option<&MetricsReport> {
        self.baselines.iter().find(|r| r.n_timesteps == n_timesteps)
    }

    /// Human-readable table with MSE/RMSE/MAE in units of 10⁻³.
    pub fn table(&self) -> String {
        let d = &self.data;
        let mut out = String::new();
        writeln!(
            out,
            "{}: {} candles, {} sequences, cutoff {}",
            d.symbol, d.candles, d.sequences, d.cutoff_timestamp
        )
        .unwrap();
        writeln!(out, "{}", MetricsReport::table_header()).unwrap();
        for r in &self.rows {
            writeln!(out, "{}", r.table_row()).unwrap();
        }
        if !self.baselines.is_empty() {
            writeln!(out, "\npersistence baseline").unwrap();
            for r in &self.baselines {
                writeln!(out, "{}", r.table_row()).unwrap();
            }
        }
        for f in &self.failures {
            writeln!(out, "\nFAILED {} {}: {}", f.model, f.n_timesteps, f.error).unwrap();
        }
        out
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a ExperimentConfig,
    data: &'a DataSummary,
    windows: &'a [WindowSummary],
    cells: &'a [CellRecord],
}

#[derive(Serialize)]
struct ReportJson<'a> {
    series: &'a str,
    rows: &'a [MetricsReport],
    baselines: &'a [MetricsReport],
    failures: &'a [CellFailure],
}

pub fn load_series(config: &ExperimentConfig) -> Result<(CandleSeries, Option<u64>)> {
    let data = &config.data;
    match &data.csv {
        Some(path) => Ok((load_csv(path, &data.symbol, data.pip_size)?, None)),
        None => {
            let seed = data.seed.unwrap_or(config.seed);
            let regime = crate::market_data::SynthRegime {
                symbol: data.symbol.clone(),
                pip_size: data.pip_size,
                ..data.regime.clone()
            };
            Ok((synthetic_series(seed, data.candles, &regime)?, Some(seed)))
        }
    }
}

/// Train/test boundary: the configured cutoff, or else the crossover time of
/// the first sequence past `train_fraction`. Sequences are ordered by
/// crossover bar, so everything earlier trains.
pub fn split_cutoff(
    split: &SplitConfig,
    series: &CandleSeries,
    sequences: &[EventSequence],
) -> Result<i64> {
    if let Some(ts) = split.cutoff_timestamp()? {
        return Ok(ts);
    }
    let k = (sequences.len() as f64 * split.train_fraction).floor() as usize;
    Ok(sequences
        .get(k)
        .map_or(i64::MAX, |s| series.candles()[s.e2.index].timestamp))
}

/// Normalised train/test datasets for one timestep count.
pub struct PreparedData {
    pub train: Dataset,
    pub test: Dataset,
    pub stats: NormStats,
    pub summary: WindowSummary,
}

struct Pipeline {
    series: CandleSeries,
    data: DataSummary,
    prepared: BTreeMap<usize, std::result::Result<PreparedData, String>>,
}

fn prepare(config: &ExperimentConfig) -> Result<Pipeline> {
    let (series, data_seed) = load_series(config)?;
    if series.is_empty() {
        return Err(Error::config("the series has no candles"));
    }
    let features = feature_matrix(&series, &config.indicators)?;
    let events = detect_events(&series, &config.events)?;
    let sequences = events.sequences();
    let cutoff = split_cutoff(&config.split, &series, sequences)?;
    let candles = series.candles();
    let data = DataSummary {
        symbol: series.symbol().to_string(),
        candles: series.len(),
        first_timestamp: candles[0].timestamp,
        last_timestamp: candles[series.len() - 1].timestamp,
        data_seed,
        warmup_len: features.warmup_len(),
        diagnostics: events.assembly.diagnostics,
        sequences: sequences.len(),
        cutoff_timestamp: cutoff,
    };
    log::info!(
        "{}: {} candles, {} sequences, cutoff {cutoff}",
        data.symbol,
        data.candles,
        data.sequences
    );

    let mut prepared = BTreeMap::new();
    for &n in &config.grid.timesteps {
        let result = (|| -> Result<PreparedData> {
            let windowed = build_samples(&features, sequences, n, &series)?;
            let samples = windowed.samples.len();
            let (train_raw, test_raw) = partition_by_cutoff(windowed.samples, n, cutoff)?;
            if train_raw.is_empty() || test_raw.is_empty() {
                return Err(Error::config(format!(
                    "{n} timesteps: {} train and {} test samples; both splits must be non-empty",
                    train_raw.len(),
                    test_raw.len()
                )));
            }
            let stats = fit_normalizer(&train_raw)?;
            let summary = WindowSummary {
                n_timesteps: n,
                samples,
                skipped: windowed.skipped,
                train_samples: train_raw.len(),
                test_samples: test_raw.len(),
                norm_fingerprint: Some(stats.fingerprint.clone()),
            };
            Ok(PreparedData {
                train: apply_norm(&train_raw, &stats),
                test: apply_norm(&test_raw, &stats),
                stats,
                summary,
            })
        })();
        prepared.insert(n, result.map_err(|e| e.to_string()));
    }
    Ok(Pipeline {
        series,
        data,
        prepared,
    })
}

struct CellResult {
    record: CellRecord,
    metrics: Option<MetricsReport>,
    predictions: Option<(Vec<f64>, Vec<f64>)>,
    model_text: Option<String>,
}

fn run_cell(
    config: &ExperimentConfig,
    arch: Architecture,
    n: usize,
    prepared: &std::result::Result<PreparedData, String>,
) -> CellResult {
    let seed = cell_seed(config.seed, arch, n);
    let mut record = CellRecord {
        model: arch,
        n_timesteps: n,
        seed,
        predictions: None,
        train_report: None,
        error: None,
    };
    let result = (|| -> Result<_> {
        let data = prepared.as_ref().map_err(|e| Error::config(e.clone()))?;
        let model_config = ModelConfig {
            layers: config.grid.layers,
            hidden: config.grid.hidden,
            ..ModelConfig::new(arch, n, seed)
        };
        let (model, report) = train(&data.train, &model_config, &config.training)?;
        log::info!(
            "{arch}-{n}: best epoch {} of {} ({:.1}s)",
            report.best_epoch,
            report.epochs_run,
            report.wall_time_secs
        );
        let pred = predict(&model, &data.test, &data.stats)?;
        let truth: Vec<f64> = data
            .test
            .samples
            .iter()
            .map(|s| crate::dataset::invert_target(s.target, &data.stats))
            .collect();
        let metrics = MetricsReport::compute(arch.name(), n, &truth, &pred)?;
        let model_text = config
            .output
            .save_models
            .then(|| model.to_text(Some(&data.stats)))
            .transpose()?;
        Ok((report, metrics, truth, pred, model_text))
    })();
    match result {
        Ok((report, metrics, truth, pred, model_text)) => {
            record.train_report = Some(report);
            record.predictions = Some(format!("predictions/{}-{n}.csv", arch.name()));
            CellResult {
                record,
                metrics: Some(metrics),
                predictions: Some((truth, pred)),
                model_text,
            }
        }
        Err(e) => {
            log::error!("{arch}-{n} failed: {e}");
            record.error = Some(e.to_string());
            CellResult {
                record,
                metrics: None,
                predictions: None,
                model_text: None,
            }
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::Parse(e.to_string()))
}

/// Runs the whole pipeline for every grid cell and writes `report.txt`,
/// `report.json`, `manifest.json` and `predictions/<MODEL>-<n>.csv` into the
/// configured output directory. A failing cell is recorded and skipped.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let pipeline = prepare(config)?;
    let cells = config.grid.cells();

    let results: Vec<CellResult> = if config.jobs <= 1 {
        cells
            .iter()
            .map(|&(arch, n)| run_cell(config, arch, n, &pipeline.prepared[&n]))
            .collect()
    } else {
        let next = std::sync::atomic::AtomicUsize::new(0);
        let slots: Vec<std::sync::Mutex<Option<CellResult>>> =
            cells.iter().map(|_| Default::default()).collect();
        std::thread::scope(|scope| {
            for _ in 0..config.jobs.min(cells.len()) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    let Some(&(arch, n)) = cells.get(i) else {
                        break;
                    };
                    let r = run_cell(config, arch, n, &pipeline.prepared[&n]);
                    *slots[i].lock().unwrap() = Some(r);
                });
            }
        });
        slots
            .into_iter()
            .map(|s| s.into_inner().unwrap().expect("every cell ran"))
            .collect()
    };

    let out_dir = &config.output.dir;
    let pred_dir = out_dir.join("predictions");
    fs::create_dir_all(&pred_dir).map_err(|e| Error::io(&pred_dir, e))?;

    let mut outcome = ExperimentOutcome {
        data: pipeline.data.clone(),
        windows: Vec::new(),
        rows: Vec::new(),
        baselines: Vec::new(),
        failures: Vec::new(),
        cells: Vec::new(),
    };
    for &n in &config.grid.timesteps {
        if let Ok(p) = &pipeline.prepared[&n] {
            outcome.windows.push(p.summary.clone());
            let base = baseline_persistence(&p.test, &pipeline.series)?;
            let truth: Vec<f64> = p
                .test
                .samples
                .iter()
                .map(|s| crate::dataset::invert_target(s.target, &p.stats))
                .collect();
            outcome
                .baselines
                .push(MetricsReport::compute("Persist", n, &truth, &base)?);
        }
    }
    for r in results {
        let (arch, n) = (r.record.model, r.record.n_timesteps);
        if let (Some(metrics), Some((truth, pred))) = (r.metrics, &r.predictions) {
            let test = &pipeline.prepared[&n].as_ref().expect("cell succeeded").test;
            emit_predictions(
                test,
                truth,
                pred,
                pred_dir.join(format!("{}-{n}.csv", arch.name())),
            )?;
            if let Some(text) = &r.model_text {
                write_text(
                    &out_dir.join(format!("model-{}-{n}.txt", arch.name())),
                    text,
                )?;
            }
            outcome.rows.push(metrics);
        } else {
            outcome.failures.push(CellFailure {
                model: arch,
                n_timesteps: n,
                error: r.record.error.clone().unwrap_or_default(),
            });
        }
        outcome.cells.push(r.record);
    }

    write_text(&out_dir.join("report.txt"), &outcome.table())?;
    write_text(
        &out_dir.join("report.json"),
        &to_json(&ReportJson {
            series: &outcome.data.symbol,
            rows: &outcome.rows,
            baselines: &outcome.baselines,
            failures: &outcome.failures,
        })?,
    )?;
    write_text(
        &out_dir.join("manifest.json"),
        &to_json(&Manifest {
            config,
            data: &outcome.data,
            windows: &outcome.windows,
            cells: &outcome.cells,
        })?,
    )?;
    Ok(outcome)
}

/// Files a run writes, relative to the output directory.
pub fn output_files(config: &ExperimentConfig) -> Vec<PathBuf> {
    let mut files = vec![
        PathBuf::from("report.txt"),
        PathBuf::from("report.json"),
        PathBuf::from("manifest.json"),
    ];
    for (arch, n) in config.grid.cells() {
        files.push(PathBuf::from(format!(
            "predictions/{}-{n}.csv",
            arch.name()
        )));
    }
    files
}
