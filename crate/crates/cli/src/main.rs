//! `retrace`: run the forecasting pipeline stage by stage or as a full grid.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use retrace::dataset::{
    apply_norm, build_samples, fit_normalizer, partition_by_cutoff, read_dataset_csv,
    write_dataset_csv, Dataset, Role,
};
use retrace::evaluation::{
    baseline_persistence, emit_predictions, load_series, run_experiment, split_cutoff,
    ExperimentConfig, MetricsReport,
};
use retrace::events::{detect_events, write_events_csv};
use retrace::indicators::feature_matrix;
use retrace::market_data::{load_csv, CandleSeries};
use retrace::recurrent::{predict, train, Architecture, ModelConfig, RecurrentModel};
use retrace::{Error, Result};

#[derive(Parser)]
#[command(
    name = "retrace",
    version,
    about = "Event-driven retracement forecasting on OHLC candles"
)]
struct Cli {
    /// Log progress to stderr (RUST_LOG takes precedence).
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SeriesArgs {
    /// Candle CSV with a timestamp,open,high,low,close header.
    #[arg(long)]
    csv: PathBuf,
    #[arg(long, default_value = "SERIES")]
    symbol: String,
    #[arg(long, default_value_t = 1e-4)]
    pip_size: f64,
    /// Config file whose [indicators] and [events] sections apply.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl SeriesArgs {
    fn load(&self) -> Result<(CandleSeries, ExperimentConfig)> {
        let config = load_config(self.config.as_deref())?;
        Ok((load_csv(&self.csv, &self.symbol, self.pip_size)?, config))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Split {
    Train,
    Test,
}

impl Split {
    fn role(self) -> Role {
        match self {
            Split::Train => Role::Train,
            Split::Test => Role::Test,
        }
    }

    fn prefix(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic candle series.
    Synth {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 5000)]
        candles: usize,
        /// Config file whose [data] section (symbol, pip size, regime) applies.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute the 28-column feature matrix.
    Features {
        #[command(flatten)]
        series: SeriesArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Detect pivots, crossovers and e1/e2/e3 sequences.
    Events {
        #[command(flatten)]
        series: SeriesArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build raw train/test window datasets for one timestep count.
    Dataset {
        #[command(flatten)]
        series: SeriesArgs,
        #[arg(long)]
        timesteps: usize,
        /// Crossover timestamp that starts the test split; defaults to the
        /// config's train_fraction of the sequences.
        #[arg(long)]
        cutoff: Option<String>,
        /// Receives {train,test}_windows.csv and {train,test}_targets.csv.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Train one model on a dataset directory's training split.
    Train {
        #[arg(long)]
        data_dir: PathBuf,
        /// RNN, LSTM, BiLSTM or GRU.
        #[arg(long)]
        kind: Architecture,
        #[arg(long, default_value_t = 2)]
        layers: usize,
        #[arg(long, default_value_t = 64)]
        hidden: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Config file whose [training] section applies.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Model file; the normalisation statistics are stored with it.
        #[arg(long)]
        model: PathBuf,
        /// Optional JSON training report.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Score a saved model on a dataset split.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data_dir: PathBuf,
        #[arg(long, value_enum, default_value_t = Split::Test)]
        split: Split,
        /// Candle CSV the dataset came from; adds the persistence baseline.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        predictions: PathBuf,
        /// Optional JSON metrics report.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run the full model grid described by a config file.
    Experiment {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides output.dir.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Overrides the global seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the number of grid cells trained in parallel.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Print the commented default configuration.
    ConfigExample {
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)
        .map_err(|e| Error::Usage(format!("cannot write {}: {e}", path.display())))
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))
}

fn dataset_paths(dir: &Path, split: Split) -> (PathBuf, PathBuf) {
    let p = split.prefix();
    (
        dir.join(format!("{p}_windows.csv")),
        dir.join(format!("{p}_targets.csv")),
    )
}

fn synth(seed: u64, candles: usize, config: Option<&Path>, out: &Path) -> Result<()> {
    let mut config = load_config(config)?;
    config.data.csv = None;
    config.data.seed = Some(seed);
    config.data.candles = candles;
    let (series, _) = load_series(&config)?;
    series.write_csv(out)?;
    println!(
        "{}: {} candles -> {}",
        series.symbol(),
        series.len(),
        out.display()
    );
    Ok(())
}

fn features(args: &SeriesArgs, out: &Path) -> Result<()> {
    let (series, config) = args.load()?;
    let f = feature_matrix(&series, &config.indicators)?;
    f.write_csv(out)?;
    println!(
        "{} rows x {} features (warm-up {}) -> {}",
        f.len(),
        f.columns().len(),
        f.warmup_len(),
        out.display()
    );
    Ok(())
}

fn events(args: &SeriesArgs, out: &Path) -> Result<()> {
    let (series, config) = args.load()?;
    let ev = detect_events(&series, &config.events)?;
    write_events_csv(&series, &ev, out)?;
    let d = ev.assembly.diagnostics;
    println!(
        "{} pivots, {} crossovers, {} sequences (missing crossover {}, missing retracement {}, causal drops {}) -> {}",
        d.pivots,
        d.crossovers,
        ev.sequences().len(),
        d.missing_crossover,
        d.missing_retracement,
        d.causal_dropped,
        out.display()
    );
    Ok(())
}

fn dataset(args: &SeriesArgs, n: usize, cutoff: Option<&str>, out_dir: &Path) -> Result<()> {
    let (series, config) = args.load()?;
    let features = feature_matrix(&series, &config.indicators)?;
    let ev = detect_events(&series, &config.events)?;
    let sequences = ev.sequences();
    let mut split = config.split.clone();
    if let Some(raw) = cutoff {
        split.cutoff = Some(raw.to_string());
    }
    let cutoff = split_cutoff(&split, &series, sequences)?;
    let windowed = build_samples(&features, sequences, n, &series)?;
    let skipped = windowed.skipped;
    let (train, test) = partition_by_cutoff(windowed.samples, n, cutoff)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| Error::Usage(format!("{}: {e}", out_dir.display())))?;
    for (ds, split) in [(&train, Split::Train), (&test, Split::Test)] {
        let (wp, tp) = dataset_paths(out_dir, split);
        write_dataset_csv(ds, features.columns(), wp, tp)?;
    }
    println!(
        "{} train + {} test samples of {n} timesteps ({skipped} skipped), cutoff {cutoff} -> {}",
        train.len(),
        test.len(),
        out_dir.display()
    );
    Ok(())
}

fn read_split(dir: &Path, split: Split, series: Option<&CandleSeries>) -> Result<Dataset> {
    let (wp, tp) = dataset_paths(dir, split);
    read_dataset_csv(wp, tp, split.role(), series)
}

#[allow(clippy::too_many_arguments)]
fn train_cmd(
    data_dir: &Path,
    kind: Architecture,
    layers: usize,
    hidden: usize,
    seed: u64,
    config: Option<&Path>,
    model_path: &Path,
    report_path: Option<&Path>,
) -> Result<()> {
    let config = load_config(config)?;
    let raw = read_split(data_dir, Split::Train, None)?;
    let stats = fit_normalizer(&raw)?;
    let ds = apply_norm(&raw, &stats);
    let model_config = ModelConfig {
        layers,
        hidden,
        ..ModelConfig::new(kind, raw.n_timesteps, seed)
    };
    let (model, report) = train(&ds, &model_config, &config.training)?;
    model.save(model_path, Some(&stats))?;
    if let Some(p) = report_path {
        write_file(p, &to_json(&report)?)?;
    }
    println!(
        "{kind}-{}: best epoch {} of {}, validation MSE {:.3e} -> {}",
        raw.n_timesteps,
        report.best_epoch,
        report.epochs_run,
        report.val_loss[report.best_epoch - 1],
        model_path.display()
    );
    Ok(())
}

fn evaluate(
    model_path: &Path,
    data_dir: &Path,
    split: Split,
    csv: Option<&Path>,
    predictions: &Path,
    report_path: Option<&Path>,
) -> Result<()> {
    let (model, stats) = RecurrentModel::load(model_path)?;
    let stats = stats.ok_or_else(|| {
        Error::Usage(format!(
            "{} has no normalisation statistics",
            model_path.display()
        ))
    })?;
    let series = csv.map(|p| load_csv(p, "SERIES", 1e-4)).transpose()?;
    let raw = read_split(data_dir, split, series.as_ref())?;
    let truth = raw.targets();
    let pred = predict(&model, &apply_norm(&raw, &stats), &stats)?;
    let name = model.config.architecture().name();
    let mut rows = vec![MetricsReport::compute(
        name,
        raw.n_timesteps,
        &truth,
        &pred,
    )?];
    if let Some(series) = &series {
        let base = baseline_persistence(&raw, series)?;
        rows.push(MetricsReport::compute(
            "Persist",
            raw.n_timesteps,
            &truth,
            &base,
        )?);
    }
    emit_predictions(&raw, &truth, &pred, predictions)?;
    if let Some(p) = report_path {
        write_file(p, &to_json(&rows)?)?;
    }
    println!("{}", MetricsReport::table_header());
    for r in &rows {
        println!("{}", r.table_row());
    }
    Ok(())
}

/// Returns the number of failed grid cells.
fn experiment(
    config: Option<&Path>,
    out_dir: Option<PathBuf>,
    seed: Option<u64>,
    jobs: Option<usize>,
) -> Result<usize> {
    let mut config = load_config(config)?;
    if let Some(dir) = out_dir {
        config.output.dir = dir;
    }
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(jobs) = jobs {
        config.jobs = jobs;
    }
    let outcome = run_experiment(&config)?;
    print!("{}", outcome.table());
    println!("outputs in {}", config.output.dir.display());
    for f in &outcome.failures {
        eprintln!(
            "error: cell {}-{} failed: {}",
            f.model, f.n_timesteps, f.error
        );
    }
    Ok(outcome.failures.len())
}

fn run(cli: Cli) -> Result<usize> {
    match cli.command {
        Command::Synth {
            seed,
            candles,
            config,
            out,
        } => synth(seed, candles, config.as_deref(), &out)?,
        Command::Features { series, out } => features(&series, &out)?,
        Command::Events { series, out } => events(&series, &out)?,
        Command::Dataset {
            series,
            timesteps,
            cutoff,
            out_dir,
        } => dataset(&series, timesteps, cutoff.as_deref(), &out_dir)?,
        Command::Train {
            data_dir,
            kind,
            layers,
            hidden,
            seed,
            config,
            model,
            report,
        } => train_cmd(
            &data_dir,
            kind,
            layers,
            hidden,
            seed,
            config.as_deref(),
            &model,
            report.as_deref(),
        )?,
        Command::Evaluate {
            model,
            data_dir,
            split,
            csv,
            predictions,
            report,
        } => evaluate(
            &model,
            &data_dir,
            split,
            csv.as_deref(),
            &predictions,
            report.as_deref(),
        )?,
        Command::Experiment {
            config,
            out_dir,
            seed,
            jobs,
        } => return experiment(config.as_deref(), out_dir, seed, jobs),
        Command::ConfigExample { out } => match out {
            Some(p) => write_file(&p, &ExperimentConfig::example())?,
            None => print!("{}", ExperimentConfig::example()),
        },
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
