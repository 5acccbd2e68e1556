//! Training-window selection: one `n × 28` window ending at each crossover,
//! labelled with the close at the matching retracement; plus train-only
//! z-score normalisation.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::events::EventSequence;
use crate::indicators::{FeatureMatrix, FEATURE_COUNT};
use crate::market_data::CandleSeries;
use crate::nn::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Rows are timesteps in ascending time, the last row is the e2 bar.
    pub window: Matrix,
    pub target: f64,
    /// Bar indices in the source series; unknown for datasets read from CSV
    /// without their series.
    pub e2_index: Option<usize>,
    pub e3_index: Option<usize>,
    pub e2_timestamp: i64,
    pub e3_timestamp: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub n_timesteps: usize,
    pub role: Role,
    /// Fingerprint of the stats this dataset was normalised with.
    pub norm_fingerprint: Option<String>,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>, n_timesteps: usize, role: Role) -> Result<Self> {
        if let Some(s) = samples
            .iter()
            .find(|s| s.window.shape() != (n_timesteps, FEATURE_COUNT))
        {
            return Err(Error::Shape {
                context: "dataset window",
                left: s.window.shape(),
                right: (n_timesteps, FEATURE_COUNT),
            });
        }
        Ok(Self {
            samples,
            n_timesteps,
            role,
            norm_fingerprint: None,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.target).collect()
    }

    /// Content hash over shape, windows and targets.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n_timesteps as u64).to_le_bytes());
        h.update((self.samples.len() as u64).to_le_bytes());
        for s in &self.samples {
            for v in s.window.data() {
                h.update(v.to_bits().to_le_bytes());
            }
            h.update(s.target.to_bits().to_le_bytes());
            h.update(s.e2_timestamp.to_le_bytes());
        }
        h.finalize()
            .iter()
            .take(8)
            .fold(String::new(), |mut acc, b| {
                write!(acc, "{b:02x}").unwrap();
                acc
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Windowed {
    pub samples: Vec<Sample>,
    /// Sequences dropped because the window would reach into the warm-up
    /// region or before the first bar.
    pub skipped: usize,
}

/// Slices feature rows `e2 - n + 1 ..= e2` for every sequence.
pub fn build_samples(
    features: &FeatureMatrix,
    sequences: &[EventSequence],
    n: usize,
    series: &CandleSeries,
) -> Result<Windowed> {
    if n == 0 {
        return Err(Error::config("timestep count must be >= 1"));
    }
    if features.len() != series.len() {
        return Err(Error::config(format!(
            "feature matrix has {} rows but series has {} bars",
            features.len(),
            series.len()
        )));
    }
    let candles = series.candles();
    let mut samples = Vec::with_capacity(sequences.len());
    let mut skipped = 0;
    let mut ordered: Vec<&EventSequence> = sequences.iter().collect();
    ordered.sort_by_key(|s| s.e2.index);
    for seq in ordered {
        let e2 = seq.e2.index;
        if e2 + 1 < n || e2 + 1 - n < features.warmup_len() || e2 >= features.len() {
            skipped += 1;
            continue;
        }
        let mut data = Vec::with_capacity(n * FEATURE_COUNT);
        for t in e2 + 1 - n..=e2 {
            data.extend_from_slice(&features.defined_row(t).expect("past warm-up"));
        }
        samples.push(Sample {
            window: Matrix::from_vec(n, FEATURE_COUNT, data)?,
            target: candles[seq.e3_index].close,
            e2_index: Some(e2),
            e3_index: Some(seq.e3_index),
            e2_timestamp: candles[e2].timestamp,
            e3_timestamp: candles[seq.e3_index].timestamp,
        });
    }
    Ok(Windowed { samples, skipped })
}

/// Splits samples by the timestamp of their crossover bar.
pub fn partition_by_cutoff(
    samples: Vec<Sample>,
    n: usize,
    cutoff_timestamp: i64,
) -> Result<(Dataset, Dataset)> {
    let (train, test): (Vec<Sample>, Vec<Sample>) = samples
        .into_iter()
        .partition(|s| s.e2_timestamp < cutoff_timestamp);
    Ok((
        Dataset::new(train, n, Role::Train)?,
        Dataset::new(test, n, Role::Test)?,
    ))
}

/// Per-feature and target z-score parameters, fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub feature_mean: Vec<f64>,
    pub feature_std: Vec<f64>,
    pub target_mean: f64,
    pub target_std: f64,
    /// Fingerprint of the training dataset the stats came from.
    pub fingerprint: String,
}

const STD_FLOOR: f64 = 1e-12;

fn guarded_std(var: f64, what: &str) -> f64 {
    let sd = var.max(0.0).sqrt();
    if sd < STD_FLOOR {
        log::warn!("{what} has (near) zero variance; using unit scale");
        1.0
    } else {
        sd
    }
}

pub fn fit_normalizer(train: &Dataset) -> Result<NormStats> {
    if train.is_empty() {
        return Err(Error::config(
            "cannot fit normalisation on an empty dataset",
        ));
    }
    let rows = (train.len() * train.n_timesteps) as f64;
    let mut mean = vec![0.0; FEATURE_COUNT];
    for s in &train.samples {
        for t in 0..s.window.rows() {
            for (m, v) in mean.iter_mut().zip(s.window.row(t)) {
                *m += v;
            }
        }
    }
    mean.iter_mut().for_each(|m| *m /= rows);
    let mut var = vec![0.0; FEATURE_COUNT];
    for s in &train.samples {
        for t in 0..s.window.rows() {
            for ((acc, v), m) in var.iter_mut().zip(s.window.row(t)).zip(&mean) {
                *acc += (v - m) * (v - m);
            }
        }
    }
    let feature_std = var
        .iter()
        .enumerate()
        .map(|(j, v)| guarded_std(v / rows, &format!("feature column {j}")))
        .collect();

    let targets = train.targets();
    let n = targets.len() as f64;
    let target_mean = targets.iter().sum::<f64>() / n;
    let target_var = targets
        .iter()
        .map(|y| (y - target_mean).powi(2))
        .sum::<f64>()
        / n;
    Ok(NormStats {
        feature_mean: mean,
        feature_std,
        target_mean,
        target_std: guarded_std(target_var, "target"),
        fingerprint: train.fingerprint(),
    })
}

pub fn apply_target(y: f64, stats: &NormStats) -> f64 {
    (y - stats.target_mean) / stats.target_std
}

pub fn invert_target(y_norm: f64, stats: &NormStats) -> f64 {
    y_norm * stats.target_std + stats.target_mean
}

/// Z-scores every window cell and target with `stats`.
pub fn apply_norm(ds: &Dataset, stats: &NormStats) -> Dataset {
    let samples = ds
        .samples
        .iter()
        .map(|s| {
            let mut window = s.window.clone();
            for t in 0..window.rows() {
                for ((v, m), sd) in window
                    .row_mut(t)
                    .iter_mut()
                    .zip(&stats.feature_mean)
                    .zip(&stats.feature_std)
                {
                    *v = (*v - m) / sd;
                }
            }
            Sample {
                window,
                target: apply_target(s.target, stats),
                ..s.clone()
            }
        })
        .collect();
    Dataset {
        samples,
        n_timesteps: ds.n_timesteps,
        role: ds.role,
        norm_fingerprint: Some(stats.fingerprint.clone()),
    }
}

/// Writes the window file (`sample_id,timestep,<features>`) and the target
/// file (`sample_id,e2_ts,e3_ts,target`).
pub fn write_dataset_csv(
    ds: &Dataset,
    feature_names: &[String],
    windows_path: impl AsRef<Path>,
    targets_path: impl AsRef<Path>,
) -> Result<()> {
    let (wp, tp) = (windows_path.as_ref(), targets_path.as_ref());
    let mut w = BufWriter::new(File::create(wp).map_err(|e| Error::io(wp, e))?);
    let mut line = String::from("sample_id,timestep");
    for name in feature_names {
        line.push(',');
        line.push_str(name);
    }
    writeln!(w, "{line}").map_err(|e| Error::io(wp, e))?;
    for (id, s) in ds.samples.iter().enumerate() {
        for t in 0..s.window.rows() {
            line.clear();
            write!(line, "{id},{t}").unwrap();
            for v in s.window.row(t) {
                write!(line, ",{v}").unwrap();
            }
            writeln!(w, "{line}").map_err(|e| Error::io(wp, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(wp, e))?;

    let mut w = BufWriter::new(File::create(tp).map_err(|e| Error::io(tp, e))?);
    let mut write = || -> std::io::Result<()> {
        writeln!(w, "sample_id,e2_ts,e3_ts,target")?;
        for (id, s) in ds.samples.iter().enumerate() {
            writeln!(w, "{id},{},{},{}", s.e2_timestamp, s.e3_timestamp, s.target)?;
        }
        w.flush()
    };
    write().map_err(|e| Error::io(tp, e))
}

/// Reads a dataset pair written by [`write_dataset_csv`]. Bar indices are
/// resolved through `series` when given.
pub fn read_dataset_csv(
    windows_path: impl AsRef<Path>,
    targets_path: impl AsRef<Path>,
    role: Role,
    series: Option<&CandleSeries>,
) -> Result<Dataset> {
    let (wp, tp) = (windows_path.as_ref(), targets_path.as_ref());
    let parse_err = |path: &Path, line: usize, what: &str| {
        Error::Parse(format!("{}:{line}: {what}", path.display()))
    };

    let mut windows: Vec<Vec<f64>> = Vec::new();
    let mut n_timesteps = 0;
    let reader = BufReader::new(File::open(wp).map_err(|e| Error::io(wp, e))?);
    for (ln, line) in reader.lines().enumerate().skip(1) {
        let line = line.map_err(|e| Error::io(wp, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 + FEATURE_COUNT {
            return Err(parse_err(wp, ln + 1, "wrong column count"));
        }
        let id: usize = fields[0]
            .parse()
            .map_err(|_| parse_err(wp, ln + 1, "bad sample_id"))?;
        let t: usize = fields[1]
            .parse()
            .map_err(|_| parse_err(wp, ln + 1, "bad timestep"))?;
        if id == windows.len() && t == 0 {
            windows.push(Vec::new());
        } else if id + 1 != windows.len() || t * FEATURE_COUNT != windows[id].len() {
            return Err(parse_err(
                wp,
                ln + 1,
                "rows must be grouped by sample_id in timestep order",
            ));
        }
        for f in &fields[2..] {
            windows[id].push(f.parse().map_err(|_| parse_err(wp, ln + 1, "bad value"))?);
        }
        n_timesteps = n_timesteps.max(t + 1);
    }

    let index_of =
        |ts: i64| series.and_then(|s| s.candles().binary_search_by_key(&ts, |c| c.timestamp).ok());
    let mut samples = Vec::with_capacity(windows.len());
    let reader = BufReader::new(File::open(tp).map_err(|e| Error::io(tp, e))?);
    for (ln, line) in reader.lines().enumerate().skip(1) {
        let line = line.map_err(|e| Error::io(tp, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(parse_err(tp, ln + 1, "wrong column count"));
        }
        let id: usize = f[0]
            .parse()
            .map_err(|_| parse_err(tp, ln + 1, "bad sample_id"))?;
        if id != samples.len() || id >= windows.len() {
            return Err(parse_err(
                tp,
                ln + 1,
                "sample ids must match the window file",
            ));
        }
        let e2_timestamp: i64 = f[1]
            .parse()
            .map_err(|_| parse_err(tp, ln + 1, "bad e2_ts"))?;
        let e3_timestamp: i64 = f[2]
            .parse()
            .map_err(|_| parse_err(tp, ln + 1, "bad e3_ts"))?;
        let target: f64 = f[3]
            .parse()
            .map_err(|_| parse_err(tp, ln + 1, "bad target"))?;
        let data = std::mem::take(&mut windows[id]);
        samples.push(Sample {
            window: Matrix::from_vec(data.len() / FEATURE_COUNT, FEATURE_COUNT, data)?,
            target,
            e2_index: index_of(e2_timestamp),
            e3_index: index_of(e3_timestamp),
            e2_timestamp,
            e3_timestamp,
        });
    }
    if samples.len() != windows.len() {
        return Err(Error::Parse(format!(
            "{} windows but {} targets",
            windows.len(),
            samples.len()
        )));
    }
    Dataset::new(samples, n_timesteps, role)
}
