use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{ModelConfig, RecurrentModel};
use crate::dataset::{invert_target, Dataset, NormStats};
use crate::error::{Error, Result};
use crate::nn::{adam_step, clip_grad_norm, AdamHyper, Param, Parameterized};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    /// Trailing fraction of the training samples held out for validation.
    pub val_fraction: f64,
    pub clip_norm: f64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 32,
            max_epochs: 100,
            patience: 10,
            val_fraction: 0.1,
            clip_norm: 5.0,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        AdamHyper::with_lr(self.learning_rate).validate()?;
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::config("batch_size and max_epochs must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(Error::config(format!(
                "val_fraction {} outside [0, 1)",
                self.val_fraction
            )));
        }
        if !(self.clip_norm > 0.0) {
            return Err(Error::config("clip_norm must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_loss: Vec<f64>,
    /// Per-epoch validation loss; equals the training loss when no samples
    /// are held out.
    pub val_loss: Vec<f64>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub stopped_early: bool,
    pub train_samples: usize,
    pub val_samples: usize,
    /// Not part of any written report, so replays stay byte-identical.
    #[serde(skip)]
    pub wall_time_secs: f64,
}

fn largest_param(params: &[&Param]) -> (String, f64) {
    params
        .iter()
        .map(|p| (p.name.clone(), p.value.norm_sq().sqrt()))
        .fold((String::new(), f64::NEG_INFINITY), |best, cur| {
            // NaN norms win so the offending tensor is named
            if cur.1.is_nan() || (!best.1.is_nan() && cur.1 > best.1) {
                cur
            } else {
                best
            }
        })
}

fn mean_loss(model: &RecurrentModel, ds: &Dataset, idx: &[usize]) -> Result<f64> {
    let mut total = 0.0;
    for &i in idx {
        let s = &ds.samples[i];
        let e = model.predict_one(&s.window)? - s.target;
        total += e * e;
    }
    Ok(total / idx.len() as f64)
}

/// Wall clock for the training report. `Instant` panics on bare wasm32, where
/// the time is reported as zero.
struct Stopwatch(#[cfg(not(target_arch = "wasm32"))] std::time::Instant);

impl Stopwatch {
    fn start() -> Self {
        Self(
            #[cfg(not(target_arch = "wasm32"))]
            std::time::Instant::now(),
        )
    }

    fn secs(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        return self.0.elapsed().as_secs_f64();
        #[cfg(target_arch = "wasm32")]
        0.0
    }
}

/// Mini-batch Adam on MSE with a chronological validation split and early
/// stopping; returns the parameters of the best validation epoch.
pub fn train(
    train_ds: &Dataset,
    config: &ModelConfig,
    hyper: &TrainConfig,
) -> Result<(RecurrentModel, TrainReport)> {
    hyper.validate()?;
    if train_ds.is_empty() {
        return Err(Error::config("training dataset is empty"));
    }
    if train_ds.n_timesteps != config.n_timesteps {
        return Err(Error::config(format!(
            "dataset has {} timesteps but the model expects {}",
            train_ds.n_timesteps, config.n_timesteps
        )));
    }
    let started = Stopwatch::start();
    let mut model = RecurrentModel::new(config.clone())?;
    model.norm_fingerprint = train_ds.norm_fingerprint.clone();

    let n = train_ds.len();
    let mut n_val = (n as f64 * hyper.val_fraction).floor() as usize;
    if hyper.val_fraction > 0.0 && n >= 2 {
        n_val = n_val.clamp(1, n - 1);
    }
    let n_fit = n - n_val;
    let mut order: Vec<usize> = (0..n_fit).collect();
    let val_idx: Vec<usize> = (n_fit..n).collect();

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed);
    shuffle_rng.set_stream(1);
    let mut adam = AdamHyper::with_lr(hyper.learning_rate);

    let mut report = TrainReport {
        train_loss: Vec::new(),
        val_loss: Vec::new(),
        best_epoch: 0,
        epochs_run: 0,
        stopped_early: false,
        train_samples: n_fit,
        val_samples: n_val,
        wall_time_secs: 0.0,
    };
    let mut best: Option<(f64, RecurrentModel)> = None;
    let mut since_best = 0;

    for epoch in 1..=hyper.max_epochs {
        if hyper.shuffle {
            order.shuffle(&mut shuffle_rng);
        }
        let mut epoch_loss = 0.0;
        for (b, batch) in order.chunks(hyper.batch_size).enumerate() {
            model.zero_grad();
            let scale = 2.0 / batch.len() as f64;
            let mut batch_loss = 0.0;
            for &i in batch {
                let s = &train_ds.samples[i];
                let cache = model.forward(&s.window)?;
                let err = cache.output() - s.target;
                batch_loss += err * err;
                model.backward(&cache, scale * err);
            }
            if !batch_loss.is_finite() {
                let (param, param_norm) = largest_param(&model.params());
                return Err(Error::Diverged {
                    epoch,
                    batch: b,
                    loss: batch_loss / batch.len() as f64,
                    param,
                    param_norm,
                });
            }
            epoch_loss += batch_loss;
            clip_grad_norm(model.params_mut(), hyper.clip_norm);
            adam_step(model.params_mut(), &mut adam);
        }
        let train_loss = epoch_loss / n_fit as f64;
        let val_loss = if val_idx.is_empty() {
            mean_loss(&model, train_ds, &order)?
        } else {
            mean_loss(&model, train_ds, &val_idx)?
        };
        if !val_loss.is_finite() {
            let (param, param_norm) = largest_param(&model.params());
            return Err(Error::Diverged {
                epoch,
                batch: usize::MAX,
                loss: val_loss,
                param,
                param_norm,
            });
        }
        report.train_loss.push(train_loss);
        report.val_loss.push(val_loss);
        report.epochs_run = epoch;
        log::debug!("epoch {epoch}: train {train_loss:.6e} val {val_loss:.6e}");

        if best.as_ref().is_none_or(|(b, _)| val_loss < *b) {
            best = Some((val_loss, model.clone()));
            report.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= hyper.patience {
                report.stopped_early = true;
                break;
            }
        }
    }
    let (_, model) = best.expect("at least one epoch ran");
    report.wall_time_secs = started.secs();
    Ok((model, report))
}

/// Raw-price predictions, one per sample in order.
pub fn predict(model: &RecurrentModel, ds: &Dataset, stats: &NormStats) -> Result<Vec<f64>> {
    let mismatch = |what: &str, got: &str| {
        Error::config(format!(
            "{what} was normalised with stats {got}, but prediction uses stats {}",
            stats.fingerprint
        ))
    };
    match ds.norm_fingerprint.as_deref() {
        Some(fp) if fp == stats.fingerprint => {}
        Some(fp) => return Err(mismatch("dataset", fp)),
        None => return Err(mismatch("dataset", "<none>")),
    }
    if let Some(fp) = model.norm_fingerprint.as_deref() {
        if fp != stats.fingerprint {
            return Err(mismatch("model training data", fp));
        }
    }
    ds.samples
        .iter()
        .map(|s| Ok(invert_target(model.predict_one(&s.window)?, stats)))
        .collect()
}
