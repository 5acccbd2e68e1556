use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::market_data::CandleSeries;

fn check(truth: &[f64], pred: &[f64]) -> Result<()> {
    if truth.is_empty() || truth.len() != pred.len() {
        return Err(Error::config(format!(
            "metrics need equal non-empty inputs, got {} true and {} predicted values",
            truth.len(),
            pred.len()
        )));
    }
    Ok(())
}

pub fn mse(truth: &[f64], pred: &[f64]) -> Result<f64> {
    check(truth, pred)?;
    Ok(truth
        .iter()
        .zip(pred)
        .map(|(t, p)| (t - p) * (t - p))
        .sum::<f64>()
        / truth.len() as f64)
}

pub fn rmse(truth: &[f64], pred: &[f64]) -> Result<f64> {
    mse(truth, pred).map(f64::sqrt)
}

pub fn mae(truth: &[f64], pred: &[f64]) -> Result<f64> {
    check(truth, pred)?;
    Ok(truth
        .iter()
        .zip(pred)
        .map(|(t, p)| (t - p).abs())
        .sum::<f64>()
        / truth.len() as f64)
}

/// Mean absolute percentage error, in percent.
pub fn mape(truth: &[f64], pred: &[f64]) -> Result<f64> {
    check(truth, pred)?;
    if let Some(i) = truth.iter().position(|&t| t == 0.0) {
        return Err(Error::config(format!(
            "mape undefined: true value {i} is zero"
        )));
    }
    Ok(100.0
        * truth
            .iter()
            .zip(pred)
            .map(|(t, p)| ((t - p) / t).abs())
            .sum::<f64>()
        / truth.len() as f64)
}

/// Raw-price error metrics of one model on one test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model: String,
    pub n_timesteps: usize,
    pub n: usize,
    pub mse: f64,
    pub rmse: f64,
    pub mae: f64,
    /// Percent.
    pub mape: f64,
}

impl MetricsReport {
    pub fn compute(
        model: impl Into<String>,
        n_timesteps: usize,
        truth: &[f64],
        pred: &[f64],
    ) -> Result<Self> {
        Ok(Self {
            model: model.into(),
            n_timesteps,
            n: truth.len(),
            mse: mse(truth, pred)?,
            rmse: rmse(truth, pred)?,
            mae: mae(truth, pred)?,
            mape: mape(truth, pred)?,
        })
    }

    /// A table row with MSE/RMSE/MAE in units of 10⁻³.
    pub fn table_row(&self) -> String {
        format!(
            "{:<8} {:>9} {:>10.3} {:>11.3} {:>10.3} {:>8.3} {:>6}",
            self.model,
            self.n_timesteps,
            self.mse * 1e3,
            self.rmse * 1e3,
            self.mae * 1e3,
            self.mape,
            self.n
        )
    }

    pub fn table_header() -> String {
        format!(
            "{:<8} {:>9} {:>10} {:>11} {:>10} {:>8} {:>6}",
            "Model", "Timesteps", "MSE(e-3)", "RMSE(e-3)", "MAE(e-3)", "MAPE(%)", "n"
        )
    }
}

/// No-change forecast: the close at each sample's crossover bar.
pub fn baseline_persistence(ds: &Dataset, series: &CandleSeries) -> Result<Vec<f64>> {
    let candles = series.candles();
    ds.samples
        .iter()
        .map(|s| {
            let index = match s.e2_index {
                Some(i)
                    if candles
                        .get(i)
                        .is_some_and(|c| c.timestamp == s.e2_timestamp) =>
                {
                    i
                }
                _ => candles
                    .binary_search_by_key(&s.e2_timestamp, |c| c.timestamp)
                    .map_err(|_| {
                        Error::config(format!("e2 timestamp {} not in series", s.e2_timestamp))
                    })?,
            };
            Ok(candles[index].close)
        })
        .collect()
}

/// Writes `e2_timestamp,e3_timestamp,true_price,predicted_price,abs_error,pct_error`,
/// one row per sample in dataset order.
pub fn emit_predictions(
    ds: &Dataset,
    truth: &[f64],
    pred: &[f64],
    path: impl AsRef<Path>,
) -> Result<()> {
    check(truth, pred)?;
    if truth.len() != ds.len() {
        return Err(Error::config("prediction count does not match the dataset"));
    }
    let path = path.as_ref();
    let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    let mut write = || -> std::io::Result<()> {
        writeln!(
            w,
            "e2_timestamp,e3_timestamp,true_price,predicted_price,abs_error,pct_error"
        )?;
        for ((s, t), p) in ds.samples.iter().zip(truth).zip(pred) {
            let abs = (t - p).abs();
            writeln!(
                w,
                "{},{},{},{},{},{}",
                s.e2_timestamp,
                s.e3_timestamp,
                t,
                p,
                abs,
                100.0 * abs / t.abs()
            )?;
        }
        w.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction_is_zero() {
        let t = [1.1, 0.9, 1.3];
        let r = MetricsReport::compute("X", 30, &t, &t).unwrap();
        assert_eq!((r.mse, r.rmse, r.mae, r.mape), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn hand_case() {
        let r = MetricsReport::compute("X", 30, &[2.0], &[1.0]).unwrap();
        assert_eq!((r.mse, r.rmse, r.mae, r.mape), (1.0, 1.0, 1.0, 50.0));
    }

    #[test]
    fn invalid_inputs() {
        assert!(mse(&[], &[]).is_err());
        assert!(mae(&[1.0], &[1.0, 2.0]).is_err());
        assert!(mape(&[1.0, 0.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn table_scaling() {
        let r = MetricsReport {
            model: "RNN".into(),
            n_timesteps: 30,
            n: 400,
            mse: 1.846e-3,
            rmse: 42.960e-3,
            mae: 35.336e-3,
            mape: 2.774,
        };
        let row = r.table_row();
        for field in ["RNN", "30", "1.846", "42.960", "35.336", "2.774", "400"] {
            assert!(row.contains(field), "{row}");
        }
    }
}
