use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::EventConfig;
use crate::indicators::IndicatorParams;
use crate::market_data::{parse_timestamp, SynthRegime};
use crate::recurrent::{Architecture, TrainConfig};

/// Where candles come from: a CSV file when `csv` is set, otherwise the
/// synthetic generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub csv: Option<PathBuf>,
    pub symbol: String,
    pub pip_size: f64,
    /// Generator seed; the global seed when absent.
    pub seed: Option<u64>,
    pub candles: usize,
    pub regime: SynthRegime,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            csv: None,
            symbol: "SYN/USD".into(),
            pip_size: 1e-4,
            seed: None,
            candles: 5000,
            regime: SynthRegime::default(),
        }
    }
}

/// Train/test boundary. An explicit `cutoff` wins; otherwise the first
/// `train_fraction` of the event sequences (by crossover time) train.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    /// Timestamp (epoch seconds or ISO 8601); sequences whose crossover
    /// bar is strictly earlier train.
    pub cutoff: Option<String>,
    pub train_fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            cutoff: None,
            train_fraction: 0.8,
        }
    }
}

impl SplitConfig {
    pub fn cutoff_timestamp(&self) -> Result<Option<i64>> {
        self.cutoff
            .as_deref()
            .map(|raw| {
                parse_timestamp(raw).map_err(|e| Error::config(format!("split cutoff: {e}")))
            })
            .transpose()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub kinds: Vec<Architecture>,
    pub timesteps: Vec<usize>,
    pub layers: usize,
    pub hidden: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            kinds: Architecture::ALL.to_vec(),
            timesteps: vec![30, 60],
            layers: 2,
            hidden: 64,
        }
    }
}

impl GridConfig {
    /// Cells in report order: timestep-major within each kind.
    pub fn cells(&self) -> Vec<(Architecture, usize)> {
        self.kinds
            .iter()
            .flat_map(|&k| self.timesteps.iter().map(move |&n| (k, n)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Also save each trained model next to its predictions.
    pub save_models: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("runs/default"),
            save_models: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Grid cells trained concurrently; each cell stays single-threaded.
    pub jobs: usize,
    pub data: DataConfig,
    pub split: SplitConfig,
    pub indicators: IndicatorParams,
    pub events: EventConfig,
    pub grid: GridConfig,
    pub training: TrainConfig,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            jobs: 1,
            data: DataConfig::default(),
            split: SplitConfig::default(),
            indicators: IndicatorParams::default(),
            events: EventConfig::default(),
            grid: GridConfig::default(),
            training: TrainConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

const EXAMPLE_HEADER: &str = "\
# Experiment configuration. Every key is optional; the values below are the
# defaults.
#
# [data]       csv = \"path.csv\" loads candles (timestamp,open,high,low,close);
#              without it a synthetic series of `candles` bars is generated.
# [split]      cutoff = \"2019-01-01T00:00:00Z\" overrides train_fraction, which
#              splits event sequences chronologically by crossover time.
# [grid]       kinds from RNN, LSTM, BiLSTM, GRU; one report row per kind x timesteps.
# [training]   Adam with MSE, chronological validation tail, early stopping.
# jobs         grid cells trained in parallel (results do not depend on it).

";

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self =
            toml::from_str(text).map_err(|e| Error::config(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(format!("serialising config: {e}")))
    }

    /// Commented default configuration.
    pub fn example() -> String {
        let body = Self::default()
            .to_toml()
            .expect("default config serialises");
        format!("{EXAMPLE_HEADER}{body}")
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.kinds.is_empty() || self.grid.timesteps.is_empty() {
            return Err(Error::config(
                "the model grid needs at least one kind and one timestep value",
            ));
        }
        if self.grid.timesteps.contains(&0) || self.grid.layers == 0 || self.grid.hidden == 0 {
            return Err(Error::config(
                "grid timesteps, layers and hidden must be >= 1",
            ));
        }
        if self.jobs == 0 {
            return Err(Error::config("jobs must be >= 1"));
        }
        if !(self.split.train_fraction > 0.0 && self.split.train_fraction < 1.0) {
            return Err(Error::config("split.train_fraction must lie in (0, 1)"));
        }
        self.split.cutoff_timestamp()?;
        if let Some(csv) = &self.data.csv {
            if !csv.is_file() {
                return Err(Error::config(format!(
                    "data.csv {} does not exist",
                    csv.display()
                )));
            }
        } else {
            self.data.regime.validate()?;
            if self.data.candles == 0 {
                return Err(Error::config("data.candles must be >= 1"));
            }
        }
        if !(self.data.pip_size > 0.0) {
            return Err(Error::config("data.pip_size must be > 0"));
        }
        self.indicators.validate()?;
        self.events.validate()?;
        self.training.validate()
    }
}
