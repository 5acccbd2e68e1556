use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cell::{CellKind, CellWeights, StepCache, StepState};
use crate::error::{Error, Result};
use crate::indicators::FEATURE_COUNT;
use crate::nn::{io, Dense, Matrix, Param, Parameterized};

/// The four compared architectures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Architecture {
    #[serde(rename = "RNN")]
    Rnn,
    #[serde(rename = "LSTM")]
    Lstm,
    #[serde(rename = "BiLSTM")]
    BiLstm,
    #[serde(rename = "GRU")]
    Gru,
}

impl Architecture {
    pub const ALL: [Architecture; 4] = [Self::Rnn, Self::Lstm, Self::BiLstm, Self::Gru];

    pub fn name(self) -> &'static str {
        match self {
            Self::Rnn => "RNN",
            Self::Lstm => "LSTM",
            Self::BiLstm => "BiLSTM",
            Self::Gru => "GRU",
        }
    }

    /// Stable small integer used for seed derivation.
    pub fn id(self) -> u64 {
        match self {
            Self::Rnn => 0,
            Self::Lstm => 1,
            Self::BiLstm => 2,
            Self::Gru => 3,
        }
    }

    pub fn cell(self) -> CellKind {
        match self {
            Self::Rnn => CellKind::Rnn,
            Self::Lstm | Self::BiLstm => CellKind::Lstm,
            Self::Gru => CellKind::Gru,
        }
    }

    pub fn bidirectional(self) -> bool {
        self == Self::BiLstm
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::config(format!(
                    "unknown model kind {s:?} (expected RNN, LSTM, BiLSTM or GRU)"
                ))
            })
    }
}

fn default_input_dim() -> usize {
    FEATURE_COUNT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub kind: CellKind,
    pub bidirectional: bool,
    pub layers: usize,
    pub hidden: usize,
    pub n_timesteps: usize,
    #[serde(default = "default_input_dim")]
    pub input_dim: usize,
    pub seed: u64,
}

impl ModelConfig {
    /// Two layers of 64 units over 28 features.
    pub fn new(arch: Architecture, n_timesteps: usize, seed: u64) -> Self {
        Self {
            kind: arch.cell(),
            bidirectional: arch.bidirectional(),
            layers: 2,
            hidden: 64,
            n_timesteps,
            input_dim: FEATURE_COUNT,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 || self.hidden == 0 || self.n_timesteps == 0 || self.input_dim == 0 {
            return Err(Error::config(format!(
                "model needs layers, hidden, n_timesteps and input_dim >= 1, got {self:?}"
            )));
        }
        if self.bidirectional && self.kind != CellKind::Lstm {
            return Err(Error::config("only LSTM cells run bidirectionally"));
        }
        Ok(())
    }

    /// The architecture this configuration was built from.
    pub fn architecture(&self) -> Architecture {
        match (self.kind, self.bidirectional) {
            (CellKind::Rnn, _) => Architecture::Rnn,
            (CellKind::Lstm, false) => Architecture::Lstm,
            (CellKind::Lstm, true) => Architecture::BiLstm,
            (CellKind::Gru, _) => Architecture::Gru,
        }
    }

    fn directions(&self) -> usize {
        if self.bidirectional {
            2
        } else {
            1
        }
    }

    pub fn head_input(&self) -> usize {
        self.directions() * self.hidden
    }
}

/// One stacked layer: a forward cell and, when bidirectional, a cell that
/// reads the sequence in reverse.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrentLayer {
    pub forward: CellWeights,
    pub backward: Option<CellWeights>,
}

/// Per-direction step caches; the reverse direction's caches are in its own
/// processing order (last timestep first).
#[derive(Debug, Clone)]
struct LayerCache {
    forward: Vec<StepCache>,
    backward: Vec<StepCache>,
}

/// Cached activations of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    layers: Vec<LayerCache>,
    head_input: Vec<f64>,
    output: f64,
}

impl ForwardCache {
    pub fn output(&self) -> f64 {
        self.output
    }

    /// Every recorded gate activation as `(gate name, values)`, plus the
    /// `tanh(c)` trace for LSTM cells.
    pub fn activations(&self, kind: CellKind) -> Vec<(&'static str, &[f64])> {
        let names = kind.gate_names();
        let mut out = Vec::new();
        for layer in &self.layers {
            for step in layer.forward.iter().chain(&layer.backward) {
                for (name, g) in names.iter().zip(&step.gates) {
                    out.push((*name, g.as_slice()));
                }
                if kind == CellKind::Lstm {
                    out.push(("tanh_c", step.aux.as_slice()));
                }
            }
        }
        out
    }
}

fn run_direction(
    cell: &CellWeights,
    xs: &[Vec<f64>],
    reverse: bool,
) -> Result<(Vec<Vec<f64>>, Vec<StepCache>)> {
    let t_len = xs.len();
    let mut state = StepState::zeros(cell.kind, cell.hidden);
    let mut hs = vec![Vec::new(); t_len];
    let mut caches = Vec::with_capacity(t_len);
    for k in 0..t_len {
        let t = if reverse { t_len - 1 - k } else { k };
        let (next, cache) = cell.step(&xs[t], &state)?;
        hs[t] = next.h.clone();
        caches.push(cache);
        state = next;
    }
    Ok((hs, caches))
}

/// BPTT through one direction. `d_out[t]` is the gradient on the hidden
/// output at timestep `t`; returns the gradient on each input row.
fn backprop_direction(
    cell: &mut CellWeights,
    caches: &[StepCache],
    d_out: &[Vec<f64>],
    reverse: bool,
) -> Vec<Vec<f64>> {
    let t_len = caches.len();
    let n = cell.hidden;
    let mut dx = vec![Vec::new(); t_len];
    let mut dh_next = vec![0.0; n];
    let mut dc_next = if cell.kind == CellKind::Lstm {
        vec![0.0; n]
    } else {
        Vec::new()
    };
    for k in (0..t_len).rev() {
        let t = if reverse { t_len - 1 - k } else { k };
        let dh: Vec<f64> = d_out[t].iter().zip(&dh_next).map(|(a, b)| a + b).collect();
        let (dx_t, dh_prev, dc_prev) = cell.step_backward(&caches[k], &dh, &dc_next);
        dx[t] = dx_t;
        dh_next = dh_prev;
        dc_next = dc_prev;
    }
    dx
}

#[derive(Debug, Clone)]
pub struct RecurrentModel {
    pub config: ModelConfig,
    pub layers: Vec<RecurrentLayer>,
    pub head: Dense,
    /// Fingerprint of the normalisation stats the model was trained under.
    pub norm_fingerprint: Option<String>,
    cache: Option<ForwardCache>,
}

impl RecurrentModel {
    /// Seeded initialisation from `config.seed`.
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut layers = Vec::with_capacity(config.layers);
        let mut input = config.input_dim;
        for l in 0..config.layers {
            let forward = CellWeights::new(
                config.kind,
                &format!("l{l}"),
                input,
                config.hidden,
                &mut rng,
            );
            let backward = config.bidirectional.then(|| {
                CellWeights::new(
                    config.kind,
                    &format!("l{l}.rev"),
                    input,
                    config.hidden,
                    &mut rng,
                )
            });
            layers.push(RecurrentLayer { forward, backward });
            input = config.head_input();
        }
        let head = Dense::new("head", config.head_input(), 1, &mut rng);
        Ok(Self {
            config,
            layers,
            head,
            norm_fingerprint: None,
            cache: None,
        })
    }

    /// All parameters zero (including the LSTM forget bias).
    pub fn zeroed(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut layers = Vec::with_capacity(config.layers);
        let mut input = config.input_dim;
        for l in 0..config.layers {
            let forward = CellWeights::zeros(config.kind, &format!("l{l}"), input, config.hidden);
            let backward = config.bidirectional.then(|| {
                CellWeights::zeros(config.kind, &format!("l{l}.rev"), input, config.hidden)
            });
            layers.push(RecurrentLayer { forward, backward });
            input = config.head_input();
        }
        let head = Dense::zeros("head", config.head_input(), 1);
        Ok(Self {
            config,
            layers,
            head,
            norm_fingerprint: None,
            cache: None,
        })
    }

    fn check_window(&self, window: &Matrix) -> Result<()> {
        let expected = (self.config.n_timesteps, self.config.input_dim);
        if window.shape() != expected {
            return Err(Error::Shape {
                context: "model input window",
                left: window.shape(),
                right: expected,
            });
        }
        if window.data().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("model input window".into()));
        }
        Ok(())
    }

    /// Pure forward pass returning the prediction and the activation cache.
    pub fn forward(&self, window: &Matrix) -> Result<ForwardCache> {
        self.check_window(window)?;
        let mut xs: Vec<Vec<f64>> = (0..window.rows()).map(|t| window.row(t).to_vec()).collect();
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut head_input = Vec::new();
        for layer in &self.layers {
            let (fwd_h, fwd_c) = run_direction(&layer.forward, &xs, false)?;
            let last = xs.len() - 1;
            match &layer.backward {
                None => {
                    head_input = fwd_h[last].clone();
                    caches.push(LayerCache {
                        forward: fwd_c,
                        backward: Vec::new(),
                    });
                    xs = fwd_h;
                }
                Some(cell) => {
                    let (bwd_h, bwd_c) = run_direction(cell, &xs, true)?;
                    head_input = [fwd_h[last].as_slice(), bwd_h[0].as_slice()].concat();
                    caches.push(LayerCache {
                        forward: fwd_c,
                        backward: bwd_c,
                    });
                    xs = fwd_h
                        .iter()
                        .zip(&bwd_h)
                        .map(|(f, b)| [f.as_slice(), b.as_slice()].concat())
                        .collect();
                }
            }
        }
        let output = self.head.forward_row(&head_input)[0];
        Ok(ForwardCache {
            layers: caches,
            head_input,
            output,
        })
    }

    pub fn predict_one(&self, window: &Matrix) -> Result<f64> {
        Ok(self.forward(window)?.output)
    }

    /// Forward pass that keeps its cache for a following [`Self::model_backward`].
    pub fn model_forward(&mut self, window: &Matrix) -> Result<f64> {
        let cache = self.forward(window)?;
        let y = cache.output;
        self.cache = Some(cache);
        Ok(y)
    }

    /// Accumulates gradients for `d_loss/d_prediction` using the cache of the
    /// last [`Self::model_forward`] call, which is consumed.
    pub fn model_backward(&mut self, d_output: f64) -> Result<()> {
        let cache = self.cache.take().ok_or_else(|| {
            Error::Usage("model_backward called without a cached forward pass".into())
        })?;
        self.backward(&cache, d_output);
        Ok(())
    }

    /// Accumulates gradients for one sample given its forward cache.
    pub fn backward(&mut self, cache: &ForwardCache, d_output: f64) {
        let d_head = self.head.backward_row(&cache.head_input, &[d_output]);
        let t_len = self.config.n_timesteps;
        let hidden = self.config.hidden;
        // gradient on the layer output sequence, starting with the head's view
        let mut d_seq: Vec<Vec<f64>> = vec![vec![0.0; self.config.head_input()]; t_len];
        d_seq[t_len - 1][..hidden].copy_from_slice(&d_head[..hidden]);
        if self.config.bidirectional {
            d_seq[0][hidden..].copy_from_slice(&d_head[hidden..]);
        }
        for (layer, lc) in self.layers.iter_mut().zip(&cache.layers).rev() {
            match &mut layer.backward {
                None => {
                    d_seq = backprop_direction(&mut layer.forward, &lc.forward, &d_seq, false);
                }
                Some(rev) => {
                    let d_fwd: Vec<Vec<f64>> = d_seq.iter().map(|d| d[..hidden].to_vec()).collect();
                    let d_bwd: Vec<Vec<f64>> = d_seq.iter().map(|d| d[hidden..].to_vec()).collect();
                    let dx_f = backprop_direction(&mut layer.forward, &lc.forward, &d_fwd, false);
                    let dx_b = backprop_direction(rev, &lc.backward, &d_bwd, true);
                    d_seq = dx_f
                        .iter()
                        .zip(&dx_b)
                        .map(|(a, b)| a.iter().zip(b).map(|(a, b)| a + b).collect())
                        .collect();
                }
            }
        }
    }

    /// Text format: a header block of `#` lines followed by one tensor line per
    /// parameter.
    pub fn to_text(&self, norm: Option<&crate::dataset::NormStats>) -> Result<String> {
        let config =
            serde_json::to_string(&self.config).map_err(|e| Error::Parse(e.to_string()))?;
        let mut out = format!("# retrace-model 1\n# config {config}\n");
        if let Some(fp) = &self.norm_fingerprint {
            out.push_str(&format!("# norm_fingerprint {fp}\n"));
        }
        if let Some(stats) = norm {
            let json = serde_json::to_string(stats).map_err(|e| Error::Parse(e.to_string()))?;
            out.push_str(&format!("# norm {json}\n"));
        }
        out.push_str(&io::write_params(self.params()));
        Ok(out)
    }

    pub fn from_text(text: &str) -> Result<(Self, Option<crate::dataset::NormStats>)> {
        let mut config = None;
        let mut fingerprint = None;
        let mut norm = None;
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            let body = line.trim_start_matches('#').trim();
            let (key, value) = body.split_once(' ').unwrap_or((body, ""));
            match key {
                "config" => {
                    config = Some(
                        serde_json::from_str::<ModelConfig>(value)
                            .map_err(|e| Error::Parse(format!("model config: {e}")))?,
                    )
                }
                "norm_fingerprint" => fingerprint = Some(value.to_string()),
                "norm" => {
                    norm = Some(
                        serde_json::from_str(value)
                            .map_err(|e| Error::Parse(format!("norm stats: {e}")))?,
                    )
                }
                _ => {}
            }
        }
        let config =
            config.ok_or_else(|| Error::Parse("model file has no config header".into()))?;
        let mut model = Self::zeroed(config)?;
        io::read_params(text, model.params_mut())?;
        model.norm_fingerprint = fingerprint;
        Ok((model, norm))
    }

    pub fn save(
        &self,
        path: impl AsRef<Path>,
        norm: Option<&crate::dataset::NormStats>,
    ) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text(norm)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Self, Option<crate::dataset::NormStats>)> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

/// Models are equal when their configuration and parameter values match;
/// gradients and optimizer state are ignored.
impl PartialEq for RecurrentModel {
    fn eq(&self, other: &Self) -> bool {
        let (a, b) = (self.params(), other.params());
        self.config == other.config
            && self.norm_fingerprint == other.norm_fingerprint
            && a.len() == b.len()
            && a.iter()
                .zip(&b)
                .all(|(p, q)| p.name == q.name && p.value == q.value)
    }
}

impl Parameterized for RecurrentModel {
    fn params(&self) -> Vec<&Param> {
        let mut out = Vec::new();
        for layer in &self.layers {
            out.extend(layer.forward.params());
            if let Some(rev) = &layer.backward {
                out.extend(rev.params());
            }
        }
        out.extend([&self.head.w, &self.head.b]);
        out
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            out.extend(layer.forward.params_mut());
            if let Some(rev) = &mut layer.backward {
                out.extend(rev.params_mut());
            }
        }
        out.extend([&mut self.head.w, &mut self.head.b]);
        out
    }
}
