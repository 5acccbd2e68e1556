use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{sigmoid, tanh, Param};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Rnn,
    Lstm,
    Gru,
}

impl CellKind {
    /// Gate names in storage order.
    pub fn gate_names(self) -> &'static [&'static str] {
        match self {
            CellKind::Rnn => &["h"],
            CellKind::Lstm => &["f", "i", "c", "o"],
            CellKind::Gru => &["r", "z", "h"],
        }
    }
}

/// Input weights `w` (input×hidden), recurrent weights `u` (hidden×hidden)
/// and bias `b` (1×hidden) of one gate. Pre-activation is `x·w + h·u + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct GateWeights {
    pub w: Param,
    pub u: Param,
    pub b: Param,
}

impl GateWeights {
    fn new(prefix: &str, input: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        Self {
            w: Param::uniform(format!("{prefix}.W"), input, hidden, input, rng),
            u: Param::uniform(format!("{prefix}.U"), hidden, hidden, hidden, rng),
            b: Param::zeros(format!("{prefix}.b"), 1, hidden),
        }
    }

    fn zeros(prefix: &str, input: usize, hidden: usize) -> Self {
        Self {
            w: Param::zeros(format!("{prefix}.W"), input, hidden),
            u: Param::zeros(format!("{prefix}.U"), hidden, hidden),
            b: Param::zeros(format!("{prefix}.b"), 1, hidden),
        }
    }

    fn preact(&self, x: &[f64], h: &[f64]) -> Vec<f64> {
        let mut out = self.b.value.row(0).to_vec();
        self.w.value.vec_mul_acc(x, &mut out);
        self.u.value.vec_mul_acc(h, &mut out);
        out
    }

    /// Accumulates parameter gradients for pre-activation gradient `d` and
    /// adds the input and recurrent gradients into `dx` and `dh`.
    fn backward(&mut self, x: &[f64], h: &[f64], d: &[f64], dx: &mut [f64], dh: &mut [f64]) {
        self.w.grad.add_outer(x, d);
        self.u.grad.add_outer(h, d);
        for (g, v) in self.b.grad.row_mut(0).iter_mut().zip(d) {
            *g += v;
        }
        self.w.value.mul_vec_acc(d, dx);
        self.u.value.mul_vec_acc(d, dh);
    }
}

/// Hidden state `h` and, for LSTM, cell state `c` (empty otherwise).
#[derive(Debug, Clone, PartialEq)]
pub struct StepState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl StepState {
    pub fn zeros(kind: CellKind, hidden: usize) -> Self {
        Self {
            h: vec![0.0; hidden],
            c: if kind == CellKind::Lstm {
                vec![0.0; hidden]
            } else {
                Vec::new()
            },
        }
    }
}

/// Everything one step needs for its backward pass.
#[derive(Debug, Clone)]
pub struct StepCache {
    pub x: Vec<f64>,
    pub prev: StepState,
    /// Post-activation gate values in [`CellKind::gate_names`] order.
    pub gates: Vec<Vec<f64>>,
    /// `tanh(c_t)` for LSTM, `r ⊙ h_prev` for GRU, empty for RNN.
    pub aux: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellWeights {
    pub kind: CellKind,
    pub input_dim: usize,
    pub hidden: usize,
    pub gates: Vec<GateWeights>,
}

impl CellWeights {
    /// Uniform `±1/√fan_in` weights, zero biases, LSTM forget bias 1.
    pub fn new(
        kind: CellKind,
        prefix: &str,
        input_dim: usize,
        hidden: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let gates = kind
            .gate_names()
            .iter()
            .map(|g| GateWeights::new(&format!("{prefix}.{g}"), input_dim, hidden, rng))
            .collect();
        let mut cell = Self {
            kind,
            input_dim,
            hidden,
            gates,
        };
        if kind == CellKind::Lstm {
            cell.gates[0].b.value.fill(1.0);
        }
        cell
    }

    pub fn zeros(kind: CellKind, prefix: &str, input_dim: usize, hidden: usize) -> Self {
        let gates = kind
            .gate_names()
            .iter()
            .map(|g| GateWeights::zeros(&format!("{prefix}.{g}"), input_dim, hidden))
            .collect();
        Self {
            kind,
            input_dim,
            hidden,
            gates,
        }
    }

    pub fn params(&self) -> impl Iterator<Item = &Param> {
        self.gates.iter().flat_map(|g| [&g.w, &g.u, &g.b])
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut Param> {
        self.gates
            .iter_mut()
            .flat_map(|g| [&mut g.w, &mut g.u, &mut g.b])
    }

    fn check(&self, x: &[f64], state: &StepState) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::Shape {
                context: "cell input",
                left: (1, x.len()),
                right: (self.input_dim, self.hidden),
            });
        }
        let c_len = if self.kind == CellKind::Lstm {
            self.hidden
        } else {
            0
        };
        if state.h.len() != self.hidden || state.c.len() != c_len {
            return Err(Error::Shape {
                context: "cell state",
                left: (state.h.len(), state.c.len()),
                right: (self.hidden, c_len),
            });
        }
        Ok(())
    }

    pub fn step(&self, x: &[f64], prev: &StepState) -> Result<(StepState, StepCache)> {
        self.check(x, prev)?;
        let hp = &prev.h;
        let (state, gates, aux) = match self.kind {
            CellKind::Rnn => {
                let h: Vec<f64> = self.gates[0].preact(x, hp).into_iter().map(tanh).collect();
                (
                    StepState {
                        h: h.clone(),
                        c: Vec::new(),
                    },
                    vec![h],
                    Vec::new(),
                )
            }
            CellKind::Lstm => {
                let act = |k: usize, f: fn(f64) -> f64| -> Vec<f64> {
                    self.gates[k].preact(x, hp).into_iter().map(f).collect()
                };
                let (f, i, g, o) = (
                    act(0, sigmoid),
                    act(1, sigmoid),
                    act(2, tanh),
                    act(3, sigmoid),
                );
                let c: Vec<f64> = (0..self.hidden)
                    .map(|k| f[k] * prev.c[k] + i[k] * g[k])
                    .collect();
                let tc: Vec<f64> = c.iter().map(|&v| tanh(v)).collect();
                let h = (0..self.hidden).map(|k| o[k] * tc[k]).collect();
                (StepState { h, c }, vec![f, i, g, o], tc)
            }
            CellKind::Gru => {
                let r: Vec<f64> = self.gates[0]
                    .preact(x, hp)
                    .into_iter()
                    .map(sigmoid)
                    .collect();
                let z: Vec<f64> = self.gates[1]
                    .preact(x, hp)
                    .into_iter()
                    .map(sigmoid)
                    .collect();
                let rh: Vec<f64> = r.iter().zip(hp).map(|(r, h)| r * h).collect();
                let g: Vec<f64> = self.gates[2].preact(x, &rh).into_iter().map(tanh).collect();
                let h = (0..self.hidden)
                    .map(|k| (1.0 - z[k]) * hp[k] + z[k] * g[k])
                    .collect();
                (StepState { h, c: Vec::new() }, vec![r, z, g], rh)
            }
        };
        let cache = StepCache {
            x: x.to_vec(),
            prev: prev.clone(),
            gates,
            aux,
        };
        Ok((state, cache))
    }

    /// Backpropagates one step. `dh`/`dc` are the gradients reaching this
    /// step's outputs; returns `(dx, dh_prev, dc_prev)`.
    pub fn step_backward(
        &mut self,
        cache: &StepCache,
        dh: &[f64],
        dc: &[f64],
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.hidden;
        let mut dx = vec![0.0; self.input_dim];
        let mut dh_prev = vec![0.0; n];
        let hp = &cache.prev.h;
        match self.kind {
            CellKind::Rnn => {
                let h = &cache.gates[0];
                let d: Vec<f64> = (0..n).map(|k| dh[k] * (1.0 - h[k] * h[k])).collect();
                self.gates[0].backward(&cache.x, hp, &d, &mut dx, &mut dh_prev);
                (dx, dh_prev, Vec::new())
            }
            CellKind::Lstm => {
                let [f, i, g, o] = [
                    &cache.gates[0],
                    &cache.gates[1],
                    &cache.gates[2],
                    &cache.gates[3],
                ];
                let tc = &cache.aux;
                let mut d_pre = vec![vec![0.0; n]; 4];
                let mut dc_prev = vec![0.0; n];
                for k in 0..n {
                    let d_c = dc[k] + dh[k] * o[k] * (1.0 - tc[k] * tc[k]);
                    d_pre[0][k] = d_c * cache.prev.c[k] * f[k] * (1.0 - f[k]);
                    d_pre[1][k] = d_c * g[k] * i[k] * (1.0 - i[k]);
                    d_pre[2][k] = d_c * i[k] * (1.0 - g[k] * g[k]);
                    d_pre[3][k] = dh[k] * tc[k] * o[k] * (1.0 - o[k]);
                    dc_prev[k] = d_c * f[k];
                }
                for (gate, d) in self.gates.iter_mut().zip(&d_pre) {
                    gate.backward(&cache.x, hp, d, &mut dx, &mut dh_prev);
                }
                (dx, dh_prev, dc_prev)
            }
            CellKind::Gru => {
                let [r, z, g] = [&cache.gates[0], &cache.gates[1], &cache.gates[2]];
                let rh = &cache.aux;
                let d_g: Vec<f64> = (0..n).map(|k| dh[k] * z[k] * (1.0 - g[k] * g[k])).collect();
                let mut d_rh = vec![0.0; n];
                self.gates[2].backward(&cache.x, rh, &d_g, &mut dx, &mut d_rh);
                let mut d_r = vec![0.0; n];
                let mut d_z = vec![0.0; n];
                for k in 0..n {
                    dh_prev[k] = dh[k] * (1.0 - z[k]) + d_rh[k] * r[k];
                    d_r[k] = d_rh[k] * hp[k] * r[k] * (1.0 - r[k]);
                    d_z[k] = dh[k] * (g[k] - hp[k]) * z[k] * (1.0 - z[k]);
                }
                self.gates[0].backward(&cache.x, hp, &d_r, &mut dx, &mut dh_prev);
                self.gates[1].backward(&cache.x, hp, &d_z, &mut dx, &mut dh_prev);
                (dx, dh_prev, Vec::new())
            }
        }
    }
}

fn expect_kind(weights: &CellWeights, kind: CellKind) -> Result<()> {
    if weights.kind != kind {
        return Err(Error::config(format!(
            "expected {kind:?} weights, got {:?}",
            weights.kind
        )));
    }
    Ok(())
}

/// `h_t = tanh(x·W + h_prev·U + b)`.
pub fn rnn_cell(x: &[f64], h_prev: &[f64], weights: &CellWeights) -> Result<Vec<f64>> {
    expect_kind(weights, CellKind::Rnn)?;
    let prev = StepState {
        h: h_prev.to_vec(),
        c: Vec::new(),
    };
    Ok(weights.step(x, &prev)?.0.h)
}

pub fn lstm_cell(x: &[f64], prev: &StepState, weights: &CellWeights) -> Result<StepState> {
    expect_kind(weights, CellKind::Lstm)?;
    Ok(weights.step(x, prev)?.0)
}

pub fn gru_cell(x: &[f64], h_prev: &[f64], weights: &CellWeights) -> Result<Vec<f64>> {
    expect_kind(weights, CellKind::Gru)?;
    let prev = StepState {
        h: h_prev.to_vec(),
        c: Vec::new(),
    };
    Ok(weights.step(x, &prev)?.0.h)
}
