//! RNN, LSTM, BiLSTM and GRU regressors: stacked recurrent layers feeding a
//! linear head on the final timestep, trained with hand-written BPTT.

mod cell;
mod model;
mod train;

pub use cell::{
    gru_cell, lstm_cell, rnn_cell, CellKind, CellWeights, GateWeights, StepCache, StepState,
};
pub use model::{Architecture, ForwardCache, ModelConfig, RecurrentLayer, RecurrentModel};
pub use train::{predict, train, TrainConfig, TrainReport};
