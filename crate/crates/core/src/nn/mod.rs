//! Numerical substrate: matrices, trainable parameters, a dense layer,
//! activations, MSE, Adam and finite-difference gradient checking.
//!
//! Everything is `f64`; gradients are written by hand per architecture.

mod activation;
mod adam;
mod dense;
mod gradcheck;
pub mod io;
mod loss;
mod matrix;
mod param;

pub use activation::{
    sigmoid, sigmoid_grad, sigmoid_grad_from_output, tanh, tanh_grad, tanh_grad_from_output,
};
pub use adam::{adam_step, clip_grad_norm, AdamHyper};
pub use dense::Dense;
pub use gradcheck::{grad_check, GradCheckReport};
pub use loss::mse_loss;
pub use matrix::Matrix;
pub use param::{Param, Parameterized};
