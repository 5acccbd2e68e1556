use rand::Rng;

use super::{Matrix, Param, Parameterized};
use crate::error::{Error, Result};

/// Fully connected layer `y = x·W + b` over a batch of row vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub w: Param,
    pub b: Param,
}

impl Dense {
    pub fn new(name: &str, input: usize, output: usize, rng: &mut impl Rng) -> Self {
        Self {
            w: Param::uniform(format!("{name}.w"), input, output, input, rng),
            b: Param::zeros(format!("{name}.b"), 1, output),
        }
    }

    pub fn zeros(name: &str, input: usize, output: usize) -> Self {
        Self {
            w: Param::zeros(format!("{name}.w"), input, output),
            b: Param::zeros(format!("{name}.b"), 1, output),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w.value.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.w.value.cols()
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        let mut y = x.matmul(&self.w.value)?;
        let bias = self.b.value.row(0);
        for i in 0..y.rows() {
            for (v, b) in y.row_mut(i).iter_mut().zip(bias) {
                *v += b;
            }
        }
        Ok(y)
    }

    /// Single-row forward without allocation of a batch matrix.
    pub fn forward_row(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.b.value.row(0).to_vec();
        self.w.value.vec_mul_acc(x, &mut y);
        y
    }

    /// Accumulates `dW += xᵀ·dy`, `db += Σ dy` and returns `dx = dy·Wᵀ`.
    pub fn backward(&mut self, x: &Matrix, upstream: &Matrix) -> Result<Matrix> {
        if x.rows() != upstream.rows()
            || x.cols() != self.input_dim()
            || upstream.cols() != self.output_dim()
        {
            return Err(Error::Shape {
                context: "dense backward (input vs upstream)",
                left: x.shape(),
                right: upstream.shape(),
            });
        }
        let mut dx = Matrix::zeros(x.rows(), x.cols());
        for i in 0..x.rows() {
            let dy = upstream.row(i);
            self.w.grad.add_outer(x.row(i), dy);
            for (g, d) in self.b.grad.row_mut(0).iter_mut().zip(dy) {
                *g += d;
            }
            self.w.value.mul_vec_acc(dy, dx.row_mut(i));
        }
        Ok(dx)
    }

    pub fn backward_row(&mut self, x: &[f64], dy: &[f64]) -> Vec<f64> {
        self.w.grad.add_outer(x, dy);
        for (g, d) in self.b.grad.row_mut(0).iter_mut().zip(dy) {
            *g += d;
        }
        let mut dx = vec![0.0; x.len()];
        self.w.value.mul_vec_acc(dy, &mut dx);
        dx
    }
}

impl Parameterized for Dense {
    fn params(&self) -> Vec<&Param> {
        vec![&self.w, &self.b]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.w, &mut self.b]
    }
}
