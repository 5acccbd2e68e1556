pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// σ'(x) expressed through `y = σ(x)`.
pub fn sigmoid_grad_from_output(y: f64) -> f64 {
    y * (1.0 - y)
}

pub fn sigmoid_grad(x: f64) -> f64 {
    sigmoid_grad_from_output(sigmoid(x))
}

pub fn tanh(x: f64) -> f64 {
    x.tanh()
}

/// tanh'(x) expressed through `y = tanh(x)`.
pub fn tanh_grad_from_output(y: f64) -> f64 {
    1.0 - y * y
}

pub fn tanh_grad(x: f64) -> f64 {
    tanh_grad_from_output(x.tanh())
}
