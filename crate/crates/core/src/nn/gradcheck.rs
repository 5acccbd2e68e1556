use super::Parameterized;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_param: String,
    pub worst_index: usize,
    pub checked: usize,
}

/// Compares analytic gradients against central differences for every
/// parameter element.
///
/// `backward` must fill the gradients of `loss` (they are zeroed first).
/// Relative error is `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn grad_check<M: Parameterized>(
    model: &mut M,
    h: f64,
    loss: impl Fn(&M) -> Result<f64>,
    mut backward: impl FnMut(&mut M) -> Result<()>,
) -> Result<GradCheckReport> {
    if !(1e-6..=1e-4).contains(&h) {
        return Err(Error::config(format!(
            "finite-difference step {h} outside [1e-6, 1e-4]"
        )));
    }
    model.zero_grad();
    backward(model)?;
    let analytic: Vec<(String, Vec<f64>)> = model
        .params()
        .iter()
        .map(|p| (p.name.clone(), p.grad.data().to_vec()))
        .collect();

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_param: String::new(),
        worst_index: 0,
        checked: 0,
    };
    for (pi, (name, grads)) in analytic.iter().enumerate() {
        for (k, &a) in grads.iter().enumerate() {
            let original = model.params()[pi].value.data()[k];
            model.params_mut()[pi].value.data_mut()[k] = original + h;
            let plus = loss(model)?;
            model.params_mut()[pi].value.data_mut()[k] = original - h;
            let minus = loss(model)?;
            model.params_mut()[pi].value.data_mut()[k] = original;

            let numeric = (plus - minus) / (2.0 * h);
            if !a.is_finite() || !numeric.is_finite() {
                return Err(Error::NonFinite(format!("gradient of {name}[{k}]")));
            }
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            report.checked += 1;
            if rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst_param = name.clone();
                report.worst_index = k;
            }
        }
    }
    Ok(report)
}
