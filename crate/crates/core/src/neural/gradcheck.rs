//! Central finite-difference verification of the analytic gradients, run in
//! 64-bit precision.

use super::net::{accumulate_example_grad, bce_mean, score_example, EncodedReaction};
use super::params::ModelParams;

/// Outcome of one finite-difference sweep over every parameter.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_tensor: String,
    pub params_checked: usize,
}

fn batch_loss(params: &ModelParams<f64>, examples: &[EncodedReaction], use_rsd: bool) -> f64 {
    let pairs: Vec<(f64, bool)> = examples
        .iter()
        .map(|ex| (score_example(ex, params, use_rsd), ex.label))
        .collect();
    bce_mean(&pairs)
}

/// Compare analytic gradients of the mean batch loss against central finite
/// differences with the given step, over every parameter. Relative error uses
/// `|a - b| / max(|a|, |b|, 1e-6)` so near-zero coordinates compare on an
/// absolute scale.
pub fn finite_difference_check(
    params: &ModelParams<f64>,
    examples: &[EncodedReaction],
    use_rsd: bool,
    step: f64,
) -> GradCheckReport {
    let mut analytic = ModelParams::zeros(params.dims);
    let scale = 1.0 / examples.len() as f64;
    for ex in examples {
        accumulate_example_grad(ex, params, &mut analytic, use_rsd, scale);
    }

    let mut work = params.clone();
    let tensor_names: Vec<(String, usize)> = params
        .tensors()
        .into_iter()
        .map(|(name, _, data)| (name, data.len()))
        .collect();

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_tensor: String::new(),
        params_checked: 0,
    };
    for (ti, (name, len)) in tensor_names.iter().enumerate() {
        for k in 0..*len {
            {
                work.tensors_mut()[ti].1[k] += step;
            }
            let up = batch_loss(&work, examples, use_rsd);
            {
                work.tensors_mut()[ti].1[k] -= 2.0 * step;
            }
            let down = batch_loss(&work, examples, use_rsd);
            {
                work.tensors_mut()[ti].1[k] += step;
            }
            let fd = (up - down) / (2.0 * step);
            let a = analytic.tensors()[ti].2[k];
            let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-6);
            report.params_checked += 1;
            if rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst_tensor = name.clone();
            }
        }
    }
    report
}
