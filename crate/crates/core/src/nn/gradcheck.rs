use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{LayerSpec, Network, Tensor};
use crate::error::Result;

/// Options for [`grad_check`].
#[derive(Clone, Copy, Debug)]
pub struct GradCheckOptions {
    /// Central-difference step.
    pub h: f64,
    /// Check at most this many coordinates per parameter tensor (sampled
    /// without replacement); `None` checks every coordinate.
    pub max_per_tensor: Option<usize>,
    pub seed: u64,
    /// Relative errors are taken against `max(|analytic|, |numeric|, floor)`.
    pub floor: f64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            h: 1e-5,
            max_per_tensor: None,
            seed: 0,
            floor: 1e-7,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// (tensor index, flat index) of the worst coordinate.
    pub worst: Option<(usize, usize)>,
    pub checked: usize,
    /// Coordinates whose ±h perturbation moved an activation across its kink.
    pub skipped: usize,
}

fn nudge_zeros(values: &mut [f64]) {
    for v in values.iter_mut().filter(|v| **v == 0.0) {
        *v = 1e-3;
    }
}

/// Builds a 64-bit network from `specs` (input shape taken from `input`) and
/// compares its analytic parameter gradients with central differences.
pub fn grad_check(
    specs: Vec<LayerSpec>,
    input: &Tensor<f64>,
    labels: &[usize],
    opts: GradCheckOptions,
) -> Result<GradCheckReport> {
    let mut net = Network::<f64>::new(&input.shape()[1..], specs, opts.seed)?;
    grad_check_network(&mut net, input, labels, opts)
}

/// Exact zeros in the input and parameters are first moved to 1e-3 so the
/// check never sits on an activation kink by construction.
pub fn grad_check_network(
    net: &mut Network<f64>,
    input: &Tensor<f64>,
    labels: &[usize],
    opts: GradCheckOptions,
) -> Result<GradCheckReport> {
    let mut x = input.clone();
    nudge_zeros(x.data_mut());
    for p in net.params_mut() {
        nudge_zeros(p.data_mut());
    }
    net.loss_and_backward(&x, labels)?;
    let analytic: Vec<Vec<f64>> = net
        .params()
        .iter()
        .map(|p| p.grad().expect("gradient populated").to_vec())
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        checked: 0,
        skipped: 0,
    };
    for (ti, grads) in analytic.iter().enumerate() {
        let n = grads.len();
        let coords: Vec<usize> = match opts.max_per_tensor {
            Some(m) if m < n => {
                let mut c = sample(&mut rng, n, m).into_vec();
                c.sort_unstable();
                c
            }
            _ => (0..n).collect(),
        };
        for j in coords {
            let orig = net.params()[ti].data()[j];
            net.params_mut()[ti].data_mut()[j] = orig + opts.h;
            let plus = net.loss_and_backward(&x, labels)?.loss;
            let sig_plus = net.kink_signature(&x)?;
            net.params_mut()[ti].data_mut()[j] = orig - opts.h;
            let minus = net.loss_and_backward(&x, labels)?.loss;
            let sig_minus = net.kink_signature(&x)?;
            net.params_mut()[ti].data_mut()[j] = orig;
            if sig_plus != sig_minus {
                report.skipped += 1;
                continue;
            }
            let numeric = (plus - minus) / (2.0 * opts.h);
            let a = grads[j];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(opts.floor);
            report.checked += 1;
            if report.worst.is_none() || rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst = Some((ti, j));
            }
        }
    }
    // restore analytic gradients of the unperturbed point
    net.loss_and_backward(&x, labels)?;
    Ok(report)
}
