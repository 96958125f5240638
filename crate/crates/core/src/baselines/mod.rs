//! Non-neural baselines: a MaxEnt intent classifier and a linear-chain CRF
//! slot tagger, trained by full-batch Adam on the penalized log-likelihood.

mod crf;
mod io;
mod maxent;

pub use crf::{crf_featurize, crf_featurize_sentence, crf_loglik, CrfGrad, CrfModel, CrfWeights};
pub use io::{BaselineModel, BASELINE_FORMAT};
pub use maxent::{maxent_featurize, MaxEntModel, MaxEntWeights};

use crate::config::BaselineConfig;
use crate::neural::{add_regularization_grad, regularization_penalty, AdamState, Parameters};
use crate::{Error, Result};

/// Minimizes `loss + penalty` with Adam. The L1 term uses its subgradient
/// and any weight whose sign flips during a step is clipped to zero.
/// Returns the objective after each iteration.
pub(crate) fn minimize<P, F>(params: &mut P, cfg: &BaselineConfig, mut loss_and_grad: F) -> Result<Vec<f64>>
where
    P: Parameters + Clone,
    F: FnMut(&P) -> (f64, P),
{
    cfg.validate()?;
    let reg = &cfg.regularization;
    let mut adam = AdamState::new(cfg.optimizer);
    let mut trajectory = Vec::new();
    let mut prev: Option<f64> = None;
    for _ in 0..cfg.max_iterations {
        let (loss, mut grad) = loss_and_grad(params);
        let objective = loss + regularization_penalty(params, reg);
        if !objective.is_finite() {
            return Err(Error::NonFiniteLoss);
        }
        if let Some(p) = prev {
            trajectory.push(objective);
            if (p - objective).abs() / p.abs().max(1e-12) < cfg.tolerance {
                break;
            }
        } else {
            trajectory.push(objective);
        }
        prev = Some(objective);
        add_regularization_grad(params, &mut grad, reg);
        let before = params.clone();
        adam.step(params, &grad)?;
        if reg.l1 > 0.0 {
            for (new, old) in params.blocks_mut().into_iter().zip(before.blocks()) {
                for (w, w0) in new.data.iter_mut().zip(old.data) {
                    if *w * w0 < 0.0 {
                        *w = 0.0;
                    }
                }
            }
        }
    }
    Ok(trajectory)
}

pub(crate) fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + values.map(|v| (v - m).exp()).sum::<f64>().ln()
}
