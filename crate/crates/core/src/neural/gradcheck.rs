//! Central finite-difference gradient checking.

use super::params::Parameters;

/// Denominator floor for relative errors. Central differences at step 1e-5
/// carry about `1e-16 * |loss| / 1e-5` of rounding noise, around 1e-10 for
/// toy losses, so gradients much below this floor cannot be resolved.
pub const GRADCHECK_FLOOR: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    /// Block and offset of the worst entry.
    pub worst: (String, usize),
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
}

/// Compares `analytic` with `(loss(p + h e_i) - loss(p - h e_i)) / 2h` for
/// every scalar of `params`. Relative error is
/// `|a - n| / max(|a|, |n|, GRADCHECK_FLOOR)`.
pub fn gradient_check<P, G>(params: &P, analytic: &G, step: f64, mut loss: impl FnMut(&P) -> f64) -> GradCheck
where
    P: Parameters + Clone,
    G: Parameters,
{
    let grads: Vec<(String, Vec<f64>)> = analytic.blocks().iter().map(|b| (b.name.clone(), b.data.to_vec())).collect();
    let mut probe = params.clone();
    let mut out = GradCheck {
        max_rel_error: 0.0,
        worst: (String::new(), 0),
        analytic: 0.0,
        numeric: 0.0,
        checked: 0,
    };
    for (bi, (name, g)) in grads.iter().enumerate() {
        for k in 0..g.len() {
            let orig = probe.blocks_mut()[bi].data[k];
            probe.blocks_mut()[bi].data[k] = orig + step;
            let up = loss(&probe);
            probe.blocks_mut()[bi].data[k] = orig - step;
            let down = loss(&probe);
            probe.blocks_mut()[bi].data[k] = orig;
            let numeric = (up - down) / (2.0 * step);
            let a = g[k];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(GRADCHECK_FLOOR);
            out.checked += 1;
            if rel > out.max_rel_error || out.worst.0.is_empty() {
                out.max_rel_error = out.max_rel_error.max(rel);
                if rel >= out.max_rel_error {
                    out.worst = (name.clone(), k);
                    out.analytic = a;
                    out.numeric = numeric;
                }
            }
        }
    }
    out
}
