//! Numeric building blocks with hand-written gradients: LSTM cells and
//! bi-directional layers, softmax heads, dropout, L1/L2 penalties, Adam, and
//! the binary checkpoint container.

mod adam;
pub mod checkpoint;
mod gradcheck;
mod lstm;
mod params;
mod softmax;

pub use adam::{AdamConfig, AdamState};
pub use gradcheck::{gradient_check, GradCheck, GRADCHECK_FLOOR};
pub use lstm::{bilstm_backward, bilstm_forward, lstm_step, BiLstmLayer, BiLstmTrace, LstmCellParams, LstmTrace};
pub use params::{
    add_regularization_grad, regularization_penalty, BlockKind, BlockMut, BlockRef, Parameters, RegularizationConfig,
};
pub use softmax::{apply_dropout, dropout_mask, log_softmax, softmax, SoftmaxHead};

use ndarray::Array2;
use rand::Rng;

/// Half-width of the uniform weight initialization.
pub const INIT_RANGE: f64 = 0.1;

pub(crate) fn uniform_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.gen_range(-INIT_RANGE..INIT_RANGE))
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
