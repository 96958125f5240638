use ndarray::{Array, Array1, Array2, ArrayView1, Dimension};
use rand::Rng;

use super::params::{BlockKind, BlockMut, BlockRef};
use super::uniform_matrix;
use crate::{Error, Result};

/// Max-subtracted softmax.
pub fn softmax(logits: ArrayView1<f64>) -> Result<Array1<f64>> {
    if logits.is_empty() || logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let max = logits.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let e = logits.mapv(|v| (v - max).exp());
    let sum = e.sum();
    Ok(e / sum)
}

pub fn log_softmax(logits: ArrayView1<f64>) -> Result<Array1<f64>> {
    if logits.is_empty() || logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let max = logits.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let lse = max + logits.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    Ok(logits.mapv(|v| v - lse))
}

/// Affine map followed by a softmax: `softmax(W x + b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SoftmaxHead {
    /// `out x in`
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl SoftmaxHead {
    pub fn init(out_dim: usize, in_dim: usize, rng: &mut impl Rng) -> Self {
        SoftmaxHead {
            weight: uniform_matrix(out_dim, in_dim, rng),
            bias: Array1::zeros(out_dim),
        }
    }

    pub fn zeros(out_dim: usize, in_dim: usize) -> Self {
        SoftmaxHead {
            weight: Array2::zeros((out_dim, in_dim)),
            bias: Array1::zeros(out_dim),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.nrows()
    }

    pub(crate) fn blocks<'a>(&'a self, prefix: &str, out: &mut Vec<BlockRef<'a>>) {
        out.push(BlockRef::matrix(format!("{prefix}.weight"), BlockKind::Weight, &self.weight));
        out.push(BlockRef::vector(format!("{prefix}.bias"), BlockKind::Bias, &self.bias));
    }

    pub(crate) fn blocks_mut<'a>(&'a mut self, prefix: &str, out: &mut Vec<BlockMut<'a>>) {
        out.push(BlockMut::matrix(format!("{prefix}.weight"), BlockKind::Weight, &mut self.weight));
        out.push(BlockMut::vector(format!("{prefix}.bias"), BlockKind::Bias, &mut self.bias));
    }
}

/// Inverted-dropout mask: entries are 0 with probability `rate`, otherwise
/// `1 / (1 - rate)`.
pub fn dropout_mask<D: Dimension>(shape: D, rate: f64, rng: &mut impl Rng) -> Array<f64, D> {
    let keep = 1.0 / (1.0 - rate);
    Array::from_shape_simple_fn(shape, || if rng.gen::<f64>() < rate { 0.0 } else { keep })
}

/// Inverted dropout in training mode, identity otherwise.
pub fn apply_dropout<D: Dimension>(activations: &Array<f64, D>, rate: f64, train_mode: bool, rng: &mut impl Rng) -> Array<f64, D> {
    if !train_mode || rate == 0.0 {
        return activations.clone();
    }
    activations * &dropout_mask(activations.raw_dim(), rate, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_on_zeros() {
        assert_eq!(softmax(array![0.0, 0.0].view()).unwrap(), array![0.5, 0.5]);
    }

    #[test]
    fn large_logits_do_not_overflow() {
        let p = softmax(array![1000.0, 0.0].view()).unwrap();
        assert_eq!(p[0], 1.0);
        // exp(-1000) in extended precision is about 5.08e-435, below f64 range
        assert_eq!(p[1], 0.0);
        let lp = log_softmax(array![1000.0, 0.0].view()).unwrap();
        assert_eq!(lp[0], 0.0);
        assert_eq!(lp[1], -1000.0);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(matches!(softmax(array![f64::NAN].view()), Err(Error::NonFiniteInput)));
        assert!(matches!(softmax(array![f64::INFINITY, 0.0].view()), Err(Error::NonFiniteInput)));
    }

    #[test]
    fn dropout_identity_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = array![1.0, 2.0, 3.0];
        assert_eq!(apply_dropout(&x, 0.0, true, &mut rng), x);
        assert_eq!(apply_dropout(&x, 0.7, false, &mut rng), x);
    }

    #[test]
    fn dropout_preserves_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let x = Array1::from_elem(100_000, 1.0);
        let y = apply_dropout(&x, 0.5, true, &mut rng);
        assert!((y.mean().unwrap() - 1.0).abs() < 0.02);
        assert!(y.iter().all(|&v| v == 0.0 || v == 2.0));
    }

    proptest! {
        #[test]
        fn softmax_is_distribution_and_shift_invariant(
            v in proptest::collection::vec(-50.0f64..50.0, 1..10),
            c in -100.0f64..100.0,
        ) {
            let v = Array1::from(v);
            let p = softmax(v.view()).unwrap();
            prop_assert!(p.iter().all(|&x| x >= 0.0));
            prop_assert!((p.sum() - 1.0).abs() <= 1e-12);
            let q = softmax((&v + c).view()).unwrap();
            for (a, b) in p.iter().zip(q.iter()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
