use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    /// Penalized by L1/L2.
    Weight,
    Bias,
}

/// A named, read-only view of one parameter array.
#[derive(Debug)]
pub struct BlockRef<'a> {
    pub name: String,
    pub shape: Vec<usize>,
    pub kind: BlockKind,
    pub data: &'a [f64],
}

impl<'a> BlockRef<'a> {
    pub fn matrix(name: String, kind: BlockKind, m: &'a Array2<f64>) -> Self {
        BlockRef {
            name,
            shape: m.shape().to_vec(),
            kind,
            data: m.as_slice().expect("parameters are contiguous"),
        }
    }

    pub fn vector(name: String, kind: BlockKind, v: &'a Array1<f64>) -> Self {
        BlockRef {
            name,
            shape: vec![v.len()],
            kind,
            data: v.as_slice().expect("parameters are contiguous"),
        }
    }
}

#[derive(Debug)]
pub struct BlockMut<'a> {
    pub name: String,
    pub kind: BlockKind,
    pub data: &'a mut [f64],
}

impl<'a> BlockMut<'a> {
    pub fn matrix(name: String, kind: BlockKind, m: &'a mut Array2<f64>) -> Self {
        BlockMut {
            name,
            kind,
            data: m.as_slice_mut().expect("parameters are contiguous"),
        }
    }

    pub fn vector(name: String, kind: BlockKind, v: &'a mut Array1<f64>) -> Self {
        BlockMut {
            name,
            kind,
            data: v.as_slice_mut().expect("parameters are contiguous"),
        }
    }
}

/// A set of trainable arrays in a fixed, declared order. Gradient containers
/// implement it with the same block order as the parameters they shadow.
pub trait Parameters {
    fn blocks(&self) -> Vec<BlockRef<'_>>;
    fn blocks_mut(&mut self) -> Vec<BlockMut<'_>>;

    fn num_scalars(&self) -> usize {
        self.blocks().iter().map(|b| b.data.len()).sum()
    }

    fn is_finite(&self) -> bool {
        self.blocks().iter().all(|b| b.data.iter().all(|v| v.is_finite()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegularizationConfig {
    pub l1: f64,
    pub l2: f64,
    pub dropout: f64,
}

impl Default for RegularizationConfig {
    fn default() -> Self {
        RegularizationConfig {
            l1: 1e-6,
            l2: 1e-5,
            dropout: 0.5,
        }
    }
}

impl RegularizationConfig {
    pub const NONE: RegularizationConfig = RegularizationConfig {
        l1: 0.0,
        l2: 0.0,
        dropout: 0.0,
    };

    pub fn validate(&self) -> Result<()> {
        if !(self.l1 >= 0.0 && self.l2 >= 0.0) {
            return Err(Error::ConfigViolation("l1 and l2 must be non-negative".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::ConfigViolation("dropout must be in [0, 1)".into()));
        }
        Ok(())
    }
}

/// `l1 * sum|w| + l2 * sum w^2` over weight blocks.
pub fn regularization_penalty<P: Parameters + ?Sized>(params: &P, reg: &RegularizationConfig) -> f64 {
    if reg.l1 == 0.0 && reg.l2 == 0.0 {
        return 0.0;
    }
    params
        .blocks()
        .iter()
        .filter(|b| b.kind == BlockKind::Weight)
        .flat_map(|b| b.data.iter())
        .map(|w| reg.l1 * w.abs() + reg.l2 * w * w)
        .sum()
}

/// Adds the penalty gradient; the L1 subgradient at zero is zero.
pub fn add_regularization_grad<P, G>(params: &P, grads: &mut G, reg: &RegularizationConfig)
where
    P: Parameters + ?Sized,
    G: Parameters + ?Sized,
{
    if reg.l1 == 0.0 && reg.l2 == 0.0 {
        return;
    }
    for (p, g) in params.blocks().iter().zip(grads.blocks_mut()) {
        if p.kind != BlockKind::Weight {
            continue;
        }
        for (w, d) in p.data.iter().zip(g.data.iter_mut()) {
            let sign = if *w > 0.0 {
                1.0
            } else if *w < 0.0 {
                -1.0
            } else {
                0.0
            };
            *d += reg.l1 * sign + 2.0 * reg.l2 * w;
        }
    }
}
