use serde::{Deserialize, Serialize};

use super::params::Parameters;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam moments, one accumulator per parameter block.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(config: AdamConfig) -> Self {
        AdamState {
            config,
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    /// One bias-corrected Adam update. Blocks whose name satisfies `frozen`
    /// keep their values.
    pub fn update<P, G>(&mut self, params: &mut P, grads: &G, frozen: impl Fn(&str) -> bool) -> Result<()>
    where
        P: Parameters + ?Sized,
        G: Parameters + ?Sized,
    {
        let grads = grads.blocks();
        let params = params.blocks_mut();
        if params.len() != grads.len() || params.iter().zip(&grads).any(|(p, g)| p.data.len() != g.data.len()) {
            return Err(Error::DimensionMismatch("gradient blocks do not match parameter blocks".into()));
        }
        if self.first.is_empty() {
            self.first = params.iter().map(|p| vec![0.0; p.data.len()]).collect();
            self.second = self.first.clone();
        } else if self.first.len() != params.len() || self.first.iter().zip(&params).any(|(m, p)| m.len() != p.data.len()) {
            return Err(Error::DimensionMismatch("optimizer state does not match parameters".into()));
        }
        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let correction1 = 1.0 - beta1.powi(self.step as i32);
        let correction2 = 1.0 - beta2.powi(self.step as i32);
        for (((p, g), m), v) in params.into_iter().zip(&grads).zip(&mut self.first).zip(&mut self.second) {
            if frozen(&p.name) {
                continue;
            }
            for k in 0..p.data.len() {
                let gk = g.data[k];
                m[k] = beta1 * m[k] + (1.0 - beta1) * gk;
                v[k] = beta2 * v[k] + (1.0 - beta2) * gk * gk;
                let m_hat = m[k] / correction1;
                let v_hat = v[k] / correction2;
                p.data[k] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
        Ok(())
    }

    /// Update with nothing frozen.
    pub fn step<P, G>(&mut self, params: &mut P, grads: &G) -> Result<()>
    where
        P: Parameters + ?Sized,
        G: Parameters + ?Sized,
    {
        self.update(params, grads, |_| false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{BlockKind, BlockMut, BlockRef};
    use ndarray::{array, Array1};

    struct Vec1(Array1<f64>);

    impl Parameters for Vec1 {
        fn blocks(&self) -> Vec<BlockRef<'_>> {
            vec![BlockRef::vector("v".into(), BlockKind::Weight, &self.0)]
        }
        fn blocks_mut(&mut self) -> Vec<BlockMut<'_>> {
            vec![BlockMut::vector("v".into(), BlockKind::Weight, &mut self.0)]
        }
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let cfg = AdamConfig {
            epsilon: 0.0,
            ..AdamConfig::default()
        };
        let mut state = AdamState::new(cfg);
        let mut p = Vec1(array![1.0, -1.0, 0.5]);
        state.step(&mut p, &Vec1(array![3.0, -0.2, 1e-6])).unwrap();
        let expected = [1.0 - 1e-3, -1.0 + 1e-3, 0.5 - 1e-3];
        for (a, b) in p.0.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(state.step, 1);
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut state = AdamState::new(AdamConfig::default());
        let mut p = Vec1(array![0.3, -2.0]);
        for _ in 0..100 {
            state.step(&mut p, &Vec1(array![0.0, 0.0])).unwrap();
        }
        assert_eq!(p.0, array![0.3, -2.0]);
    }

    #[test]
    fn minimizes_quadratic_bowl() {
        // reference recurrence (scripts/adam_bowl.py) ends at w ~ -7.2e-6
        let mut state = AdamState::new(AdamConfig {
            learning_rate: 0.1,
            ..AdamConfig::default()
        });
        let mut w = Vec1(array![1.0]);
        for _ in 0..200 {
            let g = Vec1(&w.0 * 2.0);
            state.step(&mut w, &g).unwrap();
        }
        assert!(w.0[0].abs() < 0.05, "{}", w.0[0]);
        assert!((w.0[0] - -7.217_986_477_708_84e-6).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch() {
        let mut state = AdamState::new(AdamConfig::default());
        let mut p = Vec1(array![1.0]);
        assert!(state.step(&mut p, &Vec1(array![1.0, 2.0])).is_err());
    }

    #[test]
    fn frozen_blocks_untouched() {
        let mut state = AdamState::new(AdamConfig::default());
        let mut p = Vec1(array![1.0]);
        state.update(&mut p, &Vec1(array![1.0]), |n| n == "v").unwrap();
        assert_eq!(p.0[0], 1.0);
    }
}
