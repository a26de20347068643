use serde::{Deserialize, Serialize};

use super::{NetworkError, NetworkParams};
use crate::scalar::Scalar;
use crate::vector::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Sparse per-row gradient buffer over a fixed number of rows.
///
/// Rows are materialized on first touch and kept in touch order, so
/// applying them is deterministic for a fixed accumulation order.
#[derive(Debug, Clone)]
pub struct RowGrads<T> {
    width: usize,
    slot_of: Vec<u32>,
    ids: Vec<u32>,
    data: Vec<T>,
}

const NO_SLOT: u32 = u32::MAX;

impl<T: Scalar> RowGrads<T> {
    pub fn new(rows: usize, width: usize) -> Self {
        Self {
            width,
            slot_of: vec![NO_SLOT; rows],
            ids: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn row_mut(&mut self, id: u32) -> &mut [T] {
        let slot = &mut self.slot_of[id as usize];
        if *slot == NO_SLOT {
            *slot = self.ids.len() as u32;
            self.ids.push(id);
            self.data.resize(self.data.len() + self.width, T::zero());
        }
        let s = *slot as usize * self.width;
        &mut self.data[s..s + self.width]
    }

    pub fn row(&self, id: u32) -> Option<&[T]> {
        let slot = *self.slot_of.get(id as usize)?;
        (slot != NO_SLOT).then(|| {
            let s = slot as usize * self.width;
            &self.data[s..s + self.width]
        })
    }

    /// Touched ids in first-touch order.
    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &[T])> {
        self.ids.iter().copied().zip(self.data.chunks_exact(self.width.max(1)))
    }

    pub fn clear(&mut self) {
        for &id in &self.ids {
            self.slot_of[id as usize] = NO_SLOT;
        }
        self.ids.clear();
        self.data.clear();
    }
}

/// Gradient of one batch. Output rows carry the class bias in their last
/// column.
#[derive(Debug, Clone)]
pub struct Gradients<T> {
    pub out: RowGrads<T>,
    pub input: RowGrads<T>,
    pub b1: Vec<T>,
}

impl<T: Scalar> Gradients<T> {
    pub fn for_params(params: &NetworkParams<T>) -> Self {
        let h = params.hidden_dim();
        Self {
            out: RowGrads::new(params.num_classes(), h + 1),
            input: RowGrads::new(params.input_dim(), h),
            b1: vec![T::zero(); h],
        }
    }

    pub fn clear(&mut self) {
        self.out.clear();
        self.input.clear();
        self.b1.iter_mut().for_each(|g| *g = T::zero());
    }

    fn check_finite(&self) -> Result<(), NetworkError> {
        for (id, row) in self.out.iter() {
            if row.iter().any(|g| !g.is_finite()) {
                return Err(NetworkError::NonFiniteGradient { param: "w_out", row: id as usize });
            }
        }
        for (id, row) in self.input.iter() {
            if row.iter().any(|g| !g.is_finite()) {
                return Err(NetworkError::NonFiniteGradient { param: "w1", row: id as usize });
            }
        }
        if self.b1.iter().any(|g| !g.is_finite()) {
            return Err(NetworkError::NonFiniteGradient { param: "b1", row: 0 });
        }
        Ok(())
    }
}

/// Adam moments with one step counter per weight row, so a row's bias
/// correction follows the number of times it has actually been updated.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    pub step: u64,
    pub w1_m: Matrix<T>,
    pub w1_v: Matrix<T>,
    pub w1_t: Vec<u64>,
    pub b1_m: Vec<T>,
    pub b1_v: Vec<T>,
    pub b1_t: u64,
    /// Class rows with the bias appended as the last column.
    pub out_m: Matrix<T>,
    pub out_v: Matrix<T>,
    pub out_t: Vec<u64>,
}

struct Moments<T> {
    lr: T,
    beta1: T,
    beta2: T,
    eps: T,
}

impl<T: Scalar> Moments<T> {
    /// One Adam step over a row at its own step count `t`.
    fn apply(&self, config: &AdamConfig, t: u64, grad: &[T], m: &mut [T], v: &mut [T], mut param: impl FnMut(usize, T)) {
        let c1 = T::of(1.0 - config.beta1.powf(t as f64));
        let c2 = T::of(1.0 - config.beta2.powf(t as f64));
        let one = T::one();
        for (i, &g) in grad.iter().enumerate() {
            m[i] = self.beta1 * m[i] + (one - self.beta1) * g;
            v[i] = self.beta2 * v[i] + (one - self.beta2) * g * g;
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            param(i, self.lr * m_hat / (v_hat.sqrt() + self.eps));
        }
    }
}

impl<T: Scalar> AdamState<T> {
    pub fn new(config: AdamConfig, params: &NetworkParams<T>) -> Self {
        let (d, h, n) = (params.input_dim(), params.hidden_dim(), params.num_classes());
        Self {
            config,
            step: 0,
            w1_m: Matrix::zeros(d, h),
            w1_v: Matrix::zeros(d, h),
            w1_t: vec![0; d],
            b1_m: vec![T::zero(); h],
            b1_v: vec![T::zero(); h],
            b1_t: 0,
            out_m: Matrix::zeros(n, h + 1),
            out_v: Matrix::zeros(n, h + 1),
            out_t: vec![0; n],
        }
    }

    /// Applies `grads` to the rows they touch. Rows whose gradient is all
    /// zero are left alone, moments included. Nothing is written if any
    /// gradient entry is non-finite.
    ///
    /// Returns the class rows that changed.
    pub fn apply(&mut self, params: &mut NetworkParams<T>, grads: &Gradients<T>) -> Result<Vec<u32>, NetworkError> {
        grads.check_finite()?;
        self.step += 1;
        let cfg = self.config;
        let mo = Moments {
            lr: T::of(cfg.lr),
            beta1: T::of(cfg.beta1),
            beta2: T::of(cfg.beta2),
            eps: T::of(cfg.eps),
        };
        let h = params.hidden_dim();
        let zero = T::zero();

        let mut changed = Vec::with_capacity(grads.out.ids().len());
        for (id, g) in grads.out.iter() {
            if g.iter().all(|&x| x == zero) {
                continue;
            }
            let i = id as usize;
            self.out_t[i] += 1;
            let w = params.w_out.row_mut(i);
            let b = &mut params.b_out[i];
            mo.apply(&cfg, self.out_t[i], g, self.out_m.row_mut(i), self.out_v.row_mut(i), |k, d| {
                if k < h {
                    w[k] -= d;
                } else {
                    *b -= d;
                }
            });
            changed.push(id);
        }
        for (id, g) in grads.input.iter() {
            if g.iter().all(|&x| x == zero) {
                continue;
            }
            let j = id as usize;
            self.w1_t[j] += 1;
            let w = params.w1.row_mut(j);
            mo.apply(&cfg, self.w1_t[j], g, self.w1_m.row_mut(j), self.w1_v.row_mut(j), |k, d| w[k] -= d);
        }
        if grads.b1.iter().any(|&x| x != zero) {
            self.b1_t += 1;
            let b = &mut params.b1;
            mo.apply(&cfg, self.b1_t, &grads.b1, &mut self.b1_m, &mut self.b1_v, |k, d| b[k] -= d);
        }
        Ok(changed)
    }
}
