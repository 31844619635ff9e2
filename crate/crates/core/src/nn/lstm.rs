//! LSTM cell with exact backpropagation through time.
//!
//! With `z = [x_t, h_{t-1}]`:
//!
//! ```text
//! f = σ(W_f z + b_f)    i = σ(W_i z + b_i)
//! g = tanh(W_c z + b_c) o = σ(W_o z + b_o)
//! c_t = f ⊙ c_{t-1} + i ⊙ g
//! h_t = o ⊙ tanh(c_t)
//! ```

use super::tensor::{sigmoid, Matrix, Parameters, TensorView};
use crate::error::{Error, Result};

const GATE_NAMES: [&str; 4] = ["f", "i", "c", "o"];

#[derive(Debug, Clone, PartialEq)]
pub struct LstmCell {
    pub input_dim: usize,
    pub hidden_dim: usize,
    /// Gate weights in order forget, input, candidate, output; each
    /// `hidden_dim x (input_dim + hidden_dim)`.
    pub w: [Matrix; 4],
    pub b: [Vec<f64>; 4],
    name: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden_dim: usize) -> Self {
        Self {
            h: vec![0.0; hidden_dim],
            c: vec![0.0; hidden_dim],
        }
    }
}

/// Activations of one step, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct StepCache {
    z: Vec<f64>,
    f: Vec<f64>,
    i: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    c_prev: Vec<f64>,
    tanh_c: Vec<f64>,
}

impl LstmCell {
    pub fn zeros(name: &'static str, input_dim: usize, hidden_dim: usize) -> Self {
        let z = input_dim + hidden_dim;
        Self {
            input_dim,
            hidden_dim,
            w: std::array::from_fn(|_| Matrix::zeros(hidden_dim, z)),
            b: std::array::from_fn(|_| vec![0.0; hidden_dim]),
            name,
        }
    }

    fn check(&self, x: &[f64], state: &LstmState) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch(format!(
                "{}: input of length {} for a cell expecting {}",
                self.name,
                x.len(),
                self.input_dim
            )));
        }
        if state.h.len() != self.hidden_dim || state.c.len() != self.hidden_dim {
            return Err(Error::DimensionMismatch(format!(
                "{}: state of size ({}, {}) for hidden size {}",
                self.name,
                state.h.len(),
                state.c.len(),
                self.hidden_dim
            )));
        }
        Ok(())
    }

    fn step_cached(&self, x: &[f64], state: &LstmState) -> (LstmState, StepCache) {
        let n = self.hidden_dim;
        let mut z = Vec::with_capacity(self.input_dim + n);
        z.extend_from_slice(x);
        z.extend_from_slice(&state.h);

        let mut pre: [Vec<f64>; 4] = std::array::from_fn(|k| self.b[k].clone());
        for (k, p) in pre.iter_mut().enumerate() {
            self.w[k].mul_vec_add(&z, p);
        }
        let [pf, pi, pg, po] = pre;
        let f: Vec<f64> = pf.into_iter().map(sigmoid).collect();
        let i: Vec<f64> = pi.into_iter().map(sigmoid).collect();
        let g: Vec<f64> = pg.into_iter().map(f64::tanh).collect();
        let o: Vec<f64> = po.into_iter().map(sigmoid).collect();

        let c: Vec<f64> = (0..n).map(|k| f[k] * state.c[k] + i[k] * g[k]).collect();
        let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
        let h: Vec<f64> = (0..n).map(|k| o[k] * tanh_c[k]).collect();

        let cache = StepCache {
            z,
            f,
            i,
            g,
            o,
            c_prev: state.c.clone(),
            tanh_c,
        };
        (LstmState { h, c }, cache)
    }

    /// One step of the cell.
    pub fn step(&self, x: &[f64], state: &LstmState) -> Result<LstmState> {
        self.check(x, state)?;
        Ok(self.step_cached(x, state).0)
    }

    /// Runs the cell over the whole sequence from the zero state, returning the
    /// state after every step.
    pub fn forward(&self, inputs: &[Vec<f64>]) -> Result<Vec<LstmState>> {
        Ok(self.forward_cached(inputs)?.0)
    }

    pub fn forward_cached(&self, inputs: &[Vec<f64>]) -> Result<(Vec<LstmState>, Vec<StepCache>)> {
        if inputs.is_empty() {
            return Err(Error::EmptySequence);
        }
        let mut state = LstmState::zeros(self.hidden_dim);
        let mut states = Vec::with_capacity(inputs.len());
        let mut caches = Vec::with_capacity(inputs.len());
        for x in inputs {
            self.check(x, &state)?;
            let (next, cache) = self.step_cached(x, &state);
            states.push(next.clone());
            caches.push(cache);
            state = next;
        }
        Ok((states, caches))
    }

    /// Backpropagation through time.
    ///
    /// `dh[t]` is the gradient of the loss with respect to `h_t` coming from
    /// outside the recurrence. Parameter gradients are accumulated into
    /// `grad`; the gradients with respect to each input are returned.
    pub fn backward(&self, caches: &[StepCache], dh: &[Vec<f64>], grad: &mut LstmCell) -> Vec<Vec<f64>> {
        let n = self.hidden_dim;
        let mut dx_all = vec![Vec::new(); caches.len()];
        let mut dh_next = vec![0.0; n];
        let mut dc_next = vec![0.0; n];
        let mut dz = vec![0.0; self.input_dim + n];
        let mut dpre: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; n]);

        for t in (0..caches.len()).rev() {
            let s = &caches[t];
            for k in 0..n {
                let dh_k = dh[t][k] + dh_next[k];
                let d_o = dh_k * s.tanh_c[k];
                let dc = dc_next[k] + dh_k * s.o[k] * (1.0 - s.tanh_c[k] * s.tanh_c[k]);
                let df = dc * s.c_prev[k];
                let di = dc * s.g[k];
                let dg = dc * s.i[k];
                dc_next[k] = dc * s.f[k];
                dpre[0][k] = df * s.f[k] * (1.0 - s.f[k]);
                dpre[1][k] = di * s.i[k] * (1.0 - s.i[k]);
                dpre[2][k] = dg * (1.0 - s.g[k] * s.g[k]);
                dpre[3][k] = d_o * s.o[k] * (1.0 - s.o[k]);
            }
            dz.fill(0.0);
            for gate in 0..4 {
                grad.w[gate].add_outer(&dpre[gate], &s.z);
                for (gb, d) in grad.b[gate].iter_mut().zip(&dpre[gate]) {
                    *gb += d;
                }
                self.w[gate].mul_t_vec_add(&dpre[gate], &mut dz);
            }
            dx_all[t] = dz[..self.input_dim].to_vec();
            dh_next.copy_from_slice(&dz[self.input_dim..]);
        }
        dx_all
    }
}

impl Parameters for LstmCell {
    fn tensors(&self) -> Vec<TensorView<'_>> {
        let mut v = Vec::with_capacity(8);
        for (k, gate) in GATE_NAMES.iter().enumerate() {
            v.push(TensorView {
                name: format!("{}.w_{gate}", self.name),
                rows: self.w[k].rows,
                cols: self.w[k].cols,
                data: &self.w[k].data,
            });
        }
        for (k, gate) in GATE_NAMES.iter().enumerate() {
            v.push(TensorView {
                name: format!("{}.b_{gate}", self.name),
                rows: self.hidden_dim,
                cols: 1,
                data: &self.b[k],
            });
        }
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v: Vec<&mut [f64]> = Vec::with_capacity(8);
        for m in self.w.iter_mut() {
            v.push(&mut m.data);
        }
        for b in self.b.iter_mut() {
            v.push(b);
        }
        v
    }
}

/// Free-function form of [`LstmCell::step`].
pub fn lstm_step(cell: &LstmCell, x: &[f64], state: &LstmState) -> Result<LstmState> {
    cell.step(x, state)
}

/// Free-function form of [`LstmCell::forward`].
pub fn lstm_forward(cell: &LstmCell, inputs: &[Vec<f64>]) -> Result<Vec<LstmState>> {
    cell.forward(inputs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_params_zero_state() {
        let cell = LstmCell::zeros("e", 2, 3);
        let s = cell.step(&[0.3, -2.0], &LstmState::zeros(3)).unwrap();
        assert_eq!(s, LstmState::zeros(3));
    }

    #[test]
    fn zero_params_carry_half_the_memory() {
        let cell = LstmCell::zeros("e", 1, 1);
        let s = cell
            .step(&[5.0], &LstmState { h: vec![0.0], c: vec![1.0] })
            .unwrap();
        assert_eq!(s.c, vec![0.5]);
        assert!((s.h[0] - 0.5 * 0.5f64.tanh()).abs() < 1e-15);
        assert!((s.h[0] - 0.231).abs() < 1e-3);
    }

    #[test]
    fn empty_sequence_rejected() {
        let cell = LstmCell::zeros("e", 1, 1);
        assert!(matches!(cell.forward(&[]), Err(Error::EmptySequence)));
    }

    #[test]
    fn dimension_checks() {
        let cell = LstmCell::zeros("e", 2, 2);
        assert!(cell.step(&[1.0], &LstmState::zeros(2)).is_err());
        assert!(cell.step(&[1.0, 1.0], &LstmState::zeros(3)).is_err());
    }
}
