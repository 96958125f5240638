//! LSTM cell and bi-directional layer, forward and backward.
//!
//! Gate rows are stacked in the order input, forget, cell candidate, output:
//! rows `[0, h)` feed the input gate, `[h, 2h)` the forget gate, `[2h, 3h)` the
//! candidate and `[3h, 4h)` the output gate.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;

use super::params::{BlockKind, BlockMut, BlockRef};
use super::{sigmoid, uniform_matrix};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct LstmCellParams {
    /// `4h x d`
    pub w_input: Array2<f64>,
    /// `4h x h`
    pub w_hidden: Array2<f64>,
    /// `4h`
    pub bias: Array1<f64>,
}

impl LstmCellParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        LstmCellParams {
            w_input: Array2::zeros((4 * hidden_dim, input_dim)),
            w_hidden: Array2::zeros((4 * hidden_dim, hidden_dim)),
            bias: Array1::zeros(4 * hidden_dim),
        }
    }

    /// Uniform weights, zero biases except a forget-gate bias of 1.
    pub fn init(input_dim: usize, hidden_dim: usize, rng: &mut impl Rng) -> Self {
        let mut bias = Array1::zeros(4 * hidden_dim);
        bias.slice_mut(s![hidden_dim..2 * hidden_dim]).fill(1.0);
        LstmCellParams {
            w_input: uniform_matrix(4 * hidden_dim, input_dim, rng),
            w_hidden: uniform_matrix(4 * hidden_dim, hidden_dim, rng),
            bias,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w_input.ncols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_hidden.ncols()
    }

    pub(crate) fn blocks<'a>(&'a self, prefix: &str, out: &mut Vec<BlockRef<'a>>) {
        out.push(BlockRef::matrix(format!("{prefix}.w_input"), BlockKind::Weight, &self.w_input));
        out.push(BlockRef::matrix(format!("{prefix}.w_hidden"), BlockKind::Weight, &self.w_hidden));
        out.push(BlockRef::vector(format!("{prefix}.bias"), BlockKind::Bias, &self.bias));
    }

    pub(crate) fn blocks_mut<'a>(&'a mut self, prefix: &str, out: &mut Vec<BlockMut<'a>>) {
        out.push(BlockMut::matrix(format!("{prefix}.w_input"), BlockKind::Weight, &mut self.w_input));
        out.push(BlockMut::matrix(format!("{prefix}.w_hidden"), BlockKind::Weight, &mut self.w_hidden));
        out.push(BlockMut::vector(format!("{prefix}.bias"), BlockKind::Bias, &mut self.bias));
    }
}

/// Applies the gate nonlinearities in place to a `4h` pre-activation.
fn activate(z: &mut [f64], h: usize) {
    for (k, v) in z.iter_mut().enumerate() {
        *v = if (2 * h..3 * h).contains(&k) { v.tanh() } else { sigmoid(*v) };
    }
}

/// One LSTM update: returns the new hidden and cell state.
pub fn lstm_step(
    x: ArrayView1<f64>,
    h_prev: ArrayView1<f64>,
    c_prev: ArrayView1<f64>,
    params: &LstmCellParams,
) -> Result<(Array1<f64>, Array1<f64>)> {
    let h = params.hidden_dim();
    if x.len() != params.input_dim() || h_prev.len() != h || c_prev.len() != h {
        return Err(Error::DimensionMismatch(format!(
            "lstm_step: x {} h {} c {} for cell ({}, {h})",
            x.len(),
            h_prev.len(),
            c_prev.len(),
            params.input_dim()
        )));
    }
    let mut z = params.w_input.dot(&x) + params.w_hidden.dot(&h_prev) + &params.bias;
    activate(z.as_slice_mut().unwrap(), h);
    let (i, f, g, o) = (z.slice(s![..h]), z.slice(s![h..2 * h]), z.slice(s![2 * h..3 * h]), z.slice(s![3 * h..]));
    let c = &f * &c_prev + &i * &g;
    let hidden = &o * &c.mapv(f64::tanh);
    Ok((hidden, c))
}

/// Everything one direction of a layer needs for backpropagation, in the
/// order the sequence was processed.
#[derive(Clone, Debug)]
pub struct LstmTrace {
    pub inputs: Array2<f64>,
    /// Post-activation gates, `T x 4h`.
    pub gates: Array2<f64>,
    pub cells: Array2<f64>,
    pub hidden: Array2<f64>,
}

pub(crate) fn run_sequence(params: &LstmCellParams, inputs: Array2<f64>) -> LstmTrace {
    let (t_len, h) = (inputs.nrows(), params.hidden_dim());
    let mut gates = inputs.dot(&params.w_input.t()).as_standard_layout().into_owned();
    gates += &params.bias;
    let mut cells = Array2::zeros((t_len, h));
    let mut hidden = Array2::zeros((t_len, h));
    let mut h_prev = Array1::<f64>::zeros(h);
    let mut c_prev = Array1::<f64>::zeros(h);
    for t in 0..t_len {
        let mut z = gates.row_mut(t);
        z += &params.w_hidden.dot(&h_prev);
        activate(z.as_slice_mut().unwrap(), h);
        let z = gates.row(t);
        let mut c = cells.row_mut(t);
        let mut hid = hidden.row_mut(t);
        for k in 0..h {
            let ck: f64 = z[h + k] * c_prev[k] + z[k] * z[2 * h + k];
            c[k] = ck;
            hid[k] = z[3 * h + k] * ck.tanh();
        }
        h_prev.assign(&hid);
        c_prev.assign(&c);
    }
    LstmTrace {
        inputs,
        gates,
        cells,
        hidden,
    }
}

/// Backpropagates `d_hidden` (gradient of the loss w.r.t. every hidden state,
/// processing order) through the recurrence. Accumulates parameter gradients
/// into `grads` and returns the gradient w.r.t. the inputs.
pub(crate) fn backprop_sequence(
    params: &LstmCellParams,
    trace: &LstmTrace,
    d_hidden: ArrayView2<f64>,
    grads: &mut LstmCellParams,
) -> Array2<f64> {
    let (t_len, h) = (trace.hidden.nrows(), params.hidden_dim());
    let mut dz = Array2::zeros((t_len, 4 * h));
    let mut dh_next = Array1::<f64>::zeros(h);
    let mut dc_next = Array1::<f64>::zeros(h);
    for t in (0..t_len).rev() {
        let z = trace.gates.row(t);
        let c = trace.cells.row(t);
        let mut dzt = dz.row_mut(t);
        for k in 0..h {
            let (i, f, g, o) = (z[k], z[h + k], z[2 * h + k], z[3 * h + k]);
            let c_prev = if t > 0 { trace.cells[[t - 1, k]] } else { 0.0 };
            let tc = c[k].tanh();
            let dh = d_hidden[[t, k]] + dh_next[k];
            let dc = dh * o * (1.0 - tc * tc) + dc_next[k];
            dzt[k] = dc * g * i * (1.0 - i);
            dzt[h + k] = dc * c_prev * f * (1.0 - f);
            dzt[2 * h + k] = dc * i * (1.0 - g * g);
            dzt[3 * h + k] = dh * tc * o * (1.0 - o);
            dc_next[k] = dc * f;
        }
        dh_next = params.w_hidden.t().dot(&dzt);
    }
    // hidden state feeding step t is row t-1 (zero for t = 0)
    let mut h_prev = Array2::zeros((t_len, h));
    if t_len > 1 {
        h_prev.slice_mut(s![1.., ..]).assign(&trace.hidden.slice(s![..t_len - 1, ..]));
    }
    general_mat_mul(1.0, &dz.t(), &trace.inputs, 1.0, &mut grads.w_input);
    general_mat_mul(1.0, &dz.t(), &h_prev, 1.0, &mut grads.w_hidden);
    grads.bias += &dz.sum_axis(Axis(0));
    dz.dot(&params.w_input)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BiLstmLayer {
    pub forward: LstmCellParams,
    pub backward: LstmCellParams,
}

impl BiLstmLayer {
    pub fn init(input_dim: usize, hidden_dim: usize, rng: &mut impl Rng) -> Self {
        let forward = LstmCellParams::init(input_dim, hidden_dim, rng);
        let backward = LstmCellParams::init(input_dim, hidden_dim, rng);
        BiLstmLayer { forward, backward }
    }

    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        BiLstmLayer {
            forward: LstmCellParams::zeros(input_dim, hidden_dim),
            backward: LstmCellParams::zeros(input_dim, hidden_dim),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.forward.input_dim()
    }

    pub fn hidden_dim(&self) -> usize {
        self.forward.hidden_dim()
    }

    pub(crate) fn blocks<'a>(&'a self, prefix: &str, out: &mut Vec<BlockRef<'a>>) {
        self.forward.blocks(&format!("{prefix}.fwd"), out);
        self.backward.blocks(&format!("{prefix}.bwd"), out);
    }

    pub(crate) fn blocks_mut<'a>(&'a mut self, prefix: &str, out: &mut Vec<BlockMut<'a>>) {
        self.forward.blocks_mut(&format!("{prefix}.fwd"), out);
        self.backward.blocks_mut(&format!("{prefix}.bwd"), out);
    }
}

/// Both directions of a layer. The backward trace is stored in reversed time.
#[derive(Clone, Debug)]
pub struct BiLstmTrace {
    pub fwd: LstmTrace,
    pub bwd: LstmTrace,
}

impl BiLstmTrace {
    /// Left-to-right states, row `t` has consumed tokens `0..=t`.
    pub fn forward_states(&self) -> ArrayView2<'_, f64> {
        self.fwd.hidden.view()
    }

    /// Right-to-left states in original token order: row `t` has consumed
    /// tokens `t..T`.
    pub fn backward_states(&self) -> ArrayView2<'_, f64> {
        self.bwd.hidden.slice(s![..;-1, ..])
    }

    /// `T x 2h` concatenation of forward and backward states.
    pub fn concat(&self) -> Array2<f64> {
        ndarray::concatenate(Axis(1), &[self.forward_states(), self.backward_states()])
            .unwrap()
            .as_standard_layout()
            .into_owned()
    }
}

pub fn bilstm_forward(inputs: ArrayView2<f64>, layer: &BiLstmLayer) -> Result<BiLstmTrace> {
    if inputs.nrows() == 0 {
        return Err(Error::EmptyInput);
    }
    if inputs.ncols() != layer.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "bi-LSTM expects inputs of width {}, got {}",
            layer.input_dim(),
            inputs.ncols()
        )));
    }
    let fwd = run_sequence(&layer.forward, inputs.to_owned());
    let bwd = run_sequence(&layer.backward, inputs.slice(s![..;-1, ..]).to_owned());
    Ok(BiLstmTrace { fwd, bwd })
}

/// `d_forward` and `d_backward` are gradients w.r.t. the forward and backward
/// states in original token order. Returns the gradient w.r.t. the inputs.
pub fn bilstm_backward(
    layer: &BiLstmLayer,
    trace: &BiLstmTrace,
    d_forward: ArrayView2<f64>,
    d_backward: ArrayView2<f64>,
    grads: &mut BiLstmLayer,
) -> Array2<f64> {
    let mut dx = backprop_sequence(&layer.forward, &trace.fwd, d_forward, &mut grads.forward);
    let dx_rev = backprop_sequence(&layer.backward, &trace.bwd, d_backward.slice(s![..;-1, ..]), &mut grads.backward);
    dx += &dx_rev.slice(s![..;-1, ..]);
    dx
}
