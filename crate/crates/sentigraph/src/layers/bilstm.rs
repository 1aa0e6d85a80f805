//! Bidirectional LSTM encoder with hand-written backpropagation through
//! time. Output row t is the concatenation of the forward and backward
//! hidden states at t; initial states are zero.
//!
//! Gate order inside the stacked 4H weight rows: input, forget, cell
//! candidate, output.

use crate::numerics::{axpy, sigmoid, Matrix};

/// One direction: `w_x` is 4H × d_in, `w_h` is 4H × H, `b` is 4H.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmDirection {
    pub w_x: Matrix,
    pub w_h: Matrix,
    pub b: Vec<f64>,
}

impl LstmDirection {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        Self {
            w_x: Matrix::zeros(4 * hidden, input_dim),
            w_h: Matrix::zeros(4 * hidden, hidden),
            b: vec![0.0; 4 * hidden],
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_h.cols()
    }

    pub fn input_dim(&self) -> usize {
        self.w_x.cols()
    }
}

/// Forward ‖ backward parameter pair; output width is 2H.
#[derive(Clone, Debug, PartialEq)]
pub struct BiLstmParams {
    pub fwd: LstmDirection,
    pub bwd: LstmDirection,
}

impl BiLstmParams {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        Self {
            fwd: LstmDirection::zeros(input_dim, hidden),
            bwd: LstmDirection::zeros(input_dim, hidden),
        }
    }

    pub fn hidden(&self) -> usize {
        self.fwd.hidden()
    }

    pub fn input_dim(&self) -> usize {
        self.fwd.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        2 * self.hidden()
    }
}

#[derive(Clone, Debug)]
struct StepRec {
    pos: usize,
    gate_i: Vec<f64>,
    gate_f: Vec<f64>,
    gate_g: Vec<f64>,
    gate_o: Vec<f64>,
    c_prev: Vec<f64>,
    tanh_c: Vec<f64>,
    h_prev: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct BiLstmCache {
    x: Matrix,
    fwd: Vec<StepRec>,
    bwd: Vec<StepRec>,
}

fn dir_forward(
    x: &Matrix,
    p: &LstmDirection,
    reversed: bool,
    out: &mut Matrix,
    col_off: usize,
) -> Vec<StepRec> {
    let n = x.rows();
    let hd = p.hidden();
    let mut h = vec![0.0; hd];
    let mut c = vec![0.0; hd];
    let mut steps = Vec::with_capacity(n);

    let positions: Box<dyn Iterator<Item = usize>> = if reversed {
        Box::new((0..n).rev())
    } else {
        Box::new(0..n)
    };
    for pos in positions {
        let mut z = p.w_x.matvec(x.row(pos));
        let zr = p.w_h.matvec(&h);
        for k in 0..4 * hd {
            z[k] += zr[k] + p.b[k];
        }
        let gate_i: Vec<f64> = (0..hd).map(|k| sigmoid(z[k])).collect();
        let gate_f: Vec<f64> = (0..hd).map(|k| sigmoid(z[hd + k])).collect();
        let gate_g: Vec<f64> = (0..hd).map(|k| z[2 * hd + k].tanh()).collect();
        let gate_o: Vec<f64> = (0..hd).map(|k| sigmoid(z[3 * hd + k])).collect();

        let c_prev = c.clone();
        let h_prev = h.clone();
        for k in 0..hd {
            c[k] = gate_f[k] * c_prev[k] + gate_i[k] * gate_g[k];
        }
        let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
        for k in 0..hd {
            h[k] = gate_o[k] * tanh_c[k];
        }
        out.row_mut(pos)[col_off..col_off + hd].copy_from_slice(&h);

        steps.push(StepRec {
            pos,
            gate_i,
            gate_f,
            gate_g,
            gate_o,
            c_prev,
            tanh_c,
            h_prev,
        });
    }
    steps
}

/// Runs both directions over `x` (n × d_in) and returns the n × 2H state
/// matrix plus the cache for the backward pass.
pub fn bilstm_forward(x: &Matrix, p: &BiLstmParams) -> (Matrix, BiLstmCache) {
    let n = x.rows();
    let hd = p.hidden();
    let mut out = Matrix::zeros(n, 2 * hd);
    let fwd = dir_forward(x, &p.fwd, false, &mut out, 0);
    let bwd = dir_forward(x, &p.bwd, true, &mut out, hd);
    (
        out,
        BiLstmCache {
            x: x.clone(),
            fwd,
            bwd,
        },
    )
}

fn dir_backward(
    d_out: &Matrix,
    col_off: usize,
    steps: &[StepRec],
    x: &Matrix,
    p: &LstmDirection,
    grads: &mut LstmDirection,
    d_x: &mut Matrix,
) {
    let hd = p.hidden();
    let mut d_h_rec = vec![0.0; hd];
    let mut d_c_rec = vec![0.0; hd];
    for rec in steps.iter().rev() {
        let pos = rec.pos;
        let upstream = &d_out.row(pos)[col_off..col_off + hd];

        let mut d_z = vec![0.0; 4 * hd];
        for k in 0..hd {
            let dh = upstream[k] + d_h_rec[k];
            let d_o = dh * rec.tanh_c[k];
            let dc = dh * rec.gate_o[k] * (1.0 - rec.tanh_c[k] * rec.tanh_c[k]) + d_c_rec[k];
            let d_f = dc * rec.c_prev[k];
            let d_i = dc * rec.gate_g[k];
            let d_g = dc * rec.gate_i[k];

            let (i, f, g, o) = (rec.gate_i[k], rec.gate_f[k], rec.gate_g[k], rec.gate_o[k]);
            d_z[k] = d_i * i * (1.0 - i);
            d_z[hd + k] = d_f * f * (1.0 - f);
            d_z[2 * hd + k] = d_g * (1.0 - g * g);
            d_z[3 * hd + k] = d_o * o * (1.0 - o);
            d_c_rec[k] = dc * f;
        }
        grads.w_x.add_outer(&d_z, x.row(pos));
        grads.w_h.add_outer(&d_z, &rec.h_prev);
        axpy(1.0, &d_z, &mut grads.b);
        axpy(1.0, &p.w_x.tr_matvec(&d_z), d_x.row_mut(pos));
        d_h_rec = p.w_h.tr_matvec(&d_z);
    }
}

/// Returns (parameter gradients, d(loss)/d(x)) given d(loss)/d(output).
pub fn bilstm_backward(
    d_out: &Matrix,
    cache: &BiLstmCache,
    p: &BiLstmParams,
) -> (BiLstmParams, Matrix) {
    let hd = p.hidden();
    let mut grads = BiLstmParams::zeros(p.input_dim(), hd);
    let mut d_x = Matrix::zeros(cache.x.rows(), cache.x.cols());
    dir_backward(d_out, 0, &cache.fwd, &cache.x, &p.fwd, &mut grads.fwd, &mut d_x);
    dir_backward(d_out, hd, &cache.bwd, &cache.x, &p.bwd, &mut grads.bwd, &mut d_x);
    (grads, d_x)
}
