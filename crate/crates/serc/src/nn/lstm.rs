//! LSTM cell, sequence unroll and bidirectional wrapper, with hand-written
//! backpropagation through time.
//!
//! Gate layout is i, f, g, o stacked along the rows of `w`, `u` and `b`:
//! rows `[0,H)` input gate, `[H,2H)` forget gate, `[2H,3H)` candidate,
//! `[3H,4H)` output gate.

use rand::Rng;

use super::gradients::Gradients;
use super::matrix::{concat, Matrix, Scalar};
use crate::error::{Result, SercError};

#[derive(Debug, Clone)]
pub struct LstmParams<F> {
    /// 4H x D input weights.
    pub w: Matrix<F>,
    /// 4H x H recurrent weights.
    pub u: Matrix<F>,
    /// 4H x 1 bias.
    pub b: Matrix<F>,
}

#[derive(Debug, Clone)]
pub struct BiLstmParams<F> {
    pub fwd: LstmParams<F>,
    pub bwd: LstmParams<F>,
}

fn sigmoid<F: Scalar>(z: F) -> F {
    F::one() / (F::one() + (-z).exp())
}

/// Uniform Glorot initialization in ±sqrt(6 / (fan_in + fan_out)).
pub fn glorot_uniform<F: Scalar>(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix<F> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Matrix::from_fn(rows, cols, |_, _| {
        F::from_f64(rng.gen_range(-limit..limit))
    })
}

impl<F: Scalar> LstmParams<F> {
    pub fn zeros(hidden: usize, input: usize) -> Self {
        LstmParams {
            w: Matrix::zeros(4 * hidden, input),
            u: Matrix::zeros(4 * hidden, hidden),
            b: Matrix::zeros(4 * hidden, 1),
        }
    }

    /// Random initialization; forget-gate bias set to 1, other biases 0.
    pub fn init(hidden: usize, input: usize, rng: &mut impl Rng) -> Self {
        let mut b = Matrix::zeros(4 * hidden, 1);
        for r in hidden..2 * hidden {
            b.set(r, 0, F::one());
        }
        LstmParams {
            w: glorot_uniform(4 * hidden, input, rng),
            u: glorot_uniform(4 * hidden, hidden, rng),
            b,
        }
    }

    pub fn hidden(&self) -> usize {
        self.u.cols()
    }

    pub fn input(&self) -> usize {
        self.w.cols()
    }

    pub fn cast<G: Scalar>(&self) -> LstmParams<G> {
        LstmParams {
            w: self.w.cast(),
            u: self.u.cast(),
            b: self.b.cast(),
        }
    }
}

impl<F: Scalar> BiLstmParams<F> {
    pub fn zeros(hidden: usize, input: usize) -> Self {
        BiLstmParams {
            fwd: LstmParams::zeros(hidden, input),
            bwd: LstmParams::zeros(hidden, input),
        }
    }

    pub fn init(hidden: usize, input: usize, rng: &mut impl Rng) -> Self {
        BiLstmParams {
            fwd: LstmParams::init(hidden, input, rng),
            bwd: LstmParams::init(hidden, input, rng),
        }
    }

    pub fn hidden(&self) -> usize {
        self.fwd.hidden()
    }

    pub fn cast<G: Scalar>(&self) -> BiLstmParams<G> {
        BiLstmParams {
            fwd: self.fwd.cast(),
            bwd: self.bwd.cast(),
        }
    }
}

/// One LSTM step: returns (h', c').
pub fn lstm_step<F: Scalar>(
    p: &LstmParams<F>,
    x: &[F],
    h: &[F],
    c: &[F],
) -> Result<(Vec<F>, Vec<F>)> {
    let (h_new, c_new, _) = lstm_step_full(p, x, h, c)?;
    Ok((h_new, c_new))
}

/// Post-activation gate values of one step, for the backward pass.
#[derive(Debug, Clone)]
struct GateValues<F> {
    i: Vec<F>,
    f: Vec<F>,
    g: Vec<F>,
    o: Vec<F>,
}

fn lstm_step_full<F: Scalar>(
    p: &LstmParams<F>,
    x: &[F],
    h: &[F],
    c: &[F],
) -> Result<(Vec<F>, Vec<F>, GateValues<F>)> {
    let hd = p.hidden();
    if x.len() != p.input() || h.len() != hd || c.len() != hd {
        return Err(SercError::Dimension(format!(
            "lstm_step: x={} h={} c={} vs D={} H={}",
            x.len(),
            h.len(),
            c.len(),
            p.input(),
            hd
        )));
    }
    let mut z = p.w.matvec(x);
    let uz = p.u.matvec(h);
    for (zi, ui) in z.iter_mut().zip(uz) {
        *zi += ui;
    }
    for r in 0..4 * hd {
        z[r] += p.b.get(r, 0);
    }
    let mut gates = GateValues {
        i: vec![F::zero(); hd],
        f: vec![F::zero(); hd],
        g: vec![F::zero(); hd],
        o: vec![F::zero(); hd],
    };
    let mut c_new = vec![F::zero(); hd];
    let mut h_new = vec![F::zero(); hd];
    for k in 0..hd {
        gates.i[k] = sigmoid(z[k]);
        gates.f[k] = sigmoid(z[hd + k]);
        gates.g[k] = z[2 * hd + k].tanh();
        gates.o[k] = sigmoid(z[3 * hd + k]);
        c_new[k] = gates.f[k] * c[k] + gates.i[k] * gates.g[k];
        h_new[k] = gates.o[k] * c_new[k].tanh();
    }
    Ok((h_new, c_new, gates))
}

/// Forward caches of one direction over a sequence, stored in traversal order.
#[derive(Debug, Clone)]
pub struct LstmCache<F> {
    /// Inputs in traversal order, T x D.
    xs: Matrix<F>,
    gates: Vec<GateValues<F>>,
    /// Cell states in traversal order, T x H.
    cs: Matrix<F>,
    /// Hidden states in traversal order, T x H.
    hs: Matrix<F>,
}

impl<F: Scalar> LstmCache<F> {
    pub fn hidden_states(&self) -> &Matrix<F> {
        &self.hs
    }
}

/// Run one direction over `seq`, visiting rows in reverse when `rev` is set.
/// Cache rows are in traversal order.
fn lstm_forward<F: Scalar>(p: &LstmParams<F>, seq: &Matrix<F>, rev: bool) -> Result<LstmCache<F>> {
    let t_len = seq.rows();
    let hd = p.hidden();
    let mut xs = Matrix::zeros(t_len, seq.cols());
    let mut cs = Matrix::zeros(t_len, hd);
    let mut hs = Matrix::zeros(t_len, hd);
    let mut gates = Vec::with_capacity(t_len);
    let mut h = vec![F::zero(); hd];
    let mut c = vec![F::zero(); hd];
    for step in 0..t_len {
        let src = if rev { t_len - 1 - step } else { step };
        let x = seq.row(src);
        let (h_new, c_new, gv) = lstm_step_full(p, x, &h, &c)?;
        xs.row_mut(step).copy_from_slice(x);
        hs.row_mut(step).copy_from_slice(&h_new);
        cs.row_mut(step).copy_from_slice(&c_new);
        gates.push(gv);
        h = h_new;
        c = c_new;
    }
    Ok(LstmCache { xs, gates, cs, hs })
}

/// BPTT for one direction. `d_hs` is in traversal order; the returned input
/// gradients are in traversal order too.
fn lstm_backward<F: Scalar>(
    p: &LstmParams<F>,
    cache: &LstmCache<F>,
    d_hs: &Matrix<F>,
    grads: &mut Gradients<F>,
    prefix: &str,
) -> Matrix<F> {
    let t_len = cache.hs.rows();
    let hd = p.hidden();
    let d_in = p.input();
    let mut dw = Matrix::zeros(4 * hd, d_in);
    let mut du = Matrix::zeros(4 * hd, hd);
    let mut db = Matrix::zeros(4 * hd, 1);
    let mut d_xs = Matrix::zeros(t_len, d_in);

    let mut dh_next = vec![F::zero(); hd];
    let mut dc_next = vec![F::zero(); hd];
    for step in (0..t_len).rev() {
        let gv = &cache.gates[step];
        let c_t = cache.cs.row(step);
        let c_prev: Vec<F> = if step == 0 {
            vec![F::zero(); hd]
        } else {
            cache.cs.row(step - 1).to_vec()
        };
        let h_prev: Vec<F> = if step == 0 {
            vec![F::zero(); hd]
        } else {
            cache.hs.row(step - 1).to_vec()
        };

        let mut dz = vec![F::zero(); 4 * hd];
        for k in 0..hd {
            let dh = d_hs.get(step, k) + dh_next[k];
            let tanh_c = c_t[k].tanh();
            let d_o = dh * tanh_c;
            let mut dc = dh * gv.o[k] * (F::one() - tanh_c * tanh_c) + dc_next[k];
            let d_f = dc * c_prev[k];
            let d_i = dc * gv.g[k];
            let d_g = dc * gv.i[k];
            dz[k] = d_i * gv.i[k] * (F::one() - gv.i[k]);
            dz[hd + k] = d_f * gv.f[k] * (F::one() - gv.f[k]);
            dz[2 * hd + k] = d_g * (F::one() - gv.g[k] * gv.g[k]);
            dz[3 * hd + k] = d_o * gv.o[k] * (F::one() - gv.o[k]);
            dc *= gv.f[k];
            dc_next[k] = dc;
        }

        dw.add_outer(&dz, cache.xs.row(step));
        du.add_outer(&dz, &h_prev);
        for r in 0..4 * hd {
            let v = db.get(r, 0) + dz[r];
            db.set(r, 0, v);
        }
        let dx = p.w.matvec_t(&dz);
        d_xs.row_mut(step).copy_from_slice(&dx);
        dh_next = p.u.matvec_t(&dz);
    }

    grads.accumulate(&format!("{prefix}.w"), dw);
    grads.accumulate(&format!("{prefix}.u"), du);
    grads.accumulate(&format!("{prefix}.b"), db);
    d_xs
}

#[derive(Debug, Clone)]
pub struct BiLstmCache<F> {
    fwd: LstmCache<F>,
    bwd: LstmCache<F>,
}

/// Run both directions over `seq` (T x D) and emit the T x 2H output whose
/// row t is [fwd_h_t || bwd_h_t], each direction starting from zero state.
pub fn bilstm_forward<F: Scalar>(
    p: &BiLstmParams<F>,
    seq: &Matrix<F>,
) -> Result<(Matrix<F>, BiLstmCache<F>)> {
    if seq.rows() == 0 {
        return Err(SercError::Dimension("bilstm over empty sequence".into()));
    }
    let fwd = lstm_forward(&p.fwd, seq, false)?;
    let bwd = lstm_forward(&p.bwd, seq, true)?;
    let t_len = seq.rows();
    let hd = p.hidden();
    let mut out = Matrix::zeros(t_len, 2 * hd);
    for t in 0..t_len {
        let row = out.row_mut(t);
        row[..hd].copy_from_slice(fwd.hs.row(t));
        row[hd..].copy_from_slice(bwd.hs.row(t_len - 1 - t));
    }
    Ok((out, BiLstmCache { fwd, bwd }))
}

/// Backward through both directions; `d_out` is T x 2H in original time
/// order. Returns the gradient w.r.t. the input sequence (T x D).
pub fn bilstm_backward<F: Scalar>(
    p: &BiLstmParams<F>,
    cache: &BiLstmCache<F>,
    d_out: &Matrix<F>,
    grads: &mut Gradients<F>,
    prefix: &str,
) -> Matrix<F> {
    let t_len = d_out.rows();
    let hd = p.hidden();
    let mut d_fwd = Matrix::zeros(t_len, hd);
    let mut d_bwd = Matrix::zeros(t_len, hd);
    for t in 0..t_len {
        let row = d_out.row(t);
        d_fwd.row_mut(t).copy_from_slice(&row[..hd]);
        // bwd cache row `step` corresponds to original time t_len-1-step.
        d_bwd.row_mut(t_len - 1 - t).copy_from_slice(&row[hd..]);
    }
    let dx_fwd = lstm_backward(&p.fwd, &cache.fwd, &d_fwd, grads, &format!("{prefix}.fwd"));
    let dx_bwd = lstm_backward(&p.bwd, &cache.bwd, &d_bwd, grads, &format!("{prefix}.bwd"));
    let mut d_seq = dx_fwd;
    for t in 0..t_len {
        let rev = dx_bwd.row(t_len - 1 - t).to_vec();
        let row = d_seq.row_mut(t);
        for (a, b) in row.iter_mut().zip(rev) {
            *a += b;
        }
    }
    d_seq
}

/// Sequence summary: last forward hidden state concatenated with the
/// backward hidden state at time 0 (the backward direction's final state).
pub fn bilstm_summary<F: Scalar>(out: &Matrix<F>, hidden: usize) -> Vec<F> {
    let t_len = out.rows();
    concat(&out.row(t_len - 1)[..hidden], &out.row(0)[hidden..])
}
