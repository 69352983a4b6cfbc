use rand::Rng;

use super::gemm::{gemm, View};
use super::Network;
use crate::error::{Error, Result};

/// Stacked LSTM regressor with a linear head on the last hidden state.
///
/// Each cell owns one weight matrix `4h × (in + h)` acting on `[x; h_prev]`
/// with gate blocks in the order input, forget, candidate, output, followed
/// by a `4h` bias. The head (`1 × h_last` plus bias) comes last. A sample is
/// a flat `window × input` sequence, oldest element first.
#[derive(Clone, Debug, PartialEq)]
pub struct Lstm {
    input: usize,
    hidden: Vec<usize>,
    window: usize,
    params: Vec<f64>,
}

pub const LSTM_HIDDEN: [usize; 3] = [64, 32, 32];
pub const WINDOW: usize = 4;

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Cached forward quantities of one cell for all time steps.
struct CellTape {
    /// `[x; h_prev]` rows per step, `batch × (in+h)`.
    xh: Vec<Vec<f64>>,
    /// Activated gates per step, `batch × 4h`.
    gates: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
    tanh_c: Vec<Vec<f64>>,
    h: Vec<Vec<f64>>,
}

impl Lstm {
    fn count(input: usize, hidden: &[usize]) -> usize {
        let mut n = 0;
        let mut i = input;
        for &h in hidden {
            n += 4 * h * (i + h) + 4 * h;
            i = h;
        }
        n + i + 1
    }

    pub fn zeros(input: usize, hidden: &[usize], window: usize) -> Result<Self> {
        if input == 0 || hidden.is_empty() || hidden.contains(&0) || window == 0 {
            return Err(Error::invalid(format!(
                "lstm input {input}, hidden {hidden:?}, window {window}"
            )));
        }
        Ok(Lstm {
            input,
            hidden: hidden.to_vec(),
            window,
            params: vec![0.0; Self::count(input, hidden)],
        })
    }

    /// Uniform ±√(6/(fan_in+fan_out)) weights, zero biases.
    pub fn init<R: Rng>(
        input: usize,
        hidden: &[usize],
        window: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let mut m = Self::zeros(input, hidden, window)?;
        let mut off = 0;
        let mut i = input;
        let mut blocks: Vec<(usize, usize, usize)> = Vec::new();
        for &h in hidden {
            blocks.push((off, 4 * h, i + h));
            off += 4 * h * (i + h) + 4 * h;
            i = h;
        }
        blocks.push((off, 1, i));
        for (off, rows, cols) in blocks {
            let a = (6.0 / (rows + cols) as f64).sqrt();
            for p in &mut m.params[off..off + rows * cols] {
                *p = rng.gen_range(-a..=a);
            }
        }
        Ok(m)
    }

    pub fn from_parts(
        input: usize,
        hidden: &[usize],
        window: usize,
        params: Vec<f64>,
    ) -> Result<Self> {
        let mut m = Self::zeros(input, hidden, window)?;
        if params.len() != m.params.len() {
            return Err(Error::invalid(format!(
                "lstm needs {} parameters, got {}",
                m.params.len(),
                params.len()
            )));
        }
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("lstm parameters must be finite"));
        }
        m.params = params;
        Ok(m)
    }

    pub fn input(&self) -> usize {
        self.input
    }

    pub fn hidden(&self) -> &[usize] {
        &self.hidden
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Offset of cell `l`'s weight block, or of the head for `l == layers`.
    fn offset(&self, l: usize) -> usize {
        let mut off = 0;
        let mut i = self.input;
        for &h in &self.hidden[..l] {
            off += 4 * h * (i + h) + 4 * h;
            i = h;
        }
        off
    }

    fn cell_input(&self, l: usize) -> usize {
        if l == 0 {
            self.input
        } else {
            self.hidden[l - 1]
        }
    }

    /// Weight matrix and bias of cell `l`.
    pub fn cell_params(&self, l: usize) -> (&[f64], &[f64]) {
        let (off, h, i) = (self.offset(l), self.hidden[l], self.cell_input(l));
        let w = 4 * h * (i + h);
        (
            &self.params[off..off + w],
            &self.params[off + w..off + w + 4 * h],
        )
    }

    pub fn cell_params_mut(&mut self, l: usize) -> (&mut [f64], &mut [f64]) {
        let (off, h, i) = (self.offset(l), self.hidden[l], self.cell_input(l));
        let w = 4 * h * (i + h);
        let (a, b) = self.params[off..].split_at_mut(w);
        (a, &mut b[..4 * h])
    }

    pub fn head_mut(&mut self) -> (&mut [f64], &mut f64) {
        let off = self.offset(self.hidden.len());
        let last = *self.hidden.last().unwrap();
        let (w, b) = self.params[off..].split_at_mut(last);
        (w, &mut b[0])
    }

    fn check_input(&self, x: &[f64]) -> Result<usize> {
        let w = self.input * self.window;
        if x.is_empty() || x.len() % w != 0 {
            return Err(Error::invalid(format!(
                "lstm input of length {} for window {} × {}",
                x.len(),
                self.window,
                self.input
            )));
        }
        Ok(x.len() / w)
    }

    fn forward_tape(&self, x: &[f64], batch: usize) -> (Vec<CellTape>, Vec<f64>) {
        let s_len = self.window;
        // step-major inputs of the first cell
        let mut inputs: Vec<Vec<f64>> = (0..s_len)
            .map(|s| {
                (0..batch)
                    .flat_map(|b| {
                        let at = (b * s_len + s) * self.input;
                        x[at..at + self.input].iter().copied()
                    })
                    .collect()
            })
            .collect();
        let mut tapes = Vec::with_capacity(self.hidden.len());
        for (l, &h) in self.hidden.iter().enumerate() {
            let i = self.cell_input(l);
            let (w, bias) = self.cell_params(l);
            let mut tape = CellTape {
                xh: Vec::with_capacity(s_len),
                gates: Vec::with_capacity(s_len),
                c: Vec::with_capacity(s_len),
                tanh_c: Vec::with_capacity(s_len),
                h: Vec::with_capacity(s_len),
            };
            let zero = vec![0.0; batch * h];
            for (s, xs) in inputs.iter().enumerate() {
                let h_prev = if s == 0 { &zero } else { &tape.h[s - 1] };
                let c_prev = if s == 0 { &zero } else { &tape.c[s - 1] };
                let mut xh = vec![0.0; batch * (i + h)];
                for b in 0..batch {
                    xh[b * (i + h)..b * (i + h) + i].copy_from_slice(&xs[b * i..(b + 1) * i]);
                    xh[b * (i + h) + i..(b + 1) * (i + h)]
                        .copy_from_slice(&h_prev[b * h..(b + 1) * h]);
                }
                let mut z: Vec<f64> = (0..batch).flat_map(|_| bias.iter().copied()).collect();
                gemm(
                    batch,
                    i + h,
                    4 * h,
                    View::rows(&xh, i + h),
                    View::trans(w, i + h),
                    1.0,
                    &mut z,
                );
                let mut c = vec![0.0; batch * h];
                let mut tc = vec![0.0; batch * h];
                let mut hn = vec![0.0; batch * h];
                for b in 0..batch {
                    let g = &mut z[b * 4 * h..(b + 1) * 4 * h];
                    for k in 0..h {
                        g[k] = sigmoid(g[k]);
                        g[h + k] = sigmoid(g[h + k]);
                        g[2 * h + k] = g[2 * h + k].tanh();
                        g[3 * h + k] = sigmoid(g[3 * h + k]);
                        let cv = g[h + k] * c_prev[b * h + k] + g[k] * g[2 * h + k];
                        c[b * h + k] = cv;
                        tc[b * h + k] = cv.tanh();
                        hn[b * h + k] = g[3 * h + k] * tc[b * h + k];
                    }
                }
                tape.xh.push(xh);
                tape.gates.push(z);
                tape.c.push(c);
                tape.tanh_c.push(tc);
                tape.h.push(hn);
            }
            inputs = tape.h.clone();
            tapes.push(tape);
        }
        let last = *self.hidden.last().unwrap();
        let off = self.offset(self.hidden.len());
        let head_w = &self.params[off..off + last];
        let head_b = self.params[off + last];
        let top = &tapes.last().unwrap().h[s_len - 1];
        let out = top
            .chunks_exact(last)
            .map(|hrow| head_b + hrow.iter().zip(head_w).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        (tapes, out)
    }

    /// Output for one sequence (`window × input`).
    pub fn forward(&self, seq: &[f64]) -> Result<f64> {
        if seq.len() != self.input * self.window {
            return Err(Error::invalid(format!(
                "lstm sequence of length {} for window {} × {}",
                seq.len(),
                self.window,
                self.input
            )));
        }
        Ok(self.forward_tape(seq, 1).1[0])
    }
}

impl Network for Lstm {
    fn input_width(&self) -> usize {
        self.input * self.window
    }

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        let batch = self.check_input(x)?;
        Ok(self.forward_tape(x, batch).1)
    }

    fn loss_grad(&self, x: &[f64], y: &[f64], grad: &mut [f64]) -> Result<f64> {
        let batch = self.check_input(x)?;
        if y.len() != batch || grad.len() != self.params.len() {
            return Err(Error::invalid("lstm gradient: shape mismatch"));
        }
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(Error::invalid("lstm gradient: non-finite input"));
        }
        let s_len = self.window;
        let (tapes, out) = self.forward_tape(x, batch);
        let scale = 1.0 / batch as f64;
        let mut loss = 0.0;
        let dy: Vec<f64> = out
            .iter()
            .zip(y)
            .map(|(o, t)| {
                let e = o - t;
                loss += e * e;
                2.0 * e * scale
            })
            .collect();
        grad.iter_mut().for_each(|g| *g = 0.0);

        let layers = self.hidden.len();
        let last = self.hidden[layers - 1];
        let head_off = self.offset(layers);
        let top_h = &tapes[layers - 1].h[s_len - 1];
        for (b, d) in dy.iter().enumerate() {
            for k in 0..last {
                grad[head_off + k] += d * top_h[b * last + k];
            }
            grad[head_off + last] += d;
        }
        // gradient w.r.t. each step's hidden output of the current cell
        let mut dh_in: Vec<Vec<f64>> = vec![vec![0.0; batch * last]; s_len];
        {
            let head_w = &self.params[head_off..head_off + last];
            for (b, d) in dy.iter().enumerate() {
                for k in 0..last {
                    dh_in[s_len - 1][b * last + k] = d * head_w[k];
                }
            }
        }

        for l in (0..layers).rev() {
            let h = self.hidden[l];
            let i = self.cell_input(l);
            let tape = &tapes[l];
            let (w, _) = self.cell_params(l);
            let off = self.offset(l);
            let wlen = 4 * h * (i + h);
            let mut dx_out: Vec<Vec<f64>> = vec![vec![0.0; batch * i]; s_len];
            let mut dh_next = vec![0.0; batch * h];
            let mut dc_next = vec![0.0; batch * h];
            let mut dz = vec![0.0; batch * 4 * h];
            let mut dxh = vec![0.0; batch * (i + h)];
            for s in (0..s_len).rev() {
                let g = &tape.gates[s];
                for b in 0..batch {
                    for k in 0..h {
                        let at = b * h + k;
                        let gi = g[b * 4 * h + k];
                        let gf = g[b * 4 * h + h + k];
                        let gg = g[b * 4 * h + 2 * h + k];
                        let go = g[b * 4 * h + 3 * h + k];
                        let tc = tape.tanh_c[s][at];
                        let c_prev = if s == 0 { 0.0 } else { tape.c[s - 1][at] };
                        let dh = dh_in[s][at] + dh_next[at];
                        let dc = dc_next[at] + dh * go * (1.0 - tc * tc);
                        dz[b * 4 * h + k] = dc * gg * gi * (1.0 - gi);
                        dz[b * 4 * h + h + k] = dc * c_prev * gf * (1.0 - gf);
                        dz[b * 4 * h + 2 * h + k] = dc * gi * (1.0 - gg * gg);
                        dz[b * 4 * h + 3 * h + k] = dh * tc * go * (1.0 - go);
                        dc_next[at] = dc * gf;
                    }
                }
                // dW += dzᵀ·xh, db += Σ dz, dxh = dz·W
                gemm(
                    4 * h,
                    batch,
                    i + h,
                    View::trans(&dz, 4 * h),
                    View::rows(&tape.xh[s], i + h),
                    1.0,
                    &mut grad[off..off + wlen],
                );
                for row in dz.chunks_exact(4 * h) {
                    grad[off + wlen..off + wlen + 4 * h]
                        .iter_mut()
                        .zip(row)
                        .for_each(|(acc, d)| *acc += d);
                }
                gemm(
                    batch,
                    4 * h,
                    i + h,
                    View::rows(&dz, 4 * h),
                    View::rows(w, i + h),
                    0.0,
                    &mut dxh,
                );
                for b in 0..batch {
                    dx_out[s][b * i..(b + 1) * i]
                        .copy_from_slice(&dxh[b * (i + h)..b * (i + h) + i]);
                    dh_next[b * h..(b + 1) * h]
                        .copy_from_slice(&dxh[b * (i + h) + i..(b + 1) * (i + h)]);
                }
            }
            dh_in = dx_out;
        }
        Ok(loss * scale)
    }
}
