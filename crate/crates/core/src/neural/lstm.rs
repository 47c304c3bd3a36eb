//! Sequence autoencoder built from two single-layer LSTMs.
//!
//! The encoder reads a scalar sequence; its final hidden state is mapped
//! linearly to the bottleneck. The decoder receives the bottleneck vector
//! at every step and emits, through a tanh head, the input sequence in
//! reverse order.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One LSTM layer. Gate order in the `4H` dimension: input, forget, cell,
/// output.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmCell {
    pub w_input: Array2<f64>,
    pub w_hidden: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmGrad {
    pub w_input: Array2<f64>,
    pub w_hidden: Array2<f64>,
    pub bias: Array1<f64>,
}

struct StepCache {
    input: Array2<f64>,
    h_prev: Array2<f64>,
    c_prev: Array2<f64>,
    /// Post-nonlinearity gates `[i, f, g, o]`.
    gates: Array2<f64>,
    c: Array2<f64>,
}

impl LstmCell {
    /// Xavier-uniform weights; forget-gate bias starts at 1.
    pub fn init(input_dim: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        let lim_x = (6.0 / (input_dim + hidden) as f64).sqrt();
        let lim_h = (6.0 / (2 * hidden) as f64).sqrt();
        let w_input = Array2::from_shape_simple_fn((input_dim, 4 * hidden), || rng.gen_range(-lim_x..=lim_x));
        let w_hidden = Array2::from_shape_simple_fn((hidden, 4 * hidden), || rng.gen_range(-lim_h..=lim_h));
        let mut bias = Array1::zeros(4 * hidden);
        bias.slice_mut(s![hidden..2 * hidden]).fill(1.0);
        Self {
            w_input,
            w_hidden,
            bias,
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_hidden.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.w_input.nrows()
    }

    fn step(&self, x: &Array2<f64>, h: &Array2<f64>, c: &Array2<f64>) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
        let hd = self.hidden();
        let mut gates = x.dot(&self.w_input) + h.dot(&self.w_hidden);
        gates += &self.bias;
        gates.slice_mut(s![.., 0..2 * hd]).mapv_inplace(sigmoid);
        gates.slice_mut(s![.., 2 * hd..3 * hd]).mapv_inplace(f64::tanh);
        gates.slice_mut(s![.., 3 * hd..]).mapv_inplace(sigmoid);
        let i = gates.slice(s![.., 0..hd]);
        let f = gates.slice(s![.., hd..2 * hd]);
        let g = gates.slice(s![.., 2 * hd..3 * hd]);
        let o = gates.slice(s![.., 3 * hd..]);
        let c_new = &f * c + &i * &g;
        let h_new = &o * &c_new.mapv(f64::tanh);
        (gates, c_new, h_new)
    }

    /// Backward through one step. Returns `(dx, dh_prev, dc_prev)` and
    /// accumulates parameter gradients into `grad`.
    fn step_backward(
        &self,
        cache: &StepCache,
        dh: &Array2<f64>,
        dc_next: &Array2<f64>,
        grad: &mut LstmGrad,
    ) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
        let hd = self.hidden();
        let gates = &cache.gates;
        let i = gates.slice(s![.., 0..hd]);
        let f = gates.slice(s![.., hd..2 * hd]);
        let g = gates.slice(s![.., 2 * hd..3 * hd]);
        let o = gates.slice(s![.., 3 * hd..]);
        let tanh_c = cache.c.mapv(f64::tanh);
        let dc = dc_next + &(dh * &o * &tanh_c.mapv(|t| 1.0 - t * t));
        let mut dgates = Array2::zeros(gates.raw_dim());
        dgates
            .slice_mut(s![.., 0..hd])
            .assign(&(&dc * &g * &i.mapv(|v| v * (1.0 - v))));
        dgates
            .slice_mut(s![.., hd..2 * hd])
            .assign(&(&dc * &cache.c_prev * &f.mapv(|v| v * (1.0 - v))));
        dgates
            .slice_mut(s![.., 2 * hd..3 * hd])
            .assign(&(&dc * &i * &g.mapv(|v| 1.0 - v * v)));
        dgates
            .slice_mut(s![.., 3 * hd..])
            .assign(&(dh * &tanh_c * &o.mapv(|v| v * (1.0 - v))));
        grad.w_input += &cache.input.t().dot(&dgates);
        grad.w_hidden += &cache.h_prev.t().dot(&dgates);
        grad.bias += &dgates.sum_axis(Axis(0));
        let dx = dgates.dot(&self.w_input.t());
        let dh_prev = dgates.dot(&self.w_hidden.t());
        let dc_prev = &dc * &f;
        (dx, dh_prev, dc_prev)
    }

    fn zero_grad(&self) -> LstmGrad {
        LstmGrad {
            w_input: Array2::zeros(self.w_input.raw_dim()),
            w_hidden: Array2::zeros(self.w_hidden.raw_dim()),
            bias: Array1::zeros(self.bias.raw_dim()),
        }
    }
}

/// Encoder LSTM → linear bottleneck → decoder LSTM → tanh head.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmAutoencoder {
    pub encoder: LstmCell,
    pub to_bottleneck: Array2<f64>,
    pub bottleneck_bias: Array1<f64>,
    pub decoder: LstmCell,
    pub head: Array2<f64>,
    pub head_bias: Array1<f64>,
    pub seq_len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmAeGrad {
    pub encoder: LstmGrad,
    pub to_bottleneck: Array2<f64>,
    pub bottleneck_bias: Array1<f64>,
    pub decoder: LstmGrad,
    pub head: Array2<f64>,
    pub head_bias: Array1<f64>,
}

impl LstmAeGrad {
    pub fn slices(&self) -> Vec<&[f64]> {
        vec![
            self.encoder.w_input.as_slice().expect("contiguous"),
            self.encoder.w_hidden.as_slice().expect("contiguous"),
            self.encoder.bias.as_slice().expect("contiguous"),
            self.to_bottleneck.as_slice().expect("contiguous"),
            self.bottleneck_bias.as_slice().expect("contiguous"),
            self.decoder.w_input.as_slice().expect("contiguous"),
            self.decoder.w_hidden.as_slice().expect("contiguous"),
            self.decoder.bias.as_slice().expect("contiguous"),
            self.head.as_slice().expect("contiguous"),
            self.head_bias.as_slice().expect("contiguous"),
        ]
    }
}

pub struct LstmAeCache {
    enc_steps: Vec<StepCache>,
    h_final: Array2<f64>,
    z: Array2<f64>,
    dec_steps: Vec<StepCache>,
    dec_hidden: Vec<Array2<f64>>,
    /// Reconstruction, `batch × seq_len`, in emitted (reversed) order.
    pub output: Array2<f64>,
}

impl LstmAutoencoder {
    pub fn init(seq_len: usize, hidden: usize, bottleneck: usize, rng: &mut ChaCha8Rng) -> Self {
        let encoder = LstmCell::init(1, hidden, rng);
        let lim_z = (6.0 / (hidden + bottleneck) as f64).sqrt();
        let to_bottleneck = Array2::from_shape_simple_fn((hidden, bottleneck), || rng.gen_range(-lim_z..=lim_z));
        let decoder = LstmCell::init(bottleneck, hidden, rng);
        let lim_o = (6.0 / (hidden + 1) as f64).sqrt();
        let head = Array2::from_shape_simple_fn((hidden, 1), || rng.gen_range(-lim_o..=lim_o));
        Self {
            encoder,
            to_bottleneck,
            bottleneck_bias: Array1::zeros(bottleneck),
            decoder,
            head,
            head_bias: Array1::zeros(1),
            seq_len,
        }
    }

    pub fn hidden(&self) -> usize {
        self.encoder.hidden()
    }

    pub fn bottleneck(&self) -> usize {
        self.to_bottleneck.ncols()
    }

    fn check(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.seq_len {
            return Err(Error::Geometry(format!(
                "LSTM autoencoder expects sequences of {}, got {}",
                self.seq_len,
                x.ncols()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite network input".into()));
        }
        Ok(())
    }

    fn run_encoder(&self, x: &ArrayView2<f64>, mut caches: Option<&mut Vec<StepCache>>) -> Array2<f64> {
        let b = x.nrows();
        let hd = self.hidden();
        let mut h = Array2::zeros((b, hd));
        let mut c = Array2::zeros((b, hd));
        for t in 0..self.seq_len {
            let input = x.slice(s![.., t..t + 1]).to_owned();
            let (gates, c_new, h_new) = self.encoder.step(&input, &h, &c);
            if let Some(cs) = caches.as_deref_mut() {
                cs.push(StepCache {
                    input,
                    h_prev: h,
                    c_prev: c,
                    gates,
                    c: c_new.clone(),
                });
            }
            h = h_new;
            c = c_new;
        }
        h
    }

    /// Bottleneck codes, `batch × bottleneck`.
    pub fn encode(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check(&x)?;
        let h = self.run_encoder(&x, None);
        let mut z = h.dot(&self.to_bottleneck);
        z += &self.bottleneck_bias;
        Ok(z)
    }

    pub fn forward_train(&self, x: ArrayView2<f64>) -> Result<LstmAeCache> {
        self.check(&x)?;
        let b = x.nrows();
        let hd = self.hidden();
        let mut enc_steps = Vec::with_capacity(self.seq_len);
        let h_final = self.run_encoder(&x, Some(&mut enc_steps));
        let mut z = h_final.dot(&self.to_bottleneck);
        z += &self.bottleneck_bias;

        let mut h = Array2::zeros((b, hd));
        let mut c = Array2::zeros((b, hd));
        let mut dec_steps = Vec::with_capacity(self.seq_len);
        let mut dec_hidden = Vec::with_capacity(self.seq_len);
        let mut output = Array2::zeros((b, self.seq_len));
        for t in 0..self.seq_len {
            let (gates, c_new, h_new) = self.decoder.step(&z, &h, &c);
            dec_steps.push(StepCache {
                input: z.clone(),
                h_prev: h,
                c_prev: c,
                gates,
                c: c_new.clone(),
            });
            let y = h_new.dot(&self.head).column(0).mapv(|v| (v + self.head_bias[0]).tanh());
            output.column_mut(t).assign(&y);
            dec_hidden.push(h_new.clone());
            h = h_new;
            c = c_new;
        }
        Ok(LstmAeCache {
            enc_steps,
            h_final,
            z,
            dec_steps,
            dec_hidden,
            output,
        })
    }

    /// Reconstruction (reversed order) without keeping caches.
    pub fn reconstruct(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(self.forward_train(x)?.output)
    }

    /// Training target for `x`: each row reversed.
    pub fn target(x: ArrayView2<f64>) -> Array2<f64> {
        x.slice(s![.., ..;-1]).to_owned()
    }

    /// BPTT given `d_out = dL/d(output)`.
    pub fn backward(&self, cache: &LstmAeCache, d_out: &Array2<f64>) -> LstmAeGrad {
        let b = d_out.nrows();
        let hd = self.hidden();
        let mut g_dec = self.decoder.zero_grad();
        let mut g_head = Array2::zeros(self.head.raw_dim());
        let mut g_head_bias = Array1::zeros(1);
        let mut dz = Array2::zeros(cache.z.raw_dim());
        let mut dh_next = Array2::zeros((b, hd));
        let mut dc_next = Array2::zeros((b, hd));
        for t in (0..self.seq_len).rev() {
            let y = cache.output.column(t);
            let dy: Array1<f64> = &d_out.column(t) * &y.mapv(|v| 1.0 - v * v);
            let dy2 = dy.clone().insert_axis(Axis(1));
            g_head += &cache.dec_hidden[t].t().dot(&dy2);
            g_head_bias[0] += dy.sum();
            let dh = &dh_next + &dy2.dot(&self.head.t());
            let (dx, dh_prev, dc_prev) = self.decoder.step_backward(&cache.dec_steps[t], &dh, &dc_next, &mut g_dec);
            dz += &dx;
            dh_next = dh_prev;
            dc_next = dc_prev;
        }
        let g_to_b = cache.h_final.t().dot(&dz);
        let g_b_bias = dz.sum_axis(Axis(0));
        let mut dh = dz.dot(&self.to_bottleneck.t());
        let mut dc = Array2::zeros((b, hd));
        let mut g_enc = self.encoder.zero_grad();
        for t in (0..self.seq_len).rev() {
            let (_, dh_prev, dc_prev) = self.encoder.step_backward(&cache.enc_steps[t], &dh, &dc, &mut g_enc);
            dh = dh_prev;
            dc = dc_prev;
        }
        LstmAeGrad {
            encoder: g_enc,
            to_bottleneck: g_to_b,
            bottleneck_bias: g_b_bias,
            decoder: g_dec,
            head: g_head,
            head_bias: g_head_bias,
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.encoder.w_input.as_slice_mut().expect("contiguous"),
            self.encoder.w_hidden.as_slice_mut().expect("contiguous"),
            self.encoder.bias.as_slice_mut().expect("contiguous"),
            self.to_bottleneck.as_slice_mut().expect("contiguous"),
            self.bottleneck_bias.as_slice_mut().expect("contiguous"),
            self.decoder.w_input.as_slice_mut().expect("contiguous"),
            self.decoder.w_hidden.as_slice_mut().expect("contiguous"),
            self.decoder.bias.as_slice_mut().expect("contiguous"),
            self.head.as_slice_mut().expect("contiguous"),
            self.head_bias.as_slice_mut().expect("contiguous"),
        ]
    }

    pub fn params(&self) -> Vec<&[f64]> {
        vec![
            self.encoder.w_input.as_slice().expect("contiguous"),
            self.encoder.w_hidden.as_slice().expect("contiguous"),
            self.encoder.bias.as_slice().expect("contiguous"),
            self.to_bottleneck.as_slice().expect("contiguous"),
            self.bottleneck_bias.as_slice().expect("contiguous"),
            self.decoder.w_input.as_slice().expect("contiguous"),
            self.decoder.w_hidden.as_slice().expect("contiguous"),
            self.decoder.bias.as_slice().expect("contiguous"),
            self.head.as_slice().expect("contiguous"),
            self.head_bias.as_slice().expect("contiguous"),
        ]
    }
}
