//! Dense and LSTM autoencoders over 110-sample segments, their training
//! loop, frozen encoders, and `PBNN` persistence.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adam::Adam;
use super::lstm::LstmAutoencoder;
use super::mlp::{grad_slices, mse_loss, Activation, Dense, Mlp};
use crate::binio::{Reader, Writer};
use crate::error::{Error, Result};

pub const PBNN_MAGIC: &[u8; 4] = b"PBNN";
pub const PBNN_VERSION: u16 = 1;

/// Segment length every autoencoder consumes (2.5 ms at 44.1 kHz).
pub const SEGMENT_LEN: usize = 110;

/// Dense autoencoder layout: encoder widths start at `first_width` and halve
/// down to `bottleneck`; the decoder mirrors them and ends at `input_dim`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DenseAeArch {
    pub input_dim: usize,
    pub first_width: usize,
    pub bottleneck: usize,
}

impl DenseAeArch {
    pub fn small() -> Self {
        Self {
            input_dim: SEGMENT_LEN,
            first_width: 2048,
            bottleneck: 8,
        }
    }

    pub fn big() -> Self {
        Self {
            bottleneck: 16,
            ..Self::small()
        }
    }

    pub fn with_first_width(self, first_width: usize) -> Self {
        Self { first_width, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.bottleneck > 0
            && self.first_width >= self.bottleneck
            && self.first_width % self.bottleneck == 0
            && (self.first_width / self.bottleneck).is_power_of_two();
        if !ok || self.input_dim == 0 {
            return Err(Error::Config(format!(
                "first width {} must be the bottleneck {} times a power of two",
                self.first_width, self.bottleneck
            )));
        }
        Ok(())
    }

    /// Encoder widths from the first hidden layer down to the bottleneck.
    pub fn encoder_widths(&self) -> Vec<usize> {
        std::iter::successors(Some(self.first_width), |&w| (w > self.bottleneck).then_some(w / 2)).collect()
    }

    pub fn decoder_widths(&self) -> Vec<usize> {
        let mut w = self.encoder_widths();
        w.pop();
        w.reverse();
        w
    }

    /// Every layer width including input and output.
    pub fn all_widths(&self) -> Vec<usize> {
        let mut w = vec![self.input_dim];
        w.extend(self.encoder_widths());
        w.extend(self.decoder_widths());
        w.push(self.input_dim);
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LstmAeArch {
    pub seq_len: usize,
    pub hidden: usize,
    pub bottleneck: usize,
}

impl LstmAeArch {
    pub fn small() -> Self {
        Self {
            seq_len: SEGMENT_LEN,
            hidden: 2048,
            bottleneck: 8,
        }
    }

    pub fn big() -> Self {
        Self {
            bottleneck: 16,
            ..Self::small()
        }
    }

    pub fn with_hidden(self, hidden: usize) -> Self {
        Self { hidden, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seq_len == 0 || self.hidden == 0 || self.bottleneck == 0 {
            return Err(Error::Config("LSTM autoencoder sizes must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AeArch {
    Dense(DenseAeArch),
    Lstm(LstmAeArch),
}

impl AeArch {
    pub fn bottleneck(&self) -> usize {
        match self {
            AeArch::Dense(a) => a.bottleneck,
            AeArch::Lstm(a) => a.bottleneck,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            AeArch::Dense(a) => a.input_dim,
            AeArch::Lstm(a) => a.seq_len,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            batch_size: 64,
            epochs: 30,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.lr, self.beta1, self.beta2, self.eps].iter().all(|v| *v > 0.0);
        if !positive || self.beta1 >= 1.0 || self.beta2 >= 1.0 || self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::Config(format!("invalid training configuration {self:?}")));
        }
        Ok(())
    }

    fn optimizer(&self) -> Adam {
        Adam::new(self.lr, self.beta1, self.beta2, self.eps)
    }
}

/// An autoencoder with trainable parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Autoencoder {
    Dense { arch: DenseAeArch, net: Mlp },
    Lstm { arch: LstmAeArch, net: LstmAutoencoder },
}

impl Autoencoder {
    /// Deterministic initialization for `(arch, seed)`.
    pub fn init(arch: AeArch, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(match arch {
            AeArch::Dense(a) => {
                a.validate()?;
                let net = Mlp::new(&a.all_widths(), Activation::Relu, Activation::Tanh, 0.0, &mut rng);
                Autoencoder::Dense { arch: a, net }
            }
            AeArch::Lstm(a) => {
                a.validate()?;
                Autoencoder::Lstm {
                    arch: a,
                    net: LstmAutoencoder::init(a.seq_len, a.hidden, a.bottleneck, &mut rng),
                }
            }
        })
    }

    pub fn arch(&self) -> AeArch {
        match self {
            Autoencoder::Dense { arch, .. } => AeArch::Dense(*arch),
            Autoencoder::Lstm { arch, .. } => AeArch::Lstm(*arch),
        }
    }

    /// Mean squared reconstruction error over `x` (dense: reconstructs `x`;
    /// LSTM: reconstructs `x` reversed).
    pub fn loss(&self, x: ArrayView2<f64>) -> Result<f64> {
        Ok(match self {
            Autoencoder::Dense { net, .. } => mse_loss(&net.forward(x)?, x).0,
            Autoencoder::Lstm { net, .. } => {
                let target = LstmAutoencoder::target(x);
                mse_loss(&net.reconstruct(x)?, target.view()).0
            }
        })
    }

    /// Loss and gradient slices (declaration order) for one batch.
    pub fn loss_and_grad(&self, x: ArrayView2<f64>) -> Result<(f64, Vec<Vec<f64>>)> {
        match self {
            Autoencoder::Dense { net, .. } => {
                let cache = net.forward_train(x, None)?;
                let (loss, d) = mse_loss(cache.output(), x);
                let grads = net.backward(&cache, d, false);
                Ok((loss, grad_slices(&grads).into_iter().map(<[f64]>::to_vec).collect()))
            }
            Autoencoder::Lstm { net, .. } => {
                let cache = net.forward_train(x)?;
                let target = LstmAutoencoder::target(x);
                let (loss, d) = mse_loss(&cache.output, target.view());
                let g = net.backward(&cache, &d);
                Ok((loss, g.slices().into_iter().map(<[f64]>::to_vec).collect()))
            }
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        match self {
            Autoencoder::Dense { net, .. } => net.params_mut(),
            Autoencoder::Lstm { net, .. } => net.params_mut(),
        }
    }

    pub fn params(&self) -> Vec<&[f64]> {
        match self {
            Autoencoder::Dense { net, .. } => net.params(),
            Autoencoder::Lstm { net, .. } => net.params(),
        }
    }

    pub fn into_encoder(self) -> Encoder {
        Encoder { model: self }
    }
}

/// Frozen autoencoder exposing only its bottleneck.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    model: Autoencoder,
}

impl Encoder {
    pub fn model(&self) -> &Autoencoder {
        &self.model
    }

    pub fn input_dim(&self) -> usize {
        self.model.arch().input_dim()
    }

    pub fn bottleneck(&self) -> usize {
        self.model.arch().bottleneck()
    }

    /// Bottleneck codes for a batch of segments (`batch × input_dim`).
    pub fn encode_batch(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        match &self.model {
            Autoencoder::Dense { arch, net } => net.forward_partial(x, arch.encoder_widths().len()),
            Autoencoder::Lstm { net, .. } => net.encode(x),
        }
    }

    pub fn encode(&self, segment: &[f64]) -> Result<Vec<f64>> {
        if segment.len() != self.input_dim() {
            return Err(Error::Geometry(format!(
                "encoder expects {} samples, got {}",
                self.input_dim(),
                segment.len()
            )));
        }
        let x = ArrayView2::from_shape((1, segment.len()), segment).expect("row");
        Ok(self.encode_batch(x)?.row(0).to_vec())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut buf = Vec::new();
        write_pbnn(&self.model, &mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::from(e).context(path.display().to_string()))?;
        Ok(Self {
            model: read_pbnn(&bytes[..]).map_err(|e| e.context(path.display().to_string()))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedAutoencoder {
    pub encoder: Encoder,
    /// Full-training-set MSE; entry 0 is before the first update, entry `e`
    /// after epoch `e`.
    pub loss_curve: Vec<f64>,
}

impl TrainedAutoencoder {
    pub fn loss_csv(&self) -> String {
        let mut out = String::from("epoch,loss\n");
        for (e, l) in self.loss_curve.iter().enumerate() {
            out.push_str(&format!("{e},{l}\n"));
        }
        out
    }
}

/// Mini-batch Adam on mean squared reconstruction error. Deterministic in
/// `cfg.seed`: the seed drives both initialization and batch shuffling.
pub fn train_autoencoder(segments: ArrayView2<f64>, arch: AeArch, cfg: &TrainConfig) -> Result<TrainedAutoencoder> {
    cfg.validate()?;
    if segments.nrows() == 0 {
        return Err(Error::Data("no training segments".into()));
    }
    if segments.ncols() != arch.input_dim() {
        return Err(Error::Geometry(format!(
            "segments have {} samples, architecture expects {}",
            segments.ncols(),
            arch.input_dim()
        )));
    }
    let mut model = Autoencoder::init(arch, cfg.seed)?;
    let mut opt = cfg.optimizer();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_ae00);
    let mut order: Vec<usize> = (0..segments.nrows()).collect();
    let mut loss_curve = vec![model.loss(segments)?];
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let x = segments.select(Axis(0), batch);
            let (_, grads) = model.loss_and_grad(x.view())?;
            let g: Vec<&[f64]> = grads.iter().map(Vec::as_slice).collect();
            opt.step(&mut model.params_mut(), &g);
        }
        let loss = model.loss(segments)?;
        if !loss.is_finite() {
            return Err(Error::Numeric(format!("training diverged at epoch {}", epoch + 1)));
        }
        log::debug!("epoch {} loss {loss:.6e}", epoch + 1);
        loss_curve.push(loss);
    }
    Ok(TrainedAutoencoder {
        encoder: model.into_encoder(),
        loss_curve,
    })
}

/// Non-overlapping segments cut from every buffer, shuffled by `seed`, and
/// truncated to `limit` when given.
pub fn unlabeled_segments<'a>(
    audio: impl IntoIterator<Item = &'a [f64]>,
    seg_len: usize,
    seed: u64,
    limit: Option<usize>,
) -> Array2<f64> {
    let mut rows: Vec<&[f64]> = audio.into_iter().flat_map(|a| a.chunks_exact(seg_len)).collect();
    rows.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    if let Some(l) = limit {
        rows.truncate(l);
    }
    let flat: Vec<f64> = rows.concat();
    Array2::from_shape_vec((rows.len(), seg_len), flat).expect("exact chunks")
}

fn write_pbnn<W: Write>(model: &Autoencoder, w: W) -> Result<()> {
    let mut w = Writer(w);
    w.magic(PBNN_MAGIC, PBNN_VERSION)?;
    match model {
        Autoencoder::Dense { arch, net } => {
            w.u8(0)?;
            w.u32(arch.input_dim)?;
            w.u32(arch.first_width)?;
            w.u32(arch.bottleneck)?;
            w.u32(net.layers.len())?;
            for l in &net.layers {
                w.u32(l.input_dim())?;
                w.u32(l.output_dim())?;
                w.u8(l.activation.tag())?;
            }
        }
        Autoencoder::Lstm { arch, .. } => {
            w.u8(1)?;
            w.u32(arch.seq_len)?;
            w.u32(arch.hidden)?;
            w.u32(arch.bottleneck)?;
        }
    }
    let params = model.params();
    w.u64(params.iter().map(|p| p.len() as u64).sum())?;
    for p in params {
        w.f64s(p)?;
    }
    Ok(())
}

fn read_pbnn<R: Read>(r: R) -> Result<Autoencoder> {
    let mut r = Reader(r);
    r.magic(PBNN_MAGIC, PBNN_VERSION)?;
    let mut model = match r.u8()? {
        0 => {
            let arch = DenseAeArch {
                input_dim: r.u32()?,
                first_width: r.u32()?,
                bottleneck: r.u32()?,
            };
            arch.validate()?;
            let n = r.u32()?;
            let widths = arch.all_widths();
            if n + 1 != widths.len() {
                return Err(Error::Format("layer count does not match architecture".into()));
            }
            let mut layers = Vec::with_capacity(n);
            for i in 0..n {
                let (fan_in, fan_out) = (r.u32()?, r.u32()?);
                let act = Activation::from_tag(r.u8()?).ok_or_else(|| Error::Format("bad activation tag".into()))?;
                if (fan_in, fan_out) != (widths[i], widths[i + 1]) {
                    return Err(Error::Format(format!("layer {i} shape does not match architecture")));
                }
                layers.push(Dense {
                    weights: Array2::zeros((fan_in, fan_out)),
                    bias: ndarray::Array1::zeros(fan_out),
                    activation: act,
                    dropout: 0.0,
                });
            }
            Autoencoder::Dense {
                arch,
                net: Mlp { layers },
            }
        }
        1 => {
            let arch = LstmAeArch {
                seq_len: r.u32()?,
                hidden: r.u32()?,
                bottleneck: r.u32()?,
            };
            arch.validate()?;
            Autoencoder::init(AeArch::Lstm(arch), 0)?
        }
        t => return Err(Error::Format(format!("unknown network kind {t}"))),
    };
    let total = r.u64()? as usize;
    let expected: usize = model.params().iter().map(|p| p.len()).sum();
    if total != expected {
        return Err(Error::Format(format!("{total} parameters stored, architecture needs {expected}")));
    }
    for p in model.params_mut() {
        let v = r.f64s(p.len())?;
        p.copy_from_slice(&v);
    }
    Ok(model)
}
