//! End-to-end plumbing: corpus loading, feature extraction for every
//! representation, autoencoder training on corpus audio, and the benchmark
//! driver behind the `bench` command.

mod config;

use std::path::{Path, PathBuf};

use ndarray::{Array2, Axis};
use rayon::prelude::*;

use crate::classifiers::ModelSpec;
use crate::dataset::Corpus;
use crate::dsp::{FeatureMatrix, Geometry, LpcConfig, MfccConfig, Representation, TraditionalExtractor};
use crate::error::{Error, Result};
use crate::eval::{render_table1, run_benchmark, BenchmarkInput, BenchmarkReport, RepGroup, RepresentationEntry};
use crate::neural::{
    external_segment_features, train_autoencoder, unlabeled_segments, AeArch, ChunkEncoder, DenseAeArch, Encoder,
    LstmAeArch, SpectralStubEncoder, TrainConfig, TrainedAutoencoder,
};

pub use config::{AeModels, RunConfig, SEED_ENV};

pub fn load_corpus(cfg: &RunConfig) -> Result<Corpus> {
    Corpus::load(&cfg.manifest, cfg.load_inventory()?, cfg.audio_dir(), cfg.resample)
}

pub fn representation_entry(repr: Representation) -> RepresentationEntry {
    RepresentationEntry {
        name: repr.name().to_string(),
        display_name: repr.display_name().to_string(),
        group: if repr.is_traditional() {
            RepGroup::Traditional
        } else {
            RepGroup::Autoencoder
        },
        dim: repr.spec().dim(),
    }
}

/// Bottleneck codes of every segment in every frame of `window`, averaged
/// per frame and concatenated. One batched encoder call per window; equal
/// to `dsp::extract_segment_level` with `Encoder::encode` per segment.
pub fn encoder_segment_level(window: &[f64], geometry: &Geometry, encoder: &Encoder) -> Result<Vec<f64>> {
    if encoder.input_dim() != geometry.segment {
        return Err(Error::Geometry(format!(
            "encoder expects {}-sample segments, geometry has {}",
            encoder.input_dim(),
            geometry.segment
        )));
    }
    let frames = crate::dsp::partition_window_with(window, geometry)?;
    let count = geometry.segments_per_frame();
    let seg = geometry.segment;
    let mut rows = Array2::zeros((frames.iter().count() * count, seg));
    for (f, frame) in frames.iter().enumerate() {
        for s in 0..count {
            rows.row_mut(f * count + s)
                .iter_mut()
                .zip(&frame[s..s + seg])
                .for_each(|(r, &v)| *r = v);
        }
    }
    let codes = encoder.encode_batch(rows.view())?;
    let k = codes.ncols();
    let mut out = Vec::with_capacity(k * codes.nrows() / count);
    for block in codes.axis_chunks_iter(Axis(0), count) {
        let mut acc = vec![0.0; k];
        for row in block.rows() {
            acc.iter_mut().zip(row).for_each(|(a, &b)| *a += b);
        }
        out.extend(acc.into_iter().map(|a| a * (1.0 / count as f64)));
    }
    Ok(out)
}

/// Whole-segment representation from a chunk encoder.
pub fn extract_whole_segment(corpus: &Corpus, encoder: &dyn ChunkEncoder) -> Result<FeatureMatrix> {
    let segments = corpus.full_segments()?;
    let rows: Vec<Vec<f64>> = segments
        .par_iter()
        .map(|s| external_segment_features(s, encoder))
        .collect::<Result<_>>()?;
    FeatureMatrix::from_rows(rows, corpus_labels(corpus), encoder.output_dim())
}

fn corpus_labels(corpus: &Corpus) -> Vec<String> {
    corpus.annotations.annotations().iter().map(|a| a.label.clone()).collect()
}

/// Features for `repr` over every annotation of `corpus`, in annotation
/// order. Bottleneck representations need `encoder`; the external
/// representation uses the built-in spectral chunk encoder.
pub fn extract_features(corpus: &Corpus, repr: Representation, encoder: Option<&Encoder>) -> Result<FeatureMatrix> {
    let spec = repr.spec();
    if repr == Representation::External {
        return extract_whole_segment(corpus, &SpectralStubEncoder);
    }
    let geometry = Geometry::for_rate(corpus.sample_rate());
    let windows = corpus.windows()?;
    let rows: Vec<Vec<f64>> = if repr.needs_autoencoder() {
        let enc = encoder.ok_or_else(|| Error::Config(format!("representation {repr} needs a trained encoder")))?;
        if Some(enc.bottleneck()) != repr.bottleneck() {
            return Err(Error::Config(format!(
                "representation {repr} needs a {}-dim bottleneck, model has {}",
                repr.bottleneck().unwrap_or(0),
                enc.bottleneck()
            )));
        }
        windows
            .par_iter()
            .map(|w| encoder_segment_level(w, &geometry, enc))
            .collect::<Result<_>>()?
    } else {
        let ex = TraditionalExtractor::<f64>::new(MfccConfig::default(), LpcConfig::default(), geometry)?;
        windows.par_iter().map(|w| ex.extract(w, &spec)).collect::<Result<_>>()?
    };
    FeatureMatrix::from_rows(rows, corpus_labels(corpus), spec.dim())
}

/// Knobs for training one of the four autoencoders on corpus audio.
#[derive(Debug, Clone, PartialEq)]
pub struct AeTrainOptions {
    pub train: TrainConfig,
    /// First dense layer width (the halving schedule starts here).
    pub first_width: Option<usize>,
    /// LSTM recurrent state size.
    pub hidden: Option<usize>,
    /// Cap on the number of training segments.
    pub limit: Option<usize>,
}

impl AeTrainOptions {
    pub fn new(seed: u64) -> Self {
        Self {
            train: TrainConfig {
                seed,
                ..TrainConfig::default()
            },
            first_width: None,
            hidden: None,
            limit: None,
        }
    }
}

pub fn ae_arch(repr: Representation, first_width: Option<usize>, hidden: Option<usize>) -> Result<AeArch> {
    let arch = match repr {
        Representation::AeSmall => AeArch::Dense(DenseAeArch::small()),
        Representation::AeBig => AeArch::Dense(DenseAeArch::big()),
        Representation::LstmAeSmall => AeArch::Lstm(LstmAeArch::small()),
        Representation::LstmAeBig => AeArch::Lstm(LstmAeArch::big()),
        other => return Err(Error::Config(format!("representation {other} has no autoencoder"))),
    };
    Ok(match arch {
        AeArch::Dense(a) => AeArch::Dense(first_width.map_or(a, |w| a.with_first_width(w))),
        AeArch::Lstm(a) => AeArch::Lstm(hidden.map_or(a, |h| a.with_hidden(h))),
    })
}

/// Trains the autoencoder behind `repr` on non-overlapping segments of all
/// corpus audio, shuffled with the training seed.
pub fn train_corpus_autoencoder(
    corpus: &Corpus,
    repr: Representation,
    opts: &AeTrainOptions,
) -> Result<TrainedAutoencoder> {
    let arch = ae_arch(repr, opts.first_width, opts.hidden)?;
    let segments = unlabeled_segments(
        corpus.audio.values().map(|a| a.samples()),
        arch.input_dim(),
        opts.train.seed,
        opts.limit,
    );
    log::info!("training {repr} on {} segments: {arch:?}", segments.nrows());
    train_autoencoder(segments.view(), arch, &opts.train)
}

fn model_specs(cfg: &RunConfig) -> Vec<ModelSpec> {
    cfg.classifiers
        .iter()
        .map(|&kind| ModelSpec {
            kind,
            hyper: cfg.hyper.clone(),
            seed: cfg.seed,
        })
        .collect()
}

/// Extracts every configured representation and runs the full grid.
pub fn run_bench(cfg: &RunConfig) -> Result<BenchmarkReport> {
    let corpus = load_corpus(cfg)?;
    let mut inputs = Vec::with_capacity(cfg.representations.len());
    for &repr in &cfg.representations {
        let encoder = match cfg.autoencoders.get(repr) {
            Some(p) if repr.needs_autoencoder() => Some(Encoder::load(p)?),
            _ => None,
        };
        log::info!("extracting {repr}");
        let features = extract_features(&corpus, repr, encoder.as_ref())
            .map_err(|e| e.context(format!("representation {repr}")))?;
        inputs.push(BenchmarkInput {
            entry: representation_entry(repr),
            features,
        });
    }
    run_benchmark(&inputs, &model_specs(cfg), &corpus.inventory, cfg.k, cfg.seed)
}

/// Paths written by [`write_bench_outputs`].
#[derive(Debug, Clone, PartialEq)]
pub struct BenchOutputs {
    pub report: PathBuf,
    pub table1: PathBuf,
    pub config: PathBuf,
}

/// Writes `report.json`, `table1.md` and `resolved_config.toml` into the
/// configured output directory.
pub fn write_bench_outputs(cfg: &RunConfig, report: &BenchmarkReport) -> Result<BenchOutputs> {
    let dir: &Path = &cfg.output_dir;
    std::fs::create_dir_all(dir)?;
    let out = BenchOutputs {
        report: dir.join("report.json"),
        table1: dir.join("table1.md"),
        config: dir.join("resolved_config.toml"),
    };
    std::fs::write(&out.report, report.to_json()?)?;
    std::fs::write(&out.table1, render_table1(report)?)?;
    std::fs::write(&out.config, cfg.to_toml()?)?;
    Ok(out)
}

/// Mean of `encode` over each frame's segments, computed one segment at a
/// time.
pub fn naive_encoder_segment_level(window: &[f64], geometry: &Geometry, encoder: &Encoder) -> Result<Vec<f64>> {
    crate::dsp::extract_segment_level(window, geometry, |s| encoder.encode(s))
}
