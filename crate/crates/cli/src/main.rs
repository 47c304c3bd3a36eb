//! `phonebench`: datasets, feature extraction, autoencoder training,
//! benchmarking and report rendering from the command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use phonebench::classifiers::ClassifierKind;
use phonebench::dataset::{generate_synthetic_dataset, Corpus, PhonemeInventory, SynthSpec};
use phonebench::dsp::Representation;
use phonebench::eval::{render_table1, render_table2, BenchmarkReport};
use phonebench::neural::Encoder;
use phonebench::pipeline::{self, AeTrainOptions, RunConfig, SEED_ENV};
use phonebench::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "phonebench", version, about = "Phoneme representation and classification benchmark")]
struct Cli {
    /// Only log warnings and errors.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate or synthesize annotated corpora.
    #[command(subcommand)]
    Dataset(DatasetCmd),
    /// Extract one representation for every annotation.
    Features(FeaturesArgs),
    /// Train one of the four autoencoders on corpus audio.
    AeTrain(AeTrainArgs),
    /// Run the representation x classifier grid from a run config.
    Bench {
        #[arg(long)]
        config: PathBuf,
    },
    /// Render Markdown tables from a report JSON.
    #[command(subcommand)]
    Report(ReportCmd),
}

#[derive(Debug, Args)]
struct CorpusArgs {
    /// Inventory TSV; the built-in 33-class inventory when omitted.
    #[arg(long)]
    inventory: Option<PathBuf>,
    /// Directory holding `<audio_id>.wav`; defaults to the manifest's directory.
    #[arg(long)]
    audio_dir: Option<PathBuf>,
    /// Resample audio that is not 44.1 kHz.
    #[arg(long)]
    resample: bool,
}

impl CorpusArgs {
    fn inventory(&self) -> Result<PhonemeInventory> {
        match &self.inventory {
            Some(p) => PhonemeInventory::load(p),
            None => Ok(PhonemeInventory::default_inventory()),
        }
    }

    fn load(&self, manifest: &Path) -> Result<Corpus> {
        let dir = self
            .audio_dir
            .clone()
            .unwrap_or_else(|| manifest.parent().unwrap_or(Path::new(".")).to_path_buf());
        Corpus::load(manifest, self.inventory()?, dir, self.resample)
    }
}

#[derive(Debug, Subcommand)]
enum DatasetCmd {
    /// Check a manifest and its audio; print class counts and coverage.
    Validate {
        manifest: PathBuf,
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Write a synthetic corpus: WAV files, manifest.tsv, inventory.tsv.
    Synth {
        /// Number of annotated segments.
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Synthetic spec file; overrides `--classes`.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Comma-separated subset of labels drawn in equal proportions.
        #[arg(long, value_delimiter = ',')]
        classes: Vec<String>,
        #[arg(long)]
        inventory: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct FeaturesArgs {
    #[arg(long)]
    repr: Representation,
    #[arg(long)]
    manifest: PathBuf,
    /// Output path; `.csv` or `.pbft`.
    #[arg(long)]
    out: PathBuf,
    /// Trained encoder for the autoencoder representations.
    #[arg(long)]
    model: Option<PathBuf>,
    #[command(flatten)]
    corpus: CorpusArgs,
}

#[derive(Debug, Args)]
struct AeTrainArgs {
    /// One of ae-small, ae-big, lstm-ae-small, lstm-ae-big.
    #[arg(long)]
    repr: Representation,
    #[arg(long)]
    manifest: PathBuf,
    /// Output model path (`PBNN`).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Width of the first dense layer.
    #[arg(long)]
    first_width: Option<usize>,
    /// LSTM recurrent state size.
    #[arg(long)]
    hidden: Option<usize>,
    /// Cap on the number of training segments.
    #[arg(long)]
    limit: Option<usize>,
    /// Also write the loss curve as `epoch,loss` CSV.
    #[arg(long)]
    loss_csv: Option<PathBuf>,
    #[command(flatten)]
    corpus: CorpusArgs,
}

#[derive(Debug, Subcommand)]
enum ReportCmd {
    /// Representation x classifier accuracy grid.
    Table1 { report: PathBuf },
    /// Subgroup accuracies and best/worst phonemes for one cell.
    Table2 {
        report: PathBuf,
        /// `representation:classifier`, e.g. `mfcc-segment:dense_nn`.
        #[arg(long)]
        cell: String,
    },
}

fn seed_from_env(seed: u64) -> Result<u64> {
    let mut s = seed;
    if let Ok(v) = std::env::var(SEED_ENV) {
        s = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{SEED_ENV}=`{v}` is not a 64-bit unsigned integer")))?;
    }
    Ok(s)
}

fn dataset(cmd: DatasetCmd) -> Result<()> {
    match cmd {
        DatasetCmd::Validate { manifest, corpus } => {
            let c = corpus.load(&manifest)?;
            c.windows()?;
            c.full_segments()?;
            let stats = c.annotations.stats();
            print!("{}", stats.render());
            let missing: Vec<&str> = c
                .inventory
                .labels()
                .filter(|l| stats.count_of(l) == 0)
                .collect();
            println!(
                "coverage: {}/{} classes present",
                c.inventory.len() - missing.len(),
                c.inventory.len()
            );
            if !missing.is_empty() {
                println!("missing: {}", missing.join(" "));
            }
            Ok(())
        }
        DatasetCmd::Synth {
            n,
            seed,
            out,
            spec,
            classes,
            inventory,
        } => {
            let seed = seed_from_env(seed)?;
            let inv = match inventory {
                Some(p) => PhonemeInventory::load(p)?,
                None => PhonemeInventory::default_inventory(),
            };
            let spec = match (spec, classes.is_empty()) {
                (Some(p), _) => SynthSpec::load(p)?,
                (None, true) => SynthSpec::default_for(&inv, n),
                (None, false) => {
                    let share = 1.0 / classes.len() as f64;
                    let props: Vec<(&str, f64)> = classes.iter().map(|c| (c.as_str(), share)).collect();
                    SynthSpec::from_proportions(&inv, &props, n)?
                }
            };
            let spec = SynthSpec { total: n, ..spec };
            log::info!("synthesizing {n} segments with seed {seed}");
            let corpus = generate_synthetic_dataset(&spec, &inv, seed)?;
            corpus.write(&out)?;
            std::fs::write(out.join("synth_spec.toml"), spec.to_toml())?;
            println!("wrote {} annotations to {}", corpus.annotations.len(), out.display());
            Ok(())
        }
    }
}

fn features(args: FeaturesArgs) -> Result<()> {
    let encoder = match (&args.model, args.repr.needs_autoencoder()) {
        (Some(p), true) => Some(Encoder::load(p)?),
        (None, true) => {
            return Err(Error::Config(format!("--repr {} requires --model", args.repr)));
        }
        _ => None,
    };
    let corpus = args.corpus.load(&args.manifest)?;
    let m = pipeline::extract_features(&corpus, args.repr, encoder.as_ref())?;
    m.save(&args.out)?;
    println!("{}: {} rows, d = {}", args.repr, m.n_rows(), m.dim());
    Ok(())
}

fn ae_train(args: AeTrainArgs) -> Result<()> {
    if !args.repr.needs_autoencoder() {
        return Err(Error::Config(format!("{} is not an autoencoder representation", args.repr)));
    }
    let mut opts = AeTrainOptions::new(seed_from_env(args.seed)?);
    if let Some(e) = args.epochs {
        opts.train.epochs = e;
    }
    if let Some(b) = args.batch_size {
        opts.train.batch_size = b;
    }
    if let Some(lr) = args.lr {
        opts.train.lr = lr;
    }
    opts.first_width = args.first_width;
    opts.hidden = args.hidden;
    opts.limit = args.limit;
    log::info!("ae-train {} seed {}: {opts:?}", args.repr, opts.train.seed);
    let corpus = args.corpus.load(&args.manifest)?;
    let trained = pipeline::train_corpus_autoencoder(&corpus, args.repr, &opts)?;
    trained.encoder.save(&args.out)?;
    if let Some(p) = &args.loss_csv {
        std::fs::write(p, trained.loss_csv())?;
    }
    let curve = &trained.loss_curve;
    println!(
        "{}: bottleneck {}, loss {:.6e} -> {:.6e}",
        args.repr,
        trained.encoder.bottleneck(),
        curve[0],
        curve[curve.len() - 1]
    );
    Ok(())
}

fn bench(config: &Path) -> Result<()> {
    let cfg = RunConfig::load(config)?;
    log::info!("seed {}", cfg.seed);
    log::info!("resolved config:\n{}", cfg.to_toml()?);
    let report = pipeline::run_bench(&cfg)?;
    let out = pipeline::write_bench_outputs(&cfg, &report)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    println!("{} cells written to {}", report.n_cells(), out.report.display());
    Ok(())
}

fn report(cmd: ReportCmd) -> Result<()> {
    match cmd {
        ReportCmd::Table1 { report } => print!("{}", render_table1(&BenchmarkReport::load(report)?)?),
        ReportCmd::Table2 { report, cell } => {
            let (repr, clf) = cell
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("--cell `{cell}` is not representation:classifier")))?;
            let kind: ClassifierKind = clf.parse()?;
            print!("{}", render_table2(&BenchmarkReport::load(report)?, repr, kind)?);
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Dataset(c) => dataset(c).map_err(|e| e.context("dataset")),
        Command::Features(a) => features(a).map_err(|e| e.context("features")),
        Command::AeTrain(a) => ae_train(a).map_err(|e| e.context("ae-train")),
        Command::Bench { config } => bench(&config).map_err(|e| e.context("bench")),
        Command::Report(c) => report(c).map_err(|e| e.context("report")),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_user_error() { 1 } else { 2 })
        }
    }
}
