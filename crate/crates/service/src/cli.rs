//! `pf` command line.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use pf_core::checkpoint::{load_pcn, load_tpn};
use pf_core::data::synthetic::{synthetic_embeddings, synthetic_images, synthetic_pat};
use pf_core::data::{load_embeddings, load_pat, random_embeddings, split, write_embeddings, write_pat, Vocabulary};
use pf_core::metrics::{evaluate, EvalOptions};
use pf_core::pcn::{colorize_full, PcnConfig};
use pf_core::tpn::TpnConfig;
use pf_core::train::{train_pcn, train_tpn, History, TrainConfig};

use crate::api::{encode_png, parse_palette, sample_response};
use crate::config::{Overrides, ServiceConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "pf", version, about = "Text-to-palette generation and palette-guided colorization")]
pub struct Cli {
    /// Log more (repeat for debug output).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a palette-text JSON-lines file and report its size.
    Ingest {
        #[arg(long)]
        data: PathBuf,
        /// Seed of the train/test split to report.
        #[arg(long, default_value_t = 0)]
        split_seed: u64,
    },
    /// Write a synthetic palette-text corpus (and optionally word vectors and images).
    Fixtures {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write word vectors for the corpus vocabulary here.
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// Also write synthetic training images into this directory.
        #[arg(long)]
        images: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        image_count: usize,
        #[arg(long, default_value_t = 64)]
        image_size: u32,
    },
    /// Train the text-to-palette model.
    TrainTpn(TrainTpnArgs),
    /// Train the colorization model on a directory of images.
    TrainPcn(TrainPcnArgs),
    /// Sample palettes for a text; prints JSON.
    Sample {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        text: String,
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Colorize an image with a palette and write a PNG.
    Colorize {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        image: PathBuf,
        /// JSON file with five [L, a, b] colors.
        #[arg(long)]
        palette: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a palette checkpoint on a test set; prints the report as JSON.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 10)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Decode from the condition means (no sampling noise).
        #[arg(long)]
        zero_noise: bool,
        /// Also write the report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Start the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Output directory for checkpoints and history.csv.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub huber_weight: Option<f64>,
    #[arg(long)]
    pub kl_weight: Option<f64>,
    #[arg(long)]
    pub init_std: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// Also checkpoint every this many epochs.
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
}

impl TrainArgs {
    fn config(&self, base: TrainConfig) -> TrainConfig {
        TrainConfig {
            learning_rate: self.lr.unwrap_or(base.learning_rate),
            epochs: self.epochs.unwrap_or(base.epochs),
            batch_size: self.batch_size.unwrap_or(base.batch_size),
            huber_weight: self.huber_weight.unwrap_or(base.huber_weight),
            kl_weight: self.kl_weight.unwrap_or(base.kl_weight),
            init_std: self.init_std.unwrap_or(base.init_std),
            seed: self.seed,
            max_steps: self.max_steps,
            checkpoint_every: self.checkpoint_every,
            out_dir: Some(self.out.clone()),
            ..base
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainTpnArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Word vectors in word2vec text format; without it every word starts random.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Width of the encoder, condition, decoder and attention layers.
    #[arg(long, default_value_t = 150)]
    pub dims: usize,
    /// Discriminator hidden widths, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [256, 128])]
    pub disc_hidden: Vec<usize>,
    /// Train on every record instead of holding out a test split.
    #[arg(long)]
    pub no_split: bool,
    #[command(flatten)]
    pub train: TrainArgs,
}

#[derive(Debug, Args)]
pub struct TrainPcnArgs {
    #[arg(long)]
    pub images: PathBuf,
    #[arg(long, default_value_t = 64)]
    pub resolution: usize,
    /// Generator encoder widths, four values.
    #[arg(long, value_delimiter = ',', default_values_t = [64, 128, 256, 512])]
    pub widths: Vec<usize>,
    /// Discriminator conv widths.
    #[arg(long, value_delimiter = ',', default_values_t = [64, 128, 256])]
    pub disc_widths: Vec<usize>,
    #[command(flatten)]
    pub train: TrainArgs,
}

#[derive(Debug, Default, Args)]
pub struct ServeArgs {
    /// TOML file with service settings (lowest precedence).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub host: Option<String>,
    #[arg(long)]
    pub port: Option<u16>,
    #[arg(long)]
    pub tpn: Option<PathBuf>,
    #[arg(long)]
    pub pcn: Option<PathBuf>,
    #[arg(long)]
    pub gallery: Option<PathBuf>,
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
    #[arg(long)]
    pub max_upload_bytes: Option<usize>,
}

impl ServeArgs {
    pub fn resolve(&self, env: impl Fn(&str) -> Option<String>) -> anyhow::Result<ServiceConfig> {
        let file = match &self.config {
            Some(p) => Overrides::from_file(p)?,
            None => Overrides::default(),
        };
        let flags = Overrides {
            host: self.host.clone(),
            port: self.port,
            tpn_checkpoint: self.tpn.clone(),
            pcn_checkpoint: self.pcn.clone(),
            gallery_path: self.gallery.clone(),
            static_dir: self.static_dir.clone(),
            max_upload_bytes: self.max_upload_bytes,
        };
        Ok(ServiceConfig::layered(file, Overrides::from_env(env)?, flags))
    }
}

/// Failure of a command, split by exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad arguments or invalid input files.
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        let invalid = e.chain().any(|c| {
            matches!(
                c.downcast_ref::<pf_core::Error>(),
                Some(
                    pf_core::Error::InvalidInput(_)
                        | pf_core::Error::Parse { .. }
                        | pf_core::Error::PaletteArity { .. }
                        | pf_core::Error::EmptyText(_)
                        | pf_core::Error::TooFewRecords { .. }
                )
            )
        });
        if invalid {
            Failure::Usage(e)
        } else {
            Failure::Runtime(e)
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

impl From<pf_core::Error> for Failure {
    fn from(e: pf_core::Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

/// Parses `args` and runs the command, writing normal output to `out`.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    init_logging(cli.verbose);
    match execute(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let (Failure::Usage(e) | Failure::Runtime(e)) = &f;
            eprintln!("error: {e:#}");
            f.code()
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "info",
        1 => "debug",
        _ => "trace",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp_secs()
        .try_init();
}

fn write_json(out: &mut dyn Write, value: &impl serde::Serialize) -> anyhow::Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn usage(message: String) -> Failure {
    Failure::Usage(anyhow!(message))
}

fn execute(command: Command, out: &mut dyn Write) -> Result<(), Failure> {
    match command {
        Command::Ingest { data, split_seed } => {
            let records = load_pat(&data).with_context(|| format!("reading {}", data.display()))?;
            let vocab = Vocabulary::from_texts(records.iter().map(|r| r.text.as_str()));
            let (train, test) = split(&records, split_seed)?;
            write_json(
                out,
                &serde_json::json!({
                    "records": records.len(),
                    "vocabulary": vocab.len() - 1,
                    "train": train.len(),
                    "test": test.len(),
                }),
            )?;
        }
        Command::Fixtures {
            out: path,
            n,
            seed,
            embeddings,
            images,
            image_count,
            image_size,
        } => {
            if n == 0 {
                return Err(usage("--n must be at least 1".into()));
            }
            let records = synthetic_pat(n, seed);
            let mut w = create(&path)?;
            write_pat(&records, &mut w)?;
            w.flush()?;
            if let Some(e) = embeddings {
                let vocab = Vocabulary::from_texts(records.iter().map(|r| r.text.as_str()));
                let entries = synthetic_embeddings(&vocab, 0, seed);
                let mut w = create(&e)?;
                write_embeddings(entries.iter().map(|(t, v)| (t.as_str(), v.as_slice())), &mut w)?;
                w.flush()?;
            }
            if let Some(dir) = images {
                std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                for (i, img) in synthetic_images(image_count, image_size, seed).iter().enumerate() {
                    img.save(dir.join(format!("image-{i:03}.png"))).map_err(pf_core::Error::from)?;
                }
            }
            writeln!(out, "wrote {n} records to {}", path.display())?;
        }
        Command::TrainTpn(a) => {
            let records = load_pat(&a.data).with_context(|| format!("reading {}", a.data.display()))?;
            let train = if a.no_split {
                records
            } else {
                let (train, test) = split(&records, a.train.seed)?;
                let mut w = create(&a.train.out.join("test.jsonl"))?;
                write_pat(&test, &mut w)?;
                w.flush()?;
                train
            };
            let vocab = Vocabulary::from_texts(train.iter().map(|r| r.text.as_str()));
            let embeddings = match &a.embeddings {
                Some(p) => load_embeddings(&vocab, p, a.train.seed)?,
                None => random_embeddings(&vocab, a.train.seed),
            };
            let model_config = TpnConfig {
                encoder_hidden: a.dims,
                condition_dim: a.dims,
                decoder_hidden: a.dims,
                attention_dim: a.dims,
                discriminator_hidden: a.disc_hidden.clone(),
            };
            let config = a.train.config(TrainConfig::tpn());
            let (_, history) = train_tpn(&train, vocab, &embeddings, model_config, &config)?;
            report_training(out, &history, &a.train.out.join("tpn.safetensors"))?;
        }
        Command::TrainPcn(a) => {
            let widths: [usize; 4] = a
                .widths
                .as_slice()
                .try_into()
                .map_err(|_| usage(format!("--widths needs 4 values, got {}", a.widths.len())))?;
            let model_config = PcnConfig {
                resolution: a.resolution,
                widths,
                discriminator_widths: a.disc_widths.clone(),
            };
            model_config.validate()?;
            let config = a.train.config(TrainConfig::pcn());
            let (_, history) = train_pcn(&a.images, model_config, &config)?;
            report_training(out, &history, &a.train.out.join("pcn.safetensors"))?;
        }
        Command::Sample {
            checkpoint,
            text,
            n,
            seed,
        } => {
            if n == 0 {
                return Err(usage("--n must be at least 1".into()));
            }
            let model = load_tpn(&checkpoint).with_context(|| format!("loading {}", checkpoint.display()))?;
            write_json(out, &sample_response(&model, &text, n, seed)?)?;
        }
        Command::Colorize {
            checkpoint,
            image,
            palette,
            out: path,
        } => {
            let text = std::fs::read_to_string(&palette).with_context(|| format!("reading {}", palette.display()))?;
            let palette = parse_palette(&text).with_context(|| format!("palette file {}", palette.display()))?;
            let img = image::open(&image)
                .map_err(|e| usage(format!("cannot read image {}: {e}", image.display())))?
                .to_rgb8();
            let model = load_pcn(&checkpoint).with_context(|| format!("loading {}", checkpoint.display()))?;
            let png = encode_png(&colorize_full(&model, &img, &palette)?)?;
            let mut w = create(&path)?;
            w.write_all(&png)?;
            w.flush()?;
            writeln!(out, "wrote {}", path.display())?;
        }
        Command::Evaluate {
            checkpoint,
            data,
            samples,
            seed,
            zero_noise,
            out: path,
        } => {
            let records = load_pat(&data).with_context(|| format!("reading {}", data.display()))?;
            let model = load_tpn(&checkpoint).with_context(|| format!("loading {}", checkpoint.display()))?;
            let report = evaluate(
                &model,
                &records,
                EvalOptions {
                    samples_per_text: samples,
                    seed,
                    zero_noise,
                },
            )?;
            if let Some(p) = path {
                let mut w = create(&p)?;
                write_json(&mut w, &report)?;
                w.flush()?;
            }
            write_json(out, &report)?;
        }
        Command::Serve(args) => {
            let config = args.resolve(|k| std::env::var(k).ok()).map_err(Failure::Usage)?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(crate::api::serve(config))?;
        }
    }
    Ok(())
}

fn report_training(out: &mut dyn Write, history: &History, checkpoint: &Path) -> anyhow::Result<()> {
    write_json(
        out,
        &serde_json::json!({
            "steps": history.steps,
            "epochs": history.epochs.len(),
            "last": history.last(),
            "checkpoint": checkpoint,
        }),
    )
}
