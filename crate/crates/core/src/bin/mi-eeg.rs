use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use mi_eeg::data::{import_csv, read_dataset, write_dataset, CLASS_NAMES};
use mi_eeg::dsp::{bandpower, write_bandpower_csv};
use mi_eeg::eval::{compare, evaluate, CompareConfig, FittedModel, Method, Metrics};
use mi_eeg::synth::{generate_dataset, GeneratorParams};
use mi_eeg::TrainConfig;

/// Motor-imagery EEG: synthesize, import, train, evaluate and compare decoders.
#[derive(Parser)]
#[command(name = "mi-eeg", version)]
struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic session and write the epoched dataset.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        n_per_class: usize,
        /// Generator parameters as JSON.
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Import one CSV per epoch plus an index.csv of labels.
    ImportCsv {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        fs: f64,
        #[arg(long)]
        out: PathBuf,
        /// Class names in label order.
        #[arg(long, value_delimiter = ',', default_values_t = CLASS_NAMES.map(String::from))]
        classes: Vec<String>,
    },
    /// Fit one model on a whole dataset.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: Method,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        epochs: usize,
        #[arg(long, default_value_t = 32)]
        batch: usize,
    },
    /// Score a model file on a dataset and write metrics.json.
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model_file: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-validate several models on synthetic subjects.
    Compare {
        #[arg(long, default_value_t = 8)]
        subjects: usize,
        #[arg(long, value_delimiter = ',', default_value = "bfr,shallow,fbcsp")]
        models: Vec<Method>,
        #[arg(long, default_value_t = 5)]
        cv: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        epochs: usize,
        #[arg(long, default_value_t = 32)]
        batch: usize,
        #[arg(long, default_value_t = 50)]
        n_per_class: usize,
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Per-channel band power averaged over epochs.
    Bandpower {
        #[arg(long)]
        data: PathBuf,
        /// Low and high edge in Hz, e.g. `8,12`.
        #[arg(long, value_delimiter = ',', required = true)]
        band: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Only epochs of this class.
        #[arg(long)]
        class: Option<String>,
    },
}

fn load_params(path: Option<&Path>) -> Result<GeneratorParams> {
    let Some(path) = path else {
        return Ok(GeneratorParams::default());
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("--params {}", path.display()))?;
    let params: GeneratorParams =
        serde_json::from_str(&text).with_context(|| format!("--params {}", path.display()))?;
    params.validate().with_context(|| format!("--params {}", path.display()))?;
    Ok(params)
}

fn train_config(epochs: usize, batch: usize, seed: u64) -> Result<TrainConfig> {
    let cfg = TrainConfig {
        epochs,
        batch_size: batch,
        rng_seed: seed,
        ..TrainConfig::default()
    };
    cfg.validate().context("--epochs/--batch")?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth {
            out,
            seed,
            n_per_class,
            params,
        } => {
            let params = load_params(params.as_deref())?;
            let s = generate_dataset(n_per_class, &params, seed, 1)?;
            let provenance = json!({ "generator": params, "seed": seed, "n_per_class": n_per_class });
            write_dataset(&s.dataset, &out, provenance).with_context(|| format!("--out {}", out.display()))?;
            println!("{} epochs written to {}", s.dataset.len(), out.display());
        }
        Command::ImportCsv {
            input,
            fs,
            out,
            classes,
        } => {
            let imported = import_csv(&input, fs, &classes).with_context(|| format!("--in {}", input.display()))?;
            for w in &imported.warnings {
                log::warn!("{w}");
            }
            let provenance = json!({ "import": input.display().to_string() });
            write_dataset(&imported.dataset, &out, provenance).with_context(|| format!("--out {}", out.display()))?;
            println!("{} epochs written to {}", imported.dataset.len(), out.display());
        }
        Command::Train {
            data,
            model,
            seed,
            out,
            epochs,
            batch,
        } => {
            let (ds, _) = read_dataset(&data).with_context(|| format!("--data {}", data.display()))?;
            let cfg = train_config(epochs, batch, seed)?;
            let fitted = model.fit(&ds, &cfg, seed)?;
            fitted.save(&out).with_context(|| format!("--out {}", out.display()))?;
            println!("{model} trained on {} epochs, saved to {}", ds.len(), out.display());
        }
        Command::Eval { data, model_file, out } => {
            let (ds, _) = read_dataset(&data).with_context(|| format!("--data {}", data.display()))?;
            let model =
                FittedModel::load(&model_file).with_context(|| format!("--model-file {}", model_file.display()))?;
            let ev = evaluate(&model, &ds)?;
            Metrics {
                model: model.method().to_string(),
                dataset: data.display().to_string(),
                folds: 1,
                accuracy_mean: ev.accuracy,
                accuracy_per_fold: vec![ev.accuracy],
                confusion: ev.confusion.counts,
            }
            .write(&out)
            .with_context(|| format!("--out {}", out.display()))?;
            println!("accuracy {:.4}", ev.accuracy);
        }
        Command::Compare {
            subjects,
            models,
            cv,
            seed,
            out,
            epochs,
            batch,
            n_per_class,
            params,
        } => {
            if subjects == 0 {
                bail!("--subjects must be at least 1");
            }
            let params = load_params(params.as_deref())?;
            let cfg = CompareConfig {
                methods: models,
                cv,
                n_per_class,
                train: train_config(epochs, batch, seed)?,
                ..CompareConfig::synthetic(subjects, seed, &params)
            };
            let result = compare(&cfg)?;
            result.write(&out).with_context(|| format!("--out {}", out.display()))?;
            print!("{}", result.table.to_text());
        }
        Command::Bandpower {
            data,
            band,
            out,
            class,
        } => {
            let &[lo, hi] = band.as_slice() else {
                bail!("--band takes two edges, e.g. 8,12");
            };
            let (ds, _) = read_dataset(&data).with_context(|| format!("--data {}", data.display()))?;
            let wanted = match &class {
                Some(name) => Some(
                    ds.class_names()
                        .iter()
                        .position(|c| c == name)
                        .with_context(|| format!("--class {name} is not in the dataset"))?,
                ),
                None => None,
            };
            let mut sum = vec![0.0; ds.n_channels()];
            let mut n = 0usize;
            for i in (0..ds.len()).filter(|&i| wanted.is_none_or(|k| ds.labels()[i] == k)) {
                let p = bandpower(&ds.epoch_rows(i), ds.fs(), (lo, hi)).context("--band")?;
                sum.iter_mut().zip(p).for_each(|(s, v)| *s += v);
                n += 1;
            }
            if n == 0 {
                bail!("no epochs selected from --data {}", data.display());
            }
            let mean: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
            write_bandpower_csv(&out, ds.channel_names(), &mean).with_context(|| format!("--out {}", out.display()))?;
            println!("band power over {n} epochs written to {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            eprintln!("{}", msg.lines().next().unwrap_or("invalid arguments"));
            return ExitCode::from(2);
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let chain: Vec<String> = e.chain().map(|c| c.to_string()).collect();
            eprintln!("error: {}", chain.join(": "));
            ExitCode::FAILURE
        }
    }
}
