use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vidspeech::nn::EpochRecord;
use vidspeech::pipeline::{
    cmd_eval, cmd_gen, cmd_predict, cmd_split, cmd_sweep, cmd_synth, cmd_train, loss_log_path, parse_holdout,
    ExperimentGrid, RunConfig, SplitMode,
};
use vidspeech::vision::CropRegion;
use vidspeech::{Error, Result};

/// Silent-video-to-speech: LPC/LSP codec, CNN training and resynthesis.
#[derive(Parser)]
#[command(name = "vidspeech", version)]
struct Cli {
    /// Suppress per-epoch progress on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic audiovisual corpus.
    Gen {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        sequences: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write into a non-empty directory.
        #[arg(long)]
        force: bool,
    },
    /// Write a train/test split plan.
    Split {
        #[arg(long)]
        manifest: PathBuf,
        /// random_80_20 or oov_digits
        #[arg(long, default_value = "random_80_20")]
        mode: SplitMode,
        /// Two held-out digits for oov mode, e.g. 9,0
        #[arg(long, value_parser = parse_holdout)]
        holdout: Option<[u8; 2]>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model on the train partition of a plan.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        split: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "full_face")]
        crop: CropRegion,
        /// key = value training config
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Loss CSV (default: next to the model)
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Predict sound features for a directory of frames.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        frames: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "full_face")]
        crop: CropRegion,
        #[arg(long)]
        out: PathBuf,
    },
    /// Resynthesize a WAV from a feature CSV.
    Synth {
        #[arg(long)]
        features: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train and score one model per (K, crop) cell.
    Sweep {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        split: PathBuf,
        #[arg(long, default_value = "k=1,3,5,7,9;crop=full_face,mouth")]
        grid: ExperimentGrid,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a model on the test partition of a plan.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        split: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn config(path: &Option<PathBuf>) -> Result<RunConfig> {
    path.as_ref().map_or_else(|| Ok(RunConfig::default()), RunConfig::load)
}

fn epoch_line(quiet: bool, prefix: &str, r: &EpochRecord) {
    if !quiet {
        eprintln!(
            "{prefix}epoch {:4}  train {:.5}  val {:.5}  {:.1}s",
            r.epoch, r.train_mse, r.val_mse, r.elapsed_s
        );
    }
}

fn run(cli: Cli) -> Result<()> {
    let quiet = cli.quiet;
    match cli.command {
        Command::Gen { out, sequences, seed, force } => {
            println!("{}", cmd_gen(&out, sequences, seed, force)?.display());
        }
        Command::Split { manifest, mode, holdout, seed, out } => {
            let plan = cmd_split(&manifest, mode, holdout, seed, &out)?;
            println!("{}: {} train / {} test", out.display(), plan.train.len(), plan.test.len());
        }
        Command::Train { manifest, split, k, crop, config: cfg, out, log } => {
            let cfg = config(&cfg)?;
            let log = log.unwrap_or_else(|| loss_log_path(&out));
            let m = cmd_train(&manifest, &split, k, crop, &cfg, &out, &log, &mut |r| epoch_line(quiet, "", r))?;
            println!(
                "{}: best epoch {} of {}, val {:.5}",
                out.display(),
                m.best_epoch,
                m.history.len(),
                m.history[m.best_epoch - 1].val_mse
            );
        }
        Command::Predict { model, frames, k, crop, out } => {
            let n = cmd_predict(&model, &frames, k, crop, &out)?;
            println!("{}: {n} rows", out.display());
        }
        Command::Synth { features, seed, out } => {
            let audio = cmd_synth(&features, seed, &out)?;
            println!("{}: {:.2} s", out.display(), audio.duration_secs());
        }
        Command::Sweep { manifest, split, grid, config: cfg, out } => {
            let cfg = config(&cfg)?;
            let cells = cmd_sweep(&manifest, &split, &grid, &cfg, &out, &mut |k, crop, r| {
                epoch_line(quiet, &format!("[k={k} {crop}] "), r)
            })?;
            for c in &cells {
                println!(
                    "k={} crop={} test_mse={:.5} epochs={} (fit sequences {})",
                    c.k,
                    c.crop,
                    c.test.std_mse,
                    c.epochs,
                    c.fit_ids.join(",")
                );
            }
        }
        Command::Eval { model, manifest, split, out } => {
            let r = cmd_eval(&model, &manifest, &split, &out)?;
            println!(
                "std_mse {:.5} (mean predictor {:.5})  lsp_mae {:.4} rad  gain_mae {:.4}",
                r.overall.std_mse, r.mean_predictor.std_mse, r.overall.lsp_mae, r.overall.gain_mae
            );
        }
    }
    Ok(())
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("V2S_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidArgument(format!("V2S_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match init_threads().and_then(|()| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
