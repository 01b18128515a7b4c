//! Orchestration: corpus generation, splits, training runs, prediction,
//! resynthesis, evaluation and the context-length/crop sweep. Each
//! `cmd_*` function backs one CLI subcommand.

mod commands;
mod config;
mod dataset;
mod experiment;
mod split;

pub use commands::{cmd_eval, cmd_gen, cmd_predict, cmd_split, cmd_sweep, cmd_synth, cmd_train, loss_log_path};
pub use config::RunConfig;
pub use dataset::{carve_validation, fit_standardizer, load_sequence, load_sequences, ClipDataset, Sequence};
pub use experiment::{
    check_context, evaluate, metrics, predict_sequence, run_sweep, sweep_csv, train_from_sequences, write_loss_csv,
    EvalReport, ExperimentGrid, Metrics, SweepCell, TrainedModel,
};
pub use split::{parse_holdout, SplitMode, SplitPlan, OOV_PAIRS, PLAN_HEADER};
