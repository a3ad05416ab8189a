//! Experiment drivers and file formats: rig I/O, the three evaluation
//! protocols, CSV results and their summaries, the gradient-check suite,
//! and cross-attention training on generated scenes.

mod experiment;
mod gradcheck_suite;
mod results;
mod rig_io;
mod training;

pub use experiment::{
    run_experiment, run_one_close_view, run_random_views, run_view_sweep, ExperimentConfig, ExperimentOutput,
    Protocol, SceneRig,
};
pub use gradcheck_suite::{run_gradcheck_suite, GradcheckLine};
pub use results::{read_csv, summarize, write_csv, write_summary_csv, ResultRow, SummaryRow, CSV_HEADER};
pub use rig_io::{load_rig, parse_rig, rig_to_json, save_rig};
pub use training::{
    build_training_set, evaluate_weighting, held_out_config, one_hot_example, train_on_scenes, EvalReport, TrainingSetConfig,
};
