//! Experiment configuration, seeding, CSV/JSON emission, experiment runners,
//! and the high-dimensional cosine study.

pub mod config;
pub mod csvio;
pub mod highdim;
pub mod rng;
pub mod run;
pub mod runrecord;
pub mod toy;

pub use config::{
    parse_config, parse_config_str, ExperimentConfig, ExperimentKind, HighdimConfig, MnistRunConfig,
    Prop3Config, ToyConfig,
};
pub use csvio::{emit_csv, format_float, ColumnType, Schema, Value};
pub use highdim::{corrupted_cosine_stats, random_cosine_stats, CosineStats};
pub use rng::{child_rng, ExperimentRng};
pub use runrecord::RunRecord;
