//! Procedurally generated gridworlds, a Q-learning teacher, and a tabular
//! policy-gradient student that distills from the teacher under cosine
//! gating.
//!
//! The transfer setup: the auxiliary environment contains +5 and +10
//! terminating rewards; the main environment is the same layout with the +10
//! rewards removed (those cells become inert). A teacher trained on the
//! auxiliary environment is useful early and misleading late, which is
//! exactly the regime the gate is meant to handle.

mod grid;
mod policy;
mod qlearn;
mod train;

pub use grid::{
    derive_main, sample_env, Action, Dynamics, EnvPair, GridGenConfig, GridSpec, StepOutcome,
};
pub use policy::{
    distill_gradient, pg_update, run_episode, BaselineGrad, Episode, PgUpdate, SoftmaxPolicy,
};
pub use qlearn::{q_learning, teacher_policy, QLearnConfig, QTable, TeacherPolicy};
pub use train::{
    run_experiment, train, AggregatePoint, EvalPoint, ExperimentResult, GridExperimentConfig,
    TeacherSource, TrainMethod, TrialRecord, TrainerConfig,
};
