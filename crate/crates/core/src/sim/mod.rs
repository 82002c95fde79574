//! Kinematic field follower used to check that the guidance field is
//! followable: agent model, control step, rollouts, metrics.

pub mod agent;
pub mod dilemma;
pub mod evaluate;
pub mod follower;
pub mod rollout;
pub mod trace;

use thiserror::Error;

pub use agent::{derive_parts, AgentModel, AgentState, FollowerGains, PartSpec};
pub use dilemma::{dilemma_scenario, dilemma_start, DILEMMA_AXIS_Y};
pub use evaluate::{evaluate, summarize, EvalSummary, SceneEval, TrialOutcome};
pub use follower::{step_follower, step_with_queries, weighted_queries, Weighting};
pub use rollout::{
    check_collision, clearance, rollout_on_grid, rollout_with_field, run_rollout, step_reward, RolloutConfig,
    RolloutResult, Termination, TraceStep,
};
pub use trace::{parse_trace, parse_trace_line, write_trace, PartRecord, TraceRecord};

use crate::field::FieldError;
use crate::scene::SceneError;
use crate::vmf::VmfError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Vmf(#[from] VmfError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed trace: {0}")]
    Trace(String),
}
