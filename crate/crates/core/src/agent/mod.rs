//! Learning agents: the value-network Q-learner of the platform and a
//! tabular Q-learning baseline.

mod checkpoint;
mod dqn;
mod mlp;
mod optimizer;
mod qtable;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use dqn::{
    dqn_loss_and_gradient, epsilon_at, greedy_action, select_action, train_dqn, write_log_csv,
    EpisodeLogRow, TrainConfig, TrainRun,
};
pub use mlp::{mlp_forward, mlp_forward_batch, mlp_backward, ForwardTrace, MlpGradients, MlpParameters};
pub use optimizer::{optimizer_step, Optimizer, OptimizerKind};
pub use qtable::{tabular_q_update, QTable};
pub use replay::{replay_add, replay_sample, ReplayBuffer, Transition};

mod replay;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("input length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite input")]
    NonFiniteInput,
    #[error("replay buffer holds {have} transitions, need {need}")]
    BufferUnderfilled { have: usize, need: usize },
    #[error("training fault: {0}")]
    TrainingFault(String),
    #[error("bad configuration: {0}")]
    BadConfig(String),
    #[error("environment: {0}")]
    Env(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}
