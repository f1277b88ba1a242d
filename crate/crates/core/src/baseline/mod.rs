//! Non-learning comparison controllers: the step-wise undervoltage relay
//! and the receding-horizon predictive shedding controller.

mod mpc;
mod relay;

pub use mpc::{ActionPlan, MpcConfig, MpcController, PlanDiagnostics};
pub use relay::{relay_step, RelayConfig, RelayState};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("internal model: {0}")]
    InternalModel(String),
    #[error(transparent)]
    Net(#[from] crate::net::NetError),
    #[error(transparent)]
    Sim(#[from] crate::sim::SimError),
}
