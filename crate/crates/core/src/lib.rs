//! Desk-scale power grid emergency control testbed.
//!
//! The crate is organized around a pipeline: a static network model with an
//! AC power flow ([`net`]), a fixed-step transient simulator ([`sim`]), an
//! episodic MDP wrapper over the simulator ([`env`]), learning agents
//! ([`agent`]), non-learning comparison controllers ([`baseline`]), a
//! scenario sweep harness ([`sweep`]), and a line-delimited protocol server
//! that exposes the environment to external processes ([`bridge`]).

pub mod agent;
pub mod baseline;
pub mod bridge;
pub mod env;
pub mod net;
pub mod sim;
pub mod sweep;

pub use net::{AdmittanceMatrix, CaseModifier, GridCase, PowerFlowSolution};
pub use sim::{EventSchedule, SimulationState};
