//! Static network model: case data, admittance matrix assembly, AC power
//! flow initialization, and scenario-level case modification.
//!
//! Everything here is a value type; operations are pure functions, so cases
//! and solutions can be shared freely across concurrent sweep tasks.

mod case;
mod modifier;
mod parser;
mod powerflow;
mod ybus;

pub mod builtin;

pub use case::{
    Branch, Bus, BusId, BusKind, Generator, GridCase, MotorLoad, MotorParams, ShuntDevice,
    ShuntId, ShuntKind,
};
pub use modifier::{apply_case_modifier, CaseModifier};
pub use parser::parse_case;
pub use powerflow::{solve_power_flow, PowerFlowSolution, PF_ITERATION_LIMIT, PF_TOLERANCE};
pub use ybus::{build_admittance_matrix, AdmittanceMatrix};

use thiserror::Error;

/// Structural errors raised by network-model operations.
#[derive(Debug, Error)]
pub enum NetError {
    #[error("case file line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("unknown section keyword `{0}`")]
    UnknownSection(String),
    #[error("duplicate bus id {0}")]
    DuplicateBus(usize),
    #[error("reference to unknown bus id {0}")]
    UnknownBus(usize),
    #[error("reference to unknown shunt id {0}")]
    UnknownShunt(usize),
    #[error("expected exactly one slack bus, found {0}")]
    SlackCount(usize),
    #[error("branch {from}-{to} has zero series impedance")]
    ZeroImpedance { from: usize, to: usize },
    #[error("bus {bus}: {reason}")]
    BadBusData { bus: usize, reason: String },
    #[error("network is not connected (bus {0} unreachable from slack)")]
    Disconnected(usize),
    #[error("modifier would drive load at bus {bus} negative ({value} p.u.)")]
    NegativeLoad { bus: usize, value: f64 },
    #[error("modifier references empty generator area {0}")]
    EmptyArea(u32),
    #[error("case i/o: {0}")]
    Io(#[from] std::io::Error),
}
