//! Scenario-suite generation, batch evaluation of controllers, reward
//! comparison metrics, and CSV/JSON emission.

mod report;
mod runner;
mod suite;

pub use report::{
    histogram_csv, records_csv, reward_difference_report, RewardDifferenceReport, SweepError,
};
pub use runner::{run_benchmark, ControllerSpec, RunRecord};
pub use suite::{
    filter_fidvr_positive, generate_brake_scenarios, generate_uvls_scenarios, suite_content_hash,
    ScenarioSet,
};
