//! Two-parameter aggregated motor load: stall on sustained undervoltage,
//! then a linear thermal trip.

use serde::{Deserialize, Serialize};

use crate::net::MotorParams;

/// State of one aggregated motor load. The three fractions partition the
/// motor population and always sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotorLoadState {
    pub run_fraction: f64,
    pub stalled_fraction: f64,
    pub tripped_fraction: f64,
    /// Continuous time spent below the stall voltage, seconds.
    pub stall_timer: f64,
    /// Accumulated thermal stress of the stalled population, in units of
    /// trip times.
    pub thermal_accumulator: f64,
    pub params: MotorParams,
}

impl MotorLoadState {
    pub fn running(params: MotorParams) -> Self {
        Self {
            run_fraction: 1.0,
            stalled_fraction: 0.0,
            tripped_fraction: 0.0,
            stall_timer: 0.0,
            thermal_accumulator: 0.0,
            params,
        }
    }
}

/// Advance one motor load by `dt` under terminal voltage magnitude `v`.
///
/// Undervoltage below `v_stall` accumulates the stall timer (reset above).
/// Once the timer reaches `t_stall` the entire running population stalls.
/// A stalled population transfers linearly to tripped over `t_trip`; the
/// trip transfer uses the populations present at the start of the call, so
/// the stall instant itself leaves the stalled fraction whole.
pub fn motor_transition(motor: &MotorLoadState, v: f64, dt: f64) -> MotorLoadState {
    let mut next = motor.clone();

    if next.stalled_fraction > 0.0 {
        next.thermal_accumulator += dt / next.params.t_trip;
        let transfer = (dt / next.params.t_trip).min(next.stalled_fraction);
        next.stalled_fraction -= transfer;
        next.tripped_fraction += transfer;
    }

    if v < next.params.v_stall {
        next.stall_timer += dt;
    } else {
        next.stall_timer = 0.0;
    }
    if next.stall_timer >= next.params.t_stall && next.run_fraction > 0.0 {
        next.stalled_fraction += next.run_fraction;
        next.run_fraction = 0.0;
    }

    let sum = next.run_fraction + next.stalled_fraction + next.tripped_fraction;
    next.run_fraction /= sum;
    next.stalled_fraction /= sum;
    next.tripped_fraction /= sum;
    next
}
