//! Task reward functions.

use serde::{Deserialize, Serialize};

/// Penalty returned when the episode reaches a terminal violation: loss of
/// synchronism for the braking task, stalled voltage recovery for the
/// shedding task.
pub const TERMINAL_PENALTY: f64 = -1000.0;

/// Staged minimum-voltage recovery envelope after fault clearance, plus the
/// terminal recovery deadline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoltageEnvelope {
    /// Minimum acceptable voltage in each window, p.u.
    pub thresholds: [f64; 4],
    /// Window boundaries after fault clearance, seconds.
    pub times: [f64; 3],
    /// Terminal check delay after fault clearance, seconds.
    pub terminal_after: f64,
    /// Terminal minimum voltage, p.u.
    pub terminal_threshold: f64,
}

impl Default for VoltageEnvelope {
    fn default() -> Self {
        Self {
            thresholds: [0.7, 0.8, 0.9, 0.95],
            times: [0.33, 0.5, 1.5],
            terminal_after: 4.0,
            terminal_threshold: 0.95,
        }
    }
}

impl VoltageEnvelope {
    /// Sub-envelope voltage deficit of one bus at `t` given fault clearance
    /// at `t_pf`; zero before clearance and while above the envelope.
    /// Windows are half-open on the left: (t_pf + a, t_pf + b].
    pub fn deficit(&self, v: f64, t: f64, t_pf: f64) -> f64 {
        let dt = t - t_pf;
        if dt <= 0.0 {
            return 0.0;
        }
        let threshold = if dt <= self.times[0] {
            self.thresholds[0]
        } else if dt <= self.times[1] {
            self.thresholds[1]
        } else if dt <= self.times[2] {
            self.thresholds[2]
        } else {
            self.thresholds[3]
        };
        (v - threshold).min(0.0)
    }
}

/// Reward weights for both tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardCoefficients {
    /// Brake usage penalty factor.
    pub brake_penalty: f64,
    /// Voltage-deficit weight.
    pub c1: f64,
    /// Shed-amount weight.
    pub c2: f64,
    /// Invalid-action weight.
    pub c3: f64,
    pub envelope: VoltageEnvelope,
}

impl Default for RewardCoefficients {
    fn default() -> Self {
        Self {
            brake_penalty: 2.0,
            c1: 260.0,
            c2: 150.0,
            c3: 3.0,
            envelope: VoltageEnvelope::default(),
        }
    }
}

/// Braking-task step reward: -|mean speed| - c*u while the system holds
/// together, a flat terminal penalty once any machine swings past pi.
pub fn brake_reward(omega_avg: f64, delta_avg: f64, braking: bool, c: f64) -> f64 {
    if delta_avg.abs() <= std::f64::consts::PI {
        -omega_avg.abs() - c * (braking as u8 as f64)
    } else {
        TERMINAL_PENALTY
    }
}

/// Shedding-task step reward at time `t`.
///
/// `shed_pu` is the load shed during the current agent interval only, in
/// p.u.; `t_pf` is the fault clearance instant (`None` while no fault has
/// been scheduled: recovery windows never open). Returns the reward and
/// whether the terminal branch fired.
pub fn uvls_reward(
    monitored_voltages: &[f64],
    shed_pu: f64,
    invalid: bool,
    t: f64,
    t_pf: Option<f64>,
    coeffs: &RewardCoefficients,
) -> (f64, bool) {
    if let Some(t_pf) = t_pf {
        let dt = t - t_pf;
        if dt > coeffs.envelope.terminal_after
            && monitored_voltages
                .iter()
                .any(|&v| v < coeffs.envelope.terminal_threshold)
        {
            return (TERMINAL_PENALTY, true);
        }
        let deficit: f64 = monitored_voltages
            .iter()
            .map(|&v| coeffs.envelope.deficit(v, t, t_pf))
            .sum();
        (
            coeffs.c1 * deficit - coeffs.c2 * shed_pu - coeffs.c3 * (invalid as u8 as f64),
            false,
        )
    } else {
        (
            -coeffs.c2 * shed_pu - coeffs.c3 * (invalid as u8 as f64),
            false,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brake_reward_examples() {
        // quiescent
        assert_eq!(brake_reward(0.0, 0.0, false, 2.0), 0.0);
        // braking with a small speed excursion
        let r = brake_reward(-0.002, 0.5, true, 2.0);
        assert!((r - (-2.002)).abs() < 1e-15);
        // beyond pi: flat terminal penalty
        assert_eq!(brake_reward(0.01, 3.2, false, 2.0), -1000.0);
        // boundary: exactly pi stays on the healthy branch
        let r = brake_reward(0.0, std::f64::consts::PI, false, 2.0);
        assert_eq!(r, 0.0);
    }

    #[test]
    fn uvls_reward_worked_example() {
        // one bus at 0.65 in the first window, 0.2 p.u. shed:
        // 260 * (0.65 - 0.7) - 150 * 0.2 = -13 - 30 = -43
        let coeffs = RewardCoefficients::default();
        let (r, done) = uvls_reward(&[0.65], 0.2, false, 1.2, Some(1.0), &coeffs);
        assert!((r - (-43.0)).abs() < 1e-12);
        assert!(!done);
    }

    #[test]
    fn uvls_healthy_bus_is_free() {
        let coeffs = RewardCoefficients::default();
        let (r, done) = uvls_reward(&[1.0, 1.0, 1.0], 0.0, false, 3.0, Some(1.0), &coeffs);
        assert_eq!(r, 0.0);
        assert!(!done);
    }

    #[test]
    fn uvls_terminal_branch() {
        let coeffs = RewardCoefficients::default();
        // V = 0.94 at t = t_pf + 4.1
        let (r, done) = uvls_reward(&[0.94], 0.0, false, 5.1, Some(1.0), &coeffs);
        assert_eq!(r, -1000.0);
        assert!(done);
        // at exactly t_pf + 4 the terminal check is not yet armed
        let (r, done) = uvls_reward(&[0.94], 0.0, false, 5.0, Some(1.0), &coeffs);
        assert!(r > -1000.0);
        assert!(!done);
    }

    #[test]
    fn uvls_window_boundaries_are_left_open() {
        let coeffs = RewardCoefficients::default();
        let env = &coeffs.envelope;
        // v = 0.75: in window 1 (threshold 0.7) no deficit; in window 2
        // (threshold 0.8) deficit -0.05. Boundary t_pf+0.33 belongs to
        // window 1 (t_pf = 0 keeps the boundary exactly representable).
        assert_eq!(env.deficit(0.75, 0.33, 0.0), 0.0);
        assert!((env.deficit(0.75, 0.331, 0.0) + 0.05).abs() < 1e-12);
        // boundary t_pf+0.5 belongs to window 2, t_pf+1.5 to window 3
        assert!((env.deficit(0.85, 0.5, 0.0) - 0.0).abs() < 1e-12);
        assert!((env.deficit(0.85, 0.501, 0.0) + 0.05).abs() < 1e-12);
        assert!((env.deficit(0.92, 1.5, 0.0) - 0.0).abs() < 1e-12);
        assert!((env.deficit(0.92, 1.501, 0.0) + 0.03).abs() < 1e-12);
        // before clearance nothing accrues
        assert_eq!(env.deficit(0.2, -0.1, 0.0), 0.0);
    }

    #[test]
    fn uvls_before_clearance_only_costs_apply() {
        let coeffs = RewardCoefficients::default();
        let (r, _) = uvls_reward(&[0.1, 0.1], 0.2, true, 1.0, Some(1.0), &coeffs);
        assert!((r - (-150.0 * 0.2 - 3.0)).abs() < 1e-12);
    }

    #[test]
    fn uvls_no_fault_never_terminates() {
        let coeffs = RewardCoefficients::default();
        let (r, done) = uvls_reward(&[0.5], 0.0, false, 100.0, None, &coeffs);
        assert_eq!(r, 0.0);
        assert!(!done);
    }

    #[test]
    fn uvls_reward_linear_in_weights() {
        let base = RewardCoefficients::default();
        let inputs = ([0.6, 0.85], 0.4, true, 2.0, Some(1.0));
        let (r1, _) = uvls_reward(&inputs.0, inputs.1, inputs.2, inputs.3, inputs.4, &base);
        let mut doubled = base.clone();
        doubled.c1 *= 2.0;
        doubled.c2 *= 2.0;
        doubled.c3 *= 2.0;
        let (r2, _) = uvls_reward(&inputs.0, inputs.1, inputs.2, inputs.3, inputs.4, &doubled);
        assert!((r2 - 2.0 * r1).abs() < 1e-9);
    }
}
