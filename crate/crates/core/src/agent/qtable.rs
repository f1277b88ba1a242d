//! Tabular Q-learning baseline on a discretized (angle, speed) pseudo-state.

use serde::{Deserialize, Serialize};

/// Fixed rectangular grid over the COI-referenced maximum angle deviation
/// and the COI speed, clamped at the edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    pub delta_bins: usize,
    pub omega_bins: usize,
    pub delta_range: (f64, f64),
    pub omega_range: (f64, f64),
    pub n_actions: usize,
    /// Row-major [cell][action] values.
    pub values: Vec<f64>,
}

impl QTable {
    pub fn new(delta_bins: usize, omega_bins: usize, n_actions: usize) -> Self {
        Self {
            delta_bins,
            omega_bins,
            delta_range: (-std::f64::consts::PI, std::f64::consts::PI),
            omega_range: (-0.05, 0.05),
            n_actions,
            values: vec![0.0; delta_bins * omega_bins * n_actions],
        }
    }

    fn axis_bin(x: f64, range: (f64, f64), bins: usize) -> usize {
        let t = (x - range.0) / (range.1 - range.0);
        ((t * bins as f64).floor() as isize).clamp(0, bins as isize - 1) as usize
    }

    /// Grid cell index of a pseudo-state, clamped at the edges.
    pub fn cell(&self, delta: f64, omega: f64) -> usize {
        let di = Self::axis_bin(delta, self.delta_range, self.delta_bins);
        let wi = Self::axis_bin(omega, self.omega_range, self.omega_bins);
        di * self.omega_bins + wi
    }

    pub fn q(&self, cell: usize, action: usize) -> f64 {
        self.values[cell * self.n_actions + action]
    }

    pub fn q_mut(&mut self, cell: usize, action: usize) -> &mut f64 {
        &mut self.values[cell * self.n_actions + action]
    }

    pub fn greedy(&self, cell: usize) -> usize {
        let mut best = 0;
        for a in 1..self.n_actions {
            if self.q(cell, a) > self.q(cell, best) {
                best = a;
            }
        }
        best
    }

    pub fn max_q(&self, cell: usize) -> f64 {
        (0..self.n_actions)
            .map(|a| self.q(cell, a))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// One temporal-difference update:
/// Q(s,a) += eta * (r + gamma * max_a' Q(s',a') - Q(s,a)).
pub fn tabular_q_update(
    table: &QTable,
    state_cell: usize,
    action: usize,
    reward: f64,
    next_cell: usize,
    eta: f64,
    gamma: f64,
) -> QTable {
    let mut next = table.clone();
    let bootstrap = next.max_q(next_cell);
    let q = next.q_mut(state_cell, action);
    *q += eta * (reward + gamma * bootstrap - *q);
    next
}
