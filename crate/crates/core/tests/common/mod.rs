//! Shared fixtures for integration tests: deterministic toy MDPs and a
//! value-iteration oracle.

use gridemc::env::{EnvError, Environment, StepInfo, StepOutcome};

/// Deterministic chain MDP: states 0..n-1, action 1 moves right, action 0
/// moves left (clamped). Reaching the last state pays +1 and ends the
/// episode; every step costs 0.01. Episodes cap at `horizon` steps.
pub struct ChainMdp {
    pub n: usize,
    pub horizon: usize,
    state: usize,
    steps: usize,
    done: bool,
}

impl ChainMdp {
    pub fn new(n: usize, horizon: usize) -> Self {
        Self {
            n,
            horizon,
            state: 0,
            steps: 0,
            done: true,
        }
    }

    pub fn encode(&self, state: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.n];
        v[state] = 1.0;
        v
    }

    pub fn states(&self) -> usize {
        self.n
    }

    /// Exact Q* by value iteration over the episodic chain.
    pub fn value_iteration(&self, gamma: f64) -> Vec<[f64; 2]> {
        let n = self.n;
        let mut q = vec![[0.0_f64; 2]; n];
        for _ in 0..10_000 {
            let mut next = q.clone();
            for s in 0..n - 1 {
                for (a, q_sa) in [(0usize, 0.0), (1, 0.0)].iter().enumerate().map(|(a, _)| {
                    let target = if a == 1 { s + 1 } else { s.saturating_sub(1) };
                    let (reward, terminal) = if target == n - 1 {
                        (1.0 - 0.01, true)
                    } else {
                        (-0.01, false)
                    };
                    let boot = if terminal {
                        0.0
                    } else {
                        q[target][0].max(q[target][1])
                    };
                    (a, reward + gamma * boot)
                }) {
                    next[s][a] = q_sa;
                }
            }
            let delta: f64 = (0..n)
                .map(|s| {
                    (next[s][0] - q[s][0])
                        .abs()
                        .max((next[s][1] - q[s][1]).abs())
                })
                .fold(0.0, f64::max);
            q = next;
            if delta < 1e-12 {
                break;
            }
        }
        q
    }
}

impl Environment for ChainMdp {
    fn observation_len(&self) -> usize {
        self.n
    }

    fn action_count(&self) -> usize {
        2
    }

    fn reset(&mut self) -> Result<Vec<f64>, EnvError> {
        self.state = 0;
        self.steps = 0;
        self.done = false;
        Ok(self.encode(0))
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome, EnvError> {
        if self.done {
            return Err(EnvError::EpisodeDone);
        }
        if action > 1 {
            return Err(EnvError::BadAction {
                action,
                n_o: 2,
            });
        }
        self.steps += 1;
        self.state = if action == 1 {
            (self.state + 1).min(self.n - 1)
        } else {
            self.state.saturating_sub(1)
        };
        let mut reward = -0.01;
        let mut done = self.steps >= self.horizon;
        if self.state == self.n - 1 {
            reward += 1.0;
            done = true;
        }
        self.done = done;
        Ok(StepOutcome {
            observation: self.encode(self.state),
            reward,
            done,
            info: StepInfo::default(),
        })
    }
}

/// Two-state environment where action 0 always pays +1 and action 1 pays
/// zero; episodes last 8 steps.
pub struct BanditLike {
    state: usize,
    steps: usize,
    done: bool,
}

impl BanditLike {
    pub fn new() -> Self {
        Self {
            state: 0,
            steps: 0,
            done: true,
        }
    }

    fn encode(&self) -> Vec<f64> {
        let mut v = vec![0.0; 2];
        v[self.state] = 1.0;
        v
    }
}

impl Environment for BanditLike {
    fn observation_len(&self) -> usize {
        2
    }

    fn action_count(&self) -> usize {
        2
    }

    fn reset(&mut self) -> Result<Vec<f64>, EnvError> {
        self.state = 0;
        self.steps = 0;
        self.done = false;
        Ok(self.encode())
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome, EnvError> {
        if self.done {
            return Err(EnvError::EpisodeDone);
        }
        self.steps += 1;
        self.state = 1 - self.state;
        let reward = if action == 0 { 1.0 } else { 0.0 };
        let done = self.steps >= 8;
        self.done = done;
        Ok(StepOutcome {
            observation: self.encode(),
            reward,
            done,
            info: StepInfo::default(),
        })
    }
}
