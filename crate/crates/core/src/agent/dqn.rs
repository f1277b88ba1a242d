//! Q-learning on the value network: targets, loss, action selection, and
//! the training loop.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::env::{Environment, EnvError};

use super::mlp::{mlp_forward, mlp_forward_batch, mlp_backward, MlpGradients, MlpParameters};
use super::optimizer::{optimizer_step, Optimizer, OptimizerKind};
use super::replay::{replay_add, replay_sample, ReplayBuffer, Transition};
use super::AgentError;

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub total_steps: usize,
    pub hidden: (usize, usize),
    pub learning_rate: f64,
    pub gamma: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Target network refresh period, in agent steps.
    pub target_sync: usize,
    pub eps_min: f64,
    pub eps_decay_steps: usize,
    pub optimizer: OptimizerKind,
    pub seed: u64,
    /// Episodes averaged for the checkpoint criterion.
    pub moving_average_window: usize,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(AgentError::BadConfig("gamma must be in [0, 1]".into()));
        }
        if !(self.eps_min > 0.0 && self.eps_min <= 1.0) {
            return Err(AgentError::BadConfig("eps_min must be in (0, 1]".into()));
        }
        if self.batch_size == 0 || self.buffer_capacity == 0 || self.target_sync == 0 {
            return Err(AgentError::BadConfig("counts must be positive".into()));
        }
        Ok(())
    }
}

/// Linear exploration schedule: 1.0 at step zero down to `eps_min` at
/// `eps_decay_steps`, constant afterwards.
pub fn epsilon_at(step: usize, config: &TrainConfig) -> f64 {
    if config.eps_decay_steps == 0 || step >= config.eps_decay_steps {
        return config.eps_min;
    }
    let frac = step as f64 / config.eps_decay_steps as f64;
    1.0 + (config.eps_min - 1.0) * frac
}

/// Epsilon-greedy action: uniform with probability epsilon, otherwise the
/// argmax Q with ties broken toward the lowest index.
pub fn select_action(
    params: &MlpParameters,
    observation: &[f64],
    epsilon: f64,
    n_actions: usize,
    rng: &mut ChaCha8Rng,
) -> Result<usize, AgentError> {
    let explore: f64 = rng.gen();
    if explore < epsilon {
        return Ok(rng.gen_range(0..n_actions));
    }
    let q = mlp_forward(params, observation)?;
    Ok(greedy_action(&q))
}

pub fn greedy_action(q: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in q.iter().enumerate().skip(1) {
        if v > q[best] {
            best = i;
        }
    }
    best
}

/// Temporal-difference targets and the mean-squared-error gradient over a
/// batch. Terminal transitions bootstrap nothing; targets are constants
/// with respect to the online parameters.
pub fn dqn_loss_and_gradient(
    params: &MlpParameters,
    target_params: &MlpParameters,
    batch: &[&Transition],
    gamma: f64,
) -> Result<(f64, MlpGradients), AgentError> {
    if batch.is_empty() {
        return Err(AgentError::BadConfig("empty batch".into()));
    }
    let n = batch.len();
    let n_i = params.w1.ncols();
    let x = DMatrix::from_fn(n_i, n, |r, c| batch[c].state[r]);
    let x_next = DMatrix::from_fn(n_i, n, |r, c| batch[c].next_state[r]);

    let next_trace = mlp_forward_batch(target_params, x_next);
    let trace = mlp_forward_batch(params, x);

    let mut targets = Vec::with_capacity(n);
    for (c, tr) in batch.iter().enumerate() {
        let y = if tr.done {
            tr.reward
        } else {
            let col = next_trace.q.column(c);
            let max_next = col.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            tr.reward + gamma * max_next
        };
        targets.push(y);
    }

    let mut loss = 0.0;
    let mut dl_dq = DMatrix::zeros(trace.q.nrows(), n);
    for (c, tr) in batch.iter().enumerate() {
        let predicted = trace.q[(tr.action, c)];
        let err = targets[c] - predicted;
        loss += err * err;
        // d/dq of (1/n) sum (y - q)^2
        dl_dq[(tr.action, c)] = -2.0 * err / n as f64;
    }
    loss /= n as f64;
    if !loss.is_finite() {
        return Err(AgentError::TrainingFault(format!(
            "non-finite loss over batch of {n}"
        )));
    }
    let grads = mlp_backward(params, &trace, &dl_dq);
    if !grads.is_finite() {
        return Err(AgentError::TrainingFault("non-finite gradient".into()));
    }
    Ok((loss, grads))
}

/// One row of the training log.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLogRow {
    pub episode: usize,
    pub end_step: usize,
    pub reward: f64,
    pub moving_average: f64,
}

/// Outcome of a training run. When the environment faults mid-training the
/// run ends early with `aborted` set, preserving the log and checkpoints.
#[derive(Debug, Clone)]
pub struct TrainRun {
    pub best_params: MlpParameters,
    pub final_params: MlpParameters,
    pub log: Vec<EpisodeLogRow>,
    pub steps_completed: usize,
    pub aborted: Option<String>,
}

/// Deep Q-learning: epsilon-greedy interaction, uniform replay, periodic
/// target sync, per-step minibatch updates, and best-moving-average
/// checkpointing.
pub fn train_dqn<E: Environment>(env: &mut E, config: &TrainConfig) -> Result<TrainRun, AgentError> {
    config.validate()?;
    let n_i = env.observation_len();
    let n_o = env.action_count();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = MlpParameters::init(n_i, config.hidden.0, config.hidden.1, n_o, &mut rng);
    let mut target = params.clone();
    let mut optimizer = Optimizer::new(config.optimizer, config.learning_rate);
    let mut buffer = ReplayBuffer::new(config.buffer_capacity);

    let mut log: Vec<EpisodeLogRow> = Vec::new();
    let mut best_params = params.clone();
    let mut best_avg = f64::NEG_INFINITY;
    let mut recent: Vec<f64> = Vec::new();

    if config.total_steps == 0 {
        return Ok(TrainRun {
            best_params,
            final_params: params,
            log,
            steps_completed: 0,
            aborted: None,
        });
    }

    let mut finish =
        |aborted: Option<String>,
         steps: usize,
         params: MlpParameters,
         best: MlpParameters,
         log: Vec<EpisodeLogRow>| TrainRun {
            best_params: best,
            final_params: params,
            log,
            steps_completed: steps,
            aborted,
        };

    let mut obs = match env.reset() {
        Ok(o) => o,
        Err(e) => return Err(AgentError::Env(e.to_string())),
    };
    let mut episode_reward = 0.0;
    let mut episode = 0usize;

    for step in 0..config.total_steps {
        let eps = epsilon_at(step, config);
        let action = select_action(&params, &obs, eps, n_o, &mut rng)?;
        let outcome = match env.step(action) {
            Ok(o) => o,
            Err(EnvError::Sim(e)) => {
                // environment fault: stop training, keep what we have
                return Ok(finish(
                    Some(e.to_string()),
                    step,
                    params,
                    best_params,
                    log,
                ));
            }
            Err(e) => return Err(AgentError::Env(e.to_string())),
        };
        replay_add(
            &mut buffer,
            Transition {
                state: obs,
                action,
                reward: outcome.reward,
                next_state: outcome.observation.clone(),
                done: outcome.done,
            },
        );
        episode_reward += outcome.reward;
        obs = outcome.observation;

        if outcome.done {
            episode += 1;
            recent.push(episode_reward);
            let window = config.moving_average_window.max(1);
            let tail = &recent[recent.len().saturating_sub(window)..];
            let avg = tail.iter().sum::<f64>() / tail.len() as f64;
            log.push(EpisodeLogRow {
                episode,
                end_step: step + 1,
                reward: episode_reward,
                moving_average: avg,
            });
            if recent.len() >= 20.min(window) && avg > best_avg {
                best_avg = avg;
                best_params = params.clone();
            }
            episode_reward = 0.0;
            obs = match env.reset() {
                Ok(o) => o,
                Err(e) => {
                    return Ok(finish(
                        Some(e.to_string()),
                        step + 1,
                        params,
                        best_params,
                        log,
                    ))
                }
            };
        }

        if buffer.len() >= config.batch_size {
            let batch = replay_sample(&buffer, config.batch_size, &mut rng)?;
            let (_loss, grads) = dqn_loss_and_gradient(&params, &target, &batch, config.gamma)?;
            params = optimizer_step(&params, &grads, &mut optimizer);
        }

        if (step + 1) % config.target_sync == 0 {
            target = params.clone();
        }
    }

    if best_avg == f64::NEG_INFINITY {
        best_params = params.clone();
    }
    Ok(TrainRun {
        best_params,
        final_params: params,
        log,
        steps_completed: config.total_steps,
        aborted: None,
    })
}

/// Write the training log as CSV: episode, steps, reward, moving_average.
pub fn write_log_csv<W: std::io::Write>(
    log: &[EpisodeLogRow],
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "episode,steps,reward,moving_average")?;
    for row in log {
        writeln!(
            out,
            "{},{},{},{}",
            row.episode, row.end_step, row.reward, row.moving_average
        )?;
    }
    Ok(())
}
