//! Episodic MDP wrapper over the transient simulator: observation assembly
//! with frame stacking, action decoding, the two task rewards, termination
//! logic, and measurement noise.

mod config;
mod reward;
mod stack;

pub use config::{
    build_env_config, DqnSection, EnvConfig, EventsSection, MpcSection, RelaySection, Scenario,
    ScenarioDistribution, SimFileConfig, SimSection, TaskKind, TaskSection, TrainFileConfig,
};
pub use reward::{brake_reward, uvls_reward, RewardCoefficients, VoltageEnvelope, TERMINAL_PENALTY};
pub use stack::{add_observation_noise, push_frame, uniform_action, ObservationStack};

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::net::{
    apply_case_modifier, solve_power_flow, BusId, CaseModifier, GridCase, NetError,
};
use crate::sim::{
    compute_coi, max_coi_deviation, ControlCommand, DynSystem, EventSchedule, SimError,
    SimulationState, TrajectoryRecorder,
};

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("scenario rejected: {0}")]
    ScenarioRejected(String),
    #[error("action {action} out of range (catalog size {n_o})")]
    BadAction { action: usize, n_o: usize },
    #[error("episode is done; reset the environment")]
    EpisodeDone,
    #[error("environment not reset")]
    NotStarted,
    #[error("frame length {got}, expected {expected}")]
    FrameLength { expected: usize, got: usize },
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Net(#[from] NetError),
}

/// Step outcome: next stacked observation (flattened), reward, terminal
/// flag, and side-channel diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepInfo {
    pub time: f64,
    pub invalid_action: bool,
    /// Load shed during this agent interval, p.u.
    pub shed_pu: f64,
    pub synchronism_lost: bool,
    /// Any monitored voltage below the recovery envelope so far.
    pub envelope_violated: bool,
}

/// Minimal environment interface the learning code drives.
pub trait Environment {
    fn observation_len(&self) -> usize;
    fn action_count(&self) -> usize;
    fn reset(&mut self) -> Result<Vec<f64>, EnvError>;
    fn step(&mut self, action: usize) -> Result<StepOutcome, EnvError>;
}

enum EpisodeSource {
    Fixed(Scenario),
    Sampled {
        distribution: ScenarioDistribution,
        rng: ChaCha8Rng,
        counter: u64,
    },
}

/// The grid MDP environment. One instance drives one episode at a time;
/// independent instances are fully isolated.
pub struct GridEnv {
    config: EnvConfig,
    source: EpisodeSource,
    // episode state
    sys: Option<DynSystem>,
    state: Option<SimulationState>,
    schedule: EventSchedule,
    stack: ObservationStack,
    noise_rng: ChaCha8Rng,
    noise_sigma: f64,
    t_pf: Option<f64>,
    done: bool,
    inertias: Vec<f64>,
    /// Load at each controlled bus at episode start, p.u.
    initial_load: BTreeMap<BusId, f64>,
    steps_per_action: usize,
    envelope_ever_violated: bool,
    recorder: Option<TrajectoryRecorder>,
    record_trajectory: bool,
}

impl GridEnv {
    /// Environment bound to one fixed scenario (evaluation mode).
    pub fn with_scenario(config: EnvConfig, scenario: Scenario) -> Result<Self, EnvError> {
        Self::new(config, EpisodeSource::Fixed(scenario))
    }

    /// Environment that samples a fresh scenario at every reset
    /// (training mode).
    pub fn with_distribution(
        config: EnvConfig,
        distribution: ScenarioDistribution,
        seed: u64,
    ) -> Result<Self, EnvError> {
        Self::new(
            config,
            EpisodeSource::Sampled {
                distribution,
                rng: ChaCha8Rng::seed_from_u64(seed),
                counter: 0,
            },
        )
    }

    fn new(config: EnvConfig, source: EpisodeSource) -> Result<Self, EnvError> {
        config.validate()?;
        let ratio = (config.agent_dt / config.sim_dt).round() as usize;
        let stack = ObservationStack::zeros(config.n_m(), config.n_r);
        Ok(Self {
            source,
            sys: None,
            state: None,
            schedule: EventSchedule::empty(),
            stack,
            noise_rng: ChaCha8Rng::seed_from_u64(0),
            noise_sigma: config.noise_sigma,
            t_pf: None,
            done: false,
            inertias: Vec::new(),
            initial_load: BTreeMap::new(),
            steps_per_action: ratio,
            envelope_ever_violated: false,
            recorder: None,
            record_trajectory: false,
            config,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    /// Capture a trajectory sample at every agent step of future episodes.
    pub fn enable_trajectory(&mut self, on: bool) {
        self.record_trajectory = on;
    }

    pub fn take_trajectory(&mut self) -> Option<TrajectoryRecorder> {
        self.recorder.take()
    }

    /// Direct view of the plant state (used by the predictive controller).
    pub fn plant_state(&self) -> Option<&SimulationState> {
        self.state.as_ref()
    }

    pub fn plant_system(&self) -> Option<&DynSystem> {
        self.sys.as_ref()
    }

    pub fn event_schedule(&self) -> &EventSchedule {
        &self.schedule
    }

    pub fn fault_clear_time(&self) -> Option<f64> {
        self.t_pf
    }

    pub fn episode_done(&self) -> bool {
        self.done
    }

    /// Voltage magnitudes at the monitored buses of the shedding task.
    pub fn monitored_voltages(&self) -> Vec<f64> {
        let (Some(sys), Some(state)) = (self.sys.as_ref(), self.state.as_ref()) else {
            return Vec::new();
        };
        self.config
            .monitored_buses
            .iter()
            .map(|b| state.bus_voltages[sys.case().bus_index(*b).unwrap()].norm())
            .collect()
    }

    /// Voltage magnitudes at the controlled buses (relay pickup inputs).
    pub fn controlled_bus_voltages(&self) -> Vec<f64> {
        let (Some(sys), Some(state)) = (self.sys.as_ref(), self.state.as_ref()) else {
            return Vec::new();
        };
        self.config
            .controlled_buses
            .iter()
            .map(|b| state.bus_voltages[sys.case().bus_index(*b).unwrap()].norm())
            .collect()
    }

    /// Begin an episode under the given scenario and return the seeded
    /// observation stack.
    pub fn reset_with_scenario(
        &mut self,
        scenario: &Scenario,
    ) -> Result<ObservationStack, EnvError> {
        let case = apply_scenario_modifiers(&self.config.case, scenario)?;
        let pf = solve_power_flow(&case)?;
        if !pf.converged {
            return Err(EnvError::ScenarioRejected(format!(
                "power flow for scenario {} did not converge (mismatch {:.3e} after {} iterations)",
                scenario.id, pf.max_mismatch, pf.iterations
            )));
        }
        if scenario.fault_duration > 0.0 && case.bus_index(scenario.fault_bus).is_none() {
            return Err(EnvError::ScenarioRejected(format!(
                "fault bus {} does not exist",
                scenario.fault_bus
            )));
        }
        let mut sys = DynSystem::new(&case, self.config.sim_dt)?;
        let state = sys.init_dynamic_state(&pf)?;
        self.schedule = EventSchedule::self_clearing_fault(
            scenario.fault_bus,
            scenario.fault_start,
            scenario.fault_duration,
        );
        self.t_pf = (scenario.fault_duration > 0.0)
            .then(|| scenario.fault_start + scenario.fault_duration);
        self.noise_rng = ChaCha8Rng::seed_from_u64(scenario.seed);
        self.noise_sigma = scenario.noise_sigma.max(self.config.noise_sigma);
        self.inertias = sys.inertias().to_vec();
        self.initial_load = self
            .config
            .controlled_buses
            .iter()
            .map(|b| (*b, case.bus(*b).unwrap().load_p))
            .collect();
        self.envelope_ever_violated = false;
        self.done = false;
        self.recorder = self.record_trajectory.then(|| {
            let mut r = TrajectoryRecorder::new(&case);
            r.sample(&state);
            r
        });
        self.stack = ObservationStack::zeros(self.config.n_m(), self.config.n_r);
        self.sys = Some(sys);
        self.state = Some(state);
        let frame = self.observe();
        self.stack = push_frame(&self.stack, frame)?;
        Ok(self.stack.clone())
    }

    fn observe(&mut self) -> Vec<f64> {
        let sys = self.sys.as_ref().expect("episode started");
        let state = self.state.as_ref().expect("episode started");
        let mut frame = Vec::with_capacity(self.config.n_m());
        match self.config.task {
            TaskKind::Brake => {
                let (coi_delta, _) =
                    compute_coi(&state.generators, &self.inertias).expect("generators exist");
                for bus in &self.config.monitored_generators {
                    let k = sys
                        .case()
                        .generators
                        .iter()
                        .position(|g| g.bus == *bus)
                        .expect("validated");
                    frame.push(state.generators[k].delta - coi_delta);
                    frame.push(state.generators[k].omega);
                }
            }
            TaskKind::Uvls => {
                for bus in &self.config.monitored_buses {
                    let i = sys.case().bus_index(*bus).expect("validated");
                    frame.push(state.bus_voltages[i].norm());
                }
                for bus in &self.config.controlled_buses {
                    frame.push(
                        state
                            .remaining_load_fraction
                            .get(bus)
                            .copied()
                            .unwrap_or(1.0),
                    );
                }
            }
        }
        if self.noise_sigma > 0.0 {
            frame = add_observation_noise(&frame, self.noise_sigma, &mut self.noise_rng);
        }
        frame
    }

    /// Decode and apply `action`, advance one agent interval, and score it.
    pub fn step_action(&mut self, action: usize) -> Result<StepOutcome, EnvError> {
        if self.done {
            return Err(EnvError::EpisodeDone);
        }
        let n_o = self.config.n_o();
        if action >= n_o {
            return Err(EnvError::BadAction { action, n_o });
        }
        let mut sys = self.sys.take().ok_or(EnvError::NotStarted)?;
        let mut state = self.state.take().ok_or(EnvError::NotStarted)?;

        let mut invalid = false;
        let mut shed_pu = 0.0;
        let mut braking = false;
        let mut first_cmd = ControlCommand::none();
        match self.config.task {
            TaskKind::Brake => {
                braking = action == 1;
                first_cmd = ControlCommand::shunt(self.config.brake_shunt, braking);
            }
            TaskKind::Uvls => {
                for (bit, bus) in self.config.controlled_buses.iter().enumerate() {
                    if action & (1 << bit) != 0 {
                        let before = state.remaining_load_fraction[bus];
                        let (next, inv) = sys.shed_load(&state, *bus, 1)?;
                        state = next;
                        invalid |= inv;
                        let after = state.remaining_load_fraction[bus];
                        shed_pu += (before - after) * self.initial_load[bus];
                    }
                }
            }
        }

        for k in 0..self.steps_per_action {
            let cmd = if k == 0 {
                first_cmd.clone()
            } else {
                ControlCommand::none()
            };
            match sys.step_simulation(state, &self.schedule, &cmd, self.config.sim_dt) {
                Ok(next) => state = next,
                Err(e) => {
                    self.done = true;
                    return Err(EnvError::Sim(e));
                }
            }
            if state.synchronism_lost {
                break;
            }
        }

        let t = state.time;
        let mut done = t >= self.config.episode_limit - 1e-9 || state.synchronism_lost;
        let reward = match self.config.task {
            TaskKind::Brake => {
                if state.synchronism_lost {
                    TERMINAL_PENALTY
                } else {
                    let (_, omega_coi) = compute_coi(&state.generators, &self.inertias)?;
                    let dev = max_coi_deviation(&state.generators, &self.inertias)?;
                    brake_reward(omega_coi, dev, braking, self.config.rewards.brake_penalty)
                }
            }
            TaskKind::Uvls => {
                let voltages: Vec<f64> = self
                    .config
                    .monitored_buses
                    .iter()
                    .map(|b| state.bus_voltages[sys.case().bus_index(*b).unwrap()].norm())
                    .collect();
                let (r, terminal) = uvls_reward(
                    &voltages,
                    shed_pu,
                    invalid,
                    t,
                    self.t_pf,
                    &self.config.rewards,
                );
                if let Some(t_pf) = self.t_pf {
                    if voltages
                        .iter()
                        .any(|&v| self.config.rewards.envelope.deficit(v, t, t_pf) < 0.0)
                    {
                        self.envelope_ever_violated = true;
                    }
                }
                done |= terminal;
                r
            }
        };

        self.sys = Some(sys);
        self.state = Some(state.clone());
        let frame = self.observe();
        self.stack = push_frame(&self.stack, frame)?;
        if let Some(rec) = self.recorder.as_mut() {
            rec.sample(&state);
        }
        let info = StepInfo {
            time: t,
            invalid_action: invalid,
            shed_pu,
            synchronism_lost: state.synchronism_lost,
            envelope_violated: self.envelope_ever_violated,
        };
        self.done = done;
        Ok(StepOutcome {
            observation: self.stack.flatten(),
            reward,
            done,
            info,
        })
    }
}

impl Environment for GridEnv {
    fn observation_len(&self) -> usize {
        self.config.n_i()
    }

    fn action_count(&self) -> usize {
        self.config.n_o()
    }

    fn reset(&mut self) -> Result<Vec<f64>, EnvError> {
        let scenario = match &mut self.source {
            EpisodeSource::Fixed(s) => s.clone(),
            EpisodeSource::Sampled {
                distribution,
                rng,
                counter,
            } => {
                let (bus, start, duration) = distribution.sample(rng);
                *counter += 1;
                let mut s = Scenario::base(bus, start, duration, *counter);
                s.id = format!("train_{counter}");
                s
            }
        };
        let stack = self.reset_with_scenario(&scenario)?;
        Ok(stack.flatten())
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome, EnvError> {
        self.step_action(action)
    }
}

/// Apply a scenario's case modifiers in a fixed order.
pub fn apply_scenario_modifiers(
    case: &GridCase,
    scenario: &Scenario,
) -> Result<GridCase, EnvError> {
    let mut out = case.clone();
    if scenario.load_scale != 1.0 {
        out = apply_case_modifier(
            &out,
            &CaseModifier::LoadScale {
                factor: scenario.load_scale,
            },
        )?;
    }
    if scenario.load_delta != 0.0 {
        let buses = out.load_buses();
        out = apply_case_modifier(
            &out,
            &CaseModifier::LoadDelta {
                buses,
                delta_p: scenario.load_delta,
            },
        )?;
    }
    if scenario.tie_delta != 0.0 {
        out = apply_case_modifier(
            &out,
            &CaseModifier::TieFlowDelta {
                from_area: 1,
                to_area: 2,
                delta_p: scenario.tie_delta,
            },
        )?;
    }
    if scenario.motor_param_scale != 1.0 {
        out = apply_case_modifier(
            &out,
            &CaseModifier::MotorParamScale {
                factor: scenario.motor_param_scale,
            },
        )?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
