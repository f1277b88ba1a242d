//! Environment wiring and the two on-disk configuration files: the
//! simulation settings file and the training settings file. Both are strict
//! TOML: unknown keys are rejected.

use serde::{Deserialize, Serialize};

use crate::net::{builtin, BusId, GridCase, ShuntId};

use super::reward::{RewardCoefficients, VoltageEnvelope};
use super::EnvError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Brake,
    Uvls,
}

/// Fully-resolved environment wiring for one task on one case.
#[derive(Debug, Clone)]
pub struct EnvConfig {
    pub task: TaskKind,
    pub case: GridCase,
    /// Generator buses observed by the braking task (delta and omega each).
    pub monitored_generators: Vec<BusId>,
    /// Buses whose voltage magnitude the shedding task observes.
    pub monitored_buses: Vec<BusId>,
    /// Buses the shedding task controls; their load fractions are observed.
    pub controlled_buses: Vec<BusId>,
    /// The brake shunt device toggled by the braking task.
    pub brake_shunt: ShuntId,
    pub n_r: usize,
    pub agent_dt: f64,
    pub sim_dt: f64,
    pub episode_limit: f64,
    pub rewards: RewardCoefficients,
    /// Default observation noise; scenarios may override.
    pub noise_sigma: f64,
}

impl EnvConfig {
    /// Measurements per frame.
    pub fn n_m(&self) -> usize {
        match self.task {
            TaskKind::Brake => 2 * self.monitored_generators.len(),
            TaskKind::Uvls => self.monitored_buses.len() + self.controlled_buses.len(),
        }
    }

    /// Network input width: measurements times stack depth.
    pub fn n_i(&self) -> usize {
        self.n_m() * self.n_r
    }

    /// Action catalog size.
    pub fn n_o(&self) -> usize {
        match self.task {
            TaskKind::Brake => 2,
            TaskKind::Uvls => 1usize << self.controlled_buses.len(),
        }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let ratio = self.agent_dt / self.sim_dt;
        if (ratio - ratio.round()).abs() > 1e-9 || ratio < 1.0 {
            return Err(EnvError::Config(format!(
                "agent_dt {} must be an integer multiple of sim_dt {}",
                self.agent_dt, self.sim_dt
            )));
        }
        if self.n_r == 0 {
            return Err(EnvError::Config("n_r must be positive".into()));
        }
        if self.noise_sigma < 0.0 {
            return Err(EnvError::Config("noise_sigma must be nonnegative".into()));
        }
        match self.task {
            TaskKind::Brake => {
                if self.monitored_generators.is_empty() {
                    return Err(EnvError::Config(
                        "brake task needs monitored_generators".into(),
                    ));
                }
                for id in &self.monitored_generators {
                    if !self.case.generators.iter().any(|g| g.bus == *id) {
                        return Err(EnvError::Config(format!(
                            "monitored generator bus {id} has no generator"
                        )));
                    }
                }
                if self.case.shunt(self.brake_shunt).is_none() {
                    return Err(EnvError::Config(format!(
                        "brake shunt {} not declared in case",
                        self.brake_shunt.0
                    )));
                }
            }
            TaskKind::Uvls => {
                if self.controlled_buses.is_empty() {
                    return Err(EnvError::Config("uvls task needs controlled_buses".into()));
                }
                for id in self.monitored_buses.iter().chain(&self.controlled_buses) {
                    if self.case.bus_index(*id).is_none() {
                        return Err(EnvError::Config(format!("unknown bus {id} in config")));
                    }
                }
                for id in &self.controlled_buses {
                    let bus = self.case.bus(*id).expect("checked above");
                    if bus.load_p <= 0.0 {
                        return Err(EnvError::Config(format!(
                            "controlled bus {id} carries no load"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// One concrete evaluation episode: case modifiers plus the disturbance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    /// Uniform load scaling factor (1.0 = untouched).
    pub load_scale: f64,
    /// Active-power delta applied to every load bus, p.u.
    pub load_delta: f64,
    /// Generation shift from area 1 to area 2, p.u.
    pub tie_delta: f64,
    /// Stall-parameter scaling of all motor loads.
    pub motor_param_scale: f64,
    pub fault_bus: BusId,
    pub fault_start: f64,
    /// Zero means no fault in the episode.
    pub fault_duration: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Scenario {
    pub fn base(fault_bus: BusId, fault_start: f64, fault_duration: f64, seed: u64) -> Self {
        Self {
            id: format!("bus{}_d{:.3}", fault_bus.0, fault_duration),
            load_scale: 1.0,
            load_delta: 0.0,
            tie_delta: 0.0,
            motor_param_scale: 1.0,
            fault_bus,
            fault_start,
            fault_duration,
            noise_sigma: 0.0,
            seed,
        }
    }
}

/// Per-episode scenario randomization used during training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDistribution {
    pub fault_buses: Vec<BusId>,
    pub fault_start: f64,
    /// Explicit duration choices (may include 0.0 = no fault)...
    pub fault_durations: Vec<f64>,
    /// ...or a continuous range, when non-empty choices are absent.
    pub fault_duration_range: Option<(f64, f64)>,
}

impl ScenarioDistribution {
    pub fn sample(&self, rng: &mut rand_chacha::ChaCha8Rng) -> (BusId, f64, f64) {
        use rand::Rng;
        let bus = self.fault_buses[rng.gen_range(0..self.fault_buses.len())];
        let duration = if !self.fault_durations.is_empty() {
            self.fault_durations[rng.gen_range(0..self.fault_durations.len())]
        } else if let Some((lo, hi)) = self.fault_duration_range {
            rng.gen_range(lo..=hi)
        } else {
            0.0
        };
        (bus, self.fault_start, duration)
    }
}

// ---------------------------------------------------------------------------
// On-disk schemas
// ---------------------------------------------------------------------------

/// Simulation settings file: case, integration, disturbance template, and
/// the comparison-controller sections.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimFileConfig {
    pub simulation: SimSection,
    pub events: EventsSection,
    #[serde(default)]
    pub relay: Option<RelaySection>,
    #[serde(default)]
    pub mpc: Option<MpcSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    /// `builtin:two_area`, `builtin:ieee39`, or a filesystem path.
    pub case: String,
    pub sim_dt: f64,
    pub episode_limit: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventsSection {
    pub fault_start: f64,
    pub fault_buses: Vec<usize>,
    #[serde(default)]
    pub fault_durations: Vec<f64>,
    #[serde(default)]
    pub fault_duration_range: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelaySection {
    pub pickup_threshold: f64,
    pub pickup_delay: f64,
    pub breaker_delay: f64,
    pub block_fraction: f64,
    pub max_blocks: u32,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpcSection {
    pub prediction_horizon: f64,
    pub control_interval: f64,
    pub max_control_moves: usize,
    pub move_spacing: f64,
    pub internal_dt: f64,
    /// Stall-parameter scaling applied to the internal model only.
    pub internal_motor_param_scale: f64,
    /// Planning budget per call, milliseconds; zero disables the limit.
    pub timeout_ms: u64,
}

/// Training settings file: task wiring, reward weights, agent
/// hyperparameters.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainFileConfig {
    pub task: TaskSection,
    #[serde(default)]
    pub reward: RewardSection,
    pub dqn: DqnSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSection {
    pub kind: TaskKind,
    pub n_r: usize,
    pub agent_dt: f64,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub monitored_generators: Vec<usize>,
    #[serde(default)]
    pub monitored_buses: Vec<usize>,
    #[serde(default)]
    pub controlled_buses: Vec<usize>,
    #[serde(default = "default_brake_shunt")]
    pub brake_shunt: usize,
}

fn default_brake_shunt() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardSection {
    #[serde(default = "default_brake_penalty")]
    pub c: f64,
    #[serde(default = "default_c1")]
    pub c1: f64,
    #[serde(default = "default_c2")]
    pub c2: f64,
    #[serde(default = "default_c3")]
    pub c3: f64,
    #[serde(default = "default_envelope_thresholds")]
    pub envelope_thresholds: [f64; 4],
    #[serde(default = "default_envelope_times")]
    pub envelope_times: [f64; 3],
    #[serde(default = "default_terminal_after")]
    pub terminal_after: f64,
}

fn default_brake_penalty() -> f64 {
    2.0
}
fn default_c1() -> f64 {
    260.0
}
fn default_c2() -> f64 {
    150.0
}
fn default_c3() -> f64 {
    3.0
}
fn default_envelope_thresholds() -> [f64; 4] {
    [0.7, 0.8, 0.9, 0.95]
}
fn default_envelope_times() -> [f64; 3] {
    [0.33, 0.5, 1.5]
}
fn default_terminal_after() -> f64 {
    4.0
}

impl Default for RewardSection {
    fn default() -> Self {
        Self {
            c: default_brake_penalty(),
            c1: default_c1(),
            c2: default_c2(),
            c3: default_c3(),
            envelope_thresholds: default_envelope_thresholds(),
            envelope_times: default_envelope_times(),
            terminal_after: default_terminal_after(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DqnSection {
    pub total_steps: usize,
    pub hidden: [usize; 2],
    pub learning_rate: f64,
    pub gamma: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub target_sync: usize,
    pub eps_min: f64,
    pub eps_decay_fraction: f64,
    pub optimizer: String,
    pub seed: u64,
}

impl SimFileConfig {
    pub fn from_str(text: &str) -> Result<Self, EnvError> {
        toml::from_str(text).map_err(|e| EnvError::Config(e.to_string()))
    }

    pub fn from_path(path: &str) -> Result<Self, EnvError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EnvError::Config(format!("{path}: {e}")))?;
        Self::from_str(&text)
    }

    pub fn load_case(&self) -> Result<GridCase, EnvError> {
        builtin::load_case(&self.simulation.case).map_err(EnvError::Net)
    }

    pub fn scenario_distribution(&self) -> ScenarioDistribution {
        ScenarioDistribution {
            fault_buses: self.events.fault_buses.iter().map(|&b| BusId(b)).collect(),
            fault_start: self.events.fault_start,
            fault_durations: self.events.fault_durations.clone(),
            fault_duration_range: self.events.fault_duration_range.map(|[a, b]| (a, b)),
        }
    }
}

impl TrainFileConfig {
    pub fn from_str(text: &str) -> Result<Self, EnvError> {
        toml::from_str(text).map_err(|e| EnvError::Config(e.to_string()))
    }

    pub fn from_path(path: &str) -> Result<Self, EnvError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EnvError::Config(format!("{path}: {e}")))?;
        Self::from_str(&text)
    }
}

/// Assemble the runtime environment wiring from the two files.
pub fn build_env_config(
    sim: &SimFileConfig,
    train: &TrainFileConfig,
) -> Result<EnvConfig, EnvError> {
    let case = sim.load_case()?;
    let rewards = RewardCoefficients {
        brake_penalty: train.reward.c,
        c1: train.reward.c1,
        c2: train.reward.c2,
        c3: train.reward.c3,
        envelope: VoltageEnvelope {
            thresholds: train.reward.envelope_thresholds,
            times: train.reward.envelope_times,
            terminal_after: train.reward.terminal_after,
            terminal_threshold: train.reward.envelope_thresholds[3],
        },
    };
    let config = EnvConfig {
        task: train.task.kind,
        case,
        monitored_generators: train
            .task
            .monitored_generators
            .iter()
            .map(|&b| BusId(b))
            .collect(),
        monitored_buses: train.task.monitored_buses.iter().map(|&b| BusId(b)).collect(),
        controlled_buses: train
            .task
            .controlled_buses
            .iter()
            .map(|&b| BusId(b))
            .collect(),
        brake_shunt: ShuntId(train.task.brake_shunt),
        n_r: train.task.n_r,
        agent_dt: train.task.agent_dt,
        sim_dt: sim.simulation.sim_dt,
        episode_limit: sim.simulation.episode_limit,
        rewards,
        noise_sigma: train.task.noise_sigma,
    };
    config.validate()?;
    Ok(config)
}
