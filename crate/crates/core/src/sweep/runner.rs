//! Batch evaluation: every (controller, scenario) pair runs in an isolated
//! environment; faults are captured per record, never aborting the sweep.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent::{greedy_action, mlp_forward, MlpParameters, QTable};
use crate::baseline::{relay_step, MpcConfig, MpcController, RelayConfig, RelayState};
use crate::env::{
    apply_scenario_modifiers, EnvConfig, EnvError, GridEnv, MpcSection, Scenario, TaskKind,
};
use crate::net::CaseModifier;
use crate::sim::{compute_coi, max_coi_deviation};

use super::suite::ScenarioSet;

/// Controller under evaluation. Each variant carries everything needed to
/// instantiate a fresh, isolated controller per scenario.
#[derive(Debug, Clone)]
pub enum ControllerSpec {
    /// Takes action 0 at every step.
    Noop,
    /// Greedy policy over a trained value network.
    Dqn { params: MlpParameters },
    /// Per-bus undervoltage relay on the controlled-bus voltages.
    Relay { config: RelayConfig },
    /// Receding-horizon predictive controller; the internal model is the
    /// scenario case with `internal_motor_param_scale` applied.
    Mpc { section: MpcSection },
    /// Greedy policy over a tabular value function on (angle, speed).
    TabularQ { table: QTable },
}

impl ControllerSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ControllerSpec::Noop => "noop",
            ControllerSpec::Dqn { .. } => "dqn",
            ControllerSpec::Relay { .. } => "relay",
            ControllerSpec::Mpc { .. } => "mpc",
            ControllerSpec::TabularQ { .. } => "qtable",
        }
    }
}

/// Outcome of one (controller, scenario) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario_id: String,
    pub controller_id: String,
    /// Episode reward; exactly negative infinity for aborted runs.
    pub total_reward: f64,
    pub stable: bool,
    pub envelope_violated: bool,
    /// Shed totals in MW per controlled bus id.
    pub shed_mw: BTreeMap<usize, f64>,
    /// Mean wall-clock decision latency, seconds (planning calls only for
    /// the predictive controller).
    pub mean_decision_latency: f64,
    pub steps: usize,
    pub error: Option<String>,
}

impl RunRecord {
    fn aborted(scenario_id: &str, controller_id: &str, error: String) -> Self {
        Self {
            scenario_id: scenario_id.to_string(),
            controller_id: controller_id.to_string(),
            total_reward: f64::NEG_INFINITY,
            stable: false,
            envelope_violated: false,
            shed_mw: BTreeMap::new(),
            mean_decision_latency: 0.0,
            steps: 0,
            error: Some(error),
        }
    }
}

/// Evaluate every controller on every scenario. Results are independent of
/// `parallelism` and of execution order, except for the measured wall-clock
/// latency fields.
pub fn run_benchmark(
    controllers: &[(String, ControllerSpec)],
    scenarios: &ScenarioSet,
    env_config: &EnvConfig,
    parallelism: usize,
) -> Vec<RunRecord> {
    let pairs: Vec<(usize, usize)> = (0..controllers.len())
        .flat_map(|c| (0..scenarios.len()).map(move |s| (c, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| {
        pairs
            .par_iter()
            .map(|&(c, s)| {
                let (name, spec) = &controllers[c];
                run_one(name, spec, &scenarios.scenarios[s], env_config)
            })
            .collect()
    })
}

/// Run a single (controller, scenario) pair in a fresh environment.
pub fn run_one(
    controller_id: &str,
    spec: &ControllerSpec,
    scenario: &Scenario,
    env_config: &EnvConfig,
) -> RunRecord {
    match run_one_inner(controller_id, spec, scenario, env_config) {
        Ok(record) => record,
        Err(e) => RunRecord::aborted(&scenario.id, controller_id, e.to_string()),
    }
}

enum ControllerState {
    Noop,
    Dqn(MlpParameters),
    Relay(RelayConfig, RelayState),
    Mpc(Box<MpcController>),
    TabularQ(QTable),
}

fn run_one_inner(
    controller_id: &str,
    spec: &ControllerSpec,
    scenario: &Scenario,
    env_config: &EnvConfig,
) -> Result<RunRecord, EnvError> {
    let mut env = GridEnv::with_scenario(env_config.clone(), scenario.clone())?;
    let mut observation = env.reset_with_scenario(scenario)?.flatten();

    let mut controller = match spec {
        ControllerSpec::Noop => ControllerState::Noop,
        ControllerSpec::Dqn { params } => ControllerState::Dqn(params.clone()),
        ControllerSpec::Relay { config } => ControllerState::Relay(
            config.clone(),
            RelayState::new(env_config.controlled_buses.len()),
        ),
        ControllerSpec::Mpc { section } => {
            let scenario_case = apply_scenario_modifiers(&env_config.case, scenario)?;
            let internal_case = if section.internal_motor_param_scale != 1.0 {
                crate::net::apply_case_modifier(
                    &scenario_case,
                    &CaseModifier::MotorParamScale {
                        factor: section.internal_motor_param_scale,
                    },
                )?
            } else {
                scenario_case
            };
            let config = MpcConfig {
                prediction_horizon: section.prediction_horizon,
                control_interval: section.control_interval,
                replan_interval: section.move_spacing,
                max_control_moves: section.max_control_moves,
                move_spacing: section.move_spacing,
                internal_dt: section.internal_dt,
                reward_interval: env_config.agent_dt,
                objective: env_config.rewards.clone(),
                timeout: (section.timeout_ms > 0)
                    .then(|| std::time::Duration::from_millis(section.timeout_ms)),
                controlled_buses: env_config.controlled_buses.clone(),
                monitored_buses: env_config.monitored_buses.clone(),
            };
            let controller = MpcController::new(config, &internal_case)
                .map_err(|e| EnvError::Config(e.to_string()))?;
            ControllerState::Mpc(Box::new(controller))
        }
        ControllerSpec::TabularQ { table } => ControllerState::TabularQ(table.clone()),
    };

    let mut total_reward = 0.0;
    let mut steps = 0usize;
    let mut latency_sum = 0.0;
    let mut latency_count = 0usize;
    let mut last_info = crate::env::StepInfo::default();

    loop {
        let action = match &mut controller {
            ControllerState::Noop => 0,
            ControllerState::Dqn(params) => {
                let started = Instant::now();
                let q = mlp_forward(params, &observation)
                    .map_err(|e| EnvError::Config(e.to_string()))?;
                let a = greedy_action(&q);
                latency_sum += started.elapsed().as_secs_f64();
                latency_count += 1;
                a
            }
            ControllerState::Relay(config, state) => {
                let voltages = env.controlled_bus_voltages();
                let commands = relay_step(&voltages, state, config, env_config.agent_dt);
                commands
                    .iter()
                    .enumerate()
                    .fold(0usize, |acc, (bit, &blocks)| {
                        if blocks > 0 {
                            acc | (1 << bit)
                        } else {
                            acc
                        }
                    })
            }
            ControllerState::Mpc(controller) => {
                let state = env.plant_state().expect("episode running").clone();
                let t_pf = env.fault_clear_time();
                let now = state.time;
                let (action, diag) = controller
                    .mpc_controller_step(&state, t_pf, now)
                    .map_err(|e| EnvError::Config(e.to_string()))?;
                if diag.planned {
                    latency_sum += diag.planning_time.as_secs_f64();
                    latency_count += 1;
                }
                action
            }
            ControllerState::TabularQ(table) => {
                let state = env.plant_state().expect("episode running");
                let sys = env.plant_system().expect("episode running");
                let (_, omega) = compute_coi(&state.generators, sys.inertias())
                    .map_err(EnvError::Sim)?;
                let dev =
                    max_coi_deviation(&state.generators, sys.inertias()).map_err(EnvError::Sim)?;
                table.greedy(table.cell(dev, omega))
            }
        };

        match env.step_action(action) {
            Ok(out) => {
                total_reward += out.reward;
                steps += 1;
                observation = out.observation;
                last_info = out.info;
                if out.done {
                    break;
                }
            }
            Err(EnvError::Sim(e)) => {
                return Ok(RunRecord::aborted(
                    &scenario.id,
                    controller_id,
                    e.to_string(),
                ));
            }
            Err(e) => return Err(e),
        }
    }

    let shed_mw = {
        let case = apply_scenario_modifiers(&env_config.case, scenario)?;
        let state = env.plant_state().expect("episode ran");
        env_config
            .controlled_buses
            .iter()
            .map(|b| {
                let initial = case.bus(*b).map(|bus| bus.load_p).unwrap_or(0.0);
                let remaining = state
                    .remaining_load_fraction
                    .get(b)
                    .copied()
                    .unwrap_or(1.0);
                (b.0, (1.0 - remaining) * initial * case.base_mva)
            })
            .collect()
    };

    Ok(RunRecord {
        scenario_id: scenario.id.clone(),
        controller_id: controller_id.to_string(),
        total_reward,
        stable: !last_info.synchronism_lost,
        envelope_violated: last_info.envelope_violated,
        shed_mw,
        mean_decision_latency: if latency_count > 0 {
            latency_sum / latency_count as f64
        } else {
            0.0
        },
        steps,
        error: None,
    })
}

impl std::fmt::Display for TaskKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TaskKind::Brake => write!(f, "brake"),
            TaskKind::Uvls => write!(f, "uvls"),
        }
    }
}
