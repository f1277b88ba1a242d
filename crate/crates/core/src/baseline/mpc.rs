//! Receding-horizon predictive shedding controller. The discrete program
//! is solved by depth-first enumeration over per-bus shed decisions at
//! spaced control instants, with dominance pruning: every reward term is
//! nonpositive, so a prefix whose accumulated reward cannot reach the
//! incumbent is cut.

use std::time::{Duration, Instant};

use crate::env::{uvls_reward, RewardCoefficients};
use crate::net::{solve_power_flow, BusId, GridCase};
use crate::sim::{ControlCommand, DynSystem, EventSchedule, SimulationState};

use super::BaselineError;

#[derive(Debug, Clone)]
pub struct MpcConfig {
    /// Lookahead length, seconds.
    pub prediction_horizon: f64,
    /// Cadence at which the controller is consulted, seconds.
    pub control_interval: f64,
    /// Cadence at which the search re-runs; between re-plans the stored
    /// plan is replayed.
    pub replan_interval: f64,
    pub max_control_moves: usize,
    /// Spacing between planned move instants, seconds.
    pub move_spacing: f64,
    /// Internal-model integration step, seconds.
    pub internal_dt: f64,
    /// Reward evaluation cadence inside rollouts, seconds.
    pub reward_interval: f64,
    pub objective: RewardCoefficients,
    /// Planning wall-clock budget; None disables the limit.
    pub timeout: Option<Duration>,
    pub controlled_buses: Vec<BusId>,
    pub monitored_buses: Vec<BusId>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanDiagnostics {
    /// Whether the search ran on this call (vs. replaying the stored plan).
    pub planned: bool,
    pub planning_time: Duration,
    pub timed_out: bool,
}

/// A planned action sequence: one action per move instant, the first being
/// immediate.
pub type ActionPlan = Vec<usize>;

#[derive(Debug, Clone, PartialEq)]
struct Candidate {
    score: f64,
    total_shed: f64,
    plan: ActionPlan,
}

impl Candidate {
    /// Ordering: higher score, then less shedding, then lexicographically
    /// earlier plan.
    fn beats(&self, other: &Candidate) -> bool {
        if self.score != other.score {
            return self.score > other.score;
        }
        if self.total_shed != other.total_shed {
            return self.total_shed < other.total_shed;
        }
        self.plan < other.plan
    }
}

/// Predictive controller bound to one internal model. The internal model's
/// motor parameters may deliberately differ from the plant's.
pub struct MpcController {
    pub config: MpcConfig,
    system: DynSystem,
    internal_params: Vec<crate::net::MotorParams>,
    initial_load: Vec<f64>,
    stored_plan: ActionPlan,
    stored_plan_time: f64,
    last_plan_time: Option<f64>,
}

impl MpcController {
    pub fn new(config: MpcConfig, internal_case: &GridCase) -> Result<Self, BaselineError> {
        let pf = solve_power_flow(internal_case)?;
        if !pf.converged {
            return Err(BaselineError::InternalModel(
                "internal model power flow did not converge".into(),
            ));
        }
        let mut system = DynSystem::new(internal_case, config.internal_dt)?;
        // pins the load conversion point; the state itself is discarded
        let _ = system.init_dynamic_state(&pf)?;
        let internal_params = internal_case
            .motor_loads
            .iter()
            .map(|m| m.params.clone())
            .collect();
        let initial_load = config
            .controlled_buses
            .iter()
            .map(|b| internal_case.bus(*b).map(|bus| bus.load_p).unwrap_or(0.0))
            .collect();
        Ok(Self {
            config,
            system,
            internal_params,
            initial_load,
            stored_plan: Vec::new(),
            stored_plan_time: 0.0,
            last_plan_time: None,
        })
    }

    /// Translate an observed plant state into the internal model's belief:
    /// identical electrical state, the internal model's motor parameters.
    fn import_state(&self, plant: &SimulationState) -> SimulationState {
        let mut state = plant.clone();
        for (motor, params) in state.motors.iter_mut().zip(&self.internal_params) {
            motor.params = params.clone();
        }
        state
    }

    /// Full search from `plant_state`. Returns the best action sequence.
    pub fn mpc_plan(
        &mut self,
        plant_state: &SimulationState,
        t_pf: Option<f64>,
    ) -> Result<(ActionPlan, bool), BaselineError> {
        let deadline = self.config.timeout.map(|d| Instant::now() + d);
        let state = self.import_state(plant_state);
        let n_actions = 1usize << self.config.controlled_buses.len();

        // candidate actions ordered cheap-first so pruning bites early
        let mut order: Vec<usize> = (0..n_actions).collect();
        order.sort_by_key(|a| (a.count_ones(), *a));

        let mut best: Option<Candidate> = None;
        let mut timed_out = false;
        let mut prefix = Vec::with_capacity(self.config.max_control_moves);
        self.search(
            &state,
            t_pf,
            0,
            0.0,
            0.0,
            &mut prefix,
            &order,
            &mut best,
            deadline,
            &mut timed_out,
        );
        match best {
            Some(c) if !timed_out => Ok((c.plan, false)),
            _ => Ok((vec![0; self.config.max_control_moves], timed_out)),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn search(
        &mut self,
        state: &SimulationState,
        t_pf: Option<f64>,
        depth: usize,
        reward_so_far: f64,
        shed_so_far: f64,
        prefix: &mut ActionPlan,
        order: &[usize],
        best: &mut Option<Candidate>,
        deadline: Option<Instant>,
        timed_out: &mut bool,
    ) {
        if *timed_out {
            return;
        }
        if let Some(d) = deadline {
            if Instant::now() > d {
                *timed_out = true;
                return;
            }
        }
        if depth == self.config.max_control_moves {
            // tail rollout to the horizon end
            let remaining = self.config.prediction_horizon
                - self.config.move_spacing * (self.config.max_control_moves - 1) as f64;
            let candidate = match self.rollout(state.clone(), t_pf, None, remaining.max(0.0)) {
                Ok((reward, _)) => Candidate {
                    score: reward_so_far + reward,
                    total_shed: shed_so_far,
                    plan: prefix.clone(),
                },
                Err(_) => Candidate {
                    score: f64::NEG_INFINITY,
                    total_shed: shed_so_far,
                    plan: prefix.clone(),
                },
            };
            let take = best.as_ref().map(|b| candidate.beats(b)).unwrap_or(true);
            if take {
                *best = Some(candidate);
            }
            return;
        }

        for &action in order {
            // optimistic bound: future terms are never positive
            if let Some(b) = best.as_ref() {
                if reward_so_far < b.score
                    || (reward_so_far == b.score && shed_so_far > b.total_shed)
                {
                    // this prefix already lost; deeper prefixes only shrink
                    break;
                }
            }
            let mut node = state.clone();
            let mut invalid = false;
            let mut shed_pu = 0.0;
            for (bit, bus) in self.config.controlled_buses.iter().enumerate() {
                if action & (1 << bit) != 0 {
                    let before = node.remaining_load_fraction[bus];
                    match self.system.shed_load(&node, *bus, 1) {
                        Ok((next, inv)) => {
                            node = next;
                            invalid |= inv;
                            let after = node.remaining_load_fraction[bus];
                            shed_pu += (before - after) * self.initial_load[bit];
                        }
                        Err(_) => {
                            invalid = true;
                        }
                    }
                }
            }
            prefix.push(action);
            let segment = if depth + 1 == self.config.max_control_moves {
                // the tail rollout handles the remainder
                0.0
            } else {
                self.config.move_spacing
            };
            if segment > 0.0 {
                match self.rollout(node, t_pf, Some((shed_pu, invalid)), segment) {
                    Ok((reward, end_state)) => {
                        self.search(
                            &end_state,
                            t_pf,
                            depth + 1,
                            reward_so_far + reward,
                            shed_so_far + shed_pu,
                            prefix,
                            order,
                            best,
                            deadline,
                            timed_out,
                        );
                    }
                    Err(_) => {
                        let candidate = Candidate {
                            score: f64::NEG_INFINITY,
                            total_shed: shed_so_far + shed_pu,
                            plan: prefix.clone(),
                        };
                        if best.is_none() {
                            *best = Some(candidate);
                        }
                    }
                }
            } else {
                // last move: costs of this move feed the tail rollout
                let node_reward = self.move_cost(shed_pu, invalid);
                self.search(
                    &node,
                    t_pf,
                    depth + 1,
                    reward_so_far + node_reward,
                    shed_so_far + shed_pu,
                    prefix,
                    order,
                    best,
                    deadline,
                    timed_out,
                );
            }
            prefix.pop();
            if *timed_out {
                return;
            }
        }
    }

    fn move_cost(&self, shed_pu: f64, invalid: bool) -> f64 {
        -self.config.objective.c2 * shed_pu - self.config.objective.c3 * (invalid as u8 as f64)
    }

    /// Simulate `span` seconds, accumulating the objective at the reward
    /// cadence. Move costs attach to the first reward sample.
    fn rollout(
        &mut self,
        mut state: SimulationState,
        t_pf: Option<f64>,
        move_costs: Option<(f64, bool)>,
        span: f64,
    ) -> Result<(f64, SimulationState), BaselineError> {
        let dt = self.config.internal_dt;
        let chunk_steps = (self.config.reward_interval / dt).round().max(1.0) as usize;
        let total_steps = (span / dt).round() as usize;
        let schedule = EventSchedule::empty();
        let mut reward = 0.0;
        let mut first_chunk = true;
        let mut step_in_chunk = 0;
        for _ in 0..total_steps {
            state = self
                .system
                .step_simulation(state, &schedule, &ControlCommand::none(), dt)
                .map_err(|e| BaselineError::InternalModel(e.to_string()))?;
            step_in_chunk += 1;
            if step_in_chunk == chunk_steps {
                step_in_chunk = 0;
                let voltages: Vec<f64> = self
                    .config
                    .monitored_buses
                    .iter()
                    .map(|b| {
                        let i = self.system.case().bus_index(*b).unwrap();
                        state.bus_voltages[i].norm()
                    })
                    .collect();
                let (shed, invalid) = if first_chunk {
                    move_costs.unwrap_or((0.0, false))
                } else {
                    (0.0, false)
                };
                first_chunk = false;
                let (r, terminal) = uvls_reward(
                    &voltages,
                    shed,
                    invalid,
                    state.time,
                    t_pf,
                    &self.config.objective,
                );
                reward += r;
                if terminal {
                    return Ok((reward, state));
                }
            }
        }
        Ok((reward, state))
    }

    /// Receding-horizon step: re-plan when due, otherwise replay the stored
    /// plan; returns the action for the current instant.
    pub fn mpc_controller_step(
        &mut self,
        plant_state: &SimulationState,
        t_pf: Option<f64>,
        now: f64,
    ) -> Result<(usize, PlanDiagnostics), BaselineError> {
        let due = match self.last_plan_time {
            None => true,
            Some(t) => now - t >= self.config.replan_interval - 1e-9,
        };
        if due {
            let started = Instant::now();
            let (plan, timed_out) = self.mpc_plan(plant_state, t_pf)?;
            let planning_time = started.elapsed();
            self.last_plan_time = Some(now);
            self.stored_plan = plan;
            self.stored_plan_time = now;
            let action = if timed_out {
                0
            } else {
                self.stored_plan.first().copied().unwrap_or(0)
            };
            return Ok((
                action,
                PlanDiagnostics {
                    planned: true,
                    planning_time,
                    timed_out,
                },
            ));
        }
        // between plans, execute a stored move when its instant arrives
        let elapsed = now - self.stored_plan_time;
        let slot = (elapsed / self.config.move_spacing).round();
        let action = if (elapsed - slot * self.config.move_spacing).abs() < 1e-6 {
            self.stored_plan.get(slot as usize).copied().unwrap_or(0)
        } else {
            0
        };
        Ok((
            action,
            PlanDiagnostics {
                planned: false,
                planning_time: Duration::ZERO,
                timed_out: false,
            },
        ))
    }

    /// Exhaustive reference search (no pruning); used to validate pruning.
    pub fn mpc_plan_exhaustive(
        &mut self,
        plant_state: &SimulationState,
        t_pf: Option<f64>,
    ) -> Result<ActionPlan, BaselineError> {
        let state = self.import_state(plant_state);
        let n_actions = 1usize << self.config.controlled_buses.len();
        let moves = self.config.max_control_moves;
        let mut best: Option<Candidate> = None;
        let total = n_actions.pow(moves as u32);
        for code in 0..total {
            let mut plan = Vec::with_capacity(moves);
            let mut c = code;
            for _ in 0..moves {
                plan.push(c % n_actions);
                c /= n_actions;
            }
            let mut node = state.clone();
            let mut score = 0.0;
            let mut shed_total = 0.0;
            let mut dead = false;
            for (k, &action) in plan.iter().enumerate() {
                let mut shed_pu = 0.0;
                let mut invalid = false;
                for (bit, bus) in self.config.controlled_buses.iter().enumerate() {
                    if action & (1 << bit) != 0 {
                        let before = node.remaining_load_fraction[bus];
                        match self.system.shed_load(&node, *bus, 1) {
                            Ok((next, inv)) => {
                                node = next;
                                invalid |= inv;
                                let after = node.remaining_load_fraction[bus];
                                shed_pu += (before - after) * self.initial_load[bit];
                            }
                            Err(_) => invalid = true,
                        }
                    }
                }
                shed_total += shed_pu;
                let span = if k + 1 == moves {
                    self.config.prediction_horizon - self.config.move_spacing * (moves - 1) as f64
                } else {
                    self.config.move_spacing
                };
                match self.rollout(node.clone(), t_pf, Some((shed_pu, invalid)), span.max(0.0)) {
                    Ok((r, end)) => {
                        score += r;
                        node = end;
                    }
                    Err(_) => {
                        score = f64::NEG_INFINITY;
                        dead = true;
                        break;
                    }
                }
                if dead {
                    break;
                }
            }
            let candidate = Candidate {
                score,
                total_shed: shed_total,
                plan,
            };
            let take = best.as_ref().map(|b| candidate.beats(b)).unwrap_or(true);
            if take {
                best = Some(candidate);
            }
        }
        Ok(best.expect("at least one candidate").plan)
    }
}
