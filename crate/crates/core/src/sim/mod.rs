//! Fixed-step transient simulation: classical generator swing dynamics with
//! an algebraic network solve at every integrator stage, motor stall/trip
//! behavior, switching events, and stability diagnostics.

mod motor;
mod network;
mod trajectory;

pub use motor::{motor_transition, MotorLoadState};
pub use trajectory::TrajectoryRecorder;

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::net::{BusId, GridCase, PowerFlowSolution, ShuntId};
use network::NetworkSolver;

/// Synchronous speed, rad/s (60 Hz system).
pub const OMEGA_SYNC: f64 = 2.0 * std::f64::consts::PI * 60.0;
/// Conductance of a bolted fault shunt, p.u.
pub const FAULT_CONDUCTANCE: f64 = 1e7;
/// One load-shedding block as a fraction of the initial bus load.
pub const SHED_BLOCK_FRACTION: f64 = 0.20;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("power flow did not converge; refusing to initialize dynamics")]
    PowerFlowNotConverged,
    #[error("algebraic network solve diverged at t = {time:.4} s")]
    AlgebraicDivergence { time: f64 },
    #[error("singular network at t = {time:.4} s")]
    SingularNetwork { time: f64 },
    #[error("no generators in state")]
    NoGenerators,
    #[error("bus {0} is not a load bus")]
    NotALoadBus(usize),
    #[error("unknown bus {0}")]
    UnknownBus(usize),
    #[error("event schedule not sorted by time")]
    UnsortedSchedule,
    #[error("fault_on at bus {0} has no matching fault_off")]
    UnmatchedFault(usize),
}

/// Rotor state of one classical machine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorState {
    /// Rotor angle, rad.
    pub delta: f64,
    /// Speed deviation, p.u.
    pub omega: f64,
    /// Internal EMF magnitude behind x'd, p.u. (constant in this model).
    pub e_prime: f64,
    /// Mechanical power, p.u. (constant in this model).
    pub p_mech: f64,
}

/// Full dynamic state at one time instant. A plain value: stepping consumes
/// a state and returns the successor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationState {
    pub time: f64,
    pub generators: Vec<GeneratorState>,
    pub motors: Vec<MotorLoadState>,
    /// Complex bus voltages from the latest committed network solve.
    pub bus_voltages: Vec<Complex64>,
    /// Remaining load fraction per load bus; never increases mid-episode.
    pub remaining_load_fraction: BTreeMap<BusId, f64>,
    /// Switchable shunt devices currently in service (e.g. the brake).
    pub active_shunts: BTreeSet<ShuntId>,
    /// Fault shunts currently applied, keyed by internal bus index.
    pub active_faults: BTreeMap<usize, Complex64>,
    pub synchronism_lost: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EventKind {
    FaultOn { bus: BusId, g: f64, b: f64 },
    FaultOff { bus: BusId },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

/// Ordered disturbance schedule. Every fault is self-clearing: a `FaultOn`
/// must be followed by a matching `FaultOff`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EventSchedule {
    events: Vec<Event>,
}

impl EventSchedule {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(events: Vec<Event>) -> Result<Self, SimError> {
        if events.windows(2).any(|w| w[0].time > w[1].time) {
            return Err(SimError::UnsortedSchedule);
        }
        let mut open: BTreeMap<usize, usize> = BTreeMap::new();
        for ev in &events {
            match ev.kind {
                EventKind::FaultOn { bus, .. } => *open.entry(bus.0).or_insert(0) += 1,
                EventKind::FaultOff { bus } => {
                    let slot = open.entry(bus.0).or_insert(0);
                    if *slot == 0 {
                        return Err(SimError::UnmatchedFault(bus.0));
                    }
                    *slot -= 1;
                }
            }
        }
        if let Some((&bus, _)) = open.iter().find(|(_, &n)| n > 0) {
            return Err(SimError::UnmatchedFault(bus));
        }
        Ok(Self { events })
    }

    /// A bolted three-phase fault at `bus` from `start` for `duration`
    /// seconds. A zero or negative duration yields an empty schedule.
    pub fn self_clearing_fault(bus: BusId, start: f64, duration: f64) -> Self {
        if duration <= 0.0 {
            return Self::empty();
        }
        Self {
            events: vec![
                Event {
                    time: start,
                    kind: EventKind::FaultOn {
                        bus,
                        g: FAULT_CONDUCTANCE,
                        b: 0.0,
                    },
                },
                Event {
                    time: start + duration,
                    kind: EventKind::FaultOff { bus },
                },
            ],
        }
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// Events whose time snaps to the step boundary at `t` (grid of `dt`).
    fn due_at(&self, t: f64, dt: f64) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |ev| {
            let snapped = (ev.time / dt).round() * dt;
            (snapped - t).abs() < dt / 4.0
        })
    }
}

/// Switching commands applied at the start of a step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ControlCommand {
    /// Turn the named shunt device on or off.
    pub shunt: Option<(ShuntId, bool)>,
    /// Shed blocks at load buses. Callers that need the invalid-shed flag
    /// use [`DynSystem::shed_load`] directly instead.
    pub sheds: Vec<(BusId, u32)>,
}

impl ControlCommand {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn shunt(id: ShuntId, on: bool) -> Self {
        Self {
            shunt: Some((id, on)),
            sheds: Vec::new(),
        }
    }
}

/// Precomputed constants for simulating one case. Building one is cheap and
/// clones are independent, which keeps sweep workers isolated.
#[derive(Debug, Clone)]
pub struct DynSystem {
    case: GridCase,
    solver: NetworkSolver,
    /// Internal bus index per generator.
    gen_bus: Vec<usize>,
    /// Norton admittance 1/(j x'd) per generator.
    gen_yint: Vec<Complex64>,
    inertias: Vec<f64>,
    sim_dt: f64,
}

impl DynSystem {
    pub fn new(case: &GridCase, sim_dt: f64) -> Result<Self, crate::net::NetError> {
        case.validate()?;
        let solver = NetworkSolver::new(case)?;
        let gen_bus = case
            .generators
            .iter()
            .map(|g| case.bus_index(g.bus).unwrap())
            .collect();
        let gen_yint = case
            .generators
            .iter()
            .map(|g| Complex64::new(1.0, 0.0) / Complex64::new(0.0, g.xd_prime))
            .collect();
        let inertias = case.generators.iter().map(|g| g.inertia_h).collect();
        Ok(Self {
            case: case.clone(),
            solver,
            gen_bus,
            gen_yint,
            inertias,
            sim_dt,
        })
    }

    pub fn case(&self) -> &GridCase {
        &self.case
    }

    pub fn sim_dt(&self) -> f64 {
        self.sim_dt
    }

    pub fn inertias(&self) -> &[f64] {
        &self.inertias
    }

    /// Back-compute machine internal states from a converged power flow so
    /// the system starts at equilibrium: motors all running, full load.
    /// Constant-impedance loads are pinned to the solved voltages, making
    /// the initial state an exact fixed point of the dynamics.
    pub fn init_dynamic_state(
        &mut self,
        pf: &PowerFlowSolution,
    ) -> Result<SimulationState, SimError> {
        if !pf.converged {
            return Err(SimError::PowerFlowNotConverged);
        }
        let v = pf.complex_voltages();
        self.solver.set_operating_point(&self.case, &v);
        let mut generators = Vec::with_capacity(self.case.generators.len());
        for (k, gen) in self.case.generators.iter().enumerate() {
            let vb = v[self.gen_bus[k]];
            let s = pf.generator_injections[k];
            let current = (s / vb).conj();
            let e = vb + Complex64::new(0.0, gen.xd_prime) * current;
            generators.push(GeneratorState {
                delta: e.arg(),
                omega: 0.0,
                e_prime: e.norm(),
                p_mech: s.re,
            });
        }
        let motors = self
            .case
            .motor_loads
            .iter()
            .map(|m| MotorLoadState::running(m.params.clone()))
            .collect();
        let remaining_load_fraction = self
            .case
            .load_buses()
            .into_iter()
            .map(|b| (b, 1.0))
            .collect();
        Ok(SimulationState {
            time: 0.0,
            generators,
            motors,
            bus_voltages: v,
            remaining_load_fraction,
            active_shunts: BTreeSet::new(),
            active_faults: BTreeMap::new(),
            synchronism_lost: false,
        })
    }

    /// L2 norm of all state derivatives; zero at a true equilibrium.
    pub fn derivative_norm(&mut self, state: &SimulationState) -> Result<f64, SimError> {
        let deltas: Vec<f64> = state.generators.iter().map(|g| g.delta).collect();
        let omegas: Vec<f64> = state.generators.iter().map(|g| g.omega).collect();
        let mut v_guess = state.bus_voltages.clone();
        let (dd, dw) = self.derivatives(state, &deltas, &omegas, &mut v_guess)?;
        Ok(dd
            .iter()
            .chain(dw.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt())
    }

    /// Swing derivatives at the given rotor variables; solves the network
    /// for voltages consistent with them, warm-starting from `v_guess`.
    fn derivatives(
        &mut self,
        state: &SimulationState,
        deltas: &[f64],
        omegas: &[f64],
        v_guess: &mut Vec<Complex64>,
    ) -> Result<(Vec<f64>, Vec<f64>), SimError> {
        let emf: Vec<Complex64> = state
            .generators
            .iter()
            .zip(deltas)
            .map(|(g, &d)| Complex64::from_polar(g.e_prime, d))
            .collect();
        self.solver.solve(&self.case, state, &emf, v_guess)?;
        let mut d_delta = Vec::with_capacity(deltas.len());
        let mut d_omega = Vec::with_capacity(deltas.len());
        for (k, gen) in self.case.generators.iter().enumerate() {
            let vb = v_guess[self.gen_bus[k]];
            let current = (emf[k] - vb) * self.gen_yint[k];
            let p_elec = (emf[k] * current.conj()).re;
            d_delta.push(OMEGA_SYNC * omegas[k]);
            d_omega.push(
                (state.generators[k].p_mech - p_elec - gen.damping_d * omegas[k])
                    / (2.0 * gen.inertia_h),
            );
        }
        Ok((d_delta, d_omega))
    }

    /// One explicit RK4 step of length `dt`. Events due at the step start
    /// and the control command are applied first, motor transitions are
    /// evaluated on the committed end-of-step voltages, and the instability
    /// latch is updated.
    pub fn step_simulation(
        &mut self,
        mut state: SimulationState,
        schedule: &EventSchedule,
        controls: &ControlCommand,
        dt: f64,
    ) -> Result<SimulationState, SimError> {
        assert!(dt > 0.0, "dt must be positive");

        if let Some((id, on)) = controls.shunt {
            if on {
                state.active_shunts.insert(id);
            } else {
                state.active_shunts.remove(&id);
            }
        }
        for &(bus, blocks) in &controls.sheds {
            let (next, _invalid) = self.shed_load(&state, bus, blocks)?;
            state = next;
        }
        for ev in schedule.due_at(state.time, dt) {
            match ev.kind {
                EventKind::FaultOn { bus, g, b } => {
                    let idx = self
                        .case
                        .bus_index(bus)
                        .ok_or(SimError::UnknownBus(bus.0))?;
                    state.active_faults.insert(idx, Complex64::new(g, b));
                }
                EventKind::FaultOff { bus } => {
                    let idx = self
                        .case
                        .bus_index(bus)
                        .ok_or(SimError::UnknownBus(bus.0))?;
                    state.active_faults.remove(&idx);
                }
            }
        }

        let n = state.generators.len();
        let d0: Vec<f64> = state.generators.iter().map(|g| g.delta).collect();
        let w0: Vec<f64> = state.generators.iter().map(|g| g.omega).collect();
        let mut v = state.bus_voltages.clone();

        let shifted = |base: &[f64], k: &[f64], h: f64| -> Vec<f64> {
            base.iter().zip(k).map(|(b, kk)| b + h * kk).collect()
        };
        let (k1d, k1w) = self.derivatives(&state, &d0, &w0, &mut v)?;
        let (k2d, k2w) = self.derivatives(
            &state,
            &shifted(&d0, &k1d, dt / 2.0),
            &shifted(&w0, &k1w, dt / 2.0),
            &mut v,
        )?;
        let (k3d, k3w) = self.derivatives(
            &state,
            &shifted(&d0, &k2d, dt / 2.0),
            &shifted(&w0, &k2w, dt / 2.0),
            &mut v,
        )?;
        let (k4d, k4w) = self.derivatives(
            &state,
            &shifted(&d0, &k3d, dt),
            &shifted(&w0, &k3w, dt),
            &mut v,
        )?;

        for i in 0..n {
            state.generators[i].delta =
                d0[i] + dt / 6.0 * (k1d[i] + 2.0 * k2d[i] + 2.0 * k3d[i] + k4d[i]);
            state.generators[i].omega =
                w0[i] + dt / 6.0 * (k1w[i] + 2.0 * k2w[i] + 2.0 * k3w[i] + k4w[i]);
        }
        state.time += dt;

        // committed network solve at the new rotor positions
        let emf: Vec<Complex64> = state
            .generators
            .iter()
            .map(|g| Complex64::from_polar(g.e_prime, g.delta))
            .collect();
        self.solver.solve(&self.case, &state, &emf, &mut v)?;
        state.bus_voltages = v;

        for (m, motor) in self.case.motor_loads.iter().zip(state.motors.iter_mut()) {
            let idx = self.case.bus_index(m.bus).unwrap();
            let vmag = state.bus_voltages[idx].norm();
            *motor = motor_transition(motor, vmag, dt);
        }

        if !state.synchronism_lost && detect_instability_now(&state, &self.inertias) {
            state.synchronism_lost = true;
        }
        Ok(state)
    }

    /// Shed `blocks` 20%-of-initial-load blocks at `bus`. The invalid flag
    /// is raised iff shedding was requested with nothing left to shed.
    pub fn shed_load(
        &self,
        state: &SimulationState,
        bus: BusId,
        blocks: u32,
    ) -> Result<(SimulationState, bool), SimError> {
        let mut next = state.clone();
        let fraction = next
            .remaining_load_fraction
            .get_mut(&bus)
            .ok_or(SimError::NotALoadBus(bus.0))?;
        if blocks == 0 {
            return Ok((next, false));
        }
        let invalid = *fraction <= 0.0;
        *fraction = (*fraction - SHED_BLOCK_FRACTION * blocks as f64).max(0.0);
        Ok((next, invalid))
    }
}

/// Inertia-weighted center-of-inertia angle and speed.
pub fn compute_coi(states: &[GeneratorState], inertias: &[f64]) -> Result<(f64, f64), SimError> {
    if states.is_empty() || states.len() != inertias.len() {
        return Err(SimError::NoGenerators);
    }
    let total: f64 = inertias.iter().sum();
    let delta = states
        .iter()
        .zip(inertias)
        .map(|(g, h)| h * g.delta)
        .sum::<f64>()
        / total;
    let omega = states
        .iter()
        .zip(inertias)
        .map(|(g, h)| h * g.omega)
        .sum::<f64>()
        / total;
    Ok((delta, omega))
}

/// COI-referenced rotor deviation with the largest magnitude (signed).
pub fn max_coi_deviation(states: &[GeneratorState], inertias: &[f64]) -> Result<f64, SimError> {
    let (coi, _) = compute_coi(states, inertias)?;
    Ok(states
        .iter()
        .map(|g| g.delta - coi)
        .max_by(|a, b| a.abs().partial_cmp(&b.abs()).expect("finite angles"))
        .unwrap_or(0.0))
}

fn detect_instability_now(state: &SimulationState, inertias: &[f64]) -> bool {
    match max_coi_deviation(&state.generators, inertias) {
        Ok(dev) => dev.abs() > std::f64::consts::PI,
        Err(_) => false,
    }
}

/// True iff synchronism is (or ever was) lost: any COI-referenced rotor
/// deviation strictly beyond pi radians. Latches for the episode.
pub fn detect_instability(state: &SimulationState, inertias: &[f64]) -> bool {
    state.synchronism_lost || detect_instability_now(state, inertias)
}
