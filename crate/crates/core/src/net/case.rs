use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::NetError;

/// External bus identifier as written in the case file.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct BusId(pub usize);

impl std::fmt::Display for BusId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// External shunt-device identifier.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct ShuntId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BusKind {
    Slack,
    Pv,
    Pq,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Bus {
    pub id: BusId,
    pub kind: BusKind,
    /// Voltage setpoint in p.u.; initial guess for PQ buses.
    pub voltage_setpoint: f64,
    /// Active load in p.u. on the system base.
    pub load_p: f64,
    /// Reactive load in p.u.
    pub load_q: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Branch {
    pub from: BusId,
    pub to: BusId,
    pub series_r: f64,
    pub series_x: f64,
    /// Total line charging susceptance (p.u.), split half per end.
    pub shunt_b: f64,
    /// Off-nominal tap ratio on the `from` side; 1.0 for plain lines.
    pub tap: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Generator {
    pub bus: BusId,
    /// Area tag used by tie-flow modifiers.
    pub area: u32,
    /// Inertia constant in seconds on the system MVA base.
    pub inertia_h: f64,
    /// Damping coefficient in p.u.
    pub damping_d: f64,
    /// Transient reactance in p.u. on the system base.
    pub xd_prime: f64,
    /// Active power dispatch in p.u.
    pub p_set: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShuntKind {
    Brake,
    Fault,
}

/// A switchable shunt device (resistive brake or a pre-declared fault shunt).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShuntDevice {
    pub id: ShuntId,
    pub bus: BusId,
    pub g: f64,
    pub b: f64,
    pub kind: ShuntKind,
}

/// Stall/trip performance parameters of an aggregated motor load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotorParams {
    /// Stall threshold voltage in p.u.
    pub v_stall: f64,
    /// Undervoltage duration that triggers a stall, in seconds.
    pub t_stall: f64,
    /// Thermal trip time of a stalled motor, in seconds.
    pub t_trip: f64,
    /// Stalled-motor conductance per 1 p.u. of motor active load.
    pub stall_g: f64,
    /// Stalled-motor susceptance per 1 p.u. of motor active load (negative
    /// for an inductive stall current).
    pub stall_b: f64,
    /// Reactive demand of the running motor as a fraction of its P.
    pub q_ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MotorLoad {
    pub bus: BusId,
    /// Fraction of the bus active load served by motors, in [0, 1].
    pub fraction: f64,
    pub params: MotorParams,
}

/// Static network description plus scenario modifiers' target fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridCase {
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
    pub shunt_devices: Vec<ShuntDevice>,
    pub motor_loads: Vec<MotorLoad>,
}

impl GridCase {
    /// Internal index of an external bus id.
    pub fn bus_index(&self, id: BusId) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn bus(&self, id: BusId) -> Option<&Bus> {
        self.buses.iter().find(|b| b.id == id)
    }

    pub fn shunt(&self, id: ShuntId) -> Option<&ShuntDevice> {
        self.shunt_devices.iter().find(|s| s.id == id)
    }

    pub fn motor_at(&self, bus: BusId) -> Option<&MotorLoad> {
        self.motor_loads.iter().find(|m| m.bus == bus)
    }

    pub fn slack_index(&self) -> Option<usize> {
        self.buses.iter().position(|b| b.kind == BusKind::Slack)
    }

    /// Buses with nonzero load, in case order.
    pub fn load_buses(&self) -> Vec<BusId> {
        self.buses
            .iter()
            .filter(|b| b.load_p != 0.0 || b.load_q != 0.0)
            .map(|b| b.id)
            .collect()
    }

    pub fn total_load_p(&self) -> f64 {
        self.buses.iter().map(|b| b.load_p).sum()
    }

    pub fn total_generation_setpoint(&self) -> f64 {
        self.generators.iter().map(|g| g.p_set).sum()
    }

    /// Check every structural invariant of the case.
    pub fn validate(&self) -> Result<(), NetError> {
        let mut seen = BTreeSet::new();
        for bus in &self.buses {
            if !seen.insert(bus.id) {
                return Err(NetError::DuplicateBus(bus.id.0));
            }
            if bus.voltage_setpoint <= 0.0 {
                return Err(NetError::BadBusData {
                    bus: bus.id.0,
                    reason: "voltage setpoint must be positive".into(),
                });
            }
        }
        let slacks = self
            .buses
            .iter()
            .filter(|b| b.kind == BusKind::Slack)
            .count();
        if slacks != 1 {
            return Err(NetError::SlackCount(slacks));
        }
        for br in &self.branches {
            if br.series_r == 0.0 && br.series_x == 0.0 {
                return Err(NetError::ZeroImpedance {
                    from: br.from.0,
                    to: br.to.0,
                });
            }
            for id in [br.from, br.to] {
                if !seen.contains(&id) {
                    return Err(NetError::UnknownBus(id.0));
                }
            }
        }
        let mut gen_buses = BTreeSet::new();
        for gen in &self.generators {
            if !seen.contains(&gen.bus) {
                return Err(NetError::UnknownBus(gen.bus.0));
            }
            if !gen_buses.insert(gen.bus) {
                return Err(NetError::BadBusData {
                    bus: gen.bus.0,
                    reason: "more than one generator at bus".into(),
                });
            }
            if gen.inertia_h <= 0.0 || gen.xd_prime <= 0.0 {
                return Err(NetError::BadBusData {
                    bus: gen.bus.0,
                    reason: "generator H and x'd must be positive".into(),
                });
            }
        }
        let mut shunt_ids = BTreeSet::new();
        for sh in &self.shunt_devices {
            if !seen.contains(&sh.bus) {
                return Err(NetError::UnknownBus(sh.bus.0));
            }
            if !shunt_ids.insert(sh.id) {
                return Err(NetError::BadBusData {
                    bus: sh.bus.0,
                    reason: format!("duplicate shunt id {}", sh.id.0),
                });
            }
        }
        let mut motor_buses = BTreeSet::new();
        for m in &self.motor_loads {
            if !seen.contains(&m.bus) {
                return Err(NetError::UnknownBus(m.bus.0));
            }
            if !(0.0..=1.0).contains(&m.fraction) {
                return Err(NetError::BadBusData {
                    bus: m.bus.0,
                    reason: "motor fraction outside [0, 1]".into(),
                });
            }
            if !motor_buses.insert(m.bus) {
                return Err(NetError::BadBusData {
                    bus: m.bus.0,
                    reason: "more than one motor load at bus".into(),
                });
            }
        }
        self.check_connected()?;
        Ok(())
    }

    /// Every bus must be reachable from the slack over in-service branches.
    fn check_connected(&self) -> Result<(), NetError> {
        let n = self.buses.len();
        if n == 0 {
            return Ok(());
        }
        let slack = self.slack_index().ok_or(NetError::SlackCount(0))?;
        let mut adj = vec![Vec::new(); n];
        for br in &self.branches {
            let i = self.bus_index(br.from).unwrap();
            let j = self.bus_index(br.to).unwrap();
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut visited = vec![false; n];
        let mut stack = vec![slack];
        visited[slack] = true;
        while let Some(i) = stack.pop() {
            for &j in &adj[i] {
                if !visited[j] {
                    visited[j] = true;
                    stack.push(j);
                }
            }
        }
        if let Some(i) = visited.iter().position(|v| !v) {
            return Err(NetError::Disconnected(self.buses[i].id.0));
        }
        Ok(())
    }
}
