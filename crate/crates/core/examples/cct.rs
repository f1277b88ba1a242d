//! Calibration helper: CCT bisection per fault bus, with and without a
//! speed-feedback brake heuristic.

use gridemc::net::{builtin, solve_power_flow, BusId, ShuntId};
use gridemc::net::parse_case;
use gridemc::sim::{compute_coi, ControlCommand, DynSystem, EventSchedule};

fn stable_with(
    sys: &mut DynSystem,
    schedule: &EventSchedule,
    brake: Option<ShuntId>,
    horizon: f64,
) -> bool {
    let case = sys.case().clone();
    let pf = solve_power_flow(&case).unwrap();
    let mut state = sys.init_dynamic_state(&pf).unwrap();
    let dt = sys.sim_dt();
    let steps = (horizon / dt) as usize;
    let inertias = sys.inertias().to_vec();
    let area1: Vec<usize> = case
        .generators
        .iter()
        .enumerate()
        .filter(|(_, g)| g.area == 1)
        .map(|(i, _)| i)
        .collect();
    let area2: Vec<usize> = case
        .generators
        .iter()
        .enumerate()
        .filter(|(_, g)| g.area != 1)
        .map(|(i, _)| i)
        .collect();
    let mut on = false;
    for k in 0..steps {
        let mut cmd = ControlCommand::none();
        if let Some(id) = brake {
            // heuristic: brake while area 1 runs faster than area 2
            if k % 50 == 0 {
                let _ = compute_coi(&state.generators, &inertias).unwrap();
                let w1: f64 = area1
                    .iter()
                    .map(|&i| state.generators[i].omega)
                    .sum::<f64>()
                    / area1.len() as f64;
                let w2: f64 = area2
                    .iter()
                    .map(|&i| state.generators[i].omega)
                    .sum::<f64>()
                    / area2.len() as f64;
                let want = (w1 - w2) > 0.0005;
                if want != on {
                    cmd = ControlCommand::shunt(id, want);
                    on = want;
                }
            }
        }
        state = match sys.step_simulation(state, schedule, &cmd, dt) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("  sim fault: {e}");
                return false;
            }
        };
        if state.synchronism_lost {
            return false;
        }
    }
    true
}

fn cct(sys: &mut DynSystem, bus: BusId, brake: Option<ShuntId>) -> f64 {
    let mut lo = 0.0_f64;
    let mut hi = 1.2_f64;
    if stable_with(
        sys,
        &EventSchedule::self_clearing_fault(bus, 1.0, hi),
        brake,
        20.0,
    ) {
        return hi; // survives the longest duration we probe
    }
    for _ in 0..12 {
        let mid = 0.5 * (lo + hi);
        let schedule = EventSchedule::self_clearing_fault(bus, 1.0, mid);
        if stable_with(sys, &schedule, brake, 20.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn main() {
    let case = match std::env::var("CASE_PATH") {
        Ok(p) => parse_case(&std::fs::read_to_string(p).unwrap()).unwrap(),
        Err(_) => builtin::two_area(),
    };
    let mut sys = DynSystem::new(&case, 0.002).unwrap();
    println!("bus  cct_nobrake  cct_brake");
    for bus in 1..=10 {
        let c0 = cct(&mut sys, BusId(bus), None);
        let c1 = cct(&mut sys, BusId(bus), Some(ShuntId(1)));
        println!("{bus:>3}  {c0:>10.4}  {c1:>9.4}");
    }
}
