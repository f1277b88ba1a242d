//! CCT per power-flow variant for the worst-case fault buses.

use gridemc::net::{
    apply_case_modifier, builtin, parse_case, solve_power_flow, BusId, CaseModifier, GridCase,
    ShuntId,
};
use gridemc::sim::{ControlCommand, DynSystem, EventSchedule};

fn stable_with(case: &GridCase, schedule: &EventSchedule, brake: Option<ShuntId>) -> bool {
    let pf = match solve_power_flow(case) {
        Ok(pf) if pf.converged => pf,
        _ => return false,
    };
    let mut sys = DynSystem::new(case, 0.002).unwrap();
    let mut state = sys.init_dynamic_state(&pf).unwrap();
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
    for k in 0..10_000 {
        let mut cmd = ControlCommand::none();
        if let Some(id) = brake {
            if k % 50 == 0 {
                let w1: f64 = area1.iter().map(|&i| state.generators[i].omega).sum::<f64>()
                    / area1.len() as f64;
                let w2: f64 = area2.iter().map(|&i| state.generators[i].omega).sum::<f64>()
                    / area2.len() as f64;
                let want = (w1 - w2) > 0.0005;
                if want != on {
                    cmd = ControlCommand::shunt(id, want);
                    on = want;
                }
            }
        }
        state = match sys.step_simulation(state, schedule, &cmd, 0.002) {
            Ok(s) => s,
            Err(_) => return false,
        };
        if state.synchronism_lost {
            return false;
        }
    }
    true
}

fn cct(case: &GridCase, bus: BusId, brake: Option<ShuntId>) -> f64 {
    let mut lo = 0.0_f64;
    let mut hi = 1.2_f64;
    if stable_with(case, &EventSchedule::self_clearing_fault(bus, 1.0, hi), brake) {
        return hi;
    }
    for _ in 0..10 {
        let mid = 0.5 * (lo + hi);
        if stable_with(case, &EventSchedule::self_clearing_fault(bus, 1.0, mid), brake) {
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
    let loads = case.load_buses();
    let mut variants: Vec<(String, GridCase)> = vec![("base".into(), case.clone())];
    for mw in [0.5, 1.0, 1.8] {
        for sign in [1.0, -1.0_f64] {
            let m = CaseModifier::LoadDelta {
                buses: loads.clone(),
                delta_p: sign * mw,
            };
            variants.push((
                format!("load{:+}", sign * mw),
                apply_case_modifier(&case, &m).unwrap(),
            ));
        }
    }
    for mw in [0.2, 0.4, 0.7, 1.0] {
        for sign in [1.0, -1.0_f64] {
            let m = CaseModifier::TieFlowDelta {
                from_area: 1,
                to_area: 2,
                delta_p: sign * mw,
            };
            variants.push((
                format!("tie{:+}", sign * mw),
                apply_case_modifier(&case, &m).unwrap(),
            ));
        }
    }
    println!("{:<10} {:>5} {:>9} {:>9}", "variant", "bus", "nobrake", "brake");
    for (name, modified) in &variants {
        for bus in [3usize, 6] {
            let c0 = cct(modified, BusId(bus), None);
            let c1 = cct(modified, BusId(bus), Some(ShuntId(1)));
            println!("{name:<10} {bus:>5} {c0:>9.4} {c1:>9.4}");
        }
    }
}
