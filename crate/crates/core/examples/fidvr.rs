//! FIDVR probe: voltage trajectories at the motor buses for a no-op run
//! and a shedding run.

use gridemc::net::{apply_case_modifier, builtin, parse_case, solve_power_flow, BusId, CaseModifier};
use gridemc::sim::{ControlCommand, DynSystem, EventSchedule};

fn run(fault_bus: usize, duration: f64, load_scale: f64, shed_plan: &[(f64, usize)]) {
    let mut case = builtin::ieee39();
    if let Ok(p) = std::env::var("CASE_PATH") {
        case = parse_case(&std::fs::read_to_string(p).unwrap()).unwrap();
    }
    let case = apply_case_modifier(&case, &CaseModifier::LoadScale { factor: load_scale }).unwrap();
    let pf = solve_power_flow(&case).unwrap();
    if !pf.converged {
        println!("pf failed");
        return;
    }
    let mut sys = DynSystem::new(&case, 0.002).unwrap();
    let mut state = sys.init_dynamic_state(&pf).unwrap();
    let schedule = EventSchedule::self_clearing_fault(BusId(fault_bus), 1.0, duration);
    let watch = [4usize, 7, 18, 40, 41, 42];
    let idx: Vec<usize> = watch.iter().map(|&b| case.bus_index(BusId(b)).unwrap()).collect();
    println!("# fault bus {fault_bus} dur {duration} scale {load_scale} shed {shed_plan:?}");
    println!("t, v4, v7, v18, v40, v41, v42, run40, stall40, trip40, frac4");
    let mut shed_iter = shed_plan.iter().peekable();
    for k in 0..(10.0_f64 / 0.002) as usize {
        let mut cmd = ControlCommand::none();
        if let Some(&&(t_shed, bus)) = shed_iter.peek() {
            if state.time >= t_shed {
                cmd.sheds.push((BusId(bus), 1));
                shed_iter.next();
            }
        }
        state = match sys.step_simulation(state.clone(), &schedule, &cmd, 0.002) {
            Ok(s) => s,
            Err(e) => {
                println!("# SIM FAULT at {}: {e}", state.time);
                return;
            }
        };
        if k % 100 == 0 {
            let vs: Vec<String> = idx.iter().map(|&i| format!("{:.4}", state.bus_voltages[i].norm())).collect();
            let m = &state.motors[0];
            println!(
                "{:.2}, {}, {:.3}, {:.3}, {:.3}, {:.3}",
                state.time,
                vs.join(", "),
                m.run_fraction,
                m.stalled_fraction,
                m.tripped_fraction,
                state.remaining_load_fraction[&BusId(40)]
            );
        }
    }
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let fault_bus: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(4);
    let dur: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(0.08);
    let scale: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(1.0);
    let shed: Vec<(f64, usize)> = if args.get(4).map(|s| s == "shed").unwrap_or(false) {
        vec![(1.2, 40), (1.2, 41), (1.2, 42), (1.7, 40), (1.7, 41), (1.7, 42)]
    } else {
        vec![]
    };
    run(fault_bus, dur, scale, &shed);
}
