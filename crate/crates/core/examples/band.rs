//! Find post-fault states with running motors and voltage in the stall
//! mismatch band (0.60, 0.66).

use gridemc::net::{apply_case_modifier, builtin, solve_power_flow, BusId, CaseModifier};
use gridemc::sim::{ControlCommand, DynSystem, EventSchedule};

fn main() {
    for (bus, dur, scale) in [
        (3usize, 0.10, 1.2),
        (3, 0.08, 1.2),
        (15, 0.10, 1.2),
        (21, 0.10, 1.2),
        (4, 0.05, 1.2),
        (4, 0.05, 1.1),
        (17, 0.10, 1.2),
        (14, 0.10, 1.2),
        (16, 0.10, 1.2),
        (5, 0.08, 1.1),
    ] {
        let case = apply_case_modifier(
            &builtin::ieee39(),
            &CaseModifier::LoadScale { factor: scale },
        )
        .unwrap();
        let pf = solve_power_flow(&case).unwrap();
        if !pf.converged {
            println!("({bus},{dur},{scale}): pf failed");
            continue;
        }
        let mut sys = DynSystem::new(&case, 0.002).unwrap();
        let mut state = sys.init_dynamic_state(&pf).unwrap();
        let schedule = EventSchedule::self_clearing_fault(BusId(bus), 1.0, dur);
        let motor_buses = [40usize, 41, 42];
        let idx: Vec<usize> = motor_buses
            .iter()
            .map(|&b| case.bus_index(BusId(b)).unwrap())
            .collect();
        let mut band_time = [0.0f64; 3];
        let mut ok = true;
        for _ in 0..(8.0 / 0.002) as usize {
            state = match sys.step_simulation(state, &schedule, &ControlCommand::none(), 0.002) {
                Ok(s) => s,
                Err(_) => {
                    ok = false;
                    break;
                }
            };
            for (m, &i) in idx.iter().enumerate() {
                let v = state.bus_voltages[i].norm();
                if state.motors[m].run_fraction > 0.5 && v > 0.65 && v < 0.715 && state.time > 1.0 + dur {
                    band_time[m] += 0.002;
                }
            }
        }
        println!(
            "({bus},{dur},{scale}): ok={ok} band seconds per motor bus = {:.3} {:.3} {:.3}",
            band_time[0], band_time[1], band_time[2]
        );
    }
}
