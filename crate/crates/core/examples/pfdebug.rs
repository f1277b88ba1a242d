use gridemc::net::{builtin, solve_power_flow};

fn main() {
    for (name, case) in [
        ("two_area", builtin::two_area()),
        ("ieee39", builtin::ieee39()),
    ] {
        match solve_power_flow(&case) {
            Ok(pf) => {
                println!(
                    "{name}: converged={} iters={} mismatch={:.3e} slack={:.4}+j{:.4}",
                    pf.converged, pf.iterations, pf.max_mismatch, pf.slack_injection.re, pf.slack_injection.im
                );
                for (i, bus) in case.buses.iter().enumerate() {
                    println!(
                        "  bus {:>2} |V|={:.4} th={:>8.4} deg",
                        bus.id.0,
                        pf.voltage_magnitude[i],
                        pf.voltage_angle[i].to_degrees()
                    );
                }
            }
            Err(e) => println!("{name}: error {e}"),
        }
    }
}
