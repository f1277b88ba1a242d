//! Line-oriented case file parser.
//!
//! A case file is a sequence of records, one per line, each starting with a
//! section keyword. Blank lines and `#` comments are skipped. The columns
//! are documented in `docs/case_format.md`; any unknown keyword or malformed
//! field count is rejected.

use super::case::*;
use super::NetError;

pub fn parse_case(text: &str) -> Result<GridCase, NetError> {
    let mut case = GridCase {
        base_mva: 100.0,
        buses: Vec::new(),
        branches: Vec::new(),
        generators: Vec::new(),
        shunt_devices: Vec::new(),
        motor_loads: Vec::new(),
    };
    let mut saw_base = false;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let lineno = lineno + 1;
        let parse_err = |reason: &str| NetError::Parse {
            line: lineno,
            reason: reason.to_string(),
        };
        let num = |s: &str| -> Result<f64, NetError> {
            s.parse::<f64>()
                .map_err(|_| parse_err(&format!("bad numeric field `{s}`")))
        };
        let int = |s: &str| -> Result<usize, NetError> {
            s.parse::<usize>()
                .map_err(|_| parse_err(&format!("bad integer field `{s}`")))
        };

        match fields[0] {
            "BASEMVA" => {
                if fields.len() != 2 {
                    return Err(parse_err("BASEMVA takes one value"));
                }
                case.base_mva = num(fields[1])?;
                saw_base = true;
            }
            "BUS" => {
                if fields.len() != 6 {
                    return Err(parse_err("BUS takes 5 fields: id kind vset pload qload"));
                }
                let kind = match fields[2] {
                    "slack" => BusKind::Slack,
                    "pv" => BusKind::Pv,
                    "pq" => BusKind::Pq,
                    other => return Err(parse_err(&format!("unknown bus kind `{other}`"))),
                };
                case.buses.push(Bus {
                    id: BusId(int(fields[1])?),
                    kind,
                    voltage_setpoint: num(fields[3])?,
                    load_p: num(fields[4])?,
                    load_q: num(fields[5])?,
                });
            }
            "BRANCH" => {
                if fields.len() != 7 {
                    return Err(parse_err("BRANCH takes 6 fields: from to r x b tap"));
                }
                case.branches.push(Branch {
                    from: BusId(int(fields[1])?),
                    to: BusId(int(fields[2])?),
                    series_r: num(fields[3])?,
                    series_x: num(fields[4])?,
                    shunt_b: num(fields[5])?,
                    tap: num(fields[6])?,
                });
            }
            "GEN" => {
                if fields.len() != 7 {
                    return Err(parse_err("GEN takes 6 fields: bus area h d xdp pset"));
                }
                case.generators.push(Generator {
                    bus: BusId(int(fields[1])?),
                    area: int(fields[2])? as u32,
                    inertia_h: num(fields[3])?,
                    damping_d: num(fields[4])?,
                    xd_prime: num(fields[5])?,
                    p_set: num(fields[6])?,
                });
            }
            "SHUNT" => {
                if fields.len() != 6 {
                    return Err(parse_err("SHUNT takes 5 fields: id bus g b kind"));
                }
                let kind = match fields[5] {
                    "brake" => ShuntKind::Brake,
                    "fault" => ShuntKind::Fault,
                    other => return Err(parse_err(&format!("unknown shunt kind `{other}`"))),
                };
                case.shunt_devices.push(ShuntDevice {
                    id: ShuntId(int(fields[1])?),
                    bus: BusId(int(fields[2])?),
                    g: num(fields[3])?,
                    b: num(fields[4])?,
                    kind,
                });
            }
            "MOTORLOAD" => {
                if fields.len() != 9 {
                    return Err(parse_err(
                        "MOTORLOAD takes 8 fields: bus fraction vstall tstall ttrip gstall bstall qratio",
                    ));
                }
                case.motor_loads.push(MotorLoad {
                    bus: BusId(int(fields[1])?),
                    fraction: num(fields[2])?,
                    params: MotorParams {
                        v_stall: num(fields[3])?,
                        t_stall: num(fields[4])?,
                        t_trip: num(fields[5])?,
                        stall_g: num(fields[6])?,
                        stall_b: num(fields[7])?,
                        q_ratio: num(fields[8])?,
                    },
                });
            }
            other => return Err(NetError::UnknownSection(other.to_string())),
        }
    }

    if !saw_base {
        return Err(NetError::Parse {
            line: 0,
            reason: "missing BASEMVA record".into(),
        });
    }
    case.validate()?;
    Ok(case)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TINY: &str = "\
BASEMVA 100.0
BUS 1 slack 1.0 0.0 0.0
BUS 2 pq 1.0 0.5 0.1
BRANCH 1 2 0.01 0.1 0.0 1.0
GEN 1 1 5.0 1.0 0.2 0.5
";

    #[test]
    fn parses_minimal_case() {
        let case = parse_case(TINY).unwrap();
        assert_eq!(case.buses.len(), 2);
        assert_eq!(case.branches.len(), 1);
        assert_eq!(case.generators.len(), 1);
        assert_eq!(case.base_mva, 100.0);
    }

    #[test]
    fn rejects_unknown_section() {
        let text = format!("{TINY}XFMR 1 2 0.1\n");
        match parse_case(&text) {
            Err(NetError::UnknownSection(word)) => assert_eq!(word, "XFMR"),
            other => panic!("expected UnknownSection, got {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicate_bus() {
        let text = "\
BASEMVA 100.0
BUS 1 slack 1.0 0.0 0.0
BUS 1 pq 1.0 0.0 0.0
";
        assert!(matches!(parse_case(text), Err(NetError::DuplicateBus(1))));
    }

    #[test]
    fn rejects_two_slacks() {
        let text = "\
BASEMVA 100.0
BUS 1 slack 1.0 0.0 0.0
BUS 2 slack 1.0 0.0 0.0
BRANCH 1 2 0.01 0.1 0.0 1.0
";
        assert!(matches!(parse_case(text), Err(NetError::SlackCount(2))));
    }

    #[test]
    fn rejects_zero_impedance_branch() {
        let text = "\
BASEMVA 100.0
BUS 1 slack 1.0 0.0 0.0
BUS 2 pq 1.0 0.0 0.0
BRANCH 1 2 0.0 0.0 0.0 1.0
";
        assert!(matches!(
            parse_case(text),
            Err(NetError::ZeroImpedance { from: 1, to: 2 })
        ));
    }

    #[test]
    fn rejects_disconnected_island() {
        let text = "\
BASEMVA 100.0
BUS 1 slack 1.0 0.0 0.0
BUS 2 pq 1.0 0.1 0.0
BUS 3 pq 1.0 0.1 0.0
BRANCH 1 2 0.01 0.1 0.0 1.0
";
        assert!(matches!(parse_case(text), Err(NetError::Disconnected(3))));
    }

    #[test]
    fn rejects_motor_reference_to_missing_bus() {
        let text = format!("{TINY}MOTORLOAD 9 0.5 0.6 0.033 5.0 3.0 -3.5 0.4\n");
        assert!(matches!(parse_case(&text), Err(NetError::UnknownBus(9))));
    }
}
