//! Scenario-level case modification.

use serde::{Deserialize, Serialize};

use super::case::{BusId, GridCase};
use super::NetError;

/// A pure transformation of a case. Modifiers never mutate their input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CaseModifier {
    /// Add `delta_p` p.u. of active load to every listed bus.
    LoadDelta { buses: Vec<BusId>, delta_p: f64 },
    /// Scale every load (P and Q) and every generator setpoint by `factor`.
    LoadScale { factor: f64 },
    /// Shift `delta_p` p.u. of generation from `to_area` onto `from_area`,
    /// pro rata over each area's setpoints, leaving the total unchanged.
    /// Positive values push extra flow out of `from_area`.
    TieFlowDelta {
        from_area: u32,
        to_area: u32,
        delta_p: f64,
    },
    /// Scale motor stall performance parameters `v_stall` and `t_stall`.
    MotorParamScale { factor: f64 },
}

pub fn apply_case_modifier(case: &GridCase, modifier: &CaseModifier) -> Result<GridCase, NetError> {
    let mut out = case.clone();
    match modifier {
        CaseModifier::LoadDelta { buses, delta_p } => {
            for id in buses {
                let idx = case.bus_index(*id).ok_or(NetError::UnknownBus(id.0))?;
                let new_p = out.buses[idx].load_p + delta_p;
                if new_p < 0.0 {
                    return Err(NetError::NegativeLoad {
                        bus: id.0,
                        value: new_p,
                    });
                }
                out.buses[idx].load_p = new_p;
            }
            rebalance_generation(&mut out, case.total_load_p());
        }
        CaseModifier::LoadScale { factor } => {
            if *factor < 0.0 {
                return Err(NetError::NegativeLoad {
                    bus: 0,
                    value: *factor,
                });
            }
            for bus in &mut out.buses {
                bus.load_p *= factor;
                bus.load_q *= factor;
            }
            for gen in &mut out.generators {
                gen.p_set *= factor;
            }
        }
        CaseModifier::TieFlowDelta {
            from_area,
            to_area,
            delta_p,
        } => {
            let area_total = |area: u32| -> f64 {
                out.generators
                    .iter()
                    .filter(|g| g.area == area)
                    .map(|g| g.p_set)
                    .sum()
            };
            let from_total = area_total(*from_area);
            let to_total = area_total(*to_area);
            if from_total == 0.0 {
                return Err(NetError::EmptyArea(*from_area));
            }
            if to_total == 0.0 {
                return Err(NetError::EmptyArea(*to_area));
            }
            for gen in &mut out.generators {
                if gen.area == *from_area {
                    gen.p_set += delta_p * gen.p_set / from_total;
                } else if gen.area == *to_area {
                    gen.p_set -= delta_p * gen.p_set / to_total;
                }
            }
        }
        CaseModifier::MotorParamScale { factor } => {
            for m in &mut out.motor_loads {
                m.params.v_stall *= factor;
                m.params.t_stall *= factor;
            }
        }
    }
    Ok(out)
}

/// Scale generator setpoints so total dispatch tracks total load after a
/// load delta, keeping the slack near its base operating point.
fn rebalance_generation(case: &mut GridCase, old_total_load: f64) {
    let new_total = case.total_load_p();
    if old_total_load > 0.0 && new_total >= 0.0 {
        let factor = new_total / old_total_load;
        for gen in &mut case.generators {
            gen.p_set *= factor;
        }
    }
}
