//! Optional per-run trajectory capture, dumped as CSV.

use std::io::Write;

use crate::net::{BusId, GridCase};

use super::SimulationState;

/// Samples of time, bus voltage magnitudes, generator angles and speeds,
/// and remaining load fractions, appended row by row.
#[derive(Debug, Clone)]
pub struct TrajectoryRecorder {
    bus_ids: Vec<BusId>,
    gen_buses: Vec<BusId>,
    load_buses: Vec<BusId>,
    rows: Vec<Vec<f64>>,
}

impl TrajectoryRecorder {
    pub fn new(case: &GridCase) -> Self {
        Self {
            bus_ids: case.buses.iter().map(|b| b.id).collect(),
            gen_buses: case.generators.iter().map(|g| g.bus).collect(),
            load_buses: case.load_buses(),
            rows: Vec::new(),
        }
    }

    pub fn sample(&mut self, state: &SimulationState) {
        let mut row = Vec::with_capacity(
            1 + self.bus_ids.len() + 2 * self.gen_buses.len() + self.load_buses.len(),
        );
        row.push(state.time);
        for v in &state.bus_voltages {
            row.push(v.norm());
        }
        for g in &state.generators {
            row.push(g.delta);
            row.push(g.omega);
        }
        for b in &self.load_buses {
            row.push(
                state
                    .remaining_load_fraction
                    .get(b)
                    .copied()
                    .unwrap_or(1.0),
            );
        }
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "time")?;
        for b in &self.bus_ids {
            write!(out, ",v_{}", b.0)?;
        }
        for b in &self.gen_buses {
            write!(out, ",delta_{},omega_{}", b.0, b.0)?;
        }
        for b in &self.load_buses {
            write!(out, ",frac_{}", b.0)?;
        }
        writeln!(out)?;
        for row in &self.rows {
            let mut first = true;
            for x in row {
                if first {
                    write!(out, "{x}")?;
                    first = false;
                } else {
                    write!(out, ",{x}")?;
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}
