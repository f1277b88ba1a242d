//! Deterministic scenario suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::env::Scenario;
use crate::net::BusId;

use super::runner::RunRecord;
use super::SweepError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    pub name: String,
    pub scenarios: Vec<Scenario>,
}

impl ScenarioSet {
    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    /// Deterministic subset: the first `n` scenarios of the suite order.
    pub fn take(&self, n: usize) -> ScenarioSet {
        ScenarioSet {
            name: format!("{}_first{n}", self.name),
            scenarios: self.scenarios.iter().take(n).cloned().collect(),
        }
    }
}

/// Stable fingerprint of a suite's full content, hex-encoded.
pub fn suite_content_hash(set: &ScenarioSet) -> String {
    let mut hasher = Sha256::new();
    for s in &set.scenarios {
        let line = format!(
            "{}|{:?}|{:?}|{:?}|{:?}|{}|{:?}|{:?}|{:?}|{}\n",
            s.id,
            s.load_scale,
            s.load_delta,
            s.tie_delta,
            s.motor_param_scale,
            s.fault_bus.0,
            s.fault_start,
            s.fault_duration,
            s.noise_sigma,
            s.seed
        );
        hasher.update(line.as_bytes());
    }
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Braking-task sweep: 15 power-flow variants (base, six per-load deltas,
/// eight tie shifts) across all ten buses, 220 scenarios total, with seeded
/// fault durations in [0.3, 0.7] s and 1% observation noise.
pub fn generate_brake_scenarios() -> ScenarioSet {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0220);
    let mut scenarios = Vec::with_capacity(220);
    let variants: Vec<(String, f64, f64)> = {
        let mut v: Vec<(String, f64, f64)> = vec![("base".into(), 0.0, 0.0)];
        for mw in [0.5, 1.0, 1.8] {
            for sign in [1.0, -1.0] {
                v.push((format!("load{:+.1}", sign * mw), sign * mw, 0.0));
            }
        }
        for mw in [0.2, 0.4, 0.7, 1.0] {
            for sign in [1.0, -1.0] {
                v.push((format!("tie{:+.1}", sign * mw), 0.0, sign * mw));
            }
        }
        v
    };
    let mut push = |scenarios: &mut Vec<Scenario>,
                    rng: &mut ChaCha8Rng,
                    name: &str,
                    load_delta: f64,
                    tie_delta: f64,
                    bus: usize,
                    round: usize| {
        let duration = rng.gen_range(0.3..=0.7);
        let seed = scenarios.len() as u64;
        scenarios.push(Scenario {
            id: format!("brake_{name}_bus{bus:02}_r{round}"),
            load_scale: 1.0,
            load_delta,
            tie_delta,
            motor_param_scale: 1.0,
            fault_bus: BusId(bus),
            fault_start: 1.0,
            fault_duration: duration,
            noise_sigma: 0.01,
            seed,
        });
    };
    for (name, load_delta, tie_delta) in &variants {
        for bus in 1..=10 {
            push(&mut scenarios, &mut rng, name, *load_delta, *tie_delta, bus, 0);
        }
    }
    // a second duration draw over the base and load variants tops the
    // suite up to 220
    for (name, load_delta, tie_delta) in variants.iter().take(7) {
        for bus in 1..=10 {
            push(&mut scenarios, &mut rng, name, *load_delta, *tie_delta, bus, 1);
        }
    }
    debug_assert_eq!(scenarios.len(), 220);
    ScenarioSet {
        name: "brake220".into(),
        scenarios,
    }
}

/// Shedding-task sweep: full factorial of four load levels, two motor
/// parameter sets, thirty fault buses, and four durations; 960 scenarios.
pub fn generate_uvls_scenarios() -> ScenarioSet {
    let mut scenarios = Vec::with_capacity(960);
    for &level in &[0.8, 0.9, 1.1, 1.2] {
        for &param_scale in &[1.0, 1.1] {
            for bus in 1..=30 {
                for &duration in &[0.02, 0.05, 0.08, 0.1] {
                    let seed = scenarios.len() as u64;
                    scenarios.push(Scenario {
                        id: format!(
                            "uvls_L{:03}_P{:03}_B{bus:02}_D{duration:.2}",
                            (level * 100.0) as u32,
                            (param_scale * 100.0) as u32
                        ),
                        load_scale: level,
                        load_delta: 0.0,
                        tie_delta: 0.0,
                        motor_param_scale: param_scale,
                        fault_bus: BusId(bus),
                        fault_start: 1.0,
                        fault_duration: duration,
                        noise_sigma: 0.0,
                        seed,
                    });
                }
            }
        }
    }
    debug_assert_eq!(scenarios.len(), 960);
    ScenarioSet {
        name: "uvls960".into(),
        scenarios,
    }
}

/// Keep the scenarios whose no-action run violated the recovery envelope.
pub fn filter_fidvr_positive(
    scenarios: &ScenarioSet,
    noop_records: &[RunRecord],
) -> Result<ScenarioSet, SweepError> {
    let mut kept = Vec::new();
    for s in &scenarios.scenarios {
        let record = noop_records
            .iter()
            .find(|r| r.scenario_id == s.id)
            .ok_or_else(|| SweepError::MissingRecord(s.id.clone()))?;
        if record.envelope_violated {
            kept.push(s.clone());
        }
    }
    Ok(ScenarioSet {
        name: format!("{}_fidvr", scenarios.name),
        scenarios: kept,
    })
}
