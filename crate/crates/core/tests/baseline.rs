//! Predictive-controller tests: healthy fast paths, pruning equivalence
//! against the exhaustive oracle, model-mismatch behavior, determinism.

use std::time::Duration;

use gridemc::baseline::{MpcConfig, MpcController};
use gridemc::env::{RewardCoefficients, Scenario};
use gridemc::net::{apply_case_modifier, builtin, solve_power_flow, BusId, CaseModifier};
use gridemc::sim::{ControlCommand, DynSystem, EventSchedule, SimulationState};

fn uvls_mpc_config(moves: usize, horizon: f64) -> MpcConfig {
    MpcConfig {
        prediction_horizon: horizon,
        control_interval: 0.1,
        replan_interval: 0.5,
        max_control_moves: moves,
        move_spacing: 0.5,
        internal_dt: 0.02,
        reward_interval: 0.1,
        objective: RewardCoefficients::default(),
        timeout: None,
        controlled_buses: [40, 41, 42].map(BusId).to_vec(),
        monitored_buses: [4, 7, 8, 18, 40, 41, 42].map(BusId).to_vec(),
    }
}

/// Simulate the 39-bus plant under a fault and capture post-fault states.
fn post_fault_states(fault_bus: usize, duration: f64, count: usize) -> Vec<SimulationState> {
    post_fault_states_scaled(fault_bus, duration, count, 1.0).0
}

fn post_fault_states_scaled(
    fault_bus: usize,
    duration: f64,
    count: usize,
    load_scale: f64,
) -> (Vec<SimulationState>, gridemc::net::GridCase) {
    let case = apply_case_modifier(
        &builtin::ieee39(),
        &CaseModifier::LoadScale { factor: load_scale },
    )
    .unwrap();
    let pf = solve_power_flow(&case).unwrap();
    let mut sys = DynSystem::new(&case, 0.002).unwrap();
    let mut state = sys.init_dynamic_state(&pf).unwrap();
    let schedule = EventSchedule::self_clearing_fault(BusId(fault_bus), 1.0, duration);
    let mut snapshots = Vec::new();
    // snapshot every 0.1 s from just after clearance
    for k in 0..((1.0 + duration + 0.1 * count as f64) / 0.002) as usize + 50 {
        state = sys
            .step_simulation(state, &schedule, &ControlCommand::none(), 0.002)
            .unwrap();
        let t = state.time;
        if t > 1.0 + duration && k % 50 == 0 && snapshots.len() < count {
            snapshots.push(state.clone());
        }
        if snapshots.len() >= count {
            break;
        }
    }
    assert_eq!(snapshots.len(), count);
    (snapshots, case)
}

#[test]
fn healthy_state_plans_all_zero() {
    let case = builtin::ieee39();
    let pf = solve_power_flow(&case).unwrap();
    let mut sys = DynSystem::new(&case, 0.002).unwrap();
    let state = sys.init_dynamic_state(&pf).unwrap();
    let mut mpc = MpcController::new(uvls_mpc_config(3, 3.0), &case).unwrap();
    let (plan, timed_out) = mpc.mpc_plan(&state, None).unwrap();
    assert!(!timed_out);
    assert_eq!(plan, vec![0, 0, 0]);
}

#[test]
fn pruned_search_matches_exhaustive_oracle_single_move() {
    // one control move, 8 candidates: the pruned search must agree with
    // brute force on fifty random post-fault states
    let states = post_fault_states(4, 0.08, 50);
    let case = builtin::ieee39();
    let mut mpc = MpcController::new(uvls_mpc_config(1, 1.5), &case).unwrap();
    let t_pf = Some(1.08);
    for (k, state) in states.iter().enumerate() {
        let (pruned, timed_out) = mpc.mpc_plan(state, t_pf).unwrap();
        assert!(!timed_out);
        let exhaustive = mpc.mpc_plan_exhaustive(state, t_pf).unwrap();
        assert_eq!(pruned, exhaustive, "state {k} at t={}", state.time);
    }
}

#[test]
fn pruned_search_matches_exhaustive_oracle_two_moves() {
    // 64-candidate space, still well under the 2^12 equivalence bound
    let states = post_fault_states(4, 0.08, 4);
    let case = builtin::ieee39();
    let mut mpc = MpcController::new(uvls_mpc_config(2, 2.0), &case).unwrap();
    let t_pf = Some(1.08);
    for state in &states {
        let (pruned, timed_out) = mpc.mpc_plan(state, t_pf).unwrap();
        assert!(!timed_out);
        let exhaustive = mpc.mpc_plan_exhaustive(state, t_pf).unwrap();
        assert_eq!(pruned, exhaustive);
    }
}

#[test]
fn identical_observations_plan_identically() {
    let states = post_fault_states(4, 0.08, 1);
    let case = builtin::ieee39();
    let mut mpc = MpcController::new(uvls_mpc_config(2, 2.0), &case).unwrap();
    let (a, _) = mpc.mpc_plan(&states[0], Some(1.08)).unwrap();
    let (b, _) = mpc.mpc_plan(&states[0], Some(1.08)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn controller_step_returns_first_move_and_replans_on_cadence() {
    let states = post_fault_states(4, 0.08, 6);
    let case = builtin::ieee39();
    let mut mpc = MpcController::new(uvls_mpc_config(2, 2.0), &case).unwrap();
    let t_pf = Some(1.08);
    let now = states[0].time;
    let (plan, _) = mpc.mpc_plan(&states[0], t_pf).unwrap();
    let (action, diag) = mpc.mpc_controller_step(&states[0], t_pf, now).unwrap();
    assert!(diag.planned);
    assert_eq!(action, plan[0]);
    // a call 0.1 s later replays the stored plan without planning
    let (_, diag2) = mpc
        .mpc_controller_step(&states[1], t_pf, now + 0.1)
        .unwrap();
    assert!(!diag2.planned);
    // a call one replan interval later plans again
    let (_, diag3) = mpc
        .mpc_controller_step(&states[5], t_pf, now + 0.5)
        .unwrap();
    assert!(diag3.planned);
}

#[test]
fn perturbed_internal_model_changes_some_plan() {
    // Scale the internal model's stall parameters by 1.10 against the true
    // plant. The mismatch matters where voltages hover between the two
    // stall thresholds, so scan marginal states from two recovery
    // trajectories until plans diverge.
    let mut differs = false;
    'outer: for (bus, duration, scale, count) in
        [(3usize, 0.10, 1.2, 30usize), (4, 0.05, 1.0, 30)]
    {
        let (states, true_case) = post_fault_states_scaled(bus, duration, count, scale);
        let perturbed_case = apply_case_modifier(
            &true_case,
            &CaseModifier::MotorParamScale { factor: 1.10 },
        )
        .unwrap();
        let mut mpc_true = MpcController::new(uvls_mpc_config(1, 1.5), &true_case).unwrap();
        let mut mpc_perturbed =
            MpcController::new(uvls_mpc_config(1, 1.5), &perturbed_case).unwrap();
        let t_pf = Some(1.0 + duration);
        for state in &states {
            let (a, _) = mpc_true.mpc_plan(state, t_pf).unwrap();
            let (b, _) = mpc_perturbed.mpc_plan(state, t_pf).unwrap();
            if a != b {
                differs = true;
                break 'outer;
            }
        }
    }
    assert!(differs, "model mismatch never changed the plan");
}

#[test]
fn timeout_falls_back_to_noop() {
    let states = post_fault_states(4, 0.08, 1);
    let case = builtin::ieee39();
    let mut config = uvls_mpc_config(3, 3.0);
    config.timeout = Some(Duration::from_nanos(1));
    let mut mpc = MpcController::new(config, &case).unwrap();
    let (action, diag) = mpc
        .mpc_controller_step(&states[0], Some(1.08), states[0].time)
        .unwrap();
    assert!(diag.timed_out);
    assert_eq!(action, 0);
}

/// End-to-end comparison sanity: on a one-scenario shedding sweep, the
/// relay and predictive controllers both beat doing nothing.
#[test]
fn controllers_beat_noop_on_a_fidvr_scenario() {
    use gridemc::env::{
        build_env_config, SimFileConfig, TrainFileConfig,
    };
    use gridemc::sweep::{run_benchmark, ControllerSpec, ScenarioSet};

    let sim = SimFileConfig::from_path(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../configs/uvls_sim.toml"
    ))
    .unwrap();
    let train = TrainFileConfig::from_path(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../configs/uvls_train.toml"
    ))
    .unwrap();
    let env_config = build_env_config(&sim, &train).unwrap();
    let scenario = Scenario::base(BusId(4), 1.0, 0.08, 17);
    let set = ScenarioSet {
        name: "demo".into(),
        scenarios: vec![scenario],
    };
    let controllers = vec![
        ("noop".to_string(), ControllerSpec::Noop),
        (
            "relay".to_string(),
            ControllerSpec::Relay {
                config: Default::default(),
            },
        ),
        (
            "mpc".to_string(),
            ControllerSpec::Mpc {
                section: sim.mpc.clone().unwrap(),
            },
        ),
    ];
    let records = run_benchmark(&controllers, &set, &env_config, 1);
    assert_eq!(records.len(), 3);
    let reward = |name: &str| {
        records
            .iter()
            .find(|r| r.controller_id == name)
            .unwrap()
            .total_reward
    };
    assert!(records.iter().all(|r| r.error.is_none()));
    assert!(
        reward("relay") > reward("noop"),
        "relay {} vs noop {}",
        reward("relay"),
        reward("noop")
    );
    assert!(
        reward("mpc") > reward("noop"),
        "mpc {} vs noop {}",
        reward("mpc"),
        reward("noop")
    );
}
