use super::*;
use crate::net::builtin;

fn brake_config() -> EnvConfig {
    EnvConfig {
        task: TaskKind::Brake,
        case: builtin::two_area(),
        monitored_generators: vec![BusId(1), BusId(2), BusId(8), BusId(9)],
        monitored_buses: vec![],
        controlled_buses: vec![],
        brake_shunt: crate::net::ShuntId(1),
        n_r: 4,
        agent_dt: 0.1,
        sim_dt: 0.002,
        episode_limit: 30.0,
        rewards: RewardCoefficients::default(),
        noise_sigma: 0.0,
    }
}

fn uvls_config() -> EnvConfig {
    EnvConfig {
        task: TaskKind::Uvls,
        case: builtin::ieee39(),
        monitored_generators: vec![],
        monitored_buses: [4, 7, 8, 18, 40, 41, 42].map(BusId).to_vec(),
        controlled_buses: [40, 41, 42].map(BusId).to_vec(),
        brake_shunt: crate::net::ShuntId(1),
        n_r: 10,
        agent_dt: 0.1,
        sim_dt: 0.002,
        episode_limit: 10.0,
        rewards: RewardCoefficients::default(),
        noise_sigma: 0.0,
    }
}

#[test]
fn brake_reset_stack_shape() {
    let config = brake_config();
    assert_eq!(config.n_m(), 8);
    assert_eq!(config.n_i(), 32);
    assert_eq!(config.n_o(), 2);
    let scenario = Scenario::base(BusId(3), 1.0, 0.5, 1);
    let mut env = GridEnv::with_scenario(config, scenario).unwrap();
    let stack = env.reset().unwrap();
    assert_eq!(stack.len(), 32);
}

#[test]
fn uvls_reset_default_ten_channels() {
    let config = uvls_config();
    assert_eq!(config.n_m(), 10);
    assert_eq!(config.n_i(), 100);
    assert_eq!(config.n_o(), 8);
}

#[test]
fn uvls_reset_eleven_channel_variant() {
    // with one more monitored voltage the input widens to 10 x 11 = 110
    let mut config = uvls_config();
    config.monitored_buses.insert(0, BusId(3));
    assert_eq!(config.n_m(), 11);
    assert_eq!(config.n_i(), 110);
    let scenario = Scenario::base(BusId(4), 1.0, 0.05, 1);
    let mut env = GridEnv::with_scenario(config, scenario).unwrap();
    let stack = env.reset().unwrap();
    assert_eq!(stack.len(), 110);
}

#[test]
fn reset_is_deterministic_per_scenario() {
    let scenario = Scenario {
        noise_sigma: 0.01,
        ..Scenario::base(BusId(3), 1.0, 0.4, 99)
    };
    let mut env = GridEnv::with_scenario(brake_config(), scenario).unwrap();
    let a = env.reset().unwrap();
    let b = env.reset().unwrap();
    assert_eq!(a, b);
}

#[test]
fn noop_policy_on_quiet_system_accumulates_nothing() {
    // brake task: no fault, action 0 forever -> total reward ~ 0
    let scenario = Scenario::base(BusId(3), 1.0, 0.0, 5);
    let mut config = brake_config();
    config.episode_limit = 5.0;
    let mut env = GridEnv::with_scenario(config, scenario).unwrap();
    env.reset().unwrap();
    let mut total = 0.0;
    loop {
        let out = env.step(0).unwrap();
        total += out.reward;
        if out.done {
            break;
        }
    }
    assert!(total.abs() < 1e-6, "accumulated {total:e}");

    // uvls task: exactly zero
    let scenario = Scenario::base(BusId(4), 1.0, 0.0, 5);
    let mut config = uvls_config();
    config.episode_limit = 5.0;
    let mut env = GridEnv::with_scenario(config, scenario).unwrap();
    env.reset().unwrap();
    let mut total = 0.0;
    let mut steps = 0;
    loop {
        let out = env.step(0).unwrap();
        total += out.reward;
        steps += 1;
        if out.done {
            break;
        }
    }
    assert_eq!(total, 0.0);
    assert_eq!(steps, 50); // ran to the episode limit
}

#[test]
fn brake_step_reward_matches_formula() {
    let scenario = Scenario::base(BusId(3), 1.0, 0.45, 3);
    let mut env = GridEnv::with_scenario(brake_config(), scenario).unwrap();
    env.reset().unwrap();
    // pre-fault braking costs c plus the small speed excursion it causes
    let out = env.step(1).unwrap();
    assert!(out.reward <= -2.0 && out.reward > -2.01, "reward {}", out.reward);
    // ride through the fault while braking; reward = -|omega_coi| - c
    let mut last = out;
    for _ in 0..30 {
        last = env.step(1).unwrap();
        if last.done {
            break;
        }
    }
    assert!(!last.done, "policy with brake should survive 0.45 s fault");
    assert!(last.reward <= -2.0 && last.reward > -3.0);
}

#[test]
fn brake_terminal_penalty_on_long_fault() {
    let scenario = Scenario::base(BusId(3), 1.0, 0.75, 3);
    let mut env = GridEnv::with_scenario(brake_config(), scenario).unwrap();
    env.reset().unwrap();
    let mut last = None;
    for _ in 0..300 {
        let out = env.step(0).unwrap();
        let done = out.done;
        last = Some(out);
        if done {
            break;
        }
    }
    let out = last.unwrap();
    assert!(out.done);
    assert_eq!(out.reward, TERMINAL_PENALTY);
    assert!(out.info.synchronism_lost);
    // stepping a finished episode is a contract violation
    assert!(matches!(env.step(0), Err(EnvError::EpisodeDone)));
}

#[test]
fn action_out_of_range_is_rejected() {
    let scenario = Scenario::base(BusId(3), 1.0, 0.0, 3);
    let mut env = GridEnv::with_scenario(brake_config(), scenario).unwrap();
    env.reset().unwrap();
    assert!(matches!(
        env.step(2),
        Err(EnvError::BadAction { action: 2, n_o: 2 })
    ));
}

#[test]
fn uvls_shedding_accounts_actual_load() {
    let scenario = Scenario::base(BusId(4), 1.0, 0.08, 3);
    let mut env = GridEnv::with_scenario(uvls_config(), scenario).unwrap();
    env.reset().unwrap();
    // action 0b001 sheds the first controlled bus (40): 20% of 5.0 p.u.
    let out = env.step(1).unwrap();
    assert!((out.info.shed_pu - 1.0).abs() < 1e-12);
    assert!(!out.info.invalid_action);
    // keep shedding the same bus; once empty the flag must fire
    let mut invalid_seen = false;
    for _ in 0..6 {
        let out = env.step(1).unwrap();
        invalid_seen |= out.info.invalid_action;
    }
    assert!(invalid_seen);
}

#[test]
fn uvls_terminal_fires_without_action_on_fidvr() {
    let scenario = Scenario::base(BusId(4), 1.0, 0.08, 3);
    let mut env = GridEnv::with_scenario(uvls_config(), scenario).unwrap();
    env.reset().unwrap();
    let mut terminal_reward = None;
    let mut terminal_time = None;
    for _ in 0..100 {
        let out = env.step(0).unwrap();
        if out.done {
            terminal_reward = Some(out.reward);
            terminal_time = Some(out.info.time);
            break;
        }
    }
    assert_eq!(terminal_reward, Some(TERMINAL_PENALTY));
    // terminal check arms 4 s after clearance at 1.08
    let t = terminal_time.unwrap();
    assert!(t > 5.08 && t < 5.30, "terminal at {t}");
}

#[test]
fn scenario_rejection_reports_diagnostics() {
    let mut scenario = Scenario::base(BusId(3), 1.0, 0.1, 3);
    scenario.load_scale = 50.0; // hopeless loading
    let mut env = GridEnv::with_scenario(brake_config(), scenario).unwrap();
    match env.reset() {
        Err(EnvError::ScenarioRejected(msg)) => {
            assert!(msg.contains("not converge"));
        }
        other => panic!("expected rejection, got {other:?}"),
    }
}

#[test]
fn episode_reward_bounds_hold_for_brake_task() {
    let scenario = Scenario::base(BusId(3), 1.0, 0.6, 11);
    let mut env = GridEnv::with_scenario(brake_config(), scenario).unwrap();
    env.reset().unwrap();
    let mut total = 0.0;
    let mut steps = 0;
    loop {
        let out = env.step(if steps % 2 == 0 { 1 } else { 0 }).unwrap();
        total += out.reward;
        steps += 1;
        if out.done {
            break;
        }
    }
    assert!(total <= 0.0);
    assert!(total >= -1000.0 * steps as f64);
}
