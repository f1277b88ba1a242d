//! Network-model integration tests against independent oracles.

use std::collections::BTreeSet;

use gridemc::net::{
    apply_case_modifier, build_admittance_matrix, builtin, parse_case, solve_power_flow, BusId,
    BusKind, CaseModifier, GridCase, PF_TOLERANCE,
};
use num_complex::Complex64;
use proptest::prelude::*;

// ---------------------------------------------------------------------------
// Oracles. These live in test code and share nothing with the solver path.
// ---------------------------------------------------------------------------

/// Textbook Gauss-Seidel power flow, magnitude-pinned PV buses.
fn gauss_seidel(case: &GridCase, tol: f64, max_iter: usize) -> Option<(Vec<Complex64>, usize)> {
    let n = case.buses.len();
    let y = build_admittance_matrix(case, &BTreeSet::new())
        .unwrap()
        .to_dense();
    let mut s = vec![Complex64::ZERO; n];
    for (i, bus) in case.buses.iter().enumerate() {
        s[i] -= Complex64::new(bus.load_p, bus.load_q);
    }
    for gen in &case.generators {
        s[case.bus_index(gen.bus).unwrap()] += Complex64::new(gen.p_set, 0.0);
    }
    let mut v: Vec<Complex64> = case
        .buses
        .iter()
        .map(|b| match b.kind {
            BusKind::Pq => Complex64::new(1.0, 0.0),
            _ => Complex64::new(b.voltage_setpoint, 0.0),
        })
        .collect();

    for it in 0..max_iter {
        let mut delta: f64 = 0.0;
        for (i, bus) in case.buses.iter().enumerate() {
            if bus.kind == BusKind::Slack {
                continue;
            }
            let sum: Complex64 = (0..n).filter(|&j| j != i).map(|j| y[(i, j)] * v[j]).sum();
            let s_i = if bus.kind == BusKind::Pv {
                // reactive power follows from the current voltage estimate
                let q = -(v[i].conj() * (sum + y[(i, i)] * v[i])).im;
                Complex64::new(s[i].re, q)
            } else {
                s[i]
            };
            let mut v_new = ((s_i / v[i]).conj() - sum) / y[(i, i)];
            if bus.kind == BusKind::Pv {
                v_new = Complex64::from_polar(bus.voltage_setpoint, v_new.arg());
            }
            delta = delta.max((v_new - v[i]).norm());
            v[i] = v_new;
        }
        if delta < tol {
            return Some((v, it + 1));
        }
    }
    None
}

/// Plain Gaussian elimination with partial pivoting, complex dense.
fn dense_solve_oracle(a: &[Vec<Complex64>], b: &[Complex64]) -> Vec<Complex64> {
    let n = b.len();
    let mut m: Vec<Vec<Complex64>> = a.iter().cloned().collect();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                m[i][col]
                    .norm()
                    .partial_cmp(&m[j][col].norm())
                    .expect("finite")
            })
            .unwrap();
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        let p = m[col][col];
        assert!(p.norm() > 0.0, "singular oracle system");
        for row in col + 1..n {
            let f = m[row][col] / p;
            for k in col..n {
                let v = m[col][k];
                m[row][k] -= f * v;
            }
            let v = rhs[col];
            rhs[row] -= f * v;
        }
    }
    let mut x = vec![Complex64::ZERO; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for k in row + 1..n {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    x
}

fn residual_max(case: &GridCase, vm: &[f64], va: &[f64]) -> f64 {
    let y = build_admittance_matrix(case, &BTreeSet::new())
        .unwrap()
        .to_dense();
    let v: Vec<Complex64> = vm
        .iter()
        .zip(va)
        .map(|(&m, &a)| Complex64::from_polar(m, a))
        .collect();
    let iv = &y * nalgebra::DVector::from_vec(v.clone());
    let mut s_spec = vec![Complex64::ZERO; case.buses.len()];
    for (i, bus) in case.buses.iter().enumerate() {
        s_spec[i] -= Complex64::new(bus.load_p, bus.load_q);
    }
    for gen in &case.generators {
        s_spec[case.bus_index(gen.bus).unwrap()] += Complex64::new(gen.p_set, 0.0);
    }
    let mut worst: f64 = 0.0;
    for (i, bus) in case.buses.iter().enumerate() {
        let s_calc = v[i] * iv[i].conj();
        match bus.kind {
            BusKind::Slack => {}
            BusKind::Pv => worst = worst.max((s_spec[i].re - s_calc.re).abs()),
            BusKind::Pq => {
                worst = worst.max((s_spec[i].re - s_calc.re).abs());
                worst = worst.max((s_spec[i].im - s_calc.im).abs());
            }
        }
    }
    worst
}

// ---------------------------------------------------------------------------

#[test]
fn two_area_matches_gauss_seidel_oracle() {
    let case = builtin::two_area();
    let pf = solve_power_flow(&case).unwrap();
    assert!(pf.converged, "two-area base case must converge");
    assert!(pf.max_mismatch < PF_TOLERANCE);
    assert!(residual_max(&case, &pf.voltage_magnitude, &pf.voltage_angle) < PF_TOLERANCE);

    let (v_gs, _iters) = gauss_seidel(&case, 1e-6, 50_000).expect("oracle converges");
    for (i, v) in v_gs.iter().enumerate() {
        assert!(
            (v.norm() - pf.voltage_magnitude[i]).abs() < 5e-4,
            "bus {i}: |V| oracle {} vs solver {}",
            v.norm(),
            pf.voltage_magnitude[i]
        );
        assert!((v.arg() - pf.voltage_angle[i]).abs() < 5e-4);
    }
}

#[test]
fn ieee39_converges_at_all_swept_load_levels() {
    let case = builtin::ieee39();
    for level in [0.8, 0.9, 1.0, 1.1, 1.2] {
        let scaled = apply_case_modifier(&case, &CaseModifier::LoadScale { factor: level }).unwrap();
        let pf = solve_power_flow(&scaled).unwrap();
        assert!(pf.converged, "39-bus at {level} load level must converge");
        assert!(pf.iterations <= 50);
        assert!(residual_max(&scaled, &pf.voltage_magnitude, &pf.voltage_angle) < PF_TOLERANCE);
    }
}

#[test]
fn fault_shunt_collapses_faulted_bus_voltage() {
    // A bolted fault is a 1e7 p.u. conductance. Solving the linear network
    // with unit current injections must leave the faulted bus near zero.
    let case = builtin::two_area();
    let mut y = build_admittance_matrix(&case, &BTreeSet::new()).unwrap();
    let fault_bus = case.bus_index(BusId(3)).unwrap();
    y.add(fault_bus, fault_bus, Complex64::new(1e7, 0.0));
    // ground every bus lightly so the un-faulted system is nonsingular
    for i in 0..y.dimension() {
        y.add(i, i, Complex64::new(0.01, 0.01));
    }
    let n = y.dimension();
    let dense = y.to_dense();
    let injections = vec![Complex64::new(1.0, 0.2); n];

    let lu = dense.clone().lu();
    let v = lu
        .solve(&nalgebra::DVector::from_vec(injections.clone()))
        .expect("solvable");
    assert!(v[fault_bus].norm() < 1e-3, "|V3| = {}", v[fault_bus].norm());

    // independent dense oracle agrees everywhere
    let rows: Vec<Vec<Complex64>> = (0..n)
        .map(|i| (0..n).map(|j| dense[(i, j)]).collect())
        .collect();
    let v_oracle = dense_solve_oracle(&rows, &injections);
    for i in 0..n {
        assert!((v[i] - v_oracle[i]).norm() < 1e-9);
    }
}

#[test]
fn load_delta_full_system_shift_matches_worked_example() {
    // +100 MW on each load bus of the two-area case is +1.0 p.u. each.
    let case = builtin::two_area();
    let loads = case.load_buses();
    let shifted = apply_case_modifier(
        &case,
        &CaseModifier::LoadDelta {
            buses: loads.clone(),
            delta_p: 1.0,
        },
    )
    .unwrap();
    for id in loads {
        let before = case.bus(id).unwrap().load_p;
        let after = shifted.bus(id).unwrap().load_p;
        assert!((after - before - 1.0).abs() < 1e-12);
    }
    let pf = solve_power_flow(&shifted).unwrap();
    assert!(pf.converged);
}

// ---------------------------------------------------------------------------
// Properties
// ---------------------------------------------------------------------------

fn arbitrary_ring_case(n: usize, seed_loads: Vec<(f64, f64)>) -> GridCase {
    // ring of n buses, unit taps, mixed shunts; always connected
    let mut text = String::from("BASEMVA 100.0\n");
    for i in 0..n {
        let kind = if i == 0 { "slack" } else { "pq" };
        let (p, q) = seed_loads[i];
        text += &format!("BUS {} {kind} 1.0 {p} {q}\n", i + 1);
    }
    for i in 0..n {
        let a = i + 1;
        let b = (i + 1) % n + 1;
        let r = 0.002 + 0.001 * (i as f64);
        let x = 0.02 + 0.005 * (i as f64);
        let c = 0.01 * (i % 3) as f64;
        text += &format!("BRANCH {a} {b} {r} {x} {c} 1.0\n");
    }
    text += "GEN 1 1 10.0 1.0 0.1 1.0\n";
    parse_case(&text).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Row sums of the admittance matrix minus the total bus shunt vanish
    /// (Kirchhoff structural check) for unit-tap networks.
    #[test]
    fn ybus_row_sums_equal_bus_shunt(n in 3usize..9, loads in proptest::collection::vec((0.0..2.0f64, 0.0..0.5f64), 9)) {
        let case = arbitrary_ring_case(n, loads);
        let y = build_admittance_matrix(&case, &BTreeSet::new()).unwrap();
        for i in 0..n {
            let row_sum: Complex64 = (0..n).map(|j| y.get(i, j)).sum();
            // per-bus shunt here is the summed line-charging halves
            let shunt: Complex64 = case
                .branches
                .iter()
                .filter(|br| case.bus_index(br.from).unwrap() == i || case.bus_index(br.to).unwrap() == i)
                .map(|br| Complex64::new(0.0, br.shunt_b / 2.0))
                .sum();
            prop_assert!((row_sum - shunt).norm() < 1e-12);
        }
    }

    /// Convergence implies small recomputed residual on random loadings.
    #[test]
    fn powerflow_residual_property(p1 in 0.0..1.5f64, p2 in 0.0..1.5f64, q in 0.0..0.4f64) {
        let case = arbitrary_ring_case(4, vec![(0.0, 0.0), (p1, q), (p2, q), (0.3, 0.1)]);
        let pf = solve_power_flow(&case).unwrap();
        if pf.converged {
            prop_assert!(residual_max(&case, &pf.voltage_magnitude, &pf.voltage_angle) < PF_TOLERANCE);
        }
    }
}
