//! Newton-Raphson AC power flow in polar form.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::case::{BusKind, GridCase};
use super::ybus::build_admittance_matrix;
use super::NetError;

/// Convergence threshold on the largest power mismatch, in p.u.
pub const PF_TOLERANCE: f64 = 1e-8;
/// Hard iteration limit.
pub const PF_ITERATION_LIMIT: usize = 50;

#[derive(Debug, Clone)]
pub struct PowerFlowSolution {
    /// Voltage magnitude per bus in case order, p.u.
    pub voltage_magnitude: Vec<f64>,
    /// Voltage angle per bus, rad.
    pub voltage_angle: Vec<f64>,
    /// Complex power injected by the slack bus, p.u.
    pub slack_injection: Complex64,
    /// Complex power injected by each generator, aligned with
    /// `case.generators` (bus injection plus the local load).
    pub generator_injections: Vec<Complex64>,
    pub converged: bool,
    pub iterations: usize,
    pub max_mismatch: f64,
}

impl PowerFlowSolution {
    pub fn complex_voltages(&self) -> Vec<Complex64> {
        self.voltage_magnitude
            .iter()
            .zip(&self.voltage_angle)
            .map(|(&m, &a)| Complex64::from_polar(m, a))
            .collect()
    }
}

/// Specified net injection per bus: generation setpoints minus load.
fn specified_injections(case: &GridCase) -> Vec<Complex64> {
    let mut s = vec![Complex64::ZERO; case.buses.len()];
    for (i, bus) in case.buses.iter().enumerate() {
        s[i] -= Complex64::new(bus.load_p, bus.load_q);
    }
    for gen in &case.generators {
        let i = case.bus_index(gen.bus).unwrap();
        s[i] += Complex64::new(gen.p_set, 0.0);
    }
    s
}

/// Solve the case with a flat start. Structural defects are errors;
/// numerical failure is reported through `converged = false`.
pub fn solve_power_flow(case: &GridCase) -> Result<PowerFlowSolution, NetError> {
    case.validate()?;
    let n = case.buses.len();
    let y = build_admittance_matrix(case, &BTreeSet::new())?.to_dense();
    let s_spec = specified_injections(case);

    let mut vm: Vec<f64> = case
        .buses
        .iter()
        .map(|b| match b.kind {
            BusKind::Pq => 1.0,
            _ => b.voltage_setpoint,
        })
        .collect();
    let mut va = vec![0.0_f64; n];

    let pv: Vec<usize> = (0..n)
        .filter(|&i| case.buses[i].kind == BusKind::Pv)
        .collect();
    let pq: Vec<usize> = (0..n)
        .filter(|&i| case.buses[i].kind == BusKind::Pq)
        .collect();
    let pv_pq: Vec<usize> = pv.iter().chain(pq.iter()).copied().collect();
    let npv = pv.len();
    let npq = pq.len();

    let calc = |vm: &[f64], va: &[f64]| -> Vec<Complex64> {
        let v: Vec<Complex64> = vm
            .iter()
            .zip(va)
            .map(|(&m, &a)| Complex64::from_polar(m, a))
            .collect();
        let iv = &y * DVector::from_vec(v.clone());
        (0..n).map(|i| v[i] * iv[i].conj()).collect()
    };

    let mismatch = |s_calc: &[Complex64]| -> (DVector<f64>, f64) {
        let mut f = DVector::zeros(npv + 2 * npq);
        for (k, &i) in pv_pq.iter().enumerate() {
            f[k] = s_spec[i].re - s_calc[i].re;
        }
        for (k, &i) in pq.iter().enumerate() {
            f[npv + npq + k] = s_spec[i].im - s_calc[i].im;
        }
        let norm = f.iter().fold(0.0_f64, |m, &x| m.max(x.abs()));
        (f, norm)
    };

    let mut s_calc = calc(&vm, &va);
    let (mut f, mut norm_f) = mismatch(&s_calc);
    let mut iterations = 0;
    let mut converged = norm_f < PF_TOLERANCE;

    while !converged && iterations < PF_ITERATION_LIMIT {
        iterations += 1;

        // Polar power-flow Jacobian, built entry by entry.
        let m = npv + 2 * npq;
        let mut jac = DMatrix::zeros(m, m);
        let v: Vec<Complex64> = vm
            .iter()
            .zip(&va)
            .map(|(&mm, &a)| Complex64::from_polar(mm, a))
            .collect();
        let dp_dth = |i: usize, j: usize| -> f64 {
            if i == j {
                -s_calc[i].im - y[(i, i)].im * vm[i] * vm[i]
            } else {
                let (g, b) = (y[(i, j)].re, y[(i, j)].im);
                let th = va[i] - va[j];
                vm[i] * vm[j] * (g * th.sin() - b * th.cos())
            }
        };
        let dp_dvm = |i: usize, j: usize| -> f64 {
            if i == j {
                s_calc[i].re / vm[i] + y[(i, i)].re * vm[i]
            } else {
                let (g, b) = (y[(i, j)].re, y[(i, j)].im);
                let th = va[i] - va[j];
                vm[i] * (g * th.cos() + b * th.sin())
            }
        };
        let dq_dth = |i: usize, j: usize| -> f64 {
            if i == j {
                s_calc[i].re - y[(i, i)].re * vm[i] * vm[i]
            } else {
                let (g, b) = (y[(i, j)].re, y[(i, j)].im);
                let th = va[i] - va[j];
                -vm[i] * vm[j] * (g * th.cos() + b * th.sin())
            }
        };
        let dq_dvm = |i: usize, j: usize| -> f64 {
            if i == j {
                s_calc[i].im / vm[i] - y[(i, i)].im * vm[i]
            } else {
                let (g, b) = (y[(i, j)].re, y[(i, j)].im);
                let th = va[i] - va[j];
                vm[i] * (g * th.sin() - b * th.cos())
            }
        };
        let _ = &v;

        for (r, &i) in pv_pq.iter().enumerate() {
            for (c, &j) in pv_pq.iter().enumerate() {
                jac[(r, c)] = dp_dth(i, j);
            }
            for (c, &j) in pq.iter().enumerate() {
                jac[(r, npv + npq + c)] = dp_dvm(i, j);
            }
        }
        for (r, &i) in pq.iter().enumerate() {
            for (c, &j) in pv_pq.iter().enumerate() {
                jac[(npv + npq + r, c)] = dq_dth(i, j);
            }
            for (c, &j) in pq.iter().enumerate() {
                jac[(npv + npq + r, npv + npq + c)] = dq_dvm(i, j);
            }
        }

        let lu = jac.lu();
        let dx = match lu.solve(&f) {
            Some(dx) if dx.iter().all(|x| x.is_finite()) => dx,
            _ => {
                // Singular Jacobian: report honestly instead of crashing.
                return Ok(finish(case, vm, va, s_calc, false, iterations, norm_f));
            }
        };

        // Backtracking on the Newton step: a full step from a poor start can
        // overshoot; halve until the mismatch norm stops growing.
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..6 {
            let mut vm_t = vm.clone();
            let mut va_t = va.clone();
            for (k, &i) in pv_pq.iter().enumerate() {
                va_t[i] += alpha * dx[k];
            }
            for (k, &i) in pq.iter().enumerate() {
                vm_t[i] += alpha * dx[npv + npq + k];
            }
            let s_t = calc(&vm_t, &va_t);
            let (nf, nn) = mismatch(&s_t);
            if nn.is_finite() && nn < norm_f {
                vm = vm_t;
                va = va_t;
                s_calc = s_t;
                f = nf;
                norm_f = nn;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Ok(finish(case, vm, va, s_calc, false, iterations, norm_f));
        }
        converged = norm_f < PF_TOLERANCE;
    }

    Ok(finish(case, vm, va, s_calc, converged, iterations, norm_f))
}

fn finish(
    case: &GridCase,
    vm: Vec<f64>,
    va: Vec<f64>,
    s_calc: Vec<Complex64>,
    converged: bool,
    iterations: usize,
    max_mismatch: f64,
) -> PowerFlowSolution {
    let slack = case.slack_index().expect("validated");
    let generator_injections = case
        .generators
        .iter()
        .map(|g| {
            let i = case.bus_index(g.bus).unwrap();
            s_calc[i] + Complex64::new(case.buses[i].load_p, case.buses[i].load_q)
        })
        .collect();
    PowerFlowSolution {
        voltage_magnitude: vm,
        voltage_angle: va,
        slack_injection: s_calc[slack],
        generator_injections,
        converged,
        iterations,
        max_mismatch,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::parse_case;

    #[test]
    fn no_injection_case_is_flat() {
        let case = parse_case(
            "\
BASEMVA 100.0
BUS 1 slack 1.02 0.0 0.0
BUS 2 pq 1.0 0.0 0.0
BRANCH 1 2 0.0 0.1 0.0 1.0
",
        )
        .unwrap();
        let pf = solve_power_flow(&case).unwrap();
        assert!(pf.converged);
        // No loads and no setpoints: solved state keeps angles at zero and
        // the PQ magnitude settles at the slack setpoint over a lossless line.
        assert!(pf.voltage_angle.iter().all(|&a| a.abs() < 1e-10));
        assert!((pf.voltage_magnitude[1] - 1.02).abs() < 1e-8);
        assert!(pf.slack_injection.norm() < 1e-8);
    }

    #[test]
    fn two_bus_load_matches_hand_solution() {
        // P2 = -0.5, line x = 0.1: by hand, angle2 solves
        // -0.5 = -(v1 v2 / x) sin(th2) with v2 from the Q equation.
        let case = parse_case(
            "\
BASEMVA 100.0
BUS 1 slack 1.0 0.0 0.0
BUS 2 pq 1.0 0.5 0.2
BRANCH 1 2 0.0 0.1 0.0 1.0
",
        )
        .unwrap();
        let pf = solve_power_flow(&case).unwrap();
        assert!(pf.converged);
        assert!(pf.max_mismatch < PF_TOLERANCE);
        // residual check straight from the solution
        let y = build_admittance_matrix(&case, &BTreeSet::new())
            .unwrap()
            .to_dense();
        let v = nalgebra::DVector::from_vec(pf.complex_voltages());
        let s2 = v[1] * (&y * &v)[1].conj();
        assert!((s2.re + 0.5).abs() < 1e-8);
        assert!((s2.im + 0.2).abs() < 1e-8);
        // slack must cover the load exactly on a lossless line
        assert!((pf.slack_injection.re - 0.5).abs() < 1e-8);
    }

    #[test]
    fn infeasible_load_reports_nonconvergence() {
        // Far beyond the maximum power transfer of the line.
        let case = parse_case(
            "\
BASEMVA 100.0
BUS 1 slack 1.0 0.0 0.0
BUS 2 pq 1.0 50.0 20.0
BRANCH 1 2 0.0 0.5 0.0 1.0
",
        )
        .unwrap();
        let pf = solve_power_flow(&case).unwrap();
        assert!(!pf.converged);
    }
}
