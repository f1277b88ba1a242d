//! Algebraic network solve for the dynamic simulation.
//!
//! Constant-impedance loads, stalled motors, generator Norton admittances,
//! active shunt devices, and fault shunts enter the admittance matrix;
//! running motors are constant-power injections resolved by a fixed-point
//! current-injection iteration. The LU factorization is reused as long as
//! the assembled diagonal is unchanged.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector, Dyn};
use num_complex::Complex64;

use super::{SimError, SimulationState};
use crate::net::{build_admittance_matrix, GridCase, NetError};

/// Below this voltage magnitude the constant-power motor current is
/// evaluated at the floor voltage, which bounds the injection near faults.
pub const MOTOR_POWER_VOLTAGE_FLOOR: f64 = 0.4;

/// Fixed-point tolerance on the voltage update, p.u.
const FIXED_POINT_TOL: f64 = 1e-9;
/// Iteration budget; past this the solve is declared diverged.
const FIXED_POINT_LIMIT: usize = 20;

#[derive(Debug, Clone)]
struct MotorEntry {
    bus: usize,
    /// Motor active power at full load fraction, p.u.
    p_rated: f64,
    q_ratio: f64,
    /// Stalled admittance per 1 p.u. of motor load.
    y_stall_unit: Complex64,
}

#[derive(Debug)]
pub struct NetworkSolver {
    /// Branch-only admittance matrix, dense.
    base: DMatrix<Complex64>,
    /// Constant-impedance load admittance per bus at full load fraction.
    static_load_y: Vec<Complex64>,
    motors: Vec<MotorEntry>,
    /// (bus, Norton admittance) per generator.
    gen: Vec<(usize, Complex64)>,
    cached_diag: Vec<Complex64>,
    cached_lu: Option<nalgebra::LU<Complex64, Dyn, Dyn>>,
}

impl Clone for NetworkSolver {
    fn clone(&self) -> Self {
        Self {
            base: self.base.clone(),
            static_load_y: self.static_load_y.clone(),
            motors: self.motors.clone(),
            gen: self.gen.clone(),
            cached_diag: Vec::new(),
            cached_lu: None,
        }
    }
}

impl NetworkSolver {
    pub fn new(case: &GridCase) -> Result<Self, NetError> {
        let base = build_admittance_matrix(case, &BTreeSet::new())?.to_dense();
        let n = case.buses.len();

        // Loads convert to admittance at the bus voltage setpoint first;
        // init_operating_point refines this to the solved voltages.
        let motors: Vec<MotorEntry> = case
            .motor_loads
            .iter()
            .map(|m| MotorEntry {
                bus: case.bus_index(m.bus).unwrap(),
                p_rated: case.bus(m.bus).unwrap().load_p * m.fraction,
                q_ratio: m.params.q_ratio,
                y_stall_unit: Complex64::new(m.params.stall_g, m.params.stall_b),
            })
            .collect();

        let gen = case
            .generators
            .iter()
            .map(|g| {
                (
                    case.bus_index(g.bus).unwrap(),
                    Complex64::new(1.0, 0.0) / Complex64::new(0.0, g.xd_prime),
                )
            })
            .collect();

        let mut solver = Self {
            base,
            static_load_y: vec![Complex64::ZERO; n],
            motors,
            gen,
            cached_diag: Vec::new(),
            cached_lu: None,
        };
        let v0: Vec<Complex64> = case
            .buses
            .iter()
            .map(|b| Complex64::new(b.voltage_setpoint, 0.0))
            .collect();
        solver.set_operating_point(case, &v0);
        Ok(solver)
    }

    /// Fix the constant-impedance conversion point. Called with the solved
    /// pre-disturbance voltages so the initial state is an exact fixed point.
    pub fn set_operating_point(&mut self, case: &GridCase, v0: &[Complex64]) {
        for (i, bus) in case.buses.iter().enumerate() {
            let motor_p = case
                .motor_at(bus.id)
                .map(|m| bus.load_p * m.fraction)
                .unwrap_or(0.0);
            let q_motor = case
                .motor_at(bus.id)
                .map(|m| m.params.q_ratio * motor_p)
                .unwrap_or(0.0);
            let s_static = Complex64::new(bus.load_p - motor_p, bus.load_q - q_motor);
            let vm2 = v0[i].norm_sqr().max(1e-12);
            self.static_load_y[i] = s_static.conj() / vm2;
        }
        self.cached_diag.clear();
        self.cached_lu = None;
    }

    fn assemble_diag(&self, case: &GridCase, state: &SimulationState) -> Vec<Complex64> {
        let n = self.static_load_y.len();
        let mut diag = vec![Complex64::ZERO; n];
        for (i, bus) in case.buses.iter().enumerate() {
            let frac = state
                .remaining_load_fraction
                .get(&bus.id)
                .copied()
                .unwrap_or(1.0);
            diag[i] += self.static_load_y[i] * frac;
        }
        for &(bus, y) in &self.gen {
            diag[bus] += y;
        }
        for id in &state.active_shunts {
            if let Some(sh) = case.shunt(*id) {
                let i = case.bus_index(sh.bus).unwrap();
                diag[i] += Complex64::new(sh.g, sh.b);
            }
        }
        for (&bus, &y) in &state.active_faults {
            diag[bus] += y;
        }
        for (entry, motor) in self.motors.iter().zip(&state.motors) {
            let frac = state
                .remaining_load_fraction
                .get(&case.buses[entry.bus].id)
                .copied()
                .unwrap_or(1.0);
            let stalled_p = entry.p_rated * frac * motor.stalled_fraction;
            diag[entry.bus] += entry.y_stall_unit * stalled_p;
        }
        diag
    }

    fn ensure_factorized(&mut self, diag: &[Complex64]) {
        if self.cached_lu.is_some() && self.cached_diag == diag {
            return;
        }
        let mut full = self.base.clone();
        for (i, d) in diag.iter().enumerate() {
            full[(i, i)] += d;
        }
        self.cached_lu = Some(full.lu());
        self.cached_diag = diag.to_vec();
    }

    /// Solve for bus voltages given generator internal EMFs; `v` holds the
    /// warm start on input and the solution on output.
    pub fn solve(
        &mut self,
        case: &GridCase,
        state: &SimulationState,
        emf: &[Complex64],
        v: &mut Vec<Complex64>,
    ) -> Result<(), SimError> {
        let diag = self.assemble_diag(case, state);
        self.ensure_factorized(&diag);
        let lu = self.cached_lu.as_ref().expect("factorized above");

        let mut base_inj = DVector::from_element(self.static_load_y.len(), Complex64::ZERO);
        for (k, &(bus, y)) in self.gen.iter().enumerate() {
            base_inj[bus] += emf[k] * y;
        }

        // running-motor constant-power demand per motor, at this state
        let motor_power: Vec<(usize, Complex64)> = self
            .motors
            .iter()
            .zip(&state.motors)
            .filter_map(|(entry, motor)| {
                let frac = state
                    .remaining_load_fraction
                    .get(&case.buses[entry.bus].id)
                    .copied()
                    .unwrap_or(1.0);
                let p = entry.p_rated * frac * motor.run_fraction;
                (p > 1e-12).then(|| {
                    (
                        entry.bus,
                        Complex64::new(p, p * entry.q_ratio),
                    )
                })
            })
            .collect();

        if motor_power.is_empty() {
            let sol = lu
                .solve(&base_inj)
                .ok_or(SimError::SingularNetwork { time: state.time })?;
            v.clear();
            v.extend(sol.iter().copied());
            return Ok(());
        }

        if self.fixed_point(state, &base_inj, &motor_power, v)? {
            return Ok(());
        }
        // Large topology changes (fault on/off) leave the warm start far
        // from the solution and the plain iteration can stall. Solve the
        // reduced motor-bus subsystem by damped Newton instead.
        self.newton_motor_solve(state, &base_inj, &motor_power, v)
    }

    /// Newton on V_m = V_open + Z_mm I(V_m) over the motor buses, then one
    /// full back-substitution for all voltages.
    fn newton_motor_solve(
        &self,
        state: &SimulationState,
        base_inj: &DVector<Complex64>,
        motor_power: &[(usize, Complex64)],
        v: &mut Vec<Complex64>,
    ) -> Result<(), SimError> {
        let lu = self.cached_lu.as_ref().expect("factorized");
        let n = base_inj.len();
        let m = motor_power.len();
        let v_open_full = lu
            .solve(base_inj)
            .ok_or(SimError::SingularNetwork { time: state.time })?;
        let mut z = vec![vec![Complex64::ZERO; m]; m];
        for (col, &(bus_j, _)) in motor_power.iter().enumerate() {
            let mut unit = DVector::from_element(n, Complex64::ZERO);
            unit[bus_j] = Complex64::new(1.0, 0.0);
            let col_v = lu
                .solve(&unit)
                .ok_or(SimError::SingularNetwork { time: state.time })?;
            for (row, &(bus_i, _)) in motor_power.iter().enumerate() {
                z[row][col] = col_v[bus_i];
            }
        }
        let current = |vm: Complex64, s: Complex64| -> Complex64 {
            let mag = vm.norm();
            if mag < MOTOR_POWER_VOLTAGE_FLOOR {
                -s.conj() * vm / (MOTOR_POWER_VOLTAGE_FLOOR * MOTOR_POWER_VOLTAGE_FLOOR)
            } else {
                -(s / vm).conj()
            }
        };
        let residual = |x: &[Complex64]| -> Vec<Complex64> {
            (0..m)
                .map(|i| {
                    let mut acc = x[i] - v_open_full[motor_power[i].0];
                    for j in 0..m {
                        acc -= z[i][j] * current(x[j], motor_power[j].1);
                    }
                    acc
                })
                .collect()
        };
        let norm = |f: &[Complex64]| f.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();

        let mut x: Vec<Complex64> = motor_power.iter().map(|&(bus, _)| v[bus]).collect();
        let mut f = residual(&x);
        let mut fnorm = norm(&f);
        for _ in 0..30 {
            if fnorm < FIXED_POINT_TOL {
                break;
            }
            // real 2m x 2m Jacobian via Wirtinger blocks of dI/dv
            let mut jac = nalgebra::DMatrix::<f64>::zeros(2 * m, 2 * m);
            for i in 0..m {
                jac[(2 * i, 2 * i)] += 1.0;
                jac[(2 * i + 1, 2 * i + 1)] += 1.0;
                for j in 0..m {
                    let s = motor_power[j].1;
                    let vm = x[j];
                    // dI/dv (p) and dI/dconj(v) (q)
                    let (p, q) = if vm.norm() < MOTOR_POWER_VOLTAGE_FLOOR {
                        (
                            -s.conj()
                                / (MOTOR_POWER_VOLTAGE_FLOOR * MOTOR_POWER_VOLTAGE_FLOOR),
                            Complex64::ZERO,
                        )
                    } else {
                        (Complex64::ZERO, s.conj() / (vm.conj() * vm.conj()))
                    };
                    // block of -Z[i][j] * dI_j
                    let zp = -z[i][j] * p;
                    let zq = -z[i][j] * q;
                    jac[(2 * i, 2 * j)] += (zp + zq).re;
                    jac[(2 * i, 2 * j + 1)] += (zq - zp).im;
                    jac[(2 * i + 1, 2 * j)] += (zp + zq).im;
                    jac[(2 * i + 1, 2 * j + 1)] += (zp - zq).re;
                }
            }
            let mut rhs = nalgebra::DVector::<f64>::zeros(2 * m);
            for i in 0..m {
                rhs[2 * i] = -f[i].re;
                rhs[2 * i + 1] = -f[i].im;
            }
            let dx = jac
                .lu()
                .solve(&rhs)
                .ok_or(SimError::AlgebraicDivergence { time: state.time })?;
            // backtrack until the residual shrinks
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..6 {
                let trial: Vec<Complex64> = (0..m)
                    .map(|i| x[i] + alpha * Complex64::new(dx[2 * i], dx[2 * i + 1]))
                    .collect();
                let ft = residual(&trial);
                let fn_t = norm(&ft);
                if fn_t < fnorm {
                    x = trial;
                    f = ft;
                    fnorm = fn_t;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                return Err(SimError::AlgebraicDivergence { time: state.time });
            }
        }
        if fnorm >= FIXED_POINT_TOL {
            return Err(SimError::AlgebraicDivergence { time: state.time });
        }
        let mut inj = base_inj.clone();
        for (j, &(bus, s)) in motor_power.iter().enumerate() {
            inj[bus] += current(x[j], s);
        }
        let sol = lu
            .solve(&inj)
            .ok_or(SimError::SingularNetwork { time: state.time })?;
        v.clear();
        v.extend(sol.iter().copied());
        Ok(())
    }

    /// Plain current-injection iteration from the warm start in `v`.
    /// Returns whether it settled below tolerance; `v` holds the last
    /// iterate either way.
    fn fixed_point(
        &self,
        state: &SimulationState,
        base_inj: &DVector<Complex64>,
        motor_power: &[(usize, Complex64)],
        v: &mut Vec<Complex64>,
    ) -> Result<bool, SimError> {
        let lu = self.cached_lu.as_ref().expect("factorized");
        for iter in 0..FIXED_POINT_LIMIT {
            let mut inj = base_inj.clone();
            for &(bus, s) in motor_power {
                let vb = v[bus];
                let vm = vb.norm();
                if vm < MOTOR_POWER_VOLTAGE_FLOOR {
                    // below the floor the motor behaves as the impedance
                    // that would draw S at the floor voltage; continuous
                    // at the floor and vanishing with V
                    inj[bus] -= s.conj() * vb
                        / (MOTOR_POWER_VOLTAGE_FLOOR * MOTOR_POWER_VOLTAGE_FLOOR);
                } else {
                    inj[bus] -= (s / vb).conj();
                }
            }
            let sol = lu
                .solve(&inj)
                .ok_or(SimError::SingularNetwork { time: state.time })?;
            let mut err: f64 = 0.0;
            for (i, s) in sol.iter().enumerate() {
                err = err.max((s - v[i]).norm());
            }
            if iter < 8 {
                v.clear();
                v.extend(sol.iter().copied());
            } else {
                // damp late iterations to settle oscillatory modes
                for (c, s) in v.iter_mut().zip(sol.iter()) {
                    *c = 0.5 * (*c + s);
                }
            }
            if err < FIXED_POINT_TOL {
                return Ok(true);
            }
        }
        Ok(false)
    }
}
