//! Nodal admittance matrix assembly.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::case::{GridCase, ShuntId};
use super::NetError;

/// Sparse complex nodal admittance matrix in internal bus indexing.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmittanceMatrix {
    dimension: usize,
    entries: BTreeMap<(usize, usize), Complex64>,
}

impl AdmittanceMatrix {
    pub fn zeros(dimension: usize) -> Self {
        Self {
            dimension,
            entries: BTreeMap::new(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries
            .get(&(i, j))
            .copied()
            .unwrap_or(Complex64::ZERO)
    }

    pub fn add(&mut self, i: usize, j: usize, value: Complex64) {
        assert!(i < self.dimension && j < self.dimension, "index out of range");
        let cell = self.entries.entry((i, j)).or_insert(Complex64::ZERO);
        *cell += value;
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        self.entries.iter().map(|(&(i, j), &v)| (i, j, v))
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dimension, self.dimension);
        for (&(i, j), &v) in &self.entries {
            m[(i, j)] += v;
        }
        m
    }

    /// y = Y v
    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::ZERO; self.dimension];
        for (&(i, j), &y) in &self.entries {
            out[i] += y * v[j];
        }
        out
    }
}

/// Assemble the admittance matrix for all in-service branches plus the
/// listed shunt devices. Constant-impedance loads are *not* folded in here;
/// the dynamic simulator augments the matrix itself.
pub fn build_admittance_matrix(
    case: &GridCase,
    active_shunts: &BTreeSet<ShuntId>,
) -> Result<AdmittanceMatrix, NetError> {
    let n = case.buses.len();
    let mut y = AdmittanceMatrix::zeros(n);

    for br in &case.branches {
        let i = case
            .bus_index(br.from)
            .ok_or(NetError::UnknownBus(br.from.0))?;
        let j = case.bus_index(br.to).ok_or(NetError::UnknownBus(br.to.0))?;
        let ys = Complex64::new(1.0, 0.0) / Complex64::new(br.series_r, br.series_x);
        let ysh = Complex64::new(0.0, br.shunt_b / 2.0);
        let a = br.tap;
        y.add(i, i, (ys + ysh) / (a * a));
        y.add(j, j, ys + ysh);
        y.add(i, j, -ys / a);
        y.add(j, i, -ys / a);
    }

    for id in active_shunts {
        let sh = case.shunt(*id).ok_or(NetError::UnknownShunt(id.0))?;
        let i = case
            .bus_index(sh.bus)
            .ok_or(NetError::UnknownBus(sh.bus.0))?;
        y.add(i, i, Complex64::new(sh.g, sh.b));
    }

    Ok(y)
}
