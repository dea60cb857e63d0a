//! Augmented network admittance matrix: branches, constant-impedance loads,
//! machine Norton admittances and fault shunts.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::case::{build_ybus, PowerFlowCase, SparseYbus};
use crate::error::{Error, Result};
use crate::linalg::Lu;

#[derive(Debug, Clone)]
pub struct Network {
    pub bus_ids: Vec<u32>,
    index: BTreeMap<u32, usize>,
    base: SparseYbus,
    /// Norton admittance per dynamic unit slot, `None` when absent or tripped.
    nortons: Vec<Option<(usize, Complex64)>>,
    faults: BTreeMap<usize, Complex64>,
    lu: Option<Lu<Complex64>>,
    pub factorizations: usize,
}

impl Network {
    /// Loads become constant admittances at the power-flow voltages `v`.
    pub fn new(case: &PowerFlowCase, v: &[Complex64]) -> Result<Self> {
        let mut base = build_ybus(case)?;
        let index = case.bus_index();
        for l in &case.loads {
            let i = *index.get(&l.bus).ok_or(Error::UnknownBus(l.bus))?;
            let vm2 = v[i].norm_sqr();
            if vm2 > 0.0 {
                let s = Complex64::new(l.p_mw, l.q_mvar) / case.sbase_mva;
                base.add(i, i, s.conj() / vm2);
            }
        }
        Ok(Network {
            bus_ids: case.buses.iter().map(|b| b.id).collect(),
            index,
            base,
            nortons: Vec::new(),
            faults: BTreeMap::new(),
            lu: None,
            factorizations: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.bus_ids.len()
    }

    pub fn bus(&self, id: u32) -> Result<usize> {
        self.index.get(&id).copied().ok_or(Error::UnknownBus(id))
    }

    /// Register a Norton admittance and return its slot.
    pub fn add_norton(&mut self, bus: usize, y: Complex64) -> usize {
        self.nortons.push(Some((bus, y)));
        self.lu = None;
        self.nortons.len() - 1
    }

    pub fn remove_norton(&mut self, slot: usize) {
        self.nortons[slot] = None;
        self.lu = None;
    }

    pub fn set_fault(&mut self, bus: usize, y: Complex64) {
        self.faults.insert(bus, y);
        self.lu = None;
    }

    pub fn clear_fault(&mut self, bus: usize) -> bool {
        self.lu = None;
        self.faults.remove(&bus).is_some()
    }

    pub fn faulted_buses(&self) -> impl Iterator<Item = usize> + '_ {
        self.faults.keys().copied()
    }

    /// Dense augmented matrix, assembled from scratch in a fixed order.
    pub fn augmented(&self) -> Vec<Complex64> {
        let n = self.dim();
        let mut a = vec![Complex64::new(0.0, 0.0); n * n];
        for (i, j, y) in self.base.iter() {
            a[i * n + j] += y;
        }
        for &(i, y) in self.nortons.iter().flatten() {
            a[i * n + i] += y;
        }
        for (&i, &y) in &self.faults {
            a[i * n + i] += y;
        }
        a
    }

    fn ensure_factored(&mut self) -> Result<&Lu<Complex64>> {
        if self.lu.is_none() {
            let n = self.dim();
            let lu = Lu::factor(n, self.augmented()).map_err(|p| Error::VoltageCollapse {
                bus: self.bus_ids[p.0.min(n.saturating_sub(1))],
                time: f64::NAN,
            })?;
            self.factorizations += 1;
            self.lu = Some(lu);
        }
        Ok(self.lu.as_ref().expect("factored"))
    }

    /// Solve `Y·V = I` for bus voltages.
    pub fn solve(&mut self, currents: &[Complex64]) -> Result<Vec<Complex64>> {
        if self.dim() == 0 {
            return Ok(Vec::new());
        }
        Ok(self.ensure_factored()?.solve(currents))
    }
}
