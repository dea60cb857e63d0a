use std::collections::BTreeMap;

use num_complex::Complex64;

use super::{Branch, BranchStatus, PowerFlowCase};
use crate::error::{Error, Result};

/// Sparse complex bus admittance matrix in coordinate form, per unit on the
/// system base. Entries are kept sorted by (row, col).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseYbus {
    n: usize,
    entries: BTreeMap<(usize, usize), Complex64>,
}

impl SparseYbus {
    pub fn zeros(n: usize) -> Self {
        SparseYbus {
            n,
            entries: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries.get(&(i, j)).copied().unwrap_or_default()
    }

    pub fn add(&mut self, i: usize, j: usize, y: Complex64) {
        assert!(i < self.n && j < self.n, "ybus index out of range");
        *self.entries.entry((i, j)).or_default() += y;
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        self.entries.iter().map(|(&(i, j), &y)| (i, j, y))
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<Vec<Complex64>> {
        let mut m = vec![vec![Complex64::default(); self.n]; self.n];
        for (i, j, y) in self.iter() {
            m[i][j] = y;
        }
        m
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); self.n];
        for (i, j, y) in self.iter() {
            out[i] += y * v[j];
        }
        out
    }

    pub fn max_asymmetry(&self) -> f64 {
        self.iter()
            .map(|(i, j, y)| (y - self.get(j, i)).norm())
            .fold(0.0, f64::max)
    }
}

/// Pi-model stamp of one branch as `[(from,from), (from,to), (to,from), (to,to)]`
/// admittances. An off-nominal tap sits on the from side.
pub fn branch_stamp(br: &Branch) -> [Complex64; 4] {
    let ys = Complex64::new(br.r, br.x).inv();
    let bc = Complex64::new(0.0, br.b_charging / 2.0);
    let t = br.tap;
    [(ys + bc) / (t * t), -ys / t, -ys / t, ys + bc]
}

pub fn build_ybus(case: &PowerFlowCase) -> Result<SparseYbus> {
    let index = case.bus_index();
    let idx = |id: u32| index.get(&id).copied().ok_or(Error::UnknownBus(id));
    let mut y = SparseYbus::zeros(case.buses.len());
    for br in &case.branches {
        let (f, t) = (idx(br.from_bus)?, idx(br.to_bus)?);
        if br.status == BranchStatus::Open {
            continue;
        }
        let [ff, ft, tf, tt] = branch_stamp(br);
        y.add(f, f, ff);
        y.add(f, t, ft);
        y.add(t, f, tf);
        y.add(t, t, tt);
    }
    for sh in &case.shunts {
        let i = idx(sh.bus)?;
        y.add(i, i, Complex64::new(sh.g_mw, sh.b_mvar) / case.sbase_mva);
    }
    for i in 0..y.dim() {
        // keep the diagonal structurally present even for isolated buses
        y.add(i, i, Complex64::default());
    }
    Ok(y)
}
