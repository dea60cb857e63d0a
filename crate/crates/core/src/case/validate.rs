use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{BranchStatus, BusKind, PowerFlowCase};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding {
    /// Object the finding is about, e.g. `branch[3] 4-5`.
    pub object: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<Finding>,
    pub warnings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    fn error(&mut self, object: impl Into<String>, message: impl Into<String>) {
        self.errors.push(Finding {
            object: object.into(),
            message: message.into(),
        });
    }

    fn warn(&mut self, object: impl Into<String>, message: impl Into<String>) {
        self.warnings.push(Finding {
            object: object.into(),
            message: message.into(),
        });
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for f in &self.errors {
            out.push_str(&format!("error: {}: {}\n", f.object, f.message));
        }
        for f in &self.warnings {
            out.push_str(&format!("warning: {}: {}\n", f.object, f.message));
        }
        out.push_str(&format!(
            "{} error(s), {} warning(s)\n",
            self.errors.len(),
            self.warnings.len()
        ));
        out
    }
}

/// Islands of the closed-branch graph, each as a sorted list of bus indices.
pub(crate) fn islands(case: &PowerFlowCase) -> Vec<Vec<usize>> {
    let index = case.bus_index();
    let n = case.buses.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for br in case.branches.iter().filter(|b| b.status == BranchStatus::Closed) {
        if let (Some(&a), Some(&b)) = (index.get(&br.from_bus), index.get(&br.to_bus)) {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

pub fn validate_case(case: &PowerFlowCase) -> ValidationReport {
    let mut rep = ValidationReport::default();

    if !(case.sbase_mva > 0.0) {
        rep.error("case", "sbase_mva must be positive");
    }

    let mut seen = BTreeSet::new();
    for b in &case.buses {
        let obj = format!("bus {}", b.id);
        if b.id == 0 {
            rep.error(&obj, "bus id must be a positive integer");
        }
        if !seen.insert(b.id) {
            rep.error(&obj, "duplicate bus id");
        }
        if !(b.v_mag > 0.0) {
            rep.error(&obj, "v_mag must be positive");
        }
        if !(b.nominal_kv > 0.0) {
            rep.error(&obj, "nominal_kv must be positive");
        }
    }

    for (i, br) in case.branches.iter().enumerate() {
        let obj = format!("branch[{i}] {}-{}", br.from_bus, br.to_bus);
        for end in [br.from_bus, br.to_bus] {
            if !seen.contains(&end) {
                rep.error(&obj, format!("unresolved bus reference {end}"));
            }
        }
        if br.from_bus == br.to_bus {
            rep.error(&obj, "from_bus equals to_bus");
        }
        if br.status == BranchStatus::Closed && br.x == 0.0 {
            rep.error(&obj, "zero-reactance closed branch");
        }
        if !(br.tap > 0.0) {
            rep.error(&obj, "tap ratio must be positive");
        }
    }

    let mut gen_keys = BTreeSet::new();
    for g in &case.generators {
        let obj = g.key().to_string();
        if !seen.contains(&g.bus) {
            rep.error(&obj, format!("unresolved bus reference {}", g.bus));
        }
        if !gen_keys.insert(g.key()) {
            rep.error(&obj, "duplicate generator (bus, unit_id)");
        }
        if !(g.mbase > 0.0) {
            rep.error(&obj, "mbase must be positive");
        }
        if g.is_on() && !(g.p_min <= g.p_mw && g.p_mw <= g.p_max) {
            rep.error(&obj, "p_mw outside [p_min, p_max]");
        }
        if g.q_min > g.q_max {
            rep.error(&obj, "q_min exceeds q_max");
        }
    }
    for (i, l) in case.loads.iter().enumerate() {
        if !seen.contains(&l.bus) {
            rep.error(format!("load[{i}]"), format!("unresolved bus reference {}", l.bus));
        }
    }
    for (i, s) in case.shunts.iter().enumerate() {
        if !seen.contains(&s.bus) {
            rep.error(format!("shunt[{i}]"), format!("unresolved bus reference {}", s.bus));
        }
    }

    let index = case.bus_index();
    let mut gen_buses = BTreeSet::new();
    for g in case.generators.iter().filter(|g| g.is_on()) {
        if let Some(&i) = index.get(&g.bus) {
            gen_buses.insert(i);
        }
    }
    for island in islands(case) {
        let slacks: Vec<u32> = island
            .iter()
            .filter(|&&i| case.buses[i].kind == BusKind::Slack)
            .map(|&i| case.buses[i].id)
            .collect();
        let ids: Vec<u32> = island.iter().map(|&i| case.buses[i].id).collect();
        let obj = format!("island {:?}", ids);
        match slacks.len() {
            0 => rep.error(&obj, "no slack bus in island"),
            1 => {}
            _ => rep.error(&obj, format!("multiple slack buses {:?}", slacks)),
        }
        if !island.iter().any(|i| gen_buses.contains(i)) {
            rep.warn(&obj, "island has no in-service generation");
        }
    }
    rep
}
