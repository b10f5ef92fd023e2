//! Structural checks: representative adjacency, output witnesses, and the
//! locality / anonymity of step 1.

use rand::Rng;
use serde::Serialize;

use super::AuditError;
use crate::generate::trial_rng;
use crate::mechanism::{
    group_representatives, representatives_adjacent, run_quantile, step1_representatives, GroupRepresentatives, MechanismError,
    MechanismTrace, QuantileConfig,
};
use crate::model::{AgentDoc, GroupId, Instance, InstanceDoc};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessCheck {
    /// No candidate value lies strictly between any group's two representatives.
    pub adjacent: bool,
    /// Lowest-id group whose representative values equal the output, found
    /// independently of the mechanism's own witness search.
    pub witness: Option<GroupId>,
    /// The output slots are exactly the witness group's representative slots.
    pub slots_match: bool,
    pub trace: Option<MechanismTrace>,
    #[serde(skip)]
    pub error: Option<MechanismError>,
}

impl WitnessCheck {
    pub fn passed(&self) -> bool {
        self.adjacent && self.witness.is_some() && self.slots_match && self.error.is_none()
    }
}

pub fn check_witness_and_adjacency(inst: &Instance, cfg: QuantileConfig) -> WitnessCheck {
    let reps = step1_representatives(inst, cfg.alpha);
    let adjacent = reps.iter().all(|r| representatives_adjacent(inst.candidates(), r));
    match run_quantile(inst, cfg) {
        Ok(out) => {
            let (w1, w2) = (out.trace.w1, out.trace.w2);
            let found = reps.iter().find(|r| r.y1_value == w1 && r.y2_value == w2);
            let slots_match = found.is_some_and(|r| {
                let (a, b) = if r.y1 < r.y2 { (r.y1, r.y2) } else { (r.y2, r.y1) };
                out.placement.slots() == (a, b)
            });
            WitnessCheck {
                adjacent,
                witness: found.map(|r| r.group),
                slots_match,
                trace: Some(out.trace),
                error: None,
            }
        }
        Err(e) => WitnessCheck { adjacent, witness: None, slots_match: false, trace: None, error: Some(e) },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalityCheck {
    pub groups_checked: usize,
    pub mutations: usize,
    /// `(group, description)` for every mismatch.
    pub failures: Vec<(GroupId, String)>,
}

impl LocalityCheck {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn docs_for(groups: &[Vec<f64>], candidates: Vec<f64>) -> InstanceDoc {
    let mut next = 0;
    let agents = groups
        .iter()
        .enumerate()
        .flat_map(|(g, locs)| locs.iter().map(move |&x| (g, x)))
        .map(|(g, location)| {
            next += 1;
            AgentDoc { id: next, group: g as i64 + 1, location }
        })
        .collect();
    InstanceDoc { candidates, agents }
}

fn same_values(a: &GroupRepresentatives, b: &GroupRepresentatives) -> bool {
    a.y1 == b.y1 && a.y2 == b.y2 && a.location == b.location
}

/// For each group, rewrites the other groups `mutations` times (locations
/// and sizes) and checks the group's step-1 representatives do not move.
/// Also clones each group into a fresh extra group and checks both get the
/// same representatives.
pub fn check_locality(
    inst: &Instance,
    cfg: QuantileConfig,
    mutations: usize,
    seed: u64,
) -> Result<LocalityCheck, AuditError> {
    if inst.k() < 2 {
        return Err(AuditError::TooFewGroups);
    }
    let candidates: Vec<f64> = inst.candidates().values().collect();
    let locations: Vec<Vec<f64>> =
        inst.groups().iter().map(|g| g.iter().map(|a| a.location).collect()).collect();
    let (lo, hi) = inst.location_bounds();
    let pad = (hi - lo).max(1.0);
    let base = step1_representatives(inst, cfg.alpha);
    let mut failures = Vec::new();

    for (gi, rep) in base.iter().enumerate() {
        let gid = GroupId(gi + 1);
        let mut rng = trial_rng(seed, gi as u64);
        for round in 0..mutations {
            let mutated: Vec<Vec<f64>> = locations
                .iter()
                .enumerate()
                .map(|(j, locs)| {
                    if j == gi {
                        locs.clone()
                    } else {
                        let size = rng.gen_range(1..=locs.len() + 3);
                        (0..size).map(|_| rng.gen_range(lo - pad..=hi + pad)).collect()
                    }
                })
                .collect();
            let other = Instance::try_from(docs_for(&mutated, candidates.clone()))
                .expect("mutations keep instances valid");
            let got = step1_representatives(&other, cfg.alpha)[gi];
            if !same_values(rep, &got) {
                failures.push((gid, format!("mutation {round}: {rep:?} became {got:?}")));
            }
        }

        let mut cloned = locations.clone();
        cloned.push(locations[gi].clone());
        let twin = Instance::try_from(docs_for(&cloned, candidates.clone()))
            .expect("cloning a group keeps the instance valid");
        let fresh = GroupId(cloned.len());
        let twin_rep = group_representatives(fresh, twin.group(fresh), twin.candidates(), cfg.alpha);
        if !same_values(rep, &twin_rep) {
            failures.push((gid, format!("clone got {twin_rep:?}, original {rep:?}")));
        }
    }

    Ok(LocalityCheck { groups_checked: base.len(), mutations, failures })
}
