//! The (α, β)-Quantile family of distributed mechanisms.
//!
//! Step 1 runs inside each group: the `⌈α·n_d⌉`-th leftmost agent is picked
//! and the group's representatives are her nearest and second-nearest
//! candidate slots. Step 2 aggregates across groups: `w1` is the
//! `⌈β·k⌉`-th leftmost first representative, every group whose first
//! representative sits at `w1` swaps in its second one, and `w2` is the
//! same order statistic of the updated list.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Agent, AgentId, CandidateMultiset, GroupId, Instance, ObjectiveKind, Placement, SlotId};

/// Slack subtracted before taking a ceiling so that `q·n` landing a few ulps
/// above an integer does not bump the rank.
pub const QUANTILE_GUARD: f64 = 1e-12;

/// `(3 − √5) / 2`, the quantile that balances both branches of the
/// parametric distortion bound.
pub const GOLDEN_QUANTILE: f64 = 0.381_966_011_250_105_1;

/// 1-based rank `max(1, ⌈q·count − guard⌉)`, clamped to `count`.
pub fn quantile_index(q: f64, count: usize) -> usize {
    debug_assert!(count >= 1);
    let raw = (q * count as f64 - QUANTILE_GUARD).ceil();
    if raw < 1.0 {
        1
    } else {
        (raw as usize).min(count)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileConfig {
    pub alpha: f64,
    pub beta: f64,
}

impl QuantileConfig {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, MechanismError> {
        for q in [alpha, beta] {
            if !(0.0..=1.0).contains(&q) {
                return Err(MechanismError::QuantileOutOfRange(q));
            }
        }
        Ok(Self { alpha, beta })
    }
}

impl fmt::Display for QuantileConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.alpha, self.beta)
    }
}

/// The four headline mechanisms, one per objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    Aoa,
    Mom,
    Moa,
    Aom,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Aoa, Preset::Mom, Preset::Moa, Preset::Aom];

    pub fn config(self) -> QuantileConfig {
        let (alpha, beta) = match self {
            Preset::Aoa => (0.5, 0.5),
            Preset::Mom => (1.0, 1.0),
            Preset::Moa => (GOLDEN_QUANTILE, 1.0),
            Preset::Aom => (1.0, GOLDEN_QUANTILE),
        };
        QuantileConfig { alpha, beta }
    }

    pub fn objective(self) -> ObjectiveKind {
        match self {
            Preset::Aoa => ObjectiveKind::AoA,
            Preset::Mom => ObjectiveKind::MoM,
            Preset::Moa => ObjectiveKind::MoA,
            Preset::Aom => ObjectiveKind::AoM,
        }
    }

    pub fn for_objective(kind: ObjectiveKind) -> Self {
        match kind {
            ObjectiveKind::AoA => Preset::Aoa,
            ObjectiveKind::MoM => Preset::Mom,
            ObjectiveKind::MoA => Preset::Moa,
            ObjectiveKind::AoM => Preset::Aom,
        }
    }

    pub fn name(self) -> &'static str {
        self.objective().name()
    }
}

impl FromStr for Preset {
    type Err = MechanismError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse::<ObjectiveKind>()
            .map(Preset::for_objective)
            .map_err(|_| MechanismError::UnknownPreset(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MechanismError {
    #[error("quantile {0} outside [0, 1]")]
    QuantileOutOfRange(f64),
    #[error("unknown preset `{0}` (expected aoa, mom, moa or aom)")]
    UnknownPreset(String),
    #[error("no group representatives to aggregate")]
    NoGroups,
    #[error("output ({w1}, {w2}) matches no group's representative pair")]
    NonWitnessable { w1: f64, w2: f64 },
}

/// Closest slot to `x`; ties go to the smaller value, then the smaller slot.
///
/// # Panics
/// If `candidates` is empty.
pub fn nearest_candidate(x: f64, candidates: &CandidateMultiset) -> SlotId {
    nearest_excluding(x, candidates, None)
}

/// Closest slot to `x` once `excluded` is removed, same tie-break.
pub fn second_nearest(x: f64, candidates: &CandidateMultiset, excluded: SlotId) -> SlotId {
    nearest_excluding(x, candidates, Some(excluded))
}

fn nearest_excluding(x: f64, candidates: &CandidateMultiset, excluded: Option<SlotId>) -> SlotId {
    // Slots are sorted by (value, id), so the first strict minimum wins ties.
    let mut best: Option<(f64, SlotId)> = None;
    for slot in candidates.slots() {
        if Some(slot.id) == excluded {
            continue;
        }
        let d = (x - slot.value).abs();
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, slot.id));
        }
    }
    best.expect("candidate multiset must keep at least one slot").1
}

/// The `⌈α·n_d⌉`-th leftmost agent of a canonically ordered group.
pub fn quantile_agent(group: &[Agent], alpha: f64) -> &Agent {
    &group[quantile_index(alpha, group.len()) - 1]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupRepresentatives {
    pub group: GroupId,
    pub quantile_agent: AgentId,
    /// Reported location of the quantile agent.
    pub location: f64,
    pub y1: SlotId,
    pub y2: SlotId,
    pub y1_value: f64,
    pub y2_value: f64,
}

impl GroupRepresentatives {
    pub fn values(&self) -> (f64, f64) {
        (self.y1_value, self.y2_value)
    }
}

/// Step 1 for a single group. Reads nothing but that group's agents.
pub fn group_representatives(
    group: GroupId,
    agents: &[Agent],
    candidates: &CandidateMultiset,
    alpha: f64,
) -> GroupRepresentatives {
    let agent = quantile_agent(agents, alpha);
    let y1 = nearest_candidate(agent.location, candidates);
    let y2 = second_nearest(agent.location, candidates, y1);
    GroupRepresentatives {
        group,
        quantile_agent: agent.id,
        location: agent.location,
        y1,
        y2,
        y1_value: candidates.slots()[y1.0].value,
        y2_value: candidates.slots()[y2.0].value,
    }
}

/// No candidate value lies strictly between the two representative values.
///
/// Slot positions need not be neighbours: with duplicates the slot tie-break
/// can skip over an equal-valued slot.
pub fn representatives_adjacent(candidates: &CandidateMultiset, rep: &GroupRepresentatives) -> bool {
    let (lo, hi) = if rep.y1_value <= rep.y2_value {
        (rep.y1_value, rep.y2_value)
    } else {
        (rep.y2_value, rep.y1_value)
    };
    !candidates.values().any(|v| lo < v && v < hi)
}

pub fn step1_representatives(inst: &Instance, alpha: f64) -> Vec<GroupRepresentatives> {
    inst.groups()
        .iter()
        .enumerate()
        .map(|(i, agents)| group_representatives(GroupId(i + 1), agents, inst.candidates(), alpha))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanismTrace {
    pub representatives: Vec<GroupRepresentatives>,
    /// `z_d` per group (in group order) before the update.
    pub z_initial: Vec<f64>,
    /// `z_d` per group after groups sitting at `w1` swapped to `y2`.
    pub z_updated: Vec<f64>,
    /// 1-based rank used for both picks.
    pub rank: usize,
    pub w1: f64,
    pub w2: f64,
    /// Lowest-id group whose `(y1, y2)` values equal `(w1, w2)`.
    pub witness: GroupId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub placement: Placement,
    pub trace: MechanismTrace,
}

fn rank_value(z: &[f64], rank: usize) -> f64 {
    let mut order: Vec<(f64, usize)> = z.iter().copied().zip(0..).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    order[rank - 1].0
}

/// Step 2: aggregate the representatives into the final placement.
pub fn step2_aggregate(
    reps: &[GroupRepresentatives],
    beta: f64,
    candidates: &CandidateMultiset,
) -> Result<Outcome, MechanismError> {
    if reps.is_empty() {
        return Err(MechanismError::NoGroups);
    }
    let rank = quantile_index(beta, reps.len());
    let z_initial: Vec<f64> = reps.iter().map(|r| r.y1_value).collect();
    let w1 = rank_value(&z_initial, rank);
    let z_updated: Vec<f64> = reps
        .iter()
        .map(|r| if r.y1_value == w1 { r.y2_value } else { r.y1_value })
        .collect();
    let w2 = rank_value(&z_updated, rank);

    let witness = reps
        .iter()
        .find(|r| r.y1_value == w1 && r.y2_value == w2)
        .ok_or(MechanismError::NonWitnessable { w1, w2 })?;
    let placement = Placement::new(candidates, witness.y1, witness.y2)
        .expect("representative slots are distinct members of the multiset");

    Ok(Outcome {
        placement,
        trace: MechanismTrace {
            representatives: reps.to_vec(),
            z_initial,
            z_updated,
            rank,
            w1,
            w2,
            witness: witness.group,
        },
    })
}

/// Runs the full (α, β)-Quantile mechanism.
pub fn run_quantile(inst: &Instance, cfg: QuantileConfig) -> Result<Outcome, MechanismError> {
    let reps = step1_representatives(inst, cfg.alpha);
    step2_aggregate(&reps, cfg.beta, inst.candidates())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::eval_objective;
    use proptest::prelude::*;

    fn multiset(v: &[f64]) -> CandidateMultiset {
        CandidateMultiset::from_values(v.iter().copied())
    }

    /// Exhaustive check of the tie-break rule: smallest (distance, value, slot).
    fn brute_nearest(x: f64, c: &CandidateMultiset, excluded: Option<SlotId>) -> SlotId {
        c.slots()
            .iter()
            .filter(|s| Some(s.id) != excluded)
            .min_by(|a, b| {
                (x - a.value)
                    .abs()
                    .total_cmp(&(x - b.value).abs())
                    .then(a.value.total_cmp(&b.value))
                    .then(a.id.cmp(&b.id))
            })
            .unwrap()
            .id
    }

    #[test]
    fn golden_quantile_constant() {
        assert!((GOLDEN_QUANTILE - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-16);
    }

    #[test]
    fn nearest_examples() {
        let c = multiset(&[0.0, 0.0, 2.0, 2.0, 4.0, 4.0]);
        let t = nearest_candidate(1.0 - 0.01, &c);
        assert_eq!(t, SlotId(0));
        assert_eq!(second_nearest(1.0 - 0.01, &c, t), SlotId(1));

        let c = multiset(&[-1.0, 3.0, 7.5]);
        assert_eq!(nearest_candidate(3.0, &c), SlotId(1));

        let c = multiset(&[0.0, 1.0]);
        assert_eq!(nearest_candidate(0.5, &c), SlotId(0));
        assert_eq!(brute_nearest(0.5, &c, None), SlotId(0));
        assert_eq!(second_nearest(0.9, &c, SlotId(1)), SlotId(0));

        let c = multiset(&[0.0, 1.0, 3.0]);
        assert_eq!(second_nearest(0.4, &c, SlotId(0)), SlotId(1));
    }

    #[test]
    fn duplicate_slots_can_be_skipped() {
        let c = multiset(&[-2.0, -2.0, 0.0]);
        let t = nearest_candidate(0.0, &c);
        let s = second_nearest(0.0, &c, t);
        assert_eq!((t, s), (SlotId(2), SlotId(0)));
        let inst = Instance::from_groups(&[&[0.0]], &[-2.0, -2.0, 0.0]).unwrap();
        let r = step1_representatives(&inst, 1.0)[0];
        assert!(representatives_adjacent(inst.candidates(), &r));
    }

    #[test]
    fn quantile_ranks() {
        assert_eq!(quantile_index(GOLDEN_QUANTILE, 5), 2);
        assert_eq!(quantile_index(GOLDEN_QUANTILE, 2), 1);
        assert_eq!(quantile_index(0.0, 7), 1);
        assert_eq!(quantile_index(1.0, 7), 7);
        assert_eq!(quantile_index(0.5, 4), 2);
        assert_eq!(quantile_index(0.5, 5), 3);
        // 0.3 * 10 evaluates to 3.0000000000000004
        assert_eq!(quantile_index(0.3, 10), 3);

        let inst = Instance::from_groups(&[&[0.3, -2.0, 4.0, 1.0, 1.0]], &[0.0, 1.0]).unwrap();
        let g = inst.group(GroupId(1));
        assert_eq!(quantile_agent(g, 0.0).location, -2.0);
        assert_eq!(quantile_agent(g, 1.0).location, 4.0);
        assert_eq!(quantile_agent(g, GOLDEN_QUANTILE).location, 0.3);
    }

    #[test]
    fn step1_examples() {
        let t = 0.01;
        let a = [0.0, 0.0, 1.0, 1.0];
        let inst = Instance::from_groups(&[&[0.5, 0.5 + t]], &a).unwrap();
        let r = step1_representatives(&inst, 1.0);
        assert_eq!(r[0].values(), (1.0, 1.0));
        assert_eq!((r[0].y1, r[0].y2), (SlotId(2), SlotId(3)));

        let inst = Instance::from_groups(&[&[0.0]], &a).unwrap();
        assert_eq!(step1_representatives(&inst, 0.5)[0].values(), (0.0, 0.0));

        let inst = Instance::from_groups(&[&[0.2, 0.7], &[0.7, 0.2]], &[0.0, 0.5, 1.0]).unwrap();
        let r = step1_representatives(&inst, 0.5);
        assert_eq!(r[0].values(), r[1].values());
    }

    fn rep(group: usize, c: &CandidateMultiset, y1: usize, y2: usize) -> GroupRepresentatives {
        GroupRepresentatives {
            group: GroupId(group),
            quantile_agent: AgentId(group as u64),
            location: c.slots()[y1].value,
            y1: SlotId(y1),
            y2: SlotId(y2),
            y1_value: c.slots()[y1].value,
            y2_value: c.slots()[y2].value,
        }
    }

    #[test]
    fn step2_examples() {
        let c = multiset(&[0.0, 0.0, 2.0, 2.0, 4.0, 4.0]);
        let out = step2_aggregate(&[rep(1, &c, 0, 1), rep(2, &c, 4, 5)], 1.0, &c).unwrap();
        assert_eq!(out.placement.values(), (4.0, 4.0));
        assert_eq!(out.trace.witness, GroupId(2));
        assert_eq!(out.trace.z_updated, vec![0.0, 4.0]);

        let single = step2_aggregate(&[rep(1, &c, 3, 2)], 0.3, &c).unwrap();
        assert_eq!(single.placement.slots(), (SlotId(2), SlotId(3)));

        let c = multiset(&[0.0, 0.0, 1.0, 1.0]);
        let out =
            step2_aggregate(&[rep(1, &c, 2, 3), rep(2, &c, 0, 1)], GOLDEN_QUANTILE, &c).unwrap();
        assert_eq!(out.trace.rank, 1);
        assert_eq!(out.placement.values(), (0.0, 0.0));
        assert_eq!(out.trace.witness, GroupId(2));

        assert_eq!(step2_aggregate(&[], 0.5, &c), Err(MechanismError::NoGroups));
    }

    #[test]
    fn step2_flags_unwitnessable_profiles() {
        // Not producible by step 1 (y1, y2 interlaced), but step 2 must refuse
        // rather than invent a slot assignment.
        let c = multiset(&[0.0, 1.0, 2.0, 3.0]);
        let reps = [rep(1, &c, 0, 2), rep(2, &c, 1, 3)];
        assert!(matches!(
            step2_aggregate(&reps, 0.0, &c),
            Err(MechanismError::NonWitnessable { .. })
        ));
    }

    #[test]
    fn run_examples() {
        let t = 0.001;
        let inst = Instance::from_groups(
            &[&[1.0 - t, 1.0 - t], &[3.0 + t, 3.0 + t]],
            &[0.0, 0.0, 2.0, 2.0, 4.0, 4.0],
        )
        .unwrap();
        let out = run_quantile(&inst, Preset::Mom.config()).unwrap();
        assert_eq!(out.placement.values(), (4.0, 4.0));
        let mom = eval_objective(ObjectiveKind::MoM, &inst, &out.placement).unwrap();
        assert!((mom - 3.001).abs() < 1e-12);

        let inst = Instance::from_groups(&[&[0.5 - t], &[1.0]], &[0.0, 0.0, 1.0, 1.0]).unwrap();
        let out = run_quantile(&inst, Preset::Aoa.config()).unwrap();
        assert_eq!(out.placement.values(), (0.0, 0.0));
        let aoa = eval_objective(ObjectiveKind::AoA, &inst, &out.placement).unwrap();
        assert!((aoa - 0.7495).abs() < 1e-12);

        let inst = Instance::from_groups(&[&[2.0]], &[-1.0, 2.0, 2.0, 5.0]).unwrap();
        let out = run_quantile(&inst, QuantileConfig::new(0.3, 0.9).unwrap()).unwrap();
        assert_eq!(out.placement.slots(), (SlotId(1), SlotId(2)));
        assert_eq!(eval_objective(ObjectiveKind::MoM, &inst, &out.placement).unwrap(), 0.0);
    }

    #[test]
    fn config_and_preset_parsing() {
        assert!(QuantileConfig::new(1.2, 0.5).is_err());
        assert!(QuantileConfig::new(0.0, 1.0).is_ok());
        assert_eq!("MoA".parse::<Preset>().unwrap(), Preset::Moa);
        assert!("median".parse::<Preset>().is_err());
        assert_eq!(Preset::Aom.config().beta, GOLDEN_QUANTILE);
    }

    fn arb_candidates() -> impl Strategy<Value = Vec<f64>> {
        prop_oneof![
            prop::collection::vec(-5.0f64..5.0, 2..8),
            prop::collection::vec((-5i32..=5).prop_map(f64::from), 2..8),
        ]
    }

    proptest! {
        #[test]
        fn nearest_matches_brute_force(x in -6.0f64..6.0, half in -12i32..12, cands in arb_candidates(), lattice in any::<bool>()) {
            let x = if lattice { f64::from(half) / 2.0 } else { x };
            let c = CandidateMultiset::from_values(cands);
            let t = nearest_candidate(x, &c);
            prop_assert_eq!(t, brute_nearest(x, &c, None));
            let s = second_nearest(x, &c, t);
            prop_assert_eq!(s, brute_nearest(x, &c, Some(t)));
            let (lo, hi) = {
                let (a, b) = (c.slots()[t.0].value, c.slots()[s.0].value);
                if a <= b { (a, b) } else { (b, a) }
            };
            prop_assert!(!c.values().any(|v| lo < v && v < hi));
        }

        #[test]
        fn replicating_a_group_keeps_its_quantile_location(
            locs in prop::collection::vec(-5.0f64..5.0, 1..8),
            q in prop::sample::select(vec![0.0, 0.5, 1.0]),
        ) {
            let doubled: Vec<f64> = locs.iter().chain(locs.iter()).copied().collect();
            let a = Instance::from_groups(&[&locs], &[0.0, 1.0]).unwrap();
            let b = Instance::from_groups(&[&doubled], &[0.0, 1.0]).unwrap();
            prop_assert_eq!(
                quantile_agent(a.group(GroupId(1)), q).location,
                quantile_agent(b.group(GroupId(1)), q).location
            );
        }
    }
}
