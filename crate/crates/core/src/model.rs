//! Instances, candidate slots, placements and the four social objectives.
//!
//! All agents approve both facilities and pay the *max-variant* cost: the
//! distance to the farther of the two facilities. Candidate locations form a
//! multiset; every occurrence is a separate slot that can host at most one
//! facility, so a placement may put both facilities at the same coordinate
//! when that coordinate occurs twice.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Position of a slot in the sorted candidate multiset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SlotId(pub usize);

/// Group identifier, normalized to `1..=k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AgentId(pub u64);

impl fmt::Display for SlotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub id: AgentId,
    pub group: GroupId,
    pub location: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slot {
    pub id: SlotId,
    pub value: f64,
}

/// Sorted multiset of candidate locations. Slot ids are sorted positions.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateMultiset {
    slots: Vec<Slot>,
}

impl CandidateMultiset {
    /// Sorts `values` ascending and assigns slot ids by position.
    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Self {
        let mut values: Vec<f64> = values.into_iter().collect();
        values.sort_by(f64::total_cmp);
        let slots = values
            .into_iter()
            .enumerate()
            .map(|(i, value)| Slot { id: SlotId(i), value })
            .collect();
        Self { slots }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn value(&self, slot: SlotId) -> Option<f64> {
        self.slots.get(slot.0).map(|s| s.value)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.slots.iter().map(|s| s.value)
    }

    /// Distinct values in ascending order.
    pub fn distinct_values(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.values().collect();
        out.dedup();
        out
    }

    /// `(min, max)` of the candidate values, `None` when empty.
    pub fn bounds(&self) -> Option<(f64, f64)> {
        Some((self.slots.first()?.value, self.slots.last()?.value))
    }

    /// Iterator over all unordered slot pairs `(a, b)` with `a < b`.
    pub fn pairs(&self) -> impl Iterator<Item = (Slot, Slot)> + '_ {
        self.slots
            .iter()
            .enumerate()
            .flat_map(move |(i, a)| self.slots[i + 1..].iter().map(move |b| (*a, *b)))
    }
}

/// One facility per slot; `slot_a < slot_b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub slot_a: SlotId,
    pub slot_b: SlotId,
    pub value_a: f64,
    pub value_b: f64,
}

impl Placement {
    /// Builds a canonical placement from two distinct slots of `candidates`.
    pub fn new(candidates: &CandidateMultiset, a: SlotId, b: SlotId) -> Result<Self, ModelError> {
        if a == b {
            return Err(ModelError::SameSlot(a));
        }
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        let value_a = candidates.value(a).ok_or(ModelError::UnknownSlot(a))?;
        let value_b = candidates.value(b).ok_or(ModelError::UnknownSlot(b))?;
        Ok(Self { slot_a: a, slot_b: b, value_a, value_b })
    }

    pub(crate) fn from_slots(a: Slot, b: Slot) -> Self {
        debug_assert!(a.id < b.id);
        Self { slot_a: a.id, slot_b: b.id, value_a: a.value, value_b: b.value }
    }

    /// The two locations, smaller first.
    pub fn values(&self) -> (f64, f64) {
        if self.value_a <= self.value_b {
            (self.value_a, self.value_b)
        } else {
            (self.value_b, self.value_a)
        }
    }

    pub fn slots(&self) -> (SlotId, SlotId) {
        (self.slot_a, self.slot_b)
    }
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.value_a, self.value_b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ObjectiveKind {
    /// Average over groups of the group-average cost.
    AoA,
    /// Maximum cost over all agents.
    MoM,
    /// Maximum over groups of the group-average cost.
    MoA,
    /// Average over groups of the group-maximum cost.
    AoM,
}

impl ObjectiveKind {
    pub const ALL: [ObjectiveKind; 4] =
        [ObjectiveKind::AoA, ObjectiveKind::MoM, ObjectiveKind::MoA, ObjectiveKind::AoM];

    pub fn name(self) -> &'static str {
        match self {
            ObjectiveKind::AoA => "aoa",
            ObjectiveKind::MoM => "mom",
            ObjectiveKind::MoA => "moa",
            ObjectiveKind::AoM => "aom",
        }
    }
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ObjectiveKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "aoa" => Ok(ObjectiveKind::AoA),
            "mom" => Ok(ObjectiveKind::MoM),
            "moa" => Ok(ObjectiveKind::MoA),
            "aom" => Ok(ObjectiveKind::AoM),
            _ => Err(ModelError::UnknownObjective(s.to_string())),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("placement uses slot {0} twice")]
    SameSlot(SlotId),
    #[error("slot {0} is not part of the candidate multiset")]
    UnknownSlot(SlotId),
    #[error("placement slot {slot} holds {actual}, not {claimed}")]
    SlotValueMismatch { slot: SlotId, claimed: f64, actual: f64 },
    #[error("unknown objective `{0}` (expected aoa, mom, moa or aom)")]
    UnknownObjective(String),
    #[error("no agent with id {0}")]
    UnknownAgent(AgentId),
    #[error("invalid instance: {}", format_violations(.0))]
    Invalid(Vec<Violation>),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Violation {
    #[error("non-finite location for agent {0}")]
    NonFiniteAgentLocation(AgentId),
    #[error("non-finite location for candidate {0}")]
    NonFiniteCandidate(usize),
    #[error("fewer than two candidate slots")]
    FewerThanTwoSlots,
    #[error("duplicate agent id {0}")]
    DuplicateAgentId(AgentId),
    #[error("instance has no agents")]
    NoAgents,
}

/// Serialized instance document. Group ids are arbitrary integers and are
/// normalized to `1..=k` (in ascending order) on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDoc {
    pub candidates: Vec<f64>,
    pub agents: Vec<AgentDoc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentDoc {
    pub id: u64,
    pub group: i64,
    pub location: f64,
}

/// Checks every instance invariant, returning all violations found.
pub fn validate_instance(doc: &InstanceDoc) -> Vec<Violation> {
    let mut out = Vec::new();
    if doc.agents.is_empty() {
        out.push(Violation::NoAgents);
    }
    if doc.candidates.len() < 2 {
        out.push(Violation::FewerThanTwoSlots);
    }
    for (i, c) in doc.candidates.iter().enumerate() {
        if !c.is_finite() {
            out.push(Violation::NonFiniteCandidate(i));
        }
    }
    let mut seen = HashSet::new();
    for a in &doc.agents {
        if !a.location.is_finite() {
            out.push(Violation::NonFiniteAgentLocation(AgentId(a.id)));
        }
        if !seen.insert(a.id) {
            out.push(Violation::DuplicateAgentId(AgentId(a.id)));
        }
    }
    out
}

/// A validated instance. Agents are stored per group, each group sorted by
/// `(location, id)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    groups: Vec<Vec<Agent>>,
    candidates: CandidateMultiset,
}

impl TryFrom<InstanceDoc> for Instance {
    type Error = ModelError;

    fn try_from(doc: InstanceDoc) -> Result<Self, Self::Error> {
        let violations = validate_instance(&doc);
        if !violations.is_empty() {
            return Err(ModelError::Invalid(violations));
        }
        let ids: BTreeMap<i64, usize> = doc
            .agents
            .iter()
            .map(|a| a.group)
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .enumerate()
            .map(|(i, g)| (g, i))
            .collect();
        let mut groups = vec![Vec::new(); ids.len()];
        for a in &doc.agents {
            let idx = ids[&a.group];
            groups[idx].push(Agent {
                id: AgentId(a.id),
                group: GroupId(idx + 1),
                location: a.location,
            });
        }
        for g in &mut groups {
            sort_group(g);
        }
        Ok(Self { groups, candidates: CandidateMultiset::from_values(doc.candidates) })
    }
}

fn sort_group(agents: &mut [Agent]) {
    agents.sort_by(|a, b| a.location.total_cmp(&b.location).then(a.id.cmp(&b.id)));
}

impl Instance {
    /// Convenience constructor: one location list per group, agent ids
    /// assigned sequentially from 1 in the given order.
    pub fn from_groups(groups: &[&[f64]], candidates: &[f64]) -> Result<Self, ModelError> {
        let mut next = 0u64;
        let agents = groups
            .iter()
            .enumerate()
            .flat_map(|(g, locs)| locs.iter().map(move |&x| (g, x)))
            .map(|(g, location)| {
                next += 1;
                AgentDoc { id: next, group: g as i64 + 1, location }
            })
            .collect();
        Self::try_from(InstanceDoc { candidates: candidates.to_vec(), agents })
    }

    pub fn to_doc(&self) -> InstanceDoc {
        InstanceDoc {
            candidates: self.candidates.values().collect(),
            agents: self
                .agents()
                .map(|a| AgentDoc { id: a.id.0, group: a.group.0 as i64, location: a.location })
                .collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, InstanceFileError> {
        let doc: InstanceDoc = serde_json::from_str(text)?;
        Ok(Self::try_from(doc)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("instance documents always serialize")
    }

    /// Number of groups `k`.
    pub fn k(&self) -> usize {
        self.groups.len()
    }

    /// Number of agents `n`.
    pub fn n(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    /// Number of candidate slots `m`.
    pub fn m(&self) -> usize {
        self.candidates.len()
    }

    pub fn groups(&self) -> &[Vec<Agent>] {
        &self.groups
    }

    /// Agents of `group` in canonical `(location, id)` order.
    pub fn group(&self, group: GroupId) -> &[Agent] {
        &self.groups[group.0 - 1]
    }

    pub fn agents(&self) -> impl Iterator<Item = &Agent> + '_ {
        self.groups.iter().flatten()
    }

    pub fn agent(&self, id: AgentId) -> Option<&Agent> {
        self.agents().find(|a| a.id == id)
    }

    pub fn candidates(&self) -> &CandidateMultiset {
        &self.candidates
    }

    /// `(min, max)` over all agent and candidate locations.
    pub fn location_bounds(&self) -> (f64, f64) {
        self.agents()
            .map(|a| a.location)
            .chain(self.candidates.values())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
    }

    /// Copy of this instance with one agent reporting `location` instead.
    pub fn with_agent_location(&self, id: AgentId, location: f64) -> Result<Self, ModelError> {
        let mut out = self.clone();
        let group = out
            .groups
            .iter_mut()
            .find(|g| g.iter().any(|a| a.id == id))
            .ok_or(ModelError::UnknownAgent(id))?;
        for a in group.iter_mut().filter(|a| a.id == id) {
            a.location = location;
        }
        sort_group(group);
        Ok(out)
    }

    /// Copy of this instance with a new candidate multiset.
    pub fn with_candidates(&self, values: impl IntoIterator<Item = f64>) -> Self {
        Self { groups: self.groups.clone(), candidates: CandidateMultiset::from_values(values) }
    }

    /// Applies `f` to every agent and candidate location, re-sorting as needed.
    pub fn map_locations(&self, f: impl Fn(f64) -> f64) -> Self {
        let mut groups = self.groups.clone();
        for g in &mut groups {
            for a in g.iter_mut() {
                a.location = f(a.location);
            }
            sort_group(g);
        }
        Self { groups, candidates: CandidateMultiset::from_values(self.candidates.values().map(&f)) }
    }
}

#[derive(Debug, Error)]
pub enum InstanceFileError {
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Invalid(#[from] ModelError),
}

/// Max-variant cost: distance from `x` to the farther facility.
pub fn individual_cost(x: f64, p: &Placement) -> f64 {
    (x - p.value_a).abs().max((x - p.value_b).abs())
}

#[inline]
fn cost_at(x: f64, a: f64, b: f64) -> f64 {
    (x - a).abs().max((x - b).abs())
}

/// Objective value for facilities at `a` and `b`, skipping slot checks.
pub(crate) fn objective_at(kind: ObjectiveKind, inst: &Instance, a: f64, b: f64) -> f64 {
    let k = inst.k() as f64;
    let groups = inst.groups.iter();
    match kind {
        ObjectiveKind::AoA => {
            groups
                .map(|g| g.iter().map(|x| cost_at(x.location, a, b)).sum::<f64>() / g.len() as f64)
                .sum::<f64>()
                / k
        }
        ObjectiveKind::MoM => groups
            .flatten()
            .map(|x| cost_at(x.location, a, b))
            .fold(0.0, f64::max),
        ObjectiveKind::MoA => groups
            .map(|g| g.iter().map(|x| cost_at(x.location, a, b)).sum::<f64>() / g.len() as f64)
            .fold(0.0, f64::max),
        ObjectiveKind::AoM => {
            groups
                .map(|g| g.iter().map(|x| cost_at(x.location, a, b)).fold(0.0, f64::max))
                .sum::<f64>()
                / k
        }
    }
}

/// Evaluates a social objective at `p`, rejecting placements whose slots do
/// not belong to the instance's multiset.
pub fn eval_objective(kind: ObjectiveKind, inst: &Instance, p: &Placement) -> Result<f64, ModelError> {
    if p.slot_a == p.slot_b {
        return Err(ModelError::SameSlot(p.slot_a));
    }
    for (slot, claimed) in [(p.slot_a, p.value_a), (p.slot_b, p.value_b)] {
        let actual = inst.candidates.value(slot).ok_or(ModelError::UnknownSlot(slot))?;
        if actual != claimed {
            return Err(ModelError::SlotValueMismatch { slot, claimed, actual });
        }
    }
    Ok(objective_at(kind, inst, p.value_a, p.value_b))
}
