//! Seeded random instance generators.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::families::family_unchecked;
use crate::model::{AgentDoc, Instance, InstanceDoc, ObjectiveKind};

/// Locations are drawn from `[-COORD_SPAN, COORD_SPAN]`.
pub const COORD_SPAN: f64 = 5.0;
/// Width of a group blob in the clustered generator.
pub const CLUSTER_WIDTH: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Generator {
    UniformRandom,
    Clustered,
    PaperFamily,
    HillClimb,
}

impl Generator {
    pub fn name(self) -> &'static str {
        match self {
            Generator::UniformRandom => "uniform-random",
            Generator::Clustered => "clustered",
            Generator::PaperFamily => "paper-family",
            Generator::HillClimb => "hill-climb",
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Generator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform-random" | "uniform" => Ok(Generator::UniformRandom),
            "clustered" => Ok(Generator::Clustered),
            "paper-family" | "family" => Ok(Generator::PaperFamily),
            "hill-climb" => Ok(Generator::HillClimb),
            _ => Err(format!(
                "unknown generator `{s}` (expected uniform-random, clustered, paper-family or hill-climb)"
            )),
        }
    }
}

/// Inclusive size range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeRange {
    pub min: usize,
    pub max: usize,
}

impl SizeRange {
    pub const fn new(min: usize, max: usize) -> Self {
        Self { min, max }
    }

    pub fn is_empty(&self) -> bool {
        self.min > self.max
    }

    fn sample(&self, rng: &mut impl Rng) -> usize {
        rng.gen_range(self.min..=self.max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceShape {
    pub agents: SizeRange,
    pub groups: SizeRange,
    pub candidates: SizeRange,
}

impl Default for InstanceShape {
    fn default() -> Self {
        Self {
            agents: SizeRange::new(1, 12),
            groups: SizeRange::new(1, 5),
            candidates: SizeRange::new(2, 8),
        }
    }
}

impl InstanceShape {
    pub fn validate(&self) -> Result<(), String> {
        for (name, r) in [("agents", self.agents), ("groups", self.groups), ("candidates", self.candidates)] {
            if r.is_empty() {
                return Err(format!("{name} range {}..={} is empty", r.min, r.max));
            }
        }
        if self.agents.min == 0 || self.groups.min == 0 {
            return Err("instances need at least one agent and one group".into());
        }
        if self.candidates.min < 2 {
            return Err("instances need at least two candidate slots".into());
        }
        if self.groups.min > self.agents.max {
            return Err("more groups than agents".into());
        }
        Ok(())
    }

    /// Draws `(n, k, m)` with `k ≤ n`.
    fn sample_sizes(&self, rng: &mut impl Rng) -> (usize, usize, usize) {
        let k = rng.gen_range(self.groups.min..=self.groups.max.min(self.agents.max));
        let n = rng.gen_range(self.agents.min.max(k)..=self.agents.max);
        let m = self.candidates.sample(rng);
        (n, k, m)
    }
}

/// Stream `trial` of the generator seeded by `seed`; streams are
/// independent, so results do not depend on evaluation order.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn assemble(groups: Vec<usize>, locations: Vec<f64>, candidates: Vec<f64>) -> Instance {
    let agents = groups
        .into_iter()
        .zip(locations)
        .enumerate()
        .map(|(i, (g, location))| AgentDoc { id: i as u64 + 1, group: g as i64, location })
        .collect();
    Instance::try_from(InstanceDoc { candidates, agents }).expect("generated instances are valid")
}

/// Group labels for `n` agents: each of the `k` groups gets one agent, the
/// rest are assigned uniformly.
fn group_labels(rng: &mut impl Rng, n: usize, k: usize) -> Vec<usize> {
    let mut labels: Vec<usize> = (1..=k).chain((k..n).map(|_| rng.gen_range(1..=k))).collect();
    labels.shuffle(rng);
    labels
}

/// Uniform locations in `[-5, 5]`. Half of the draws snap candidates to
/// integers and agents to half-integers, which produces duplicate slots,
/// co-located agents and exact nearest-candidate ties.
pub fn uniform_instance(rng: &mut impl Rng, shape: &InstanceShape) -> Instance {
    let (n, k, m) = shape.sample_sizes(rng);
    let lattice = rng.gen_bool(0.5);
    let cell = COORD_SPAN as i32;
    let candidates: Vec<f64> = (0..m)
        .map(|_| {
            if lattice {
                f64::from(rng.gen_range(-cell..=cell))
            } else {
                rng.gen_range(-COORD_SPAN..=COORD_SPAN)
            }
        })
        .collect();
    let locations: Vec<f64> = (0..n)
        .map(|_| {
            if lattice {
                f64::from(rng.gen_range(-2 * cell..=2 * cell)) / 2.0
            } else {
                rng.gen_range(-COORD_SPAN..=COORD_SPAN)
            }
        })
        .collect();
    let groups = group_labels(rng, n, k);
    assemble(groups, locations, candidates)
}

/// Each group is a blob of width 0.2 around its own uniform center.
pub fn clustered_instance(rng: &mut impl Rng, shape: &InstanceShape) -> Instance {
    let (n, k, m) = shape.sample_sizes(rng);
    let centers: Vec<f64> = (0..k).map(|_| rng.gen_range(-COORD_SPAN..=COORD_SPAN)).collect();
    let candidates: Vec<f64> = (0..m).map(|_| rng.gen_range(-COORD_SPAN..=COORD_SPAN)).collect();
    let groups = group_labels(rng, n, k);
    let half = CLUSTER_WIDTH / 2.0;
    let locations = groups.iter().map(|&g| centers[g - 1] + rng.gen_range(-half..=half)).collect();
    assemble(groups, locations, candidates)
}

/// A random member of a random lower-bound family with `θ ∈ (0, max_theta]`.
pub fn family_instance(rng: &mut impl Rng, max_theta: f64) -> Instance {
    let kind = *ObjectiveKind::ALL.choose(rng).expect("nonempty");
    let theta = max_theta * (1.0 - rng.gen::<f64>());
    let spec = family_unchecked(kind, theta);
    spec.instances.choose(rng).expect("families are nonempty").instance.clone()
}
