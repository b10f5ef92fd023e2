//! Exact optimum by enumerating every unordered slot pair, and distortion.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mechanism::{run_quantile, MechanismError, QuantileConfig};
use crate::model::{objective_at, GroupId, Instance, ObjectiveKind, Placement};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalResult {
    pub placement: Placement,
    pub cost: f64,
    /// Number of slot pairs attaining `cost` exactly.
    pub ties: usize,
    /// Slot pairs evaluated, always `m(m−1)/2`.
    pub pairs_visited: usize,
}

/// Minimizes `kind` over all `m(m−1)/2` slot pairs. Ties resolve to the
/// lexicographically smallest `(slot_a, slot_b)`.
///
/// All four objectives are symmetric in the two facilities, so unordered
/// pairs cover every placement.
pub fn optimal_placement(inst: &Instance, kind: ObjectiveKind) -> OptimalResult {
    let mut best: Option<(f64, Placement)> = None;
    let mut ties = 0;
    let mut visited = 0;
    for (a, b) in inst.candidates().pairs() {
        visited += 1;
        let cost = objective_at(kind, inst, a.value, b.value);
        match best {
            Some((c, _)) if cost > c => {}
            Some((c, _)) if cost == c => ties += 1,
            _ => {
                best = Some((cost, Placement::from_slots(a, b)));
                ties = 1;
            }
        }
    }
    let (cost, placement) = best.expect("instances carry at least two slots");
    OptimalResult { placement, cost, ties, pairs_visited: visited }
}

/// Ratio of mechanism cost to optimal cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Ratio {
    Finite(f64),
    /// Optimal cost is zero but the mechanism's is not.
    Infinite,
}

impl Ratio {
    pub fn as_f64(self) -> f64 {
        match self {
            Ratio::Finite(r) => r,
            Ratio::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Ratio::Finite(_))
    }

    pub fn total_cmp(&self, other: &Self) -> Ordering {
        self.as_f64().total_cmp(&other.as_f64())
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ratio::Finite(r) => write!(f, "{r}"),
            Ratio::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum OracleError {
    #[error("negative cost {0}")]
    NegativeCost(f64),
}

/// `mech / opt`, with `0/0 = 1` and `x/0 = ∞` for `x > 0`.
pub fn distortion_of(mech_cost: f64, opt_cost: f64) -> Result<Ratio, OracleError> {
    for c in [mech_cost, opt_cost] {
        if c < 0.0 || c.is_nan() {
            return Err(OracleError::NegativeCost(c));
        }
    }
    Ok(if opt_cost > 0.0 {
        Ratio::Finite(mech_cost / opt_cost)
    } else if mech_cost == 0.0 {
        Ratio::Finite(1.0)
    } else {
        Ratio::Infinite
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub objective: ObjectiveKind,
    pub mechanism_cost: f64,
    pub optimal_cost: f64,
    pub ratio: Ratio,
    pub mechanism_placement: Placement,
    pub optimal_placement: Placement,
    pub witness_group: GroupId,
}

/// Runs the mechanism and the oracle on `inst` and compares them.
pub fn distortion_report(
    inst: &Instance,
    cfg: QuantileConfig,
    kind: ObjectiveKind,
) -> Result<DistortionReport, MechanismError> {
    let out = run_quantile(inst, cfg)?;
    let mech = objective_at(kind, inst, out.placement.value_a, out.placement.value_b);
    let opt = optimal_placement(inst, kind);
    let ratio = distortion_of(mech, opt.cost).expect("objective values are nonnegative");
    Ok(DistortionReport {
        objective: kind,
        mechanism_cost: mech,
        optimal_cost: opt.cost,
        ratio,
        mechanism_placement: out.placement,
        optimal_placement: opt.placement,
        witness_group: out.trace.witness,
    })
}
