//! Lower-bound instance families, parameterized by a small `θ > 0`.
//!
//! Each family is a chain of single- and two-group instances over a fixed
//! candidate multiset. Against the matching preset mechanism the worst
//! instance of the family has a ratio that tends to the family target as
//! `θ → 0`.

use serde::Serialize;
use thiserror::Error;

use crate::mechanism::{MechanismError, QuantileConfig};
use crate::model::{Instance, ObjectiveKind};
use crate::oracle::{distortion_report, DistortionReport};

pub const DEFAULT_THETA: f64 = 1e-3;
pub const MAX_THETA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum FamilyError {
    #[error("theta {0} outside (0, {MAX_THETA}]")]
    ThetaOutOfRange(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyInstance {
    pub label: &'static str,
    pub instance: Instance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilySpec {
    pub objective: ObjectiveKind,
    pub theta: f64,
    pub candidates: Vec<f64>,
    pub instances: Vec<FamilyInstance>,
}

impl FamilySpec {
    pub fn instance(&self, label: &str) -> Option<&Instance> {
        self.instances.iter().find(|f| f.label == label).map(|f| &f.instance)
    }
}

/// Ratio the family approaches as `θ → 0`.
pub fn lower_bound_target(kind: ObjectiveKind) -> f64 {
    match kind {
        ObjectiveKind::MoA => 3.5,
        _ => 3.0,
    }
}

pub fn family_candidates(kind: ObjectiveKind) -> Vec<f64> {
    match kind {
        ObjectiveKind::AoA | ObjectiveKind::AoM => vec![0.0, 0.0, 1.0, 1.0],
        ObjectiveKind::MoM => vec![0.0, 0.0, 2.0, 2.0, 4.0, 4.0],
        ObjectiveKind::MoA => vec![0.0, 0.0, 1.0, 1.0, 2.0, 2.0],
    }
}

/// Builds the family for `kind`. `θ` must lie in `(0, 0.01]`.
pub fn build_family(kind: ObjectiveKind, theta: f64) -> Result<FamilySpec, FamilyError> {
    if !(theta > 0.0 && theta <= MAX_THETA) {
        return Err(FamilyError::ThetaOutOfRange(theta));
    }
    Ok(family_unchecked(kind, theta))
}

/// Same construction without the `θ` cap; used by generators and tests
/// that need coarser perturbations.
pub fn family_unchecked(kind: ObjectiveKind, t: f64) -> FamilySpec {
    let candidates = family_candidates(kind);
    let layouts: Vec<(&'static str, Vec<Vec<f64>>)> = match kind {
        ObjectiveKind::AoA => vec![
            ("I1", vec![vec![0.0]]),
            ("I2", vec![vec![0.5 - t]]),
            ("I3", vec![vec![1.0]]),
            ("I4", vec![vec![0.5 + t]]),
            ("I5", vec![vec![0.5 - t], vec![1.0]]),
            ("I6", vec![vec![0.5 + t], vec![0.0]]),
        ],
        ObjectiveKind::MoM => vec![
            ("I1", vec![vec![-1.0, 1.0 - t]]),
            ("I2", vec![vec![1.0 - t, 1.0 - t]]),
            ("I3", vec![vec![5.0, 3.0 + t]]),
            ("I4", vec![vec![3.0 + t, 3.0 + t]]),
            ("I5", vec![vec![1.0 - t, 1.0 - t], vec![3.0 + t, 3.0 + t]]),
        ],
        ObjectiveKind::MoA => {
            let low = 0.5 - t;
            let high = 1.5 + t;
            vec![
                ("I1", vec![vec![0.0, 0.0, 0.0, 0.0, 1.0]]),
                ("I2", vec![vec![low, 0.0, 0.0, 0.0, 1.0]]),
                ("I3", vec![vec![low, low, low, low, 1.0]]),
                ("I4", vec![vec![2.0, 2.0, 2.0, 2.0, 1.0]]),
                ("I5", vec![vec![high, high, high, high, 1.0]]),
                ("I6", vec![vec![low, low, low, low, 1.0], vec![high, high, high, high, 1.0]]),
            ]
        }
        ObjectiveKind::AoM => vec![
            ("I1", vec![vec![0.5, 1.5]]),
            ("I2", vec![vec![0.5, 0.5 + t]]),
            ("I3", vec![vec![0.0]]),
            ("I4", vec![vec![0.5 - t]]),
            ("I5", vec![vec![0.5 - t], vec![1.0]]),
            ("I6", vec![vec![0.5, 0.5 + t], vec![0.0]]),
        ],
    };
    let instances = layouts
        .into_iter()
        .map(|(label, groups)| {
            let refs: Vec<&[f64]> = groups.iter().map(Vec::as_slice).collect();
            let instance = Instance::from_groups(&refs, &candidates)
                .expect("family layouts are valid instances");
            FamilyInstance { label, instance }
        })
        .collect();
    FamilySpec { objective: kind, theta: t, candidates, instances }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyRow {
    pub label: &'static str,
    pub report: DistortionReport,
    /// Whether this row attains the family maximum.
    pub extremal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyReplay {
    pub objective: ObjectiveKind,
    pub theta: f64,
    pub config: QuantileConfig,
    pub target: f64,
    pub rows: Vec<FamilyRow>,
    pub max_ratio: f64,
    /// Label of the first instance attaining `max_ratio`.
    pub argmax: &'static str,
}

/// Runs `cfg` and the oracle on every instance of the family.
pub fn replay_family(spec: &FamilySpec, cfg: QuantileConfig) -> Result<FamilyReplay, MechanismError> {
    let mut rows = spec
        .instances
        .iter()
        .map(|f| {
            Ok(FamilyRow {
                label: f.label,
                report: distortion_report(&f.instance, cfg, spec.objective)?,
                extremal: false,
            })
        })
        .collect::<Result<Vec<_>, MechanismError>>()?;
    let (argmax_idx, max_ratio) = rows
        .iter()
        .enumerate()
        .map(|(i, r)| (i, r.report.ratio.as_f64()))
        .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    for r in &mut rows {
        r.extremal = r.report.ratio.as_f64() == max_ratio;
    }
    Ok(FamilyReplay {
        objective: spec.objective,
        theta: spec.theta,
        config: cfg,
        target: lower_bound_target(spec.objective),
        argmax: rows[argmax_idx].label,
        rows,
        max_ratio,
    })
}
