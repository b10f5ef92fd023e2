//! Empirical verification harness: strategyproofness probing, structural
//! checks on the mechanism, distortion scans and adversarial local search.

mod bounds;
mod deviation;
mod scan;
mod structure;

pub use bounds::{
    parametric_bound, theoretical_bound, within_bound, BoundParameter, ParametricBound, ENVELOPE_RTOL,
};
pub use deviation::{
    check_strategyproof, check_strategyproof_sampled, deviation_set, probe_epsilon,
    strategyproofness_suite, DeviationFinding, SpCheck, SpSuiteConfig, SpSuiteReport,
    RANDOM_MISREPORTS, SP_TOLERANCE,
};
pub use scan::{
    distortion_scan, hill_climb_adversary, HillClimbResult, Histogram, ScanConfig, ScanResult,
    TrialRow, WorstCase, HALVE_AFTER, HILL_CLIMB_STEPS,
};
pub use structure::{check_locality, check_witness_and_adjacency, LocalityCheck, WitnessCheck};

use thiserror::Error;

use crate::mechanism::MechanismError;
use crate::model::InstanceDoc;

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("invalid scan configuration: {0}")]
    InvalidScan(String),
    #[error("parametric bound is singular at q = {0}")]
    SingularParameter(f64),
    #[error("locality check needs at least two groups")]
    TooFewGroups,
    #[error("trial {trial}: {source}")]
    Mechanism {
        trial: usize,
        instance: Box<InstanceDoc>,
        #[source]
        source: MechanismError,
    },
}
