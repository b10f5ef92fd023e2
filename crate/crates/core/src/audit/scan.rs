//! Distortion scans over generated instances and adversarial hill climbing.

use rand::Rng;
use serde::Serialize;

use super::AuditError;
use crate::exec::{map_indexed, Execution};
use crate::families::MAX_THETA;
use crate::generate::{
    clustered_instance, family_instance, trial_rng, uniform_instance, Generator, InstanceShape,
};
use crate::mechanism::QuantileConfig;
use crate::model::{AgentId, Instance, ObjectiveKind};
use crate::oracle::{distortion_report, DistortionReport, Ratio};

pub const HILL_CLIMB_STEPS: usize = 200;
/// Consecutive rejected steps before the perturbation scale halves.
pub const HALVE_AFTER: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanConfig {
    pub trials: usize,
    pub seed: u64,
    pub generator: Generator,
    pub shape: InstanceShape,
    /// Upper end of the `θ` range for the family generator.
    pub theta: f64,
    pub hill_climb_steps: usize,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            trials: 10_000,
            seed: 0,
            generator: Generator::UniformRandom,
            shape: InstanceShape::default(),
            theta: 1e-3,
            hill_climb_steps: HILL_CLIMB_STEPS,
            execution: Execution::default(),
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<(), AuditError> {
        if self.trials == 0 {
            return Err(AuditError::InvalidScan("trials must be at least 1".into()));
        }
        if !(self.theta > 0.0 && self.theta <= MAX_THETA) {
            return Err(AuditError::InvalidScan(format!("theta {} outside (0, {MAX_THETA}]", self.theta)));
        }
        self.shape.validate().map_err(AuditError::InvalidScan)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    pub trial: usize,
    pub generator: Generator,
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub mech_cost: f64,
    pub opt_cost: f64,
    pub ratio: Ratio,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorstCase {
    pub trial: usize,
    pub instance: Instance,
    pub report: DistortionReport,
}

/// Ratio counts in bins of width 0.25 starting at 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub bin_width: f64,
    pub bins: Vec<usize>,
    /// Finite ratios at or beyond the last bin edge.
    pub overflow: usize,
    pub infinite: usize,
}

impl Histogram {
    const UPPER: f64 = 10.0;

    fn new() -> Self {
        let bin_width = 0.25;
        let count = ((Self::UPPER - 1.0) / bin_width) as usize;
        Self { bin_width, bins: vec![0; count], overflow: 0, infinite: 0 }
    }

    fn add(&mut self, ratio: Ratio) {
        match ratio {
            Ratio::Infinite => self.infinite += 1,
            Ratio::Finite(r) => {
                // mech ≥ opt, so r < 1 only through rounding
                let idx = ((r - 1.0).max(0.0) / self.bin_width) as usize;
                match self.bins.get_mut(idx) {
                    Some(b) => *b += 1,
                    None => self.overflow += 1,
                }
            }
        }
    }

    pub fn total(&self) -> usize {
        self.bins.iter().sum::<usize>() + self.overflow + self.infinite
    }

    /// `(lower edge, count)` for every nonempty bin.
    pub fn nonempty(&self) -> impl Iterator<Item = (f64, usize)> + '_ {
        self.bins
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (1.0 + i as f64 * self.bin_width, c))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub rows: Vec<TrialRow>,
    pub worst: WorstCase,
    pub histogram: Histogram,
}

/// Generates `trials` instances, compares mechanism and oracle on each, and
/// keeps the worst ratio (earliest trial wins ties). Output is identical for
/// sequential and parallel execution.
pub fn distortion_scan(
    scan: &ScanConfig,
    cfg: QuantileConfig,
    kind: ObjectiveKind,
) -> Result<ScanResult, AuditError> {
    scan.validate()?;
    let outcomes = map_indexed(scan.execution, scan.trials, |trial| {
        let mut rng = trial_rng(scan.seed, trial as u64);
        let inst = match scan.generator {
            Generator::UniformRandom | Generator::HillClimb => uniform_instance(&mut rng, &scan.shape),
            Generator::Clustered => clustered_instance(&mut rng, &scan.shape),
            Generator::PaperFamily => family_instance(&mut rng, scan.theta),
        };
        let fail = |inst: &Instance, source| AuditError::Mechanism {
            trial,
            instance: Box::new(inst.to_doc()),
            source,
        };
        if scan.generator == Generator::HillClimb {
            let seed = rng.gen();
            let climb = hill_climb_adversary(&inst, cfg, kind, scan.hill_climb_steps, seed)
                .map_err(|e| match e {
                    AuditError::Mechanism { instance, source, .. } => {
                        AuditError::Mechanism { trial, instance, source }
                    }
                    other => other,
                })?;
            Ok((climb.instance, climb.report))
        } else {
            let report = distortion_report(&inst, cfg, kind).map_err(|e| fail(&inst, e))?;
            Ok((inst, report))
        }
    });

    let mut rows = Vec::with_capacity(scan.trials);
    let mut histogram = Histogram::new();
    let mut worst: Option<WorstCase> = None;
    for (trial, outcome) in outcomes.into_iter().enumerate() {
        let (instance, report) = outcome?;
        histogram.add(report.ratio);
        rows.push(TrialRow {
            trial,
            generator: scan.generator,
            n: instance.n(),
            k: instance.k(),
            m: instance.m(),
            mech_cost: report.mechanism_cost,
            opt_cost: report.optimal_cost,
            ratio: report.ratio,
        });
        if worst.as_ref().is_none_or(|w| report.ratio.total_cmp(&w.report.ratio).is_gt()) {
            worst = Some(WorstCase { trial, instance, report });
        }
    }
    Ok(ScanResult { rows, worst: worst.expect("at least one trial"), histogram })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HillClimbResult {
    pub instance: Instance,
    pub report: DistortionReport,
    pub start_ratio: Ratio,
    /// Number of accepted perturbations.
    pub accepted: usize,
}

/// Local search for a bad instance. Each step shifts one agent or one
/// candidate by a uniform amount in `±scale`; the move is kept only if the
/// ratio strictly increases. The scale starts at a quarter of the instance
/// range and halves after every [`HALVE_AFTER`] consecutive rejections.
pub fn hill_climb_adversary(
    start: &Instance,
    cfg: QuantileConfig,
    kind: ObjectiveKind,
    steps: usize,
    seed: u64,
) -> Result<HillClimbResult, AuditError> {
    let fail = |inst: &Instance, source| AuditError::Mechanism {
        trial: 0,
        instance: Box::new(inst.to_doc()),
        source,
    };
    let mut rng = trial_rng(seed, 0);
    let mut current = start.clone();
    let mut report = distortion_report(&current, cfg, kind).map_err(|e| fail(&current, e))?;
    let start_ratio = report.ratio;
    let (lo, hi) = start.location_bounds();
    let mut scale = ((hi - lo) / 4.0).max(0.25);
    let mut rejected = 0;
    let mut accepted = 0;

    for _ in 0..steps {
        let delta = rng.gen_range(-scale..=scale);
        let ids: Vec<AgentId> = current.agents().map(|a| a.id).collect();
        let pick = rng.gen_range(0..ids.len() + current.m());
        let candidate = if pick < ids.len() {
            let x = current.agent(ids[pick]).expect("listed agent").location;
            current.with_agent_location(ids[pick], x + delta).expect("listed agent")
        } else {
            let slot = pick - ids.len();
            let values = current
                .candidates()
                .values()
                .enumerate()
                .map(|(i, v)| if i == slot { v + delta } else { v });
            current.with_candidates(values)
        };
        let next = distortion_report(&candidate, cfg, kind).map_err(|e| fail(&candidate, e))?;
        if next.ratio.total_cmp(&report.ratio).is_gt() {
            current = candidate;
            report = next;
            accepted += 1;
            rejected = 0;
        } else {
            rejected += 1;
            if rejected == HALVE_AFTER {
                scale /= 2.0;
                rejected = 0;
            }
        }
    }
    Ok(HillClimbResult { instance: current, report, start_ratio, accepted })
}
