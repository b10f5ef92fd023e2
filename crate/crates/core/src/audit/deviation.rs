//! Strategyproofness probing.
//!
//! A report enters the mechanism only through the deviator's rank inside her
//! group and the nearest / second-nearest slots of the group's quantile
//! location. Both are piecewise constant in the report, with breakpoints at
//! the other agents' locations and at midpoints between pairs of distinct
//! candidate values. The probe set hits every breakpoint, both sides of it
//! (at `±ε_probe`) and the middle of every cell between consecutive
//! breakpoints, plus points beyond the extremes.

use rand::Rng;
use serde::Serialize;

use super::AuditError;
use crate::exec::{map_indexed, Execution};
use crate::generate::{clustered_instance, trial_rng, uniform_instance, InstanceShape};
use crate::mechanism::{run_quantile, MechanismError, Preset, QuantileConfig};
use crate::model::{individual_cost, AgentId, GroupId, Instance, InstanceDoc, ModelError};

/// Gains at or below this are treated as float noise.
pub const SP_TOLERANCE: f64 = 1e-9;
/// Uniform random misreports tried per agent on top of the probe set.
pub const RANDOM_MISREPORTS: usize = 32;

fn candidate_span(inst: &Instance) -> f64 {
    let (lo, hi) = inst.candidates().bounds().expect("instances carry candidates");
    if hi > lo {
        hi - lo
    } else {
        1.0
    }
}

/// `1e-6` times the candidate range (or 1 when all candidates coincide).
pub fn probe_epsilon(inst: &Instance) -> f64 {
    1e-6 * candidate_span(inst)
}

/// Finite set of misreports for `agent`, sorted and deduplicated.
pub fn deviation_set(inst: &Instance, agent: AgentId) -> Result<Vec<f64>, ModelError> {
    let me = *inst.agent(agent).ok_or(ModelError::UnknownAgent(agent))?;
    let eps = probe_epsilon(inst);
    let span = candidate_span(inst);
    let distinct = inst.candidates().distinct_values();

    let mut breakpoints: Vec<f64> = distinct.clone();
    for (i, a) in distinct.iter().enumerate() {
        breakpoints.extend(distinct[i + 1..].iter().map(|b| (a + b) / 2.0));
    }
    breakpoints.extend(inst.agents().filter(|a| a.id != agent).map(|a| a.location));
    breakpoints.sort_by(f64::total_cmp);
    breakpoints.dedup();

    let mut probes = Vec::with_capacity(breakpoints.len() * 4 + 3);
    for w in breakpoints.windows(2) {
        probes.push((w[0] + w[1]) / 2.0);
    }
    for &b in &breakpoints {
        probes.extend([b - eps, b, b + eps]);
    }
    let (lo, hi) = inst.location_bounds();
    probes.extend([lo - span, hi + span, me.location]);
    probes.retain(|x| x.is_finite());
    probes.sort_by(f64::total_cmp);
    probes.dedup();
    Ok(probes)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationFinding {
    pub instance: InstanceDoc,
    pub agent: AgentId,
    pub group: GroupId,
    pub true_location: f64,
    pub misreport: f64,
    pub honest_cost: f64,
    pub deviated_cost: f64,
    pub gain: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SpCheck {
    pub probes: usize,
    /// Largest `honest − deviated` over all probes (0 when nothing helps).
    pub max_gain: f64,
    pub findings: Vec<DeviationFinding>,
}

impl SpCheck {
    pub fn passed(&self) -> bool {
        self.findings.is_empty()
    }

    fn merge(&mut self, other: SpCheck) {
        self.probes += other.probes;
        self.max_gain = self.max_gain.max(other.max_gain);
        self.findings.extend(other.findings);
    }
}

fn probe_agent(
    inst: &Instance,
    cfg: QuantileConfig,
    agent: AgentId,
    honest_cost: f64,
    misreports: impl IntoIterator<Item = f64>,
    tolerance: f64,
) -> Result<SpCheck, MechanismError> {
    let me = *inst.agent(agent).expect("agent belongs to the instance");
    let mut check = SpCheck::default();
    for x in misreports {
        let deviated = inst.with_agent_location(agent, x).expect("agent belongs to the instance");
        let out = run_quantile(&deviated, cfg)?;
        let cost = individual_cost(me.location, &out.placement);
        let gain = honest_cost - cost;
        check.probes += 1;
        check.max_gain = check.max_gain.max(gain);
        if gain > tolerance {
            check.findings.push(DeviationFinding {
                instance: inst.to_doc(),
                agent,
                group: me.group,
                true_location: me.location,
                misreport: x,
                honest_cost,
                deviated_cost: cost,
                gain,
            });
        }
    }
    Ok(check)
}

/// Tries every probe of [`deviation_set`] for every agent and returns the
/// deviations that lower the deviator's true cost by more than `tolerance`.
pub fn check_strategyproof(
    inst: &Instance,
    cfg: QuantileConfig,
    tolerance: f64,
) -> Result<Vec<DeviationFinding>, MechanismError> {
    let mut rng = trial_rng(0, 0);
    Ok(check_strategyproof_sampled(inst, cfg, tolerance, 0, &mut rng)?.findings)
}

/// [`check_strategyproof`] plus `random_misreports` uniform reports per agent
/// drawn from the instance range widened by one candidate span.
pub fn check_strategyproof_sampled(
    inst: &Instance,
    cfg: QuantileConfig,
    tolerance: f64,
    random_misreports: usize,
    rng: &mut impl Rng,
) -> Result<SpCheck, MechanismError> {
    let honest = run_quantile(inst, cfg)?;
    let (lo, hi) = inst.location_bounds();
    let span = candidate_span(inst);
    let mut total = SpCheck::default();
    let ids: Vec<AgentId> = inst.agents().map(|a| a.id).collect();
    for id in ids {
        let me = inst.agent(id).expect("listed agent");
        let honest_cost = individual_cost(me.location, &honest.placement);
        let mut probes = deviation_set(inst, id).expect("listed agent");
        probes.extend((0..random_misreports).map(|_| rng.gen_range(lo - span..=hi + span)));
        total.merge(probe_agent(inst, cfg, id, honest_cost, probes, tolerance)?);
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpSuiteConfig {
    pub trials: usize,
    pub seed: u64,
    pub configs: Vec<QuantileConfig>,
    pub random_misreports: usize,
    pub tolerance: f64,
    pub shape: InstanceShape,
    #[serde(skip)]
    pub execution: Execution,
}

impl SpSuiteConfig {
    /// The four presets plus nine points of the `{0, ¼, 0.382, ½, ¾, 1}²` grid.
    pub fn default_configs() -> Vec<QuantileConfig> {
        let grid = [
            (0.0, 0.0),
            (0.0, 1.0),
            (1.0, 0.0),
            (1.0, 1.0),
            (0.25, 0.75),
            (0.382, 0.5),
            (0.5, 0.25),
            (0.75, 0.382),
            (0.5, 1.0),
        ];
        Preset::ALL
            .iter()
            .map(|p| p.config())
            .chain(grid.iter().map(|&(alpha, beta)| QuantileConfig { alpha, beta }))
            .collect()
    }
}

impl Default for SpSuiteConfig {
    fn default() -> Self {
        Self {
            trials: 1000,
            seed: 0,
            configs: Self::default_configs(),
            random_misreports: RANDOM_MISREPORTS,
            tolerance: SP_TOLERANCE,
            shape: InstanceShape::default(),
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpSuiteReport {
    pub instances: usize,
    pub checks: usize,
    pub probes: usize,
    pub max_gain: f64,
    pub findings: Vec<DeviationFinding>,
}

/// Seeded strategyproofness sweep over random instances and configurations.
/// Every fourth instance comes from the clustered generator.
pub fn strategyproofness_suite(cfg: &SpSuiteConfig) -> Result<SpSuiteReport, AuditError> {
    if cfg.trials == 0 {
        return Err(AuditError::InvalidScan("trials must be at least 1".into()));
    }
    cfg.shape.validate().map_err(AuditError::InvalidScan)?;
    let per_trial = map_indexed(cfg.execution, cfg.trials, |trial| {
        let mut rng = trial_rng(cfg.seed, trial as u64);
        let inst = if trial % 4 == 3 {
            clustered_instance(&mut rng, &cfg.shape)
        } else {
            uniform_instance(&mut rng, &cfg.shape)
        };
        let mut acc = SpCheck::default();
        for &q in &cfg.configs {
            let check = check_strategyproof_sampled(&inst, q, cfg.tolerance, cfg.random_misreports, &mut rng)
                .map_err(|source| AuditError::Mechanism {
                    trial,
                    instance: Box::new(inst.to_doc()),
                    source,
                })?;
            acc.merge(check);
        }
        Ok(acc)
    });
    let mut total = SpCheck::default();
    for r in per_trial {
        total.merge(r?);
    }
    Ok(SpSuiteReport {
        instances: cfg.trials,
        checks: cfg.trials * cfg.configs.len(),
        probes: total.probes,
        max_gain: total.max_gain,
        findings: total.findings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::Preset;

    fn contains(set: &[f64], x: f64) -> bool {
        set.iter().any(|&v| (v - x).abs() < 1e-15)
    }

    #[test]
    fn probe_set_construction() {
        let inst = Instance::from_groups(&[&[0.8, 0.3]], &[0.0, 1.0]).unwrap();
        let me = inst.agents().find(|a| a.location == 0.8).unwrap().id;
        let set = deviation_set(&inst, me).unwrap();
        for x in [0.0, 1.0, 0.5 - 1e-6, 0.5 + 1e-6, 0.3 - 1e-6, 0.3 + 1e-6, -1.0, 2.0, 0.8] {
            assert!(contains(&set, x), "missing {x} in {set:?}");
        }
        assert!(set.windows(2).all(|w| w[0] < w[1]));

        let inst = Instance::from_groups(&[&[0.0]], &[0.0, 0.0]).unwrap();
        let set = deviation_set(&inst, AgentId(1)).unwrap();
        assert!(contains(&set, 0.0) && contains(&set, -1.0) && contains(&set, 1.0));

        let inst = Instance::from_groups(&[&[3.3]], &[0.0, 2.0, 4.0]).unwrap();
        let set = deviation_set(&inst, AgentId(1)).unwrap();
        let eps = 4e-6;
        for x in [1.0 - eps, 1.0 + eps, 3.0 - eps, 3.0 + eps] {
            assert!(contains(&set, x), "missing {x}");
        }
        assert_eq!(deviation_set(&inst, AgentId(9)), Err(ModelError::UnknownAgent(AgentId(9))));
    }

    #[test]
    fn family_instance_has_no_profitable_deviation() {
        let inst = Instance::from_groups(&[&[0.5 - 1e-3]], &[0.0, 0.0, 1.0, 1.0]).unwrap();
        for p in Preset::ALL {
            assert!(check_strategyproof(&inst, p.config(), SP_TOLERANCE).unwrap().is_empty());
        }
        let inst = Instance::from_groups(&[&[1.0]], &[0.0, 1.0, 1.0]).unwrap();
        for p in Preset::ALL {
            assert!(check_strategyproof(&inst, p.config(), SP_TOLERANCE).unwrap().is_empty());
        }
    }

    #[test]
    fn detects_a_manipulable_rule() {
        // Sanity check of the harness itself: with a negative tolerance every
        // probe that leaves the outcome unchanged counts as a "gain" of 0 > -1.
        let inst = Instance::from_groups(&[&[0.2, 0.9]], &[0.0, 1.0, 2.0]).unwrap();
        let all = check_strategyproof(&inst, Preset::Aoa.config(), -1.0).unwrap();
        assert!(!all.is_empty());
        assert!(all.iter().all(|f| f.gain > -1.0));
    }

    #[test]
    fn small_suite_is_clean_and_order_independent() {
        let mut cfg = SpSuiteConfig { trials: 40, ..SpSuiteConfig::default() };
        let par = strategyproofness_suite(&cfg).unwrap();
        cfg.execution = Execution::Sequential;
        let seq = strategyproofness_suite(&cfg).unwrap();
        assert_eq!(par, seq);
        assert!(par.findings.is_empty(), "{:?}", par.findings.first());
        assert!(par.max_gain <= SP_TOLERANCE);
        assert_eq!(par.checks, 40 * 13);
    }
}
