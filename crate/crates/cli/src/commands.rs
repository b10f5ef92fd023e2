use std::fs;

use mechlab::audit::{
    distortion_scan, strategyproofness_suite, theoretical_bound, within_bound, ScanConfig, SpSuiteConfig,
};
use mechlab::families::{build_family, replay_family};
use mechlab::generate::{InstanceShape, SizeRange};
use mechlab::mechanism::run_quantile;
use mechlab::model::eval_objective;
use mechlab::{optimal_placement, Instance, ObjectiveKind, QuantileConfig};

use crate::output::{self, CsvSink};
use crate::{Failure, ScanArgs};

fn load(path: &str) -> Result<Instance, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{path}: {e}")))?;
    Instance::from_json(&text).map_err(|e| Failure::Input(format!("{path}: {e}")))
}

pub fn run(path: &str, cfg: QuantileConfig, objective: ObjectiveKind) -> Result<(), Failure> {
    let inst = load(path)?;
    let out = run_quantile(&inst, cfg).map_err(|e| Failure::Input(format!("{path}: {e}")))?;
    let t = &out.trace;
    println!("config: alpha={} beta={}", cfg.alpha, cfg.beta);
    println!("instance: n={} k={} m={}", inst.n(), inst.k(), inst.m());
    for r in &t.representatives {
        println!(
            "group {}: agent {} at {} -> y1 {} ({}), y2 {} ({})",
            r.group, r.quantile_agent, r.location, r.y1, r.y1_value, r.y2, r.y2_value
        );
    }
    println!("z: {:?} -> {:?} (rank {})", t.z_initial, t.z_updated, t.rank);
    println!("w1 = {}, w2 = {}", t.w1, t.w2);
    let p = out.placement;
    println!("placement: slots {} {}, values ({}, {})", p.slot_a, p.slot_b, p.value_a, p.value_b);
    println!("witness group: {}", t.witness);
    let cost = eval_objective(objective, &inst, &p).expect("mechanism placements use instance slots");
    println!("{objective}: {cost}");
    Ok(())
}

pub fn opt(path: &str, objective: ObjectiveKind) -> Result<(), Failure> {
    let inst = load(path)?;
    let r = optimal_placement(&inst, objective);
    let p = r.placement;
    println!("objective: {objective}");
    println!("cost: {}", r.cost);
    println!("placement: slots {} {}, values ({}, {})", p.slot_a, p.slot_b, p.value_a, p.value_b);
    println!("ties: {}", r.ties);
    println!("pairs: {}", r.pairs_visited);
    Ok(())
}

fn scan_config(args: &ScanArgs, default_trials: u64) -> Result<ScanConfig, Failure> {
    let shape = InstanceShape { groups: SizeRange::new(1, args.max_groups), ..InstanceShape::default() };
    let scan = ScanConfig {
        trials: args.trials.unwrap_or(default_trials) as usize,
        seed: args.seed,
        generator: args.generator,
        shape,
        theta: args.theta,
        ..ScanConfig::default()
    };
    scan.validate().map_err(|e| Failure::Input(e.to_string()))?;
    Ok(scan)
}

fn bound_text(bound: Option<f64>) -> String {
    bound.map_or_else(|| "n/a".to_string(), |b| b.to_string())
}

pub fn audit_distortion(jobs: &[(QuantileConfig, ObjectiveKind)], args: &ScanArgs) -> Result<(), Failure> {
    let scan = scan_config(args, 10_000)?;
    let mut sink = CsvSink::open(args.out.as_deref())?;
    sink.header(&[
        "objective", "alpha", "beta", "trial", "generator", "n", "k", "m", "mech_cost", "opt_cost", "ratio",
        "witness",
    ])?;
    let mut violated = false;
    for &(cfg, kind) in jobs {
        let result = distortion_scan(&scan, cfg, kind).map_err(|e| Failure::Input(e.to_string()))?;
        let witness_path = args.out.as_deref().map(|out| output::witness_path(out, kind));
        if let Some(path) = &witness_path {
            fs::write(path, result.worst.instance.to_json())
                .map_err(|e| Failure::Input(format!("{path}: {e}")))?;
        }
        for row in &result.rows {
            let witness = match &witness_path {
                Some(p) if row.trial == result.worst.trial => p.as_str(),
                _ => "-",
            };
            sink.row(&[
                kind.to_string(),
                cfg.alpha.to_string(),
                cfg.beta.to_string(),
                row.trial.to_string(),
                row.generator.to_string(),
                row.n.to_string(),
                row.k.to_string(),
                row.m.to_string(),
                row.mech_cost.to_string(),
                row.opt_cost.to_string(),
                row.ratio.to_string(),
                witness.to_string(),
            ])?;
        }
        let bound = theoretical_bound(cfg, kind);
        let worst = result.worst.report.ratio;
        let ok = bound.is_none_or(|b| within_bound(worst, b));
        violated |= !ok;
        eprintln!(
            "{kind} {cfg}: {} trials ({}), max ratio {worst} at trial {}, bound {}: {}",
            scan.trials,
            scan.generator,
            result.worst.trial,
            bound_text(bound),
            if ok { "ok" } else { "VIOLATION" }
        );
        for (edge, count) in result.histogram.nonempty() {
            eprintln!("  [{edge:.2}, {:.2}): {count}", edge + result.histogram.bin_width);
        }
        if result.histogram.overflow + result.histogram.infinite > 0 {
            eprintln!("  >= 10: {}, infinite: {}", result.histogram.overflow, result.histogram.infinite);
        }
    }
    sink.finish()?;
    if violated {
        Err(Failure::Violation)
    } else {
        Ok(())
    }
}

pub fn audit_sp(configs: &[QuantileConfig], args: &ScanArgs) -> Result<(), Failure> {
    let scan = scan_config(args, 1_000)?;
    let suite = SpSuiteConfig {
        trials: scan.trials,
        seed: scan.seed,
        configs: configs.to_vec(),
        shape: scan.shape,
        ..SpSuiteConfig::default()
    };
    let report = strategyproofness_suite(&suite).map_err(|e| Failure::Input(e.to_string()))?;
    if let Some(out) = args.out.as_deref() {
        let mut sink = CsvSink::open(Some(out))?;
        sink.header(&[
            "agent", "group", "true_location", "misreport", "honest_cost", "deviated_cost", "gain", "instance",
        ])?;
        for f in &report.findings {
            sink.row(&[
                f.agent.to_string(),
                f.group.to_string(),
                f.true_location.to_string(),
                f.misreport.to_string(),
                f.honest_cost.to_string(),
                f.deviated_cost.to_string(),
                f.gain.to_string(),
                output::compact_json(&f.instance),
            ])?;
        }
        sink.finish()?;
    }
    println!(
        "strategyproofness: {} instances x {} configs, {} probes, max gain {:e}, findings {}",
        report.instances,
        configs.len(),
        report.probes,
        report.max_gain,
        report.findings.len()
    );
    if report.findings.is_empty() {
        Ok(())
    } else {
        Err(Failure::Violation)
    }
}

pub fn sweep(alphas: &[f64], betas: &[f64], kind: ObjectiveKind, args: &ScanArgs) -> Result<(), Failure> {
    let scan = scan_config(args, 2_000)?;
    let mut sink = CsvSink::open(args.out.as_deref())?;
    sink.header(&["alpha", "beta", "observed_max_ratio", "parametric_bound"])?;
    let mut violated = false;
    for &alpha in alphas {
        for &beta in betas {
            let cfg = QuantileConfig::new(alpha, beta).map_err(|e| Failure::Input(e.to_string()))?;
            let result = distortion_scan(&scan, cfg, kind).map_err(|e| Failure::Input(e.to_string()))?;
            let bound = theoretical_bound(cfg, kind);
            let worst = result.worst.report.ratio;
            violated |= !bound.is_none_or(|b| within_bound(worst, b));
            sink.row(&[alpha.to_string(), beta.to_string(), worst.to_string(), bound_text(bound)])?;
        }
    }
    sink.finish()?;
    if violated {
        Err(Failure::Violation)
    } else {
        Ok(())
    }
}

pub fn families(kind: ObjectiveKind, theta: f64, cfg: QuantileConfig) -> Result<(), Failure> {
    let spec = build_family(kind, theta).map_err(|e| Failure::Input(e.to_string()))?;
    let replay = replay_family(&spec, cfg).map_err(|e| Failure::Input(e.to_string()))?;
    let family = format!("{kind}-lower-bound");
    let mut table = vec![["family", "instance", "mechanism", "optimal", "ratio", "target", "note"].map(String::from)];
    for row in &replay.rows {
        table.push([
            family.clone(),
            row.label.to_string(),
            row.report.mechanism_placement.to_string(),
            row.report.optimal_placement.to_string(),
            format!("{:.6}", row.report.ratio.as_f64()),
            replay.target.to_string(),
            if row.extremal { "extremal" } else { "not extremal for this mechanism" }.to_string(),
        ]);
    }
    print!("{}", output::table(&table));
    println!(
        "family max {:.6} at {} (target {}, theta {}, config {})",
        replay.max_ratio, replay.argmax, replay.target, theta, cfg
    );
    Ok(())
}
