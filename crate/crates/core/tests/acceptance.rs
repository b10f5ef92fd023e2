//! Acceptance suite. Each criterion prints one PASS/FAIL line; run with
//! `cargo test -p mechlab-core --test acceptance -- --nocapture` to see them.

use mechlab::audit::{
    check_locality, check_witness_and_adjacency, distortion_scan, parametric_bound, strategyproofness_suite,
    theoretical_bound, within_bound, BoundParameter, ScanConfig, SpSuiteConfig, SP_TOLERANCE,
};
use mechlab::families::{build_family, replay_family};
use mechlab::generate::{trial_rng, uniform_instance, Generator, InstanceShape};
use mechlab::mechanism::{run_quantile, GOLDEN_QUANTILE};
use mechlab::model::eval_objective;
use mechlab::oracle::optimal_placement;
use mechlab::{Instance, ObjectiveKind, Preset, QuantileConfig};
use rand::Rng;

fn verdict(criterion: &str, detail: &str, pass: bool) -> bool {
    println!("[{}] criterion {criterion}: {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

fn scan_max(cfg: QuantileConfig, kind: ObjectiveKind, generator: Generator, trials: usize, seed: u64) -> (f64, bool) {
    let scan = ScanConfig { trials, seed, generator, ..ScanConfig::default() };
    let result = distortion_scan(&scan, cfg, kind).expect("scan runs");
    let dominance = result.rows.iter().all(|r| r.mech_cost >= r.opt_cost);
    (result.worst.report.ratio.as_f64(), dominance)
}

#[test]
fn criterion_1_upper_bound_envelopes() {
    let root5 = 5f64.sqrt();
    let rows = [
        (Preset::Aoa, 9.0, "AoA/(1/2,1/2) <= 9"),
        (Preset::Mom, 3.0, "MoM/(1,1) <= 3"),
        (Preset::Moa, 2.0 + root5, "MoA/(a*,1) <= 2+sqrt5"),
        (Preset::Aom, 2.0 + root5, "AoM/(1,b*) <= 2+sqrt5"),
    ];
    let mut all = true;
    for (preset, bound, label) in rows {
        let (cfg, kind) = (preset.config(), preset.objective());
        let computed = theoretical_bound(cfg, kind).unwrap();
        assert!((computed - bound).abs() < 1e-12);
        let (random, dom_a) = scan_max(cfg, kind, Generator::UniformRandom, 10_000, 1);
        let (climbed, dom_b) = scan_max(cfg, kind, Generator::HillClimb, 50, 2);
        let worst = random.max(climbed);
        let pass = within_bound(mechlab::Ratio::Finite(worst), bound) && dom_a && dom_b;
        all &= verdict(
            "1",
            &format!("{label}: 10000 random max {random:.6}, 50 hill-climbs max {climbed:.6}"),
            pass,
        );
    }
    assert!(all);
}

#[test]
fn criterion_2_lower_bound_family_replays() {
    let theta = 1e-4;
    let mut all = true;
    for (kind, floor, target) in [
        (ObjectiveKind::AoA, 2.998, 3.0),
        (ObjectiveKind::MoM, 2.998, 3.0),
        (ObjectiveKind::MoA, 3.498, 3.5),
        (ObjectiveKind::AoM, 2.998, 3.0),
    ] {
        let spec = build_family(kind, theta).unwrap();
        let replay = replay_family(&spec, Preset::for_objective(kind).config()).unwrap();
        let pass = replay.max_ratio >= floor && (target - replay.max_ratio).abs() <= 2e-3;
        all &= verdict(
            "2",
            &format!("{kind} family max {:.6} at {} (target {target}, floor {floor})", replay.max_ratio, replay.argmax),
            pass,
        );
    }
    assert!(all);
}

#[test]
fn criterion_3_strategyproofness() {
    let cfg = SpSuiteConfig::default();
    assert_eq!(cfg.trials, 1000);
    assert_eq!(cfg.configs.len(), 13);
    assert_eq!(cfg.random_misreports, 32);
    let report = strategyproofness_suite(&cfg).unwrap();
    let pass = report.findings.is_empty() && report.max_gain <= SP_TOLERANCE;
    let detail = format!(
        "{} instances x {} configs, {} probes, max gain {:e}, findings {}",
        report.instances,
        cfg.configs.len(),
        report.probes,
        report.max_gain,
        report.findings.len()
    );
    assert!(verdict("3", &detail, pass), "first finding: {:?}", report.findings.first());
}

#[test]
fn criterion_4_parametric_lemmas() {
    let mut all = true;
    for q in [0.2, 0.382, 0.5, 0.8] {
        for (cfg, kind, which) in [
            (QuantileConfig::new(q, 1.0).unwrap(), ObjectiveKind::MoA, BoundParameter::MoaInAlpha),
            (QuantileConfig::new(1.0, q).unwrap(), ObjectiveKind::AoM, BoundParameter::AomInBeta),
        ] {
            let bound = parametric_bound(q, which).unwrap().bound;
            let (observed, dominance) = scan_max(cfg, kind, Generator::UniformRandom, 5_000, 4);
            let pass = within_bound(mechlab::Ratio::Finite(observed), bound) && dominance;
            all &= verdict("4", &format!("{kind} at {cfg}: observed {observed:.6} <= bound {bound:.6}"), pass);
        }
    }
    let golden = parametric_bound(GOLDEN_QUANTILE, BoundParameter::MoaInAlpha).unwrap().bound;
    let err = (golden - (2.0 + 5f64.sqrt())).abs();
    all &= verdict("4", &format!("bound at (3-sqrt5)/2 = {golden} (|err| = {err:e})"), err <= 1e-12);
    assert!(all);
}

#[test]
fn criterion_5_structural_invariants() {
    let grid = [0.0, 0.25, 0.382, 0.5, 0.75, 1.0];
    let shape = InstanceShape::default();
    let mut witness_failures = 0;
    let mut locality_failures = 0;
    let mut locality_runs = 0;
    let mut dominance_failures = 0;
    let mut checks = 0;
    for (gi, &alpha) in grid.iter().enumerate() {
        for (gj, &beta) in grid.iter().enumerate() {
            let cfg = QuantileConfig::new(alpha, beta).unwrap();
            let point = (gi * grid.len() + gj) as u64;
            for t in 0..1000u64 {
                let inst = uniform_instance(&mut trial_rng(100 + point, t), &shape);
                checks += 1;
                if !check_witness_and_adjacency(&inst, cfg).passed() {
                    witness_failures += 1;
                }
                if inst.k() >= 2 {
                    locality_runs += 1;
                    if !check_locality(&inst, cfg, 3, t).unwrap().passed() {
                        locality_failures += 1;
                    }
                }
                let out = run_quantile(&inst, cfg).unwrap();
                for kind in ObjectiveKind::ALL {
                    let mech = eval_objective(kind, &inst, &out.placement).unwrap();
                    if mech < optimal_placement(&inst, kind).cost {
                        dominance_failures += 1;
                    }
                }
            }
        }
    }
    let mut all = verdict(
        "5",
        &format!("witness/adjacency on {checks} (instance, config) pairs: {witness_failures} failures"),
        witness_failures == 0,
    );
    all &= verdict(
        "5",
        &format!("P1/P2 locality on {locality_runs} multi-group instances: {locality_failures} failures"),
        locality_failures == 0,
    );
    all &= verdict(
        "5",
        &format!("oracle dominance on {} evaluations: {dominance_failures} failures", checks * 4),
        dominance_failures == 0,
    );

    let mut equivariance_failures = 0;
    for t in 0..1000u64 {
        let mut rng = trial_rng(999, t);
        let inst = uniform_instance(&mut rng, &shape);
        let shift: f64 = rng.gen_range(-50.0..50.0);
        let scale: f64 = rng.gen_range(0.05..20.0);
        let moved = inst.map_locations(|x| x + shift);
        let scaled = inst.map_locations(|x| x * scale);
        let out = run_quantile(&inst, Preset::Aoa.config()).unwrap();
        let (a, b) = out.placement.slots();
        for kind in ObjectiveKind::ALL {
            let base = eval_objective(kind, &inst, &out.placement).unwrap();
            // slot positions are preserved by increasing affine maps
            let pm = mechlab::Placement::new(moved.candidates(), a, b).unwrap();
            let ps = mechlab::Placement::new(scaled.candidates(), a, b).unwrap();
            let vm = eval_objective(kind, &moved, &pm).unwrap();
            let vs = eval_objective(kind, &scaled, &ps).unwrap();
            let tol = |v: f64| 1e-9 * v.abs().max(1.0);
            if (vm - base).abs() > tol(base) || (vs - scale * base).abs() > tol(scale * base) {
                equivariance_failures += 1;
            }
        }
    }
    all &= verdict(
        "5",
        &format!("translation/scale equivariance on 1000 instances: {equivariance_failures} failures"),
        equivariance_failures == 0,
    );
    assert!(all);
}

#[test]
fn criterion_6_exact_spot_values() {
    let theta = 1e-3;
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
    let value = |kind, inst: &Instance, w: (f64, f64)| {
        let slots = inst.candidates().slots();
        let a = slots.iter().find(|s| s.value == w.0).unwrap().id;
        let b = slots.iter().rev().find(|s| s.value == w.1).unwrap().id;
        eval_objective(kind, inst, &mechlab::Placement::new(inst.candidates(), a, b).unwrap()).unwrap()
    };
    let mut all = true;

    let mom = build_family(ObjectiveKind::MoM, theta).unwrap();
    let v = value(ObjectiveKind::MoM, mom.instance("I1").unwrap(), (0.0, 0.0));
    all &= verdict("6", &format!("MoM(0,0) on MoM-family I1 = {v} (expect 1)"), close(v, 1.0));

    let aoa = build_family(ObjectiveKind::AoA, theta).unwrap();
    let v = value(ObjectiveKind::AoA, aoa.instance("I5").unwrap(), (1.0, 1.0));
    let want = 0.25 + theta / 2.0;
    all &= verdict("6", &format!("AoA(1,1) on AoA-family I5 = {v} (expect {want})"), close(v, want));

    let moa = build_family(ObjectiveKind::MoA, theta).unwrap();
    let i6 = moa.instance("I6").unwrap();
    let out = run_quantile(i6, Preset::Moa.config()).unwrap();
    let mech = eval_objective(ObjectiveKind::MoA, i6, &out.placement).unwrap();
    let want = (7.0 + 4.0 * theta) / 5.0;
    all &= verdict("6", &format!("MoA(M|I6) = {mech} (expect {want})"), close(mech, want));
    let opt = optimal_placement(i6, ObjectiveKind::MoA);
    let want = (2.0 + 4.0 * theta) / 5.0;
    all &= verdict(
        "6",
        &format!("MoA(OPT|I6) = {} at {} (expect {want} at (1, 1))", opt.cost, opt.placement),
        close(opt.cost, want) && opt.placement.values() == (1.0, 1.0),
    );

    let aom = build_family(ObjectiveKind::AoM, theta).unwrap();
    let v = value(ObjectiveKind::AoM, aom.instance("I5").unwrap(), (0.0, 0.0));
    let want = 0.75 - theta / 2.0;
    all &= verdict("6", &format!("AoM(0,0) on AoM-family I5 = {v} (expect {want})"), close(v, want));
    assert!(all);
}
