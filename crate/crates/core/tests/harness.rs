mod common;

use gridval::harness::oos::{derive_seed, reference_and_training};
use gridval::harness::output::{self, percentile};
use gridval::harness::{run_out_of_sample, sweep_epsilon, EpsSpec, RunConfig};
use gridval::uncertainty::{wasserstein_distance, LoadCase};
use std::path::Path;

fn small_config(dir: &Path) -> RunConfig {
    let case = dir.join("small.m");
    let scenario = dir.join("small.json");
    std::fs::write(&case, common::five_bus_feeder().case_text()).unwrap();
    std::fs::write(&scenario, serde_json::to_string(&common::five_bus_scenario()).unwrap()).unwrap();
    RunConfig {
        case: Some(case),
        scenario: Some(scenario),
        load: LoadCase::Low,
        hours: vec![common::NOON],
        eps: EpsSpec::True,
        n_samples: 10,
        n_full: 200,
        n_test: 50,
        seed: 5,
        ..Default::default()
    }
}

#[test]
fn draws_are_reproducible() {
    let study = common::five_bus();
    let a = study.draw(12, LoadCase::Low, 20, 3).unwrap();
    let b = study.draw(12, LoadCase::Low, 20, 3).unwrap();
    let c = study.draw(12, LoadCase::Low, 20, 4).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn seed_streams_are_distinct() {
    let mut seen = std::collections::HashSet::new();
    for tag in 0..3 {
        for rep in 0..50 {
            assert!(seen.insert(derive_seed(1, tag, rep)));
        }
    }
    assert_eq!(derive_seed(9, 1, 2), derive_seed(9, 1, 2));
}

#[test]
fn training_set_is_a_subsample_with_its_true_radius() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let study = cfg.study().unwrap();
    let (full, train, true_eps) = reference_and_training(&study, &cfg, 12, 0).unwrap();
    assert_eq!(full.n_samples(), 200);
    assert_eq!(train.n_samples(), 10);
    for i in 0..train.n_samples() {
        let row = train.global_row(i);
        assert!((0..full.n_samples()).any(|j| full.global_row(j) == row));
    }
    for f in 0..2 {
        let d = wasserstein_distance(&train.clusters[f], &full.clusters[f]).unwrap();
        assert_eq!(d, true_eps[f]);
        assert!(d > 0.0);
    }
}

#[test]
fn validation_replicate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let study = cfg.study().unwrap();
    let a = run_out_of_sample(&study, &cfg, 12, 0).unwrap();
    let b = run_out_of_sample(&study, &cfg, 12, 0).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(a.eps, a.true_eps);
    for s in [&a.dro, &a.saa] {
        assert_eq!(s.costs.len(), 50);
        assert_eq!(s.voltages.len(), 50);
        assert!((s.violation_rate - s.violations as f64 / 50.0).abs() < 1e-15);
    }
    // a larger ambiguity set never lowers the planned cost
    assert!(a.dro.objective >= a.saa.objective - 1e-6);

    let other = run_out_of_sample(&study, &cfg, 12, 1).unwrap();
    assert_ne!(a.true_eps, other.true_eps);

    let bundles = vec![a, other];
    let summary = output::oos_summary_csv(&bundles);
    assert_eq!(summary.lines().count(), 1 + 4);
    assert!(summary.starts_with("hour,replicate,formulation,eps,objective,mean_cost"));
    assert_eq!(output::cost_oos_csv(&bundles).lines().count(), 1 + 2 * 2 * 50);
    assert_eq!(output::voltages_oos_csv(&study, &bundles).lines().count(), 1 + 2 * 2 * 50 * 4);
    assert_eq!(output::oos_mu_csv(&bundles).lines().count(), 1 + 2 * 2);
}

#[test]
fn sweep_records_every_level() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let study = cfg.study().unwrap();
    let levels = [1.0, 0.1, 0.01, -0.5, 0.001];
    let rows = sweep_epsilon(&study, &cfg, 12, &levels, None, 0.01).unwrap();
    assert_eq!(rows.len(), 5);
    assert!(rows[3].error.is_some() && rows[3].objective.is_none());
    let obj: Vec<f64> = rows.iter().filter_map(|r| r.objective).collect();
    assert_eq!(obj.len(), 4);
    assert!(obj.windows(2).all(|w| w[0] >= w[1] - 1e-6), "{obj:?}");

    let varied = sweep_epsilon(&study, &cfg, 12, &[0.1, 0.001], Some(1), 0.02).unwrap();
    assert_eq!(varied[0].eps, vec![0.02, 0.1]);
    assert!(sweep_epsilon(&study, &cfg, 12, &[0.1], Some(2), 0.01).is_err());

    let objective = output::objective_csv(&rows);
    assert_eq!(objective.lines().count(), 6);
    assert_eq!(output::mu_csv(&rows).lines().count(), 1 + 4 * 2);
    let lambda = output::lambda_csv(&study, &rows);
    assert!(lambda.lines().skip(1).all(|l| l.split(',').count() == 7));

    output::write(dir.path(), "objective.csv", &objective).unwrap();
    assert_eq!(std::fs::read_to_string(dir.path().join("objective.csv")).unwrap(), objective);
}

#[test]
fn radius_specifications() {
    assert_eq!(EpsSpec::parse("0.5").unwrap(), EpsSpec::Uniform(0.5));
    assert_eq!(EpsSpec::parse("TRUE").unwrap(), EpsSpec::True);
    assert_eq!(EpsSpec::parse("0.1, 0.2").unwrap(), EpsSpec::PerCluster(vec![0.1, 0.2]));
    assert!(EpsSpec::parse("-1").is_err());
    assert!(EpsSpec::parse("x").is_err());
    assert!(EpsSpec::parse("0.1,0.2").unwrap().resolve(3, None).is_err());
    assert!(EpsSpec::True.resolve(2, None).is_err());
    assert_eq!(EpsSpec::True.resolve(2, Some(&[0.1, 0.2])).unwrap(), vec![0.1, 0.2]);
}

#[test]
fn run_config_json() {
    let cfg: RunConfig = serde_json::from_str(r#"{"hours": [3, 4], "eps": {"uniform": 0.2}, "seed": 9}"#).unwrap();
    assert_eq!(cfg.hours, vec![3, 4]);
    assert_eq!(cfg.eps, EpsSpec::Uniform(0.2));
    assert_eq!(cfg.n_samples, 25);
    let back: RunConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(back, cfg);
    assert!(serde_json::from_str::<RunConfig>(r#"{"hourz": [1]}"#).is_err());
    let bad = RunConfig {
        hours: vec![24],
        ..Default::default()
    };
    assert!(bad.validate().is_err());
    let bad = RunConfig {
        n_samples: 2000,
        ..Default::default()
    };
    assert!(bad.validate().is_err());
}

#[test]
fn percentiles_interpolate() {
    let v = [4.0, 1.0, 3.0, 2.0];
    assert_eq!(percentile(&v, 0.0), 1.0);
    assert_eq!(percentile(&v, 1.0), 4.0);
    assert!((percentile(&v, 0.5) - 2.5).abs() < 1e-15);
    assert!(percentile(&[], 0.5).is_nan());
}
