use bosonstar::experiments::{collect_reports, run, write_outputs, ExperimentConfig, RunOutput};
use bosonstar::Error;

fn config_errors(text: &str) -> Vec<String> {
    match ExperimentConfig::from_json(text).and_then(|c| c.validate().map(|_| c)) {
        Err(Error::ConfigInvalid(errors)) => errors,
        other => panic!("expected ConfigInvalid, got {other:?}"),
    }
}

#[test]
fn box_too_small_names_sizing_rule() {
    let errors = config_errors(
        r#"{
        "experiment": { "name": "free_decay" },
        "grid": { "dim": 1, "n": 512, "length": 50.0 },
        "initial": { "type": "gaussian", "width": 1.0 },
        "solver": { "dt": 0.1, "t_final": 40.0 }
    }"#,
    );
    assert_eq!(errors.len(), 1, "{errors:?}");
    assert!(errors[0].contains("grid.length") && errors[0].contains("light-cone sizing rule"));
    // T = 40, R0 = 6 width
    assert!(errors[0].contains("92.00"), "{}", errors[0]);
}

#[test]
fn max_velocity_sizing_includes_distance() {
    let errors = config_errors(
        r#"{
        "experiment": {
            "name": "max_velocity",
            "source": { "type": "ball", "center": [0.0], "radius": 2.0 },
            "target": { "type": "half_space", "normal": [1.0], "offset": 12.0 }
        },
        "grid": { "dim": 1, "n": 1024, "length": 32.0 },
        "initial": { "type": "bump", "radius": 2.0 },
        "solver": { "dt": 0.01, "t_final": 8.0 }
    }"#,
    );
    assert!(errors.iter().any(|e| e.contains("+ D") && e.contains("40.00")), "{errors:?}");
}

#[test]
fn overlapping_phase_space_cutoffs_rejected() {
    let errors = config_errors(
        r#"{
        "experiment": {
            "name": "phase_space",
            "f": { "kind": "bump", "lo": 0.3, "hi": 0.8 },
            "g": { "kind": "bump", "lo": 0.0, "hi": 0.4 }
        },
        "grid": { "dim": 1, "n": 1024, "length": 200.0 },
        "initial": { "type": "gaussian", "width": 2.0 },
        "solver": { "dt": 0.05, "t_final": 40.0 }
    }"#,
    );
    assert!(errors.iter().any(|e| e.starts_with("experiment.g") && e.contains("disjoint")), "{errors:?}");
}

#[test]
fn unknown_fields_rejected() {
    let text = r#"{
        "experiment": { "name": "conservation" },
        "grid": { "dim": 1, "n": 64, "length": 20.0, "spacing": 0.1 },
        "solver": { "dt": 0.01, "t_final": 0.1 }
    }"#;
    assert!(ExperimentConfig::from_json(text).is_err());
}

#[test]
fn velocity_experiment_rejects_random_data() {
    let errors = config_errors(
        r#"{
        "experiment": {
            "name": "max_velocity",
            "source": { "type": "ball", "center": [0.0], "radius": 2.0 },
            "target": { "type": "half_space", "normal": [1.0], "offset": 8.0 }
        },
        "grid": { "dim": 1, "n": 1024, "length": 64.0 },
        "initial": { "type": "random_smooth", "bandwidth": 1.0 },
        "solver": { "dt": 0.01, "t_final": 4.0 }
    }"#,
    );
    assert!(errors.iter().any(|e| e.contains("spatially localized")), "{errors:?}");
}

const SEEDED: &str = r#"{
    "experiment": { "name": "conservation" },
    "grid": { "dim": 2, "n": 32, "length": 16.0 },
    "potential": { "type": "gaussian", "kappa": 0.5, "sigma": 1.0 },
    "initial": { "type": "random_smooth", "bandwidth": 1.5, "norm": 1.0 },
    "solver": { "dt": 0.01, "t_final": 0.5, "snapshot_stride": 5 },
    "seed": 17
}"#;

fn fingerprint(out: &RunOutput) -> (String, Vec<Vec<u64>>) {
    let report = serde_json::to_string(&out.report).unwrap();
    let rows = out.curves.iter().flat_map(|c| c.rows.iter().map(|r| r.iter().map(|v| v.to_bits()).collect())).collect();
    (report, rows)
}

#[test]
fn seeded_rerun_is_bit_identical() {
    let cfg = ExperimentConfig::from_json(SEEDED).unwrap();
    let a = fingerprint(&run(&cfg).unwrap());
    let b = fingerprint(&run(&cfg).unwrap());
    assert_eq!(a, b);

    let mut other = cfg.clone();
    other.seed = 18;
    assert_ne!(a.1, fingerprint(&run(&other).unwrap()).1);
}

#[test]
fn outputs_round_trip_through_directory() {
    let cfg = ExperimentConfig::from_json(SEEDED).unwrap();
    let out = run(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_outputs(dir.path(), &cfg, &out).unwrap();
    assert!(dir.path().join("report.json").exists());
    assert!(dir.path().join("config.json").exists());
    let reports = collect_reports(dir.path()).unwrap();
    assert_eq!(reports.len(), 1);
    assert_eq!(reports[0].1, out.report);
    let again = ExperimentConfig::load(&dir.path().join("config.json")).unwrap();
    assert_eq!(again, cfg);
}
