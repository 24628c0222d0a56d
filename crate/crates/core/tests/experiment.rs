use std::fs;

use sprinkle::experiment::{run, smoke_suite, ExperimentConfig};
use sprinkle::mc::InequalityReport;
use sprinkle::sampler::{snapshot, GaussianField};

fn smoke(name: &str) -> ExperimentConfig {
    smoke_suite().into_iter().find(|c| c.name == name).unwrap()
}

#[test]
fn run_writes_report_and_snapshot_of_replicate_zero() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = smoke("smoke-cor2.6");
    config.run.output_dir = Some(dir.path().to_str().unwrap().into());
    config.run.snapshot = true;
    config.run.replicates = 2_000;
    let out = run(&config).unwrap();
    assert_eq!(out.exit_code(), 0);
    assert_eq!(out.files.len(), 2);

    let written: InequalityReport = serde_json::from_str(&fs::read_to_string(&out.files[0]).unwrap()).unwrap();
    assert_eq!(written.canonical_json().unwrap(), out.report.canonical_json().unwrap());
    assert_eq!(written.config_hash.as_deref(), Some(config.hash().unwrap().as_str()));

    let (header, values) = snapshot::load(&out.files[1]).unwrap();
    assert_eq!(header.seed, config.run.seed);
    assert_eq!(values, config.plan().unwrap().draw(0));
}

#[test]
fn config_survives_a_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    let config = smoke("smoke-thm1.1");
    fs::write(&path, config.to_toml().unwrap()).unwrap();
    assert_eq!(ExperimentConfig::load(&path).unwrap(), config);
}

#[test]
fn malformed_configs_are_config_errors() {
    let mut text = smoke("smoke-thm1.1").to_toml().unwrap();
    text = text.replace("family = \"bargmann_fock\"", "family = \"brownian\"");
    let err = text.parse::<ExperimentConfig>().unwrap_err();
    assert!(matches!(err, sprinkle::Error::Config(_)), "{err}");

    let mut config = smoke("smoke-thm1.1");
    config.events.pop();
    assert!(config.validate().is_err());
    let mut config = smoke("smoke-thm1.1");
    config.run.workers = Some(0);
    assert!(config.validate().is_err());
}
