use std::path::PathBuf;
use std::process::Command;
use vortexlab::config::validate;
use vortexlab::{Experiment, ExperimentConfig, Overrides, RawConfig};

fn raw(text: &str) -> RawConfig {
    RawConfig::parse(text).unwrap()
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vortexlab"))
}

#[test]
fn defaults_are_valid() {
    for e in Experiment::ALL {
        assert_eq!(
            validate(RawConfig::for_experiment(e), &Overrides::default()),
            Vec::<String>::new(),
            "{}",
            e.name()
        );
    }
}

#[test]
fn shipped_configs_are_valid() {
    for e in Experiment::ALL {
        let r = RawConfig::load(&configs().join(format!("{}.json", e.name()))).unwrap();
        assert_eq!(r.experiment, e.name());
        assert!(validate(r, &Overrides::default()).is_empty(), "{}", e.name());
    }
}

#[test]
fn gamma_at_two_pi_is_rejected() {
    for name in ["ballgrowth", "prop13"] {
        let errs = validate(
            raw(&format!(r#"{{"experiment":"{name}","params":{{"gamma":6.3}}}}"#)),
            &Overrides::default(),
        );
        assert!(
            errs.iter().any(|m| m.contains("gamma = 6.3") && m.contains("2π")),
            "{errs:?}"
        );
    }
}

#[test]
fn unresolved_discs_are_rejected() {
    let errs = validate(
        raw(r#"{"experiment":"ballgrowth","params":{"lambda":1.0,"sphere_spacing":0.5}}"#),
        &Overrides::default(),
    );
    assert!(errs.iter().any(|m| m.contains("4·sphere_spacing")), "{errs:?}");
}

#[test]
fn all_problems_are_reported_together() {
    let errs = validate(
        raw(r#"{"experiment":"ballgrowth","threads":0,"params":{"gamma":7.0,"lambda":0.1}}"#),
        &Overrides::default(),
    );
    assert!(errs.len() >= 3, "{errs:?}");
}

#[test]
fn unknown_keys_are_rejected() {
    let errs = validate(
        raw(r#"{"experiment":"certify","params":{"gama":5.0}}"#),
        &Overrides::default(),
    );
    assert!(errs.iter().any(|m| m.contains("gama")), "{errs:?}");
    let errs = validate(
        raw(r#"{"experiment":"identities","params":{"monotonicity":{"ball":{"radius":5,"spacing_":1}}}}"#),
        &Overrides::default(),
    );
    assert!(errs.iter().any(|m| m.contains("spacing_")), "{errs:?}");
    assert!(RawConfig::parse(r#"{"experiment":"certify","sed":1}"#).is_err());
}

#[test]
fn unknown_experiment_is_rejected() {
    let errs = validate(raw(r#"{"experiment":"nope"}"#), &Overrides::default());
    assert!(errs[0].contains("unknown experiment"));
}

#[test]
fn resolved_config_round_trips() {
    let c = ExperimentConfig::resolve(RawConfig::for_experiment(Experiment::Prop13), &Overrides::default()).unwrap();
    let back: RawConfig = RawConfig::parse(&c.canonical_json()).unwrap();
    let again = ExperimentConfig::resolve(back, &Overrides::default()).unwrap();
    assert_eq!(c.canonical_json(), again.canonical_json());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"experiment":"ballgrowth","params":{"gamma":6.3}}"#).unwrap();
    let s = bin().args(["validate", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(s.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&s.stdout).contains("\"valid\": false"));
    let s = bin().args(["--quiet", "run", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(s.status.code(), Some(2));
    let s = bin().args(["validate", "certify"]).output().unwrap();
    assert_eq!(s.status.code(), Some(0));
    // A valid config that fails at run time: the vortex-line cores sit on
    // the poles of the sphere grid.
    let polar = dir.path().join("polar.json");
    std::fs::write(
        &polar,
        r#"{"experiment":"ballgrowth","params":{"log_radius":3.0,"dipole":{"center":[0,0,1],"direction":[1,0,0]}}}"#,
    )
    .unwrap();
    let s = bin()
        .args(["--quiet", "run", "--out"])
        .arg(dir.path().join("o"))
        .arg("--config")
        .arg(&polar)
        .output()
        .unwrap();
    assert_eq!(s.status.code(), Some(1), "{}", String::from_utf8_lossy(&s.stderr));
}

#[test]
fn run_writes_artifacts_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("gr");
    let s = bin()
        .args(["--quiet", "run", "growth-rate", "--seed", "3", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(s.status.success(), "{}", String::from_utf8_lossy(&s.stderr));
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["experiment"], "growth-rate");
    assert_eq!(m["seed"], 3);
    for f in m["files"].as_array().unwrap() {
        assert!(out.join(f["name"].as_str().unwrap()).exists());
    }
}
