//! End-to-end checks of the binary: deterministic outputs, config
//! round-tripping, and the exit-code contract.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use scatterkit::config::ScenarioConfig;

const GOOD_CONFIG: &str = r#"
[model]
n_particles = 3
dim = 6
seed = 42
coupling_scale = 0.08
potential_kind = "dense_hermitian"
h0_kind = "linear"

[grid]
e_min = 60.0
e_max = 600.0
points = 4
spacing = "logarithmic"
eps = 0.5

[scan]
coupling = [0.2, 0.1, 0.05, 0.025]

[twobody]
beta = 1.0
lambda = -1.5
nodes = 200
cutoff = 200.0
on_shell_momentum = 1.0
"#;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scatterkit"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn setup(config: &str) -> (tempfile::TempDir, std::path::PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scenario.toml");
    fs::write(&cfg, config).unwrap();
    (dir, cfg)
}

#[test]
fn scan_outputs_are_byte_identical_across_runs() {
    let (dir, cfg) = setup(GOOD_CONFIG);
    let cfg = cfg.to_str().unwrap();
    for out in ["a", "b"] {
        let r = run(dir.path(), &["scan", cfg, "--out", out, "--threads", "2"]);
        assert!(
            r.status.success(),
            "scan failed: {}",
            String::from_utf8_lossy(&r.stderr)
        );
    }
    for name in ["scan.csv", "coupling_scan.csv"] {
        let a = fs::read(dir.path().join("a").join(name)).unwrap();
        let b = fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
        assert!(!a.is_empty());
    }
}

#[test]
fn config_round_trip_is_lossless() {
    let parsed = ScenarioConfig::from_toml_str(GOOD_CONFIG).unwrap();
    let emitted = parsed.to_toml_string().unwrap();
    let reparsed = ScenarioConfig::from_toml_str(&emitted).unwrap();
    let emitted_again = reparsed.to_toml_string().unwrap();
    assert_eq!(emitted, emitted_again, "second serialization cycle drifted");
}

#[test]
fn verify_passes_on_well_posed_scenario() {
    let (dir, cfg) = setup(GOOD_CONFIG);
    let r = run(dir.path(), &["verify", cfg.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    assert!(dir.path().join("out/verify_report.json").exists());
}

#[test]
fn malformed_config_exits_with_code_2() {
    let (dir, cfg) = setup("[model]\nn_particles = \"three\"");
    let r = run(dir.path(), &["verify", cfg.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&r.stderr);
    assert!(!msg.is_empty(), "config errors must be reported");
}

#[test]
fn unknown_config_key_exits_with_code_2() {
    let bad = GOOD_CONFIG.replace("[scan]", "[scan]\nmystery_knob = 1\n");
    let (dir, cfg) = setup(&bad);
    let r = run(dir.path(), &["scan", cfg.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn zero_regulator_exits_with_code_2() {
    let bad = GOOD_CONFIG.replace("eps = 0.5", "eps = 0.0");
    let (dir, cfg) = setup(&bad);
    let r = run(dir.path(), &["scan", cfg.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn missing_config_file_exits_with_code_4() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(dir.path(), &["scan", "no_such_file.toml"]);
    assert_eq!(r.status.code(), Some(4));
}

#[test]
fn degenerate_scan_exits_with_code_3() {
    // every grid point sits on a free eigenvalue with a vanishing regulator,
    // so the whole scan is rejected as numerically meaningless
    let bad = GOOD_CONFIG
        .replace("e_min = 60.0", "e_min = 1.0")
        .replace("e_max = 600.0", "e_max = 4.0")
        .replace("spacing = \"logarithmic\"", "spacing = \"linear\"")
        .replace("eps = 0.5", "eps = 1e-13")
        .replace("coupling_scale = 0.08", "coupling_scale = 5.0");
    let (dir, cfg) = setup(&bad);
    let r = run(dir.path(), &["scan", cfg.to_str().unwrap()]);
    assert_eq!(
        r.status.code(),
        Some(3),
        "stderr: {}",
        String::from_utf8_lossy(&r.stderr)
    );
}

#[test]
fn twobody_report_matches_closed_forms() {
    let (dir, cfg) = setup(GOOD_CONFIG);
    let r = run(dir.path(), &["twobody", cfg.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/twobody_report.json")).unwrap())
            .unwrap();
    assert!(report["checks"].is_array() || report.is_object());
}
