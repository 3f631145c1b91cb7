use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn otto(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_otto"))
        .current_dir(dir)
        .env_remove("OTTO_OUTPUT_DIR")
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

/// The `result` member of an emitted JSON document.
fn read_json(path: &Path) -> Value {
    let doc: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(doc["schema_version"], 1);
    doc["result"].clone()
}

/// Data rows of a CSV file, without the comment preamble and header.
fn data_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(str::to_string)
        .collect()
}

const ISING_STATE: &str = r#"
[model]
name = "ising"
field = 0.7

[numerics]
cells = 200

[state]
beta = 0.0

[output]
dir = "out"
"#;

#[test]
fn bad_config_exits_2_without_output() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bad.toml",
        "[model]\nname = \"xxz\"\n\n[state]\nbeta = 1.0\n",
    );
    let out = otto(tmp.path(), &["thermal-state", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("anisotropy"));
    let cfg = write_config(tmp.path(), "typo.toml", &ISING_STATE.replace("field", "feild"));
    assert_eq!(otto(tmp.path(), &["thermal-state", &cfg]).status.code(), Some(2));
    let cfg = write_config(tmp.path(), "ok.toml", ISING_STATE);
    let out = otto(tmp.path(), &["thermal-state", &cfg, "--set", "numerics.cells=0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn infinite_temperature_entropy_is_ln2() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", ISING_STATE);
    let out = otto(tmp.path(), &["thermal-state", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let j = read_json(&tmp.path().join("out/thermal_state.json"));
    let s = j["entropy"].as_f64().unwrap();
    assert!((s - 2f64.ln()).abs() < 1e-12, "{s}");
    assert_eq!(data_rows(&tmp.path().join("out/thermal_state.csv")).len(), 200);
}

#[test]
fn xxz_state_hits_requested_magnetization() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        r#"
[model]
name = "xxz"
anisotropy = 2.0
max_string = 6

[numerics]
cells = 100

[state]
beta = 1.0
magnetization = 0.45
"#,
    );
    let out = otto(tmp.path(), &["thermal-state", &cfg, "--output-dir", "res"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let j = read_json(&tmp.path().join("res/thermal_state.json"));
    assert!((j["magnetization"].as_f64().unwrap() - 0.45).abs() < 1e-9);
    assert!(j["mu"].as_f64().is_some());
    assert_eq!(j["particle_numbers"].as_array().unwrap().len(), 6);
}

#[test]
fn zero_length_stroke_has_one_row() {
    let tmp = TempDir::new().unwrap();
    let text = format!("{ISING_STATE}\n[stroke]\nkind = \"thermal\"\nchi_end = 0.7\n");
    let cfg = write_config(tmp.path(), "c.toml", &text);
    let out = otto(tmp.path(), &["stroke", &cfg, "--set", "state.beta=1.0"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(data_rows(&tmp.path().join("out/stroke.csv")).len(), 1);
    let j = read_json(&tmp.path().join("out/stroke.json"));
    assert_eq!(j["work"].as_f64(), Some(0.0));
}

#[test]
fn ising_prethermal_snapshots_are_identical() {
    let tmp = TempDir::new().unwrap();
    let text = format!("{ISING_STATE}\n[stroke]\nkind = \"prethermal\"\nchi_end = 1.8\nsnapshot_every = 10\n");
    let cfg = write_config(tmp.path(), "c.toml", &text);
    let out = otto(
        tmp.path(),
        &["stroke", &cfg, "--set", "state.beta=-1.2", "--set", "numerics.steps=40"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let snaps = read_json(&tmp.path().join("out/stroke_snapshots.json"));
    let snaps = snaps.as_array().unwrap();
    assert_eq!(snaps.len(), 5);
    for s in snaps {
        assert_eq!(s["filling"], snaps[0]["filling"]);
    }
    let rows = data_rows(&tmp.path().join("out/stroke.csv"));
    assert_eq!(rows.len(), 41);
    // Entropy column is unchanged on every row.
    let s: Vec<&str> = rows.iter().map(|r| r.split(',').nth(3).unwrap()).collect();
    assert!(s.iter().all(|v| *v == s[0]));
}

const SMALL_CYCLE: &str = r#"
[model]
name = "ising"
field = 0.9

[numerics]
cells = 100
steps = 20

[cycle]
chi_cold = 0.9
chi_hot = 2.0
beta_cold = -1.4285714285714286
beta_hot = -1.4492753623188406
distance_every = 5

[output]
dir = "from_file"
"#;

#[test]
fn reruns_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL_CYCLE);
    for dir in ["a", "b"] {
        let out = otto(tmp.path(), &["cycle", &cfg, "--output-dir", dir]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["cycle.json", "cycle_energy.csv", "cycle_distance.csv"] {
        let a = fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = fs::read(tmp.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
    let text = fs::read_to_string(tmp.path().join("a/cycle_energy.csv")).unwrap();
    assert!(text.starts_with("# schema_version=1\n# config="));
}

#[test]
fn output_dir_precedence() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL_CYCLE);
    let run = |extra: &[&str], env: bool| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_otto"));
        cmd.current_dir(tmp.path()).env_remove("OTTO_OUTPUT_DIR");
        if env {
            cmd.env("OTTO_OUTPUT_DIR", "from_env");
        }
        let out = cmd.arg("cycle").arg(&cfg).args(extra).output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    };
    run(&[], true);
    assert!(tmp.path().join("from_env/cycle.json").exists());
    assert!(!tmp.path().join("from_file").exists());
    run(&["--output-dir", "from_flag"], true);
    assert!(tmp.path().join("from_flag/cycle.json").exists());
    run(&[], false);
    assert!(tmp.path().join("from_file/cycle.json").exists());
}

#[test]
fn infinite_temperature_scan_has_unit_ratio() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        r#"
[model]
name = "ising"
field = 1.0

[numerics]
cells = 100

[scan]
rows = { start = 0.0, end = 0.0, count = 1 }
chi = { start = 0.5, end = 1.5, count = 3 }
"#,
    );
    let out = otto(tmp.path(), &["scan", &cfg, "--workers", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let j = read_json(&tmp.path().join("output/scan.json"));
    let points = j["points"].as_array().unwrap();
    assert_eq!(points.len(), 3);
    for p in points {
        assert_eq!(p["efficiency"]["ratio"].as_f64(), Some(1.0));
    }
    let out = otto(tmp.path(), &["scan", &cfg, "--workers", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn selftest_passes() {
    let tmp = TempDir::new().unwrap();
    let out = otto(tmp.path(), &["selftest"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.lines().all(|l| l.starts_with("PASS")), "{text}");
}
