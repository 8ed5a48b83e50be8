use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn aggdiff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aggdiff")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn presets_lists_every_builtin() {
    let o = aggdiff(&["presets"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for name in aggdiff::config::preset_names() {
        assert!(text.contains(name), "{name} missing");
    }
}

#[test]
fn run_minimal_pme_config_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "pme.json", r#"{"preset": "barenblatt-1d", "h": [0.4], "T": 0.32}"#);
    let out = dir.path().join("out");
    let o = aggdiff(&["run", "--config", &cfg, "--output", out.to_str().unwrap(), "--quiet"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["T"], 0.32);
    assert!(manifest["wall_time"].as_f64().unwrap() >= 0.0);
    let diag = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert!(diag.starts_with("step,time,mass,"));
    // 0.32 / 0.16 = 2 steps plus the initial row
    assert_eq!(diag.lines().count(), 4);
    assert!(out.join("snapshot_000000.csv").exists());
    assert!(out.join("snapshot_000002.csv").exists());
}

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("o{k}"));
        let o = aggdiff(&["run", "--preset", "aggregation-psd-o1", "--output", out.to_str().unwrap(), "--quiet"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        texts.push(fs::read(out.join("diagnostics.csv")).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn malformed_json_is_a_config_error_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", "{\n  \"preset\": \"barenblatt-1d\",\n  \"h\": [0.4,\n}");
    let o = aggdiff(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}

#[test]
fn schema_errors_name_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", r#"{"preset": "barenblatt-1d", "options": {"midpoint": "O4"}}"#);
    let o = aggdiff(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("options.midpoint"), "{}", stderr(&o));
    let o = aggdiff(&["run"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn convergence_requirements_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let one = write(dir.path(), "one.json", r#"{"preset": "saturation-convergence-1d", "h": [0.1]}"#);
    assert_eq!(aggdiff(&["convergence", "--config", &one]).status.code(), Some(2));
    let p = write(dir.path(), "p.json", r#"{"preset": "saturation-convergence-1d", "p": 1.5}"#);
    assert_eq!(aggdiff(&["convergence", "--config", &p]).status.code(), Some(2));
}

#[test]
fn convergence_writes_rates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("conv");
    let o = aggdiff(&["convergence", "--preset", "barenblatt-1d", "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(out.join("convergence.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "h,tau,eps1,eps2,rate");
    let rates = lines[1..].iter().filter(|l| !l.ends_with(',')).count();
    assert!(rates >= 2, "{text}");
}

#[test]
fn solver_failure_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "stiff.json",
        r#"{"preset": "aggregation-equality", "tau_coefficient": 1000, "max_retries": 0, "options": {"max_iters": 1}}"#,
    );
    let o = aggdiff(&["run", "--config", &cfg, "--quiet"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("step"), "{}", stderr(&o));
}

#[test]
fn norms_of_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "line.json",
        r#"{"name": "line", "domain": {"name": "interval", "params": {"a": 0.25, "b": 1.25}},
            "model": {"mobility": {"kind": "linear"}, "entropy": {"kind": "zero"}},
            "h": [0.5], "T": 1, "initial": {"kind": "constant", "value": 0}}"#,
    );
    let zero = write(dir.path(), "zero.csv", "i_1,x_1,density\n1,0.5,0\n2,1.0,0\n");
    let o = aggdiff(&["norms", "--config", &cfg, &zero]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for key in ["mass", "h1_seminorm", "wm11_upper_bound", "wm11_exact"] {
        assert_eq!(v[key], 0.0, "{key}");
    }
    let step = write(dir.path(), "step.csv", "i_1,x_1,density\n1,0.5,0\n2,1.0,1\n");
    let v: serde_json::Value = serde_json::from_slice(&aggdiff(&["norms", "--config", &cfg, &step]).stdout).unwrap();
    assert!((v["h1_seminorm"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-12);

    let short = write(dir.path(), "short.csv", "i_1,x_1,density\n1,0.5,0\n");
    assert_eq!(aggdiff(&["norms", "--config", &cfg, &short]).status.code(), Some(1));

    let square = write(
        dir.path(),
        "sq.json",
        r#"{"preset": "steady-square", "domain": {"name": "cube", "params": {"a": -0.5, "b": 1.5, "dim": 2}}, "h": [1.0]}"#,
    );
    let field = write(dir.path(), "sq.csv", "i_1,i_2,x_1,x_2,density\n0,0,0,0,1\n0,1,0,1,0\n1,0,1,0,0\n1,1,1,1,0\n");
    let o = aggdiff(&["norms", "--config", &square, &field]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v.get("wm11_exact").is_none());
    assert!(v["wm11_upper_bound"].as_f64().unwrap() > 0.0);
}
