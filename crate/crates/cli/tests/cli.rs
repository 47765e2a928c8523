use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dnls(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dnls"))
        .args(args)
        .output()
        .expect("run dnls")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&dnls(&["--help"])), 0);
    assert_eq!(code(&dnls(&["study", "decay", "--help"])), 0);
    assert_eq!(code(&dnls(&["solve", "--omega", "2"])), 1);
    assert_eq!(code(&dnls(&["frobnicate"])), 1);
    assert_eq!(code(&dnls(&["build", "--pattern", "+x:8", "--omega", "2", "--d", "1"])), 1);
    assert_eq!(code(&dnls(&["solve", "--omega", "-1", "--d", "1"])), 1);
}

#[test]
fn solve_then_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let sol = dir.path().join("single.json");
    let o = dnls(&["solve", "--omega", "2", "--d", "0.5", "--half-width", "25", "--out", path(&sol)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = dnls(&["spectrum", "--in", path(&sol), "--out-dir", path(dir.path())]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("zero modes 2, real pairs 0, imaginary pairs 0"));
    for f in ["spectrum.csv", "spectrum.json", "spectrum.svg"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    // A single pulse read as two pulses has no interaction pair to find.
    assert_eq!(code(&dnls(&["spectrum", "--in", path(&sol), "--pulses", "2"])), 3);
}

#[test]
fn build_measures_its_pattern() {
    let dir = tempfile::tempdir().unwrap();
    let sol = dir.path().join("nested").join("tri.json");
    let o = dnls(&["build", "--pattern", "++-:10,10", "--omega", "2", "--d", "1", "--out", path(&sol)]);
    assert_eq!(code(&o), 0);
    let o = dnls(&["spectrum", "--in", path(&sol)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("real pairs 1, imaginary pairs 1"), "{}", stdout(&o));
}

#[test]
fn exit_codes_follow_error_kind() {
    let dir = tempfile::tempdir().unwrap();
    // Strong coupling at small frequency destroys the out-of-phase pair.
    assert_eq!(code(&dnls(&["build", "--pattern", "+-:4", "--omega", "0.2", "--d", "1.5"])), 2);
    assert_eq!(code(&dnls(&["spectrum", "--in", path(&dir.path().join("missing.json"))])), 4);
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"omega\": 2}").unwrap();
    assert_eq!(code(&dnls(&["spectrum", "--in", path(&bad)])), 4);
    let zero = dir.path().join("zero.json");
    fs::write(&zero, r#"{"omega":2.0,"d":0.0,"half_width":1,"values":[0.0,0.0,0.0]}"#).unwrap();
    assert_eq!(code(&dnls(&["spectrum", "--in", path(&zero)])), 3);
    let blocker = dir.path().join("blocker");
    fs::write(&blocker, "").unwrap();
    let o = dnls(&["solve", "--omega", "2", "--d", "0", "--out-dir", path(&blocker.join("x"))]);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("blocker"));
}

#[test]
fn config_supplies_missing_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"pattern": "++:10", "omega": 2, "d": 1.0, "route": "closed-form"}"#).unwrap();
    let o = dnls(&["predict", "--config", path(&cfg)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("r 3.732050807569"), "{}", stdout(&o));
    // An explicit flag beats the file.
    let o = dnls(&["--config", path(&cfg), "predict", "--d", "0.5"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("r 5.828427124746"), "{}", stdout(&o));
    assert!(stdout(&o).contains("real"));

    let bad = dir.path().join("bad.json");
    fs::write(&bad, "[1, 2]").unwrap();
    assert_eq!(code(&dnls(&["predict", "--config", path(&bad)])), 4);
    assert_eq!(code(&dnls(&["predict", "--config", path(&dir.path().join("none.json"))])), 4);
}

#[test]
fn config_lists_become_comma_separated() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"pattern": "+-", "n_list": [8, 10, 12, 14]}"#).unwrap();
    let out = dir.path().join("decay");
    let o = dnls(&["study", "decay", "--config", path(&cfg), "--out-dir", path(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("pair 0 (imaginary)"));
    let csv = fs::read_to_string(out.join("decay.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    let svg = fs::read_to_string(out.join("decay_log_lambda.svg")).unwrap();
    for line in csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert!(svg.contains(&format!(r#"data-x="{}" data-y="{}""#, cols[1], cols[5])), "{line}");
    }
    assert!(svg.contains("<polyline"));
    assert_eq!(code(&dnls(&["study", "decay", "--pattern", "+-", "--n-list", "8"])), 1);
}

#[test]
fn sweeps_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = dnls(&[
            "study", "error-sweep", "--pattern", "+-+:8,8", "--d-min", "0.05", "--d-max", "0.5", "--d-step", "0.15",
            "--out-dir", path(&out),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let (a, b) = (run("a"), run("b"));
    for f in ["sweep.csv", "sweep.json", "sweep_log_error.svg"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let csv = fs::read_to_string(a.join("sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    // d = 0.05 fails classification but is still listed, with its tag.
    assert!(rows[0].starts_with("5.0000000000000003e-2,") && rows[0].contains("classification-ambiguous"));
    assert_eq!(rows.len(), 1 + 3 * 2);
}
