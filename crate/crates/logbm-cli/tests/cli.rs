//! End-to-end tests of the binary: file formats, exit codes, determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_logbm"))
}

fn write_cube2(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("cube2.json");
    fs::write(
        &path,
        r#"{"dim":2,"halfspaces":[{"normal":[1,0],"offset":1},{"normal":[-1,0],"offset":1},{"normal":[0,1],"offset":1},{"normal":[0,-1],"offset":1}],"flags":{"symmetric":true,"unconditional":true}}"#,
    )
    .unwrap();
    path
}

fn write_box21(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("box21.json");
    fs::write(
        &path,
        r#"{"dim":2,"halfspaces":[{"normal":[1,0],"offset":2},{"normal":[-1,0],"offset":2},{"normal":[0,1],"offset":1},{"normal":[0,-1],"offset":1}],"flags":{"symmetric":true,"unconditional":true}}"#,
    )
    .unwrap();
    path
}

fn write_cube3(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("cube3.json");
    fs::write(
        &path,
        r#"{"dim":3,"halfspaces":[{"normal":[1,0,0],"offset":0.5},{"normal":[-1,0,0],"offset":0.5},{"normal":[0,1,0],"offset":0.5},{"normal":[0,-1,0],"offset":0.5},{"normal":[0,0,1],"offset":0.5},{"normal":[0,0,-1],"offset":0.5}],"flags":{"symmetric":true,"unconditional":true}}"#,
    )
    .unwrap();
    path
}

fn stdout_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stdout);
    serde_json::from_str(text.lines().next().expect("one line of output"))
        .expect("valid JSON line")
}

#[test]
fn check_on_equal_bodies_exits_zero_with_zero_margin() {
    let dir = tempfile::tempdir().unwrap();
    let cube = write_cube2(dir.path());
    let out = bin()
        .args(["check", "--name", "log-bm", "--bodies"])
        .arg(&cube)
        .arg(&cube)
        .args(["--lambda", "0.5", "--grid", "720"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let rep = stdout_json(&out);
    assert_eq!(rep["name"], "log-bm");
    assert!(rep["margin"].as_f64().unwrap().abs() < 1e-12);
    assert_eq!(rep["verdict"], "holds");
}

#[test]
fn cone_volume_of_cube3_has_six_half_atoms() {
    let dir = tempfile::tempdir().unwrap();
    let cube = write_cube3(dir.path());
    let out = bin().args(["cone-volume", "--body"]).arg(&cube).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let m = stdout_json(&out);
    let atoms = m["atoms"].as_array().unwrap();
    assert_eq!(atoms.len(), 6);
    let mass: f64 = atoms.iter().map(|a| a["w"].as_f64().unwrap()).sum();
    assert!((mass - 3.0).abs() < 1e-12);
    for a in atoms {
        assert!((a["w"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    }
}

#[test]
fn combine_writes_a_body_that_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cube = write_cube2(dir.path());
    let boxb = write_box21(dir.path());
    let spec = dir.path().join("spec.json");
    fs::write(
        &spec,
        format!(
            r#"{{"p":"log","weights":[0.5,0.5],"bodies":["{}","{}"],"grid":{{"kind":"angle","m":256}}}}"#,
            cube.file_name().unwrap().to_str().unwrap(),
            boxb.file_name().unwrap().to_str().unwrap()
        ),
    )
    .unwrap();
    let body_out = dir.path().join("combo.json");
    let out = bin()
        .args(["combine", "--spec"])
        .arg(&spec)
        .arg("--out")
        .arg(&body_out)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    // re-parse through the volume command: area must be 4 sqrt(2)
    let out = bin().args(["volume", "--body"]).arg(&body_out).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let rep = stdout_json(&out);
    let v = rep["lhs"].as_f64().unwrap();
    assert!((v - 4.0 * 2f64.sqrt()).abs() < 1e-12, "{v}");
}

#[test]
fn lambda_sweep_produces_plot_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cube = write_cube2(dir.path());
    let boxb = write_box21(dir.path());
    let reports = dir.path().join("r.jsonl");
    let lambdas: Vec<String> = (1..=21).map(|i| format!("{}", i as f64 / 22.0)).collect();
    let out = bin()
        .args(["check", "--name", "log-bm", "--bodies"])
        .arg(&cube)
        .arg(&boxb)
        .args(["--lambda", &lambdas.join(","), "--grid", "64"])
        .arg("--out")
        .arg(&reports)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let csv_out = dir.path().join("series.csv");
    let out = bin()
        .args(["plot-data", "--reports"])
        .arg(&reports)
        .arg("--out")
        .arg(&csv_out)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let csv = fs::read_to_string(&csv_out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "parameter,lhs,rhs,margin,slack");
    assert_eq!(lines.len(), 22); // header + 21 rows
    for line in &lines[1..] {
        let margin: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!(margin >= -1e-9);
    }
}

#[test]
fn malformed_body_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"dim\": 2}").unwrap();
    let out = bin().args(["volume", "--body"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    // invariant violation: claimed symmetric but not closed under negation
    let lying = dir.path().join("lying.json");
    fs::write(
        &lying,
        r#"{"dim":2,"halfspaces":[{"normal":[1,0],"offset":1},{"normal":[-1,0],"offset":2},{"normal":[0,1],"offset":1},{"normal":[0,-1],"offset":1}],"flags":{"symmetric":true,"unconditional":false}}"#,
    )
    .unwrap();
    let out = bin().args(["volume", "--body"]).arg(&lying).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn mc_paths_require_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cube = write_cube2(dir.path());
    let out = bin()
        .args(["check", "--name", "log-bm", "--bodies"])
        .arg(&cube)
        .arg(&cube)
        .args(["--lambda", "0.5", "--grid", "64", "--mc", "1e4"])
        .env_remove("LOGBM_SEED")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    // the env fallback satisfies the requirement
    let out = bin()
        .args(["check", "--name", "log-bm", "--bodies"])
        .arg(&cube)
        .arg(&cube)
        .args(["--lambda", "0.5", "--grid", "64", "--mc", "1e4"])
        .env("LOGBM_SEED", "7")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
}

#[test]
fn identical_configs_give_byte_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cube = write_cube2(dir.path());
    let boxb = write_box21(dir.path());
    let run = || {
        bin()
            .args(["check", "--name", "log-bm", "--bodies"])
            .arg(&cube)
            .arg(&boxb)
            .args(["--lambda", "0.3", "--grid", "128", "--mc", "50000", "--seed", "11"])
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run(), run());
}

#[test]
fn search_command_archives_worst_pair() {
    let out = bin()
        .args(["search", "--dim", "2", "--iters", "40", "--seed", "5", "--grid", "64"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let rep = stdout_json(&out);
    assert_eq!(rep["name"], "counterexample-search");
    let certs = rep["certificates"].as_array().unwrap();
    assert!(certs.iter().any(|c| c.as_str().unwrap().starts_with("worst K:")));
}

#[test]
fn concentration_of_cube_holds_with_equality_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let cube = write_cube2(dir.path());
    let out = bin()
        .args(["concentration", "--body"])
        .arg(&cube)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let rep = stdout_json(&out);
    assert_eq!(rep["verdict"], "holds");
}

#[test]
fn scan_b_emits_series() {
    let dir = tempfile::tempdir().unwrap();
    let cube = write_cube2(dir.path());
    let boxb = write_box21(dir.path());
    let out = bin()
        .args(["scan-b", "--mu-body"])
        .arg(&cube)
        .arg("--body")
        .arg(&boxb)
        .args(["--t", "2,0.5", "--s-from", "-1", "--s-to", "1", "--s-step", "0.25"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let rep = stdout_json(&out);
    assert_eq!(rep["series"].as_array().unwrap().len(), 7); // 9 points, 7 interior
}

#[test]
fn decompose_reports_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let cube = write_cube3(dir.path());
    let out = bin().args(["decompose", "--body"]).arg(&cube).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let d = stdout_json(&out);
    assert_eq!(d["blocks"].as_array().unwrap().len(), 3);
}

#[test]
fn violated_measure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("concentrated.json");
    fs::write(
        &bad,
        r#"{"dim":2,"atoms":[{"u":[1,0],"w":1.0},{"u":[-1,0],"w":1.0}],"even":true}"#,
    )
    .unwrap();
    let out = bin()
        .args(["concentration", "--measure"])
        .arg(&bad)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    let rep = stdout_json(&out);
    assert_eq!(rep["verdict"], "violated");
}

#[test]
fn inconclusive_hypothesis_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    // f is a wide indicator but h is too small for the midpoint hypothesis.
    let write_fn = |name: &str, half: f64| {
        let path = dir.path().join(name);
        let count = 41usize;
        let values: Vec<f64> = (0..count)
            .map(|i| {
                let x = -2.0 + 0.1 * i as f64;
                if x.abs() <= half { 1.0 } else { 0.0 }
            })
            .collect();
        let body = serde_json::json!({
            "origin": [-2.0], "step": 0.1, "shape": [count], "values": values
        });
        fs::write(&path, body.to_string()).unwrap();
        path
    };
    let f = write_fn("f.json", 1.0);
    let g = write_fn("g.json", 1.0);
    let h = write_fn("h.json", 0.4);
    let out = bin()
        .args(["check", "--name", "prekopa-leindler", "--functions"])
        .arg(&f)
        .arg(&g)
        .arg(&h)
        .args(["--lambda", "0.5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{out:?}");
    let rep = stdout_json(&out);
    assert_eq!(rep["verdict"], "inconclusive");
}
