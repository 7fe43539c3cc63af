//! End-to-end runs of the `gimag` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gaussian_imaginarity::measures::measure_all;
use gaussian_imaginarity::state::StateRecord;
use serde_json::{json, Value};
use tempfile::TempDir;

fn gimag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gimag"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, v: &Value) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn validate_exit_codes() {
    let dir = TempDir::new().unwrap();
    let vac = write(&dir, "vac.json", &json!({"n": 1, "d": [0, 0], "cm": [[1, 0], [0, 1]]}));
    let o = gimag(&["validate", s(&vac)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("valid: true"));
    assert!(stdout(&o).contains("real: true"));

    let bad = write(
        &dir,
        "bad.json",
        &json!({"n": 1, "d": [0, 0], "cm": [[0.5, 0], [0, 0.5]]}),
    );
    let o = gimag(&["validate", s(&bad)]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("UncertaintyViolation"));
    assert!(stdout(&o).contains("min eigenvalue of cm + iΔ: -5e-1"));

    let garbled = dir.path().join("garbled.json");
    fs::write(&garbled, "{\"n\": 1, \"d\": [0,").unwrap();
    assert_eq!(code(&gimag(&["validate", s(&garbled)])), 2);
    assert_eq!(code(&gimag(&["validate", s(&dir.path().join("missing.json"))])), 2);
    let wrong_shape = write(
        &dir,
        "shape.json",
        &json!({"n": 2, "d": [0, 0], "cm": [[1, 0], [0, 1]]}),
    );
    assert_eq!(code(&gimag(&["validate", s(&wrong_shape)])), 1);
}

#[test]
fn validate_channels() {
    let dir = TempDir::new().unwrap();
    let id = write(
        &dir,
        "id.json",
        &json!({"n": 1, "T": [[1, 0], [0, 1]], "N": [[0, 0], [0, 0]], "d0": [0, 0]}),
    );
    let o = gimag(&["validate", s(&id)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("kind: channel"));
    assert!(stdout(&o).contains("realness: CovariantReal"));

    let amp = write(
        &dir,
        "amp.json",
        &json!({"n": 1, "T": [[2, 0], [0, 2]], "N": [[0, 0], [0, 0]], "d0": [0, 0]}),
    );
    let o = gimag(&["validate", s(&amp)]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("PhysicalityViolation"));
}

#[test]
fn measure_coherent_state() {
    let dir = TempDir::new().unwrap();
    let coh = write(&dir, "coh.json", &json!({"n": 1, "d": [0, 2], "cm": [[1, 0], [0, 1]]}));
    let o = gimag(&["measure", s(&coh)]);
    assert_eq!(code(&o), 0);
    let r: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["i_gn"], 1.0);
    assert!((r["m_f"].as_f64().unwrap() - 0.864665).abs() < 1e-6);
    assert!((r["m_t"].as_f64().unwrap() - 0.981684).abs() < 1e-6);
    assert_eq!(r["h_term"], 1);

    let o = gimag(&["measure", s(&coh), "--format", "csv", "--mu", "0.25"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.starts_with("n,i_gn,m_f,m_t,mu,h_term,"));
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "1");
    assert_eq!(row[4], "0.25");
}

#[test]
fn measure_real_squeezed_state_is_zero() {
    let (c, sh) = (2.0f64.cosh(), 2.0f64.sinh());
    let dir = TempDir::new().unwrap();
    let sq = write(
        &dir,
        "sq.json",
        &json!({"n": 1, "d": [0.4, 0], "cm": [[c + sh, 0], [0, c - sh]]}),
    );
    let o = gimag(&["measure", s(&sq)]);
    assert_eq!(code(&o), 0);
    let r: Value = serde_json::from_str(&stdout(&o)).unwrap();
    for k in ["i_gn", "m_f", "m_t"] {
        assert!(r[k].as_f64().unwrap().abs() < 1e-12, "{k}: {}", r[k]);
    }
}

#[test]
fn measure_json_round_trips_floats() {
    let dir = TempDir::new().unwrap();
    let st = write(
        &dir,
        "st.json",
        &json!({"n": 1, "d": [0.1, 0.3], "cm": [[1.7, 0.35], [0.35, 0.9]]}),
    );
    let o = gimag(&["measure", s(&st)]);
    let r: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let state = StateRecord {
        n: 1,
        d: vec![0.1, 0.3],
        cm: vec![vec![1.7, 0.35], vec![0.35, 0.9]],
    }
    .into_state(None)
    .unwrap();
    let lib = measure_all(&state, 0.5, 1e-12);
    // printed floats read back bit for bit
    assert_eq!(r["det_nu"].as_f64().unwrap(), lib.det_nu);
    assert_eq!(r["i_gn"].as_f64().unwrap(), lib.i_gn);
    assert_eq!(r["m_f"].as_f64(), lib.m_f);
    assert_eq!(r["m_t"].as_f64(), lib.m_t);
}

#[test]
fn measure_usage_and_domain_errors() {
    let dir = TempDir::new().unwrap();
    let vac = write(&dir, "vac.json", &json!({"n": 1, "d": [0, 0], "cm": [[1, 0], [0, 1]]}));
    assert_eq!(code(&gimag(&["measure", s(&vac), "--mu", "1.5"])), 2);
    assert_eq!(code(&gimag(&["measure", s(&vac), "--format", "xml"])), 2);
    assert_eq!(code(&gimag(&["measure"])), 2);
    let bad = write(
        &dir,
        "bad.json",
        &json!({"n": 1, "d": [0, 0], "cm": [[0.5, 0], [0, 0.5]]}),
    );
    let o = gimag(&["measure", s(&bad)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("UncertaintyViolation"));
}

#[test]
fn measure_four_mode_state_always_reports_i_gn() {
    // a fixed, hand-built 4-mode state with correlations and a momentum shift
    let dir = TempDir::new().unwrap();
    let mut cm = vec![vec![0.0; 8]; 8];
    for (i, row) in cm.iter_mut().enumerate() {
        row[i] = 1.5;
    }
    for k in 0..3 {
        cm[2 * k][2 * k + 2] = 0.3;
        cm[2 * k + 2][2 * k] = 0.3;
        cm[2 * k + 1][2 * k + 2] = -0.2;
        cm[2 * k + 2][2 * k + 1] = -0.2;
    }
    let st = write(
        &dir,
        "four.json",
        &json!({"n": 4, "d": [0, 0.5, 0, 0, 1, 0, 0, 0], "cm": cm}),
    );
    let o = gimag(&["measure", s(&st)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let i = r["i_gn"].as_f64().unwrap();
    assert!(i > 1.0 && i < 2.0);
    assert!(r["m_f"].is_f64() || r["m_f_error"].is_string());
}

#[test]
fn sweep_coherent_family() {
    let dir = TempDir::new().unwrap();
    let spec = write(
        &dir,
        "spec.json",
        &json!({"family": "coherent", "axis": {"name": "alpha_im", "start": -2, "stop": 2, "count": 41}}),
    );
    let out = dir.path().join("out.csv");
    let o = gimag(&["sweep", s(&spec), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("axis,i_gn,m_f,m_t\n"));
    assert!(!text.contains('\r'));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 41);
    for r in &rows {
        let im = r[0];
        assert_eq!(r[1], if im == 0.0 { 0.0 } else { 1.0 });
        assert!((r[2] - (1.0 - (-2.0 * im * im).exp())).abs() < 1e-11);
        assert!((r[3] - (1.0 - (-4.0 * im * im).exp())).abs() < 1e-11);
    }

    // byte-stable across runs, and the same on stdout
    let again = gimag(&["sweep", s(&spec)]);
    assert_eq!(stdout(&again), text);
}

#[test]
fn sweep_squeezed_ordering() {
    let dir = TempDir::new().unwrap();
    let spec = write(
        &dir,
        "spec.json",
        &json!({"family": "squeezed", "axis": {"name": "s", "start": 0, "stop": 10, "count": 21}}),
    );
    let o = gimag(&["sweep", s(&spec)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for r in csv_rows(&stdout(&o)).iter().skip(1) {
        assert!(r[1] > r[3] && r[3] > r[2] && r[2] > 0.0, "{r:?}");
    }
}

#[test]
fn sweep_rejects_bad_specs() {
    let dir = TempDir::new().unwrap();
    let single = write(
        &dir,
        "single.json",
        &json!({"family": "coherent", "axis": {"name": "alpha_im", "start": 0, "stop": 1, "count": 1}}),
    );
    let o = gimag(&["sweep", s(&single)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("grid count"));
    let unknown = write(
        &dir,
        "unknown.json",
        &json!({"family": "cat_state", "axis": {"name": "x", "start": 0, "stop": 1, "count": 3}}),
    );
    assert_eq!(code(&gimag(&["sweep", s(&unknown)])), 2);
}

#[test]
fn dynamics_squeezed_vacuum() {
    let dir = TempDir::new().unwrap();
    let spec = write(
        &dir,
        "sv.json",
        &json!({
            "family": "sv_dynamics",
            "fixed": {"r": 1, "n_th": 1.5, "R": 1, "phi": 15, "lambda": 0.1},
            "axis": {"name": "t", "start": 0, "stop": 60, "count": 121}
        }),
    );
    let o = gimag(&["dynamics", s(&spec)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("t,i_gn,i_gn_closed,h_term\n"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 121);
    for w in rows.windows(2) {
        assert!(w[1][1] >= w[0][1]);
    }
    for r in &rows {
        assert!((r[1] - r[2]).abs() <= 1e-9);
        assert_eq!(r[3], 0.0);
    }
}

#[test]
fn dynamics_coherent_start_reports_h_flip() {
    let dir = TempDir::new().unwrap();
    let spec = write(
        &dir,
        "coh.json",
        &json!({
            "family": "coherent_dynamics",
            "fixed": {"alpha1_im": 1, "n_th": 1.5, "R": 1, "phi": std::f64::consts::FRAC_PI_2, "lambda": 0.1},
            "axis": {"name": "t", "start": 0, "stop": 800, "count": 81}
        }),
    );
    let o = gimag(&["dynamics", s(&spec)]);
    assert_eq!(code(&o), 0);
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows[0][1], 1.0);
    let flip = rows
        .iter()
        .position(|r| r[3] == 0.0)
        .expect("h drops once the shift underflows");
    assert!(rows[..flip].iter().all(|r| r[1] >= 1.0));
    assert!(stderr(&o).contains(&format!("h-flip at row {flip}")));
    for r in &rows {
        assert!((r[1] - r[2]).abs() <= 1e-9);
    }
}

#[test]
fn fuzz_suites() {
    for suite in ["monotonicity", "faithfulness", "hierarchy", "williamson"] {
        let o = gimag(&["fuzz", "--suite", suite, "--seed", "5", "--count", "500"]);
        assert_eq!(code(&o), 0, "{suite}: {}", stdout(&o));
        assert!(stdout(&o).contains("failed: 0"));
    }
}

#[test]
fn fuzz_forced_failures_and_usage() {
    let o = gimag(&[
        "fuzz",
        "--suite",
        "hierarchy",
        "--seed",
        "9",
        "--count",
        "12",
        "--tol",
        "-1",
    ]);
    assert_eq!(code(&o), 1);
    let text = stdout(&o);
    assert!(text.contains("failed: 12"));
    assert!(text.contains("reproduce with --seed 9 --count 1"));

    // the reported seed replays the same case
    let o = gimag(&[
        "fuzz",
        "--suite",
        "hierarchy",
        "--seed",
        "14",
        "--count",
        "1",
        "--tol",
        "-1",
    ]);
    assert!(text.contains(
        stdout(&o)
            .lines()
            .find(|l| l.starts_with("FAIL"))
            .unwrap()
            .split(": ")
            .nth(1)
            .unwrap()
    ));

    assert_eq!(code(&gimag(&["fuzz", "--suite", "entropy"])), 2);
    assert_eq!(code(&gimag(&["fuzz"])), 2);
}
