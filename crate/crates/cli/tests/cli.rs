use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use debtgame_cli::{RunConfig, EXIT_CONFIG, EXIT_HYPOTHESIS, EXIT_OK};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn debtgame(args: &[&str], out: &Path) -> Run {
    let o = Command::new(env!("CARGO_BIN_EXE_debtgame"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs");
    Run {
        code: o.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&o.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&o.stderr).into_owned(),
    }
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn reference_text() -> String {
    fs::read_to_string(configs().join("reference.json")).unwrap()
}

fn error_doc(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("error.json")).unwrap()).unwrap()
}

#[test]
fn malformed_config_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.json", "{ \"model\": ");
    let out = tmp.path().join("out");
    let run = debtgame(&["solve", "--config", &cfg], &out);
    assert_eq!(run.code, EXIT_CONFIG, "{}", run.stderr);
    assert_eq!(error_doc(&out)["error"]["kind"], "config");
}

#[test]
fn unknown_field_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let text = reference_text().replacen("\"output_dir\"", "\"colour\": 3, \"output_dir\"", 1);
    let cfg = write_config(tmp.path(), "extra.json", &text);
    let run = debtgame(&["solve", "--config", &cfg], &tmp.path().join("out"));
    assert_eq!(run.code, EXIT_CONFIG);
    assert!(run.stderr.contains("colour"), "{}", run.stderr);
}

#[test]
fn w_below_b_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let text = reference_text().replace("\"bankruptcy_cost\": 0.06", "\"bankruptcy_cost\": 5.0");
    let cfg = write_config(tmp.path(), "big_b.json", &text);
    let out = tmp.path().join("out");
    let run = debtgame(&["solve", "--config", &cfg], &out);
    assert_eq!(run.code, EXIT_HYPOTHESIS, "{}", run.stderr);
    let doc = error_doc(&out);
    assert!(
        doc["error"]["message"]
            .as_str()
            .unwrap()
            .contains("W(x*) > B"),
        "{doc}"
    );
    assert_eq!(doc["error"]["exit_code"], 3);
}

#[test]
fn empty_sweep_exits_0_with_warning() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("reference.json");
    let run = debtgame(
        &["sweep", "--config", cfg.to_str().unwrap()],
        &tmp.path().join("out"),
    );
    assert_eq!(run.code, EXIT_OK);
    assert!(run.stderr.contains("warning"), "{}", run.stderr);
}

#[test]
fn x0_outside_interval_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("reference.json");
    let run = debtgame(
        &["simulate", "--config", cfg.to_str().unwrap(), "--x0", "2.0"],
        &tmp.path().join("out"),
    );
    assert_eq!(run.code, EXIT_CONFIG);
}

#[test]
fn simulate_reports_end_state_per_x0() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("reference.json");
    let out = tmp.path().join("out");
    let run = debtgame(
        &[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--x0",
            "0.4,1.0",
        ],
        &out,
    );
    assert_eq!(run.code, EXIT_OK, "{}", run.stderr);
    let lines: Vec<&str> = run
        .stdout
        .lines()
        .filter(|l| l.starts_with("x0 = "))
        .collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].contains("steady state at x_1"), "{}", lines[0]);
    assert!(lines[1].contains("bankruptcy at T_b"), "{}", lines[1]);
    assert!(out.join("trajectory_000.csv").exists() && out.join("trajectory_001.csv").exists());
    let traj = fs::read_to_string(out.join("trajectory_001.csv")).unwrap();
    let mut it = traj.lines();
    assert!(it.next().unwrap().starts_with("# debtgame "));
    assert_eq!(it.next().unwrap(), "t,x,u,v,discounted_cost,D");
}

#[test]
fn stored_solution_reproduces_simulation() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("reference.json");
    let cfg = cfg.to_str().unwrap();
    let solved = tmp.path().join("solved");
    assert_eq!(debtgame(&["solve", "--config", cfg], &solved).code, EXIT_OK);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let sol = solved.join("solution.json");
    assert_eq!(
        debtgame(&["simulate", "--config", cfg, "--x0", "0.3,0.9"], &a).code,
        EXIT_OK
    );
    assert_eq!(
        debtgame(
            &[
                "simulate",
                "--config",
                cfg,
                "--x0",
                "0.3,0.9",
                "--solution",
                sol.to_str().unwrap()
            ],
            &b
        )
        .code,
        EXIT_OK
    );
    assert_eq!(
        fs::read(a.join("residuals.csv")).unwrap(),
        fs::read(b.join("residuals.csv")).unwrap()
    );
}

#[test]
fn outputs_carry_config_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let path = configs().join("reference.json");
    let out = tmp.path().join("out");
    let run = debtgame(&["solve", "--config", path.to_str().unwrap()], &out);
    assert_eq!(run.code, EXIT_OK, "{}", run.stderr);
    let hash = RunConfig::from_json(&reference_text()).unwrap().hash();
    let csv = fs::read_to_string(out.join("solution.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        format!("# debtgame 0.1.0 config_sha256={hash}")
    );
    assert_eq!(csv.lines().nth(1).unwrap(), "x,V,p,V_prime,u,v,W");
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config_hash"], hash.as_str());
}

#[test]
fn config_round_trip_and_hash_stability() {
    let cfg = RunConfig::from_json(&reference_text()).unwrap();
    let again = RunConfig::from_json(&serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    assert_eq!(cfg, again);
    assert_eq!(cfg.hash(), again.hash());
    let compact: serde_json::Value = serde_json::from_str(&reference_text()).unwrap();
    assert_eq!(
        RunConfig::from_json(&compact.to_string()).unwrap().hash(),
        cfg.hash()
    );
    let other = RunConfig::from_json(&reference_text().replace("0.06", "0.061")).unwrap();
    assert_ne!(other.hash(), cfg.hash());
}

#[test]
fn validate_costs_passes_reference() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("reference.json");
    let out = tmp.path().join("out");
    let run = debtgame(&["validate-costs", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(run.code, EXIT_OK);
    assert!(run.stdout.contains("cost hypotheses hold"));
    assert!(out.join("costs_validation.json").exists());
}
