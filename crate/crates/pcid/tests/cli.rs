//! End-to-end tests of the command-line front end: artifacts, exit
//! codes, determinism, and override handling.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pcid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcid"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).to_string()
}

#[test]
fn run_writes_the_full_artifact_set() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = pcid(&["run", "--out", out_dir.to_str().unwrap(), "--decimate", "200"]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    for name in ["trace.csv", "events.csv", "metrics.json", "config_resolved.json"] {
        assert!(out_dir.join(name).exists(), "{name} missing");
    }
    assert!(out_dir.join("plotdata/fig2.csv").exists());
    assert!(out_dir.join("plotdata/fig3.csv").exists());

    // two events with the documented columns
    let events = fs::read_to_string(out_dir.join("events.csv")).unwrap();
    let lines: Vec<&str> = events.trim().lines().collect();
    assert_eq!(lines[0], "index,detect_time,t_hat,true_switch_time,error");
    assert_eq!(lines.len(), 3, "expected 2 event rows: {events}");

    let metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["event_count"], 2);
    assert_eq!(metrics["seed"], 0);
}

#[test]
fn trace_schema_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = pcid(&["run", "--out", out_dir.to_str().unwrap(), "--decimate", "1000"]);
    assert_eq!(exit_code(&out), 0);
    let trace = fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    let header = trace.lines().next().unwrap();
    assert_eq!(
        header,
        "law,t,phi_0_0,phi_1_0,y_0_0,y_clean_0_0,delta,upsilon_0_0,upsilon_1_0,\
         eps_norm,omega_s,\
         theta_hat_0_0,theta_hat_1_0,theta_ft_0_0,theta_ft_1_0,\
         theta_true_0_0,theta_true_1_0,theta_err,theta_ft_err,\
         stat_mean,stat_thresh,c_t,ub"
    );
}

#[test]
fn identical_seed_gives_byte_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let out = pcid(&[
            "run",
            "--out",
            d.to_str().unwrap(),
            "--set",
            "scenario=simple_noise",
            "--seed",
            "42",
        ]);
        assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    }
    for name in ["trace.csv", "events.csv", "metrics.json", "config_resolved.json"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name} differs between identical runs"
        );
    }
}

#[test]
fn config_errors_exit_2_with_json() {
    // invariant violation via override
    let out = pcid(&["run", "--set", "gamma0=200"]);
    assert_eq!(exit_code(&out), 2);
    let err: serde_json::Value = serde_json::from_str(stderr(&out).trim()).unwrap();
    assert_eq!(err["error"]["exit_code"], 2);

    // missing file
    let out = pcid(&["run", "--config", "/nonexistent/config.json"]);
    assert_eq!(exit_code(&out), 2);

    // malformed JSON
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{not json").unwrap();
    let out = pcid(&["run", "--config", bad.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr(&out).contains("malformed"), "{}", stderr(&out));

    // unknown key
    let unknown = dir.path().join("unknown.json");
    fs::write(&unknown, r#"{"sigmaaa": 5}"#).unwrap();
    let out = pcid(&["run", "--config", unknown.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr(&out).contains("sigmaaa"));

    // unknown law
    let out = pcid(&["run", "--law", "nonsense"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn divergence_exits_3_with_partial_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    // one-second Euler steps make the smoothing filter unstable
    let out = pcid(&[
        "run",
        "--out",
        out_dir.to_str().unwrap(),
        "--set",
        "tau_s=1.0",
        "--set",
        "horizon=400",
        "--set",
        "decimate=1",
    ]);
    assert_eq!(exit_code(&out), 3, "{}", stderr(&out));
    assert!(stderr(&out).contains("divergence"));
    // last-good artifacts are still on disk
    assert!(out_dir.join("trace.csv").exists());
    let metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("metrics.json")).unwrap()).unwrap();
    assert!(!metrics["divergence"].is_null());
}

#[test]
fn unwritable_output_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("occupied");
    fs::write(&file, "x").unwrap();
    let out = pcid(&[
        "run",
        "--out",
        file.join("sub").to_str().unwrap(),
        "--set",
        "horizon=0.01",
    ]);
    assert_eq!(exit_code(&out), 4, "{}", stderr(&out));
}

#[test]
fn zero_horizon_run_succeeds_with_empty_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = pcid(&["run", "--out", out_dir.to_str().unwrap(), "--set", "horizon=0"]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    assert_eq!(fs::read_to_string(out_dir.join("trace.csv")).unwrap(), "");
}

#[test]
fn law_selection_writes_baseline_traces() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = pcid(&[
        "run",
        "--out",
        out_dir.to_str().unwrap(),
        "--law",
        "all",
        "--set",
        "horizon=0.2",
        "--decimate",
        "100",
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    for law in ["gradient", "concurrent", "purging", "efficient_drem"] {
        assert!(out_dir.join(format!("trace_{law}.csv")).exists(), "{law} trace missing");
    }
}

#[test]
fn sweep_runs_isolated_seed_directories() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("sweep");
    let out = pcid(&[
        "sweep",
        "--out",
        out_dir.to_str().unwrap(),
        "--seeds",
        "3",
        "--jobs",
        "2",
        "--set",
        "horizon=0.2",
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    for seed in 0..3 {
        let run_dir = out_dir.join(format!("run_{seed}"));
        assert!(run_dir.join("metrics.json").exists(), "run_{seed} incomplete");
    }
}

#[test]
fn verify_passes_and_lists_scenarios() {
    let out = pcid(&["verify"]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("PASS"));
    assert!(!stdout.contains("FAIL"));

    let out = pcid(&["list-scenarios"]);
    assert_eq!(exit_code(&out), 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    for name in ["simple_noise_free", "simple_noise", "simple_harmonic", "switched_plant", "custom"] {
        assert!(stdout.contains(name));
    }
}

#[test]
fn env_vars_supply_output_dir_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("from_env");
    let out = Command::new(env!("CARGO_BIN_EXE_pcid"))
        .args(["run", "--set", "horizon=0.2"])
        .env("PCID_OUT", out_dir.to_str().unwrap())
        .env("PCID_SEED", "9")
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    let metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["seed"], 9);
    assert!(Path::new(&out_dir).join("trace.csv").exists());
}
