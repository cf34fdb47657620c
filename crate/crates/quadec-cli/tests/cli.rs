use std::process::Command;

use serde_json::Value;

const Q1: &str = "x1*x2; x1*x3; x2*x3; x3^2";

fn quadec() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_quadec"));
    c.env_remove("CI").env_remove("QUADEC_JOBS");
    c
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = quadec().args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

fn json(args: &[&str]) -> Value {
    let (code, out, err) = run(args);
    assert_eq!(code, 0, "{err}");
    serde_json::from_str(&out).unwrap()
}

#[test]
fn gamma_graph_q1_kinks_and_svg() {
    let dir = std::env::temp_dir().join(format!("quadec-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let svg = dir.join("q1.svg");
    let v = json(&["gamma-graph", Q1, "--qp", "--svg", svg.to_str().unwrap()]);
    let kinks: Vec<&str> =
        v["result"]["graph"]["kinks"].as_array().unwrap().iter().map(|k| k["p"].as_str().unwrap()).collect();
    assert_eq!(kinks, ["6", "8"]);
    let gammas: Vec<&str> =
        v["result"]["graph"]["kinks"].as_array().unwrap().iter().map(|k| k["gamma"].as_str().unwrap()).collect();
    assert_eq!(gammas, ["1", "5/4"]);
    assert_eq!(v["result"]["certified"], true);
    let plot = std::fs::read_to_string(&svg).unwrap();
    assert!(plot.starts_with("<svg"));
    for needle in ["p=6", "p=8", "(3,4)", "(2,3)", "(3,0)", "3 - 14/p"] {
        assert!(plot.contains(needle), "svg lacks {needle}");
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn envelope_carries_version_and_config() {
    let v = json(&["classify", "x1^2; x2^2 + x1*x3", "--seed", "5"]);
    assert_eq!(v["tool"], "quadec");
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["config"]["seed"], 5);
    assert_eq!(v["config"]["budget"]["random_flags"], 10_000);
    assert_eq!(v["input"]["d"], 3);
    assert_eq!(v["result"], serde_json::json!({ "strong": false, "nd": false, "weak": true }));
}

#[test]
fn point_values() {
    let v = json(&["gamma", Q1, "--p", "8"]);
    assert_eq!(v["result"]["value"], "5/4");
    let v = json(&["gamma", "x1^2 + x2*x4; x3*x4", "--q", "inf", "--p", "4"]);
    assert_eq!(v["result"]["value"], "9/4");
    let v = json(&["pc", "x1^2; x2^2 + x1*x3"]);
    assert_eq!(v["result"]["p_c"], "4");
    let v = json(&["restriction-range", "x1^2; x1*x2; x2^2"]);
    assert_eq!(v["result"]["p_q"], "6");
}

#[test]
fn numvar_table_rows() {
    let v = json(&["numvar", "x1^2; x2^2 + x1*x3"]);
    let row = |dp: usize| -> Vec<u64> {
        v["result"]["entries"][dp].as_array().unwrap().iter().map(|c| c["upper"].as_u64().unwrap()).collect()
    };
    assert_eq!(row(3), [0, 1, 3]);
    assert_eq!(row(2), [0, 0, 1]);
}

#[test]
fn csv_output() {
    let (code, out, _) = run(&["count", "x1^2", "--s", "2", "--W", "0..3", "--format", "csv"]);
    assert_eq!(code, 0);
    // J = (W + 1)(2W + 1) for the parabola at s = 2.
    assert_eq!(out, "W,J\n0,1\n1,6\n2,15\n3,28\n");
    let (code, out, _) = run(&["expsum", "x1^2", "--s", "2", "--W", "10", "--format", "csv"]);
    assert_eq!(code, 0);
    assert_eq!(out, "W,norm_power\n10,231\n");
}

#[test]
fn count_with_oracle_and_fit() {
    let v = json(&["count", "x1^2", "--s", "2", "--W", "4,8,16,32", "--naive-oracle"]);
    let r = &v["result"];
    assert!(r["naive_oracle"].as_array().unwrap().iter().all(|o| o["agrees"] == true));
    assert_eq!(r["fit"]["verdict"], "PASS");
    let v = json(&["count", "x1^2", "--s", "2", "--W", "1,2"]);
    assert!(v["result"]["fit"].is_null());
    assert!(v["result"]["fit_note"].is_string());
}

#[test]
fn input_errors_exit_1() {
    for args in [
        vec!["numvar", "x1^^2"],
        vec!["numvar", "x1^3"],
        vec!["numvar", "x13^2"],
        vec!["gamma", "x1^2", "--p", "1"],
        vec!["gamma", "x1^2", "--p", "abc"],
        vec!["count", "x1^2", "--s", "9", "--W", "3"],
        vec!["count", "x1^2 + 1/2*x1*x2", "--s", "2", "--W", "3"],
        vec!["count", "x1^2", "--s", "2", "--W", "5..1"],
        vec!["restriction-range", "x1^2; 2*x1^2"],
        vec!["numvar", "x1^2", "--format", "svg"],
        vec!["numvar", "@/no/such/file"],
        vec!["numvar", "x1^2", "--budget", "7"],
        vec!["nonsense"],
    ] {
        let (code, _, err) = run(&args);
        assert_eq!(code, 1, "{args:?}: {err}");
        assert!(!err.contains("panicked"), "{args:?}: {err}");
    }
}

#[test]
fn open_cells_under_require_exact_exit_2() {
    let t = "x1^2 + x2*x3; x2^2 - x1*x3 + x3^2";
    let (code, out, _) = run(&["numvar", t, "--exact-only"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["result"]["entries"][2][1]["level"], "WITNESS_UB");
    let (code, out, err) = run(&["numvar", t, "--exact-only", "--require-exact"]);
    assert_eq!(code, 2);
    assert!(err.contains("open table cells"));
    // The artifact is still written.
    assert!(serde_json::from_str::<Value>(&out).is_ok());
}

#[test]
fn identical_across_runs_and_worker_counts() {
    let args = ["numvar", Q1, "--budget", "200,5", "--seed", "9"];
    let one = quadec().args(args).env("QUADEC_JOBS", "1").output().unwrap().stdout;
    let again = quadec().args(args).env("QUADEC_JOBS", "1").output().unwrap().stdout;
    let four = quadec().args(args).arg("--jobs").arg("4").output().unwrap().stdout;
    assert_eq!(one, again);
    assert_eq!(one, four);
    let count = ["count", "x1^2 + x2^2", "--s", "2", "--W", "2,4,8,16"];
    let a = quadec().args(count).arg("--jobs").arg("1").output().unwrap().stdout;
    let b = quadec().args(count).arg("--jobs").arg("3").output().unwrap().stdout;
    assert_eq!(a, b);
}

#[test]
fn config_file_under_flags() {
    let dir = std::env::temp_dir().join(format!("quadec-cfg-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.conf");
    std::fs::write(&cfg, "# scripted run\nseed = 11\nrestarts = 3\nformat = json\n").unwrap();
    let tuple = dir.join("q.txt");
    std::fs::write(&tuple, "x1^2; x2^2\n").unwrap();
    let input = format!("@{}", tuple.display());
    let v = json(&["classify", &input, "--config", cfg.to_str().unwrap()]);
    assert_eq!(v["config"]["seed"], 11);
    assert_eq!(v["config"]["budget"]["restarts"], 3);
    assert_eq!(v["input"]["tuple"], "x1^2; x2^2");
    let v = json(&["classify", &input, "--config", cfg.to_str().unwrap(), "--seed", "12"]);
    assert_eq!(v["config"]["seed"], 12);
    std::fs::write(&cfg, "colour = blue\n").unwrap();
    let (code, _, _) = run(&["classify", &input, "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 1);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn json_tuple_input() {
    let v = json(&["numvar", "x1^2; x2^2 + x1*x3"]);
    let as_json = v["result"]["tuple"].to_string();
    let w = json(&["numvar", &as_json]);
    assert_eq!(v["result"], w["result"]);
}

#[test]
fn fuzz_needs_seed_in_ci() {
    let out = quadec().args(["fuzz", "--cases", "2"]).env("CI", "true").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = quadec().args(["fuzz", "--cases", "3", "--seed", "4"]).env("CI", "true").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["result"]["failures"], 0);
    let out = quadec().args(["fuzz", "x1^2; x2^2", "--cases", "3", "--seed", "4"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn selftest_passes() {
    let v = json(&["selftest"]);
    assert_eq!(v["result"]["failed"], 0);
    assert!(v["result"]["passed"].as_u64().unwrap() >= 20);
}
