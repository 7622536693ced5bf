//! End-to-end runs of the `selftest` binary on the files in `data/`.

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_selftest"))
        .args(args)
        .current_dir(data(""))
        .env_remove("SELFTEST_SEED")
        .output()
        .expect("binary runs")
}

fn run_env(args: &[&str], seed: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_selftest"))
        .args(args)
        .current_dir(data(""))
        .env("SELFTEST_SEED", seed)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn num(v: &Value) -> f64 {
    v.as_f64().expect("a number")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn analyze_reports_beta_and_symmetry() {
    let r = json(&run(&["analyze", "diagonal.json"]));
    assert_eq!(num(&r["synchronicity"]["beta"]), 1.0);
    assert_eq!(r["synchronicity"]["is_symmetric"], true);

    let r = json(&run(&["analyze", "half.json"]));
    assert_eq!(num(&r["synchronicity"]["beta"]), 0.5);

    let r = json(&run(&["analyze", "asymmetric.json"]));
    assert_eq!(r["synchronicity"]["is_symmetric"], false);
    assert_eq!(r["synchronicity"]["asymmetric_entries"], 2);
}

#[test]
fn gap_of_repetition_stabilizer_game_matches_code_gap() {
    let g = json(&run(&["gap", "rep3-game.json", "rep3-strategy.json"]));
    let q = json(&run(&["qldt", "--code", "rep3.txt", "--method", "fast"]));
    assert!((num(&g["spectrum"]["gap"]) - 0.5).abs() <= 1e-9);
    assert!((num(&g["spectrum"]["gap"]) - num(&q["gap"])).abs() <= 1e-9);
    assert_eq!(g["spectrum"]["top_multiplicity"], 1);
}

#[test]
fn gap_of_always_winning_game_is_zero() {
    let g = json(&run(&["gap", "trivial.json", "pme.json"]));
    assert_eq!(num(&g["spectrum"]["gap"]), 0.0);
    assert_eq!(g["spectrum"]["top_multiplicity"], 4);
    assert!((num(&g["spectrum"]["top"]) - 1.0).abs() <= 1e-9);
}

#[test]
fn perfect_strategy_has_top_eigenvalue_one() {
    let g = json(&run(&["gap", "diagonal.json", "pme.json"]));
    assert!((num(&g["spectrum"]["top"]) - 1.0).abs() <= 1e-9);
    assert!((num(&g["omega"]) - 1.0).abs() <= 1e-9);
    assert_eq!(g["perfect"], true);
}

#[test]
fn perfect_threshold_is_adjustable() {
    let g = json(&run(&["gap", "rep3-game.json", "rep3-strategy.json"]));
    assert_eq!(g["perfect"], true);
    let g = json(&run(&["gap", "agree.json", "pme.json"]));
    let omega = num(&g["omega"]);
    assert!((omega - 0.75).abs() <= 1e-12, "{omega}");
    assert_eq!(g["perfect"], false);
    let loose = format!("{}", 1.0 - omega + 1e-12);
    let g = json(&run(&[
        "gap",
        "agree.json",
        "pme.json",
        "--perfect-tol",
        &loose,
    ]));
    assert_eq!(g["perfect"], true);
    assert_eq!(
        code(&run(&[
            "gap",
            "agree.json",
            "pme.json",
            "--perfect-tol",
            "-1"
        ])),
        2
    );
}

#[test]
fn qldt_methods_agree_on_hamming_code() {
    let mut gaps = Vec::new();
    for m in ["fast", "dense", "bell"] {
        let r = json(&run(&["qldt", "--code", "hamming7.txt", "--method", m]));
        assert_eq!(r["report"]["distance"], 3);
        gaps.push(num(&r["gap"]));
    }
    assert_eq!(gaps[0], 3.0 / 14.0);
    assert!(
        gaps.iter().all(|g| (g - 3.0 / 14.0).abs() <= 1e-9),
        "{gaps:?}"
    );
}

#[test]
fn qldt_csv_has_one_row() {
    let out = run(&["qldt", "--code", "rep3.txt", "--csv"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("method,k,n,"));
    assert!(lines[1].starts_with("fast,1,3,1,3,"));
}

#[test]
fn round_meets_the_target() {
    let out = run(&["round", "--eta", "0.02", "--trials", "100"]);
    let r = json(&out);
    assert_eq!(r["violations"].as_array().unwrap().len(), 0);
    assert_eq!(r["within_target"], 100);
    assert!(num(&r["max_pvm_residual"]) <= 1e-10);
    assert_eq!(
        run(&["round", "--eta", "0.02", "--trials", "100"]).stdout,
        out.stdout
    );
}

#[test]
fn decompose_pme_strategy_is_one_flat_piece() {
    let r = json(&run(&["decompose", "diagonal.json", "pme.json"]));
    let levels = r["components"]["levels"].as_array().unwrap();
    assert_eq!(levels.len(), 1);
    assert_eq!(levels[0]["rank"], 2);
    assert!(num(&r["components"]["defect"]).abs() <= 1e-12);
    assert_eq!(r["blocks"].as_array().unwrap().len(), 1);
}

#[test]
fn dilate_check_certifies_and_converts() {
    let args = [
        "dilate-check",
        "dilation-game.json",
        "dilation-strategy.json",
        "dilation-ideal.json",
        "dilation-witness.json",
    ];
    let mut with = args.to_vec();
    with.extend(["--eps", "0.05", "--convert"]);
    let r = json(&run(&with));
    assert_eq!(r["ok"], true);
    assert_eq!(r["certified"], true);
    let eps = num(&r["epsilon"]);
    assert!(eps > 0.0 && eps < 0.05);
    assert!(num(&r["strong"]) <= 3.0 * eps + 1e-9);
    assert!(num(&r["conversion"]["residuals"]["p1"]).is_finite());

    let mut tight = args.to_vec();
    tight.extend(["--eps", "1e-6"]);
    let out = run(&tight);
    assert_eq!(code(&out), 1);
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["certified"], false);
}

#[test]
fn malformed_json_is_an_input_error_with_position() {
    let out = run(&["analyze", "rep3.txt"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line 1 column"), "{}", stderr(&out));

    let out = run(&["gap", "diagonal.json", "hamming7.txt"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line"), "{}", stderr(&out));
}

#[test]
fn missing_file_is_an_input_error() {
    assert_eq!(code(&run(&["analyze", "no-such-file.json"])), 2);
}

#[test]
fn mismatched_files_are_incompatible() {
    let out = run(&["gap", "diagonal.json", "rep3-strategy.json"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("incompatible"), "{}", stderr(&out));
    let out = run(&[
        "dilate-check",
        "diagonal.json",
        "pme.json",
        "pme.json",
        "dilation-witness.json",
    ]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn suite_run_matches_the_recorded_golden_report() {
    let out = run(&["suite", "--seed", "1", "--trials", "10"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let golden = std::fs::read(data("golden-suite.json")).unwrap();
    assert!(
        out.stdout == golden,
        "report differs from golden-suite.json"
    );
}

#[test]
fn suite_reports_are_byte_identical_across_runs() {
    let args = ["suite", "--seed", "5", "--trials", "4", "--dims", "2:4"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
    let csv = ["suite", "--seed", "5", "--trials", "4", "--csv"];
    assert_eq!(run(&csv).stdout, run(&csv).stdout);
}

#[test]
fn seed_variable_overrides_the_flag() {
    let args = ["suite", "--suite", "holder", "--trials", "3"];
    let env = run_env(&args, "77");
    let flag = run(&[
        "suite", "--suite", "holder", "--trials", "3", "--seed", "77",
    ]);
    assert_eq!(env.stdout, flag.stdout);
    assert_ne!(env.stdout, run(&args).stdout);
    assert_eq!(code(&run_env(&args, "not-a-number")), 2);
}

#[test]
fn single_suite_selector_runs_only_that_suite() {
    let r = json(&run(&[
        "suite",
        "--suite",
        "schmidt-bound",
        "--trials",
        "5",
    ]));
    let suites = r["suites"].as_array().unwrap();
    assert_eq!(suites.len(), 1);
    assert_eq!(suites[0]["name"], "schmidt-bound");
    assert_eq!(suites[0]["passed"], 5);
}

#[test]
fn bad_suite_configurations_exit_nonzero() {
    assert_eq!(code(&run(&["suite", "--suite", "nope"])), 2);
    assert_ne!(code(&run(&["suite", "--slack", "0", "--trials", "2"])), 0);
    assert_eq!(code(&run(&["suite", "--trials", "0"])), 2);
    assert_eq!(code(&run(&["suite", "--dims", "5"])), 2);
}

#[test]
fn suite_listing_names_every_suite() {
    let r = json(&run(&["suite", "--list"]));
    let names: Vec<&str> = r
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, selftest::suites::suite_names());
}

#[test]
fn curve_emits_one_row_per_noise_level() {
    let out = run(&["curve", "--etas", "0.01,0.02,0.04", "--csv"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
    let r = json(&run(&["curve", "--etas", "0.01,0.02,0.04"]));
    assert!(num(&r["gamma_exponent"]).is_finite());
}

#[test]
fn floats_are_printed_with_seventeen_digits() {
    let out = run(&["qldt", "--code", "hamming7.txt"]);
    let text = String::from_utf8(out.stdout).unwrap();
    // 3/14 to 17 significant digits
    assert!(text.contains("\"gap\": 2.1428571428571427e-1"), "{text}");
}
