use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use poolsim::scenario::{
    load_scenario, parse_scenario, MANIFEST_FILE, REPLICATES_FILE, SUMMARY_FILE,
};
use poolsim::sim::{run, MinerSpec, SimConfig, Strategy};
use serde_json::Value;

fn poolsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_poolsim"))
        .args(args)
        .env_remove("POOLSIM_OUTPUT_DIR")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(
        o.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_str(&stdout(o)).unwrap()
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
}

fn read_outputs(dir: &Path) -> Vec<Vec<u8>> {
    [SUMMARY_FILE, REPLICATES_FILE, MANIFEST_FILE]
        .iter()
        .map(|f| fs::read(dir.join(f)).unwrap())
        .collect()
}

#[test]
fn formulas_print_values() {
    let first = |args: &[&str]| -> f64 {
        stdout(&poolsim(args))
            .split('\t')
            .next()
            .unwrap()
            .trim()
            .parse()
            .unwrap()
    };
    assert_eq!(first(&["formulas", "withhold-gain", "0.2", "0.5"]), 0.0625);
    assert_eq!(first(&["formulas", "selfish-threshold", "1.0"]), 0.0);
    assert!((first(&["formulas", "mining-std", "18"]) - 4.2426).abs() < 1e-4);
    assert!(stdout(&poolsim(&["formulas"])).contains("pps-block-payout"));
}

#[test]
fn unknown_formula_lists_the_rest() {
    let o = poolsim(&["formulas", "nope"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("withhold-gain") && err.contains("mining-std"),
        "{err}"
    );
}

#[test]
fn config_errors_exit_with_one_and_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(
        &bad,
        "{\n  \"name\": \"x\",\n  \"sim\": {\"miners\": [], \"total_blocks\": 10, \"seed\": 1},\n  \"attack\": {\"withholding\": {\"params\": {\"alpha\": 0.2, \"beta\": 3.0}}},\n  \"replicates\": 1\n}\n",
    )
    .unwrap();
    let o = poolsim(&["run", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.json:4"), "{err}");

    let o = poolsim(&["withhold-gain", "--alpha", "1.5", "--beta", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
    let o = poolsim(&["withhold-gain", "--alpha"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn runtime_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("dag.csv");
    fs::write(
        &log,
        "height,owner,parent,status\n0,genesis,,main\n1,a,7,main\n",
    )
    .unwrap();
    let o = poolsim(&["analyze-dag", log.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn same_seed_gives_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let s = scenario("withholding_split.json");
    for dir in [&a, &b] {
        let args = [
            "run",
            s.to_str().unwrap(),
            "--replicates",
            "1",
            "--seed",
            "42",
            "--output-dir",
            dir.path().to_str().unwrap(),
        ];
        stdout(&poolsim(&args));
    }
    assert_eq!(read_outputs(a.path()), read_outputs(b.path()));
}

#[test]
fn manifest_replay_ignores_thread_count() {
    let first = tempfile::tempdir().unwrap();
    let replay = tempfile::tempdir().unwrap();
    let s = scenario("selfish_at_threshold.json");
    stdout(&poolsim(&[
        "--threads",
        "4",
        "run",
        s.to_str().unwrap(),
        "--replicates",
        "6",
        "--output-dir",
        first.path().to_str().unwrap(),
    ]));
    let manifest = first.path().join(MANIFEST_FILE);
    stdout(&poolsim(&[
        "--threads",
        "1",
        "run",
        "--manifest",
        manifest.to_str().unwrap(),
        "--output-dir",
        replay.path().to_str().unwrap(),
    ]));
    assert_eq!(read_outputs(first.path()), read_outputs(replay.path()));
}

#[test]
fn output_dir_falls_back_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario("withholding_split.json");
    let o = Command::new(env!("CARGO_BIN_EXE_poolsim"))
        .args(["run", s.to_str().unwrap(), "--replicates", "1"])
        .env("POOLSIM_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    stdout(&o);
    assert!(dir.path().join(SUMMARY_FILE).exists());
}

#[test]
fn bundled_scenarios_round_trip() {
    for name in [
        "withholding_split.json",
        "selfish_at_threshold.json",
        "pool_fees.json",
    ] {
        let s = load_scenario(&scenario(name)).unwrap();
        let text = serde_json::to_string_pretty(&s).unwrap();
        assert_eq!(parse_scenario(&text, Path::new(name)).unwrap(), s);
    }
}

#[test]
fn closed_form_and_simulation_commands() {
    let g = json(&poolsim(&[
        "withhold-gain",
        "--alpha",
        "0.2",
        "--beta",
        "0.5",
    ]));
    assert_eq!(g["relative_gain"], 0.0625);
    assert_eq!(g["private_branch_premium"], 0.125);

    let sim = json(&poolsim(&[
        "withhold-sim",
        "--alpha",
        "0.2",
        "--beta",
        "0.5",
        "--blocks",
        "20000",
        "--replicates",
        "4",
    ]));
    assert_eq!(sim["closed_form"], 0.0625);
    assert!(sim["premium"]["mean"].as_f64().unwrap().abs() < 0.2);

    let selfish = json(&poolsim(&[
        "selfish-sim",
        "--alpha",
        "0.3",
        "--gamma",
        "0.5",
        "--blocks",
        "20000",
        "--fork-punishment",
        "0.1",
    ]));
    assert_eq!(selfish["threshold"], 0.25);
    assert_eq!(selfish["above_threshold"], true);
    assert!(selfish["waste"]["honest_stale_fraction"].as_f64().unwrap() > 0.0);

    let t = json(&poolsim(&[
        "selfish-threshold",
        "--ns",
        "0.5",
        "--alpha",
        "0.2",
    ]));
    assert_eq!(t["threshold"], 0.25);
    assert_eq!(t["profitable"], false);

    let d = json(&poolsim(&[
        "detect",
        "--expected",
        "18",
        "--observed",
        "16",
    ]));
    assert_eq!(d["verdict"], "undetectable");
    assert_eq!(d["method"], "exact_poisson");
    let d = json(&poolsim(&[
        "detect",
        "--expected",
        "729",
        "--observed",
        "640",
        "--withhold-fraction",
        "0.1111111111111111",
    ]));
    assert_eq!(d["report"]["verdict"], "detected");
    assert!((d["min_blocks_to_detect"].as_f64().unwrap() - 729.0).abs() < 1e-6);
}

#[test]
fn analyze_dag_writes_the_table_layout() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("events.csv");
    let cfg = SimConfig {
        natural_fork_rate: 0.05,
        ..SimConfig::new(
            vec![
                MinerSpec::solo("a", 0.6, Strategy::Honest),
                MinerSpec::solo("b", 0.4, Strategy::Honest),
            ],
            3_000,
            1,
        )
    };
    run(&cfg)
        .unwrap()
        .write_event_log(fs::File::create(&log).unwrap())
        .unwrap();
    let out = stdout(&poolsim(&[
        "analyze-dag",
        log.to_str().unwrap(),
        "--window",
        "1000",
    ]));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "blocks,wasted,child(wasted)");
    assert!(
        lines[1].starts_with("0-999,") && lines[1].ends_with('%'),
        "{out}"
    );
    assert_eq!(lines.len(), 5);
}
