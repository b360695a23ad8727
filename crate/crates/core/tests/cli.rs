mod common;

use std::process::{Command, Output};

use common::scenario_path;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_soccer-coord"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_check_replay_round() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("egress.jsonl");
    let trace = trace.to_str().unwrap();
    let sc = scenario_path("striker_egress.toml");
    let o = cli(&["run", "--scenario", sc.to_str().unwrap(), "--out", trace, "--duration", "8"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let metrics: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(metrics["duration"], 8.0);
    assert_eq!(metrics["penalties"], 1);

    let o = cli(&["check", trace]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains(" 0 violations"));

    let svg = dir.path().join("at5.svg");
    let o = cli(&["replay", trace, "--at", "5.1", "--svg", svg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("penalized"));
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));

    let o = cli(&["replay", trace, "--at", "100"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("outside"));
}

#[test]
fn overrides_apply() {
    let sc = scenario_path("ball_in_goal_area.toml");
    let o = cli(&["run", "--scenario", sc.to_str().unwrap(), "--disable-teamplay", "--seed", "3", "--loss", "0.2"]);
    assert_eq!(o.status.code(), Some(0));
    let m: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(m["seed"], 3);
    assert!(m["illegal_defense"].as_u64().unwrap() >= 1);
}

#[test]
fn check_flags_violations_and_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    let sc = scenario_path("striker_egress.toml");
    let o = cli(&["run", "--scenario", sc.to_str().unwrap(), "--out", path.to_str().unwrap(), "--duration", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();

    // Robot 3 claims Attack while robot 2 still holds it.
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let last: serde_json::Value = serde_json::from_str(lines.last().unwrap()).unwrap();
    let seq = last["seq"].as_u64().unwrap() + 1;
    let t = last["t"].as_f64().unwrap();
    lines.push(format!(
        r#"{{"seq":{seq},"t":{t},"kind":"task_change","robot":3,"from":"Defend","to":"Attack","base_from":"Defend","base_to":"Attack","cause":"vacancy"}}"#
    ));
    let tampered = dir.path().join("tampered.jsonl");
    std::fs::write(&tampered, lines.join("\n") + "\n").unwrap();
    let o = cli(&["check", tampered.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("StrikerUniqueness"));

    let cut = dir.path().join("cut.jsonl");
    std::fs::write(&cut, &text[..text.len() - 10]).unwrap();
    let o = cli(&["check", cut.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains(&format!("line {}", text.lines().count())));
}

#[test]
fn bad_inputs_exit_with_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "seed = 1\nduration = -4.0\n").unwrap();
    let o = cli(&["run", "--scenario", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = cli(&["check", dir.path().join("none.jsonl").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = cli(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}
