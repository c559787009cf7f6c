use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use labelrefine::circular::{sample_uniform_angle, sample_von_mises};
use labelrefine::rng::stream_rng;

const FAST: &[&str] = &["--restarts", "4", "--dip-replicates", "200", "--controlflow-replicates", "500"];

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_labelrefine"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stamp(day: u32, theta: f64) -> String {
    let secs = ((theta.rem_euclid(TAU)) / TAU * 86_400.0) as i64;
    let start = chrono::NaiveDate::from_ymd_opt(2015, 3, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
    let t = start + chrono::Duration::days(i64::from(day) - 1) + chrono::Duration::seconds(secs);
    t.format("%m/%d/%Y %H:%M:%S").to_string()
}

/// Rows sorted by time: "door" at about 07:00 followed by "coffee", again at
/// about 19:00 followed by "tv", plus "noise" at uniform times.
fn bimodal_csv(days: u32, seed: u64) -> String {
    let mut rng = stream_rng(seed, 0);
    let mut rows = Vec::new();
    for d in 1..=days {
        let am = sample_von_mises(&mut rng, 7.0 / 12.0 * PI, 30.0);
        let pm = sample_von_mises(&mut rng, 19.0 / 12.0 * PI, 30.0);
        rows.push((d, am, "door"));
        rows.push((d, am + 0.02, "coffee"));
        rows.push((d, pm, "door"));
        rows.push((d, pm + 0.02, "tv"));
        rows.push((d, sample_uniform_angle(&mut rng), "noise"));
    }
    to_csv(rows)
}

fn uniform_csv(days: u32, seed: u64) -> String {
    let mut rng = stream_rng(seed, 0);
    let rows = (1..=days)
        .flat_map(|d| ["a", "b"].map(|s| (d, s)))
        .flat_map(|(d, s)| (0..2).map(move |_| (d, s)))
        .map(|(d, s)| (d, sample_uniform_angle(&mut rng), s))
        .collect();
    to_csv(rows)
}

fn to_csv(mut rows: Vec<(u32, f64, &str)>) -> String {
    rows.sort_by_key(|r| (r.0, stamp(r.0, r.1)));
    let mut s = String::from("timestamp,address,sensor,value\n");
    for (d, theta, sensor) in rows {
        s += &format!("{},Home,{sensor},1\n", stamp(d, theta));
    }
    s
}

struct Dir(tempfile::TempDir);

impl Dir {
    fn new() -> Self {
        Self(tempfile::tempdir().unwrap())
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.path().join(name)
    }

    fn write(&self, name: &str, contents: &str) -> String {
        let p = self.path(name);
        std::fs::write(&p, contents).unwrap();
        s(&p)
    }
}

fn s(p: &Path) -> String {
    p.display().to_string()
}

#[test]
fn analyze_is_byte_deterministic_and_replayable() {
    let dir = Dir::new();
    let log = dir.write("log.csv", &bimodal_csv(40, 1));
    let (r1, r2, r3) = (s(&dir.path("r1.json")), s(&dir.path("r2.json")), s(&dir.path("r3.json")));
    for r in [&r1, &r2] {
        let mut args = vec!["analyze", "--log", &log, "--seed", "7", "--report", r];
        args.extend(FAST);
        ok(&args);
    }
    let a = std::fs::read(&r1).unwrap();
    assert_eq!(a, std::fs::read(&r2).unwrap());

    let report: serde_json::Value = serde_json::from_slice(&a).unwrap();
    let door = report["reports"].as_array().unwrap().iter().find(|r| r["label"] == "door").unwrap();
    assert_eq!(door["decision"]["outcome"], "refined");
    assert_eq!(door["selection"]["chosen_k"], 2);

    let manifest = dir.path("r1.manifest.json");
    assert!(manifest.exists());
    let out = ok(&["replay", "--manifest", &s(&manifest), "--report", &r3]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("reproduced"));
    assert_eq!(a, std::fs::read(&r3).unwrap());
}

#[test]
fn refine_writes_relabeled_log_and_manifest() {
    let dir = Dir::new();
    let log = dir.write("log.csv", &bimodal_csv(40, 2));
    let (out_csv, report) = (s(&dir.path("refined.csv")), s(&dir.path("refine.json")));
    let mut args = vec!["refine", "--log", &log, "--iterative", "--max-rounds", "3", "--out", &out_csv, "--report", &report];
    args.extend(FAST);
    ok(&args);
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(doc["applied"][0], "door");
    let csv = std::fs::read_to_string(&out_csv).unwrap();
    assert!(csv.starts_with("timestamp,address,sensor,value,case_id,label\n"));
    assert_eq!(csv.matches(",door@[").count(), 80);

    let replay = ok(&["replay", "--manifest", &s(&dir.path("refine.manifest.json"))]);
    assert_eq!(String::from_utf8_lossy(&replay.stdout).matches("reproduced").count(), 2);
}

#[test]
fn uniform_log_round_trips_modulo_case_id() {
    let dir = Dir::new();
    let input = uniform_csv(30, 3);
    let log = dir.write("u.csv", &input);
    let (out_csv, report) = (s(&dir.path("u_out.csv")), s(&dir.path("u.json")));
    let mut args = vec!["refine", "--log", &log, "--out", &out_csv, "--report", &report];
    args.extend(FAST);
    ok(&args);
    let output = std::fs::read_to_string(&out_csv).unwrap();
    let stripped: Vec<String> = output
        .lines()
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            // drop case_id and label, which equals the sensor here
            if f[0] != "timestamp" {
                assert_eq!(f[5], f[2]);
            }
            f[..4].join(",")
        })
        .collect();
    assert_eq!(stripped.join("\n") + "\n", input);
}

#[test]
fn input_and_config_errors_have_distinct_exit_codes() {
    let dir = Dir::new();
    let empty = dir.write("empty.csv", "timestamp,sensor\n");
    let out = run(&["analyze", "--log", &empty, "--report", &s(&dir.path("e.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no events"));

    let missing = s(&dir.path("missing.csv"));
    assert_eq!(run(&["analyze", "--log", &missing]).status.code(), Some(2));
    assert_eq!(run(&["export", "--net", &missing, "--dot"]).status.code(), Some(2));

    let bad_time = dir.write("bad.csv", "timestamp,sensor\n03/11/2015 25:00:00,x\n");
    let out = run(&["analyze", "--log", &bad_time, "--report", &s(&dir.path("b.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 2"));

    assert_eq!(run(&["refine", "--log", "x.csv", "--alpha", "1.5"]).status.code(), Some(64));
    assert_eq!(run(&["analyze", "--log", "x.csv", "--k-max", "1"]).status.code(), Some(64));
    assert_eq!(run(&["analyze", "--bogus"]).status.code(), Some(64));
}

#[test]
fn export_net_and_dfg() {
    let net = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fig1.net");
    let dot = String::from_utf8(ok(&["export", "--net", net, "--dot"]).stdout).unwrap();
    assert_eq!(dot.matches("shape=circle").count() + dot.matches("shape=doublecircle").count(), 8);
    assert_eq!(dot.matches("shape=box").count(), 7);
    assert_eq!(dot.matches(" -> ").count(), 16);

    let dir = Dir::new();
    let log = dir.write("l.csv", "timestamp,sensor\n03/11/2015 01:00:00,a\n03/11/2015 02:00:00,b\n03/12/2015 01:00:00,a\n03/12/2015 02:00:00,b\n");
    let out = s(&dir.path("dfg.dot"));
    ok(&["export", "--log", &log, "--dfg", "--out", &out]);
    let dfg = std::fs::read_to_string(&out).unwrap();
    assert!(dfg.contains("a0 -> a1 [label=\"2\""), "{dfg}");
}

#[test]
fn test_net_reports_language_and_words() {
    let net = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fig1.net");
    let out = String::from_utf8(ok(&["test-net", "--net", net, "--word", "A,C,D,F,E", "--word", "A,B"]).stdout).unwrap();
    assert!(out.contains("4 words"));
    assert!(out.contains("<A,C,D,F,E> accepted"));
    assert!(out.contains("<A,B> rejected"));
}
