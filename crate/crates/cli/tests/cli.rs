use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const REFERENCE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/reference_50km.cfg");

fn qds(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qds")).args(args).output().expect("binary runs")
}

fn qds_threads(threads: usize, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qds"))
        .env("RAYON_NUM_THREADS", threads.to_string())
        .args(args)
        .output()
        .expect("binary runs")
}

fn reference_text() -> String {
    std::fs::read_to_string(REFERENCE).unwrap()
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)).unwrap()
}

fn first_line(bytes: &[u8]) -> String {
    let text = String::from_utf8(bytes.to_vec()).unwrap();
    format!("{}\n", text.lines().next().unwrap_or(""))
}

#[test]
fn analyze_reference_succeeds() {
    let out = qds(&["analyze", "--config", REFERENCE]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["report"]["feasible"], true);
    assert_eq!(v["mode"], "fixed_pulses");
    assert!(v["provenance"]["version"].is_string());
}

#[test]
fn infeasible_config_exits_two_with_report() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "q25.cfg", &reference_text().replace("optical_error_x = 0.0138", "optical_error_x = 0.25"));
    let report = dir.path().join("r.json");
    let out = qds(&["analyze", "--config", s(&cfg), "--out", s(&report)]);
    assert_eq!(out.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(v["report"]["feasible"], false);
}

#[test]
fn malformed_config_exits_one_with_line() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "bad.cfg", "channel.distance_km = 50\nchannel.attenuation_db_per_km = = 0.2\n");
    let out = qds(&["analyze", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(qds(&["analyze"]).status.code(), Some(1));
    assert_eq!(qds(&["simulate", "--config", REFERENCE, "--scenario", "forgery"]).status.code(), Some(1));
    assert_eq!(qds(&["sweep", "--config", REFERENCE, "--param", "speed", "--from", "0", "--to", "1", "--step", "1"]).status.code(), Some(1));
    assert_eq!(
        qds(&["simulate", "--config", REFERENCE, "--scenario", "eavesdrop", "--seed", "1"]).status.code(),
        Some(1)
    );
}

#[test]
fn estimation_failure_exits_three() {
    // Far beyond the reach of the channel no single-photon Z counts survive estimation.
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "far.cfg", &reference_text().replace("distance_km = 50.0", "distance_km = 100.0"));
    assert_eq!(qds(&["analyze", "--config", s(&cfg)]).status.code(), Some(3));
}

#[test]
fn insufficient_counts_exit_three() {
    let dir = TempDir::new().unwrap();
    let text = format!("{}\nsimulate.signature_length = 100000000\nsimulate.s_a = 0.05\nsimulate.s_v = 0.06\n", reference_text().replace("run.n_pulses = 630957344", "run.n_pulses = 1000000"));
    let cfg = write_config(&dir, "small.cfg", &text);
    let out = qds(&["simulate", "--config", s(&cfg), "--scenario", "honest", "--trials", "2", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn report_round_trips_through_config() {
    let dir = TempDir::new().unwrap();
    let first = dir.path().join("a.json");
    let second = dir.path().join("b.json");
    assert_eq!(qds(&["analyze", "--config", REFERENCE, "--out", s(&first)]).status.code(), Some(0));
    assert_eq!(qds(&["analyze", "--config", s(&first), "--out", s(&second)]).status.code(), Some(0));
    let a: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(first).unwrap()).unwrap();
    let b: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(second).unwrap()).unwrap();
    assert_eq!(a["report"], b["report"]);
    assert_eq!(a["config"], b["config"]);
}

#[test]
fn golden_headers() {
    let sweep = qds(&["sweep", "--config", REFERENCE, "--param", "distance_km", "--from", "40", "--to", "50", "--step", "10"]);
    assert_eq!(first_line(&sweep.stdout), golden("sweep_header.csv"));
    let cmp = qds(&["compare-qkd", "--config", REFERENCE, "--param", "qx", "--from", "0.01", "--to", "0.02", "--step", "0.01"]);
    assert_eq!(first_line(&cmp.stdout), golden("compare_qkd_header.csv"));
    let sim = qds(&["simulate", "--config", REFERENCE, "--scenario", "forgery", "--trials", "10", "--seed", "3"]);
    assert_eq!(first_line(&sim.stdout), golden("simulate_header.csv"));
    for out in [&sweep, &cmp, &sim] {
        assert!(!out.stdout.contains(&b'\r'));
    }
}

#[test]
fn empty_range_gives_header_only() {
    let out = qds(&["sweep", "--config", REFERENCE, "--param", "qx", "--from", "0.2", "--to", "0.1", "--step", "0.01"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), golden("sweep_header.csv"));
}

#[test]
fn p_e_non_increasing_with_distance_over_feasible_range() {
    let out = qds(&["sweep", "--config", REFERENCE, "--param", "distance_km", "--from", "0", "--to", "55", "--step", "5"]);
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    let idx = rdr.headers().unwrap().iter().position(|h| h == "p_e").unwrap();
    let p: Vec<f64> = rdr.records().map(|r| r.unwrap()[idx].parse().unwrap()).collect();
    assert_eq!(p.len(), 12);
    assert!(p.windows(2).all(|w| w[1] <= w[0]), "{p:?}");
}

#[test]
fn qx_sweep_has_signature_only_band() {
    let out = qds(&["sweep", "--config", REFERENCE, "--param", "qx", "--from", "0", "--to", "0.05", "--step", "0.005"]);
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    let h = rdr.headers().unwrap().clone();
    let f = h.iter().position(|c| c == "feasible").unwrap();
    let q = h.iter().position(|c| c == "qkd_key_length").unwrap();
    let band = rdr
        .records()
        .map(|r| r.unwrap())
        .filter(|r| &r[f] == "true" && r[q].parse::<f64>().unwrap() <= 0.0)
        .count();
    assert!(band > 0);
}

#[test]
fn compare_with_unit_f_ec_has_containment() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "f1.cfg", &reference_text().replace("analysis.f_ec = 1.2", "analysis.f_ec = 1.0"));
    let out = qds(&["compare-qkd", "--config", s(&cfg), "--param", "qx", "--from", "0", "--to", "0.3", "--step", "0.01"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(!text.contains("qkd_only"));
    assert!(text.lines().last().unwrap().ends_with("neither"));
}

#[test]
fn honest_noiseless_always_accepts() {
    let dir = TempDir::new().unwrap();
    let text = format!("{}\nsimulate.source = \"iid\"\nsimulate.error_rate = 0.0\n", reference_text());
    let cfg = write_config(&dir, "iid.cfg", &text);
    let out = qds(&["simulate", "--config", s(&cfg), "--scenario", "honest", "--trials", "100", "--seed", "9"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("honest,bob_accept,100,100,1,")), "{text}");
}

#[test]
fn seeded_outputs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let text = format!("{}\nsimulate.signature_length = 2000\n", reference_text());
    let cfg = write_config(&dir, "sim.cfg", &text);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |out: &Path| {
        vec!["simulate", "--config", s(&cfg), "--scenario", "repudiation", "--trials", "3000", "--seed", "11", "--out", s(out)]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>()
    };
    let a_args = args(&a);
    let b_args = args(&b);
    qds_threads(1, &a_args.iter().map(String::as_str).collect::<Vec<_>>());
    qds_threads(8, &b_args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let other = qds(&["simulate", "--config", s(&cfg), "--scenario", "repudiation", "--trials", "3000", "--seed", "12"]);
    assert_ne!(std::fs::read(&a).unwrap(), other.stdout);
}
