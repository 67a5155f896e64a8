use std::path::Path;
use std::process::{Command, Output};

use qamgame::game::{best_response, matched_filter_powers, user_size};
use qamgame::phy::{PacketConfig, TcmConfig};
use qamgame::queueing::TrafficQos;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qamgame")).args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn uncoded_table_rows() {
    let rows = csv_rows(&stdout(&["tables"]));
    assert_eq!(rows[0].join(","), "b,alpha,beta,gamma_star_db,f_star,b_over_gamma_star_db,utility_factor");
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[4].join(","), "8,1.875,0.0118,27.3,0.757,-18.3,0.0112");
    let r2 = &rows[1];
    assert_eq!(&r2[..4], ["2", "1", "1", "9.1"]);
    // reference value 0.801; the optimum itself sits at 0.7993
    assert_eq!(r2[4], "0.799");
    let v: Value = serde_json::from_str(&stdout(&["tables", "--format", "json"])).unwrap();
    assert!((v[0]["f_star"].as_f64().unwrap() - 0.801).abs() <= 0.002);
    assert_eq!(&r2[5..], ["-6.1", "0.1978"]);
}

#[test]
fn coded_table_rows() {
    let rows = csv_rows(&stdout(&["tables", "--coded"]));
    assert_eq!(rows[0].len(), 10);
    let r4 = &rows[2];
    assert_eq!(r4[7], "14.2");
    assert_eq!(r4[8], "0.898");
    assert!((num(&r4[9]) - 0.1357).abs() < 0.002);
}

#[test]
fn json_carries_full_precision() {
    let v: Value = serde_json::from_str(&stdout(&["tables", "--format", "json"])).unwrap();
    let g = v[0]["gamma_star_db"].as_f64().unwrap();
    assert!((g - 9.0741).abs() < 1e-3);
    assert!(v[0].get("coded").is_none());
}

#[test]
fn tradeoff_rows() {
    let rows = csv_rows(&stdout(&["tradeoff"]));
    assert_eq!(rows[0].join(","), "b,coded,spectral_eff,energy_factor");
    assert_eq!(rows.len(), 6);
    assert_eq!(num(&rows[1][2]), 0.02);
    assert!((num(&rows[1][3]) - 0.1978).abs() < 5e-5);
    assert!((num(&rows[5][2]) - 0.10).abs() < 1e-15);
    assert!((num(&rows[5][3]) - 0.0037).abs() < 5e-5);
    for w in rows[1..].windows(2) {
        assert!(num(&w[1][2]) > num(&w[0][2]));
        assert!(num(&w[1][3]) < num(&w[0][3]));
    }
    assert_eq!(csv_rows(&stdout(&["tradeoff", "--coded"])).len(), 11);
}

#[test]
fn sweep_is_reproducible_and_schema_stable() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        stdout(&["sweep-delay", "--coded", "--points", "60", "--out", p.to_str().unwrap()]);
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let rows = csv_rows(&String::from_utf8(ta).unwrap());
    assert_eq!(rows.len(), 61);
    assert!(rows[1..].iter().all(|r| r.len() == rows[0].len()));
    assert_eq!(rows[0].last().unwrap(), "tcm_gain_db");
    let last = rows.last().unwrap();
    assert_eq!(num(&last[0]), 1000.0);
    assert_eq!(last[2], "2");
    assert!((num(&last[8]) - 0.1978).abs() < 5e-4);
}

#[test]
fn sweep_flags_infeasible_delays() {
    let rows = csv_rows(&stdout(&["sweep-delay", "--points", "3", "--min-delay", "2", "--max-delay", "200"]));
    assert_eq!(rows[1][1], "false");
    assert!(rows[1][2..].iter().all(String::is_empty));
    assert_eq!(rows[3][1], "true");
}

#[test]
fn sweep_rejects_bad_range() {
    let out = run(&["sweep-delay", "--points", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["sweep-delay", "--min-delay", "10", "--max-delay", "5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gain_file_without_entry_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let entries = TcmConfig::<f64>::default_trellis().entries();
    let path = write(dir.path(), "g.json", &serde_json::to_string(&entries[..3]).unwrap());
    let out = run(&["tables", "--coded", "--gain-file", &path]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("b = 8"));
    assert_eq!(run(&["tables", "--gain-file", &path]).status.code(), Some(2));
}

const ONE_USER: &str = r#"{"bandwidth_hz": 1e6, "noise_w": 5e-16,
    "users": [{"gain": 1e-9, "lambda_pps": 100, "delay_s": 0.1}]}"#;

#[test]
fn single_user_scene_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let scene = write(dir.path(), "s.json", ONE_USER);
    let v: Value = serde_json::from_str(&stdout(&["nash", "--scene", &scene, "--format", "json"])).unwrap();
    assert_eq!(v["feasible"], true);
    let u = &v["users"][0];

    let traffic = TrafficQos::new(100.0, PacketConfig::DEFAULT, 0.1).unwrap();
    let br = best_response(&traffic, 1e6, 10, None).unwrap();
    let phi = user_size(&br.strategy, 1e6);
    let p = matched_filter_powers(&[phi], &[1e-9], 5e-16).unwrap()[0];
    assert_eq!(u["strategy"]["bits"], 2);
    assert_eq!(u["strategy"]["symbol_rate"].as_f64().unwrap(), br.strategy.symbol_rate);
    assert!((u["strategy"]["power"].as_f64().unwrap() / p - 1.0).abs() < 1e-12);
    assert!((u["size"].as_f64().unwrap() - phi).abs() < 1e-15);
    let utility = 2.0 * br.strategy.symbol_rate * 0.79923 / p;
    assert!((u["utility"].as_f64().unwrap() / utility - 1.0).abs() < 1e-4);
}

#[test]
fn symmetric_users_get_identical_strategies() {
    let dir = tempfile::tempdir().unwrap();
    let scene = write(
        dir.path(),
        "s.json",
        r#"{"bandwidth_hz": 1e6, "noise_w": 5e-16, "coded": true, "users": [
            {"gain": 1e-9, "lambda_pps": 50, "delay_s": 0.05},
            {"gain": 1e-9, "lambda_pps": 50, "delay_s": 0.05},
            {"gain": 1e-9, "lambda_pps": 50, "delay_s": 0.05}]}"#,
    );
    let rows = csv_rows(&stdout(&["nash", "--scene", &scene, "--verify", "2000"]));
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[1][2], "true");
    for r in &rows[2..] {
        assert_eq!(r[1..10], rows[1][1..10]);
    }
    assert!(rows[1..].iter().all(|r| num(&r[10]) <= 1e-6));
}

#[test]
fn overloaded_scene_exits_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let users = vec![r#"{"gain": 1e-9, "lambda_pps": 10000, "delay_s": 0.1}"#; 20].join(",");
    let scene =
        write(dir.path(), "s.json", &format!(r#"{{"bandwidth_hz": 1e6, "noise_w": 5e-16, "users": [{users}]}}"#));
    let out = run(&["nash", "--scene", &scene, "--format", "json"]);
    assert_eq!(out.status.code(), Some(3));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["feasible"], false);
    assert!(v["total_size"].as_f64().unwrap() >= 1.0);
}

#[test]
fn qos_infeasible_user_exits_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let scene = write(
        dir.path(),
        "s.json",
        r#"{"bandwidth_hz": 1e6, "noise_w": 5e-16, "users": [{"gain": 1e-9, "lambda_pps": 100, "delay_s": 1e-6}]}"#,
    );
    let out = run(&["nash", "--scene", &scene]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("infeasible"));
}

#[test]
fn malformed_scene_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let scene = write(dir.path(), "s.json", r#"{"bandwidth_hz": 1e6}"#);
    assert_eq!(run(&["nash", "--scene", &scene]).status.code(), Some(2));
    assert_eq!(run(&["nash", "--scene", "/nonexistent/scene.json"]).status.code(), Some(2));
}

#[test]
fn queue_validation_passes_at_half_load() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let out = stdout(&["validate-queue", "--rho", "0.5", "--packets", "20000", "--trace", trace.to_str().unwrap()]);
    let rows = csv_rows(&out);
    assert_eq!(rows[0][0], "packets");
    assert_eq!(rows[1].last().unwrap(), "true");
    assert!((num(&rows[1][2]) - 0.5).abs() < 1e-12);
    let t = std::fs::read_to_string(trace).unwrap();
    assert!(t.starts_with("packet_id,arrival_time,start_service,departure,delay"));
    assert_eq!(t.lines().count(), 20_001);
}

#[test]
fn queue_validation_rejects_unstable_load() {
    assert_eq!(run(&["validate-queue", "--rho", "1.2"]).status.code(), Some(3));
}

#[test]
fn fitted_gain_reproduces_table_entry() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = TcmConfig::<f64>::default_trellis();
    let mut body = String::from("gamma_db,gain_db\n");
    for i in 0..60 {
        let g_db = 5.0 + 0.5 * i as f64;
        let g = 10f64.powf(g_db / 10.0);
        body += &format!("{g_db},{}\n", 10.0 * cfg.coding_gain(4, g).unwrap().log10());
    }
    let input = write(dir.path(), "samples.csv", &body);
    let out = stdout(&["fit-gain", "--input", &input, "--bits", "4", "--format", "json"]);
    let fitted = TcmConfig::<f64>::from_json_str(&out).unwrap();
    for i in 0..40 {
        let g = 10f64.powf(0.1 * i as f64);
        let (a, b) = (fitted.coding_gain(4, g).unwrap(), cfg.coding_gain(4, g).unwrap());
        assert!((a / b - 1.0).abs() < 1e-5, "{g}: {a} vs {b}");
    }
    let rows = csv_rows(&stdout(&["fit-gain", "--input", &input, "--bits", "4"]));
    assert_eq!(rows[0].join(","), "b,A,C,D,gamma_bar,rms");
}

#[test]
fn fit_gain_rejects_short_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "s.csv", "gamma_db,gain_db\n1,1\n2,1.5\n");
    assert_eq!(run(&["fit-gain", "--input", &input, "--bits", "2"]).status.code(), Some(4));
}
