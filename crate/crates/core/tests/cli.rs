use std::path::Path;
use std::process::{Command, Output};

const SCENARIO: &str = r#"{
  "array": { "num_antennas": 21, "aperture_m": 1.0, "carrier_freq_hz": 28e9 },
  "prior": { "d_min_m": 0.0, "d_max_m": 5.0, "theta_deg": 0.0 },
  "snr": { "start_db": -40, "stop_db": 30, "step_db": 5 },
  "engines": ["zzb_known_aoa", "crb_global"]
}"#;

fn nfzzb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nfzzb")).args(args).output().unwrap()
}

fn scenario(dir: &Path, text: &str) -> String {
    let p = dir.join("scenario.json");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn crb_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), SCENARIO);
    let o = nfzzb(&["crb", "--config", &cfg, "--snr-db", "0"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("snr_db,crb_global\n0,"), "{out}");
}

#[test]
fn sweep_is_reproducible_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), SCENARIO);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = nfzzb(&["sweep", "--config", &cfg, "--out", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 15 + 1);
}

#[test]
fn threshold_reports_one_line_per_curve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), SCENARIO);
    let o = nfzzb(&["threshold", "--config", &cfg, "--snr-db=-40:30:1", "--threshold-ratio", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "curve,threshold_db");
    assert!(lines[1].starts_with("distance,"));
    let big = nfzzb(&["threshold", "--config", &cfg, "--snr-db=-40:30:1", "--k", "201"]);
    let t21: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    let t201: f64 = stdout(&big).lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!(t201 < t21);
}

#[test]
fn json_output_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), SCENARIO);
    let out = dir.path().join("curves.json");
    let o = nfzzb(&[
        "zzb", "--config", &cfg, "--format", "json", "--aperture-m", "2", "--k", "41",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let series = v[0]["series"].as_array().unwrap();
    assert_eq!(series.len(), 1);
    assert_eq!(series[0]["name"], "zzb");
    assert_eq!(v[0]["units"], "m^2");

    let o = nfzzb(&["mle", "--config", &cfg, "--snr-db", "20", "--seed", "3", "--engine", "mle"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("mle_mse,mle_stderr"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), SCENARIO);

    let even = nfzzb(&["crb", "--config", &cfg, "--k", "20"]);
    assert_eq!(even.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&even.stderr).contains("even"));
    assert_eq!(nfzzb(&["crb", "--config", &cfg, "--format", "xml"]).status.code(), Some(2));
    assert_eq!(nfzzb(&["crb", "--config", &cfg, "--engine", "foo"]).status.code(), Some(2));
    let missing = dir.path().join("missing.json");
    assert_eq!(nfzzb(&["crb", "--config", missing.to_str().unwrap()]).status.code(), Some(4));

    let blocker = dir.path().join("blocker");
    std::fs::write(&blocker, "").unwrap();
    let out = blocker.join("x.csv");
    assert_eq!(nfzzb(&["crb", "--config", &cfg, "--out", out.to_str().unwrap()]).status.code(), Some(4));

    // A convergence target no grid can meet.
    let strict = SCENARIO.replace(
        "\"engines\"",
        "\"quadrature\": {\"convergence_target\": 1e-12}, \"engines\"",
    );
    let cfg = scenario(dir.path(), &strict);
    let o = nfzzb(&["zzb", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("snr_db,zzb"));
}
