use std::path::Path;
use std::process::{Command, Output};

fn rapidmix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rapidmix"))
        .args(args)
        .env_remove("RAPIDMIX_THREADS")
        .output()
        .expect("binary runs")
}

fn out_arg(dir: &Path) -> String {
    dir.to_string_lossy().into_owned()
}

fn manifest(dir: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join("manifest.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

const MINIMAL: &str = r#"{
  "graph": {"kind": "chain", "n": 4},
  "model": {"kind": "ising", "beta": 0.5}
}"#;

#[test]
fn verify_minimal_chain_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), MINIMAL);
    let out = tmp.path().join("out");
    let r = rapidmix(&["verify", "--config", &cfg, "--out", &out_arg(&out)]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let csv = std::fs::read_to_string(out.join("verify.csv")).unwrap();
    assert!(csv.starts_with("suite,check,value,tolerance,status"));
    assert!(!csv.contains(",fail"));
    let m = manifest(&out);
    assert_eq!(m["experiments"][0]["status"], "passed");
    let files = m["files"].as_array().unwrap();
    assert!(files.iter().any(|f| f["path"] == "verify.csv"));
    assert!(files.iter().any(|f| f["path"] == "report.md"));
    for f in files {
        let bytes = std::fs::read(out.join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(f["bytes"].as_u64().unwrap(), bytes.len() as u64);
        assert_eq!(f["sha256"].as_str().unwrap().len(), 64);
    }
    assert!(m["tolerances"]["chain_rule"].as_f64().unwrap() > 0.0);
}

#[test]
fn negative_beta_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"graph": {"kind": "chain", "n": 4}, "model": {"kind": "ising", "beta": -1}}"#);
    let r = rapidmix(&["verify", "--config", &cfg, "--out", &out_arg(tmp.path())]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("model.beta"));
}

#[test]
fn unknown_keys_report_their_path() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"graph": {"kind": "chain", "n": 4, "radius": 2}}"#);
    let r = rapidmix(&["verify", "--config", &cfg]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("graph.radius"));
    let r = rapidmix(&["mix", "--set", "davies.chi=boltzmann"]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("davies.chi"));
}

#[test]
fn flag_override_wins_and_is_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), MINIMAL);
    let out = tmp.path().join("out");
    let r = rapidmix(&["verify", "--config", &cfg, "--set", "model.beta=0.3", "--out", &out_arg(&out)]);
    assert_eq!(r.status.code(), Some(0));
    let m = manifest(&out);
    assert_eq!(m["config"]["model"]["beta"].as_f64(), Some(0.3));
    let ov: Vec<&str> = m["overrides"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(ov.contains(&"model.beta=0.3"));
}

#[test]
fn resource_limits_exit_three() {
    let tmp = tempfile::tempdir().unwrap();
    let r = rapidmix(&["verify", "--set", "graph.n=6", "--out", &out_arg(tmp.path())]);
    assert_eq!(r.status.code(), Some(3));
    let m = manifest(tmp.path());
    assert_eq!(m["experiments"][0]["status"], "failed");
    let r = rapidmix(&["verify", "--set", "graph.n=13", "--out", &out_arg(tmp.path())]);
    assert_eq!(r.status.code(), Some(3));
    let r = rapidmix(&["verify", "--set", "limits.max_hilbert_dim=100000"]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn scan_emits_six_measures_with_fit_rows_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |dir: &Path, threads: &str| {
        let r = rapidmix(&[
            "scan-clustering",
            "--set",
            "graph.n=8",
            "--set",
            "model.g=0.5",
            "--threads",
            threads,
            "--out",
            &out_arg(dir),
        ]);
        assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
        std::fs::read(dir.join("scan_clustering.csv")).unwrap()
    };
    let a = run(&tmp.path().join("a"), "1");
    let b = run(&tmp.path().join("b"), "1");
    let c = run(&tmp.path().join("c"), "3");
    assert_eq!(a, b);
    assert_eq!(a, c);
    let text = String::from_utf8(a).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    let fits: Vec<&csv::StringRecord> = rows.iter().filter(|r| &r[2] == "fit").collect();
    assert_eq!(fits.len(), 6);
    for f in fits {
        let r2: f64 = f[9].parse().unwrap();
        assert!(r2 >= 0.9, "{f:?}");
    }
    let report = std::fs::read_to_string(tmp.path().join("a/report.md")).unwrap();
    assert!(report.contains("scan_clustering.csv"));
}

#[test]
fn mix_on_one_qubit_at_infinite_temperature() {
    let tmp = tempfile::tempdir().unwrap();
    let r = rapidmix(&["mix", "--set", "graph.n=1", "--set", "model.beta=0", "--out", &out_arg(tmp.path())]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let text = std::fs::read_to_string(tmp.path().join("mix.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(
        rdr.headers().unwrap().iter().collect::<Vec<_>>(),
        ["eps", "t_mix", "gap", "gap_bound", "horizon", "within_bound"]
    );
    let row = rdr.records().next().unwrap().unwrap();
    let t: f64 = row[1].parse().unwrap();
    let bound: f64 = row[3].parse().unwrap();
    assert!(t > 0.0 && t <= bound);
    assert_eq!(&row[5], "true");
}

#[test]
fn report_regenerates_from_csvs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_arg(tmp.path());
    assert_eq!(rapidmix(&["davies-gap", "--set", "graph.n=3", "--out", &out]).status.code(), Some(0));
    let first = std::fs::read(tmp.path().join("report.md")).unwrap();
    std::fs::remove_file(tmp.path().join("report.md")).unwrap();
    assert_eq!(rapidmix(&["report", "--out", &out]).status.code(), Some(0));
    assert_eq!(std::fs::read(tmp.path().join("report.md")).unwrap(), first);
    let empty = tempfile::tempdir().unwrap();
    assert_eq!(rapidmix(&["report", "--out", &out_arg(empty.path())]).status.code(), Some(2));
}
