use std::path::Path;
use std::process::{Command, Output};

fn fracwave(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracwave"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env("FRACWAVE_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).expect("csv exists");
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|x| x.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn manifest(dir: &Path, command: &str) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join(format!("{command}.manifest.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

const COMMON: [&str; 10] = [
    "alpha", "n", "p", "estimator", "mean", "stderr", "n_samples", "seed", "ess", "table_hash",
];

#[test]
fn constants_prints_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = fracwave(dir.path(), &["constants", "--alpha", "0.9", "--n", "64", "--potential", "preset:quartic"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let t: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((t["sigma_sq"].as_f64().unwrap() - 0.7957747).abs() < 1e-7);
    assert_eq!(t["n"], 64);
    let (_, rows) = read_csv(&dir.path().join("constants.csv"));
    assert_eq!(rows.len(), 1);
    let m = manifest(dir.path(), "constants");
    assert_eq!(m["status"], "ok");
    assert_eq!(m["schema_version"], 1);
    assert!(m["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert_eq!(m["threads"], 1);
    assert_eq!(m["renorm_tables"][0]["hash"].as_str().unwrap(), &rows[0][9]);
}

#[test]
fn violating_potential_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = fracwave(dir.path(), &["validate-potential", "--potential", "preset:violating"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("averaged-positivity"), "{err}");
    let m = manifest(dir.path(), "validate-potential");
    assert_eq!(m["status"], "failed");
    assert_eq!(m["exit_code"], 2);
    let (_, rows) = read_csv(&dir.path().join("validation.csv"));
    let pos = rows.iter().find(|r| r[1] == "averaged-positivity").unwrap();
    assert_eq!(pos[2], "false");
}

#[test]
fn tuned_potential_validates() {
    let dir = tempfile::tempdir().unwrap();
    let out = fracwave(dir.path(), &["validate-potential", "--potential", "sextic"]);
    assert!(out.status.success());
}

#[test]
fn gibbs_z_ladder_has_one_row_per_cutoff() {
    let dir = tempfile::tempdir().unwrap();
    let out = fracwave(dir.path(), &["gibbs-z", "--p", "1", "--ladder", "8,16,32,64", "--samples", "300"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("gibbs_z.csv"));
    assert_eq!(header, COMMON);
    assert_eq!(rows.len(), 4);
    let ns: Vec<&str> = rows.iter().map(|r| r[1].as_str()).collect();
    assert_eq!(ns, ["8", "16", "32", "64"]);
    let m = manifest(dir.path(), "gibbs-z");
    let verdict = m["summary"]["verdict"].as_str().unwrap();
    assert!(verdict == "bounded" || verdict == "not-bounded");
    assert_eq!(m["renorm_tables"].as_array().unwrap().len(), 4);
}

#[test]
fn degenerate_weights_exit_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"mc": {"samples": 50, "ess_min": 1.0}, "n_ladder": [16]}"#).unwrap();
    let out = fracwave(dir.path(), &["gibbs-z", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn schema_errors_name_the_pointer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"dynamics": {"stride": 0}}"#).unwrap();
    let out = fracwave(dir.path(), &["constants", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/dynamics/stride"));
}

#[test]
fn rerun_reproduces_tables_bit_for_bit() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let out = fracwave(a.path(), &["sample-stats", "--ladder", "8,16", "--samples", "200", "--seeds", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = a.path().join("sample-stats.manifest.json");
    let out = fracwave(b.path(), &["rerun", m.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["sample_stats.csv", "tail.csv"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
    let ma = manifest(a.path(), "sample-stats");
    let mb = manifest(b.path(), "sample-stats");
    assert_eq!(ma["files"], mb["files"]);
    assert_eq!(ma["config"]["potential"], mb["config"]["potential"]);
}

#[test]
fn counterexample_grows_for_violating_preset() {
    let dir = tempfile::tempdir().unwrap();
    let out = fracwave(dir.path(), &["counterexample", "--potential", "violating", "--ladder", "16,32,64"]);
    assert!(out.status.success());
    let (_, rows) = read_csv(&dir.path().join("counterexample.csv"));
    let bounds: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    assert!(bounds.windows(2).all(|w| w[1] < w[0] && w[0] < 0.0));
    // positivity holds for the tuned quartic, so there is no counterexample
    let out = fracwave(dir.path(), &["counterexample", "--potential", "quartic", "--ladder", "16"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn evolve_and_variational_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = fracwave(dir.path(), &["evolve", "--n", "8", "--potential", "sextic"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, rows) = read_csv(&dir.path().join("evolve.csv"));
    // t_final 1, dt 1e-3, stride 10: outputs at 0, 0.01, ..., 1
    assert_eq!(rows.len(), 101);
    let out = fracwave(dir.path(), &["variational", "--ladder", "8", "--max-iterations", "20"]);
    assert!(out.status.success());
    let (_, rows) = read_csv(&dir.path().join("variational.csv"));
    let (init, fin): (f64, f64) = (rows[0][4].parse().unwrap(), rows[0][5].parse().unwrap());
    assert!(fin <= init);
}

#[test]
fn dispersive_and_oracles_run_small() {
    let dir = tempfile::tempdir().unwrap();
    let out = fracwave(dir.path(), &["dispersive", "--blocks", "2,3", "--times", "0.5,1"]);
    assert!(out.status.success());
    let (_, rows) = read_csv(&dir.path().join("dispersive_kernel.csv"));
    assert_eq!(rows.len(), 4);
    let out = fracwave(dir.path(), &["oracles", "--truncation", "16", "--k0", "0,1,2,4", "--ladder", "4,8"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, rows) = read_csv(&dir.path().join("oracles_wick.csv"));
    assert_eq!(rows.len(), 6);
}

#[test]
fn dynamics_commands_run_small() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"potential": {"preset": "sextic"}, "n_ladder": [4, 8], "seeds": [1, 2],
            "mc": {"samples": 200},
            "dynamics": {"dt": 0.01, "t_final": 0.2, "stride": 5}}"#,
    )
    .unwrap();
    let c = cfg.to_str().unwrap();
    let out = fracwave(dir.path(), &["converge-dynamics", "--config", c]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, rows) = read_csv(&dir.path().join("converge_dynamics.csv"));
    assert_eq!(rows.len(), 4);
    let out = fracwave(dir.path(), &["invariance", "--config", c, "--n", "8", "--t-probe", "0.1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, rows) = read_csv(&dir.path().join("invariance.csv"));
    assert_eq!(rows.len(), 3);
    let out = fracwave(dir.path(), &["gibbs-converge", "--config", c]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("gibbs_converge.csv"));
    assert_eq!(header, COMMON);
    assert_eq!(rows.len(), 2);
}
