use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_irs-outage")).args(args).output().unwrap()
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn op_defaults_to_reference_scenario() {
    let out = run(&["op"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("# antennas = 8"));
    assert!(text.contains("# elements = 50"));
    assert!(text.contains("# moment_forms = x2=corrected z2=corrected xz=corrected"));
    assert!(text.contains("# mc_trials = none"));
    let lines = data_lines(&text);
    assert_eq!(lines[0], "variable,value,threshold_db,user,analytic_op,empirical_op,empirical_se,status");
    assert_eq!(lines.len(), 11);
    for l in &lines[1..] {
        let cols: Vec<&str> = l.split(',').collect();
        let p: f64 = cols[4].parse().unwrap();
        assert!((0.0..=1.0).contains(&p));
        assert_eq!((cols[5], cols[6], cols[7]), ("", "", "ok"));
    }
}

#[test]
fn op_overlay_and_user_selection() {
    let out = run(&["op", "--user", "2", "--threshold-db=-3,3", "--trials", "2000"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines = data_lines(&text);
    assert_eq!(lines.len(), 3);
    for l in &lines[1..] {
        let cols: Vec<&str> = l.split(',').collect();
        assert_eq!(cols[3], "2");
        let p: f64 = cols[5].parse().unwrap();
        assert!((0.0..=1.0).contains(&p));
    }
}

#[test]
fn flags_override_file_and_file_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[system]\nantennas = 4\nelements = 12\n");
    let out = run(&["op", "--config", &cfg, "--antennas", "2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("# antennas = 2"));
    assert!(text.contains("# elements = 12"));
}

#[test]
fn sweep_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "s.toml",
        "[sweep]\nvariable = \"n_elements\"\ngrid = [10.0, 50.0, 100.0]\nthresholds_db = [0.0]\nusers = [0]\n",
    );
    let csv = dir.path().join("out.csv");
    let out = run(&["sweep", "--config", &cfg, "-o", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(csv).unwrap();
    let ops: Vec<f64> = data_lines(&text)[1..]
        .iter()
        .map(|l| l.split(',').nth(4).unwrap().parse().unwrap())
        .collect();
    assert_eq!(ops.len(), 3);
    assert!(ops[0] > ops[1] && ops[1] > ops[2]);
}

#[test]
fn configuration_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "[system]\nantennas = 0\n");
    assert_eq!(run(&["op", "--config", &bad]).status.code(), Some(2));
    let unknown = write(dir.path(), "unknown.toml", "[system]\nantenas = 4\n");
    assert_eq!(run(&["op", "--config", &unknown]).status.code(), Some(2));
    assert_eq!(run(&["op", "--config", "/nonexistent/x.toml"]).status.code(), Some(2));
    assert_eq!(run(&["sweep", "--variable", "bogus", "--grid", "1"]).status.code(), Some(2));
    assert_eq!(run(&["sweep", "--variable", "irs_x", "--grid", "5,1"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--trials", "10"]).status.code(), Some(2));
}

#[test]
fn infeasible_points_exit_with_3_and_keep_partial_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "g.toml",
        "[system]\nusers = 2\n[geometry]\nusers = [[50.0, 5.0], [60.0, 0.0]]\n",
    );
    let csv = dir.path().join("out.csv");
    let out = run(&["sweep", "--config", &cfg, "--variable", "irs_x", "--grid", "0,50", "-o", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let text = fs::read_to_string(csv).unwrap();
    let lines = data_lines(&text);
    assert_eq!(lines.len(), 5);
    assert!(lines[1].ends_with(",ok") && lines[2].ends_with(",ok"));
    assert!(lines[3].contains("error: domain error"));
}

#[test]
fn compensate_reports_delta_and_unreachable_targets() {
    let out = run(&["compensate", "--user", "6", "--moved-x", "0"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines = data_lines(&text);
    assert_eq!(lines[0], "user,reference_x,reference_elements,reference_op,moved_x,moved_elements,moved_op,delta");
    assert!(lines[1].starts_with("6,") && lines[1].ends_with(",50,") == false && lines[1].ends_with(",0"));

    let out = run(&["compensate", "--target", "1e-9", "--n-max", "200"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unreachable"));
}

#[test]
fn verify_writes_text_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("v.csv");
    let out = run(&["verify", "--instance", "1,1,2", "--instance", "2,2,3", "--trials", "20000", "-o", csv.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("instance M=1 N=1 K=2"));
    assert!(text.contains("instance M=2 N=2 K=3"));
    assert!(text.contains("E[XZ] printed C (alpha_rj)"));
    let table = fs::read_to_string(csv).unwrap();
    assert!(table.contains("# pipeline_default = x2=corrected z2=corrected xz=corrected"));
    let lines = data_lines(&table);
    assert_eq!(lines[0], "M,N,K,user,trials,seed,formula,closed_form,estimate,std_error,z,verdict");
    assert_eq!(lines.len(), 1 + 2 * 16);
}

#[test]
fn same_seed_same_bytes() {
    let args = ["sweep", "--variable", "threshold_db", "--grid=-5,0,5", "--trials", "5000", "--seed", "3"];
    let a = run(&args);
    let b = run(&[&args[..], &["--workers", "3"]].concat());
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["sweep", "--variable", "threshold_db", "--grid=-5,0,5", "--trials", "5000", "--seed", "4"]);
    assert_ne!(a.stdout, c.stdout);
}
