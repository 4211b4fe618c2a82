use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn dmd(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dmd"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("run dmd")
}

/// CSV records with the provenance comments skipped.
fn rows(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    csv::Reader::from_reader(body.as_bytes())
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}

fn value(rows: &[Vec<String>], quantity: &str) -> String {
    rows.iter()
        .find(|r| r[r.len() - 3] == quantity)
        .map(|r| r[r.len() - 2].clone())
        .unwrap_or_else(|| panic!("no {quantity}"))
}

#[test]
fn cost_logical_reports_74_qubits_for_the_22_site_preset() {
    let dir = tempfile::tempdir().unwrap();
    let o = dmd(&["cost-logical", "--scenario", scenario("coe-min-22.json").to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&dir.path().join("cost-logical.csv"));
    assert_eq!(value(&r, "logical_qubits"), "74");
    assert_eq!(value(&r, "qsp_degree"), "330");
}

#[test]
fn heisenberg_fit_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let o = dmd(&["dmd-fit", "--scenario", scenario("heisenberg-chain6-fit.json").to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&dir.path().join("dmd-fit.csv"));
    let res: f64 = value(&r, "max_residual").parse().unwrap();
    assert!(res < 1e-9, "{res}");
    let g: f64 = value(&r, "coupling").parse().unwrap();
    assert!((g - 1.0 / 3.0).abs() < 1e-9, "{g}");
}

#[test]
fn unknown_key_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, r#"{"logical": {"method": "coe", "qubits": 3}}"#).unwrap();
    let o = dmd(&["cost-logical", "--scenario", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("qubits"));
}

#[test]
fn missing_block_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = dmd(&["model-ed", "--scenario", scenario("coe-min-22.json").to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn oversized_sector_hits_the_resource_cap() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("big.json");
    fs::write(
        &path,
        r#"{"model": {"lattice": {"sites": 8, "geometry": "chain", "boundary": "open", "electrons": 8},
            "hamiltonian": {"kind": "hubbard", "t": 1.0, "u": 4.0}, "dimension_cap": 1000}}"#,
    )
    .unwrap();
    let o = dmd(&["model-ed", "--scenario", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn failed_residual_assertion_exits_3_after_writing() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("noisy.json");
    fs::write(
        &path,
        r#"{"model": {"lattice": {"sites": 4, "geometry": "chain", "boundary": "open", "electrons": 4},
            "hamiltonian": {"kind": "heisenberg", "j": 1.0}, "all_sectors": true},
           "dmd": {"pool": [{"kind": "total-spin-spin"}], "noise": 0.1, "max_residual": 1e-6}}"#,
    )
    .unwrap();
    let o = dmd(&["dmd-fit", "--scenario", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(dir.path().join("dmd-fit.csv").exists());
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let sc = scenario("hubbard-chain4-project.json");
    for d in [a.path(), b.path()] {
        let o = dmd(&["project-sim", "--seed", "7", "--scenario", sc.to_str().unwrap()], d);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["project-sim.csv", "project-sim.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn reproduce_table2_writes_every_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = dmd(&["reproduce-table2"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&dir.path().join("reproduce-table2.csv"));
    assert_eq!(r.len(), 5 + 48);
    let logical: Vec<_> = r.iter().filter(|x| x[0] == "logical").collect();
    assert!(logical.iter().all(|x| x[7] == x[8]), "logical qubit counts");
}
