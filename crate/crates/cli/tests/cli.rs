use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn bresse(args: &[&str], scenario: Option<&Path>, out: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bresse"));
    cmd.arg("--out").arg(out).env_remove("BRESSE_THREADS");
    if let Some(s) = scenario {
        cmd.arg("--scenario").arg(s);
    }
    cmd.args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn missing_scenario_file_exits_2_and_names_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = bresse(&["simulate"], Some(Path::new("no/such/file.toml")), dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no/such/file.toml"), "{}", stderr(&o));
}

#[test]
fn invalid_scenario_lists_violations() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenario("row4-shear-only.toml"))
        .unwrap()
        .replace("rho1 = 1.0", "rho1 = -1.0")
        .replace("seed = 7", "seed = 7\nbogus = 3");
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, text).unwrap();
    let o = bresse(&["simulate"], Some(&path), &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bogus"), "{}", stderr(&o));
}

#[test]
fn sweep_above_cap_is_refused_with_suggested_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let o = bresse(&["sweep", "--lmax", "1000"], Some(&scenario("row4-shear-only.toml")), dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("cap") && err.contains("elements"), "{err}");
}

#[test]
fn witness_refuses_full_dirichlet() {
    let dir = tempfile::tempdir().unwrap();
    let o = bresse(&["witness"], Some(&scenario("row1-global-kv.toml")), dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("DNND"), "{}", stderr(&o));
}

#[test]
fn witness_refuses_single_mode() {
    let dir = tempfile::tempdir().unwrap();
    let o = bresse(&["witness", "--modes", "8"], Some(&scenario("witness.toml")), dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn witness_reports_exponents() {
    let dir = tempfile::tempdir().unwrap();
    let o = bresse(&["witness"], Some(&scenario("witness.toml")), dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("witness.txt")).unwrap();
    let p: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("p="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(p > 0.0, "{text}");
    assert!(text.contains("lack_of_uniform_stability_indicated="));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let s = scenario("row4-shear-only.toml");
    for dir in [a.path(), b.path()] {
        let o = bresse(&["--elements", "30", "simulate", "--tmax", "2"], Some(&s), dir);
        assert!(o.status.success(), "{}", stderr(&o));
        let o = bresse(&["--elements", "30", "sweep", "--samples", "12"], Some(&s), dir);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["trace.csv", "sweep.csv"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
}

#[test]
fn global_damping_decays_exponentially() {
    let dir = tempfile::tempdir().unwrap();
    let o = bresse(&["simulate"], Some(&scenario("row1-global-kv.toml")), dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("model=exponential"), "{}", stdout(&o));
    let csv = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(csv.starts_with("t,energy,dissipation\n"));
    assert!(csv.contains("# model=exponential"));
    assert!(csv.lines().last().unwrap().starts_with("# manifest="));
}

#[test]
fn undamped_fit_is_flagged_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let o = bresse(&["simulate"], Some(&scenario("undamped.toml")), dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("degenerate"), "{}", stdout(&o));
}

#[test]
fn classify_reads_back_a_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario("row1-global-kv.toml");
    let o = bresse(&["--elements", "40", "sweep"], Some(&s), dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let input = dir.path().join("sweep.csv");
    let c = bresse(&["classify", "--input", input.to_str().unwrap()], None, dir.path());
    assert!(c.status.success(), "{}", stderr(&c));
    assert_eq!(stdout(&c), stdout(&o));
}

#[test]
fn classify_rejects_unknown_csv() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.csv");
    std::fs::write(&input, "a,b\n1,2\n").unwrap();
    let o = bresse(&["classify", "--input", input.to_str().unwrap()], None, dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn report_collects_outputs_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = bresse(&["--elements", "30", "spectrum"], Some(&scenario("dnnd-local.toml")), dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let r = bresse(&["report"], None, dir.path());
    assert!(r.status.success(), "{}", stderr(&r));
    let md = std::fs::read_to_string(dir.path().join("report.md")).unwrap();
    assert!(md.contains("## Spectrum") && md.contains("manifest_hash="), "{md}");
}

#[test]
fn report_on_empty_directory_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = bresse(&["report"], None, dir.path());
    assert_eq!(o.status.code(), Some(2));
}
