use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dgns::cli::RunConfig;

fn dgns(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dgns"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn convergence(dir: &Path) -> Output {
    dgns(&[
        "convergence",
        "--n",
        "2,4",
        "--example",
        "ex2",
        "--output",
        dir.to_str().unwrap(),
    ])
}

#[test]
fn convergence_writes_csv_and_parsable_metadata() {
    let tmp = tempfile::tempdir().unwrap();
    let out = convergence(tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("convergence.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "h,energy_err,energy_rate,l2_err,l2_rate,p_err,p_rate");
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[2].split(',').count(), 7);

    let meta = fs::read_to_string(tmp.path().join("metadata.txt")).unwrap();
    let cfg = RunConfig::parse(&meta).unwrap();
    assert_eq!(cfg.meshes, vec![2, 4]);
    assert_eq!(cfg.example.to_string(), "ex2");
    assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
}

#[test]
fn runs_are_bit_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(convergence(a.path()).status.success());
    assert!(convergence(b.path()).status.success());
    let read = |d: &Path| fs::read(d.join("convergence.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn config_file_and_flags_compose() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("run.cfg");
    let out_dir = tmp.path().join("out");
    fs::write(
        &path,
        format!("n = 4\nmu = 0.5   # overridden below\noutput = {}\n", out_dir.display()),
    )
    .unwrap();
    let out = dgns(&[
        "run",
        "--config",
        path.to_str().unwrap(),
        "--mu",
        "2",
        "--set",
        "final_time=0.25",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let cfg = RunConfig::parse(&fs::read_to_string(out_dir.join("metadata.txt")).unwrap()).unwrap();
    assert_eq!(cfg.mu, 2.0);
    assert_eq!(cfg.final_time, 0.25);
    assert_eq!(cfg.meshes, vec![4]);
    assert!(out_dir.join("final.vtk").exists());
}

#[test]
fn bad_input_exits_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tmp.path().to_str().unwrap();
    for args in [
        vec!["run", "--set", "unknown=1", "--output", o],
        vec!["run", "--sigma", "0", "--output", o],
        vec!["run", "--eps", "0.5", "--output", o],
        vec!["run", "--dt", "0.3", "--final-time", "1", "--output", o],
        vec!["run", "--config", "/nonexistent/run.cfg"],
    ] {
        let out = dgns(&args);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn verify_passes() {
    let out = dgns(&["verify", "--seed", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 10);
}

#[test]
fn cavity_writes_centerlines() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tmp.path().to_str().unwrap();
    let out = dgns(&[
        "cavity",
        "--n",
        "4",
        "--dt",
        "0.5",
        "--final-time",
        "5",
        "--mu",
        "0.1",
        "--output",
        o,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let u1 = fs::read_to_string(tmp.path().join("centerline_u1.csv")).unwrap();
    let lines: Vec<&str> = u1.lines().collect();
    assert_eq!(lines[0], "y,u1_unsteady,u1_steady");
    assert_eq!(lines.len(), 102);
    let lid: Vec<f64> = lines[101].split(',').skip(1).map(|v| v.parse().unwrap()).collect();
    assert!(lid.iter().all(|v| (v - 1.0).abs() < 0.2), "{lid:?}");
    for f in [
        "centerline_u2.csv",
        "centerline_p.csv",
        "unsteady.vtk",
        "steady.vtk",
        "metadata.txt",
    ] {
        assert!(tmp.path().join(f).exists(), "{f}");
    }
}

#[test]
fn steady_leaves_unsteady_columns_empty() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tmp.path().to_str().unwrap();
    let out = dgns(&["steady", "--n", "4", "--mu", "0.1", "--output", o]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let p = fs::read_to_string(tmp.path().join("centerline_p.csv")).unwrap();
    let row = p.lines().nth(50).unwrap();
    let cells: Vec<&str> = row.split(',').collect();
    assert_eq!(cells.len(), 3);
    assert!(cells[1].is_empty() && !cells[2].is_empty());
}
