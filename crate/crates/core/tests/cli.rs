//! End-to-end runs of the `fracdyn` command line.

use std::fs;
use std::path::Path;
use std::process::Command;

use fracdyn::cli::main_with_args;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fracdyn"))
}

fn run(args: &[&str], out: &Path) -> i32 {
    let mut argv = vec!["fracdyn"];
    argv.extend_from_slice(args);
    argv.extend_from_slice(&["--out", out.to_str().unwrap()]);
    main_with_args(argv)
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&read(dir, "manifest.json")).unwrap()
}

const SMALL_RUNS: &[&[&str]] = &[
    &["equilibria"],
    &["integrate", "--T", "4"],
    &["stability-surface", "--grid", "5x4"],
    &["divergence", "--grid", "6x5"],
    &["lyapunov", "--T", "12", "--h-norm", "0.5", "--config-skip"],
    &["basin", "--grid", "3x3", "--T", "10", "--jobs", "2"],
];

#[test]
fn identical_configs_give_identical_files() {
    let cfg_dir = tempfile::tempdir().unwrap();
    let cfg = cfg_dir.path().join("run.toml");
    fs::write(&cfg, "[lyapunov]\ntransient_skip = 2.0\n").unwrap();
    for args in SMALL_RUNS {
        let args: Vec<&str> = args
            .iter()
            .flat_map(|a| match *a {
                "--config-skip" => vec!["--config", cfg.to_str().unwrap()],
                a => vec![a],
            })
            .collect();
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let code_a = run(&args, a.path());
        let code_b = run(&args, b.path());
        assert_eq!(code_a, code_b, "{args:?}");
        assert!(code_a == 0 || code_a == 4, "{args:?} exited {code_a}");
        let (ma, mb) = (manifest(a.path()), manifest(b.path()));
        assert_eq!(ma["outputs"], mb["outputs"], "{args:?}");
        assert_eq!(ma["summary"], mb["summary"], "{args:?}");
        for out in ma["outputs"].as_array().unwrap() {
            let name = out["file"].as_str().unwrap();
            assert_eq!(
                fs::read(a.path().join(name)).unwrap(),
                fs::read(b.path().join(name)).unwrap(),
                "{name}"
            );
        }
    }
}

#[test]
fn zero_model_keeps_columns_constant() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("zero.toml");
    fs::write(&cfg, "model = \"zero\"\n[integrator]\nT = 2.0\nx0 = [0.5, -1.25]\n").unwrap();
    let out = dir.path().join("out");
    assert_eq!(run(&["integrate", "--config", cfg.to_str().unwrap()], &out), 0);
    let table = read(&out, "trajectory.csv");
    assert!(table.starts_with("# t [time],x1 [-],x2 [-]\n"));
    let rows = rows(&table);
    assert_eq!(rows.len(), 101);
    for r in &rows {
        assert_eq!(r[1].parse::<f64>().unwrap(), 0.5);
        assert_eq!(r[2].parse::<f64>().unwrap(), -1.25);
    }
}

#[test]
fn equilibria_report_values() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["equilibria", "--p", "1.2"], dir.path()), 0);
    let rows = rows(&read(dir.path(), "equilibria.csv"));
    let x: Vec<f64> = rows[0][1..4].iter().map(|v| v.parse().unwrap()).collect();
    for (got, want) in x.iter().zip([-1.3290, -0.7525, 1.7662]) {
        assert!((got - want).abs() < 5e-5, "{got} vs {want}");
    }
    assert_eq!(rows[0][15], "asymptotically-stable");

    assert_eq!(run(&["equilibria", "--p", "2"], dir.path()), 0);
    for r in rows_of(dir.path(), "equilibria.csv") {
        assert!(r[16].parse::<f64>().unwrap() < 1e-9);
    }
}

fn rows_of(dir: &Path, name: &str) -> Vec<Vec<String>> {
    rows(&read(dir, name))
}

#[test]
fn unknown_config_key_exits_2_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "p = 5.0\n[basin]\nresolution = 10\n").unwrap();
    let out = dir.path().join("out");
    let status = bin()
        .args(["basin", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&status.stderr).contains("resolution"));
    assert!(!out.exists());
}

#[test]
fn invalid_values_exit_2_before_computing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    for args in [
        &["integrate", "--q", "1.5"][..],
        &["integrate", "--x0", "1,2"],
        &["basin", "--grid", "1x9"],
        &["lyapunov", "--T", "50"],
        &["divergence", "--window", "-1,1,0.1,1"],
        &["equilibria", "--p", "-3"],
        &["stability-surface", "--jobs", "0"],
    ] {
        assert_eq!(run(args, &out), 2, "{args:?}");
        assert!(!out.exists(), "{args:?} wrote outputs");
    }
}

#[test]
fn divergence_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    assert_eq!(run(&["integrate", "--x0", "100,100,100", "--T", "5"], &out), 3);
    assert!(!out.exists());
}

#[test]
fn basin_without_ha_cells_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "basin",
        "--window=-2.2797,-2.2777,-0.4398,-0.4378",
        "--grid",
        "2x2",
        "--T",
        "60",
    ];
    assert_eq!(run(&args, dir.path()), 4);
    let m = manifest(dir.path());
    assert_eq!(m["summary"]["verdict"], "inconclusive");
    assert_eq!(m["summary"]["counts"]["E1"], 4);
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["equilibria"])
        .env("FRACDYN_OUT", dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.path().join("equilibria.csv").exists());
}

#[test]
fn surface_tables_for_zero_model() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.toml");
    fs::write(
        &cfg,
        "model = \"zero\"\np_range = [1.0, 2.0]\np_steps = 2\nq_range = [0.5, 0.9]\nq_steps = 2\n\
         [integrator]\nh = 0.1\nT = 8.0\nx0 = [0.1, 0.2]\n[lyapunov]\ntransient_skip = 1.0\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    assert_eq!(run(&["lyapunov-surface", "--config", cfg.to_str().unwrap()], &out), 0);
    let mask = read(&out, "chaos_mask.csv");
    assert!(mask.starts_with("# p [-],q [-],chaotic [bool]\n"));
    assert!(rows(&mask).iter().all(|r| r[2] == "0"));
    let l1 = rows_of(&out, "lyapunov_surface_lambda1.csv");
    assert_eq!(l1.len(), 4);
    assert_eq!(l1[0][2], "0.0000000000000000e0");
    assert!(out.join("lyapunov_surface_lambda2.csv").exists());
}
