use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use shakn_lab::config::GridChoice;
use shakn_lab::{ConfigError, RunConfig};

const HARMONIC: &str = "\
[model]
nu = 0
[potential]
kind = harmonic
omega = 1
[initial]
x0 = 0.3
v0 = 0.5
a0 = 1
[integrator]
dt = 1e-3
t_end = 1
record_every = 50
[outputs]
times = 0, 0.5, 1
[reference]
dx = 1/64
dt = 2e-4
";

fn shakn(dir: &Path, config: &str, args: &[&str]) -> Output {
    let path = dir.join("run.conf");
    fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_shakn"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .arg("--quiet")
        .output()
        .unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn hasse_preset_sets_half() {
    let cfg = RunConfig::parse(&HARMONIC.replace("nu = 0", "nu = 0.2\npreset = hasse")).unwrap();
    assert_eq!(cfg.params.c(), 0.5);
    assert_eq!(cfg.params.nu(), 0.2);
}

#[test]
fn missing_width_is_named() {
    let err = RunConfig::parse(&HARMONIC.replace("a0 = 1\n", "")).unwrap_err();
    assert!(matches!(&err, ConfigError::Missing { key, line: 6 } if key == "initial.a0"), "{err}");
    assert!(err.to_string().contains("initial.a0"));
}

#[test]
fn auto_grid_follows_spreading_law() {
    let text = "grid = auto\n[initial]\nx0 = 0.5\nv0 = 0.25\na0 = 1\n[integrator]\ndt = 1e-3\nt_end = 2\n";
    let cfg = RunConfig::parse(text).unwrap();
    assert_eq!(cfg.grid, GridChoice::Auto);
    let g = cfg.output_grid().unwrap();
    let q = 0.5 + 0.25 * 2.0;
    let half = 8.0 * 2f64.sqrt();
    assert!((g.x_min() - (q - half)).abs() < 1e-9, "{}", g.x_min());
    assert!((g.x_max() - (q + half)).abs() < 1e-9, "{}", g.x_max());
    assert_eq!(g.len(), 1024);
}

#[test]
fn csv_output_is_deterministic_and_self_describing() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        for sub in ["trajectory", "packet"] {
            assert!(shakn(dir.path(), HARMONIC, &[sub]).status.success());
        }
    }
    for name in ["trajectory.csv", "packet_000.csv", "packet_002.csv"] {
        let x = fs::read(a.path().join("out").join(name)).unwrap();
        let y = fs::read(b.path().join("out").join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
    let traj = fs::read_to_string(a.path().join("out/trajectory.csv")).unwrap();
    assert_eq!(traj.lines().next(), Some("t,q,qdot,a,adot,S0"));
    assert_eq!(traj.lines().count(), 1 + 21);
    let packet = fs::read_to_string(a.path().join("out/packet_000.csv")).unwrap();
    assert_eq!(packet.lines().next(), Some("x,re_psi,im_psi,rho,S,v_qu,theta_qnc,V_qu"));
    let report = json(&a.path().join("out/packet.json"));
    assert_eq!(report["config"]["potential"]["kind"], "harmonic");
    assert_eq!(report["snapshots"].as_array().unwrap().len(), 3);
}

#[test]
fn verify_passes_on_undamped_harmonic() {
    let dir = tempfile::tempdir().unwrap();
    let out = shakn(dir.path(), HARMONIC, &["verify"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("out/verify.json"));
    assert_eq!(report["passed"], true);
    for c in report["convergence"].as_array().unwrap() {
        assert_eq!(c["passed"], true, "{c}");
    }
    for check in report["checks"].as_array().unwrap() {
        for key in ["name", "linf", "l2", "grid_dx", "dt_fd"] {
            assert!(!check[key].is_null(), "{key} in {check}");
        }
    }
}

#[test]
fn compare_meets_tolerance_on_quadratic_potential() {
    let dir = tempfile::tempdir().unwrap();
    let config = HARMONIC.replace("nu = 0", "nu = 0.2\npreset = hasse");
    let out = shakn(dir.path(), &config, &["compare"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("out/compare.json"));
    let worst = report["max_rel_l2"].as_f64().unwrap();
    assert!(worst < 1e-4, "{worst}");
    assert_eq!(report["rows"].as_array().unwrap().len(), 3);
    let table = fs::read_to_string(dir.path().join("out/compare.csv")).unwrap();
    assert!(table.starts_with("t,rel_l2,"));
}

#[test]
fn reference_writes_mean_series() {
    let dir = tempfile::tempdir().unwrap();
    let out = shakn(dir.path(), HARMONIC, &["reference"]);
    assert_eq!(out.status.code(), Some(0));
    let table = fs::read_to_string(dir.path().join("out/reference.csv")).unwrap();
    assert_eq!(table.lines().next(), Some("t,norm,mean_x,mean_p,var_x"));
    let last: Vec<f64> = table.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((last[0] - 1.0).abs() < 1e-12);
    assert!((last[1] - 1.0).abs() < 1e-10);
}

#[test]
fn propagator_kernel_table() {
    let dir = tempfile::tempdir().unwrap();
    let config = format!("{HARMONIC}[propagator]\nn_nodes = 129\nkernel_points = 3\nx0_points = 201\nx_points = 17\n");
    let out = shakn(dir.path(), &config, &["propagator"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(dir.path().join("out/kernel.csv")).unwrap();
    assert_eq!(table.lines().next(), Some("x,x0,t,re_K,im_K,abs_K,envelope_tail"));
    assert_eq!(table.lines().count(), 1 + 9);
    assert!(json(&dir.path().join("out/propagator.json"))["reproduce_rel_l2"].as_f64().unwrap() < 1e-6);
}

#[test]
fn sweep_fans_out_into_subdirectories() {
    let dir = tempfile::tempdir().unwrap();
    let out = shakn(dir.path(), HARMONIC, &["trajectory", "--sweep", "model.nu=0,0.3"]);
    assert!(out.status.success());
    let q = |v: &str| {
        let t = fs::read_to_string(dir.path().join(format!("out/model.nu={v}/trajectory.csv"))).unwrap();
        t.lines().last().unwrap().split(',').nth(1).unwrap().parse::<f64>().unwrap()
    };
    assert_ne!(q("0"), q("0.3"));
}

#[test]
fn error_classes_have_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = shakn(dir.path(), HARMONIC, &["simulate"]);
    assert_eq!(unknown.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("Usage"));

    let bad = shakn(dir.path(), &HARMONIC.replace("omega = 1", "omega = -1"), &["trajectory"]);
    assert_eq!(bad.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("potential.omega"));

    let missing = Command::new(env!("CARGO_BIN_EXE_shakn"))
        .args(["trajectory", "--config", "/nonexistent/run.conf"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(4));

    let leak = HARMONIC.replace("dt = 2e-4\n", "dt = 2e-4\nx_min = -3\nx_max = 3\n");
    assert_eq!(shakn(dir.path(), &leak, &["reference"]).status.code(), Some(7));

    let sweep = shakn(dir.path(), HARMONIC, &["trajectory", "--sweep", "model.nu"]);
    assert_eq!(sweep.status.code(), Some(3));
}
