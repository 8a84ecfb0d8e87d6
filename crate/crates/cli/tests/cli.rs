use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BASE: &str =
    "params.lambda = 1\nparams.chi = 1\nparams.m = 0.5\nparams.eps = 1\nparams.b = 1\n";

fn ks(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ks"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn run(cmd: &str, config: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--config", config, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    ks(&args)
}

#[test]
fn steady_writes_profiles_and_echo() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "a.cfg",
        &format!("{BASE}grid.n = 101\noutput.svg = true\n"),
    );
    let out = dir.path().join("out");
    let o = run("steady", &cfg, &out, &[]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let csv = fs::read_to_string(out.join("profiles.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,U,W,V"));
    assert_eq!(lines.next(), Some("0,0.45,1,0.6"));
    assert_eq!(csv.lines().count(), 102);
    assert!(csv.ends_with('\n') && !csv.contains('\r'));
    let svg = fs::read_to_string(out.join("profiles.svg")).unwrap();
    assert!(svg.contains(r#"viewBox="0 0 800 600""#));
    assert!(out.join("config.echo").is_file());
}

#[test]
fn rerun_from_echo_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "a.cfg",
        &format!("{BASE}grid.n = 201\nperturbation.kind = bump\nsolver.t_final = 2\n"),
    );
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    assert_eq!(run("evolve", &cfg, &first, &[]).status.code(), Some(0));
    let echo = first.join("config.echo").to_str().unwrap().to_string();
    assert_eq!(run("evolve", &echo, &second, &[]).status.code(), Some(0));
    for f in ["timeseries.csv", "summary.txt", "final_profiles.csv"] {
        assert_eq!(
            fs::read(first.join(f)).unwrap(),
            fs::read(second.join(f)).unwrap(),
            "{f} differs"
        );
    }
    let echo_a = fs::read_to_string(first.join("config.echo")).unwrap();
    let echo_b = fs::read_to_string(second.join("config.echo")).unwrap();
    assert_eq!(
        echo_a.replace(first.to_str().unwrap(), ""),
        echo_b.replace(second.to_str().unwrap(), "")
    );
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let unknown = write_config(dir.path(), "u.cfg", "params.chii=1\n");
    let o = run("steady", &unknown, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));

    let missing = write_config(dir.path(), "m.cfg", &BASE.replace("params.b = 1\n", ""));
    let o = run("verify", &missing, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("params.b"));
    assert!(!out.join("verify.txt").exists());
}

#[test]
fn evolve_from_steady_data_converges_immediately() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.cfg", &format!("{BASE}grid.n = 401\n"));
    let out = dir.path().join("out");
    assert_eq!(run("evolve", &cfg, &out, &[]).status.code(), Some(0));
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("converged = yes"));
    let ts = fs::read_to_string(out.join("timeseries.csv")).unwrap();
    assert!(ts.starts_with("t,mass,sup_dev_u,sup_dev_second,L1_dev_u,N_value,energy_L2\n"));
    for row in ts.lines().skip(1) {
        let cols: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        assert!(cols[2] <= 1e-12 && cols[3] <= 1e-12);
    }
}

#[test]
fn bump_run_decays_below_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "a.cfg",
        &format!(
            "{BASE}perturbation.kind = bump\nsolver.t_final = 40\nsolver.convergence_tol = 1e-4\n"
        ),
    );
    let out = dir.path().join("out");
    assert_eq!(run("evolve", &cfg, &out, &[]).status.code(), Some(0));
    let ts = fs::read_to_string(out.join("timeseries.csv")).unwrap();
    let dev: Vec<f64> = ts
        .lines()
        .skip(1)
        .map(|r| r.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert!(*dev.last().unwrap() < 1e-3);
    assert!(dev.last().unwrap() < &(0.1 * dev[0]));
}

#[test]
fn uw_failure_names_the_floor() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("p.csv"),
        "x,du,dv\n0,0,100\n1,0,100\n1.5,0,0\n",
    )
    .unwrap();
    let cfg = write_config(
        dir.path(),
        "a.cfg",
        &format!(
            "{BASE}solver.formulation = uw\nperturbation.kind = file\nperturbation.path = p.csv\n"
        ),
    );
    let out = dir.path().join("out");
    let o = run("evolve", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(3));
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("status = failed"));
    assert!(summary.contains("error = WBelowFloor"));
}

#[test]
fn sweep_marks_invalid_rows_and_rejects_empty_lists() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.cfg", BASE);
    let out = dir.path().join("out");
    let o = run(
        "sweep",
        &cfg,
        &out,
        &["--axis", "eps", "--samples", "1,-1,0.1"],
    );
    assert_eq!(o.status.code(), Some(2));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "value,weak_error,layer_width,U_at_0,W_half_point");
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[2], "-1,invalid,invalid,invalid,invalid");
    assert!(lines[3].starts_with("0.1,"));

    let o = run(
        "sweep",
        &cfg,
        &dir.path().join("empty"),
        &["--axis", "chi", "--samples", ""],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("empty sweep"));
}

#[test]
fn sweep_axis_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "a.cfg",
        &format!("{BASE}sweep.axis = chi\nsweep.samples = 2,8\n"),
    );
    let out = dir.path().join("out");
    assert_eq!(run("sweep", &cfg, &out, &[]).status.code(), Some(0));
    assert_eq!(
        fs::read_to_string(out.join("sweep.csv"))
            .unwrap()
            .lines()
            .count(),
        3
    );
}

#[test]
fn verify_on_coarse_grid_fails_order_items() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.cfg", &format!("{BASE}grid.n = 5\n"));
    let out = dir.path().join("out");
    let o = run("verify", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(1));
    let report = fs::read_to_string(out.join("verify.txt")).unwrap();
    assert!(report.contains("FAIL residual_order_first"));
    assert!(report.contains("FAIL residual_order_second"));
    assert!(report.contains("PASS hardy_battery"));
}

#[test]
fn verify_default_config_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.cfg", BASE);
    let out = dir.path().join("out");
    let o = run("verify", &cfg, &out, &[]);
    let report = fs::read_to_string(out.join("verify.txt")).unwrap();
    assert_eq!(o.status.code(), Some(0), "{report}");
    assert_eq!(report.lines().count(), 9);
    assert!(report.lines().all(|l| l.starts_with("PASS ")));
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.cfg", BASE);
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let o = run("steady", &cfg, &blocker.join("sub"), &[]);
    assert_eq!(o.status.code(), Some(3));
}
