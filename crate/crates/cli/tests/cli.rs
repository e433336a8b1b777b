use std::path::Path;
use std::process::{Command, Output};

use olin_cli::csv_io::{read_sweep, read_trajectories, SLOPE_HEADER};

const CONFIG: &str = r#"
p = 12
s = 2
signal = "strong"
design = "independent"
t0 = [40, 80]
T = 60
seeds = [1, 2]
algorithms = ["olin", "os_lasso", "offline"]
os_lasso_k = [1, 5]
lambda_mode = "oracle"
checkpoint_stride = 20
"#;

fn olin(args: &[&str], config: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_olin"))
        .args(args)
        .arg("--config")
        .arg(config)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("exp.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn run_writes_every_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out = dir.path().join("rows.csv");
    let o = olin(&["run", "--out", out.to_str().unwrap()], &cfg);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# generated "));
    let rows = read_trajectories(text.as_bytes()).unwrap();
    // 2 seeds x 2 t0 x 4 arms x 3 checkpoints
    assert_eq!(rows.len(), 2 * 2 * 4 * 3);
    let labels: std::collections::BTreeSet<_> = rows.iter().map(|r| r.algorithm.as_str()).collect();
    assert_eq!(labels.into_iter().collect::<Vec<_>>(), ["offline", "olin", "os_lasso_k1", "os_lasso_k5"]);
    assert!(rows.iter().all(|r| r.row.t % 20 == 0 && r.row.mse.is_finite()));
}

#[test]
fn stdout_is_the_default_sink() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let o = olin(&["run", "--no-timestamp"], &cfg);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("seed,algorithm,t0,t,"));
    let rows = read_trajectories(text.as_bytes()).unwrap();
    assert!(rows.iter().all(|r| r.row.wall_ms == 0.0));
}

#[test]
fn sweep_reports_each_t0_and_arm() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let o = olin(&["sweep-t0", "--no-timestamp"], &cfg);
    assert!(o.status.success());
    let rows = read_sweep(o.stdout.as_slice()).unwrap();
    assert_eq!(rows.len(), 2 * 4);
    assert!(rows.iter().all(|r| r.n_seeds == 2 && r.sd_mse >= 0.0));
}

#[test]
fn slope_prints_fits_and_points() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &CONFIG.replace("t0 = [40, 80]", "t0 = 40"));
    let o = olin(&["slope", "--no-timestamp"], &cfg);
    assert!(o.status.success());
    let stderr = String::from_utf8(o.stderr).unwrap();
    assert_eq!(stderr.lines().filter(|l| l.starts_with("slope algorithm=")).count(), 4);
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert_eq!(stdout.lines().next().unwrap(), SLOPE_HEADER.join(","));
}

#[test]
fn bad_field_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &CONFIG.replace("seeds = [1, 2]", "seeds = [1, 1]"));
    let o = olin(&["run"], &cfg);
    assert!(!o.status.success());
    assert!(String::from_utf8(o.stderr).unwrap().contains("`seeds`"));
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{CONFIG}\nlambda_sclae = 2.0\n"));
    let o = olin(&["run"], &cfg);
    assert!(!o.status.success());
    assert!(String::from_utf8(o.stderr).unwrap().contains("lambda_sclae"));
}

#[test]
fn missing_config_names_the_path() {
    let o = olin(&["run"], Path::new("/nonexistent/exp.toml"));
    assert!(!o.status.success());
    assert!(String::from_utf8(o.stderr).unwrap().contains("/nonexistent/exp.toml"));
}

#[test]
fn unwritable_output_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let o = olin(&["run", "--out", "/nonexistent/dir/out.csv"], &cfg);
    assert!(!o.status.success());
    assert!(String::from_utf8(o.stderr).unwrap().contains("/nonexistent/dir/out.csv"));
}

#[test]
fn os_lasso_with_tiny_batch_does_not_converge() {
    let c = olin_cli::ExperimentConfig::from_toml_str(
        r#"
p = 200
s = 10
signal = "weak"
design = "independent"
t0 = 50
T = 5000
seeds = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10]
algorithms = ["os_lasso"]
os_lasso_k = [20]
"#,
    )
    .unwrap();
    let (reports, _) = olin_cli::run_slope(&c, olin_cli::RunOptions::default()).unwrap();
    let slope = reports[0].slope;
    assert!(slope > -0.15 && slope <= 0.15, "slope {slope}");
}
