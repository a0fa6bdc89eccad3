use std::path::Path;
use std::process::{Command, Output};

fn emhd(args: &[&str], out: &Path) -> Output {
    emhd_env(args, out, &[])
}

fn emhd_env(args: &[&str], out: &Path, env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_emhd"));
    cmd.args(args).arg("--out").arg(out);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn table(p: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(p).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|x| x.unwrap().iter().map(str::to_string).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&read(&dir.join("manifest.json"))).unwrap()
}

#[test]
fn init_data_is_deterministic_and_echoes_config() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let args = ["init-data", "--lambda", "8", "--n", "512"];
    assert_eq!(code(&emhd(&args, &a)), 0);
    assert_eq!(code(&emhd(&args, &b)), 0);
    assert_eq!(read(&a.join("norms.csv")), read(&b.join("norms.csv")));
    assert_eq!(std::fs::read(a.join("init.ckp")).unwrap(), std::fs::read(b.join("init.ckp")).unwrap());

    let m = manifest(&a);
    assert_eq!(m["subcommand"], "init-data");
    assert_eq!(m["status"], "ok");
    let files: Vec<&str> = m["files"].as_array().unwrap().iter().map(|f| f.as_str().unwrap()).collect();
    for f in ["config.toml", "norms.csv", "init.ckp", "manifest.json"] {
        assert!(files.contains(&f), "{f} missing from {files:?}");
        assert!(a.join(f).exists());
    }

    // Rerunning from the echoed configuration reproduces everything.
    let c = tmp.path().join("c");
    let cfg = a.join("config.toml");
    assert_eq!(code(&emhd(&["init-data", "--config", cfg.to_str().unwrap()], &c)), 0);
    assert_eq!(read(&a.join("norms.csv")), read(&c.join("norms.csv")));
    assert_eq!(manifest(&c)["param_hash"], m["param_hash"]);
}

#[test]
fn invalid_parameters_exit_with_config_code() {
    let tmp = tempfile::tempdir().unwrap();
    let o = emhd(&["init-data", "--beta", "5"], &tmp.path().join("x"));
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("beta"), "{err}");
}

#[test]
fn unknown_config_key_exits_with_config_code() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    std::fs::write(&cfg, "lamda = 8.0\n").unwrap();
    let o = emhd(&["run", "--config", cfg.to_str().unwrap()], &tmp.path().join("x"));
    assert_eq!(code(&o), 2);
}

#[test]
fn coarse_grid_exits_with_resolution_code() {
    let tmp = tempfile::tempdir().unwrap();
    let o = emhd(&["run", "--n", "64", "--t-end", "0"], &tmp.path().join("x"));
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn step_budget_exits_with_numeric_code() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    let o = emhd(&["run", "--max-steps", "2", "--orders", "0"], &out);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = table(&out.join("trajectory.csv"));
    assert_ne!(rows.last().unwrap()[column(&h, "status")], "completed");
    assert_ne!(manifest(&out)["status"], "completed");
}

#[test]
fn zero_length_run_writes_one_row() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    assert_eq!(code(&emhd(&["run", "--t-end", "0"], &out)), 0);
    let (h, rows) = table(&out.join("trajectory.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][column(&h, "t")].parse::<f64>().unwrap(), 0.0);
    assert_eq!(rows[0][column(&h, "status")], "completed");
    assert!(out.join("final.ckp").exists());
}

#[test]
fn inviscid_run_conserves_energy() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    let o = emhd(&["run", "--t-end", "5e-4", "--orders", "0", "--carrier", "false"], &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = table(&out.join("trajectory.csv"));
    let e = column(&h, "energy");
    let e0: f64 = rows[0][e].parse().unwrap();
    for r in &rows {
        let v: f64 = r[e].parse().unwrap();
        assert!(((v - e0) / e0).abs() < 1e-6, "{v} vs {e0}");
    }
}

#[test]
fn frozen_run_tracks_the_carrier() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    let args = [
        "frozen-run",
        "--lambda",
        "4",
        "--n",
        "512",
        "--half-width",
        "1.0625",
        "--t-end",
        "0.01",
        "--orders",
        "0",
        "--output-stride",
        "1000",
    ];
    assert_eq!(code(&emhd(&args, &out)), 0);
    let (h, rows) = table(&out.join("trajectory.csv"));
    let last = rows.last().unwrap();
    let dev: f64 = last[column(&h, "A_H0")].parse().unwrap();
    let abar: f64 = last[column(&h, "abar_H0")].parse().unwrap();
    assert!(dev / abar < 1e-4, "relative deviation {}", dev / abar);
}

#[test]
fn approx_scan_reports_inflation_time() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    let o = emhd(&["approx-scan", "--lambda", "8", "--n", "1024", "--scan-count", "4", "--orders", "0,1"], &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = table(&out.join("scan.csv"));
    assert_eq!(rows.len(), 4);
    let t_n = 8f64.powf(-1.47);
    for r in &rows {
        let v: f64 = r[column(&h, "t_N")].parse().unwrap();
        assert!((v - t_n).abs() < 1e-12 * t_n);
    }
    // The L2 norm of the carrier does not depend on time.
    let (h, fits) = table(&out.join("fits.csv"));
    let slope: f64 = fits[0][column(&h, "slope")].parse().unwrap();
    assert!(slope.abs() < 1e-6, "{slope}");
}

#[test]
fn region_queries() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    assert_eq!(code(&emhd(&["region", "--region-betas", "7/2", "--region-gammas", "1.2,1.45"], &out)), 0);
    let (h, rows) = table(&out.join("region.csv"));
    assert_eq!(rows.len(), 2);
    let adm = column(&h, "admissible");
    assert_eq!(rows[0][adm], "true");
    assert_eq!(rows[1][adm], "false");
    let exact = emhd_core::region::parse_rational(&rows[0][column(&h, "zeta_lower")]).unwrap();
    let float: f64 = rows[0][column(&h, "zeta_lower_float")].parse().unwrap();
    assert!((emhd_core::region::to_f64(&exact) - float).abs() < 1e-15);

    let empty = tmp.path().join("e");
    assert_eq!(code(&emhd(&["region", "--region-betas", "", "--region-gammas", ""], &empty)), 0);
    let text = read(&empty.join("region.csv"));
    assert_eq!(text.lines().count(), 1, "{text}");
    assert!(text.starts_with("beta,gamma,"));
}

#[test]
fn sweep_is_independent_of_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["sweep", "--sweep-lambdas", "8,16", "--n", "1024", "--sweep-mode", "approx"];
    let serial = tmp.path().join("s");
    let parallel = tmp.path().join("p");
    assert_eq!(code(&emhd_env(&args, &serial, &[("EMHD_WORKERS", "1")])), 0);
    assert_eq!(code(&emhd_env(&args, &parallel, &[("EMHD_WORKERS", "2")])), 0);
    let text = read(&serial.join("sweep.csv"));
    assert_eq!(text, read(&parallel.join("sweep.csv")));
    let (h, rows) = table(&serial.join("sweep.csv"));
    let lam = column(&h, "lambda");
    assert_eq!(rows[0][lam], "8.0");
    assert_eq!(rows[1][lam], "16.0");
}

#[test]
fn single_member_sweep_matches_direct_run() {
    let tmp = tempfile::tempdir().unwrap();
    let common = ["--lambda", "8", "--t-end", "2e-4", "--orders", "0,2.5,3.5"];
    let direct = tmp.path().join("d");
    let mut args = vec!["run"];
    args.extend(common);
    assert_eq!(code(&emhd(&args, &direct)), 0);

    let sweep = tmp.path().join("s");
    let mut args = vec!["sweep", "--sweep-lambdas", "8", "--sweep-mode", "run"];
    args.extend(common);
    assert_eq!(code(&emhd(&args, &sweep)), 0);
    let member = sweep.join("member_000");
    assert_eq!(read(&direct.join("trajectory.csv")), read(&member.join("trajectory.csv")));
    assert_eq!(std::fs::read(direct.join("final.ckp")).unwrap(), std::fs::read(member.join("final.ckp")).unwrap());
}

#[test]
fn bad_worker_count_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = emhd_env(&["sweep", "--sweep-lambdas", "8"], &tmp.path().join("x"), &[("EMHD_WORKERS", "zero")]);
    assert_eq!(code(&o), 2);
}
