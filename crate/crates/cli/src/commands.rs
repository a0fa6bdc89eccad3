use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use emhd_core::approx::{log_times, ApproxSolution};
use emhd_core::checkpoint::Checkpoint;
use emhd_core::diagnostics::{self, inflation_report, RecorderConfig, Trajectory};
use emhd_core::fit::fit_power_law;
use emhd_core::initial::{self, c1_norm, make_initial_data, make_u0, InitOptions};
use emhd_core::region::{self, parse_rational};
use emhd_core::solver::AbortReason;
use emhd_core::{spectral, BumpProfile, Error, ParamSet};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::OutputDir;

/// Worker count for sweeps.
pub const WORKERS_ENV: &str = "EMHD_WORKERS";

fn carrier(cfg: &ExperimentConfig, p: &ParamSet, profile: &BumpProfile) -> Result<Option<ApproxSolution>, CliError> {
    if !cfg.carrier {
        return Ok(None);
    }
    match ApproxSolution::new(*p, cfg.grid()?, profile.clone()) {
        Ok(s) => Ok(Some(s)),
        Err(Error::UnderResolved(msg)) => {
            eprintln!("carrier diagnostics disabled: {msg}");
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

#[derive(Serialize)]
struct NormRow {
    quantity: &'static str,
    s: f64,
    homogeneous: bool,
    value: f64,
    predicted_exponent: Option<f64>,
}

pub fn init_data(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let p = cfg.params()?;
    let grid = cfg.grid()?;
    let profile = BumpProfile::new();
    let mut dir = OutputDir::create(out, "init-data", cfg)?;
    initial::check_resolution(&p, &grid)?;
    let data = make_initial_data(&p, grid, &profile, InitOptions { normalize: cfg.normalize })?;
    let u0 = make_u0(&p, grid, &profile)?;
    let u0 = u0.scale(data.scale);

    let mut w = csv::Writer::from_writer(dir.file("norms.csv")?);
    for s in cfg.orders() {
        for homogeneous in [true, false] {
            let fields = [
                ("a0", spectral::sobolev_norm(&data.state.a, s, homogeneous)),
                ("b0", spectral::sobolev_norm(&data.state.b, s, homogeneous)),
                ("u0", spectral::sobolev_norm_vec(&u0, s, homogeneous)),
            ];
            for (quantity, v) in fields {
                let value = match v {
                    Ok(v) => v,
                    Err(Error::NonzeroMean { .. }) => continue,
                    Err(e) => return Err(e.into()),
                };
                let predicted_exponent = match (quantity, homogeneous) {
                    ("a0", true) => Some(initial::ScalingQuantity::A0(s).predicted(&p)),
                    ("u0", true) => Some(initial::ScalingQuantity::U0(s).predicted(&p)),
                    _ => None,
                };
                w.serialize(NormRow {
                    quantity,
                    s,
                    homogeneous,
                    value,
                    predicted_exponent,
                })?;
            }
        }
    }
    w.serialize(NormRow {
        quantity: "u0_C1",
        s: 1.0,
        homogeneous: false,
        value: c1_norm(&u0)?,
        predicted_exponent: Some(initial::ScalingQuantity::U0C1.predicted(&p)),
    })?;
    w.serialize(NormRow {
        quantity: "scale",
        s: 0.0,
        homogeneous: false,
        value: data.scale,
        predicted_exponent: None,
    })?;
    w.flush()?;
    drop(w);

    Checkpoint {
        state: data.state,
        step: 0,
        params: Some(p),
    }
    .save(&dir.path("init.ckp"))?;
    dir.register("init.ckp");
    dir.finish("ok")
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum RunKind {
    Full,
    Frozen,
}

fn run_trajectory(cfg: &ExperimentConfig, kind: RunKind) -> Result<(ParamSet, Trajectory), CliError> {
    let p = cfg.params()?;
    let grid = cfg.grid()?;
    let profile = BumpProfile::new();
    initial::check_resolution(&p, &grid)?;
    let data = make_initial_data(&p, grid, &profile, InitOptions { normalize: cfg.normalize })?;
    let sol = carrier(cfg, &p, &profile)?;
    let mut rec = RecorderConfig::new(cfg.orders());
    if let Some(s) = &sol {
        rec = rec.with_approx(s);
    }
    let solver = cfg.solver(cfg.t_end(&p));
    let traj = match kind {
        RunKind::Full => diagnostics::run_recorded(&data.state, &solver, rec)?,
        RunKind::Frozen => diagnostics::run_frozen_recorded(&data.state, &solver, rec)?,
    };
    Ok((p, traj))
}

fn abort_error(traj: &Trajectory) -> Option<CliError> {
    match &traj.outcome.abort {
        None => None,
        Some(r @ AbortReason::UnderResolved { .. }) => Some(CliError::Resolution(format!(
            "{} at t = {}",
            r.label(),
            traj.outcome.final_state.t
        ))),
        Some(r) => Some(CliError::Numeric(format!("{} at t = {}", r.label(), traj.outcome.final_state.t))),
    }
}

fn write_trajectory(dir: &mut OutputDir, p: &ParamSet, traj: &Trajectory) -> Result<(), CliError> {
    diagnostics::write_records_csv(dir.file("trajectory.csv")?, &traj.records, traj.status())?;
    Checkpoint {
        state: traj.outcome.final_state.clone(),
        step: traj.outcome.steps as u64,
        params: Some(*p),
    }
    .save(&dir.path("final.ckp"))?;
    dir.register("final.ckp");
    Ok(())
}

pub fn run(cfg: &ExperimentConfig, out: &Path, kind: RunKind) -> Result<(), CliError> {
    let name = match kind {
        RunKind::Full => "run",
        RunKind::Frozen => "frozen-run",
    };
    let mut dir = OutputDir::create(out, name, cfg)?;
    let (p, traj) = run_trajectory(cfg, kind)?;
    write_trajectory(&mut dir, &p, &traj)?;
    println!(
        "{name}: {} steps to t = {} ({})",
        traj.outcome.steps,
        traj.outcome.final_state.t,
        traj.status()
    );
    if kind == RunKind::Full {
        println!("max relative energy drift {:e}", traj.max_energy_drift()?);
    }
    dir.finish(traj.status())?;
    match abort_error(&traj) {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct FitRow {
    s: f64,
    slope: f64,
    intercept: f64,
    r2: f64,
}

pub fn approx_scan(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let p = cfg.params()?;
    let mut dir = OutputDir::create(out, "approx-scan", cfg)?;
    let sol = ApproxSolution::new(p, cfg.grid()?, BumpProfile::new())?;
    let t_end = cfg.t_end(&p);
    sol.check_resolved(t_end)?;
    let times = log_times(t_end, cfg.scan_decades, cfg.scan_count);
    let orders = cfg.orders();
    let mut table = vec![Vec::with_capacity(times.len()); orders.len()];
    for &t in &times {
        let a = sol.abar(t)?;
        for (k, &s) in orders.iter().enumerate() {
            table[k].push(spectral::sobolev_norm(&a, s, true)?);
        }
    }

    let mut w = csv::Writer::from_writer(dir.file("scan.csv")?);
    let mut header = vec!["t".to_string(), "t_N".to_string()];
    header.extend(orders.iter().map(|s| format!("abar_Hdot{s}")));
    w.write_record(&header)?;
    for (i, t) in times.iter().enumerate() {
        let mut row = vec![t.to_string(), p.inflation_time().to_string()];
        row.extend(table.iter().map(|col| col[i].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    drop(w);

    let mut w = csv::Writer::from_writer(dir.file("fits.csv")?);
    for (k, &s) in orders.iter().enumerate() {
        let f = fit_power_law(&times, &table[k], 2, 0.0)?;
        println!("s = {s}: slope {:.4} (r2 {:.4})", f.slope, f.r2);
        w.serialize(FitRow {
            s,
            slope: f.slope,
            intercept: f.intercept,
            r2: f.r2,
        })?;
    }
    w.flush()?;
    drop(w);
    dir.finish("ok")
}

pub fn region(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let parse = |v: &[String]| -> Result<Vec<region::Q>, CliError> {
        v.iter()
            .filter(|s| !s.trim().is_empty())
            .map(|s| parse_rational(s).map_err(CliError::from))
            .collect()
    };
    let betas = parse(&cfg.region_betas)?;
    let gammas = parse(&cfg.region_gammas)?;
    let mut dir = OutputDir::create(out, "region", cfg)?;
    let rows = region::region_sweep(&betas, &gammas);
    region::write_region_csv(dir.file("region.csv")?, &rows)?;
    if rows.is_empty() {
        // The csv writer emits its header with the first row; keep an
        // empty table well formed.
        let mut f = dir.file("region.csv")?;
        writeln!(
            f,
            "beta,gamma,beta_float,gamma_float,admissible,zeta_lower,zeta_lower_float,zeta_lower_strict,zeta_upper,zeta_upper_float,binding"
        )?;
    }
    let admissible = rows.iter().filter(|r| r.verdict.admissible).count();
    println!("region: {admissible} of {} cells admissible", rows.len());
    dir.finish("ok")
}

#[derive(Clone, Debug, Serialize)]
struct SweepRow {
    lambda: f64,
    m: u64,
    gamma_eff: f64,
    n: usize,
    t_n: f64,
    t_reached: Option<f64>,
    status: String,
    inflation_ratio: Option<f64>,
    energy_drift: Option<f64>,
}

fn sweep_member(cfg: &ExperimentConfig, mode: &str, dir: &Path) -> (SweepRow, Option<CliError>) {
    let mut row = SweepRow {
        lambda: cfg.lambda,
        m: 0,
        gamma_eff: f64::NAN,
        n: cfg.n,
        t_n: f64::NAN,
        t_reached: None,
        status: String::new(),
        inflation_ratio: None,
        energy_drift: None,
    };
    let result = (|| -> Result<(), CliError> {
        let p = cfg.params()?;
        row.m = p.m;
        row.gamma_eff = p.gamma_eff();
        row.t_n = p.inflation_time();
        match mode {
            "approx" => {
                let sol = ApproxSolution::new(p, cfg.grid()?, BumpProfile::new())?;
                let t = cfg.t_end(&p);
                sol.check_resolved(t)?;
                let n0 = spectral::sobolev_norm(&sol.abar(0.0)?, p.beta, true)?;
                let n1 = spectral::sobolev_norm(&sol.abar(t)?, p.beta, true)?;
                row.t_reached = Some(t);
                row.inflation_ratio = Some(n1 / n0);
                row.status = "completed".into();
                Ok(())
            }
            "run" | "frozen-run" => {
                let kind = if mode == "run" { RunKind::Full } else { RunKind::Frozen };
                // The inflation ratio needs these two orders.
                let mut cfg = cfg.clone();
                let mut orders = cfg.orders();
                for s in [p.beta - 1.0, p.beta] {
                    if !orders.contains(&s) {
                        orders.push(s);
                    }
                }
                cfg.orders = Some(orders);
                let cfg = &cfg;
                let mut out = OutputDir::create(dir, if mode == "run" { "run" } else { "frozen-run" }, cfg)?;
                let (p, traj) = run_trajectory(cfg, kind)?;
                write_trajectory(&mut out, &p, &traj)?;
                out.finish(traj.status())?;
                let rep = inflation_report(&traj, &p)?;
                row.t_reached = Some(rep.last_time);
                row.inflation_ratio = rep.ratios.last().map(|r| r.1);
                row.energy_drift = Some(traj.max_energy_drift()?);
                row.status = traj.status().into();
                match abort_error(&traj) {
                    Some(e) => Err(e),
                    None => Ok(()),
                }
            }
            other => Err(CliError::Config(format!(
                "sweep_mode must be approx, run or frozen-run, got {other:?}"
            ))),
        }
    })();
    if let Err(e) = &result {
        if row.status.is_empty() {
            row.status = format!("error: {e}");
        }
    }
    (row, result.err())
}

fn worker_pool() -> Result<rayon::ThreadPool, CliError> {
    let workers = match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .parse::<usize>()
            .ok()
            .filter(|&w| w > 0)
            .ok_or_else(|| CliError::Config(format!("{WORKERS_ENV} must be a positive integer, got {v:?}")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(e.to_string()))
}

pub fn sweep(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    if cfg.sweep_lambdas.is_empty() {
        return Err(CliError::Config("sweep_lambdas is empty".into()));
    }
    if !cfg.sweep_ns.is_empty() && cfg.sweep_ns.len() != cfg.sweep_lambdas.len() {
        return Err(CliError::Config("sweep_ns must be empty or match sweep_lambdas".into()));
    }
    let mut dir = OutputDir::create(out, "sweep", cfg)?;
    let members: Vec<(usize, ExperimentConfig)> =
        (0..cfg.sweep_lambdas.len()).map(|i| (i, cfg.for_lambda(i))).collect();
    let pool = worker_pool()?;
    let mut results: Vec<(usize, SweepRow, Option<CliError>)> = pool.install(|| {
        members
            .par_iter()
            .map(|(i, c)| {
                let sub = dir.path(&format!("member_{i:03}"));
                let (row, err) = sweep_member(c, &cfg.sweep_mode, &sub);
                (*i, row, err)
            })
            .collect()
    });
    results.sort_by_key(|r| r.0);
    for (i, _, _) in &results {
        if cfg.sweep_mode != "approx" {
            dir.register(&format!("member_{i:03}"));
        }
    }
    let mut w = csv::Writer::from_writer(dir.file("sweep.csv")?);
    for (_, row, _) in &results {
        w.serialize(row)?;
        println!(
            "lambda = {}: {} ratio {}",
            row.lambda,
            row.status,
            row.inflation_ratio.map(|r| r.to_string()).unwrap_or_default()
        );
    }
    w.flush()?;
    drop(w);
    let first_err = results.into_iter().filter_map(|r| r.2).max_by_key(|e| e.exit_code());
    dir.finish(if first_err.is_some() { "member_failed" } else { "ok" })?;
    match first_err {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
