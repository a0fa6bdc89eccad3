//! Observables along trajectories: energy, Sobolev norm maps, the
//! perturbation `A = a - abar`, growth ratios and CSV output.

use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::approx::ApproxSolution;
use crate::error::{Error, Result};
use crate::field::{Field, VectorField};
use crate::params::ParamSet;
use crate::solver::{self, AbortReason, Probe, RunOutcome, SolverConfig, StepInfo};
use crate::spectral;
use crate::state::State;

pub use crate::fit::{fit_exponent, PowerFit};

/// `int (a_x^2 + a_y^2 + b^2)` by grid quadrature, with the gradient term
/// integrated by parts as `-int a lap a` so Nyquist lines are kept.
pub fn energy(state: &State) -> Result<f64> {
    state.check_finite()?;
    let lap = spectral::laplacian(&state.a)?;
    let dens: f64 = state
        .a
        .values()
        .iter()
        .zip(lap.values())
        .zip(state.b.values())
        .map(|((a, la), b)| b * b - a * la)
        .sum();
    Ok(dens * state.grid().cell_area())
}

/// `|a|_{Hdot^1}^2 + |b|_{L^2}^2` from the coefficients.
pub fn energy_spectral(state: &State) -> Result<f64> {
    Ok(spectral::sobolev_norm(&state.a, 1.0, true)?.powi(2) + spectral::sobolev_norm(&state.b, 0.0, false)?.powi(2))
}

/// Quantities carried in a [`DiagnosticsRecord`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Quantity {
    A,
    B,
    Abar,
    /// `a - abar`.
    Perturbation,
    /// `grad_perp b - u0`.
    VelocityDeviation,
    Ubar,
}

impl Quantity {
    pub fn label(&self) -> &'static str {
        match self {
            Quantity::A => "a",
            Quantity::B => "b",
            Quantity::Abar => "abar",
            Quantity::Perturbation => "A",
            Quantity::VelocityDeviation => "u_minus_u0",
            Quantity::Ubar => "ubar",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEntry {
    pub quantity: Quantity,
    pub s: f64,
    pub homogeneous: bool,
    pub value: f64,
}

impl NormEntry {
    pub fn column(&self) -> String {
        norm_column(self.quantity, self.s, self.homogeneous)
    }
}

pub fn norm_column(q: Quantity, s: f64, homogeneous: bool) -> String {
    format!("{}_{}{}", q.label(), if homogeneous { "Hdot" } else { "H" }, s)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub step: usize,
    pub energy: f64,
    pub norms: Vec<NormEntry>,
    pub resolution_fraction: f64,
    pub realized_dt: f64,
}

impl DiagnosticsRecord {
    pub fn norm(&self, q: Quantity, s: f64, homogeneous: bool) -> Option<f64> {
        self.norms
            .iter()
            .find(|e| e.quantity == q && e.s == s && e.homogeneous == homogeneous)
            .map(|e| e.value)
    }
}

/// Default norm orders `{-1, 0, 1, 2, beta - 2, beta - 1, beta}`.
pub fn default_orders(beta: f64) -> Vec<f64> {
    vec![-1.0, 0.0, 1.0, 2.0, beta - 2.0, beta - 1.0, beta]
}

/// `A = a - abar(t)` and `u - u0` with their norms.
#[derive(Clone, Debug)]
pub struct Perturbation {
    pub a_minus_abar: Field,
    pub u_minus_u0: VectorField,
    pub norms: Vec<NormEntry>,
}

/// Perturbation against a reference carrier evaluated at `t_ref`.
pub fn perturbation_against(
    state: &State,
    abar: &Field,
    t_ref: f64,
    u0: &VectorField,
    orders: &[f64],
) -> Result<Perturbation> {
    state.grid().check_same(abar.grid())?;
    state.grid().check_same(u0.grid())?;
    if state.t != t_ref {
        return Err(Error::TimeMismatch {
            state: state.t,
            reference: t_ref,
        });
    }
    let a_minus_abar = state.a.sub(abar)?;
    let u_minus_u0 = state.velocity()?.sub(u0)?;
    let mut norms = Vec::new();
    for &s in orders {
        for h in [true, false] {
            push(&mut norms, Quantity::Perturbation, s, h, scalar_norm(&a_minus_abar, s, h))?;
            push(&mut norms, Quantity::VelocityDeviation, s, h, vector_norm(&u_minus_u0, s, h))?;
        }
    }
    Ok(Perturbation {
        a_minus_abar,
        u_minus_u0,
        norms,
    })
}

/// Perturbation against the carrier of `sol` at the state's own time.
pub fn perturbation(state: &State, sol: &ApproxSolution, p: &ParamSet, orders: &[f64]) -> Result<Perturbation> {
    if p != sol.params() {
        return Err(Error::InvalidArgument(
            "parameter set differs from the carrier's".into(),
        ));
    }
    let abar = sol.abar(state.t)?;
    perturbation_against(state, &abar, state.t, sol.u0(), orders)
}

fn scalar_norm(f: &Field, s: f64, homogeneous: bool) -> Result<f64> {
    spectral::sobolev_norm(f, s, homogeneous)
}

// Negative homogeneous orders of fields with a mean are skipped.
fn push(norms: &mut Vec<NormEntry>, quantity: Quantity, s: f64, homogeneous: bool, v: Result<f64>) -> Result<()> {
    match v {
        Ok(value) => {
            norms.push(NormEntry {
                quantity,
                s,
                homogeneous,
                value,
            });
            Ok(())
        }
        Err(Error::NonzeroMean { .. }) => Ok(()),
        Err(e) => Err(e),
    }
}

fn vector_norm(v: &VectorField, s: f64, homogeneous: bool) -> Result<f64> {
    spectral::sobolev_norm_vec(v, s, homogeneous)
}

/// What the recorder evaluates at each output.
#[derive(Clone, Debug)]
pub struct RecorderConfig<'a> {
    pub orders: Vec<f64>,
    /// Carrier used for `abar`, `A` and `u - u0`; entries are skipped at
    /// times past its resolution horizon.
    pub approx: Option<&'a ApproxSolution>,
    /// Also evaluate `ubar` (costly: one Simpson quadrature per output).
    pub ubar_steps: Option<usize>,
}

impl<'a> RecorderConfig<'a> {
    pub fn new(orders: Vec<f64>) -> Self {
        Self {
            orders,
            approx: None,
            ubar_steps: None,
        }
    }

    pub fn with_approx(mut self, approx: &'a ApproxSolution) -> Self {
        self.approx = Some(approx);
        self
    }
}

/// [`Probe`] that turns snapshots into [`DiagnosticsRecord`]s.
pub struct Recorder<'a> {
    cfg: RecorderConfig<'a>,
    pub records: Vec<DiagnosticsRecord>,
}

impl<'a> Recorder<'a> {
    pub fn new(cfg: RecorderConfig<'a>) -> Self {
        Self {
            cfg,
            records: Vec::new(),
        }
    }

    pub fn record(&self, state: &State, info: &StepInfo) -> Result<DiagnosticsRecord> {
        let mut norms = Vec::new();
        for &s in &self.cfg.orders {
            for h in [true, false] {
                push(&mut norms, Quantity::A, s, h, scalar_norm(&state.a, s, h))?;
                push(&mut norms, Quantity::B, s, h, scalar_norm(&state.b, s, h))?;
            }
        }
        if let Some(sol) = self.cfg.approx {
            if sol.check_resolved(state.t).is_ok() {
                let abar = sol.abar(state.t)?;
                for &s in &self.cfg.orders {
                    for h in [true, false] {
                        push(&mut norms, Quantity::Abar, s, h, scalar_norm(&abar, s, h))?;
                    }
                }
                let pert = perturbation_against(state, &abar, state.t, sol.u0(), &self.cfg.orders)?;
                norms.extend(pert.norms);
                if let Some(steps) = self.cfg.ubar_steps {
                    let ub = sol.ubar_unconverged(state.t, steps)?;
                    for &s in &self.cfg.orders {
                        for h in [true, false] {
                            push(&mut norms, Quantity::Ubar, s, h, vector_norm(&ub.u, s, h))?;
                        }
                    }
                }
            }
        }
        let energy = energy_spectral(state)?;
        if norms.iter().any(|e| !e.value.is_finite()) || !energy.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(DiagnosticsRecord {
            t: state.t,
            step: info.step,
            energy,
            norms,
            resolution_fraction: info.resolution_fraction,
            realized_dt: info.dt,
        })
    }
}

impl Probe for Recorder<'_> {
    fn observe(&mut self, state: &State, info: &StepInfo) -> Result<()> {
        let r = self.record(state, info)?;
        self.records.push(r);
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub records: Vec<DiagnosticsRecord>,
    pub outcome: RunOutcome,
    /// Requested horizon (relative to the initial time).
    pub t_end: f64,
}

impl Trajectory {
    /// Largest relative energy deviation from the first record.
    pub fn max_energy_drift(&self) -> Result<f64> {
        let e0 = self.records.first().ok_or(Error::EmptyTrajectory)?.energy;
        Ok(self
            .records
            .iter()
            .map(|r| ((r.energy - e0) / e0).abs())
            .fold(0.0, f64::max))
    }

    pub fn status(&self) -> &'static str {
        match &self.outcome.abort {
            None => "completed",
            Some(r) => r.label(),
        }
    }
}

/// Full nonlinear run with a [`Recorder`].
pub fn run_recorded(initial: &State, cfg: &SolverConfig, rec: RecorderConfig<'_>) -> Result<Trajectory> {
    let mut recorder = Recorder::new(rec);
    let outcome = solver::run(initial, cfg, &mut recorder)?;
    Ok(Trajectory {
        records: recorder.records,
        outcome,
        t_end: cfg.t_end,
    })
}

/// Frozen-velocity run with a [`Recorder`].
pub fn run_frozen_recorded(initial: &State, cfg: &SolverConfig, rec: RecorderConfig<'_>) -> Result<Trajectory> {
    let mut recorder = Recorder::new(rec);
    let outcome = solver::run_frozen_velocity(initial, cfg, &mut recorder)?;
    Ok(Trajectory {
        records: recorder.records,
        outcome,
        t_end: cfg.t_end,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunEnd {
    /// Reached the inflation time `t_N`.
    InflationTime,
    /// Reached the requested horizon before `t_N`.
    Horizon,
    /// Stopped by the resolution monitor.
    Resolution,
    /// Any other abort.
    Aborted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InflationReport {
    /// `(t, (|a|_{Hdot^beta} + |b|_{Hdot^(beta-1)}) / same at t0)`.
    pub ratios: Vec<(f64, f64)>,
    pub max_ratio: f64,
    pub t_of_max: f64,
    pub last_time: f64,
    pub ended_by: RunEnd,
}

/// Growth of `|a|_{Hdot^beta} + |b|_{Hdot^(beta-1)}` along a trajectory.
pub fn inflation_report(traj: &Trajectory, p: &ParamSet) -> Result<InflationReport> {
    let first = traj.records.first().ok_or(Error::EmptyTrajectory)?;
    let total = |r: &DiagnosticsRecord| -> Result<f64> {
        let a = r.norm(Quantity::A, p.beta, true);
        let b = r.norm(Quantity::B, p.beta - 1.0, true);
        match (a, b) {
            (Some(a), Some(b)) => Ok(a + b),
            _ => Err(Error::InvalidArgument(format!(
                "record at t = {} lacks the Hdot^beta / Hdot^(beta-1) norms",
                r.t
            ))),
        }
    };
    let base = total(first)?;
    let mut ratios = Vec::with_capacity(traj.records.len());
    for r in &traj.records {
        ratios.push((r.t, total(r)? / base));
    }
    let (t_of_max, max_ratio) = ratios
        .iter()
        .cloned()
        .fold((first.t, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    let last_time = traj.records.last().map(|r| r.t).unwrap_or(first.t);
    let t_n = p.inflation_time();
    let ended_by = match &traj.outcome.abort {
        Some(AbortReason::UnderResolved { .. }) => RunEnd::Resolution,
        Some(_) => RunEnd::Aborted,
        None if last_time - first.t >= t_n * (1.0 - 1e-12) => RunEnd::InflationTime,
        None => RunEnd::Horizon,
    };
    Ok(InflationReport {
        ratios,
        max_ratio,
        t_of_max,
        last_time,
        ended_by,
    })
}

/// Column order: fixed scalars, then norm columns in order of first
/// appearance, then `status`.
pub fn csv_header(records: &[DiagnosticsRecord]) -> Vec<String> {
    let mut cols: Vec<String> = ["t", "step", "realized_dt", "energy", "resolution_fraction"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut seen = std::collections::HashSet::new();
    for r in records {
        for e in &r.norms {
            let c = e.column();
            if seen.insert(c.clone()) {
                cols.push(c);
            }
        }
    }
    cols.push("status".into());
    cols
}

/// Write one row per record. Every row but the last carries `status = ok`;
/// the last carries `final_status`.
pub fn write_records_csv<W: Write>(out: W, records: &[DiagnosticsRecord], final_status: &str) -> Result<()> {
    let header = csv_header(records);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&header)?;
    let norm_cols = &header[5..header.len() - 1];
    for (k, r) in records.iter().enumerate() {
        let mut row = vec![
            r.t.to_string(),
            r.step.to_string(),
            r.realized_dt.to_string(),
            r.energy.to_string(),
            r.resolution_fraction.to_string(),
        ];
        for c in norm_cols {
            let v = r.norms.iter().find(|e| &e.column() == c).map(|e| e.value.to_string());
            row.push(v.unwrap_or_default());
        }
        row.push(if k + 1 == records.len() { final_status.to_string() } else { "ok".into() });
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn zero_state_has_zero_energy() {
        let s = State::zeros(Grid::new(16, 1.0).unwrap());
        assert_eq!(energy(&s).unwrap(), 0.0);
        assert_eq!(energy_spectral(&s).unwrap(), 0.0);
    }

    #[test]
    fn single_mode_energy() {
        let g = Grid::new(32, 2.0).unwrap();
        let k = 3.0 * g.k0();
        let a = Field::from_fn(g, |x, _| (k * x).sin());
        let s = State::new(a, Field::zeros(g), 0.0).unwrap();
        let expect = k * k * g.area() / 2.0;
        assert!((energy(&s).unwrap() - expect).abs() < 1e-12 * expect);
        assert!((energy_spectral(&s).unwrap() - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn record_serializes_round_trip() {
        let r = DiagnosticsRecord {
            t: 0.1 + 0.2,
            step: 3,
            energy: 1.0 / 3.0,
            norms: vec![NormEntry {
                quantity: Quantity::Perturbation,
                s: 3.5,
                homogeneous: true,
                value: std::f64::consts::PI * 1e-300,
            }],
            resolution_fraction: 1e-17,
            realized_dt: 2.5e-5,
        };
        let text = serde_json::to_string(&r).unwrap();
        let back: DiagnosticsRecord = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn csv_has_stable_columns_and_status() {
        let mk = |t: f64, with_extra: bool| {
            let mut norms = vec![NormEntry {
                quantity: Quantity::A,
                s: 1.0,
                homogeneous: true,
                value: t + 1.0,
            }];
            if with_extra {
                norms.push(NormEntry {
                    quantity: Quantity::Abar,
                    s: 1.0,
                    homogeneous: false,
                    value: 0.1,
                });
            }
            DiagnosticsRecord {
                t,
                step: 0,
                energy: 2.0,
                norms,
                resolution_fraction: 0.0,
                realized_dt: 0.0,
            }
        };
        let recs = vec![mk(0.0, true), mk(0.5, false)];
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &recs, "under_resolved").unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "t,step,realized_dt,energy,resolution_fraction,a_Hdot1,abar_H1,status"
        );
        assert_eq!(lines[1], "0,0,0,2,0,1,0.1,ok");
        assert_eq!(lines[2], "0.5,0,0,2,0,1.5,,under_resolved");
    }

    fn lambda8(n: usize, half_width: f64) -> (ParamSet, Grid, crate::profile::BumpProfile) {
        let p = ParamSet::new(8.0, 3.5, 1.2, 1.47).unwrap();
        let g = Grid::new(n, half_width).unwrap();
        (p, g, crate::profile::BumpProfile::new())
    }

    #[test]
    fn energy_routes_agree_on_initial_data() {
        let (p, g, prof) = lambda8(512, 1.0);
        let d = crate::initial::make_initial_data(&p, g, &prof, Default::default()).unwrap();
        let e1 = energy(&d.state).unwrap();
        let e2 = energy_spectral(&d.state).unwrap();
        assert!(((e1 - e2) / e2).abs() < 1e-10, "{e1} vs {e2}");
    }

    #[test]
    fn perturbation_vanishes_at_start_and_checks_time() {
        let (p, g, prof) = lambda8(512, 1.0);
        let d = crate::initial::make_initial_data(&p, g, &prof, Default::default()).unwrap();
        let sol = ApproxSolution::new(p, g, prof).unwrap();
        let pert = perturbation(&d.state, &sol, &p, &[0.0, 1.0]).unwrap();
        for e in &pert.norms {
            assert!(e.value < 1e-12, "{e:?}");
        }
        let abar = sol.abar(0.0).unwrap();
        let err = perturbation_against(&d.state, &abar, 1e-3, sol.u0(), &[0.0]).unwrap_err();
        assert!(matches!(err, Error::TimeMismatch { .. }));
    }

    #[test]
    fn frozen_run_tracks_carrier() {
        let (p, g, prof) = lambda8(1024, 4.25 / 8.0);
        let d = crate::initial::make_initial_data(&p, g, &prof, Default::default()).unwrap();
        let sol = ApproxSolution::new(p, g, prof).unwrap();
        let t_end = 0.25 * sol.resolution_horizon().min(p.inflation_time());
        let cfg = SolverConfig {
            t_end,
            output_stride: 1000,
            ..Default::default()
        };
        let traj = run_frozen_recorded(&d.state, &cfg, RecorderConfig::new(vec![0.0]).with_approx(&sol)).unwrap();
        assert!(traj.outcome.completed());
        let last = traj.records.last().unwrap();
        assert!((last.t - t_end).abs() < 1e-14);
        let rel = last.norm(Quantity::Perturbation, 0.0, false).unwrap()
            / last.norm(Quantity::Abar, 0.0, false).unwrap();
        assert!(rel < 1e-4, "relative residual {rel}");
        let l2 = |r: &DiagnosticsRecord| r.norm(Quantity::A, 0.0, false).unwrap();
        let first = l2(&traj.records[0]);
        assert!(((l2(last) - first) / first).abs() < 1e-8);
        let rep = inflation_report(&traj, &p);
        assert!(rep.is_err(), "orders lack beta");
    }
}
