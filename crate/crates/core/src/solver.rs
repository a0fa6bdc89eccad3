//! Explicit RK4 time stepping of the full system
//! `a_t = -{b, a}`, `b_t = -{a, lap a}` and of the frozen-velocity transport
//! `a_t = -u0 . grad a`.
//!
//! Stages work on coefficient arrays; each full-system stage costs six
//! inverse and two forward transforms.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::field::{Field, VectorField};
use crate::grid::Grid;
use crate::spectral::{self, retained};
use crate::state::State;

/// Advective CFL constant (RK4 is stable up to `|omega dt| ~ 2.8`).
pub const C_ADV: f64 = 1.0;
/// Hall (whistler) CFL constant.
pub const C_HALL: f64 = 0.5;
/// Hyperviscous CFL constant (real-axis stability limit ~ 2.78).
pub const C_VISC: f64 = 2.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub dt_safety: f64,
    pub nu: f64,
    pub hyper_order: u32,
    pub dealias: bool,
    pub t_end: f64,
    pub output_stride: usize,
    pub max_steps: usize,
    /// Abort when the spectral tail fraction of `a` or `b` exceeds this.
    pub resolution_limit: f64,
    /// Abort when the CFL step falls below this.
    pub min_dt: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt_safety: 0.5,
            nu: 0.0,
            hyper_order: 4,
            dealias: true,
            t_end: 0.0,
            output_stride: 10,
            max_steps: 1_000_000,
            resolution_limit: 1e-6,
            min_dt: 1e-14,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(what.to_string()));
        if !(self.dt_safety > 0.0 && self.dt_safety <= 1.0) {
            return bad("dt_safety must lie in (0, 1]");
        }
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return bad("nu must be finite and >= 0");
        }
        if self.hyper_order < 2 {
            return bad("hyperviscosity order must be >= 2");
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad("t_end must be finite and >= 0");
        }
        if self.output_stride == 0 {
            return bad("output_stride must be >= 1");
        }
        if !(self.resolution_limit > 0.0) {
            return bad("resolution_limit must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum AbortReason {
    NonFinite,
    CflCollapse { dt: f64 },
    UnderResolved { fraction: f64 },
    MaxSteps,
}

impl AbortReason {
    pub fn label(&self) -> &'static str {
        match self {
            AbortReason::NonFinite => "non_finite",
            AbortReason::CflCollapse { .. } => "cfl_collapse",
            AbortReason::UnderResolved { .. } => "under_resolved",
            AbortReason::MaxSteps => "max_steps",
        }
    }
}

/// Information passed to a [`Probe`] alongside the state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepInfo {
    pub step: usize,
    /// Step that produced this state (0 for the initial state).
    pub dt: f64,
    pub resolution_fraction: f64,
}

/// Observer invoked on the initial state, every `output_stride` steps and
/// on the final (last good) state.
pub trait Probe {
    fn observe(&mut self, state: &State, info: &StepInfo) -> Result<()>;
}

/// Probe that records nothing.
pub struct NoProbe;

impl Probe for NoProbe {
    fn observe(&mut self, _: &State, _: &StepInfo) -> Result<()> {
        Ok(())
    }
}

impl<F: FnMut(&State, &StepInfo) -> Result<()>> Probe for F {
    fn observe(&mut self, state: &State, info: &StepInfo) -> Result<()> {
        self(state, info)
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    /// Last good state: `t_end` on success, otherwise the state before the
    /// failing step.
    pub final_state: State,
    pub steps: usize,
    pub abort: Option<AbortReason>,
}

impl RunOutcome {
    pub fn completed(&self) -> bool {
        self.abort.is_none()
    }
}

/// Per-grid multiplier tables shared by all stages.
struct Workspace {
    grid: Grid,
    fft: Arc<Fft2>,
    kx: Vec<f64>,
    ky: Vec<f64>,
    k2: Vec<f64>,
    keep: Vec<bool>,
    dealias: bool,
    damping: Vec<f64>,
}

impl Workspace {
    fn new(grid: Grid, cfg: &SolverConfig) -> Self {
        let len = grid.spectral_len();
        let half = grid.n() as i64 / 2;
        let k0 = grid.k0();
        let mut kx = vec![0.0; len];
        let mut ky = vec![0.0; len];
        let mut k2 = vec![0.0; len];
        let mut keep = vec![true; len];
        let mut damping = vec![0.0; len];
        grid.for_each_mode_index(|idx, i, j, _| {
            let (fx, fy) = (i as f64 * k0, j as f64 * k0);
            // First derivatives drop the Nyquist modes.
            kx[idx] = if i.abs() == half { 0.0 } else { fx };
            ky[idx] = if j == half { 0.0 } else { fy };
            k2[idx] = fx * fx + fy * fy;
            keep[idx] = !cfg.dealias || retained(&grid, i, j);
            damping[idx] = cfg.nu * k2[idx].powi(cfg.hyper_order as i32);
        });
        Self {
            grid,
            fft: Fft2::get(grid.n()),
            kx,
            ky,
            k2,
            keep,
            dealias: cfg.dealias,
            damping,
        }
    }

    /// Physical samples of `d/dx` (`axis = 0`) or `d/dy` of `m * c`.
    fn deriv(&self, c: &[Complex64], axis: u8, m: impl Fn(usize) -> f64) -> Vec<f64> {
        let k = if axis == 0 { &self.kx } else { &self.ky };
        let spec: Vec<Complex64> = c
            .iter()
            .enumerate()
            .map(|(idx, v)| {
                if self.keep[idx] {
                    v * Complex64::new(0.0, k[idx] * m(idx))
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        self.fft.inverse(&spec)
    }

    fn project(&self, values: &[f64], scale: f64) -> Vec<Complex64> {
        let mut c = self.fft.forward(values);
        for (idx, v) in c.iter_mut().enumerate() {
            if self.keep[idx] {
                *v *= scale;
            } else {
                *v = Complex64::new(0.0, 0.0);
            }
        }
        c
    }

    fn add_damping(&self, out: &mut [Complex64], c: &[Complex64]) {
        if self.damping.iter().any(|d| *d != 0.0) {
            for ((o, v), d) in out.iter_mut().zip(c).zip(&self.damping) {
                *o -= v * *d;
            }
        }
    }

    /// Tendencies of the full system.
    fn rhs(&self, a: &[Complex64], b: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let one = |_| 1.0;
        let lap = |idx: usize| -self.k2[idx];
        let ax = self.deriv(a, 0, one);
        let ay = self.deriv(a, 1, one);
        let bx = self.deriv(b, 0, one);
        let by = self.deriv(b, 1, one);
        let lx = self.deriv(a, 0, lap);
        let ly = self.deriv(a, 1, lap);
        // {f, g} = f_x g_y - f_y g_x
        let adv: Vec<f64> = (0..ax.len()).map(|k| bx[k] * ay[k] - by[k] * ax[k]).collect();
        let hall: Vec<f64> = (0..ax.len()).map(|k| ax[k] * ly[k] - ay[k] * lx[k]).collect();
        let mut da = self.project(&adv, -1.0);
        let mut db = self.project(&hall, -1.0);
        self.add_damping(&mut da, a);
        self.add_damping(&mut db, b);
        (da, db)
    }

    /// Tendency of `a` under the fixed velocity samples `(ux, uy)`.
    fn transport_rhs(&self, a: &[Complex64], ux: &[f64], uy: &[f64]) -> Vec<Complex64> {
        let ax = self.deriv(a, 0, |_| 1.0);
        let ay = self.deriv(a, 1, |_| 1.0);
        let adv: Vec<f64> = (0..ax.len()).map(|k| ux[k] * ax[k] + uy[k] * ay[k]).collect();
        let mut da = self.project(&adv, -1.0);
        self.add_damping(&mut da, a);
        da
    }

    /// Largest wavenumber magnitude carried by the scheme.
    fn k_eff(&self) -> f64 {
        let per_axis = if self.dealias {
            self.grid.k0() * (self.grid.n() / 3) as f64
        } else {
            self.grid.k_max()
        };
        std::f64::consts::SQRT_2 * per_axis
    }

    fn max_damping(&self) -> f64 {
        self.damping
            .iter()
            .zip(&self.keep)
            .filter(|(_, k)| **k)
            .fold(0.0, |m, (d, _)| m.max(*d))
    }

    fn tail(&self, c: &[Complex64]) -> f64 {
        spectral::tail_fraction_coeffs(&self.grid, c, self.dealias)
    }
}

fn axpy(y: &[Complex64], a: f64, x: &[Complex64]) -> Vec<Complex64> {
    y.iter().zip(x).map(|(y, x)| y + x * a).collect()
}

fn rk4_combine(
    c: &[Complex64],
    dt: f64,
    k1: &[Complex64],
    k2: &[Complex64],
    k3: &[Complex64],
    k4: &[Complex64],
) -> Vec<Complex64> {
    (0..c.len())
        .map(|i| c[i] + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0))
        .collect()
}

fn all_finite(c: &[Complex64]) -> bool {
    c.iter().all(|v| v.is_finite())
}

/// Tendencies `(da/dt, db/dt)` of the full system.
pub fn rhs(state: &State, cfg: &SolverConfig) -> Result<(Field, Field)> {
    state.check_finite()?;
    let ws = Workspace::new(*state.grid(), cfg);
    let (da, db) = ws.rhs(state.a.coeffs(), state.b.coeffs());
    if !(all_finite(&da) && all_finite(&db)) {
        return Err(Error::NonFinite);
    }
    Ok((Field::from_coeffs(ws.grid, da)?, Field::from_coeffs(ws.grid, db)?))
}

fn rk4_full(ws: &Workspace, a: &[Complex64], b: &[Complex64], dt: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    let (ka1, kb1) = ws.rhs(a, b);
    let (ka2, kb2) = ws.rhs(&axpy(a, 0.5 * dt, &ka1), &axpy(b, 0.5 * dt, &kb1));
    let (ka3, kb3) = ws.rhs(&axpy(a, 0.5 * dt, &ka2), &axpy(b, 0.5 * dt, &kb2));
    let (ka4, kb4) = ws.rhs(&axpy(a, dt, &ka3), &axpy(b, dt, &kb3));
    (
        rk4_combine(a, dt, &ka1, &ka2, &ka3, &ka4),
        rk4_combine(b, dt, &kb1, &kb2, &kb3, &kb4),
    )
}

fn rk4_transport(ws: &Workspace, a: &[Complex64], ux: &[f64], uy: &[f64], dt: f64) -> Vec<Complex64> {
    let k1 = ws.transport_rhs(a, ux, uy);
    let k2 = ws.transport_rhs(&axpy(a, 0.5 * dt, &k1), ux, uy);
    let k3 = ws.transport_rhs(&axpy(a, 0.5 * dt, &k2), ux, uy);
    let k4 = ws.transport_rhs(&axpy(a, dt, &k3), ux, uy);
    rk4_combine(a, dt, &k1, &k2, &k3, &k4)
}

/// One classical RK4 step of the full system.
pub fn step_rk4(state: &State, dt: f64, cfg: &SolverConfig) -> Result<State> {
    state.check_finite()?;
    let limit = cfl_dt(state, cfg)? * cfg.dt_safety;
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "dt = {dt:e} outside (0, {limit:e}]"
        )));
    }
    let ws = Workspace::new(*state.grid(), cfg);
    let (a, b) = rk4_full(&ws, state.a.coeffs(), state.b.coeffs(), dt);
    if !(all_finite(&a) && all_finite(&b)) {
        return Err(Error::NonFinite);
    }
    State::new(
        Field::from_coeffs(ws.grid, a)?,
        Field::from_coeffs(ws.grid, b)?,
        state.t + dt,
    )
}

fn max_gradient(ws: &Workspace, c: &[Complex64]) -> f64 {
    let x = ws.deriv(c, 0, |_| 1.0);
    let y = ws.deriv(c, 1, |_| 1.0);
    x.iter().zip(&y).fold(0.0_f64, |m, (p, q)| m.max(p.hypot(*q)))
}

fn cfl_from_speeds(ws: &Workspace, speed: f64, hall: f64, t_end: f64) -> f64 {
    let k = ws.k_eff();
    let mut dt = f64::INFINITY;
    if speed > 0.0 {
        dt = dt.min(C_ADV / (speed * k));
    }
    if hall > 0.0 {
        dt = dt.min(C_HALL / (hall * k * k));
    }
    let damp = ws.max_damping();
    if damp > 0.0 {
        dt = dt.min(C_VISC / damp);
    }
    if dt.is_finite() {
        dt
    } else {
        t_end
    }
}

/// Stable step `min(C_ADV / (|grad_perp b|_inf k), C_HALL / (|grad a|_inf k^2))`
/// with `k` the largest carried wavenumber magnitude, plus a hyperviscous
/// bound when `nu > 0`. Returns `t_end` for a zero state.
///
/// The Hall bound is quadratic in `k`: linearizing about a background with
/// `|grad a| = B` gives the whistler branch `omega ~ B |k|^2`.
pub fn cfl_dt(state: &State, cfg: &SolverConfig) -> Result<f64> {
    state.check_finite()?;
    let ws = Workspace::new(*state.grid(), cfg);
    let speed = max_gradient(&ws, state.b.coeffs());
    let hall = max_gradient(&ws, state.a.coeffs());
    Ok(cfl_from_speeds(&ws, speed, hall, cfg.t_end))
}

fn check_initial(ws: &Workspace, fraction: f64, cfg: &SolverConfig) -> Result<()> {
    if fraction > cfg.resolution_limit {
        return Err(Error::UnderResolved(format!(
            "initial tail fraction {fraction:e} exceeds {:e} on n = {}",
            cfg.resolution_limit,
            ws.grid.n()
        )));
    }
    Ok(())
}

/// Advance the full system from `initial` to `cfg.t_end`.
pub fn run(initial: &State, cfg: &SolverConfig, probe: &mut dyn Probe) -> Result<RunOutcome> {
    cfg.validate()?;
    initial.check_finite()?;
    let grid = *initial.grid();
    let ws = Workspace::new(grid, cfg);
    let mut a = initial.a.coeffs().to_vec();
    let mut b = initial.b.coeffs().to_vec();
    let mut t = initial.t;
    let t_end = initial.t + cfg.t_end;
    let fraction = ws.tail(&a).max(ws.tail(&b));
    check_initial(&ws, fraction, cfg)?;
    probe.observe(
        initial,
        &StepInfo {
            step: 0,
            dt: 0.0,
            resolution_fraction: fraction,
        },
    )?;

    let mut steps = 0;
    let mut last = StepInfo {
        step: 0,
        dt: 0.0,
        resolution_fraction: fraction,
    };
    let mut last_observed = 0;
    let mut abort = None;
    while t < t_end {
        if steps >= cfg.max_steps {
            abort = Some(AbortReason::MaxSteps);
            break;
        }
        let speed = max_gradient(&ws, &b);
        let hall = max_gradient(&ws, &a);
        let mut dt = cfl_from_speeds(&ws, speed, hall, cfg.t_end) * cfg.dt_safety;
        if !(dt >= cfg.min_dt) {
            abort = Some(AbortReason::CflCollapse { dt });
            break;
        }
        if t + dt >= t_end {
            dt = t_end - t;
        }
        let (na, nb) = rk4_full(&ws, &a, &b, dt);
        if !(all_finite(&na) && all_finite(&nb)) {
            abort = Some(AbortReason::NonFinite);
            break;
        }
        let fraction = ws.tail(&na).max(ws.tail(&nb));
        if fraction > cfg.resolution_limit {
            abort = Some(AbortReason::UnderResolved { fraction });
            break;
        }
        a = na;
        b = nb;
        t = if t + dt >= t_end { t_end } else { t + dt };
        steps += 1;
        last = StepInfo {
            step: steps,
            dt,
            resolution_fraction: fraction,
        };
        if steps % cfg.output_stride == 0 {
            let s = State::new(Field::from_coeffs(grid, a.clone())?, Field::from_coeffs(grid, b.clone())?, t)?;
            probe.observe(&s, &last)?;
            last_observed = steps;
        }
    }
    let final_state = State::new(Field::from_coeffs(grid, a)?, Field::from_coeffs(grid, b)?, t)?;
    if last_observed != steps {
        probe.observe(&final_state, &last)?;
    }
    Ok(RunOutcome {
        final_state,
        steps,
        abort,
    })
}

/// Evolve `a` by `a_t = -u . grad a` with the velocity held fixed; `b` is
/// carried along unchanged.
pub fn run_transport(
    initial: &State,
    velocity: &VectorField,
    cfg: &SolverConfig,
    probe: &mut dyn Probe,
) -> Result<RunOutcome> {
    cfg.validate()?;
    initial.check_finite()?;
    velocity.grid().check_same(initial.grid())?;
    let grid = *initial.grid();
    let ws = Workspace::new(grid, cfg);
    let ux = velocity.x().values();
    let uy = velocity.y().values();
    let speed = velocity.max_magnitude();
    let dt_cfl = cfl_from_speeds(&ws, speed, 0.0, cfg.t_end) * cfg.dt_safety;

    let mut a = initial.a.coeffs().to_vec();
    let mut t = initial.t;
    let t_end = initial.t + cfg.t_end;
    let fraction = ws.tail(&a);
    check_initial(&ws, fraction, cfg)?;
    probe.observe(
        initial,
        &StepInfo {
            step: 0,
            dt: 0.0,
            resolution_fraction: fraction,
        },
    )?;
    let mut steps = 0;
    let mut last = StepInfo {
        step: 0,
        dt: 0.0,
        resolution_fraction: fraction,
    };
    let mut last_observed = 0;
    let mut abort = None;
    if !(dt_cfl >= cfg.min_dt) && t < t_end {
        abort = Some(AbortReason::CflCollapse { dt: dt_cfl });
    }
    while abort.is_none() && t < t_end {
        if steps >= cfg.max_steps {
            abort = Some(AbortReason::MaxSteps);
            break;
        }
        let dt = if t + dt_cfl >= t_end { t_end - t } else { dt_cfl };
        let na = rk4_transport(&ws, &a, ux, uy, dt);
        if !all_finite(&na) {
            abort = Some(AbortReason::NonFinite);
            break;
        }
        let fraction = ws.tail(&na);
        if fraction > cfg.resolution_limit {
            abort = Some(AbortReason::UnderResolved { fraction });
            break;
        }
        a = na;
        t = if t + dt >= t_end { t_end } else { t + dt };
        steps += 1;
        last = StepInfo {
            step: steps,
            dt,
            resolution_fraction: fraction,
        };
        if steps % cfg.output_stride == 0 {
            let s = State::new(Field::from_coeffs(grid, a.clone())?, initial.b.clone(), t)?;
            probe.observe(&s, &last)?;
            last_observed = steps;
        }
    }
    let final_state = State::new(Field::from_coeffs(grid, a)?, initial.b.clone(), t)?;
    if last_observed != steps {
        probe.observe(&final_state, &last)?;
    }
    Ok(RunOutcome {
        final_state,
        steps,
        abort,
    })
}

/// Frozen-velocity run with `u0 = grad_perp b` of the initial state
/// (restricted to the retained modes when dealiasing, so that it is exactly
/// divergence free and the scheme conserves `|a|_{L^2}`).
pub fn run_frozen_velocity(initial: &State, cfg: &SolverConfig, probe: &mut dyn Probe) -> Result<RunOutcome> {
    let b = if cfg.dealias {
        spectral::dealias(&initial.b)
    } else {
        initial.b.clone()
    };
    let u0 = spectral::gradient_perp(&b)?;
    run_transport(initial, &u0, cfg, probe)
}
