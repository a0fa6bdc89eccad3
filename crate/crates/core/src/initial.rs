//! Initial data `a0 = lambda^(1 - beta gamma) g(lambda r) cos(m theta)`,
//! `b0 = lambda^(2 - beta) h(lambda r)` and the associated velocity
//! `u0 = lambda^(3 - beta) h'(lambda r) e_theta`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::{Field, VectorField};
use crate::fit::fit_power_law;
use crate::grid::Grid;
use crate::params::ParamSet;
use crate::profile::{BumpProfile, SUPPORT_END};
use crate::spectral;
use crate::state::State;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InitOptions {
    /// Rescale both fields by one factor so `|a0|_{H^beta} + |b0|_{H^(beta-1)} = 1`.
    pub normalize: bool,
}

#[derive(Clone, Debug)]
pub struct InitialData {
    pub state: State,
    /// Common factor applied to both fields (1 unless normalized).
    pub scale: f64,
}

/// Default box half width for a given `lambda`: twice the support radius.
pub fn default_half_width(lambda: f64) -> f64 {
    2.0 * SUPPORT_END / lambda
}

/// Smallest `n` accepted by [`check_resolution`]: eight points per
/// azimuthal and per radial oscillation.
pub fn required_points(p: &ParamSet, grid: &Grid) -> f64 {
    let radial = 4.0 * p.lambda * grid.half_width() / PI;
    8.0 * (p.m as f64).max(radial)
}

pub fn check_resolution(p: &ParamSet, grid: &Grid) -> Result<()> {
    let support = SUPPORT_END / p.lambda;
    if support >= grid.half_width() {
        return Err(Error::BoxTooSmall(format!(
            "support radius {support} does not fit inside the box half width {}",
            grid.half_width()
        )));
    }
    let need = required_points(p, grid);
    if (grid.n() as f64) < need {
        return Err(Error::UnderResolved(format!(
            "n = {} but the data need n >= {need:.1}",
            grid.n()
        )));
    }
    Ok(())
}

fn polar(x: f64, y: f64) -> (f64, f64) {
    (x.hypot(y), y.atan2(x))
}

/// Amplitude `lambda^(1 - beta gamma)` of `a0`, with the nominal `gamma`.
pub fn a0_amplitude(p: &ParamSet) -> f64 {
    p.lambda.powf(1.0 - p.beta * p.gamma)
}

pub fn b0_amplitude(p: &ParamSet) -> f64 {
    p.lambda.powf(2.0 - p.beta)
}

pub fn u0_amplitude(p: &ParamSet) -> f64 {
    p.lambda.powf(3.0 - p.beta)
}

pub fn make_initial_data(
    p: &ParamSet,
    grid: Grid,
    profile: &BumpProfile,
    options: InitOptions,
) -> Result<InitialData> {
    p.validate()?;
    check_resolution(p, &grid)?;
    let amp_a = a0_amplitude(p);
    let amp_b = b0_amplitude(p);
    let m = p.m as f64;
    let lambda = p.lambda;
    let a = Field::from_fn(grid, |x, y| {
        let (r, th) = polar(x, y);
        amp_a * profile.g(lambda * r) * (m * th).cos()
    });
    let b = Field::from_fn(grid, |x, y| amp_b * profile.h(lambda * x.hypot(y)));
    let mut scale = 1.0;
    let (a, b) = if options.normalize {
        let total = spectral::sobolev_norm(&a, p.beta, false)?
            + spectral::sobolev_norm(&b, p.beta - 1.0, false)?;
        scale = 1.0 / total;
        (a.scale(scale), b.scale(scale))
    } else {
        (a, b)
    };
    Ok(InitialData {
        state: State::new(a, b, 0.0)?,
        scale,
    })
}

/// `u0` sampled directly from the closed form (not via `grad_perp b0`).
pub fn make_u0(p: &ParamSet, grid: Grid, profile: &BumpProfile) -> Result<VectorField> {
    p.validate()?;
    check_resolution(p, &grid)?;
    let amp = u0_amplitude(p);
    let lambda = p.lambda;
    let speed = |x: f64, y: f64| {
        let r = x.hypot(y);
        if r > 0.0 {
            amp * profile.h_prime(lambda * r) / r
        } else {
            0.0
        }
    };
    VectorField::new(
        Field::from_fn(grid, |x, y| -y * speed(x, y)),
        Field::from_fn(grid, |x, y| x * speed(x, y)),
    )
}

/// `|u|_inf + |Du|_inf`, with `|Du|` the pointwise Frobenius norm.
pub fn c1_norm(u: &VectorField) -> Result<f64> {
    let ux = spectral::derivative(u.x(), 1, 0)?;
    let uy = spectral::derivative(u.x(), 0, 1)?;
    let vx = spectral::derivative(u.y(), 1, 0)?;
    let vy = spectral::derivative(u.y(), 0, 1)?;
    let mut du = 0.0_f64;
    for k in 0..ux.values().len() {
        let f = (ux.values()[k].powi(2)
            + uy.values()[k].powi(2)
            + vx.values()[k].powi(2)
            + vy.values()[k].powi(2))
        .sqrt();
        du = du.max(f);
    }
    Ok(u.max_magnitude() + du)
}

/// Norm family tracked by [`verify_initial_scalings`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ScalingQuantity {
    /// `|a0|` in homogeneous `H^s`.
    A0(f64),
    /// `|u0|` in homogeneous `H^s`.
    U0(f64),
    /// `|u0|_{C^1}`.
    U0C1,
}

impl ScalingQuantity {
    /// Exponent of `lambda` claimed for this norm.
    pub fn predicted(&self, p: &ParamSet) -> f64 {
        match *self {
            ScalingQuantity::A0(s) => p.gamma * (s - p.beta),
            ScalingQuantity::U0(s) => s + 2.0 - p.beta,
            ScalingQuantity::U0C1 => 4.0 - p.beta,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            ScalingQuantity::A0(s) => format!("a0_Hdot{s}"),
            ScalingQuantity::U0(s) => format!("u0_Hdot{s}"),
            ScalingQuantity::U0C1 => "u0_C1".to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub quantity: ScalingQuantity,
    pub lambdas: Vec<f64>,
    pub norms: Vec<f64>,
    pub slope: f64,
    pub r2: f64,
    pub predicted: f64,
}

impl ScalingFit {
    /// Relative deviation `|slope - predicted| / |predicted|`; absolute when
    /// the prediction is zero.
    pub fn deviation(&self) -> f64 {
        let d = (self.slope - self.predicted).abs();
        if self.predicted == 0.0 {
            d
        } else {
            d / self.predicted.abs()
        }
    }

    pub fn within(&self, tolerance: f64) -> bool {
        self.deviation() <= tolerance
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub fits: Vec<ScalingFit>,
}

impl ScalingReport {
    pub fn get(&self, q: ScalingQuantity) -> Option<&ScalingFit> {
        self.fits.iter().find(|f| f.quantity == q)
    }
}

/// Fit the `lambda`-exponents of `a0` and `u0` norms over a sweep.
///
/// All members must share `beta` and `gamma`; at least three distinct
/// `lambda` values are required. Norms are homogeneous.
pub fn verify_initial_scalings(
    cases: &[(ParamSet, Grid)],
    a0_orders: &[f64],
    u0_orders: &[f64],
    profile: &BumpProfile,
) -> Result<ScalingReport> {
    if cases.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "scaling sweep needs at least 3 lambda values, got {}",
            cases.len()
        )));
    }
    let (first, _) = cases[0];
    if cases
        .iter()
        .any(|(p, _)| p.beta != first.beta || p.gamma != first.gamma)
    {
        return Err(Error::InvalidArgument(
            "scaling sweep must hold beta and gamma fixed".into(),
        ));
    }
    let mut quantities: Vec<ScalingQuantity> =
        a0_orders.iter().map(|&s| ScalingQuantity::A0(s)).collect();
    quantities.extend(u0_orders.iter().map(|&s| ScalingQuantity::U0(s)));
    quantities.push(ScalingQuantity::U0C1);

    let mut table = vec![Vec::with_capacity(cases.len()); quantities.len()];
    let mut lambdas = Vec::with_capacity(cases.len());
    for (p, grid) in cases {
        let data = make_initial_data(p, *grid, profile, InitOptions::default())?;
        let u0 = make_u0(p, *grid, profile)?;
        lambdas.push(p.lambda);
        for (q, column) in quantities.iter().zip(table.iter_mut()) {
            let v = match *q {
                ScalingQuantity::A0(s) => spectral::sobolev_norm(&data.state.a, s, true)?,
                ScalingQuantity::U0(s) => spectral::sobolev_norm_vec(&u0, s, true)?,
                ScalingQuantity::U0C1 => c1_norm(&u0)?,
            };
            column.push(v);
        }
    }

    let mut fits = Vec::with_capacity(quantities.len());
    for (q, norms) in quantities.into_iter().zip(table) {
        let fit = fit_power_law(&lambdas, &norms, 3, 0.5)?;
        fits.push(ScalingFit {
            quantity: q,
            lambdas: lambdas.clone(),
            norms,
            slope: fit.slope,
            r2: fit.r2,
            predicted: q.predicted(&first),
        });
    }
    Ok(ScalingReport { fits })
}
