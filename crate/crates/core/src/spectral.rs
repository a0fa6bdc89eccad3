//! Spectral differential operators, Sobolev norms and dealiasing.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{Field, VectorField};
use crate::grid::Grid;

/// Highest combined derivative order accepted by [`derivative`].
pub const MAX_DERIVATIVE_ORDER: u32 = 4;

/// Mean-mode tolerance (relative to the `L^2` norm) for negative-order
/// homogeneous norms.
pub const ZERO_MEAN_TOLERANCE: f64 = 1e-6;

/// True when the integer mode `(i, j)` survives the square 2/3 truncation.
#[inline]
pub fn retained(grid: &Grid, i: i64, j: i64) -> bool {
    let n = grid.n() as i64;
    3 * i.abs() <= n && 3 * j.abs() <= n
}

/// `(i kx)^ox (i ky)^oy`, with the Nyquist mode dropped along any axis
/// differentiated an odd number of times.
fn derivative_multiplier(grid: &Grid, i: i64, j: i64, ox: u32, oy: u32) -> Complex64 {
    let half = grid.n() as i64 / 2;
    if (ox % 2 == 1 && i.abs() == half) || (oy % 2 == 1 && j == half) {
        return Complex64::new(0.0, 0.0);
    }
    let kx = i as f64 * grid.k0();
    let ky = j as f64 * grid.k0();
    Complex64::new(0.0, kx).powu(ox) * Complex64::new(0.0, ky).powu(oy)
}

/// Multiply every coefficient by `m(i, j)` (integer mode indices).
pub fn map_coeffs(f: &Field, mut m: impl FnMut(i64, i64) -> Complex64) -> Vec<Complex64> {
    let coeffs = f.coeffs();
    let mut out = vec![Complex64::new(0.0, 0.0); coeffs.len()];
    f.grid().for_each_mode_index(|idx, i, j, _| {
        out[idx] = coeffs[idx] * m(i, j);
    });
    out
}

fn check_input(f: &Field) -> Result<()> {
    f.check_finite()
}

/// Spectral derivative `d^ox/dx^ox d^oy/dy^oy f`.
pub fn derivative(f: &Field, ox: u32, oy: u32) -> Result<Field> {
    if ox + oy > MAX_DERIVATIVE_ORDER {
        return Err(Error::DerivativeOrder(ox, oy));
    }
    check_input(f)?;
    let grid = *f.grid();
    let coeffs = map_coeffs(f, |i, j| derivative_multiplier(&grid, i, j, ox, oy));
    Field::from_coeffs(grid, coeffs)
}

/// Physical samples of a derivative, optionally restricted to retained modes.
pub(crate) fn derivative_values(f: &Field, ox: u32, oy: u32, truncate: bool) -> Vec<f64> {
    let grid = *f.grid();
    let coeffs = map_coeffs(f, |i, j| {
        if truncate && !retained(&grid, i, j) {
            Complex64::new(0.0, 0.0)
        } else {
            derivative_multiplier(&grid, i, j, ox, oy)
        }
    });
    crate::fft::Fft2::get(grid.n()).inverse(&coeffs)
}

pub fn laplacian(f: &Field) -> Result<Field> {
    check_input(f)?;
    let grid = *f.grid();
    let k0 = grid.k0();
    let coeffs = map_coeffs(f, |i, j| {
        Complex64::new(-((i * i + j * j) as f64) * k0 * k0, 0.0)
    });
    Field::from_coeffs(grid, coeffs)
}

pub fn gradient(f: &Field) -> Result<VectorField> {
    VectorField::new(derivative(f, 1, 0)?, derivative(f, 0, 1)?)
}

/// `(-d_y f, d_x f)`.
pub fn gradient_perp(f: &Field) -> Result<VectorField> {
    let fy = derivative(f, 0, 1)?;
    let fx = derivative(f, 1, 0)?;
    VectorField::new(fy.scale(-1.0), fx)
}

pub fn divergence(v: &VectorField) -> Result<Field> {
    derivative(v.x(), 1, 0)?.add(&derivative(v.y(), 0, 1)?)
}

/// Scalar curl `d_x v_y - d_y v_x`.
pub fn curl(v: &VectorField) -> Result<Field> {
    derivative(v.y(), 1, 0)?.sub(&derivative(v.x(), 0, 1)?)
}

/// Square 2/3-rule truncation.
pub fn dealias(f: &Field) -> Field {
    let grid = *f.grid();
    let coeffs = map_coeffs(f, |i, j| {
        if retained(&grid, i, j) {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    Field::from_coeffs(grid, coeffs).expect("length matches grid")
}

/// Pointwise bracket of two sets of derivative samples:
/// `grad_perp f . grad g = -f_y g_x + f_x g_y`.
pub(crate) fn bracket_from_derivatives(fx: &[f64], fy: &[f64], gx: &[f64], gy: &[f64]) -> Vec<f64> {
    fx.iter()
        .zip(fy)
        .zip(gx.iter().zip(gy))
        .map(|((fx, fy), (gx, gy))| fx * gy - fy * gx)
        .collect()
}

/// Zero every coefficient outside the retained square, in place.
pub(crate) fn truncate_coeffs(grid: &Grid, coeffs: &mut [Complex64]) {
    grid.for_each_mode_index(|idx, i, j, _| {
        if !retained(grid, i, j) {
            coeffs[idx] = Complex64::new(0.0, 0.0);
        }
    });
}

/// Dealiased Poisson bracket `grad_perp f . grad g`.
///
/// Both inputs are truncated to the retained modes before the product and
/// the product is truncated again, which makes the result the exact
/// projection of the bracket of the truncated inputs.
pub fn poisson_bracket(f: &Field, g: &Field) -> Result<Field> {
    f.grid().check_same(g.grid())?;
    check_input(f)?;
    check_input(g)?;
    let grid = *f.grid();
    let fx = derivative_values(f, 1, 0, true);
    let fy = derivative_values(f, 0, 1, true);
    let gx = derivative_values(g, 1, 0, true);
    let gy = derivative_values(g, 0, 1, true);
    let product = bracket_from_derivatives(&fx, &fy, &gx, &gy);
    let mut coeffs = crate::fft::Fft2::get(grid.n()).forward(&product);
    truncate_coeffs(&grid, &mut coeffs);
    Field::from_coeffs(grid, coeffs)
}

/// Weighted coefficient sum `sum_k w(k)^(2s) |c_k|^2 * area`, square-rooted.
///
/// `homogeneous` uses `w = |k|` and skips the zero mode; otherwise
/// `w = (1 + |k|^2)^(1/2)`. Negative-order homogeneous norms require the
/// field's mean to vanish relative to its `L^2` norm.
pub fn sobolev_norm(f: &Field, s: f64, homogeneous: bool) -> Result<f64> {
    check_input(f)?;
    let grid = *f.grid();
    let coeffs = f.coeffs();
    if homogeneous && s < 0.0 {
        let norm = f.l2_norm_spectral();
        let mean = coeffs[0].norm() * grid.area().sqrt();
        if mean > ZERO_MEAN_TOLERANCE * norm {
            return Err(Error::NonzeroMean { mean, norm });
        }
    }
    let mut acc = 0.0;
    grid.for_each_mode(|idx, kx, ky, mult| {
        let k2 = kx * kx + ky * ky;
        let weight = if homogeneous {
            if idx == 0 {
                return;
            }
            k2.powf(s)
        } else {
            (1.0 + k2).powf(s)
        };
        acc += mult * weight * coeffs[idx].norm_sqr();
    });
    Ok((acc * grid.area()).sqrt())
}

/// Sobolev norm of a vector field, `sqrt(|v_x|^2 + |v_y|^2)`.
pub fn sobolev_norm_vec(v: &VectorField, s: f64, homogeneous: bool) -> Result<f64> {
    Ok(sobolev_norm(v.x(), s, homogeneous)?.hypot(sobolev_norm(v.y(), s, homogeneous)?))
}

/// Fraction of the `L^2` content of `f` carried by modes whose
/// `max(|i|, |j|)` lies above `7/8` of the band limit (`n/3` when the field
/// is dealiased, `n/2` otherwise).
pub fn tail_fraction(f: &Field, dealiased: bool) -> f64 {
    tail_fraction_coeffs(f.grid(), f.coeffs(), dealiased)
}

/// [`tail_fraction`] on a raw coefficient array.
pub fn tail_fraction_coeffs(grid: &Grid, coeffs: &[Complex64], dealiased: bool) -> f64 {
    let n = grid.n() as f64;
    let limit = if dealiased { n / 3.0 } else { n / 2.0 };
    let threshold = 7.0 / 8.0 * limit;
    let mut total = 0.0;
    let mut tail = 0.0;
    grid.for_each_mode_index(|idx, i, j, mult| {
        let e = mult * coeffs[idx].norm_sqr();
        total += e;
        if (i.abs().max(j.abs()) as f64) > threshold {
            tail += e;
        }
    });
    if total > 0.0 {
        tail / total
    } else {
        0.0
    }
}
