//! Scalar and vector fields carrying both grid samples and Fourier coefficients.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::grid::Grid;

/// Real scalar field on a [`Grid`].
///
/// A field is built either from samples or from coefficients and the other
/// representation is computed immediately, so both are always in sync.
/// Coefficients follow the half-spectrum layout described on
/// [`Grid::for_each_mode`], normalised so that samples are the plain sum of
/// modes.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
    coeffs: Vec<Complex64>,
}

impl Field {
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        let coeffs = Fft2::get(grid.n()).forward(&values);
        Ok(Self {
            grid,
            values,
            coeffs,
        })
    }

    pub fn from_coeffs(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.spectral_len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients, got {}",
                grid.spectral_len(),
                coeffs.len()
            )));
        }
        let values = Fft2::get(grid.n()).inverse(&coeffs);
        Ok(Self {
            grid,
            values,
            coeffs,
        })
    }

    /// Both representations as stored; the caller guarantees they agree.
    pub(crate) fn from_parts(grid: Grid, values: Vec<f64>, coeffs: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() || coeffs.len() != grid.spectral_len() {
            return Err(Error::InvalidArgument("sample or coefficient count does not match grid".into()));
        }
        Ok(Self {
            grid,
            values,
            coeffs,
        })
    }

    /// Sample `f(x, y)` at every grid point.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n();
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..n {
            let x = grid.coord(i);
            for j in 0..n {
                values.push(f(x, grid.coord(j)));
            }
        }
        Self::from_values(grid, values).expect("length matches grid")
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
            coeffs: vec![Complex64::new(0.0, 0.0); grid.spectral_len()],
        }
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Sample at grid point `(i, j)`.
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n() + j]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite()) && self.coeffs.iter().all(|c| c.is_finite())
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite)
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Box average (the zero mode).
    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    /// `L^2` norm by grid quadrature.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_area()).sqrt()
    }

    /// `L^2` norm from the coefficients (Parseval).
    pub fn l2_norm_spectral(&self) -> f64 {
        let mut acc = 0.0;
        self.grid.for_each_mode(|idx, _, _, mult| {
            acc += mult * self.coeffs[idx].norm_sqr();
        });
        (acc * self.grid.area()).sqrt()
    }

    /// `sum(values * other)` times the cell area.
    pub fn inner(&self, other: &Field) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.grid.cell_area())
    }

    /// `alpha * self + beta * other`, applied to both representations.
    pub fn lin_comb(&self, alpha: f64, other: &Field, beta: f64) -> Result<Field> {
        self.grid.check_same(&other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * alpha + b * beta)
            .collect();
        Ok(Field {
            grid: self.grid,
            values,
            coeffs,
        })
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.lin_comb(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.lin_comb(1.0, other, -1.0)
    }

    pub fn scale(&self, alpha: f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|v| alpha * v).collect(),
            coeffs: self.coeffs.iter().map(|c| c * alpha).collect(),
        }
    }

    /// Pointwise product, transformed back to coefficients (aliased).
    pub fn mul(&self, other: &Field) -> Result<Field> {
        self.grid.check_same(&other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        Field::from_values(self.grid, values)
    }

    pub fn max_abs_diff(&self, other: &Field) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
    }
}

/// Two-component field sharing one grid.
#[derive(Clone, Debug)]
pub struct VectorField {
    x: Field,
    y: Field,
}

impl VectorField {
    pub fn new(x: Field, y: Field) -> Result<Self> {
        x.grid().check_same(y.grid())?;
        Ok(Self { x, y })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            x: Field::zeros(grid),
            y: Field::zeros(grid),
        }
    }

    #[inline]
    pub fn x(&self) -> &Field {
        &self.x
    }

    #[inline]
    pub fn y(&self) -> &Field {
        &self.y
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        self.x.grid()
    }

    pub fn into_parts(self) -> (Field, Field) {
        (self.x, self.y)
    }

    pub fn sub(&self, other: &VectorField) -> Result<VectorField> {
        VectorField::new(self.x.sub(&other.x)?, self.y.sub(&other.y)?)
    }

    pub fn add(&self, other: &VectorField) -> Result<VectorField> {
        VectorField::new(self.x.add(&other.x)?, self.y.add(&other.y)?)
    }

    pub fn scale(&self, alpha: f64) -> VectorField {
        VectorField {
            x: self.x.scale(alpha),
            y: self.y.scale(alpha),
        }
    }

    /// Largest pointwise Euclidean magnitude.
    pub fn max_magnitude(&self) -> f64 {
        self.x
            .values()
            .iter()
            .zip(self.y.values())
            .fold(0.0_f64, |m, (a, b)| m.max(a.hypot(*b)))
    }

    pub fn l2_norm(&self) -> f64 {
        self.x.l2_norm().hypot(self.y.l2_norm())
    }

    pub fn max_abs_diff(&self, other: &VectorField) -> Result<f64> {
        Ok(self.x.max_abs_diff(&other.x)?.max(self.y.max_abs_diff(&other.y)?))
    }
}
