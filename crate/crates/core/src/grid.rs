//! Periodic square grid on `[-L, L)^2`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Uniform periodic grid with `n` points per dimension on `[-L, L)^2`.
///
/// Storage convention for physical samples is row-major with the x index
/// outermost: sample `(i, j)` sits at `(x_i, y_j)` and lives at `i * n + j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    half_width: f64,
}

impl Grid {
    pub const MIN_POINTS: usize = 16;

    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        if n < Self::MIN_POINTS || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n = {n} must be a power of two and at least {}",
                Self::MIN_POINTS
            )));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "box half width {half_width} must be positive and finite"
            )));
        }
        Ok(Self { n, half_width })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    /// Number of physical samples, `n^2`.
    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Fundamental wavenumber `pi / L`.
    #[inline]
    pub fn k0(&self) -> f64 {
        PI / self.half_width
    }

    /// Largest resolved wavenumber per axis, `(n/2) pi / L`.
    #[inline]
    pub fn k_max(&self) -> f64 {
        self.k0() * (self.n / 2) as f64
    }

    /// Coordinate of grid line `i` along either axis.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.dx()
    }

    /// Number of stored modes along y (half spectrum), `n/2 + 1`.
    #[inline]
    pub fn half_modes(&self) -> usize {
        self.n / 2 + 1
    }

    /// Number of stored complex coefficients.
    #[inline]
    pub fn spectral_len(&self) -> usize {
        self.half_modes() * self.n
    }

    /// Signed integer wavenumber index of the full-spectrum axis.
    #[inline]
    pub fn signed_index(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Area of the periodic box, `(2L)^2`.
    #[inline]
    pub fn area(&self) -> f64 {
        let w = 2.0 * self.half_width;
        w * w
    }

    /// Quadrature weight of a single sample, `dx^2`.
    #[inline]
    pub fn cell_area(&self) -> f64 {
        let dx = self.dx();
        dx * dx
    }

    /// Visit every stored spectral mode as `(storage index, kx, ky, multiplicity)`.
    ///
    /// Coefficients are stored with the ky index outermost:
    /// `index = j * n + i` with `j` in `0..=n/2` and `i` in `0..n`. The
    /// multiplicity is the number of full-spectrum modes the entry stands for
    /// (1 on the `ky = 0` and Nyquist columns, 2 elsewhere).
    pub fn for_each_mode(&self, mut visit: impl FnMut(usize, f64, f64, f64)) {
        let n = self.n;
        let k0 = self.k0();
        for j in 0..self.half_modes() {
            let ky = j as f64 * k0;
            let mult = if j == 0 || j == n / 2 { 1.0 } else { 2.0 };
            for i in 0..n {
                let kx = self.signed_index(i) as f64 * k0;
                visit(j * n + i, kx, ky, mult);
            }
        }
    }

    /// Same as [`Grid::for_each_mode`] but yields integer wavenumber indices.
    pub fn for_each_mode_index(&self, mut visit: impl FnMut(usize, i64, i64, f64)) {
        let n = self.n;
        for j in 0..self.half_modes() {
            let mult = if j == 0 || j == n / 2 { 1.0 } else { 2.0 };
            for i in 0..n {
                visit(j * n + i, self.signed_index(i), j as i64, mult);
            }
        }
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.n == other.n && self.half_width.to_bits() == other.half_width.to_bits()
    }

    pub fn check_same(&self, other: &Grid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}
