use crate::error::{Error, Result};
use crate::field::{Field, VectorField};
use crate::grid::Grid;
use crate::spectral;

/// The pair `(a, b)` at time `t`.
#[derive(Clone, Debug)]
pub struct State {
    pub a: Field,
    pub b: Field,
    pub t: f64,
}

impl State {
    pub fn new(a: Field, b: Field, t: f64) -> Result<Self> {
        a.grid().check_same(b.grid())?;
        if !t.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(Self { a, b, t })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            a: Field::zeros(grid),
            b: Field::zeros(grid),
            t: 0.0,
        }
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        self.a.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite()
    }

    pub fn check_finite(&self) -> Result<()> {
        self.a.check_finite()?;
        self.b.check_finite()
    }

    /// Horizontal velocity `u = grad_perp b`.
    pub fn velocity(&self) -> Result<VectorField> {
        spectral::gradient_perp(&self.b)
    }
}
