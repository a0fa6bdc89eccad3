//! Pseudo-spectral simulation of the 2.5D electron MHD system
//! `a_t + grad_perp b . grad a = 0`, `b_t + grad_perp a . grad(lap a) = 0`
//! on a periodic box, together with the explicit norm-inflation data, the
//! closed-form frozen-velocity carrier, Sobolev diagnostics and an exact
//! parameter-region checker.

pub mod approx;
pub mod checkpoint;
pub mod diagnostics;
pub mod error;
pub mod fft;
pub mod fit;
pub mod field;
pub mod grid;
pub mod initial;
pub mod params;
pub mod profile;
pub mod region;
pub mod solver;
pub mod spectral;
pub mod state;

pub use error::{Error, Result};
pub use field::{Field, VectorField};
pub use grid::Grid;
pub use params::ParamSet;
pub use profile::BumpProfile;
pub use state::State;
