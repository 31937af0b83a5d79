//! Travelling waves of a self-organised hydrodynamics model with phase, in a
//! strip and in an annulus, plus a finite-volume solver for the full system.
//!
//! The numerical kernels ([`implicit`], [`roots`], [`quad`], [`ode`],
//! [`potential`], [`params`]) are generic over [`Real`]; the wave builders and
//! the solver work in `f64`.

pub mod annulus;
pub mod error;
pub mod fv;
pub mod implicit;
pub mod io;
pub mod ode;
pub mod params;
pub mod potential;
pub mod quad;
pub mod real;
pub mod roots;
pub mod strip;

pub use error::{Error, NoSolutionReason, Result};
pub use real::Real;

pub type Params = params::ModelParams<f64>;
pub type Derived = params::DerivedParams<f64>;
pub type Potential = potential::Potential<f64>;
pub type QuadResult = quad::QuadResult<f64>;
