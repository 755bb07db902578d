//! Numerical laboratory for wave-corpuscle solutions of the nonlinear
//! Schrödinger equation in external electromagnetic potentials.
//!
//! The crate is organised bottom-up: [`fields`] holds polynomial potentials
//! and their splitting, [`formfactor`] the radial ground states and the
//! nonlinearity they determine, [`dynamics`] the Newton–Lorentz trajectory,
//! [`corpuscle`] the exact solution itself, [`conservation`] the
//! energy–momentum bookkeeping and [`concentration`] the shrinking-tube
//! diagnostics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod concentration;
pub mod conservation;
pub mod constants;
pub mod corpuscle;
pub mod dynamics;
pub mod error;
pub mod fields;
pub mod formfactor;
pub mod quadrature;
pub mod selftest;

pub use constants::PhysicalConstants;
pub use error::{Error, Result};
pub use fields::{Mat3, Vec3};
pub use num_complex::Complex64;
