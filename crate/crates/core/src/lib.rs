//! Numerical toolkit for Ahlfors–David regular sets: Cantor and Schottky limit sets, regularity
//! constants, multiscale interval trees, additive energy, a discretized fractal uncertainty
//! operator on the circle, and closed-form spectral-gap constants.

pub mod constants;
pub mod energy;
pub mod error;
pub mod fit;
pub mod fup;
pub mod geometry;
pub mod regularity;
pub mod report;
pub mod sets;
pub mod tree;

pub use error::{Error, Result};
pub use fit::FitReport;
