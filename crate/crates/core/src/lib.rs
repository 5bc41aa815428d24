//! Hermite-Fourier spectral toolkit for the Grushin operator
//! `-Δ_G = -Δ_x - |x|² Δ_y` on `R^{d1} x Y^{d2}`.
//!
//! After a Fourier transform in `y`, each frequency fiber `η` carries a rescaled
//! harmonic oscillator whose eigenfunctions are scaled Hermite functions. Fields are
//! stored as coefficients on (Hermite mode, frequency) pairs, and every linear flow
//! becomes a diagonal multiplier.

pub mod admissibility;
pub mod dispersion;
pub mod error;
pub mod hermite_basis;
pub mod nls;
pub mod par;
pub mod propagators;
pub mod quadrature;
pub mod report;
pub mod runner;
pub mod special;
pub mod spectral_field;
pub mod strichartz;

pub use error::{Error, Result};
pub use num_complex::Complex64;
