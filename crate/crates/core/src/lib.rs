//! Compound Poisson processes on the rotation group SO(3) and nonparametric
//! recovery of their jump density by characteristic-function decompounding.
//!
//! The crate is organised bottom-up:
//!
//! * [`rotations`]: unit-quaternion rotations, ZYZ Euler angles, Haar and
//!   zonal sampling.
//! * [`quadrature`]: Gauss–Legendre rules on `[-1, 1]` and on the Euler angle
//!   `θ ∈ [0, π]` with the Haar weight `sin θ / 2`.
//! * [`harmonic`]: Legendre polynomials, Wigner d-matrices, the irreducible
//!   representations `U^δ`, characters and zonal Legendre transforms.
//! * [`processes`]: Poisson counts, compound products, Brownian (heat-kernel)
//!   noise, interlacing, and closed-form characteristic spectra.
//! * [`decompound`]: empirical characteristic matrices, positivity gates,
//!   the Hermitian matrix logarithm, inversion and density reconstruction.
//! * [`scattering`]: Henyey–Greenstein phase function and the multiple
//!   scattering forward model.
//! * [`stats`]: goodness-of-fit statistics used by tests and reports.

// `!(x > 0.0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod decompound;
pub mod error;
pub mod harmonic;
pub mod io;
pub mod processes;
pub mod quadrature;
pub mod rotations;
pub mod scattering;
pub mod stats;

pub use error::{Error, Result};
pub use rotations::{EulerZyz, Rotation};
