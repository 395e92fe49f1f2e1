//! Numerical tools for relativistic plasmas with Landau collisions and
//! Maxwell fields in a perfectly conducting box.
//!
//! The crate is organised bottom-up:
//!
//! * [`vgrid`] - truncated momentum lattices, tensor midpoint quadrature and
//!   adaptive 1D Gauss-Kronrod quadrature.
//! * [`equilibria`] - species constants, Juttner equilibria, the Bessel
//!   function `K_2` from its integral representation, neutrality.
//! * [`kernel`] - the relativistic Landau (Belyaev-Budker) kernel.
//! * [`landau`] - the linearised collision operator `L = A - K`, the
//!   macro-micro projection, the nonlinear form `Gamma`, spectral diagnostics.
//! * [`momentfn`] - moment-constructed test functions `B_ij` and `C_i`.
//! * [`maxwell`] - Yee scheme in a perfectly conducting box and the
//!   momentum / angular-momentum identities of the field.
//! * [`scenarios`] - relaxation runs, specular billiards, energy functionals.
//! * [`harness`] - configuration, checks and report emission used by the
//!   `rvml` binary.
//!
//! Physical constants default to one (`m = e = k_bT = c = 1`).

mod cg;
pub mod equilibria;
pub mod error;
pub mod harness;
pub mod kernel;
pub mod landau;
pub mod maxwell;
pub mod momentfn;
pub mod scenarios;
pub mod vgrid;

pub use error::{Error, Result};

/// Three-vector used for momenta and positions.
pub type Vec3 = nalgebra::Vector3<f64>;
/// Dense 3x3 matrix used for kernel values and diffusion tensors.
pub type Mat3 = nalgebra::Matrix3<f64>;
