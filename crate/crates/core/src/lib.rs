//! Numerics for weighted-energy (Carleman) inequalities on concentric polar
//! grids, and for Lipschitz-stability experiments that recover Dirichlet data
//! on a circle from Cauchy data measured on a second, nested circle.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, configuration,
//! parallel sweeps and the command line live in the companion `carleman-lab`
//! crate.
//!
//! Layout:
//! - [`geometry`]: polar grids over disks and annuli, boundary curves, quadrature.
//! - [`riemannian`]: metric presets, the Laplace-Beltrami operator and boundary
//!   derivatives (metric normal, tangential gradients).
//! - [`weights`]: radial weight construction, validation, and the elliptic and
//!   degenerate parabolic weight factors.
//! - [`solvers`]: interior / truncated exterior elliptic solvers, a
//!   Crank-Nicolson heat solver, and Cauchy-data extraction.
//! - [`carleman`]: both sides of the elliptic and parabolic inequalities and
//!   `(s, gamma)` sweeps.
//! - [`stability`]: admissible data sampling and stability ratios.
#![no_std]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
pub use error::*;

pub mod carleman;
pub mod geometry;
pub mod riemannian;
pub mod solvers;
pub mod sparse;
pub mod special;
pub mod stability;
pub mod trace;
pub mod weights;

pub use geometry::{BoundaryCurve, BoundaryId, BoundaryRole, DomainKind, GridDomain, GridField};
pub use riemannian::{MetricField, MetricPreset, PotentialField, PotentialPreset};
pub use stability::{AdmissibleSpec, ParabolicAdmissibleSpec, StabilityReport};
pub use trace::TrigSeries;
