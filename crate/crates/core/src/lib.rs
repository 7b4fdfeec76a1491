//! Numerical toolkit for the Liouville geodesic current of the hyperbolic
//! plane under shear deformations along the Farey tessellation.
//!
//! The crate is organized bottom-up:
//!
//! * [`hyperbolic`]: boundary points, Möbius maps, geodesics, charts.
//! * [`farey`]: the Farey tessellation as a maximal lamination, with triangle
//!   enumeration, the separation order, side labels, spanning families.
//! * [`cocycle`]: per-leaf transverse cocycles and `α(T)`.
//! * [`earthquake`]: elementary, triangle and truncated shear maps.
//! * [`quadrature`]: Gauss panels, tensor integration, finite differences.
//! * [`liouville`]: test functions, Liouville and pullback integrals,
//!   the cosine kernels `C₀(φ, g)` and `C₀(φ, T)`.
//! * [`series`]: the tangent series, boundary terms and their verification.
//! * [`cli`]: run configuration and report emission for the `liouville` binary.

pub mod cli;
pub mod cocycle;
pub mod earthquake;
pub mod error;
pub mod farey;
pub mod hyperbolic;
pub mod liouville;
pub mod quadrature;
pub mod series;

pub use error::{Error, Result};
