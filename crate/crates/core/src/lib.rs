//! Numerical laboratory for Lagrangian self-similar solutions of mean
//! curvature flow in complex Euclidean n-space.
//!
//! The crate builds two families of Lagrangian submanifolds — a closed-form
//! rotating family driven by an integer (or real) weight vector, and a family
//! generated by periodic orbits of a coupled phase ODE — computes their
//! differential-geometric invariants from first principles, and verifies by
//! quadrature that the time-indexed slices form Brakke-flow solutions without
//! mass loss across the cone singularity at `t = 0`.
//!
//! Module map:
//! - [`geom`]: dimension-generic differential geometry for immersed charts
//!   (tangent frames, induced metric, symplectic pairing, Lagrangian angle,
//!   mean curvature, normal projection), analytic where supplied and by
//!   finite differences otherwise.
//! - [`ellipsoid`]: parametrization of the unit-level quadric factors used by
//!   both families.
//! - [`family`]: the closed-form rotating family, its densities, and the
//!   topology / orientability / embeddedness classification.
//! - [`ode`]: the phase ODE, an adaptive embedded-pair integrator with dense
//!   output, periodic-orbit detection, and the induced immersion.
//! - [`brakke`]: quadrature for varifold mass and first variation, limit
//!   verification at the cone crossing, and the `n = 2` logarithmic
//!   divergence probe.
//! - [`verify`]: sampled invariant suites used by tests and the CLI.

pub mod brakke;
pub mod ellipsoid;
pub mod family;
pub mod geom;
pub mod ode;
pub mod tol;
pub mod verify;

pub use geom::{ComplexPoint, Immersion, MetricTensor, TangentFrame};

/// Shorthand for the ambient scalar type.
pub type C64 = num_complex::Complex<f64>;
