//! Library-default numerical acceptance bands.
//!
//! The geometric identities implemented by this crate are exact; every
//! constant here is a band for finite-difference and quadrature noise at
//! double precision. They are defaults: operations that consult them accept
//! per-call overrides.

/// Finite-difference step for 4th-order central stencils, scaled per axis by
/// the local chart magnitude. Balances truncation (`h^4`) against rounding
/// (`eps / h`).
pub const FD_STEP: f64 = 1e-3;

/// A frame whose Gram determinant falls below this is treated as degenerate
/// (e.g. the cone vertex) and rejected rather than regularized.
pub const DEGENERATE_GRAM: f64 = 1e-14;

/// A frame is rejected as non-Lagrangian when the symplectic pairing exceeds
/// this. Well-formed on-slice frames sit near 1e-12.
pub const NON_LAGRANGIAN: f64 = 1e-6;

/// Expected symplectic residual on sampled frames of both families.
pub const SYMPLECTIC_RESIDUAL: f64 = 1e-9;

/// Band for matching the closed-form Lagrangian angle mod 2π.
pub const ANGLE_CLOSED_FORM: f64 = 1e-8;

/// Finite-difference Laplacian of the angle on stationary samples.
pub const ANGLE_LAPLACIAN: f64 = 1e-5;

/// Relative agreement between the finite-difference mean curvature and the
/// Laplace-Beltrami oracle (and the closed-form densities).
pub const MEAN_CURVATURE_REL: f64 = 1e-4;

/// Residual of the normal projection against every frame column.
pub const NORMAL_PROJECTION_ORTHO: f64 = 1e-10;

/// Max-norm band for s-independence of the induced metric.
pub const METRIC_S_INDEPENDENCE: f64 = 1e-9;

/// Relative agreement between a supplied analytic Jacobian and central
/// finite differences of the evaluation map.
pub const JACOBIAN_VS_FD_REL: f64 = 1e-6;

/// Relative band for the self-similarity identities relating the normal
/// projection of the position vector to the mean curvature vector.
pub const SELF_SIMILARITY_REL: f64 = 1e-5;

/// Relative agreement between the Gram-determinant density oracle and the
/// closed-form densities.
pub const DENSITY_ORACLE_REL: f64 = 1e-5;

/// On-slice residual `|Σ λ_j x_j² - C|` relative to the local scale.
pub const ON_SLICE: f64 = 1e-10;

/// Round-trip residual of the slice parametrization.
pub const SLICE_RECONSTRUCT: f64 = 1e-12;

/// Conjugation residual when rescaling between slices of the same sign.
pub const SCALE_CONJUGATION: f64 = 1e-12;

/// Allowed drift of the conserved quantities per unit of the orbit
/// parameter at integrator tolerance 1e-10.
pub const ODE_Q_DRIFT_PER_UNIT_S: f64 = 1e-8;

/// Closure residual for an accepted periodic orbit (angle on the circle).
pub const ORBIT_CLOSURE: f64 = 1e-6;

/// Trajectories abort when any `|w_j|` falls below this floor.
pub const MODULUS_FLOOR: f64 = 1e-9;

/// Fraction of the seed norm that shooting refinement may move the seed.
pub const SHOOTING_TRUST_RADIUS: f64 = 0.25;

/// Relative tolerance for the Richardson-extrapolated first variation
/// against the directly computed cone value.
pub const LIMIT_REL: f64 = 0.02;

/// Relative tolerance for the smooth-flow identity `d/dt mass = variation`
/// at each `t != 0`.
pub const SMOOTH_FLOW_REL: f64 = 0.01;

/// Minimum Pearson correlation for the n = 2 logarithmic-divergence fit.
pub const LOG_FIT_CORRELATION: f64 = 0.99;

/// The transport term's successive differences must decay to this fraction
/// of their initial size for a "finite limit" verdict.
pub const TRANSPORT_DECAY: f64 = 0.5;

/// Linearity of mass and first variation in the test function.
pub const FUNCTIONAL_LINEARITY_REL: f64 = 1e-8;

/// Gradient of a test function must match finite differences of its value.
pub const TEST_FUNCTION_GRAD: f64 = 1e-8;
