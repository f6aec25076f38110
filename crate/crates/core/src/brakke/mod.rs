//! Quadrature for the Brakke-flow functionals.
//!
//! For a slice `V_t` and a compactly supported `C¹` test function `φ`, the
//! two functionals are the mass `‖V_t‖(φ) = ∫ φ d‖V_t‖` and the first
//! variation `δ(V_t, φ)(h) = −∫ φ |h|² d‖V_t‖ + ∫ Dφ·h d‖V_t‖`. Slices
//! enter through the [`FlowSlice`] interface (closed-form position,
//! curvature, and densities over the quadric parametrization); the
//! Gram-determinant density of the full `(x, s)` immersion is the
//! independent oracle for all closed forms. Limit checks compare Richardson
//! extrapolations of the first variation across the cone time against the
//! directly computed cone value; for `n = 2` a logarithmic-divergence fit
//! replaces the finite limit when the test function sees the origin.

pub mod grid;
pub mod report;

use rayon::prelude::*;
use thiserror::Error;

use crate::family::{
    self, densities_unchecked, mean_curvature_closed, sigma_volume_density, VarifoldSliceInt,
};
use crate::geom::{ComplexPoint, GeomError, Immersion};
use crate::ode::{
    densities_unchecked_ode, mean_curvature_closed_ode, position_ode, VarifoldSliceOde,
};
use crate::tol;

pub use grid::{pairwise_sum, GridSpec, QuadratureGrid};
pub use report::FunctionalReport;

#[derive(Debug, Error)]
pub enum BrakkeError {
    #[error("fit failure: {0}")]
    FitFailure(String),
    #[error("need at least {0} time values")]
    TooFewPoints(usize),
}

// ---------------------------------------------------------------------------
// Test functions
// ---------------------------------------------------------------------------

/// A `C¹` compactly supported scalar field on the ambient space.
pub trait TestField: Sync {
    fn value(&self, z: &ComplexPoint) -> f64;
    /// Ambient gradient, returned as a complex n-vector (pairs of real
    /// partials).
    fn gradient(&self, z: &ComplexPoint) -> ComplexPoint;
    /// Radius of a ball around the origin containing the support.
    fn reach(&self) -> f64;
}

/// Polynomial bump `φ(z) = A·max(0, 1 − |z−c|²/R²)³`.
#[derive(Clone, Debug)]
pub struct TestFunction {
    pub center: ComplexPoint,
    pub radius: f64,
    pub amplitude: f64,
}

impl TestFunction {
    pub fn new(center: ComplexPoint, radius: f64, amplitude: f64) -> Self {
        assert!(radius > 0.0);
        TestFunction { center, radius, amplitude }
    }

    /// Bump centered at the origin of C^n.
    pub fn centered(n: usize, radius: f64, amplitude: f64) -> Self {
        Self::new(ComplexPoint::zeros(n), radius, amplitude)
    }

    fn profile(&self, z: &ComplexPoint) -> f64 {
        let d2 = z.sub(&self.center).norm_sq();
        1.0 - d2 / (self.radius * self.radius)
    }
}

impl TestField for TestFunction {
    fn value(&self, z: &ComplexPoint) -> f64 {
        let q = self.profile(z);
        if q <= 0.0 {
            0.0
        } else {
            self.amplitude * q * q * q
        }
    }

    fn gradient(&self, z: &ComplexPoint) -> ComplexPoint {
        let q = self.profile(z);
        if q <= 0.0 {
            return ComplexPoint::zeros(z.dim());
        }
        let factor = -6.0 * self.amplitude * q * q / (self.radius * self.radius);
        z.sub(&self.center).scaled(factor)
    }

    fn reach(&self) -> f64 {
        self.center.norm() + self.radius
    }
}

/// Weighted sum of bumps; exercises linearity of the functionals.
pub struct Superposition<'a> {
    pub terms: Vec<(f64, &'a TestFunction)>,
}

impl TestField for Superposition<'_> {
    fn value(&self, z: &ComplexPoint) -> f64 {
        self.terms.iter().map(|(c, f)| c * f.value(z)).sum()
    }

    fn gradient(&self, z: &ComplexPoint) -> ComplexPoint {
        let mut g = ComplexPoint::zeros(z.dim());
        for (c, f) in &self.terms {
            g.axpy(*c, &f.gradient(z));
        }
        g
    }

    fn reach(&self) -> f64 {
        self.terms.iter().map(|(_, f)| f.reach()).fold(0.0, f64::max)
    }
}

// ---------------------------------------------------------------------------
// Slice interface
// ---------------------------------------------------------------------------

/// What the quadrature engine needs from a slice.
pub trait FlowSlice: Sync {
    fn ambient_dim(&self) -> usize;
    fn split_k(&self) -> usize;
    /// Level constant of the quadric: plus-block = minus-block + level.
    fn level(&self) -> f64;
    fn plus_abs(&self) -> Vec<f64>;
    fn minus_abs(&self) -> Vec<f64>;
    fn s_period(&self) -> f64;
    fn position(&self, x: &[f64], s: f64) -> ComplexPoint;
    fn curvature(&self, x: &[f64], s: f64) -> ComplexPoint;
    fn h_norm_sq(&self, x: &[f64], s: f64) -> f64;
    /// Mass-measure factor per `dS_t ds`.
    fn radon_density(&self, x: &[f64], s: f64) -> f64;
    /// Lower bound on `|F(x, s)| / |x|`, used to size the radial cutoff.
    fn position_scale_lower(&self) -> f64;
}

impl FlowSlice for VarifoldSliceInt {
    fn ambient_dim(&self) -> usize {
        self.spec().n()
    }
    fn split_k(&self) -> usize {
        self.spec().k()
    }
    fn level(&self) -> f64 {
        VarifoldSliceInt::level(self)
    }
    fn plus_abs(&self) -> Vec<f64> {
        self.spec().plus_abs()
    }
    fn minus_abs(&self) -> Vec<f64> {
        self.spec().minus_abs()
    }
    fn s_period(&self) -> f64 {
        std::f64::consts::PI
    }
    fn position(&self, x: &[f64], s: f64) -> ComplexPoint {
        family::position(self, x, s)
    }
    fn curvature(&self, x: &[f64], s: f64) -> ComplexPoint {
        mean_curvature_closed(self, x, s)
    }
    fn h_norm_sq(&self, x: &[f64], _s: f64) -> f64 {
        densities_unchecked(self, x).h_norm_sq
    }
    fn radon_density(&self, x: &[f64], _s: f64) -> f64 {
        densities_unchecked(self, x).radon_density
    }
    fn position_scale_lower(&self) -> f64 {
        1.0
    }
}

impl FlowSlice for VarifoldSliceOde {
    fn ambient_dim(&self) -> usize {
        self.params().lambda().n()
    }
    fn split_k(&self) -> usize {
        self.params().lambda().k()
    }
    fn level(&self) -> f64 {
        VarifoldSliceOde::level(self)
    }
    fn plus_abs(&self) -> Vec<f64> {
        self.params().lambda().plus_abs()
    }
    fn minus_abs(&self) -> Vec<f64> {
        self.params().lambda().minus_abs()
    }
    fn s_period(&self) -> f64 {
        self.orbit().period()
    }
    fn position(&self, x: &[f64], s: f64) -> ComplexPoint {
        position_ode(self, x, s)
    }
    fn curvature(&self, x: &[f64], s: f64) -> ComplexPoint {
        mean_curvature_closed_ode(self, x, s)
    }
    fn h_norm_sq(&self, x: &[f64], s: f64) -> f64 {
        densities_unchecked_ode(self, x, s).h_norm_sq
    }
    fn radon_density(&self, x: &[f64], s: f64) -> f64 {
        densities_unchecked_ode(self, x, s).radon_density
    }
    fn position_scale_lower(&self) -> f64 {
        self.orbit().min_modulus()
    }
}

/// Gram-determinant density `√det(Gram(T_1, …, T_n))` of any chart: the
/// oracle validating the closed-form densities.
pub fn gram_density(imm: &Immersion, u: &[f64]) -> Result<f64, GeomError> {
    Ok(crate::geom::tangent_frame(imm, u, tol::FD_STEP)?.gram_det().sqrt())
}

// ---------------------------------------------------------------------------
// Core quadrature
// ---------------------------------------------------------------------------

/// Radial cutoff beyond which the slice cannot meet the support of `phi`.
pub fn required_r_max(slice: &dyn FlowSlice, phi: &dyn TestField) -> f64 {
    let d_max = slice
        .plus_abs()
        .into_iter()
        .chain(slice.minus_abs())
        .fold(1.0f64, f64::max);
    1.05 * d_max.sqrt() * phi.reach() / slice.position_scale_lower()
}

/// Build the grid for a slice at the given resolution.
pub fn grid_for(slice: &dyn FlowSlice, spec: GridSpec) -> QuadratureGrid {
    QuadratureGrid::build(
        &slice.plus_abs(),
        &slice.minus_abs(),
        slice.level(),
        slice.s_period(),
        spec,
    )
}

fn node_point(grid: &QuadratureGrid, ir: usize, ip: usize, im: usize) -> (Vec<f64>, f64, f64) {
    let (r, wr) = grid.r[ir];
    let plus = &grid.plus[ip];
    let minus = &grid.minus[im];
    let (rho_p, rho_m) = family::radial_scales(grid.level, r);
    let mut x = Vec::with_capacity(grid.n);
    x.extend(plus.point.iter().map(|w| rho_p * w));
    x.extend(minus.point.iter().map(|w| rho_m * w));
    let sigma = sigma_volume_density(grid.n, grid.k, grid.level, r, plus.normal_sq, minus.normal_sq);
    let weight = wr * plus.weight * minus.weight;
    (x, sigma, weight)
}

/// Integrate `f(x, s) dμ` over the slice with the grid's tensor rule; node
/// values are reduced by a deterministic pairwise sum.
fn integrate_nodes<F>(slice: &dyn FlowSlice, grid: &QuadratureGrid, f: F) -> f64
where
    F: Fn(&[f64], f64) -> f64 + Sync,
{
    let nr = grid.r.len();
    let np = grid.plus.len();
    let nm = grid.minus.len();
    let ns = grid.s.len();
    let total = nr * np * nm * ns;
    let values: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let is = idx % ns;
            let im = (idx / ns) % nm;
            let ip = (idx / (ns * nm)) % np;
            let ir = idx / (ns * nm * np);
            let (x, sigma, w_space) = node_point(grid, ir, ip, im);
            if sigma == 0.0 {
                return 0.0;
            }
            let (s, ws) = grid.s[is];
            let radon = slice.radon_density(&x, s);
            f(&x, s) * radon * sigma * w_space * ws
        })
        .collect();
    pairwise_sum(&values)
}

/// Varifold mass `∫ φ d‖V_t‖`.
pub fn mass(slice: &dyn FlowSlice, phi: &dyn TestField, grid: &QuadratureGrid) -> f64 {
    integrate_nodes(slice, grid, |x, s| {
        let z = slice.position(x, s);
        phi.value(&z)
    })
}

/// The two variation terms `(∫ φ |h|² d‖V‖, ∫ Dφ·h d‖V‖)`.
pub fn variation_terms(
    slice: &dyn FlowSlice,
    phi: &dyn TestField,
    grid: &QuadratureGrid,
) -> (f64, f64) {
    let curv = integrate_nodes(slice, grid, |x, s| {
        let z = slice.position(x, s);
        let v = phi.value(&z);
        if v == 0.0 {
            0.0
        } else {
            v * slice.h_norm_sq(x, s)
        }
    });
    let transport = integrate_nodes(slice, grid, |x, s| {
        let z = slice.position(x, s);
        let g = phi.gradient(&z);
        if g.norm_sq() == 0.0 {
            0.0
        } else {
            g.real_dot(&slice.curvature(x, s))
        }
    });
    (curv, transport)
}

/// First variation `δ(V_t, φ)(h) = −∫ φ|h|² d‖V‖ + ∫ Dφ·h d‖V‖`.
pub fn first_variation(slice: &dyn FlowSlice, phi: &dyn TestField, grid: &QuadratureGrid) -> f64 {
    let (curv, transport) = variation_terms(slice, phi, grid);
    transport - curv
}

/// Mass and first variation with a one-refinement Richardson self-difference
/// as the error estimate. The reported values come from the refined grid.
pub fn functional_report(
    slice: &dyn FlowSlice,
    phi: &dyn TestField,
    t: f64,
    spec: GridSpec,
) -> FunctionalReport {
    let coarse = grid_for(slice, spec);
    let fine = grid_for(slice, spec.refined());
    let m0 = mass(slice, phi, &coarse);
    let v0 = first_variation(slice, phi, &coarse);
    let m1 = mass(slice, phi, &fine);
    let v1 = first_variation(slice, phi, &fine);
    FunctionalReport {
        t,
        mass: m1,
        variation: v1,
        error_estimate: (m1 - m0).abs().max((v1 - v0).abs()),
        grid: spec,
        support_covered: spec.r_max >= required_r_max(slice, phi) || coarse.ellipsoid_only,
    }
}

// ---------------------------------------------------------------------------
// Flow-level checks
// ---------------------------------------------------------------------------

/// A family of slices indexed by flow time.
pub type SliceAt<'a> = &'a (dyn Fn(f64) -> Box<dyn FlowSlice + Send + Sync> + Sync);

/// Smooth-flow identity at `t ≠ 0`: a 4th-order finite difference of the
/// mass in `t` against the first variation.
#[derive(Clone, Debug)]
pub struct SmoothFlowCheck {
    pub t: f64,
    pub dmass_dt: f64,
    pub variation: f64,
    pub rel_residual: f64,
}

pub fn smooth_flow_check(
    slice_at: SliceAt,
    t: f64,
    phi: &dyn TestField,
    spec: GridSpec,
) -> SmoothFlowCheck {
    assert!(t != 0.0, "the smooth-flow identity applies away from the cone");
    let h = 0.05 * t.abs();
    let mass_at = |tt: f64| -> f64 {
        let slice = slice_at(tt);
        let grid = grid_for(&*slice, spec);
        mass(&*slice, phi, &grid)
    };
    let dmass = (-mass_at(t + 2.0 * h) + 8.0 * mass_at(t + h) - 8.0 * mass_at(t - h)
        + mass_at(t - 2.0 * h))
        / (12.0 * h);
    let slice = slice_at(t);
    let grid = grid_for(&*slice, spec);
    let variation = first_variation(&*slice, phi, &grid);
    let rel_residual = (dmass - variation).abs() / variation.abs().max(dmass.abs()).max(1e-300);
    SmoothFlowCheck { t, dmass_dt: dmass, variation, rel_residual }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// Result of one one-sided limit check at the cone crossing.
#[derive(Clone, Debug)]
pub struct LimitVerdict {
    pub values: Vec<(f64, f64)>,
    pub cone_value: f64,
    pub extrapolated: f64,
    pub order_estimate: f64,
    pub rel_error: f64,
    pub monotone_tail: bool,
    pub verdict: Verdict,
}

/// Richardson-extrapolate the first variation along a dyadic `t`-sequence
/// and compare with the value computed directly on the cone.
pub fn limit_check(
    slice_at: SliceAt,
    phi: &dyn TestField,
    t_sequence: &[f64],
    spec: GridSpec,
) -> Result<LimitVerdict, BrakkeError> {
    if t_sequence.len() < 3 {
        return Err(BrakkeError::TooFewPoints(3));
    }
    let mut values = Vec::with_capacity(t_sequence.len());
    for &t in t_sequence {
        let slice = slice_at(t);
        let grid = grid_for(&*slice, spec);
        values.push((t, first_variation(&*slice, phi, &grid)));
    }
    let cone = slice_at(0.0);
    let cone_grid = grid_for(&*cone, spec);
    let cone_value = first_variation(&*cone, phi, &cone_grid);

    let v: Vec<f64> = values.iter().map(|&(_, v)| v).collect();
    let m = v.len();
    let d_last = v[m - 1] - v[m - 2];
    let d_prev = v[m - 2] - v[m - 3];
    let tail: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).collect();
    let tail_len = tail.len();
    let monotone_tail = if tail_len >= 3 {
        let s = tail[tail_len - 1].signum();
        tail[tail_len - 3..].iter().all(|d| d.signum() == s || d.abs() < 1e-12)
    } else {
        true
    };

    let scale = v.iter().fold(0.0f64, |a, b| a.max(b.abs())).max(1e-300);
    let (extrapolated, order_estimate) = if d_last.abs() < 1e-10 * scale || d_prev.abs() < 1e-10 * scale
    {
        (v[m - 1], f64::INFINITY)
    } else {
        let q = d_last / d_prev;
        if q.abs() < 0.98 {
            (v[m - 1] + d_last * q / (1.0 - q), -q.abs().log2())
        } else {
            (v[m - 1], 0.0)
        }
    };
    let rel_error = (extrapolated - cone_value).abs() / cone_value.abs().max(1e-12);
    let verdict = if !monotone_tail {
        Verdict::Inconclusive
    } else if rel_error <= tol::LIMIT_REL {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(LimitVerdict {
        values,
        cone_value,
        extrapolated,
        order_estimate,
        rel_error,
        monotone_tail,
        verdict,
    })
}

/// Fit of the curvature integral against `ln(1/√−t)` for the `n = 2`
/// divergence dichotomy, with boundedness of the transport term.
#[derive(Clone, Debug)]
pub struct LogFitReport {
    pub points: Vec<(f64, f64)>,
    pub transport: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub correlation: f64,
    pub transport_decayed: bool,
    pub transport_limit: f64,
    pub pass: bool,
}

pub fn log_divergence_probe(
    slice_at: SliceAt,
    phi: &dyn TestField,
    t_sequence: &[f64],
    spec: GridSpec,
) -> Result<LogFitReport, BrakkeError> {
    if t_sequence.len() < 4 {
        return Err(BrakkeError::TooFewPoints(4));
    }
    if t_sequence.iter().any(|&t| t >= 0.0) {
        return Err(BrakkeError::FitFailure("the probe needs t < 0".into()));
    }
    let mut points = Vec::new();
    let mut transport = Vec::new();
    for &t in t_sequence {
        let slice = slice_at(t);
        let grid = grid_for(&*slice, spec);
        let (curv, trans) = variation_terms(&*slice, phi, &grid);
        points.push((t, curv));
        transport.push((t, trans));
    }
    let xs: Vec<f64> = points.iter().map(|&(t, _)| (1.0 / (-t).sqrt()).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, y)| y).collect();
    let nf = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / nf;
    let ybar = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let syy: f64 = ys.iter().map(|y| (y - ybar) * (y - ybar)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    if sxx < 1e-14 || syy < 1e-300 {
        return Err(BrakkeError::FitFailure("degenerate abscissa span".into()));
    }
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let correlation = sxy / (sxx * syy).sqrt();

    let diffs: Vec<f64> = transport.windows(2).map(|w| (w[1].1 - w[0].1).abs()).collect();
    let d_first = diffs.first().copied().unwrap_or(0.0);
    let d_last = diffs.last().copied().unwrap_or(0.0);
    let tail_ok = diffs.len() < 3 || {
        let k = diffs.len();
        diffs[k - 1] <= 1.2 * diffs[k - 2] && diffs[k - 2] <= 1.2 * diffs[k - 3]
    };
    let transport_decayed = (d_last <= tol::TRANSPORT_DECAY * d_first.max(1e-300)) && tail_ok;
    let pass = slope > 0.0 && correlation > tol::LOG_FIT_CORRELATION && transport_decayed;
    Ok(LogFitReport {
        points,
        transport: transport.clone(),
        slope,
        intercept,
        correlation,
        transport_decayed,
        transport_limit: transport.last().map(|&(_, g)| g).unwrap_or(0.0),
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{LambdaSpec, VarifoldSliceInt};
    use approx::assert_abs_diff_eq;

    fn bump(n: usize, radius: f64) -> TestFunction {
        TestFunction::centered(n, radius, 1.0)
    }

    #[test]
    fn bump_gradient_matches_finite_differences() {
        let phi = TestFunction::new(
            ComplexPoint(vec![crate::C64::new(0.2, -0.1), crate::C64::new(0.0, 0.3)]),
            0.8,
            1.7,
        );
        let z0 = ComplexPoint(vec![crate::C64::new(0.4, 0.1), crate::C64::new(-0.2, 0.25)]);
        let g = phi.gradient(&z0);
        let h = 1e-6;
        for j in 0..2 {
            for part in 0..2 {
                let mut zp = z0.clone();
                let mut zm = z0.clone();
                if part == 0 {
                    zp.0[j].re += h;
                    zm.0[j].re -= h;
                } else {
                    zp.0[j].im += h;
                    zm.0[j].im -= h;
                }
                let fd = (phi.value(&zp) - phi.value(&zm)) / (2.0 * h);
                let analytic = if part == 0 { g[j].re } else { g[j].im };
                assert_abs_diff_eq!(analytic, fd, epsilon = tol::TEST_FUNCTION_GRAD);
            }
        }
    }

    #[test]
    fn bump_vanishes_outside_support() {
        let phi = bump(2, 0.5);
        let z = ComplexPoint(vec![crate::C64::new(0.51, 0.0), crate::C64::new(0.0, 0.0)]);
        assert_eq!(phi.value(&z), 0.0);
        assert_eq!(phi.gradient(&z).norm(), 0.0);
        // boundary: value and gradient go to zero continuously
        let zb = ComplexPoint(vec![crate::C64::new(0.4999999, 0.0), crate::C64::new(0.0, 0.0)]);
        assert!(phi.value(&zb) < 1e-17);
        assert!(phi.gradient(&zb).norm() < 1e-10);
    }

    #[test]
    fn mass_of_far_bump_is_zero() {
        let spec = LambdaSpec::new(&[1.0, 1.0, -1.0]).unwrap();
        let slice = VarifoldSliceInt::new(spec, -0.5);
        let phi = TestFunction::new(
            ComplexPoint(vec![
                crate::C64::new(50.0, 0.0),
                crate::C64::new(0.0, 0.0),
                crate::C64::new(0.0, 0.0),
            ]),
            0.5,
            1.0,
        );
        let g = grid_for(&slice, GridSpec { r_nodes: 8, angular_nodes: 8, s_nodes: 8, r_max: 4.0 });
        assert_eq!(mass(&slice, &phi, &g), 0.0);
    }

    #[test]
    fn special_lagrangian_variation_vanishes() {
        // λ = (1, −1): constant angle, h ≡ 0 on every slice.
        let spec = LambdaSpec::new(&[1.0, -1.0]).unwrap();
        let slice = VarifoldSliceInt::new(spec, 0.0);
        let phi = bump(2, 1.0);
        let g = grid_for(&slice, GridSpec { r_nodes: 24, angular_nodes: 8, s_nodes: 12, r_max: 4.0 });
        let v = first_variation(&slice, &phi, &g);
        assert!(v.abs() < 1e-12, "special Lagrangian variation {v}");
    }

    #[test]
    fn functionals_are_linear_in_phi() {
        let spec = LambdaSpec::new(&[1.0, 1.0, -1.0]).unwrap();
        let slice = VarifoldSliceInt::new(spec, -0.5);
        let b1 = bump(3, 1.0);
        let b2 = TestFunction::new(
            ComplexPoint(vec![
                crate::C64::new(0.5, 0.2),
                crate::C64::new(0.0, -0.3),
                crate::C64::new(0.1, 0.0),
            ]),
            0.8,
            0.6,
        );
        let combo = Superposition { terms: vec![(2.0, &b1), (-0.7, &b2)] };
        let spec_g = GridSpec { r_nodes: 20, angular_nodes: 12, s_nodes: 10, r_max: 6.0 };
        let g = grid_for(&slice, spec_g);
        let lhs_mass = mass(&slice, &combo, &g);
        let rhs_mass = 2.0 * mass(&slice, &b1, &g) - 0.7 * mass(&slice, &b2, &g);
        assert_abs_diff_eq!(
            lhs_mass,
            rhs_mass,
            epsilon = tol::FUNCTIONAL_LINEARITY_REL * rhs_mass.abs().max(1.0)
        );
        let lhs_var = first_variation(&slice, &combo, &g);
        let rhs_var = 2.0 * first_variation(&slice, &b1, &g) - 0.7 * first_variation(&slice, &b2, &g);
        assert_abs_diff_eq!(
            lhs_var,
            rhs_var,
            epsilon = tol::FUNCTIONAL_LINEARITY_REL * rhs_var.abs().max(1.0)
        );
    }
}
