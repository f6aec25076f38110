//! The periodic-orbit family of Lagrangian slices.
//!
//! The generating system couples n nonzero complex amplitudes with a phase:
//!
//! ```text
//! dw_j/ds = λ_j e^{iθ} conj(Π_{m≠j} w_m),      dθ/ds = α Im(e^{-iθ} w_1⋯w_n),
//! ```
//!
//! whose periodic solutions `(w, θ)` sweep out self-similar slices
//! `V_t = {(x_1 w_1(s), …, x_n w_n(s)) : Σ λ_j x_j² = 2t}` with
//! `α F⊥ = C H`, `C = 2t`. The submodules provide the adaptive integrator,
//! periodic-orbit detection and refinement, and the shipped seed format.

pub mod dopri5;
pub mod periodic;
pub mod seeds;

use num_complex::Complex;
use std::f64::consts::PI;
use std::sync::Arc;
use thiserror::Error;

use crate::ellipsoid::EllipsoidFactor;
use crate::family::{radial_scales, Density3, LambdaSpec, SigmaPoint, SliceKind};
use crate::geom::{ComplexPoint, Immersion};
use crate::tol;
use crate::C64;

use dopri5::{Dopri5Options, IntegrateError, Trajectory};

#[derive(Debug, Error)]
pub enum OdeError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("|w_{j}| collapsed below the modulus floor at s = {s:.6e}")]
    ModulusCollapse { s: f64, j: usize },
    #[error("conserved quantity drift {drift:.3e} exceeds allowance {allowed:.3e}")]
    ConservationDrift { drift: f64, allowed: f64 },
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error("no return to the seed state found within s <= {s_max}")]
    NoReturnFound { s_max: f64 },
    #[error("periodic refinement did not converge: residual {residual:.3e}")]
    NonConvergentRefinement { residual: f64 },
    #[error("shooting adjustment left the trust radius ({moved:.3e} > {allowed:.3e})")]
    TrustRadiusExceeded { moved: f64, allowed: f64 },
    #[error("point violates the slice constraint: residual {residual:.3e}")]
    OffSlice { residual: f64 },
    #[error("the cone vertex x = 0 is a genuine singularity")]
    VertexInput,
    #[error("seed file error: {0}")]
    SeedFile(String),
}

/// Parameters of the generating system: mixed-sign weights and the
/// self-similarity constant `α` (1 by default).
#[derive(Clone, Debug)]
pub struct OdeParams {
    lambda: LambdaSpec,
    alpha: f64,
}

impl OdeParams {
    pub fn new(lambda: LambdaSpec, alpha: f64) -> Result<Self, OdeError> {
        let k = lambda.k();
        let n = lambda.n();
        if k == 0 || k == n {
            return Err(OdeError::InvalidParams(
                "weights must contain both signs".into(),
            ));
        }
        if lambda.lambdas().iter().any(|l| l.abs() < 1.0 - 1e-12) {
            return Err(OdeError::InvalidParams(
                "normalization requires |lambda_j| >= 1".into(),
            ));
        }
        if alpha == 0.0 || !alpha.is_finite() {
            return Err(OdeError::InvalidParams("alpha must be nonzero".into()));
        }
        Ok(OdeParams { lambda, alpha })
    }

    pub fn lambda(&self) -> &LambdaSpec {
        &self.lambda
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n(&self) -> usize {
        self.lambda.n()
    }
}

/// State `(w_1, …, w_n, θ) ∈ (C ∖ {0})^n × R`.
#[derive(Clone, Debug, PartialEq)]
pub struct OdeState {
    pub w: Vec<C64>,
    pub theta: f64,
}

impl OdeState {
    pub fn n(&self) -> usize {
        self.w.len()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.w.len() + 1);
        for w in &self.w {
            out.push(w.re);
            out.push(w.im);
        }
        out.push(self.theta);
        out
    }

    pub fn from_flat(y: &[f64]) -> Self {
        let n = (y.len() - 1) / 2;
        let w = (0..n).map(|j| C64::new(y[2 * j], y[2 * j + 1])).collect();
        OdeState { w, theta: y[y.len() - 1] }
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.w.iter().map(|w| w.norm()).collect()
    }

    /// Full-state distance with θ compared on the circle.
    pub fn distance(&self, other: &Self) -> f64 {
        let mut d2: f64 = self
            .w
            .iter()
            .zip(&other.w)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let dt = wrap_to_pi(self.theta - other.theta);
        d2 += dt * dt;
        d2.sqrt()
    }

    /// Conserved quantities `Q_j = |w_j|²/λ_j − |w_1|²/λ_1`, `j ≥ 2`.
    pub fn conserved(&self, params: &OdeParams) -> Vec<f64> {
        let l = params.lambda.lambdas();
        let q0 = self.w[0].norm_sqr() / l[0];
        (1..self.n())
            .map(|j| self.w[j].norm_sqr() / l[j] - q0)
            .collect()
    }
}

/// Wrap an angle difference into `(-π, π]`.
pub fn wrap_to_pi(a: f64) -> f64 {
    let mut r = a.rem_euclid(std::f64::consts::TAU);
    if r > PI {
        r -= std::f64::consts::TAU;
    }
    r
}

/// Right-hand side of the generating system.
pub fn rhs(params: &OdeParams, state: &OdeState) -> OdeState {
    let n = state.n();
    let l = params.lambda.lambdas();
    // prefix/suffix products avoid dividing by w_j
    let mut pre = vec![C64::new(1.0, 0.0); n + 1];
    for j in 0..n {
        pre[j + 1] = pre[j] * state.w[j];
    }
    let mut suf = vec![C64::new(1.0, 0.0); n + 1];
    for j in (0..n).rev() {
        suf[j] = suf[j + 1] * state.w[j];
    }
    let eitheta = Complex::from_polar(1.0, state.theta);
    let mut dw = Vec::with_capacity(n);
    for j in 0..n {
        let prod_except = pre[j] * suf[j + 1];
        dw.push(l[j] * eitheta * prod_except.conj());
    }
    let full = pre[n];
    let dtheta = params.alpha * (eitheta.conj() * full).im;
    OdeState { w: dw, theta: dtheta }
}

pub(crate) fn rhs_flat(params: &OdeParams, y: &[f64], dy: &mut [f64]) {
    let state = OdeState::from_flat(y);
    let d = rhs(params, &state);
    let flat = d.flatten();
    dy.copy_from_slice(&flat);
}

/// Dense trajectory of the generating system with monitored invariants.
pub struct OdeTrajectory {
    params: OdeParams,
    traj: Trajectory,
}

impl OdeTrajectory {
    pub fn state_at(&self, s: f64) -> OdeState {
        OdeState::from_flat(&self.traj.state_at(s))
    }

    pub fn end_state(&self) -> OdeState {
        OdeState::from_flat(&self.traj.y_end)
    }

    pub fn s_end(&self) -> f64 {
        self.traj.s_end
    }

    pub fn raw(&self) -> &Trajectory {
        &self.traj
    }

    pub fn params(&self) -> &OdeParams {
        &self.params
    }
}

/// Adaptive integration with dense output. Aborts when any modulus falls
/// below the floor or the conserved quantities drift beyond the allowance
/// scaled from the requested tolerance.
pub fn integrate(
    params: &OdeParams,
    initial: &OdeState,
    s_end: f64,
    tol_loc: f64,
) -> Result<OdeTrajectory, OdeError> {
    for (j, w) in initial.w.iter().enumerate() {
        if w.norm() < tol::MODULUS_FLOOR {
            return Err(OdeError::ModulusCollapse { s: 0.0, j });
        }
    }
    let q0 = initial.conserved(params);
    let allowance_per_s = tol::ODE_Q_DRIFT_PER_UNIT_S.max(100.0 * tol_loc);
    let p = params.clone();
    let mut violation: Option<OdeError> = None;
    let opts = Dopri5Options::with_tol(tol_loc);
    let result = dopri5::integrate(
        |_s, y, dy| rhs_flat(&p, y, dy),
        0.0,
        &initial.flatten(),
        s_end,
        &opts,
        |s, y| {
            let st = OdeState::from_flat(y);
            for (j, w) in st.w.iter().enumerate() {
                if w.norm() < tol::MODULUS_FLOOR {
                    violation = Some(OdeError::ModulusCollapse { s, j });
                    return Err("modulus collapse".into());
                }
            }
            let q = st.conserved(params);
            let allowed = allowance_per_s * s.abs().max(1.0);
            for (qa, qb) in q.iter().zip(&q0) {
                if (qa - qb).abs() > allowed {
                    violation = Some(OdeError::ConservationDrift {
                        drift: (qa - qb).abs(),
                        allowed,
                    });
                    return Err("conservation drift".into());
                }
            }
            Ok(())
        },
    );
    match result {
        Ok(traj) => Ok(OdeTrajectory { params: params.clone(), traj }),
        Err(e) => Err(violation.unwrap_or(OdeError::Integrate(e))),
    }
}

/// A closed orbit of the generating system with dense output over one period.
pub struct PeriodicOrbit {
    params: OdeParams,
    initial: OdeState,
    period: f64,
    traj: Trajectory,
    r_bounds: Vec<(f64, f64)>,
    closure_residual: f64,
}

impl PeriodicOrbit {
    pub(crate) fn assemble(
        params: OdeParams,
        initial: OdeState,
        period: f64,
        traj: Trajectory,
        closure_residual: f64,
    ) -> Self {
        let n = initial.n();
        let mut r_bounds = vec![(f64::INFINITY, 0.0f64); n];
        let samples = 4096;
        for i in 0..=samples {
            let s = period * i as f64 / samples as f64;
            let st = OdeState::from_flat(&traj.state_at(s));
            for (j, w) in st.w.iter().enumerate() {
                let r = w.norm();
                r_bounds[j].0 = r_bounds[j].0.min(r);
                r_bounds[j].1 = r_bounds[j].1.max(r);
            }
        }
        PeriodicOrbit {
            params,
            initial,
            period,
            traj,
            r_bounds,
            closure_residual,
        }
    }

    pub fn params(&self) -> &OdeParams {
        &self.params
    }

    pub fn initial(&self) -> &OdeState {
        &self.initial
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn closure_residual(&self) -> f64 {
        self.closure_residual
    }

    /// Per-component `(min, max)` of `|w_j|` over the period.
    pub fn modulus_bounds(&self) -> &[(f64, f64)] {
        &self.r_bounds
    }

    pub fn min_modulus(&self) -> f64 {
        self.r_bounds.iter().map(|b| b.0).fold(f64::INFINITY, f64::min)
    }

    /// Dense state with `s` wrapped into `[0, T)`.
    pub fn state_at(&self, s: f64) -> OdeState {
        let sm = s.rem_euclid(self.period);
        OdeState::from_flat(&self.traj.state_at(sm))
    }

    /// Exact derivative at the interpolated state.
    pub fn derivative_at(&self, s: f64) -> OdeState {
        rhs(&self.params, &self.state_at(s))
    }

    /// Oscillation amplitude `max_j (r_max − r_min)`; zero for rigidly
    /// rotating orbits.
    pub fn radial_oscillation(&self) -> f64 {
        self.r_bounds.iter().map(|b| b.1 - b.0).fold(0.0, f64::max)
    }
}

/// One time slice `V_t` generated by a periodic orbit.
#[derive(Clone)]
pub struct VarifoldSliceOde {
    orbit: Arc<PeriodicOrbit>,
    t: f64,
    level_c: f64,
}

impl VarifoldSliceOde {
    pub fn new(orbit: Arc<PeriodicOrbit>, t: f64) -> Self {
        VarifoldSliceOde { orbit, t, level_c: 2.0 * t }
    }

    pub fn orbit(&self) -> &Arc<PeriodicOrbit> {
        &self.orbit
    }

    pub fn params(&self) -> &OdeParams {
        self.orbit.params()
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Level constant `C = 2t`.
    pub fn level(&self) -> f64 {
        self.level_c
    }

    pub fn kind(&self) -> SliceKind {
        if self.t < 0.0 {
            SliceKind::Shrinker
        } else if self.t > 0.0 {
            SliceKind::Expander
        } else {
            SliceKind::Cone
        }
    }

    pub fn check_on_slice(&self, x: &[f64]) -> Result<(), OdeError> {
        let l = self.params().lambda().lambdas();
        let q: f64 = l.iter().zip(x).map(|(li, xi)| li * xi * xi).sum();
        let scale: f64 = 1.0f64
            .max(self.level_c.abs())
            .max(l.iter().zip(x).map(|(li, xi)| (li * xi * xi).abs()).sum());
        let residual = (q - self.level_c).abs() / scale;
        if residual > tol::ON_SLICE {
            return Err(OdeError::OffSlice { residual });
        }
        Ok(())
    }
}

/// The slice immersion `(x, s) ↦ (x_1 w_1(s), …, x_n w_n(s))`.
pub fn immerse_ode(slice: &VarifoldSliceOde, x: &[f64], s: f64) -> Result<ComplexPoint, OdeError> {
    slice.check_on_slice(x)?;
    Ok(position_ode(slice, x, s))
}

pub fn position_ode(slice: &VarifoldSliceOde, x: &[f64], s: f64) -> ComplexPoint {
    let st = slice.orbit.state_at(s);
    ComplexPoint(st.w.iter().zip(x).map(|(w, &xi)| w * xi).collect())
}

/// Closed-form densities at an on-slice point away from the vertex:
/// `|V_t|² = Σ r_j² x_j²`, `|h|² = α² sin²(φ−θ) / Σ(λ_j² x_j² / r_j²)`,
/// and the mass-measure factor `(r_1²⋯r_n²) Σ(λ_j² x_j² / r_j²) / √(Σ λ_j² x_j²)`
/// per `dS_t ds`.
pub fn density_closed_form_ode(
    slice: &VarifoldSliceOde,
    x: &[f64],
    s: f64,
) -> Result<Density3, OdeError> {
    slice.check_on_slice(x)?;
    if x.iter().map(|v| v * v).sum::<f64>() < 1e-24 {
        return Err(OdeError::VertexInput);
    }
    Ok(densities_unchecked_ode(slice, x, s))
}

/// The same densities without precondition checks.
pub fn densities_unchecked_ode(slice: &VarifoldSliceOde, x: &[f64], s: f64) -> Density3 {
    let st = slice.orbit.state_at(s);
    let l = slice.params().lambda().lambdas();
    let alpha = slice.params().alpha();

    let mut pos_sq = 0.0;
    let mut q = 0.0;
    let mut wsq = 0.0;
    let mut r2_prod = 1.0;
    let mut full = C64::new(1.0, 0.0);
    for (j, w) in st.w.iter().enumerate() {
        let r2 = w.norm_sqr();
        pos_sq += r2 * x[j] * x[j];
        q += l[j] * l[j] * x[j] * x[j] / r2;
        wsq += l[j] * l[j] * x[j] * x[j];
        r2_prod *= r2;
        full *= w;
    }
    let u = Complex::from_polar(1.0, -st.theta) * full;
    let sin_sq = (u.im / u.norm()).powi(2);
    Density3 {
        position_norm_sq: pos_sq,
        h_norm_sq: alpha * alpha * sin_sq / q,
        radon_density: r2_prod * q / wsq.sqrt(),
    }
}

/// Closed-form mean curvature vector of the slice:
/// `h_j = i α sin(φ−θ) e^{i(θ−φ)} λ_j x_j w_j / (r_j² Σ λ_m² x_m²/r_m²)`.
pub fn mean_curvature_closed_ode(slice: &VarifoldSliceOde, x: &[f64], s: f64) -> ComplexPoint {
    let st = slice.orbit.state_at(s);
    let l = slice.params().lambda().lambdas();
    let alpha = slice.params().alpha();
    let mut q = 0.0;
    let mut full = C64::new(1.0, 0.0);
    for (j, w) in st.w.iter().enumerate() {
        q += l[j] * l[j] * x[j] * x[j] / w.norm_sqr();
        full *= w;
    }
    let u = Complex::from_polar(1.0, -st.theta) * full;
    let phase = u.conj() / u.norm(); // e^{i(θ−φ)}
    let coeff = C64::new(0.0, 1.0) * alpha * (u.im / u.norm()) * phase / q;
    ComplexPoint(
        st.w
            .iter()
            .enumerate()
            .map(|(j, w)| coeff * l[j] * x[j] * w / w.norm_sqr())
            .collect(),
    )
}

/// Local chart at an on-slice base point (parameters `(s, ξ)`), positively
/// oriented so the Lagrangian angle of the frame equals `θ(s)` mod 2π.
pub fn chart_at_ode(
    slice: &VarifoldSliceOde,
    x0: &[f64],
    _s0: f64,
) -> Result<Immersion, OdeError> {
    slice.check_on_slice(x0)?;
    let l: Vec<f64> = slice.params().lambda().lambdas().to_vec();
    let normal: Vec<f64> = l.iter().zip(x0).map(|(li, v)| li * v).collect();
    let basis = crate::family::oriented_tangent_basis(&normal)
        .ok_or(OdeError::InvalidParams("degenerate base point".into()))?;
    let c = slice.level();
    let base = x0.to_vec();
    let n = l.len();
    let orbit = slice.orbit.clone();
    let orbit_hint = orbit.clone();
    let lam = l.clone();
    let imm = Immersion::new(n, move |u: &[f64]| {
        let s = u[0];
        let mut y = base.clone();
        for (a, b) in basis.iter().enumerate() {
            for (yj, bj) in y.iter_mut().zip(b) {
                *yj += u[a + 1] * bj;
            }
        }
        crate::family::project_to_level(&lam, c, &mut y);
        let st = orbit.state_at(s);
        st.w.iter().zip(&y).map(|(w, &xi)| w * xi).collect::<Vec<C64>>()
    })
    .with_angle_hint(move |u: &[f64]| {
        orbit_hint.state_at(u[0]).theta.rem_euclid(std::f64::consts::TAU)
    });
    Ok(imm)
}

/// Global chart over `(r, plus-angles, minus-angles, s)` with analytic
/// Jacobian, used by the Gram-density oracle and mesh export.
pub fn sigma_chart_ode(
    slice: &VarifoldSliceOde,
    branch_plus: i8,
    branch_minus: i8,
) -> Result<Immersion, OdeError> {
    let spec = slice.params().lambda().clone();
    let fp = EllipsoidFactor::new(spec.plus_abs());
    let fm = EllipsoidFactor::new(spec.minus_abs());
    let k = spec.k();
    let c = slice.level();
    let na_plus = fp.n_angles();
    let na_minus = fm.n_angles();
    let dim = 1 + na_plus + na_minus + 1;
    let orbit = slice.orbit.clone();
    let orbit_j = orbit.clone();
    let params = slice.params().clone();

    let build_x = move |fp: &EllipsoidFactor,
                        fm: &EllipsoidFactor,
                        u: &[f64]|
          -> (f64, Vec<f64>, Vec<f64>, Vec<f64>, f64) {
        let r = u[0];
        let ap = u[1..1 + na_plus].to_vec();
        let am = u[1 + na_plus..1 + na_plus + na_minus].to_vec();
        let s = u[dim - 1];
        let (rho_p, rho_m) = radial_scales(c, r);
        let pp = fp.point(&ap, branch_plus);
        let pm = fm.point(&am, branch_minus);
        let mut x: Vec<f64> = pp.iter().map(|w| rho_p * w).collect();
        x.extend(pm.iter().map(|w| rho_m * w));
        (r, ap, am, x, s)
    };

    let fp_e = fp.clone();
    let fm_e = fm.clone();
    let bx = build_x;
    let eval = move |u: &[f64]| -> Vec<C64> {
        let (_r, _ap, _am, x, s) = bx(&fp_e, &fm_e, u);
        let st = orbit.state_at(s);
        st.w.iter().zip(&x).map(|(w, &xi)| w * xi).collect()
    };

    let jac = move |u: &[f64]| -> Vec<Vec<C64>> {
        let (r, ap, am, x, s) = build_x(&fp, &fm, u);
        let st = orbit_j.state_at(s);
        let dst = rhs(&params, &st);
        let (rho_p, rho_m) = radial_scales(c, r);
        let (drho_p, drho_m) = if c > 0.0 {
            (r / rho_p, 1.0)
        } else if c < 0.0 {
            (1.0, r / rho_m)
        } else {
            (1.0, 1.0)
        };
        let pp = fp.point(&ap, branch_plus);
        let pm = fm.point(&am, branch_minus);
        let n = x.len();
        let mut cols: Vec<Vec<C64>> = Vec::with_capacity(u.len());
        // ∂/∂r
        let mut col = Vec::with_capacity(n);
        for (j, w) in pp.iter().enumerate() {
            col.push(st.w[j] * (drho_p * w));
        }
        for (j, w) in pm.iter().enumerate() {
            col.push(st.w[k + j] * (drho_m * w));
        }
        cols.push(col);
        if na_plus > 0 {
            for dcol in fp.jacobian(&ap) {
                let mut col = Vec::with_capacity(n);
                for (j, dv) in dcol.iter().enumerate() {
                    col.push(st.w[j] * (rho_p * dv));
                }
                col.extend(std::iter::repeat_n(C64::new(0.0, 0.0), n - k));
                cols.push(col);
            }
        }
        if na_minus > 0 {
            for dcol in fm.jacobian(&am) {
                let mut col = vec![C64::new(0.0, 0.0); k];
                for (j, dv) in dcol.iter().enumerate() {
                    col.push(st.w[k + j] * (rho_m * dv));
                }
                cols.push(col);
            }
        }
        // ∂/∂s: x_j w'_j at the interpolated state
        cols.push(dst.w.iter().zip(&x).map(|(dw, &xi)| dw * xi).collect());
        cols
    };

    let mut bounds = vec![(0.0, f64::INFINITY)];
    let fp_b = EllipsoidFactor::new(spec.plus_abs());
    let fm_b = EllipsoidFactor::new(spec.minus_abs());
    bounds.extend(crate::family::factor_angle_bounds(&fp_b));
    bounds.extend(crate::family::factor_angle_bounds(&fm_b));
    bounds.push((f64::NEG_INFINITY, f64::INFINITY));
    Ok(Immersion::new(dim, eval).with_jacobian(jac).with_bounds(bounds))
}

/// Random on-slice sample `(x, s)` with `s` uniform over the period.
pub fn sample_on_slice_ode<R: rand::Rng>(
    slice: &VarifoldSliceOde,
    rng: &mut R,
    r_range: (f64, f64),
) -> (Vec<f64>, f64) {
    let spec = slice.params().lambda();
    let fp = EllipsoidFactor::new(spec.plus_abs());
    let fm = EllipsoidFactor::new(spec.minus_abs());
    let sample_factor = |f: &EllipsoidFactor, rng: &mut R| -> Vec<f64> {
        let angles: Vec<f64> = f
            .angle_ranges()
            .iter()
            .map(|&(lo, hi)| {
                let margin = 0.15 * (hi - lo);
                rng.random_range(lo + margin..hi - margin)
            })
            .collect();
        let branch = if rng.random_bool(0.5) { 1 } else { -1 };
        f.point(&angles, branch)
    };
    let r = rng.random_range(r_range.0..r_range.1);
    let (rho_p, rho_m) = radial_scales(slice.level(), r);
    let pp = sample_factor(&fp, rng);
    let pm = sample_factor(&fm, rng);
    let mut x: Vec<f64> = pp.iter().map(|w| rho_p * w).collect();
    x.extend(pm.iter().map(|w| rho_m * w));
    let s = rng.random_range(0.0..slice.orbit.period());
    (x, s)
}

/// Map a [`SigmaPoint`] to the slice point, sharing the rotating-family
/// conventions.
pub fn sigma_parametrize_ode(slice: &VarifoldSliceOde, p: &SigmaPoint) -> Result<Vec<f64>, OdeError> {
    let spec = slice.params().lambda();
    let k = spec.k();
    let n = spec.n();
    if p.omega_plus.len() != k || p.omega_minus.len() != n - k || p.r < 0.0 {
        return Err(OdeError::InvalidParams("sigma point shape mismatch".into()));
    }
    let (rho_p, rho_m) = radial_scales(slice.level(), p.r);
    let mut x: Vec<f64> = p.omega_plus.iter().map(|w| rho_p * w).collect();
    x.extend(p.omega_minus.iter().map(|w| rho_m * w));
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params(l: &[f64], alpha: f64) -> OdeParams {
        OdeParams::new(LambdaSpec::new(l).unwrap(), alpha).unwrap()
    }

    #[test]
    fn rhs_reference_point() {
        // n = 2, λ = (1, −1), α = 1, w = (1, 1), θ = 0:
        // dw = (conj(w_2), −conj(w_1)) = (1, −1), dθ = Im(1) = 0.
        let p = params(&[1.0, -1.0], 1.0);
        let st = OdeState { w: vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)], theta: 0.0 };
        let d = rhs(&p, &st);
        assert_abs_diff_eq!(d.w[0].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.w[1].re, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.w[0].im, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.theta, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn theta_rate_vanishes_when_product_is_real() {
        let p = params(&[1.0, 1.0, -1.0], 1.0);
        // pick w with e^{-iθ} Π w real: θ = arg Π w
        let w = vec![C64::new(0.7, 0.3), C64::new(1.1, -0.4), C64::new(0.9, 0.2)];
        let theta = (w[0] * w[1] * w[2]).arg();
        let d = rhs(&p, &OdeState { w, theta });
        assert!(d.theta.abs() < 1e-14);
    }

    #[test]
    fn modulus_rates_are_proportional_to_lambda() {
        // d(|w_j|²)/ds ÷ λ_j is the same for every j, algebraically.
        let p = params(&[2.0, -1.0, -3.0], 1.0);
        let st = OdeState {
            w: vec![C64::new(0.8, 0.1), C64::new(-0.5, 0.9), C64::new(0.3, -0.7)],
            theta: 0.4,
        };
        let d = rhs(&p, &st);
        let rates: Vec<f64> = (0..3)
            .map(|j| 2.0 * (st.w[j].conj() * d.w[j]).re / p.lambda().lambdas()[j])
            .collect();
        assert_abs_diff_eq!(rates[0], rates[1], epsilon = 1e-15);
        assert_abs_diff_eq!(rates[0], rates[2], epsilon = 1e-15);
    }

    #[test]
    fn conserved_quantities_drift_is_small() {
        let p = params(&[1.0, -1.0], 1.0);
        let init = OdeState { w: vec![C64::new(1.1, 0.0), C64::new(0.8, 0.1)], theta: 0.3 };
        let traj = integrate(&p, &init, 10.0, 1e-10).unwrap();
        let q0 = init.conserved(&p);
        let q1 = traj.end_state().conserved(&p);
        for (a, b) in q0.iter().zip(&q1) {
            assert!((a - b).abs() < 1e-8, "drift {}", (a - b).abs());
        }
    }

    #[test]
    fn integrate_zero_time_is_identity() {
        let p = params(&[1.0, -1.0], 1.0);
        let init = OdeState { w: vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)], theta: 0.1 };
        let traj = integrate(&p, &init, 0.0, 1e-10).unwrap();
        assert_eq!(traj.end_state(), init);
    }

    #[test]
    fn self_convergence_between_tolerances() {
        let p = params(&[1.0, 1.0, -1.0], 1.0);
        let init = OdeState {
            w: vec![C64::new(1.2, 0.0), C64::new(0.9, 0.0), C64::new(0.7, 0.0)],
            theta: -0.5,
        };
        let coarse = integrate(&p, &init, 5.0, 1e-6).unwrap().end_state();
        let fine = integrate(&p, &init, 5.0, 1e-12).unwrap().end_state();
        assert!(coarse.distance(&fine) < 1e-5);
    }

    #[test]
    fn modulus_collapse_aborts() {
        let p = params(&[1.0, -1.0], 1.0);
        let init = OdeState { w: vec![C64::new(2.0, 0.0), C64::new(1e-10, 0.0)], theta: 0.0 };
        let r = integrate(&p, &init, 10.0, 1e-10);
        assert!(matches!(r, Err(OdeError::ModulusCollapse { .. })));
    }

    #[test]
    fn modulus_decays_along_negative_weight() {
        // with both phases aligned (χ = 0) the negative-weight modulus
        // shrinks linearly toward zero
        let p = params(&[1.0, -1.0], 1.0);
        let init = OdeState { w: vec![C64::new(2.0, 0.0), C64::new(0.05, 0.0)], theta: 0.0 };
        let traj = integrate(&p, &init, 0.02, 1e-12).unwrap();
        let end = traj.end_state();
        assert!(end.w[1].norm() < 0.02, "modulus should shrink, got {}", end.w[1].norm());
    }
}
