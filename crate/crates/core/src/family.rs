//! The closed-form rotating family of Lagrangian slices.
//!
//! For a weight vector `λ = (λ_1, …, λ_n)` with positives listed first, the
//! slice at flow time `t` is
//!
//! ```text
//! V_t = { (x_1 e^{i λ_1 s}, …, x_n e^{i λ_n s}) :
//!         0 ≤ s < π,  Σ λ_j x_j² = C },   C = (−2t) Σ λ_j,
//! ```
//!
//! a Hamiltonian stationary self-shrinker for `t < 0`, self-expander for
//! `t > 0`, and a cone with an isolated singular point at the origin for
//! `t = 0`. This module provides the immersion, the closed-form densities,
//! the quadric-hypersurface parametrization with its volume form, topology
//! classification for integer weights, and slice-to-slice rescaling.

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::ellipsoid::EllipsoidFactor;
use crate::geom::{ComplexPoint, Immersion};
use crate::tol;
use crate::C64;

#[derive(Debug, Error)]
pub enum FamilyError {
    #[error("lambda entries must be nonzero and finite")]
    InvalidLambda,
    #[error("point violates the slice constraint: residual {residual:.3e}")]
    OffSlice { residual: f64 },
    #[error("the cone vertex x = 0 is a genuine singularity")]
    VertexInput,
    #[error("slices must have nonzero times of the same sign: t_a = {ta}, t_b = {tb}")]
    OppositeSigns { ta: f64, tb: f64 },
    #[error("topology classification requires integer lambda entries")]
    NonIntegerLambda,
    #[error("degenerate base point for a chart")]
    DegeneratePoint,
    #[error("sigma point does not match the slice shape")]
    BadSigmaPoint,
}

/// The weight tuple `(λ_1, …, λ_n)` with its sign split.
///
/// Entries are stored positives-first (a stable partition of the input);
/// `k` counts the positive entries. Real entries are accepted; topology
/// claims additionally require integers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaSpec {
    lambdas: Vec<f64>,
    k: usize,
}

impl LambdaSpec {
    pub fn new(entries: &[f64]) -> Result<Self, FamilyError> {
        if entries.is_empty() || entries.iter().any(|&l| l == 0.0 || !l.is_finite()) {
            return Err(FamilyError::InvalidLambda);
        }
        let mut lambdas: Vec<f64> = entries.iter().copied().filter(|&l| l > 0.0).collect();
        let k = lambdas.len();
        lambdas.extend(entries.iter().copied().filter(|&l| l < 0.0));
        Ok(LambdaSpec { lambdas, k })
    }

    pub fn n(&self) -> usize {
        self.lambdas.len()
    }

    /// Count of positive entries (listed first).
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn sum(&self) -> f64 {
        self.lambdas.iter().sum()
    }

    pub fn sum_positive(&self) -> bool {
        self.sum() > 0.0
    }

    /// `|λ_j|` over the positive block.
    pub fn plus_abs(&self) -> Vec<f64> {
        self.lambdas[..self.k].to_vec()
    }

    /// `|λ_j|` over the negative block.
    pub fn minus_abs(&self) -> Vec<f64> {
        self.lambdas[self.k..].iter().map(|l| -l).collect()
    }

    /// Integer view for topology claims.
    pub fn as_integers(&self) -> Option<Vec<i64>> {
        let mut out = Vec::with_capacity(self.n());
        for &l in &self.lambdas {
            let r = l.round();
            if (l - r).abs() > 1e-9 || r == 0.0 {
                return None;
            }
            out.push(r as i64);
        }
        Some(out)
    }
}

/// Shrinker / cone / expander classification of a slice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SliceKind {
    Shrinker,
    Cone,
    Expander,
}

/// One time slice `V_t` of the rotating family.
#[derive(Clone, Debug)]
pub struct VarifoldSliceInt {
    spec: LambdaSpec,
    t: f64,
    level_c: f64,
}

impl VarifoldSliceInt {
    pub fn new(spec: LambdaSpec, t: f64) -> Self {
        let level_c = -2.0 * t * spec.sum();
        VarifoldSliceInt { spec, t, level_c }
    }

    pub fn spec(&self) -> &LambdaSpec {
        &self.spec
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Level constant `C = (−2t) Σ λ_j` of the defining quadric.
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

    fn on_slice_residual(&self, x: &[f64]) -> f64 {
        let q: f64 = self.spec.lambdas().iter().zip(x).map(|(l, xi)| l * xi * xi).sum();
        let scale: f64 = 1.0f64
            .max(self.level_c.abs())
            .max(self.spec.lambdas().iter().zip(x).map(|(l, xi)| (l * xi * xi).abs()).sum());
        (q - self.level_c).abs() / scale
    }

    pub fn check_on_slice(&self, x: &[f64]) -> Result<(), FamilyError> {
        let residual = self.on_slice_residual(x);
        if residual > tol::ON_SLICE {
            return Err(FamilyError::OffSlice { residual });
        }
        Ok(())
    }
}

/// The map `(x, s) ↦ (x_1 e^{i λ_1 s}, …, x_n e^{i λ_n s})`.
///
/// `s` may be any real; `[0, π)` is the fundamental domain of the
/// two-to-one identification `F(x, s + π) = F(ψ(x), s)`.
pub fn immerse(slice: &VarifoldSliceInt, x: &[f64], s: f64) -> Result<ComplexPoint, FamilyError> {
    slice.check_on_slice(x)?;
    Ok(immerse_unchecked(slice.spec(), x, s))
}

fn immerse_unchecked(spec: &LambdaSpec, x: &[f64], s: f64) -> ComplexPoint {
    ComplexPoint(
        spec.lambdas()
            .iter()
            .zip(x)
            .map(|(&l, &xi)| Complex::from_polar(xi, l * s))
            .collect(),
    )
}

/// The slice position without the on-slice check (quadrature-internal use).
pub fn position(slice: &VarifoldSliceInt, x: &[f64], s: f64) -> ComplexPoint {
    immerse_unchecked(slice.spec(), x, s)
}

/// The sign flip `ψ(x)_j = (−1)^{λ_j} x_j` realizing the `s + π`
/// identification (integer weights).
pub fn deck_flip(spec: &LambdaSpec, x: &[f64]) -> Option<Vec<f64>> {
    let ints = spec.as_integers()?;
    Some(
        ints.iter()
            .zip(x)
            .map(|(&l, &xi)| if l.rem_euclid(2) == 1 { -xi } else { xi })
            .collect(),
    )
}

/// Closed-form pointwise densities of a slice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Density3 {
    /// `|V_t|² = Σ x_j²`.
    pub position_norm_sq: f64,
    /// `|h|² = (Σ λ_j)² / (Σ λ_j² x_j²)`.
    pub h_norm_sq: f64,
    /// Factor multiplying `dS_t ds` in the mass measure: `√(Σ λ_j² x_j²)`.
    pub radon_density: f64,
}

/// Pointwise densities at an on-slice point away from the vertex.
pub fn density_closed_form(slice: &VarifoldSliceInt, x: &[f64]) -> Result<Density3, FamilyError> {
    slice.check_on_slice(x)?;
    if x.iter().map(|v| v * v).sum::<f64>() < 1e-24 {
        return Err(FamilyError::VertexInput);
    }
    Ok(densities_unchecked(slice, x))
}

/// The same densities without precondition checks.
pub fn densities_unchecked(slice: &VarifoldSliceInt, x: &[f64]) -> Density3 {
    let pos_sq: f64 = x.iter().map(|v| v * v).sum();
    let wsq: f64 = slice
        .spec()
        .lambdas()
        .iter()
        .zip(x)
        .map(|(l, xi)| l * l * xi * xi)
        .sum();
    let sum = slice.spec().sum();
    Density3 {
        position_norm_sq: pos_sq,
        h_norm_sq: sum * sum / wsq,
        radon_density: wsq.sqrt(),
    }
}

/// Closed-form mean curvature vector
/// `H = −(Σλ / Σ λ_j² x_j²) (λ_j x_j e^{i λ_j s})`.
pub fn mean_curvature_closed(slice: &VarifoldSliceInt, x: &[f64], s: f64) -> ComplexPoint {
    let wsq: f64 = slice
        .spec()
        .lambdas()
        .iter()
        .zip(x)
        .map(|(l, xi)| l * l * xi * xi)
        .sum();
    let factor = -slice.spec().sum() / wsq;
    ComplexPoint(
        slice
            .spec()
            .lambdas()
            .iter()
            .zip(x)
            .map(|(&l, &xi)| Complex::from_polar(factor * l * xi, l * s))
            .collect(),
    )
}

/// A point of the slice in quadric coordinates: radial coordinate, points on
/// the two unit-level factors, and the circle parameter.
#[derive(Clone, Debug)]
pub struct SigmaPoint {
    pub r: f64,
    pub omega_plus: Vec<f64>,
    pub omega_minus: Vec<f64>,
    pub s: f64,
}

/// The quadric factors of a slice: `{Σ_{j≤k} |λ_j| x_j² = 1}` in `R^k` and
/// `{Σ_{j>k} |λ_j| x_j² = 1}` in `R^{n−k}`.
pub fn slice_factors(spec: &LambdaSpec) -> (EllipsoidFactor, EllipsoidFactor) {
    (
        EllipsoidFactor::new(spec.plus_abs()),
        EllipsoidFactor::new(spec.minus_abs()),
    )
}

/// Radial scale factors `(ρ₊, ρ₋)` of the parametrization
/// `x = ρ₊ ω₊ ⊕ ρ₋ ω₋` at level `C` and radial coordinate `r`.
pub fn radial_scales(level_c: f64, r: f64) -> (f64, f64) {
    if level_c > 0.0 {
        ((r * r + level_c).sqrt(), r)
    } else if level_c < 0.0 {
        (r, (r * r - level_c).sqrt())
    } else {
        (r, r)
    }
}

/// Map a [`SigmaPoint`] to the slice point `x ∈ R^n`.
pub fn sigma_parametrize(slice: &VarifoldSliceInt, p: &SigmaPoint) -> Result<Vec<f64>, FamilyError> {
    let k = slice.spec().k();
    let n = slice.spec().n();
    if p.omega_plus.len() != k || p.omega_minus.len() != n - k || p.r < 0.0 {
        return Err(FamilyError::BadSigmaPoint);
    }
    if (k == n || k == 0) && p.r != 0.0 {
        return Err(FamilyError::BadSigmaPoint);
    }
    let (rho_plus, rho_minus) = radial_scales(slice.level(), p.r);
    let mut x = Vec::with_capacity(n);
    x.extend(p.omega_plus.iter().map(|w| rho_plus * w));
    x.extend(p.omega_minus.iter().map(|w| rho_minus * w));
    Ok(x)
}

/// Raw closed-form volume density of the quadric hypersurface per
/// `dr dS⁻ dS⁺`, given the level `c`, radial coordinate `r`, and the
/// squared normal components `w1 = |X₁⊥|²`, `w2 = |X₂⊥|²` of the two
/// unit-level factors. For slices with an empty factor (`k = 0` or
/// `k = n`) the density is per the remaining `dS` alone.
pub fn sigma_volume_density(n: usize, k: usize, c: f64, r: f64, w1: f64, w2: f64) -> f64 {
    let (n, k) = (n as i32, k as i32);
    if k == n || k == 0 {
        return c.abs().powf(f64::from(n - 1) / 2.0);
    }
    if c > 0.0 {
        let q = r * r + c;
        r.powi(n - k - 1) * q.powf(f64::from(k - 1) / 2.0) * (r * r / q * w1 + w2).sqrt()
    } else if c < 0.0 {
        let q = r * r - c;
        r.powi(k - 1) * q.powf(f64::from(n - k - 1) / 2.0) * (w1 + r * r / q * w2).sqrt()
    } else {
        r.powi(n - 2) * (w1 + w2).sqrt()
    }
}

/// Closed-form volume density of `Σ_t` at a [`SigmaPoint`], per
/// `dr dS⁻ dS⁺` (per the nonempty `dS` alone for pure-ellipsoid slices).
pub fn volume_form_closed(slice: &VarifoldSliceInt, p: &SigmaPoint) -> Result<f64, FamilyError> {
    let k = slice.spec().k();
    let n = slice.spec().n();
    if p.omega_plus.len() != k || p.omega_minus.len() != n - k || p.r < 0.0 {
        return Err(FamilyError::BadSigmaPoint);
    }
    let (fp, fm) = slice_factors(slice.spec());
    let w1 = if k > 0 { fp.normal_component_sq(&p.omega_plus) } else { 0.0 };
    let w2 = if n - k > 0 { fm.normal_component_sq(&p.omega_minus) } else { 0.0 };
    Ok(sigma_volume_density(n, k, slice.level(), p.r, w1, w2))
}

/// Rescale an on-slice point between two slices of the same time sign:
/// `x_b = √(t_b / t_a) x_a`.
pub fn scale_between_slices(
    a: &VarifoldSliceInt,
    b: &VarifoldSliceInt,
    x_a: &[f64],
) -> Result<Vec<f64>, FamilyError> {
    if a.t() * b.t() <= 0.0 {
        return Err(FamilyError::OppositeSigns { ta: a.t(), tb: b.t() });
    }
    a.check_on_slice(x_a)?;
    let factor = (b.t() / a.t()).sqrt();
    Ok(x_a.iter().map(|v| factor * v).collect())
}

// ---------------------------------------------------------------------------
// Charts
// ---------------------------------------------------------------------------

/// Deterministic positively-oriented orthonormal basis of the hyperplane
/// orthogonal to `normal`: `det[normal/|normal| | B] = +1`.
pub(crate) fn oriented_tangent_basis(normal: &[f64]) -> Option<Vec<Vec<f64>>> {
    let n = normal.len();
    let norm = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm < 1e-14 {
        return None;
    }
    let unit: Vec<f64> = normal.iter().map(|v| v / norm).collect();
    let mut basis: Vec<Vec<f64>> = vec![unit.clone()];
    for i in 0..n {
        if basis.len() == n {
            break;
        }
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (vj, bj) in v.iter_mut().zip(b) {
                *vj -= dot * bj;
            }
        }
        let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if vnorm > 1e-8 {
            for vj in v.iter_mut() {
                *vj /= vnorm;
            }
            basis.push(v);
        }
    }
    if basis.len() != n {
        return None;
    }
    let mat = DMatrix::from_fn(n, n, |i, j| basis[j][i]);
    if mat.determinant() < 0.0 {
        for vj in basis[1].iter_mut() {
            *vj = -*vj;
        }
    }
    Some(basis[1..].to_vec())
}

/// Newton-project `y` onto the level set `Σ λ_j y_j² = c` along its gradient.
pub(crate) fn project_to_level(lambda: &[f64], c: f64, y: &mut [f64]) {
    for _ in 0..16 {
        let phi: f64 = lambda.iter().zip(y.iter()).map(|(l, v)| l * v * v).sum::<f64>() - c;
        let scale: f64 = 1.0f64
            .max(c.abs())
            .max(lambda.iter().zip(y.iter()).map(|(l, v)| (l * v * v).abs()).sum());
        if phi.abs() <= 1e-15 * scale {
            return;
        }
        let grad: Vec<f64> = lambda.iter().zip(y.iter()).map(|(l, v)| 2.0 * l * v).collect();
        let g2: f64 = grad.iter().map(|g| g * g).sum();
        if g2 < 1e-28 {
            return;
        }
        let step = phi / g2;
        for (v, g) in y.iter_mut().zip(&grad) {
            *v -= step * g;
        }
    }
}

/// Local chart of the slice at an on-slice base point, suitable for the
/// finite-difference geometry operations.
///
/// Parameters are `u = (s, ξ_1, …, ξ_{n−1})`; the `ξ` directions move along
/// a positively-oriented orthonormal tangent basis of the quadric and are
/// Newton-projected back onto it. The orientation is normalized so the
/// Lagrangian angle equals `(Σ λ_j) s + π/2` mod 2π, which the chart carries
/// as its angle hint.
pub fn chart_at(slice: &VarifoldSliceInt, x0: &[f64], _s0: f64) -> Result<Immersion, FamilyError> {
    slice.check_on_slice(x0)?;
    let lambda: Vec<f64> = slice.spec().lambdas().to_vec();
    let normal: Vec<f64> = lambda.iter().zip(x0).map(|(l, v)| l * v).collect();
    let basis = oriented_tangent_basis(&normal).ok_or(FamilyError::DegeneratePoint)?;
    let c = slice.level();
    let base = x0.to_vec();
    let n = lambda.len();
    let sum = slice.spec().sum();

    let lam = lambda.clone();
    let imm = Immersion::new(n, move |u: &[f64]| {
        let s = u[0];
        let mut y = base.clone();
        for (a, b) in basis.iter().enumerate() {
            for (yj, bj) in y.iter_mut().zip(b) {
                *yj += u[a + 1] * bj;
            }
        }
        project_to_level(&lam, c, &mut y);
        lam.iter()
            .zip(&y)
            .map(|(&l, &xi)| Complex::from_polar(xi, l * s))
            .collect::<Vec<C64>>()
    })
    .with_angle_hint(move |u: &[f64]| (sum * u[0] + PI / 2.0).rem_euclid(std::f64::consts::TAU));
    Ok(imm)
}

/// Global chart of a slice over `(r, plus-angles, minus-angles, s)` with an
/// analytic Jacobian, used by the Gram-density oracle and mesh export.
/// `branches` select the sign for two-point factors. No orientation is
/// promised (the angle is defined mod π on such charts).
pub fn sigma_chart(
    slice: &VarifoldSliceInt,
    branch_plus: i8,
    branch_minus: i8,
) -> Result<Immersion, FamilyError> {
    let (fp, fm) = slice_factors(slice.spec());
    let k = slice.spec().k();
    let n = slice.spec().n();
    if k == 0 || k == n {
        return Err(FamilyError::BadSigmaPoint);
    }
    let c = slice.level();
    let lambda: Vec<f64> = slice.spec().lambdas().to_vec();
    let na_plus = fp.n_angles();
    let na_minus = fm.n_angles();
    let dim = 1 + na_plus + na_minus + 1;

    let split = move |u: &[f64]| -> (f64, Vec<f64>, Vec<f64>, f64) {
        let r = u[0];
        let ap = u[1..1 + na_plus].to_vec();
        let am = u[1 + na_plus..1 + na_plus + na_minus].to_vec();
        let s = u[dim - 1];
        (r, ap, am, s)
    };

    let lam_e = lambda.clone();
    let fp_e = fp.clone();
    let fm_e = fm.clone();
    let eval = move |u: &[f64]| -> Vec<C64> {
        let (r, ap, am, s) = split(u);
        let (rho_p, rho_m) = radial_scales(c, r);
        let pp = fp_e.point(&ap, branch_plus);
        let pm = fm_e.point(&am, branch_minus);
        let mut x: Vec<f64> = pp.iter().map(|w| rho_p * w).collect();
        x.extend(pm.iter().map(|w| rho_m * w));
        lam_e
            .iter()
            .zip(&x)
            .map(|(&l, &xi)| Complex::from_polar(xi, l * s))
            .collect()
    };

    let jac = move |u: &[f64]| -> Vec<Vec<C64>> {
        let (r, ap, am, s) = split(u);
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
        let phase = |j: usize, v: f64| Complex::from_polar(v, lambda[j] * s);
        let mut cols: Vec<Vec<C64>> = Vec::with_capacity(u.len());
        // ∂/∂r
        let mut col = Vec::with_capacity(lambda.len());
        for (j, w) in pp.iter().enumerate() {
            col.push(phase(j, drho_p * w));
        }
        for (j, w) in pm.iter().enumerate() {
            col.push(phase(k + j, drho_m * w));
        }
        cols.push(col);
        // plus angles
        if na_plus > 0 {
            let jp = fp.jacobian(&ap);
            for dcol in jp {
                let mut col = Vec::with_capacity(lambda.len());
                for (j, dv) in dcol.iter().enumerate() {
                    col.push(phase(j, rho_p * dv));
                }
                for j in 0..pm.len() {
                    col.push(phase(k + j, 0.0));
                }
                cols.push(col);
            }
        }
        // minus angles
        if na_minus > 0 {
            let jm = fm.jacobian(&am);
            for dcol in jm {
                let mut col = vec![C64::new(0.0, 0.0); k];
                for (j, dv) in dcol.iter().enumerate() {
                    col.push(phase(k + j, rho_m * dv));
                }
                cols.push(col);
            }
        }
        // ∂/∂s
        let mut xs: Vec<f64> = pp.iter().map(|w| rho_p * w).collect();
        xs.extend(pm.iter().map(|w| rho_m * w));
        let col: Vec<C64> = lambda
            .iter()
            .zip(&xs)
            .map(|(&l, &xi)| C64::new(0.0, l) * Complex::from_polar(xi, l * s))
            .collect();
        cols.push(col);
        cols
    };

    let mut bounds = vec![(0.0, f64::INFINITY)];
    let (fp2, fm2) = slice_factors(slice.spec());
    bounds.extend(factor_angle_bounds(&fp2));
    bounds.extend(factor_angle_bounds(&fm2));
    bounds.push((f64::NEG_INFINITY, f64::INFINITY));

    Ok(Immersion::new(dim, eval).with_jacobian(jac).with_bounds(bounds))
}

/// Parameter-box bounds for a factor's chart angles: polar angles pinned to
/// their degenerate-free interval, the final azimuthal angle periodic and
/// unbounded.
pub(crate) fn factor_angle_bounds(factor: &EllipsoidFactor) -> Vec<(f64, f64)> {
    let na = factor.n_angles();
    let mut out = Vec::with_capacity(na);
    for (i, rg) in factor.angle_ranges().into_iter().enumerate() {
        if i + 1 == na {
            out.push((f64::NEG_INFINITY, f64::INFINITY));
        } else {
            out.push(rg);
        }
    }
    out
}

/// Random on-slice sample `(x, s)` with the radial coordinate drawn from
/// `r_range`, avoiding chart poles.
pub fn sample_on_slice<R: Rng>(
    slice: &VarifoldSliceInt,
    rng: &mut R,
    r_range: (f64, f64),
) -> (Vec<f64>, f64) {
    let (fp, fm) = slice_factors(slice.spec());
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
    let k = slice.spec().k();
    let n = slice.spec().n();
    let r = if k == 0 || k == n {
        0.0
    } else {
        rng.random_range(r_range.0..r_range.1)
    };
    let p = SigmaPoint {
        r,
        omega_plus: sample_factor(&fp, rng),
        omega_minus: sample_factor(&fm, rng),
        s: rng.random_range(0.0..PI),
    };
    let x = sigma_parametrize(slice, &p).expect("sampled sigma point is well-formed");
    (x, p.s)
}

// ---------------------------------------------------------------------------
// Topology classification
// ---------------------------------------------------------------------------

/// Sign of the level constant for classification.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CSign {
    Negative,
    Zero,
    Positive,
}

impl CSign {
    pub fn parse(s: &str) -> Option<CSign> {
        match s.trim() {
            "-" | "neg" | "negative" => Some(CSign::Negative),
            "0" | "zero" => Some(CSign::Zero),
            "+" | "pos" | "positive" => Some(CSign::Positive),
            _ => None,
        }
    }
}

/// Outcome of the topology / orientability / embeddedness classification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopologyReport {
    pub lambdas: Vec<i64>,
    pub k: usize,
    pub c_sign: CSign,
    pub oriented: bool,
    pub special_lagrangian: bool,
    pub topology: String,
    pub connected_components: usize,
    /// The stated sufficient conditions for embeddedness hold.
    pub embedded: bool,
    pub empty: bool,
}

impl TopologyReport {
    /// One-line rendering used by the CLI.
    pub fn summary(&self) -> String {
        if self.empty {
            return format!("{} (empty slice)", self.topology);
        }
        let mut parts = vec![self.topology.clone()];
        parts.push(if self.oriented { "orientable".into() } else { "non-orientable".into() });
        parts.push(match self.connected_components {
            1 => "connected".into(),
            c => format!("{c} components"),
        });
        parts.push(if self.embedded { "embedded".into() } else { "not embedded".into() });
        let mut line = parts.join(", ");
        if self.special_lagrangian {
            line.push_str(", special Lagrangian (sum = 0)");
        }
        line
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Classify the slice with level sign `c_sign` for integer weights.
pub fn classify(spec: &LambdaSpec, c_sign: CSign) -> Result<TopologyReport, FamilyError> {
    let ints = spec.as_integers().ok_or(FamilyError::NonIntegerLambda)?;
    let n = spec.n();
    let k = spec.k();
    let sum: i64 = ints.iter().sum();
    let oriented = sum % 2 == 0;
    let special = sum == 0;

    let empty = (c_sign == CSign::Positive && k == 0) || (c_sign == CSign::Negative && k == n);
    let topology = if empty {
        "empty".to_string()
    } else if (k == 0 || k == n) && c_sign == CSign::Zero {
        "{0}".to_string()
    } else {
        match c_sign {
            CSign::Negative => format!("R^{} x S^{} x S^1", k, n - k - 1),
            CSign::Positive => format!("S^{} x R^{} x S^1", k - 1, n - k),
            CSign::Zero => format!("cone with link S^{} x S^{} x S^1", k - 1, n - k - 1),
        }
    };

    let two_components = !empty
        && ((c_sign == CSign::Positive && k == 1 && ints[0] % 2 == 0)
            || (c_sign == CSign::Negative && k == n - 1 && ints[n - 1] % 2 == 0));
    let connected_components = if empty {
        0
    } else if two_components {
        2
    } else {
        1
    };

    let mut coprime = true;
    for i in 0..n {
        for j in i + 1..n {
            if gcd(ints[i], ints[j]) != 1 {
                coprime = false;
            }
        }
    }
    let embedded = !empty
        && coprime
        && match c_sign {
            CSign::Zero => true,
            CSign::Positive => ints[..k].iter().all(|&l| l == 1),
            CSign::Negative => ints[k..].iter().all(|&l| l == -1),
        };

    Ok(TopologyReport {
        lambdas: ints,
        k,
        c_sign,
        oriented,
        special_lagrangian: special,
        topology,
        connected_components,
        embedded,
        empty,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lam(v: &[f64]) -> LambdaSpec {
        LambdaSpec::new(v).unwrap()
    }

    #[test]
    fn lambda_spec_orders_positives_first() {
        let spec = lam(&[-1.0, 2.0, 3.0]);
        assert_eq!(spec.lambdas(), &[2.0, 3.0, -1.0]);
        assert_eq!(spec.k(), 2);
        assert!(LambdaSpec::new(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn immerse_real_and_quarter_turn() {
        let slice = VarifoldSliceInt::new(lam(&[1.0, 1.0, -1.0]), -0.5);
        assert_abs_diff_eq!(slice.level(), 1.0, epsilon = 1e-15);
        let f = immerse(&slice, &[1.0, 0.0, 0.0], 0.0).unwrap();
        assert_abs_diff_eq!(f[0].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f[0].im, 0.0, epsilon = 1e-15);
        let f = immerse(&slice, &[1.0, 0.0, 0.0], PI / 2.0).unwrap();
        assert_abs_diff_eq!(f[0].re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f[0].im, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn off_slice_point_is_rejected() {
        let slice = VarifoldSliceInt::new(lam(&[1.0, 1.0, -1.0]), -0.5);
        assert!(matches!(
            immerse(&slice, &[1.1, 0.0, 0.0], 0.0),
            Err(FamilyError::OffSlice { .. })
        ));
    }

    #[test]
    fn double_cover_identity() {
        let spec = lam(&[1.0, 1.0, -1.0]);
        let slice = VarifoldSliceInt::new(spec.clone(), -0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let (x, s) = sample_on_slice(&slice, &mut rng, (0.2, 2.0));
            let lhs = immerse(&slice, &x, s + PI).unwrap();
            let flipped = deck_flip(&spec, &x).unwrap();
            let rhs = immerse(&slice, &flipped, s).unwrap();
            assert!(lhs.sub(&rhs).norm() < 1e-13);
        }
    }

    #[test]
    fn density_values_at_reference_points() {
        let slice = VarifoldSliceInt::new(lam(&[1.0, 1.0, -1.0]), -0.5);
        let d = density_closed_form(&slice, &[1.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(d.position_norm_sq, 1.0, epsilon = 1e-14);
        // |h|² = (Σλ)² / Σλ²x² = 1/1
        assert_abs_diff_eq!(d.h_norm_sq, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(d.radon_density, 1.0, epsilon = 1e-14);

        // x = (0, 2, √2) lies on V_{-1}: 0 + 4 − 2 = 2 = (−2)(−1)(1)
        let slice = VarifoldSliceInt::new(lam(&[1.0, 1.0, -1.0]), -1.0);
        let d = density_closed_form(&slice, &[0.0, 2.0, 2.0f64.sqrt()]).unwrap();
        assert_abs_diff_eq!(d.h_norm_sq, 1.0 / 6.0, epsilon = 1e-14);
        assert!(matches!(
            density_closed_form(&slice, &[0.0, 0.0, 0.0]),
            Err(FamilyError::OffSlice { .. }) | Err(FamilyError::VertexInput)
        ));
    }

    #[test]
    fn sigma_roundtrip_stays_on_slice() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for spec in [lam(&[1.0, 1.0, -1.0]), lam(&[2.0, -1.0, -1.0]), lam(&[2.0, 3.0, -5.0])] {
            for t in [-0.7, 0.0, 0.4] {
                let slice = VarifoldSliceInt::new(spec.clone(), t);
                for _ in 0..50 {
                    let (x, _s) = sample_on_slice(&slice, &mut rng, (0.1, 3.0));
                    let q: f64 = spec.lambdas().iter().zip(&x).map(|(l, xi)| l * xi * xi).sum();
                    let scale: f64 = 1.0f64
                        .max(spec.lambdas().iter().zip(&x).map(|(l, xi)| (l * xi * xi).abs()).sum());
                    assert!(
                        (q - slice.level()).abs() <= tol::SLICE_RECONSTRUCT * scale,
                        "roundtrip residual {} at t={t}",
                        (q - slice.level()).abs()
                    );
                }
            }
        }
    }

    #[test]
    fn waist_and_cone_shapes() {
        // r = 0 on the shrinker slice collapses the minus factor.
        let slice = VarifoldSliceInt::new(lam(&[1.0, 1.0, -1.0]), -0.5);
        let p = SigmaPoint {
            r: 0.0,
            omega_plus: vec![1.0, 0.0],
            omega_minus: vec![1.0],
            s: 0.0,
        };
        let x = sigma_parametrize(&slice, &p).unwrap();
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x[2], 0.0, epsilon = 1e-15);
        // t = 0 gives exact rays.
        let cone = VarifoldSliceInt::new(lam(&[1.0, 1.0, -1.0]), 0.0);
        let p = SigmaPoint {
            r: 1.7,
            omega_plus: vec![1.0, 0.0],
            omega_minus: vec![1.0],
            s: 0.0,
        };
        let x = sigma_parametrize(&cone, &p).unwrap();
        assert_abs_diff_eq!(x[0], 1.7, epsilon = 1e-15);
        assert_abs_diff_eq!(x[2], 1.7, epsilon = 1e-15);
    }

    #[test]
    fn volume_bound_holds_on_shrinker_samples() {
        // r^{n−k−1}(r²+C)^{(k−1)/2} ≤ (Σ λ_j² x_j²)^{(n−2)/2} for integer λ, t < 0.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for spec in [lam(&[1.0, 1.0, -1.0]), lam(&[2.0, 3.0, -5.0])] {
            let slice = VarifoldSliceInt::new(spec.clone(), -0.8);
            let (fp, fm) = slice_factors(&spec);
            for _ in 0..200 {
                let r = rng.random_range(0.01..3.0);
                let ap: Vec<f64> =
                    fp.angle_ranges().iter().map(|&(lo, hi)| rng.random_range(lo..hi)).collect();
                let am: Vec<f64> =
                    fm.angle_ranges().iter().map(|&(lo, hi)| rng.random_range(lo..hi)).collect();
                let p = SigmaPoint {
                    r,
                    omega_plus: fp.point(&ap, 1),
                    omega_minus: fm.point(&am, 1),
                    s: 0.0,
                };
                let x = sigma_parametrize(&slice, &p).unwrap();
                let wsq: f64 = spec.lambdas().iter().zip(&x).map(|(l, xi)| l * l * xi * xi).sum();
                let n = spec.n() as i32;
                let k = spec.k() as i32;
                let lhs = r.powi(n - k - 1) * (r * r + slice.level()).powf(f64::from(k - 1) / 2.0);
                let rhs = wsq.powf(f64::from(n - 2) / 2.0);
                assert!(lhs <= rhs * (1.0 + 1e-12), "bound violated: {lhs} > {rhs}");
            }
        }
    }

    #[test]
    fn scaling_between_slices() {
        let spec = lam(&[1.0, 1.0, -1.0]);
        let a = VarifoldSliceInt::new(spec.clone(), -0.5);
        let b = VarifoldSliceInt::new(spec.clone(), -2.0);
        let xb = scale_between_slices(&a, &b, &[1.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(xb[0], 2.0, epsilon = 1e-14);
        let e = VarifoldSliceInt::new(spec.clone(), 1.0);
        let f = VarifoldSliceInt::new(spec.clone(), 4.0);
        let x: Vec<f64> = sample_on_slice(&e, &mut ChaCha8Rng::seed_from_u64(1), (0.3, 2.0)).0;
        let xf = scale_between_slices(&e, &f, &x).unwrap();
        for (xe, xf) in x.iter().zip(&xf) {
            assert_abs_diff_eq!(2.0 * xe, *xf, epsilon = 1e-13);
        }
        assert!(scale_between_slices(&a, &e, &[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn classification_fixtures() {
        let r = classify(&lam(&[1.0, 1.0, -1.0]), CSign::Positive).unwrap();
        assert_eq!(r.topology, "S^1 x R^1 x S^1");
        assert!(!r.oriented);
        assert_eq!(r.connected_components, 1);
        assert!(r.embedded);

        let r = classify(&lam(&[1.0, -1.0]), CSign::Zero).unwrap();
        assert!(r.special_lagrangian);
        assert!(r.oriented);

        // C > 0, k = 1, λ₁ even: two components.
        let r = classify(&lam(&[2.0, -1.0, -1.0]), CSign::Positive).unwrap();
        assert_eq!(r.connected_components, 2);

        let r = classify(&lam(&[4.0, -2.0]), CSign::Zero).unwrap();
        assert!(!r.embedded, "non-coprime weights are not certified embedded");

        assert!(classify(&lam(&[1.5, -1.0]), CSign::Zero).is_err());
    }

    #[test]
    fn orientation_flag_tracks_parity() {
        let cases: [(&[f64], bool); 4] = [
            (&[1.0, 1.0, -1.0], false),
            (&[1.0, 1.0, -2.0], true),
            (&[2.0, 3.0, -5.0], true),
            (&[3.0, -2.0], false),
        ];
        for (l, expect) in cases {
            assert_eq!(classify(&lam(l), CSign::Zero).unwrap().oriented, expect);
        }
    }
}
