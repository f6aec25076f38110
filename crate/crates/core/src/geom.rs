//! Differential geometry of immersed Lagrangian charts in complex n-space.
//!
//! The ambient space is C^n with coordinates `z^j = x^j + i y^j`, the
//! standard symplectic form `ω = Σ dx^j ∧ dy^j`, and the complex structure
//! `J` acting as multiplication by `i`. An [`Immersion`] is any chart
//! `u ↦ F(u)` from an n-dimensional parameter box; everything else (frames,
//! induced metric, Lagrangian angle, mean curvature, normal projections) is
//! computed from it, analytically where a Jacobian is supplied and by
//! 4th-order central differences otherwise.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use std::f64::consts::{PI, TAU};
use thiserror::Error;

use crate::tol;

pub type C64 = Complex<f64>;

/// Errors from the geometry layer.
#[derive(Debug, Error)]
pub enum GeomError {
    #[error("degenerate frame: Gram determinant {det:.3e} below {limit:.3e}")]
    DegenerateFrame { det: f64, limit: f64 },
    #[error("frame is not Lagrangian: max symplectic pairing {max:.3e}")]
    NonLagrangianFrame { max: f64 },
    #[error("Lagrangian angle jumped by {jump:.3e} across one finite-difference step")]
    AngleUnwrap { jump: f64 },
    #[error("parameter point leaves the declared box by less than the stencil margin {margin:.3e}")]
    OutsideParameterBox { margin: f64 },
    #[error("finite-difference step underflow at h = {h:.3e}")]
    StepUnderflow { h: f64 },
    #[error("non-finite value produced at a sampled point")]
    NonFinite,
    #[error("expected a square frame, got {cols} columns in ambient dimension {ambient}")]
    NotSquare { cols: usize, ambient: usize },
}

/// A point (or vector) of C^n, viewed as R^{2n} when a real inner product
/// is needed.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexPoint(pub Vec<C64>);

impl ComplexPoint {
    pub fn zeros(n: usize) -> Self {
        ComplexPoint(vec![C64::new(0.0, 0.0); n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Real inner product of R^{2n}: `Re Σ v_j conj(w_j)`.
    pub fn real_dot(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(v, w)| (v * w.conj()).re)
            .sum()
    }

    /// Standard symplectic pairing: `ω(v, w) = Im Σ conj(v_j) w_j`.
    pub fn symplectic(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(v, w)| (v.conj() * w).im)
            .sum()
    }

    /// The complex structure J: componentwise multiplication by i.
    pub fn mul_i(&self) -> Self {
        ComplexPoint(self.0.iter().map(|z| C64::new(0.0, 1.0) * z).collect())
    }

    pub fn scaled(&self, f: f64) -> Self {
        ComplexPoint(self.0.iter().map(|z| z * f).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        ComplexPoint(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        ComplexPoint(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn axpy(&mut self, f: f64, other: &Self) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += f * b;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl std::ops::Index<usize> for ComplexPoint {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

/// Columns `T_a = ∂F/∂u_a` of a chart, kept as complex n-vectors.
#[derive(Clone, Debug)]
pub struct TangentFrame {
    columns: Vec<ComplexPoint>,
}

impl TangentFrame {
    pub fn new(columns: Vec<ComplexPoint>) -> Self {
        TangentFrame { columns }
    }

    /// Number of columns (chart dimension).
    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.columns.first().map_or(0, |c| c.dim())
    }

    pub fn column(&self, a: usize) -> &ComplexPoint {
        &self.columns[a]
    }

    pub fn columns(&self) -> &[ComplexPoint] {
        &self.columns
    }

    /// Real Gram matrix `g_ab = ⟨T_a, T_b⟩`.
    pub fn gram(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |a, b| self.columns[a].real_dot(&self.columns[b]))
    }

    pub fn gram_det(&self) -> f64 {
        self.gram().determinant()
    }

    /// The complex n×n matrix whose column a is `T_a` (square frames only).
    pub fn complex_matrix(&self) -> DMatrix<C64> {
        let n = self.ambient_dim();
        let m = self.dim();
        DMatrix::from_fn(n, m, |j, a| self.columns[a][j])
    }
}

/// Induced metric at a chart point.
#[derive(Clone, Debug)]
pub struct MetricTensor {
    entries: DMatrix<f64>,
}

impl MetricTensor {
    pub fn new(entries: DMatrix<f64>) -> Self {
        MetricTensor { entries }
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn det(&self) -> f64 {
        self.entries.determinant()
    }

    /// Smallest eigenvalue; positive at non-degenerate immersed points.
    pub fn min_eigenvalue(&self) -> f64 {
        self.entries
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    /// Solve `g x = rhs`.
    pub fn solve(&self, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        self.entries.clone().lu().solve(rhs)
    }
}

type EvalFn = dyn Fn(&[f64]) -> Vec<C64> + Send + Sync;
type JacFn = dyn Fn(&[f64]) -> Vec<Vec<C64>> + Send + Sync;
type AngleFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A chart `u ↦ F(u)` into C^n with optional analytic derivative data.
///
/// The chart must be smooth on its declared parameter box; axes without a
/// declared bound are treated as unbounded. When a Jacobian closure is
/// supplied it must match central finite differences of `eval` (relative
/// `tol::JACOBIAN_VS_FD_REL` at sampled points); `validate_jacobian`
/// spot-checks that.
pub struct Immersion {
    dim: usize,
    eval: Box<EvalFn>,
    jacobian: Option<Box<JacFn>>,
    angle_hint: Option<Box<AngleFn>>,
    bounds: Vec<(f64, f64)>,
}

impl Immersion {
    pub fn new<F>(dim: usize, eval: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<C64> + Send + Sync + 'static,
    {
        Immersion {
            dim,
            eval: Box::new(eval),
            jacobian: None,
            angle_hint: None,
            bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); dim],
        }
    }

    /// Attach an analytic Jacobian returning the columns `∂F/∂u_a`.
    pub fn with_jacobian<J>(mut self, jac: J) -> Self
    where
        J: Fn(&[f64]) -> Vec<Vec<C64>> + Send + Sync + 'static,
    {
        self.jacobian = Some(Box::new(jac));
        self
    }

    /// Attach a closed-form Lagrangian angle.
    pub fn with_angle_hint<A>(mut self, hint: A) -> Self
    where
        A: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        self.angle_hint = Some(Box::new(hint));
        self
    }

    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Self {
        assert_eq!(bounds.len(), self.dim);
        self.bounds = bounds;
        self
    }

    pub fn dim_domain(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, u: &[f64]) -> ComplexPoint {
        ComplexPoint((self.eval)(u))
    }

    pub fn has_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn analytic_jacobian(&self, u: &[f64]) -> Option<TangentFrame> {
        self.jacobian.as_ref().map(|j| {
            TangentFrame::new(j(u).into_iter().map(ComplexPoint).collect())
        })
    }

    pub fn angle_hint(&self, u: &[f64]) -> Option<f64> {
        self.angle_hint.as_ref().map(|a| a(u))
    }

    fn require_margin(&self, u: &[f64], margins: &[f64]) -> Result<(), GeomError> {
        for ((&x, &(lo, hi)), &m) in u.iter().zip(&self.bounds).zip(margins) {
            if x - m < lo || x + m > hi {
                return Err(GeomError::OutsideParameterBox { margin: m });
            }
        }
        Ok(())
    }

    /// Compare the analytic Jacobian (when present) against finite
    /// differences; returns the max relative column deviation.
    pub fn validate_jacobian(&self, u: &[f64], h: f64) -> Result<f64, GeomError> {
        let Some(analytic) = self.analytic_jacobian(u) else {
            return Ok(0.0);
        };
        let fd = fd_frame(self, u, h)?;
        let mut worst: f64 = 0.0;
        for a in 0..self.dim {
            let diff = analytic.column(a).sub(fd.column(a)).norm();
            let scale = analytic.column(a).norm().max(1e-30);
            worst = worst.max(diff / scale);
        }
        Ok(worst)
    }
}

fn axis_steps(u: &[f64], h: f64) -> Vec<f64> {
    u.iter().map(|&x| h * x.abs().max(1.0)).collect()
}

fn shifted(u: &[f64], a: usize, delta: f64) -> Vec<f64> {
    let mut v = u.to_vec();
    v[a] += delta;
    v
}

fn fd_frame(imm: &Immersion, u: &[f64], h: f64) -> Result<TangentFrame, GeomError> {
    let steps = axis_steps(u, h);
    let mut cols = Vec::with_capacity(imm.dim_domain());
    for a in 0..imm.dim_domain() {
        let ha = steps[a];
        if ha < 1e-14 {
            return Err(GeomError::StepUnderflow { h: ha });
        }
        let fp2 = imm.eval(&shifted(u, a, 2.0 * ha));
        let fp1 = imm.eval(&shifted(u, a, ha));
        let fm1 = imm.eval(&shifted(u, a, -ha));
        let fm2 = imm.eval(&shifted(u, a, -2.0 * ha));
        let n = fp1.dim();
        let mut col = Vec::with_capacity(n);
        for j in 0..n {
            col.push((-fp2[j] + 8.0 * fp1[j] - 8.0 * fm1[j] + fm2[j]) / (12.0 * ha));
        }
        cols.push(ComplexPoint(col));
    }
    Ok(TangentFrame::new(cols))
}

/// Tangent frame at `u`: analytic Jacobian when available, 4th-order central
/// differences with step `h` (scaled per axis by the chart magnitude)
/// otherwise. The stencil reaches `2h`, so the point must sit inside the
/// parameter box by that margin.
pub fn tangent_frame(imm: &Immersion, u: &[f64], h: f64) -> Result<TangentFrame, GeomError> {
    let steps = axis_steps(u, h);
    let margins: Vec<f64> = steps.iter().map(|s| 2.0 * s).collect();
    imm.require_margin(u, &margins)?;
    let frame = match imm.analytic_jacobian(u) {
        Some(f) => f,
        None => fd_frame(imm, u, h)?,
    };
    for c in frame.columns() {
        if !c.is_finite() {
            return Err(GeomError::NonFinite);
        }
    }
    let det = frame.gram_det();
    if det < tol::DEGENERATE_GRAM {
        return Err(GeomError::DegenerateFrame {
            det,
            limit: tol::DEGENERATE_GRAM,
        });
    }
    Ok(frame)
}

/// Pairing matrix `M_ab = ω(T_a, T_b)`; identically zero on Lagrangian frames.
pub fn symplectic_pairing(frame: &TangentFrame) -> DMatrix<f64> {
    let n = frame.dim();
    DMatrix::from_fn(n, n, |a, b| frame.column(a).symplectic(frame.column(b)))
}

/// Induced metric `g_ab = ⟨T_a, T_b⟩`.
pub fn induced_metric(frame: &TangentFrame) -> MetricTensor {
    MetricTensor::new(frame.gram())
}

/// Lagrangian angle `θ = arg det Z` in `[0, 2π)`, where `Z` is the complex
/// matrix of frame columns. For a Lagrangian frame `|det Z| = √(det g)`
/// holds automatically. Fails on non-Lagrangian or degenerate frames.
pub fn lagrangian_angle(frame: &TangentFrame) -> Result<f64, GeomError> {
    if frame.dim() != frame.ambient_dim() {
        return Err(GeomError::NotSquare {
            cols: frame.dim(),
            ambient: frame.ambient_dim(),
        });
    }
    let pairing = symplectic_pairing(frame);
    let max_pair = pairing.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // Scale-invariant test: the pairing entries grow like the metric.
    let scale = frame
        .columns()
        .iter()
        .map(|c| c.norm_sq())
        .fold(0.0f64, f64::max)
        .max(1e-300);
    if max_pair / scale > tol::NON_LAGRANGIAN {
        return Err(GeomError::NonLagrangianFrame { max: max_pair / scale });
    }
    let det = frame.complex_matrix().determinant();
    if det.norm_sqr() < tol::DEGENERATE_GRAM {
        return Err(GeomError::DegenerateFrame {
            det: det.norm_sqr(),
            limit: tol::DEGENERATE_GRAM,
        });
    }
    let mut theta = det.arg();
    if theta < 0.0 {
        theta += TAU;
    }
    Ok(theta % TAU)
}

fn angle_at(imm: &Immersion, u: &[f64], h: f64) -> Result<f64, GeomError> {
    lagrangian_angle(&tangent_frame(imm, u, h)?)
}

/// Shift `theta` by a multiple of 2π to land nearest `reference`; errors if
/// the residual jump still exceeds π/2 (a sign the FD step straddled a
/// branch point).
fn unwrap_near(theta: f64, reference: f64) -> Result<f64, GeomError> {
    let adjusted = theta - TAU * ((theta - reference) / TAU).round();
    let jump = (adjusted - reference).abs();
    if jump > PI / 2.0 {
        return Err(GeomError::AngleUnwrap { jump });
    }
    Ok(adjusted)
}

/// θ on the 4-point ray `u + {1, 2} h e_a` and `u - {1, 2} h e_a`,
/// unwrapped sequentially from the center value.
fn angle_stencil(
    imm: &Immersion,
    u: &[f64],
    a: usize,
    ha: f64,
    h: f64,
    center: f64,
) -> Result<[f64; 4], GeomError> {
    let p1 = unwrap_near(angle_at(imm, &shifted(u, a, ha), h)?, center)?;
    let p2 = unwrap_near(angle_at(imm, &shifted(u, a, 2.0 * ha), h)?, p1)?;
    let m1 = unwrap_near(angle_at(imm, &shifted(u, a, -ha), h)?, center)?;
    let m2 = unwrap_near(angle_at(imm, &shifted(u, a, -2.0 * ha), h)?, m1)?;
    Ok([m2, m1, p1, p2])
}

fn d1(stencil: &[f64; 4], h: f64) -> f64 {
    (-stencil[3] + 8.0 * stencil[2] - 8.0 * stencil[1] + stencil[0]) / (12.0 * h)
}

fn d2(stencil: &[f64; 4], center: f64, h: f64) -> f64 {
    (-stencil[3] + 16.0 * stencil[2] - 30.0 * center + 16.0 * stencil[1] - stencil[0])
        / (12.0 * h * h)
}

/// Mean curvature vector `H = J ∇θ`, with `∇θ = g^{ab} (∂_b θ) T_a`
/// computed by finite differences of the Lagrangian angle (unwrapped).
pub fn mean_curvature(imm: &Immersion, u: &[f64]) -> Result<ComplexPoint, GeomError> {
    let h = tol::FD_STEP;
    let steps = axis_steps(u, h);
    let frame = tangent_frame(imm, u, h)?;
    let g = induced_metric(&frame);
    let center = angle_at(imm, u, h)?;
    let n = imm.dim_domain();
    let mut dtheta = DVector::zeros(n);
    for a in 0..n {
        let ray = angle_stencil(imm, u, a, steps[a], h, center)?;
        dtheta[a] = d1(&ray, steps[a]);
    }
    let coeff = g.solve(&dtheta).ok_or(GeomError::DegenerateFrame {
        det: g.det(),
        limit: tol::DEGENERATE_GRAM,
    })?;
    let mut grad = ComplexPoint::zeros(frame.ambient_dim());
    for a in 0..n {
        grad.axpy(coeff[a], frame.column(a));
    }
    Ok(grad.mul_i())
}

/// Metric at a shifted point, used for Christoffel symbols.
fn metric_at(imm: &Immersion, u: &[f64], h: f64) -> Result<DMatrix<f64>, GeomError> {
    Ok(tangent_frame(imm, u, h)?.gram())
}

/// `∂_c g_ab` for all c by 4th-order differences of the metric.
fn metric_derivatives(
    imm: &Immersion,
    u: &[f64],
    h: f64,
) -> Result<Vec<DMatrix<f64>>, GeomError> {
    let n = imm.dim_domain();
    let steps = axis_steps(u, h);
    let mut out = Vec::with_capacity(n);
    for c in 0..n {
        let hc = steps[c];
        let gp2 = metric_at(imm, &shifted(u, c, 2.0 * hc), h)?;
        let gp1 = metric_at(imm, &shifted(u, c, hc), h)?;
        let gm1 = metric_at(imm, &shifted(u, c, -hc), h)?;
        let gm2 = metric_at(imm, &shifted(u, c, -2.0 * hc), h)?;
        out.push((-gp2 + 8.0 * gp1 - 8.0 * gm1 + gm2) / (12.0 * hc));
    }
    Ok(out)
}

fn christoffel(
    g: &MetricTensor,
    dg: &[DMatrix<f64>],
) -> Result<Vec<DMatrix<f64>>, GeomError> {
    let n = dg.len();
    // Γ^c_{ab} = ½ g^{cd} (∂_a g_bd + ∂_b g_ad − ∂_d g_ab)
    let mut gamma = vec![DMatrix::zeros(n, n); n];
    for a in 0..n {
        for b in 0..n {
            let mut rhs = DVector::zeros(n);
            for d in 0..n {
                rhs[d] = 0.5 * (dg[a][(b, d)] + dg[b][(a, d)] - dg[d][(a, b)]);
            }
            let sol = g.solve(&rhs).ok_or(GeomError::DegenerateFrame {
                det: g.det(),
                limit: tol::DEGENERATE_GRAM,
            })?;
            for c in 0..n {
                gamma[c][(a, b)] = sol[c];
            }
        }
    }
    Ok(gamma)
}

/// Vector Hessian `∂_a ∂_b F` of the chart (4th-order stencils; mixed
/// entries by nested first-derivative stencils).
fn position_hessian(
    imm: &Immersion,
    u: &[f64],
    h: f64,
) -> Result<Vec<Vec<ComplexPoint>>, GeomError> {
    let n = imm.dim_domain();
    let steps = axis_steps(u, h);
    let ambient = imm.eval(u).dim();
    let center = imm.eval(u);
    let mut hess = vec![vec![ComplexPoint::zeros(ambient); n]; n];
    let weights = [1.0, -8.0, 8.0, -1.0]; // offsets -2,-1,+1,+2 over 12h
    let offsets = [-2.0, -1.0, 1.0, 2.0];
    for a in 0..n {
        let ha = steps[a];
        // diagonal
        let fp2 = imm.eval(&shifted(u, a, 2.0 * ha));
        let fp1 = imm.eval(&shifted(u, a, ha));
        let fm1 = imm.eval(&shifted(u, a, -ha));
        let fm2 = imm.eval(&shifted(u, a, -2.0 * ha));
        let mut col = Vec::with_capacity(ambient);
        for j in 0..ambient {
            col.push(
                (-fp2[j] + 16.0 * fp1[j] - 30.0 * center[j] + 16.0 * fm1[j] - fm2[j])
                    / (12.0 * ha * ha),
            );
        }
        hess[a][a] = ComplexPoint(col);
        // mixed
        for b in (a + 1)..n {
            let hb = steps[b];
            let mut acc = vec![C64::new(0.0, 0.0); ambient];
            for (wa, oa) in weights.iter().zip(&offsets) {
                // ∂_b F at u + oa*ha e_a
                let base = shifted(u, a, oa * ha);
                let gp2 = imm.eval(&shifted(&base, b, 2.0 * hb));
                let gp1 = imm.eval(&shifted(&base, b, hb));
                let gm1 = imm.eval(&shifted(&base, b, -hb));
                let gm2 = imm.eval(&shifted(&base, b, -2.0 * hb));
                for j in 0..ambient {
                    let db = (-gp2[j] + 8.0 * gp1[j] - 8.0 * gm1[j] + gm2[j]) / (12.0 * hb);
                    acc[j] += wa * db / (12.0 * ha);
                }
            }
            let pt = ComplexPoint(acc);
            hess[a][b] = pt.clone();
            hess[b][a] = pt;
        }
    }
    Ok(hess)
}

/// Laplace–Beltrami of the position, `Δ_L F = g^{ab}(∂_a∂_b F − Γ^c_{ab} ∂_c F)`.
///
/// For an isometric immersion this equals the mean curvature vector, which
/// makes it the independent oracle for [`mean_curvature`].
pub fn laplace_beltrami_of_position(
    imm: &Immersion,
    u: &[f64],
) -> Result<ComplexPoint, GeomError> {
    let h = tol::FD_STEP;
    let steps = axis_steps(u, h);
    let margins: Vec<f64> = steps.iter().map(|s| 4.0 * s).collect();
    imm.require_margin(u, &margins)?;
    let frame = tangent_frame(imm, u, h)?;
    let g = induced_metric(&frame);
    let ginv = g
        .entries()
        .clone()
        .try_inverse()
        .ok_or(GeomError::DegenerateFrame {
            det: g.det(),
            limit: tol::DEGENERATE_GRAM,
        })?;
    let dg = metric_derivatives(imm, u, h)?;
    let gamma = christoffel(&g, &dg)?;
    let hess = position_hessian(imm, u, h)?;
    let n = imm.dim_domain();
    let mut out = ComplexPoint::zeros(frame.ambient_dim());
    for a in 0..n {
        for b in 0..n {
            let w = ginv[(a, b)];
            if w == 0.0 {
                continue;
            }
            out.axpy(w, &hess[a][b]);
            for c in 0..n {
                out.axpy(-w * gamma[c][(a, b)], frame.column(c));
            }
        }
    }
    if !out.is_finite() {
        return Err(GeomError::NonFinite);
    }
    Ok(out)
}

/// Normal projection of the position vector:
/// `F⊥ = F − g^{ab} ⟨F, T_a⟩ T_b` with the real inner product of R^{2n}.
pub fn normal_projection(imm: &Immersion, u: &[f64]) -> Result<ComplexPoint, GeomError> {
    let h = tol::FD_STEP;
    let frame = tangent_frame(imm, u, h)?;
    let g = induced_metric(&frame);
    let f = imm.eval(u);
    let n = imm.dim_domain();
    let rhs = DVector::from_fn(n, |a, _| f.real_dot(frame.column(a)));
    let coeff = g.solve(&rhs).ok_or(GeomError::DegenerateFrame {
        det: g.det(),
        limit: tol::DEGENERATE_GRAM,
    })?;
    let mut out = f;
    for a in 0..n {
        out.axpy(-coeff[a], frame.column(a));
    }
    Ok(out)
}

/// Laplace–Beltrami of the Lagrangian angle, `Δ_L θ`; vanishes exactly on
/// Hamiltonian stationary immersions.
pub fn angle_laplacian(imm: &Immersion, u: &[f64]) -> Result<f64, GeomError> {
    let h = tol::FD_STEP;
    let steps = axis_steps(u, h);
    let margins: Vec<f64> = steps.iter().map(|s| 4.0 * s).collect();
    imm.require_margin(u, &margins)?;
    let frame = tangent_frame(imm, u, h)?;
    let g = induced_metric(&frame);
    let ginv = g
        .entries()
        .clone()
        .try_inverse()
        .ok_or(GeomError::DegenerateFrame {
            det: g.det(),
            limit: tol::DEGENERATE_GRAM,
        })?;
    let dg = metric_derivatives(imm, u, h)?;
    let gamma = christoffel(&g, &dg)?;
    let n = imm.dim_domain();
    let center = angle_at(imm, u, h)?;

    let mut dtheta = vec![0.0; n];
    let mut rays: Vec<[f64; 4]> = Vec::with_capacity(n);
    for a in 0..n {
        let ray = angle_stencil(imm, u, a, steps[a], h, center)?;
        dtheta[a] = d1(&ray, steps[a]);
        rays.push(ray);
    }

    let mut lap = 0.0;
    for a in 0..n {
        for b in 0..n {
            let w = ginv[(a, b)];
            if w == 0.0 {
                continue;
            }
            let second = if a == b {
                d2(&rays[a], center, steps[a])
            } else {
                // nested first-derivative stencils with sequential unwrap
                let weights = [1.0, -8.0, 8.0, -1.0];
                let offsets = [-2.0, -1.0, 1.0, 2.0];
                let mut acc = 0.0;
                for (wa, oa) in weights.iter().zip(&offsets) {
                    let base = shifted(u, a, oa * steps[a]);
                    let anchor = angle_at(imm, &base, h)?;
                    let anchor = unwrap_near(anchor, center)?;
                    let bp1 = unwrap_near(angle_at(imm, &shifted(&base, b, steps[b]), h)?, anchor)?;
                    let bp2 =
                        unwrap_near(angle_at(imm, &shifted(&base, b, 2.0 * steps[b]), h)?, bp1)?;
                    let bm1 =
                        unwrap_near(angle_at(imm, &shifted(&base, b, -steps[b]), h)?, anchor)?;
                    let bm2 =
                        unwrap_near(angle_at(imm, &shifted(&base, b, -2.0 * steps[b]), h)?, bm1)?;
                    let db = d1(&[bm2, bm1, bp1, bp2], steps[b]);
                    acc += wa * db / (12.0 * steps[a]);
                }
                acc
            };
            let mut corr = 0.0;
            for c in 0..n {
                corr += gamma[c][(a, b)] * dtheta[c];
            }
            lap += w * (second - corr);
        }
    }
    Ok(lap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn flat_chart(n: usize) -> Immersion {
        Immersion::new(n, move |u: &[f64]| {
            u.iter().map(|&x| C64::new(x, 0.0)).collect()
        })
    }

    #[test]
    fn flat_chart_frame_is_identity() {
        let imm = flat_chart(2);
        let frame = tangent_frame(&imm, &[0.3, -0.4], tol::FD_STEP).unwrap();
        assert_abs_diff_eq!(frame.gram_det(), 1.0, epsilon = 1e-10);
        let m = symplectic_pairing(&frame);
        assert!(m.iter().all(|v| v.abs() < 1e-12));
        assert_abs_diff_eq!(lagrangian_angle(&frame).unwrap(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn complex_line_chart_is_not_lagrangian() {
        // u ↦ (u1 + i u2, 0): ω(e1, i e1) = 1
        let imm = Immersion::new(2, |u: &[f64]| {
            vec![C64::new(u[0], u[1]), C64::new(0.0, 0.0)]
        });
        let frame = tangent_frame(&imm, &[0.1, 0.2], tol::FD_STEP).unwrap();
        let m = symplectic_pairing(&frame);
        assert_abs_diff_eq!(m[(0, 1)], 1.0, epsilon = 1e-9);
        assert!(matches!(
            lagrangian_angle(&frame),
            Err(GeomError::NonLagrangianFrame { .. })
        ));
    }

    #[test]
    fn flat_chart_laplacian_vanishes() {
        let imm = flat_chart(3);
        let lap = laplace_beltrami_of_position(&imm, &[0.1, 0.2, -0.3]).unwrap();
        assert!(lap.norm() < 1e-9, "affine immersion has ΔF = 0, got {}", lap.norm());
    }

    #[test]
    fn circle_laplacian_is_minus_position() {
        // u ↦ e^{iu} in C^1: Δ_L F = −F.
        let imm = Immersion::new(1, |u: &[f64]| vec![C64::new(u[0].cos(), u[0].sin())]);
        let u = [0.7];
        let lap = laplace_beltrami_of_position(&imm, &u).unwrap();
        let f = imm.eval(&u);
        assert!(lap.add(&f).norm() < 1e-8);
    }

    #[test]
    fn lagrangian_graph_mean_curvature_matches_oracle() {
        // Graph of a gradient: z = u + i ∇f(u), f = u1^3/3 + u1 u2^2.
        let imm = Immersion::new(2, |u: &[f64]| {
            let df = [u[0] * u[0] + u[1] * u[1], 2.0 * u[0] * u[1]];
            vec![C64::new(u[0], df[0]), C64::new(u[1], df[1])]
        });
        let u = [0.3, 0.2];
        let h_fd = mean_curvature(&imm, &u).unwrap();
        let h_lb = laplace_beltrami_of_position(&imm, &u).unwrap();
        let rel = h_fd.sub(&h_lb).norm() / h_lb.norm();
        assert!(rel < 1e-4, "relative mismatch {rel}");
    }

    #[test]
    fn generic_gradient_graph_is_not_stationary() {
        // Same chart as above: its angle is not harmonic.
        let imm = Immersion::new(2, |u: &[f64]| {
            let df = [u[0] * u[0] + u[1] * u[1], 2.0 * u[0] * u[1]];
            vec![C64::new(u[0], df[0]), C64::new(u[1], df[1])]
        });
        let lap = angle_laplacian(&imm, &[0.3, 0.2]).unwrap();
        assert!(lap.abs() > 1e-2, "control chart should fail stationarity, got {lap}");
    }

    #[test]
    fn normal_projection_is_orthogonal_to_frame() {
        let imm = Immersion::new(2, |u: &[f64]| {
            let df = [u[0] * u[0] + u[1] * u[1], 2.0 * u[0] * u[1]];
            vec![C64::new(u[0], df[0]), C64::new(u[1], df[1])]
        });
        let u = [0.4, -0.3];
        let perp = normal_projection(&imm, &u).unwrap();
        let frame = tangent_frame(&imm, &u, tol::FD_STEP).unwrap();
        for a in 0..2 {
            assert!(perp.real_dot(frame.column(a)).abs() < tol::NORMAL_PROJECTION_ORTHO);
        }
    }

    #[test]
    fn degenerate_frame_is_rejected() {
        // Chart collapsing one direction.
        let imm = Immersion::new(2, |u: &[f64]| {
            vec![C64::new(u[0], 0.0), C64::new(u[0], 0.0)]
        });
        assert!(matches!(
            tangent_frame(&imm, &[0.5, 0.5], tol::FD_STEP),
            Err(GeomError::DegenerateFrame { .. })
        ));
    }

    #[test]
    fn bounds_margin_is_enforced() {
        let imm = flat_chart(1).with_bounds(vec![(0.0, 1.0)]);
        assert!(matches!(
            tangent_frame(&imm, &[1e-4], tol::FD_STEP),
            Err(GeomError::OutsideParameterBox { .. })
        ));
        assert!(tangent_frame(&imm, &[0.5], tol::FD_STEP).is_ok());
    }
}
