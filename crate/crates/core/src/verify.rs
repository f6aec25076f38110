//! Sampled invariant suites for both families.
//!
//! Each check draws random on-slice samples, evaluates an exact identity
//! through the finite-difference geometry layer, and reports the measured
//! maximum against its acceptance band. The CLI wraps these into PASS/FAIL
//! lines; the test suites assert on them directly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::sync::Arc;

use crate::brakke::gram_density;
use crate::family::{
    chart_at, mean_curvature_closed, sample_on_slice, sigma_chart, sigma_volume_density,
    slice_factors, LambdaSpec, VarifoldSliceInt,
};
use crate::geom::{
    angle_laplacian, induced_metric, lagrangian_angle, laplace_beltrami_of_position,
    mean_curvature, normal_projection, symplectic_pairing, tangent_frame,
};
use crate::ode::{
    chart_at_ode, densities_unchecked_ode, integrate, mean_curvature_closed_ode, sample_on_slice_ode,
    sigma_chart_ode, wrap_to_pi, PeriodicOrbit, VarifoldSliceOde,
};
use crate::tol;

/// One invariant check with its measured maximum.
#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub samples: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckResult {
    fn new(name: &str, samples: usize, max_residual: f64, tolerance: f64) -> Self {
        CheckResult {
            name: name.to_string(),
            samples,
            max_residual,
            tolerance,
            pass: max_residual <= tolerance && max_residual.is_finite(),
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{}: {} (max {:.3e}, tol {:.3e}, n={})",
            self.name,
            if self.pass { "PASS" } else { "FAIL" },
            self.max_residual,
            self.tolerance,
            self.samples
        )
    }
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    pub samples: usize,
    pub rng_seed: u64,
    /// Negative control: flip the sign of the closed-form mean curvature in
    /// the comparisons so the suite must fail.
    pub inject_bug: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { samples: 200, rng_seed: 2024, inject_bug: false }
    }
}

fn angle_gap_mod_2pi(a: f64, b: f64) -> f64 {
    wrap_to_pi(a - b).abs()
}

/// Invariant suite for the rotating family over the given slice times.
pub fn verify_integer_family(
    spec: &LambdaSpec,
    t_values: &[f64],
    opts: &VerifyOptions,
) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed);
    let sum = spec.sum();
    let bug = if opts.inject_bug { -1.0 } else { 1.0 };

    let mut max_pairing: f64 = 0.0;
    let mut max_angle: f64 = 0.0;
    let mut max_lap: f64 = 0.0;
    let mut max_metric: f64 = 0.0;
    let mut max_h_oracle: f64 = 0.0;
    let mut max_h_closed: f64 = 0.0;
    let mut max_selfsim: f64 = 0.0;
    let mut max_hsq: f64 = 0.0;
    let mut max_perp: f64 = 0.0;
    let mut max_density: f64 = 0.0;
    let mut max_jac: f64 = 0.0;
    let mut n_done = 0usize;

    for (i, &t) in t_values.iter().cycle().take(opts.samples).enumerate() {
        let slice = VarifoldSliceInt::new(spec.clone(), t);
        let (x, s) = sample_on_slice(&slice, &mut rng, (0.25, 2.5));
        let chart = chart_at(&slice, &x, s).expect("sampled points are regular");
        let u = {
            let mut u = vec![0.0; spec.n()];
            u[0] = s;
            u
        };
        let frame = tangent_frame(&chart, &u, tol::FD_STEP).expect("regular frame");

        let pairing = symplectic_pairing(&frame);
        max_pairing = max_pairing.max(pairing.iter().fold(0.0f64, |m, v| m.max(v.abs())));

        let angle = lagrangian_angle(&frame).expect("Lagrangian frame");
        max_angle = max_angle.max(angle_gap_mod_2pi(angle, sum * s + FRAC_PI_2));

        let lap = angle_laplacian(&chart, &u).expect("angle laplacian");
        max_lap = max_lap.max(lap.abs());

        // metric is independent of the circle parameter
        let u0 = {
            let mut u0 = u.clone();
            u0[0] = 0.0;
            u0
        };
        let g_s = induced_metric(&frame);
        let g_0 = induced_metric(&tangent_frame(&chart, &u0, tol::FD_STEP).unwrap());
        let diff = (g_s.entries() - g_0.entries()).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        max_metric = max_metric.max(diff);

        let h_fd = mean_curvature(&chart, &u).expect("mean curvature");
        let h_lb = laplace_beltrami_of_position(&chart, &u).expect("laplace-beltrami");
        let h_closed = mean_curvature_closed(&slice, &x, s).scaled(bug);
        if h_lb.norm() > 1e-12 {
            max_h_oracle = max_h_oracle.max(h_fd.sub(&h_lb).norm() / h_lb.norm());
        }
        if h_closed.norm() > 1e-12 {
            max_h_closed = max_h_closed.max(h_fd.sub(&h_closed).norm() / h_closed.norm());
            let hsq = crate::family::densities_unchecked(&slice, &x).h_norm_sq;
            max_hsq = max_hsq.max((h_fd.norm_sq() - hsq).abs() / hsq);
        }

        let perp = normal_projection(&chart, &u).expect("normal projection");
        for a in 0..frame.dim() {
            max_perp = max_perp.max(perp.real_dot(frame.column(a)).abs());
        }
        if sum.abs() > 1e-12 {
            // F⊥ = −(C/Σλ) H
            let mut resid = perp.clone();
            resid.axpy(slice.level() / sum, &h_closed);
            let scale = perp.norm() + h_closed.norm();
            if scale > 1e-12 {
                max_selfsim = max_selfsim.max(resid.norm() / scale);
            }
        } else {
            // special Lagrangian: the mean curvature itself vanishes
            max_selfsim = max_selfsim.max(h_fd.norm());
        }

        // Gram-density oracle on the global chart (mixed-sign shapes only)
        if spec.k() > 0 && spec.k() < spec.n() && i % 4 == 0 {
            let (fp, fm) = slice_factors(spec);
            let chart_g = sigma_chart(&slice, 1, 1).expect("sigma chart");
            let mut ug = vec![rng.random_range(0.4..1.8)];
            let mut ap = Vec::new();
            for (lo, hi) in fp.angle_ranges() {
                let m = 0.2 * (hi - lo);
                ap.push(rng.random_range(lo + m..hi - m));
            }
            let mut am = Vec::new();
            for (lo, hi) in fm.angle_ranges() {
                let m = 0.2 * (hi - lo);
                am.push(rng.random_range(lo + m..hi - m));
            }
            ug.extend(&ap);
            ug.extend(&am);
            ug.push(rng.random_range(0.0..PI));
            max_jac = max_jac.max(chart_g.validate_jacobian(&ug, tol::FD_STEP).unwrap());

            let r = ug[0];
            let pp = fp.point(&ap, 1);
            let pm = fm.point(&am, 1);
            let (rho_p, rho_m) = crate::family::radial_scales(slice.level(), r);
            let mut xg: Vec<f64> = pp.iter().map(|w| rho_p * w).collect();
            xg.extend(pm.iter().map(|w| rho_m * w));
            let radon = crate::family::densities_unchecked(&slice, &xg).radon_density;
            let closed = radon
                * sigma_volume_density(
                    spec.n(),
                    spec.k(),
                    slice.level(),
                    r,
                    fp.normal_component_sq(&pp),
                    fm.normal_component_sq(&pm),
                )
                * fp.area_factor(&ap)
                * fm.area_factor(&am);
            let oracle = gram_density(&chart_g, &ug).expect("gram density");
            max_density = max_density.max((oracle - closed).abs() / closed.abs());
        }
        n_done += 1;
    }

    let mut out = vec![
        CheckResult::new("symplectic pairing", n_done, max_pairing, tol::SYMPLECTIC_RESIDUAL),
        CheckResult::new("closed-form angle (mod 2pi)", n_done, max_angle, tol::ANGLE_CLOSED_FORM),
        CheckResult::new("angle laplacian", n_done, max_lap, tol::ANGLE_LAPLACIAN),
        CheckResult::new("metric s-independence", n_done, max_metric, tol::METRIC_S_INDEPENDENCE),
        CheckResult::new(
            "mean curvature vs laplace-beltrami",
            n_done,
            max_h_oracle,
            tol::MEAN_CURVATURE_REL,
        ),
        CheckResult::new(
            "mean curvature vs closed form",
            n_done,
            max_h_closed,
            tol::MEAN_CURVATURE_REL,
        ),
        CheckResult::new("curvature density |h|^2", n_done, max_hsq, tol::MEAN_CURVATURE_REL),
        CheckResult::new(
            "normal projection orthogonality",
            n_done,
            max_perp,
            tol::NORMAL_PROJECTION_ORTHO,
        ),
        CheckResult::new("self-similarity", n_done, max_selfsim, tol::SELF_SIMILARITY_REL),
    ];
    if spec.k() > 0 && spec.k() < spec.n() {
        out.push(CheckResult::new(
            "analytic jacobian vs finite differences",
            n_done.div_ceil(4),
            max_jac,
            tol::JACOBIAN_VS_FD_REL,
        ));
        out.push(CheckResult::new(
            "gram density vs closed form",
            n_done.div_ceil(4),
            max_density,
            tol::DENSITY_ORACLE_REL,
        ));
    }
    out
}

/// Invariant suite for the orbit-generated family over the given times.
pub fn verify_ode_family(
    orbit: &Arc<PeriodicOrbit>,
    t_values: &[f64],
    opts: &VerifyOptions,
) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed);
    let params = orbit.params().clone();
    let bug = if opts.inject_bug { -1.0 } else { 1.0 };
    let mut out = Vec::new();

    // orbit integrity
    let period = orbit.period();
    let fresh = integrate(&params, orbit.initial(), period, 1e-10);
    let (q_drift, closure) = match fresh {
        Ok(traj) => {
            let q0 = orbit.initial().conserved(&params);
            let q1 = traj.end_state().conserved(&params);
            let drift = q0
                .iter()
                .zip(&q1)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            (drift, traj.end_state().distance(orbit.initial()))
        }
        Err(_) => (f64::INFINITY, f64::INFINITY),
    };
    out.push(CheckResult::new(
        "conserved quantity drift",
        1,
        q_drift,
        tol::ODE_Q_DRIFT_PER_UNIT_S * period.max(1.0),
    ));
    out.push(CheckResult::new("orbit closure", 1, closure, tol::ORBIT_CLOSURE));
    out.push(CheckResult::new(
        "orbit modulus bounds",
        1,
        if orbit.min_modulus() > 1e-6 { 0.0 } else { 1.0 },
        0.5,
    ));

    let mut max_pairing: f64 = 0.0;
    let mut max_angle: f64 = 0.0;
    let mut max_selfsim: f64 = 0.0;
    let mut max_h_closed: f64 = 0.0;
    let mut max_hsq: f64 = 0.0;
    let mut max_density: f64 = 0.0;
    let mut n_done = 0usize;

    for (i, &t) in t_values.iter().cycle().take(opts.samples).enumerate() {
        if t == 0.0 {
            continue;
        }
        let slice = VarifoldSliceOde::new(orbit.clone(), t);
        let (x, s) = sample_on_slice_ode(&slice, &mut rng, (0.25, 2.0));
        let chart = chart_at_ode(&slice, &x, s).expect("sampled points are regular");
        let u = {
            let mut u = vec![0.0; params.n()];
            u[0] = s;
            u
        };
        let frame = tangent_frame(&chart, &u, tol::FD_STEP).expect("regular frame");
        let pairing = symplectic_pairing(&frame);
        max_pairing = max_pairing.max(pairing.iter().fold(0.0f64, |m, v| m.max(v.abs())));

        let angle = lagrangian_angle(&frame).expect("Lagrangian frame");
        let theta = orbit.state_at(s).theta.rem_euclid(TAU);
        max_angle = max_angle.max(angle_gap_mod_2pi(angle, theta));

        let h_closed = mean_curvature_closed_ode(&slice, &x, s).scaled(bug);
        let h_fd = mean_curvature(&chart, &u).expect("mean curvature");
        if h_closed.norm() > 1e-12 {
            max_h_closed = max_h_closed.max(h_fd.sub(&h_closed).norm() / h_closed.norm());
            let hsq = densities_unchecked_ode(&slice, &x, s).h_norm_sq;
            max_hsq = max_hsq.max((h_fd.norm_sq() - hsq).abs() / hsq);
        }

        // α F⊥ = C H
        let perp = normal_projection(&chart, &u).expect("normal projection");
        let mut resid = perp.scaled(params.alpha());
        resid.axpy(-slice.level(), &h_closed);
        let scale = params.alpha().abs() * perp.norm() + slice.level().abs() * h_closed.norm();
        if scale > 1e-12 {
            max_selfsim = max_selfsim.max(resid.norm() / scale);
        }

        if i % 4 == 0 {
            let chart_g = sigma_chart_ode(&slice, 1, 1).expect("sigma chart");
            let spec = params.lambda();
            let (fp, fm) = slice_factors(spec);
            let mut ug = vec![rng.random_range(0.4..1.6)];
            let mut ap = Vec::new();
            for (lo, hi) in fp.angle_ranges() {
                let m = 0.2 * (hi - lo);
                ap.push(rng.random_range(lo + m..hi - m));
            }
            let mut am = Vec::new();
            for (lo, hi) in fm.angle_ranges() {
                let m = 0.2 * (hi - lo);
                am.push(rng.random_range(lo + m..hi - m));
            }
            ug.extend(&ap);
            ug.extend(&am);
            ug.push(rng.random_range(0.1 * period..0.9 * period));
            let r = ug[0];
            let sg = ug[ug.len() - 1];
            let pp = fp.point(&ap, 1);
            let pm = fm.point(&am, 1);
            let (rho_p, rho_m) = crate::family::radial_scales(slice.level(), r);
            let mut xg: Vec<f64> = pp.iter().map(|w| rho_p * w).collect();
            xg.extend(pm.iter().map(|w| rho_m * w));
            let radon = densities_unchecked_ode(&slice, &xg, sg).radon_density;
            let closed = radon
                * sigma_volume_density(
                    spec.n(),
                    spec.k(),
                    slice.level(),
                    r,
                    fp.normal_component_sq(&pp),
                    fm.normal_component_sq(&pm),
                )
                * fp.area_factor(&ap)
                * fm.area_factor(&am);
            let oracle = gram_density(&chart_g, &ug).expect("gram density");
            max_density = max_density.max((oracle - closed).abs() / closed.abs());
        }
        n_done += 1;
    }

    out.push(CheckResult::new("symplectic pairing", n_done, max_pairing, tol::SYMPLECTIC_RESIDUAL));
    out.push(CheckResult::new("angle equals orbit phase", n_done, max_angle, tol::ANGLE_LAPLACIAN));
    out.push(CheckResult::new(
        "mean curvature vs closed form",
        n_done,
        max_h_closed,
        tol::MEAN_CURVATURE_REL,
    ));
    out.push(CheckResult::new("curvature density |h|^2", n_done, max_hsq, tol::MEAN_CURVATURE_REL));
    out.push(CheckResult::new("self-similarity", n_done, max_selfsim, tol::SELF_SIMILARITY_REL));
    out.push(CheckResult::new(
        "gram density vs closed form",
        n_done.div_ceil(4),
        max_density,
        tol::DENSITY_ORACLE_REL,
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_suite_passes_on_reference_weights() {
        let spec = LambdaSpec::new(&[1.0, 1.0, -1.0]).unwrap();
        let opts = VerifyOptions { samples: 40, ..Default::default() };
        let results = verify_integer_family(&spec, &[-0.5, 0.5], &opts);
        for r in &results {
            assert!(r.pass, "{}", r.line());
        }
    }

    #[test]
    fn injected_bug_is_detected() {
        let spec = LambdaSpec::new(&[1.0, 1.0, -1.0]).unwrap();
        let opts = VerifyOptions { samples: 20, inject_bug: true, ..Default::default() };
        let results = verify_integer_family(&spec, &[-0.5], &opts);
        assert!(results.iter().any(|r| !r.pass), "negative control must fail");
    }
}
