//! Periodic-orbit detection, refinement, and seed search.
//!
//! Rigidly rotating solutions `w_j(s) = r_j e^{i ν_j Ω s}` with commensurate
//! integer frequencies are available in closed form and serve as anchors:
//! genuinely oscillating periodic orbits are found by kicking a rigid orbit
//! transversally and closing it back up with damped least-squares shooting
//! on the full state and period.

use nalgebra::{DMatrix, DVector};
use std::f64::consts::TAU;

use super::{integrate, wrap_to_pi, OdeError, OdeParams, OdeState, PeriodicOrbit};
use crate::tol;

/// Integrator tolerance used while polishing and storing orbits.
const ORBIT_TOL: f64 = 1e-12;

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Closed-form rigidly rotating periodic solution with frequency pattern
/// `ω_j = ν_j Ω` for the given integers `ν_j` (signs opposite to `λ_j`).
/// Returns the initial state (all `w_j(0)` real positive, `θ(0) = −π/2`)
/// and the minimal period.
pub fn rigid_orbit(params: &OdeParams, nu: &[i64]) -> Result<(OdeState, f64), OdeError> {
    let l = params.lambda().lambdas();
    let n = l.len();
    if nu.len() != n {
        return Err(OdeError::InvalidParams("frequency pattern length mismatch".into()));
    }
    if nu.iter().zip(l).any(|(&v, &lj)| v == 0 || (v as f64) * lj >= 0.0) {
        return Err(OdeError::InvalidParams(
            "frequencies must be nonzero with signs opposite to lambda".into(),
        ));
    }
    let nsum: i64 = nu.iter().sum();
    if (nsum as f64) * params.alpha() <= 0.0 {
        return Err(OdeError::InvalidParams(
            "sum of frequencies must share the sign of alpha".into(),
        ));
    }
    let nf = nsum as f64 / params.alpha();
    let mut prod = 1.0;
    for (lj, &vj) in l.iter().zip(nu) {
        prod *= (lj.abs() / (vj.abs() as f64)).sqrt();
    }
    let c = nf.powf(n as f64 / 2.0) * prod;
    let omega = params.alpha() * c / nsum as f64;
    let r: Vec<f64> = l
        .iter()
        .zip(nu)
        .map(|(lj, &vj)| (c * lj.abs() / (vj.abs() as f64 * omega)).sqrt())
        .collect();
    let state = OdeState {
        w: r.iter().map(|&ri| crate::C64::new(ri, 0.0)).collect(),
        theta: -std::f64::consts::FRAC_PI_2,
    };
    let g = nu.iter().fold(0, |acc, &v| gcd(acc, v));
    let period = TAU / (omega * g as f64);
    Ok((state, period))
}

fn flow(params: &OdeParams, y0: &[f64], t: f64) -> Result<Vec<f64>, OdeError> {
    let traj = integrate(params, &OdeState::from_flat(y0), t, ORBIT_TOL)?;
    Ok(traj.end_state().flatten())
}

/// Rotate each `w_j(0)` to the positive real axis; the torus symmetry
/// `w_j ↦ e^{iβ_j} w_j`, `θ ↦ θ + Σβ_j` makes this a gauge choice, and the
/// reduced shooting variables `(r, θ, T)` then see no flat directions.
fn realify(seed: &OdeState) -> OdeState {
    let phase: f64 = seed.w.iter().map(|w| w.arg()).sum();
    OdeState {
        w: seed.w.iter().map(|w| crate::C64::new(w.norm(), 0.0)).collect(),
        theta: seed.theta - phase,
    }
}

fn state_from_reduced(z: &[f64], n: usize) -> OdeState {
    OdeState {
        w: z[..n].iter().map(|&r| crate::C64::new(r, 0.0)).collect(),
        theta: z[n],
    }
}

/// Closure residual `Φ_T(y0) − y0` over the reduced variables
/// `z = (r_1..r_n, θ, T)`, with the angle component wrapped.
fn closure_residual(params: &OdeParams, z: &[f64]) -> Result<DVector<f64>, OdeError> {
    let n = params.n();
    let y0 = state_from_reduced(z, n).flatten();
    let end = flow(params, &y0, z[n + 1])?;
    let m = y0.len();
    let mut r = DVector::zeros(m);
    for i in 0..m - 1 {
        r[i] = end[i] - y0[i];
    }
    r[m - 1] = wrap_to_pi(end[m - 1] - y0[m - 1]);
    Ok(r)
}

/// Damped least-squares shooting over the gauge-fixed variables. `pin`
/// freezes one modulus so an amplitude kick cannot relax back to a rigid
/// rotation during seed search.
fn shoot(
    params: &OdeParams,
    seed: &OdeState,
    t_start: f64,
    target: f64,
    pin: Option<usize>,
) -> Result<(OdeState, f64, f64), OdeError> {
    let n = params.n();
    let mut z: Vec<f64> = seed.w.iter().map(|w| w.re).collect();
    z.push(seed.theta);
    z.push(t_start);
    let nz = z.len();
    let m = 2 * n + 1;
    let mut r = closure_residual(params, &z)?;
    let mut rn = r.norm();
    let mut damping = 1e-4;
    for _ in 0..50 {
        if rn < target {
            break;
        }
        let mut jac = DMatrix::zeros(m, nz);
        for c in 0..nz {
            if pin == Some(c) {
                continue;
            }
            let step = 1e-7 * z[c].abs().max(1.0);
            let mut zp = z.clone();
            zp[c] += step;
            let rp = closure_residual(params, &zp)?;
            for i in 0..m {
                jac[(i, c)] = (rp[i] - r[i]) / step;
            }
        }
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let diag_scale = (0..nz).map(|i| jtj[(i, i)]).sum::<f64>() / nz as f64;
        let step_cap = 0.15 * z.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
        let mut improved = false;
        for _ in 0..15 {
            let mut a = jtj.clone();
            for i in 0..nz {
                a[(i, i)] += damping * diag_scale.max(1e-12);
            }
            let b = -(&jt * &r);
            let Some(mut delta) = a.lu().solve(&b) else {
                damping *= 10.0;
                continue;
            };
            let dn = delta.norm();
            if dn > step_cap {
                delta *= step_cap / dn;
            }
            let mut z_try = z.clone();
            for i in 0..nz {
                z_try[i] += delta[i];
            }
            if z_try[nz - 1] <= 0.0 || z_try[..n].iter().any(|&ri| ri <= 10.0 * tol::MODULUS_FLOOR)
            {
                damping *= 10.0;
                continue;
            }
            match closure_residual(params, &z_try) {
                Ok(r_try) => {
                    let rn_try = r_try.norm();
                    if rn_try < rn {
                        z = z_try;
                        r = r_try;
                        rn = rn_try;
                        damping = (damping / 5.0).max(1e-12);
                        improved = true;
                        break;
                    }
                    damping *= 10.0;
                }
                Err(_) => damping *= 10.0,
            }
            if damping > 1e12 {
                break;
            }
        }
        if !improved {
            break;
        }
    }
    Ok((state_from_reduced(&z, n), z[nz - 1], rn))
}

/// Scan the trajectory for the first return of the full state to the seed.
fn first_return(
    params: &OdeParams,
    seed: &OdeState,
    s_lo: f64,
    s_hi: f64,
    coarse: f64,
) -> Result<Option<f64>, OdeError> {
    let traj = integrate(params, seed, s_hi, ORBIT_TOL)?;
    let n_scan = 6000;
    let ds = (s_hi - s_lo) / n_scan as f64;
    let dist = |s: f64| traj.state_at(s).distance(seed);
    let mut prev2 = dist(s_lo);
    let mut prev1 = dist(s_lo + ds);
    for i in 2..=n_scan {
        let s = s_lo + ds * i as f64;
        let d = dist(s);
        if prev1 < prev2 && prev1 <= d && prev1 < coarse {
            // refine the local minimum by golden-section on the dense output
            let (mut a, mut b) = (s - 2.0 * ds, s);
            let phi = 0.5 * (3.0 - 5.0f64.sqrt());
            for _ in 0..80 {
                let x1 = a + phi * (b - a);
                let x2 = b - phi * (b - a);
                if dist(x1) < dist(x2) {
                    b = x2;
                } else {
                    a = x1;
                }
            }
            return Ok(Some(0.5 * (a + b)));
        }
        prev2 = prev1;
        prev1 = d;
    }
    Ok(None)
}

/// Detect and refine a periodic orbit near `seed`.
///
/// The first full-state return (θ on the circle) within the scan window is
/// refined by root-finding on the closure residual; the seed itself may be
/// adjusted by shooting within the trust radius `tol::SHOOTING_TRUST_RADIUS`.
/// The accepted orbit satisfies `closure < tol` and reports the minimal
/// period: any interior return below `10·tol` restarts refinement at the
/// shorter period.
pub fn find_periodic(
    params: &OdeParams,
    seed: &OdeState,
    period_hint: Option<f64>,
    tol_closure: f64,
) -> Result<PeriodicOrbit, OdeError> {
    let seed = realify(seed);
    let state_scale = seed.flatten().iter().map(|v| v * v).sum::<f64>().sqrt();
    let coarse = 0.25 * state_scale.max(1.0);

    // Candidate periods: the caller's hint is shot at directly (the seed
    // need not return on its own); without a hint, scan for a first return.
    let mut candidates: Vec<f64> = Vec::new();
    match period_hint {
        Some(h) => {
            candidates.push(h);
            if let Ok(Some(t)) = first_return(params, &seed, 0.02 * h, 3.0 * h, coarse) {
                if (t - h).abs() > 1e-6 * h {
                    candidates.push(t);
                }
            }
        }
        None => {
            let t = first_return(params, &seed, 1e-2, 250.0, coarse)?
                .ok_or(OdeError::NoReturnFound { s_max: 250.0 })?;
            candidates.push(t);
        }
    }

    let mut last_err = OdeError::NoReturnFound { s_max: 0.0 };
    for t0 in candidates {
        match refine_candidate(params, &seed, t0, state_scale, tol_closure, None) {
            Ok(orbit) => return Ok(orbit),
            Err(e) => last_err = e,
        }
    }
    Err(last_err)
}

fn refine_candidate(
    params: &OdeParams,
    seed: &OdeState,
    t_initial: f64,
    state_scale: f64,
    tol_closure: f64,
    pin: Option<usize>,
) -> Result<PeriodicOrbit, OdeError> {
    let mut t_guess = t_initial;
    let mut seed_guess = seed.clone();
    let target = (tol_closure * 1e-4).max(1e-11);
    for _ in 0..5 {
        let (initial, t, rn) = shoot(params, &seed_guess, t_guess, target, pin)?;
        if rn > tol_closure {
            return Err(OdeError::NonConvergentRefinement { residual: rn });
        }
        let moved = initial.distance(seed);
        let allowed = tol::SHOOTING_TRUST_RADIUS * state_scale.max(1.0);
        if moved > allowed {
            return Err(OdeError::TrustRadiusExceeded { moved, allowed });
        }

        // minimal-period check: look for an interior return
        let traj = integrate(params, &initial, t, ORBIT_TOL)?;
        let n_scan = 4000;
        let mut interior: Option<f64> = None;
        for i in 1..n_scan {
            let s = t * i as f64 / n_scan as f64;
            if s < 0.02 * t || s > 0.98 * t {
                continue;
            }
            let d = traj.state_at(s).distance(&initial);
            if d < 10.0 * tol_closure {
                interior = Some(s);
                break;
            }
        }
        if let Some(s_short) = interior {
            t_guess = s_short;
            seed_guess = initial;
            continue;
        }

        let closure = traj.end_state().distance(&initial);
        if closure > tol_closure {
            return Err(OdeError::NonConvergentRefinement { residual: closure });
        }
        let orbit = PeriodicOrbit::assemble(
            params.clone(),
            initial,
            t,
            traj.raw().clone(),
            closure,
        );
        if orbit.min_modulus() <= 10.0 * tol::MODULUS_FLOOR {
            return Err(OdeError::ModulusCollapse { s: 0.0, j: 0 });
        }
        return Ok(orbit);
    }
    Err(OdeError::NonConvergentRefinement { residual: f64::NAN })
}

/// Kick a rigid orbit transversally and close it back up, producing a
/// genuinely oscillating periodic orbit with the same winding pattern.
pub fn search_from_rigid(
    params: &OdeParams,
    nu: &[i64],
    radial_kick: &[f64],
    theta_kick: f64,
    tol_closure: f64,
) -> Result<PeriodicOrbit, OdeError> {
    let (rigid, period) = rigid_orbit(params, nu)?;
    let mut seed = rigid.clone();
    for (w, kick) in seed.w.iter_mut().zip(radial_kick) {
        *w *= 1.0 + kick;
    }
    seed.theta += theta_kick;
    // Pin the most-kicked modulus: the closure equations are satisfied along
    // a one-parameter amplitude family, and an unpinned search relaxes the
    // kick straight back to the rigid orbit.
    let pin = radial_kick
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i);
    let state_scale = seed.flatten().iter().map(|v| v * v).sum::<f64>().sqrt();
    refine_candidate(params, &realify(&seed), period, state_scale, tol_closure, pin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::LambdaSpec;
    use approx::assert_abs_diff_eq;

    fn params(l: &[f64]) -> OdeParams {
        OdeParams::new(LambdaSpec::new(l).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn rigid_orbit_n2_reference_values() {
        // λ = (1, −1), ν = (−1, 2): r = (1, 1/√2), Ω = 1/√2, T = 2π√2.
        let p = params(&[1.0, -1.0]);
        let (state, period) = rigid_orbit(&p, &[-1, 2]).unwrap();
        assert_abs_diff_eq!(state.w[0].re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(state.w[1].re, 0.5f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(period, TAU * 2.0f64.sqrt(), epsilon = 1e-12);
        // the rigid state is an exact solution: it closes to integrator accuracy
        let end = flow(&p, &state.flatten(), period).unwrap();
        let d = OdeState::from_flat(&end).distance(&state);
        assert!(d < 1e-9, "rigid orbit closure {d}");
    }

    #[test]
    fn rigid_orbit_n3_closes() {
        let p = params(&[1.0, 1.0, -1.0]);
        let (state, period) = rigid_orbit(&p, &[-1, -1, 3]).unwrap();
        assert_abs_diff_eq!(period, TAU * 3.0f64.sqrt(), epsilon = 1e-12);
        let end = flow(&p, &state.flatten(), period).unwrap();
        assert!(OdeState::from_flat(&end).distance(&state) < 1e-9);
    }

    #[test]
    fn find_periodic_recovers_rigid_orbit() {
        let p = params(&[1.0, -1.0]);
        let (state, period) = rigid_orbit(&p, &[-1, 2]).unwrap();
        let orbit = find_periodic(&p, &state, Some(period), tol::ORBIT_CLOSURE).unwrap();
        assert_abs_diff_eq!(orbit.period(), period, epsilon = 1e-6);
        assert!(orbit.closure_residual() < tol::ORBIT_CLOSURE);
        for &(lo, hi) in orbit.modulus_bounds() {
            assert!(lo > 0.0 && hi.is_finite());
        }
    }

    #[test]
    fn rejects_bad_frequency_patterns() {
        let p = params(&[1.0, -1.0]);
        assert!(rigid_orbit(&p, &[1, 2]).is_err());
        assert!(rigid_orbit(&p, &[-1, 2, 3]).is_err());
        assert!(rigid_orbit(&p, &[0, 2]).is_err());
    }
}
