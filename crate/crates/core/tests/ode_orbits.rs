//! Periodic-orbit integration tests: rigid anchors, oscillating seeds, and
//! the slice densities they generate.

use std::sync::Arc;

use lmcf_core::family::LambdaSpec;
use lmcf_core::ode::periodic::{find_periodic, rigid_orbit, search_from_rigid};
use lmcf_core::ode::seeds;
use lmcf_core::ode::{
    density_closed_form_ode, immerse_ode, integrate, OdeParams, VarifoldSliceOde,
};
use lmcf_core::tol;

fn params(l: &[f64]) -> OdeParams {
    OdeParams::new(LambdaSpec::new(l).unwrap(), 1.0).unwrap()
}

#[test]
fn search_produces_oscillating_orbits_for_all_shipped_shapes() {
    let cases: [(&[f64], &[i64], &[f64]); 3] = [
        (&[1.0, -1.0], &[-1, 2], &[0.15, 0.0]),
        (&[1.0, -1.0, -1.0], &[-1, 1, 1], &[0.12, -0.08, 0.0]),
        (&[1.0, 1.0, -1.0], &[-1, -1, 3], &[0.15, -0.05, 0.0]),
    ];
    for (l, nu, kick) in cases {
        let p = params(l);
        let orbit = search_from_rigid(&p, nu, kick, 0.0, tol::ORBIT_CLOSURE)
            .unwrap_or_else(|e| panic!("search failed for {l:?}: {e}"));
        assert!(
            orbit.closure_residual() < tol::ORBIT_CLOSURE,
            "closure {} for {l:?}",
            orbit.closure_residual()
        );
        assert!(
            orbit.radial_oscillation() > 5e-3,
            "orbit for {l:?} is rigid (oscillation {})",
            orbit.radial_oscillation()
        );
        assert!(orbit.min_modulus() > 0.1);
    }
}

#[test]
fn shipped_seeds_close_and_oscillate() {
    let file = seeds::builtin();
    for (n, k) in [(2, 1), (3, 1), (3, 2)] {
        let entry = file.find(n, k).expect("seed present");
        let p = entry.params().unwrap();
        let orbit = find_periodic(&p, &entry.state(), Some(entry.period_hint), tol::ORBIT_CLOSURE)
            .unwrap_or_else(|e| panic!("seed ({n},{k}) failed: {e}"));
        assert!(orbit.closure_residual() < tol::ORBIT_CLOSURE);
        assert!((orbit.period() - entry.period_hint).abs() < 1e-3 * entry.period_hint);
        for &(lo, hi) in orbit.modulus_bounds() {
            assert!(lo > 0.05 && hi < 20.0, "modulus bounds ({lo}, {hi})");
        }
    }
}

#[test]
fn densities_are_periodic_along_the_orbit() {
    let file = seeds::builtin();
    let entry = file.find(3, 2).unwrap();
    let p = entry.params().unwrap();
    let orbit = Arc::new(
        find_periodic(&p, &entry.state(), Some(entry.period_hint), tol::ORBIT_CLOSURE).unwrap(),
    );
    let t = -0.4;
    let slice = VarifoldSliceOde::new(orbit.clone(), t);
    // a fixed on-slice point: x = (x1, 0.4, 0.3) with λ·x² = 2t
    let l = p.lambda().lambdas().to_vec();
    let x1 = ((2.0 * t - l[1] * 0.16 - l[2] * 0.09) / l[0]).abs();
    // λ = (1,1,-1): x1² = 2t − 0.16 + 0.09 < 0 for t<0; use the minus block instead
    let x3 = ((l[0] * 0.16 + l[1] * 0.09 - 2.0 * t) / (-l[2])).sqrt();
    let x = vec![0.4, 0.3, x3];
    let _ = x1;
    let period = orbit.period();
    for i in 0..20 {
        let s = period * i as f64 / 20.0;
        let d0 = density_closed_form_ode(&slice, &x, s).unwrap();
        let d1 = density_closed_form_ode(&slice, &x, s + period).unwrap();
        assert!((d0.h_norm_sq - d1.h_norm_sq).abs() < 1e-6);
        assert!((d0.radon_density - d1.radon_density).abs() < 1e-6);
        let f0 = immerse_ode(&slice, &x, s).unwrap();
        let f1 = immerse_ode(&slice, &x, s + period).unwrap();
        assert!(f0.sub(&f1).norm() < 1e-6);
    }
}

#[test]
fn conserved_quantities_hold_along_shipped_orbits_at_criterion_tolerance() {
    let file = seeds::builtin();
    for entry in &file.seeds {
        let p = entry.params().unwrap();
        let init = entry.state();
        let span = 10.0f64;
        let traj = integrate(&p, &init, span, 1e-10).unwrap();
        let q0 = init.conserved(&p);
        let q1 = traj.end_state().conserved(&p);
        for (a, b) in q0.iter().zip(&q1) {
            assert!(
                (a - b).abs() < tol::ODE_Q_DRIFT_PER_UNIT_S * span,
                "drift {}",
                (a - b).abs()
            );
        }
    }
}

#[test]
fn minimal_period_is_reported() {
    // seed the detector with a doubled-period hint: it must still find T
    let p = params(&[1.0, -1.0]);
    let (state, period) = rigid_orbit(&p, &[-1, 2]).unwrap();
    let orbit = find_periodic(&p, &state, Some(2.0 * period), tol::ORBIT_CLOSURE).unwrap();
    assert!(
        (orbit.period() - period).abs() < 1e-5 * period,
        "expected minimal period {period}, got {}",
        orbit.period()
    );
}

#[test]
#[ignore = "development tool: prints freshly minted seed entries"]
fn mint_seed_file() {
    let cases: [(&[f64], &[i64], &[f64]); 3] = [
        (&[1.0, -1.0], &[-1, 2], &[0.15, 0.0]),
        (&[1.0, -1.0, -1.0], &[-1, 1, 1], &[0.12, -0.08, 0.0]),
        (&[1.0, 1.0, -1.0], &[-1, -1, 3], &[0.15, -0.05, 0.0]),
    ];
    let mut file = seeds::SeedFile::default();
    for (l, nu, kick) in cases {
        let p = params(l);
        let orbit = search_from_rigid(&p, nu, kick, 0.0, tol::ORBIT_CLOSURE).unwrap();
        eprintln!(
            "lambda {:?}: T = {:.15}, closure = {:.3e}, oscillation = {:.4}, min r = {:.4}",
            l,
            orbit.period(),
            orbit.closure_residual(),
            orbit.radial_oscillation(),
            orbit.min_modulus()
        );
        file.seeds.push(seeds::SeedEntry::from_orbit(&orbit));
    }
    println!("{}", seeds::to_text(&file));
}
