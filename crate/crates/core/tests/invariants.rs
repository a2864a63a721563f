//! Structural invariants of poles, states and densities at fixed inputs.

use num_complex::Complex64;

use resonance_decay::dynamics::psi_single;
use resonance_decay::oracle::integrate;
use resonance_decay::poles::{find_poles, refine_pole, winding_number};
use resonance_decay::states::{sum_rule, Expansion, Label};
use resonance_decay::PotentialSpec;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Outgoing-wave mismatch at `L` from plane-wave coefficients matched at
/// each interface, without transfer matrices.
fn double_barrier_by_matching(height: f64, b: f64, w: f64, k: Complex64) -> Complex64 {
    let edges = [0.0, b, b + w, 2.0 * b + w];
    let potentials = [height, 0.0, height];
    let (mut u, mut du) = (Complex64::new(1.0, 0.0), -I * k);
    for j in 0..3 {
        let q = (k * k - potentials[j]).sqrt();
        let (x0, x1) = (edges[j], edges[j + 1]);
        let a = 0.5 * (u + du / (I * q)) * (-I * q * x0).exp();
        let c = 0.5 * (u - du / (I * q)) * (I * q * x0).exp();
        let (e, f) = ((I * q * x1).exp(), (-I * q * x1).exp());
        u = a * e + c * f;
        du = I * q * (a * e - c * f);
    }
    du - I * k * u
}

#[test]
fn transfer_matrix_agrees_with_direct_matching() {
    let spec = PotentialSpec::double_barrier(40.0, 1.0, 1.0);
    for (re, im) in [(2.3, -0.01), (4.1, -0.3), (7.9, -0.9), (12.0, 0.2), (0.7, -1.5)] {
        let k = Complex64::new(re, im);
        let a = spec.pole_residual(k);
        let b = double_barrier_by_matching(40.0, 1.0, 1.0, k);
        assert!((a - b).norm() < 1e-12 * a.norm().max(b.norm()), "{k}: {a} vs {b}");
    }
}

#[test]
fn winding_matches_pole_count() {
    for (spec, n) in [(PotentialSpec::delta_shell(100.0, 1.0), 40), (PotentialSpec::double_barrier(40.0, 1.0, 1.0), 12)]
    {
        let set = find_poles(&spec, n).unwrap();
        let f = |k: Complex64| spec.pole_residual(k);
        assert_eq!(winding_number(&f, &set.contour, 0.01).unwrap(), n as i64);
    }
}

#[test]
fn seed_scaling_returns_the_same_pole() {
    for spec in [PotentialSpec::delta_shell(100.0, 1.0), PotentialSpec::double_barrier(40.0, 1.0, 1.0)] {
        for p in &find_poles(&spec, 6).unwrap().poles {
            let again = refine_pole(&spec, p.kappa * (1.0 + 1e-4), 1e-12).unwrap();
            assert!((again.kappa - p.kappa).norm() < 1e-9);
        }
    }
}

#[test]
fn initial_states_have_unit_norm() {
    for spec in [PotentialSpec::delta_shell(100.0, 1.0), PotentialSpec::double_barrier(40.0, 1.0, 1.0)] {
        for q in 1..=6 {
            let s = spec.box_state(q).unwrap();
            let [x0, x1] = s.support;
            let n = integrate(|x| Complex64::new(s.value(x).powi(2), 0.0), x0, x1, 1e-14).unwrap();
            assert!((n.re - 1.0).abs() < 1e-12 && (s.norm_squared() - 1.0).abs() < 1e-14);
        }
    }
}

#[test]
fn sum_rule_improves_with_more_poles() {
    let spec = PotentialSpec::delta_shell(100.0, 1.0);
    let e = Expansion::build(find_poles(&spec, 1000).unwrap(), spec.box_state(1).unwrap(), None).unwrap();
    let d10 = (sum_rule(&e, Label::Alpha, 10).unwrap() - 1.0).abs();
    let d1000 = (sum_rule(&e, Label::Alpha, 1000).unwrap() - 1.0).abs();
    assert!(d1000 < d10 && d1000 < 1e-3);
}

#[test]
fn interior_and_exterior_branches_meet_at_the_boundary() {
    for (spec, n) in [(PotentialSpec::delta_shell(10.0, 1.0), 200), (PotentialSpec::double_barrier(40.0, 1.0, 1.0), 50)]
    {
        let e = Expansion::build(find_poles(&spec, n).unwrap(), spec.box_state(1).unwrap(), None).unwrap();
        let b = spec.boundary();
        let eps = 1e-8 * b;
        for t in [0.1, 0.5, 2.0].map(|f| f * e.lifetime()) {
            let inside = psi_single(&e, Label::Alpha, b - eps, t).unwrap().amplitude.density();
            let outside = psi_single(&e, Label::Alpha, b + eps, t).unwrap().amplitude.density();
            assert!((inside - outside).abs() < 1e-6 * inside.max(outside), "t = {t}: {inside} vs {outside}");
        }
    }
}

#[test]
fn main_peak_is_converged_in_the_pole_count() {
    let spec = PotentialSpec::delta_shell(100.0, 1.0);
    let full = Expansion::build(find_poles(&spec, 1000).unwrap(), spec.box_state(1).unwrap(), None).unwrap();
    let half = full.truncated(500);
    let t = 5.86 * full.lifetime();
    let a = psi_single(&half, Label::Alpha, 3000.0, t).unwrap().amplitude.density();
    let b = psi_single(&full, Label::Alpha, 3000.0, t).unwrap().amplitude.density();
    assert!((a - b).abs() < 1e-6 * b, "{a} vs {b}");
}
