//! Faddeeva function values, its reflection identity, and the Moshinsky
//! function approaching its pole term behind the wave front.

use num_complex::Complex64;
use resonance_decay::specfun::{faddeeva_w, moshinsky_m};

fn main() -> resonance_decay::Result<()> {
    for z in [Complex64::new(0.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(1.3, 0.7), Complex64::new(3.0, -2.0)] {
        let w = faddeeva_w(z)?;
        let reflected = faddeeva_w(-z)?;
        let gap = (w + reflected - 2.0 * (-z * z).exp()).norm();
        println!("w({z}) = {w:.15}   |w(z) + w(-z) - 2exp(-z^2)| = {gap:.1e}");
    }

    // behind the front M approaches the pole term exp(i k d - i k^2 t);
    // what is left falls off like t^-1/2 until the pole itself has decayed
    let kappa = Complex64::new(3.0, -1e-4);
    let (r, a) = (2.0, 1.0);
    for t in [10.0, 100.0, 1000.0] {
        let m = moshinsky_m(r, a, t, kappa)?;
        let pole = (Complex64::i() * kappa * (r - a) - Complex64::i() * kappa * kappa * t).exp();
        println!("t = {t:<6} |M - pole| / |pole| = {:.2e}", (m - pole).norm() / pole.norm());
    }
    Ok(())
}
