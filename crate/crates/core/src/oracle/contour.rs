//! Moshinsky function by direct quadrature of its integral representation
//!
//! ```text
//! M(d, kappa, t) = (i/2pi) int exp(ikd - ik^2 t) / (k - kappa) dk
//! ```
//!
//! along the steepest-descent line `k = d/2t + exp(-i pi/4) s`, where the
//! integrand is `exp(i d^2/4t) exp(-t s^2) exp(-i pi/4) / (k - kappa)`.
//! A pole swept over while rotating the real axis onto that line adds
//! `+-exp(i kappa d - i kappa^2 t)`.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;

use super::quadrature::integrate;
use crate::error::{Error, Result};

/// Reduced Moshinsky function (free phase `d^2/4t` removed), independent
/// of the Faddeeva implementation.
pub fn moshinsky_contour(distance: f64, t: f64, kappa: Complex64) -> Result<Complex64> {
    if !(t > 0.0) || !(distance >= 0.0) {
        return Err(Error::InvalidArgument(format!("contour oracle needs t > 0, d >= 0 (t={t}, d={distance})")));
    }
    let k0 = distance / (2.0 * t);
    let rot = Complex64::from_polar(1.0, -FRAC_PI_4);
    let c = k0 - kappa;
    let scale = t.sqrt();
    // s = u / sqrt(t); exp(-u^2) is below 1e-30 past |u| = 8.4
    let integrand = |u: f64| {
        let s = u / scale;
        (-u * u).exp() * rot / (c + rot * s) / scale
    };
    // split at the point of the line closest to the pole
    let closest = -(c * rot.conj()).re * scale;
    let mut cuts = vec![-8.5, 8.5];
    if closest.abs() < 8.5 {
        cuts.insert(1, closest);
    }
    let mut line = Complex64::new(0.0, 0.0);
    for w in cuts.windows(2) {
        line += integrate(integrand, w[0], w[1], 1e-15)?;
    }
    let mut m = Complex64::new(0.0, 1.0) / (2.0 * PI) * line;
    let angle = (kappa - k0).arg();
    let pole = || {
        let s = distance - 2.0 * kappa * t;
        (Complex64::new(0.0, -1.0) * s * s / (4.0 * t)).exp()
    };
    if angle > -FRAC_PI_4 && angle < 0.0 {
        m += pole();
    } else if angle > 3.0 * FRAC_PI_4 && angle < PI {
        m -= pole();
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::moshinsky_reduced;

    #[test]
    fn matches_faddeeva_route() {
        for (d, t, k) in [
            (2.0, 1.0, Complex64::new(3.1, -0.01)),
            (50.0, 3.0, Complex64::new(6.2, -0.5)),
            (0.0, 0.7, Complex64::new(1.0, -2.0)),
            (10.0, 20.0, Complex64::new(-3.0, -0.2)),
        ] {
            let a = moshinsky_contour(d, t, k).unwrap();
            let (_, b) = moshinsky_reduced(d, t, k).unwrap();
            assert!((a - b).norm() < 1e-9 * b.norm().max(1e-3), "{d} {t} {k}: {a} vs {b}");
        }
    }
}
