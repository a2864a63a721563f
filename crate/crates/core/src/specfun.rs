//! Faddeeva function and the Moshinsky propagation function.
//!
//! `w(z) = exp(-z^2) erfc(-iz)` is evaluated in the upper half plane by one
//! of three schemes:
//!
//! * `|z| < 0.5`: the power series `sum (iz)^n / Gamma(n/2 + 1)`;
//! * `Im z > 8` or `|z| > 40`: the Laplace continued fraction;
//! * otherwise: the trapezoidal rule applied to
//!   `w(z) = (i/pi) int exp(-t^2) / (z - t) dt` with the residue correction
//!   for the pole at `t = z`. The error of the corrected rule is
//!   `O(exp(-pi^2/h^2))`, about 1e-17 for the step used here.
//!
//! The lower half plane follows from `w(z) = 2 exp(-z^2) - w(-z)`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;
/// Largest argument of `exp` that stays finite.
const LOG_MAX: f64 = 709.0;

const TRAPEZOID_STEP: f64 = 0.5;
const TRAPEZOID_CUTOFF: f64 = 6.6;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Faddeeva function `w(z) = exp(-z^2) erfc(-iz)`.
///
/// Returns [`Error::Overflow`] when `Im z < 0` and `exp(-z^2)` is not
/// representable.
pub fn faddeeva_w(z: Complex64) -> Result<Complex64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::InvalidArgument(format!("faddeeva_w({z}) needs a finite argument")));
    }
    if z.im >= 0.0 {
        return Ok(w_upper(z));
    }
    // w(z) = 2 exp(-z^2) - w(-z)
    let log_mag = z.im * z.im - z.re * z.re;
    if log_mag > LOG_MAX {
        return Err(Error::Overflow { what: "faddeeva_w reflection", log_magnitude: log_mag });
    }
    Ok(2.0 * (-z * z).exp() - w_upper(-z))
}

/// `w(z)` for `Im z >= 0`.
pub(crate) fn w_upper(z: Complex64) -> Complex64 {
    debug_assert!(z.im >= 0.0);
    let r = z.norm();
    let w = if r < 0.5 {
        w_taylor(z)
    } else if z.im > 8.0 || r > 40.0 {
        w_continued_fraction(z)
    } else {
        w_trapezoid(z)
    };
    if z.im == 0.0 {
        // Re w(x) = exp(-x^2) on the real axis.
        c((-z.re * z.re).exp(), w.im)
    } else {
        w
    }
}

fn w_taylor(z: Complex64) -> Complex64 {
    // 1/Gamma(n/2 + 1) by the recursion 1/Gamma(x + 1) = 1/(x Gamma(x)).
    static COEFFS: OnceLock<[f64; 32]> = OnceLock::new();
    let coeffs = COEFFS.get_or_init(|| {
        let mut a = [0.0; 32];
        a[0] = 1.0;
        a[1] = 2.0 * FRAC_1_SQRT_PI;
        for n in 2..32 {
            a[n] = a[n - 2] / (n as f64 / 2.0);
        }
        a
    });
    let iz = c(-z.im, z.re);
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * iz + a)
}

fn w_continued_fraction(z: Complex64) -> Complex64 {
    let r = z.norm();
    if r > 1e7 {
        return c(0.0, FRAC_1_SQRT_PI) / z;
    }
    let depth = if r > 100.0 { 8 } else { 20 };
    let mut tail = Complex64::new(0.0, 0.0);
    for k in (1..=depth).rev() {
        tail = (k as f64 / 2.0) / (z - tail);
    }
    c(0.0, FRAC_1_SQRT_PI) / (z - tail)
}

/// Node weights `exp(-t_n^2)` for the two trapezoid grids (offset 0 and h/2).
fn trapezoid_nodes() -> &'static [Vec<(f64, f64)>; 2] {
    static NODES: OnceLock<[Vec<(f64, f64)>; 2]> = OnceLock::new();
    NODES.get_or_init(|| {
        let grid = |offset: f64| {
            let lo = ((-TRAPEZOID_CUTOFF - offset) / TRAPEZOID_STEP).ceil() as i64;
            let hi = ((TRAPEZOID_CUTOFF - offset) / TRAPEZOID_STEP).floor() as i64;
            (lo..=hi)
                .map(|n| {
                    let t = n as f64 * TRAPEZOID_STEP + offset;
                    (t, (-t * t).exp())
                })
                .collect()
        };
        [grid(0.0), grid(0.5 * TRAPEZOID_STEP)]
    })
}

fn w_trapezoid(z: Complex64) -> Complex64 {
    let h = TRAPEZOID_STEP;
    // Keep Re z at least h/4 away from every node.
    let frac = z.re / h - (z.re / h).floor();
    let (grid, offset) = if (0.25..=0.75).contains(&frac) { (0, 0.0) } else { (1, 0.5 * h) };
    let sum: Complex64 = trapezoid_nodes()[grid].iter().map(|&(t, weight)| weight / (z - t)).sum();
    let quadrature = c(0.0, h / PI) * sum;
    let pole = 2.0 * (-z * z).exp() / (1.0 - (c(0.0, -2.0 * PI / h) * (z - offset)).exp());
    quadrature + pole
}

/// Argument of the Moshinsky function,
/// `y = exp(-i pi/4) (1/4t)^{1/2} [(r - a) - 2 kappa t]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MoshinskyArg {
    pub y: Complex64,
    pub r: f64,
    pub a: f64,
    pub t: f64,
    pub kappa: Complex64,
}

impl MoshinskyArg {
    pub fn new(r: f64, a: f64, t: f64, kappa: Complex64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!("Moshinsky argument needs t > 0, got {t}")));
        }
        let phase = Complex64::from_polar(1.0, -PI / 4.0);
        let y = phase * (0.25 / t).sqrt() * ((r - a) - 2.0 * kappa * t);
        Ok(Self { y, r, a, t, kappa })
    }

    /// The free-propagation phase `(r - a)^2 / 4t` carried by every term at
    /// this position and time.
    pub fn free_phase(&self) -> f64 {
        let d = self.r - self.a;
        d * d / (4.0 * self.t)
    }
}

/// Moshinsky function `M = 1/2 exp(i (r-a)^2/4t) w(iy)`.
pub fn moshinsky_m(r: f64, a: f64, t: f64, kappa: Complex64) -> Result<Complex64> {
    if r < a {
        return Err(Error::InvalidArgument(format!("moshinsky_m needs r >= a, got r={r}, a={a}")));
    }
    let (phase, reduced) = moshinsky_reduced(r - a, t, kappa)?;
    Ok(Complex64::from_polar(1.0, phase) * reduced)
}

/// Moshinsky function with its free phase split off:
/// `M = exp(i phase) * reduced`, where `phase = d^2/4t` and `d = r - a >= 0`.
///
/// Splitting the phase keeps sums over many poles at a common position free
/// of the large argument reduction in `exp(i d^2/4t)`.
pub fn moshinsky_reduced(distance: f64, t: f64, kappa: Complex64) -> Result<(f64, Complex64)> {
    let arg = MoshinskyArg::new(distance, 0.0, t, kappa)?;
    let z = c(-arg.y.im, arg.y.re); // i*y
    let phase = arg.free_phase();
    if z.im >= 0.0 {
        return Ok((phase, 0.5 * w_upper(z)));
    }
    // Pole-dominated side: exp(-z^2) exp(i d^2/4t) = exp(i kappa d - i kappa^2 t),
    // and -z^2 = -i (d - 2 kappa t)^2 / 4t.
    let s = distance - 2.0 * kappa * t;
    let exponent = c(0.0, -1.0) * s * s / (4.0 * t);
    if exponent.re > LOG_MAX {
        return Err(Error::Overflow { what: "moshinsky pole term", log_magnitude: exponent.re });
    }
    Ok((phase, exponent.exp() - 0.5 * w_upper(-z)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    // Reference values from a 40-digit evaluation of exp(-z^2) erfc(-iz).
    const TABLE: &[(f64, f64, f64, f64)] = &[
        (0.0, 1.0, 0.427583576155807, 0.0),
        (0.0, 10.0, 0.056140992743822586, 0.0),
        (1.0, 0.0, 0.36787944117144232, 0.60715770584139373),
        (1.3, 0.7, 0.25489476408715371, 0.29392745522220066),
        (3.0, 0.1, 0.0079426809987699907, 0.20074234309867737),
        (5.5, 2.0, 0.034227126649241346, 0.091289982917823137),
        (-7.0, 7.5, 0.040365123259583437, -0.037318416287606156),
        (50.0, 0.5, 0.00011289438198354341, 0.011284920162609328),
        (0.2, 0.3, 0.7138010529836519, 0.13473859470829444),
        (2.0, 0.001, 0.018547236370405553, 0.33995283120737863),
        (-4.5, 3.25, 0.061076323080479441, -0.081818788866659302),
        (12.0, 9.0, 0.02264576926880428, 0.030060132869490442),
        (0.7, -0.4, 0.72593418707083556, 1.0952994552430184),
        (-2.5, -1.5, -0.098535764947462406, -0.19759688490253617),
    ];

    #[test]
    fn matches_high_precision_table() {
        for &(x, y, re, im) in TABLE {
            let w = faddeeva_w(c(x, y)).unwrap();
            assert!(rel(w, c(re, im)) < 1e-13, "w({x}+{y}i) = {w}, want {re}+{im}i");
        }
    }

    #[test]
    fn zero_argument() {
        assert_eq!(faddeeva_w(c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn schwarz_reflection() {
        let z = c(1.3, 0.7);
        let lhs = faddeeva_w(-z.conj()).unwrap();
        let rhs = faddeeva_w(z).unwrap().conj();
        assert!(rel(lhs, rhs) < 1e-15);
    }

    #[test]
    fn large_imaginary_asymptote() {
        let w = faddeeva_w(c(0.0, 10.0)).unwrap();
        let asym = 1.0 / (10.0 * PI.sqrt());
        assert!((w.re - asym).abs() / asym < 5e-3);
    }

    #[test]
    fn reflection_overflow_is_flagged() {
        match faddeeva_w(c(0.0, -40.0)) {
            Err(Error::Overflow { .. }) => {}
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn scheme_boundaries_agree() {
        // straddle |z| = 0.5, |z| = 40 and Im z = 8
        for &(a, b) in &[
            (c(0.499_999_9, 0.0), c(0.500_000_1, 0.0)),
            (c(0.0, 0.499_999_9), c(0.0, 0.500_000_1)),
            (c(39.999_999, 1.0), c(40.000_001, 1.0)),
            (c(3.0, 7.999_999_9), c(3.0, 8.000_000_1)),
            (c(-20.0, 7.999_999_9), c(-20.0, 8.000_000_1)),
        ] {
            let wa = faddeeva_w(a).unwrap();
            let wb = faddeeva_w(b).unwrap();
            assert!(rel(wa, wb) < 1e-6, "{a}: {wa} vs {b}: {wb}");
        }
    }

    #[test]
    fn moshinsky_at_boundary_small_time() {
        let m = moshinsky_m(1.0, 1.0, 1e-14, c(3.0, -0.01)).unwrap();
        assert!((m - c(0.5, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn moshinsky_rejects_bad_input() {
        assert!(moshinsky_m(2.0, 1.0, 0.0, c(1.0, -0.1)).is_err());
        assert!(moshinsky_m(2.0, 1.0, -1.0, c(1.0, -0.1)).is_err());
        assert!(moshinsky_m(0.5, 1.0, 1.0, c(1.0, -0.1)).is_err());
    }

    #[test]
    fn moshinsky_continuous_across_branch_switch() {
        // Im(iy) changes sign at t* = d / (2 (v - g)).
        let kappa = c(3.0, -0.2);
        let d = 5.0;
        let t_star = d / (2.0 * (kappa.re + kappa.im));
        let below = moshinsky_m(1.0 + d, 1.0, t_star * (1.0 - 1e-12), kappa).unwrap();
        let above = moshinsky_m(1.0 + d, 1.0, t_star * (1.0 + 1e-12), kappa).unwrap();
        assert!(rel(below, above) < 1e-10);
    }
}
