//! Adaptive Gauss-Kronrod (7/15) quadrature of complex integrands.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Absolute tolerance used by [`quad_overlap`].
pub const OVERLAP_TOL: f64 = 1e-13;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn kronrod<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += s * WGK[j];
        if j % 2 == 1 {
            g += s * WG[j / 2];
        }
    }
    ((k * h), ((k - g) * h).norm())
}

/// `int_a^b f(x) dx` to absolute accuracy `tol`.
pub fn integrate<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, tol: f64) -> Result<Complex64> {
    if !(a.is_finite() && b.is_finite()) || !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("bad quadrature request on [{a}, {b}] with tol {tol}")));
    }
    if a == b {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mut total = Complex64::new(0.0, 0.0);
    let mut error = 0.0;
    let mut stack = vec![(a, b, 0u32)];
    while let Some((lo, hi, depth)) = stack.pop() {
        let (value, err) = kronrod(&f, lo, hi);
        // local budget proportional to the interval length
        let budget = tol * ((hi - lo) / (b - a)).abs();
        if err <= budget.max(1e-15 * value.norm()) || depth >= 50 {
            total += value;
            error += err;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
    }
    if !(error <= tol.max(1e-15 * total.norm())) || !total.is_finite() {
        return Err(Error::ToleranceNotMet { tolerance: tol, estimate: error });
    }
    Ok(total)
}

/// `int f(x) g(x) dx` over `interval`.
pub fn quad_overlap<F, G>(f: F, g: G, interval: [f64; 2]) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
    G: Fn(f64) -> Complex64,
{
    integrate(|x| f(x) * g(x), interval[0], interval[1], OVERLAP_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn sine_square_is_normalized() {
        let v = quad_overlap(|x| re((PI * x).sin()), |x| re(2.0 * (PI * x).sin()), [0.0, 1.0]).unwrap();
        assert!((v - 1.0).norm() < 1e-13);
    }

    #[test]
    fn oscillatory_complex_integrand() {
        // int_0^10 exp(i 7 x) dx
        let v = integrate(|x| Complex64::new(0.0, 7.0 * x).exp(), 0.0, 10.0, 1e-13).unwrap();
        let exact = (Complex64::new(0.0, 70.0).exp() - 1.0) / Complex64::new(0.0, 7.0);
        assert!((v - exact).norm() < 1e-13);
    }

    #[test]
    fn singular_integrand_reports_failure() {
        let r = integrate(|x| re(1.0 / x.abs().max(1e-300)), -1.0, 1.0, 1e-13);
        assert!(matches!(r, Err(Error::ToleranceNotMet { .. })));
    }
}
