//! Normalized resonance states, expansion coefficients and the sum-rule and
//! closure diagnostics.
//!
//! A resonance state is stored as the value and slope at the start of each
//! interior region; inside a region it is rebuilt with the same transfer
//! matrices that define the pole condition. Outside the confinement region
//! it is a pure outgoing exponential.
//!
//! Normalization (regularized over the outgoing tails):
//!
//! ```text
//! int_interior u^2 dx + i [u(0)^2 + u(L)^2] / (2 kappa) = 1
//! ```
//!
//! where the `u(0)` term is present only when the potential radiates to the
//! left. The amplitude is the principal square root, so `Re A >= 0`.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{cos_sinc, transfer, InitialState, PotentialSpec, Region};
use crate::poles::{ComplexPole, PoleSet};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Debug, PartialEq)]
pub struct ResonanceState {
    pub pole: ComplexPole,
    pub spec: PotentialSpec,
    /// Each interior region with the normalized `(u, u')` at its start.
    pieces: Vec<(Region, Complex64, Complex64)>,
    /// Normalization amplitude: `A` in `A sin(kappa r)` for the delta shell,
    /// `u(0)` for the double barrier.
    pub amplitude: Complex64,
    /// `u` at the right edge of the confinement region.
    pub u_boundary: Complex64,
    /// `u(0)`; zero for the delta shell.
    pub u_origin: Complex64,
}

/// Builds the normalized resonance state of a validated pole.
pub fn normalize_state(spec: &PotentialSpec, pole: &ComplexPole) -> Result<ResonanceState> {
    let k = pole.kappa;
    let (u0, du0) = match *spec {
        PotentialSpec::DeltaShell { .. } => (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)),
        PotentialSpec::DoubleBarrier { .. } => (Complex64::new(1.0, 0.0), -I * k),
    };
    // unnormalized pieces and the normalizer
    let mut pieces = Vec::new();
    let (mut u, mut du) = (u0, du0);
    let mut integral = Complex64::new(0.0, 0.0);
    for region in spec.regions() {
        pieces.push((region, u, du));
        let q2 = k * k - region.potential;
        integral += square_integral(q2, region.width, u, du);
        (u, du) = transfer(q2, region.width, u, du);
    }
    let normalizer = integral + I * (u0 * u0 + u * u) / (2.0 * k);
    if normalizer.norm() < 1e-14 {
        return Err(Error::DegenerateNormalizer { kappa: k, magnitude: normalizer.norm() });
    }
    let scale = normalizer.inv().sqrt();
    let amplitude = match *spec {
        // u = (A kappa) sin(kappa r)/kappa, so A = scale / kappa up to the branch
        PotentialSpec::DeltaShell { .. } => principal_branch(scale / k),
        PotentialSpec::DoubleBarrier { .. } => principal_branch(scale),
    };
    let factor = match *spec {
        PotentialSpec::DeltaShell { .. } => amplitude * k,
        PotentialSpec::DoubleBarrier { .. } => amplitude,
    };
    for piece in &mut pieces {
        piece.1 *= factor;
        piece.2 *= factor;
    }
    Ok(ResonanceState { pole: *pole, spec: *spec, pieces, amplitude, u_boundary: u * factor, u_origin: u0 * factor })
}

fn principal_branch(a: Complex64) -> Complex64 {
    if a.re < 0.0 || (a.re == 0.0 && a.im < 0.0) {
        -a
    } else {
        a
    }
}

/// `int_0^l (u cos(qs) + du sin(qs)/q)^2 ds` as an entire function of `q2`.
fn square_integral(q2: Complex64, l: f64, u: Complex64, du: Complex64) -> Complex64 {
    let (_, sn1) = cos_sinc(q2, l);
    let (_, sn2) = cos_sinc(q2, 2.0 * l);
    let icc = 0.5 * l + 0.25 * sn2;
    let ics = 0.5 * sn1 * sn1;
    let iss = sine_square_integral(q2, l, sn2);
    u * u * icc + 2.0 * u * du * ics + du * du * iss
}

/// `int_0^l sin^2(qs)/q^2 ds`.
fn sine_square_integral(q2: Complex64, l: f64, sn2: Complex64) -> Complex64 {
    let x2 = q2 * l * l;
    if x2.norm() >= 1.0 {
        return (0.5 * l - 0.25 * sn2) / q2;
    }
    // sum_{m>=1} (-1)^{m+1} 2^{2m-1} q^{2m-2} l^{2m+1} / ((2m)! (2m+1))
    let mut term = Complex64::new(l * l * l, 0.0); // 2^{1} l^3 / 2!
    let mut sum = term / 3.0;
    for m in 2..40 {
        let m = m as f64;
        term *= -4.0 * x2 / ((2.0 * m - 1.0) * (2.0 * m));
        let add = term / (2.0 * m + 1.0);
        sum += add;
        if add.norm() < 1e-18 * sum.norm() {
            break;
        }
    }
    sum
}

impl ResonanceState {
    pub fn kappa(&self) -> Complex64 {
        self.pole.kappa
    }

    /// `(u(x), u'(x))` anywhere on the line (half line for the delta shell,
    /// where `x < 0` gives zero).
    pub fn value_and_slope(&self, x: f64) -> (Complex64, Complex64) {
        let k = self.pole.kappa;
        let b = self.spec.boundary();
        if x > b {
            let u = self.u_boundary * (I * k * (x - b)).exp();
            return (u, I * k * u);
        }
        if x < 0.0 {
            if !self.spec.radiates_left() {
                return (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            }
            let u = self.u_origin * (-I * k * x).exp();
            return (u, -I * k * u);
        }
        let (region, u, du) =
            self.pieces.iter().rev().find(|(r, _, _)| x >= r.start).copied().unwrap_or(self.pieces[0]);
        transfer(k * k - region.potential, x - region.start, u, du)
    }

    pub fn value(&self, x: f64) -> Complex64 {
        self.value_and_slope(x).0
    }

    /// The state with the opposite sign of the amplitude; every observable
    /// is unchanged.
    pub fn flipped_branch(&self) -> Self {
        let mut out = self.clone();
        out.amplitude = -out.amplitude;
        out.u_boundary = -out.u_boundary;
        out.u_origin = -out.u_origin;
        for piece in &mut out.pieces {
            piece.1 = -piece.1;
            piece.2 = -piece.2;
        }
        out
    }

    /// Left-hand side of the normalization condition, evaluated from the
    /// stored pieces (should be `1`).
    pub fn normalization_residual(&self) -> Complex64 {
        let k = self.pole.kappa;
        let interior: Complex64 =
            self.pieces.iter().map(|(r, u, du)| square_integral(k * k - r.potential, r.width, *u, *du)).sum();
        let surface = if self.spec.radiates_left() {
            self.u_origin * self.u_origin + self.u_boundary * self.u_boundary
        } else {
            self.u_boundary * self.u_boundary
        };
        interior + I * surface / (2.0 * k)
    }
}

/// `C_n = int psi(x, 0) u_n(x) dx` in closed form.
///
/// The support of `init` must lie in a region with `V = 0`, where `u_n` is a
/// combination of `cos(kappa s)` and `sin(kappa s)`.
pub fn coefficient(state: &ResonanceState, init: &InitialState) -> Complex64 {
    let (u0, du0) = state.value_and_slope(init.support[0]);
    box_overlap(init, state.pole.kappa, u0, du0)
}

/// `int psi(x) u(x) dx` for `u'' = -k^2 u` on the support of `psi`, with
/// `(u, u')` given at its left end.
fn box_overlap(init: &InitialState, k: Complex64, u0: Complex64, du0: Complex64) -> Complex64 {
    let l = init.width();
    let p = init.wavenumber();
    let (pk, mk) = (p + k, p - k);
    let j_sc = 0.5 * (one_minus_cos_over(pk, l) + one_minus_cos_over(mk, l));
    let j_ss = 0.5 * (sin_over(mk, l) - sin_over(pk, l));
    (2.0 / l).sqrt() * (u0 * j_sc + du0 / k * j_ss)
}

/// `sin(w l)/w`
fn sin_over(w: Complex64, l: f64) -> Complex64 {
    let x = w * l;
    if x.norm() < 1e-4 {
        let x2 = x * x;
        return l * (1.0 - x2 / 6.0 + x2 * x2 / 120.0);
    }
    x.sin() / w
}

/// `(1 - cos(w l))/w = 2 sin^2(w l/2)/w`
fn one_minus_cos_over(w: Complex64, l: f64) -> Complex64 {
    let x = w * l;
    if x.norm() < 1e-4 {
        let x2 = x * x;
        return w * l * l / 2.0 * (1.0 - x2 / 12.0 + x2 * x2 / 360.0);
    }
    let s = (0.5 * x).sin();
    2.0 * s * s / w
}

/// `sum_n C_n u_n(b) / (k - kappa_n)` over every pole and its mirror, in
/// closed form: `2k int psi(r) G(b, r; k) dr` with the outgoing Green's
/// function `G(b, r; k) = phi(r) / W(k)`. `phi` obeys the left boundary
/// condition and `W = i k phi(b) - phi'(b+)`.
pub fn pole_sum(spec: &PotentialSpec, init: &InitialState, k: Complex64) -> Complex64 {
    let b = spec.boundary();
    let (phi0, dphi0, phi_b, dphi_b) = match *spec {
        PotentialSpec::DeltaShell { strength, radius } => {
            let (cs, sn) = cos_sinc(k * k, radius);
            let (c0, s0) = cos_sinc(k * k, init.support[0]);
            (s0, c0, sn, cs + strength * sn)
        }
        PotentialSpec::DoubleBarrier { .. } => {
            let (p0, d0) = spec.propagate_left_outgoing(k, init.support[0]);
            let (pb, db) = spec.propagate_left_outgoing(k, b);
            (p0, d0, pb, db)
        }
    };
    let w = I * k * phi_b - dphi_b;
    2.0 * k * box_overlap(init, k, phi0, dphi0) / w
}

/// Moments `T_j = sum_{|n| > N} C_n u_n(b) / kappa_n^(j+1)` of the poles
/// left out of the expansion (mirrors included), for `j < order`.
///
/// The complete sums are Taylor coefficients of [`pole_sum`] at `k = 0`,
/// taken by a trapezoid Cauchy integral inside the first pole. The
/// truncated sums are subtracted.
pub fn far_pole_moments(expansion: &Expansion, label: Label, order: usize) -> Result<Vec<Complex64>> {
    const POINTS: usize = 64;
    let init = expansion.initial(label)?;
    let c = expansion.coefficients(label)?;
    let nearest = expansion.states.iter().map(|s| s.kappa().norm()).fold(f64::INFINITY, f64::min);
    let radius = 0.5 * nearest;
    let samples: Vec<(Complex64, Complex64)> = (0..POINTS)
        .map(|m| {
            let k = Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * (m as f64 + 0.5) / POINTS as f64);
            (k, pole_sum(&expansion.spec, init, k))
        })
        .collect();
    let mut out = Vec::with_capacity(order);
    for j in 0..order {
        // g(k) = -sum_j k^j S_j
        let complete = -samples.iter().map(|(k, g)| g * k.powi(-(j as i32))).sum::<Complex64>() / POINTS as f64;
        let kept: Complex64 = expansion
            .states
            .iter()
            .zip(c)
            .map(|(s, cn)| {
                let cu = cn * s.u_boundary;
                let k = s.kappa();
                cu * k.powi(-(j as i32 + 1)) + cu.conj() * (-k.conj()).powi(-(j as i32 + 1))
            })
            .sum();
        out.push(complete - kept);
    }
    Ok(out)
}

/// Which single-particle initial state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Alpha,
    Beta,
}

/// Pole set, normalized states and coefficients for up to two initial
/// states; the reusable kernel for all time evolution.
#[derive(Clone, Debug)]
pub struct Expansion {
    pub spec: PotentialSpec,
    pub poles: PoleSet,
    pub states: Vec<ResonanceState>,
    pub alpha: InitialState,
    pub beta: Option<InitialState>,
    coeff_alpha: Vec<Complex64>,
    coeff_beta: Option<Vec<Complex64>>,
    /// Far-pole moments per label, when the remainder is enabled.
    remainder: Option<(Vec<Complex64>, Option<Vec<Complex64>>)>,
}

impl Expansion {
    pub fn build(poles: PoleSet, alpha: InitialState, beta: Option<InitialState>) -> Result<Self> {
        let spec = poles.spec;
        spec.check_initial_state(&alpha)?;
        if let Some(b) = &beta {
            spec.check_initial_state(b)?;
        }
        let states = poles.poles.par_iter().map(|p| normalize_state(&spec, p)).collect::<Result<Vec<_>>>()?;
        let coeff_alpha = states.iter().map(|s| coefficient(s, &alpha)).collect();
        let coeff_beta = beta.map(|b| states.iter().map(|s| coefficient(s, &b)).collect());
        Ok(Self { spec, poles, states, alpha, beta, coeff_alpha, coeff_beta, remainder: None })
    }

    /// Adds the long-time contribution of every pole beyond the last one
    /// kept, through `order` far-pole moments (see [`far_pole_moments`]).
    /// Applied to right-exterior amplitudes once all kept fronts have
    /// passed; `order = 0` switches it off.
    pub fn with_far_pole_remainder(mut self, order: usize) -> Result<Self> {
        self.remainder = None;
        if order > 0 {
            let a = far_pole_moments(&self, Label::Alpha, order)?;
            let b = match self.beta {
                Some(_) => Some(far_pole_moments(&self, Label::Beta, order)?),
                None => None,
            };
            self.remainder = Some((a, b));
        }
        Ok(self)
    }

    pub fn far_pole_remainder(&self, label: Label) -> Option<&[Complex64]> {
        let (a, b) = self.remainder.as_ref()?;
        match label {
            Label::Alpha => Some(a),
            Label::Beta => b.as_deref(),
        }
    }

    pub fn n_terms(&self) -> usize {
        self.states.len()
    }

    /// The first `n` terms only.
    pub fn truncated(&self, n: usize) -> Expansion {
        let n = n.min(self.n_terms());
        let order = self.remainder.as_ref().map_or(0, |r| r.0.len());
        let mut out = self.clone();
        out.poles = self.poles.truncated(n);
        out.states.truncate(n);
        out.coeff_alpha.truncate(n);
        if let Some(c) = &mut out.coeff_beta {
            c.truncate(n);
        }
        if order > 0 {
            // cannot fail: the moments were computed once already
            out = out.with_far_pole_remainder(order).expect("far-pole moments");
        }
        out
    }

    /// Lifetime unit: `tau` of the first (longest-lived) pole.
    pub fn lifetime(&self) -> f64 {
        self.poles.poles[0].lifetime()
    }

    pub fn initial(&self, label: Label) -> Result<&InitialState> {
        match label {
            Label::Alpha => Ok(&self.alpha),
            Label::Beta => self.beta.as_ref().ok_or_else(no_beta),
        }
    }

    pub fn coefficients(&self, label: Label) -> Result<&[Complex64]> {
        match label {
            Label::Alpha => Ok(&self.coeff_alpha),
            Label::Beta => self.coeff_beta.as_deref().ok_or_else(no_beta),
        }
    }

    /// `C_bar_n = int psi*(x, 0) u_n dx`. Initial states are real box
    /// modes, so this equals `C_n`.
    pub fn coefficients_bar(&self, label: Label) -> Result<&[Complex64]> {
        self.coefficients(label)
    }
}

fn no_beta() -> Error {
    Error::InvalidArgument("expansion has no beta initial state".into())
}

/// Partial sum `Re sum_{n<=N} C_n C_bar_n`; tends to 1.
pub fn sum_rule(expansion: &Expansion, label: Label, n: usize) -> Result<f64> {
    if n > expansion.n_terms() {
        return Err(Error::InvalidArgument(format!("sum rule over {n} terms, expansion has {}", expansion.n_terms())));
    }
    let c = expansion.coefficients(label)?;
    let cb = expansion.coefficients_bar(label)?;
    Ok(c.iter().zip(cb).take(n).map(|(a, b)| (a * b).re).sum())
}

/// Closure reconstruction `Re sum_{n<=N} C_n u_n(x)` of the initial state.
pub fn reconstruct_initial(expansion: &Expansion, label: Label, x: f64, n: usize) -> Result<f64> {
    let b = expansion.spec.boundary();
    if !(x > 0.0 && x < b) {
        return Err(Error::InvalidArgument(format!("reconstruction point {x} must lie strictly inside (0, {b})")));
    }
    if n > expansion.n_terms() {
        return Err(Error::InvalidArgument(format!("{n} terms requested, {} available", expansion.n_terms())));
    }
    let c = expansion.coefficients(label)?;
    Ok(expansion.states.iter().zip(c).take(n).map(|(s, cn)| (cn * s.value(x)).re).sum())
}

/// Coefficient table `n,re_C,im_C,re_CCbar`.
pub fn render_coefficient_table(expansion: &Expansion, label: Label) -> Result<String> {
    let c = expansion.coefficients(label)?;
    let cb = expansion.coefficients_bar(label)?;
    let init = expansion.initial(label)?;
    let mut s = String::new();
    let _ = writeln!(s, "# expansion coefficients, box mode q={}, natural units hbar = 2m = 1", init.q);
    let _ = writeln!(s, "n,re_C,im_C,re_CCbar");
    for (j, (a, b)) in c.iter().zip(cb).enumerate() {
        let _ = writeln!(s, "{},{:e},{:e},{:e}", j + 1, a.re, a.im, (a * b).re);
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poles::find_poles;

    #[test]
    fn sine_square_series_matches_closed_form() {
        let l = 1.3;
        for q2 in [Complex64::new(0.3, -0.2), Complex64::new(-0.5, 0.1)] {
            let (_, sn2) = cos_sinc(q2, 2.0 * l);
            let series = sine_square_integral(q2, l, sn2);
            let closed = (0.5 * l - 0.25 * sn2) / q2;
            assert!((series - closed).norm() < 1e-13);
        }
    }

    #[test]
    fn delta_shell_amplitude_closed_form() {
        let spec = PotentialSpec::delta_shell(100.0, 1.0);
        let set = find_poles(&spec, 3).unwrap();
        for p in &set.poles {
            let s = normalize_state(&spec, p).unwrap();
            let k = p.kappa;
            let bracket = 0.5 - (2.0 * k).sin() / (4.0 * k) + I * k.sin().powi(2) / (2.0 * k);
            assert!((s.amplitude * s.amplitude * bracket - 1.0).norm() < 1e-12);
            assert!(s.amplitude.re >= 0.0);
            assert!((s.normalization_residual() - 1.0).norm() < 1e-12);
            assert_eq!(s.value(0.0), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn infinite_box_limit_amplitude() {
        let spec = PotentialSpec::delta_shell(1e5, 2.0);
        let set = find_poles(&spec, 2).unwrap();
        let s = normalize_state(&spec, &set.poles[1]).unwrap();
        assert!((s.amplitude - Complex64::new(1.0, 0.0)).norm() < 1e-4); // sqrt(2/a)
    }

    #[test]
    fn outgoing_boundary_conditions() {
        for spec in [PotentialSpec::delta_shell(100.0, 1.0), PotentialSpec::double_barrier(40.0, 1.0, 1.0)] {
            let set = find_poles(&spec, 4).unwrap();
            for p in &set.poles {
                let s = normalize_state(&spec, p).unwrap();
                let b = spec.boundary();
                let (u, du) = s.value_and_slope(b);
                assert!((u - s.u_boundary).norm() < 1e-10 * s.amplitude.norm().max(u.norm()), "{u} {}", s.u_boundary);
                // a delta shell kinks the state by lambda u(a)
                let jump = match spec {
                    PotentialSpec::DeltaShell { strength, .. } => strength * u,
                    _ => Complex64::new(0.0, 0.0),
                };
                let outside = I * p.kappa * u;
                assert!((outside - du - jump).norm() < 1e-9 * u.norm() * spec.scale());
                if spec.radiates_left() {
                    let (u, du) = s.value_and_slope(0.0);
                    assert!((du + I * p.kappa * u).norm() < 1e-10 * u.norm().max(1.0));
                }
            }
        }
    }

    #[test]
    fn orthogonal_in_box_limit() {
        let spec = PotentialSpec::delta_shell(1e6, 1.0);
        let set = find_poles(&spec, 2).unwrap();
        let init = spec.box_state(1).unwrap();
        let s2 = normalize_state(&spec, &set.poles[1]).unwrap();
        assert!(coefficient(&s2, &init).norm() < 1e-5);
        let s1 = normalize_state(&spec, &set.poles[0]).unwrap();
        assert!((coefficient(&s1, &init).norm() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn sum_rule_edge_cases() {
        let spec = PotentialSpec::delta_shell(100.0, 1.0);
        let exp = Expansion::build(find_poles(&spec, 5).unwrap(), spec.box_state(1).unwrap(), None).unwrap();
        assert_eq!(sum_rule(&exp, Label::Alpha, 0).unwrap(), 0.0);
        assert!(sum_rule(&exp, Label::Alpha, 6).is_err());
        assert!(sum_rule(&exp, Label::Beta, 1).is_err());
        assert!(reconstruct_initial(&exp, Label::Alpha, 1.0, 5).is_err());
    }

    #[test]
    fn coefficient_table_format() {
        let spec = PotentialSpec::delta_shell(100.0, 1.0);
        let exp = Expansion::build(find_poles(&spec, 2).unwrap(), spec.box_state(1).unwrap(), None).unwrap();
        let table = render_coefficient_table(&exp, Label::Alpha).unwrap();
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines[1], "n,re_C,im_C,re_CCbar");
        assert_eq!(lines.len(), 4);
        assert!(lines[2].starts_with("1,"));
    }
}
