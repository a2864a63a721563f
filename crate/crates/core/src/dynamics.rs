//! Time evolution: one- and two-particle amplitudes, density time series,
//! peak times and power-law tail fits.
//!
//! Every pole `kappa_n` comes with its mirror `-kappa_n*`, whose term is the
//! complex conjugate coefficient product `conj(C_n u_n)` times the Moshinsky
//! function at the mirror pole. Both are summed explicitly.
//!
//! All Moshinsky functions at one position share the free phase
//! `exp(i d^2/4t)`. It is carried separately in [`Amplitude`], so densities
//! never touch the large phase.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poles::ComplexPole;
use crate::specfun::moshinsky_reduced;
use crate::states::{Expansion, Label};
use crate::PotentialSpec;

/// Last-term fraction above which a sum is flagged as possibly truncated.
pub const TRUNCATION_WARNING: f64 = 1e-8;

/// Time series are restricted to `(0, MAX_LIFETIMES]` lifetimes.
pub const MAX_LIFETIMES: f64 = 1e4;

/// `exp(i phase) * reduced`
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Amplitude {
    pub phase: f64,
    pub reduced: Complex64,
}

impl Amplitude {
    pub fn value(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.phase) * self.reduced
    }

    pub fn density(&self) -> f64 {
        self.reduced.norm_sqr()
    }
}

/// Single-particle amplitude with its truncation diagnostic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub amplitude: Amplitude,
    /// `|last term| / |sum|`
    pub last_term_fraction: f64,
}

impl Evaluation {
    pub fn possibly_truncated(&self) -> bool {
        self.last_term_fraction > TRUNCATION_WARNING
    }
}

enum Place {
    /// Distance past the right boundary.
    Right(f64),
    /// Distance to the left of the origin (double barrier only).
    Left(f64),
    Interior(f64),
}

fn place(spec: &PotentialSpec, x: f64) -> Result<Place> {
    if !x.is_finite() {
        return Err(Error::InvalidArgument(format!("position {x} is not finite")));
    }
    let b = spec.boundary();
    if x >= b {
        Ok(Place::Right(x - b))
    } else if x < 0.0 {
        if spec.radiates_left() {
            Ok(Place::Left(-x))
        } else {
            Err(Error::InvalidArgument(format!("position {x} is outside the half line")))
        }
    } else {
        Ok(Place::Interior(x))
    }
}

/// `psi(x, t)` from all terms of the expansion.
pub fn psi_single(expansion: &Expansion, label: Label, x: f64, t: f64) -> Result<Evaluation> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("time must be >= 0, got {t}")));
    }
    let spec = &expansion.spec;
    let where_ = place(spec, x)?;
    let coeffs = expansion.coefficients(label)?;
    if t == 0.0 {
        let v = expansion.initial(label)?.value(x);
        return Ok(Evaluation {
            amplitude: Amplitude { phase: 0.0, reduced: Complex64::new(v, 0.0) },
            last_term_fraction: 0.0,
        });
    }
    let (distance, at) = match where_ {
        Place::Right(d) => (d, Anchor::Boundary),
        Place::Left(d) => (d, Anchor::Origin),
        Place::Interior(x) => (0.0, Anchor::Point(x)),
    };
    let mut sum = Complex64::new(0.0, 0.0);
    let mut last = Complex64::new(0.0, 0.0);
    let mut phase = 0.0;
    for (state, c) in expansion.states.iter().zip(coeffs) {
        let u = match at {
            Anchor::Boundary => state.u_boundary,
            Anchor::Origin => state.u_origin,
            Anchor::Point(x) => state.value(x),
        };
        let cu = c * u;
        let k = state.kappa();
        let (p, m_plus) = moshinsky_reduced(distance, t, k)?;
        let (_, m_minus) = moshinsky_reduced(distance, t, -k.conj())?;
        phase = p;
        last = cu * m_plus + cu.conj() * m_minus;
        sum += last;
    }
    if let (Anchor::Boundary, Some(moments)) = (at, expansion.far_pole_remainder(label)) {
        let fastest = expansion.states.last().map_or(0.0, |s| s.pole.velocity_wavenumber());
        if fastest * t >= distance {
            sum += far_pole_term(moments, distance, t);
        }
    }
    let last_term_fraction = if sum.norm() > 0.0 { last.norm() / sum.norm() } else { 0.0 };
    Ok(Evaluation { amplitude: Amplitude { phase, reduced: sum }, last_term_fraction })
}

/// Reduced `-sum_j T_j I_j(d, t)` with
/// `I_j = (i/2pi) int k^j exp(ikd - ik^2 t) dk`.
///
/// `I_j = exp(i d^2/4t) I_0 p_j(d/2t)`, `p_0 = 1`,
/// `p_{j+1}(k) = k p_j(k) - (i/2t) p_j'(k)`.
fn far_pole_term(moments: &[Complex64], distance: f64, t: f64) -> Complex64 {
    let i0 = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4) / (2.0 * (std::f64::consts::PI * t).sqrt());
    let k0 = distance / (2.0 * t);
    let mut poly = vec![Complex64::new(1.0, 0.0)];
    let mut total = Complex64::new(0.0, 0.0);
    for moment in moments {
        let value = poly.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * k0 + c);
        total -= moment * value;
        let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
        for (p, c) in poly.iter().enumerate() {
            next[p + 1] += c;
            if p > 0 {
                next[p - 1] -= Complex64::new(0.0, 0.5 / t) * (p as f64) * c;
            }
        }
        poly = next;
    }
    total * i0
}

#[derive(Clone, Copy)]
enum Anchor {
    Boundary,
    Origin,
    Point(f64),
}

/// Two-particle exchange symmetry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetry {
    /// `(psi_a(x1) psi_b(x2) + psi_b(x1) psi_a(x2)) / sqrt 2`, or
    /// `psi_a(x1) psi_a(x2)` when both particles share one state
    Symmetric,
    /// `(psi_a(x1) psi_b(x2) - psi_b(x1) psi_a(x2)) / sqrt 2`
    Antisymmetric,
    /// `psi_a(x1) psi_a(x2)`
    Factorized,
}

/// Two-particle amplitude `Psi(x1, x2, t)`.
pub fn psi_two(expansion: &Expansion, x1: f64, x2: f64, t: f64, symmetry: Symmetry) -> Result<Evaluation> {
    let a1 = psi_single(expansion, Label::Alpha, x1, t)?;
    let a2 = psi_single(expansion, Label::Alpha, x2, t)?;
    let phase = a1.amplitude.phase + a2.amplitude.phase;
    let same = expansion.beta.is_none_or(|b| b == expansion.alpha);
    if symmetry == Symmetry::Factorized || (symmetry == Symmetry::Symmetric && same) {
        return Ok(Evaluation {
            amplitude: Amplitude { phase, reduced: a1.amplitude.reduced * a2.amplitude.reduced },
            last_term_fraction: a1.last_term_fraction.max(a2.last_term_fraction),
        });
    }
    check_entangled(expansion)?;
    let b1 = psi_single(expansion, Label::Beta, x1, t)?;
    let b2 = psi_single(expansion, Label::Beta, x2, t)?;
    let direct = a1.amplitude.reduced * b2.amplitude.reduced;
    let exchange = b1.amplitude.reduced * a2.amplitude.reduced;
    let sign = if symmetry == Symmetry::Symmetric { 1.0 } else { -1.0 };
    let reduced = (direct + sign * exchange) * std::f64::consts::FRAC_1_SQRT_2;
    let fraction = [a1, a2, b1, b2].iter().map(|e| e.last_term_fraction).fold(0.0, f64::max);
    Ok(Evaluation { amplitude: Amplitude { phase, reduced }, last_term_fraction: fraction })
}

fn check_entangled(expansion: &Expansion) -> Result<()> {
    match expansion.beta {
        Some(b) if b != expansion.alpha => Ok(()),
        _ => Err(Error::InvalidArgument("an antisymmetric state needs two different initial states".into())),
    }
}

/// Arrival time `(r - boundary)/(2 upsilon)` of a pole's wave front,
/// in units of `tau`.
pub fn peak_time(spec: &PotentialSpec, r: f64, pole: &ComplexPole, tau: f64) -> Result<f64> {
    let b = spec.boundary();
    if r < b {
        return Err(Error::InvalidArgument(format!("peak time needs r >= {b}, got {r}")));
    }
    Ok((r - b) / (2.0 * pole.velocity_wavenumber()) / tau)
}

/// Point spacing of one time-grid segment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

/// Segment `[start, end]` in lifetimes with `points` samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSegment {
    pub start: f64,
    pub end: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl GridSegment {
    pub fn linear(start: f64, end: f64, points: usize) -> Self {
        Self { start, end, points, spacing: Spacing::Linear }
    }

    pub fn log(start: f64, end: f64, points: usize) -> Self {
        Self { start, end, points, spacing: Spacing::Log }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start > 0.0 && self.end >= self.start && self.end <= MAX_LIFETIMES) || self.points < 2 {
            return Err(Error::InvalidArgument(format!(
                "time segment [{}, {}] with {} points must satisfy 0 < start <= end <= {MAX_LIFETIMES}, points >= 2",
                self.start, self.end, self.points
            )));
        }
        Ok(())
    }

    fn samples(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.points - 1;
        (0..=n).map(move |j| {
            let f = j as f64 / n as f64;
            match self.spacing {
                Spacing::Linear => self.start + f * (self.end - self.start),
                Spacing::Log => self.start * (self.end / self.start).powf(f),
            }
        })
    }
}

/// Where a density is sampled.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Positions {
    One(f64),
    Two(f64, f64),
}

/// `rho(t)` at fixed positions, with per-sample validity.
#[derive(Clone, Debug, PartialEq)]
pub struct DensitySeries {
    pub positions: Positions,
    pub symmetry: Option<Symmetry>,
    pub n_terms: usize,
    /// Lifetime unit used for `t_lifetimes`.
    pub lifetime: f64,
    pub times: Vec<f64>,
    pub density: Vec<f64>,
    /// False where a Moshinsky term overflowed; the density there is 0.
    pub valid: Vec<bool>,
    /// Samples whose last included term exceeded [`TRUNCATION_WARNING`].
    pub truncation_warnings: usize,
}

impl DensitySeries {
    pub fn lifetimes(&self) -> impl Iterator<Item = f64> + '_ {
        self.times.iter().map(move |t| t / self.lifetime)
    }

    /// Time (lifetimes) and value of the largest valid sample.
    pub fn global_max(&self) -> Option<(f64, f64)> {
        self.valid_points().max_by(|a, b| a.1.total_cmp(&b.1)).map(|(t, r)| (t / self.lifetime, r))
    }

    /// Interior local maxima `(t/tau, rho)` of the valid samples.
    pub fn local_maxima(&self) -> Vec<(f64, f64)> {
        let pts: Vec<(f64, f64)> = self.valid_points().collect();
        pts.windows(3)
            .filter(|w| w[1].1 > w[0].1 && w[1].1 >= w[2].1)
            .map(|w| (w[1].0 / self.lifetime, w[1].1))
            .collect()
    }

    fn valid_points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().zip(&self.density).zip(&self.valid).filter(|(_, v)| **v).map(|((t, r), _)| (*t, *r))
    }

    /// Table `t_abs,t_lifetimes,x1,x2,density,ln_density,valid_flag`;
    /// `x2` is empty for one particle.
    pub fn render_csv(&self) -> String {
        let (x1, x2) = match self.positions {
            Positions::One(x) => (x, None),
            Positions::Two(a, b) => (a, Some(b)),
        };
        let mut s = String::new();
        let _ = writeln!(s, "# density time series, natural units hbar = 2m = 1, tau = {:e}", self.lifetime);
        let _ = writeln!(s, "t_abs,t_lifetimes,x1,x2,density,ln_density,valid_flag");
        for ((t, r), v) in self.times.iter().zip(&self.density).zip(&self.valid) {
            let x2 = x2.map(|x| format!("{x:e}")).unwrap_or_default();
            let _ =
                writeln!(s, "{:e},{:e},{:e},{},{:e},{:e},{}", t, t / self.lifetime, x1, x2, r, r.ln(), u8::from(*v));
        }
        s
    }
}

/// Samples `rho(t)` over a piecewise time grid (in lifetimes).
///
/// `symmetry` must be given exactly when two positions are given.
pub fn density_series(
    expansion: &Expansion,
    positions: Positions,
    symmetry: Option<Symmetry>,
    grid: &[GridSegment],
) -> Result<DensitySeries> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty time grid".into()));
    }
    for seg in grid {
        seg.validate()?;
    }
    let tau = expansion.lifetime();
    let mut times: Vec<f64> = grid.iter().flat_map(|s| s.samples().collect::<Vec<_>>()).map(|f| f * tau).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let eval = |t: f64| -> Result<Evaluation> {
        match (positions, symmetry) {
            (Positions::One(x), None) => psi_single(expansion, Label::Alpha, x, t),
            (Positions::Two(x1, x2), Some(sym)) => psi_two(expansion, x1, x2, t, sym),
            _ => Err(Error::InvalidArgument("one position needs no symmetry, two positions need one".into())),
        }
    };
    let evals: Vec<Option<Evaluation>> = times
        .par_iter()
        .map(|&t| match eval(t) {
            Ok(e) => Ok(Some(e)),
            Err(Error::Overflow { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let density = evals.iter().map(|e| e.map_or(0.0, |e| e.amplitude.density())).collect();
    let valid = evals.iter().map(Option::is_some).collect();
    let truncation_warnings = evals.iter().flatten().filter(|e| e.possibly_truncated()).count();
    Ok(DensitySeries {
        positions,
        symmetry,
        n_terms: expansion.n_terms(),
        lifetime: tau,
        times,
        density,
        valid,
        truncation_warnings,
    })
}

/// Least-squares slope of `ln rho` against `ln t` over `window` (lifetimes).
///
/// The window must span at least one decade.
pub fn tail_exponent(series: &DensitySeries, window: [f64; 2]) -> Result<f64> {
    let [t0, t1] = window;
    let decades = if t0 > 0.0 && t1 > t0 { (t1 / t0).log10() } else { 0.0 };
    if decades < 1.0 {
        return Err(Error::WindowTooShort { decades, required: 1.0 });
    }
    let pts: Vec<(f64, f64)> = series
        .valid_points()
        .map(|(t, r)| (t / series.lifetime, r))
        .filter(|(t, _)| *t >= t0 && *t <= t1)
        .map(|(t, r)| (t.ln(), r.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InvalidArgument(format!("only {} valid samples in the tail window", pts.len())));
    }
    Ok(slope(&pts))
}

/// Power-law tail window `[start, end]` (lifetimes) after the global
/// maximum.
///
/// A line in `(ln t, ln rho)` is fitted to the last decade of valid
/// samples; the window starts after the last sample whose density departs
/// from the fit by more than 5%. The fit is then redone on the window and
/// the search repeated once. `None` when fewer than three samples remain.
pub fn detect_tail_window(series: &DensitySeries) -> Option<[f64; 2]> {
    let (t_max, _) = series.global_max()?;
    let raw: Vec<(f64, f64)> =
        series.valid_points().map(|(t, r)| (t / series.lifetime, r)).filter(|(t, r)| *t > t_max && *r > 0.0).collect();
    let pts: Vec<(f64, f64)> = raw.iter().map(|(t, r)| (t.ln(), r.ln())).collect();
    let mut first = 0;
    let mut start = pts.last()?.0 - std::f64::consts::LN_10;
    for _ in 0..2 {
        let fit: Vec<(f64, f64)> = pts.iter().copied().filter(|p| p.0 >= start).collect();
        if fit.len() < 3 {
            return None;
        }
        let m = slope(&fit);
        let (mx, my) = mean(&fit);
        let off = |p: &(f64, f64)| (p.1 - (my + m * (p.0 - mx))).abs() > 1.05f64.ln();
        first = pts.iter().rposition(off).map_or(0, |j| j + 1);
        if pts.len() - first < 3 {
            return None;
        }
        start = pts[first].0;
    }
    Some([raw[first].0, raw[raw.len() - 1].0])
}

/// Time (lifetimes) and value of the largest valid sample in
/// `[center (1 - tolerance), center (1 + tolerance)]`, if it is not on the
/// edge of that window.
pub fn peak_near(series: &DensitySeries, center: f64, tolerance: f64) -> Option<(f64, f64)> {
    let (lo, hi) = (center * (1.0 - tolerance), center * (1.0 + tolerance));
    let inside: Vec<(f64, f64)> =
        series.valid_points().map(|(t, r)| (t / series.lifetime, r)).filter(|(t, _)| *t >= lo && *t <= hi).collect();
    let j = (0..inside.len()).max_by(|a, b| inside[*a].1.total_cmp(&inside[*b].1))?;
    (j > 0 && j + 1 < inside.len()).then_some(inside[j])
}

/// Peaks present in `with` but not in `without` near each `predicted`
/// time: an interior maximum of `with` within `tolerance` whose density
/// exceeds `without` there by a factor of at least `e`.
///
/// Both series must share one time grid.
pub fn extra_peaks(
    with: &DensitySeries,
    without: &DensitySeries,
    predicted: &[f64],
    tolerance: f64,
) -> Result<Vec<Option<f64>>> {
    check_shared_grid(with, without)?;
    Ok(predicted
        .iter()
        .map(|&c| {
            let (t, r) = peak_near(with, c, tolerance)?;
            let j = with.lifetimes().position(|x| x == t)?;
            (without.valid[j] && r >= std::f64::consts::E * without.density[j]).then_some(t)
        })
        .collect())
}

/// Largest `|a - b| / b` over shared valid samples with `t` (lifetimes) in
/// `window`.
pub fn max_relative_difference(a: &DensitySeries, b: &DensitySeries, window: [f64; 2]) -> Result<f64> {
    check_shared_grid(a, b)?;
    let mut worst: Option<f64> = None;
    for (j, t) in b.lifetimes().enumerate() {
        if t >= window[0] && t <= window[1] && a.valid[j] && b.valid[j] && b.density[j] > 0.0 {
            let d = (a.density[j] - b.density[j]).abs() / b.density[j];
            worst = Some(worst.map_or(d, |w: f64| w.max(d)));
        }
    }
    worst.ok_or_else(|| Error::InvalidArgument(format!("no valid samples in [{}, {}]", window[0], window[1])))
}

/// Same sample times in lifetimes, up to rounding in the lifetime unit.
fn check_shared_grid(a: &DensitySeries, b: &DensitySeries) -> Result<()> {
    let same = a.times.len() == b.times.len()
        && a.lifetimes().zip(b.lifetimes()).all(|(x, y)| (x - y).abs() <= 1e-9 * x.abs());
    if same {
        Ok(())
    } else {
        Err(Error::InvalidArgument("comparison needs a shared time grid".into()))
    }
}

fn mean(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n)
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let (mx, my) = mean(pts);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poles::find_poles;

    fn ds_expansion(n: usize, beta: bool) -> Expansion {
        let spec = PotentialSpec::delta_shell(100.0, 1.0);
        let beta = beta.then(|| spec.box_state(2).unwrap());
        Expansion::build(find_poles(&spec, n).unwrap(), spec.box_state(1).unwrap(), beta).unwrap()
    }

    #[test]
    fn peak_time_examples() {
        let spec = PotentialSpec::delta_shell(100.0, 1.0);
        let p = ComplexPole::new(2, Complex64::new(6.2213, -0.004));
        assert!((peak_time(&spec, 15000.0, &p, 82.058).unwrap() - 14.69).abs() < 0.01);
        assert_eq!(peak_time(&spec, 1.0, &p, 82.058).unwrap(), 0.0);
        assert!(peak_time(&spec, 0.5, &p, 82.058).is_err());
    }

    #[test]
    fn antisymmetric_vanishes_on_diagonal() {
        let exp = ds_expansion(20, true);
        let e = psi_two(&exp, 50.0, 50.0, 30.0, Symmetry::Antisymmetric).unwrap();
        assert_eq!(e.amplitude.density(), 0.0);
    }

    #[test]
    fn symmetry_preconditions() {
        let exp = ds_expansion(5, false);
        assert!(psi_two(&exp, 2.0, 3.0, 1.0, Symmetry::Antisymmetric).is_err());
        let shared = psi_two(&exp, 2.0, 3.0, 1.0, Symmetry::Symmetric).unwrap();
        let product = psi_two(&exp, 2.0, 3.0, 1.0, Symmetry::Factorized).unwrap();
        assert_eq!(shared.amplitude.density(), product.amplitude.density());
        assert!(psi_single(&exp, Label::Alpha, -1.0, 1.0).is_err());
        assert!(psi_single(&exp, Label::Alpha, 2.0, -1.0).is_err());
    }

    #[test]
    fn initial_time_returns_initial_state() {
        let exp = ds_expansion(5, false);
        let e = psi_single(&exp, Label::Alpha, 0.3, 0.0).unwrap();
        assert_eq!(e.amplitude.reduced.re, exp.alpha.value(0.3));
        assert_eq!(psi_single(&exp, Label::Alpha, 3.0, 0.0).unwrap().amplitude.density(), 0.0);
    }

    #[test]
    fn exchange_symmetry() {
        let exp = ds_expansion(30, true);
        for sym in [Symmetry::Symmetric, Symmetry::Antisymmetric] {
            let a = psi_two(&exp, 40.0, 70.0, 10.0, sym).unwrap().amplitude.value();
            let b = psi_two(&exp, 70.0, 40.0, 10.0, sym).unwrap().amplitude.value();
            let sign = if sym == Symmetry::Symmetric { 1.0 } else { -1.0 };
            assert!((a - sign * b).norm() <= 1e-12 * a.norm());
        }
    }

    #[test]
    fn tail_window_must_span_a_decade() {
        let exp = ds_expansion(5, false);
        let s = density_series(&exp, Positions::One(2.0), None, &[GridSegment::log(1.0, 5.0, 10)]).unwrap();
        assert!(matches!(tail_exponent(&s, [1.0, 5.0]), Err(Error::WindowTooShort { .. })));
    }

    #[test]
    fn grid_validation() {
        let exp = ds_expansion(3, false);
        for seg in [GridSegment::linear(0.0, 1.0, 5), GridSegment::linear(1.0, 2e4, 5), GridSegment::log(1.0, 2.0, 1)] {
            assert!(density_series(&exp, Positions::One(2.0), None, &[seg]).is_err());
        }
        assert!(density_series(&exp, Positions::Two(2.0, 3.0), None, &[GridSegment::linear(1.0, 2.0, 3)]).is_err());
    }

    #[test]
    fn far_pole_expansion_matches_moshinsky() {
        // a single distant pole: M = -sum_j kappa^-(j+1) I_j
        let k = Complex64::new(900.0, -1.5);
        for (d, t) in [(50.0, 400.0), (3000.0, 2.0e4), (0.0, 10.0)] {
            let moments: Vec<Complex64> = (0..6).map(|j| k.powi(-(j + 1))).collect();
            let (_, m) = moshinsky_reduced(d, t, k).unwrap();
            let approx = far_pole_term(&moments, d, t);
            assert!((m - approx).norm() < 1e-10 * m.norm(), "{d} {t}: {m} vs {approx}");
        }
    }

    fn synthetic(times: &[f64], rho: impl Fn(f64) -> f64) -> DensitySeries {
        DensitySeries {
            positions: Positions::One(2.0),
            symmetry: None,
            n_terms: 1,
            lifetime: 1.0,
            times: times.to_vec(),
            density: times.iter().map(|t| rho(*t)).collect(),
            valid: vec![true; times.len()],
            truncation_warnings: 0,
        }
    }

    #[test]
    fn tail_window_starts_after_the_exponential() {
        let times: Vec<f64> = (0..400).map(|j| 0.5 * 1e4f64.powf(j as f64 / 399.0)).collect();
        let s = synthetic(&times, |t| (-t).exp() + 1e-3 * t.powi(-3));
        let [start, end] = detect_tail_window(&s).unwrap();
        assert!(start > 5.0 && start < 20.0, "{start}");
        assert_eq!(end, *times.last().unwrap());
        assert!((tail_exponent(&s, [start, end]).unwrap() + 3.0).abs() < 0.01);
    }

    #[test]
    fn extra_peak_needs_reference_gap() {
        let times: Vec<f64> = (0..2001).map(|j| j as f64 * 0.01).collect();
        let base = synthetic(&times, |t| (-t).exp());
        let bump = synthetic(&times, |t| (-t).exp() + 10.0 * (-(t - 8.0) * (t - 8.0) * 50.0).exp());
        let found = extra_peaks(&bump, &base, &[8.0, 15.0], 0.05).unwrap();
        assert!((found[0].unwrap() - 8.0).abs() < 1e-9);
        assert_eq!(found[1], None);
        assert!(max_relative_difference(&bump, &base, [0.0, 5.0]).unwrap() < 1e-10);
    }

    #[test]
    fn slope_of_exact_power_law() {
        let pts: Vec<(f64, f64)> = (1..20).map(|j| (j as f64, -3.0 * j as f64 + 2.0)).collect();
        assert!((slope(&pts) + 3.0).abs() < 1e-12);
    }
}
