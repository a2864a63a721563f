//! Locating, refining and validating resonance poles.
//!
//! Poles `kappa_n = v_n - i g_n` are zeros of [`PotentialSpec::pole_residual`]
//! in the fourth quadrant. Only those are stored; the third-quadrant partners
//! are `-conj(kappa_n)`.
//!
//! A pole set is accepted only if an argument-principle count over a
//! rectangle enclosing it matches the number of poles found.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::PotentialSpec;

/// Newton step tolerance, relative to `max(1, |kappa|)`.
pub const STEP_TOL: f64 = 1e-12;
/// Residual tolerance, relative to [`PotentialSpec::scale`].
pub const RESIDUAL_TOL: f64 = 1e-10;
const MAX_NEWTON: usize = 100;
/// Poles closer than this are treated as a failure rather than a degeneracy.
const MIN_SEPARATION: f64 = 1e-6;

/// One resonance pole `kappa = v - i g` with `E = kappa^2 = e - i Gamma/2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexPole {
    /// 1-based position in the ordered pole set; 0 before placement.
    pub index: usize,
    pub kappa: Complex64,
}

impl ComplexPole {
    pub fn new(index: usize, kappa: Complex64) -> Self {
        Self { index, kappa }
    }

    /// `v = Re kappa`
    pub fn velocity_wavenumber(&self) -> f64 {
        self.kappa.re
    }

    /// `g = -Im kappa`
    pub fn decay_wavenumber(&self) -> f64 {
        -self.kappa.im
    }

    /// Resonance energy `Re kappa^2 = v^2 - g^2`.
    pub fn energy(&self) -> f64 {
        let (v, g) = (self.kappa.re, -self.kappa.im);
        v * v - g * g
    }

    /// Width `Gamma = -2 Im kappa^2 = 4 v g`.
    pub fn width(&self) -> f64 {
        4.0 * self.kappa.re * (-self.kappa.im)
    }

    pub fn lifetime(&self) -> f64 {
        1.0 / self.width()
    }

    /// The third-quadrant partner `-conj(kappa)`.
    pub fn mirror(&self) -> Complex64 {
        -self.kappa.conj()
    }
}

/// Axis-aligned rectangle in the complex `k` plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub re: [f64; 2],
    pub im: [f64; 2],
}

impl Rect {
    pub fn new(re0: f64, re1: f64, im0: f64, im1: f64) -> Self {
        Self { re: [re0, re1], im: [im0, im1] }
    }

    pub fn contains(&self, k: Complex64) -> bool {
        k.re > self.re[0] && k.re < self.re[1] && k.im > self.im[0] && k.im < self.im[1]
    }

    fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.re[0] + self.re[1]), 0.5 * (self.im[0] + self.im[1]))
    }

    fn diameter(&self) -> f64 {
        (self.re[1] - self.re[0]).hypot(self.im[1] - self.im[0])
    }

    /// Splits along the longer side at `frac` of its length.
    fn split(&self, frac: f64) -> (Rect, Rect) {
        let (w, h) = (self.re[1] - self.re[0], self.im[1] - self.im[0]);
        if w >= h {
            let m = self.re[0] + frac * w;
            (Rect::new(self.re[0], m, self.im[0], self.im[1]), Rect::new(m, self.re[1], self.im[0], self.im[1]))
        } else {
            let m = self.im[0] + frac * h;
            (Rect::new(self.re[0], self.re[1], self.im[0], m), Rect::new(self.re[0], self.re[1], m, self.im[1]))
        }
    }
}

/// Ordered, validated fourth-quadrant poles of one potential.
#[derive(Clone, Debug, PartialEq)]
pub struct PoleSet {
    pub spec: PotentialSpec,
    pub poles: Vec<ComplexPole>,
    /// Rectangle whose argument-principle count equals `poles.len()`.
    pub contour: Rect,
    /// Double barrier only: poles with `v^2 < V`.
    pub sub_barrier: Option<usize>,
}

impl PoleSet {
    pub fn len(&self) -> usize {
        self.poles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poles.is_empty()
    }

    /// Lifetime of the system: the longest pole lifetime.
    pub fn lifetime(&self) -> f64 {
        self.poles.iter().map(ComplexPole::lifetime).fold(0.0, f64::max)
    }

    /// The first `n` poles. The contour is kept, so the result is not
    /// re-validated as a complete set.
    pub fn truncated(&self, n: usize) -> PoleSet {
        let mut out = self.clone();
        out.poles.truncate(n);
        out
    }
}

/// Accepted `|residual|` at `k`: `RESIDUAL_TOL * scale`, or the rounding
/// floor `|f'(k)| * 64 eps |k|` when that is larger (high poles).
pub fn residual_tolerance(spec: &PotentialSpec, k: Complex64) -> f64 {
    let floor = 64.0 * f64::EPSILON * k.norm() * spec.pole_residual_derivative(k).norm();
    (RESIDUAL_TOL * spec.scale()).max(floor)
}

/// Newton refinement of a single pole.
///
/// Converges when `|dk| < tol max(1, |k|)` and the residual is below
/// [`residual_tolerance`]. The returned pole has `index == 0`.
pub fn refine_pole(spec: &PotentialSpec, seed: Complex64, tol: f64) -> Result<ComplexPole> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let mut k = seed;
    for _ in 0..MAX_NEWTON {
        let f = spec.pole_residual(k);
        let df = spec.pole_residual_derivative(k);
        if df.norm() == 0.0 || !f.is_finite() {
            break;
        }
        let step = f / df;
        k -= step;
        if !k.is_finite() {
            break;
        }
        if step.norm() < tol * k.norm().max(1.0) && spec.pole_residual(k).norm() < residual_tolerance(spec, k) {
            if k.re <= 0.0 || k.im >= 0.0 {
                return Err(Error::WrongQuadrant { kappa: k });
            }
            return Ok(ComplexPole::new(0, k));
        }
    }
    Err(Error::NoConvergence { seed, iterations: MAX_NEWTON })
}

/// Net number of zeros of `f` inside `rect`, by tracking `arg f` around
/// its boundary. `step` is the initial sampling distance along each edge.
pub fn winding_number<F>(f: &F, rect: &Rect, step: f64) -> Result<i64>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    let corners = [
        Complex64::new(rect.re[0], rect.im[0]),
        Complex64::new(rect.re[1], rect.im[0]),
        Complex64::new(rect.re[1], rect.im[1]),
        Complex64::new(rect.re[0], rect.im[1]),
    ];
    let mut total = 0.0;
    for e in 0..4 {
        let (a, b) = (corners[e], corners[(e + 1) % 4]);
        let pieces = ((b - a).norm() / step).ceil().max(1.0) as usize;
        let points: Vec<Complex64> = (0..=pieces).map(|j| a + (b - a) * (j as f64 / pieces as f64)).collect();
        let phases: Vec<Result<f64>> = points
            .par_windows(2)
            .map(|w| {
                let (fa, fb) = (sample(f, w[0])?, sample(f, w[1])?);
                segment_phase(f, w[0], fa, w[1], fb, 60)
            })
            .collect();
        for p in phases {
            total += p?;
        }
    }
    let turns = total / (2.0 * PI);
    let rounded = turns.round();
    if (turns - rounded).abs() > 0.05 {
        return Err(Error::ZeroOnContour { at: rect.center() });
    }
    Ok(rounded as i64)
}

fn sample<F: Fn(Complex64) -> Complex64>(f: &F, k: Complex64) -> Result<Complex64> {
    let v = f(k);
    if v.norm() == 0.0 || !v.is_finite() {
        return Err(Error::ZeroOnContour { at: k });
    }
    Ok(v)
}

fn segment_phase<F: Fn(Complex64) -> Complex64>(
    f: &F,
    a: Complex64,
    fa: Complex64,
    b: Complex64,
    fb: Complex64,
    depth: usize,
) -> Result<f64> {
    let d = (fb / fa).arg();
    if d.abs() < 0.4 {
        return Ok(d);
    }
    if depth == 0 {
        return Err(Error::ZeroOnContour { at: 0.5 * (a + b) });
    }
    let m = 0.5 * (a + b);
    let fm = sample(f, m)?;
    Ok(segment_phase(f, a, fa, m, fm, depth - 1)? + segment_phase(f, m, fm, b, fb, depth - 1)?)
}

fn contour_step(spec: &PotentialSpec) -> f64 {
    // exp(2ika) turns by 2a per unit of Re k on the lower edge
    0.1 / spec.boundary()
}

/// Refined delta-shell seed: fixed point of
/// `k = (n pi - (i/2) ln(1 - 2ik/lambda)) / a`, started from the closed-form seed.
fn delta_shell_seed(spec: &PotentialSpec, n: usize) -> Result<Complex64> {
    let PotentialSpec::DeltaShell { strength, radius } = *spec else { unreachable!("delta shell only") };
    let i = Complex64::new(0.0, 1.0);
    let mut k = spec.pole_seed(n)?;
    for _ in 0..200 {
        let next = (n as f64 * PI - 0.5 * i * (1.0 - 2.0 * i * k / strength).ln()) / radius;
        let done = (next - k).norm() < 1e-13 * next.norm();
        k = next;
        if done {
            break;
        }
    }
    Ok(k)
}

/// Finds the `n` fourth-quadrant poles with smallest real part.
pub fn find_poles(spec: &PotentialSpec, n: usize) -> Result<PoleSet> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one pole".into()));
    }
    let set = match spec {
        PotentialSpec::DeltaShell { .. } => match delta_shell_ladder(spec, n) {
            Ok(set) => set,
            // rescan the strip from scratch
            Err(Error::MissedPole { .. }) | Err(Error::DuplicatePole { .. }) => scan_poles(spec, n)?,
            Err(e) => return Err(e),
        },
        PotentialSpec::DoubleBarrier { .. } => scan_poles(spec, n)?,
    };
    validate_pole_set(&set)?;
    Ok(set)
}

fn delta_shell_ladder(spec: &PotentialSpec, n: usize) -> Result<PoleSet> {
    let refined: Vec<Result<ComplexPole>> =
        (1..=n + 1).into_par_iter().map(|j| refine_pole(spec, delta_shell_seed(spec, j)?, STEP_TOL)).collect();
    let mut kappas = refined.into_iter().map(|r| r.map(|p| p.kappa)).collect::<Result<Vec<_>>>()?;
    kappas.sort_by(|a, b| a.re.total_cmp(&b.re));
    check_separation(&kappas)?;
    let edge = 0.5 * (kappas[n - 1].re + kappas[n].re);
    kappas.truncate(n);
    let depth = kappas.iter().map(|k| -k.im).fold(0.0, f64::max) * 1.5 + 0.5;
    let contour = Rect::new(0.5 * kappas[0].re, edge, -depth, 0.5);
    Ok(assemble(spec, kappas, contour))
}

fn assemble(spec: &PotentialSpec, kappas: Vec<Complex64>, contour: Rect) -> PoleSet {
    let poles: Vec<ComplexPole> = kappas.into_iter().enumerate().map(|(j, k)| ComplexPole::new(j + 1, k)).collect();
    let sub_barrier = match *spec {
        PotentialSpec::DoubleBarrier { height, .. } => {
            Some(poles.iter().filter(|p| p.kappa.re < height.sqrt()).count())
        }
        PotentialSpec::DeltaShell { .. } => None,
    };
    PoleSet { spec: *spec, poles, contour, sub_barrier }
}

fn check_separation(sorted: &[Complex64]) -> Result<()> {
    // sorted by real part: close pairs sit within a few places of each other
    for j in 0..sorted.len() {
        for l in j + 1..(j + 4).min(sorted.len()) {
            let sep = (sorted[j] - sorted[l]).norm();
            if sep < MIN_SEPARATION {
                return Err(Error::DuplicatePole { first: j + 1, second: l + 1, separation: sep });
            }
        }
    }
    Ok(())
}

/// General search: grow a rectangle until it holds more than `n` poles,
/// then bisect it by argument-principle counts and polish each isolated
/// pole with Newton.
pub fn scan_poles(spec: &PotentialSpec, n: usize) -> Result<PoleSet> {
    let f = |k: Complex64| spec.pole_residual(k);
    let step = contour_step(spec);
    let l = spec.boundary();
    let left = 0.01 * PI / l;
    let top = 0.5;
    let mut right = (n as f64 + 2.0) * PI / l;
    let mut depth = 2.0;
    let mut count;
    loop {
        count = winding_number(&f, &Rect::new(left, right, -depth, top), step)?;
        if count as usize > n {
            let deeper = winding_number(&f, &Rect::new(left, right, -4.0 * depth, -depth), step)?;
            if deeper == 0 {
                break;
            }
            depth *= 4.0;
        } else {
            // high poles sink logarithmically, so deepen as well
            right *= 1.5;
            depth *= 1.25;
        }
        if right > 1e6 || depth > 200.0 {
            return Err(Error::MissedPole { expected: n as i64, found: count.max(0) as usize });
        }
    }
    let outer = Rect::new(left, right, -depth, top);
    let mut found = Vec::new();
    locate(spec, &f, outer, count, step, &mut found)?;
    found.sort_by(|a, b| a.re.total_cmp(&b.re));
    if found.len() != count as usize {
        return Err(Error::MissedPole { expected: count, found: found.len() });
    }
    check_separation(&found)?;
    let edge = 0.5 * (found[n - 1].re + found[n].re);
    found.truncate(n);
    Ok(assemble(spec, found, Rect::new(left, edge, -depth, top)))
}

fn locate<F>(spec: &PotentialSpec, f: &F, rect: Rect, count: i64, step: f64, out: &mut Vec<Complex64>) -> Result<()>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    if count <= 0 {
        return Ok(());
    }
    if count == 1 && rect.diameter() < 1.0 {
        if let Ok(p) = refine_pole(spec, rect.center(), STEP_TOL) {
            if rect.contains(p.kappa) {
                out.push(p.kappa);
                return Ok(());
            }
        }
    }
    if rect.diameter() < 1e-9 {
        return Err(Error::MissedPole { expected: count, found: 0 });
    }
    let fine = step.min(rect.diameter() / 8.0);
    for frac in [0.5137, 0.4711, 0.5523, 0.3917] {
        let (a, b) = rect.split(frac);
        let (ca, cb) = match (winding_number(f, &a, fine), winding_number(f, &b, fine)) {
            (Ok(ca), Ok(cb)) => (ca, cb),
            _ => continue,
        };
        if ca + cb != count {
            continue;
        }
        locate(spec, f, a, ca, step, out)?;
        locate(spec, f, b, cb, step, out)?;
        return Ok(());
    }
    Err(Error::MissedPole { expected: count, found: 0 })
}

/// Checks quadrant, residual, ordering, separation and the
/// argument-principle count over `set.contour`.
pub fn validate_pole_set(set: &PoleSet) -> Result<()> {
    for (j, p) in set.poles.iter().enumerate() {
        if p.index != j + 1 {
            return Err(Error::InvalidArgument(format!("pole {} stored at position {}", p.index, j + 1)));
        }
        if p.kappa.re <= 0.0 || p.kappa.im >= 0.0 {
            return Err(Error::WrongQuadrant { kappa: p.kappa });
        }
        let r = set.spec.pole_residual(p.kappa).norm();
        if !(r < residual_tolerance(&set.spec, p.kappa)) {
            return Err(Error::InvalidPole { kappa: p.kappa, residual: r });
        }
    }
    if set.poles.windows(2).any(|w| !(w[0].kappa.re < w[1].kappa.re)) {
        return Err(Error::InvalidArgument("poles are not strictly ordered by Re kappa".into()));
    }
    let kappas: Vec<Complex64> = set.poles.iter().map(|p| p.kappa).collect();
    check_separation(&kappas)?;
    let f = |k: Complex64| set.spec.pole_residual(k);
    let count = winding_number(&f, &set.contour, contour_step(&set.spec))?;
    if count != set.poles.len() as i64 {
        return Err(Error::MissedPole { expected: count, found: set.poles.len() });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// cache files

const CACHE_HEADER: &str = "n,re_k,im_k,residual_abs";

pub fn cache_path(dir: &Path, spec: &PotentialSpec, n: usize) -> PathBuf {
    dir.join(format!("poles_{}_n{}.csv", spec.fingerprint(), n))
}

/// Serializes a pole set: comment lines carrying the spec and its
/// fingerprint, then `n,re_k,im_k,residual_abs` rows.
pub fn render_cache(set: &PoleSet) -> String {
    let mut s = String::new();
    let spec_json = serde_json::to_string(&set.spec).expect("spec serializes");
    let _ = writeln!(s, "# resonance poles, natural units hbar = 2m = 1");
    let _ = writeln!(s, "# spec: {spec_json}");
    let _ = writeln!(s, "# fingerprint: {}", set.spec.fingerprint());
    let c = set.contour;
    let _ = writeln!(s, "# contour: {:e},{:e},{:e},{:e}", c.re[0], c.re[1], c.im[0], c.im[1]);
    if let Some(sub) = set.sub_barrier {
        let _ = writeln!(s, "# sub_barrier: {sub}");
    }
    let _ = writeln!(s, "{CACHE_HEADER}");
    for p in &set.poles {
        let r = set.spec.pole_residual(p.kappa).norm();
        let _ = writeln!(s, "{},{:e},{:e},{:e}", p.index, p.kappa.re, p.kappa.im, r);
    }
    s
}

pub fn write_cache(set: &PoleSet, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, render_cache(set))?;
    Ok(())
}

/// Parses a cache file written by [`render_cache`] and re-validates it.
pub fn parse_cache(text: &str, expected: &PotentialSpec) -> Result<PoleSet> {
    let bad = |m: &str| Error::Cache(m.to_string());
    let mut spec: Option<PotentialSpec> = None;
    let mut fingerprint = None;
    let mut contour = None;
    let mut kappas = Vec::new();
    let mut seen_header = false;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("# spec: ") {
            spec = Some(serde_json::from_str(rest).map_err(|e| Error::Cache(format!("bad spec line: {e}")))?);
        } else if let Some(rest) = line.strip_prefix("# fingerprint: ") {
            fingerprint = Some(rest.trim().to_string());
        } else if let Some(rest) = line.strip_prefix("# contour: ") {
            let v: Vec<f64> = rest
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad("bad contour line"))?;
            if v.len() != 4 {
                return Err(bad("contour needs four numbers"));
            }
            contour = Some(Rect::new(v[0], v[1], v[2], v[3]));
        } else if line.starts_with('#') || line.trim().is_empty() {
            continue;
        } else if line.trim() == CACHE_HEADER {
            seen_header = true;
        } else {
            if !seen_header {
                return Err(bad("missing column header"));
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 4 {
                return Err(Error::Cache(format!("expected 4 columns, got {}", cols.len())));
            }
            let n: usize = cols[0].trim().parse().map_err(|_| bad("bad pole index"))?;
            if n != kappas.len() + 1 {
                return Err(bad("pole indices must run 1..N"));
            }
            let re: f64 = cols[1].trim().parse().map_err(|_| bad("bad re_k"))?;
            let im: f64 = cols[2].trim().parse().map_err(|_| bad("bad im_k"))?;
            kappas.push(Complex64::new(re, im));
        }
    }
    let spec = spec.ok_or_else(|| bad("missing spec line"))?;
    let fingerprint = fingerprint.ok_or_else(|| bad("missing fingerprint line"))?;
    if fingerprint != spec.fingerprint() || spec != *expected {
        return Err(bad("cache belongs to a different potential"));
    }
    let contour = contour.ok_or_else(|| bad("missing contour line"))?;
    if kappas.is_empty() {
        return Err(bad("no poles"));
    }
    let set = assemble(&spec, kappas, contour);
    validate_pole_set(&set)?;
    Ok(set)
}

pub fn read_cache(path: &Path, expected: &PotentialSpec) -> Result<PoleSet> {
    parse_cache(&fs::read_to_string(path)?, expected)
}

/// Loads `n` poles from `cache_dir` when a valid cache exists, otherwise
/// solves and (if a directory is given) writes the cache.
pub fn load_or_find(spec: &PotentialSpec, n: usize, cache_dir: Option<&Path>) -> Result<PoleSet> {
    if let Some(dir) = cache_dir {
        let path = cache_path(dir, spec, n);
        if path.exists() {
            return read_cache(&path, spec);
        }
        let set = find_poles(spec, n)?;
        write_cache(&set, &path)?;
        return Ok(set);
    }
    find_poles(spec, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn width_identity() {
        let p = ComplexPole::new(1, Complex64::new(3.1, -0.002));
        let e2 = p.kappa * p.kappa;
        assert!((p.width() + 2.0 * e2.im).abs() < 1e-15);
        assert!((p.energy() - e2.re).abs() < 1e-14);
    }

    #[test]
    fn refine_rejects_bad_tolerance() {
        let spec = PotentialSpec::delta_shell(100.0, 1.0);
        assert!(refine_pole(&spec, Complex64::new(3.1, -0.001), 0.0).is_err());
    }

    #[test]
    fn refine_reports_wrong_quadrant() {
        // k = 0 is a zero of the delta-shell residual but not a resonance
        let spec = PotentialSpec::delta_shell(100.0, 1.0);
        match refine_pole(&spec, Complex64::new(1e-3, 1e-3), STEP_TOL) {
            Err(Error::WrongQuadrant { .. }) => {}
            other => panic!("expected WrongQuadrant, got {other:?}"),
        }
    }

    #[test]
    fn winding_counts_polynomial_roots() {
        let f = |k: Complex64| (k - Complex64::new(1.0, -0.5)) * (k - Complex64::new(2.0, -0.1)) * (k - 5.0);
        let n = winding_number(&f, &Rect::new(0.0, 3.0, -1.0, 1.0), 0.1).unwrap();
        assert_eq!(n, 2);
    }

    #[test]
    fn single_pole_set_lifetime() {
        let spec = PotentialSpec::delta_shell(100.0, 1.0);
        let set = find_poles(&spec, 1).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.lifetime(), set.poles[0].lifetime());
    }

    #[test]
    fn cache_rejects_other_spec() {
        let spec = PotentialSpec::delta_shell(100.0, 1.0);
        let set = find_poles(&spec, 3).unwrap();
        let text = render_cache(&set);
        assert!(parse_cache(&text, &PotentialSpec::delta_shell(50.0, 1.0)).is_err());
        let back = parse_cache(&text, &spec).unwrap();
        assert_eq!(back, set);
    }

    #[test]
    fn cache_rejects_tampered_pole() {
        let spec = PotentialSpec::delta_shell(100.0, 1.0);
        let set = find_poles(&spec, 2).unwrap();
        let text = render_cache(&set);
        let row = format!("1,{:e},", set.poles[0].kappa.re);
        let tampered = text.replace(&row, &format!("1,{:e},", set.poles[0].kappa.re + 1e-3));
        assert!(parse_cache(&tampered, &spec).is_err());
    }
}
