//! Crank-Nicolson integration of the time-dependent Schrodinger equation
//! `i dpsi/dt = -psi'' + V psi` on a uniform grid.
//!
//! The delta shell becomes a single node carrying `lambda / h`; the node
//! must sit exactly on the shell. Double-barrier potentials are sampled at
//! the nodes, with half height on a node that falls on a barrier edge.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{InitialState, PotentialSpec};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Density in the outermost absorbing nodes, relative to the peak density,
/// above which the grid counts as too small.
pub const REFLECTION_LIMIT: f64 = 1e-6;

/// Wave function on `x_j = origin + j h`, `j = 0..len`, with `psi = 0`
/// pinned at both ends.
#[derive(Clone, Debug)]
pub struct GridState {
    pub origin: f64,
    pub h: f64,
    pub psi: Vec<Complex64>,
    pub t: f64,
    pub absorber_width: f64,
}

impl GridState {
    pub fn x(&self, j: usize) -> f64 {
        self.origin + j as f64 * self.h
    }

    /// Trapezoid norm (end values are zero).
    pub fn norm(&self) -> f64 {
        self.h * self.psi.iter().map(|p| p.norm_sqr()).sum::<f64>()
    }

    /// Wave function at `x`, interpolated by a cubic through the four
    /// nearest nodes.
    pub fn value(&self, x: f64) -> Result<Complex64> {
        let s = (x - self.origin) / self.h;
        let n = self.psi.len();
        if !(s >= 0.0) || s > (n - 1) as f64 {
            return Err(Error::InvalidArgument(format!("x = {x} lies outside the grid")));
        }
        let j = s.round();
        if (s - j).abs() < 1e-9 {
            return Ok(self.psi[j as usize]);
        }
        let j0 = (s.floor() as usize).clamp(1, n.saturating_sub(3)) - 1;
        let mut out = Complex64::new(0.0, 0.0);
        for a in 0..4 {
            let mut w = 1.0;
            for b in 0..4 {
                if a != b {
                    w *= (s - (j0 + b) as f64) / (a as f64 - b as f64);
                }
            }
            out += self.psi[j0 + a] * w;
        }
        Ok(out)
    }

    pub fn density(&self, x: f64) -> Result<f64> {
        Ok(self.value(x)?.norm_sqr())
    }
}

/// Grid extent and absorbing layer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TdseOptions {
    /// Distance from the confinement region to each outer wall.
    pub extent: f64,
    /// Width of the absorbing layer in front of each outer wall; zero
    /// disables it.
    pub absorber_width: f64,
    /// Peak of the absorbing potential `-i eta ((x - x_s)/width)^2`.
    pub absorber_strength: f64,
    /// Sine modes of the sampled initial state above this wave number are
    /// dropped. Near the grid cutoff the discrete group velocity vanishes,
    /// so those modes would linger next to the source.
    pub max_wavenumber: Option<f64>,
}

impl Default for TdseOptions {
    fn default() -> Self {
        Self { extent: 60.0, absorber_width: 30.0, absorber_strength: 20.0, max_wavenumber: Some(60.0) }
    }
}

impl TdseOptions {
    pub fn without_absorber(extent: f64) -> Self {
        Self { extent, absorber_width: 0.0, absorber_strength: 0.0, max_wavenumber: None }
    }
}

/// Sampled problem: complex potential on interior nodes plus the initial
/// wave function.
struct Lattice {
    origin: f64,
    h: f64,
    potential: Vec<Complex64>,
    psi: Vec<Complex64>,
    absorber_width: f64,
}

fn lattice(spec: &PotentialSpec, init: &InitialState, h: f64, opts: &TdseOptions) -> Result<Lattice> {
    spec.validate()?;
    spec.check_initial_state(init)?;
    if !(h > 0.0) || !(opts.extent > opts.absorber_width) || !(opts.absorber_width >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "bad grid: h = {h}, extent = {}, absorber = {}",
            opts.extent, opts.absorber_width
        )));
    }
    let boundary = spec.boundary();
    let origin = if spec.radiates_left() { -opts.extent } else { 0.0 };
    let end = boundary + opts.extent;
    let n = ((end - origin) / h).round() as usize;
    if n < 8 || ((end - origin) - n as f64 * h).abs() > 1e-9 * (end - origin) {
        return Err(Error::InvalidArgument(format!("h = {h} does not divide the grid [{origin}, {end}]")));
    }
    let node = |x: f64| -> Result<usize> {
        let s = (x - origin) / h;
        let j = s.round();
        if (s - j).abs() > 1e-9 * s.abs().max(1.0) {
            return Err(Error::InvalidArgument(format!("h = {h} puts no node at x = {x}")));
        }
        Ok(j as usize)
    };
    let mut potential = vec![Complex64::new(0.0, 0.0); n + 1];
    match *spec {
        PotentialSpec::DeltaShell { strength, radius } => {
            potential[node(radius)?] = Complex64::new(strength / h, 0.0);
        }
        PotentialSpec::DoubleBarrier { .. } => {
            for r in spec.regions().iter().filter(|r| r.potential != 0.0) {
                let (j0, j1) = (node(r.start)?, node(r.end())?);
                for (j, v) in potential.iter_mut().enumerate().take(j1 + 1).skip(j0) {
                    let edge = j == j0 || j == j1;
                    *v += Complex64::new(if edge { 0.5 } else { 1.0 } * r.potential, 0.0);
                }
            }
        }
    }
    if opts.absorber_width > 0.0 {
        let w = opts.absorber_width;
        for (j, v) in potential.iter_mut().enumerate() {
            let x = origin + j as f64 * h;
            let depth = if x > end - w {
                (x - (end - w)) / w
            } else if spec.radiates_left() && x < origin + w {
                (origin + w - x) / w
            } else {
                continue;
            };
            *v -= I * opts.absorber_strength * depth * depth;
        }
    }
    let mut psi: Vec<Complex64> = (0..=n).map(|j| Complex64::new(init.value(origin + j as f64 * h), 0.0)).collect();
    if let Some(k_max) = opts.max_wavenumber {
        psi = low_pass(&psi, h, k_max);
        if let PotentialSpec::DeltaShell { strength, .. } = *spec {
            drop_shell_mode(&mut psi, &potential, h, strength);
        }
    }
    Ok(Lattice { origin, h, potential, psi, absorber_width: opts.absorber_width })
}

/// Sine-series filter: modes `sin(m pi j / n)` are kept below `k_max / 2`,
/// dropped above `k_max`, and tapered by a half cosine in between.
fn low_pass(psi: &[Complex64], h: f64, k_max: f64) -> Vec<Complex64> {
    let n = psi.len() - 1;
    let dk = std::f64::consts::PI / (n as f64 * h);
    let modes = ((k_max / dk).floor() as usize).min(n - 1);
    let theta = std::f64::consts::PI / n as f64;
    let weights: Vec<Complex64> = (1..=modes)
        .map(|m| {
            let k = m as f64 * dk;
            let taper = if k <= 0.5 * k_max {
                1.0
            } else {
                0.5 * (1.0 + (std::f64::consts::PI * (2.0 * k / k_max - 1.0)).cos())
            };
            let sum: Complex64 = (1..n).map(|j| psi[j] * (theta * (m * j) as f64).sin()).sum();
            sum * (2.0 * taper / n as f64)
        })
        .collect();
    (0..=n).map(|j| weights.iter().enumerate().map(|(m, w)| w * (theta * ((m + 1) * j) as f64).sin()).sum()).collect()
}

/// Removes the staggered state bound to the shell node. Its energy sits
/// above the lattice band, `E = 2/h^2 (1 + cosh k)` with `sinh k = lambda h / 2`
/// on an infinite chain, and it never decays.
fn drop_shell_mode(psi: &mut [Complex64], potential: &[Complex64], h: f64, strength: f64) {
    let n = psi.len() - 2;
    let hop = 1.0 / (h * h);
    let shift = 2.0 * hop * (1.0 + (0.5 * strength * h).asinh().cosh()) * (1.0 + 1e-10);
    let diag: Vec<f64> = (1..=n).map(|j| 2.0 * hop + potential[j].re - shift).collect();
    let mut v: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    for _ in 0..4 {
        // Thomas solve of (H - shift) w = v with off-diagonal -hop
        let mut upper = vec![0.0; n];
        let mut w = vec![0.0; n];
        for i in 0..n {
            let p = diag[i] + if i > 0 { hop * upper[i - 1] } else { 0.0 };
            upper[i] = -hop / p;
            w[i] = (v[i] + if i > 0 { hop * w[i - 1] } else { 0.0 }) / p;
        }
        for i in (0..n - 1).rev() {
            w[i] -= upper[i] * w[i + 1];
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = w.into_iter().map(|x| x / norm).collect();
    }
    let overlap: Complex64 = v.iter().zip(&psi[1..=n]).map(|(a, p)| p * a).sum();
    for (a, p) in v.iter().zip(&mut psi[1..=n]) {
        *p -= overlap * a;
    }
}

/// LU factors of `1 + i dt H / 2` for the tridiagonal interior system.
struct Factored {
    upper: Vec<Complex64>,
    inverse_pivots: Vec<Complex64>,
    /// `-off / pivot`, the forward-sweep carry factor
    carry: Vec<Complex64>,
}

fn factor(potential: &[Complex64], h: f64, dt: f64) -> Factored {
    let n = potential.len() - 2;
    let a = I * dt / 2.0;
    let off = -a / (h * h);
    let mut upper = vec![Complex64::new(0.0, 0.0); n];
    let mut inverse_pivots = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        let diag = 1.0 + a * (2.0 / (h * h) + potential[i + 1]);
        let p = if i == 0 { diag } else { diag - off * upper[i - 1] };
        inverse_pivots[i] = p.inv();
        upper[i] = off / p;
    }
    let carry = upper.iter().map(|u| -u).collect();
    Factored { upper, inverse_pivots, carry }
}

fn step(psi: &mut [Complex64], rhs: &mut [Complex64], diag: &[Complex64], c: Complex64, f: &Factored) {
    let n = psi.len() - 2;
    // explicit half step fused with the forward sweep
    let mut prev = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let j = i + 1;
        let r = diag[j] * psi[j] + c * (psi[j + 1] + psi[j - 1]);
        prev = r * f.inverse_pivots[i] + f.carry[i] * prev;
        rhs[i] = prev;
    }
    for i in (0..n - 1).rev() {
        let next = rhs[i + 1];
        rhs[i] -= f.upper[i] * next;
    }
    psi[1..=n].copy_from_slice(&rhs[..n]);
}

/// Diagonal of `1 - i dt H / 2` and its off-diagonal.
fn explicit_half(potential: &[Complex64], h: f64, dt: f64) -> (Vec<Complex64>, Complex64) {
    let a = I * dt / 2.0;
    let diag = potential.iter().map(|v| 1.0 - a * (2.0 / (h * h) + v)).collect();
    (diag, a / (h * h))
}

fn check_step(h: f64, dt: f64) -> Result<()> {
    if !(dt > 0.0) || dt > 0.5 * h * h * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!("need 0 < dt <= h^2/2, got h = {h}, dt = {dt}")));
    }
    Ok(())
}

/// States at each of the increasing `times`.
pub fn tdse_snapshots(
    spec: &PotentialSpec,
    init: &InitialState,
    times: &[f64],
    h: f64,
    dt: f64,
    opts: &TdseOptions,
) -> Result<Vec<GridState>> {
    check_step(h, dt)?;
    if times.windows(2).any(|w| !(w[1] >= w[0])) || times.first().is_some_and(|t| !(*t >= 0.0)) {
        return Err(Error::InvalidArgument("snapshot times must be nonnegative and increasing".into()));
    }
    let Lattice { origin, h, potential, mut psi, absorber_width } = lattice(spec, init, h, opts)?;
    let n = psi.len();
    let edge = (n / 50).max(2);
    let mut rhs = vec![Complex64::new(0.0, 0.0); n - 2];
    let mut now = 0.0;
    let mut peak = psi.iter().map(|p| p.norm_sqr()).fold(0.0, f64::max);
    let mut reflected: f64 = 0.0;
    let mut out = Vec::with_capacity(times.len());
    let mut cached: Option<(f64, Factored, Vec<Complex64>, Complex64)> = None;
    for &target in times {
        let span = target - now;
        if span > 0.0 {
            let steps = (span / dt).ceil().max(1.0);
            let dt_eff = span / steps;
            if cached.as_ref().is_none_or(|c| (c.0 - dt_eff).abs() > 1e-15 * dt_eff) {
                let (diag, c) = explicit_half(&potential, h, dt_eff);
                cached = Some((dt_eff, factor(&potential, h, dt_eff), diag, c));
            }
            let (_, f, diag, c) = cached.as_ref().expect("factored above");
            for _ in 0..steps as usize {
                step(&mut psi, &mut rhs, diag, *c, f);
                let outer = psi[n - 1 - edge..].iter();
                let wall = if spec.radiates_left() { psi[..edge].iter().chain(outer) } else { [].iter().chain(outer) };
                reflected = reflected.max(wall.map(|p| p.norm_sqr()).fold(0.0, f64::max));
            }
            peak = peak.max(psi.iter().map(|p| p.norm_sqr()).fold(0.0, f64::max));
        }
        now = target;
        if absorber_width > 0.0 && reflected > REFLECTION_LIMIT * peak {
            return Err(Error::GridTooSmall { reflected: reflected / peak });
        }
        out.push(GridState { origin, h, psi: psi.clone(), t: now, absorber_width });
    }
    Ok(out)
}

/// State at `t_end` on the default grid.
pub fn tdse_evolve(spec: &PotentialSpec, init: &InitialState, t_end: f64, h: f64, dt: f64) -> Result<GridState> {
    let mut states = tdse_snapshots(spec, init, &[t_end], h, dt, &TdseOptions::default())?;
    Ok(states.pop().expect("one snapshot requested"))
}

/// Free evolution of an arbitrary grid state with walls at both ends and no
/// absorber.
pub fn evolve_free(state: &GridState, t_end: f64, dt: f64) -> Result<GridState> {
    check_step(state.h, dt)?;
    let n = state.psi.len();
    if n < 3 || !(t_end >= state.t) {
        return Err(Error::InvalidArgument("free evolution needs three nodes and t_end >= t".into()));
    }
    let potential = vec![Complex64::new(0.0, 0.0); n];
    let mut psi = state.psi.clone();
    psi[0] = Complex64::new(0.0, 0.0);
    psi[n - 1] = Complex64::new(0.0, 0.0);
    let span = t_end - state.t;
    let steps = (span / dt).ceil().max(1.0);
    let dt_eff = span / steps;
    if span > 0.0 {
        let f = factor(&potential, state.h, dt_eff);
        let (diag, c) = explicit_half(&potential, state.h, dt_eff);
        let mut rhs = vec![Complex64::new(0.0, 0.0); n - 2];
        for _ in 0..steps as usize {
            step(&mut psi, &mut rhs, &diag, c, &f);
        }
    }
    Ok(GridState { psi, t: t_end, ..state.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Free Gaussian packet `(2 pi s^2)^(-1/4) exp(-(x-x0)^2/(4 s^2) + i p x)`
    /// evolved exactly.
    fn gaussian(x: f64, t: f64, x0: f64, s: f64, p: f64) -> Complex64 {
        let st = Complex64::new(s * s, t);
        let norm = (2.0 * PI).powf(-0.25) * (s / st).sqrt();
        let y = x - x0 - 2.0 * p * t;
        norm * (-(y * y) / (4.0 * st) + I * p * (x - x0) - I * p * p * t).exp() * (I * p * x0).exp()
    }

    #[test]
    fn free_gaussian_spreading() {
        let (h, x0, s, p) = (0.02, 0.0, 4.0, 0.25);
        let n = (80.0 / h) as usize;
        let origin = -40.0;
        let psi = (0..=n).map(|j| gaussian(origin + j as f64 * h, 0.0, x0, s, p)).collect();
        let state = GridState { origin, h, psi, t: 0.0, absorber_width: 0.0 };
        let t = 2.0;
        let out = evolve_free(&state, t, 2e-4).unwrap();
        let mut worst: f64 = 0.0;
        for j in (0..=n).step_by(50) {
            let x = out.x(j);
            worst = worst.max((out.psi[j] - gaussian(x, t, x0, s, p)).norm());
        }
        assert!(worst < 1e-6, "max deviation {worst:e}");
    }

    #[test]
    fn norm_conserved_without_absorber() {
        let spec = PotentialSpec::delta_shell(10.0, 1.0);
        let init = spec.box_state(1).unwrap();
        let opts = TdseOptions::without_absorber(20.0);
        let out = tdse_snapshots(&spec, &init, &[0.0, 1.0], 0.02, 2e-4, &opts).unwrap();
        assert!((out[0].norm() - 1.0).abs() < 1e-12);
        assert!((out[1].norm() - 1.0).abs() < 1e-10, "{}", out[1].norm());
    }

    #[test]
    fn absorber_only_removes_norm() {
        let spec = PotentialSpec::delta_shell(10.0, 1.0);
        let init = spec.box_state(1).unwrap();
        let out = tdse_snapshots(&spec, &init, &[0.5, 1.0, 2.0], 0.02, 2e-4, &TdseOptions::default()).unwrap();
        let norms: Vec<f64> = out.iter().map(GridState::norm).collect();
        assert!(norms.iter().all(|n| *n <= 1.0 + 1e-10));
        assert!(norms.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn shell_mode_is_projected_out() {
        let (h, strength, n) = (0.02, 10.0, 400);
        let mut potential = vec![Complex64::new(0.0, 0.0); n + 1];
        potential[200] = Complex64::new(strength / h, 0.0);
        let k = (0.5 * strength * h).asinh();
        let mode = |j: usize| if j.is_multiple_of(2) { 1.0 } else { -1.0 } * (-k * (j as f64 - 200.0).abs()).exp();
        let mut psi: Vec<Complex64> =
            (0..=n).map(|j| Complex64::new(if j == 0 || j == n { 0.0 } else { mode(j) }, 0.0)).collect();
        let before: f64 = psi.iter().map(|p| p.norm_sqr()).sum();
        drop_shell_mode(&mut psi, &potential, h, strength);
        let after: f64 = psi.iter().map(|p| p.norm_sqr()).sum();
        assert!(after < 1e-12 * before, "{after} of {before}");
    }

    #[test]
    fn off_node_shell_and_coarse_step_rejected() {
        let spec = PotentialSpec::delta_shell(10.0, 1.0);
        let init = spec.box_state(1).unwrap();
        assert!(tdse_evolve(&spec, &init, 1.0, 0.3, 0.01).is_err());
        assert!(tdse_evolve(&spec, &init, 1.0, 0.02, 0.01).is_err());
    }

    #[test]
    fn double_barrier_grid_conserves_norm() {
        let spec = PotentialSpec::double_barrier(10.0, 0.5, 1.0);
        let init = spec.box_state(1).unwrap();
        let opts = TdseOptions::without_absorber(10.0);
        let out = tdse_snapshots(&spec, &init, &[0.5], 0.05, 1e-3, &opts).unwrap();
        assert!((out[0].norm() - 1.0).abs() < 1e-10);
    }
}
