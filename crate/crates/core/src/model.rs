//! Potentials, confinement geometry, initial states and pole conditions.
//!
//! Natural units `hbar = 2m = 1` throughout, so energies are `k^2`.
//!
//! Both models are piecewise constant inside the confinement region, so a
//! solution is carried across each region by the unimodular matrix
//!
//! ```text
//! [ cos(q l)      sin(q l)/q ]
//! [ -q sin(q l)   cos(q l)   ]      q^2 = k^2 - V
//! ```
//!
//! whose entries are even in `q`, hence entire in `k`. The delta shell is a
//! single free region `[0, a]` with a derivative jump at `a`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    /// `V(r) = strength * delta(r - radius)` on the half line, `u(0) = 0`.
    DeltaShell { strength: f64, radius: f64 },
    /// Barriers of `height` on `[0, b]` and `[b + w, 2b + w]` on the full line.
    DoubleBarrier { height: f64, barrier_width: f64, well_width: f64 },
}

/// A constant-potential piece `[start, start + width]` of the interior.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Region {
    pub start: f64,
    pub width: f64,
    pub potential: f64,
}

impl Region {
    pub fn end(&self) -> f64 {
        self.start + self.width
    }
}

impl PotentialSpec {
    pub fn delta_shell(strength: f64, radius: f64) -> Self {
        PotentialSpec::DeltaShell { strength, radius }
    }

    pub fn double_barrier(height: f64, barrier_width: f64, well_width: f64) -> Self {
        PotentialSpec::DoubleBarrier { height, barrier_width, well_width }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        match *self {
            PotentialSpec::DeltaShell { strength, radius } => {
                if !ok(strength) || !ok(radius) {
                    return Err(Error::InvalidArgument(format!(
                        "delta shell needs strength > 0 and radius > 0, got {strength}, {radius}"
                    )));
                }
            }
            PotentialSpec::DoubleBarrier { height, barrier_width, well_width } => {
                if !ok(height) || !ok(barrier_width) || !ok(well_width) {
                    return Err(Error::InvalidArgument(format!(
                        "double barrier needs positive height and widths, got V={height}, b={barrier_width}, w={well_width}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Right edge of the confinement region: `a` or `L = 2b + w`.
    pub fn boundary(&self) -> f64 {
        match *self {
            PotentialSpec::DeltaShell { radius, .. } => radius,
            PotentialSpec::DoubleBarrier { barrier_width, well_width, .. } => 2.0 * barrier_width + well_width,
        }
    }

    /// Whether waves also leave through `x = 0` (full line) instead of a
    /// hard wall with `u(0) = 0`.
    pub fn radiates_left(&self) -> bool {
        matches!(self, PotentialSpec::DoubleBarrier { .. })
    }

    /// Magnitude used to scale residual tolerances: `max(1, lambda or V)`.
    pub fn scale(&self) -> f64 {
        match *self {
            PotentialSpec::DeltaShell { strength, .. } => strength.max(1.0),
            PotentialSpec::DoubleBarrier { height, .. } => height.max(1.0),
        }
    }

    pub fn regions(&self) -> Vec<Region> {
        match *self {
            PotentialSpec::DeltaShell { radius, .. } => {
                vec![Region { start: 0.0, width: radius, potential: 0.0 }]
            }
            PotentialSpec::DoubleBarrier { height, barrier_width: b, well_width: w } => vec![
                Region { start: 0.0, width: b, potential: height },
                Region { start: b, width: w, potential: 0.0 },
                Region { start: b + w, width: b, potential: height },
            ],
        }
    }

    /// Interval where initial states may live (a region with `V = 0`).
    pub fn confinement_well(&self) -> [f64; 2] {
        match *self {
            PotentialSpec::DeltaShell { radius, .. } => [0.0, radius],
            PotentialSpec::DoubleBarrier { barrier_width: b, well_width: w, .. } => [b, b + w],
        }
    }

    /// Box mode `q` filling the confinement well.
    pub fn box_state(&self, q: u32) -> Result<InitialState> {
        let [x0, x1] = self.confinement_well();
        InitialState::box_mode(q, x0, x1)
    }

    pub fn check_initial_state(&self, init: &InitialState) -> Result<()> {
        let [w0, w1] = self.confinement_well();
        let [x0, x1] = init.support;
        let slack = 1e-12 * self.boundary();
        if x0 < w0 - slack || x1 > w1 + slack {
            return Err(Error::InvalidArgument(format!(
                "initial support [{x0}, {x1}] must lie inside the well [{w0}, {w1}]"
            )));
        }
        Ok(())
    }

    /// Stable identity of the spec, used to key pole caches.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let canonical = serde_json::to_string(self).expect("spec serializes");
        hex::encode(&Sha256::digest(canonical.as_bytes())[..8])
    }

    /// Analytic function of `k` whose zeros are the resonance poles.
    ///
    /// Delta shell: `2ik + lambda (exp(2ika) - 1)`. Double barrier: the
    /// solution leaving `x = 0` as `exp(-ikx)` is carried to `L`, and the
    /// mismatch `u'(L) - ik u(L)` with a purely outgoing wave is returned.
    pub fn pole_residual(&self, k: Complex64) -> Complex64 {
        match *self {
            PotentialSpec::DeltaShell { strength, radius } => {
                2.0 * I * k + strength * ((2.0 * I * k * radius).exp() - 1.0)
            }
            PotentialSpec::DoubleBarrier { .. } => {
                let (u, du) = self.propagate_left_outgoing(k, self.boundary());
                du - I * k * u
            }
        }
    }

    /// `d residual / dk`; closed form for the delta shell, a four-point
    /// complex-step (Cauchy) difference for the double barrier.
    pub fn pole_residual_derivative(&self, k: Complex64) -> Complex64 {
        match *self {
            PotentialSpec::DeltaShell { strength, radius } => {
                2.0 * I + 2.0 * I * radius * strength * (2.0 * I * k * radius).exp()
            }
            PotentialSpec::DoubleBarrier { .. } => {
                let h = 1e-3;
                let f = |dk: Complex64| self.pole_residual(k + dk);
                let hr = Complex64::new(h, 0.0);
                let hi = Complex64::new(0.0, h);
                (f(hr) - f(-hr) - I * (f(hi) - f(-hi))) / (4.0 * h)
            }
        }
    }

    /// `(u, u')` at `x` in `[0, boundary]` for the unnormalized solution
    /// with `u(0) = 1`, `u'(0) = -ik` (outgoing to the left).
    pub(crate) fn propagate_left_outgoing(&self, k: Complex64, x: f64) -> (Complex64, Complex64) {
        self.propagate_from_origin(k, Complex64::new(1.0, 0.0), -I * k, x)
    }

    pub(crate) fn propagate_from_origin(
        &self,
        k: Complex64,
        mut u: Complex64,
        mut du: Complex64,
        x: f64,
    ) -> (Complex64, Complex64) {
        for region in self.regions() {
            if x <= region.start {
                break;
            }
            let width = (x.min(region.end()) - region.start).max(0.0);
            (u, du) = transfer(k * k - region.potential, width, u, du);
        }
        (u, du)
    }

    /// Newton seed for the `n`-th fourth-quadrant pole.
    ///
    /// Delta shell: `(n pi/a)(1 - 1/(lambda a)) - i (1/a)(n pi/(lambda a))^2`,
    /// valid for `lambda a > 1` and `n pi << lambda a`.
    /// Double barrier: the `n`-th bound state of the isolated well for
    /// sharp levels, and a contour scan for broad above-barrier poles.
    pub fn pole_seed(&self, n: usize) -> Result<Complex64> {
        if n == 0 {
            return Err(Error::InvalidArgument("pole index n must be >= 1".into()));
        }
        self.validate()?;
        match *self {
            PotentialSpec::DeltaShell { strength, radius } => {
                let la = strength * radius;
                let base = n as f64 * PI / radius;
                let re = base * (1.0 - 1.0 / la);
                let im = -(n as f64 * PI / la).powi(2) / radius;
                Ok(Complex64::new(re, im))
            }
            PotentialSpec::DoubleBarrier { height, well_width, .. } => {
                if let Some(k) = finite_well_level(height, well_width, n) {
                    if k * k < height * (1.0 - 1e-3) {
                        return Ok(Complex64::new(k, -1e-8));
                    }
                }
                let set = crate::poles::find_poles(self, n)?;
                Ok(set.poles[n - 1].kappa)
            }
        }
    }
}

/// Carries `(u, u')` across a region of width `width` where `u'' = -q2 u`.
pub(crate) fn transfer(q2: Complex64, width: f64, u: Complex64, du: Complex64) -> (Complex64, Complex64) {
    let (cs, sn) = cos_sinc(q2, width);
    (u * cs + du * sn, -q2 * sn * u + cs * du)
}

/// `(cos(q l), sin(q l)/q)` as entire functions of `q2 = q^2`.
pub(crate) fn cos_sinc(q2: Complex64, l: f64) -> (Complex64, Complex64) {
    let x2 = q2 * l * l;
    if x2.norm() < 1e-6 {
        let cs = 1.0 - x2 / 2.0 + x2 * x2 / 24.0;
        let sn = l * (1.0 - x2 / 6.0 + x2 * x2 / 120.0);
        return (cs, sn);
    }
    let q = q2.sqrt();
    ((q * l).cos(), (q * l).sin() / q)
}

/// Wave number of the `n`-th level of a square well of depth `height`
/// and width `width`: solves `k w = (n - 1) pi + 2 atan(sqrt(V - k^2)/k)`.
pub fn finite_well_level(height: f64, width: f64, n: usize) -> Option<f64> {
    let kmax = height.sqrt();
    let g = |k: f64| k * width - (n as f64 - 1.0) * PI - 2.0 * ((height - k * k).max(0.0).sqrt() / k).atan();
    if g(kmax) <= 0.0 {
        return None;
    }
    let (mut lo, mut hi) = (1e-12 * kmax, kmax);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// A box mode `sqrt(2/l) sin(q pi (x - x0)/l)` on `[x0, x1]`, zero outside.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    pub q: u32,
    pub support: [f64; 2],
}

impl InitialState {
    pub fn box_mode(q: u32, x0: f64, x1: f64) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidArgument("box mode index q must be >= 1".into()));
        }
        if !(x1 > x0) || !x0.is_finite() || !x1.is_finite() {
            return Err(Error::InvalidArgument(format!("empty box support [{x0}, {x1}]")));
        }
        Ok(Self { q, support: [x0, x1] })
    }

    pub fn width(&self) -> f64 {
        self.support[1] - self.support[0]
    }

    /// Wave number `q pi / l` of the mode.
    pub fn wavenumber(&self) -> f64 {
        self.q as f64 * PI / self.width()
    }

    pub fn value(&self, x: f64) -> f64 {
        let [x0, x1] = self.support;
        if x < x0 || x > x1 {
            return 0.0;
        }
        (2.0 / self.width()).sqrt() * (self.wavenumber() * (x - x0)).sin()
    }

    /// `int |psi|^2 dx` in closed form.
    pub fn norm_squared(&self) -> f64 {
        let l = self.width();
        let p = self.wavenumber();
        (2.0 / l) * (l / 2.0 - (2.0 * p * l).sin() / (4.0 * p))
    }
}
