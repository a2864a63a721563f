//! Independent verification paths: brute-force quadrature, a contour
//! integral for the Moshinsky function and a Crank-Nicolson solver.
//!
//! [`run_verification`] gathers them into the report printed by
//! `decay verify`.

pub mod contour;
pub mod quadrature;
pub mod tdse;

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub use contour::moshinsky_contour;
pub use quadrature::{integrate, quad_overlap};
pub use tdse::{tdse_evolve, tdse_snapshots, GridState, TdseOptions};

use crate::dynamics::psi_single;
use crate::error::{Error, Result};
use crate::model::PotentialSpec;
use crate::poles::find_poles;
use crate::specfun::{faddeeva_w, moshinsky_reduced};
use crate::states::{Expansion, Label, ResonanceState};

/// One line of the verification report.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    /// Lower bound instead of upper bound.
    pub at_least: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, at_least: false }
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, tolerance: bound, at_least: true }
    }

    pub fn passed(&self) -> bool {
        if self.at_least {
            self.value >= self.tolerance
        } else {
            self.value <= self.tolerance
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    /// Fixed-width text table, one check per line.
    pub fn render(&self) -> String {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        let mut s = String::new();
        let _ = writeln!(s, "{:<width$}  {:>12}  {:>12}  result", "check", "value", "bound");
        for c in &self.checks {
            let bound = format!("{}{:.1e}", if c.at_least { ">=" } else { "<=" }, c.tolerance);
            let verdict = if c.passed() { "PASS" } else { "FAIL" };
            let _ = writeln!(s, "{:<width$}  {:>12.3e}  {:>12}  {verdict}", c.name, c.value, bound);
        }
        s
    }
}

fn relative(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Largest relative violations of `w(z) + w(-z) = 2 exp(-z^2)`,
/// `w(-conj z) = conj w(z)` and `Re w(x) = exp(-x^2)` over random
/// arguments. The first is measured against the largest of its three
/// terms, the last against `|w(x)|`.
pub fn faddeeva_identities(samples: usize, seed: u64) -> Result<[f64; 3]> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut worst = [0.0f64; 3];
    for _ in 0..samples {
        let z = Complex64::new(rng.gen_range(-6.0..6.0), rng.gen_range(-4.0..10.0));
        let (a, b, g) = (faddeeva_w(z)?, faddeeva_w(-z)?, 2.0 * (-z * z).exp());
        worst[0] = worst[0].max((a + b - g).norm() / a.norm().max(b.norm()).max(g.norm()));
        let up = Complex64::new(z.re, z.im.abs());
        worst[1] = worst[1].max(relative(faddeeva_w(-up.conj())?, faddeeva_w(up)?.conj()));
        let x = rng.gen_range(-6.0..6.0);
        let w = faddeeva_w(Complex64::new(x, 0.0))?;
        worst[2] = worst[2].max((w.re - (-x * x).exp()).abs() / w.norm());
    }
    Ok(worst)
}

/// Largest relative difference between the Faddeeva-based Moshinsky
/// function and [`moshinsky_contour`] over random admissible arguments:
/// `0 <= d <= 60`, `0.05 <= t <= 40`, `0.05 <= Re kappa <= 25`,
/// `-3 <= Im kappa <= -1e-3`, and `|M| >= 1e-6` so that the absolute
/// quadrature tolerance is irrelevant.
pub fn moshinsky_agreement(samples: usize, seed: u64) -> Result<f64> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut accepted = 0;
    while accepted < samples {
        let d = rng.gen_range(0.0..60.0);
        let t = rng.gen_range(0.05..40.0);
        let kappa = Complex64::new(rng.gen_range(0.05..25.0), -rng.gen_range(1e-3..3.0));
        let (_, m) = match moshinsky_reduced(d, t, kappa) {
            Ok(v) => v,
            Err(Error::Overflow { .. }) => continue,
            Err(e) => return Err(e),
        };
        if m.norm() < 1e-6 {
            continue;
        }
        accepted += 1;
        worst = worst.max(relative(moshinsky_contour(d, t, kappa)?, m));
    }
    Ok(worst)
}

/// Largest `|C_n - int psi u_n|` over the expansion's first `n` states,
/// relative to the largest `|C_n|` among them (parity zeros carry no
/// relative accuracy).
pub fn coefficient_agreement(expansion: &Expansion, label: Label, n: usize) -> Result<f64> {
    let init = *expansion.initial(label)?;
    let coeffs = expansion.coefficients(label)?;
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (state, c) in expansion.states.iter().zip(coeffs).take(n) {
        let q = quad_overlap(|x| Complex64::new(init.value(x), 0.0), |x| state.value(x), init.support)?;
        worst = worst.max((q - c).norm());
        scale = scale.max(c.norm());
    }
    Ok(worst / scale)
}

/// `|int u^2 + surface terms - 1|` with the interior integral done by
/// quadrature, region by region.
pub fn normalization_agreement(state: &ResonanceState) -> Result<f64> {
    let k = state.kappa();
    let mut total = Complex64::new(0.0, 0.0);
    for r in state.spec.regions() {
        total += quadrature::integrate(|x| state.value(x) * state.value(x), r.start, r.end(), 1e-14)?;
    }
    let (u_b, u_0) = (state.value(state.spec.boundary()), state.value(0.0));
    let surface = if state.spec.radiates_left() { u_0 * u_0 + u_b * u_b } else { u_b * u_b };
    Ok((total + Complex64::new(0.0, 1.0) * surface / (2.0 * k) - 1.0).norm())
}

/// Comparison of the resonance expansion with Crank-Nicolson runs at grid
/// steps `h` and `h/2` (`dt = h^2/2` each).
#[derive(Clone, Debug, PartialEq)]
pub struct Equivalence {
    /// Comparison times in lifetimes.
    pub times: Vec<f64>,
    /// Per time: `max_x |rho_cn - rho_res| / max_x rho_res` over the
    /// sampled positions.
    pub coarse: Vec<f64>,
    pub fine: Vec<f64>,
    /// Same for the extrapolation `(4 rho_{h/2} - rho_h) / 3`.
    pub extrapolated: Vec<f64>,
}

impl Equivalence {
    pub fn worst_extrapolated(&self) -> f64 {
        self.extrapolated.iter().copied().fold(0.0, f64::max)
    }

    /// Error reduction from `h` to `h/2`, worst case over times.
    pub fn richardson_factor(&self) -> f64 {
        self.coarse.iter().zip(&self.fine).map(|(c, f)| c / f).fold(f64::INFINITY, f64::min)
    }
}

/// Setup of the expansion-versus-grid comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceSetup {
    pub spec: PotentialSpec,
    pub q: u32,
    pub n_poles: usize,
    pub h: f64,
    /// Comparison times in lifetimes.
    pub times: Vec<f64>,
    /// Sampled positions; each must be a node of the coarse grid.
    pub positions: Vec<f64>,
    pub options: TdseOptions,
}

impl Default for EquivalenceSetup {
    fn default() -> Self {
        Self {
            spec: PotentialSpec::delta_shell(10.0, 1.0),
            q: 1,
            n_poles: 1000,
            h: 0.02,
            times: vec![0.25, 0.5, 1.0, 2.0, 5.0],
            positions: (1..=100).map(|j| 0.1 * j as f64).collect(),
            options: TdseOptions::default(),
        }
    }
}

pub fn tdse_equivalence(setup: &EquivalenceSetup) -> Result<Equivalence> {
    let init = setup.spec.box_state(setup.q)?;
    let poles = find_poles(&setup.spec, setup.n_poles)?;
    let expansion = Expansion::build(poles, init, None)?.with_far_pole_remainder(4)?;
    let tau = expansion.lifetime();
    let abs_times: Vec<f64> = setup.times.iter().map(|t| t * tau).collect();
    let reference: Vec<Vec<f64>> = abs_times
        .iter()
        .map(|&t| {
            setup
                .positions
                .iter()
                .map(|&x| Ok(psi_single(&expansion, Label::Alpha, x, t)?.amplitude.density()))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let grid = |h: f64| -> Result<Vec<Vec<f64>>> {
        let snaps = tdse_snapshots(&setup.spec, &init, &abs_times, h, 0.5 * h * h, &setup.options)?;
        snaps.iter().map(|s| setup.positions.iter().map(|&x| s.density(x)).collect::<Result<Vec<f64>>>()).collect()
    };
    let coarse = grid(setup.h)?;
    let fine = grid(0.5 * setup.h)?;
    let extrapolated: Vec<Vec<f64>> =
        coarse.iter().zip(&fine).map(|(c, f)| c.iter().zip(f).map(|(c, f)| (4.0 * f - c) / 3.0).collect()).collect();
    let error = |cn: &[Vec<f64>]| -> Vec<f64> {
        cn.iter()
            .zip(&reference)
            .map(|(cn, r)| {
                let scale = r.iter().copied().fold(0.0, f64::max);
                cn.iter().zip(r).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale
            })
            .collect()
    };
    Ok(Equivalence {
        times: setup.times.clone(),
        coarse: error(&coarse),
        fine: error(&fine),
        extrapolated: error(&extrapolated),
    })
}

/// The full oracle suite. `with_grid` adds the Crank-Nicolson comparison,
/// which dominates the run time.
pub fn run_verification(with_grid: bool) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    let [reflection, conjugation, real_axis] = faddeeva_identities(1000, 7)?;
    checks.push(Check::at_most("faddeeva w(z)+w(-z)=2exp(-z^2)", reflection, 1e-12));
    checks.push(Check::at_most("faddeeva w(-conj z)=conj w(z)", conjugation, 1e-12));
    checks.push(Check::at_most("faddeeva Re w(x)=exp(-x^2)", real_axis, 1e-12));
    checks.push(Check::at_most("moshinsky vs contour quadrature", moshinsky_agreement(100, 11)?, 1e-8));

    let spec = PotentialSpec::delta_shell(100.0, 1.0);
    let poles = find_poles(&spec, 20)?;
    let alpha = spec.box_state(1)?;
    let beta = spec.box_state(6)?;
    let expansion = Expansion::build(poles, alpha, Some(beta))?;
    let coeff =
        coefficient_agreement(&expansion, Label::Alpha, 20)?.max(coefficient_agreement(&expansion, Label::Beta, 20)?);
    checks.push(Check::at_most("delta shell C_n closed form vs quadrature", coeff, 1e-10));
    let norm = expansion.states.iter().map(normalization_agreement).collect::<Result<Vec<_>>>()?;
    checks.push(Check::at_most(
        "delta shell normalization by quadrature",
        norm.iter().copied().fold(0.0, f64::max),
        1e-10,
    ));

    let db = PotentialSpec::double_barrier(40.0, 1.0, 1.0);
    let db_exp = Expansion::build(find_poles(&db, 10)?, db.box_state(1)?, None)?;
    checks.push(Check::at_most(
        "double barrier C_n closed form vs quadrature",
        coefficient_agreement(&db_exp, Label::Alpha, 10)?,
        1e-10,
    ));
    let db_norm = db_exp.states.iter().map(normalization_agreement).collect::<Result<Vec<_>>>()?;
    checks.push(Check::at_most(
        "double barrier normalization by quadrature",
        db_norm.iter().copied().fold(0.0, f64::max),
        1e-10,
    ));

    if with_grid {
        let eq = tdse_equivalence(&EquivalenceSetup::default())?;
        checks.push(Check::at_most("crank-nicolson vs expansion (extrapolated)", eq.worst_extrapolated(), 1e-4));
        checks.push(Check::at_least("crank-nicolson richardson factor", eq.richardson_factor(), 3.0));
    }
    Ok(VerifyReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn faddeeva_identities_hold() {
        let worst = faddeeva_identities(300, 1).unwrap();
        assert!(worst.iter().all(|w| *w < 1e-12), "{worst:?}");
    }

    #[test]
    fn quadrature_confirms_closed_forms() {
        let spec = PotentialSpec::delta_shell(100.0, 1.0);
        let exp = Expansion::build(find_poles(&spec, 5).unwrap(), spec.box_state(1).unwrap(), None).unwrap();
        assert!(coefficient_agreement(&exp, Label::Alpha, 5).unwrap() < 1e-10);
        for s in &exp.states {
            assert!(normalization_agreement(s).unwrap() < 1e-10);
        }
    }

    #[test]
    fn report_marks_failures() {
        let report = VerifyReport { checks: vec![Check::at_most("a", 1.0, 2.0), Check::at_least("b", 1.0, 2.0)] };
        assert!(!report.all_passed());
        let text = report.render();
        assert!(text.contains("PASS") && text.contains("FAIL"));
    }
}
