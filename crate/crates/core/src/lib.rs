//! Resonance-expansion dynamics of decaying particles.
//!
//! A particle initially confined by a potential that vanishes outside a
//! finite region decays by tunneling. Its wave function is expanded in
//! resonance (Gamow) states `u_n` with complex poles `kappa_n`, and each
//! term propagates through a Moshinsky function built on the Faddeeva
//! function. Two identical noninteracting particles are handled through
//! products of single-particle solutions, symmetrized or antisymmetrized.
//!
//! Natural units `hbar = 2m = 1` are used everywhere.
//!
//! Modules, bottom-up:
//!
//! * [`specfun`]: Faddeeva `w(z)` and the Moshinsky function.
//! * [`model`]: delta-shell and double-barrier potentials, box states,
//!   pole conditions and seeds.
//! * [`poles`]: pole refinement, argument-principle validation, caches.
//! * [`states`]: normalized resonance states, expansion coefficients,
//!   sum rule and closure diagnostics.
//! * [`dynamics`]: one- and two-particle amplitudes and densities, peak
//!   times and power-law tails.
//! * [`oracle`]: independent checks (adaptive quadrature, Crank-Nicolson).
//! * [`experiment`]: configs, presets and output files behind the `decay`
//!   binary.

// `!(x > 0.0)` rejects NaN on purpose; reference tables keep all printed digits.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod model;
pub mod oracle;
pub mod poles;
pub mod specfun;
pub mod states;

pub use error::{Error, Result};
pub use model::{InitialState, PotentialSpec};
pub use poles::{ComplexPole, PoleSet};
