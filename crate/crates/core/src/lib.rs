//! Numerical laboratory for two-component elliptic systems of the form
//!
//! ```text
//!   -Δu = u^r v^p [a v^q - c u^q] + lower order,
//!   -Δv = v^r u^p [b u^q - d v^q] + lower order,
//! ```
//!
//! covering Lotka–Volterra (`p=0, q=1`), Bose–Einstein (`p=0, q=2`) and
//! chemical-reaction (`p=q=r=1`) specializations.
//!
//! The crate provides:
//! - the system model with executable hypothesis gates ([`system`]);
//! - the proportionality constant `K` with certified margins
//!   ([`proportionality`]);
//! - radial shooting for singular IVPs and ball ground states ([`shooting`]);
//! - a finite-difference Newton/continuation Dirichlet solver with first
//!   eigenvalue computation and blow-up rescaling diagnostics ([`dirichlet`]);
//! - half-spherical mean quadrature on the half-space ([`means`]);
//! - explicit barrier and pointwise-inequality checks ([`ineq`]);
//! - the flat key-value scenario config format ([`config`]).

pub mod config;
pub mod dirichlet;
pub mod ineq;
pub mod means;
pub mod proportionality;
pub mod quad;
pub mod shooting;
pub mod system;

mod linalg;

pub use config::{ConfigError, FlatConfig};
pub use dirichlet::{GridField, HomotopyConfig, SolveError, SolveReport};
pub use proportionality::ProportionalityCertificate;
pub use shooting::{RadialProfile, ShotEvent};
pub use system::{Coefficients, Domain, Exponents, ProblemInstance, SystemError};
