//! Selection of cross-section averages in panel factor models.
//!
//! The crate simulates panels with latent (possibly mildly integrated) common
//! factors, estimates the pooled CCE regression, evaluates the MW and DVS
//! information criteria over every nonempty subset of candidate proxies, and
//! runs the Monte Carlo experiments that measure how the criteria behave as
//! factor persistence increases.
//!
//! Modules:
//! - [`matlin`] — dense linear-algebra kernel (symmetric eigen, pseudoinverse,
//!   annihilator projections, log-determinants).
//! - [`rng`] — portable, counter-seedable random streams.
//! - [`dgp`] — panel data generating processes.
//! - [`cce`] — cross-section averages and the pooled CCE fit.
//! - [`selection`] — information criteria, exhaustive subset search, the
//!   eigenvalue-ratio factor count.
//! - [`montecarlo`] — replication grids, aggregation and empirical rate checks.

pub mod cce;
pub mod dgp;
pub mod matlin;
pub mod montecarlo;
pub mod rng;
pub mod selection;

mod error;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
