//! Bounds, optimal unravellings and feedback laws for continuously monitored
//! linear bosonic systems in thermal environments.
//!
//! Everything works on second moments in the quadrature ordering
//! `(x1, p1, ..., xn, pn)` with the vacuum covariance matrix equal to the
//! identity. The modules build on each other in this order:
//!
//! - [`symplectic`]: covariance matrices, symplectic spectra, negativity.
//! - [`dynamics`]: drift and diffusion from Hamiltonian and jump operators.
//! - [`conditioning`]: unravellings, measurement matrices, Riccati solver.
//! - [`bounds`]: spectral bounds on squeezing and entanglement.
//! - [`feedback`]: inverse unravelling problem, optimal gains, closed loop.
//! - [`trajectories`]: stochastic simulation of conditional means.
//! - [`scenarios`]: the canonical single-mode, two-mode and parametric set-ups.

pub mod bounds;
pub mod conditioning;
pub mod dynamics;
mod error;
pub mod feedback;
pub(crate) mod linalg;
pub mod scenarios;
pub mod symplectic;
pub mod trajectories;

pub use error::{Error, ErrorKind, Result};

/// Library version, embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
