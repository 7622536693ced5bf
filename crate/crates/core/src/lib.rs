//! Numerical toolkit for robust self-testing of nonlocal games whose ideal
//! strategies are projective and maximally entangled.
//!
//! The crate is organised by topic:
//!
//! * [`linalg`]: dense complex linear algebra and seeded random instances.
//! * [`games`]: games, correlations, synchronicity and game polynomials.
//! * [`strategies`]: bipartite and tracial strategies and their correlations.
//! * [`rounding`]: rounding POVMs to PVMs and the resulting error bounds.
//! * [`decomposition`]: spectral decomposition of a strategy into maximally
//!   entangled pieces.
//! * [`dilation`]: dilation residuals and conversions between the Hilbert
//!   space and von Neumann algebra pictures.
//! * [`qldt`]: the quantum low-degree test built from binary linear codes.
//! * [`suites`]: seeded randomized property suites.

pub mod decomposition;
pub mod dilation;
pub mod error;
pub mod games;
pub mod linalg;
pub mod qldt;
pub mod rounding;
pub mod strategies;
pub mod suites;

pub use error::{Error, Result};
