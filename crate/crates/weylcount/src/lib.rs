//! Exact spectral counting for products of spheres and flat tori.
//!
//! The library computes Weyl eigenvalue counting functions for manifolds
//! `S^{d_1} x ... x S^{d_n}` (circles allowed as `d_i = 1`) with exact
//! arbitrary-precision arithmetic, reduces them to weighted shifted-lattice
//! sums, and measures the growth exponent of the remainder against the
//! leading Weyl term. It also provides mollified (smoothed) counting
//! functions with a sandwich bound, Fourier-decay checks for the ball
//! indicator, and a dyadic point-set construction whose pair-counting
//! function has jumps of order `lambda`.
//!
//! All counting is exact: thresholds are carried as rational `lambda^2`,
//! counts as big integers, weighted sums as big rationals. Floating point
//! enters only in quadrature, exponent fits, and final remainder output.

pub mod analysis;
pub mod cli;
pub mod exact;
pub mod jumpset;
pub mod lattice;
pub mod mollify;
pub mod product_count;
pub mod special;
pub mod spectra;

pub use analysis::{ExponentFit, GridSpec, RemainderSeries};
pub use exact::Rat;
pub use jumpset::JumpSet;
pub use lattice::LatticeProblem;
pub use product_count::ProductManifold;
