//! Location-scale mixtures of elliptical (LSE) distributions and the integral
//! stochastic orders between them.
//!
//! An LSE vector is `Y = mu + alpha(Z) X + beta(Z) delta` with `X` elliptical
//! (scale `Sigma`, density generator `g`) and `Z` an independent mixing
//! variable. The crate provides:
//!
//! - [`generators`]: the density generator catalog, normalizing constants,
//!   radial moments and the tail-ratio classifier;
//! - [`mixing`]: mixing laws for `Z` with the `alpha`/`beta` maps;
//! - [`distributions`]: the [`LseDistribution`] object (density, characteristic
//!   function, moments, sampling, affine images);
//! - [`cones`]: PSD, copositive and completely positive membership tests;
//! - [`orders`]: the theorem engine producing an [`OrderReport`] per order;
//! - [`empirical`]: Monte Carlo dominance checks used to cross-validate verdicts.

pub mod cones;
pub mod distributions;
pub mod empirical;
pub mod error;
pub mod generators;
pub mod linalg;
pub mod mixing;
pub mod orders;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod tabulated;

pub use cones::{CertificateKind, ConeStatus, ConeVerdict};
pub use distributions::{LseDistribution, MomentSummary};
pub use empirical::{DominanceResult, McConfig};
pub use error::{LseError, Result};
pub use generators::{DensityGenerator, LimitRatioResult};
pub use mixing::{AlphaBetaMap, AlphaKind, BetaKind, MixingDistribution, MixingLaw};
pub use orders::{Necessary, OrderKind, OrderReport, Sufficient, Verdict};
