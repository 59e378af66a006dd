//! Zero-censored multivariate normal model for compositional data with
//! structural zeros.
//!
//! Compositions are mapped to `R^(D-1)` with the α = 1 transformation
//! ([`simplex`]). Interior points follow a multivariate normal; a point with
//! one zero part is treated as the ray projection of a latent normal point
//! lying outside the simplex ([`geometry`]), and contributes the integral of
//! the density along that ray ([`likelihood`]). Fitted models can be
//! simulated from and checked against the observed zero counts
//! ([`diagnostics`]).

pub mod diagnostics;
pub mod error;
pub mod gaussian;
pub mod geometry;
pub mod likelihood;
pub mod optimize;
pub mod rng;
pub mod sample;
pub mod simplex;
pub mod ternary;

pub use error::{Error, Result};
pub use gaussian::MvnParams;
pub use likelihood::{fit, log_likelihood, FitConfig, FittedModel, ModelDocument};
pub use sample::{CompositionalDataset, TransformedSample};
pub use simplex::Composition;
