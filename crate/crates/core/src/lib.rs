//! Treatment-effect estimation under network interference on graphon-sampled exposure graphs.

pub mod error;
pub mod estimands;
pub mod estimators;
pub mod experiment;
pub mod graphon;
pub mod harness;
pub mod network;
pub mod outcomes;
pub mod presets;
pub mod quadrature;
pub mod rng;
pub mod sensitivity;
pub mod spectral;
pub mod theory;

pub use error::{Error, Result};
