//! Diabetes risk prediction pipeline.
//!
//! Risk-factor rules and device catalog, dataset loading, preprocessing,
//! classifiers, feature selection and evaluation.

pub mod artifact;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod featsel;
pub mod matrix;
pub mod mimic;
pub mod models;
pub mod preprocess;
pub mod risk;

pub use artifact::{ModelArtifact, Prediction};
pub use error::{Error, Result};
pub use matrix::FeatureMatrix;
