//! Tracking-response engine with sub-peak suppression.
//!
//! A two-layer convolutional classifier is learned online by nonlinear
//! conjugate gradient; its response maps are rectified with peak response
//! pooling, truncated around the previous peak and fused across feature
//! scales. A seeded scene simulator stands in for a CNN backbone and an
//! evaluation harness measures precision/success, VOT-style failures and
//! sub-peak statistics.

pub mod bbox;
pub mod classifier;
pub mod config;
pub mod error;
pub mod eval;
pub mod grid;
pub mod peak;
pub mod sim;
pub mod tracker;

pub use bbox::{iou, BBox};
pub use error::{Error, Result};
pub use grid::{ConvKernel, FeatureMap, Grid2D, GridStats};
