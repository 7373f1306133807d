#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Driven Kerr-bosonic chain: mean-field steady states, linearised
//! fluctuations, the emergent SSH model and probe transmission.
//!
//! The pipeline runs `model` → `steadystate` → `linearize` → `topology`,
//! with `spectroscopy` reading the lossy dynamical matrix directly.

pub mod cli;
pub mod error;
pub mod linalg;
pub mod linearize;
pub mod model;
pub mod par;
pub mod presets;
pub mod spectroscopy;
pub mod steadystate;
pub mod topology;

pub use error::{Error, Result};
