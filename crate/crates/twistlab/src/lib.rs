//! A computational laboratory for weighted twisted inhomogeneous Diophantine
//! approximation.
//!
//! The crate classifies matrices at finite scale (singular-like or badly
//! approximable under weighted quasi-norms), solves inhomogeneous Dirichlet
//! systems with explicit constants, runs desk-scale Lebesgue-measure and
//! local-ubiquity experiments, and evaluates Hausdorff-dimension formulas
//! with an empirical box-counting cross-check.

pub mod dimension;
pub mod error;
pub mod geom;
pub mod lattice;
pub mod measure;
pub mod par;
pub mod rng;
pub mod scalar;
pub mod transference;

pub use error::{Error, Result};
