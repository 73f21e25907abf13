//! Spacing and t-spacing tests for the first two knots of least-angle
//! regression, together with an exact power engine.
//!
//! The crate is organised bottom-up:
//!
//! * [`distfn`]: normal, Student-t and noncentral χ² functions in log domain;
//! * [`model`]: design normalisation and the correlation model `U = XᵀY`;
//! * [`knots`]: the first two LARS knots `λ1 ≥ λ2`;
//! * [`spacing`] and [`tspacing`]: the known- and unknown-variance pivots;
//! * [`qmcint`]: randomized lattice integration of Gaussian expectations;
//! * [`power`]: power of the spacing test (cone-weight representation,
//!   two-predictor quadrature, Pearson χ² comparator);
//! * [`simlab`]: scenario generators and the simulation studies.
//!
//! ```
//! use nalgebra::{DMatrix, DVector};
//! use spacing_core::spacing::spacing_pvalue;
//!
//! let u = DVector::from_column_slice(&[2.0, 1.0]);
//! let s = spacing_pvalue(&u, &DMatrix::identity(2, 2))?;
//! assert!((s.p_value - 0.143393).abs() < 1e-6);
//! assert_eq!((s.knots.lambda1, s.knots.lambda2), (2.0, 1.0));
//! # Ok::<(), spacing_core::Error>(())
//! ```

pub mod distfn;
pub mod error;
pub mod knots;
mod linalg;
pub mod model;
pub mod power;
pub mod qmcint;
pub mod simlab;
pub mod spacing;
pub mod tspacing;

pub use error::{Error, Result};
