//! Khovanov arc algebras `K_m^n`, linear projective resolutions of their cell
//! modules, the Ext algebra between cell modules and Merkulov A-infinity
//! minimal models on it.
//!
//! The linear algebra layer in [`exact`] is generic over any
//! [`exact::Field`]; the algebraic modules work over the exact rationals.

pub mod ainfty;
pub mod arcalg;
pub mod cli;
pub mod diagrams;
pub mod exact;
pub mod extalg;
pub mod render;
pub mod repmod;
pub mod resolve;

/// Exact rational numbers, the coefficient field of every algebra here.
pub type Rational = num_rational::BigRational;

/// Sparse matrices over [`Rational`].
pub type QMatrix = exact::SparseMatrix<Rational>;

pub use diagrams::{CupDiagram, Label, Weight};
pub use exact::{Field, QPoly, SparseMatrix};
