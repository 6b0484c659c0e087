//! A kernel for G₂-structures on seven-dimensional space.
//!
//! The crate covers octonion arithmetic, the canonical 3-form and its dual,
//! representation-theoretic splittings of forms, the nonlinear map from a
//! positive 3-form to its metric, deformation engines, torsion of structure
//! fields on a periodic grid, and the Hessian geometry of a local moduli
//! chart. Exact rational arithmetic is available wherever the algebra allows.

pub mod canonical;
pub mod deform;
pub mod error;
pub mod field;
pub mod identities;
pub mod irreps;
pub mod json;
pub mod moduli;
pub mod octonion;
pub mod random;
pub mod scalar;
pub mod series;
pub mod structure;
pub mod tensor;

pub use error::{G2Error, Result};
pub use scalar::{Mode, Rational, Scalar};
pub use series::Series;
pub use tensor::{hodge, inner, interior, wedge, Dense, Form, Mat7, Metric, SymBilinear, Vec7, DIM};
