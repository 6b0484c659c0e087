//! Multilinear algebra on the oriented 7-dimensional space.
//!
//! All indices in this API are 0-based: `Form::unit(&[0, 1, 2])` is `e^{123}`.
//! The JSON layer converts to and from the 1-based convention.

mod dense;
pub mod index;
mod form;
mod matrix;
mod metric;
mod vector;

pub use dense::{flat_index, unflatten, Dense};
pub use form::Form;
pub use index::DIM;
pub use matrix::{Mat7, SymBilinear};
pub(crate) use metric::ldl;
pub use metric::{positive_definite_det, Metric};
pub use vector::Vec7;

use crate::error::Result;
use crate::scalar::Scalar;

pub fn wedge<S: Scalar>(a: &Form<S>, b: &Form<S>) -> Result<Form<S>> {
    a.wedge(b)
}

pub fn interior<S: Scalar>(u: &Vec7<S>, a: &Form<S>) -> Result<Form<S>> {
    a.interior(u)
}

pub fn inner<S: Scalar>(a: &Form<S>, b: &Form<S>, g: &Metric<S>) -> Result<S> {
    g.inner(a, b)
}

pub fn hodge<S: Scalar>(a: &Form<S>, g: &Metric<S>) -> Form<S> {
    g.hodge(a)
}

/// Top-degree coefficient of a 7-form (0 for a form of smaller degree).
pub fn top_coefficient<S: Scalar>(f: &Form<S>) -> S {
    if f.degree() == DIM {
        f.components()[0].clone()
    } else {
        S::zero()
    }
}
