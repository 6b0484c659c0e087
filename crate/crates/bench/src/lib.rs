//! Fixed inputs shared by the benchmarks.

use g2_core::field::{samples, FormField, Grid};
use g2_core::structure::G2Structure;
use g2_core::{random, Form, SymBilinear};

/// A positive 3-form away from φ₀ and its structure.
pub fn structure(seed: u64) -> G2Structure<f64> {
    G2Structure::build(random::gl_phi(&mut random::rng(seed), 0.2)).expect("near-identity pullback is positive")
}

/// A random 3-form for decomposition benchmarks.
pub fn three_form(seed: u64) -> Form<f64> {
    random::float_form(&mut random::rng(seed), 3, 1.0)
}

/// A traceless direction with respect to `s`.
pub fn traceless(s: &G2Structure<f64>, seed: u64) -> SymBilinear<f64> {
    random::traceless_symmetric(&mut random::rng(seed), s, 1.0)
}

/// A generic torsion test field on an `n × n` grid.
pub fn torsion_field(n: usize) -> FormField {
    samples::generic(Grid::along(&[0, 1], n).expect("n ≥ 5"), 7, 0.1)
}
