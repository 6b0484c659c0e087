//! The flat G₂ structure on ℝ⁷.

use crate::scalar::Scalar;
use crate::tensor::Form;

/// Terms of `φ₀ = e^{123} + e^{145} + e^{167} + e^{246} − e^{257} − e^{347} − e^{356}`, 0-based.
pub const PHI0_TERMS: [([usize; 3], i64); 7] = [
    ([0, 1, 2], 1),
    ([0, 3, 4], 1),
    ([0, 5, 6], 1),
    ([1, 3, 5], 1),
    ([1, 4, 6], -1),
    ([2, 3, 6], -1),
    ([2, 4, 5], -1),
];

/// Terms of `ψ₀ = ∗φ₀ = e^{4567} + e^{2367} + e^{2345} + e^{1357} − e^{1346} − e^{1256} − e^{1247}`.
pub const PSI0_TERMS: [([usize; 4], i64); 7] = [
    ([3, 4, 5, 6], 1),
    ([1, 2, 5, 6], 1),
    ([1, 2, 3, 4], 1),
    ([0, 2, 4, 6], 1),
    ([0, 2, 3, 5], -1),
    ([0, 1, 4, 5], -1),
    ([0, 1, 3, 6], -1),
];

pub fn phi0<S: Scalar>() -> Form<S> {
    Form::from_terms(3, PHI0_TERMS.iter().map(|(i, s)| (i.to_vec(), S::from_int(*s)))).expect("valid terms")
}

pub fn psi0<S: Scalar>() -> Form<S> {
    Form::from_terms(4, PSI0_TERMS.iter().map(|(i, s)| (i.to_vec(), S::from_int(*s)))).expect("valid terms")
}

/// `φ₀_{ijk}` for arbitrary 0-based indices.
pub fn phi0_at(i: usize, j: usize, k: usize) -> i64 {
    use std::sync::OnceLock;
    static T: OnceLock<[[[i8; 7]; 7]; 7]> = OnceLock::new();
    let t = T.get_or_init(|| {
        let f = phi0::<f64>();
        let mut t = [[[0i8; 7]; 7]; 7];
        for (a, row) in t.iter_mut().enumerate() {
            for (b, col) in row.iter_mut().enumerate() {
                for (c, v) in col.iter_mut().enumerate() {
                    *v = f.get(&[a, b, c]) as i8;
                }
            }
        }
        t
    });
    t[i][j][k] as i64
}
