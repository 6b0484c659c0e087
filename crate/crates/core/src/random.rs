//! Seeded generators for reproducible test vectors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::canonical::phi0;
use crate::scalar::{Rational, Scalar};
use crate::structure::G2Structure;
use crate::tensor::index::masks;
use crate::tensor::{Form, SymBilinear, Vec7, DIM};

pub type Rng64 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform components in `[-scale, scale]`.
pub fn float_form(rng: &mut Rng64, degree: usize, scale: f64) -> Form<f64> {
    let comps = (0..masks(degree).len()).map(|_| rng.gen_range(-scale..=scale)).collect();
    Form::from_components(degree, comps).expect("layout")
}

/// Components `n/den` with `|n| ≤ max_num`.
pub fn rational_form(rng: &mut Rng64, degree: usize, max_num: i64, den: i64) -> Form<Rational> {
    let comps = (0..masks(degree).len()).map(|_| Rational::ratio(rng.gen_range(-max_num..=max_num), den)).collect();
    Form::from_components(degree, comps).expect("layout")
}

pub fn vector(rng: &mut Rng64, scale: f64) -> Vec7<f64> {
    Vec7::from_fn(|_| rng.gen_range(-scale..=scale))
}

pub fn rational_vector(rng: &mut Rng64, max_num: i64, den: i64) -> Vec7<Rational> {
    Vec7::from_fn(|_| Rational::ratio(rng.gen_range(-max_num..=max_num), den))
}

pub fn symmetric(rng: &mut Rng64, scale: f64) -> SymBilinear<f64> {
    SymBilinear::from_fn(|_, _| rng.gen_range(-scale..=scale))
}

/// Traceless with respect to the structure's metric.
pub fn traceless<S: Scalar>(s: &G2Structure<S>, h: &SymBilinear<S>) -> SymBilinear<S> {
    s.metric().traceless(h)
}

pub fn traceless_symmetric(rng: &mut Rng64, s: &G2Structure<f64>, scale: f64) -> SymBilinear<f64> {
    traceless(s, &symmetric(rng, scale))
}

/// `φ₀` plus a uniform perturbation of the given size; positive for `scale ≲ 0.2`.
pub fn perturbed_phi(rng: &mut Rng64, scale: f64) -> Form<f64> {
    &phi0::<f64>() + &float_form(rng, 3, scale)
}

/// A positive 3-form drawn by pulling `φ₀` back along a random matrix near the identity.
pub fn gl_phi(rng: &mut Rng64, scale: f64) -> Form<f64> {
    let a: [[f64; DIM]; DIM] =
        std::array::from_fn(|i| std::array::from_fn(|j| if i == j { 1.0 } else { 0.0 } + rng.gen_range(-scale..=scale)));
    let p = phi0::<f64>();
    let mut comps = Vec::with_capacity(masks(3).len());
    for &v in masks(3) {
        let idx = crate::tensor::index::indices_vec(v);
        let mut acc = 0.0;
        for (jdx, c) in p.terms() {
            if *c == 0.0 {
                continue;
            }
            // (A*φ)_{ijk} = A_{ai} A_{bj} A_{ck} φ_{abc}, antisymmetric in (a,b,c).
            let mut det = 0.0;
            for (perm, sign) in crate::tensor::index::permutations_of(3) {
                let t: f64 = (0..3).map(|r| a[jdx[perm[r] as usize]][idx[r]]).product();
                det += *sign as f64 * t;
            }
            acc += c * det;
        }
        comps.push(acc);
    }
    Form::from_components(3, comps).expect("layout")
}
