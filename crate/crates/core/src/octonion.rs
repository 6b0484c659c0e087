//! Octonions with structure constants read off `φ₀`:
//! `e_i e_j = −δ_ij + φ₀_{ijk} e_k`.

use std::ops::{Add, Mul, Neg, Sub};

use num_traits::Zero;

use crate::canonical::{phi0_at, psi0};
use crate::error::{G2Error, Result};
use crate::scalar::{Rational, Scalar};
use crate::tensor::{Vec7, DIM};

/// Sign relating `ψ₀` to the associator: `ψ₀(a,b,c,d) = σ·½⟨[a,b,c], d⟩`
/// with `[a,b,c] = a(bc) − (ab)c`. Determined by [`check_psi_associator`].
pub const PSI_ASSOCIATOR_SIGN: i64 = -1;

#[derive(Debug, Clone, PartialEq)]
pub struct Octonion<S> {
    pub re: S,
    pub im: Vec7<S>,
}

impl<S: Scalar> Octonion<S> {
    pub fn new(re: S, im: Vec7<S>) -> Self {
        Octonion { re, im }
    }

    pub fn real(re: S) -> Self {
        Octonion { re, im: Vec7::zero() }
    }

    pub fn imaginary(im: Vec7<S>) -> Self {
        Octonion { re: S::zero(), im }
    }

    /// Basis unit: 0 is `1`, `k` in 1..=7 is `e_k`.
    pub fn unit(k: usize) -> Self {
        if k == 0 {
            Self::real(S::one())
        } else {
            Self::imaginary(Vec7::unit(k - 1))
        }
    }

    pub fn conj(&self) -> Self {
        Octonion { re: self.re.clone(), im: -&self.im }
    }

    pub fn norm_sq(&self) -> S {
        self.re.clone() * self.re.clone() + self.im.dot(&self.im)
    }

    /// Coefficients of `1, e₁, …, e₇`.
    pub fn coefficients(&self) -> [S; 8] {
        std::array::from_fn(|k| if k == 0 { self.re.clone() } else { self.im.0[k - 1].clone() })
    }

    pub fn scale(&self, c: &S) -> Self {
        Octonion { re: self.re.clone() * c.clone(), im: self.im.scale(c) }
    }
}

/// `(u×v)_k = φ₀_{ijk} u_i v_j`, the imaginary part of `uv`.
fn phi_product<S: Scalar>(u: &Vec7<S>, v: &Vec7<S>) -> Vec7<S> {
    let mut out = Vec7::<S>::zero();
    for i in 0..DIM {
        if u.0[i].is_zero() {
            continue;
        }
        for j in 0..DIM {
            if i == j || v.0[j].is_zero() {
                continue;
            }
            for k in 0..DIM {
                let c = phi0_at(i, j, k);
                if c != 0 {
                    let t = u.0[i].clone() * v.0[j].clone();
                    out.0[k] = if c > 0 { out.0[k].clone() + t } else { out.0[k].clone() - t };
                }
            }
        }
    }
    out
}

impl<S: Scalar> Mul for &Octonion<S> {
    type Output = Octonion<S>;
    fn mul(self, rhs: &Octonion<S>) -> Octonion<S> {
        let re = self.re.clone() * rhs.re.clone() - self.im.dot(&rhs.im);
        let im = &(&rhs.im.scale(&self.re) + &self.im.scale(&rhs.re)) + &phi_product(&self.im, &rhs.im);
        Octonion { re, im }
    }
}

impl<S: Scalar> Add for &Octonion<S> {
    type Output = Octonion<S>;
    fn add(self, rhs: &Octonion<S>) -> Octonion<S> {
        Octonion { re: self.re.clone() + rhs.re.clone(), im: &self.im + &rhs.im }
    }
}

impl<S: Scalar> Sub for &Octonion<S> {
    type Output = Octonion<S>;
    fn sub(self, rhs: &Octonion<S>) -> Octonion<S> {
        Octonion { re: self.re.clone() - rhs.re.clone(), im: &self.im - &rhs.im }
    }
}

impl<S: Scalar> Neg for &Octonion<S> {
    type Output = Octonion<S>;
    fn neg(self) -> Octonion<S> {
        Octonion { re: -self.re.clone(), im: -&self.im }
    }
}

pub fn multiply<S: Scalar>(x: &Octonion<S>, y: &Octonion<S>) -> Octonion<S> {
    x * y
}

/// `a×b = ½(ab − ba)` for imaginary octonions.
pub fn cross<S: Scalar>(a: &Vec7<S>, b: &Vec7<S>) -> Vec7<S> {
    let (x, y) = (Octonion::imaginary(a.clone()), Octonion::imaginary(b.clone()));
    (&(&x * &y) - &(&y * &x)).im.scale(&S::ratio(1, 2))
}

/// The cross product straight from the `φ₀` contraction.
pub fn cross_from_phi<S: Scalar>(a: &Vec7<S>, b: &Vec7<S>) -> Vec7<S> {
    phi_product(a, b)
}

/// `⟨a, b×c⟩`.
pub fn triple<S: Scalar>(a: &Vec7<S>, b: &Vec7<S>, c: &Vec7<S>) -> S {
    a.dot(&cross(b, c))
}

/// `a(bc) − (ab)c`.
pub fn associator<S: Scalar>(a: &Octonion<S>, b: &Octonion<S>, c: &Octonion<S>) -> Octonion<S> {
    &(a * &(b * c)) - &(&(a * b) * c)
}

/// Full multiplication table over `1, e₁, …, e₇`: entry `(i, j)` is
/// `(sign, k)` with `u_i u_j = sign · u_k`.
pub fn table() -> [[(i64, usize); 8]; 8] {
    let mut t = [[(0, 0); 8]; 8];
    for (i, row) in t.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            let p = &Octonion::<Rational>::unit(i) * &Octonion::unit(j);
            let c = p.coefficients();
            let k = (0..8).find(|&k| !c[k].is_zero()).expect("units multiply to units");
            *cell = (if c[k].is_positive() { 1 } else { -1 }, k);
        }
    }
    t
}

/// Outcome of comparing `ψ₀` with the dualized associator on every basis 4-tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiAssociatorCheck {
    pub sigma: i64,
    pub residual: f64,
    pub nonzero_tuples: usize,
}

pub fn check_psi_associator<S: Scalar>() -> Result<PsiAssociatorCheck> {
    let psi = psi0::<S>();
    let half = S::ratio(1, 2);
    let mut sigma: Option<i64> = None;
    let mut nonzero = 0;
    let mut rhs_all = Vec::with_capacity(DIM.pow(4));
    for a in 0..DIM {
        for b in 0..DIM {
            for c in 0..DIM {
                let assoc = associator(
                    &Octonion::<S>::unit(a + 1),
                    &Octonion::unit(b + 1),
                    &Octonion::unit(c + 1),
                );
                for d in 0..DIM {
                    let lhs = psi.get(&[a, b, c, d]);
                    let rhs = assoc.im.0[d].clone() * half.clone();
                    if !lhs.is_zero() && sigma.is_none() {
                        if rhs.is_zero() {
                            return Err(G2Error::Invariant(format!("ψ₀ nonzero but associator zero at {:?}", [a, b, c, d])));
                        }
                        let ratio = (lhs.clone() / rhs.clone()).to_f64();
                        sigma = Some(if ratio > 0.0 { 1 } else { -1 });
                    }
                    if !lhs.is_zero() {
                        nonzero += 1;
                    }
                    rhs_all.push((lhs, rhs));
                }
            }
        }
    }
    let sigma = sigma.ok_or_else(|| G2Error::Invariant("ψ₀ vanished on every tuple".into()))?;
    let s = S::from_int(sigma);
    let residual = rhs_all
        .into_iter()
        .fold(0.0f64, |m, (l, r)| m.max((l - s.clone() * r).magnitude()));
    if residual != 0.0 && S::MODE == crate::scalar::Mode::Exact {
        return Err(G2Error::Invariant(format!("no single sign fits ψ₀ and the associator (residual {residual})")));
    }
    Ok(PsiAssociatorCheck { sigma, residual, nonzero_tuples: nonzero })
}

#[cfg(test)]
mod tests {
    use super::*;
    type O = Octonion<Rational>;

    fn e(k: usize) -> O {
        O::unit(k)
    }

    #[test]
    fn products_of_units() {
        assert_eq!(&e(1) * &e(2), e(3));
        assert_eq!(&e(1) * &e(1), -&e(0));
        assert_eq!(&e(2) * &e(5), -&e(7));
        assert_eq!(&e(0) * &e(4), e(4));
    }

    #[test]
    fn cross_examples() {
        let v = |k: usize| Vec7::<Rational>::unit(k - 1);
        assert_eq!(cross(&v(1), &v(2)), v(3));
        assert_eq!(cross(&v(2), &v(4)), v(6));
        assert!(cross(&v(5), &v(5)).is_zero());
        assert_eq!(triple(&v(1), &v(2), &v(3)), Rational::from_int(1));
        assert_eq!(triple(&v(3), &v(4), &v(7)), Rational::from_int(-1));
        assert_eq!(triple(&v(1), &v(1), &v(2)), Rational::from_int(0));
    }

    #[test]
    fn associator_examples() {
        assert_eq!(associator(&e(1), &e(2), &e(3)), O::real(Rational::from_int(0)));
        assert_eq!(associator(&e(1), &e(2), &e(4)), e(7).scale(&Rational::from_int(2)));
    }

    #[test]
    fn psi_sign_is_frozen() {
        let r = check_psi_associator::<Rational>().unwrap();
        assert_eq!(r.sigma, PSI_ASSOCIATOR_SIGN);
        assert_eq!(r.residual, 0.0);
        assert_eq!(r.nonzero_tuples, 7 * 24);
    }

    #[test]
    fn table_is_signed_permutation() {
        let t = table();
        assert_eq!(t[1][2], (1, 3));
        assert_eq!(t[2][5], (-1, 7));
        assert_eq!(t[3][3], (-1, 0));
        for row in t {
            let mut seen: Vec<usize> = row.iter().map(|c| c.1).collect();
            seen.sort();
            assert_eq!(seen, (0..8).collect::<Vec<_>>());
        }
    }
}
