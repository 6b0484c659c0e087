use std::ops::{Add, Neg, Sub};

use crate::error::{G2Error, Result};
use crate::scalar::Scalar;
use crate::tensor::index::{self, binom, indices_vec, mask_of, masks, position, wedge_sign, DIM};
use crate::tensor::Vec7;

/// A p-form with every canonical component stored, indices 0-based.
///
/// Component `k` belongs to the `k`-th strictly increasing tuple in
/// lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct Form<S> {
    degree: usize,
    comps: Vec<S>,
}

impl<S: Scalar> Form<S> {
    pub fn zero(degree: usize) -> Self {
        assert!(degree <= DIM, "degree {degree} exceeds 7");
        Form { degree, comps: vec![S::zero(); binom(DIM, degree)] }
    }

    pub fn scalar(value: S) -> Self {
        Form { degree: 0, comps: vec![value] }
    }

    pub fn from_components(degree: usize, comps: Vec<S>) -> Result<Self> {
        if degree > DIM {
            return Err(G2Error::WrongDegree { expected: DIM, found: degree });
        }
        if comps.len() != binom(DIM, degree) {
            return Err(G2Error::Parse(format!(
                "{}-form needs {} components, got {}",
                degree,
                binom(DIM, degree),
                comps.len()
            )));
        }
        Ok(Form { degree, comps })
    }

    /// Sum of `value · e^{idx}` terms; tuples may be unsorted.
    pub fn from_terms<I>(degree: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<usize>, S)>,
    {
        let mut f = Self::zero(degree);
        for (idx, v) in terms {
            f.add_term(&idx, v)?;
        }
        Ok(f)
    }

    /// The elementary form `e^{i j …}`. Panics on a repeated or invalid index.
    pub fn unit(idx: &[usize]) -> Self {
        let mut f = Self::zero(idx.len());
        f.add_term(idx, S::one()).expect("valid elementary form");
        f
    }

    pub fn add_term(&mut self, idx: &[usize], value: S) -> Result<()> {
        if idx.len() != self.degree {
            return Err(G2Error::DegreeMismatch(idx.len(), self.degree));
        }
        if idx.iter().any(|&i| i >= DIM) {
            return Err(G2Error::BadIndex(idx.to_vec()));
        }
        let (mask, sign) = mask_of(idx).ok_or_else(|| G2Error::BadIndex(idx.to_vec()))?;
        let k = position(mask);
        let v = if sign > 0 { value } else { -value };
        self.comps[k] = self.comps[k].clone() + v;
        Ok(())
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn components(&self) -> &[S] {
        &self.comps
    }

    pub fn into_components(self) -> Vec<S> {
        self.comps
    }

    /// Component of a canonical mask.
    pub fn at_mask(&self, mask: u8) -> &S {
        &self.comps[position(mask)]
    }

    /// Value on an arbitrary index tuple: permutation sign applied, repeated
    /// indices give zero.
    pub fn get(&self, idx: &[usize]) -> S {
        assert_eq!(idx.len(), self.degree, "tuple length must equal the degree");
        match mask_of(idx) {
            None => S::zero(),
            Some((mask, sign)) => {
                let v = self.comps[position(mask)].clone();
                if sign > 0 {
                    v
                } else {
                    -v
                }
            }
        }
    }

    /// Nonzero terms as (sorted 0-based tuple, value), canonical order.
    pub fn terms(&self) -> impl Iterator<Item = (Vec<usize>, &S)> + '_ {
        masks(self.degree)
            .iter()
            .zip(&self.comps)
            .filter(|(_, v)| !v.is_zero())
            .map(|(&m, v)| (indices_vec(m), v))
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(|c| c.is_zero())
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, c| m.max(c.magnitude()))
    }

    pub fn scale(&self, c: &S) -> Self {
        Form { degree: self.degree, comps: self.comps.iter().map(|v| v.clone() * c.clone()).collect() }
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Form<T> {
        Form { degree: self.degree, comps: self.comps.iter().map(f).collect() }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a.clone() + b.clone())
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a.clone() - b.clone())
    }

    fn zip(&self, other: &Self, f: impl Fn(&S, &S) -> S) -> Result<Self> {
        if self.degree != other.degree {
            return Err(G2Error::DegreeMismatch(self.degree, other.degree));
        }
        Ok(Form {
            degree: self.degree,
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| f(a, b)).collect(),
        })
    }

    pub fn wedge(&self, other: &Self) -> Result<Self> {
        let (p, q) = (self.degree, other.degree);
        if p + q > DIM {
            return Err(G2Error::DegreeOverflow(p, q));
        }
        let mut out = Self::zero(p + q);
        for (&ma, a) in masks(p).iter().zip(&self.comps) {
            if a.is_zero() {
                continue;
            }
            for (&mb, b) in masks(q).iter().zip(&other.comps) {
                if ma & mb != 0 || b.is_zero() {
                    continue;
                }
                let k = position(ma | mb);
                let t = a.clone() * b.clone();
                out.comps[k] = if wedge_sign(ma, mb) > 0 {
                    out.comps[k].clone() + t
                } else {
                    out.comps[k].clone() - t
                };
            }
        }
        Ok(out)
    }

    /// `(u⌟a)_{b…} = u^a a_{a b …}`; `u` carries an upper index.
    pub fn interior(&self, u: &Vec7<S>) -> Result<Self> {
        if self.degree == 0 {
            return Err(G2Error::WrongDegree { expected: 1, found: 0 });
        }
        let mut out = Self::zero(self.degree - 1);
        for (&m, v) in masks(self.degree).iter().zip(&self.comps) {
            if v.is_zero() {
                continue;
            }
            for (slot, i) in index::indices(m).enumerate() {
                if u.0[i].is_zero() {
                    continue;
                }
                let k = position(m & !(1 << i));
                let t = u.0[i].clone() * v.clone();
                out.comps[k] = if slot % 2 == 0 {
                    out.comps[k].clone() + t
                } else {
                    out.comps[k].clone() - t
                };
            }
        }
        Ok(out)
    }

    /// Contraction with the basis vector `e_i`.
    pub fn interior_unit(&self, i: usize) -> Result<Self> {
        self.interior(&Vec7::unit(i))
    }
}

impl<S: Scalar> Add for &Form<S> {
    type Output = Form<S>;
    /// Panics on a degree mismatch; use [`Form::checked_add`] for fallible input.
    fn add(self, rhs: &Form<S>) -> Form<S> {
        self.checked_add(rhs).expect("adding forms of different degree")
    }
}

impl<S: Scalar> Sub for &Form<S> {
    type Output = Form<S>;
    fn sub(self, rhs: &Form<S>) -> Form<S> {
        self.checked_sub(rhs).expect("subtracting forms of different degree")
    }
}

impl<S: Scalar> Neg for &Form<S> {
    type Output = Form<S>;
    fn neg(self) -> Form<S> {
        self.map(|v| -v.clone())
    }
}

impl<S: Scalar> Add for Form<S> {
    type Output = Form<S>;
    fn add(self, rhs: Form<S>) -> Form<S> {
        &self + &rhs
    }
}

impl<S: Scalar> Sub for Form<S> {
    type Output = Form<S>;
    fn sub(self, rhs: Form<S>) -> Form<S> {
        &self - &rhs
    }
}

impl<S: Scalar> Neg for Form<S> {
    type Output = Form<S>;
    fn neg(self) -> Form<S> {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    type F = Form<Rational>;

    #[test]
    fn elementary_wedges() {
        let e1 = F::unit(&[0]);
        let e2 = F::unit(&[1]);
        assert_eq!(e1.wedge(&e2).unwrap(), F::unit(&[0, 1]));
        assert_eq!(e2.wedge(&e1).unwrap(), -F::unit(&[0, 1]));
        assert!(e1.wedge(&e1).unwrap().is_zero());
        let top = F::unit(&[0, 1, 2, 3]);
        assert_eq!(top.wedge(&F::unit(&[0, 1, 2, 3, 4])), Err(G2Error::DegreeOverflow(4, 5)));
    }

    #[test]
    fn permuted_evaluation() {
        let f = F::unit(&[1, 3, 5]);
        assert_eq!(f.get(&[3, 1, 5]), Rational::from_int(-1));
        assert_eq!(f.get(&[5, 1, 3]), Rational::from_int(1));
        assert_eq!(f.get(&[1, 1, 5]), Rational::from_int(0));
        assert_eq!(F::unit(&[2, 0]), -F::unit(&[0, 2]));
    }

    #[test]
    fn interior_signs() {
        let top = F::unit(&[0, 1, 2, 3, 4, 5, 6]);
        assert_eq!(top.interior_unit(6).unwrap(), F::unit(&[0, 1, 2, 3, 4, 5]));
        assert_eq!(top.interior_unit(1).unwrap(), -F::unit(&[0, 2, 3, 4, 5, 6]));
        assert!(F::scalar(Rational::from_int(1)).interior_unit(0).is_err());
    }

    #[test]
    fn rejects_bad_terms() {
        assert!(F::from_terms(2, vec![(vec![0, 0], Rational::from_int(1))]).is_err());
        assert!(F::from_terms(2, vec![(vec![0, 9], Rational::from_int(1))]).is_err());
        assert!(F::from_terms(2, vec![(vec![0], Rational::from_int(1))]).is_err());
    }
}
