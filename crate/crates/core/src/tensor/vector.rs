use std::ops::{Add, Index, IndexMut, Neg, Sub};

use crate::scalar::Scalar;
use crate::tensor::DIM;

/// Components of a vector (or covector) in the coordinate basis. Whether the
/// index is up or down is fixed by context; converting goes through a metric.
#[derive(Debug, Clone, PartialEq)]
pub struct Vec7<S>(pub [S; DIM]);

impl<S: Scalar> Vec7<S> {
    pub fn zero() -> Self {
        Vec7(std::array::from_fn(|_| S::zero()))
    }

    pub fn from_fn(f: impl FnMut(usize) -> S) -> Self {
        Vec7(std::array::from_fn(f))
    }

    /// The basis vector `e_i` (0-based).
    pub fn unit(i: usize) -> Self {
        Self::from_fn(|k| if k == i { S::one() } else { S::zero() })
    }

    pub fn scale(&self, c: &S) -> Self {
        Self::from_fn(|k| self.0[k].clone() * c.clone())
    }

    /// Plain coordinate pairing `Σ u_k v_k`.
    pub fn dot(&self, other: &Self) -> S {
        self.0
            .iter()
            .zip(&other.0)
            .fold(S::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Vec7<T> {
        Vec7::from_fn(|k| f(&self.0[k]))
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.is_zero())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, c| m.max(c.magnitude()))
    }
}

impl<S> Index<usize> for Vec7<S> {
    type Output = S;
    fn index(&self, i: usize) -> &S {
        &self.0[i]
    }
}

impl<S> IndexMut<usize> for Vec7<S> {
    fn index_mut(&mut self, i: usize) -> &mut S {
        &mut self.0[i]
    }
}

impl<S: Scalar> Add for &Vec7<S> {
    type Output = Vec7<S>;
    fn add(self, rhs: &Vec7<S>) -> Vec7<S> {
        Vec7::from_fn(|k| self.0[k].clone() + rhs.0[k].clone())
    }
}

impl<S: Scalar> Sub for &Vec7<S> {
    type Output = Vec7<S>;
    fn sub(self, rhs: &Vec7<S>) -> Vec7<S> {
        Vec7::from_fn(|k| self.0[k].clone() - rhs.0[k].clone())
    }
}

impl<S: Scalar> Neg for &Vec7<S> {
    type Output = Vec7<S>;
    fn neg(self) -> Vec7<S> {
        Vec7::from_fn(|k| -self.0[k].clone())
    }
}

impl<S: Scalar> Add for Vec7<S> {
    type Output = Vec7<S>;
    fn add(self, rhs: Vec7<S>) -> Vec7<S> {
        &self + &rhs
    }
}

impl<S: Scalar> Sub for Vec7<S> {
    type Output = Vec7<S>;
    fn sub(self, rhs: Vec7<S>) -> Vec7<S> {
        &self - &rhs
    }
}
