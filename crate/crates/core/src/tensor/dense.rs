use std::ops::{Add, Mul, Neg, Sub};

use num_traits::Zero;

use crate::scalar::Scalar;
use crate::tensor::index::{masks, permutations_of};
use crate::tensor::{Form, DIM};

/// Every component of a rank-r tensor on the 7-dim space, row-major
/// (last index fastest). Used where index placement matters more than
/// antisymmetry: contraction identities and torsion bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    rank: usize,
    data: Vec<T>,
}

pub fn flat_index(idx: &[usize]) -> usize {
    idx.iter().fold(0, |acc, &i| acc * DIM + i)
}

pub fn unflatten(mut k: usize, rank: usize) -> Vec<usize> {
    let mut idx = vec![0; rank];
    for slot in (0..rank).rev() {
        idx[slot] = k % DIM;
        k /= DIM;
    }
    idx
}

impl<T> Dense<T>
where
    T: Clone + Zero + Add<Output = T> + Sub<Output = T> + Mul<Output = T> + Neg<Output = T>,
{
    pub fn zeros(rank: usize) -> Self {
        Dense { rank, data: vec![T::zero(); DIM.pow(rank as u32)] }
    }

    pub fn from_fn(rank: usize, f: impl Fn(&[usize]) -> T) -> Self {
        let data = (0..DIM.pow(rank as u32)).map(|k| f(&unflatten(k, rank))).collect();
        Dense { rank, data }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn get(&self, idx: &[usize]) -> &T {
        &self.data[flat_index(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: T) {
        let k = flat_index(idx);
        self.data[k] = v;
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Dense<U> {
        Dense { rank: self.rank, data: self.data.iter().map(f).collect() }
    }

    /// Tensor product, `self` indices first.
    pub fn outer(&self, other: &Self) -> Self {
        let mut data = Vec::with_capacity(self.data.len() * other.data.len());
        for a in &self.data {
            for b in &other.data {
                data.push(a.clone() * b.clone());
            }
        }
        Dense { rank: self.rank + other.rank, data }
    }

    /// Reorder slots: output slot `k` takes input slot `order[k]`.
    pub fn permute(&self, order: &[usize]) -> Self {
        assert_eq!(order.len(), self.rank);
        let strides: Vec<usize> = (0..self.rank).map(|s| DIM.pow((self.rank - 1 - s) as u32)).collect();
        let mut out = Self::zeros(self.rank);
        for k in 0..self.data.len() {
            let idx = unflatten(k, self.rank);
            let src: usize = order.iter().enumerate().map(|(o, &s)| idx[o] * strides[s]).sum();
            out.data[k] = self.data[src].clone();
        }
        out
    }

    /// Unweighted signed sum over permutations of the given slots.
    pub fn antisymmetrize(&self, slots: &[usize]) -> Self {
        let rank = self.rank;
        let strides: Vec<usize> = (0..rank).map(|s| DIM.pow((rank - 1 - s) as u32)).collect();
        let perms = permutations_of(slots.len());
        let mut out = Self::zeros(rank);
        let mut idx = vec![0usize; rank];
        for k in 0..self.data.len() {
            // Odometer keeps `idx` in sync with `k` without divisions.
            if k > 0 {
                let mut s = rank;
                loop {
                    s -= 1;
                    idx[s] += 1;
                    if idx[s] < DIM {
                        break;
                    }
                    idx[s] = 0;
                }
            }
            let base: usize = k - slots.iter().map(|&s| idx[s] * strides[s]).sum::<usize>();
            let mut acc = T::zero();
            for (perm, sign) in perms {
                let src = base + perm.iter().enumerate().map(|(j, &pj)| idx[slots[pj as usize]] * strides[slots[j]]).sum::<usize>();
                let v = self.data[src].clone();
                acc = if *sign > 0 { acc + v } else { acc - v };
            }
            out.data[k] = acc;
        }
        out
    }

    pub fn scale(&self, c: &T) -> Self {
        self.map(|v| v.clone() * c.clone())
    }
}

impl<T: Clone + Add<Output = T>> Add for &Dense<T> {
    type Output = Dense<T>;
    fn add(self, rhs: &Dense<T>) -> Dense<T> {
        assert_eq!(self.rank, rhs.rank);
        Dense { rank: self.rank, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a.clone() + b.clone()).collect() }
    }
}

impl<T: Clone + Sub<Output = T>> Sub for &Dense<T> {
    type Output = Dense<T>;
    fn sub(self, rhs: &Dense<T>) -> Dense<T> {
        assert_eq!(self.rank, rhs.rank);
        Dense { rank: self.rank, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a.clone() - b.clone()).collect() }
    }
}

impl<S: Scalar> Dense<S> {
    /// Expand a form to all index tuples.
    pub fn from_form(f: &Form<S>) -> Self {
        let p = f.degree();
        let mut out = Self::zeros(p);
        for (&m, v) in masks(p).iter().zip(f.components()) {
            if v.is_zero() {
                continue;
            }
            let idx: Vec<usize> = crate::tensor::index::indices(m).collect();
            for (perm, sign) in permutations_of(p) {
                let t: Vec<usize> = perm.iter().map(|&k| idx[k as usize]).collect();
                out.set(&t, if *sign > 0 { v.clone() } else { -v.clone() });
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, c| m.max(c.magnitude()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn antisymmetrize_matches_definition() {
        let t = Dense::<i64>::from_fn(3, |i| (i[0] * 49 + i[1] * 7 + i[2]) as i64 * (i[0] as i64 + 1));
        let a = t.antisymmetrize(&[0, 2]);
        for i in 0..DIM {
            for j in 0..DIM {
                for k in 0..DIM {
                    assert_eq!(*a.get(&[i, j, k]), t.get(&[i, j, k]) - t.get(&[k, j, i]));
                }
            }
        }
    }

    #[test]
    fn permute_swaps_slots() {
        let t = Dense::<i64>::from_fn(2, |i| (10 * i[0] + i[1]) as i64);
        let p = t.permute(&[1, 0]);
        assert_eq!(*p.get(&[2, 5]), 52);
    }

    #[test]
    fn from_form_is_antisymmetric() {
        let f = Form::<f64>::unit(&[1, 2, 5]);
        let d = Dense::from_form(&f);
        assert_eq!(*d.get(&[5, 2, 1]), -1.0);
        assert_eq!(*d.get(&[2, 5, 1]), 1.0);
        assert_eq!(d.data().iter().filter(|v| **v != 0.0).count(), 6);
    }
}
