use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::error::{G2Error, Result};
use crate::scalar::{Mode, Scalar};
use crate::tensor::{Form, Vec7, DIM};

/// General 7×7 array of components, `m[a][b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat7<S>(pub [[S; DIM]; DIM]);

impl<S: Scalar> Mat7<S> {
    pub fn from_fn(mut f: impl FnMut(usize, usize) -> S) -> Self {
        Mat7(std::array::from_fn(|a| std::array::from_fn(|b| f(a, b))))
    }

    pub fn zero() -> Self {
        Self::from_fn(|_, _| S::zero())
    }

    pub fn identity() -> Self {
        Self::from_fn(|a, b| if a == b { S::one() } else { S::zero() })
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(|a, b| self.0[b][a].clone())
    }

    pub fn scale(&self, c: &S) -> Self {
        Self::from_fn(|a, b| self.0[a][b].clone() * c.clone())
    }

    /// Plain trace, no metric.
    pub fn trace(&self) -> S {
        (0..DIM).fold(S::zero(), |acc, a| acc + self.0[a][a].clone())
    }

    pub fn apply(&self, v: &Vec7<S>) -> Vec7<S> {
        Vec7::from_fn(|a| (0..DIM).fold(S::zero(), |acc, b| acc + self.0[a][b].clone() * v.0[b].clone()))
    }

    pub fn sym_part(&self) -> SymBilinear<S> {
        let half = S::ratio(1, 2);
        SymBilinear(Self::from_fn(|a, b| (self.0[a][b].clone() + self.0[b][a].clone()) * half.clone()))
    }

    /// Antisymmetric part as a 2-form: `α_ab = ½(m_ab − m_ba)`.
    pub fn skew_part(&self) -> Form<S> {
        let half = S::ratio(1, 2);
        let mut f = Form::zero(2);
        for a in 0..DIM {
            for b in a + 1..DIM {
                let v = (self.0[a][b].clone() - self.0[b][a].clone()) * half.clone();
                f.add_term(&[a, b], v).expect("valid pair");
            }
        }
        f
    }

    /// The antisymmetric matrix of a 2-form.
    pub fn from_two_form(alpha: &Form<S>) -> Result<Self> {
        if alpha.degree() != 2 {
            return Err(G2Error::WrongDegree { expected: 2, found: alpha.degree() });
        }
        Ok(Self::from_fn(|a, b| alpha.get(&[a, b])))
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0, |m, c| m.max(c.magnitude()))
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Mat7<T> {
        Mat7::from_fn(|a, b| f(&self.0[a][b]))
    }

    /// Symmetric, exactly for exact scalars, to `1e-12` relative otherwise.
    pub fn is_symmetric(&self) -> bool {
        let scale = self.max_abs().max(1.0);
        (0..DIM).all(|a| {
            (a + 1..DIM).all(|b| {
                let d = self.0[a][b].clone() - self.0[b][a].clone();
                match S::MODE {
                    Mode::Exact => d.is_zero(),
                    Mode::Float => d.magnitude() <= 1e-12 * scale,
                }
            })
        })
    }
}

impl<S> Index<usize> for Mat7<S> {
    type Output = [S; DIM];
    fn index(&self, a: usize) -> &[S; DIM] {
        &self.0[a]
    }
}

impl<S> IndexMut<usize> for Mat7<S> {
    fn index_mut(&mut self, a: usize) -> &mut [S; DIM] {
        &mut self.0[a]
    }
}

impl<S: Scalar> Add for &Mat7<S> {
    type Output = Mat7<S>;
    fn add(self, rhs: &Mat7<S>) -> Mat7<S> {
        Mat7::from_fn(|a, b| self.0[a][b].clone() + rhs.0[a][b].clone())
    }
}

impl<S: Scalar> Sub for &Mat7<S> {
    type Output = Mat7<S>;
    fn sub(self, rhs: &Mat7<S>) -> Mat7<S> {
        Mat7::from_fn(|a, b| self.0[a][b].clone() - rhs.0[a][b].clone())
    }
}

impl<S: Scalar> Neg for &Mat7<S> {
    type Output = Mat7<S>;
    fn neg(self) -> Mat7<S> {
        Mat7::from_fn(|a, b| -self.0[a][b].clone())
    }
}

impl<S: Scalar> Mul for &Mat7<S> {
    type Output = Mat7<S>;
    fn mul(self, rhs: &Mat7<S>) -> Mat7<S> {
        Mat7::from_fn(|a, b| {
            (0..DIM).fold(S::zero(), |acc, k| acc + self.0[a][k].clone() * rhs.0[k][b].clone())
        })
    }
}

/// Symmetric 2-tensor with lower indices. Symmetry holds by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymBilinear<S>(Mat7<S>);

impl<S: Scalar> SymBilinear<S> {
    pub fn new(m: Mat7<S>) -> Result<Self> {
        if m.is_symmetric() {
            // Drop float noise so downstream code sees an exactly symmetric array.
            Ok(m.sym_part())
        } else {
            Err(G2Error::NotSymmetric)
        }
    }

    /// Builds from the upper triangle `f(a, b)` with `a ≤ b`.
    pub fn from_fn(mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut m = Mat7::zero();
        for a in 0..DIM {
            for b in a..DIM {
                let v = f(a, b);
                m.0[b][a] = v.clone();
                m.0[a][b] = v;
            }
        }
        SymBilinear(m)
    }

    pub fn zero() -> Self {
        SymBilinear(Mat7::zero())
    }

    pub fn identity() -> Self {
        SymBilinear(Mat7::identity())
    }

    pub fn diagonal(d: [S; DIM]) -> Self {
        Self::from_fn(|a, b| if a == b { d[a].clone() } else { S::zero() })
    }

    pub fn mat(&self) -> &Mat7<S> {
        &self.0
    }

    pub fn into_mat(self) -> Mat7<S> {
        self.0
    }

    pub fn get(&self, a: usize, b: usize) -> &S {
        &self.0 .0[a][b]
    }

    pub fn scale(&self, c: &S) -> Self {
        SymBilinear(self.0.scale(c))
    }

    pub fn max_abs(&self) -> f64 {
        self.0.max_abs()
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> SymBilinear<T> {
        SymBilinear(self.0.map(f))
    }
}

impl<S: Scalar> Add for &SymBilinear<S> {
    type Output = SymBilinear<S>;
    fn add(self, rhs: &SymBilinear<S>) -> SymBilinear<S> {
        SymBilinear(&self.0 + &rhs.0)
    }
}

impl<S: Scalar> Sub for &SymBilinear<S> {
    type Output = SymBilinear<S>;
    fn sub(self, rhs: &SymBilinear<S>) -> SymBilinear<S> {
        SymBilinear(&self.0 - &rhs.0)
    }
}

impl<S: Scalar> Neg for &SymBilinear<S> {
    type Output = SymBilinear<S>;
    fn neg(self) -> SymBilinear<S> {
        SymBilinear(-&self.0)
    }
}

impl<S: Scalar> Add for SymBilinear<S> {
    type Output = SymBilinear<S>;
    fn add(self, rhs: SymBilinear<S>) -> SymBilinear<S> {
        &self + &rhs
    }
}

impl<S: Scalar> Sub for SymBilinear<S> {
    type Output = SymBilinear<S>;
    fn sub(self, rhs: SymBilinear<S>) -> SymBilinear<S> {
        &self - &rhs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    #[test]
    fn symmetry_is_checked() {
        let mut m = Mat7::<Rational>::identity();
        m[0][1] = Rational::from_int(2);
        assert_eq!(SymBilinear::new(m.clone()), Err(G2Error::NotSymmetric));
        m[1][0] = Rational::from_int(2);
        assert!(SymBilinear::new(m).is_ok());
    }

    #[test]
    fn skew_part_round_trips() {
        let alpha = Form::<Rational>::unit(&[1, 4]);
        let m = Mat7::from_two_form(&alpha).unwrap();
        assert_eq!(m[4][1], Rational::from_int(-1));
        assert_eq!(m.skew_part(), alpha);
        assert!(m.sym_part().max_abs() == 0.0);
    }
}
