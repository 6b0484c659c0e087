//! Truncated power series in one parameter with float coefficients.
//!
//! `Series<N>` holds the coefficients of `1, t, …, t^(N-1)`. Feeding it through
//! the generic structure pipeline gives Taylor coefficients of the metric and
//! dual form along a line `φ + tχ`; `Series<2>` doubles as dual numbers for
//! directional derivatives.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{One, Zero};

use crate::scalar::{Mode, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Series<const N: usize>(pub [f64; N]);

impl<const N: usize> Series<N> {
    pub fn constant(c: f64) -> Self {
        let mut a = [0.0; N];
        a[0] = c;
        Series(a)
    }

    /// `c0 + c1·t`.
    pub fn linear(c0: f64, c1: f64) -> Self {
        let mut a = [0.0; N];
        a[0] = c0;
        if N > 1 {
            a[1] = c1;
        }
        Series(a)
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.0[k]
    }

    /// `log` of a series with positive constant term.
    pub fn ln(&self) -> Self {
        let c0 = self.0[0];
        let mut u = *self;
        u.0[0] = 0.0;
        for c in &mut u.0 {
            *c /= c0;
        }
        let mut out = Self::constant(c0.ln());
        let mut power = Self::constant(1.0);
        for k in 1..N {
            power = power * u;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            for (o, p) in out.0.iter_mut().zip(power.0) {
                *o += sign * p / k as f64;
            }
        }
        out
    }

    /// Evaluate the truncated polynomial at `t`.
    pub fn eval(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }
}

impl<const N: usize> Add for Series<N> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for k in 0..N {
            self.0[k] += rhs.0[k];
        }
        self
    }
}

impl<const N: usize> Sub for Series<N> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for k in 0..N {
            self.0[k] -= rhs.0[k];
        }
        self
    }
}

impl<const N: usize> Neg for Series<N> {
    type Output = Self;
    fn neg(mut self) -> Self {
        for c in &mut self.0 {
            *c = -*c;
        }
        self
    }
}

impl<const N: usize> Mul for Series<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = [0.0; N];
        for i in 0..N {
            if self.0[i] == 0.0 {
                continue;
            }
            for j in 0..N - i {
                out[i + j] += self.0[i] * rhs.0[j];
            }
        }
        Series(out)
    }
}

impl<const N: usize> Div for Series<N> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        // a = q·b solved order by order.
        let b0 = rhs.0[0];
        let mut q = [0.0; N];
        for k in 0..N {
            let mut acc = self.0[k];
            for j in 1..=k {
                acc -= rhs.0[j] * q[k - j];
            }
            q[k] = acc / b0;
        }
        Series(q)
    }
}

impl<const N: usize> Zero for Series<N> {
    fn zero() -> Self {
        Series([0.0; N])
    }
    fn is_zero(&self) -> bool {
        self.0.iter().all(|c| *c == 0.0)
    }
}

impl<const N: usize> One for Series<N> {
    fn one() -> Self {
        Self::constant(1.0)
    }
}

impl<const N: usize> Scalar for Series<N> {
    const MODE: Mode = Mode::Float;

    fn from_int(n: i64) -> Self {
        Self::constant(n as f64)
    }

    fn ratio(num: i64, den: i64) -> Self {
        Self::constant(num as f64 / den as f64)
    }

    fn is_positive(&self) -> bool {
        self.0[0] > 0.0
    }

    fn to_f64(&self) -> f64 {
        self.0[0]
    }

    fn magnitude(&self) -> f64 {
        self.0.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    fn pow_ratio(&self, num: i64, den: u32) -> Option<Self> {
        let a0 = self.0[0];
        if a0 <= 0.0 {
            return None;
        }
        // Miller's recurrence for b = a^p.
        let p = num as f64 / den as f64;
        let mut b = [0.0; N];
        b[0] = a0.powf(p);
        for k in 1..N {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += ((p + 1.0) * j as f64 - k as f64) * self.0[j] * b[k - j];
            }
            b[k] = acc / (k as f64 * a0);
        }
        Some(Series(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type S4 = Series<4>;

    #[test]
    fn log_of_exponential_line() {
        // log(2(1 + t)) = log 2 + t − t²/2 + t³/3
        let l = S4::linear(2.0, 2.0).ln();
        let want = [2f64.ln(), 1.0, -0.5, 1.0 / 3.0];
        for k in 0..4 {
            assert!((l.coeff(k) - want[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn product_and_quotient_invert() {
        let a = S4::linear(2.0, 1.0);
        let b = S4::linear(1.0, -3.0) * S4::linear(1.0, 0.5);
        let q = (a * b) / b;
        for k in 0..4 {
            assert!((q.0[k] - a.0[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn binomial_powers() {
        // (1+t)^(4/3) = 1 + 4/3 t + 2/9 t² − 4/81 t³
        let s = S4::linear(1.0, 1.0).pow_ratio(4, 3).unwrap();
        let want = [1.0, 4.0 / 3.0, 2.0 / 9.0, -4.0 / 81.0];
        for k in 0..4 {
            assert!((s.0[k] - want[k]).abs() < 1e-15);
        }
        let r = S4::linear(4.0, 1.0).sqrt().unwrap();
        let sq = r * r;
        assert!((sq.0[0] - 4.0).abs() < 1e-14 && (sq.0[1] - 1.0).abs() < 1e-14);
        assert!(sq.0[2].abs() < 1e-14 && sq.0[3].abs() < 1e-14);
    }

    #[test]
    fn eval_matches_horner() {
        let s = Series([1.0, 2.0, 3.0]);
        assert_eq!(s.eval(2.0), 1.0 + 4.0 + 12.0);
    }
}
