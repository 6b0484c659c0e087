//! Scalar fields the kernel is generic over.
//!
//! A whole computation runs in one scalar type, so exact and float values can
//! never meet in a single expression: the compiler rejects it. The runtime
//! [`Mode`] tag only exists for I/O, where a JSON document is read into one
//! of the two concrete types.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational scalar.
pub type Rational = BigRational;

/// Arithmetic mode of a computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Float,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "exact" => Ok(Mode::Exact),
            "float" => Ok(Mode::Float),
            other => Err(format!("unknown mode `{other}` (expected exact or float)")),
        }
    }
}

/// An ordered field closed under the four operations, with just enough
/// extra structure for metric construction (signs and rational powers).
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const MODE: Mode;

    fn from_int(n: i64) -> Self;

    fn ratio(num: i64, den: i64) -> Self {
        Self::from_int(num) / Self::from_int(den)
    }

    /// Strictly positive. For truncated series this looks at the constant term.
    fn is_positive(&self) -> bool;

    /// Nearest float, used for reporting and tolerances.
    fn to_f64(&self) -> f64;

    /// Size used in residual reports.
    fn magnitude(&self) -> f64 {
        self.to_f64().abs()
    }

    /// `self^(num/den)` for positive `self`; `None` if the value is not
    /// positive or the root has no exact representation.
    fn pow_ratio(&self, num: i64, den: u32) -> Option<Self>;

    fn sqrt(&self) -> Option<Self> {
        self.pow_ratio(1, 2)
    }

    /// Zero up to the representation (exact zero for exact types).
    fn is_negligible(&self, tol: f64) -> bool {
        self.magnitude() <= tol
    }
}

impl Scalar for f64 {
    const MODE: Mode = Mode::Float;

    fn from_int(n: i64) -> Self {
        n as f64
    }

    fn ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn is_positive(&self) -> bool {
        *self > 0.0
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn pow_ratio(&self, num: i64, den: u32) -> Option<Self> {
        if *self <= 0.0 {
            return None;
        }
        Some(match (num, den) {
            (1, 2) => f64::sqrt(*self),
            (1, 3) => f64::cbrt(*self),
            (n, 1) => self.powi(n as i32),
            _ => self.powf(num as f64 / den as f64),
        })
    }
}

fn exact_root(n: &BigInt, k: u32) -> Option<BigInt> {
    let r = n.nth_root(k);
    (num_traits::pow(r.clone(), k as usize) == *n).then_some(r)
}

impl Scalar for Rational {
    const MODE: Mode = Mode::Exact;

    fn from_int(n: i64) -> Self {
        Rational::from_integer(BigInt::from(n))
    }

    fn ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn pow_ratio(&self, num: i64, den: u32) -> Option<Self> {
        if !Signed::is_positive(self) || den == 0 {
            return None;
        }
        let n = exact_root(self.numer(), den)?;
        let d = exact_root(self.denom(), den)?;
        let root = Rational::new(n, d);
        Some(if num >= 0 {
            num_traits::pow(root, num as usize)
        } else {
            num_traits::pow(root.recip(), (-num) as usize)
        })
    }

    fn is_negligible(&self, _tol: f64) -> bool {
        self.is_zero()
    }
}

/// Convert an exact value into any scalar type.
pub fn from_rational<S: Scalar>(q: &Rational) -> S {
    match (q.numer().to_i64(), q.denom().to_i64()) {
        (Some(n), Some(d)) => S::ratio(n, d),
        _ => lift_big::<S>(q.numer()) / lift_big::<S>(q.denom()),
    }
}

fn lift_big<S: Scalar>(n: &BigInt) -> S {
    // Horner over base-2^32 digits.
    let (sign, digits) = n.to_u32_digits();
    let base = S::from_int(1 << 32);
    let mut acc = S::zero();
    for d in digits.iter().rev() {
        acc = acc * base.clone() + S::from_int(*d as i64);
    }
    if sign == num_bigint::Sign::Minus {
        -acc
    } else {
        acc
    }
}
