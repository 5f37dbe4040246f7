//! Scalars that are exact rationals whenever they can be.
//!
//! Every arithmetic result involving a float operand is a float; two exact
//! operands always give an exact result. This lets integer and rational
//! examples run end to end without rounding, while irrational spectra fall
//! back to `Complex64`.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Exact(BigRational),
    Float(Complex64),
}

/// Whether a computed object is exact or carries floating-point error.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Exactness {
    Exact,
    Float,
}

impl Exactness {
    pub fn and(self, other: Exactness) -> Exactness {
        if self == Exactness::Exact && other == Exactness::Exact {
            Exactness::Exact
        } else {
            Exactness::Float
        }
    }

    pub fn of(values: &[Scalar]) -> Exactness {
        if values.iter().all(Scalar::is_exact) {
            Exactness::Exact
        } else {
            Exactness::Float
        }
    }
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_to_f64(q: &BigRational) -> f64 {
    // Direct division loses precision for huge numerators; scale instead.
    match (q.numer().to_f64(), q.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            let shift = q.numer().bits().max(q.denom().bits()) as i64 - 1000;
            let (n, d) = if shift > 0 {
                (q.numer() >> shift as usize, q.denom() >> shift as usize)
            } else {
                (q.numer().clone(), q.denom().clone())
            };
            n.to_f64().unwrap_or(f64::NAN) / d.to_f64().unwrap_or(f64::NAN)
        }
    }
}

impl Scalar {
    pub fn zero() -> Scalar {
        Scalar::Exact(BigRational::zero())
    }

    pub fn one() -> Scalar {
        Scalar::Exact(BigRational::one())
    }

    pub fn int(n: i64) -> Scalar {
        Scalar::Exact(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(n: i64, d: i64) -> Scalar {
        Scalar::Exact(rat(n, d))
    }

    pub fn float(re: f64) -> Scalar {
        Scalar::Float(Complex64::new(re, 0.0))
    }

    pub fn complex(re: f64, im: f64) -> Scalar {
        Scalar::Float(Complex64::new(re, im))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    pub fn exactness(&self) -> Exactness {
        if self.is_exact() {
            Exactness::Exact
        } else {
            Exactness::Float
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Scalar::Exact(q) => Some(q),
            Scalar::Float(_) => None,
        }
    }

    pub fn to_c64(&self) -> Complex64 {
        match self {
            Scalar::Exact(q) => Complex64::new(rat_to_f64(q), 0.0),
            Scalar::Float(z) => *z,
        }
    }

    pub fn re(&self) -> f64 {
        self.to_c64().re
    }

    pub fn im(&self) -> f64 {
        self.to_c64().im
    }

    pub fn abs(&self) -> f64 {
        match self {
            Scalar::Exact(q) => rat_to_f64(&q.abs()),
            Scalar::Float(z) => z.norm(),
        }
    }

    /// |x|^2 as a scalar; stays exact for rationals.
    pub fn norm_sqr(&self) -> Scalar {
        match self {
            Scalar::Exact(q) => Scalar::Exact(q * q),
            Scalar::Float(z) => Scalar::float(z.norm_sqr()),
        }
    }

    pub fn conj(&self) -> Scalar {
        match self {
            Scalar::Exact(q) => Scalar::Exact(q.clone()),
            Scalar::Float(z) => Scalar::Float(z.conj()),
        }
    }

    pub fn is_exact_zero(&self) -> bool {
        matches!(self, Scalar::Exact(q) if q.is_zero())
    }

    /// Zero test: exact for rationals, `|x| <= tol` for floats.
    pub fn is_zero_within(&self, tol: f64) -> bool {
        match self {
            Scalar::Exact(q) => q.is_zero(),
            Scalar::Float(z) => z.norm() <= tol,
        }
    }

    /// Real test: exact for rationals, `|im| <= tol` for floats.
    pub fn is_real_within(&self, tol: f64) -> bool {
        match self {
            Scalar::Exact(_) => true,
            Scalar::Float(z) => z.im.abs() <= tol,
        }
    }

    pub fn approx_eq(&self, other: &Scalar, tol: f64) -> bool {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a == b,
            _ => (self.to_c64() - other.to_c64()).norm() <= tol,
        }
    }

    pub fn recip(&self) -> Scalar {
        match self {
            Scalar::Exact(q) => Scalar::Exact(q.recip()),
            Scalar::Float(z) => Scalar::Float(z.inv()),
        }
    }

    pub fn powi(&self, k: i32) -> Scalar {
        match self {
            Scalar::Exact(q) => Scalar::Exact(num_traits::pow::Pow::pow(q, k)),
            Scalar::Float(z) => Scalar::Float(z.powi(k)),
        }
    }

    /// Square root of a non-negative real scalar as a float.
    pub fn sqrt_real(&self) -> f64 {
        self.re().max(0.0).sqrt()
    }

    pub fn to_float(&self) -> Scalar {
        Scalar::Float(self.to_c64())
    }

    /// Compact human-readable form used in reports.
    pub fn render(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(q) => write!(f, "{q}"),
            Scalar::Float(z) if z.im == 0.0 => write!(f, "{}", z.re),
            Scalar::Float(z) => write!(f, "{}{:+}i", z.re, z.im),
        }
    }
}

/// Parses `3`, `-1/2` exactly and anything else `f64` accepts as a float.
impl std::str::FromStr for Scalar {
    type Err = String;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let t = text.trim();
        if let Ok(q) = t.parse::<BigRational>() {
            return Ok(Scalar::Exact(q));
        }
        t.parse::<f64>().map(Scalar::float).map_err(|_| format!("not a number: {text:?}"))
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        match self {
            Scalar::Exact(q) => serializer.serialize_str(&q.to_string()),
            Scalar::Float(z) => {
                let mut st = serializer.serialize_struct("Complex", 2)?;
                st.serialize_field("re", &z.re)?;
                st.serialize_field("im", &z.im)?;
                st.end()
            }
        }
    }
}

impl From<BigRational> for Scalar {
    fn from(q: BigRational) -> Self {
        Scalar::Exact(q)
    }
}

impl From<Complex64> for Scalar {
    fn from(z: Complex64) -> Self {
        Scalar::Float(z)
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Self {
        Scalar::int(n)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl<'a> $trait<&'a Scalar> for &'a Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &'a Scalar) -> Scalar {
                match (self, rhs) {
                    (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a $op b),
                    _ => Scalar::Float(self.to_c64() $op rhs.to_c64()),
                }
            }
        }
        impl $trait<Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                (&self).$method(&rhs)
            }
        }
        impl<'a> $trait<&'a Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &'a Scalar) -> Scalar {
                (&self).$method(rhs)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);
binop!(Div, div, /);

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Exact(q) => Scalar::Exact(-q),
            Scalar::Float(z) => Scalar::Float(-z),
        }
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -(self.clone())
    }
}

impl std::iter::Sum for Scalar {
    fn sum<I: Iterator<Item = Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::zero(), |acc, x| acc + x)
    }
}

pub fn dot(a: &[Scalar], b: &[Scalar]) -> Scalar {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn to_c64_vec(v: &[Scalar]) -> Vec<Complex64> {
    v.iter().map(Scalar::to_c64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_stays_exact() {
        let x = Scalar::ratio(1, 3) + Scalar::ratio(1, 6);
        assert_eq!(x, Scalar::ratio(1, 2));
        assert!(x.is_exact());
    }

    #[test]
    fn mixing_downgrades() {
        let x = Scalar::ratio(1, 2) * Scalar::float(2.0);
        assert!(!x.is_exact());
        assert!((x.re() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn display_is_num_over_den() {
        assert_eq!(Scalar::int(3).to_string(), "3");
        assert_eq!(Scalar::ratio(-2, 4).to_string(), "-1/2");
    }

    #[test]
    fn huge_rationals_convert() {
        let big = BigInt::from(10).pow(400u32);
        let q = BigRational::new(big.clone() * 3, big);
        assert!((rat_to_f64(&q) - 3.0).abs() < 1e-12);
    }
}
