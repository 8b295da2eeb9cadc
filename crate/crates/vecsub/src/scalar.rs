//! Scalar backends shared by filters, jets and linear algebra.

use num::bigint::BigInt;
use num::complex::Complex64;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use std::fmt::{self, Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Exact arbitrary-precision rational.
pub type Q = BigRational;
/// Double-precision complex float.
pub type C64 = Complex64;

/// Absolute threshold below which float values count as zero.
pub const FLOAT_ZERO_TOL: f64 = 1e-10;
/// Relative tolerance for float jet comparisons.
pub const FLOAT_REL_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScalarKind {
    Rational,
    Complex,
    Real,
}

impl Display for ScalarKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScalarKind::Rational => "rational",
            ScalarKind::Complex => "complex",
            ScalarKind::Real => "real",
        })
    }
}

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    const KIND: ScalarKind;
    /// True when the arithmetic is exact and zero tests need no tolerance.
    const EXACT: bool;

    fn from_q(q: &Q) -> Self;
    fn from_i64(n: i64) -> Self;
    /// Nearest representable value; exact binary expansion for rationals.
    fn from_f64(x: f64) -> Self;
    fn to_c64(&self) -> C64;
    fn modulus(&self) -> f64;
    /// Exact zero for rationals, `|x| <= FLOAT_ZERO_TOL` for floats.
    fn is_negligible(&self) -> bool;
    /// `acc += a * b` without needless clones.
    fn mul_acc(acc: &mut Self, a: &Self, b: &Self);
    fn add_assign_ref(&mut self, other: &Self);

    /// Equality at the backend's natural precision.
    fn approx_eq(&self, other: &Self) -> bool {
        if Self::EXACT {
            self == other
        } else {
            let diff = (self.clone() - other.clone()).modulus();
            diff <= FLOAT_ZERO_TOL.max(FLOAT_REL_TOL * self.modulus().max(other.modulus()))
        }
    }

    fn pow_u32(&self, e: u32) -> Self {
        let mut out = Self::one();
        for _ in 0..e {
            out = out * self.clone();
        }
        out
    }
}

impl Scalar for Q {
    const KIND: ScalarKind = ScalarKind::Rational;
    const EXACT: bool = true;

    fn from_q(q: &Q) -> Self {
        q.clone()
    }
    fn from_i64(n: i64) -> Self {
        Q::from_integer(BigInt::from(n))
    }
    fn from_f64(x: f64) -> Self {
        Q::from_float(x).unwrap_or_else(Q::zero)
    }
    fn to_c64(&self) -> C64 {
        C64::new(q_to_f64(self), 0.0)
    }
    fn modulus(&self) -> f64 {
        q_to_f64(self).abs()
    }
    fn is_negligible(&self) -> bool {
        self.is_zero()
    }
    fn mul_acc(acc: &mut Self, a: &Self, b: &Self) {
        if a.is_zero() || b.is_zero() {
            return;
        }
        *acc += a * b;
    }
    fn add_assign_ref(&mut self, other: &Self) {
        *self += other;
    }
}

impl Scalar for C64 {
    const KIND: ScalarKind = ScalarKind::Complex;
    const EXACT: bool = false;

    fn from_q(q: &Q) -> Self {
        C64::new(q_to_f64(q), 0.0)
    }
    fn from_i64(n: i64) -> Self {
        C64::new(n as f64, 0.0)
    }
    fn from_f64(x: f64) -> Self {
        C64::new(x, 0.0)
    }
    fn to_c64(&self) -> C64 {
        *self
    }
    fn modulus(&self) -> f64 {
        self.norm()
    }
    fn is_negligible(&self) -> bool {
        self.norm() <= FLOAT_ZERO_TOL
    }
    #[inline]
    fn mul_acc(acc: &mut Self, a: &Self, b: &Self) {
        *acc += a * b;
    }
    #[inline]
    fn add_assign_ref(&mut self, other: &Self) {
        *self += other;
    }
}

impl Scalar for f64 {
    const KIND: ScalarKind = ScalarKind::Real;
    const EXACT: bool = false;

    fn from_q(q: &Q) -> Self {
        q_to_f64(q)
    }
    fn from_i64(n: i64) -> Self {
        n as f64
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_c64(&self) -> C64 {
        C64::new(*self, 0.0)
    }
    fn modulus(&self) -> f64 {
        self.abs()
    }
    fn is_negligible(&self) -> bool {
        self.abs() <= FLOAT_ZERO_TOL
    }
    #[inline]
    fn mul_acc(acc: &mut Self, a: &Self, b: &Self) {
        *acc += a * b;
    }
    #[inline]
    fn add_assign_ref(&mut self, other: &Self) {
        *self += other;
    }
}

/// Lossy conversion that survives numerators and denominators beyond f64 range.
pub fn q_to_f64(q: &Q) -> f64 {
    if let Some(v) = q.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    let n = q.numer().bits() as i64;
    let d = q.denom().bits() as i64;
    let shift = (n - d).clamp(-1000, 1000);
    let scaled = if shift >= 0 {
        q / Q::from_integer(BigInt::one() << shift as usize)
    } else {
        q * Q::from_integer(BigInt::one() << (-shift) as usize)
    };
    scaled.to_f64().unwrap_or(0.0) * 2f64.powi(shift as i32)
}

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Canonical text for a rational: `p` or `p/q`.
pub fn format_q(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn parse_q(s: &str) -> Option<Q> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(Q::new(n, d))
        }
        None => {
            if s.contains('.') || s.contains('e') || s.contains('E') {
                let v: f64 = s.parse().ok()?;
                Q::from_float(v)
            } else {
                Some(Q::from_integer(s.parse().ok()?))
            }
        }
    }
}

/// Complex text as `re+im i` with shortest round-trip float formatting.
pub fn format_c64(z: &C64) -> String {
    if z.im.is_sign_negative() {
        format!("{:?}-{:?}i", z.re, -z.im)
    } else {
        format!("{:?}+{:?}i", z.re, z.im)
    }
}

pub fn parse_c64(s: &str) -> Option<C64> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let Some(body) = s.strip_suffix('i') else {
        return s.parse::<f64>().ok().map(|re| C64::new(re, 0.0));
    };
    // split at the last sign that is not part of an exponent
    let bytes = body.as_bytes();
    let mut split = None;
    for i in (1..bytes.len()).rev() {
        if (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E') {
            split = Some(i);
            break;
        }
    }
    match split {
        Some(i) => {
            let re: f64 = body[..i].parse().ok()?;
            let im_txt = &body[i..];
            let im: f64 = match im_txt {
                "+" => 1.0,
                "-" => -1.0,
                t => t.parse().ok()?,
            };
            Some(C64::new(re, im))
        }
        None => {
            let im: f64 = if body.is_empty() { 1.0 } else { body.parse().ok()? };
            Some(C64::new(0.0, im))
        }
    }
}

/// Text form used by the filter file format for each backend.
pub trait ScalarText: Scalar {
    fn to_text(&self) -> String;
    fn from_text(s: &str) -> Option<Self>;
}

impl ScalarText for Q {
    fn to_text(&self) -> String {
        format_q(self)
    }
    fn from_text(s: &str) -> Option<Self> {
        parse_q(s)
    }
}

impl ScalarText for C64 {
    fn to_text(&self) -> String {
        format_c64(self)
    }
    fn from_text(s: &str) -> Option<Self> {
        parse_c64(s)
    }
}

impl ScalarText for f64 {
    fn to_text(&self) -> String {
        format!("{:?}", self)
    }
    fn from_text(s: &str) -> Option<Self> {
        s.trim().parse().ok()
    }
}

pub fn q_abs(x: &Q) -> Q {
    x.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_text_round_trip() {
        for s in ["0", "-3", "7/64", "-1/2048", "123456789012345678901234567890/11"] {
            let v = parse_q(s).unwrap();
            assert_eq!(format_q(&v), s);
        }
        assert_eq!(parse_q("4/8").unwrap(), q(1, 2));
        assert!(parse_q("1/0").is_none());
    }

    #[test]
    fn complex_text_round_trip() {
        for z in [C64::new(0.25, -1.5), C64::new(-3.0, 0.0), C64::new(1e-20, 2.5e300)] {
            assert_eq!(parse_c64(&format_c64(&z)).unwrap(), z);
        }
        assert_eq!(parse_c64("1-2i").unwrap(), C64::new(1.0, -2.0));
        assert_eq!(parse_c64("1.5e-3+2e+4i").unwrap(), C64::new(1.5e-3, 2e4));
    }

    #[test]
    fn huge_rational_to_float() {
        let big = Q::new(BigInt::from(3) << 2000usize, BigInt::from(1) << 1999usize);
        assert!((q_to_f64(&big) - 6.0).abs() < 1e-12);
    }
}
