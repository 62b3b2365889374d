//! Scalar abstractions.
//!
//! Floating-point numerics are written against [`Real`] (implemented for `f32`
//! and `f64`). Combinatorial code only needs ring operations ([`Ring`]), which
//! lets it run over exact rationals, over [`QSqrt2`] or over floats. The
//! renormalization map multiplies the `k`-th cumulant by `sqrt(2)^(2-k)`, so
//! exact iterates live in the quadratic field `Q(sqrt 2)` rather than in `Q`.

use std::fmt::{self, Debug, Display};
use std::iter::Sum;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FloatConst, FromPrimitive, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Floating-point scalar used by all transform and metric code.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// A tolerance of `x`, floored at a small multiple of machine epsilon so
    /// that `f64`-calibrated thresholds stay meaningful for `f32`.
    fn tol(x: f64) -> Self {
        Self::lit(x).max(Self::epsilon() * Self::lit(32.0))
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Commutative ring with unit; enough for moment/cumulant conversion.
pub trait Ring:
    Clone + Zero + One + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
}

impl<T> Ring for T where T: Clone + Zero + One + Add<Output = T> + Sub<Output = T> + Mul<Output = T> + Neg<Output = T> {}

/// Ring scalars that can be multiplied by integer powers of `sqrt(2)`,
/// exactly or approximately.
pub trait RgScalar: Ring + Debug {
    fn mul_sqrt2_pow(&self, exponent: i64) -> Self;
    fn approx(&self) -> f64;
}

impl RgScalar for f64 {
    fn mul_sqrt2_pow(&self, exponent: i64) -> Self {
        self * std::f64::consts::SQRT_2.powi(exponent as i32)
    }
    fn approx(&self) -> f64 {
        *self
    }
}

impl RgScalar for f32 {
    fn mul_sqrt2_pow(&self, exponent: i64) -> Self {
        self * std::f32::consts::SQRT_2.powi(exponent as i32)
    }
    fn approx(&self) -> f64 {
        *self as f64
    }
}

/// Exact element `rational + surd * sqrt(2)` of the field `Q(sqrt 2)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QSqrt2 {
    pub rational: BigRational,
    pub surd: BigRational,
}

impl QSqrt2 {
    pub fn new(rational: BigRational, surd: BigRational) -> Self {
        QSqrt2 { rational, surd }
    }

    pub fn from_rational(r: BigRational) -> Self {
        QSqrt2 { rational: r, surd: BigRational::zero() }
    }

    pub fn from_integer(n: i64) -> Self {
        Self::from_rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn sqrt2() -> Self {
        QSqrt2 { rational: BigRational::zero(), surd: BigRational::one() }
    }

    /// `sqrt(2)^e` for any integer `e`.
    pub fn sqrt2_pow(e: i64) -> Self {
        let half = e.div_euclid(2);
        let two = BigRational::from_integer(BigInt::from(2));
        let scale = if half >= 0 {
            num_traits::pow(two, half as usize)
        } else {
            num_traits::pow(two, (-half) as usize).recip()
        };
        if e.rem_euclid(2) == 0 {
            QSqrt2::from_rational(scale)
        } else {
            QSqrt2 { rational: BigRational::zero(), surd: scale }
        }
    }

    pub fn is_rational(&self) -> bool {
        self.surd.is_zero()
    }

    /// Returns the rational value when the surd part vanishes.
    pub fn as_rational(&self) -> Option<&BigRational> {
        self.is_rational().then_some(&self.rational)
    }

    pub fn to_f64(&self) -> f64 {
        let a = self.rational.to_f64().unwrap_or(f64::NAN);
        let b = self.surd.to_f64().unwrap_or(f64::NAN);
        a + b * std::f64::consts::SQRT_2
    }
}

impl Add for QSqrt2 {
    type Output = QSqrt2;
    fn add(self, rhs: QSqrt2) -> QSqrt2 {
        QSqrt2 { rational: self.rational + rhs.rational, surd: self.surd + rhs.surd }
    }
}

impl Sub for QSqrt2 {
    type Output = QSqrt2;
    fn sub(self, rhs: QSqrt2) -> QSqrt2 {
        QSqrt2 { rational: self.rational - rhs.rational, surd: self.surd - rhs.surd }
    }
}

impl Mul for QSqrt2 {
    type Output = QSqrt2;
    fn mul(self, rhs: QSqrt2) -> QSqrt2 {
        let two = BigRational::from_integer(BigInt::from(2));
        let rational = &self.rational * &rhs.rational + two * &self.surd * &rhs.surd;
        let surd = &self.rational * &rhs.surd + &self.surd * &rhs.rational;
        QSqrt2 { rational, surd }
    }
}

impl Neg for QSqrt2 {
    type Output = QSqrt2;
    fn neg(self) -> QSqrt2 {
        QSqrt2 { rational: -self.rational, surd: -self.surd }
    }
}

impl Zero for QSqrt2 {
    fn zero() -> Self {
        QSqrt2::from_rational(BigRational::zero())
    }
    fn is_zero(&self) -> bool {
        self.rational.is_zero() && self.surd.is_zero()
    }
}

impl One for QSqrt2 {
    fn one() -> Self {
        QSqrt2::from_rational(BigRational::one())
    }
}

impl From<BigRational> for QSqrt2 {
    fn from(r: BigRational) -> Self {
        QSqrt2::from_rational(r)
    }
}

impl RgScalar for QSqrt2 {
    fn mul_sqrt2_pow(&self, exponent: i64) -> Self {
        self.clone() * QSqrt2::sqrt2_pow(exponent)
    }
    fn approx(&self) -> f64 {
        self.to_f64()
    }
}

impl Display for QSqrt2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_rational() {
            f.write_str(&rational_string(&self.rational))
        } else if self.rational.is_zero() {
            write!(f, "{}*sqrt(2)", rational_string(&self.surd))
        } else {
            let sign = if self.surd.is_negative() { '-' } else { '+' };
            write!(f, "{}{}{}*sqrt(2)", rational_string(&self.rational), sign, rational_string(&self.surd.abs()))
        }
    }
}

impl Debug for QSqrt2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Display::fmt(self, f)
    }
}

/// Formats a rational as `"p/q"`, always with an explicit denominator.
pub fn rational_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `"p/q"`, an integer, or a finite decimal literal (`"-0.125"`,
/// `"2.5e-3"`) into an exact rational.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let s = text.trim();
    let bad = || Error::Parse(format!("not an exact rational: {text:?}"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i64>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let joined = format!("{int_part}{frac_part}");
    let numer: BigInt = joined.parse().map_err(|_| bad())?;
    let scale = exponent - frac_part.len() as i64;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(if negative { -value } else { value })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(d))
    }

    #[test]
    fn sqrt2_powers() {
        assert_eq!(QSqrt2::sqrt2_pow(0), QSqrt2::one());
        assert_eq!(QSqrt2::sqrt2_pow(2), QSqrt2::from_integer(2));
        assert_eq!(QSqrt2::sqrt2_pow(-2), QSqrt2::from_rational(q(1, 2)));
        assert_eq!(QSqrt2::sqrt2_pow(-1), QSqrt2::new(q(0, 1), q(1, 2)));
        assert_eq!(QSqrt2::sqrt2_pow(3), QSqrt2::new(q(0, 1), q(2, 1)));
        assert_eq!(QSqrt2::sqrt2() * QSqrt2::sqrt2(), QSqrt2::from_integer(2));
        for e in -7..7 {
            let prod = QSqrt2::sqrt2_pow(e) * QSqrt2::sqrt2_pow(-e);
            assert_eq!(prod, QSqrt2::one(), "e = {e}");
        }
    }

    #[test]
    fn display_forms() {
        assert_eq!(QSqrt2::from_integer(-1).to_string(), "-1/1");
        assert_eq!(QSqrt2::sqrt2_pow(-1).to_string(), "1/2*sqrt(2)");
        let x = QSqrt2::new(q(3, 4), q(-1, 3));
        assert_eq!(x.to_string(), "3/4-1/3*sqrt(2)");
    }

    #[test]
    fn parses_rationals_and_decimals() {
        assert_eq!(parse_rational("3/4").unwrap(), q(3, 4));
        assert_eq!(parse_rational("-2").unwrap(), q(-2, 1));
        assert_eq!(parse_rational("0.1").unwrap(), q(1, 10));
        assert_eq!(parse_rational("-1.25e-1").unwrap(), q(-1, 8));
        assert_eq!(parse_rational("2.5E2").unwrap(), q(250, 1));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational(".").is_err());
    }

    #[test]
    fn real_tolerance_floor() {
        assert_eq!(<f64 as Real>::tol(1e-10), 1e-10);
        assert!(<f32 as Real>::tol(1e-12) > 1e-7);
    }
}
