//! Real scalar backends.
//!
//! Every numerical routine in this crate is generic over [`Real`], which is
//! implemented for machine `f64` and for [`MpFloat`], an MPFR-backed float
//! with a compile-time mantissa width. Exact rationals (`BigRational`) only
//! appear in the interpolation module, where a field is enough.

use std::cmp::Ordering;
use std::fmt::{self, Debug, Display};
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, RemAssign, Sub, SubAssign};

use num_traits::{Num, NumAssign, One, Zero};
use rug::Float;

pub use num_complex::Complex;

/// A real field with the elementary functions needed by the Cayley path,
/// the eigensolvers and the Haar statistics.
pub trait Real:
    Clone + Debug + Display + PartialEq + PartialOrd + Send + Sync + 'static + Num + NumAssign + Neg<Output = Self>
{
    /// Mantissa width in bits (53 for `f64`).
    const BITS: u32;

    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;

    fn from_i64(x: i64) -> Self {
        Self::from_f64(x as f64)
    }

    /// `num / den` rounded once at the working precision.
    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num) / Self::from_i64(den)
    }

    /// Unit roundoff scale, `2^(1 - BITS)`.
    fn epsilon() -> Self;
    fn pi() -> Self;

    fn abs(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn tan(&self) -> Self;
    fn atan(&self) -> Self;
    fn atan2(&self, x: &Self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn is_finite(&self) -> bool;

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }

    fn two() -> Self {
        Self::one() + Self::one()
    }
}

impl Real for f64 {
    const BITS: u32 = 53;

    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn epsilon() -> Self {
        f64::EPSILON
    }
    fn pi() -> Self {
        std::f64::consts::PI
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn tan(&self) -> Self {
        f64::tan(*self)
    }
    fn atan(&self) -> Self {
        f64::atan(*self)
    }
    fn atan2(&self, x: &Self) -> Self {
        f64::atan2(*self, *x)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

/// MPFR float with a fixed mantissa of `BITS` bits.
///
/// The width is a type parameter so that constants (`zero`, `one`,
/// `from_f64`) know their precision without a runtime context.
#[derive(Clone, PartialEq, PartialOrd)]
pub struct MpFloat<const BITS: u32>(Float);

pub type F128 = MpFloat<128>;
pub type F256 = MpFloat<256>;
pub type F512 = MpFloat<512>;
pub type F1024 = MpFloat<1024>;

impl<const BITS: u32> MpFloat<BITS> {
    pub fn inner(&self) -> &Float {
        &self.0
    }

    /// Decimal rendering with `digits` significant digits.
    pub fn to_decimal(&self, digits: usize) -> String {
        self.0.to_string_radix(10, Some(digits))
    }

    fn wrap(f: Float) -> Self {
        MpFloat(f)
    }
}

impl<const BITS: u32> Debug for MpFloat<BITS> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.to_string_radix(10, Some(24)))
    }
}

impl<const BITS: u32> Display for MpFloat<BITS> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = (BITS as f64 * std::f64::consts::LOG10_2).floor() as usize;
        write!(f, "{}", self.0.to_string_radix(10, Some(digits)))
    }
}

macro_rules! mp_binop {
    ($tr:ident, $method:ident, $atr:ident, $amethod:ident, $op:tt, $aop:tt) => {
        impl<const BITS: u32> $tr for MpFloat<BITS> {
            type Output = Self;
            fn $method(self, rhs: Self) -> Self {
                MpFloat(self.0 $op rhs.0)
            }
        }
        impl<'a, const BITS: u32> $tr<&'a MpFloat<BITS>> for MpFloat<BITS> {
            type Output = Self;
            fn $method(self, rhs: &'a Self) -> Self {
                MpFloat(self.0 $op &rhs.0)
            }
        }
        impl<const BITS: u32> $atr for MpFloat<BITS> {
            fn $amethod(&mut self, rhs: Self) {
                self.0 $aop rhs.0;
            }
        }
    };
}

mp_binop!(Add, add, AddAssign, add_assign, +, +=);
mp_binop!(Sub, sub, SubAssign, sub_assign, -, -=);
mp_binop!(Mul, mul, MulAssign, mul_assign, *, *=);
mp_binop!(Div, div, DivAssign, div_assign, /, /=);
mp_binop!(Rem, rem, RemAssign, rem_assign, %, %=);

impl<const BITS: u32> Neg for MpFloat<BITS> {
    type Output = Self;
    fn neg(self) -> Self {
        MpFloat(-self.0)
    }
}

impl<const BITS: u32> Zero for MpFloat<BITS> {
    fn zero() -> Self {
        MpFloat(Float::new(BITS))
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl<const BITS: u32> One for MpFloat<BITS> {
    fn one() -> Self {
        MpFloat(Float::with_val(BITS, 1))
    }
}

impl<const BITS: u32> Num for MpFloat<BITS> {
    type FromStrRadixErr = rug::float::ParseFloatError;

    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        let parsed = Float::parse_radix(s, radix as i32)?;
        Ok(MpFloat(Float::with_val(BITS, parsed)))
    }
}

impl<const BITS: u32> Real for MpFloat<BITS> {
    const BITS: u32 = BITS;

    fn from_f64(x: f64) -> Self {
        MpFloat(Float::with_val(BITS, x))
    }
    fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }
    fn from_i64(x: i64) -> Self {
        MpFloat(Float::with_val(BITS, x))
    }
    fn epsilon() -> Self {
        MpFloat(Float::with_val(BITS, 1) >> (BITS - 1))
    }
    fn pi() -> Self {
        MpFloat(Float::with_val(BITS, rug::float::Constant::Pi))
    }
    fn abs(&self) -> Self {
        Self::wrap(self.0.clone().abs())
    }
    fn sqrt(&self) -> Self {
        Self::wrap(self.0.clone().sqrt())
    }
    fn sin(&self) -> Self {
        Self::wrap(self.0.clone().sin())
    }
    fn cos(&self) -> Self {
        Self::wrap(self.0.clone().cos())
    }
    fn tan(&self) -> Self {
        Self::wrap(self.0.clone().tan())
    }
    fn atan(&self) -> Self {
        Self::wrap(self.0.clone().atan())
    }
    fn atan2(&self, x: &Self) -> Self {
        Self::wrap(self.0.clone().atan2(&x.0))
    }
    fn exp(&self) -> Self {
        Self::wrap(self.0.clone().exp())
    }
    fn ln(&self) -> Self {
        Self::wrap(self.0.clone().ln())
    }
    fn is_finite(&self) -> bool {
        self.0.is_finite()
    }
}

/// Total order for sorting; NaN sorts last.
pub fn total_cmp<T: Real>(a: &T, b: &T) -> Ordering {
    a.partial_cmp(b).unwrap_or_else(|| match (a == a, b == b) {
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        _ => Ordering::Equal,
    })
}

pub fn cplx<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

pub fn creal<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

pub fn cabs<T: Real>(z: &Complex<T>) -> T {
    z.norm_sqr().sqrt()
}

/// `exp(i * phase)`
pub fn cis<T: Real>(phase: &T) -> Complex<T> {
    Complex::new(phase.cos(), phase.sin())
}

pub fn carg<T: Real>(z: &Complex<T>) -> T {
    z.im.atan2(&z.re)
}

pub fn to_c64<T: Real>(z: &Complex<T>) -> Complex<f64> {
    Complex::new(z.re.to_f64(), z.im.to_f64())
}

pub fn from_c64<T: Real>(z: Complex<f64>) -> Complex<T> {
    Complex::new(T::from_f64(z.re), T::from_f64(z.im))
}
