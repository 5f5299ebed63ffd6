//! Exact Gaussian-integer and complex-rational arithmetic.
//!
//! Every convergent numerator and denominator lives in `Z[i]`. Values grow
//! exponentially with word length, so the coefficients are arbitrary
//! precision; floating point only appears when a logarithm or a scaled
//! approximation is requested.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// A Gaussian integer `re + im·i` with arbitrary-precision parts.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct GaussianInt {
    pub re: BigInt,
    pub im: BigInt,
}

impl GaussianInt {
    pub fn new(re: impl Into<BigInt>, im: impl Into<BigInt>) -> Self {
        GaussianInt {
            re: re.into(),
            im: im.into(),
        }
    }

    pub fn real(re: impl Into<BigInt>) -> Self {
        GaussianInt::new(re, 0)
    }

    pub fn zero() -> Self {
        GaussianInt::default()
    }

    pub fn one() -> Self {
        GaussianInt::real(1)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        GaussianInt {
            re: self.re.clone(),
            im: -&self.im,
        }
    }

    /// `re² + im²`, always nonnegative.
    pub fn norm(&self) -> BigInt {
        &self.re * &self.re + &self.im * &self.im
    }

    /// Bit length of the larger of the two parts.
    pub fn max_bits(&self) -> u64 {
        self.re.bits().max(self.im.bits())
    }

    /// `ln |x| = ½ ln(re² + im²)`.
    ///
    /// Works from the bit length and the leading 64 bits of the norm, so it
    /// stays accurate far outside the range of `f64`.
    pub fn log_modulus(&self) -> Result<f64> {
        if self.is_zero() {
            return Err(Error::LogOfZero);
        }
        Ok(0.5 * ln_big(&self.norm()))
    }

    /// Approximates `x / 2^shift` as a complex double.
    pub fn to_c64_scaled(&self, shift: u64) -> Complex64 {
        Complex64::new(scaled_f64(&self.re, shift), scaled_f64(&self.im, shift))
    }

    pub fn to_c64(&self) -> Complex64 {
        self.to_c64_scaled(0)
    }

    /// Exact embedding into the complex rationals, as `(re, im)`.
    pub fn to_rational_parts(&self) -> (BigRational, BigRational) {
        (
            BigRational::from_integer(self.re.clone()),
            BigRational::from_integer(self.im.clone()),
        )
    }
}

/// Natural log of a positive big integer via its leading bits.
pub(crate) fn ln_big(x: &BigInt) -> f64 {
    debug_assert!(x.is_positive());
    let bits = x.bits();
    if bits <= 64 {
        return (x.to_u64().expect("fits in u64") as f64).ln();
    }
    let shift = bits - 64;
    let top: BigInt = x >> shift;
    (top.to_u64().expect("64 leading bits") as f64).ln() + shift as f64 * std::f64::consts::LN_2
}

fn scaled_f64(x: &BigInt, shift: u64) -> f64 {
    // keep 64 significant bits, then apply the remaining power of two
    let drop = x.bits().saturating_sub(64);
    let top = (x.magnitude() >> drop).to_u64().expect("64 leading bits") as f64;
    let v = top * pow2(drop as i64 - shift as i64);
    if x.sign() == Sign::Minus {
        -v
    } else {
        v
    }
}

fn pow2(e: i64) -> f64 {
    2f64.powi(e.clamp(i32::MIN as i64, i32::MAX as i64) as i32)
}

impl From<i64> for GaussianInt {
    fn from(v: i64) -> Self {
        GaussianInt::real(v)
    }
}

impl<'a> Add<&'a GaussianInt> for &'a GaussianInt {
    type Output = GaussianInt;
    fn add(self, rhs: &GaussianInt) -> GaussianInt {
        GaussianInt {
            re: &self.re + &rhs.re,
            im: &self.im + &rhs.im,
        }
    }
}

impl Add for GaussianInt {
    type Output = GaussianInt;
    fn add(self, rhs: GaussianInt) -> GaussianInt {
        GaussianInt {
            re: self.re + rhs.re,
            im: self.im + rhs.im,
        }
    }
}

impl<'a> Sub<&'a GaussianInt> for &'a GaussianInt {
    type Output = GaussianInt;
    fn sub(self, rhs: &GaussianInt) -> GaussianInt {
        GaussianInt {
            re: &self.re - &rhs.re,
            im: &self.im - &rhs.im,
        }
    }
}

impl<'a> Mul<&'a GaussianInt> for &'a GaussianInt {
    type Output = GaussianInt;
    fn mul(self, rhs: &GaussianInt) -> GaussianInt {
        if self.im.is_zero() && rhs.im.is_zero() {
            return GaussianInt::real(&self.re * &rhs.re);
        }
        GaussianInt {
            re: &self.re * &rhs.re - &self.im * &rhs.im,
            im: &self.re * &rhs.im + &self.im * &rhs.re,
        }
    }
}

impl Mul for GaussianInt {
    type Output = GaussianInt;
    fn mul(self, rhs: GaussianInt) -> GaussianInt {
        &self * &rhs
    }
}

impl Neg for GaussianInt {
    type Output = GaussianInt;
    fn neg(self) -> GaussianInt {
        GaussianInt {
            re: -self.re,
            im: -self.im,
        }
    }
}

impl fmt::Display for GaussianInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            return write!(f, "{}", self.re);
        }
        let mag = self.im.abs();
        let im_txt = if mag.is_one() {
            String::new()
        } else {
            mag.to_string()
        };
        if self.re.is_zero() {
            let sign = if self.im.is_negative() { "-" } else { "" };
            return write!(f, "{sign}{im_txt}i");
        }
        let sign = if self.im.is_negative() { '-' } else { '+' };
        write!(f, "{}{}{}i", self.re, sign, im_txt)
    }
}

impl FromStr for GaussianInt {
    type Err = Error;

    /// Accepts `a`, `a+bi`, `a-bi`, `bi`, `a+i`, `-i` (decimal integers).
    fn from_str(s: &str) -> Result<Self> {
        let txt: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::Syntax(format!("not a Gaussian integer: {s:?}"));
        if txt.is_empty() {
            return Err(bad());
        }
        let Some(body) = txt.strip_suffix('i') else {
            return txt
                .parse::<BigInt>()
                .map(GaussianInt::real)
                .map_err(|_| bad());
        };
        // split at the last sign that is not the leading one
        let split = body
            .char_indices()
            .skip(1)
            .filter(|&(_, c)| c == '+' || c == '-')
            .map(|(i, _)| i)
            .last();
        let (re_txt, im_txt) = match split {
            Some(i) => (&body[..i], &body[i..]),
            None => ("0", body),
        };
        let re: BigInt = re_txt.parse().map_err(|_| bad())?;
        let im: BigInt = match im_txt {
            "" | "+" => BigInt::one(),
            "-" => -BigInt::one(),
            t => t.parse().map_err(|_| bad())?,
        };
        Ok(GaussianInt { re, im })
    }
}

/// A quotient of Gaussian integers, kept unreduced.
#[derive(Clone, Debug)]
pub struct ComplexRational {
    pub num: GaussianInt,
    pub den: GaussianInt,
}

impl ComplexRational {
    pub fn new(num: GaussianInt, den: GaussianInt) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        Ok(ComplexRational { num, den })
    }

    /// `|num/den|²` as an exact rational.
    pub fn modulus_squared(&self) -> BigRational {
        BigRational::new(self.num.norm(), self.den.norm())
    }

    /// `1 + num/den`, i.e. `(den + num)/den`.
    pub fn one_plus(&self) -> ComplexRational {
        ComplexRational {
            num: &self.den + &self.num,
            den: self.den.clone(),
        }
    }

    /// Floating approximation, accurate even when both parts overflow `f64`.
    pub fn to_c64(&self) -> Complex64 {
        let shift = self
            .den
            .max_bits()
            .max(self.num.max_bits())
            .saturating_sub(480);
        self.num.to_c64_scaled(shift) / self.den.to_c64_scaled(shift)
    }
}

impl PartialEq for ComplexRational {
    fn eq(&self, other: &Self) -> bool {
        &self.num * &other.den == &other.num * &self.den
    }
}

impl Eq for ComplexRational {}
