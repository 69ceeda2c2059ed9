//! Arbitrary-precision complex scalar built on MPFR floats.
//!
//! Every value carries its own working precision in bits. Binary operations
//! produce a result at the precision of the left operand.

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Float, Rational};
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

#[derive(Clone, Debug, PartialEq)]
pub struct BigComplex {
    pub re: Float,
    pub im: Float,
}

/// Number of decimal digits carried by `bits` of binary precision.
pub fn digits_for_bits(bits: u32) -> u32 {
    (bits as f64 * std::f64::consts::LOG10_2).floor() as u32
}

pub fn pi(prec: u32) -> Float {
    Float::with_val(prec, Constant::Pi)
}

pub fn float(prec: u32, x: f64) -> Float {
    Float::with_val(prec, x)
}

pub fn rat_to_float(q: &Rational, prec: u32) -> Float {
    Float::with_val(prec, q)
}

/// Full-precision decimal rendering of a float (round-trips at its precision).
pub fn float_to_string(x: &Float) -> String {
    if x.is_zero() {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let digits = digits_for_bits(x.prec()) as usize + 2;
    x.to_string_radix(10, Some(digits))
}

impl BigComplex {
    pub fn new(re: Float, im: Float) -> Self {
        BigComplex { re, im }
    }

    pub fn zero(prec: u32) -> Self {
        BigComplex::new(Float::new(prec), Float::new(prec))
    }

    pub fn one(prec: u32) -> Self {
        BigComplex::new(Float::with_val(prec, 1), Float::new(prec))
    }

    pub fn i(prec: u32) -> Self {
        BigComplex::new(Float::new(prec), Float::with_val(prec, 1))
    }

    pub fn from_f64(re: f64, im: f64, prec: u32) -> Self {
        BigComplex::new(Float::with_val(prec, re), Float::with_val(prec, im))
    }

    pub fn from_real(re: Float) -> Self {
        let p = re.prec();
        BigComplex::new(re, Float::new(p))
    }

    pub fn from_rational(q: &Rational, prec: u32) -> Self {
        BigComplex::new(Float::with_val(prec, q), Float::new(prec))
    }

    pub fn from_rationals(re: &Rational, im: &Rational, prec: u32) -> Self {
        BigComplex::new(Float::with_val(prec, re), Float::with_val(prec, im))
    }

    /// Unit complex number `e^{i theta}`.
    pub fn cis(theta: &Float) -> Self {
        let (s, c) = theta.clone().sin_cos(Float::new(theta.prec()));
        BigComplex::new(c, s)
    }

    pub fn prec(&self) -> u32 {
        self.re.prec()
    }

    pub fn with_prec(&self, prec: u32) -> Self {
        BigComplex::new(Float::with_val(prec, &self.re), Float::with_val(prec, &self.im))
    }

    pub fn to_c64(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        BigComplex::new(self.re.clone(), Float::with_val(self.prec(), -&self.im))
    }

    pub fn norm_sqr(&self) -> Float {
        let p = self.prec();
        Float::with_val(p, self.re.clone().square() + self.im.clone().square())
    }

    pub fn abs(&self) -> Float {
        Float::with_val(self.prec(), self.re.hypot_ref(&self.im))
    }

    pub fn abs_f64(&self) -> f64 {
        self.abs().to_f64()
    }

    /// Principal argument in (-pi, pi].
    pub fn arg(&self) -> Float {
        Float::with_val(self.prec(), self.im.atan2_ref(&self.re))
    }

    pub fn scale(&self, k: &Float) -> Self {
        let p = self.prec();
        BigComplex::new(Float::with_val(p, &self.re * k), Float::with_val(p, &self.im * k))
    }

    pub fn scale_f64(&self, k: f64) -> Self {
        self.scale(&Float::with_val(self.prec(), k))
    }

    pub fn mul_i(&self) -> Self {
        let p = self.prec();
        BigComplex::new(Float::with_val(p, -&self.im), self.re.clone())
    }

    pub fn mul_neg_i(&self) -> Self {
        let p = self.prec();
        BigComplex::new(self.im.clone(), Float::with_val(p, -&self.re))
    }

    pub fn inv(&self) -> Self {
        let d = self.norm_sqr();
        let p = self.prec();
        BigComplex::new(Float::with_val(p, &self.re / &d), Float::with_val(p, -(self.im.clone() / &d)))
    }

    pub fn square(&self) -> Self {
        self * self
    }

    /// Principal square root; the cut lies on the negative real axis and the
    /// sign of a zero imaginary part selects the side.
    pub fn sqrt(&self) -> Self {
        let p = self.prec();
        if self.is_zero() {
            return BigComplex::zero(p);
        }
        let r = self.abs();
        if !self.re.is_sign_negative() {
            let t = Float::with_val(p, Float::with_val(p, &r + &self.re) / 2u32).sqrt();
            let im = Float::with_val(p, &self.im / Float::with_val(p, &t * 2u32));
            BigComplex::new(t, im)
        } else {
            let t = Float::with_val(p, Float::with_val(p, &r - &self.re) / 2u32).sqrt();
            let re = Float::with_val(p, self.im.clone().abs() / Float::with_val(p, &t * 2u32));
            let im = if self.im.is_sign_negative() { -t } else { t };
            BigComplex::new(re, im)
        }
    }

    pub fn exp(&self) -> Self {
        let m = self.re.clone().exp();
        let c = BigComplex::cis(&self.im);
        c.scale(&m)
    }

    /// Principal logarithm.
    pub fn ln(&self) -> Self {
        let p = self.prec();
        BigComplex::new(Float::with_val(p, self.abs().ln()), self.arg())
    }

    /// Principal power `self^w = exp(w log self)`.
    pub fn powc(&self, w: &BigComplex) -> Self {
        if self.is_zero() {
            return BigComplex::zero(self.prec());
        }
        (w * &self.ln()).exp()
    }

    /// Principal real power.
    pub fn powf(&self, w: &Float) -> Self {
        if self.is_zero() {
            return BigComplex::zero(self.prec());
        }
        self.ln().scale(w).exp()
    }

    pub fn powi(&self, k: i64) -> Self {
        let p = self.prec();
        if k < 0 {
            return self.powi(-k).inv();
        }
        let mut result = BigComplex::one(p);
        let mut base = self.clone();
        let mut e = k as u64;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            base = base.square();
            e >>= 1;
        }
        result
    }

    pub fn sin(&self) -> Self {
        let p = self.prec();
        let (s, c) = self.re.clone().sin_cos(Float::new(p));
        let (sh, ch) = self.im.clone().sinh_cosh(Float::new(p));
        BigComplex::new(Float::with_val(p, &s * &ch), Float::with_val(p, &c * &sh))
    }

    pub fn cos(&self) -> Self {
        let p = self.prec();
        let (s, c) = self.re.clone().sin_cos(Float::new(p));
        let (sh, ch) = self.im.clone().sinh_cosh(Float::new(p));
        BigComplex::new(Float::with_val(p, &c * &ch), Float::with_val(p, -(s * sh)))
    }

    /// Euclidean distance to another point.
    pub fn dist(&self, other: &BigComplex) -> Float {
        (self - other).abs()
    }

    /// Relative difference `|a - b| / max(|a|, |b|, tiny)`.
    pub fn rel_diff(&self, other: &BigComplex) -> Float {
        let d = (self - other).abs();
        let m = self.abs().max(&other.abs());
        if m.is_zero() {
            d
        } else {
            d / m
        }
    }

    pub fn to_strings(&self) -> (String, String) {
        (float_to_string(&self.re), float_to_string(&self.im))
    }
}

impl fmt::Display for BigComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (r, i) = self.to_strings();
        if i.starts_with('-') {
            write!(f, "{} - {}i", r, &i[1..])
        } else {
            write!(f, "{} + {}i", r, i)
        }
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl<'a, 'b> $tr<&'b BigComplex> for &'a BigComplex {
            type Output = BigComplex;
            fn $m(self, rhs: &'b BigComplex) -> BigComplex {
                let f: fn(&BigComplex, &BigComplex) -> BigComplex = $body;
                f(self, rhs)
            }
        }
        impl $tr<BigComplex> for BigComplex {
            type Output = BigComplex;
            fn $m(self, rhs: BigComplex) -> BigComplex {
                (&self).$m(&rhs)
            }
        }
        impl<'b> $tr<&'b BigComplex> for BigComplex {
            type Output = BigComplex;
            fn $m(self, rhs: &'b BigComplex) -> BigComplex {
                (&self).$m(rhs)
            }
        }
        impl<'a> $tr<BigComplex> for &'a BigComplex {
            type Output = BigComplex;
            fn $m(self, rhs: BigComplex) -> BigComplex {
                self.$m(&rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| {
    let p = a.prec();
    BigComplex::new(Float::with_val(p, &a.re + &b.re), Float::with_val(p, &a.im + &b.im))
});

binop!(Sub, sub, |a, b| {
    let p = a.prec();
    BigComplex::new(Float::with_val(p, &a.re - &b.re), Float::with_val(p, &a.im - &b.im))
});

binop!(Mul, mul, |a, b| {
    let p = a.prec();
    let rr = Float::with_val(p, &a.re * &b.re);
    let ii = Float::with_val(p, &a.im * &b.im);
    let ri = Float::with_val(p, &a.re * &b.im);
    let ir = Float::with_val(p, &a.im * &b.re);
    BigComplex::new(rr - ii, ri + ir)
});

binop!(Div, div, |a, b| {
    let p = a.prec();
    // Smith's algorithm avoids overflow and keeps relative accuracy.
    if b.re.clone().abs() >= b.im.clone().abs() {
        let r = Float::with_val(p, &b.im / &b.re);
        let d = Float::with_val(p, &b.re + Float::with_val(p, &r * &b.im));
        let re = Float::with_val(p, &a.re + Float::with_val(p, &a.im * &r)) / &d;
        let im = Float::with_val(p, &a.im - Float::with_val(p, &a.re * &r)) / &d;
        BigComplex::new(re, im)
    } else {
        let r = Float::with_val(p, &b.re / &b.im);
        let d = Float::with_val(p, &b.im + Float::with_val(p, &r * &b.re));
        let re = Float::with_val(p, Float::with_val(p, &a.re * &r) + &a.im) / &d;
        let im = Float::with_val(p, Float::with_val(p, &a.im * &r) - &a.re) / &d;
        BigComplex::new(re, im)
    }
});

impl Neg for BigComplex {
    type Output = BigComplex;
    fn neg(self) -> BigComplex {
        BigComplex::new(-self.re, -self.im)
    }
}

impl<'a> Neg for &'a BigComplex {
    type Output = BigComplex;
    fn neg(self) -> BigComplex {
        -self.clone()
    }
}

impl<'a> AddAssign<&'a BigComplex> for BigComplex {
    fn add_assign(&mut self, rhs: &'a BigComplex) {
        self.re += &rhs.re;
        self.im += &rhs.im;
    }
}

impl AddAssign<BigComplex> for BigComplex {
    fn add_assign(&mut self, rhs: BigComplex) {
        *self += &rhs;
    }
}

impl<'a> SubAssign<&'a BigComplex> for BigComplex {
    fn sub_assign(&mut self, rhs: &'a BigComplex) {
        self.re -= &rhs.re;
        self.im -= &rhs.im;
    }
}

impl<'a> MulAssign<&'a BigComplex> for BigComplex {
    fn mul_assign(&mut self, rhs: &'a BigComplex) {
        *self = &*self * rhs;
    }
}

/// `x^k` for a real float and integer exponent, kept here so callers do not
/// need the `Pow` trait in scope.
pub fn float_powi(x: &Float, k: i32) -> Float {
    Float::with_val(x.prec(), x.pow(k))
}
