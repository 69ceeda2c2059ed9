//! The limiting parameter pair (A, B) and its validity region.

use crate::error::{JrhError, Result};
use rug::{Float, Rational};
use serde::{Deserialize, Serialize};
use std::str::FromStr;

/// Distance to the boundary of the admissible region below which a
/// conditioning warning is raised.
pub const BOUNDARY_WARN: f64 = 1e-6;

/// Limits A = lim alpha_n/n and B = lim beta_n/n, kept as exact rationals.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterPair {
    a: Rational,
    b: Rational,
    near_boundary: bool,
}

/// Serialized form: decimal or fraction strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterSpec {
    pub a: String,
    pub b: String,
}

/// Parses "-0.7", "-7/10" or "-7e-1" into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    if let Ok(q) = Rational::from_str(t) {
        return Ok(q);
    }
    let (mant, exp) = match t.find(['e', 'E']) {
        Some(k) => {
            let e: i32 = t[k + 1..]
                .parse()
                .map_err(|_| JrhError::InvalidArgument(format!("cannot parse number '{s}'")))?;
            (&t[..k], e)
        }
        None => (t, 0),
    };
    let (neg, body) = match mant.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (int_part, frac_part) = match body.find('.') {
        Some(k) => (&body[..k], &body[k + 1..]),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty()
        || !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return Err(JrhError::InvalidArgument(format!("cannot parse number '{s}'")));
    }
    let digits = format!("{int_part}{frac_part}");
    let num = rug::Integer::from_str(if digits.is_empty() { "0" } else { &digits })
        .map_err(|_| JrhError::InvalidArgument(format!("cannot parse number '{s}'")))?;
    let scale = exp - frac_part.len() as i32;
    let mut q = Rational::from(num);
    let ten = Rational::from(10);
    if scale >= 0 {
        for _ in 0..scale {
            q *= &ten;
        }
    } else {
        for _ in 0..(-scale) {
            q /= &ten;
        }
    }
    if neg {
        q = -q;
    }
    Ok(q)
}

impl ParameterPair {
    /// Validates -1 < A < 0, -1 < B < 0, -2 < A+B < -1.
    pub fn new(a: Rational, b: Rational) -> Result<Self> {
        let s = Rational::from(&a + &b);
        let zero = Rational::new();
        let m1 = Rational::from(-1);
        let m2 = Rational::from(-2);
        if !(a > m1 && a < zero) {
            return Err(JrhError::InvalidParameters(format!("A = {a} must satisfy -1 < A < 0")));
        }
        if !(b > m1 && b < zero) {
            return Err(JrhError::InvalidParameters(format!("B = {b} must satisfy -1 < B < 0")));
        }
        if !(s > m2 && s < m1) {
            return Err(JrhError::InvalidParameters(format!(
                "A + B = {s} must satisfy -2 < A + B < -1"
            )));
        }
        let af = a.to_f64();
        let bf = b.to_f64();
        let sf = s.to_f64();
        let margin = [af + 1.0, -af, bf + 1.0, -bf, sf + 2.0, -1.0 - sf]
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        let near_boundary = margin < BOUNDARY_WARN;
        if near_boundary {
            log::warn!("parameters A = {af}, B = {bf} are within {BOUNDARY_WARN:e} of the boundary; results are poorly conditioned");
        }
        Ok(ParameterPair { a, b, near_boundary })
    }

    pub fn from_f64(a: f64, b: f64) -> Result<Self> {
        let qa = Rational::from_f64(a).ok_or_else(|| JrhError::InvalidParameters("A is not finite".into()))?;
        let qb = Rational::from_f64(b).ok_or_else(|| JrhError::InvalidParameters("B is not finite".into()))?;
        ParameterPair::new(qa, qb)
    }

    pub fn parse(a: &str, b: &str) -> Result<Self> {
        ParameterPair::new(parse_rational(a)?, parse_rational(b)?)
    }

    pub fn a(&self) -> &Rational {
        &self.a
    }

    pub fn b(&self) -> &Rational {
        &self.b
    }

    pub fn near_boundary(&self) -> bool {
        self.near_boundary
    }

    pub fn a_float(&self, prec: u32) -> Float {
        Float::with_val(prec, &self.a)
    }

    pub fn b_float(&self, prec: u32) -> Float {
        Float::with_val(prec, &self.b)
    }

    /// A + B + 2, the total mass parameter in (0, 1).
    pub fn s_rational(&self) -> Rational {
        Rational::from(&self.a + &self.b) + 2u32
    }

    pub fn s_float(&self, prec: u32) -> Float {
        Float::with_val(prec, &self.s_rational())
    }

    pub fn spec(&self) -> ParameterSpec {
        ParameterSpec { a: self.a.to_string(), b: self.b.to_string() }
    }
}
