use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use super::scalar::{fmt_rational, int, parse_rational, serde_q, to_f64, RationalScalar};
use crate::error::{Error, Result};

/// Complex number with exact rational parts.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GaussianRational {
    #[serde(with = "serde_q")]
    pub re: RationalScalar,
    #[serde(with = "serde_q")]
    pub im: RationalScalar,
}

impl GaussianRational {
    pub fn new(re: RationalScalar, im: RationalScalar) -> Self {
        Self { re, im }
    }

    pub fn real(re: RationalScalar) -> Self {
        Self { re, im: RationalScalar::zero() }
    }

    pub fn zero() -> Self {
        Self::real(RationalScalar::zero())
    }

    pub fn one() -> Self {
        Self::real(RationalScalar::one())
    }

    pub fn i() -> Self {
        Self::new(RationalScalar::zero(), RationalScalar::one())
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        Self::new(self.re.clone(), -&self.im)
    }

    pub fn norm_sq(&self) -> RationalScalar {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn dist_sq(&self, other: &Self) -> RationalScalar {
        (self - other).norm_sq()
    }

    pub fn scale(&self, k: &RationalScalar) -> Self {
        Self::new(&self.re * k, &self.im * k)
    }

    pub fn inv(&self) -> Result<Self> {
        let n = self.norm_sq();
        if n.is_zero() {
            return Err(Error::Domain("inverse of zero".into()));
        }
        Ok(Self::new(&self.re / &n, -&self.im / &n))
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self * &other.inv()?)
    }

    /// Parses "p/q", "p/q i", "a+bi", "2i", "-2i" and similar forms.
    pub fn parse(s: &str) -> Result<Self> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if !t.ends_with('i') {
            return Ok(Self::real(parse_rational(&t)?));
        }
        let body = &t[..t.len() - 1];
        // split at the last sign that is not an exponent sign and not leading
        let bytes = body.as_bytes();
        let mut split = None;
        for k in (1..bytes.len()).rev() {
            let c = bytes[k] as char;
            if (c == '+' || c == '-') && !matches!(bytes[k - 1] as char, 'e' | 'E' | '/') {
                split = Some(k);
                break;
            }
        }
        let (re, im) = match split {
            Some(k) => (&body[..k], &body[k..]),
            None => ("0", body),
        };
        let im = match im {
            "" | "+" => int(1),
            "-" => int(-1),
            x => parse_rational(x)?,
        };
        Ok(Self::new(parse_rational(re)?, im))
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (to_f64(&self.re), to_f64(&self.im))
    }
}

impl fmt::Display for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", fmt_rational(&self.re))
        } else if self.re.is_zero() {
            write!(f, "{}i", fmt_rational(&self.im))
        } else if self.im > RationalScalar::zero() {
            write!(f, "{}+{}i", fmt_rational(&self.re), fmt_rational(&self.im))
        } else {
            write!(f, "{}{}i", fmt_rational(&self.re), fmt_rational(&self.im))
        }
    }
}

impl<'a> Add<&'a GaussianRational> for &'a GaussianRational {
    type Output = GaussianRational;
    fn add(self, o: &GaussianRational) -> GaussianRational {
        GaussianRational::new(&self.re + &o.re, &self.im + &o.im)
    }
}

impl<'a> Sub<&'a GaussianRational> for &'a GaussianRational {
    type Output = GaussianRational;
    fn sub(self, o: &GaussianRational) -> GaussianRational {
        GaussianRational::new(&self.re - &o.re, &self.im - &o.im)
    }
}

impl<'a> Mul<&'a GaussianRational> for &'a GaussianRational {
    type Output = GaussianRational;
    fn mul(self, o: &GaussianRational) -> GaussianRational {
        GaussianRational::new(&self.re * &o.re - &self.im * &o.im, &self.re * &o.im + &self.im * &o.re)
    }
}

impl Neg for &GaussianRational {
    type Output = GaussianRational;
    fn neg(self) -> GaussianRational {
        GaussianRational::new(-&self.re, -&self.im)
    }
}

impl Add for GaussianRational {
    type Output = GaussianRational;
    fn add(self, o: GaussianRational) -> GaussianRational {
        &self + &o
    }
}

impl Sub for GaussianRational {
    type Output = GaussianRational;
    fn sub(self, o: GaussianRational) -> GaussianRational {
        &self - &o
    }
}

impl Mul for GaussianRational {
    type Output = GaussianRational;
    fn mul(self, o: GaussianRational) -> GaussianRational {
        &self * &o
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;

    #[test]
    fn parse_forms() {
        assert_eq!(GaussianRational::parse("-2i").unwrap(), GaussianRational::new(int(0), int(-2)));
        assert_eq!(GaussianRational::parse("19/20i").unwrap(), GaussianRational::new(int(0), rat(19, 20)));
        assert_eq!(GaussianRational::parse("1/2-3i").unwrap(), GaussianRational::new(rat(1, 2), int(-3)));
        assert_eq!(GaussianRational::parse("-9/10").unwrap(), GaussianRational::real(rat(-9, 10)));
        assert_eq!(GaussianRational::parse("i").unwrap(), GaussianRational::i());
        assert_eq!(GaussianRational::parse("1e-3+1e-3i").unwrap(), GaussianRational::new(rat(1, 1000), rat(1, 1000)));
    }

    #[test]
    fn field_ops() {
        let a = GaussianRational::new(rat(1, 2), int(3));
        let b = GaussianRational::new(int(-2), rat(1, 5));
        let q = a.div(&b).unwrap();
        assert_eq!(&q * &b, a);
        assert!(GaussianRational::zero().inv().is_err());
        assert_eq!(format!("{}", a), "1/2+3i");
    }
}
