use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Exact rational. `BigRational` keeps the denominator positive and the
/// fraction reduced after every operation.
pub type RationalScalar = BigRational;

pub fn rat(n: i64, d: i64) -> RationalScalar {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> RationalScalar {
    BigRational::from_integer(BigInt::from(n))
}

pub fn pow2(e: i64) -> RationalScalar {
    let p = BigInt::one() << (e.unsigned_abs() as usize);
    if e >= 0 {
        BigRational::from_integer(p)
    } else {
        BigRational::new(BigInt::one(), p)
    }
}

pub fn powi(q: &RationalScalar, e: u32) -> RationalScalar {
    num_traits::pow(q.clone(), e as usize)
}

/// Accepts "p/q", integers, decimals ("0.125", "-1.5e-6") and scientific integers.
pub fn parse_rational(s: &str) -> Result<RationalScalar> {
    let t = s.trim();
    if t.is_empty() {
        return Err(Error::Parse("empty rational".into()));
    }
    if let Some((p, q)) = t.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| Error::Parse(format!("bad numerator in {t:?}")))?;
        let q: BigInt = q.trim().parse().map_err(|_| Error::Parse(format!("bad denominator in {t:?}")))?;
        if q.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {t:?}")));
        }
        return Ok(BigRational::new(p, q));
    }
    let (mant, exp) = match t.find(['e', 'E']) {
        Some(i) => {
            let e: i64 = t[i + 1..].parse().map_err(|_| Error::Parse(format!("bad exponent in {t:?}")))?;
            (&t[..i], e)
        }
        None => (t, 0),
    };
    let (neg, body) = match mant.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (ip, fp) = body.split_once('.').unwrap_or((body, ""));
    if ip.is_empty() && fp.is_empty() {
        return Err(Error::Parse(format!("no digits in {t:?}")));
    }
    if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return Err(Error::Parse(format!("not a number: {t:?}")));
    }
    let digits: BigInt = format!("{ip}{fp}0").parse().map_err(|_| Error::Parse(t.into()))?;
    let scale = fp.len() as i64 + 1 - exp;
    let ten = BigInt::from(10);
    let mut v = if scale >= 0 {
        BigRational::new(digits, num_traits::pow(ten, scale as usize))
    } else {
        BigRational::from_integer(digits * num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        v = -v;
    }
    Ok(v)
}

pub fn fmt_rational(q: &RationalScalar) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn to_f64(q: &RationalScalar) -> f64 {
    if let Some(f) = q.to_f64() {
        if f.is_finite() && (f != 0.0 || q.is_zero()) {
            return f;
        }
    }
    // scale into range first; to_f64 gives up on huge numerators/denominators
    let e = log2_floor(q);
    let m = q / pow2(e);
    m.to_f64().unwrap_or(f64::NAN) * 2f64.powi(e.clamp(-1100, 1100) as i32)
}

fn bitlen(n: &BigInt) -> i64 {
    n.bits() as i64
}

/// floor(log2 |q|) up to an off-by-one; q != 0.
pub fn log2_floor(q: &RationalScalar) -> i64 {
    if q.is_zero() {
        return 0;
    }
    bitlen(q.numer()) - bitlen(q.denom())
}

/// Largest dyadic rational below q with about `bits` significant bits.
pub fn round_down(q: &RationalScalar, bits: u32) -> RationalScalar {
    round_dir(q, bits, false)
}

pub fn round_up(q: &RationalScalar, bits: u32) -> RationalScalar {
    round_dir(q, bits, true)
}

fn round_dir(q: &RationalScalar, bits: u32, up: bool) -> RationalScalar {
    if q.is_zero() || (q.denom().bits() as u32 <= bits && q.numer().bits() as u32 <= bits) {
        return q.clone();
    }
    let shift = bits as i64 - log2_floor(q);
    let scaled = q * pow2(shift);
    let n = if up { scaled.ceil() } else { scaled.floor() };
    n / pow2(shift)
}

/// Exact square root when both numerator and denominator are perfect squares.
pub fn sqrt_exact(q: &RationalScalar) -> Option<RationalScalar> {
    if q.is_negative() {
        return None;
    }
    let n = q.numer().sqrt();
    let d = q.denom().sqrt();
    if &(&n * &n) == q.numer() && &(&d * &d) == q.denom() {
        Some(BigRational::new(n, d))
    } else {
        None
    }
}

/// Rational bounds lo <= sqrt(q) <= hi with relative width about 2^-bits.
pub fn sqrt_bounds(q: &RationalScalar, bits: u32) -> (RationalScalar, RationalScalar) {
    if let Some(r) = sqrt_exact(q) {
        return (r.clone(), r);
    }
    let shift = bits as i64 - log2_floor(q) / 2 + 2;
    let scale = pow2(2 * shift);
    let s = q * scale;
    let lo_int = s.floor().to_integer().sqrt();
    let hi_int = {
        let c = s.ceil().to_integer();
        let r = c.sqrt();
        if &r * &r == c {
            r
        } else {
            r + 1
        }
    };
    let den = pow2(shift);
    (BigRational::from_integer(lo_int) / &den, BigRational::from_integer(hi_int) / den)
}

pub fn ceil_to_u64(q: &RationalScalar) -> Option<u64> {
    q.ceil().to_integer().to_u64()
}

pub fn is_integer(q: &RationalScalar) -> bool {
    q.denom().is_one()
}

pub fn sign(q: &RationalScalar) -> Ordering {
    match q.numer().sign() {
        Sign::Minus => Ordering::Less,
        Sign::NoSign => Ordering::Equal,
        Sign::Plus => Ordering::Greater,
    }
}

pub fn min_q(a: &RationalScalar, b: &RationalScalar) -> RationalScalar {
    if a <= b { a.clone() } else { b.clone() }
}

pub fn max_q(a: &RationalScalar, b: &RationalScalar) -> RationalScalar {
    if a >= b { a.clone() } else { b.clone() }
}

pub fn gcd_int(a: &BigInt, b: &BigInt) -> BigInt {
    a.gcd(b)
}

/// Serde adapter writing rationals as "p/q" strings.
pub mod serde_q {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &RationalScalar, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_rational(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<RationalScalar, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

pub mod serde_q_vec {
    use super::*;
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[RationalScalar], s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for q in v {
            seq.serialize_element(&fmt_rational(q))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<RationalScalar>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter().map(|s| parse_rational(s).map_err(serde::de::Error::custom)).collect()
    }
}

pub mod serde_q_opt {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Option<RationalScalar>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match q {
            Some(q) => s.serialize_some(&fmt_rational(q)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<RationalScalar>, D::Error> {
        let v = Option::<String>::deserialize(d)?;
        v.map(|s| parse_rational(&s).map_err(serde::de::Error::custom)).transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rational("901/1000").unwrap(), rat(901, 1000));
        assert_eq!(parse_rational("-3").unwrap(), int(-3));
        assert_eq!(parse_rational("0.125").unwrap(), rat(1, 8));
        assert_eq!(parse_rational("1e-6").unwrap(), rat(1, 1_000_000));
        assert_eq!(parse_rational("-2.5E2").unwrap(), int(-250));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn sqrt_exact_and_bounds() {
        assert_eq!(sqrt_exact(&rat(9, 16)), Some(rat(3, 4)));
        assert_eq!(sqrt_exact(&rat(2, 1)), None);
        let (lo, hi) = sqrt_bounds(&int(2), 64);
        assert!(&lo * &lo <= int(2) && &hi * &hi >= int(2));
        assert!(&hi - &lo < pow2(-60));
        let tiny = rat(2, 1) * pow2(-300);
        let (lo, hi) = sqrt_bounds(&tiny, 64);
        assert!(&lo * &lo <= tiny && &hi * &hi >= tiny);
        assert!((&hi - &lo) / &lo < pow2(-60));
    }

    #[test]
    fn rounding_brackets() {
        assert_eq!(round_down(&rat(1, 3), 20), rat(1, 3));
        let q = rat(123456789, 1000000007);
        let lo = round_down(&q, 20);
        let hi = round_up(&q, 20);
        assert!(lo < q && q < hi);
        assert!(&hi - &lo < pow2(-20));
        let n = -q;
        assert!(round_down(&n, 20) < n && n < round_up(&n, 20));
    }

    #[test]
    fn f64_of_huge() {
        let q = pow2(-2000) * int(3);
        assert_eq!(to_f64(&q), 0.0);
        assert!((to_f64(&rat(1, 3)) - 1.0 / 3.0).abs() < 1e-15);
    }
}
