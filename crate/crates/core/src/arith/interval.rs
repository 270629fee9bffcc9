use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use super::scalar::*;
use crate::error::{Error, Result};

/// Closed interval with exact rational endpoints.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RationalInterval {
    #[serde(with = "serde_q")]
    pub lo: RationalScalar,
    #[serde(with = "serde_q")]
    pub hi: RationalScalar,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntervalOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow(u32),
}

impl RationalInterval {
    pub fn new(lo: RationalScalar, hi: RationalScalar) -> Result<Self> {
        if lo > hi {
            return Err(Error::Enclosure(format!("empty interval [{}, {}]", fmt_rational(&lo), fmt_rational(&hi))));
        }
        Ok(Self { lo, hi })
    }

    /// Endpoints in either order.
    pub fn hull2(a: RationalScalar, b: RationalScalar) -> Self {
        if a <= b {
            Self { lo: a, hi: b }
        } else {
            Self { lo: b, hi: a }
        }
    }

    pub fn point(q: RationalScalar) -> Self {
        Self { lo: q.clone(), hi: q }
    }

    pub fn zero() -> Self {
        Self::point(RationalScalar::zero())
    }

    pub fn one() -> Self {
        Self::point(RationalScalar::one())
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> RationalScalar {
        &self.hi - &self.lo
    }

    pub fn mid(&self) -> RationalScalar {
        (&self.lo + &self.hi) / int(2)
    }

    pub fn contains(&self, q: &RationalScalar) -> bool {
        &self.lo <= q && q <= &self.hi
    }

    pub fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    pub fn subset_of(&self, o: &Self) -> bool {
        o.lo <= self.lo && self.hi <= o.hi
    }

    pub fn hull(&self, o: &Self) -> Self {
        Self { lo: min_q(&self.lo, &o.lo), hi: max_q(&self.hi, &o.hi) }
    }

    pub fn intersect(&self, o: &Self) -> Option<Self> {
        let lo = max_q(&self.lo, &o.lo);
        let hi = min_q(&self.hi, &o.hi);
        (lo <= hi).then_some(Self { lo, hi })
    }

    pub fn is_positive(&self) -> bool {
        self.lo.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.hi.is_negative()
    }

    pub fn neg(&self) -> Self {
        Self { lo: -&self.hi, hi: -&self.lo }
    }

    pub fn abs(&self) -> Self {
        if self.lo.is_negative() && self.hi.is_positive() {
            Self { lo: RationalScalar::zero(), hi: max_q(&-&self.lo, &self.hi) }
        } else if self.hi.is_positive() || self.hi.is_zero() && self.lo.is_zero() {
            self.clone()
        } else {
            self.neg()
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self { lo: &self.lo + &o.lo, hi: &self.hi + &o.hi }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self { lo: &self.lo - &o.hi, hi: &self.hi - &o.lo }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let c = [&self.lo * &o.lo, &self.lo * &o.hi, &self.hi * &o.lo, &self.hi * &o.hi];
        let mut lo = c[0].clone();
        let mut hi = c[0].clone();
        for v in &c[1..] {
            if v < &lo {
                lo = v.clone();
            }
            if v > &hi {
                hi = v.clone();
            }
        }
        Self { lo, hi }
    }

    pub fn scale(&self, k: &RationalScalar) -> Self {
        Self::hull2(&self.lo * k, &self.hi * k)
    }

    pub fn recip(&self) -> Result<Self> {
        if self.contains_zero() {
            return Err(Error::Enclosure("division by an interval containing 0".into()));
        }
        Ok(Self { lo: self.hi.recip(), hi: self.lo.recip() })
    }

    pub fn div(&self, o: &Self) -> Result<Self> {
        Ok(self.mul(&o.recip()?))
    }

    pub fn powi(&self, e: u32) -> Self {
        if e == 0 {
            return Self::one();
        }
        let a = powi(&self.lo, e);
        let b = powi(&self.hi, e);
        if e % 2 == 1 {
            return Self { lo: a, hi: b };
        }
        if self.contains_zero() {
            Self { lo: RationalScalar::zero(), hi: max_q(&a, &b) }
        } else {
            Self::hull2(a, b)
        }
    }

    pub fn op(&self, o: &Self, op: IntervalOp) -> Result<Self> {
        Ok(match op {
            IntervalOp::Add => self.add(o),
            IntervalOp::Sub => self.sub(o),
            IntervalOp::Mul => self.mul(o),
            IntervalOp::Div => self.div(o)?,
            IntervalOp::Pow(e) => self.powi(e),
        })
    }

    /// Outward rounding to dyadic endpoints with about `bits` significant bits.
    pub fn round_out(&self, bits: u32) -> Self {
        Self { lo: round_down(&self.lo, bits), hi: round_up(&self.hi, bits) }
    }

    pub fn sqrt(&self, bits: u32) -> Result<Self> {
        if self.lo.is_negative() {
            return Err(Error::Domain("sqrt of negative interval".into()));
        }
        let (lo, _) = sqrt_bounds(&self.lo, bits);
        let (_, hi) = sqrt_bounds(&self.hi, bits);
        Ok(Self { lo, hi })
    }

    pub fn ln(&self, bits: u32) -> Result<Self> {
        if !self.is_positive() {
            return Err(Error::Domain("log of non-positive interval".into()));
        }
        let a = ln_point(&self.lo, bits);
        if self.is_point() {
            return Ok(a);
        }
        let b = ln_point(&self.hi, bits);
        Ok(Self { lo: a.lo, hi: b.hi })
    }

    pub fn exp(&self, bits: u32) -> Self {
        let a = exp_point(&self.lo, bits);
        if self.is_point() {
            return a;
        }
        let b = exp_point(&self.hi, bits);
        Self { lo: a.lo, hi: b.hi }
    }

    /// x^s for x > 0 and rational s >= 0; integer exponents stay exact.
    pub fn pow(&self, s: &RationalScalar, bits: u32) -> Result<Self> {
        if s.is_negative() {
            return Err(Error::Domain("negative exponent".into()));
        }
        if is_integer(s) {
            let e: u32 = s.to_integer().try_into().map_err(|_| Error::Domain("exponent too large".into()))?;
            return Ok(self.powi(e));
        }
        Ok(self.ln(bits)?.scale(s).exp(bits))
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (to_f64(&self.lo), to_f64(&self.hi))
    }
}

impl fmt::Display for RationalInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", fmt_rational(&self.lo), fmt_rational(&self.hi))
    }
}

/// Fixed-point value v / 2^wb with v a BigInt.
fn fixed_floor(q: &RationalScalar, wb: u32) -> BigInt {
    (q * pow2(wb as i64)).floor().to_integer()
}

fn fixed_ceil(q: &RationalScalar, wb: u32) -> BigInt {
    (q * pow2(wb as i64)).ceil().to_integer()
}

fn div_floor(a: &BigInt, b: &BigInt) -> BigInt {
    a.div_floor(b)
}

fn div_ceil(a: &BigInt, b: &BigInt) -> BigInt {
    -((-a).div_floor(b))
}

/// Lower and upper fixed-point sums of atanh(y) = sum y^(2k+1)/(2k+1) for
/// y = num / 2^wb with 0 <= y <= 1/3.
fn atanh_fixed(num: &BigInt, wb: u32) -> (BigInt, BigInt) {
    let s2 = BigInt::one() << (2 * wb as usize);
    let y2 = num * num;
    let (mut p_lo, mut p_hi) = (num.clone(), num.clone());
    let (mut sum_lo, mut sum_hi) = (num.clone(), num.clone());
    let mut k: u64 = 0;
    while !p_hi.is_zero() {
        k += 1;
        p_lo = div_floor(&(&p_lo * &y2), &s2);
        p_hi = div_ceil(&(&p_hi * &y2), &s2);
        let d = BigInt::from(2 * k + 1);
        sum_lo += div_floor(&p_lo, &d);
        sum_hi += div_ceil(&p_hi, &d);
        if p_hi <= BigInt::one() {
            break;
        }
    }
    // remaining terms sum below p_hi y^2 / (1 - y^2) <= p_hi / 8
    sum_hi += BigInt::one();
    (sum_lo, sum_hi)
}

fn from_fixed(lo: BigInt, hi: BigInt, wb: u32) -> RationalInterval {
    let s = pow2(wb as i64);
    RationalInterval { lo: RationalScalar::from_integer(lo) / &s, hi: RationalScalar::from_integer(hi) / s }
}

/// Enclosure of atanh(y) for rational |y| <= 1/3.
fn atanh_interval(y: &RationalScalar, wb: u32) -> RationalInterval {
    if y.is_zero() {
        return RationalInterval::zero();
    }
    let a = y.abs();
    let lo_in = fixed_floor(&a, wb);
    let hi_in = fixed_ceil(&a, wb);
    let (lo, _) = atanh_fixed(&lo_in, wb);
    let (_, hi) = atanh_fixed(&hi_in, wb);
    let r = from_fixed(lo, hi, wb);
    if y.is_negative() {
        r.neg()
    } else {
        r
    }
}

fn ln2(bits: u32) -> RationalInterval {
    static CACHE: OnceLock<Mutex<HashMap<u32, RationalInterval>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = cache.lock().expect("ln2 cache").get(&bits) {
        return v.clone();
    }
    let v = atanh_interval(&rat(1, 3), bits + 8).scale(&int(2));
    cache.lock().expect("ln2 cache").insert(bits, v.clone());
    v
}

/// Enclosure of ln q for rational q > 0.
pub fn ln_point(q: &RationalScalar, bits: u32) -> RationalInterval {
    assert!(q.is_positive(), "ln of non-positive");
    if q.is_one() {
        return RationalInterval::zero();
    }
    let mut k = log2_floor(q);
    let mut m = q / pow2(k);
    // bring m into [2/3, 4/3] so that |y| <= 1/7
    while m > rat(4, 3) {
        m /= int(2);
        k += 1;
    }
    while m < rat(2, 3) {
        m *= int(2);
        k -= 1;
    }
    let wb = bits + 16 + (64 - k.unsigned_abs().leading_zeros());
    let y = (&m - int(1)) / (&m + int(1));
    let base = atanh_interval(&y, wb).scale(&int(2));
    if k == 0 {
        return base.round_out(bits + 8);
    }
    ln2(wb).scale(&int(k)).add(&base).round_out(bits + 8)
}

/// Lower and upper fixed-point values of exp(r) for r = num / 2^wb with
/// 0 <= r <= 1/2.
fn exp_fixed(num: &BigInt, wb: u32) -> (BigInt, BigInt) {
    let s = BigInt::one() << (wb as usize);
    let (mut t_lo, mut t_hi) = (s.clone(), s.clone());
    let (mut sum_lo, mut sum_hi) = (s.clone(), s.clone());
    let mut j: u64 = 0;
    loop {
        j += 1;
        let d = &s * BigInt::from(j);
        t_lo = div_floor(&(&t_lo * num), &d);
        t_hi = div_ceil(&(&t_hi * num), &d);
        sum_lo += &t_lo;
        sum_hi += &t_hi;
        if t_hi <= BigInt::one() {
            break;
        }
    }
    // each further term is at most half the previous one
    sum_hi += BigInt::from(2);
    (sum_lo, sum_hi)
}

/// Enclosure of exp q for rational q.
pub fn exp_point(q: &RationalScalar, bits: u32) -> RationalInterval {
    if q.is_zero() {
        return RationalInterval::one();
    }
    let a = q.abs();
    // r = |q| / 2^h with r <= 2^-8, then square h times
    let h = (log2_floor(&a) + 9).max(0) as u32;
    let wb = bits + 24 + h;
    let r = &a / pow2(h as i64);
    let (mut lo, _) = exp_fixed(&fixed_floor(&r, wb), wb);
    let (_, mut hi) = exp_fixed(&fixed_ceil(&r, wb), wb);
    let s = BigInt::one() << (wb as usize);
    for _ in 0..h {
        lo = div_floor(&(&lo * &lo), &s);
        hi = div_ceil(&(&hi * &hi), &s);
    }
    let v = from_fixed(lo, hi, wb);
    let v = if q.is_negative() { RationalInterval { lo: v.hi.recip(), hi: v.lo.recip() } } else { v };
    v.round_out(bits + 8)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(a: i64, b: i64) -> RationalInterval {
        RationalInterval::new(int(a), int(b)).unwrap()
    }

    #[test]
    fn spec_examples() {
        assert_eq!(iv(1, 2).mul(&iv(-1, 3)), iv(-2, 6));
        assert_eq!(iv(1, 1).add(&iv(0, 0)), iv(1, 1));
        assert_eq!(iv(2, 3).powi(2), iv(4, 9));
        assert!(iv(1, 2).div(&iv(-1, 1)).is_err());
        assert_eq!(iv(-2, 1).powi(2), iv(0, 4));
    }

    #[test]
    fn ln_and_exp_enclose_f64() {
        for (q, want) in [(rat(1, 3), (1.0f64 / 3.0).ln()), (int(2), 2f64.ln()), (rat(7, 1000), 0.007f64.ln())] {
            let e = ln_point(&q, 128);
            let (a, b) = e.to_f64();
            assert!(a <= want + 1e-15 && want - 1e-15 <= b, "{a} {want} {b}");
            assert!(e.width() < pow2(-100));
        }
        for (q, want) in [(rat(1, 3), (1.0f64 / 3.0).exp()), (int(-40), (-40f64).exp()), (rat(25, 2), 12.5f64.exp())] {
            let e = exp_point(&q, 128);
            let (a, b) = e.to_f64();
            assert!(a <= want * (1.0 + 1e-14) && want * (1.0 - 1e-14) <= b, "{a} {want} {b}");
            assert!(e.width() / &e.lo < pow2(-100));
        }
        assert_eq!(exp_point(&int(0), 64), RationalInterval::one());
        assert_eq!(ln_point(&int(1), 64), RationalInterval::zero());
    }

    #[test]
    fn ln_exp_round_trip_encloses() {
        let x = rat(5, 7);
        let back = ln_point(&x, 96).exp(96);
        assert!(back.contains(&x));
    }

    #[test]
    fn pow_integer_exact() {
        let x = RationalInterval::point(rat(1, 3));
        assert_eq!(x.pow(&int(3), 64).unwrap(), RationalInterval::point(rat(1, 27)));
        let half = x.pow(&rat(1, 2), 96).unwrap();
        let (a, b) = half.to_f64();
        let w = (1.0f64 / 3.0).sqrt();
        assert!(a <= w + 1e-15 && w - 1e-15 <= b);
    }
}
