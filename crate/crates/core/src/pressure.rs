//! The pressure function P(s) with certified two-sided brackets and its root.

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::arith::*;
use crate::error::{Error, Result};
use crate::ifs::IFSystem;
use crate::words::Word;

/// Largest number of words summed at one depth.
pub const DEFAULT_WORD_BUDGET: usize = 1 << 21;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PressureEstimate {
    #[serde(with = "serde_q")]
    pub s: RationalScalar,
    pub n: usize,
    /// Enclosure of (1/n) log sum upper(||phi_i'||)^s; P(s) <= upper.hi.
    pub upper: RationalInterval,
    /// Enclosure of (1/n) log sum lower(||phi_i'||)^s - 2 s log K / n; P(s) >= lower.lo.
    pub lower: RationalInterval,
    pub words: usize,
}

impl PressureEstimate {
    /// Certified bracket [lower.lo, upper.hi] of P(s).
    pub fn bracket(&self) -> RationalInterval {
        RationalInterval { lo: min_q(&self.lower.lo, &self.upper.hi), hi: self.upper.hi.clone() }
    }

    pub fn sign(&self) -> Option<std::cmp::Ordering> {
        if self.lower.lo.is_positive() {
            Some(std::cmp::Ordering::Greater)
        } else if self.upper.hi.is_negative() {
            Some(std::cmp::Ordering::Less)
        } else {
            None
        }
    }
}

/// Multiset of derivative bounds (sup upper bound, sup lower bound) of the
/// words of one length.
type NormTable = BTreeMap<(RationalScalar, RationalScalar), u64>;

fn sup_lower(sys: &IFSystem, w: &Word, b: &RationalInterval) -> Result<RationalScalar> {
    // the infimum bound is a lower bound for the sup; the value at the centre may be larger
    let d = sys.deriv_word_at(w, &sys.v_domain.center)?;
    let at = if sys.dimension == 1 { d.re.abs() } else { sqrt_bounds(&d.norm_sq(), sys.bits).0 };
    Ok(max_q(&b.lo, &at))
}

fn norm_table(sys: &IFSystem, n: usize, budget: usize) -> Result<NormTable> {
    let nm = sys.n_maps();
    let total = (nm as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if total > budget as u128 {
        return Err(Error::Budget(format!("{nm}^{n} words exceed the budget of {budget}")));
    }
    sys.check_word(&Word::repeat(0, n, nm))?;
    let shard_len = n.min(2);
    let shards = Word::all_of_length(nm, shard_len);
    let tails = Word::all_of_length(nm, n - shard_len);
    let tables: Vec<Result<NormTable>> = shards
        .par_iter()
        .map(|p| {
            let mut t = NormTable::new();
            for tail in &tails {
                let w = p.concat(tail);
                let b = sys.derivative_bounds(&w)?;
                let lo = sup_lower(sys, &w, &b)?;
                *t.entry((b.hi, lo)).or_insert(0) += 1;
            }
            Ok(t)
        })
        .collect();
    let mut out = NormTable::new();
    for t in tables {
        for (k, c) in t? {
            *out.entry(k).or_insert(0) += c;
        }
    }
    Ok(out)
}

fn power_sum(table: &NormTable, s: &RationalScalar, bits: u32, upper: bool) -> Result<RationalInterval> {
    let mut acc = RationalInterval::zero();
    // group equal bases so each power is computed once
    let mut bases: BTreeMap<&RationalScalar, u64> = BTreeMap::new();
    for ((hi, lo), c) in table {
        *bases.entry(if upper { hi } else { lo }).or_insert(0) += c;
    }
    for (x, c) in bases {
        if x.is_zero() {
            continue;
        }
        let p = if s.is_zero() { RationalInterval::one() } else { RationalInterval::point(x.clone()).pow(s, bits)? };
        acc = acc.add(&p.scale(&RationalScalar::from_integer((c as i64).into()))).round_out(bits);
    }
    Ok(acc)
}

fn bracket_from_table(sys: &IFSystem, table: &NormTable, s: &RationalScalar, n: usize) -> Result<PressureEstimate> {
    let bits = sys.bits;
    let inv_n = rat(1, n as i64);
    let up_sum = power_sum(table, s, bits, true)?;
    let lo_sum = power_sum(table, s, bits, false)?;
    if !lo_sum.is_positive() {
        return Err(Error::Degenerate("zero derivative lower bounds".into()));
    }
    let upper = up_sum.ln(bits)?.scale(&inv_n).round_out(bits);
    let log_k = RationalInterval::point(sys.k().clone()).ln(bits)?;
    let corr = log_k.scale(&(int(2) * s * &inv_n));
    let lower = lo_sum.ln(bits)?.scale(&inv_n).sub(&corr).round_out(bits);
    let words = table.values().sum::<u64>() as usize;
    Ok(PressureEstimate { s: s.clone(), n, upper, lower, words })
}

/// Sign of P(s) from one table, summing the lower side only when the largest
/// lower base leaves room for a positive bound.
fn sign_from_table(sys: &IFSystem, table: &NormTable, s: &RationalScalar, n: usize) -> Result<Option<std::cmp::Ordering>> {
    let bits = sys.bits;
    let inv_n = rat(1, n as i64);
    let up = power_sum(table, s, bits, true)?;
    if !up.is_positive() {
        return Ok(None);
    }
    if up.ln(bits)?.scale(&inv_n).hi.is_negative() {
        return Ok(Some(std::cmp::Ordering::Less));
    }
    let words: u64 = table.values().sum();
    let top = match table.keys().map(|(_, lo)| lo).max() {
        Some(t) if t.is_positive() => t.clone(),
        _ => return Ok(None),
    };
    let log_k = RationalInterval::point(sys.k().clone()).ln(bits)?;
    let corr = log_k.scale(&(int(2) * s * &inv_n));
    // sum of lower bases^s <= words * top^s
    let cap = RationalInterval::point(top).pow(s, bits)?.scale(&RationalScalar::from_integer((words as i64).into()));
    if !cap.ln(bits)?.scale(&inv_n).sub(&corr).hi.is_positive() {
        return Ok(None);
    }
    Ok(bracket_from_table(sys, table, s, n)?.sign())
}

/// Certified bracket of P(s) from the words of length n.
pub fn pressure_bracket(sys: &IFSystem, s: &RationalScalar, n: usize) -> Result<PressureEstimate> {
    pressure_bracket_with(sys, s, n, DEFAULT_WORD_BUDGET)
}

pub fn pressure_bracket_with(sys: &IFSystem, s: &RationalScalar, n: usize, budget: usize) -> Result<PressureEstimate> {
    if s.is_negative() {
        return Err(Error::Domain("s must be non-negative".into()));
    }
    if n == 0 {
        return Err(Error::Domain("depth must be at least 1".into()));
    }
    let table = norm_table(sys, n, budget)?;
    bracket_from_table(sys, &table, s, n)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RootBracket {
    /// P(s_lo) > 0 certified.
    #[serde(with = "serde_q")]
    pub s_lo: RationalScalar,
    /// P(s_hi) < 0 certified.
    #[serde(with = "serde_q")]
    pub s_hi: RationalScalar,
    #[serde(with = "serde_q")]
    pub width: RationalScalar,
    #[serde(with = "serde_q")]
    pub tol: RationalScalar,
    /// Deepest level used.
    pub depth: usize,
    pub depth_exhausted: bool,
    pub certified: bool,
    pub evaluations: usize,
}

impl RootBracket {
    pub fn mid(&self) -> RationalScalar {
        (&self.s_lo + &self.s_hi) / int(2)
    }
}

/// Depth schedule n0, 2 n0, 4 n0, ... up to max_depth.
pub fn depth_schedule(n0: usize, max_depth: usize) -> Vec<usize> {
    let mut v = Vec::new();
    let mut n = n0.max(1);
    while n <= max_depth {
        v.push(n);
        n *= 2;
    }
    if v.is_empty() {
        v.push(max_depth.max(1));
    }
    v
}

struct Evaluator<'a> {
    sys: &'a IFSystem,
    depths: Vec<usize>,
    tables: Vec<Option<NormTable>>,
    budget: usize,
    used: usize,
    evaluations: usize,
    exhausted: bool,
}

impl<'a> Evaluator<'a> {
    fn table(&mut self, k: usize) -> Result<Option<&NormTable>> {
        if self.tables[k].is_none() {
            match norm_table(self.sys, self.depths[k], self.budget) {
                Ok(t) => self.tables[k] = Some(t),
                Err(Error::Budget(_)) | Err(Error::DepthCap(_)) => return Ok(None),
                Err(e) => return Err(e),
            }
        }
        Ok(self.tables[k].as_ref())
    }

    /// Sign of P(s), deepening along the schedule until decided.
    fn sign(&mut self, s: &RationalScalar) -> Result<Option<std::cmp::Ordering>> {
        for k in 0..self.depths.len() {
            let n = self.depths[k];
            let table = match self.table(k)? {
                Some(t) => t.clone(),
                None => break,
            };
            self.evaluations += 1;
            self.used = self.used.max(n);
            if let Some(o) = sign_from_table(self.sys, &table, s, n)? {
                return Ok(Some(o));
            }
        }
        self.exhausted = true;
        Ok(None)
    }
}

/// Bisection for the zero of P with certified signs at both ends.
pub fn pressure_root(sys: &IFSystem, tol: &RationalScalar, max_depth: usize) -> Result<RootBracket> {
    pressure_root_with(sys, tol, max_depth, DEFAULT_WORD_BUDGET)
}

pub fn pressure_root_with(sys: &IFSystem, tol: &RationalScalar, max_depth: usize, budget: usize) -> Result<RootBracket> {
    if !tol.is_positive() {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    let n0 = if sys.all_affine() && sys.k().is_one() { 1 } else { 2 };
    let depths = depth_schedule(n0, max_depth.max(1));
    let tables = vec![None; depths.len()];
    let mut ev = Evaluator { sys, depths, tables, budget, used: 0, evaluations: 0, exhausted: false };
    use std::cmp::Ordering::*;
    // P(0) = log N > 0; find s_hi with P(s_hi) < 0
    let mut s_lo = RationalScalar::zero();
    let mut s_hi = int(1);
    loop {
        match ev.sign(&s_hi)? {
            Some(Less) => break,
            Some(_) => {
                s_lo = s_hi.clone();
                s_hi = &s_hi * int(2);
            }
            None => s_hi = &s_hi * rat(9, 8),
        }
        if s_hi > int(64) {
            return Err(Error::Budget("no s with P(s) < 0 below 64".into()));
        }
    }
    ev.exhausted = false;
    // off-centre splits avoid landing exactly on a rational root
    let fractions = [rat(501, 1000), rat(1, 3), rat(2, 3), rat(1, 5), rat(4, 5)];
    while &s_hi - &s_lo > *tol {
        let w = &s_hi - &s_lo;
        let mut moved = false;
        for f in &fractions {
            let m = &s_lo + &w * f;
            match ev.sign(&m)? {
                Some(Greater) => {
                    s_lo = m;
                    moved = true;
                    break;
                }
                Some(Less) => {
                    s_hi = m;
                    moved = true;
                    break;
                }
                _ => {}
            }
        }
        if !moved {
            break;
        }
    }
    let width = &s_hi - &s_lo;
    let certified = &width <= tol;
    Ok(RootBracket { s_lo, s_hi, width, tol: tol.clone(), depth: ev.used, depth_exhausted: !certified && ev.exhausted, certified, evaluations: ev.evaluations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::registry;

    fn ln_ratio_bounds(a: i64, b: i64, bits: u32) -> RationalInterval {
        ln_point(&int(a), bits).div(&ln_point(&int(b), bits)).unwrap()
    }

    #[test]
    fn cantor_pressure_closed_form() {
        let sys = registry::cantor().unwrap();
        for n in [1, 3, 6] {
            let p = pressure_bracket(&sys, &rat(1, 2), n).unwrap();
            // log 2 - log 3 / 2
            let truth = ln_point(&int(2), 128).sub(&ln_point(&int(3), 128).scale(&rat(1, 2)));
            assert!(p.bracket().lo <= truth.hi && truth.lo <= p.bracket().hi);
            assert!(p.upper.hi.clone() - p.lower.lo.clone() < pow2(-100));
        }
    }

    #[test]
    fn triple_pressure_zero_at_one() {
        let sys = registry::triple_overlap().unwrap();
        let p = pressure_bracket(&sys, &int(1), 4).unwrap();
        assert!(p.bracket().contains(&int(0)));
        assert!(p.bracket().width() < pow2(-100));
    }

    #[test]
    fn roots() {
        let tol = rat(1, 1_000_000);
        let c = pressure_root(&registry::cantor().unwrap(), &tol, 8).unwrap();
        let truth = ln_ratio_bounds(2, 3, 128);
        assert!(c.certified);
        assert!(c.s_lo < truth.lo && truth.hi < c.s_hi);
        let i = pressure_root(&registry::interval().unwrap(), &tol, 8).unwrap();
        assert!(i.s_lo < int(1) && int(1) < i.s_hi && i.certified);
        let t = pressure_root(&registry::triple_overlap().unwrap(), &tol, 8).unwrap();
        assert!(t.s_lo < int(1) && int(1) < t.s_hi && t.certified);
    }

    #[test]
    fn schedule_doubles() {
        assert_eq!(depth_schedule(2, 16), vec![2, 4, 8, 16]);
        assert_eq!(depth_schedule(3, 2), vec![2]);
    }
}
