//! Covering numbers, box-dimension fits, Hausdorff content bounds, Ahlfors and
//! uniform-perfectness diagnostics and the quasi-self-similarity constant D.
//!
//! Every "for all x, r" statement is checked over reported finite schedules.

mod content;
mod covering;
mod quasi;
mod regularity;

pub use content::{
    content_comparability, content_estimate, content_estimate_with, dyadic_subsets, ComparabilityReport,
    ComparabilityRow, ContentEstimate, ContentOptions,
};
pub use covering::{
    box_dimension_estimate, covering_number, envelope_context, geometric_schedule, covering_envelope, BoxDimensionEstimate,
    CoveringCount, CoveringMethod, EnvelopeContext, ScalePoint,
};
pub use quasi::{quasi_constant, quasi_constant_with, QuasiConstants, QuasiWitness};
pub use regularity::{
    ahlfors_check, ahlfors_samples, uniform_perfectness, AhlforsEnvelope, ScaleRatio, UniformPerfectnessEstimate,
};

use num_traits::{Signed, Zero};
use std::collections::HashMap;

use crate::arith::*;
use crate::error::{Error, Result};
use crate::ifs::IFSystem;

/// Working precision for the many small powers d^s taken here.
pub(crate) fn pow_bits(sys: &IFSystem) -> u32 {
    sys.bits.min(64)
}

/// Memoised enclosures of d^s for a fixed s.
pub(crate) struct PowCache {
    s: RationalScalar,
    bits: u32,
    memo: HashMap<RationalScalar, RationalInterval>,
}

impl PowCache {
    pub(crate) fn new(s: &RationalScalar, bits: u32) -> Result<Self> {
        if s.is_negative() {
            return Err(Error::Domain("s must be non-negative".into()));
        }
        Ok(Self { s: s.clone(), bits, memo: HashMap::new() })
    }

    /// d^s with 0^s = 0 for s > 0 and d^0 = 1.
    pub(crate) fn get(&mut self, d: &RationalScalar) -> Result<RationalInterval> {
        if self.s.is_zero() {
            return Ok(RationalInterval::one());
        }
        if d.is_zero() {
            return Ok(RationalInterval::zero());
        }
        if let Some(v) = self.memo.get(d) {
            return Ok(v.clone());
        }
        let v = RationalInterval::point(d.clone()).pow(&self.s, self.bits)?.round_out(self.bits);
        self.memo.insert(d.clone(), v.clone());
        Ok(v)
    }
}

/// `count` entries spread evenly over `items` (all of them when fewer).
pub fn select_evenly<T: Clone>(items: &[T], count: usize) -> Vec<T> {
    if count == 0 || items.is_empty() {
        return Vec::new();
    }
    if items.len() <= count {
        return items.to_vec();
    }
    (0..count).map(|i| items[i * items.len() / count].clone()).collect()
}

/// Smallest m with (max letter derivative)^m * diam(F) <= r, capped.
pub(crate) fn depth_for_scale(sys: &IFSystem, r: &RationalScalar, cap: usize) -> usize {
    let lam = sys.max_letter_deriv();
    let mut w = sys.diam_f().hi;
    let mut m = 0;
    while &w > r && m < cap {
        w *= &lam;
        m += 1;
    }
    m
}

/// Largest depth m <= want with n^m <= budget.
pub(crate) fn depth_within_budget(n: usize, want: usize, budget: usize) -> usize {
    let mut m = 0;
    let mut cells = 1usize;
    while m < want {
        match cells.checked_mul(n) {
            Some(c) if c <= budget => {
                cells = c;
                m += 1;
            }
            _ => break,
        }
    }
    m
}

/// Least-squares fit y = a + b x; returns (b, a, rms residual).
pub(crate) fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let res = (xs.iter().zip(ys).map(|(x, y)| (y - a - b * x).powi(2)).sum::<f64>() / n).sqrt();
    (b, a, res)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn even_selection() {
        let v: Vec<usize> = (0..10).collect();
        assert_eq!(select_evenly(&v, 5), vec![0, 2, 4, 6, 8]);
        assert_eq!(select_evenly(&v, 20).len(), 10);
        assert!(select_evenly(&v, 0).is_empty());
    }

    #[test]
    fn fit_exact_line() {
        let (b, a, r) = least_squares(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]);
        assert!((b - 2.0).abs() < 1e-12 && (a - 1.0).abs() < 1e-12 && r < 1e-12);
    }

    #[test]
    fn budgeted_depth() {
        assert_eq!(depth_within_budget(3, 10, 1000), 6);
        assert_eq!(depth_within_budget(2, 4, 1 << 20), 4);
    }
}
