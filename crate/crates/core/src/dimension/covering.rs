use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashSet};

use super::{content_estimate, least_squares, quasi_constant};
use crate::arith::*;
use crate::attractor::cylinder_interval;
use crate::error::{Error, Result};
use crate::ifs::IFSystem;
use crate::pressure::RootBracket;
use crate::words::{generation_cut, Word};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoveringMethod {
    Grid,
    GreedyBall,
}

/// Bounds on N_r(F), the least number of radius-r balls covering F.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoveringCount {
    #[serde(with = "serde_q")]
    pub r: RationalScalar,
    /// Size of a concrete cover of the generation cut at scale r.
    pub n_r: usize,
    /// Points of F pairwise further apart than 2r.
    pub n_r_lower: usize,
    pub method: CoveringMethod,
    pub cut_size: usize,
}

impl CoveringCount {
    pub fn is_exact(&self) -> bool {
        self.n_r == self.n_r_lower
    }
}

pub fn covering_number(sys: &IFSystem, r: &RationalScalar) -> Result<CoveringCount> {
    if r <= &RationalScalar::zero() {
        return Err(Error::Domain("r must be positive".into()));
    }
    let cut = generation_cut(sys, r)?;
    let pts = packing_points(sys, &cut.words)?;
    if sys.dimension == 1 {
        let mut ivs =
            cut.words.par_iter().map(|w| cylinder_interval(sys, w)).collect::<Result<Vec<RationalInterval>>>()?;
        ivs.sort_by(|a, b| a.lo.cmp(&b.lo).then(a.hi.cmp(&b.hi)));
        ivs.dedup();
        let n_r = cover_intervals(&ivs, r);
        let xs: Vec<RationalScalar> = pts.into_iter().map(|p| p.re).collect();
        let n_r_lower = pack_line(&xs, r);
        Ok(CoveringCount { r: r.clone(), n_r, n_r_lower, method: CoveringMethod::GreedyBall, cut_size: cut.words.len() })
    } else {
        let n_r = cover_grid(sys, &cut.words, r)?;
        let n_r_lower = pack_plane(&pts, r);
        Ok(CoveringCount { r: r.clone(), n_r, n_r_lower, method: CoveringMethod::Grid, cut_size: cut.words.len() })
    }
}

/// Evaluations allowed for packing points at one scale.
const PACKING_BUDGET: usize = 1 << 15;

/// Exact images of base-sample points under every cut word (all points of F).
/// The base sample is thinned to fit the budget, always keeping its extremes.
fn packing_points(sys: &IFSystem, words: &[Word]) -> Result<Vec<GaussianRational>> {
    let all = &sys.base_sample;
    let k = (PACKING_BUDGET / words.len().max(1)).clamp(2, all.len().max(2));
    let base: Vec<GaussianRational> = if k >= all.len() {
        all.clone()
    } else {
        (0..k).map(|i| all[i * (all.len() - 1) / (k - 1)].clone()).collect()
    };
    let imgs = words
        .par_iter()
        .map(|w| base.iter().map(|p| sys.eval_word(w, p)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let set: BTreeSet<(RationalScalar, RationalScalar)> =
        imgs.into_iter().flatten().map(|p| (p.re, p.im)).collect();
    Ok(set.into_iter().map(|(a, b)| GaussianRational::new(a, b)).collect())
}

/// Greedy cover of a union of intervals by closed intervals of length 2r.
fn cover_intervals(ivs: &[RationalInterval], r: &RationalScalar) -> usize {
    let two_r = r * int(2);
    let mut count = 0;
    let mut covered: Option<RationalScalar> = None;
    for iv in ivs {
        loop {
            let start = match &covered {
                Some(c) if &iv.hi <= c => break,
                Some(c) if &iv.lo < c => c.clone(),
                _ => iv.lo.clone(),
            };
            count += 1;
            covered = Some(start + &two_r);
        }
    }
    count
}

/// Greedy packing of sorted points with gaps > 2r.
fn pack_line(xs: &[RationalScalar], r: &RationalScalar) -> usize {
    let two_r = r * int(2);
    let mut count = 0;
    let mut last: Option<&RationalScalar> = None;
    for x in xs {
        if last.map(|l| x - l > two_r).unwrap_or(true) {
            count += 1;
            last = Some(x);
        }
    }
    count
}

fn pack_plane(pts: &[GaussianRational], r: &RationalScalar) -> usize {
    let lim = r * r * int(4);
    let mut kept: Vec<&GaussianRational> = Vec::new();
    for p in pts {
        if kept.iter().all(|q| q.dist_sq(p) > lim) {
            kept.push(p);
        }
    }
    kept.len()
}

/// Cut enclosures have radius <= r/2; bucketing their centres in squares of
/// side 7r/10 lets one radius-r ball at each square centre cover its bucket.
fn cover_grid(sys: &IFSystem, words: &[Word], r: &RationalScalar) -> Result<usize> {
    let side = r * rat(7, 10);
    let cells = words
        .par_iter()
        .map(|w| {
            let e = sys.ball_image(w, &sys.f_hull)?;
            Ok(((&e.center.re / &side).floor(), (&e.center.im / &side).floor()))
        })
        .collect::<Result<Vec<_>>>()?;
    let set: HashSet<(RationalScalar, RationalScalar)> = cells.into_iter().collect();
    Ok(set.len())
}

/// Inputs of the certified envelope 2^-s lower(H^s_inf) r^-s <= N_r <= D^s r^-s.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnvelopeContext {
    /// Range of s (the pressure-root bracket).
    pub s: RationalInterval,
    #[serde(with = "serde_q")]
    pub h_inf_lower: RationalScalar,
    #[serde(with = "serde_q")]
    pub d_upper: RationalScalar,
    pub bits: u32,
}

pub fn envelope_context(sys: &IFSystem, root: &RootBracket) -> Result<EnvelopeContext> {
    let mut h = None::<RationalScalar>;
    for s in [&root.s_lo, &root.s_hi] {
        let c = content_estimate(sys, s, None, None)?;
        h = Some(match h {
            Some(v) => min_q(&v, &c.lower),
            None => c.lower,
        });
    }
    let q = quasi_constant(sys)?;
    Ok(EnvelopeContext {
        s: RationalInterval::hull2(root.s_lo.clone(), root.s_hi.clone()),
        h_inf_lower: h.unwrap_or_else(RationalScalar::zero),
        d_upper: q.d,
        bits: super::pow_bits(sys),
    })
}

/// Envelope at scale r, widened over the whole s range.
pub fn covering_envelope(ctx: &EnvelopeContext, r: &RationalScalar) -> Result<RationalInterval> {
    let inv_2r = RationalInterval::point(RationalScalar::one() / (r * int(2)));
    let d_over_r = RationalInterval::point(&ctx.d_upper / r);
    let mut lo: Option<RationalScalar> = None;
    let mut hi: Option<RationalScalar> = None;
    for s in [&ctx.s.lo, &ctx.s.hi] {
        let a = inv_2r.pow(s, ctx.bits)?.scale(&ctx.h_inf_lower);
        let b = d_over_r.pow(s, ctx.bits)?;
        lo = Some(lo.map(|v| min_q(&v, &a.lo)).unwrap_or(a.lo));
        hi = Some(hi.map(|v| max_q(&v, &b.hi)).unwrap_or(b.hi));
    }
    RationalInterval::new(lo.unwrap_or_default(), hi.unwrap_or_default())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalePoint {
    pub count: CoveringCount,
    pub envelope: Option<RationalInterval>,
    /// n_r_lower and n_r both inside the envelope.
    pub inside: Option<bool>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoxDimensionEstimate {
    pub points: Vec<ScalePoint>,
    /// Least-squares slope of log N_r against log(1/r).
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    /// Same fit through the packing lower counts.
    pub slope_lower: f64,
    pub envelope_ok: Option<bool>,
}

impl BoxDimensionEstimate {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,r_decimal,n_r,n_r_lower,envelope_lo,envelope_hi\n");
        for p in &self.points {
            let env = match &p.envelope {
                Some(e) => {
                    let (lo, hi) = e.to_f64();
                    format!("{lo:.6e},{hi:.6e}")
                }
                None => ",".into(),
            };
            s.push_str(&format!(
                "{},{:.12e},{},{},{env}\n",
                fmt_rational(&p.count.r),
                to_f64(&p.count.r),
                p.count.n_r,
                p.count.n_r_lower
            ));
        }
        s
    }
}

/// ratio^k for k in k0..=k1.
pub fn geometric_schedule(ratio: &RationalScalar, k0: u32, k1: u32) -> Vec<RationalScalar> {
    (k0..=k1).map(|k| powi(ratio, k)).collect()
}

pub fn box_dimension_estimate(
    sys: &IFSystem,
    schedule: &[RationalScalar],
    ctx: Option<&EnvelopeContext>,
) -> Result<BoxDimensionEstimate> {
    let mut points = Vec::new();
    for r in schedule {
        let count = covering_number(sys, r)?;
        let (envelope, inside) = match ctx {
            Some(c) => {
                let e = covering_envelope(c, r)?;
                let lo = int(count.n_r_lower as i64);
                let hi = int(count.n_r as i64);
                let ok = e.lo <= lo && hi <= e.hi;
                (Some(e), Some(ok))
            }
            None => (None, None),
        };
        points.push(ScalePoint { count, envelope, inside });
    }
    let valid: Vec<&ScalePoint> = points.iter().filter(|p| p.count.n_r > 0 && p.count.r < RationalScalar::one()).collect();
    if valid.len() < 2 {
        return Err(Error::Domain("box-dimension fit needs at least 2 scales below 1".into()));
    }
    let xs: Vec<f64> = valid.iter().map(|p| -to_f64(&p.count.r).ln()).collect();
    let ys: Vec<f64> = valid.iter().map(|p| (p.count.n_r as f64).ln()).collect();
    let yl: Vec<f64> = valid.iter().map(|p| (p.count.n_r_lower.max(1) as f64).ln()).collect();
    let (slope, intercept, residual) = least_squares(&xs, &ys);
    let (slope_lower, _, _) = least_squares(&xs, &yl);
    let envelope_ok = ctx.map(|_| points.iter().all(|p| p.inside == Some(true)));
    Ok(BoxDimensionEstimate { points, slope, intercept, residual, slope_lower, envelope_ok })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::registry;

    /// Largest subset of level-n Cantor endpoints with pairwise gaps > 2r,
    /// by dynamic programming over all predecessors. It bounds N_r below,
    /// and one ball per level-n piece bounds it above by 2^n.
    fn brute_cantor_packing(n: u32) -> usize {
        let mut lefts: Vec<RationalScalar> = vec![int(0)];
        for _ in 0..n {
            let mut next = Vec::new();
            for l in &lefts {
                next.push(l / int(3));
                next.push(l / int(3) + rat(2, 3));
            }
            lefts = next;
        }
        let w = powi(&rat(1, 3), n);
        let mut pts: Vec<RationalScalar> = lefts.iter().flat_map(|l| [l.clone(), l + &w]).collect();
        pts.sort();
        let two_r = &w * int(2);
        let mut best = vec![1usize; pts.len()];
        for i in 0..pts.len() {
            for j in 0..i {
                if &pts[i] - &pts[j] > two_r {
                    best[i] = best[i].max(best[j] + 1);
                }
            }
        }
        best.into_iter().max().unwrap()
    }

    #[test]
    fn cantor_counts() {
        let sys = registry::load("cantor-1-3").unwrap();
        let c = covering_number(&sys, &rat(1, 9)).unwrap();
        assert_eq!((c.n_r, c.n_r_lower), (4, 4));
        for r in [rat(1, 2), int(1), int(3)] {
            assert_eq!(covering_number(&sys, &r).unwrap().n_r, 1);
        }
        for n in 1..=6u32 {
            let c = covering_number(&sys, &powi(&rat(1, 3), n)).unwrap();
            assert_eq!(c.n_r, 1 << n);
            assert_eq!(c.n_r_lower, 1 << n);
            assert_eq!(brute_cantor_packing(n), 1 << n);
        }
    }

    #[test]
    fn slopes() {
        let cantor = registry::load("cantor-1-3").unwrap();
        let est = box_dimension_estimate(&cantor, &geometric_schedule(&rat(1, 3), 2, 7), None).unwrap();
        assert!((est.slope - 2f64.ln() / 3f64.ln()).abs() < 1e-12);
        let interval = registry::load("interval-1-2").unwrap();
        let est = box_dimension_estimate(&interval, &geometric_schedule(&rat(1, 2), 2, 7), None).unwrap();
        assert!((est.slope - 1.0).abs() < 1e-12, "{}", est.slope);
        let triple = registry::load("triple-overlap").unwrap();
        let est = box_dimension_estimate(&triple, &geometric_schedule(&rat(1, 3), 3, 7), None).unwrap();
        assert!((est.slope - 0.631).abs() < 0.02);
    }

    #[test]
    fn too_few_scales() {
        let sys = registry::load("cantor-1-3").unwrap();
        assert!(box_dimension_estimate(&sys, &[rat(1, 9)], None).is_err());
    }
}
