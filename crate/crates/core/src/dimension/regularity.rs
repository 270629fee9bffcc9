use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use super::{depth_for_scale, depth_within_budget, select_evenly};
use crate::arith::*;
use crate::attractor::{sample_attractor, CylinderTable, NaturalMeasure, SeedStrategy};
use crate::error::{Error, Result};
use crate::ifs::IFSystem;
use crate::words::Word;

const TABLE_CELLS: usize = 1 << 17;
const WITNESS_POINTS: usize = 1 << 17;

/// Ratios mu(B(x,r))/r^s at one scale over all sampled x.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScaleRatio {
    #[serde(with = "serde_q")]
    pub r: RationalScalar,
    /// Encloses the smallest ratio over the samples.
    pub min: RationalInterval,
    /// Encloses the largest ratio over the samples.
    pub max: RationalInterval,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AhlforsEnvelope {
    /// Range of exponents the ratios are valid for.
    pub s: RationalInterval,
    pub samples: usize,
    pub table_depth: usize,
    pub per_scale: Vec<ScaleRatio>,
    /// Every tested ratio lies in [envelope.lo, envelope.hi].
    pub envelope: RationalInterval,
}

impl AhlforsEnvelope {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,r_decimal,min_lo,min_hi,max_lo,max_hi\n");
        for p in &self.per_scale {
            out.push_str(&format!(
                "{},{:.12e},{:.9e},{:.9e},{:.9e},{:.9e}\n",
                fmt_rational(&p.r),
                to_f64(&p.r),
                to_f64(&p.min.lo),
                to_f64(&p.min.hi),
                to_f64(&p.max.lo),
                to_f64(&p.max.hi)
            ));
        }
        out
    }
}

/// `count` points of F spread over a sample deep enough to hold them.
pub fn ahlfors_samples(sys: &IFSystem, count: usize, seed: &SeedStrategy) -> Result<Vec<GaussianRational>> {
    let n = sys.n_maps();
    let mut depth = 0;
    let mut size = 1usize;
    while size < count && depth < sys.depth_cap {
        size = size.saturating_mul(n);
        depth += 1;
    }
    let mut sample = sample_attractor(sys, depth, seed)?;
    // exact overlaps merge points; deepen until enough distinct ones exist
    while sample.points.len() < count && depth < sys.depth_cap {
        let next = sample_attractor(sys, depth + 1, seed)?;
        if next.points.len() <= sample.points.len() {
            break;
        }
        depth += 1;
        sample = next;
    }
    Ok(select_evenly(&sample.points, count))
}

/// Certified ratio brackets [mu_lo / (r^s)_hi, mu_hi / (r^s)_lo] for s over the
/// given range, mu the supplied measure, over samples x and the r schedule.
pub fn ahlfors_check(
    sys: &IFSystem,
    mu: &NaturalMeasure,
    s: &RationalInterval,
    samples: &[GaussianRational],
    r_schedule: &[RationalScalar],
    depth: Option<usize>,
) -> Result<AhlforsEnvelope> {
    if samples.is_empty() || r_schedule.is_empty() {
        return Err(Error::Domain("need samples and scales".into()));
    }
    if s.lo.is_negative() {
        return Err(Error::Domain("s must be non-negative".into()));
    }
    let r_min = r_schedule.iter().min().cloned().unwrap();
    if !r_min.is_positive() {
        return Err(Error::Domain("radii must be positive".into()));
    }
    let depth = match depth {
        Some(d) => d,
        None => {
            let want = depth_for_scale(sys, &(&r_min / int(8)), sys.depth_cap);
            depth_within_budget(sys.n_maps(), want, TABLE_CELLS).max(1)
        }
    };
    let table = CylinderTable::build(sys, mu, depth)?;
    let bits = sys.bits;
    let mut per_scale = Vec::new();
    for r in r_schedule {
        let base = RationalInterval::point(r.clone());
        let a = base.pow(&s.lo, bits)?;
        let b = base.pow(&s.hi, bits)?;
        let rs = RationalInterval { lo: min_q(&a.lo, &b.lo), hi: max_q(&a.hi, &b.hi) };
        let brackets: Vec<RationalInterval> = samples
            .par_iter()
            .map(|x| {
                let ball = EnclosureBall::disc(x.clone(), r);
                let ball = if sys.dimension == 1 { EnclosureBall::interval(&x.re - r, &x.re + r) } else { ball };
                let m = table.measure(&ball);
                RationalInterval { lo: &m.lo / &rs.hi, hi: &m.hi / &rs.lo }
            })
            .collect();
        let min = RationalInterval {
            lo: brackets.iter().map(|b| b.lo.clone()).min().unwrap(),
            hi: brackets.iter().map(|b| b.hi.clone()).min().unwrap(),
        };
        let max = RationalInterval {
            lo: brackets.iter().map(|b| b.lo.clone()).max().unwrap(),
            hi: brackets.iter().map(|b| b.hi.clone()).max().unwrap(),
        };
        per_scale.push(ScaleRatio { r: r.clone(), min, max });
    }
    let envelope = RationalInterval {
        lo: per_scale.iter().map(|p| p.min.lo.clone()).min().unwrap(),
        hi: per_scale.iter().map(|p| p.max.hi.clone()).max().unwrap(),
    };
    Ok(AhlforsEnvelope { s: s.clone(), samples: samples.len(), table_depth: depth, per_scale, envelope })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UniformPerfectnessEstimate {
    /// Smallest power of two H with F cap B(x,r) minus B(x,r/H) witnessed
    /// non-empty at every tested (x, r).
    #[serde(with = "serde_q")]
    pub h: RationalScalar,
    /// Smallest radius tested.
    #[serde(with = "serde_q")]
    pub certified_upto: RationalScalar,
    /// 3K^3 / min ||phi_i'|| + 1 from the existence proof.
    #[serde(with = "serde_q")]
    pub lemma_h: RationalScalar,
    /// Largest r / (distance of the furthest witness inside B(x,r)).
    pub worst_ratio: f64,
    pub tested: usize,
    pub witness_points: usize,
    pub witnessed_all: bool,
}

/// Doubling search for H over sampled x in F and the radii of the schedule
/// that are certainly below diam(F).
pub fn uniform_perfectness(sys: &IFSystem, samples: usize, r_schedule: &[RationalScalar]) -> Result<UniformPerfectnessEstimate> {
    let diam = sys.diam_f();
    let radii: Vec<RationalScalar> = r_schedule.iter().filter(|r| r.is_positive() && **r < diam.lo).cloned().collect();
    let r_min = radii.iter().min().cloned().ok_or_else(|| Error::Domain("no radius in (0, diam F)".into()))?;
    let nb = sys.base_sample.len().max(1);
    let want = depth_for_scale(sys, &(&r_min / int(2)), sys.depth_cap);
    let depth = depth_within_budget(sys.n_maps(), want, WITNESS_POINTS / nb);
    let words = Word::all_of_length(sys.n_maps(), depth);
    let imgs = words
        .par_iter()
        .map(|w| sys.base_sample.iter().map(|p| sys.eval_word(w, p)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let set: BTreeSet<(RationalScalar, RationalScalar)> = imgs.into_iter().flatten().map(|p| (p.re, p.im)).collect();
    let pts: Vec<GaussianRational> = set.into_iter().map(|(a, b)| GaussianRational::new(a, b)).collect();
    if pts.len() < 2 {
        return Err(Error::Degenerate("F is a single point".into()));
    }
    let xs = select_evenly(&pts, samples);
    let one_d = sys.dimension == 1;
    // squared witness distance for each (x, r); zero when no witness exists
    let found: Vec<(RationalScalar, RationalScalar)> = xs
        .par_iter()
        .flat_map_iter(|x| {
            let pts = &pts;
            radii.iter().map(move |r| {
                let r2 = r * r;
                let best = if one_d {
                    let lo = pts.partition_point(|p| p.re < &x.re - r);
                    let hi = pts.partition_point(|p| p.re <= &x.re + r);
                    let a = (&x.re - &pts[lo].re).abs();
                    let b = (&pts[hi - 1].re - &x.re).abs();
                    let m = max_q(&a, &b);
                    &m * &m
                } else {
                    pts.iter().map(|p| p.dist_sq(x)).filter(|d| d <= &r2).max().unwrap_or_default()
                };
                (r2, best)
            })
        })
        .collect();
    let mut h = RationalScalar::one();
    let mut worst = 1f64;
    let mut witnessed_all = true;
    for (r2, m2) in &found {
        if m2.is_zero() {
            witnessed_all = false;
            continue;
        }
        let ratio2 = r2 / m2;
        // need r / H < m, that is H^2 > ratio^2
        while &h * &h <= ratio2 {
            h *= int(2);
        }
        worst = worst.max(to_f64(&ratio2).sqrt());
    }
    let min_d = sys.letter_deriv.iter().map(|d| d.lo.clone()).min().unwrap();
    let k = sys.k();
    let lemma_h = int(3) * k * k * k / min_d + int(1);
    Ok(UniformPerfectnessEstimate {
        h,
        certified_upto: r_min,
        lemma_h,
        worst_ratio: worst,
        tested: found.len(),
        witness_points: pts.len(),
        witnessed_all,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dimension::covering::geometric_schedule;
    use crate::examples::registry;

    fn cantor_s() -> RationalInterval {
        RationalInterval { lo: rat(6309297535, 10_000_000_000), hi: rat(6309297536, 10_000_000_000) }
    }

    #[test]
    fn cantor_ratio_at_zero_contains_one() {
        let sys = registry::load("cantor-1-3").unwrap();
        let mu = NaturalMeasure::uniform(2);
        for n in 1..7u32 {
            let r = powi(&rat(1, 3), n);
            let env = ahlfors_check(&sys, &mu, &cantor_s(), &[GaussianRational::zero()], &[r], Some(n as usize)).unwrap();
            assert!(env.envelope.contains(&int(1)), "{}", env.envelope);
        }
    }

    #[test]
    fn cantor_envelope_and_seed_independence() {
        let sys = registry::load("cantor-1-3").unwrap();
        let mu = NaturalMeasure::uniform(2);
        let rs = geometric_schedule(&rat(1, 3), 2, 8);
        let a = ahlfors_samples(&sys, 64, &SeedStrategy::FixedPointOf(0)).unwrap();
        let b = ahlfors_samples(&sys, 64, &SeedStrategy::FixedPointOf(1)).unwrap();
        let ea = ahlfors_check(&sys, &mu, &cantor_s(), &a, &rs, None).unwrap();
        let eb = ahlfors_check(&sys, &mu, &cantor_s(), &b, &rs, None).unwrap();
        assert!(ea.envelope.lo >= rat(1, 4) && ea.envelope.hi <= int(4));
        assert_eq!(ea.envelope, eb.envelope);
    }

    #[test]
    fn uniform_perfectness_examples() {
        let cantor = registry::load("cantor-1-3").unwrap();
        let up = uniform_perfectness(&cantor, 50, &geometric_schedule(&rat(1, 3), 1, 8)).unwrap();
        assert!(up.witnessed_all && up.h <= int(4));
        assert_eq!(up.lemma_h, int(10));
        let interval = registry::load("interval-1-2").unwrap();
        let up = uniform_perfectness(&interval, 50, &geometric_schedule(&rat(1, 2), 1, 8)).unwrap();
        assert!(up.witnessed_all && up.h <= int(2));
    }
}
