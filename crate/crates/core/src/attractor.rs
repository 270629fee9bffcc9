//! Cylinder enclosures, exact attractor samples and the natural measure.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::arith::*;
use crate::error::{Error, Result};
use crate::ifs::IFSystem;
use crate::words::{DiameterSource, Word};

pub const SAMPLE_POINT_GUARD: usize = 10_000_000;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CylinderSet {
    pub word: Word,
    /// Contains phi_word(F).
    pub enclosure: EnclosureBall,
    /// Bounds on ||phi_word'|| (lo is the infimum over V).
    pub deriv: RationalInterval,
    /// [sample lower bound, enclosure upper bound] on diam(phi_word(F)).
    pub diam: RationalInterval,
}

pub fn cylinder(sys: &IFSystem, w: &Word) -> Result<CylinderSet> {
    sys.check_word(w)?;
    let enclosure = sys.ball_image(w, &sys.f_hull)?;
    let deriv = sys.derivative_bounds(w)?;
    let hi = enclosure.diameter_bounds(sys.bits).hi;
    let lo = diam_lower(sys, w)?;
    let lo = min_q(&lo, &hi);
    Ok(CylinderSet { word: w.clone(), enclosure, deriv, diam: RationalInterval { lo, hi } })
}

/// Largest distance between images of the exact base sample.
pub fn diam_lower(sys: &IFSystem, w: &Word) -> Result<RationalScalar> {
    let pts = &sys.base_sample;
    if sys.dimension == 1 {
        // phi_w is monotone, so the extreme base points map to the extremes
        let a = sys.eval_word(w, &pts[0])?;
        let b = sys.eval_word(w, &pts[pts.len() - 1])?;
        return Ok((a.re - b.re).abs_q());
    }
    let imgs = pts.iter().map(|p| sys.eval_word(w, p)).collect::<Result<Vec<_>>>()?;
    let mut best = RationalScalar::zero();
    for i in 0..imgs.len() {
        for j in i + 1..imgs.len() {
            let d = imgs[i].dist_sq(&imgs[j]);
            if d > best {
                best = d;
            }
        }
    }
    Ok(sqrt_bounds(&best, sys.bits).0)
}

trait AbsQ {
    fn abs_q(self) -> Self;
}

impl AbsQ for RationalScalar {
    fn abs_q(self) -> Self {
        if self < RationalScalar::zero() {
            -self
        } else {
            self
        }
    }
}

pub fn cylinder_diam(sys: &IFSystem, w: &Word, source: DiameterSource) -> Result<RationalScalar> {
    match source {
        DiameterSource::EnclosureUpper => {
            if sys.dimension == 1 {
                let iv = sys.f_hull.to_interval();
                let a = sys.eval_word_real(w, &iv.lo)?;
                let b = sys.eval_word_real(w, &iv.hi)?;
                Ok((a - b).abs_q())
            } else {
                Ok(sys.ball_image(w, &sys.f_hull)?.diameter_bounds(sys.bits).hi)
            }
        }
        DiameterSource::SampleLower => diam_lower(sys, w),
    }
}

/// 1-D cylinder interval phi_w(hull F).
pub fn cylinder_interval(sys: &IFSystem, w: &Word) -> Result<RationalInterval> {
    let iv = sys.f_hull.to_interval();
    Ok(RationalInterval::hull2(sys.eval_word_real(w, &iv.lo)?, sys.eval_word_real(w, &iv.hi)?))
}

/// (w, phi_w(hull F)) for every word of the given length, built one letter at
/// a time as phi_{iw}(hull F) = phi_i(phi_w(hull F)).
pub fn level_enclosures(sys: &IFSystem, depth: usize) -> Result<Vec<(Word, EnclosureBall)>> {
    if sys.dimension == 1 {
        return Ok(level_intervals(sys, depth)?.into_iter().map(|(w, iv)| (w, EnclosureBall::from_interval(&iv))).collect());
    }
    grow_levels(sys, depth, sys.f_hull.clone(), |i, b| sys.maps[i].ball_image(b))
}

/// 1-D form of `level_enclosures`: (w, phi_w(hull F)) as intervals.
pub fn level_intervals(sys: &IFSystem, depth: usize) -> Result<Vec<(Word, RationalInterval)>> {
    grow_levels(sys, depth, sys.f_hull.to_interval(), |i, iv| sys.maps[i].interval_image(iv))
}

fn grow_levels<T, F>(sys: &IFSystem, depth: usize, root: T, image: F) -> Result<Vec<(Word, T)>>
where
    T: Send + Sync,
    F: Fn(usize, &T) -> Result<T> + Sync,
{
    if depth > sys.depth_cap {
        return Err(Error::DepthCap(sys.depth_cap));
    }
    let n = sys.n_maps();
    let mut level = vec![(Word::empty(n), root)];
    for _ in 0..depth {
        level = level
            .par_iter()
            .map(|(w, b)| (0..n).map(|i| Ok((w.prepend(i as u8), image(i, b)?))).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
    }
    Ok(level)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AttractorSample {
    pub points: Vec<GaussianRational>,
    pub depth: usize,
    pub seed: GaussianRational,
    /// Deduplication is exact for every supported kind.
    pub dedup_exact: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SeedStrategy {
    /// Fixed point of the first map.
    FirstFixedPoint,
    /// Fixed point of the given map (0-based).
    FixedPointOf(usize),
    Point(GaussianRational),
}

pub fn seed_point(sys: &IFSystem, strategy: &SeedStrategy) -> Result<GaussianRational> {
    match strategy {
        SeedStrategy::Point(p) => Ok(p.clone()),
        SeedStrategy::FirstFixedPoint | SeedStrategy::FixedPointOf(_) => {
            let i = match strategy {
                SeedStrategy::FixedPointOf(i) => *i,
                _ => 0,
            };
            let m = sys.maps.get(i).ok_or_else(|| Error::Domain(format!("no map {}", i + 1)))?;
            let fp = m.rational_fixed_points().into_iter().find(|p| sys.v_domain.contains_point(p));
            if let Some(p) = fp {
                return Ok(p);
            }
            // perturbed kinds: the affine fixed point, verified exactly
            let one = GaussianRational::one();
            let p = m.b.div(&(&one - &m.a))?;
            if m.eval(&p)? == p {
                Ok(p)
            } else {
                Err(Error::Domain(format!("no exact fixed point for map {}", i + 1)))
            }
        }
    }
}

/// {phi_w(x0) : |w| = depth}, exact and deduplicated, sorted.
pub fn sample_attractor(sys: &IFSystem, depth: usize, strategy: &SeedStrategy) -> Result<AttractorSample> {
    if depth > sys.depth_cap {
        return Err(Error::DepthCap(sys.depth_cap));
    }
    let n = sys.n_maps();
    if (n as f64).powi(depth as i32) > SAMPLE_POINT_GUARD as f64 {
        return Err(Error::Budget(format!("{n}^{depth} sample points exceed the guard")));
    }
    let seed = seed_point(sys, strategy)?;
    let mut layer: BTreeSet<(RationalScalar, RationalScalar)> = BTreeSet::new();
    layer.insert((seed.re.clone(), seed.im.clone()));
    for _ in 0..depth {
        let pts: Vec<_> = layer.into_iter().collect();
        let next: Vec<Vec<(RationalScalar, RationalScalar)>> = pts
            .par_iter()
            .map(|(x, y)| {
                let z = GaussianRational::new(x.clone(), y.clone());
                sys.maps.iter().map(|m| m.eval(&z).map(|w| (w.re, w.im))).collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        layer = next.into_iter().flatten().collect();
    }
    let points = layer.into_iter().map(|(x, y)| GaussianRational::new(x, y)).collect();
    Ok(AttractorSample { points, depth, seed, dedup_exact: true })
}

impl AttractorSample {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("re,im,re_decimal,im_decimal\n");
        for p in &self.points {
            let (x, y) = p.to_f64();
            s.push_str(&format!("{},{},{:.17e},{:.17e}\n", fmt_rational(&p.re), fmt_rational(&p.im), x, y));
        }
        s
    }
}

/// Bernoulli measure on the coding space pushed to F.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NaturalMeasure {
    #[serde(with = "serde_q_vec")]
    pub weights: Vec<RationalScalar>,
}

impl NaturalMeasure {
    pub fn new(weights: Vec<RationalScalar>) -> Result<Self> {
        let total: RationalScalar = weights.iter().cloned().sum();
        if !total.is_one() || weights.iter().any(|w| w < &RationalScalar::zero()) {
            return Err(Error::Domain("weights must be non-negative and sum to 1".into()));
        }
        Ok(Self { weights })
    }

    pub fn uniform(n: usize) -> Self {
        Self { weights: vec![rat(1, n as i64); n] }
    }

    /// Weights proportional to (sup over V of |phi_i'|)^s, normalised exactly.
    pub fn conformal(sys: &IFSystem, s: &RationalScalar) -> Result<Self> {
        let raw = sys
            .letter_deriv
            .iter()
            .map(|r| Ok(round_down(&RationalInterval::point(r.hi.clone()).pow(s, 96)?.mid(), 48)))
            .collect::<Result<Vec<_>>>()?;
        let total: RationalScalar = raw.iter().cloned().sum();
        Ok(Self { weights: raw.into_iter().map(|w| w / &total).collect() })
    }

    pub fn mass(&self, w: &Word) -> RationalScalar {
        w.symbols().iter().map(|&s| self.weights[s as usize].clone()).product()
    }
}

/// Fixed-depth cylinder table used for repeated ball queries (1-D and 2-D).
/// Masses are kept as integer numerators over the common denominator L^depth.
pub struct CylinderTable {
    pub depth: usize,
    /// (enclosure in 2-D, hull interval in 1-D, mass numerator), sorted by the
    /// left end in 1-D.
    cells: Vec<(Option<EnclosureBall>, RationalInterval, BigInt)>,
    /// Decimal copies of the 1-D endpoints, used to skip exact comparisons.
    approx: Vec<(f64, f64)>,
    denom: BigInt,
    max_width: RationalScalar,
    dimension: u8,
}

impl CylinderTable {
    pub fn build(sys: &IFSystem, mu: &NaturalMeasure, depth: usize) -> Result<Self> {
        if depth > sys.depth_cap {
            return Err(Error::DepthCap(sys.depth_cap));
        }
        let l = mu.weights.iter().fold(BigInt::one(), |acc, w| acc.lcm(w.denom()));
        let nums: Vec<BigInt> = mu.weights.iter().map(|w| w.numer() * (&l / w.denom())).collect();
        let mass = |w: &Word| w.symbols().iter().fold(BigInt::one(), |acc, &s| acc * &nums[s as usize]);
        let mut cells: Vec<(Option<EnclosureBall>, RationalInterval, BigInt)> = if sys.dimension == 1 {
            level_intervals(sys, depth)?.into_par_iter().map(|(w, iv)| (None, iv, mass(&w))).collect()
        } else {
            level_enclosures(sys, depth)?.into_par_iter().map(|(w, e)| (Some(e), RationalInterval::zero(), mass(&w))).collect()
        };
        let mut max_width = RationalScalar::zero();
        if sys.dimension == 1 {
            cells.sort_by(|a, b| a.1.lo.cmp(&b.1.lo));
            for c in &cells {
                let wd = c.1.width();
                if wd > max_width {
                    max_width = wd;
                }
            }
        }
        let denom = num_traits::pow(l, depth);
        let approx = cells.iter().map(|c| (to_f64(&c.1.lo), to_f64(&c.1.hi))).collect();
        Ok(Self { depth, cells, approx, denom, max_width, dimension: sys.dimension })
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// [mass certainly inside, mass possibly meeting] the closed ball.
    pub fn measure(&self, ball: &EnclosureBall) -> RationalInterval {
        let mut lo = BigInt::zero();
        let mut hi = BigInt::zero();
        if self.dimension == 1 {
            let b = ball.to_interval();
            let start_key = &b.lo - &self.max_width;
            let start = self.cells.partition_point(|c| c.1.lo < start_key);
            let (bl, bh) = (to_f64(&b.lo), to_f64(&b.hi));
            let tol = 1e-12 * (bl.abs().max(bh.abs()) + 1.0);
            for (k, (_, iv, m)) in self.cells[start..].iter().enumerate() {
                let (cl, ch) = self.approx[start + k];
                if cl > bh + tol || (cl >= bh - tol && iv.lo > b.hi) {
                    break;
                }
                if ch < bl - tol || (ch <= bl + tol && iv.hi < b.lo) {
                    continue;
                }
                hi += m;
                let inside = if cl > bl + tol && ch < bh - tol {
                    true
                } else if cl < bl - tol || ch > bh + tol {
                    false
                } else {
                    iv.lo >= b.lo && iv.hi <= b.hi
                };
                if inside {
                    lo += m;
                }
            }
        } else {
            for (e, _, m) in &self.cells {
                let e = e.as_ref().expect("planar cell");
                match ball.contains_ball(e) {
                    Certified::True => {
                        lo += m;
                        hi += m;
                    }
                    _ => {
                        if !ball.intersects(e).is_false() {
                            hi += m;
                        }
                    }
                }
            }
        }
        RationalInterval { lo: RationalScalar::new(lo, self.denom.clone()), hi: RationalScalar::new(hi, self.denom.clone()) }
    }
}

/// Certified bracket for mu(B) from the depth-`depth` cylinders.
pub fn measure_of_ball(mu: &NaturalMeasure, sys: &IFSystem, ball: &EnclosureBall, depth: usize) -> Result<RationalInterval> {
    Ok(CylinderTable::build(sys, mu, depth)?.measure(ball))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::registry;

    #[test]
    fn cantor_cylinder_and_samples() {
        let sys = registry::load("cantor-1-3").unwrap();
        let c = cylinder(&sys, &Word::parse("21", 2).unwrap()).unwrap();
        assert_eq!(c.enclosure.to_interval(), RationalInterval::hull2(rat(2, 3), rat(7, 9)));
        assert_eq!(c.diam, RationalInterval::point(rat(1, 9)));
        let s1 = sample_attractor(&sys, 1, &SeedStrategy::FirstFixedPoint).unwrap();
        assert_eq!(s1.points, vec![GaussianRational::real(int(0)), GaussianRational::real(rat(2, 3))]);
        let s2 = sample_attractor(&sys, 2, &SeedStrategy::FirstFixedPoint).unwrap();
        let xs: Vec<_> = s2.points.iter().map(|p| p.re.clone()).collect();
        assert_eq!(xs, vec![int(0), rat(2, 9), rat(2, 3), rat(8, 9)]);
    }

    #[test]
    fn cantor_measure_examples() {
        let sys = registry::load("cantor-1-3").unwrap();
        let mu = NaturalMeasure::uniform(2);
        for n in 1..6 {
            let r = num_traits::pow(rat(1, 3), n);
            let b = EnclosureBall::interval(-r.clone(), r);
            let m = measure_of_ball(&mu, &sys, &b, n).unwrap();
            assert_eq!(m, RationalInterval::point(num_traits::pow(rat(1, 2), n)));
        }
        let far = EnclosureBall::interval(int(5), int(6));
        assert_eq!(measure_of_ball(&mu, &sys, &far, 4).unwrap(), RationalInterval::zero());
        let all = EnclosureBall::interval(int(-2), int(3));
        assert_eq!(measure_of_ball(&mu, &sys, &all, 4).unwrap(), RationalInterval::one());
    }

    #[test]
    fn wsc_example_sample_collapses() {
        let sys = registry::load("wsc-example").unwrap();
        let s = sample_attractor(&sys, 2, &SeedStrategy::FirstFixedPoint).unwrap();
        assert_eq!(s.points.len(), 4);
        for n in 1..5 {
            for w in Word::all_of_length(3, n) {
                let c = cylinder(&sys, &w).unwrap();
                assert!(c.diam.contains(&num_traits::pow(rat(1, 3), n)));
            }
        }
    }
}
