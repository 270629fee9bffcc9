use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};

use super::{depth_within_budget, least_squares, pow_bits, PowCache};
use crate::arith::*;
use crate::attractor::{
    cylinder_interval, level_enclosures, level_intervals, sample_attractor, CylinderTable, NaturalMeasure, SeedStrategy,
};
use crate::error::{Error, Result};
use crate::ifs::IFSystem;
use crate::words::{generation_cut, Word};

/// Relative margin a merge must beat before it is taken (ties stay split).
const MERGE_MARGIN: f64 = 1e-12;
/// Slope of C_obs against the refinement index tolerated as "no increase".
pub const TREND_TOL: f64 = 1e-9;
/// Tested density sets re-evaluated in certified arithmetic.
const CERTIFY_TOP: usize = 8;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContentOptions {
    /// Cut levels tried below the top scale min(delta, diam F).
    pub refine: usize,
    /// Cells of the measure table.
    pub table_cells: usize,
    /// Cells per depth of the density scan.
    pub scan_cells: usize,
    /// Longest run of adjacent cylinders tested in 1-D.
    pub scan_run: usize,
    /// Largest cut used for a cover.
    pub piece_budget: usize,
}

impl Default for ContentOptions {
    fn default() -> Self {
        Self { refine: 2, table_cells: 1 << 14, scan_cells: 1 << 12, scan_run: 4, piece_budget: 1 << 15 }
    }
}

/// Bounds on H^s_delta(F cap A); delta = None is the content H^s_inf.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContentEstimate {
    #[serde(with = "serde_q")]
    pub s: RationalScalar,
    #[serde(with = "serde_q_opt")]
    pub delta: Option<RationalScalar>,
    pub subset: Option<EnclosureBall>,
    /// Sum of diam^s over a concrete cover with pieces of diameter <= delta.
    #[serde(with = "serde_q")]
    pub upper: RationalScalar,
    /// lower(mu(F cap A)) / c_obs.
    #[serde(with = "serde_q")]
    pub lower: RationalScalar,
    pub cover_size: usize,
    #[serde(with = "serde_q")]
    pub cover_scale: RationalScalar,
    /// Bracket for mu(F cap A) under the s-conformal measure.
    pub mass: RationalInterval,
    /// Largest mu(U)/diam(U)^s over the tested sets U.
    #[serde(with = "serde_q")]
    pub density_const: RationalScalar,
    pub density_tested: usize,
}

impl ContentEstimate {
    pub fn upper_f64(&self) -> f64 {
        to_f64(&self.upper)
    }

    pub fn lower_f64(&self) -> f64 {
        to_f64(&self.lower)
    }
}

/// A cover piece: a ball containing the piece and an upper bound on its diameter.
#[derive(Clone)]
struct Piece {
    ball: EnclosureBall,
    diam: RationalScalar,
}

struct Context<'a> {
    sys: &'a IFSystem,
    s: RationalScalar,
    s_f: f64,
    opts: ContentOptions,
    table: CylinderTable,
    pows: PowCache,
    scan_const: RationalScalar,
    scan_tested: usize,
    cuts: HashMap<RationalScalar, Vec<Piece>>,
    lambda: RationalScalar,
    diam: RationalScalar,
}

fn interval_piece(iv: RationalInterval) -> Piece {
    let diam = iv.width();
    Piece { ball: EnclosureBall::from_interval(&iv), diam }
}

/// Ball around the bounding box of some balls, with a rational diameter bound.
fn bbox_piece(balls: &[&EnclosureBall], bits: u32) -> Piece {
    let mut x0: Option<RationalScalar> = None;
    let mut x1: Option<RationalScalar> = None;
    let mut y0: Option<RationalScalar> = None;
    let mut y1: Option<RationalScalar> = None;
    for b in balls {
        let r = b.radius_bounds(bits).hi;
        let (cx, cy) = (&b.center.re, &b.center.im);
        let upd = |v: &mut Option<RationalScalar>, c: RationalScalar, lo: bool| {
            *v = Some(match v.take() {
                Some(o) if (lo && o <= c) || (!lo && o >= c) => o,
                _ => c,
            });
        };
        upd(&mut x0, cx - &r, true);
        upd(&mut x1, cx + &r, false);
        upd(&mut y0, cy - &r, true);
        upd(&mut y1, cy + &r, false);
    }
    let (x0, x1, y0, y1) = (x0.unwrap(), x1.unwrap(), y0.unwrap(), y1.unwrap());
    let w = &x1 - &x0;
    let h = &y1 - &y0;
    let d2 = &w * &w + &h * &h;
    let center = GaussianRational::new((&x0 + &x1) / int(2), (&y0 + &y1) / int(2));
    let ball = EnclosureBall { center, radius_sq: &d2 / int(4), dimension: 2 };
    Piece { ball, diam: sqrt_bounds(&d2, bits).1 }
}

impl<'a> Context<'a> {
    fn new(sys: &'a IFSystem, s: &RationalScalar, opts: ContentOptions) -> Result<Self> {
        if s.is_negative() {
            return Err(Error::Domain("s must be non-negative".into()));
        }
        let mu = NaturalMeasure::conformal(sys, s)?;
        let n = sys.n_maps();
        let dt = depth_within_budget(n, sys.depth_cap, opts.table_cells).max(1);
        let table = CylinderTable::build(sys, &mu, dt)?;
        let bits = pow_bits(sys);
        let mut ctx = Context {
            sys,
            s: s.clone(),
            s_f: to_f64(s),
            opts,
            table,
            pows: PowCache::new(s, bits)?,
            scan_const: RationalScalar::zero(),
            scan_tested: 0,
            cuts: HashMap::new(),
            lambda: sys.max_letter_deriv(),
            diam: sys.diam_f().hi,
        };
        ctx.density_scan()?;
        Ok(ctx)
    }

    fn pow_f(&self, d: &RationalScalar) -> f64 {
        if self.s_f == 0.0 {
            return 1.0;
        }
        let x = to_f64(d);
        if x <= 0.0 {
            0.0
        } else {
            x.powf(self.s_f)
        }
    }

    /// Largest certified mu(U)/diam(U)^s over a tested family: single cylinders
    /// and runs of adjacent cylinders (1-D) at shallow depths.
    fn density_scan(&mut self) -> Result<()> {
        let sys = self.sys;
        let n = sys.n_maps();
        let dmax = depth_within_budget(n, sys.depth_cap, self.opts.scan_cells);
        let mut tested: Vec<(f64, Piece)> = Vec::new();
        for d in 0..=dmax {
            let pieces = if d == 0 { self.whole_pieces()? } else { self.level_pieces(d)? };
            let mut sets = Vec::new();
            if sys.dimension == 1 {
                for i in 0..pieces.len() {
                    let mut hi = pieces[i].ball.to_interval().hi;
                    for k in 0..self.opts.scan_run.min(pieces.len() - i) {
                        let h = pieces[i + k].ball.to_interval().hi;
                        if h > hi {
                            hi = h;
                        }
                        sets.push(interval_piece(RationalInterval { lo: pieces[i].ball.to_interval().lo, hi: hi.clone() }));
                    }
                }
            } else {
                sets = pieces;
            }
            for p in sets {
                if p.diam.is_zero() {
                    continue;
                }
                let m = to_f64(&self.table.measure(&p.ball).hi);
                tested.push((m / self.pow_f(&p.diam), p));
            }
        }
        self.scan_tested = tested.len();
        tested.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
        let mut c = RationalScalar::zero();
        for (_, p) in tested.into_iter().take(CERTIFY_TOP) {
            let r = self.ratio(&p)?;
            if r > c {
                c = r;
            }
        }
        self.scan_const = c;
        Ok(())
    }

    /// Certified mu_hi(U) / lower(diam^s).
    fn ratio(&mut self, p: &Piece) -> Result<RationalScalar> {
        let den = self.pows.get(&p.diam)?.lo;
        if !den.is_positive() {
            return Ok(RationalScalar::zero());
        }
        Ok(self.table.measure(&p.ball).hi / den)
    }

    fn whole_pieces(&self) -> Result<Vec<Piece>> {
        let hull = &self.sys.f_hull;
        Ok(vec![Piece { ball: hull.clone(), diam: hull.diameter_bounds(self.sys.bits).hi }])
    }

    fn level_pieces(&self, d: usize) -> Result<Vec<Piece>> {
        let sys = self.sys;
        if sys.dimension == 1 {
            let set: BTreeSet<(RationalScalar, RationalScalar)> =
                level_intervals(sys, d)?.into_iter().map(|(_, iv)| (iv.lo, iv.hi)).collect();
            Ok(set.into_iter().map(|(lo, hi)| interval_piece(RationalInterval { lo, hi })).collect())
        } else {
            Ok(level_enclosures(sys, d)?
                .into_iter()
                .map(|(_, ball)| {
                    let diam = ball.diameter_bounds(sys.bits).hi;
                    Piece { ball, diam }
                })
                .collect())
        }
    }

    fn word_pieces(&self, words: &[Word]) -> Result<Vec<Piece>> {
        let sys = self.sys;
        if sys.dimension == 1 {
            let ivs = words.par_iter().map(|w| cylinder_interval(sys, w)).collect::<Result<Vec<_>>>()?;
            let set: BTreeSet<(RationalScalar, RationalScalar)> = ivs.into_iter().map(|iv| (iv.lo, iv.hi)).collect();
            Ok(set.into_iter().map(|(lo, hi)| interval_piece(RationalInterval { lo, hi })).collect())
        } else {
            words
                .par_iter()
                .map(|w| {
                    let ball = sys.ball_image(w, &sys.f_hull)?;
                    let diam = ball.diameter_bounds(sys.bits).hi;
                    Ok(Piece { ball, diam })
                })
                .collect()
        }
    }

    fn cut_pieces(&mut self, scale: &RationalScalar) -> Result<Vec<Piece>> {
        if let Some(p) = self.cuts.get(scale) {
            return Ok(p.clone());
        }
        let cut = generation_cut(self.sys, scale)?;
        let pieces = self.word_pieces(&cut.words)?;
        self.cuts.insert(scale.clone(), pieces.clone());
        Ok(pieces)
    }

    fn estimate(&mut self, delta: Option<&RationalScalar>, subset: Option<&EnclosureBall>) -> Result<ContentEstimate> {
        if let Some(d) = delta {
            if !d.is_positive() {
                return Err(Error::Domain("delta must be positive".into()));
            }
        }
        let mass = match subset {
            Some(a) => self.table.measure(a),
            None => RationalInterval::one(),
        };
        let top = match delta {
            Some(d) => min_q(d, &self.diam),
            None => self.diam.clone(),
        };
        let n = self.sys.n_maps() as f64;
        let mut best: Option<(f64, Vec<Piece>, RationalScalar)> = None;
        let mut scale = top.clone();
        for level in 0..=self.opts.refine {
            if level > 0 {
                scale = &scale * &self.lambda;
            }
            let depth = super::depth_for_scale(self.sys, &scale, self.sys.depth_cap);
            if level > 0 && n.powi(depth as i32) > self.opts.piece_budget as f64 {
                break;
            }
            let cut = self.cut_pieces(&scale)?;
            let pieces = self.clip(cut, subset);
            let mut candidates = vec![pieces.clone()];
            if self.sys.dimension == 1 {
                candidates.push(self.merge_line(pieces, delta));
            } else {
                candidates.extend(self.merge_grid(&pieces, &scale, delta));
            }
            for c in candidates {
                let v: f64 = c.iter().map(|p| self.pow_f(&p.diam)).sum();
                if best.as_ref().map(|b| v < b.0).unwrap_or(true) {
                    best = Some((v, c, scale.clone()));
                }
            }
        }
        let (_, cover, cover_scale) = best.ok_or_else(|| Error::Budget("no cover within the piece budget".into()))?;
        let mut upper = RationalScalar::zero();
        let mut c = self.scan_const.clone();
        for p in &cover {
            upper += self.pows.get(&p.diam)?.hi;
            if p.diam.is_positive() {
                let r = self.ratio(p)?;
                if r > c {
                    c = r;
                }
            }
        }
        let lower = if c.is_positive() && mass.lo.is_positive() { &mass.lo / &c } else { RationalScalar::zero() };
        Ok(ContentEstimate {
            s: self.s.clone(),
            delta: delta.cloned(),
            subset: subset.cloned(),
            upper,
            lower,
            cover_size: cover.len(),
            cover_scale,
            mass,
            density_const: c,
            density_tested: self.scan_tested + cover.len(),
        })
    }

    /// Pieces meeting A; in 1-D each piece is cut down to its overlap with A.
    fn clip(&self, pieces: Vec<Piece>, subset: Option<&EnclosureBall>) -> Vec<Piece> {
        let Some(a) = subset else { return pieces };
        if self.sys.dimension == 1 {
            let ai = a.to_interval();
            pieces.into_iter().filter_map(|p| p.ball.to_interval().intersect(&ai).map(interval_piece)).collect()
        } else {
            pieces.into_iter().filter(|p| !a.intersects(&p.ball).is_false()).collect()
        }
    }

    /// Merge neighbours left to right while the merged diam^s beats the sum.
    fn merge_line(&self, mut pieces: Vec<Piece>, delta: Option<&RationalScalar>) -> Vec<Piece> {
        pieces.sort_by(|a, b| a.ball.to_interval().lo.cmp(&b.ball.to_interval().lo));
        let mut groups: Vec<(RationalInterval, f64)> = pieces
            .into_iter()
            .map(|p| {
                let v = self.pow_f(&p.diam);
                (p.ball.to_interval(), v)
            })
            .collect();
        loop {
            let mut changed = false;
            let mut out: Vec<(RationalInterval, f64)> = Vec::with_capacity(groups.len());
            for g in groups {
                if let Some(last) = out.last_mut() {
                    let merged = last.0.hull(&g.0);
                    let w = merged.width();
                    if delta.map(|d| &w <= d).unwrap_or(true) {
                        let v = self.pow_f(&w);
                        if v < (last.1 + g.1) * (1.0 - MERGE_MARGIN) {
                            *last = (merged, v);
                            changed = true;
                            continue;
                        }
                    }
                }
                out.push(g);
            }
            groups = out;
            if !changed {
                break;
            }
        }
        groups.into_iter().map(|(iv, _)| interval_piece(iv)).collect()
    }

    /// Grid groupings at doubling cell sides; a level is used only when every
    /// group respects delta.
    fn merge_grid(&self, pieces: &[Piece], scale: &RationalScalar, delta: Option<&RationalScalar>) -> Vec<Vec<Piece>> {
        let bits = self.sys.bits;
        let mut out = Vec::new();
        if pieces.is_empty() {
            return out;
        }
        let mut side = scale * int(2);
        for _ in 0..24 {
            let mut cells: HashMap<(RationalScalar, RationalScalar), Vec<&EnclosureBall>> = HashMap::new();
            for p in pieces {
                let key = ((&p.ball.center.re / &side).floor(), (&p.ball.center.im / &side).floor());
                cells.entry(key).or_default().push(&p.ball);
            }
            let mut keys: Vec<_> = cells.keys().cloned().collect();
            keys.sort();
            let groups: Vec<Piece> = keys.iter().map(|k| bbox_piece(&cells[k], bits)).collect();
            if delta.map(|d| groups.iter().all(|g| &g.diam <= d)).unwrap_or(true) {
                out.push(groups.clone());
            }
            if groups.len() == 1 {
                break;
            }
            side *= int(2);
        }
        out
    }
}

pub fn content_estimate(
    sys: &IFSystem,
    s: &RationalScalar,
    delta: Option<&RationalScalar>,
    subset: Option<&EnclosureBall>,
) -> Result<ContentEstimate> {
    content_estimate_with(sys, s, delta, subset, ContentOptions::default())
}

pub fn content_estimate_with(
    sys: &IFSystem,
    s: &RationalScalar,
    delta: Option<&RationalScalar>,
    subset: Option<&EnclosureBall>,
    opts: ContentOptions,
) -> Result<ContentEstimate> {
    Context::new(sys, s, opts)?.estimate(delta, subset)
}

/// Dyadic pieces of the hull of F (intervals in 1-D, discs around dyadic
/// squares in 2-D), coarse levels first, keeping those that contain a sample
/// point of F.
pub fn dyadic_subsets(sys: &IFSystem, count: usize) -> Result<Vec<EnclosureBall>> {
    let depth = depth_within_budget(sys.n_maps(), 12, 1 << 12);
    let sample = sample_attractor(sys, depth, &SeedStrategy::FirstFixedPoint)?;
    let hull = &sys.f_hull;
    let mut out = Vec::new();
    if sys.dimension == 1 {
        let iv = hull.to_interval();
        let w = iv.width();
        for m in 1..=16u32 {
            let k = 1i64 << m;
            for j in 0..k {
                let a = &iv.lo + &w * rat(j, k);
                let b = &iv.lo + &w * rat(j + 1, k);
                if sample.points.iter().any(|p| p.re >= a && p.re <= b) {
                    out.push(EnclosureBall::interval(a, b));
                    if out.len() == count {
                        return Ok(out);
                    }
                }
            }
        }
    } else {
        let r = hull.radius_bounds(sys.bits).hi;
        let x0 = &hull.center.re - &r;
        let y0 = &hull.center.im - &r;
        let side0 = &r * int(2);
        for m in 1..=8u32 {
            let k = 1i64 << m;
            let side = &side0 / int(k);
            for i in 0..k {
                for j in 0..k {
                    let xa = &x0 + &side * int(i);
                    let ya = &y0 + &side * int(j);
                    let inside = |p: &GaussianRational| p.re >= xa && p.re <= &xa + &side && p.im >= ya && p.im <= &ya + &side;
                    if sample.points.iter().any(inside) {
                        let c = GaussianRational::new(&xa + &side / int(2), &ya + &side / int(2));
                        out.push(EnclosureBall { center: c, radius_sq: &side * &side / int(2), dimension: 2 });
                        if out.len() == count {
                            return Ok(out);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComparabilityRow {
    #[serde(with = "serde_q")]
    pub delta: RationalScalar,
    /// max over subsets of upper(H^s_delta(F cap A)) / upper(H^s_inf(F cap A)).
    #[serde(with = "serde_q")]
    pub c_obs: RationalScalar,
    pub ratios: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComparabilityReport {
    #[serde(with = "serde_q")]
    pub s: RationalScalar,
    pub subsets: usize,
    /// Subsets with a zero content upper bound, left out of the ratios.
    pub skipped: usize,
    pub rows: Vec<ComparabilityRow>,
    #[serde(with = "serde_q")]
    pub c_obs: RationalScalar,
    /// Least-squares slope of row C_obs against the refinement index.
    pub trend_slope: f64,
    pub no_increasing_trend: bool,
}

/// Ratios upper(H^s_delta)/upper(H^s_inf) over subsets and a delta schedule
/// ordered from coarse to fine. The H^s_inf upper bound of each subset is the
/// best of its own cover and every delta cover.
pub fn content_comparability(
    sys: &IFSystem,
    s: &RationalScalar,
    subsets: &[EnclosureBall],
    deltas: &[RationalScalar],
) -> Result<ComparabilityReport> {
    if deltas.is_empty() {
        return Err(Error::Domain("empty delta schedule".into()));
    }
    let mut ctx = Context::new(sys, s, ContentOptions::default())?;
    let mut per_delta: Vec<Vec<RationalScalar>> = vec![Vec::new(); deltas.len()];
    let mut skipped = 0;
    for a in subsets {
        let mut inf = ctx.estimate(None, Some(a))?.upper;
        let mut ups = Vec::with_capacity(deltas.len());
        for d in deltas {
            let u = ctx.estimate(Some(d), Some(a))?.upper;
            inf = min_q(&inf, &u);
            ups.push(u);
        }
        if !inf.is_positive() {
            skipped += 1;
            continue;
        }
        for (k, u) in ups.into_iter().enumerate() {
            per_delta[k].push(u / &inf);
        }
    }
    let rows: Vec<ComparabilityRow> = deltas
        .iter()
        .zip(per_delta)
        .map(|(d, rs)| ComparabilityRow {
            delta: d.clone(),
            c_obs: rs.iter().max().cloned().unwrap_or_else(RationalScalar::one),
            ratios: rs.iter().map(to_f64).collect(),
        })
        .collect();
    let c_obs = rows.iter().map(|r| r.c_obs.clone()).max().unwrap_or_else(RationalScalar::one);
    let xs: Vec<f64> = (0..rows.len()).map(|k| k as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| to_f64(&r.c_obs)).collect();
    let trend_slope = if rows.len() > 1 { least_squares(&xs, &ys).0 } else { 0.0 };
    Ok(ComparabilityReport {
        s: s.clone(),
        subsets: subsets.len(),
        skipped,
        rows,
        c_obs,
        trend_slope,
        no_increasing_trend: trend_slope <= TREND_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::registry;

    fn cantor_s() -> RationalScalar {
        // log 2 / log 3 to 12 digits
        rat(630929753571, 1_000_000_000_000)
    }

    #[test]
    fn cantor_content_bounds() {
        let sys = registry::load("cantor-1-3").unwrap();
        let s = cantor_s();
        let e = content_estimate(&sys, &s, None, None).unwrap();
        assert!(e.upper_f64() <= 1.0 + 1e-9, "{}", e.upper_f64());
        assert!(e.lower <= e.upper);
        assert!(e.lower_f64() > 0.99);
        for n in [2u32, 4, 6] {
            let d = powi(&rat(1, 3), n);
            let e = content_estimate(&sys, &s, Some(&d), None).unwrap();
            assert!(e.upper_f64() <= 1.0 + 1e-9);
            assert!(e.lower <= e.upper);
        }
    }

    #[test]
    fn disjoint_subset_is_zero() {
        let sys = registry::load("cantor-1-3").unwrap();
        let a = EnclosureBall::interval(rat(2, 5), rat(3, 5));
        let e = content_estimate(&sys, &cantor_s(), None, Some(&a)).unwrap();
        assert!(e.upper.is_zero() && e.lower.is_zero());
    }

    #[test]
    fn cantor_dyadic_subsets() {
        let sys = registry::load("cantor-1-3").unwrap();
        let subs = dyadic_subsets(&sys, 20).unwrap();
        assert_eq!(subs.len(), 20);
        assert_eq!(subs[0].to_interval(), RationalInterval::hull2(int(0), rat(1, 2)));
    }
}
