use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::count::equivalence_of_restrictions;
use crate::arith::*;
use crate::error::Result;
use crate::ifs::{grid_points, IFSystem, MapKind};
use crate::words::Word;

/// A pair of words with a certified bracket for
/// sup_F |phi_i - phi_j| / max(||phi_i'||, ||phi_j'||).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IlcWitness {
    pub i: Word,
    pub j: Word,
    pub delta: RationalInterval,
    pub distinct: Certified,
    /// Constant C with C^-1 delta max||phi'|| <= |phi_i - phi_j| <= C delta min||phi'||
    /// on V; None when the difference may vanish on V.
    #[serde(with = "serde_q_opt")]
    pub lemma_c: Option<RationalScalar>,
    /// Whether lemma_c is certified (exact for affine maps) or a grid estimate.
    pub lemma_c_certified: bool,
}

impl IlcWitness {
    pub fn len(&self) -> usize {
        self.i.len()
    }

    pub fn is_empty(&self) -> bool {
        self.i.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct IlcOptions {
    pub max_len: usize,
    pub target: RationalScalar,
    /// Largest number of states (affine) or pairs (generic) kept per level.
    pub budget: usize,
    /// Stop at the first length whose best witness reaches the target.
    pub stop_at_target: bool,
}

impl IlcOptions {
    pub fn new(max_len: usize, target: RationalScalar) -> Self {
        Self { max_len, target, budget: 2_000_000, stop_at_target: false }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IlcSearch {
    pub max_len: usize,
    #[serde(with = "serde_q")]
    pub target: RationalScalar,
    pub method: String,
    pub best: Option<IlcWitness>,
    /// Best witness at each searched length (index 0 is length 1).
    pub best_by_len: Vec<Option<IlcWitness>>,
    pub reached_target: bool,
    /// Exact overlaps met during the search (first 64 kept).
    pub exact_overlaps: Vec<(Word, Word)>,
    pub exact_overlap_count: usize,
    pub partial: bool,
    pub states_examined: usize,
}

impl IlcSearch {
    /// Shortest witness with delta.hi strictly below the threshold.
    pub fn shortest_below(&self, threshold: &RationalScalar) -> Option<&IlcWitness> {
        self.best_by_len.iter().flatten().find(|w| &w.delta.hi < threshold)
    }

    pub fn searched_len(&self) -> usize {
        self.best_by_len.len()
    }
}

pub fn ilc_search(sys: &IFSystem, max_len: usize, target: &RationalScalar) -> Result<IlcSearch> {
    ilc_search_with(sys, &IlcOptions::new(max_len, target.clone()))
}

/// Minimises the relative distance over pairs of equal-length words with
/// distinct first letters, pruning pairs whose extensions cannot beat the best.
pub fn ilc_search_with(sys: &IFSystem, opts: &IlcOptions) -> Result<IlcSearch> {
    if sys.maps.iter().all(|m| m.kind == MapKind::Affine1d) {
        affine_search(sys, opts)
    } else {
        generic_search(sys, opts)
    }
}

fn abs(q: &RationalScalar) -> RationalScalar {
    q.abs()
}

struct AffineData {
    a: Vec<RationalScalar>,
    b: Vec<RationalScalar>,
    hull: (RationalScalar, RationalScalar),
    sample: (RationalScalar, RationalScalar),
    v: (RationalScalar, RationalScalar),
    lambda_max: RationalScalar,
}

impl AffineData {
    fn new(sys: &IFSystem) -> Self {
        let a: Vec<_> = sys.maps.iter().map(|m| m.a.re.clone()).collect();
        let b: Vec<_> = sys.maps.iter().map(|m| m.b.re.clone()).collect();
        let h = sys.f_hull.to_interval();
        let s0 = sys.base_sample.first().map(|p| p.re.clone()).unwrap_or_else(|| h.lo.clone());
        let s1 = sys.base_sample.last().map(|p| p.re.clone()).unwrap_or_else(|| h.hi.clone());
        let v = sys.v_domain.to_interval();
        let lambda_max = a.iter().map(abs).max().expect("N >= 2");
        Self { a, b, hull: (h.lo, h.hi), sample: (s0, s1), v: (v.lo, v.hi), lambda_max }
    }

    /// |(1 - rho) x + t| at the two given points, maximised.
    fn sup_at(rho: &RationalScalar, t: &RationalScalar, p: &(RationalScalar, RationalScalar)) -> RationalScalar {
        let one_m = RationalScalar::one() - rho;
        let f0 = abs(&(&one_m * &p.0 + t));
        let f1 = abs(&(&one_m * &p.1 + t));
        max_q(&f0, &f1)
    }

    fn delta(&self, rho: &RationalScalar, t: &RationalScalar) -> RationalInterval {
        let den = max_q(&RationalScalar::one(), &abs(rho));
        let lo = Self::sup_at(rho, t, &self.sample) / &den;
        let hi = Self::sup_at(rho, t, &self.hull) / &den;
        RationalInterval { lo: min_q(&lo, &hi), hi }
    }

    /// Lower bound on the relative distance of every proper extension.
    fn extension_bound(&self, rho: &RationalScalar, t: &RationalScalar) -> RationalScalar {
        let (m, mm) = &self.hull;
        let l2 = min_q(&(rho * m - t), &(rho * mm - t));
        let h2 = max_q(&(rho * m - t), &(rho * mm - t));
        let gap = max_q(&RationalScalar::zero(), &max_q(&(&l2 - mm), &(m - &h2)));
        gap / (max_q(&RationalScalar::one(), &abs(rho)) * &self.lambda_max)
    }

    fn lemma_c(&self, rho: &RationalScalar, t: &RationalScalar, delta: &RationalInterval) -> Option<RationalScalar> {
        let one_m = RationalScalar::one() - rho;
        let f0 = &one_m * &self.v.0 + t;
        let f1 = &one_m * &self.v.1 + t;
        if f0.is_zero() || f1.is_zero() || (f0.is_positive() != f1.is_positive()) || delta.lo.is_zero() {
            return None;
        }
        let (fmin, fmax) = (min_q(&abs(&f0), &abs(&f1)), max_q(&abs(&f0), &abs(&f1)));
        let nmax = max_q(&RationalScalar::one(), &abs(rho));
        let nmin = min_q(&RationalScalar::one(), &abs(rho));
        let c1 = &delta.hi * nmax / fmin;
        let c2 = fmax / (&delta.lo * nmin);
        Some(max_q(&RationalScalar::one(), &max_q(&c1, &c2)))
    }

    fn witness(&self, u: &Word, v: &Word, rho: &RationalScalar, t: &RationalScalar) -> IlcWitness {
        let delta = self.delta(rho, t);
        let distinct = if delta.lo.is_positive() { Certified::True } else if delta.hi.is_zero() { Certified::False } else { Certified::Undecided };
        let lemma_c = self.lemma_c(rho, t, &delta);
        IlcWitness { i: u.clone(), j: v.clone(), delta, distinct, lemma_c, lemma_c_certified: true }
    }

    fn state(&self, u: &Word, v: &Word) -> (RationalScalar, RationalScalar) {
        let (mut au, mut bu) = (RationalScalar::one(), RationalScalar::zero());
        for &s in u.symbols() {
            bu = &bu + &au * &self.b[s as usize];
            au = &au * &self.a[s as usize];
        }
        let (mut av, mut bv) = (RationalScalar::one(), RationalScalar::zero());
        for &s in v.symbols() {
            bv = &bv + &av * &self.b[s as usize];
            av = &av * &self.a[s as usize];
        }
        (&av / &au, (bu - bv) / au)
    }
}

type State = (RationalScalar, RationalScalar);

fn affine_search(sys: &IFSystem, opts: &IlcOptions) -> Result<IlcSearch> {
    let ad = AffineData::new(sys);
    let n = sys.n_maps();
    let mut out = empty_search(opts, "affine-1d");
    let mut level: BTreeMap<State, (Word, Word)> = BTreeMap::new();
    for x in 0..n {
        for y in x + 1..n {
            let (u, v) = (Word::letter(x as u8, n), Word::letter(y as u8, n));
            level.entry(ad.state(&u, &v)).or_insert((u, v));
        }
    }
    let one = RationalScalar::one();
    for len in 1..=opts.max_len {
        out.states_examined += level.len();
        let mut best_here: Option<IlcWitness> = None;
        for ((rho, t), (u, v)) in &level {
            if rho == &one && t.is_zero() {
                out.exact_overlap_count += 1;
                if out.exact_overlaps.len() < 64 {
                    out.exact_overlaps.push((u.clone(), v.clone()));
                }
                continue;
            }
            let delta = ad.delta(rho, t);
            if best_here.as_ref().map(|b| delta.hi < b.delta.hi).unwrap_or(true) {
                best_here = Some(ad.witness(u, v, rho, t));
            }
        }
        record_level(&mut out, best_here);
        if (opts.stop_at_target && out.reached_target) || len == opts.max_len {
            break;
        }
        let bound = out.best.as_ref().map(|b| b.delta.hi.clone());
        let entries: Vec<(&State, &(Word, Word))> = level.iter().collect();
        let children: Vec<Vec<(State, (Word, Word))>> = entries
            .par_iter()
            .map(|((rho, t), (u, v))| {
                if rho == &one && t.is_zero() {
                    return Vec::new();
                }
                if let Some(b) = &bound {
                    if &ad.extension_bound(rho, t) >= b {
                        return Vec::new();
                    }
                }
                let mut kids = Vec::with_capacity(n * n);
                for x in 0..n {
                    for y in 0..n {
                        let r2 = rho * &ad.a[y] / &ad.a[x];
                        let t2 = (t + &ad.b[x] - rho * &ad.b[y]) / &ad.a[x];
                        kids.push(((r2, t2), (u.push(x as u8), v.push(y as u8))));
                    }
                }
                kids
            })
            .collect();
        let mut next: BTreeMap<State, (Word, Word)> = BTreeMap::new();
        for kids in children {
            for (k, wv) in kids {
                next.entry(k).or_insert(wv);
            }
        }
        if next.len() > opts.budget {
            out.partial = true;
            break;
        }
        if next.is_empty() {
            break;
        }
        level = next;
    }
    Ok(out)
}

fn empty_search(opts: &IlcOptions, method: &str) -> IlcSearch {
    IlcSearch {
        max_len: opts.max_len,
        target: opts.target.clone(),
        method: method.into(),
        best: None,
        best_by_len: Vec::new(),
        reached_target: false,
        exact_overlaps: Vec::new(),
        exact_overlap_count: 0,
        partial: false,
        states_examined: 0,
    }
}

fn record_level(out: &mut IlcSearch, best_here: Option<IlcWitness>) {
    if let Some(w) = &best_here {
        if out.best.as_ref().map(|b| w.delta.hi < b.delta.hi).unwrap_or(true) {
            out.best = Some(w.clone());
        }
        if w.delta.hi <= out.target {
            out.reached_target = true;
        }
    }
    out.best_by_len.push(best_here);
}

/// Lower bound for sup_V |phi_w'|: the larger of the certified infimum and the
/// exact derivative at the centre of V.
fn norm_lower(sys: &IFSystem, w: &Word, bounds: &RationalInterval) -> Result<RationalScalar> {
    let d = sys.deriv_word_at(w, &sys.v_domain.center)?;
    let at = if sys.dimension == 1 { d.re.abs() } else { sqrt_bounds(&d.norm_sq(), sys.bits).0 };
    Ok(max_q(&bounds.lo, &at))
}

/// Certified bracket of the relative distance of a single pair.
pub fn witness_for(sys: &IFSystem, i: &Word, j: &Word) -> Result<IlcWitness> {
    sys.check_word(i)?;
    sys.check_word(j)?;
    if sys.maps.iter().all(|m| m.kind == MapKind::Affine1d) {
        let ad = AffineData::new(sys);
        let (rho, t) = ad.state(i, j);
        return Ok(ad.witness(i, j, &rho, &t));
    }
    if equivalence_of_restrictions(sys, i, j).is_true() {
        return Ok(IlcWitness {
            i: i.clone(),
            j: j.clone(),
            delta: RationalInterval::zero(),
            distinct: Certified::False,
            lemma_c: None,
            lemma_c_certified: false,
        });
    }
    let bits = sys.bits;
    // numerator lower bound on exact points of F
    let mut num_lo = RationalScalar::zero();
    for p in &sys.base_sample {
        let d = (&sys.eval_word(i, p)? - &sys.eval_word(j, p)?).norm_sq();
        let v = if sys.dimension == 1 { sqrt_exact(&d).expect("square of a rational") } else { sqrt_bounds(&d, bits).0 };
        num_lo = max_q(&num_lo, &v);
    }
    // numerator upper bound on a depth-2 cylinder cover of F
    let mut num_hi = RationalScalar::zero();
    for w in Word::all_of_length(sys.n_maps(), 2) {
        let ei = sys.ball_image(&i.concat(&w), &sys.f_hull)?;
        let ej = sys.ball_image(&j.concat(&w), &sys.f_hull)?;
        let v = if sys.dimension == 1 {
            let (a, b) = (ei.to_interval(), ej.to_interval());
            max_q(&abs(&(&a.hi - &b.lo)), &abs(&(&b.hi - &a.lo)))
        } else {
            let dc = sqrt_bounds(&ei.center.dist_sq(&ej.center), bits).1;
            dc + ei.radius_bounds(bits).hi + ej.radius_bounds(bits).hi
        };
        num_hi = max_q(&num_hi, &v);
    }
    let bi = sys.derivative_bounds(i)?;
    let bj = sys.derivative_bounds(j)?;
    let den_lo = max_q(&norm_lower(sys, i, &bi)?, &norm_lower(sys, j, &bj)?);
    let den_hi = max_q(&bi.hi, &bj.hi);
    let lo = round_down(&(&num_lo / &den_hi), bits);
    let hi = round_up(&(&num_hi / &den_lo), bits);
    let delta = RationalInterval { lo: min_q(&lo, &hi), hi };
    let distinct = if delta.lo.is_positive() { Certified::True } else { Certified::Undecided };
    let lemma_c = grid_lemma_c(sys, i, j, &delta, &bi, &bj)?;
    Ok(IlcWitness { i: i.clone(), j: j.clone(), delta, distinct, lemma_c, lemma_c_certified: false })
}

/// Estimate of the lemma constant from a grid in V.
fn grid_lemma_c(sys: &IFSystem, i: &Word, j: &Word, delta: &RationalInterval, bi: &RationalInterval, bj: &RationalInterval) -> Result<Option<RationalScalar>> {
    if delta.lo.is_zero() {
        return Ok(None);
    }
    let mut fmin: Option<RationalScalar> = None;
    let mut fmax = RationalScalar::zero();
    for p in grid_points(&sys.v_domain, 16) {
        let d = (&sys.eval_word(i, &p)? - &sys.eval_word(j, &p)?).norm_sq();
        let v = sqrt_bounds(&d, 64).0;
        fmax = max_q(&fmax, &sqrt_bounds(&d, 64).1);
        fmin = Some(fmin.map(|f| min_q(&f, &v)).unwrap_or(v));
    }
    let fmin = match fmin {
        Some(f) if f.is_positive() => f,
        _ => return Ok(None),
    };
    let nmax = max_q(&bi.hi, &bj.hi);
    let nmin = min_q(&bi.lo, &bj.lo);
    if nmin.is_zero() {
        return Ok(None);
    }
    let c1 = &delta.hi * nmax / fmin;
    let c2 = fmax / (&delta.lo * nmin);
    Ok(Some(round_up(&max_q(&RationalScalar::one(), &max_q(&c1, &c2)), 64)))
}

/// Lower bound on the relative distance of every extension of (u, v).
fn generic_extension_bound(sys: &IFSystem, u: &Word, v: &Word, lambda_max: &RationalScalar) -> Result<RationalScalar> {
    let eu = sys.ball_image(u, &sys.f_hull)?;
    let ev = sys.ball_image(v, &sys.f_hull)?;
    let gap = if sys.dimension == 1 {
        let (a, b) = (eu.to_interval(), ev.to_interval());
        max_q(&RationalScalar::zero(), &max_q(&(&b.lo - &a.hi), &(&a.lo - &b.hi)))
    } else {
        let dc = sqrt_bounds(&eu.center.dist_sq(&ev.center), sys.bits).0;
        let g = dc - eu.radius_bounds(sys.bits).hi - ev.radius_bounds(sys.bits).hi;
        max_q(&RationalScalar::zero(), &g)
    };
    let nu = sys.derivative_bounds(u)?.hi;
    let nv = sys.derivative_bounds(v)?.hi;
    Ok(gap / (max_q(&nu, &nv) * lambda_max))
}

fn generic_search(sys: &IFSystem, opts: &IlcOptions) -> Result<IlcSearch> {
    let n = sys.n_maps();
    let mut out = empty_search(opts, "generic");
    let lambda_max = sys.max_letter_deriv();
    let mut level: Vec<(Word, Word)> = Vec::new();
    for x in 0..n {
        for y in x + 1..n {
            level.push((Word::letter(x as u8, n), Word::letter(y as u8, n)));
        }
    }
    for len in 1..=opts.max_len.min(sys.depth_cap.saturating_sub(2)) {
        out.states_examined += level.len();
        let evaluated: Vec<Result<(bool, Option<IlcWitness>)>> = level
            .par_iter()
            .map(|(u, v)| {
                if equivalence_of_restrictions(sys, u, v).is_true() {
                    return Ok((true, None));
                }
                Ok((false, Some(witness_for(sys, u, v)?)))
            })
            .collect();
        let mut best_here: Option<IlcWitness> = None;
        let mut alive = Vec::new();
        for ((u, v), r) in level.iter().zip(evaluated) {
            let (overlap, w) = r?;
            if overlap {
                out.exact_overlap_count += 1;
                if out.exact_overlaps.len() < 64 {
                    out.exact_overlaps.push((u.clone(), v.clone()));
                }
                continue;
            }
            let w = w.expect("non-overlap pairs carry a witness");
            if best_here.as_ref().map(|b| w.delta.hi < b.delta.hi).unwrap_or(true) {
                best_here = Some(w);
            }
            alive.push((u.clone(), v.clone()));
        }
        record_level(&mut out, best_here);
        if (opts.stop_at_target && out.reached_target) || len == opts.max_len {
            break;
        }
        let bound = out.best.as_ref().map(|b| b.delta.hi.clone());
        let kept: Vec<Result<Option<(Word, Word)>>> = alive
            .into_par_iter()
            .map(|(u, v)| {
                if let Some(b) = &bound {
                    if &generic_extension_bound(sys, &u, &v, &lambda_max)? >= b {
                        return Ok(None);
                    }
                }
                Ok(Some((u, v)))
            })
            .collect();
        let mut next = Vec::new();
        for k in kept {
            if let Some((u, v)) = k? {
                for x in 0..n as u8 {
                    for y in 0..n as u8 {
                        next.push((u.push(x), v.push(y)));
                    }
                }
            }
        }
        if next.len() > opts.budget {
            out.partial = true;
            break;
        }
        if next.is_empty() {
            break;
        }
        level = next;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::registry;

    #[test]
    fn cantor_ilc_bounded_away() {
        let sys = registry::load("cantor-1-3").unwrap();
        let s = ilc_search(&sys, 8, &rat(1, 20)).unwrap();
        let best = s.best.unwrap();
        // 1 vs 2 differ by the constant 2/3 at scale 1/3
        assert_eq!(best.delta, RationalInterval::point(int(2)));
        assert_eq!(best.lemma_c, Some(int(1)));
        assert!(!s.reached_target);
        assert_eq!(s.exact_overlap_count, 0);
    }

    #[test]
    fn beta_witness_by_length_five() {
        let sys = registry::load("beta-near-overlap").unwrap();
        let s = ilc_search(&sys, 6, &rat(1, 20)).unwrap();
        assert!(s.reached_target);
        let w = s.shortest_below(&rat(1, 20)).unwrap();
        assert_eq!(w.len(), 5);
        assert_eq!(w.delta, RationalInterval::point(rat(3475925, 100000000)));
    }

    #[test]
    fn triple_overlap_reported() {
        let sys = registry::load("triple-overlap").unwrap();
        let s = ilc_search(&sys, 3, &rat(1, 20)).unwrap();
        assert!(s.exact_overlap_count >= 1);
        assert_eq!(s.exact_overlaps[0], (Word::parse("1", 3).unwrap(), Word::parse("2", 3).unwrap()));
    }

    #[test]
    fn wsc_overlap_is_not_ilc_failure() {
        let sys = registry::load("wsc-example").unwrap();
        let s = ilc_search(&sys, 2, &rat(1, 20)).unwrap();
        assert!(s.exact_overlaps.contains(&(Word::parse("1", 3).unwrap(), Word::parse("3", 3).unwrap())));
        assert!(s.best.unwrap().delta.lo.is_positive());
    }
}
