use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::map::ConformalMap;
use crate::arith::*;
use crate::error::{Error, Result};
use crate::words::Word;

pub const DEFAULT_BITS: u32 = 128;
pub const DEFAULT_DEPTH_CAP: usize = 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistortionData {
    #[serde(with = "serde_q")]
    pub k: RationalScalar,
    #[serde(with = "serde_q")]
    pub k0: RationalScalar,
    #[serde(with = "serde_q")]
    pub alpha: RationalScalar,
    #[serde(with = "serde_q")]
    pub c: RationalScalar,
    #[serde(with = "serde_q")]
    pub holder_composed_c: RationalScalar,
}

/// A validated conformal iterated function system.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IFSystem {
    pub name: String,
    pub dimension: u8,
    pub maps: Vec<ConformalMap>,
    pub omega: EnclosureBall,
    pub v_domain: EnclosureBall,
    /// d of the invariant-domain construction (a quarter of the gap between the
    /// images of omega and its complement, or a rational lower bound of it).
    #[serde(with = "serde_q")]
    pub d_sep: RationalScalar,
    /// Closed ball or interval known to contain F, invariant under every map.
    pub f_hull: EnclosureBall,
    pub distortion: DistortionData,
    /// Range of |phi_i'| over V for each letter.
    pub letter_deriv: Vec<RationalInterval>,
    /// Exact points of F: fixed points and their images under words of length <= 2.
    pub base_sample: Vec<GaussianRational>,
    pub bits: u32,
    pub depth_cap: usize,
}

impl IFSystem {
    pub fn new(name: &str, maps: Vec<ConformalMap>, omega: EnclosureBall) -> Result<Self> {
        Self::with_options(name, maps, omega, DEFAULT_BITS, DEFAULT_DEPTH_CAP)
    }

    pub fn with_options(name: &str, maps: Vec<ConformalMap>, omega: EnclosureBall, bits: u32, depth_cap: usize) -> Result<Self> {
        if maps.len() < 2 {
            return Err(Error::InvalidSystem(format!("need at least 2 maps, got {}", maps.len())));
        }
        let dimension = omega.dimension;
        for (i, m) in maps.iter().enumerate() {
            m.check().map_err(|e| Error::InvalidSystem(format!("map {}: {e}", i + 1)))?;
            if m.kind.dimension() != dimension {
                return Err(Error::InvalidSystem(format!("map {} has dimension {} but omega has {}", i + 1, m.kind.dimension(), dimension)));
            }
        }
        let (v_domain, d_sep) = construct_invariant_domain(&maps, &omega)?;
        let letter_deriv = maps
            .iter()
            .enumerate()
            .map(|(i, m)| m.deriv_range_ball(&v_domain, bits).map_err(|e| Error::InvalidSystem(format!("map {}: {e}", i + 1))))
            .collect::<Result<Vec<_>>>()?;
        for (i, r) in letter_deriv.iter().enumerate() {
            if r.hi >= RationalScalar::one() {
                return Err(Error::InvalidSystem(format!("map {} is not a certified contraction on V (sup |phi'| <= {})", i + 1, fmt_rational(&r.hi))));
            }
            if !r.lo.is_positive() {
                return Err(Error::InvalidSystem(format!("map {} has vanishing derivative on V", i + 1)));
            }
        }
        let distortion = distortion_data(&maps, &v_domain, &d_sep, &letter_deriv, bits)?;
        let mut sys = Self {
            name: name.to_string(),
            dimension,
            maps,
            omega,
            f_hull: v_domain.clone(),
            v_domain,
            d_sep,
            distortion,
            letter_deriv,
            base_sample: Vec::new(),
            bits,
            depth_cap,
        };
        sys.f_hull = sys.attractor_hull()?;
        sys.base_sample = sys.compute_base_sample()?;
        Ok(sys)
    }

    pub fn n_maps(&self) -> usize {
        self.maps.len()
    }

    pub fn all_affine(&self) -> bool {
        self.maps.iter().all(|m| m.is_affine())
    }

    pub fn k(&self) -> &RationalScalar {
        &self.distortion.k
    }

    pub fn check_word(&self, w: &Word) -> Result<()> {
        if w.alphabet() != self.n_maps() {
            return Err(Error::Domain(format!("word over {} letters used with {} maps", w.alphabet(), self.n_maps())));
        }
        if w.len() > self.depth_cap {
            return Err(Error::DepthCap(self.depth_cap));
        }
        Ok(())
    }

    /// phi_w(z) = phi_{w1}(phi_{w2}(... phi_{wn}(z))).
    pub fn eval_word(&self, w: &Word, z: &GaussianRational) -> Result<GaussianRational> {
        let mut p = z.clone();
        for &s in w.symbols().iter().rev() {
            p = self.maps[s as usize].eval(&p)?;
        }
        Ok(p)
    }

    pub fn eval_word_real(&self, w: &Word, x: &RationalScalar) -> Result<RationalScalar> {
        Ok(self.eval_word(w, &GaussianRational::real(x.clone()))?.re)
    }

    /// Exact complex derivative of phi_w at z (chain rule).
    pub fn deriv_word_at(&self, w: &Word, z: &GaussianRational) -> Result<GaussianRational> {
        let mut p = z.clone();
        let mut acc = GaussianRational::one();
        for &s in w.symbols().iter().rev() {
            let m = &self.maps[s as usize];
            acc = &acc * &m.deriv(&p)?;
            p = m.eval(&p)?;
        }
        Ok(acc)
    }

    pub fn ball_image(&self, w: &Word, ball: &EnclosureBall) -> Result<EnclosureBall> {
        let mut b = ball.clone();
        for &s in w.symbols().iter().rev() {
            b = self.maps[s as usize].ball_image(&b)?;
        }
        Ok(b)
    }

    /// Certified range of |phi_w'| over the given set: product of per-letter
    /// ranges over the exact intermediate images.
    pub fn deriv_bounds_on(&self, w: &Word, set: &EnclosureBall) -> Result<RationalInterval> {
        let mut b = set.clone();
        let mut acc = RationalInterval::one();
        for &s in w.symbols().iter().rev() {
            let m = &self.maps[s as usize];
            let r = if m.is_affine() { self.letter_deriv[s as usize].clone() } else { m.deriv_range_ball(&b, self.bits)? };
            acc = acc.mul(&r);
            if !m.is_affine() && self.dimension == 2 {
                acc = acc.round_out(self.bits);
            }
            b = m.ball_image(&b)?;
        }
        Ok(acc)
    }

    /// Certified [inf_V |phi_w'|, ||phi_w'||] with V split into `pieces` parts
    /// (1-D only; the plane uses the whole disc).
    pub fn derivative_bounds_subdivided(&self, w: &Word, pieces: usize) -> Result<RationalInterval> {
        self.check_word(w)?;
        if pieces <= 1 || self.dimension == 2 || self.all_affine() {
            return self.deriv_bounds_on(w, &self.v_domain);
        }
        let v = self.v_domain.to_interval();
        let step = v.width() / int(pieces as i64);
        let mut out: Option<RationalInterval> = None;
        for k in 0..pieces {
            let lo = &v.lo + &step * int(k as i64);
            let hi = &lo + &step;
            let r = self.deriv_bounds_on(w, &EnclosureBall::interval(lo, hi))?;
            out = Some(match out {
                None => r,
                Some(o) => o.hull(&r),
            });
        }
        Ok(out.expect("pieces >= 1"))
    }

    pub fn derivative_bounds(&self, w: &Word) -> Result<RationalInterval> {
        self.derivative_bounds_subdivided(w, 1)
    }

    /// Smallest certified contraction bound over letters.
    pub fn max_letter_deriv(&self) -> RationalScalar {
        self.letter_deriv.iter().map(|r| r.hi.clone()).max().expect("N >= 2")
    }

    pub fn min_letter_deriv(&self) -> RationalScalar {
        self.letter_deriv.iter().map(|r| r.lo.clone()).min().expect("N >= 2")
    }

    /// Exact fixed points of words of length <= 2 lying in V.
    pub fn rational_fixed_points(&self) -> Vec<GaussianRational> {
        let mut pts: Vec<GaussianRational> = Vec::new();
        let mut push = |p: GaussianRational| {
            if !pts.contains(&p) {
                pts.push(p);
            }
        };
        let n = self.n_maps();
        for i in 0..n {
            for p in self.maps[i].rational_fixed_points() {
                if self.v_domain.contains_point(&p) {
                    push(p);
                }
            }
            for j in 0..n {
                let w = Word::new(vec![i as u8, j as u8], n);
                let cand = match self.maps[i].compose_mobius(&self.maps[j]) {
                    Some((a, b, c, d)) => ConformalMap { kind: self.maps[i].kind, a, b, c, d, perturbation: None }.rational_fixed_points(),
                    None => {
                        // affine part of the composition, verified below
                        let (ai, bi, aj, bj) = (&self.maps[i].a, &self.maps[i].b, &self.maps[j].a, &self.maps[j].b);
                        let a = ai * aj;
                        let b = &(ai * bj) + bi;
                        ConformalMap::affine_1d(a.re, b.re).rational_fixed_points()
                    }
                };
                for p in cand {
                    if self.v_domain.contains_point(&p) && self.eval_word(&w, &p).map(|q| q == p).unwrap_or(false) {
                        push(p);
                    }
                }
            }
            // perturbed letters: check the affine fixed point directly
            if self.maps[i].perturbation.is_some() {
                let m = &self.maps[i];
                let one = GaussianRational::one();
                if let Ok(p) = m.b.div(&(&one - &m.a)) {
                    if self.v_domain.contains_point(&p) && m.eval(&p).map(|q| q == p).unwrap_or(false) {
                        push(p);
                    }
                }
            }
        }
        pts
    }

    fn compute_base_sample(&self) -> Result<Vec<GaussianRational>> {
        let mut pts = self.rational_fixed_points();
        if pts.is_empty() {
            pts.push(self.f_hull.center.clone());
            for _ in 0..self.depth_cap.min(40) {
                pts[0] = self.maps[0].eval(&pts[0])?;
            }
        }
        let n = self.n_maps();
        let mut out: Vec<GaussianRational> = Vec::new();
        for p in &pts {
            for k in 0..=2 {
                for w in Word::all_of_length(n, k) {
                    let q = self.eval_word(&w, p)?;
                    if !out.contains(&q) {
                        out.push(q);
                    }
                }
            }
        }
        out.sort_by(|a, b| a.re.cmp(&b.re).then(a.im.cmp(&b.im)));
        Ok(out)
    }

    /// Invariant enclosure of F: hull of exact fixed points when that hull is
    /// mapped into itself, otherwise iterated images of V.
    fn attractor_hull(&self) -> Result<EnclosureBall> {
        let pts = self.rational_fixed_points();
        if !pts.is_empty() {
            let cand = if self.dimension == 1 {
                let lo = pts.iter().map(|p| p.re.clone()).min().unwrap();
                let hi = pts.iter().map(|p| p.re.clone()).max().unwrap();
                Some(EnclosureBall::interval(lo, hi))
            } else {
                let c = self.v_domain.center.clone();
                let r2 = pts.iter().map(|p| p.dist_sq(&c)).max().unwrap();
                Some(EnclosureBall { center: c, radius_sq: r2, dimension: 2 })
            };
            if let Some(b) = cand {
                let ok = self.maps.iter().all(|m| m.ball_image(&b).map(|img| b.contains_ball(&img).is_true()).unwrap_or(false));
                if ok && !b.radius_sq.is_zero() {
                    return Ok(b);
                }
            }
        }
        if self.dimension == 1 {
            let mut iv = self.v_domain.to_interval();
            for _ in 0..64 {
                let mut next: Option<RationalInterval> = None;
                for m in &self.maps {
                    let img = m.interval_image(&iv)?;
                    next = Some(next.map(|n| n.hull(&img)).unwrap_or(img));
                }
                let n = next.unwrap().round_out(self.bits);
                if n == iv {
                    break;
                }
                iv = n;
            }
            return Ok(EnclosureBall::from_interval(&iv));
        }
        Ok(self.v_domain.clone())
    }

    /// Certified bounds on diam(F).
    pub fn diam_f(&self) -> RationalInterval {
        let hi = self.f_hull.diameter_bounds(self.bits).hi;
        let pts = self.rational_fixed_points();
        let mut lo2 = RationalScalar::zero();
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let d = pts[i].dist_sq(&pts[j]);
                if d > lo2 {
                    lo2 = d;
                }
            }
        }
        let (lo, _) = sqrt_bounds(&lo2, self.bits);
        RationalInterval { lo, hi }
    }
}

/// V and d of the invariant-domain construction, with phi_i(closure V) inside V
/// certified for every map.
pub fn construct_invariant_domain(maps: &[ConformalMap], omega: &EnclosureBall) -> Result<(EnclosureBall, RationalScalar)> {
    if maps.len() < 2 {
        return Err(Error::InvalidSystem(format!("need at least 2 maps, got {}", maps.len())));
    }
    let images = maps
        .iter()
        .enumerate()
        .map(|(i, m)| m.ball_image(omega).map_err(|e| Error::InvalidSystem(format!("map {}: {e}", i + 1))))
        .collect::<Result<Vec<_>>>()?;
    let (v, d) = if omega.dimension == 1 {
        let om = omega.to_interval();
        let ivs: Vec<_> = images.iter().map(|b| b.to_interval()).collect();
        let lo = ivs.iter().map(|i| i.lo.clone()).min().unwrap();
        let hi = ivs.iter().map(|i| i.hi.clone()).max().unwrap();
        let gap = min_q(&(&lo - &om.lo), &(&om.hi - &hi));
        if !gap.is_positive() {
            let i = ivs.iter().position(|iv| iv.lo <= om.lo || iv.hi >= om.hi).unwrap_or(0);
            return Err(Error::InvalidSystem(format!("map {}: closure of its image of omega is not inside omega", i + 1)));
        }
        let d = gap / int(4);
        (EnclosureBall::interval(&lo - &d, &hi + &d), d)
    } else {
        let r = omega.radius_exact().unwrap_or_else(|| omega.radius_bounds(128).lo);
        let mut gap: Option<RationalScalar> = None;
        for (i, b) in images.iter().enumerate() {
            let dc = RationalInterval::point(b.center.dist_sq(&omega.center)).sqrt(128)?;
            let rb = b.radius_exact().map(RationalInterval::point).unwrap_or_else(|| b.radius_bounds(128));
            let g = &r - &dc.hi - &rb.hi;
            if !g.is_positive() {
                return Err(Error::InvalidSystem(format!("map {}: closure of its image of omega is not inside omega", i + 1)));
            }
            gap = Some(gap.map(|x| min_q(&x, &g)).unwrap_or(g));
        }
        let d = gap.unwrap() / int(4);
        let rv = &r - &d * int(2);
        (EnclosureBall::disc(omega.center.clone(), &rv), d)
    };
    for (i, m) in maps.iter().enumerate() {
        let img = m.ball_image(&v).map_err(|e| Error::InvalidSystem(format!("map {}: {e}", i + 1)))?;
        let inside = if v.dimension == 1 {
            let (a, b) = (img.to_interval(), v.to_interval());
            a.lo > b.lo && a.hi < b.hi
        } else {
            // strict: shrink V slightly before testing
            let tight = EnclosureBall { radius_sq: &v.radius_sq - &d * &d, ..v.clone() };
            tight.contains_ball(&img).is_true()
        };
        if !inside {
            return Err(Error::InvalidSystem(format!("map {}: phi(closure V) not certified inside V", i + 1)));
        }
    }
    Ok((v, d))
}

fn distortion_data(
    maps: &[ConformalMap],
    v: &EnclosureBall,
    d: &RationalScalar,
    letter_deriv: &[RationalInterval],
    bits: u32,
) -> Result<DistortionData> {
    let alpha = RationalScalar::one();
    let mut c = RationalScalar::zero();
    let mut ratio = RationalScalar::zero();
    for (m, r) in maps.iter().zip(letter_deriv) {
        let cj = m.second_deriv_bound(v, bits)?;
        let q = &cj / &r.lo;
        if q > ratio {
            ratio = q;
        }
        if cj > c {
            c = cj;
        }
    }
    let rho = letter_deriv.iter().map(|r| r.hi.clone()).max().unwrap();
    let diam_v = v.diameter_bounds(bits).hi;
    // log K0 <= diam(V)^alpha * max_j(c_j / m_j) * sum_k rho^(alpha k)
    let k0 = if ratio.is_zero() {
        RationalScalar::one()
    } else {
        let expo = &diam_v * &ratio / (RationalScalar::one() - &rho);
        round_up(&exp_point(&expo, bits).hi, 64)
    };
    let k = if v.dimension == 1 {
        k0.clone()
    } else {
        let f = &diam_v / d;
        if f > RationalScalar::one() && !ratio.is_zero() {
            &k0 * f
        } else {
            k0.clone()
        }
    };
    let holder_composed_c = &c * &k * &k / (RationalScalar::one() - &rho);
    Ok(DistortionData { k, k0, alpha, c, holder_composed_c })
}

/// Result of sampling the Hölder bound for composed derivatives.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HolderCheck {
    pub word: String,
    pub pairs: usize,
    pub max_ratio: f64,
    #[serde(with = "serde_q")]
    pub bound: RationalScalar,
    pub pass: bool,
}

/// Samples |phi_w'(x) - phi_w'(y)| / (||phi_w'|| |x - y|^alpha) over pairs in V.
pub fn holder_composed_check(sys: &IFSystem, w: &Word, sample_pairs: usize) -> Result<HolderCheck> {
    sys.check_word(w)?;
    let norm = sys.derivative_bounds(w)?;
    let pts = grid_points(&sys.v_domain, sample_pairs.max(2));
    let mut max_ratio = RationalScalar::zero();
    let mut count = 0;
    let step = (pts.len() / sample_pairs.max(1)).max(1);
    for (k, x) in pts.iter().enumerate() {
        let y = &pts[(k * 7 + step) % pts.len()];
        if x == y {
            continue;
        }
        let dx = sys.deriv_word_at(w, x)?;
        let dy = sys.deriv_word_at(w, y)?;
        let num2 = dx.dist_sq(&dy);
        let den2 = x.dist_sq(y);
        // alpha = 1: compare squares to stay exact
        let r2 = num2 / (den2 * &norm.lo * &norm.lo);
        if r2 > max_ratio {
            max_ratio = r2;
        }
        count += 1;
        if count >= sample_pairs {
            break;
        }
    }
    let bound = sys.distortion.holder_composed_c.clone();
    let pass = max_ratio <= &bound * &bound;
    Ok(HolderCheck { word: w.to_string(), pairs: count, max_ratio: to_f64(&max_ratio).sqrt(), bound, pass })
}

/// Deterministic grid of points inside a ball (interior of V).
pub fn grid_points(ball: &EnclosureBall, n: usize) -> Vec<GaussianRational> {
    let r = ball.radius_exact().unwrap_or_else(|| ball.radius_bounds(64).lo);
    let c = &ball.center;
    if ball.dimension == 1 {
        let n = n.max(2) as i64;
        return (0..n).map(|k| GaussianRational::real(&c.re - &r + &r * rat(2 * k + 1, n))).collect();
    }
    let side = ((n as f64).sqrt().ceil() as i64).max(2);
    let mut out = Vec::new();
    for i in 0..side {
        for j in 0..side {
            let x = &c.re - &r + &r * rat(2 * i + 1, side);
            let y = &c.im - &r + &r * rat(2 * j + 1, side);
            let p = GaussianRational::new(x, y);
            // keep points strictly inside, scaled by 0.99 toward the centre
            let p = &(&p - c).scale(&rat(99, 100)) + c;
            if ball.center.dist_sq(&p) < ball.radius_sq {
                out.push(p);
            }
        }
    }
    out
}
