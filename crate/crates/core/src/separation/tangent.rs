use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::ilc::{IlcSearch, IlcWitness};
use crate::arith::*;
use crate::error::{Error, Result};
use crate::ifs::IFSystem;
use crate::report::RunStatus;
use crate::words::Word;

const MAX_POWER: usize = 400;

/// M_{x,r}(z) = (z - x) / r.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Magnification {
    #[serde(with = "serde_q")]
    pub x: RationalScalar,
    #[serde(with = "serde_q")]
    pub r: RationalScalar,
}

impl Magnification {
    pub fn new(x: RationalScalar, r: RationalScalar) -> Result<Self> {
        if !r.is_positive() {
            return Err(Error::Domain("magnification radius must be positive".into()));
        }
        Ok(Self { x, r })
    }

    /// The magnification taking lo to -1 and hi to 1.
    pub fn onto_unit(lo: &RationalScalar, hi: &RationalScalar) -> Result<Self> {
        Self::new((lo + hi) / int(2), (hi - lo) / int(2))
    }

    pub fn apply(&self, z: &RationalScalar) -> RationalScalar {
        (z - &self.x) / &self.r
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TangentStage {
    pub k: usize,
    /// Words after orientation correction: i = i'i', j = i'j', phi_i > phi_j on V.
    pub i: Word,
    pub j: Word,
    pub source: IlcWitness,
    /// Padding word k_k = k^p.
    pub pad: Word,
    pub power: usize,
    /// Stage met the strict threshold of the construction.
    pub strict: bool,
    #[serde(with = "serde_q")]
    pub threshold: RationalScalar,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TangentReport {
    pub n: usize,
    pub feasible: bool,
    #[serde(with = "serde_q")]
    pub k_const: RationalScalar,
    #[serde(with = "serde_q")]
    pub c_const: RationalScalar,
    #[serde(with = "serde_q")]
    pub d_const: RationalScalar,
    /// 8 D^2.
    #[serde(with = "serde_q")]
    pub d_prime: RationalScalar,
    #[serde(with = "serde_q")]
    pub eps: RationalScalar,
    pub base_word: Option<Word>,
    pub stages: Vec<TangentStage>,
    pub strict_stages: usize,
    pub h_words: Vec<Word>,
    #[serde(with = "serde_q_opt")]
    pub x0: Option<RationalScalar>,
    /// x_1, ..., x_n.
    #[serde(with = "serde_q_vec")]
    pub points: Vec<RationalScalar>,
    pub magnification: Option<Magnification>,
    #[serde(with = "serde_q_vec")]
    pub normalized: Vec<RationalScalar>,
    /// M(x_k) - M(x_{k+1}) for k = 1..n-1.
    #[serde(with = "serde_q_vec")]
    pub gaps: Vec<RationalScalar>,
    #[serde(with = "serde_q")]
    pub max_gap: RationalScalar,
    /// d_prime / (n + 1).
    #[serde(with = "serde_q")]
    pub gap_bound: RationalScalar,
    pub monotone: bool,
    pub endpoints_exact: bool,
    pub in_enclosures: bool,
    pub certified: bool,
    pub status: RunStatus,
}

impl TangentReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,x_k,normalized,gap\n");
        for (k, p) in self.points.iter().enumerate() {
            let gap = self.gaps.get(k).map(fmt_rational).unwrap_or_default();
            let m = self.normalized.get(k).map(fmt_rational).unwrap_or_default();
            s.push_str(&format!("{},{},{},{}\n", k + 1, fmt_rational(p), m, gap));
        }
        s
    }
}

/// Bounds for |phi_w'| on V; words past the length cap are split into chunks
/// whose bounds multiply by the chain rule.
fn deriv_bounds(sys: &IFSystem, w: &Word) -> Result<RationalInterval> {
    if w.len() <= sys.depth_cap {
        return sys.derivative_bounds(w);
    }
    let mut acc = RationalInterval::one();
    for chunk in w.symbols().chunks(sys.depth_cap) {
        let b = sys.derivative_bounds(&Word::new(chunk.to_vec(), sys.n_maps()))?;
        acc = acc.mul(&b);
    }
    Ok(acc)
}

fn norm(sys: &IFSystem, w: &Word) -> Result<RationalScalar> {
    Ok(deriv_bounds(sys, w)?.hi)
}

fn positive_deriv(sys: &IFSystem, w: &Word) -> Result<bool> {
    Ok(sys.deriv_word_at(w, &sys.v_domain.center)?.re.is_positive())
}

/// Positive-derivative word of length 2 with the largest norm, first in
/// lexicographic order among ties.
fn base_word(sys: &IFSystem) -> Result<Word> {
    let mut best: Option<(RationalScalar, Word)> = None;
    for w in Word::all_of_length(sys.n_maps(), 2) {
        if !positive_deriv(sys, &w)? {
            continue;
        }
        let nv = norm(sys, &w)?;
        if best.as_ref().map(|(b, _)| &nv > b).unwrap_or(true) {
            best = Some((nv, w));
        }
    }
    best.map(|(_, w)| w).ok_or_else(|| Error::Degenerate("no positive word of length 2".into()))
}

/// D = K^11 C / (diam(F) min_{Sigma_2} ||phi'||), upper bound.
fn d_constant(sys: &IFSystem, c: &RationalScalar) -> Result<RationalScalar> {
    let k = sys.k().clone();
    let diam = sys.diam_f();
    let mut m: Option<RationalScalar> = None;
    for w in Word::all_of_length(sys.n_maps(), 2) {
        let lo = sys.derivative_bounds(&w)?.lo;
        m = Some(m.map(|x| min_q(&x, &lo)).unwrap_or(lo));
    }
    let m = m.expect("N >= 2");
    if !m.is_positive() || !diam.lo.is_positive() {
        return Err(Error::Degenerate("D is unbounded".into()));
    }
    Ok(powi(&k, 11) * c / (diam.lo * m))
}

/// Largest dyadic eps = 2^-e below diam/(4KC) with (1+2D eps)^(n-1) <= 2 and
/// (1-2D eps)^(n-1) >= 1/2.
fn choose_eps(sys: &IFSystem, c: &RationalScalar, d: &RationalScalar, n: usize) -> RationalScalar {
    let cap = &sys.diam_f().lo / (int(4) * sys.k() * c);
    let e = (n.saturating_sub(1)) as u32;
    let ok = |eps: &RationalScalar| {
        let t = int(2) * d * eps;
        eps < &cap && powi(&(RationalScalar::one() + &t), e) <= int(2) && {
            let m = RationalScalar::one() - &t;
            m.is_positive() && powi(&m, e) >= rat(1, 2)
        }
    };
    // bisection on the exponent first, then on the mantissa at 16 bits
    let mut k = 0i64;
    while !ok(&pow2(-k)) {
        k += 1;
    }
    let (mut lo, mut hi) = (pow2(-k), pow2(1 - k));
    for _ in 0..16 {
        let mid = (&lo + &hi) / int(2);
        if ok(&mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Orientation correction: i = i'i', j = i'j', relabelled so phi_i > phi_j on V.
fn orient(sys: &IFSystem, w: &IlcWitness) -> Result<(Word, Word)> {
    let i = w.i.concat(&w.i);
    let j = w.i.concat(&w.j);
    let p = &sys.v_domain.center;
    let a = sys.eval_word(&i, p)?.re;
    let b = sys.eval_word(&j, p)?.re;
    Ok(if a > b { (i, j) } else { (j, i) })
}

fn minimal_power(sys: &IFSystem, k: &Word, a: &RationalScalar, b: &RationalScalar) -> Result<usize> {
    let mut p = 0;
    let mut w = Word::empty(sys.n_maps());
    while a * norm(sys, &w)? >= *b {
        p += 1;
        if p > MAX_POWER {
            return Err(Error::Budget(format!("padding power above {MAX_POWER}")));
        }
        w = w.concat(k);
    }
    Ok(p)
}

fn infeasible(n: usize, k: RationalScalar, c: RationalScalar, d: RationalScalar, eps: RationalScalar) -> TangentReport {
    let d_prime = int(8) * &d * &d;
    TangentReport {
        n,
        feasible: false,
        k_const: k,
        c_const: c,
        gap_bound: &d_prime / int(n as i64 + 1),
        d_const: d,
        d_prime,
        eps,
        base_word: None,
        stages: Vec::new(),
        strict_stages: 0,
        h_words: Vec::new(),
        x0: None,
        points: Vec::new(),
        magnification: None,
        normalized: Vec::new(),
        gaps: Vec::new(),
        max_gap: RationalScalar::zero(),
        monotone: false,
        endpoints_exact: false,
        in_enclosures: false,
        certified: false,
        status: RunStatus::Partial,
    }
}

/// Points x_n < ... < x_1 of F whose magnification onto [-1,1] has gaps of
/// order 1/n, built from ILC-failure witnesses.
pub fn build_weak_tangent(sys: &IFSystem, search: &IlcSearch, n: usize) -> Result<TangentReport> {
    if sys.dimension != 1 {
        return Err(Error::Domain("weak tangents are built on the line only".into()));
    }
    if n < 2 {
        return Err(Error::Domain("n must be at least 2".into()));
    }
    let mut c = RationalScalar::one();
    let mut report = build_with(sys, search, n, &c)?;
    for _ in 0..4 {
        let used = report.stages.iter().filter_map(|s| s.source.lemma_c.clone()).max();
        match used {
            Some(u) if u > c => {
                c = u;
                report = build_with(sys, search, n, &c)?;
            }
            _ => break,
        }
    }
    Ok(report)
}

fn usable(w: &IlcWitness, c: &RationalScalar) -> bool {
    w.delta.lo.is_positive() && w.lemma_c.as_ref().map(|lc| lc <= c).unwrap_or(false)
}

fn build_with(sys: &IFSystem, search: &IlcSearch, n: usize, c: &RationalScalar) -> Result<TangentReport> {
    let k_const = sys.k().clone();
    let d = d_constant(sys, c)?;
    let eps = choose_eps(sys, c, &d, n);
    let first = search.best_by_len.iter().flatten().find(|w| w.delta.hi < eps && usable(w, c)).cloned();
    let first = match first {
        Some(w) => w,
        None => return Ok(infeasible(n, k_const, c.clone(), d, eps)),
    };
    // fallback for later stages when no witness meets the strict threshold
    let relaxed = search.best_by_len.iter().flatten().filter(|w| usable(w, c)).min_by(|a, b| a.delta.hi.cmp(&b.delta.hi)).cloned().expect("first is usable");
    let kw = base_word(sys)?;
    let nm = sys.n_maps();
    let mut stages: Vec<TangentStage> = Vec::new();
    // tail = j_{k-1} k_{k-1} ... j_1 k_1
    let mut tail = Word::empty(nm);
    for k in 1..=n {
        let k2 = &k_const * &k_const;
        let threshold = if k == 1 { eps.clone() } else { &eps / &k2 * deriv_bounds(sys, &tail)?.lo };
        let (src, strict) = if k == 1 {
            (first.clone(), true)
        } else {
            match search.best_by_len.iter().flatten().find(|w| w.delta.hi < threshold && usable(w, c)) {
                Some(w) => (w.clone(), true),
                None => (relaxed.clone(), false),
            }
        };
        let (i, j) = orient(sys, &src)?;
        let a = &eps * norm(sys, &i.concat(&tail))?;
        let b = &src.delta.lo * norm(sys, &i)?;
        let p = minimal_power(sys, &kw, &a, &b)?;
        let pad = kw.pow(p);
        tail = j.concat(&pad).concat(&tail);
        stages.push(TangentStage { k, i, j, source: src, pad, power: p, strict, threshold });
    }
    // h_k = i_n k_n ... i_k k_k j_{k-1} k_{k-1} ... j_1 k_1
    let mut h_words = Vec::with_capacity(n);
    for k in 1..=n {
        let mut w = Word::empty(nm);
        for s in stages.iter().rev() {
            let head = if s.k >= k { &s.i } else { &s.j };
            w = w.concat(head).concat(&s.pad);
        }
        h_words.push(w);
    }
    let x0 = sys.base_sample.first().map(|p| p.re.clone()).ok_or_else(|| Error::Degenerate("empty base sample".into()))?;
    let mut points = Vec::with_capacity(n);
    let mut in_enclosures = true;
    let hull = sys.f_hull.to_interval();
    for h in &h_words {
        let x = eval_unchecked(sys, h, &x0)?;
        let lo = eval_unchecked(sys, h, &hull.lo)?;
        let hi = eval_unchecked(sys, h, &hull.hi)?;
        in_enclosures &= RationalInterval::hull2(lo, hi).contains(&x);
        points.push(x);
    }
    let monotone = points.windows(2).all(|w| w[0] > w[1]);
    let strict_stages = stages.iter().filter(|s| s.strict).count();
    let d_prime = int(8) * &d * &d;
    let gap_bound = &d_prime / int(n as i64 + 1);
    let (magnification, normalized, gaps, max_gap, endpoints_exact) = if points[0] != points[n - 1] {
        let (lo, hi) = (min_q(&points[0], &points[n - 1]), max_q(&points[0], &points[n - 1]));
        let m = Magnification::onto_unit(&lo, &hi)?;
        let normalized: Vec<_> = points.iter().map(|p| m.apply(p)).collect();
        let gaps: Vec<_> = normalized.windows(2).map(|w| &w[0] - &w[1]).collect();
        let max_gap = gaps.iter().max().cloned().unwrap_or_else(RationalScalar::zero);
        let exact = normalized[n - 1] == int(-1) && normalized[0] == int(1);
        (Some(m), normalized, gaps, max_gap, exact)
    } else {
        (None, Vec::new(), Vec::new(), RationalScalar::zero(), false)
    };
    let certified = strict_stages == n && monotone && endpoints_exact && in_enclosures && max_gap <= gap_bound;
    let status = if certified {
        RunStatus::Certified
    } else if monotone && endpoints_exact {
        RunStatus::Partial
    } else {
        RunStatus::Invalid
    };
    Ok(TangentReport {
        n,
        feasible: true,
        k_const,
        c_const: c.clone(),
        d_const: d,
        d_prime,
        eps,
        base_word: Some(kw),
        stages,
        strict_stages,
        h_words,
        x0: Some(x0),
        points,
        magnification,
        normalized,
        gaps,
        max_gap,
        gap_bound,
        monotone,
        endpoints_exact,
        in_enclosures,
        certified,
        status,
    })
}

/// Real evaluation without the word-length cap; the tangent words grow with n.
fn eval_unchecked(sys: &IFSystem, w: &Word, x: &RationalScalar) -> Result<RationalScalar> {
    let mut y = x.clone();
    for &s in w.symbols().iter().rev() {
        y = sys.maps[s as usize].eval(&GaussianRational::real(y))?.re;
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::registry;
    use crate::separation::ilc_search;

    #[test]
    fn magnification_maps_endpoints() {
        let m = Magnification::onto_unit(&rat(1, 3), &rat(2, 3)).unwrap();
        assert_eq!(m.apply(&rat(1, 3)), int(-1));
        assert_eq!(m.apply(&rat(2, 3)), int(1));
        assert_eq!(m.apply(&rat(1, 2)), int(0));
        assert!(Magnification::new(int(0), int(0)).is_err());
    }

    #[test]
    fn constants_for_ternary_systems() {
        let sys = registry::load("beta-near-overlap").unwrap();
        let d = d_constant(&sys, &int(1)).unwrap();
        assert_eq!(d, int(9));
        let eps = choose_eps(&sys, &int(1), &d, 4);
        // (1 - 18 eps)^3 >= 1/2 binds: eps <= (1 - 2^(-1/3)) / 18 ~ 0.011465
        assert!(eps < rat(11466, 1000000) && eps > rat(11400, 1000000));
    }

    #[test]
    fn cantor_tangent_infeasible() {
        let sys = registry::load("cantor-1-3").unwrap();
        let s = ilc_search(&sys, 8, &rat(1, 100)).unwrap();
        let t = build_weak_tangent(&sys, &s, 4).unwrap();
        assert!(!t.feasible);
        assert!(!t.certified);
    }

    #[test]
    fn beta_tangent_endpoints() {
        let sys = registry::load("beta-near-overlap").unwrap();
        let s = ilc_search(&sys, 13, &rat(1, 100)).unwrap();
        let t = build_weak_tangent(&sys, &s, 4).unwrap();
        assert!(t.feasible);
        assert!(t.monotone);
        assert!(t.endpoints_exact);
        assert!(t.max_gap <= t.gap_bound);
    }
}
