use num_traits::Signed;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::arith::*;
use crate::attractor::cylinder_diam;
use crate::error::{Error, Result};
use crate::ifs::{grid_points, IFSystem};
use crate::words::{DiameterSource, Word};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountMode {
    /// Phi(x,r): classes of restrictions phi_w|F.
    Restricted,
    /// Phi*(x,r): classes of global maps phi_w.
    Unrestricted,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeparationCount {
    pub x: GaussianRational,
    #[serde(with = "serde_q")]
    pub r: RationalScalar,
    pub mode: CountMode,
    /// Number of distinct map classes among the meeting cut words.
    pub phi_count: usize,
    /// Number of cut words whose cylinder meets B(x,r).
    pub sigma_count: usize,
    /// Cut words whose enclosure meets the ball but for which neither a point
    /// of F in the ball nor disjointness could be certified.
    pub ambiguous: usize,
    /// One representative word per class.
    pub witnesses: Vec<Word>,
    pub class_sizes: Vec<usize>,
    /// True when distinct classes are certified distinct (otherwise phi_count
    /// is a certified lower bound).
    pub classes_exact: bool,
    pub x_near_f: Certified,
    pub words_examined: usize,
}

/// Map key used to group words: exact normalised coefficients, or the images of
/// a fixed probe set when a perturbed letter is involved.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RestrictionKey {
    Coefficients(Vec<(RationalScalar, RationalScalar)>),
    Signature(Vec<(RationalScalar, RationalScalar)>),
}

fn pair(z: &GaussianRational) -> (RationalScalar, RationalScalar) {
    (z.re.clone(), z.im.clone())
}

/// Composed Möbius coefficients of phi_w, normalised by d (or c when d = 0).
fn coefficient_key(sys: &IFSystem, w: &Word) -> Option<Vec<(RationalScalar, RationalScalar)>> {
    let one = GaussianRational::one();
    let zero = GaussianRational::zero();
    let (mut a, mut b, mut c, mut d) = (one.clone(), zero.clone(), zero, one);
    for &s in w.symbols() {
        let m = &sys.maps[s as usize];
        if m.perturbation.is_some() {
            return None;
        }
        let na = &(&a * &m.a) + &(&b * &m.c);
        let nb = &(&a * &m.b) + &(&b * &m.d);
        let nc = &(&c * &m.a) + &(&d * &m.c);
        let nd = &(&c * &m.b) + &(&d * &m.d);
        (a, b, c, d) = (na, nb, nc, nd);
    }
    let n = if !d.is_zero() { d.clone() } else { c.clone() };
    let v = [a, b, c, d].iter().map(|z| pair(&z.div(&n).expect("n != 0"))).collect();
    Some(v)
}

/// Representative letter for every letter: letters with equal restrictions to F
/// share the smallest index. A perturbed letter matches an affine one when the
/// affine parts agree and the open support of the perturbation misses all
/// cylinder intervals at some depth <= 4.
pub fn letter_equivalences(sys: &IFSystem) -> Vec<u8> {
    let n = sys.n_maps();
    let keys: Vec<Option<Vec<(RationalScalar, RationalScalar)>>> = (0..n)
        .map(|i| {
            let m = &sys.maps[i];
            match &m.perturbation {
                None => coefficient_key(sys, &Word::letter(i as u8, n)),
                Some(g) if sys.dimension == 1 && perturbation_vanishes_on_f(sys, g.support()) => {
                    Some(vec![pair(&m.a), pair(&m.b), pair(&m.c), pair(&m.d)])
                }
                Some(_) => None,
            }
        })
        .collect();
    (0..n)
        .map(|i| match &keys[i] {
            None => i as u8,
            Some(k) => (0..i).find(|&j| keys[j].as_ref() == Some(k)).unwrap_or(i) as u8,
        })
        .collect()
}

fn perturbation_vanishes_on_f(sys: &IFSystem, support: RationalInterval) -> bool {
    let n = sys.n_maps();
    (1..=4).any(|depth| {
        Word::all_of_length(n, depth).iter().all(|w| match crate::attractor::cylinder_interval(sys, w) {
            Ok(iv) => iv.hi <= support.lo || iv.lo >= support.hi,
            Err(_) => false,
        })
    })
}

fn canonical(w: &Word, canon: &[u8]) -> Word {
    Word::new(w.symbols().iter().map(|&s| canon[s as usize]).collect(), w.alphabet())
}

fn has_perturbed(sys: &IFSystem, w: &Word) -> bool {
    w.symbols().iter().any(|&s| sys.maps[s as usize].perturbation.is_some())
}

fn enough_points(sys: &IFSystem) -> bool {
    let need = if sys.all_affine() { 2 } else { 3 };
    sys.base_sample.len() >= need
}

/// Points separating distinct global maps that involve a perturbed letter:
/// a grid in V, the base sample, and pull-backs of the perturbation pieces.
fn probe_points(sys: &IFSystem, max_len: usize) -> Vec<GaussianRational> {
    let mut pts = grid_points(&sys.v_domain, 8);
    pts.extend(sys.base_sample.iter().cloned());
    for m in &sys.maps {
        if let Some(g) = &m.perturbation {
            for k in 0..g.pieces.len() {
                let mid = (&g.breakpoints[k] + &g.breakpoints[k + 1]) / int(2);
                let mut s = mid;
                for _ in 0..=max_len {
                    pts.push(GaussianRational::real(s.clone()));
                    s = &s / &m.a.re;
                }
            }
        }
    }
    pts
}

fn signature(sys: &IFSystem, w: &Word, pts: &[GaussianRational]) -> Result<Vec<(RationalScalar, RationalScalar)>> {
    pts.iter().map(|p| sys.eval_word(w, p).map(|q| pair(&q))).collect()
}

/// Grouping key of a word in the given mode; the flag says whether different
/// keys certify different maps.
pub fn restriction_key(sys: &IFSystem, w: &Word, mode: CountMode, canon: &[u8], probes: &[GaussianRational]) -> Result<(RestrictionKey, bool)> {
    match mode {
        CountMode::Restricted => {
            let c = canonical(w, canon);
            match coefficient_key(sys, &c) {
                Some(k) => Ok((RestrictionKey::Coefficients(k), enough_points(sys))),
                None => Ok((RestrictionKey::Signature(signature(sys, &c, &sys.base_sample)?), false)),
            }
        }
        CountMode::Unrestricted => match coefficient_key(sys, w) {
            Some(k) => Ok((RestrictionKey::Coefficients(k), true)),
            None => Ok((RestrictionKey::Signature(signature(sys, w, probes)?), false)),
        },
    }
}

/// Certified answer to phi_i|F = phi_j|F.
pub fn equivalence_of_restrictions(sys: &IFSystem, i: &Word, j: &Word) -> Certified {
    if i == j {
        return Certified::True;
    }
    let canon = letter_equivalences(sys);
    let (ci, cj) = (canonical(i, &canon), canonical(j, &canon));
    if ci == cj {
        return Certified::True;
    }
    if let (Some(ki), Some(kj)) = (coefficient_key(sys, &ci), coefficient_key(sys, &cj)) {
        if ki == kj {
            return Certified::True;
        }
        if enough_points(sys) {
            return Certified::False;
        }
    }
    for p in &sys.base_sample {
        match (sys.eval_word(i, p), sys.eval_word(j, p)) {
            (Ok(a), Ok(b)) if a != b => return Certified::False,
            (Ok(_), Ok(_)) => {}
            _ => return Certified::Undecided,
        }
    }
    Certified::Undecided
}

fn enclosure(sys: &IFSystem, w: &Word) -> Result<EnclosureBall> {
    sys.ball_image(w, &sys.f_hull)
}

fn sample_witness(sys: &IFSystem, w: &Word, ball: &EnclosureBall) -> Result<bool> {
    for p in &sys.base_sample {
        if ball.contains_point(&sys.eval_word(w, p)?) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Does phi_w(F) meet the ball? Looks for a point of F inside, a sub-cylinder
/// certainly inside, or disjointness of all sub-cylinders a few levels down.
fn meets(sys: &IFSystem, w: &Word, ball: &EnclosureBall) -> Result<Certified> {
    if sample_witness(sys, w, ball)? {
        return Ok(Certified::True);
    }
    let n = sys.n_maps();
    let mut frontier = vec![w.clone()];
    let mut budget = 4096usize;
    for _ in 0..6 {
        let mut next = Vec::new();
        for u in &frontier {
            for s in 0..n as u8 {
                let v = u.push(s);
                let e = enclosure(sys, &v)?;
                match ball.intersects(&e) {
                    Certified::False => continue,
                    _ => {
                        if ball.contains_ball(&e).is_true() || sample_witness(sys, &v, ball)? {
                            return Ok(Certified::True);
                        }
                        next.push(v);
                    }
                }
            }
        }
        if next.is_empty() {
            return Ok(Certified::False);
        }
        if next.len() > budget {
            break;
        }
        budget -= next.len();
        frontier = next;
    }
    Ok(Certified::Undecided)
}

fn query_ball(sys: &IFSystem, x: &GaussianRational, r: &RationalScalar) -> Result<EnclosureBall> {
    if !r.is_positive() {
        return Err(Error::Domain("radius must be positive".into()));
    }
    if sys.dimension == 1 {
        if !x.is_real() {
            return Err(Error::Domain("1-D system queried at a complex point".into()));
        }
        Ok(EnclosureBall::interval(&x.re - r, &x.re + r))
    } else {
        Ok(EnclosureBall::disc(x.clone(), r))
    }
}

/// #Phi(x,r) (restricted) or #Phi*(x,r) (unrestricted) over the generation cut
/// at r, computed against the enclosure diameter.
pub fn count_phi(sys: &IFSystem, x: &GaussianRational, r: &RationalScalar, mode: CountMode) -> Result<SeparationCount> {
    let ball = query_ball(sys, x, r)?;
    let n = sys.n_maps();
    let mut meeting: Vec<Word> = Vec::new();
    let mut ambiguous = 0usize;
    let mut examined = 0usize;
    let mut stack: Vec<Word> = (0..n as u8).rev().map(|s| Word::letter(s, n)).collect();
    while let Some(w) = stack.pop() {
        examined += 1;
        let e = enclosure(sys, &w)?;
        if ball.intersects(&e).is_false() {
            continue;
        }
        let d = cylinder_diam(sys, &w, DiameterSource::EnclosureUpper)?;
        if &d <= r {
            match meets(sys, &w, &ball)? {
                Certified::True => meeting.push(w),
                Certified::False => {}
                Certified::Undecided => ambiguous += 1,
            }
        } else {
            if w.len() >= sys.depth_cap {
                return Err(Error::DepthCap(sys.depth_cap));
            }
            for s in (0..n as u8).rev() {
                stack.push(w.push(s));
            }
        }
    }
    let canon = letter_equivalences(sys);
    let max_len = meeting.iter().map(|w| w.len()).max().unwrap_or(0);
    let probes = if mode == CountMode::Unrestricted && meeting.iter().any(|w| has_perturbed(sys, w)) {
        probe_points(sys, max_len)
    } else {
        Vec::new()
    };
    let mut classes: BTreeMap<RestrictionKey, Vec<Word>> = BTreeMap::new();
    let mut exact = true;
    for w in &meeting {
        let (k, ex) = restriction_key(sys, w, mode, &canon, &probes)?;
        exact &= ex;
        classes.entry(k).or_default().push(w.clone());
    }
    let mut groups: Vec<Vec<Word>> = classes.into_values().collect();
    groups.sort_by(|a, b| a[0].cmp(&b[0]));
    let x_near_f = if !meeting.is_empty() {
        Certified::True
    } else if ambiguous == 0 {
        Certified::False
    } else {
        Certified::Undecided
    };
    Ok(SeparationCount {
        x: x.clone(),
        r: r.clone(),
        mode,
        phi_count: groups.len(),
        sigma_count: meeting.len(),
        ambiguous,
        witnesses: groups.iter().map(|g| g[0].clone()).collect(),
        class_sizes: groups.iter().map(|g| g.len()).collect(),
        classes_exact: exact,
        x_near_f,
        words_examined: examined,
    })
}

/// Exact overlaps phi_i|F = phi_j|F among words of length <= searched_len.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OverlapScan {
    pub max_len: usize,
    /// Longest length whose words were all grouped within the budget.
    pub searched_len: usize,
    pub words: usize,
    /// Certified overlapping pairs with distinct first letters (first 64 kept).
    pub pairs: Vec<(Word, Word)>,
    pub pair_count: usize,
    /// Shortest length at which an overlap occurs.
    pub first_len: Option<usize>,
    /// Pairs with equal keys whose equality could not be certified.
    pub undecided: usize,
    pub partial: bool,
}

/// Groups all words up to max_len by restriction key and certifies every
/// coincidence with `equivalence_of_restrictions`.
pub fn exact_overlap_scan(sys: &IFSystem, max_len: usize, budget: usize) -> Result<OverlapScan> {
    let n = sys.n_maps();
    let canon = letter_equivalences(sys);
    let mut classes: BTreeMap<RestrictionKey, Vec<Word>> = BTreeMap::new();
    let mut level = vec![Word::empty(n)];
    let mut words = 0usize;
    let mut searched_len = 0;
    let mut partial = false;
    for len in 1..=max_len.min(sys.depth_cap) {
        if words + level.len() * n > budget {
            partial = true;
            break;
        }
        level = level.iter().flat_map(|w| (0..n as u8).map(move |s| w.push(s))).collect();
        for w in &level {
            let (k, _) = restriction_key(sys, w, CountMode::Restricted, &canon, &[])?;
            classes.entry(k).or_default().push(w.clone());
        }
        words += level.len();
        searched_len = len;
    }
    partial |= searched_len < max_len;
    let mut pairs = Vec::new();
    let mut pair_count = 0;
    let mut first_len: Option<usize> = None;
    let mut undecided = 0;
    for group in classes.values().filter(|g| g.len() > 1) {
        for (a, i) in group.iter().enumerate() {
            for j in &group[a + 1..] {
                if i.symbols()[0] == j.symbols()[0] {
                    continue;
                }
                match equivalence_of_restrictions(sys, i, j) {
                    Certified::True => {
                        pair_count += 1;
                        let l = i.len().max(j.len());
                        first_len = Some(first_len.map_or(l, |f| f.min(l)));
                        pairs.push((i.clone(), j.clone()));
                    }
                    Certified::False => {}
                    Certified::Undecided => undecided += 1,
                }
            }
        }
    }
    pairs.sort_by(|a, b| (a.0.len().max(a.1.len()), &a.0, &a.1).cmp(&(b.0.len().max(b.1.len()), &b.0, &b.1)));
    pairs.truncate(64);
    Ok(OverlapScan { max_len, searched_len, words, pairs, pair_count, first_len, undecided, partial })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::registry;

    #[test]
    fn cantor_count_at_zero() {
        let sys = registry::load("cantor-1-3").unwrap();
        let c = count_phi(&sys, &GaussianRational::zero(), &rat(1, 9), CountMode::Restricted).unwrap();
        // level-2 pieces: [0,1/9] meets [-1/9,1/9]; [2/9,1/3] sits 1/9 away
        assert_eq!(c.phi_count, 1);
        assert_eq!(c.sigma_count, 1);
        assert_eq!(c.ambiguous, 0);
        assert_eq!(c.witnesses[0].to_string(), "11");
        assert_eq!(c.x_near_f, Certified::True);
    }

    #[test]
    fn wsc_letters_collapse() {
        let sys = registry::load("wsc-example").unwrap();
        assert_eq!(letter_equivalences(&sys), vec![0, 1, 0]);
        let w = |s: &str| Word::parse(s, 3).unwrap();
        assert_eq!(equivalence_of_restrictions(&sys, &w("1"), &w("3")), Certified::True);
        assert_eq!(equivalence_of_restrictions(&sys, &w("13"), &w("31")), Certified::True);
        assert_eq!(equivalence_of_restrictions(&sys, &w("1"), &w("2")), Certified::False);
        let cantor = registry::load("cantor-1-3").unwrap();
        assert_eq!(equivalence_of_restrictions(&cantor, &Word::parse("1", 2).unwrap(), &Word::parse("2", 2).unwrap()), Certified::False);
        let triple = registry::load("triple-overlap").unwrap();
        assert_eq!(letter_equivalences(&triple), vec![0, 0, 2]);
    }

    #[test]
    fn wsc_unrestricted_grows() {
        let sys = registry::load("wsc-example").unwrap();
        for n in 1..=5u32 {
            let r = powi(&rat(1, 3), n);
            let u = count_phi(&sys, &GaussianRational::zero(), &r, CountMode::Unrestricted).unwrap();
            let s = count_phi(&sys, &GaussianRational::zero(), &r, CountMode::Restricted).unwrap();
            assert!(u.phi_count >= n as usize, "n={n} got {}", u.phi_count);
            assert_eq!(s.phi_count, 1);
            assert_eq!(u.sigma_count, 1 << n);
        }
    }

    #[test]
    fn overlap_scan_examples() {
        let t = crate::examples::registry::load("triple-overlap").unwrap();
        let scan = exact_overlap_scan(&t, 3, 1 << 16).unwrap();
        assert_eq!(scan.first_len, Some(1));
        assert_eq!(scan.pairs[0], (Word::parse("1", 3).unwrap(), Word::parse("2", 3).unwrap()));
        let c = crate::examples::registry::load("cantor-1-3").unwrap();
        let scan = exact_overlap_scan(&c, 8, 1 << 16).unwrap();
        assert!(scan.pairs.is_empty() && scan.undecided == 0 && !scan.partial);
        let w = crate::examples::registry::load("wsc-example").unwrap();
        assert_eq!(exact_overlap_scan(&w, 2, 1 << 16).unwrap().first_len, Some(1));
    }
}
