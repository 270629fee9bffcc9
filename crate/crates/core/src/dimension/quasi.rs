use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::select_evenly;
use crate::arith::*;
use crate::attractor::{seed_point, SeedStrategy};
use crate::error::{Error, Result};
use crate::ifs::IFSystem;
use crate::words::Word;

/// One sampled (x, r) with a word u such that phi_u(F) lies in B(x,r) and the
/// ratios |phi_u(y) - phi_u(z)| / |y - z| over the tested pairs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuasiWitness {
    pub x: GaussianRational,
    #[serde(with = "serde_q")]
    pub r: RationalScalar,
    pub word: Word,
    pub ratio: RationalInterval,
    /// [r/D, r D].
    pub envelope: RationalInterval,
    pub contained: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuasiConstants {
    /// Upper bound on max{1, K^2 diam(F) / min ||phi_i'||, 2K / diam(F)}.
    #[serde(with = "serde_q")]
    pub d: RationalScalar,
    #[serde(with = "serde_q")]
    pub k: RationalScalar,
    pub diam: RationalInterval,
    #[serde(with = "serde_q")]
    pub min_deriv: RationalScalar,
    /// The three terms of the maximum.
    #[serde(with = "serde_q_vec")]
    pub terms: Vec<RationalScalar>,
    pub witnesses: Vec<QuasiWitness>,
    pub witnesses_pass: bool,
}

pub fn quasi_constant(sys: &IFSystem) -> Result<QuasiConstants> {
    let diam = sys.diam_f();
    let sched: Vec<RationalScalar> = (1..=6).map(|k| &diam.lo * powi(&rat(1, 3), k)).collect();
    quasi_constant_with(sys, 8, &sched)
}

pub fn quasi_constant_with(sys: &IFSystem, samples: usize, r_schedule: &[RationalScalar]) -> Result<QuasiConstants> {
    let diam = sys.diam_f();
    if !diam.lo.is_positive() {
        return Err(Error::Degenerate("diam(F) lower bound is zero".into()));
    }
    let k = sys.k().clone();
    let min_deriv = sys.letter_deriv.iter().map(|d| d.lo.clone()).min().unwrap();
    let terms = vec![RationalScalar::one(), &k * &k * &diam.hi / &min_deriv, int(2) * &k / &diam.lo];
    let d = terms.iter().max().cloned().unwrap();
    let witnesses = witnesses(sys, &d, samples, r_schedule)?;
    let witnesses_pass = witnesses.iter().all(|w| w.pass);
    Ok(QuasiConstants { d, k, diam, min_deriv, terms, witnesses, witnesses_pass })
}

fn witnesses(sys: &IFSystem, d: &RationalScalar, samples: usize, r_schedule: &[RationalScalar]) -> Result<Vec<QuasiWitness>> {
    let n = sys.n_maps();
    let diam = sys.diam_f();
    let radii: Vec<&RationalScalar> = r_schedule.iter().filter(|r| r.is_positive() && **r < diam.lo).collect();
    let x0 = seed_point(sys, &SeedStrategy::FirstFixedPoint)?;
    let mut m = 0;
    let mut size = 1usize;
    while size < samples && m < sys.depth_cap {
        size = size.saturating_mul(n);
        m += 1;
    }
    let words = select_evenly(&Word::all_of_length(n, m), samples);
    let pairs: Vec<(&GaussianRational, &GaussianRational)> = sys
        .base_sample
        .iter()
        .enumerate()
        .flat_map(|(i, y)| sys.base_sample[i + 1..].iter().map(move |z| (y, z)))
        .collect();
    let jobs: Vec<(&Word, &RationalScalar)> = words.iter().flat_map(|w| radii.iter().map(move |r| (w, *r))).collect();
    jobs.par_iter()
        .map(|(w, r)| {
            let x = sys.eval_word(w, &x0)?;
            let ball = if sys.dimension == 1 {
                EnclosureBall::interval(&x.re - *r, &x.re + *r)
            } else {
                EnclosureBall::disc(x.clone(), r)
            };
            // x = phi_{w 1 1 1 ...}(x0): extend w by the first letter until contained
            let mut u = Word::empty(n);
            let mut contained = false;
            while u.len() < sys.depth_cap {
                let next = if u.len() < w.len() { u.push(w.symbols()[u.len()]) } else { u.push(0) };
                u = next;
                if ball.contains_ball(&sys.ball_image(&u, &sys.f_hull)?).is_true() {
                    contained = true;
                    break;
                }
            }
            let mut lo2: Option<RationalScalar> = None;
            let mut hi2: Option<RationalScalar> = None;
            for (y, z) in &pairs {
                let num = sys.eval_word(&u, y)?.dist_sq(&sys.eval_word(&u, z)?);
                let q = num / y.dist_sq(z);
                lo2 = Some(lo2.map(|v| min_q(&v, &q)).unwrap_or_else(|| q.clone()));
                hi2 = Some(hi2.map(|v| max_q(&v, &q)).unwrap_or(q));
            }
            let (lo2, hi2) = (lo2.unwrap_or_default(), hi2.unwrap_or_default());
            let env_lo = *r / d;
            let env_hi = *r * d;
            let inside = &env_lo * &env_lo <= lo2 && hi2 <= &env_hi * &env_hi;
            let ratio = RationalInterval { lo: sqrt_bounds(&lo2, sys.bits).0, hi: sqrt_bounds(&hi2, sys.bits).1 };
            Ok(QuasiWitness {
                x,
                r: (*r).clone(),
                word: u,
                ratio,
                envelope: RationalInterval { lo: env_lo, hi: env_hi },
                contained,
                pass: contained && inside,
            })
        })
        .collect::<Result<Vec<_>>>()
        .map(|mut v| {
            v.retain(|w| !w.r.is_zero());
            v
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::registry;

    #[test]
    fn cantor_d_is_three() {
        let sys = registry::load("cantor-1-3").unwrap();
        let q = quasi_constant(&sys).unwrap();
        // K = 1, diam F = 1, min ||phi_i'|| = 1/3: max{1, 3, 2}
        assert_eq!(q.terms, vec![int(1), int(3), int(2)]);
        assert_eq!(q.d, int(3));
        assert!(!q.witnesses.is_empty() && q.witnesses_pass);
        for w in &q.witnesses {
            // similarities: every ratio is exactly the contraction of the word
            assert!(w.ratio.is_point());
            assert_eq!(w.ratio.lo, powi(&rat(1, 3), w.word.len() as u32));
        }
    }
}
