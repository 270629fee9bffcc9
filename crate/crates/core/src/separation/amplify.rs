use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::count::{count_phi, equivalence_of_restrictions, CountMode, SeparationCount};
use super::ilc::{IlcSearch, IlcWitness};
use crate::arith::*;
use crate::attractor::{cylinder_diam, diam_lower};
use crate::words::DiameterSource;
use crate::error::{Error, Result};
use crate::ifs::IFSystem;
use crate::report::RunStatus;
use crate::words::Word;

const Q_MAX: usize = 12;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScheduleStage {
    pub k: usize,
    /// Supremum allowed for delta_k at this stage.
    #[serde(with = "serde_q")]
    pub eps: RationalScalar,
    pub witness: IlcWitness,
    /// Lower bound for ||phi_{i_k}'||.
    #[serde(with = "serde_q")]
    pub deriv_lo: RationalScalar,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Schedule {
    pub q: usize,
    #[serde(with = "serde_q")]
    pub k_const: RationalScalar,
    #[serde(with = "serde_q")]
    pub c_const: RationalScalar,
    #[serde(with = "serde_q")]
    pub eps_q: RationalScalar,
    pub stages: Vec<ScheduleStage>,
    pub requested: usize,
    /// Threshold no witness of the search could meet, if the schedule stopped early.
    #[serde(with = "serde_q_opt")]
    pub exhausted_at: Option<RationalScalar>,
}

fn lower_norm(sys: &IFSystem, w: &Word) -> Result<RationalScalar> {
    Ok(sys.derivative_bounds(w)?.lo)
}

/// Smallest q with K/diam(F) max_{Sigma_q} diam(phi_j(F)) < (3q-2)/(3q+2), and
/// eps(q) = 2/3 C K^-2 ||phi_{1^q}'|| diam(F) / q (lower bounds throughout).
pub fn choose_q(sys: &IFSystem, c: &RationalScalar) -> Result<(usize, RationalScalar)> {
    let k = sys.k().clone();
    let diam = sys.diam_f();
    if !diam.lo.is_positive() {
        return Err(Error::Degenerate("diam(F) lower bound is zero".into()));
    }
    let n = sys.n_maps();
    for q in 1..=Q_MAX {
        if n.pow(q as u32) > 1 << 20 {
            break;
        }
        let mut m = RationalScalar::zero();
        for w in Word::all_of_length(n, q) {
            m = max_q(&m, &cylinder_diam(sys, &w, DiameterSource::EnclosureUpper)?);
        }
        let lhs = &k / &diam.lo * m;
        let q_i = q as i64;
        if lhs < rat(3 * q_i - 2, 3 * q_i + 2) {
            let pad = Word::repeat(0, q, n);
            let eps = rat(2, 3) * c / (&k * &k) * lower_norm(sys, &pad)? * &diam.lo / int(q_i);
            return Ok((q, eps));
        }
    }
    Err(Error::Budget(format!("no q <= {Q_MAX} satisfies the padding inequality")))
}

fn pick(search: &IlcSearch, eps: &RationalScalar, c: &RationalScalar) -> Option<IlcWitness> {
    search
        .best_by_len
        .iter()
        .flatten()
        .find(|w| &w.delta.hi < eps && w.delta.lo.is_positive() && w.lemma_c.as_ref().map(|lc| lc <= c).unwrap_or(false))
        .cloned()
}

/// Chooses delta_1 > delta_2 > ... with delta_1 < eps(q) and
/// delta_k < delta_{k-1} ||phi_{i_{k-1}}'|| / (2 K^5 C^2).
pub fn build_schedule(sys: &IFSystem, search: &IlcSearch, n: usize, c: &RationalScalar) -> Result<Schedule> {
    let (q, eps_q) = choose_q(sys, c)?;
    let k = sys.k().clone();
    let mut stages: Vec<ScheduleStage> = Vec::new();
    let mut exhausted_at = None;
    let mut eps = eps_q.clone();
    for stage in 1..=n {
        if stage > 1 {
            let prev = stages.last().expect("previous stage");
            eps = &prev.witness.delta.lo * &prev.deriv_lo / (int(2) * powi(&k, 5) * c * c);
        }
        match pick(search, &eps, c) {
            Some(w) => {
                let deriv_lo = lower_norm(sys, &w.i)?;
                stages.push(ScheduleStage { k: stage, eps: eps.clone(), witness: w, deriv_lo });
            }
            None => {
                exhausted_at = Some(eps.clone());
                break;
            }
        }
    }
    Ok(Schedule { q, k_const: k, c_const: c.clone(), eps_q, stages, requested: n, exhausted_at })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AmplifyReport {
    pub requested: usize,
    pub achieved: usize,
    pub feasible: bool,
    pub schedule: Schedule,
    /// i = i_n ... i_1 and k_m = i_n ... j_m ... i_1.
    pub i: Option<Word>,
    pub k_words: Vec<Word>,
    pub padding: Option<Word>,
    pub x0: Option<GaussianRational>,
    pub x: Option<GaussianRational>,
    #[serde(with = "serde_q_opt")]
    pub r: Option<RationalScalar>,
    /// diam(phi_{k_m 1^q}(F)) <= r < diam(phi_{k_m}(F)) for every m.
    pub scale_check: Certified,
    /// |x - phi_{k_m 1^q}(x0)| <= r for every m.
    pub meets_check: Certified,
    /// The restrictions phi_{k_m 1^q}|_F are pairwise distinct.
    pub distinct_check: Certified,
    pub count: Option<SeparationCount>,
    /// ceil(achieved / q).
    pub lower_bound: usize,
    /// ceil(requested / q).
    pub requested_bound: usize,
    pub status: RunStatus,
}

/// Builds the words of the amplification argument from an ILC search and
/// re-measures Phi(x,r) at the resulting point and scale.
pub fn amplify_wsc_failure(sys: &IFSystem, search: &IlcSearch, n: usize) -> Result<AmplifyReport> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    // C is the largest lemma constant among the chosen witnesses; iterate until stable.
    let mut c = RationalScalar::one();
    let mut schedule = build_schedule(sys, search, n, &c)?;
    for _ in 0..4 {
        let used = schedule.stages.iter().filter_map(|s| s.witness.lemma_c.clone()).max();
        match used {
            Some(u) if u > c => {
                c = u;
                schedule = build_schedule(sys, search, n, &c)?;
            }
            _ => break,
        }
    }
    let q = schedule.q;
    let requested_bound = n.div_ceil(q);
    let achieved = schedule.stages.len();
    let mut report = AmplifyReport {
        requested: n,
        achieved,
        feasible: achieved > 0,
        schedule,
        i: None,
        k_words: Vec::new(),
        padding: None,
        x0: None,
        x: None,
        r: None,
        scale_check: Certified::Undecided,
        meets_check: Certified::Undecided,
        distinct_check: Certified::Undecided,
        count: None,
        lower_bound: achieved.div_ceil(q),
        requested_bound,
        status: RunStatus::Partial,
    };
    if achieved == 0 {
        return Ok(report);
    }
    let nm = sys.n_maps();
    let stages = &report.schedule.stages;
    let mut i = Word::empty(nm);
    for s in stages.iter().rev() {
        i = i.concat(&s.witness.i);
    }
    let k_words: Vec<Word> = (0..achieved)
        .map(|m| {
            let mut w = Word::empty(nm);
            for (idx, s) in stages.iter().enumerate().rev() {
                w = w.concat(if idx == m { &s.witness.j } else { &s.witness.i });
            }
            w
        })
        .collect();
    let pad = Word::repeat(0, q, nm);
    let x0 = sys
        .rational_fixed_points()
        .into_iter()
        .next()
        .or_else(|| sys.base_sample.first().cloned())
        .ok_or_else(|| Error::Degenerate("no exact point of F".into()))?;
    let x = sys.eval_word(&i.concat(&pad), &x0)?;
    let mut r = RationalScalar::zero();
    for k in &k_words {
        r = max_q(&r, &cylinder_diam(sys, &k.concat(&pad), DiameterSource::EnclosureUpper)?);
    }
    let mut scale = Certified::True;
    let mut meets = Certified::True;
    for k in &k_words {
        let up = cylinder_diam(sys, &k.concat(&pad), DiameterSource::EnclosureUpper)?;
        let lo = diam_lower(sys, k)?;
        scale = scale.and(Certified::from(up <= r && r < lo));
        let p = sys.eval_word(&k.concat(&pad), &x0)?;
        meets = meets.and(Certified::from(p.dist_sq(&x) <= &r * &r));
    }
    let mut distinct = Certified::True;
    for a in 0..k_words.len() {
        for b in a + 1..k_words.len() {
            let e = equivalence_of_restrictions(sys, &k_words[a].concat(&pad), &k_words[b].concat(&pad));
            distinct = distinct.and(match e {
                Certified::True => Certified::False,
                Certified::False => Certified::True,
                Certified::Undecided => Certified::Undecided,
            });
        }
    }
    let count = count_phi(sys, &x, &r, CountMode::Restricted)?;
    let ok = scale.is_true() && meets.is_true() && distinct.is_true() && count.phi_count >= report.lower_bound;
    report.status = if !ok && scale.is_false() {
        RunStatus::Invalid
    } else if ok && achieved == n && count.phi_count >= requested_bound {
        RunStatus::Certified
    } else {
        RunStatus::Partial
    };
    report.i = Some(i);
    report.k_words = k_words;
    report.padding = Some(pad);
    report.x0 = Some(x0);
    report.x = Some(x);
    report.r = Some(r);
    report.scale_check = scale;
    report.meets_check = meets;
    report.distinct_check = distinct;
    report.count = Some(count);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::registry;
    use crate::separation::ilc_search;

    #[test]
    fn padding_for_ternary_systems() {
        let sys = registry::load("beta-near-overlap").unwrap();
        let (q, eps) = choose_q(&sys, &int(1)).unwrap();
        assert_eq!(q, 2);
        assert_eq!(eps, rat(1, 27));
    }

    #[test]
    fn cantor_schedule_infeasible() {
        let sys = registry::load("cantor-1-3").unwrap();
        let s = ilc_search(&sys, 6, &rat(1, 27)).unwrap();
        let rep = amplify_wsc_failure(&sys, &s, 4).unwrap();
        assert!(!rep.feasible);
        assert_eq!(rep.achieved, 0);
        assert_eq!(rep.status, RunStatus::Partial);
    }

    #[test]
    fn single_stage_counts_at_least_one() {
        let sys = registry::load("beta-near-overlap").unwrap();
        let s = ilc_search(&sys, 6, &rat(1, 27)).unwrap();
        let rep = amplify_wsc_failure(&sys, &s, 1).unwrap();
        assert_eq!(rep.achieved, 1);
        assert_eq!(rep.schedule.stages[0].witness.len(), 5);
        assert!(rep.scale_check.is_true() && rep.meets_check.is_true());
        assert!(rep.count.unwrap().phi_count >= 1);
        assert_eq!(rep.status, RunStatus::Certified);
    }
}
