//! Invariant checks shared by the property suites and the acceptance run.
#![allow(dead_code)]

use conformal_ifs::arith::*;
use conformal_ifs::attractor::{cylinder, NaturalMeasure};
use conformal_ifs::ifs::{grid_points, IFSystem};
use conformal_ifs::words::{generation_cut, Word};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = std::result::Result<(), String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_word(rng: &mut ChaCha8Rng, n: usize, len: usize) -> Word {
    Word::new((0..len).map(|_| rng.gen_range(0..n as u8)).collect(), n)
}

/// Random rational with numerator in [-num, num] and denominator in [1, den].
pub fn random_q(rng: &mut ChaCha8Rng, num: i64, den: i64) -> RationalScalar {
    rat(rng.gen_range(-num..=num), rng.gen_range(1..=den))
}

pub fn random_interval(rng: &mut ChaCha8Rng) -> RationalInterval {
    RationalInterval::hull2(random_q(rng, 50, 17), random_q(rng, 50, 17))
}

/// An interval containing `x`, widened by random non-negative amounts.
pub fn widen(rng: &mut ChaCha8Rng, x: &RationalInterval) -> RationalInterval {
    let a = rat(rng.gen_range(0..20), rng.gen_range(1..9));
    let b = rat(rng.gen_range(0..20), rng.gen_range(1..9));
    RationalInterval { lo: &x.lo - a, hi: &x.hi + b }
}

/// X ⊆ X', Y ⊆ Y' implies X op Y ⊆ X' op Y' for every operation, and the
/// exact result of point operands lies in the enclosure.
pub fn check_inclusion_monotone(x: &RationalInterval, y: &RationalInterval, xw: &RationalInterval, yw: &RationalInterval) -> Check {
    for op in [IntervalOp::Add, IntervalOp::Sub, IntervalOp::Mul, IntervalOp::Div, IntervalOp::Pow(3)] {
        let inner = x.op(y, op);
        let outer = xw.op(yw, op);
        match (inner, outer) {
            (Ok(i), Ok(o)) => {
                if !i.subset_of(&o) {
                    return Err(format!("{op:?}: {i} not inside {o}"));
                }
                let (p, q) = (x.mid(), y.mid());
                let exact = match op {
                    IntervalOp::Add => &p + &q,
                    IntervalOp::Sub => &p - &q,
                    IntervalOp::Mul => &p * &q,
                    IntervalOp::Div => &p / &q,
                    IntervalOp::Pow(e) => powi(&p, e),
                };
                if !i.contains(&exact) {
                    return Err(format!("{op:?}: {exact} not inside {i}"));
                }
            }
            // the wider divisor may contain zero when the narrow one does not
            (Ok(_), Err(_)) if op == IntervalOp::Div && yw.contains_zero() => {}
            (Err(_), _) if op == IntervalOp::Div && y.contains_zero() => {}
            (a, b) => return Err(format!("{op:?}: unexpected {a:?} / {b:?}")),
        }
    }
    let bits = 64;
    if x.is_positive() && xw.is_positive() {
        let (i, o) = (x.ln(bits).map_err(|e| e.to_string())?, xw.ln(bits).map_err(|e| e.to_string())?);
        if !i.subset_of(&o) {
            return Err(format!("ln: {i} not inside {o}"));
        }
        let s = rat(1, 3);
        let (i, o) = (x.pow(&s, bits).map_err(|e| e.to_string())?, xw.pow(&s, bits).map_err(|e| e.to_string())?);
        if !i.subset_of(&o) {
            return Err(format!("pow: {i} not inside {o}"));
        }
    }
    let (i, o) = (x.exp(bits), xw.exp(bits));
    if !i.subset_of(&o) {
        return Err(format!("exp: {i} not inside {o}"));
    }
    Ok(())
}

/// Every stream has exactly one prefix in the cut at scale r.
pub fn check_cut_completeness(sys: &IFSystem, r: &RationalScalar, count: usize, seed: u64) -> Check {
    let cut = generation_cut(sys, r).map_err(|e| e.to_string())?;
    let len = cut.max_len() + 1;
    let mut g = rng(seed);
    for _ in 0..count {
        let w = random_word(&mut g, sys.n_maps(), len);
        let hits = cut.prefix_of(w.symbols()).len();
        if hits != 1 {
            return Err(format!("{}: stream {w} has {hits} prefixes in the cut at r = {r}", sys.name));
        }
    }
    Ok(())
}

/// A finer scale gives a cut refining the coarser one.
pub fn check_cut_monotone(sys: &IFSystem, r_coarse: &RationalScalar, r_fine: &RationalScalar) -> Check {
    let coarse = generation_cut(sys, r_coarse).map_err(|e| e.to_string())?;
    let fine = generation_cut(sys, r_fine).map_err(|e| e.to_string())?;
    for w in &fine.words {
        if coarse.prefix_of(w.symbols()).len() != 1 {
            return Err(format!("{}: {w} of the fine cut has no unique coarse ancestor", sys.name));
        }
    }
    if fine.words.len() < coarse.words.len() {
        return Err("finer cut is smaller".into());
    }
    Ok(())
}

/// Masses of a generation cut sum to exactly 1.
pub fn check_measure_additivity(sys: &IFSystem, mu: &NaturalMeasure, r: &RationalScalar) -> Check {
    let cut = generation_cut(sys, r).map_err(|e| e.to_string())?;
    let total: RationalScalar = cut.words.iter().map(|w| mu.mass(w)).sum();
    if total != int(1) {
        return Err(format!("{}: cut masses at r = {r} sum to {total}", sys.name));
    }
    Ok(())
}

/// Largest sampled |phi_w'| over the grid, squared: a lower bound for ||phi_w'||^2.
fn sampled_norm_sq(sys: &IFSystem, w: &Word, pts: &[GaussianRational]) -> std::result::Result<RationalScalar, String> {
    let mut best = int(0);
    for p in pts {
        let d = sys.deriv_word_at(w, p).map_err(|e| e.to_string())?.norm_sq();
        if d > best {
            best = d;
        }
    }
    Ok(best)
}

/// The bi-Lipschitz, diameter and multiplicativity comparisons with constant K
/// for the word w (and the split w = u v at every cut point).
pub fn check_distortion(sys: &IFSystem, w: &Word, grid: usize) -> Check {
    let k = sys.k().clone();
    let k2 = &k * &k;
    let pts = grid_points(&sys.v_domain, grid);
    let norm = sys.derivative_bounds(w).map_err(|e| e.to_string())?;
    let seen_sq = sampled_norm_sq(sys, w, &pts)?;
    if seen_sq > &norm.hi * &norm.hi {
        return Err(format!("{w}: sampled |phi'| above the certified norm"));
    }
    // K^-1 ||phi'|| |x - y| <= |phi(x) - phi(y)| <= ||phi'|| |x - y|
    let images: Vec<GaussianRational> = pts.iter().map(|p| sys.eval_word(w, p)).collect::<conformal_ifs::Result<_>>().map_err(|e| e.to_string())?;
    for a in 0..pts.len() {
        let b = (a * 7 + 3) % pts.len();
        if a == b {
            continue;
        }
        let d2 = pts[a].dist_sq(&pts[b]);
        let i2 = images[a].dist_sq(&images[b]);
        if i2 > &norm.hi * &norm.hi * &d2 {
            return Err(format!("{w}: upper Lipschitz bound fails"));
        }
        if &seen_sq * &d2 > &k2 * &i2 {
            return Err(format!("{w}: lower Lipschitz bound fails"));
        }
    }
    // diam(phi_w F)/diam F <= ||phi_w'|| <= K diam(phi_w F)/diam F
    let diam_f = sys.diam_f();
    let cyl = cylinder(sys, w).map_err(|e| e.to_string())?;
    if &cyl.diam.lo / &diam_f.hi > norm.hi {
        return Err(format!("{w}: cylinder diameter exceeds ||phi'|| diam F"));
    }
    let cap = &k * &cyl.diam.hi / &diam_f.lo;
    if seen_sq > &cap * &cap {
        return Err(format!("{w}: ||phi'|| exceeds K diam(phi F)/diam F"));
    }
    // K^-2 ||phi_u'|| ||phi_v'|| <= ||phi_uv'|| <= ||phi_u'|| ||phi_v'||
    for cut in 1..w.len() {
        let u = w.prefix(cut);
        let v = w.shift(cut).map_err(|e| e.to_string())?;
        let nu = sys.derivative_bounds(&u).map_err(|e| e.to_string())?;
        let nv = sys.derivative_bounds(&v).map_err(|e| e.to_string())?;
        let su = sampled_norm_sq(sys, &u, &pts)?;
        let sv = sampled_norm_sq(sys, &v, &pts)?;
        if seen_sq > (&nu.hi * &nv.hi) * (&nu.hi * &nv.hi) {
            return Err(format!("{u}|{v}: submultiplicativity fails"));
        }
        if &su * &sv > &k2 * &k2 * &norm.hi * &norm.hi {
            return Err(format!("{u}|{v}: supermultiplicativity fails"));
        }
    }
    Ok(())
}

/// Exact chain rule: (phi_uv)'(z) = phi_u'(phi_v(z)) phi_v'(z).
pub fn check_chain_rule(sys: &IFSystem, u: &Word, v: &Word, z: &GaussianRational) -> Check {
    let uv = u.concat(v);
    let lhs = sys.deriv_word_at(&uv, z).map_err(|e| e.to_string())?;
    let mid = sys.eval_word(v, z).map_err(|e| e.to_string())?;
    let rhs = &sys.deriv_word_at(u, &mid).map_err(|e| e.to_string())? * &sys.deriv_word_at(v, z).map_err(|e| e.to_string())?;
    if lhs != rhs {
        return Err(format!("chain rule fails for {u}|{v}"));
    }
    Ok(())
}

/// Child cylinder enclosures sit inside the parent's.
pub fn check_enclosure_nesting(sys: &IFSystem, w: &Word) -> Check {
    let parent = sys.ball_image(w, &sys.f_hull).map_err(|e| e.to_string())?;
    for s in 0..sys.n_maps() as u8 {
        let child = sys.ball_image(&w.push(s), &sys.f_hull).map_err(|e| e.to_string())?;
        if !parent.contains_ball(&child).is_true() {
            return Err(format!("{}: child {} not inside {w}", sys.name, w.push(s)));
        }
    }
    Ok(())
}

/// Runs the bin entry point and returns its output and exit code.
pub fn cli(args: &[&str]) -> (String, i32) {
    let mut full = vec!["cil"];
    full.extend_from_slice(args);
    let (out, status) = conformal_ifs::cli::run_args(full).expect("arguments parse");
    (out, status.exit_code())
}

/// Two runs of the same command give byte-identical output.
pub fn check_cli_deterministic(args: &[&str]) -> Check {
    let (a, ca) = cli(args);
    let (b, cb) = cli(args);
    if a != b || ca != cb {
        return Err(format!("{args:?}: outputs differ between runs"));
    }
    Ok(())
}
