mod common;

use conformal_ifs::arith::*;
use conformal_ifs::attractor::NaturalMeasure;
use conformal_ifs::config::RunConfig;
use conformal_ifs::examples::{export_system, registry, SystemFile};
use conformal_ifs::separation::{equivalence_of_restrictions, ilc_search};
use conformal_ifs::words::Word;
use proptest::prelude::*;

use common::*;

fn q() -> impl Strategy<Value = RationalScalar> {
    (-60i64..60, 1i64..20).prop_map(|(n, d)| rat(n, d))
}

fn interval() -> impl Strategy<Value = RationalInterval> {
    (q(), q()).prop_map(|(a, b)| RationalInterval::hull2(a, b))
}

fn slack() -> impl Strategy<Value = RationalScalar> {
    (0i64..30, 1i64..10).prop_map(|(n, d)| rat(n, d))
}

const SYSTEMS: &[&str] = &["cantor-1-3", "interval-1-2", "triple-overlap", "beta-near-overlap", "wsc-example", "shortword"];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn interval_ops_are_inclusion_monotone(x in interval(), y in interval(), a in slack(), b in slack(), c in slack(), d in slack()) {
        let xw = RationalInterval { lo: &x.lo - a, hi: &x.hi + b };
        let yw = RationalInterval { lo: &y.lo - c, hi: &y.hi + d };
        prop_assert_eq!(check_inclusion_monotone(&x, &y, &xw, &yw), Ok(()));
    }

    #[test]
    fn rationals_round_trip_through_text(x in q(), e in 0u32..6) {
        let v = &x * powi(&rat(7, 3), e);
        prop_assert_eq!(parse_rational(&fmt_rational(&v)).unwrap(), v.clone());
        let iv = RationalInterval::hull2(v.clone(), &v + rat(1, 7));
        let back: RationalInterval = serde_json::from_str(&serde_json::to_string(&iv).unwrap()).unwrap();
        prop_assert_eq!(back, iv);
    }

    #[test]
    fn words_round_trip_and_compose(syms in proptest::collection::vec(0u8..3, 0..12), k in 0usize..12) {
        let w = Word::new(syms, 3);
        let back: Word = serde_json::from_str(&serde_json::to_string(&w).unwrap()).unwrap();
        prop_assert_eq!(back.symbols(), w.symbols());
        let k = k.min(w.len());
        prop_assert_eq!(w.prefix(k).concat(&w.shift(k).unwrap()), w);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn chain_rule_is_exact(sys_ix in 0usize..SYSTEMS.len(), seed in any::<u64>(), lu in 1usize..5, lv in 1usize..5) {
        let sys = registry::load(SYSTEMS[sys_ix]).unwrap();
        let mut g = rng(seed);
        let u = random_word(&mut g, sys.n_maps(), lu);
        let v = random_word(&mut g, sys.n_maps(), lv);
        for z in sys.base_sample.iter().take(4) {
            prop_assert_eq!(check_chain_rule(&sys, &u, &v, z), Ok(()));
        }
    }

    #[test]
    fn distortion_bounds_hold_to_length_eight(sys_ix in 0usize..SYSTEMS.len(), seed in any::<u64>(), len in 1usize..=8) {
        let sys = registry::load(SYSTEMS[sys_ix]).unwrap();
        let w = random_word(&mut rng(seed), sys.n_maps(), len);
        prop_assert_eq!(check_distortion(&sys, &w, 16), Ok(()));
    }

    #[test]
    fn enclosures_nest(sys_ix in 0usize..SYSTEMS.len(), seed in any::<u64>(), len in 0usize..6) {
        let sys = registry::load(SYSTEMS[sys_ix]).unwrap();
        let w = random_word(&mut rng(seed), sys.n_maps(), len);
        prop_assert_eq!(check_enclosure_nesting(&sys, &w), Ok(()));
    }

    #[test]
    fn cut_masses_sum_to_one(sys_ix in 0usize..5, k in 1i64..5, wa in 1i64..9, wb in 1i64..9) {
        let sys = registry::load(SYSTEMS[sys_ix]).unwrap();
        let mut w = vec![rat(wa, 1), rat(wb, 1)];
        w.resize(sys.n_maps(), int(1));
        let total: RationalScalar = w.iter().cloned().sum();
        let mu = NaturalMeasure::new(w.into_iter().map(|x| x / &total).collect()).unwrap();
        prop_assert_eq!(check_measure_additivity(&sys, &mu, &powi(&rat(1, 3), k as u32)), Ok(()));
    }

    #[test]
    fn restriction_equivalence_is_an_equivalence(seed in any::<u64>(), len in 1usize..4) {
        let sys = registry::load("triple-overlap").unwrap();
        let mut g = rng(seed);
        let a = random_word(&mut g, 3, len);
        let b = random_word(&mut g, 3, len);
        let c = random_word(&mut g, 3, len);
        prop_assert!(equivalence_of_restrictions(&sys, &a, &a).is_true());
        prop_assert_eq!(equivalence_of_restrictions(&sys, &a, &b), equivalence_of_restrictions(&sys, &b, &a));
        if equivalence_of_restrictions(&sys, &a, &b).is_true() && equivalence_of_restrictions(&sys, &b, &c).is_true() {
            prop_assert!(equivalence_of_restrictions(&sys, &a, &c).is_true());
        }
    }
}

#[test]
fn cut_completeness_on_random_streams() {
    let cases = [
        ("cantor-1-3", rat(1, 1000)),
        ("interval-1-2", rat(1, 1000)),
        ("triple-overlap", rat(1, 100)),
        ("beta-near-overlap", rat(1, 100)),
        ("wsc-example", rat(1, 100)),
        ("shortword", rat(1, 2)),
    ];
    for (k, (name, r)) in cases.iter().enumerate() {
        let sys = registry::load(name).unwrap();
        check_cut_completeness(&sys, r, 10_000, k as u64).unwrap();
    }
}

#[test]
fn cuts_refine_with_scale() {
    for name in ["cantor-1-3", "beta-near-overlap", "wsc-example"] {
        let sys = registry::load(name).unwrap();
        for k in 1..5u32 {
            check_cut_monotone(&sys, &powi(&rat(1, 3), k), &powi(&rat(1, 3), k + 1)).unwrap();
        }
    }
}

#[test]
fn ilc_best_is_monotone_in_search_length() {
    let sys = registry::load("beta-near-overlap").unwrap();
    let mut prev: Option<RationalScalar> = None;
    for len in 1..=8 {
        let s = ilc_search(&sys, len, &rat(1, 20)).unwrap();
        let best = s.best.map(|w| w.delta.hi).expect("witness");
        if let Some(p) = &prev {
            assert!(&best <= p, "best rose from {p} to {best} at length {len}");
        }
        prev = Some(best);
    }
}

#[test]
fn registry_systems_round_trip_through_files() {
    for name in registry::NAMES {
        let sys = registry::load(name).unwrap();
        let text = export_system(&sys);
        let back = SystemFile::parse(&text).unwrap().build(sys.bits, sys.depth_cap).unwrap();
        assert_eq!(back.maps, sys.maps, "{name}");
        assert_eq!(export_system(&back), text, "{name}");
    }
}

#[test]
fn config_round_trips() {
    let c = RunConfig::default();
    assert_eq!(RunConfig::from_json(&c.to_json()).unwrap(), c);
}

#[test]
fn cli_output_is_byte_identical_across_runs() {
    for args in [
        &["--system", "cantor", "dim"][..],
        &["--system", "beta", "ilc-search", "--max-len", "8"],
        &["--system", "wsc-example", "wsc-count", "--x", "0", "--r", "1/27", "--unrestricted"],
        &["--system", "cantor", "--format", "csv", "boxdim", "--no-envelope"],
        &["--system", "shortword", "--format", "text", "validate"],
        &["example", "verify", "wsc", "--n", "4"],
    ] {
        check_cli_deterministic(args).unwrap();
    }
}

#[test]
fn cli_exit_codes() {
    assert_eq!(cli(&["example", "verify", "shortword"]).1, 0);
    assert_eq!(cli(&["--system", "no-such-system", "validate"]).1, 1);
    assert_eq!(cli(&["--system", "beta", "tangent", "--n", "4"]).1, 2);
}
