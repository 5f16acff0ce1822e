mod common;

use num::One;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ptss::bisim::{bisimilarity_on, lift, Partition};
use ptss::dist::eval_dist;
use ptss::syntax::{parse, parse_dist_term, parse_term, render, render_dist, render_term};
use ptss::terms::{compose, Fresh, Substitution, Term};

use common::*;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn arb_term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        prop_oneof![Just("a"), Just("b")].prop_map(Term::cst),
        prop_oneof![Just("x"), Just("y"), Just("z")].prop_map(Term::var),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|t| Term::app("f", vec![t])),
            (inner.clone(), inner).prop_map(|(a, b)| Term::app("g", vec![a, b])),
        ]
    })
}

fn arb_subst() -> impl Strategy<Value = Substitution> {
    prop::collection::btree_map(prop_oneof![Just("x"), Just("y"), Just("z"), Just("w")], arb_term(), 0..4).prop_map(|m| {
        let mut s = Substitution::identity();
        for (x, t) in m {
            s.bind_term(x, t);
        }
        s
    })
}

const SIG: &str = "signature { a/0; b/0; c/0; f/1; g/2; par/2 as \"||\" } labels { l }";

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn mgu_unifier_properties(seed in any::<u64>()) {
        let c = mgu_case(&mut rng(seed));
        let bad = mgu_violations(&c);
        prop_assert!(bad.is_empty(), "{:?}", bad);
    }

    #[test]
    fn compose_is_sequential_application(s1 in arb_subst(), s2 in arb_subst(), t in arb_term()) {
        prop_assert_eq!(compose(&s1, &s2).term(&t), s1.term(&s2.term(&t)));
    }

    #[test]
    fn substitution_keeps_closed_terms_closed(s in arb_subst(), t in arb_term()) {
        let closed = t.map_vars(&|_| Some(Term::cst("a")));
        prop_assert_eq!(s.term(&closed), closed);
    }

    #[test]
    fn distribution_mass_is_one(seed in any::<u64>()) {
        let th = random_dist_term(&mut rng(seed), 3);
        let pi = eval_dist(&th).unwrap();
        prop_assert!(pi.total().is_one());
        let got: std::collections::BTreeMap<_, _> = pi.iter().map(|(t, p)| (t.clone(), p.clone())).collect();
        prop_assert_eq!(got, merged(outcomes(&th)));
    }

    #[test]
    fn term_render_round_trip(t in arb_term()) {
        let s = parse(SIG).unwrap();
        let text = render_term(&s.ptss.sig, &t);
        prop_assert_eq!(parse_term(&text, &s.ptss).unwrap(), t);
    }

    #[test]
    fn dist_render_round_trip(seed in any::<u64>()) {
        let s = parse(SIG).unwrap();
        let th = random_dist_term(&mut rng(seed), 2);
        let text = render_dist(&s.ptss.sig, &th);
        let back = parse_dist_term(&text, &s.ptss).unwrap();
        // Rendering may choose a different but equal presentation.
        prop_assert_eq!(eval_dist(&back).unwrap(), eval_dist(&th).unwrap(), "{}", text);
    }

    #[test]
    fn refinement_matches_brute_force(seed in any::<u64>(), n in 1usize..=5) {
        let (states, tr) = random_system(&mut rng(seed), n);
        let got = bisimilarity_on(&tr, &states);
        prop_assert_eq!(got.blocks().to_vec(), brute_bisim(&tr, &states));
    }

    #[test]
    fn lift_is_an_equivalence(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (states, tr) = random_system(&mut r, 4);
        let part = bisimilarity_on(&tr, &states);
        let pis: Vec<_> = tr.iter().map(|(_, _, pi)| pi.clone()).collect();
        for a in &pis {
            prop_assert!(lift(a, a, &part).unwrap());
            for b in &pis {
                prop_assert_eq!(lift(a, b, &part).unwrap(), lift(b, a, &part).unwrap());
                // Finer partitions relate fewer pairs.
                let finest = Partition::by_key(states.iter().cloned(), |t| t.clone());
                if lift(a, b, &finest).unwrap() {
                    prop_assert!(lift(a, b, &part).unwrap());
                }
            }
        }
    }
}

#[test]
fn corpus_render_round_trip() {
    for (name, s) in corpus() {
        let text = render(&s);
        let back = parse(&text).unwrap_or_else(|d| panic!("{name}: {d:?}\n{text}"));
        assert_eq!(back, s, "{name}");
    }
}

#[test]
fn fresh_names_avoid_the_spec() {
    for (_, s) in corpus() {
        let used = s.ptss.all_names();
        let mut fresh = Fresh::avoiding(&used);
        let mut seen = std::collections::BTreeSet::new();
        for i in 0..10_000 {
            let base = ["x", "mu", "Y", "x_1"][i % 4];
            let n = fresh.next(base).to_string();
            assert!(!used.contains(&n) && seen.insert(n));
        }
    }
}
