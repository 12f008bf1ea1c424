mod common;

use common::{gen_program, program, spec};
use gclrel::assertions::{parse_formula, Arity, Formula, StateRelSpec};
use gclrel::automata::{aut, check_adequacy, check_manifest_adequacy, strongest_annotation, strongest_rel_annotation, Automaton, Product};
use gclrel::semantics::DomainBound;
use gclrel::syntax::Command;
use gclrel::vcgen::{check_condition_c, discharge, encoded_rel_vcs, rel_vcs, unary_vcs, RelSetup};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const VARS: [&str; 2] = ["x", "y"];

fn fin_of(c: &Command) -> i64 {
    c.labs().into_iter().max().unwrap_or(0) + 1
}

fn diagonal(ctrl: &[i64], fin: i64) -> StateRelSpec {
    ctrl.iter().filter(|n| **n != fin).fold(StateRelSpec::none(), |s, n| s.at(*n, *n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn strongest_annotation_is_valid(seed in any::<u64>(), depth in 0usize..4) {
        let c = gen_program(&mut ChaCha8Rng::seed_from_u64(seed), &VARS, depth);
        let a = aut(&c, fin_of(&c)).unwrap();
        let b = DomainBound::new(&VARS, -2, 2);
        let an = strongest_annotation(&a, &Formula::True, None, &b).unwrap();
        for (id, v) in discharge(&unary_vcs(&a, &an), &b) {
            prop_assert!(v.is_valid(), "{}: {}", id, v);
        }
    }

    #[test]
    fn falsified_reachable_point_breaks_a_condition(seed in any::<u64>(), depth in 1usize..4) {
        let c = gen_program(&mut ChaCha8Rng::seed_from_u64(seed), &VARS, depth);
        let a = aut(&c, fin_of(&c)).unwrap();
        let b = DomainBound::new(&VARS, -2, 2);
        let mut an = strongest_annotation(&a, &Formula::True, None, &b).unwrap();
        an.set(a.fin, Formula::False);
        let bad = discharge(&unary_vcs(&a, &an), &b).into_iter().filter(|(_, v)| !v.is_valid()).count();
        prop_assert!(bad > 0);
    }

    #[test]
    fn lockstep_self_product(seed in any::<u64>(), depth in 0usize..3) {
        let c = gen_program(&mut ChaCha8Rng::seed_from_u64(seed), &VARS, depth);
        let f = fin_of(&c);
        let a = aut(&c, f).unwrap();
        let j = diagonal(&a.ctrl(), f);
        let pre = parse_formula("eq(x, x) && eq(y, y)", Arity::Rel).unwrap();
        let b = DomainBound::new(&VARS, -1, 1);
        let p = Product::new(&a, &a, StateRelSpec::none(), StateRelSpec::none(), j.clone());
        prop_assert!(check_manifest_adequacy(&p, &pre, &b).is_valid());
        prop_assert!(check_adequacy(&p, &pre, &b).is_valid());
        let an = strongest_rel_annotation(&p, &pre, None, &b).unwrap();
        let none = StateRelSpec::none();
        let setup = RelSetup { left: &a, right: &a, an: &an, l: &none, r: &none, j: &j };
        for (id, v) in discharge(&rel_vcs(&setup), &b) {
            prop_assert!(v.is_valid(), "{}: {}", id, v);
        }
        prop_assert!(check_condition_c(&setup, &b).is_valid());
    }
}

#[test]
fn lockstep_fixture_encoded_conditions_discharge() {
    let c0 = program("c0.gcl");
    let sp = spec("lockstep.spec", Arity::Rel);
    let a = aut(&c0, 6).unwrap();
    let setup = RelSetup { left: &a, right: &a, an: &sp.rel, l: &sp.l, r: &sp.r, j: &sp.j };
    let b = DomainBound::new(&VARS, -2, 4).with_pc("pc", 1..=6);
    for (id, v) in discharge(&encoded_rel_vcs(&setup, "pc"), &b) {
        assert!(v.is_valid(), "{id}: {v}");
    }
}

#[test]
fn conditional_alignment_defect_is_reported() {
    let (c4, c5) = (program("c4.gcl"), program("c5.gcl"));
    let sp = spec("c4c5.spec", Arity::Rel);
    let (a, a2) = (aut(&c4, 0).unwrap(), aut(&c5, 0).unwrap());
    let p = Product::new(&a, &a2, sp.l.clone(), sp.r.clone(), sp.j.clone());
    let b = DomainBound::new(&["x", "y", "z", "w"], 4, 6);
    assert!(!check_manifest_adequacy(&p, &sp.pre(), &b).is_valid());
    let fixed = spec("c4c5_repaired.spec", Arity::Rel);
    let p = Product::new(&a, &a2, fixed.l.clone(), fixed.r.clone(), fixed.j.clone());
    assert!(check_manifest_adequacy(&p, &fixed.pre(), &b).is_valid());
}
