mod common;

use common::{gen_program, program};
use gclrel::kat::{equiv_commands, mkt};
use gclrel::normalform::{classify_guard, normalize, verify_enab_labels, verify_erase_equiv, verify_norm_equiv};
use gclrel::semantics::DomainBound;
use gclrel::syntax::{parse_program, Command};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const VARS: [&str; 3] = ["x", "y", "z"];

fn fin_of(c: &Command) -> i64 {
    c.labs().into_iter().max().unwrap_or(0) + 1
}

fn bound() -> DomainBound {
    DomainBound::new(&VARS, -2, 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn normal_form_is_equivalent(seed in any::<u64>(), depth in 0usize..4) {
        let c = gen_program(&mut ChaCha8Rng::seed_from_u64(seed), &VARS, depth);
        let f = fin_of(&c);
        prop_assert!(verify_norm_equiv(&c, f, "pc", &bound()).unwrap().is_valid());
        prop_assert!(verify_enab_labels(&c, f, "pc", &bound()).unwrap().is_valid());
        prop_assert!(verify_erase_equiv(&c, "pc", &bound()).unwrap().is_valid());
    }

    #[test]
    fn every_normal_form_guard_is_classified(seed in any::<u64>(), depth in 0usize..4) {
        let c = gen_program(&mut ChaCha8Rng::seed_from_u64(seed), &VARS, depth);
        let f = fin_of(&c);
        let nf = normalize(&c, f, "pc").unwrap();
        let mut sources = std::collections::BTreeSet::new();
        for gc in &nf.body {
            let class = classify_guard(gc, &c, f, "pc").unwrap();
            sources.insert(class.points().0);
        }
        prop_assert_eq!(sources, c.labs());
    }

    #[test]
    fn kat_equivalence_is_reflexive_and_sees_skip_units(seed in any::<u64>(), depth in 0usize..3) {
        let c = gen_program(&mut ChaCha8Rng::seed_from_u64(seed), &VARS, depth);
        prop_assert!(equiv_commands(&c, &c, &bound()).is_valid());
        let padded = Command::seq(Command::Skip(0), c.clone());
        prop_assert!(equiv_commands(&c, &padded, &bound()).is_valid());
    }
}

#[test]
fn kat_distinguishes_different_programs() {
    let c = parse_program("x := x + 1").unwrap();
    let d = parse_program("x := x + 2").unwrap();
    assert!(!equiv_commands(&c, &d, &bound()).is_valid());
}

#[test]
fn kat_term_of_running_example() {
    let t = mkt(&program("c0.gcl")).to_string();
    assert!(t.starts_with("[x := y] ; "), "{t}");
    assert!(t.contains(")*"), "{t}");
}

#[test]
fn pc_in_program_is_rejected() {
    let c = parse_program("pc := 1").unwrap();
    assert!(normalize(&c, 2, "pc").is_err());
}
