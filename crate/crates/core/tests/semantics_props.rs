mod common;

use common::gen_program;
use gclrel::automata::aut;
use gclrel::semantics::{denote_bigstep, run, DomainBound, RunStatus};
use gclrel::syntax::{parse_command_exact, parse_program, pretty};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const VARS: [&str; 3] = ["x", "y", "z"];

fn fin_of(c: &gclrel::syntax::Command) -> i64 {
    c.labs().into_iter().max().unwrap_or(0) + 1
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_programs_are_ok(seed in any::<u64>(), depth in 0usize..4) {
        let c = gen_program(&mut ChaCha8Rng::seed_from_u64(seed), &VARS, depth);
        prop_assert!(c.check_okf(fin_of(&c)).is_ok());
        prop_assert!(c.check_okf(c.lab()).is_err());
    }

    #[test]
    fn display_round_trips(seed in any::<u64>(), depth in 0usize..4) {
        let c = gen_program(&mut ChaCha8Rng::seed_from_u64(seed), &VARS, depth);
        prop_assert_eq!(parse_command_exact(&c.to_string()).unwrap(), c.clone());
        prop_assert_eq!(parse_program(&pretty(&c, false)).unwrap(), c);
    }

    #[test]
    fn small_step_big_step_and_automaton_agree(seed in any::<u64>(), depth in 0usize..4) {
        let c = gen_program(&mut ChaCha8Rng::seed_from_u64(seed), &VARS, depth);
        let a = aut(&c, fin_of(&c)).unwrap();
        for s in DomainBound::new(&VARS, -1, 1).stores() {
            let small = run(&c, &s, 10_000);
            let big = denote_bigstep(&c, &s, 10_000);
            prop_assert_eq!(small.status, RunStatus::Complete);
            prop_assert_eq!(&small.outcomes, &big.outcomes);
            prop_assert_eq!(&small.outcomes, &a.outcomes(&s, 10_000).unwrap());
            prop_assert_eq!(small.outcomes.len(), 1);
        }
    }
}

#[test]
fn divergence_is_inconclusive() {
    let c = parse_program("do x = x -> x := x + 1 od").unwrap();
    let r = run(&c, &gclrel::semantics::store_from(&[("x", 0)]), 500);
    assert_eq!(r.status, RunStatus::BudgetExceeded);
}

#[test]
fn duplicate_labels_are_rejected() {
    assert!(parse_program("x@1 := 1 ; y@1 := 2").is_err());
}
