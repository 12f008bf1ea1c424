mod common;

use common::{gen_program, mutate, program, spec};
use gclrel::assertions::{parse_formula, Arity, Formula, StateRelSpec};
use gclrel::automata::{aut, strongest_annotation, strongest_rel_annotation, Automaton, Product};
use gclrel::normalform::pc_bound;
use gclrel::proof::{
    audit_provenance, check_proof, check_proof_with, expand_derived, from_json, rel_pc_bound, synthesize_relational,
    synthesize_unary, to_json, CheckOptions, ProofDocument, ProofTree, Provenance, RelProblem, Rule, SynthError,
};
use gclrel::semantics::{DomainBound, Verdict};
use gclrel::syntax::Command;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const VARS: [&str; 2] = ["x", "y"];

fn fin_of(c: &Command) -> i64 {
    c.labs().into_iter().max().unwrap_or(0) + 1
}

fn strict(t: &ProofTree, b: &DomainBound) -> Verdict {
    check_proof_with(t, b, &CheckOptions { strict: true }).unwrap().verdict
}

fn lockstep_problem(c: &Command, b: &DomainBound) -> RelProblem {
    let f = fin_of(c);
    let a = aut(c, f).unwrap();
    let j = a.ctrl().into_iter().filter(|n| *n != f).fold(StateRelSpec::none(), |s, n| s.at(n, n));
    let pre = parse_formula("eq(x, x) && eq(y, y)", Arity::Rel).unwrap();
    let p = Product::new(&a, &a, StateRelSpec::none(), StateRelSpec::none(), j.clone());
    let an = strongest_rel_annotation(&p, &pre, None, b).unwrap();
    RelProblem {
        left: c.clone(),
        right: c.clone(),
        fin: f,
        fin2: f,
        l: StateRelSpec::none(),
        r: StateRelSpec::none(),
        j,
        an,
        pc: "pc".into(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn unary_synthesis_checks(seed in any::<u64>(), depth in 0usize..4) {
        let c = gen_program(&mut ChaCha8Rng::seed_from_u64(seed), &VARS, depth);
        let f = fin_of(&c);
        let a = aut(&c, f).unwrap();
        let b = DomainBound::new(&VARS, -2, 2);
        let an = strongest_annotation(&a, &Formula::True, None, &b).unwrap();
        let t = synthesize_unary(&c, f, &an, "pc", &b).unwrap();
        prop_assert!(strict(&t, &pc_bound(&b, "pc", a.ctrl())).is_valid());
        prop_assert_eq!(t.count(Rule::Do), 1);
        prop_assert_eq!(t.count(Rule::If), 0);
        prop_assert_eq!(t.conclusion.commands(), vec![&c]);
        prop_assert_eq!(t.conclusion.pre(), &an.get(c.lab()));
        prop_assert_eq!(t.conclusion.post(), &an.get(f));
        prop_assert!(audit_provenance(&t, &Provenance::unary(&c, &an, "pc")).is_empty());
    }

    #[test]
    fn relational_synthesis_checks_and_expands(seed in any::<u64>(), depth in 0usize..3) {
        let c = gen_program(&mut ChaCha8Rng::seed_from_u64(seed), &VARS, depth);
        let b = DomainBound::new(&VARS, -1, 1);
        let p = lockstep_problem(&c, &b);
        let t = synthesize_relational(&p, &b).unwrap();
        let pb = rel_pc_bound(&p, &b);
        prop_assert!(strict(&t, &pb).is_valid());
        prop_assert_eq!(t.count(Rule::DDo), 1);
        prop_assert!(audit_provenance(&t, &Provenance::relational(&p)).is_empty());
        let e = expand_derived(&t);
        prop_assert_eq!(&e.conclusion, &t.conclusion);
        prop_assert!(Rule::ALL.iter().filter(|r| r.is_derived()).all(|r| e.count(*r) == 0));
        prop_assert!(strict(&e, &pb).is_valid());
    }

    #[test]
    fn perturbed_trees_are_rejected(seed in any::<u64>()) {
        let c0 = program("c0.gcl");
        let sp = spec("c0_unary.spec", Arity::Unary);
        let b = DomainBound::new(&VARS, -4, 8);
        let t = synthesize_unary(&c0, 6, &sp.unary, "pc", &b).unwrap();
        let m = mutate(&t, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(!matches!(check_proof(&m, &pc_bound(&b, "pc", 1..=6)), Ok(Verdict::Valid)));
    }

    #[test]
    fn json_round_trips(seed in any::<u64>(), depth in 0usize..3) {
        let c = gen_program(&mut ChaCha8Rng::seed_from_u64(seed), &VARS, depth);
        let b = DomainBound::new(&VARS, -1, 1);
        let p = lockstep_problem(&c, &b);
        let t = synthesize_relational(&p, &b).unwrap();
        let doc = ProofDocument { pc: "pc".into(), pc_domain: vec![1, 2], root: t };
        let text = to_json(&doc);
        prop_assert_eq!(from_json(&text).unwrap(), doc);
    }
}

#[test]
fn lockstep_fixture_proof() {
    let c0 = program("c0.gcl");
    let sp = spec("lockstep.spec", Arity::Rel);
    let p = RelProblem {
        left: c0.clone(),
        right: c0,
        fin: 6,
        fin2: 6,
        l: sp.l.clone(),
        r: sp.r.clone(),
        j: sp.j.clone(),
        an: sp.rel.clone(),
        pc: "pc".into(),
    };
    let b = DomainBound::new(&VARS, -2, 6);
    let t = synthesize_relational(&p, &b).unwrap();
    let pb = rel_pc_bound(&p, &b);
    assert!(strict(&t, &pb).is_valid());
    assert!(strict(&expand_derived(&t), &pb).is_valid());
    assert!(audit_provenance(&t, &Provenance::relational(&p)).is_empty());
}

#[test]
fn invalid_annotation_is_refused() {
    let c0 = program("c0.gcl");
    let mut sp = spec("c0_unary.spec", Arity::Unary);
    sp.unary.set(3, parse_formula("x > 5", Arity::Unary).unwrap());
    let b = DomainBound::new(&VARS, -4, 8);
    assert!(matches!(synthesize_unary(&c0, 6, &sp.unary, "pc", &b), Err(SynthError::VcFailure(_))));
}

#[test]
fn non_fresh_counter_is_refused() {
    let c0 = program("c0.gcl");
    let sp = spec("c0_unary.spec", Arity::Unary);
    let b = DomainBound::new(&VARS, -4, 8);
    assert!(matches!(synthesize_unary(&c0, 6, &sp.unary, "x", &b), Err(SynthError::PcNotFresh(_))));
}

#[test]
fn tampered_document_is_malformed() {
    let c0 = program("c0.gcl");
    let sp = spec("c0_unary.spec", Arity::Unary);
    let b = DomainBound::new(&VARS, -4, 8);
    let t = synthesize_unary(&c0, 6, &sp.unary, "pc", &b).unwrap();
    let text = to_json(&ProofDocument { pc: "pc".into(), pc_domain: (1..=6).collect(), root: t });
    let tampered = text.replacen("\"x <= 0\"", "\"x <= 1\"", 1);
    assert_ne!(tampered, text);
    let doc = from_json(&tampered).unwrap();
    assert!(check_proof(&doc.root, &pc_bound(&b, "pc", 1..=6)).is_err());
}
