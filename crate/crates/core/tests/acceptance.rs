//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Exits nonzero when a criterion fails, unless it is listed in
//! `KNOWN_UNATTAINABLE`, whose failures are reported but tolerated.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use common::{gen_program, mutate, program, spec};
use gclrel::assertions::{entails, parse_formula, Arity, Formula, StateRelSpec};
use gclrel::automata::{aut, check_manifest_adequacy, strongest_annotation, strongest_rel_annotation, Automaton, Product};
use gclrel::normalform::{normalize, pc_bound, verify_norm_equiv};
use gclrel::proof::{
    check_proof, rel_pc_bound, synthesize_relational, synthesize_relational_unchecked, synthesize_unary, ProofTree,
    RelProblem,
};
use gclrel::semantics::{check_rel, check_unary, denote_bigstep, run, DomainBound, RunStatus, Verdict, Witness};
use gclrel::syntax::{parse_bool_expr, parse_command_exact, parse_program, Command, GuardedCmd, Label};
use gclrel::vcgen::{check_condition_c, discharge, rel_vcs, unary_vcs, RelSetup};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const KNOWN_UNATTAINABLE: &[&str] = &["AC7"];

type Outcome = Result<String, String>;

fn fin_of(c: &Command) -> Label {
    c.labs().into_iter().max().unwrap_or(0) + 1
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn valid(v: &Verdict, what: &str) -> Result<(), String> {
    ensure(v.is_valid(), format!("{what}: {v}"))
}

fn ac1() -> Outcome {
    let a = aut(&program("c0.gcl"), 6).map_err(|e| e.to_string())?;
    let (f2, f4) = (a.fsuc(2), a.fsuc(4));
    ensure(f2 == Some(6) && f4 == Some(2), format!("fsuc(2)={f2:?} fsuc(4)={f4:?}"))?;
    Ok("fsuc(2,c0,6)=6 fsuc(4,c0,6)=2".into())
}

fn ac2() -> Outcome {
    let c0 = program("c0.gcl");
    let a = aut(&c0, 6).map_err(|e| e.to_string())?;
    let mut an = gclrel::assertions::UnaryAnnotation::default();
    for n in 1..=6 {
        an.set(n, parse_formula(&format!("{n} * x + y > {n}"), Arity::Unary).unwrap());
    }
    let expected = [
        ("unary:1->2", "1 * x + y > 1 ==> 2 * y + y > 2"),
        ("unary:2->3", "x > 0 && 2 * x + y > 2 ==> 3 * x + y > 3"),
        ("unary:2->6", "!(x > 0) && 2 * x + y > 2 ==> 6 * x + y > 6"),
        ("unary:3->4", "x mod 2 = 0 && 3 * x + y > 3 ==> 4 * x + y > 4"),
        ("unary:3->5", "x mod 2 != 0 && 3 * x + y > 3 ==> 5 * x + y > 5"),
        ("unary:4->2", "4 * x + y > 4 ==> 2 * (x - 1) + y > 2"),
        ("unary:5->2", "5 * x + y > 5 ==> 2 * (x - 2) + y > 2"),
    ];
    let vcs = unary_vcs(&a, &an);
    let ids: Vec<&str> = vcs.iter().map(|v| v.id.as_str()).collect();
    let want: Vec<&str> = expected.iter().map(|(id, _)| *id).collect();
    ensure(ids == want, format!("obligations {ids:?}, expected {want:?}"))?;
    let bound = DomainBound::new(&["x", "y"], -4, 6);
    for (vc, (id, src)) in vcs.iter().zip(expected) {
        let golden = parse_formula(src, Arity::Unary).unwrap();
        let got = vc.formula();
        valid(&entails(&got, &golden, &bound), id)?;
        valid(&entails(&golden, &got, &bound), id)?;
    }
    Ok("7 obligations, row-by-row equivalent".into())
}

fn golden_body(rows: &[(&str, &str)]) -> Vec<GuardedCmd> {
    rows.iter()
        .map(|(g, b)| GuardedCmd { guard: parse_bool_expr(g).unwrap(), body: parse_command_exact(b).unwrap() })
        .collect()
}

fn d45(init_z: &str, modulus: &str, factor: &str) -> Vec<GuardedCmd> {
    golden_body(&[
        ("pc = 1", "y := x ; pc := 2"),
        ("pc = 2", &format!("z := {init_z} ; pc := 3")),
        ("pc = 3", "w := 0 ; pc := 4"),
        ("pc = 4 && y != 4", "pc := 5"),
        ("pc = 4 && !(y != 4)", "pc := 0"),
        ("pc = 5 && w mod {m} = 0".replace("{m}", modulus).as_str(), "pc := 6"),
        ("pc = 5 && w mod {m} != 0".replace("{m}", modulus).as_str(), "pc := 8"),
        ("pc = 6", &format!("z := z * {factor} ; pc := 7")),
        ("pc = 7", "y := y - 1 ; pc := 9"),
        ("pc = 8", "pc := 9"),
        ("pc = 9", "w := w + 1 ; pc := 4"),
    ])
}

fn ac3() -> Outcome {
    let d0 = golden_body(&[
        ("pc = 1", "x := y ; pc := 2"),
        ("pc = 2 && x > 0", "pc := 3"),
        ("pc = 2 && !(x > 0)", "pc := 6"),
        ("pc = 3 && x mod 2 = 0", "pc := 4"),
        ("pc = 3 && x mod 2 != 0", "pc := 5"),
        ("pc = 4", "x := x - 1 ; pc := 2"),
        ("pc = 5", "x := x - 2 ; pc := 2"),
    ]);
    for (name, f, golden) in [("c0.gcl", 6, d0), ("c4.gcl", 0, d45("24", "2", "y")), ("c5.gcl", 0, d45("16", "3", "2"))] {
        let nf = normalize(&program(name), f, "pc").map_err(|e| e.to_string())?;
        ensure(nf.body.len() == golden.len(), format!("{name}: {} guarded commands", nf.body.len()))?;
        for (i, (got, want)) in nf.body.iter().zip(&golden).enumerate() {
            ensure(got == want, format!("{name} row {i}: got {} -> {}, expected {} -> {}", got.guard, got.body, want.guard, want.body))?;
        }
    }
    Ok("d0 (7 rows), d4 and d5 (11 rows each) match in order".into())
}

fn ac4() -> Outcome {
    let b = DomainBound::new(&["x", "y", "z", "w"], -4, 8).with_budget(100_000);
    for (name, f) in [("c0.gcl", 6), ("c1.gcl", 7), ("c4.gcl", 0), ("c5.gcl", 0)] {
        let v = verify_norm_equiv(&program(name), f, "pc", &b).map_err(|e| e.to_string())?;
        valid(&v, name)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let rb = DomainBound::new(&["x", "y", "z"], -4, 8).with_budget(100_000);
    for i in 0..100 {
        let depth = rng.gen_range(0..=3);
        let c = gen_program(&mut rng, &["x", "y", "z"], depth);
        let v = verify_norm_equiv(&c, fin_of(&c), "pc", &rb).map_err(|e| e.to_string())?;
        valid(&v, &format!("random program {i}: {c}"))?;
    }
    Ok("c0, c1, c4, c5 and 100 random programs VALID".into())
}

fn ac5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let vars = ["x", "y", "z"];
    let b = DomainBound::new(&vars, -2, 2);
    let mut runs = 0;
    for i in 0..200 {
        let depth = rng.gen_range(0..=3);
        let c = gen_program(&mut rng, &vars, depth);
        let a = aut(&c, fin_of(&c)).map_err(|e| e.to_string())?;
        for s in b.stores() {
            let small = run(&c, &s, 100_000);
            let big = denote_bigstep(&c, &s, 100_000);
            ensure(small.status == RunStatus::Complete && big.status == RunStatus::Complete, format!("program {i} did not finish"))?;
            let via_aut = a.outcomes(&s, 100_000).map_err(|e| e.to_string())?;
            ensure(
                small.outcomes == big.outcomes && small.outcomes == via_aut,
                format!("program {i} {c} disagrees from {s:?}"),
            )?;
            runs += 1;
        }
    }
    Ok(format!("200 programs, {runs} initial stores agree"))
}

fn ac6() -> Outcome {
    let c0 = program("c0.gcl");
    let sp = spec("lockstep.spec", Arity::Rel);
    let a = aut(&c0, 6).map_err(|e| e.to_string())?;
    let b = DomainBound::new(&["x", "y"], -2, 6);
    let prod = Product::new(&a, &a, sp.l.clone(), sp.r.clone(), sp.j.clone());
    valid(&check_manifest_adequacy(&prod, &sp.pre(), &b), "(a) manifest adequacy")?;
    let setup = RelSetup { left: &a, right: &a, an: &sp.rel, l: &sp.l, r: &sp.r, j: &sp.j };
    let vcs = rel_vcs(&setup);
    for (id, v) in discharge(&vcs, &b) {
        valid(&v, &format!("(b) {id}"))?;
    }
    let p = RelProblem {
        left: c0.clone(),
        right: c0.clone(),
        fin: 6,
        fin2: 6,
        l: sp.l.clone(),
        r: sp.r.clone(),
        j: sp.j.clone(),
        an: sp.rel.clone(),
        pc: "pc".into(),
    };
    let t = synthesize_relational(&p, &b).map_err(|e| format!("(c) {e}"))?;
    let v = check_proof(&t, &rel_pc_bound(&p, &b)).map_err(|e| format!("(d) {e}"))?;
    valid(&v, "(d) check_proof")?;
    valid(&check_rel(&c0, &c0, t.conclusion.pre(), t.conclusion.post(), &b), "(e) check_rel")?;
    Ok(format!("{} VCs, tree of {} nodes checks VALID", vcs.len(), t.size()))
}

/// Joint, left-only and right-only rows listed for the conditional alignment.
const LISTED_ROWS: [&str; 17] = [
    "jo:1,1->2,2",
    "jo:2,2->3,3",
    "jo:3,3->4,4",
    "jo:4,4->5,5",
    "jo:4,4->0,0",
    "jo:5,5->6,6",
    "jo:6,6->7,7",
    "jo:7,7->9,9",
    "jo:9,9->4,4",
    "lo:4,4->5,4",
    "lo:5,4->8,4",
    "lo:8,4->9,4",
    "lo:9,4->4,4",
    "ro:4,4->4,5",
    "ro:4,5->4,8",
    "ro:4,8->4,9",
    "ro:4,9->4,4",
];

fn c4c5_bound() -> DomainBound {
    DomainBound::new(&["x", "y", "z", "w"], 0, 12)
        .with_range("x", 4, 7)
        .with_range("y", 3, 8)
        .with_range("z", 1, 64)
        .with_range("w", 0, 12)
}

fn ac7() -> Outcome {
    let (c4, c5) = (program("c4.gcl"), program("c5.gcl"));
    let sp = spec("c4c5.spec", Arity::Rel);
    let (a, a2) = (aut(&c4, 0).map_err(|e| e.to_string())?, aut(&c5, 0).map_err(|e| e.to_string())?);
    let b = c4c5_bound();
    let setup = RelSetup { left: &a, right: &a2, an: &sp.rel, l: &sp.l, r: &sp.r, j: &sp.j };
    let mut parts = Vec::new();
    let mut failed = Vec::new();

    let cc = check_condition_c(&setup, &b);
    parts.push(format!("(a) {}", cc.label()));
    if !cc.is_valid() {
        failed.push("(a)".to_string());
    }

    let vcs = rel_vcs(&setup);
    let results = discharge(&vcs, &b);
    let mut listed = 0;
    let mut listed_bad = Vec::new();
    for row in LISTED_ROWS {
        match results.iter().find(|(id, _)| id == row) {
            Some((_, v)) if v.is_valid() => listed += 1,
            Some(_) => listed_bad.push(row.to_string()),
            None => listed_bad.push(format!("{row} missing")),
        }
    }
    let others_bad: Vec<&str> =
        results.iter().filter(|(id, v)| !v.is_valid() && !LISTED_ROWS.contains(&id.as_str())).map(|(id, _)| id.as_str()).collect();
    parts.push(format!("(b) {listed}/17 listed VCs VALID"));
    if !listed_bad.is_empty() {
        failed.push(format!("(b) {listed_bad:?}"));
    }
    if !others_bad.is_empty() {
        parts.push(format!("unlisted failing VCs {others_bad:?}"));
    }

    let p = RelProblem {
        left: c4.clone(),
        right: c5.clone(),
        fin: 0,
        fin2: 0,
        l: sp.l.clone(),
        r: sp.r.clone(),
        j: sp.j.clone(),
        an: sp.rel.clone(),
        pc: "pc".into(),
    };
    match synthesize_relational(&p, &b) {
        Ok(t) => match check_proof(&t, &rel_pc_bound(&p, &b)) {
            Ok(v) if v.is_valid() => parts.push("(c) VALID".into()),
            Ok(v) => failed.push(format!("(c) {}", v.label())),
            Err(e) => failed.push(format!("(c) {e}")),
        },
        Err(e) => {
            let detail = match synthesize_relational_unchecked(&p) {
                Ok(t) => match check_proof(&t, &rel_pc_bound(&p, &b)) {
                    Ok(v) => format!("unchecked tree {}", v.label()),
                    Err(e) => e.to_string(),
                },
                Err(e) => e.to_string(),
            };
            failed.push(format!("(c) {e}; {detail}"));
        }
    }

    let small = DomainBound::new(&["x", "y", "z", "w"], 4, 6);
    let d = check_rel(&c4, &c5, &sp.pre(), &sp.post(), &small);
    parts.push(format!("(d) {}", d.label()));
    if !d.is_valid() {
        failed.push("(d)".into());
    }

    if failed.is_empty() {
        Ok(parts.join(", "))
    } else {
        Err(format!("{}; failing: {}", parts.join(", "), failed.join("; ")))
    }
}

/// Same pipeline with the repaired annotation; reported for information.
fn ac7_repaired() -> Outcome {
    let (c4, c5) = (program("c4.gcl"), program("c5.gcl"));
    let sp = spec("c4c5_repaired.spec", Arity::Rel);
    let b = c4c5_bound();
    let p = RelProblem {
        left: c4,
        right: c5,
        fin: 0,
        fin2: 0,
        l: sp.l.clone(),
        r: sp.r.clone(),
        j: sp.j.clone(),
        an: sp.rel.clone(),
        pc: "pc".into(),
    };
    let t = synthesize_relational(&p, &b).map_err(|e| e.to_string())?;
    let v = check_proof(&t, &rel_pc_bound(&p, &b)).map_err(|e| e.to_string())?;
    valid(&v, "check_proof")?;
    Ok(format!("repaired annotation: tree of {} nodes checks VALID", t.size()))
}

fn ac8() -> Outcome {
    let c0 = program("c0.gcl");
    let a = aut(&c0, 6).map_err(|e| e.to_string())?;
    let b = DomainBound::new(&["x", "y"], -4, 8).with_range("y", 0, 4);
    let q = parse_formula("x <= 0", Arity::Unary).unwrap();
    let an = strongest_annotation(&a, &Formula::True, Some(&q), &b).map_err(|e| e.to_string())?;
    for (id, v) in discharge(&unary_vcs(&a, &an), &b) {
        valid(&v, &id)?;
    }
    let t = synthesize_unary(&c0, 6, &an, "pc", &b).map_err(|e| e.to_string())?;
    let v = check_proof(&t, &pc_bound(&b, "pc", a.ctrl())).map_err(|e| e.to_string())?;
    valid(&v, "check_proof")?;
    ensure(*t.conclusion.post() == q && *t.conclusion.pre() == Formula::True, format!("conclusion {}", t.conclusion))?;
    valid(&check_unary(&c0, t.conclusion.pre(), t.conclusion.post(), &b), "check_unary")?;
    Ok(format!("tree of {} nodes checks VALID", t.size()))
}

fn ac9() -> Outcome {
    let c0 = program("c0.gcl");
    let a = aut(&c0, 6).map_err(|e| e.to_string())?;
    let ctrl = a.ctrl();
    let all = StateRelSpec::grid_except(&ctrl, &ctrl, (6, 6));
    let pre = parse_formula("eq(y, y)", Arity::Rel).unwrap();
    let post = parse_formula("eq(x, x)", Arity::Rel).unwrap();
    let b = DomainBound::new(&["x", "y"], -1, 4);
    let prod = Product::new(&a, &a, all.clone(), all.clone(), all.clone());
    let an = strongest_rel_annotation(&prod, &pre, Some(&post), &b).map_err(|e| e.to_string())?;
    let p = RelProblem {
        left: c0.clone(),
        right: c0.clone(),
        fin: 6,
        fin2: 6,
        l: all.clone(),
        r: all.clone(),
        j: all,
        an,
        pc: "pc".into(),
    };
    let t = synthesize_relational(&p, &b).map_err(|e| e.to_string())?;
    let v = check_proof(&t, &rel_pc_bound(&p, &b)).map_err(|e| e.to_string())?;
    valid(&v, "check_proof")?;
    Ok(format!("tree of {} nodes checks VALID", t.size()))
}

fn ac10() -> Outcome {
    let c = parse_program("x@1 := x + 1 ; y@2 := y ; x@3 := x + 1 ; y@4 := y ; x@5 := x + 1").unwrap();
    let d = parse_program("y@1 := y ; x@2 := x + 1 ; x@3 := x + 1 ; x@4 := x + 1 ; y@5 := y").unwrap();
    let (a, a2) = (aut(&c, 6).map_err(|e| e.to_string())?, aut(&d, 6).map_err(|e| e.to_string())?);
    let r = StateRelSpec::none().at(1, 1).at(6, 5);
    let j = StateRelSpec::none().at(1, 2).at(3, 3).at(5, 4);
    let pre = parse_formula("eq(x, x)", Arity::Rel).unwrap();
    let b = DomainBound::new(&["x", "y"], -2, 2);
    let full = Product::new(&a, &a2, StateRelSpec::none().at(2, 3).at(4, 4), r.clone(), j.clone());
    valid(&check_manifest_adequacy(&full, &pre, &b), "with [2|3]")?;
    let dropped = Product::new(&a, &a2, StateRelSpec::none().at(4, 4), r, j);
    match check_manifest_adequacy(&dropped, &pre, &b) {
        Verdict::Counterexample(ws) => {
            let ctrls: BTreeSet<(Label, Label)> = ws
                .iter()
                .filter_map(|w| match w {
                    Witness::State { ctrl, .. } => Some(*ctrl),
                    _ => None,
                })
                .collect();
            ensure(ctrls.contains(&(2, 3)), format!("counterexample controls {ctrls:?}"))?;
            Ok(format!("counterexample at control {ctrls:?}"))
        }
        v => Err(format!("without [2|3]: {}", v.label())),
    }
}

fn rejected(t: &ProofTree, b: &DomainBound) -> bool {
    !matches!(check_proof(t, b), Ok(Verdict::Valid))
}

fn ac11() -> Outcome {
    let c0 = program("c0.gcl");
    let us = spec("c0_unary.spec", Arity::Unary);
    let ub = DomainBound::new(&["x", "y"], -4, 8);
    let ut = synthesize_unary(&c0, 6, &us.unary, "pc", &ub).map_err(|e| e.to_string())?;
    let upb = pc_bound(&ub, "pc", 1..=6);
    let rs = spec("lockstep.spec", Arity::Rel);
    let rb = DomainBound::new(&["x", "y"], -2, 6);
    let p = RelProblem {
        left: c0.clone(),
        right: c0,
        fin: 6,
        fin2: 6,
        l: rs.l.clone(),
        r: rs.r.clone(),
        j: rs.j.clone(),
        an: rs.rel.clone(),
        pc: "pc".into(),
    };
    let rt = synthesize_relational(&p, &rb).map_err(|e| e.to_string())?;
    let rpb = rel_pc_bound(&p, &rb);
    ensure(!rejected(&ut, &upb) && !rejected(&rt, &rpb), "unperturbed trees must check")?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut accepted = 0;
    for i in 0..50 {
        let (t, b) = if i % 2 == 0 { (&ut, &upb) } else { (&rt, &rpb) };
        if !rejected(&mutate(t, &mut rng), b) {
            accepted += 1;
        }
    }
    ensure(accepted == 0, format!("{accepted} perturbed trees accepted"))?;
    Ok("50 perturbed trees rejected, 0 accepted".into())
}

fn main() {
    let criteria: Vec<(&str, &str, fn() -> Outcome, Duration)> = vec![
        ("AC1", "fsuc fixture", ac1, Duration::from_secs(1)),
        ("AC2", "unary VC golden", ac2, Duration::from_secs(5)),
        ("AC3", "normal-form golden", ac3, Duration::from_secs(1)),
        ("AC4", "normal-form equivalence instances", ac4, Duration::from_secs(120)),
        ("AC5", "big-step, small-step and automaton consistency", ac5, Duration::from_secs(60)),
        ("AC6", "lockstep pipeline", ac6, Duration::from_secs(60)),
        ("AC7", "conditional-alignment pipeline", ac7, Duration::from_secs(120)),
        ("AC8", "Floyd-completeness pipeline", ac8, Duration::from_secs(30)),
        ("AC9", "Cook-completeness smoke", ac9, Duration::from_secs(60)),
        ("AC10", "adequacy counterexample", ac10, Duration::from_secs(5)),
        ("AC11", "checker soundness under perturbation", ac11, Duration::from_secs(60)),
    ];
    let mut unexpected = 0;
    for (id, name, f, limit) in criteria {
        let t0 = Instant::now();
        let r = f();
        let dt = t0.elapsed();
        let over = dt > limit;
        let (status, detail) = match &r {
            Ok(d) if !over => ("PASS", d.clone()),
            Ok(d) => ("FAIL", format!("{d}; exceeded {limit:?}")),
            Err(e) => ("FAIL", e.clone()),
        };
        let known = KNOWN_UNATTAINABLE.contains(&id);
        if status == "FAIL" && !known {
            unexpected += 1;
        }
        let note = if status == "FAIL" && known { " [known unattainable]" } else { "" };
        println!("{id} {status}{note}: {name} ({:.2}s) {detail}", dt.as_secs_f64());
        if id == "AC7" {
            match ac7_repaired() {
                Ok(d) => println!("AC7 info: {d}"),
                Err(e) => println!("AC7 info: repaired annotation fails: {e}"),
            }
        }
    }
    if unexpected > 0 {
        println!("{unexpected} criteria failed");
        std::process::exit(1);
    }
}
