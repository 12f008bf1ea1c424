mod common;

use std::path::PathBuf;
use std::process::{Command, Output};

use common::fixture_path;

fn gclrel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gclrel")).args(args).output().expect("binary runs")
}

fn fx(name: &str) -> String {
    fixture_path(name).display().to_string()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("gclrel-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)).unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn parse_matches_golden() {
    let o = gclrel(&["parse", &fx("c0.gcl")]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), golden("parse_c0.txt"));
}

#[test]
fn parse_rejects_duplicate_labels() {
    let bad = scratch("bad.gcl");
    std::fs::write(&bad, "x@1 := 1 ; y@1 := 2\n").unwrap();
    let o = gclrel(&["parse", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn normalize_matches_golden() {
    let o = gclrel(&["normalize", &fx("c4.gcl"), "--fin", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), golden("normalize_c4.txt"));
}

#[test]
fn automaton_matches_golden() {
    let o = gclrel(&["aut", &fx("c1.gcl"), "--fin", "7", "--dump-edges"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), golden("aut_c1.txt"));
}

#[test]
fn vcgen_matches_golden() {
    let o = gclrel(&["vcgen", &fx("c0.gcl"), "--fin", "6", "--spec", &fx("c0_unary.spec"), "--discharge"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), golden("vcgen_c0.txt"));
}

#[test]
fn rvcgen_reports_uncovered_exits_of_conditional_alignment() {
    let o = gclrel(&[
        "rvcgen", &fx("c4.gcl"), &fx("c5.gcl"), "--fin", "0", "--fin2", "0", "--spec", &fx("c4c5.spec"), "--discharge",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("26 conditions, 24 valid"), "{out}");
    let repaired = gclrel(&[
        "rvcgen", &fx("c4.gcl"), &fx("c5.gcl"), "--fin", "0", "--fin2", "0", "--spec", &fx("c4c5_repaired.spec"), "--discharge",
    ]);
    assert_eq!(repaired.status.code(), Some(0), "{}", stdout(&repaired));
}

#[test]
fn prove_rel_then_check_proof() {
    let proof = scratch("lockstep.proof");
    let p = proof.to_str().unwrap();
    let args = ["prove-rel", &fx("c0.gcl"), &fx("c0.gcl"), "--fin", "6", "--fin2", "6", "--spec", &fx("lockstep.spec"), "-o", p];
    let o = gclrel(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let first = std::fs::read(&proof).unwrap();
    let again = gclrel(&args);
    assert_eq!(again.stdout, o.stdout);
    assert_eq!(std::fs::read(&proof).unwrap(), first);
    let c = gclrel(&["check-proof", p, "--strict"]);
    assert_eq!(c.status.code(), Some(0), "{}", stdout(&c));
    assert!(stdout(&c).ends_with("check: VALID\n"));
}

#[test]
fn prove_unary_then_check_tampered_proof() {
    let proof = scratch("unary.proof");
    let p = proof.to_str().unwrap();
    let o = gclrel(&["prove-unary", &fx("c0.gcl"), "--fin", "6", "--spec", &fx("c0_unary.spec"), "-o", p]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&proof).unwrap();
    let tampered = scratch("tampered.proof");
    std::fs::write(&tampered, text.replacen("\"rule\": \"Asgn\"", "\"rule\": \"Skip\"", 1)).unwrap();
    let c = gclrel(&["check-proof", tampered.to_str().unwrap()]);
    assert_eq!(c.status.code(), Some(1));
    let garbage = scratch("garbage.proof");
    std::fs::write(&garbage, "{}").unwrap();
    assert_eq!(gclrel(&["check-proof", garbage.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn conditional_alignment_proof_fails_with_original_annotation() {
    let ranges = ["--range", "x=4..7", "--range", "y=3..8", "--range", "z=1..64", "--range", "w=0..12"];
    let mut args = vec!["prove-rel", "F1", "F2", "--fin", "0", "--fin2", "0", "--spec", "S"];
    let (c4, c5, s) = (fx("c4.gcl"), fx("c5.gcl"), fx("c4c5.spec"));
    args[1] = &c4;
    args[2] = &c5;
    args[8] = &s;
    args.extend(ranges);
    assert_eq!(gclrel(&args).status.code(), Some(1));
    let fixed = fx("c4c5_repaired.spec");
    args[8] = &fixed;
    let o = gclrel(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn counter_must_be_fresh() {
    let o = gclrel(&["prove-unary", &fx("c0.gcl"), "--fin", "6", "--spec", &fx("c0_unary.spec"), "--pc", "y"]);
    assert_eq!(o.status.code(), Some(2));
    let o = gclrel(&["normalize", &fx("c0.gcl"), "--fin", "6", "--pc", "x"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn budget_exhaustion_is_inconclusive() {
    let f = scratch("loop.gcl");
    std::fs::write(&f, "do x = x -> x := x + 1 od\n").unwrap();
    let o = gclrel(&["run", f.to_str().unwrap(), "--budget", "100"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn run_from_given_store() {
    let o = gclrel(&["run", &fx("c1.gcl"), "--set", "x=4"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "[x=4 y=0 z=24]\n");
}

#[test]
fn check_equiv_distinguishes_c4_and_c5() {
    let ranges = ["--range", "x=4..5", "--range", "y=0..8", "--range", "z=0..200", "--range", "w=0..4"];
    let (c4, c5) = (fx("c4.gcl"), fx("c5.gcl"));
    let mut args = vec!["check-equiv", c4.as_str(), c5.as_str()];
    args.extend(ranges);
    assert_eq!(gclrel(&args).status.code(), Some(1));
    let mut same = vec!["check-equiv", c4.as_str(), c4.as_str()];
    same.extend(ranges);
    assert_eq!(gclrel(&same).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(gclrel(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(gclrel(&["parse"]).status.code(), Some(2));
    assert_eq!(gclrel(&["parse", "/nonexistent/file.gcl"]).status.code(), Some(2));
    assert_eq!(gclrel(&["--help"]).status.code(), Some(0));
}
