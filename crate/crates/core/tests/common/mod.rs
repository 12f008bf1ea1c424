//! Shared fixtures and random program generation for the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use gclrel::assertions::{Arity, Formula};
use gclrel::proof::{ObligationKind, ProofTree};
use gclrel::specfile::{parse_spec, SpecFile};
use gclrel::syntax::{parse_program, Command};
use rand::Rng;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn program(name: &str) -> Command {
    parse_program(&fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn spec(name: &str, arity: Arity) -> SpecFile {
    parse_spec(&fixture(name), arity).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Source text of a random program over `vars`. Conditionals use a guard and
/// its syntactic complement, so they are total. Every loop counts a variable
/// toward zero that its body never assigns, so execution terminates.
pub fn gen_source<R: Rng>(rng: &mut R, vars: &[&str], depth: usize) -> String {
    gen_cmd(rng, vars, &[], depth)
}

pub fn gen_program<R: Rng>(rng: &mut R, vars: &[&str], depth: usize) -> Command {
    let src = gen_source(rng, vars, depth);
    parse_program(&src).unwrap_or_else(|e| panic!("generated program does not parse: {e}\n{src}"))
}

fn pick<'a, R: Rng>(rng: &mut R, xs: &[&'a str]) -> &'a str {
    xs[rng.gen_range(0..xs.len())]
}

fn gen_int<R: Rng>(rng: &mut R, vars: &[&str]) -> String {
    match rng.gen_range(0..5) {
        0 => rng.gen_range(-2..=2).to_string(),
        1 => pick(rng, vars).to_string(),
        2 => format!("{} + {}", pick(rng, vars), rng.gen_range(1..=2)),
        3 => format!("{} - {}", pick(rng, vars), pick(rng, vars)),
        _ => format!("{} - 1", pick(rng, vars)),
    }
}

fn gen_bool<R: Rng>(rng: &mut R, vars: &[&str]) -> String {
    match rng.gen_range(0..4) {
        0 => format!("{} < {}", pick(rng, vars), gen_int(rng, vars)),
        1 => format!("{} = {}", pick(rng, vars), rng.gen_range(-1..=1)),
        2 => format!("{} mod 2 = 0", pick(rng, vars)),
        _ => format!("{} >= {}", pick(rng, vars), pick(rng, vars)),
    }
}

fn gen_cmd<R: Rng>(rng: &mut R, vars: &[&str], frozen: &[&str], depth: usize) -> String {
    let free: Vec<&str> = vars.iter().copied().filter(|v| !frozen.contains(v)).collect();
    let choice = if depth == 0 || free.is_empty() { rng.gen_range(0..2) } else { rng.gen_range(0..5) };
    match choice {
        0 if !free.is_empty() => format!("{} := {}", pick(rng, &free), gen_int(rng, vars)),
        0 | 1 => "skip".to_string(),
        2 => format!("{} ; {}", gen_cmd(rng, vars, frozen, depth - 1), gen_cmd(rng, vars, frozen, depth - 1)),
        3 => {
            let b = gen_bool(rng, vars);
            format!(
                "if {b} -> {} [] !({b}) -> {} fi",
                gen_cmd(rng, vars, frozen, depth - 1),
                gen_cmd(rng, vars, frozen, depth - 1)
            )
        }
        _ => {
            let v = pick(rng, &free);
            let mut inner: Vec<&str> = frozen.to_vec();
            inner.push(v);
            let body = gen_cmd(rng, vars, &inner, depth - 1);
            format!("do {v} > 0 -> {body} ; {v} := {v} - 1 od")
        }
    }
}

fn paths(t: &ProofTree) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    t.walk(&mut |p, _| out.push(p.to_vec()));
    out
}

/// Applies one random perturbation to an obligation or a premise of `t`.
pub fn mutate<R: Rng>(t: &ProofTree, rng: &mut R) -> ProofTree {
    let all = paths(t);
    loop {
        let mut m = t.clone();
        let path = all[rng.gen_range(0..all.len())].clone();
        let kind = rng.gen_range(0..4);
        let changed = {
            let node = m.node_mut(&path).expect("path");
            match kind {
                0 if !node.obligations.is_empty() => {
                    let i = rng.gen_range(0..node.obligations.len());
                    match &mut node.obligations[i].kind {
                        ObligationKind::Entails { cons, .. } | ObligationKind::SideCondition { cons, .. } => {
                            *cons = Formula::not(cons.clone());
                        }
                        ObligationKind::Equiv { rhs, .. } => *rhs = Command::seq(rhs.clone(), Command::Skip(0)),
                        ObligationKind::Ghost { var, .. } => var.push('_'),
                        ObligationKind::Indep { formula, .. } => *formula = Formula::not(formula.clone()),
                    }
                    true
                }
                1 if !path.is_empty() => {
                    let post = Formula::not(node.conclusion.post().clone());
                    let j = node.conclusion.with_post(post);
                    let rebuilt = ProofTree::build(node.rule, j.clone(), node.params.clone(), node.premises.clone());
                    match rebuilt {
                        Ok(n) => *node = n,
                        Err(_) => node.conclusion = j,
                    }
                    true
                }
                2 if !node.premises.is_empty() => {
                    let i = rng.gen_range(0..node.premises.len());
                    node.premises.remove(i);
                    true
                }
                3 if !node.premises.is_empty() => {
                    let i = rng.gen_range(0..node.premises.len());
                    let donor = t.node(&all[rng.gen_range(0..all.len())]).expect("path").clone();
                    if donor.conclusion == node.premises[i].conclusion {
                        false
                    } else {
                        node.premises[i] = donor;
                        true
                    }
                }
                _ => false,
            }
        };
        if changed && m != *t {
            return m;
        }
    }
}

