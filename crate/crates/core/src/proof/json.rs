//! JSON exchange format for proof trees. Commands and formulas are stored in
//! surface syntax with explicit labels; obligations carry stable ids made of
//! the node path and the obligation name.

use serde_json::{json, Map, Value};

use super::{path_string, Judgment, Obligation, ObligationKind, Params, ProofError, ProofTree, Rule};
use crate::assertions::{parse_formula, Arity, Formula};
use crate::syntax::{parse_command_exact, Command};

pub const FORMAT: &str = "gclrel-proof/1";

/// A proof tree with the counter it was synthesized for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofDocument {
    pub pc: String,
    pub pc_domain: Vec<i64>,
    pub root: ProofTree,
}

pub fn to_json(doc: &ProofDocument) -> String {
    let v = json!({
        "format": FORMAT,
        "pc": doc.pc,
        "pc_domain": doc.pc_domain,
        "root": node_json(&doc.root, &mut Vec::new()),
    });
    let mut s = serde_json::to_string_pretty(&v).expect("json values serialize");
    s.push('\n');
    s
}

fn node_json(t: &ProofTree, path: &mut Vec<usize>) -> Value {
    let a = t.conclusion.arity();
    let id = path_string(path);
    let conclusion = match &t.conclusion {
        Judgment::Unary { cmd, pre, post } => json!({
            "kind": "unary",
            "cmd": cmd.to_string(),
            "pre": pre.render(a),
            "post": post.render(a),
        }),
        Judgment::Rel { left, right, pre, post } => json!({
            "kind": "relational",
            "left": left.to_string(),
            "right": right.to_string(),
            "pre": pre.render(a),
            "post": post.render(a),
        }),
    };
    let mut obj = Map::new();
    obj.insert("id".into(), json!(id));
    obj.insert("rule".into(), json!(t.rule.name()));
    obj.insert("conclusion".into(), conclusion);
    match &t.params {
        Params::None => {}
        Params::Ghost(x) => {
            obj.insert("params".into(), json!({ "ghost": x }));
        }
        Params::RGhost(x, y) => {
            obj.insert("params".into(), json!({ "ghost_left": x, "ghost_right": y }));
        }
        Params::Align { l, r } => {
            obj.insert("params".into(), json!({ "left_only": l.render(Arity::Rel), "right_only": r.render(Arity::Rel) }));
        }
    }
    let obs: Vec<Value> = t
        .obligations
        .iter()
        .map(|ob| {
            let mut o = Map::new();
            o.insert("id".into(), json!(format!("{id}#{}", ob.name)));
            o.insert("kind".into(), json!(ob.kind.tag()));
            match &ob.kind {
                ObligationKind::Entails { ante, cons } | ObligationKind::SideCondition { ante, cons } => {
                    o.insert("ante".into(), json!(ante.render(a)));
                    o.insert("cons".into(), json!(cons.render(a)));
                }
                ObligationKind::Equiv { lhs, rhs } => {
                    o.insert("lhs".into(), json!(lhs.to_string()));
                    o.insert("rhs".into(), json!(rhs.to_string()));
                }
                ObligationKind::Ghost { var, cmd } => {
                    o.insert("var".into(), json!(var));
                    o.insert("cmd".into(), json!(cmd.to_string()));
                }
                ObligationKind::Indep { left, right, formula } => {
                    o.insert("left".into(), json!(left));
                    o.insert("right".into(), json!(right));
                    o.insert("formula".into(), json!(formula.render(a)));
                }
            }
            Value::Object(o)
        })
        .collect();
    obj.insert("obligations".into(), Value::Array(obs));
    let children: Vec<Value> = t
        .premises
        .iter()
        .enumerate()
        .map(|(i, p)| {
            path.push(i);
            let v = node_json(p, path);
            path.pop();
            v
        })
        .collect();
    obj.insert("children".into(), Value::Array(children));
    Value::Object(obj)
}

fn bad(msg: impl Into<String>) -> ProofError {
    ProofError::Format(msg.into())
}

fn field<'a>(v: &'a Value, key: &str, at: &str) -> Result<&'a Value, ProofError> {
    v.get(key).ok_or_else(|| bad(format!("{at}: missing field '{key}'")))
}

fn string<'a>(v: &'a Value, key: &str, at: &str) -> Result<&'a str, ProofError> {
    field(v, key, at)?.as_str().ok_or_else(|| bad(format!("{at}: field '{key}' is not a string")))
}

fn opt_string(v: &Value, key: &str, at: &str) -> Result<Option<String>, ProofError> {
    match v.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(bad(format!("{at}: field '{key}' is not a string"))),
    }
}

fn formula(v: &Value, key: &str, arity: Arity, at: &str) -> Result<Formula, ProofError> {
    let s = string(v, key, at)?;
    parse_formula(s, arity).map_err(|e| bad(format!("{at}: {key}: {e}")))
}

fn command(v: &Value, key: &str, at: &str) -> Result<Command, ProofError> {
    let s = string(v, key, at)?;
    parse_command_exact(s).map_err(|e| bad(format!("{at}: {key}: {e}")))
}

pub fn from_json(src: &str) -> Result<ProofDocument, ProofError> {
    let v: Value = serde_json::from_str(src).map_err(|e| bad(e.to_string()))?;
    let format = string(&v, "format", "document")?;
    if format != FORMAT {
        return Err(bad(format!("unsupported format '{format}'")));
    }
    let pc = string(&v, "pc", "document")?.to_string();
    let pc_domain = field(&v, "pc_domain", "document")?
        .as_array()
        .ok_or_else(|| bad("document: pc_domain is not an array"))?
        .iter()
        .map(|x| x.as_i64().ok_or_else(|| bad("document: pc_domain holds a non-integer")))
        .collect::<Result<Vec<_>, _>>()?;
    let root = node_from(field(&v, "root", "document")?, "/")?;
    Ok(ProofDocument { pc, pc_domain, root })
}

fn node_from(v: &Value, at: &str) -> Result<ProofTree, ProofError> {
    let rule_name = string(v, "rule", at)?;
    let rule = Rule::from_name(rule_name).ok_or_else(|| bad(format!("{at}: unknown rule '{rule_name}'")))?;
    let c = field(v, "conclusion", at)?;
    let (conclusion, arity) = match string(c, "kind", at)? {
        "unary" => (
            Judgment::unary(command(c, "cmd", at)?, formula(c, "pre", Arity::Unary, at)?, formula(c, "post", Arity::Unary, at)?),
            Arity::Unary,
        ),
        "relational" => (
            Judgment::rel(
                command(c, "left", at)?,
                command(c, "right", at)?,
                formula(c, "pre", Arity::Rel, at)?,
                formula(c, "post", Arity::Rel, at)?,
            ),
            Arity::Rel,
        ),
        k => return Err(bad(format!("{at}: unknown judgment kind '{k}'"))),
    };
    let params = match v.get("params") {
        None | Some(Value::Null) => Params::None,
        Some(p) if p.get("ghost").is_some() => Params::Ghost(string(p, "ghost", at)?.to_string()),
        Some(p) if p.get("ghost_left").is_some() => {
            Params::RGhost(string(p, "ghost_left", at)?.to_string(), string(p, "ghost_right", at)?.to_string())
        }
        Some(p) if p.get("left_only").is_some() => Params::Align {
            l: formula(p, "left_only", Arity::Rel, at)?,
            r: formula(p, "right_only", Arity::Rel, at)?,
        },
        Some(_) => return Err(bad(format!("{at}: unrecognized params"))),
    };
    let mut obligations = Vec::new();
    for o in field(v, "obligations", at)?.as_array().ok_or_else(|| bad(format!("{at}: obligations is not an array")))? {
        let id = string(o, "id", at)?;
        let name = id.rsplit_once('#').map(|(_, n)| n).unwrap_or(id).to_string();
        let kind = match string(o, "kind", at)? {
            "entails" => ObligationKind::Entails { ante: formula(o, "ante", arity, at)?, cons: formula(o, "cons", arity, at)? },
            "side-condition" => {
                ObligationKind::SideCondition { ante: formula(o, "ante", arity, at)?, cons: formula(o, "cons", arity, at)? }
            }
            "equivalence" => ObligationKind::Equiv { lhs: command(o, "lhs", at)?, rhs: command(o, "rhs", at)? },
            "ghost" => ObligationKind::Ghost { var: string(o, "var", at)?.to_string(), cmd: command(o, "cmd", at)? },
            "indep" => ObligationKind::Indep {
                left: opt_string(o, "left", at)?,
                right: opt_string(o, "right", at)?,
                formula: formula(o, "formula", arity, at)?,
            },
            k => return Err(bad(format!("{at}: unknown obligation kind '{k}'"))),
        };
        obligations.push(Obligation { name, kind });
    }
    let children = field(v, "children", at)?.as_array().ok_or_else(|| bad(format!("{at}: children is not an array")))?;
    let premises = children
        .iter()
        .enumerate()
        .map(|(i, ch)| {
            let sub = if at == "/" { format!("/{i}") } else { format!("{at}/{i}") };
            node_from(ch, &sub)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ProofTree { rule, conclusion, params, premises, obligations })
}
