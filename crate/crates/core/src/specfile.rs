//! Text format for specifications, annotations and alignment conditions.
//!
//! ```text
//! [define]
//! S = eq(y, y) && lhs(y > 3)
//! [spec]
//! pre = eq(x, x)
//! post = eq(z, z)
//! vars = a, b
//! [annotation]
//! 1,1 = S
//! [align.L]
//! (4,*) = lhs(w mod 2 != 0)
//! ```
//!
//! Unary files use single labels as annotation keys and bare boolean
//! expressions. Indented lines continue the previous entry. `#` starts a comment.

use thiserror::Error;

use crate::assertions::{parse_formula_with, Arity, Defs, Formula, Pat, RelAnnotation, StateRelSpec, UnaryAnnotation};
use crate::syntax::{Label, SyntaxError};

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("line {line}: {err}")]
    Formula { line: usize, err: SyntaxError },
}

#[derive(Clone, Debug, Default)]
pub struct SpecFile {
    pub pre: Option<Formula>,
    pub post: Option<Formula>,
    pub vars: Vec<String>,
    pub unary: UnaryAnnotation,
    pub rel: RelAnnotation,
    pub l: StateRelSpec,
    pub r: StateRelSpec,
    pub j: StateRelSpec,
}

impl SpecFile {
    pub fn pre(&self) -> Formula {
        self.pre.clone().unwrap_or(Formula::True)
    }

    pub fn post(&self) -> Formula {
        self.post.clone().unwrap_or(Formula::True)
    }
}

fn parse_label(s: &str, line: usize) -> Result<Label, SpecError> {
    s.trim().parse::<Label>().map_err(|_| SpecError::Line { line, msg: format!("bad label '{}'", s.trim()) })
}

fn parse_pat(s: &str, line: usize) -> Result<Pat, SpecError> {
    if s.trim() == "*" {
        Ok(Pat::Any)
    } else {
        Ok(Pat::At(parse_label(s, line)?))
    }
}

/// Entries as (line, section, key, value) with continuation lines joined.
fn entries(src: &str) -> Result<Vec<(usize, String, String, String)>, SpecError> {
    let mut out: Vec<(usize, String, String, String)> = Vec::new();
    let mut section = String::new();
    for (i, raw) in src.lines().enumerate() {
        let line = i + 1;
        let text = raw.split('#').next().unwrap_or("");
        if text.trim().is_empty() {
            continue;
        }
        if text.starts_with(' ') || text.starts_with('\t') {
            match out.last_mut() {
                Some(last) => {
                    last.3.push(' ');
                    last.3.push_str(text.trim());
                    continue;
                }
                None => return Err(SpecError::Line { line, msg: "continuation without an entry".into() }),
            }
        }
        let t = text.trim();
        if t.starts_with('[') && t.ends_with(']') {
            section = t[1..t.len() - 1].trim().to_string();
            continue;
        }
        let Some(eq) = t.find('=') else {
            return Err(SpecError::Line { line, msg: format!("expected 'key = value', found '{t}'") });
        };
        out.push((line, section.clone(), t[..eq].trim().to_string(), t[eq + 1..].trim().to_string()));
    }
    Ok(out)
}

pub fn parse_spec(src: &str, arity: Arity) -> Result<SpecFile, SpecError> {
    let mut defs = Defs::new();
    let mut spec = SpecFile::default();
    for (line, section, key, value) in entries(src)? {
        let formula = |defs: &Defs| {
            parse_formula_with(&value, arity, defs).map_err(|err| SpecError::Formula { line, err })
        };
        match section.as_str() {
            "define" => {
                let f = formula(&defs)?;
                defs.insert(key, f);
            }
            "spec" => match key.as_str() {
                "pre" => spec.pre = Some(formula(&defs)?),
                "post" => spec.post = Some(formula(&defs)?),
                "vars" => spec.vars.extend(value.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty())),
                _ => return Err(SpecError::Line { line, msg: format!("unknown key '{key}' in [spec]") }),
            },
            "annotation" => {
                let f = formula(&defs)?;
                match key.split_once(',') {
                    Some((a, b)) => {
                        if arity == Arity::Unary {
                            return Err(SpecError::Line { line, msg: "pair key in a unary annotation".into() });
                        }
                        spec.rel.set(parse_label(a, line)?, parse_label(b, line)?, f);
                    }
                    None => {
                        if arity == Arity::Rel {
                            return Err(SpecError::Line { line, msg: "single key in a relational annotation".into() });
                        }
                        spec.unary.set(parse_label(&key, line)?, f);
                    }
                }
            }
            "align.L" | "align.R" | "align.J" => {
                let inner = key
                    .strip_prefix('(')
                    .and_then(|k| k.strip_suffix(')'))
                    .ok_or_else(|| SpecError::Line { line, msg: format!("expected '(n,m)', found '{key}'") })?;
                let (a, b) = inner
                    .split_once(',')
                    .ok_or_else(|| SpecError::Line { line, msg: format!("expected '(n,m)', found '{key}'") })?;
                let (lp, rp) = (parse_pat(a, line)?, parse_pat(b, line)?);
                let f = formula(&defs)?;
                let target = match section.as_str() {
                    "align.L" => &mut spec.l,
                    "align.R" => &mut spec.r,
                    _ => &mut spec.j,
                };
                *target = std::mem::take(target).with(lp, rp, f);
            }
            other => return Err(SpecError::Line { line, msg: format!("unknown section [{other}]") }),
        }
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relational_file() {
        let src = "[define]\nS = eq(y, y)\n[spec]\npre = S\npost = eq(x, x)\n[annotation]\n1,1 = S &&\n   lhs(y > 0)\n[align.J]\n(1,*) = true\n";
        let s = parse_spec(src, Arity::Rel).unwrap();
        assert!(s.pre.is_some());
        assert_eq!(s.rel.map.len(), 1);
        assert_eq!(s.j.clauses.len(), 1);
        assert_eq!(s.j.clauses[0].right, Pat::Any);
        assert_eq!(s.rel.get(2, 2), Formula::False);
    }

    #[test]
    fn unary_file() {
        let src = "[spec]\npre = true\npost = x <= 0\n[annotation]\n6 = x <= 0\n";
        let s = parse_spec(src, Arity::Unary).unwrap();
        assert_eq!(s.unary.map.len(), 1);
    }
}
