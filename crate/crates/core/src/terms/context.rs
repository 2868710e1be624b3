use std::collections::HashMap;
use std::fmt;

use super::{sym, Symbol, Term};
use crate::error::{Error, Result};

const HOLE: char = '□';

pub fn hole_name(i: usize) -> String {
    format!("{HOLE}{i}")
}

/// `□` followed by digits (or bare `□`) is reserved.
pub fn is_hole_name(name: &str) -> bool {
    match name.strip_prefix(HOLE) {
        Some(rest) => rest.chars().all(|c| c.is_ascii_digit()),
        None => false,
    }
}

/// `Some(i)` when `t` is the hole `□i`.
pub fn hole_index(t: &Term) -> Option<usize> {
    match t {
        Term::App(f, c) if c.is_empty() => f.strip_prefix(HOLE)?.parse().ok(),
        _ => None,
    }
}

/// A term whose leaves may be holes `□1 … □n`, each occurring exactly once.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Context(Term);

impl Context {
    /// The trivial 1-context `□1`.
    pub fn hole() -> Context {
        Context(Term::constant(&hole_name(1)))
    }

    /// Replaces the i-th variable occurrence with `□i`.
    pub fn from_term(t: &Term) -> Result<(Context, Vec<Symbol>)> {
        t.check_linear()?;
        let order = t.var_occurrences();
        let map: HashMap<Symbol, usize> = order.iter().enumerate().map(|(i, v)| (v.clone(), i + 1)).collect();
        Ok((Context(holify(t, &map)), order))
    }

    /// Wraps a term that already uses hole constants; renumbers them left to right.
    pub fn from_hole_term(t: Term) -> Result<Context> {
        let mut seen = Vec::new();
        collect_holes(&t, &mut seen);
        let mut sorted = seen.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != seen.len() {
            return Err(Error::Invalid(format!("context `{t}` repeats a hole")));
        }
        Ok(Context(t).canonical())
    }

    pub fn term(&self) -> &Term {
        &self.0
    }

    pub fn arity(&self) -> usize {
        let mut holes = Vec::new();
        collect_holes(&self.0, &mut holes);
        holes.len()
    }

    pub fn is_hole(&self) -> bool {
        hole_index(&self.0).is_some()
    }

    /// Replaces `□i` by `args[i-1]`.
    pub fn plug(&self, args: &[Term]) -> Result<Term> {
        if args.len() != self.arity() {
            return Err(Error::Dimension {
                expected: self.arity(),
                found: args.len(),
            });
        }
        Ok(plug_rec(&self.0, args))
    }

    /// Renumbers holes `1..n` in left-to-right order.
    pub fn canonical(&self) -> Context {
        let mut holes = Vec::new();
        collect_holes(&self.0, &mut holes);
        let map: HashMap<usize, usize> = holes.iter().enumerate().map(|(k, &i)| (i, k + 1)).collect();
        Context(renumber(&self.0, &map))
    }

    /// The context with holes turned into variables `prefix1, prefix2, …`.
    pub fn to_term_with_vars(&self, prefix: &str) -> Term {
        let n = self.arity();
        let vars: Vec<Term> = (1..=n).map(|i| Term::var(&format!("{prefix}{i}"))).collect();
        plug_rec(&self.0, &vars)
    }

    /// Hole positions in hole order.
    pub fn hole_positions(&self) -> Vec<super::Position> {
        let mut found: Vec<(usize, super::Position)> = self
            .0
            .positions()
            .into_iter()
            .filter_map(|p| hole_index(self.0.subterm_at(&p)?).map(|i| (i, p)))
            .collect();
        found.sort();
        found.into_iter().map(|(_, p)| p).collect()
    }
}

fn holify(t: &Term, map: &HashMap<Symbol, usize>) -> Term {
    match t {
        Term::Var(v) => Term::App(sym(&hole_name(map[v])), Vec::new()),
        Term::App(f, c) => Term::App(f.clone(), c.iter().map(|s| holify(s, map)).collect()),
    }
}

fn collect_holes(t: &Term, out: &mut Vec<usize>) {
    if let Some(i) = hole_index(t) {
        out.push(i);
        return;
    }
    t.children().iter().for_each(|c| collect_holes(c, out));
}

fn plug_rec(t: &Term, args: &[Term]) -> Term {
    if let Some(i) = hole_index(t) {
        return args[i - 1].clone();
    }
    match t {
        Term::Var(_) => t.clone(),
        Term::App(f, c) => Term::App(f.clone(), c.iter().map(|s| plug_rec(s, args)).collect()),
    }
}

fn renumber(t: &Term, map: &HashMap<usize, usize>) -> Term {
    if let Some(i) = hole_index(t) {
        return Term::constant(&hole_name(map[&i]));
    }
    match t {
        Term::Var(_) => t.clone(),
        Term::App(f, c) => Term::App(f.clone(), c.iter().map(|s| renumber(s, map)).collect()),
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::{parse_term, RankedAlphabet};

    fn t(s: &str) -> Term {
        let alphabet = RankedAlphabet::parse("f/2 g/1 a/0").unwrap();
        parse_term(s, &alphabet, &["x", "y"]).unwrap()
    }

    #[test]
    fn left_to_right_numbering() {
        let (c, vars) = Context::from_term(&t("f(g(y),x)")).unwrap();
        assert_eq!(c.to_string(), "f(g(□1),□2)");
        assert_eq!(vars, vec![sym("y"), sym("x")]);
        assert_eq!(c.plug(&[Term::var("y"), Term::var("x")]).unwrap(), t("f(g(y),x)"));
        let (c, vars) = Context::from_term(&t("a")).unwrap();
        assert_eq!((c.arity(), vars.len()), (0, 0));
    }

    #[test]
    fn rejects_nonlinear() {
        assert!(Context::from_term(&t("f(x,x)")).is_err());
    }

    #[test]
    fn canonical_is_stable() {
        let raw = Term::app("f", vec![Term::constant("□2"), Term::constant("□1")]);
        let c = Context::from_hole_term(raw).unwrap();
        assert_eq!(c.to_string(), "f(□1,□2)");
        assert_eq!(c.canonical(), c);
        assert!(is_hole_name("□12") && !is_hole_name("a□"));
    }
}
