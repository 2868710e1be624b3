//! First-order terms over a ranked alphabet.
//!
//! A [`Term`] is either a variable or an application of a symbol to as many
//! children as the symbol's arity. Symbols and variables are interned as
//! `Arc<str>` so terms can be cloned cheaply and shared across threads.

mod context;
mod parse;
mod unify;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

pub use context::{hole_index, hole_name, is_hole_name, Context};
pub use parse::{parse_term, split_top_level, strip_comment, tokenize_tree, RawTree};
pub use unify::{match_term, match_word, unify};

use crate::error::{Error, Result};

pub type Symbol = Arc<str>;

pub fn sym(name: &str) -> Symbol {
    Arc::from(name)
}

/// Finite ranked alphabet. Symbol order is the declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RankedAlphabet {
    symbols: Vec<(Symbol, usize)>,
    index: BTreeMap<Symbol, usize>,
}

impl RankedAlphabet {
    pub fn new<I, S>(symbols: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: AsRef<str>,
    {
        let mut alphabet = RankedAlphabet::default();
        for (name, arity) in symbols {
            alphabet.add(name.as_ref(), arity)?;
        }
        Ok(alphabet)
    }

    /// Parses the `f/2 g/1 a/0` notation.
    pub fn parse(text: &str) -> Result<Self> {
        let mut alphabet = RankedAlphabet::default();
        for item in text.split_whitespace() {
            let (name, arity) = item
                .rsplit_once('/')
                .ok_or_else(|| Error::Alphabet(format!("expected name/arity, got `{item}`")))?;
            let arity: usize = arity
                .parse()
                .map_err(|_| Error::Alphabet(format!("bad arity in `{item}`")))?;
            alphabet.add(name, arity)?;
        }
        Ok(alphabet)
    }

    pub fn add(&mut self, name: &str, arity: usize) -> Result<()> {
        if name.is_empty() || name.contains(|c: char| c.is_whitespace() || "(),|".contains(c)) {
            return Err(Error::Alphabet(format!("invalid symbol name `{name}`")));
        }
        if is_hole_name(name) {
            return Err(Error::Alphabet(format!("`{name}` is a reserved hole name")));
        }
        match self.index.get(name) {
            Some(&i) if self.symbols[i].1 == arity => Ok(()),
            Some(_) => Err(Error::Alphabet(format!(
                "symbol `{name}` declared with two arities"
            ))),
            None => {
                self.index.insert(sym(name), self.symbols.len());
                self.symbols.push((sym(name), arity));
                Ok(())
            }
        }
    }

    /// Adds every symbol of `other`, failing on arity clashes.
    pub fn merge(&mut self, other: &RankedAlphabet) -> Result<()> {
        for (name, arity) in other.iter() {
            self.add(name, arity)?;
        }
        Ok(())
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.index.get(name).map(|&i| self.symbols[i].1)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Symbol, usize)> + '_ {
        self.symbols.iter().map(|(s, a)| (s, *a))
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn max_arity(&self) -> usize {
        self.symbols.iter().map(|(_, a)| *a).max().unwrap_or(0)
    }

    pub fn has_constant(&self) -> bool {
        self.symbols.iter().any(|(_, a)| *a == 0)
    }

    /// Non-fatal problems with the alphabet.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.has_constant() {
            out.push("alphabet has no constant: there are no ground terms".to_string());
        }
        out
    }

    /// All ground terms of size at most `max_size`, grouped by size.
    pub fn ground_terms_by_size(&self, max_size: usize) -> Vec<Vec<Term>> {
        let mut by_size: Vec<Vec<Term>> = vec![Vec::new(); max_size + 1];
        for size in 1..=max_size {
            let mut level = Vec::new();
            for (name, arity) in self.iter() {
                if arity == 0 {
                    if size == 1 {
                        level.push(Term::App(name.clone(), Vec::new()));
                    }
                    continue;
                }
                if size < arity + 1 {
                    continue;
                }
                let mut acc = Vec::new();
                fill_children(&by_size, arity, size - 1, &mut Vec::new(), &mut acc);
                for children in acc {
                    level.push(Term::App(name.clone(), children));
                }
            }
            by_size[size] = level;
        }
        by_size
    }

    /// All ground terms of size at most `max_size`, sorted.
    pub fn ground_terms(&self, max_size: usize) -> Vec<Term> {
        let mut all: Vec<Term> = self
            .ground_terms_by_size(max_size)
            .into_iter()
            .flatten()
            .collect();
        all.sort();
        all
    }
}

fn fill_children(
    by_size: &[Vec<Term>],
    remaining_slots: usize,
    budget: usize,
    prefix: &mut Vec<Term>,
    out: &mut Vec<Vec<Term>>,
) {
    if remaining_slots == 0 {
        if budget == 0 {
            out.push(prefix.clone());
        }
        return;
    }
    let reserve = remaining_slots - 1;
    for size in 1..=budget.saturating_sub(reserve) {
        for t in &by_size[size] {
            prefix.push(t.clone());
            fill_children(by_size, remaining_slots - 1, budget - size, prefix, out);
            prefix.pop();
        }
    }
}

impl fmt::Display for RankedAlphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|(s, a)| format!("{s}/{a}")).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// A finite first-order term.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Symbol),
    App(Symbol, Vec<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(sym(name))
    }

    pub fn app(name: &str, children: Vec<Term>) -> Term {
        Term::App(sym(name), children)
    }

    pub fn constant(name: &str) -> Term {
        Term::App(sym(name), Vec::new())
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn head(&self) -> &Symbol {
        match self {
            Term::Var(v) => v,
            Term::App(f, _) => f,
        }
    }

    pub fn children(&self) -> &[Term] {
        match self {
            Term::Var(_) => &[],
            Term::App(_, c) => c,
        }
    }

    /// Total node count, variables included.
    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::App(_, c) => 1 + c.iter().map(Term::size).sum::<usize>(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Term::Var(_) => 0,
            Term::App(_, c) => 1 + c.iter().map(Term::depth).max().unwrap_or(0),
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::App(_, c) => c.iter().all(Term::is_ground),
        }
    }

    /// Variable occurrences, left to right, with repetitions.
    pub fn var_occurrences(&self) -> Vec<Symbol> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<Symbol>) {
        match self {
            Term::Var(v) => out.push(v.clone()),
            Term::App(_, c) => c.iter().for_each(|t| t.collect_vars(out)),
        }
    }

    pub fn vars(&self) -> BTreeSet<Symbol> {
        self.var_occurrences().into_iter().collect()
    }

    /// Variables in order of first occurrence.
    pub fn vars_ordered(&self) -> Vec<Symbol> {
        let mut seen = BTreeSet::new();
        self.var_occurrences()
            .into_iter()
            .filter(|v| seen.insert(v.clone()))
            .collect()
    }

    pub fn is_linear(&self) -> bool {
        let occ = self.var_occurrences();
        let set: BTreeSet<_> = occ.iter().collect();
        set.len() == occ.len()
    }

    pub fn check_linear(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for v in self.var_occurrences() {
            if !seen.insert(v.clone()) {
                return Err(Error::NonLinear(v.to_string()));
            }
        }
        Ok(())
    }

    /// Every position of the term in pre-order.
    pub fn positions(&self) -> Vec<Position> {
        let mut out = Vec::new();
        self.collect_positions(&mut Vec::new(), &mut out);
        out
    }

    fn collect_positions(&self, prefix: &mut Vec<usize>, out: &mut Vec<Position>) {
        out.push(Position(prefix.clone()));
        for (i, c) in self.children().iter().enumerate() {
            prefix.push(i + 1);
            c.collect_positions(prefix, out);
            prefix.pop();
        }
    }

    /// Positions labelled by a function symbol.
    pub fn function_positions(&self) -> Vec<Position> {
        self.positions()
            .into_iter()
            .filter(|p| !self.subterm_at(p).map(Term::is_var).unwrap_or(true))
            .collect()
    }

    pub fn subterm_at(&self, pos: &Position) -> Option<&Term> {
        let mut cur = self;
        for &i in &pos.0 {
            cur = cur.children().get(i.checked_sub(1)?)?;
        }
        Some(cur)
    }

    pub fn replace_at(&self, pos: &Position, replacement: Term) -> Result<Term> {
        self.replace_rec(&pos.0, replacement)
            .ok_or_else(|| Error::InvalidPosition(pos.to_string()))
    }

    fn replace_rec(&self, path: &[usize], replacement: Term) -> Option<Term> {
        match path.split_first() {
            None => Some(replacement),
            Some((&i, rest)) => match self {
                Term::App(f, c) if i >= 1 && i <= c.len() => {
                    let mut children = c.clone();
                    children[i - 1] = c[i - 1].replace_rec(rest, replacement)?;
                    Some(Term::App(f.clone(), children))
                }
                _ => None,
            },
        }
    }

    pub fn substitute(&self, sigma: &Substitution) -> Term {
        match self {
            Term::Var(v) => sigma.get(v).cloned().unwrap_or_else(|| self.clone()),
            Term::App(f, c) => Term::App(f.clone(), c.iter().map(|t| t.substitute(sigma)).collect()),
        }
    }

    pub fn rename_vars(&self, map: &HashMap<Symbol, Symbol>) -> Term {
        match self {
            Term::Var(v) => Term::Var(map.get(v).cloned().unwrap_or_else(|| v.clone())),
            Term::App(f, c) => Term::App(f.clone(), c.iter().map(|t| t.rename_vars(map)).collect()),
        }
    }

    /// Renames variables to `x1, x2, ...` in order of first occurrence.
    pub fn canonical(&self) -> Term {
        canonical_word(std::slice::from_ref(self)).pop().unwrap()
    }

    /// Function symbols used, with their arities.
    pub fn symbols(&self) -> BTreeSet<(Symbol, usize)> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<(Symbol, usize)>) {
        if let Term::App(f, c) = self {
            out.insert((f.clone(), c.len()));
            c.iter().for_each(|t| t.collect_symbols(out));
        }
    }

    /// Checks every symbol against the alphabet.
    pub fn check_alphabet(&self, alphabet: &RankedAlphabet) -> Result<()> {
        for (f, n) in self.symbols() {
            match alphabet.arity(&f) {
                None => {
                    return Err(Error::Parse {
                        offset: 0,
                        kind: crate::error::ParseErrorKind::UnknownSymbol(f.to_string()),
                    })
                }
                Some(a) if a != n => {
                    return Err(Error::Parse {
                        offset: 0,
                        kind: crate::error::ParseErrorKind::ArityMismatch {
                            symbol: f.to_string(),
                            expected: a,
                            found: n,
                        },
                    })
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn equal_up_to_renaming(&self, other: &Term) -> bool {
        self.canonical() == other.canonical()
    }
}

/// Renames the variables of a term word jointly to `x1, x2, ...`.
pub fn canonical_word(word: &[Term]) -> Vec<Term> {
    canonical_word_with_prefix(word, "x")
}

pub fn canonical_word_with_prefix(word: &[Term], prefix: &str) -> Vec<Term> {
    let mut map: HashMap<Symbol, Symbol> = HashMap::new();
    for t in word {
        for v in t.var_occurrences() {
            let next = map.len() + 1;
            map.entry(v).or_insert_with(|| sym(&format!("{prefix}{next}")));
        }
    }
    word.iter().map(|t| t.rename_vars(&map)).collect()
}

/// Renames the variables of `t` so they avoid every name in `avoid`.
pub fn rename_apart(t: &Term, avoid: &BTreeSet<Symbol>, suffix: &str) -> Term {
    let mut map = HashMap::new();
    for v in t.vars() {
        let mut candidate = format!("{v}{suffix}");
        while avoid.contains(candidate.as_str()) {
            candidate.push('\'');
        }
        map.insert(v, sym(&candidate));
    }
    t.rename_vars(&map)
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::App(s, c) if c.is_empty() => write!(f, "{s}"),
            Term::App(s, c) => {
                write!(f, "{s}(")?;
                for (i, t) in c.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, ")")
            }
        }
    }
}

pub fn format_word(word: &[Term]) -> String {
    let parts: Vec<String> = word.iter().map(Term::to_string).collect();
    format!("({})", parts.join(", "))
}

/// A node address: a sequence of 1-based child indices, empty for the root.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Position(pub Vec<usize>);

impl Position {
    pub fn root() -> Position {
        Position(Vec::new())
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, i: usize) -> Position {
        let mut v = self.0.clone();
        v.push(i);
        Position(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `self >= other` in the prefix order: `other` is a prefix of `self`.
    pub fn extends(&self, other: &Position) -> bool {
        self.0.starts_with(&other.0)
    }

    /// `self > other`: `other` is a proper prefix of `self`.
    pub fn strictly_extends(&self, other: &Position) -> bool {
        self.0.len() > other.0.len() && self.extends(other)
    }

    pub fn concat(&self, suffix: &Position) -> Position {
        let mut v = self.0.clone();
        v.extend_from_slice(&suffix.0);
        Position(v)
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "ε");
        }
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        write!(f, "{}", parts.join("."))
    }
}

/// Finite map from variables to terms; identity outside its domain.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Substitution(BTreeMap<Symbol, Term>);

impl Substitution {
    pub fn new() -> Self {
        Substitution(BTreeMap::new())
    }

    pub fn from_pairs<I: IntoIterator<Item = (Symbol, Term)>>(pairs: I) -> Self {
        Substitution(pairs.into_iter().collect())
    }

    pub fn get(&self, v: &str) -> Option<&Term> {
        self.0.get(v)
    }

    pub fn insert(&mut self, v: Symbol, t: Term) -> Option<Term> {
        self.0.insert(v, t)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Symbol, &Term)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True when every value is a variable and no two keys share a value.
    pub fn is_bijective_renaming(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.0.values().all(|t| match t {
            Term::Var(v) => seen.insert(v.clone()),
            _ => false,
        })
    }

    /// `self` followed by `other`: `t.substitute(&a.then(&b)) == t.substitute(&a).substitute(&b)`.
    pub fn then(&self, other: &Substitution) -> Substitution {
        let mut out: BTreeMap<Symbol, Term> = self
            .0
            .iter()
            .map(|(k, v)| (k.clone(), v.substitute(other)))
            .collect();
        for (k, v) in &other.0 {
            out.entry(k.clone()).or_insert_with(|| v.clone());
        }
        Substitution(out)
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}↦{v}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}
