//! Grammars over tuples of trees.
//!
//! A production body is a word of trees whose leaves may be instance
//! variables `N#i.j` (component `j` of the `i`-th instance of `N`). Every
//! instance used in a body contributes all of its components exactly once.
//! A nonterminal may carry a split `(p, q)`: its first `p` components form
//! the input side of a binary relation and the last `q` the output side.

mod enumerate;
mod membership;
mod ops;
mod text;
mod tuple_lang;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub use enumerate::{derive_enumerate, DeriveOrder, Enumerator};
pub use membership::Membership;
pub use ops::{image_grammar, project_split, swap_projections, Side};
pub use tuple_lang::{iterate_subst, subst_product, TupleLanguage};

use crate::error::{Error, Result};
use crate::terms::{Symbol, Term};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NonTerminal {
    pub name: Symbol,
    pub arity: usize,
    pub split: Option<(usize, usize)>,
}

impl NonTerminal {
    pub fn new(name: &str, arity: usize, split: Option<(usize, usize)>) -> Self {
        NonTerminal {
            name: crate::terms::sym(name),
            arity,
            split,
        }
    }

    /// Component indices (0-based) of one side.
    pub fn side_components(&self, side: Side) -> Result<std::ops::Range<usize>> {
        let (p, q) = self.split.ok_or_else(|| Error::NoSplit(self.name.to_string()))?;
        Ok(match side {
            Side::Left => 0..p,
            Side::Right => p..p + q,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InstanceVar {
    pub nt: Symbol,
    /// 1-based.
    pub instance: usize,
    /// 1-based.
    pub component: usize,
}

impl fmt::Display for InstanceVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}.{}", self.nt, self.instance, self.component)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BodyTerm {
    Inst(InstanceVar),
    App(Symbol, Vec<BodyTerm>),
}

impl BodyTerm {
    pub fn inst(nt: &Symbol, instance: usize, component: usize) -> BodyTerm {
        BodyTerm::Inst(InstanceVar {
            nt: nt.clone(),
            instance,
            component,
        })
    }

    /// A ground term as a body tree.
    pub fn from_term(t: &Term) -> Result<BodyTerm> {
        match t {
            Term::Var(v) => Err(Error::NonGround(v.to_string())),
            Term::App(f, c) => Ok(BodyTerm::App(
                f.clone(),
                c.iter().map(BodyTerm::from_term).collect::<Result<_>>()?,
            )),
        }
    }

    pub fn instance_vars(&self) -> Vec<&InstanceVar> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect<'a>(&'a self, out: &mut Vec<&'a InstanceVar>) {
        match self {
            BodyTerm::Inst(v) => out.push(v),
            BodyTerm::App(_, c) => c.iter().for_each(|b| b.collect(out)),
        }
    }

    /// Number of terminal symbols.
    pub fn terminal_size(&self) -> usize {
        match self {
            BodyTerm::Inst(_) => 0,
            BodyTerm::App(_, c) => 1 + c.iter().map(BodyTerm::terminal_size).sum::<usize>(),
        }
    }

    /// Instance variables become term variables named `N#i.j`.
    pub fn to_open_term(&self) -> Term {
        match self {
            BodyTerm::Inst(v) => Term::Var(crate::terms::sym(&v.to_string())),
            BodyTerm::App(f, c) => Term::App(f.clone(), c.iter().map(BodyTerm::to_open_term).collect()),
        }
    }

    pub fn map_vars(&self, f: &mut impl FnMut(&InstanceVar) -> BodyTerm) -> BodyTerm {
        match self {
            BodyTerm::Inst(v) => f(v),
            BodyTerm::App(s, c) => BodyTerm::App(s.clone(), c.iter().map(|b| b.map_vars(f)).collect()),
        }
    }

    /// Replaces instance variables using `value`.
    pub fn instantiate(&self, value: &impl Fn(&InstanceVar) -> Term) -> Term {
        match self {
            BodyTerm::Inst(v) => value(v),
            BodyTerm::App(s, c) => Term::App(s.clone(), c.iter().map(|b| b.instantiate(value)).collect()),
        }
    }
}

impl fmt::Display for BodyTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BodyTerm::Inst(v) => write!(f, "{v}"),
            BodyTerm::App(s, c) if c.is_empty() => write!(f, "{s}"),
            BodyTerm::App(s, c) => {
                write!(f, "{s}(")?;
                for (i, b) in c.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{b}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Production {
    pub head: Symbol,
    pub body: Vec<BodyTerm>,
}

impl Production {
    /// Instances used by the body: `(nonterminal, instance)` in first-occurrence order.
    pub fn instances(&self) -> Vec<(Symbol, usize)> {
        let mut seen = Vec::new();
        for b in &self.body {
            for v in b.instance_vars() {
                let key = (v.nt.clone(), v.instance);
                if !seen.contains(&key) {
                    seen.push(key);
                }
            }
        }
        seen
    }

    pub fn terminal_size(&self) -> usize {
        self.body.iter().map(BodyTerm::terminal_size).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub production: Option<usize>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.production {
            Some(i) => write!(f, "production {}: {}", i + 1, self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TupleGrammar {
    pub alphabet: crate::terms::RankedAlphabet,
    /// Declaration order is kept for printing.
    pub nonterminals: Vec<NonTerminal>,
    pub productions: Vec<Production>,
    pub axiom: Symbol,
    /// Free-form notes per nonterminal, printed as comments.
    pub notes: BTreeMap<Symbol, String>,
}

impl TupleGrammar {
    pub fn new(alphabet: crate::terms::RankedAlphabet, axiom: &str) -> Self {
        TupleGrammar {
            alphabet,
            axiom: crate::terms::sym(axiom),
            ..Default::default()
        }
    }

    pub fn nonterminal(&self, name: &str) -> Option<&NonTerminal> {
        self.nonterminals.iter().find(|n| &*n.name == name)
    }

    pub fn add_nonterminal(&mut self, nt: NonTerminal) -> Result<()> {
        match self.nonterminal(&nt.name) {
            Some(old) if *old == nt => Ok(()),
            Some(_) => Err(Error::Invalid(format!("nonterminal `{}` declared twice", nt.name))),
            None => {
                self.nonterminals.push(nt);
                Ok(())
            }
        }
    }

    pub fn add_production(&mut self, p: Production) {
        if !self.productions.contains(&p) {
            self.productions.push(p);
        }
    }

    pub fn arities(&self) -> BTreeMap<Symbol, usize> {
        self.nonterminals.iter().map(|n| (n.name.clone(), n.arity)).collect()
    }

    /// Productions grouped by head.
    pub fn productions_by_head(&self) -> BTreeMap<Symbol, Vec<&Production>> {
        let mut out: BTreeMap<Symbol, Vec<&Production>> = BTreeMap::new();
        for p in &self.productions {
            out.entry(p.head.clone()).or_default().push(p);
        }
        out
    }

    /// Structural checks; never fails, returns every problem found.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let arities = self.arities();
        let mut names = BTreeSet::new();
        for nt in &self.nonterminals {
            if !names.insert(nt.name.clone()) {
                out.push(Violation {
                    production: None,
                    message: format!("nonterminal `{}` declared twice", nt.name),
                });
            }
            if let Some((p, q)) = nt.split {
                if p + q != nt.arity {
                    out.push(Violation {
                        production: None,
                        message: format!("split {p} {q} of `{}` does not add up to arity {}", nt.name, nt.arity),
                    });
                }
            }
        }
        if !arities.contains_key(&self.axiom) {
            out.push(Violation {
                production: None,
                message: format!("axiom `{}` is not declared", self.axiom),
            });
        }
        for (i, p) in self.productions.iter().enumerate() {
            let mut bad = |message: String| {
                out.push(Violation {
                    production: Some(i),
                    message,
                })
            };
            match arities.get(&p.head) {
                None => bad(format!("undeclared head `{}`", p.head)),
                Some(&n) if n != p.body.len() => {
                    bad(format!("head `{}` has arity {n} but the body has {} trees", p.head, p.body.len()))
                }
                _ => {}
            }
            for b in &p.body {
                check_symbols(b, &self.alphabet, &mut bad);
            }
            let mut seen: BTreeSet<&InstanceVar> = BTreeSet::new();
            let mut groups: BTreeMap<(Symbol, usize), BTreeSet<usize>> = BTreeMap::new();
            for b in &p.body {
                for v in b.instance_vars() {
                    if !seen.insert(v) {
                        bad(format!("instance variable {v} occurs twice"));
                    }
                    groups.entry((v.nt.clone(), v.instance)).or_default().insert(v.component);
                }
            }
            for ((nt, inst), comps) in groups {
                match arities.get(&nt) {
                    None => bad(format!("instance of undeclared nonterminal `{nt}`")),
                    Some(&n) => {
                        let want: BTreeSet<usize> = (1..=n).collect();
                        if comps != want {
                            bad(format!(
                                "instance {inst} of `{nt}` uses components {comps:?}, expected all of 1..={n}"
                            ));
                        }
                    }
                }
            }
        }
        out
    }

    pub fn check(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            let msgs: Vec<String> = v.iter().map(ToString::to_string).collect();
            Err(Error::Invalid(format!("invalid grammar: {}", msgs.join("; "))))
        }
    }

    /// Nonterminals that derive at least one ground tuple.
    pub fn productive(&self) -> BTreeSet<Symbol> {
        let mut productive: BTreeSet<Symbol> = BTreeSet::new();
        loop {
            let before = productive.len();
            for p in &self.productions {
                if p.instances().iter().all(|(n, _)| productive.contains(n)) {
                    productive.insert(p.head.clone());
                }
            }
            if productive.len() == before {
                return productive;
            }
        }
    }

    /// Nonterminals reachable from `from` through productions.
    pub fn reachable_from(&self, from: &Symbol) -> BTreeSet<Symbol> {
        let by_head = self.productions_by_head();
        let mut seen = BTreeSet::from([from.clone()]);
        let mut stack = vec![from.clone()];
        while let Some(n) = stack.pop() {
            for p in by_head.get(&n).into_iter().flatten() {
                for (m, _) in p.instances() {
                    if seen.insert(m.clone()) {
                        stack.push(m);
                    }
                }
            }
        }
        seen
    }

    /// Drops productions using unproductive nonterminals, and everything
    /// unreachable from the axiom.
    pub fn trim(&self) -> TupleGrammar {
        let productive = self.productive();
        let mut g = self.clone();
        g.productions
            .retain(|p| productive.contains(&p.head) && p.instances().iter().all(|(n, _)| productive.contains(n)));
        let reach = g.reachable_from(&g.axiom);
        g.productions.retain(|p| reach.contains(&p.head));
        g.nonterminals.retain(|n| reach.contains(&n.name));
        g.notes.retain(|n, _| reach.contains(n));
        g
    }

    /// Whether every production keeps each side's trees built only from
    /// same-side components of its instances.
    pub fn is_side_respecting(&self) -> bool {
        let by_name: BTreeMap<&Symbol, &NonTerminal> = self.nonterminals.iter().map(|n| (&n.name, n)).collect();
        self.productions.iter().all(|p| {
            let Some(head) = by_name.get(&p.head) else { return false };
            let Some((hp, _)) = head.split else { return false };
            p.body.iter().enumerate().all(|(k, b)| {
                let side_left = k < hp;
                b.instance_vars().iter().all(|v| match by_name.get(&v.nt).and_then(|n| n.split) {
                    Some((mp, _)) => (v.component <= mp) == side_left,
                    None => false,
                })
            })
        })
    }
}

fn check_symbols(b: &BodyTerm, alphabet: &crate::terms::RankedAlphabet, bad: &mut impl FnMut(String)) {
    if let BodyTerm::App(f, c) = b {
        match alphabet.arity(f) {
            None => bad(format!("unknown terminal `{f}`")),
            Some(n) if n != c.len() => bad(format!("terminal `{f}` has arity {n}, used with {}", c.len())),
            _ => {}
        }
        c.iter().for_each(|x| check_symbols(x, alphabet, bad));
    }
}
