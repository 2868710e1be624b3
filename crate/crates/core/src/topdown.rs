//! Derivation grammars of top-down systems, their automaton images, and
//! the bottom-up case through the inverse system.
//!
//! Nonterminals are indexed by the overlap set O: contexts that are both
//! right-hand-side subterms (variables read as holes) and prefixes of some
//! left-hand side. `⟨t⟩` for an n-context t has n input components and one
//! output component; `⟨*⟩` generates every ground tree on the input side and
//! absorbs erased subterms.

use std::collections::{BTreeMap, BTreeSet};

use crate::automata::TreeAutomaton;
use crate::classifier::{require_class, Class};
use crate::error::{Error, Result};
use crate::grammar::{image_grammar, project_split, swap_projections, BodyTerm, Enumerator, NonTerminal, Production, Side, TupleGrammar};
use crate::rewriting::{RewriteRule, Trs};
use crate::terms::{hole_index, match_term, sym, Context, Position, Symbol, Term};

/// Name of the nonterminal for erased subterms.
pub const STAR: &str = "S";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverlapContext {
    pub context: Context,
    /// `(rule, rhs position, rule whose lhs it prefixes)`.
    pub sources: Vec<(usize, Position, usize)>,
}

fn check_input(trs: &Trs) -> Result<()> {
    if !trs.automaton_rules.is_empty() {
        return Err(Error::RecognizableUnsupported("the top-down builder"));
    }
    trs.check_linear()?;
    for r in &trs.rules {
        let extra: Vec<_> = r.rhs.vars().difference(&r.lhs.vars()).cloned().collect();
        if !extra.is_empty() {
            return Err(Error::Invalid(format!(
                "rule `{r}` introduces variables {extra:?} on its right-hand side"
            )));
        }
    }
    Ok(())
}

/// The context with its holes as variables `□i`, for matching.
fn pattern(c: &Context) -> Term {
    c.to_term_with_vars("□")
}

fn prefixes(c: &Context, l: &Term) -> bool {
    match_term(&pattern(c), l).is_some()
}

/// O without the class check.
fn overlaps_unchecked(rules: &[RewriteRule]) -> Vec<OverlapContext> {
    let mut found: BTreeMap<Context, Vec<(usize, Position, usize)>> = BTreeMap::new();
    found.insert(Context::hole(), Vec::new());
    for (i, rule) in rules.iter().enumerate() {
        for p in rule.rhs.positions() {
            let sub = rule.rhs.subterm_at(&p).expect("own position");
            let (c, _) = Context::from_term(sub).expect("linear rhs");
            for (j, other) in rules.iter().enumerate() {
                if prefixes(&c, &other.lhs) {
                    found.entry(c.clone()).or_default().push((i, p.clone(), j));
                }
            }
        }
    }
    let mut out: Vec<OverlapContext> = found
        .into_iter()
        .map(|(context, sources)| OverlapContext { context, sources })
        .collect();
    out.sort_by_cached_key(|c| {
        (hole_index(c.context.term()).is_none(), c.context.term().size(), c.context.to_string())
    });
    out
}

/// The overlap set, `□` first, then by size and text.
pub fn overlap_set(trs: &Trs) -> Result<Vec<OverlapContext>> {
    check_input(trs)?;
    require_class(trs, Class::TopDown)?;
    Ok(overlaps_unchecked(&trs.rules))
}

/// Assigns instance numbers per nonterminal within one production.
#[derive(Default)]
struct Instances(BTreeMap<Symbol, usize>);

impl Instances {
    fn fresh(&mut self, nt: &Symbol) -> usize {
        let n = self.0.entry(nt.clone()).or_insert(0);
        *n += 1;
        *n
    }
}

struct Builder<'a> {
    rules: &'a [RewriteRule],
    names: BTreeMap<Context, Symbol>,
    grammar: TupleGrammar,
}

impl Builder<'_> {
    fn name(&self, c: &Context) -> &Symbol {
        &self.names[c]
    }

    fn in_o(&self, c: &Context) -> bool {
        self.names.contains_key(c)
    }

    fn push(&mut self, head: &Symbol, body: Vec<BodyTerm>) {
        self.grammar.add_production(Production {
            head: head.clone(),
            body,
        });
    }

    fn copy_rules(&mut self) {
        let hole = self.name(&Context::hole()).clone();
        let star = sym(STAR);
        let symbols: Vec<(Symbol, usize)> = self.grammar.alphabet.iter().map(|(f, n)| (f.clone(), n)).collect();
        for (f, n) in symbols {
            let left = BodyTerm::App(f.clone(), (1..=n).map(|i| BodyTerm::inst(&hole, i, 1)).collect());
            let right = BodyTerm::App(f.clone(), (1..=n).map(|i| BodyTerm::inst(&hole, i, 2)).collect());
            self.push(&hole, vec![left, right]);
            let s = BodyTerm::App(f.clone(), (1..=n).map(|i| BodyTerm::inst(&star, i, 1)).collect());
            self.push(&star, vec![s]);
        }
    }

    /// ⟨t⟩ → u[π₁⟨t[u]⟩] × π₂⟨t[u]⟩ for t a proper prefix of t[u].
    fn extension_rules(&mut self) {
        let contexts: Vec<Context> = self.names.keys().cloned().collect();
        for t in &contexts {
            for big in &contexts {
                if t == big {
                    continue;
                }
                let Some(sigma) = match_term(&pattern(t), big.term()) else { continue };
                let big_name = self.name(big).clone();
                let m = big.arity();
                let mut body: Vec<BodyTerm> = (1..=t.arity())
                    .map(|i| {
                        let u = sigma.get(&crate::terms::hole_name(i)).expect("holes are bound");
                        hole_body(u, &big_name)
                    })
                    .collect();
                body.push(BodyTerm::inst(&big_name, 1, m + 1));
                let head = self.name(t).clone();
                self.push(&head, body);
            }
        }
    }

    /// ⟨c⟩ → π₁(⟨c|p⟩ …) × c[π₂⟨c|p⟩ …]: the root of c is kept, some
    /// overlap subterms below it (at pairwise parallel positions) rewrite.
    fn split_rules(&mut self) {
        let contexts: Vec<Context> = self.names.keys().cloned().collect();
        for c in contexts.iter().filter(|c| !c.is_hole()) {
            let candidates: Vec<Position> = c
                .term()
                .function_positions()
                .into_iter()
                .filter(|p| !p.is_root() && hole_index(c.term().subterm_at(p).unwrap()).is_none())
                .filter(|p| {
                    let sub = c.term().subterm_at(p).unwrap();
                    Context::from_hole_term(sub.clone()).is_ok_and(|s| self.in_o(&s))
                })
                .collect();
            for chosen in antichains(&candidates) {
                self.split_rule(c, &chosen);
            }
        }
    }

    fn split_rule(&mut self, c: &Context, chosen: &[Position]) {
        let hole = self.name(&Context::hole()).clone();
        let mut inst = Instances::default();
        let mut left: BTreeMap<usize, BodyTerm> = BTreeMap::new();
        let right = self.split_walk(c.term(), &Position::root(), chosen, &hole, &mut inst, &mut left);
        let mut body: Vec<BodyTerm> = left.into_values().collect();
        body.push(right);
        let head = self.name(c).clone();
        self.push(&head, body);
    }

    fn split_walk(
        &self,
        t: &Term,
        at: &Position,
        chosen: &[Position],
        hole: &Symbol,
        inst: &mut Instances,
        left: &mut BTreeMap<usize, BodyTerm>,
    ) -> BodyTerm {
        if chosen.contains(at) {
            let sub = Context::from_hole_term(t.clone()).expect("context subterm");
            let name = self.name(&sub).clone();
            let i = inst.fresh(&name);
            let holes = hole_indices(t);
            for (k, h) in holes.iter().enumerate() {
                left.insert(*h, BodyTerm::inst(&name, i, k + 1));
            }
            return BodyTerm::inst(&name, i, holes.len() + 1);
        }
        if let Some(h) = hole_index(t) {
            let i = inst.fresh(hole);
            left.insert(h, BodyTerm::inst(hole, i, 1));
            return BodyTerm::inst(hole, i, 2);
        }
        match t {
            Term::Var(_) => unreachable!("contexts only hold holes"),
            Term::App(f, cs) => BodyTerm::App(
                f.clone(),
                cs.iter()
                    .enumerate()
                    .map(|(k, s)| self.split_walk(s, &at.child(k + 1), chosen, hole, inst, left))
                    .collect(),
            ),
        }
    }

    /// ⟨t⟩ → uσ × s[π₂⟨v₁⟩ …] for each rule l = t[u] → r = s[v].
    fn rule_rules(&mut self) -> Result<()> {
        let contexts: Vec<Context> = self.names.keys().cloned().collect();
        let star = sym(STAR);
        for rule in self.rules {
            for t in &contexts {
                let Some(sigma) = match_term(&pattern(t), &rule.lhs) else { continue };
                let mut inst = Instances::default();
                let mut value: BTreeMap<Symbol, BodyTerm> = BTreeMap::new();
                let right = self.cover_rhs(&rule.rhs, &mut inst, &mut value);
                let mut body: Vec<BodyTerm> = Vec::with_capacity(t.arity() + 1);
                for i in 1..=t.arity() {
                    let u = sigma.get(&crate::terms::hole_name(i)).expect("holes are bound");
                    body.push(lhs_body(u, &value, &star, &mut inst));
                }
                body.push(right);
                let head = self.name(t).clone();
                self.push(&head, body);
            }
        }
        Ok(())
    }

    /// Replaces the topmost overlap subterms of `r` by instances, recording
    /// which component stands for each variable.
    fn cover_rhs(&self, r: &Term, inst: &mut Instances, value: &mut BTreeMap<Symbol, BodyTerm>) -> BodyTerm {
        let (c, vars) = Context::from_term(r).expect("linear rhs");
        if self.in_o(&c) {
            let name = self.name(&c).clone();
            let i = inst.fresh(&name);
            for (k, v) in vars.iter().enumerate() {
                value.insert(v.clone(), BodyTerm::inst(&name, i, k + 1));
            }
            return BodyTerm::inst(&name, i, vars.len() + 1);
        }
        match r {
            Term::Var(_) => unreachable!("□ is always an overlap"),
            Term::App(f, cs) => BodyTerm::App(f.clone(), cs.iter().map(|s| self.cover_rhs(s, inst, value)).collect()),
        }
    }
}

fn hole_indices(t: &Term) -> Vec<usize> {
    let mut out = Vec::new();
    collect_holes(t, &mut out);
    out
}

fn collect_holes(t: &Term, out: &mut Vec<usize>) {
    match hole_index(t) {
        Some(i) => out.push(i),
        None => t.children().iter().for_each(|c| collect_holes(c, out)),
    }
}

/// A piece `u` of a bigger context: its holes `□j` become `N#1.j`.
fn hole_body(u: &Term, big: &Symbol) -> BodyTerm {
    match (hole_index(u), u) {
        (Some(j), _) => BodyTerm::inst(big, 1, j),
        (None, Term::App(f, cs)) => BodyTerm::App(f.clone(), cs.iter().map(|s| hole_body(s, big)).collect()),
        (None, Term::Var(_)) => unreachable!("contexts only hold holes"),
    }
}

fn lhs_body(u: &Term, value: &BTreeMap<Symbol, BodyTerm>, star: &Symbol, inst: &mut Instances) -> BodyTerm {
    match u {
        Term::Var(v) => match value.get(v) {
            Some(b) => b.clone(),
            None => BodyTerm::inst(star, inst.fresh(star), 1),
        },
        Term::App(f, cs) => BodyTerm::App(f.clone(), cs.iter().map(|s| lhs_body(s, value, star, inst)).collect()),
    }
}

/// Non-empty sets of pairwise parallel positions, plus the empty set.
fn antichains(positions: &[Position]) -> Vec<Vec<Position>> {
    let mut out: Vec<Vec<Position>> = vec![Vec::new()];
    for p in positions {
        let mut more = Vec::new();
        for set in &out {
            if set.iter().all(|q| !p.extends(q) && !q.extends(p)) {
                let mut s = set.clone();
                s.push(p.clone());
                more.push(s);
            }
        }
        out.extend(more);
    }
    out
}

/// The derivation grammar of a finite linear top-down system. Its axiom
/// `C0` = ⟨□⟩ generates exactly the pairs (s, t) with s →* t.
pub fn build_grammar(trs: &Trs) -> Result<TupleGrammar> {
    let o = overlap_set(trs)?;
    Ok(grammar_from_overlaps(trs, &o))
}

fn grammar_from_overlaps(trs: &Trs, o: &[OverlapContext]) -> TupleGrammar {
    let mut names = BTreeMap::new();
    let mut grammar = TupleGrammar::new(trs.alphabet.clone(), "C0");
    grammar
        .add_nonterminal(NonTerminal::new(STAR, 1, Some((1, 0))))
        .expect("fresh grammar");
    grammar.notes.insert(sym(STAR), "⟨*⟩".into());
    for (k, oc) in o.iter().enumerate() {
        let name = sym(&format!("C{k}"));
        let n = oc.context.arity();
        grammar
            .add_nonterminal(NonTerminal::new(&name, n + 1, Some((n, 1))))
            .expect("distinct names");
        grammar.notes.insert(name.clone(), format!("⟨{}⟩", oc.context));
        names.insert(oc.context.clone(), name);
    }
    let mut b = Builder {
        rules: &trs.rules,
        names,
        grammar,
    };
    b.copy_rules();
    b.extension_rules();
    b.split_rules();
    b.rule_rules().expect("checked input");
    b.grammar
}

/// Automaton for →*_R(L(A)).
pub fn image_automaton(trs: &Trs, a: &TreeAutomaton) -> Result<TreeAutomaton> {
    let g = build_grammar(trs)?;
    let product = image_grammar(&g, a, Side::Left)?;
    project_split(&product, Side::Right)
}

/// The derivation grammar of a bottom-up system: built on R⁻¹, then swapped.
pub fn build_bottomup(trs: &Trs) -> Result<TupleGrammar> {
    check_input(trs)?;
    require_class(trs, Class::BottomUp)?;
    let inverse = trs.inverse();
    check_input(&inverse)?;
    let o = overlaps_unchecked(&inverse.rules);
    swap_projections(&grammar_from_overlaps(&inverse, &o))
}

/// Automaton for (→*_R)⁻¹(L(A)) when R is bottom-up.
pub fn inverse_image_automaton(trs: &Trs, a: &TreeAutomaton) -> Result<TreeAutomaton> {
    let g = build_bottomup(trs)?;
    let product = image_grammar(&g, a, Side::Right)?;
    project_split(&product, Side::Left)
}

/// Every s of size ≤ `max_size` with s →* t for some t ∈ `targets`, read
/// off the derivation grammar. Used where no automaton exists.
pub fn bounded_preimages(g: &TupleGrammar, targets: &[Term], max_size: usize) -> Result<BTreeSet<Term>> {
    let Some(right) = targets.iter().map(Term::size).max() else {
        return Ok(BTreeSet::new());
    };
    let wanted: BTreeSet<&Term> = targets.iter().collect();
    let e = Enumerator::new(g, &g.axiom)?;
    Ok(e.up_to_sides(max_size, right)?
        .into_iter()
        .filter(|w| wanted.contains(&w[1]))
        .map(|w| w[0].clone())
        .collect())
}
