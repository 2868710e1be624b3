//! Linear suffix systems.
//!
//! Every rule, finite or recognizable, becomes a pair of top-down automata
//! whose states are read as ranked symbols: a state has one argument per
//! variable of the terms it accepts. Consuming rules `f(p₁x̄₁,…) → px̄` read a
//! left-hand side bottom-up, producing rules `qȳ → f(q₁ȳ₁,…)` write a
//! right-hand side, and the bridge `p₀x̄ → q₀ȳ` switches from one to the
//! other. Saturation adds the relation R₌ of state pairs, after which every
//! suffix derivation splits into a consuming phase and a producing phase.
//!
//! The pair grammar then reads the consuming phase on the left projection
//! and the producing phase on the right one, restarting the axiom at the
//! variables both phases share.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use crate::automata::TreeAutomaton;
use crate::classifier::{require_class, Class};
use crate::error::{Error, Result};
use crate::grammar::{image_grammar, project_split, BodyTerm, NonTerminal, Production, Side, TupleGrammar};
use crate::rewriting::{suffix_reachable, suffix_steps, Bounds, RewriteRule, Trs};
use crate::terms::{sym, Position, RankedAlphabet, Symbol, Term};

/// Default cap on generated nonterminals; `RATRW_MAX_NONTERMINALS` overrides it.
pub const DEFAULT_MAX_NONTERMINALS: usize = 20_000;

pub const AXIOM: &str = "I";
/// Generates any term; stands for erased subterms.
pub const ANY: &str = "I'";

pub fn max_nonterminals() -> usize {
    std::env::var("RATRW_MAX_NONTERMINALS")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_NONTERMINALS)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSymbol {
    pub name: Symbol,
    /// Rule index (1-based) and automaton state it comes from.
    pub origin: String,
    /// Variable boundary ν; its length is the arity.
    pub nu: Vec<Symbol>,
    /// Has a rule `x → p(x)`.
    pub reads_var: bool,
    /// Has a rule `q(x) → x`.
    pub writes_var: bool,
}

impl StateSymbol {
    pub fn arity(&self) -> usize {
        self.nu.len()
    }
}

/// `f(s₁(…),…,sₙ(…)) ↔ s(…)`; argument lists are concatenated in order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LocalRule {
    pub state: usize,
    pub symbol: Symbol,
    pub children: Vec<usize>,
}

/// `from(x₁…xₖ) → to(x_{map[0]} …)`: argument `j` of `to` is argument
/// `map[j]` of `from`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StatePair {
    pub from: usize,
    pub to: usize,
    pub map: Vec<usize>,
}

impl StatePair {
    fn is_identity(&self) -> bool {
        self.from == self.to && self.map.iter().enumerate().all(|(i, &m)| i == m)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSystem {
    pub alphabet: RankedAlphabet,
    pub states: Vec<StateSymbol>,
    pub consume: Vec<LocalRule>,
    pub produce: Vec<LocalRule>,
    pub bridges: Vec<StatePair>,
}

/// Variable boundary of every productive state; `Err` when one state has two.
pub fn boundaries(a: &TreeAutomaton) -> Result<BTreeMap<Symbol, Vec<Symbol>>> {
    let mut nu: BTreeMap<Symbol, Vec<Symbol>> = BTreeMap::new();
    loop {
        let mut changed = false;
        for r in &a.rules {
            let candidate: Vec<Symbol> = if a.vars.contains(&r.symbol) {
                vec![r.symbol.clone()]
            } else {
                let mut word = Vec::new();
                let mut known = true;
                for c in &r.children {
                    match nu.get(c) {
                        Some(w) => word.extend(w.iter().cloned()),
                        None => {
                            known = false;
                            break;
                        }
                    }
                }
                if !known {
                    continue;
                }
                word
            };
            let mut seen = BTreeSet::new();
            if let Some(dup) = candidate.iter().find(|x| !seen.insert(*x)) {
                return Err(Error::NonLinear(dup.to_string()));
            }
            match nu.get(&r.state) {
                None => {
                    nu.insert(r.state.clone(), candidate);
                    changed = true;
                }
                Some(old) if *old != candidate => {
                    return Err(Error::NonSingletonBoundary {
                        state: r.state.to_string(),
                        first: old.join(" "),
                        second: candidate.join(" "),
                    });
                }
                Some(_) => {}
            }
        }
        if !changed {
            return Ok(nu);
        }
    }
}

/// Single-run automaton of a finite term: one state per position.
fn single_run(alphabet: &RankedAlphabet, t: &Term, prefix: &str) -> Result<TreeAutomaton> {
    let mut a = TreeAutomaton::new(alphabet.clone());
    for v in t.vars() {
        a.add_var(&v);
    }
    let name = |p: &Position| format!("{prefix}{p}");
    a.add_initial(&name(&Position::root()));
    for p in t.positions() {
        let sub = t.subterm_at(&p).expect("own position");
        let children: Vec<String> = (0..sub.children().len()).map(|i| name(&p.child(i + 1))).collect();
        let children: Vec<&str> = children.iter().map(String::as_str).collect();
        a.add_rule(&name(&p), sub.head(), &children)?;
    }
    Ok(a)
}

fn rule_pairs(trs: &Trs) -> Result<Vec<(TreeAutomaton, TreeAutomaton)>> {
    let mut out = Vec::new();
    for r in &trs.rules {
        out.push((single_run(&trs.alphabet, &r.lhs, "l")?, single_run(&trs.alphabet, &r.rhs, "r")?));
    }
    for p in &trs.automaton_rules {
        out.push((p.lhs.clone(), p.rhs.clone()));
    }
    Ok(out)
}

/// The state system R′ of a linear system.
pub fn to_state_system(trs: &Trs) -> Result<StateSystem> {
    trs.check_linear()?;
    let mut ss = StateSystem {
        alphabet: trs.alphabet.clone(),
        states: Vec::new(),
        consume: Vec::new(),
        produce: Vec::new(),
        bridges: Vec::new(),
    };
    let mut taken: BTreeSet<Symbol> = trs.alphabet.iter().map(|(f, _)| f.clone()).collect();
    for (i, (a, b)) in rule_pairs(trs)?.into_iter().enumerate() {
        let rule = i + 1;
        let mut index: [BTreeMap<Symbol, usize>; 2] = Default::default();
        for (side, aut) in [&a, &b].into_iter().enumerate() {
            let nu = boundaries(aut)?;
            for (q, word) in &nu {
                let mut name = format!("{}{rule}.{q}", if side == 0 { 'P' } else { 'Q' });
                while taken.contains(&*name) {
                    name.push('\'');
                }
                taken.insert(sym(&name));
                index[side].insert(q.clone(), ss.states.len());
                ss.states.push(StateSymbol {
                    name: sym(&name),
                    origin: format!("rule {rule}, {} state {q}", if side == 0 { "left" } else { "right" }),
                    nu: word.clone(),
                    reads_var: false,
                    writes_var: false,
                });
            }
            for r in &aut.rules {
                let Some(&s) = index[side].get(&r.state) else { continue };
                if aut.vars.contains(&r.symbol) {
                    if side == 0 {
                        ss.states[s].reads_var = true;
                    } else {
                        ss.states[s].writes_var = true;
                    }
                    continue;
                }
                let children: Option<Vec<usize>> = r.children.iter().map(|c| index[side].get(c).copied()).collect();
                let Some(children) = children else { continue };
                let local = LocalRule {
                    state: s,
                    symbol: r.symbol.clone(),
                    children,
                };
                if side == 0 {
                    ss.consume.push(local);
                } else {
                    ss.produce.push(local);
                }
            }
        }
        for p0 in a.initial.iter().filter_map(|p| index[0].get(p)) {
            for q0 in b.initial.iter().filter_map(|q| index[1].get(q)) {
                let from = &ss.states[*p0].nu;
                let map: Option<Vec<usize>> = ss.states[*q0]
                    .nu
                    .iter()
                    .map(|x| from.iter().position(|y| y == x))
                    .collect();
                let map = map.ok_or_else(|| {
                    Error::Invalid(format!(
                        "rule {rule}: the right-hand side uses variables absent from the left-hand side"
                    ))
                })?;
                ss.bridges.push(StatePair {
                    from: *p0,
                    to: *q0,
                    map,
                });
            }
        }
    }
    Ok(ss)
}

fn vars(n: usize) -> Vec<Term> {
    (1..=n).map(|i| Term::var(&format!("x{i}"))).collect()
}

impl StateSystem {
    pub fn state(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| &*s.name == name)
    }

    /// F plus one symbol per state.
    pub fn extended_alphabet(&self) -> RankedAlphabet {
        let mut a = self.alphabet.clone();
        for s in &self.states {
            a.add(&s.name, s.arity()).expect("state names are fresh");
        }
        a
    }

    pub fn state_term(&self, s: usize, args: Vec<Term>) -> Term {
        Term::App(self.states[s].name.clone(), args)
    }

    /// `f(s₁(x̄₁),…)` and `s(x̄)` over shared variables `x1…`.
    fn local_terms(&self, r: &LocalRule) -> (Term, Term) {
        let xs = vars(self.states[r.state].arity());
        let mut offset = 0;
        let children = r
            .children
            .iter()
            .map(|&c| {
                let k = self.states[c].arity();
                let t = self.state_term(c, xs[offset..offset + k].to_vec());
                offset += k;
                t
            })
            .collect();
        (Term::App(r.symbol.clone(), children), self.state_term(r.state, xs))
    }

    fn pair_terms(&self, p: &StatePair) -> (Term, Term) {
        let xs = vars(self.states[p.from].arity());
        let to = p.map.iter().map(|&m| xs[m].clone()).collect();
        (self.state_term(p.from, xs), self.state_term(p.to, to))
    }

    fn system(&self, rules: impl IntoIterator<Item = (Term, Term)>) -> Trs {
        let mut trs = Trs::new(self.extended_alphabet());
        for (l, r) in rules {
            trs.add_rule(RewriteRule::new_unchecked(l, r)).expect("rules over the extended alphabet");
        }
        trs
    }

    fn var_reading(&self) -> Vec<(Term, Term)> {
        let x = Term::var("x1");
        (0..self.states.len())
            .filter(|&s| self.states[s].reads_var)
            .map(|s| (x.clone(), self.state_term(s, vec![x.clone()])))
            .collect()
    }

    fn var_writing(&self) -> Vec<(Term, Term)> {
        let x = Term::var("x1");
        (0..self.states.len())
            .filter(|&s| self.states[s].writes_var)
            .map(|s| (self.state_term(s, vec![x.clone()]), x.clone()))
            .collect()
    }

    /// R′ as an ordinary system over the extended alphabet.
    pub fn as_trs(&self) -> Trs {
        let mut rules = Vec::new();
        rules.extend(self.consume.iter().map(|r| self.local_terms(r)));
        rules.extend(self.var_reading());
        rules.extend(self.produce.iter().map(|r| {
            let (t, s) = self.local_terms(r);
            (s, t)
        }));
        rules.extend(self.var_writing());
        rules.extend(self.bridges.iter().map(|p| self.pair_terms(p)));
        self.system(rules)
    }

    fn describe(&self, s: usize, args: &[u32]) -> String {
        let name = &self.states[s].name;
        if args.is_empty() {
            name.to_string()
        } else {
            let a: Vec<String> = args.iter().map(|v| format!("x{}", v + 1)).collect();
            format!("{name}({})", a.join(","))
        }
    }
}

/// R₊ (consuming), R₌ and R₋ (producing).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SaturationTriple {
    pub plus: Vec<LocalRule>,
    pub eq: BTreeSet<StatePair>,
    pub minus: Vec<LocalRule>,
}

/// Least R₌ containing the identity and the bridges, closed under
/// composition and under produce-then-consume cancellation. A variable
/// written by one rule and read by the next cancels like a nullary symbol.
pub fn saturate(ss: &StateSystem) -> SaturationTriple {
    let mut eq: BTreeSet<StatePair> = BTreeSet::new();
    for (s, st) in ss.states.iter().enumerate() {
        eq.insert(StatePair {
            from: s,
            to: s,
            map: (0..st.arity()).collect(),
        });
    }
    eq.extend(ss.bridges.iter().cloned());
    for q in (0..ss.states.len()).filter(|&q| ss.states[q].writes_var) {
        for p in (0..ss.states.len()).filter(|&p| ss.states[p].reads_var) {
            eq.insert(StatePair {
                from: q,
                to: p,
                map: vec![0],
            });
        }
    }
    loop {
        let mut by_ends: HashMap<(usize, usize), Vec<Vec<usize>>> = HashMap::new();
        let mut by_from: HashMap<usize, Vec<&StatePair>> = HashMap::new();
        for e in &eq {
            by_ends.entry((e.from, e.to)).or_default().push(e.map.clone());
            by_from.entry(e.from).or_default().push(e);
        }
        let mut fresh = Vec::new();
        for e in &eq {
            for f in by_from.get(&e.to).into_iter().flatten() {
                fresh.push(StatePair {
                    from: e.from,
                    to: f.to,
                    map: f.map.iter().map(|&j| e.map[j]).collect(),
                });
            }
        }
        for prod in &ss.produce {
            for cons in ss.consume.iter().filter(|c| c.symbol == prod.symbol) {
                if cons.children.len() != prod.children.len() {
                    continue;
                }
                // Every child pair needs some R₌ map; take all combinations.
                let mut partial: Vec<Vec<usize>> = vec![Vec::new()];
                let mut offset = 0;
                for (&qc, &pc) in prod.children.iter().zip(&cons.children) {
                    let maps = by_ends.get(&(qc, pc)).cloned().unwrap_or_default();
                    partial = partial
                        .iter()
                        .flat_map(|pre| {
                            maps.iter().map(move |m| {
                                let mut w = pre.clone();
                                w.extend(m.iter().map(|&j| offset + j));
                                w
                            })
                        })
                        .collect();
                    offset += ss.states[qc].arity();
                    if partial.is_empty() {
                        break;
                    }
                }
                for map in partial {
                    fresh.push(StatePair {
                        from: prod.state,
                        to: cons.state,
                        map,
                    });
                }
            }
        }
        let before = eq.len();
        eq.extend(fresh);
        if eq.len() == before {
            break;
        }
    }
    SaturationTriple {
        plus: ss.consume.clone(),
        eq,
        minus: ss.produce.clone(),
    }
}

impl SaturationTriple {
    fn eq_rules(&self, ss: &StateSystem) -> Vec<(Term, Term)> {
        self.eq.iter().filter(|e| !e.is_identity()).map(|e| ss.pair_terms(e)).collect()
    }

    /// R₊ ∪ R₌, plus reading variables.
    pub fn consuming_system(&self, ss: &StateSystem) -> Trs {
        let mut rules: Vec<(Term, Term)> = self.plus.iter().map(|r| ss.local_terms(r)).collect();
        rules.extend(ss.var_reading());
        rules.extend(self.eq_rules(ss));
        ss.system(rules)
    }

    /// R₋ ∪ R₌, plus writing variables.
    pub fn producing_system(&self, ss: &StateSystem) -> Trs {
        let mut rules: Vec<(Term, Term)> = self
            .minus
            .iter()
            .map(|r| {
                let (t, s) = ss.local_terms(r);
                (s, t)
            })
            .collect();
        rules.extend(ss.var_writing());
        rules.extend(self.eq_rules(ss));
        ss.system(rules)
    }

    pub fn relates(&self, from: usize, to: usize, map: &[usize]) -> bool {
        self.eq.contains(&StatePair {
            from,
            to,
            map: map.to_vec(),
        })
    }
}

fn over_alphabet(t: &Term, a: &RankedAlphabet) -> bool {
    match t {
        Term::Var(_) => true,
        Term::App(f, c) => a.contains(f) && c.iter().all(|s| over_alphabet(s, a)),
    }
}

/// Suffix closure of a set of terms, every intermediate of size ≤ `max_size`.
fn suffix_closure(trs: &Trs, from: BTreeSet<Term>, max_size: usize) -> BTreeSet<Term> {
    let mut seen = from;
    let mut stack: Vec<Term> = seen.iter().cloned().collect();
    while let Some(s) = stack.pop() {
        for (u, _) in suffix_steps(trs, &s) {
            if u.size() <= max_size && !seen.contains(&u) {
                seen.insert(u.clone());
                stack.push(u);
            }
        }
    }
    seen
}

/// `s ⇒*_{R₊∪R₌} ∘ ⇒*_{R₋∪R₌}`, restricted to terms over the original
/// alphabet, every intermediate of size ≤ `max_size`.
pub fn two_phase_reachable(ss: &StateSystem, sat: &SaturationTriple, s: &Term, max_size: usize) -> Result<BTreeSet<Term>> {
    let first = sat.consuming_system(ss);
    let second = sat.producing_system(ss);
    let mid = suffix_closure(&first, BTreeSet::from([s.clone()]), max_size);
    Ok(suffix_closure(&second, mid, max_size)
        .into_iter()
        .filter(|t| over_alphabet(t, &ss.alphabet))
        .collect())
}

/// State and variable indices of `q(y₁,…,yₖ)` with distinct variables.
fn as_state_term(ss: &StateSystem, t: &Term) -> Option<(usize, Vec<Symbol>)> {
    let Term::App(q, args) = t else { return None };
    let s = ss.state(q)?;
    let names: Option<Vec<Symbol>> = args
        .iter()
        .map(|a| match a {
            Term::Var(v) => Some(v.clone()),
            _ => None,
        })
        .collect();
    let names = names?;
    let distinct: BTreeSet<&Symbol> = names.iter().collect();
    (distinct.len() == names.len()).then_some((s, names))
}

/// Counterexamples to `pu ⇒*_{R₋∪R₌} t ⇒*_{R₊∪R₌} qv ⟹ pu R₌ qv`, searched
/// over every state `p` and every intermediate `t` of size ≤ `max_size`.
pub fn bridge_property_violations(ss: &StateSystem, sat: &SaturationTriple, max_size: usize) -> Result<(usize, Vec<String>)> {
    let bounds = Bounds::new(usize::MAX, max_size);
    let down = sat.producing_system(ss);
    let up = sat.consuming_system(ss);
    let mut checked = 0;
    let mut bad = Vec::new();
    for p in 0..ss.states.len() {
        let xs = vars(ss.states[p].arity());
        let start = ss.state_term(p, xs.clone());
        if start.size() > max_size {
            continue;
        }
        let names: Vec<Symbol> = xs.iter().map(|x| x.head().clone()).collect();
        for t in suffix_reachable(&down, &start, bounds)? {
            for end in suffix_reachable(&up, &t, bounds)? {
                let Some((q, ys)) = as_state_term(ss, &end) else { continue };
                checked += 1;
                let map: Option<Vec<usize>> = ys.iter().map(|y| names.iter().position(|x| x == y)).collect();
                let ok = map.is_some_and(|m| sat.relates(p, q, &m));
                if !ok {
                    bad.push(format!("{start} ⇒ {t} ⇒ {end}"));
                }
            }
        }
    }
    Ok((checked, bad))
}

/// Which projection is expanded first. Reading the consuming phase before
/// the producing one keeps a single right component per nonterminal, which
/// makes the right projection exact; the converse holds for `RightFirst`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    LeftFirst,
    RightFirst,
}

type Atom = (usize, Vec<u32>);

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Key {
    second: bool,
    left: Vec<Atom>,
    right: Vec<Atom>,
}

enum Shape {
    Slot(usize),
    App(Symbol, Vec<Shape>),
}

impl Shape {
    fn build(&self, slots: &[BodyTerm]) -> BodyTerm {
        match self {
            Shape::Slot(k) => slots[*k].clone(),
            Shape::App(f, c) => BodyTerm::App(f.clone(), c.iter().map(|s| s.build(slots)).collect()),
        }
    }
}

fn slots(range: std::ops::Range<usize>) -> Vec<Shape> {
    range.map(Shape::Slot).collect()
}

struct Builder<'a> {
    ss: &'a StateSystem,
    sat: &'a SaturationTriple,
    order: Order,
    cap: usize,
    names: HashMap<Key, Symbol>,
    queue: VecDeque<Key>,
    grammar: TupleGrammar,
}

impl Builder<'_> {
    fn intern(&mut self, key: Key) -> Result<Symbol> {
        if let Some(n) = self.names.get(&key) {
            return Ok(n.clone());
        }
        if self.names.len() >= self.cap {
            return Err(Error::NonterminalCap(self.cap));
        }
        let name = sym(&format!("N{}", self.names.len()));
        let word = |w: &[Atom]| w.iter().map(|(s, a)| self.ss.describe(*s, a)).collect::<Vec<_>>().join(" ");
        let phase = match (self.order, key.second) {
            (Order::LeftFirst, false) | (Order::RightFirst, true) => "consuming",
            _ => "producing",
        };
        self.grammar
            .notes
            .insert(name.clone(), format!("{phase}: {} | {}", word(&key.left), word(&key.right)));
        self.grammar.add_nonterminal(NonTerminal {
            name: name.clone(),
            arity: key.left.len() + key.right.len(),
            split: Some((key.left.len(), key.right.len())),
        })?;
        self.names.insert(key.clone(), name.clone());
        self.queue.push_back(key);
        Ok(name)
    }

    /// Adds `head → shapes`, where slots refer to `left ++ right` and the
    /// atoms are regrouped into nonterminals by shared variables.
    fn emit(&mut self, head: &Symbol, second: bool, left: Vec<Atom>, right: Vec<Atom>, lshape: Vec<Shape>, rshape: Vec<Shape>) -> Result<()> {
        let atoms: Vec<&Atom> = left.iter().chain(&right).collect();
        let n = atoms.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], i: usize) -> usize {
            let mut r = i;
            while parent[r] != r {
                r = parent[r];
            }
            parent[i] = r;
            r
        }
        let mut owner: HashMap<u32, usize> = HashMap::new();
        for (i, (_, args)) in atoms.iter().enumerate() {
            for v in args {
                if let Some(&j) = owner.get(v) {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a.max(b)] = a.min(b);
                } else {
                    owner.insert(*v, i);
                }
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..n {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().push(i);
        }
        let mut body_slots: Vec<Option<BodyTerm>> = vec![None; n];
        let mut uses: HashMap<Symbol, usize> = HashMap::new();
        for members in groups.values() {
            let mut rename: HashMap<u32, u32> = HashMap::new();
            let mut canon = |args: &[u32]| -> Vec<u32> {
                args.iter()
                    .map(|v| {
                        let next = rename.len() as u32;
                        *rename.entry(*v).or_insert(next)
                    })
                    .collect()
            };
            let mut key = Key {
                second,
                left: Vec::new(),
                right: Vec::new(),
            };
            for &i in members {
                let (s, args) = atoms[i];
                let atom = (*s, canon(args));
                if i < left.len() {
                    key.left.push(atom);
                } else {
                    key.right.push(atom);
                }
            }
            let nt = self.intern(key)?;
            let instance = uses.entry(nt.clone()).or_insert(0);
            *instance += 1;
            for (k, &i) in members.iter().enumerate() {
                body_slots[i] = Some(BodyTerm::inst(&nt, *instance, k + 1));
            }
        }
        let body_slots: Vec<BodyTerm> = body_slots.into_iter().map(|b| b.expect("every atom is grouped")).collect();
        let body = lshape.iter().chain(&rshape).map(|s| s.build(&body_slots)).collect();
        self.grammar.add_production(Production {
            head: head.clone(),
            body,
        });
        Ok(())
    }

    fn split_args(&self, args: &[u32], children: &[usize]) -> Vec<Atom> {
        let mut offset = 0;
        children
            .iter()
            .map(|&c| {
                let k = self.ss.states[c].arity();
                let a = (c, args[offset..offset + k].to_vec());
                offset += k;
                a
            })
            .collect()
    }

    fn expand(&mut self, key: Key) -> Result<()> {
        let head = self.names[&key].clone();
        let (nl, nr) = (key.left.len(), key.right.len());
        let first_left = self.order == Order::LeftFirst;
        let work_left = first_left != key.second;
        let states = &self.ss.states;
        let next_var = key
            .left
            .iter()
            .chain(&key.right)
            .flat_map(|(_, a)| a.iter().copied())
            .max()
            .map_or(0, |v| v + 1);
        if work_left {
            for i in 0..nl {
                let (p, args) = key.left[i].clone();
                let rules: Vec<LocalRule> = self.sat.plus.iter().filter(|r| r.state == p).cloned().collect();
                for r in rules {
                    let kids = self.split_args(&args, &r.children);
                    let n = kids.len();
                    let mut left = key.left[..i].to_vec();
                    left.extend(kids);
                    left.extend(key.left[i + 1..].iter().cloned());
                    let mut lshape = slots(0..i);
                    lshape.push(Shape::App(r.symbol.clone(), slots(i..i + n)));
                    lshape.extend(slots(i + n..left.len()));
                    let total = left.len();
                    self.emit(&head, key.second, left, key.right.clone(), lshape, slots(total..total + nr))?;
                }
                let preds: Vec<StatePair> = self.sat.eq.iter().filter(|e| e.to == p && !e.is_identity()).cloned().collect();
                for e in preds {
                    let mut fresh = next_var;
                    let mut new_args: Vec<Option<u32>> = vec![None; states[e.from].arity()];
                    for (j, &m) in e.map.iter().enumerate() {
                        new_args[m] = Some(args[j]);
                    }
                    let new_args = new_args
                        .into_iter()
                        .map(|a| {
                            a.unwrap_or_else(|| {
                                fresh += 1;
                                fresh - 1
                            })
                        })
                        .collect();
                    let mut left = key.left.clone();
                    left[i] = (e.from, new_args);
                    self.emit(&head, key.second, left, key.right.clone(), slots(0..nl), slots(nl..nl + nr))?;
                }
            }
        } else {
            for j in 0..nr {
                let (q, args) = key.right[j].clone();
                let rules: Vec<LocalRule> = self.sat.minus.iter().filter(|r| r.state == q).cloned().collect();
                for r in rules {
                    let kids = self.split_args(&args, &r.children);
                    let n = kids.len();
                    let mut right = key.right[..j].to_vec();
                    right.extend(kids);
                    right.extend(key.right[j + 1..].iter().cloned());
                    let mut rshape = slots(nl..nl + j);
                    rshape.push(Shape::App(r.symbol.clone(), slots(nl + j..nl + j + n)));
                    rshape.extend(slots(nl + j + n..nl + right.len()));
                    self.emit(&head, key.second, key.left.clone(), right, slots(0..nl), rshape)?;
                }
                let succs: Vec<StatePair> = self.sat.eq.iter().filter(|e| e.from == q && !e.is_identity()).cloned().collect();
                for e in succs {
                    let mut right = key.right.clone();
                    right[j] = (e.to, e.map.iter().map(|&m| args[m]).collect());
                    self.emit(&head, key.second, key.left.clone(), right, slots(0..nl), slots(nl..nl + nr))?;
                }
            }
        }
        if !key.second {
            let done = if first_left {
                key.left.iter().all(|(s, _)| states[*s].reads_var)
            } else {
                key.right.iter().all(|(s, _)| states[*s].writes_var)
            };
            if done {
                let flipped = Key {
                    second: true,
                    ..key.clone()
                };
                let target = self.intern(flipped)?;
                let body = (1..=nl + nr).map(|k| BodyTerm::inst(&target, 1, k)).collect();
                self.grammar.add_production(Production { head: head.clone(), body });
            }
        }
        let axiom = sym(AXIOM);
        let any = sym(ANY);
        if key.second && nl == 1 && nr == 1 && states[key.left[0].0].reads_var && states[key.right[0].0].writes_var {
            self.grammar.add_production(Production {
                head: head.clone(),
                body: vec![BodyTerm::inst(&axiom, 1, 1), BodyTerm::inst(&axiom, 1, 2)],
            });
        }
        if nr == 0 && nl == 1 && states[key.left[0].0].reads_var {
            self.grammar.add_production(Production {
                head,
                body: vec![BodyTerm::inst(&any, 1, 1)],
            });
        }
        Ok(())
    }
}

fn check_system(trs: &Trs) -> Result<()> {
    trs.check_linear()?;
    let finite = Trs {
        automaton_rules: Vec::new(),
        ..trs.clone()
    };
    require_class(&finite, Class::Suffix)
}

/// Derivation grammar of a linear suffix system, expanding sides in `order`.
pub fn build_suffix_grammar_ordered(trs: &Trs, order: Order) -> Result<TupleGrammar> {
    check_system(trs)?;
    let ss = to_state_system(trs)?;
    let sat = saturate(&ss);
    grammar_of(&ss, &sat, order, max_nonterminals())
}

/// Derivation grammar of a linear suffix system.
pub fn build_suffix_grammar(trs: &Trs) -> Result<TupleGrammar> {
    build_suffix_grammar_ordered(trs, Order::LeftFirst)
}

pub fn grammar_of(ss: &StateSystem, sat: &SaturationTriple, order: Order, cap: usize) -> Result<TupleGrammar> {
    let mut b = Builder {
        ss,
        sat,
        order,
        cap,
        names: HashMap::new(),
        queue: VecDeque::new(),
        grammar: TupleGrammar::new(ss.alphabet.clone(), AXIOM),
    };
    let axiom = sym(AXIOM);
    let any = sym(ANY);
    b.grammar.add_nonterminal(NonTerminal::new(AXIOM, 2, Some((1, 1))))?;
    b.grammar.add_nonterminal(NonTerminal::new(ANY, 1, Some((1, 0))))?;
    b.grammar.notes.insert(axiom.clone(), "derivation".into());
    b.grammar.notes.insert(any.clone(), "any term".into());
    for (f, n) in ss.alphabet.iter() {
        let copy = |c: usize| -> BodyTerm {
            BodyTerm::App(f.clone(), (1..=n).map(|i| BodyTerm::inst(&axiom, i, c)).collect())
        };
        b.grammar.add_production(Production {
            head: axiom.clone(),
            body: vec![copy(1), copy(2)],
        });
        b.grammar.add_production(Production {
            head: any.clone(),
            body: vec![BodyTerm::App(f.clone(), (1..=n).map(|i| BodyTerm::inst(&any, i, 1)).collect())],
        });
    }
    for s in 0..ss.states.len() {
        let args: Vec<u32> = (0..ss.states[s].arity() as u32).collect();
        let atom = (s, args);
        b.emit(&axiom, false, vec![atom.clone()], vec![atom], slots(0..1), slots(1..2))?;
    }
    while let Some(key) = b.queue.pop_front() {
        b.expand(key)?;
    }
    let g = b.grammar.trim();
    g.check()?;
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `→*(L)`
    Forward,
    /// `(→*)⁻¹(L)`
    Inverse,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Forward => "forward",
            Direction::Inverse => "inverse",
        })
    }
}

/// Image or inverse image of `L(a)` under the derivation of a linear suffix system.
pub fn image_automaton_suffix(trs: &Trs, a: &TreeAutomaton, direction: Direction) -> Result<TreeAutomaton> {
    let (order, sync) = match direction {
        Direction::Forward => (Order::LeftFirst, Side::Left),
        Direction::Inverse => (Order::RightFirst, Side::Right),
    };
    let g = build_suffix_grammar_ordered(trs, order)?;
    let product = image_grammar(&g, a, sync)?;
    project_split(&product, sync.other())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rewriting::{reachable, Reach};
    use crate::terms::parse_term;

    fn swap_pump_system() -> Trs {
        Trs::from_strs("f/2 g/1 a/0", &["x", "y"], &[("f(x,y)", "f(y,x)"), ("a", "g(a)")]).unwrap()
    }

    fn t(trs: &Trs, s: &str) -> Term {
        parse_term(s, &trs.alphabet, &["x", "y", "z"]).unwrap()
    }

    #[test]
    fn pump_rule_state_system() {
        let r = Trs::from_strs("g/1 a/0", &[], &[("a", "g(a)")]).unwrap();
        let ss = to_state_system(&r).unwrap();
        assert_eq!(ss.states.len(), 3);
        assert_eq!(ss.consume.len(), 1);
        assert_eq!(ss.produce.len(), 2);
        assert_eq!(ss.bridges.len(), 1);
        let sat = saturate(&ss);
        let p = ss.state("P1.lε").unwrap();
        let q = ss.state("Q1.rε").unwrap();
        assert!(sat.relates(p, q, &[]));
        assert!(sat.relates(p, p, &[]));
        // a is produced under g and immediately consumed again.
        let leaf = ss.state("Q1.r1").unwrap();
        assert!(sat.relates(leaf, p, &[]));
    }

    #[test]
    fn swap_rule_boundaries() {
        let r = Trs::from_strs("f/2", &["x", "y"], &[("f(x,y)", "f(y,x)")]).unwrap();
        let ss = to_state_system(&r).unwrap();
        let p = ss.state("P1.lε").unwrap();
        let q = ss.state("Q1.rε").unwrap();
        assert_eq!(ss.states[p].nu, vec![sym("x"), sym("y")]);
        assert_eq!(ss.states[q].nu, vec![sym("y"), sym("x")]);
        assert_eq!(ss.bridges, vec![StatePair { from: p, to: q, map: vec![1, 0] }]);
        let sat = saturate(&ss);
        // Two swaps compose to the identity on the left-hand state.
        assert!(sat.relates(q, p, &[0, 1]));
        assert!(sat.relates(p, p, &[0, 1]));
    }

    #[test]
    fn empty_system() {
        let r = Trs::new(RankedAlphabet::parse("g/1 a/0").unwrap());
        let ss = to_state_system(&r).unwrap();
        assert!(ss.states.is_empty());
        assert!(saturate(&ss).eq.is_empty());
        let g = build_suffix_grammar(&r).unwrap();
        let pairs = g.enumerate_tuples(AXIOM, 8).unwrap();
        assert!(pairs.iter().all(|w| w[0] == w[1]));
        assert_eq!(pairs.len(), 4);
    }

    #[test]
    fn non_singleton_boundary() {
        let mut a = TreeAutomaton::new(RankedAlphabet::parse("f/2 a/0").unwrap());
        a.add_var("x");
        a.add_var("y");
        a.add_initial("q");
        a.add_rule("q", "f", &["v", "v"]).unwrap();
        a.add_rule("v", "x", &[]).unwrap();
        a.add_rule("v", "y", &[]).unwrap();
        assert!(matches!(boundaries(&a), Err(Error::NonSingletonBoundary { .. } | Error::NonLinear(_))));
    }

    #[test]
    fn state_system_agrees_on_ground_terms() {
        let r = swap_pump_system();
        let ss = to_state_system(&r).unwrap();
        let rp = ss.as_trs();
        // `x → p(x)` wraps any subterm under plain rewriting, so bounds stay small.
        let mut reach = Reach::new(&r, 5).unwrap();
        for s in r.alphabet.ground_terms(3) {
            let direct = reach.closure(&s, usize::MAX);
            let via: BTreeSet<Term> = reachable(&rp, &s, Bounds::new(usize::MAX, 7))
                .unwrap()
                .into_iter()
                .filter(|u| over_alphabet(u, &r.alphabet) && u.size() <= 5)
                .collect();
            assert_eq!(via, direct, "from {s}");
        }
    }

    #[test]
    fn two_phases_with_variables() {
        let r = swap_pump_system();
        let ss = to_state_system(&r).unwrap();
        let sat = saturate(&ss);
        for s in ["f(x,y)", "f(x,a)", "f(g(x),y)", "g(f(a,x))"] {
            let s = t(&r, s);
            let direct: BTreeSet<Term> = suffix_reachable(&r, &s, Bounds::new(usize::MAX, 7)).unwrap();
            let phased: BTreeSet<Term> = two_phase_reachable(&ss, &sat, &s, 11)
                .unwrap()
                .into_iter()
                .filter(|u| u.size() <= 7)
                .collect();
            assert_eq!(phased, direct, "from {s}");
        }
    }

    #[test]
    fn bridge_property_for_the_swap_system() {
        let r = swap_pump_system();
        let ss = to_state_system(&r).unwrap();
        let sat = saturate(&ss);
        let (checked, bad) = bridge_property_violations(&ss, &sat, 6).unwrap();
        assert!(checked > 0);
        assert!(bad.is_empty(), "{bad:?}");
    }

    #[test]
    fn swap_pump_pairs() {
        let r = swap_pump_system();
        let g = build_suffix_grammar(&r).unwrap();
        assert!(g.is_side_respecting());
        for (s, u) in [("f(a,g(a))", "f(g(a),a)"), ("a", "g(g(a))"), ("f(a,a)", "f(g(a),a)"), ("g(a)", "g(a)")] {
            assert!(g.contains_tuple(AXIOM, &[t(&r, s), t(&r, u)]).unwrap(), "{s} -> {u}");
        }
        assert!(!g.contains_tuple(AXIOM, &[t(&r, "g(a)"), t(&r, "a")]).unwrap());
        assert!(!g.contains_tuple(AXIOM, &[t(&r, "f(a,g(a))"), t(&r, "f(a,a)")]).unwrap());
    }

    #[test]
    fn ground_system_matches_oracle() {
        let r = Trs::from_strs("g/1 a/0 b/0", &[], &[("a", "b")]).unwrap();
        let g = build_suffix_grammar(&r).unwrap();
        let got: BTreeSet<(Term, Term)> = g
            .enumerate_tuples(AXIOM, 12)
            .unwrap()
            .into_iter()
            .filter(|w| w[0].size() <= 6 && w[1].size() <= 6)
            .map(|w| (w[0].clone(), w[1].clone()))
            .collect();
        let mut want = BTreeSet::new();
        let mut reach = Reach::new(&r, 6).unwrap();
        for s in r.alphabet.ground_terms(6) {
            for u in reach.closure(&s, usize::MAX) {
                want.insert((s.clone(), u));
            }
        }
        assert_eq!(got, want);
    }

    #[test]
    fn both_orders_generate_the_same_pairs() {
        let r = swap_pump_system();
        let a = build_suffix_grammar_ordered(&r, Order::LeftFirst).unwrap();
        let b = build_suffix_grammar_ordered(&r, Order::RightFirst).unwrap();
        assert_eq!(a.enumerate_tuples(AXIOM, 10).unwrap(), b.enumerate_tuples(AXIOM, 10).unwrap());
    }

    #[test]
    fn projected_side_has_one_component() {
        let r = swap_pump_system();
        for (order, side) in [(Order::LeftFirst, Side::Right), (Order::RightFirst, Side::Left)] {
            let g = build_suffix_grammar_ordered(&r, order).unwrap();
            for nt in &g.nonterminals {
                assert!(nt.side_components(side).unwrap().len() <= 1, "{}", nt.name);
            }
        }
    }

    #[test]
    fn forward_image_of_faa() {
        let r = swap_pump_system();
        let a = TreeAutomaton::from_finite_language(&r.alphabet, &[t(&r, "f(a,a)")]).unwrap();
        let img = image_automaton_suffix(&r, &a, Direction::Forward).unwrap();
        let got = img.enumerate_language(8);
        let want: BTreeSet<Term> = r
            .alphabet
            .ground_terms(8)
            .into_iter()
            .filter(|u| {
                let c = u.children();
                u.head().as_ref() == "f" && c.iter().all(|x| x.head().as_ref() != "f" && !x.to_string().contains('f'))
            })
            .collect();
        assert_eq!(got, want);
        let pre = image_automaton_suffix(&r, &a, Direction::Inverse).unwrap();
        assert_eq!(pre.enumerate_language(8), BTreeSet::from([t(&r, "f(a,a)")]));
    }

    #[test]
    fn empty_automaton_has_empty_image() {
        let r = swap_pump_system();
        let a = TreeAutomaton::new(r.alphabet.clone());
        for d in [Direction::Forward, Direction::Inverse] {
            assert!(image_automaton_suffix(&r, &a, d).unwrap().enumerate_language(8).is_empty());
        }
    }

    #[test]
    fn erasing_rule() {
        let r = Trs::from_strs("f/2 g/1 a/0", &["x", "y"], &[("f(x,y)", "x")]).unwrap();
        let g = build_suffix_grammar(&r).unwrap();
        assert!(g.contains_tuple(AXIOM, &[t(&r, "f(g(a),f(a,a))"), t(&r, "g(a)")]).unwrap());
        assert!(g.contains_tuple(AXIOM, &[t(&r, "g(f(f(a,a),a))"), t(&r, "g(a)")]).unwrap());
        assert!(!g.contains_tuple(AXIOM, &[t(&r, "f(a,g(a))"), t(&r, "g(a)")]).unwrap());
    }

    #[test]
    fn refuses_non_suffix_systems() {
        let r = Trs::from_strs("f/1 g/1 a/0", &["x"], &[("g(x)", "f(g(f(x)))")]).unwrap();
        let report = crate::classifier::classify(&r).unwrap();
        if !report.is(Class::Suffix) {
            assert!(matches!(build_suffix_grammar(&r), Err(Error::ClassVeto { .. })));
        }
    }

    #[test]
    fn nonterminal_cap() {
        let r = swap_pump_system();
        let ss = to_state_system(&r).unwrap();
        let sat = saturate(&ss);
        assert!(matches!(grammar_of(&ss, &sat, Order::LeftFirst, 3), Err(Error::NonterminalCap(3))));
    }
}
