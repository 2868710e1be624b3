//! Grammar transformations: swapping sides, synchronizing one side with a
//! tree automaton, and projecting one side to an automaton.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use super::{BodyTerm, InstanceVar, NonTerminal, Production, TupleGrammar};
use crate::automata::{AutomatonRule, TreeAutomaton};
use crate::error::{Error, Result};
use crate::terms::{sym, Symbol};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

/// Puts the right side of every nonterminal first.
pub fn swap_projections(g: &TupleGrammar) -> Result<TupleGrammar> {
    let mut splits = BTreeMap::new();
    for nt in &g.nonterminals {
        splits.insert(nt.name.clone(), nt.split.ok_or_else(|| Error::NoSplit(nt.name.to_string()))?);
    }
    let remap = |v: &InstanceVar| -> Result<BodyTerm> {
        let (p, q) = *splits
            .get(&v.nt)
            .ok_or_else(|| Error::Invalid(format!("undeclared nonterminal `{}`", v.nt)))?;
        let component = if v.component > p { v.component - p } else { q + v.component };
        Ok(BodyTerm::inst(&v.nt, v.instance, component))
    };
    let mut out = g.clone();
    for nt in &mut out.nonterminals {
        let (p, q) = nt.split.unwrap();
        nt.split = Some((q, p));
    }
    out.productions = Vec::with_capacity(g.productions.len());
    for prod in &g.productions {
        let (p, _) = *splits
            .get(&prod.head)
            .ok_or_else(|| Error::Invalid(format!("undeclared head `{}`", prod.head)))?;
        if prod.body.len() < p {
            return Err(Error::Dimension {
                expected: p,
                found: prod.body.len(),
            });
        }
        let mut failure = None;
        let mut swapped: Vec<BodyTerm> = Vec::with_capacity(prod.body.len());
        for b in prod.body[p..].iter().chain(&prod.body[..p]) {
            swapped.push(b.map_vars(&mut |v| {
                remap(v).unwrap_or_else(|e| {
                    failure = Some(e);
                    BodyTerm::Inst(v.clone())
                })
            }));
        }
        if let Some(e) = failure {
            return Err(e);
        }
        out.productions.push(Production {
            head: prod.head.clone(),
            body: swapped,
        });
    }
    Ok(out)
}

/// Projects one side of a side-respecting grammar onto a top-down tree
/// automaton whose states are `(nonterminal, component)` pairs. Exact when
/// no nonterminal has two components on that side that must stay correlated;
/// otherwise an over-approximation.
pub fn project_split(g: &TupleGrammar, side: Side) -> Result<TreeAutomaton> {
    if !g.is_side_respecting() {
        return Err(Error::Invalid(
            "projection needs a split on every nonterminal and bodies that keep sides apart".into(),
        ));
    }
    let g = g.trim();
    let mut a = TreeAutomaton::new(g.alphabet.clone());
    let mut ranges = BTreeMap::new();
    for nt in &g.nonterminals {
        ranges.insert(nt.name.clone(), nt.side_components(side)?);
    }
    let state = |nt: &Symbol, k: usize| sym(&format!("{nt}.{}", k + 1));
    let Some(axiom_range) = ranges.get(&g.axiom) else {
        // Nothing productive is reachable: empty language.
        return Ok(a);
    };
    if axiom_range.len() != 1 {
        return Err(Error::Dimension {
            expected: 1,
            found: axiom_range.len(),
        });
    }
    a.add_initial(&state(&g.axiom, axiom_range.start));
    let mut epsilon: BTreeMap<Symbol, BTreeSet<Symbol>> = BTreeMap::new();
    let mut fresh = 0usize;
    for p in &g.productions {
        for k in ranges[&p.head].clone() {
            let q = state(&p.head, k);
            a.add_state(&q);
            match &p.body[k] {
                BodyTerm::Inst(v) => {
                    epsilon.entry(q).or_default().insert(state(&v.nt, v.component - 1));
                }
                tree => {
                    add_tree_rules(&mut a, &q, tree, &state, &mut fresh)?;
                }
            }
        }
    }
    // Close rules under epsilon moves.
    let rules: Vec<AutomatonRule> = a.rules.iter().cloned().collect();
    let mut by_state: BTreeMap<Symbol, Vec<AutomatonRule>> = BTreeMap::new();
    for r in rules {
        by_state.entry(r.state.clone()).or_default().push(r);
    }
    for (q, _) in epsilon.clone() {
        let mut seen = BTreeSet::from([q.clone()]);
        let mut stack = vec![q.clone()];
        while let Some(s) = stack.pop() {
            for t in epsilon.get(&s).into_iter().flatten() {
                if seen.insert(t.clone()) {
                    stack.push(t.clone());
                }
            }
        }
        for s in seen {
            for r in by_state.get(&s).into_iter().flatten() {
                a.insert_rule(AutomatonRule {
                    state: q.clone(),
                    ..r.clone()
                })?;
            }
        }
    }
    Ok(a.trim())
}

fn add_tree_rules(
    a: &mut TreeAutomaton,
    q: &Symbol,
    tree: &BodyTerm,
    state: &impl Fn(&Symbol, usize) -> Symbol,
    fresh: &mut usize,
) -> Result<()> {
    let BodyTerm::App(f, children) = tree else {
        unreachable!("instance leaves are handled by the caller")
    };
    let mut child_states = Vec::with_capacity(children.len());
    for c in children {
        match c {
            BodyTerm::Inst(v) => child_states.push(state(&v.nt, v.component - 1)),
            inner => {
                *fresh += 1;
                let s = sym(&format!("n{fresh}"));
                a.add_state(&s);
                add_tree_rules(a, &s, inner, state, fresh)?;
                child_states.push(s);
            }
        }
    }
    a.insert_rule(AutomatonRule {
        state: q.clone(),
        symbol: f.clone(),
        children: child_states,
    })
}

fn product_name(nt: &Symbol, word: &[Symbol]) -> Symbol {
    let states: Vec<&str> = word.iter().map(|s| &**s).collect();
    sym(&format!("{nt}@{}", states.join(".")))
}

/// Product of a side-respecting grammar with an automaton read on `sync`:
/// nonterminals become `(N, q₁…qₖ)`, one state per `sync` component of `N`,
/// and keep only derivations whose `sync` side the automaton accepts from
/// those states. The axiom's `sync` side starts in the initial states.
pub fn image_grammar(g: &TupleGrammar, a: &TreeAutomaton, sync: Side) -> Result<TupleGrammar> {
    if !g.is_side_respecting() {
        return Err(Error::Invalid(
            "synchronization needs a split on every nonterminal and bodies that keep sides apart".into(),
        ));
    }
    let g = g.trim();
    let mut out = TupleGrammar::new(g.alphabet.clone(), "");
    let by_head = g.productions_by_head();
    let nts: BTreeMap<Symbol, NonTerminal> = g.nonterminals.iter().map(|n| (n.name.clone(), n.clone())).collect();
    let Some(axiom) = nts.get(&g.axiom) else {
        // Empty language: a lone axiom without productions.
        let ax = sym(&format!("{}@", g.axiom));
        out.axiom = ax.clone();
        let arity = g.nonterminal(&g.axiom).map_or(0, |n| n.arity);
        let split = g.nonterminal(&g.axiom).and_then(|n| n.split);
        out.add_nonterminal(NonTerminal {
            name: ax,
            arity,
            split,
        })?;
        return Ok(out);
    };
    let axiom_sync = axiom.side_components(sync)?;
    if axiom_sync.len() != 1 {
        return Err(Error::Dimension {
            expected: 1,
            found: axiom_sync.len(),
        });
    }
    let mut queue: VecDeque<(Symbol, Vec<Symbol>)> = VecDeque::new();
    let mut known: HashMap<(Symbol, Vec<Symbol>), Symbol> = HashMap::new();
    let mut intern = |nt: &Symbol, word: Vec<Symbol>, queue: &mut VecDeque<(Symbol, Vec<Symbol>)>| -> Symbol {
        known
            .entry((nt.clone(), word.clone()))
            .or_insert_with(|| {
                queue.push_back((nt.clone(), word.clone()));
                product_name(nt, &word)
            })
            .clone()
    };
    let initial: Vec<Symbol> = a.initial.iter().cloned().collect();
    let roots: Vec<Symbol> = initial
        .iter()
        .map(|q| intern(&g.axiom, vec![q.clone()], &mut queue))
        .collect();
    if roots.len() == 1 {
        out.axiom = roots[0].clone();
    } else {
        // Several initial states: a fresh axiom choosing one.
        out.axiom = sym(&format!("{}@", g.axiom));
        out.add_nonterminal(NonTerminal {
            name: out.axiom.clone(),
            arity: axiom.arity,
            split: axiom.split,
        })?;
        for r in &roots {
            out.add_production(Production {
                head: out.axiom.clone(),
                body: (1..=axiom.arity).map(|j| BodyTerm::inst(r, 1, j)).collect(),
            });
        }
    }
    while let Some((nt, word)) = queue.pop_front() {
        let name = product_name(&nt, &word);
        let decl = &nts[&nt];
        out.add_nonterminal(NonTerminal {
            name: name.clone(),
            arity: decl.arity,
            split: decl.split,
        })?;
        let sync_range = decl.side_components(sync)?;
        for p in by_head.get(&nt).into_iter().flatten() {
            let trees: Vec<_> = p.body[sync_range.clone()].iter().map(BodyTerm::to_open_term).collect();
            for frontier in a.run_forest(&word, &trees) {
                let at: HashMap<&str, &Symbol> = frontier.iter().map(|(v, q)| (&**v, q)).collect();
                let mut renamed: HashMap<(Symbol, usize), Symbol> = HashMap::new();
                for (m, i) in p.instances() {
                    let decl_m = &nts[&m];
                    let word_m: Vec<Symbol> = decl_m
                        .side_components(sync)?
                        .map(|k| {
                            let var = InstanceVar {
                                nt: m.clone(),
                                instance: i,
                                component: k + 1,
                            }
                            .to_string();
                            at.get(var.as_str()).map(|q| (*q).clone())
                        })
                        .collect::<Option<_>>()
                        .ok_or_else(|| Error::Invalid(format!("instance {m}#{i} escapes the automaton run")))?;
                    renamed.insert((m.clone(), i), intern(&m, word_m, &mut queue));
                }
                let body = p
                    .body
                    .iter()
                    .map(|b| b.map_vars(&mut |v| BodyTerm::inst(&renamed[&(v.nt.clone(), v.instance)], v.instance, v.component)))
                    .collect();
                out.add_production(Production {
                    head: name.clone(),
                    body,
                });
            }
        }
    }
    for (nt, note) in &g.notes {
        for n in &out.nonterminals {
            if n.name.starts_with(&format!("{nt}@")[..]) {
                out.notes.entry(n.name.clone()).or_insert_with(|| note.clone());
            }
        }
    }
    Ok(out.trim())
}

#[cfg(test)]
mod tests {
    use super::super::tests::G1;
    use super::*;
    use crate::terms::{parse_term, RankedAlphabet, Term};

    fn t(s: &str) -> Term {
        let a = RankedAlphabet::parse("f/2 g/1 h/1 a/0").unwrap();
        let none: &[&str] = &[];
        parse_term(s, &a, none).unwrap()
    }

    #[test]
    fn swap_reverses_pairs() {
        let g = TupleGrammar::parse(G1).unwrap();
        let s = swap_projections(&g).unwrap();
        assert!(s.validate().is_empty(), "{:?}", s.validate());
        assert!(s.contains_tuple("A", &[t("h(f(a,a))"), t("f(g(a),g(a))")]).unwrap());
        assert_eq!(swap_projections(&s).unwrap(), g);
        let before = g.enumerate_tuples("A", 9).unwrap();
        let after = s.enumerate_tuples("A", 9).unwrap();
        let reversed: BTreeSet<_> = before.into_iter().map(|w| vec![w[1].clone(), w[0].clone()]).collect();
        assert_eq!(after, reversed);
    }

    #[test]
    fn swap_needs_a_split() {
        let g = TupleGrammar::parse("nonterminal: A/2\naxiom: A\nprod: A -> a, a\n").unwrap();
        assert!(matches!(swap_projections(&g), Err(Error::NoSplit(_))));
    }

    #[test]
    fn projections_match_enumeration() {
        let g = TupleGrammar::parse(G1).unwrap();
        let pairs = g.enumerate_tuples("A", 14).unwrap();
        for (side, k) in [(Side::Left, 0), (Side::Right, 1)] {
            let a = project_split(&g, side).unwrap();
            let lang = a.enumerate_language(5);
            let proj: BTreeSet<Term> = pairs.iter().map(|w| w[k].clone()).filter(|x| x.size() <= 5).collect();
            // Every projected term of size ≤ 5 has a partner of size ≤ 9.
            assert_eq!(lang, proj, "{side:?}");
        }
    }

    #[test]
    fn image_through_the_universal_automaton() {
        let g = TupleGrammar::parse(G1).unwrap();
        let all = TreeAutomaton::universal(&g.alphabet);
        let prod = image_grammar(&g, &all, Side::Left).unwrap();
        assert!(prod.validate().is_empty());
        assert_eq!(prod.enumerate_tuples(&prod.axiom.clone(), 10).unwrap(), g.enumerate_tuples("A", 10).unwrap());
        let right = project_split(&prod, Side::Right).unwrap();
        assert!(right.accepts(&t("h(f(a,a))")).unwrap());
    }

    #[test]
    fn image_of_a_finite_language() {
        let g = TupleGrammar::parse(G1).unwrap();
        let a = TreeAutomaton::from_finite_language(&g.alphabet, &[t("f(g(a),g(a))")]).unwrap();
        let prod = image_grammar(&g, &a, Side::Left).unwrap();
        let pairs = prod.enumerate_tuples(&prod.axiom.clone(), 16).unwrap();
        let expected: BTreeSet<_> = g
            .enumerate_tuples("A", 16)
            .unwrap()
            .into_iter()
            .filter(|w| w[0] == t("f(g(a),g(a))"))
            .collect();
        assert_eq!(pairs, expected);
        let image = project_split(&prod, Side::Right).unwrap();
        let seconds: BTreeSet<Term> = expected.iter().map(|w| w[1].clone()).collect();
        assert_eq!(image.enumerate_language(9), seconds);
    }

    #[test]
    fn empty_automaton_gives_empty_image() {
        let g = TupleGrammar::parse(G1).unwrap();
        let a = TreeAutomaton::new(g.alphabet.clone());
        let prod = image_grammar(&g, &a, Side::Left).unwrap();
        assert!(prod.enumerate_tuples(&prod.axiom.clone(), 10).unwrap().is_empty());
        let image = project_split(&prod, Side::Right).unwrap();
        assert!(image.is_empty());
    }
}
