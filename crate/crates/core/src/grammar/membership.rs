//! Exact tuple membership by goal decomposition.

use std::collections::{HashMap, HashSet, VecDeque};

use super::{BodyTerm, TupleGrammar};
use crate::error::{Error, Result};
use crate::terms::{Symbol, Term};

type Goal = (usize, Vec<Term>);

struct Compiled {
    body: Vec<BodyTerm>,
    /// `(nonterminal, instance)` → slot.
    slots: HashMap<(Symbol, usize), usize>,
    instance_nts: Vec<usize>,
    epsilon: bool,
}

/// Membership queries against one grammar; answers are memoized across calls.
pub struct Membership<'g> {
    grammar: &'g TupleGrammar,
    index: HashMap<Symbol, usize>,
    arity: Vec<usize>,
    productions: Vec<Vec<Compiled>>,
    productive: Vec<bool>,
    /// Nonterminals that copy every terminal, hence generate all ground trees.
    star: Vec<bool>,
    memo: HashMap<Goal, bool>,
}

impl<'g> Membership<'g> {
    pub fn new(grammar: &'g TupleGrammar) -> Result<Self> {
        grammar.check()?;
        let index: HashMap<Symbol, usize> = grammar
            .nonterminals
            .iter()
            .enumerate()
            .map(|(i, n)| (n.name.clone(), i))
            .collect();
        let arity: Vec<usize> = grammar.nonterminals.iter().map(|n| n.arity).collect();
        let mut productions: Vec<Vec<Compiled>> = (0..arity.len()).map(|_| Vec::new()).collect();
        for p in &grammar.productions {
            let instances = p.instances();
            let slots = instances.iter().enumerate().map(|(k, key)| (key.clone(), k)).collect();
            let instance_nts: Vec<usize> = instances.iter().map(|(m, _)| index[m]).collect();
            let epsilon = p.terminal_size() == 0 && instance_nts.iter().filter(|&&m| arity[m] > 0).count() == 1;
            productions[index[&p.head]].push(Compiled {
                body: p.body.clone(),
                slots,
                instance_nts,
                epsilon,
            });
        }
        let productive_names = grammar.productive();
        let productive = grammar
            .nonterminals
            .iter()
            .map(|n| productive_names.contains(&n.name))
            .collect();
        let star = grammar
            .nonterminals
            .iter()
            .map(|n| n.arity == 1 && copies_everything(grammar, &n.name))
            .collect();
        Ok(Membership {
            grammar,
            index,
            arity,
            productions,
            productive,
            star,
            memo: HashMap::new(),
        })
    }

    pub fn grammar(&self) -> &TupleGrammar {
        self.grammar
    }

    /// Whether `word` is derivable from `nt`. Wrong lengths, non-ground
    /// words and unknown nonterminals give `false`.
    pub fn contains(&mut self, nt: &str, word: &[Term]) -> bool {
        let Some(&n) = self.index.get(nt) else { return false };
        if word.len() != self.arity[n] || !word.iter().all(Term::is_ground) {
            return false;
        }
        if !word.iter().all(|t| t.check_alphabet(&self.grammar.alphabet).is_ok()) {
            return false;
        }
        self.solve((n, word.to_vec()))
    }

    fn solve(&mut self, goal: Goal) -> bool {
        if let Some(&b) = self.memo.get(&goal) {
            return b;
        }
        if goal.1.is_empty() {
            return self.productive[goal.0];
        }
        if self.star[goal.0] {
            return true;
        }
        // Goals of the same size reachable through terminal-free productions.
        let mut closure: Vec<Goal> = vec![goal.clone()];
        let mut seen: HashSet<Goal> = HashSet::from([goal.clone()]);
        let mut queue = VecDeque::from([goal.clone()]);
        let mut result = false;
        while let Some(g) = queue.pop_front() {
            if self.memo.get(&g) == Some(&true) || (self.star[g.0] && g.1.len() == 1) {
                result = true;
                break;
            }
            for p in &self.productions[g.0] {
                if !p.epsilon {
                    continue;
                }
                let Some(subgoals) = decompose(p, &g.1, &self.arity) else { continue };
                // Nullary instances only need to be productive.
                if !subgoals.iter().all(|s| !s.1.is_empty() || self.productive[s.0]) {
                    continue;
                }
                for sub in subgoals {
                    if !sub.1.is_empty() && seen.insert(sub.clone()) {
                        closure.push(sub.clone());
                        queue.push_back(sub);
                    }
                }
            }
        }
        if !result {
            'outer: for g in &closure {
                let n = self.productions[g.0].len();
                for k in 0..n {
                    let p = &self.productions[g.0][k];
                    if p.epsilon {
                        continue;
                    }
                    let Some(subgoals) = decompose(p, &g.1, &self.arity) else { continue };
                    if subgoals.into_iter().all(|s| self.solve(s)) {
                        result = true;
                        break 'outer;
                    }
                }
            }
        }
        if result {
            self.memo.insert(goal, true);
        } else {
            // Nothing in the closure can succeed either.
            for g in closure {
                self.memo.insert(g, false);
            }
        }
        result
    }
}

/// Matches the body against `word`, returning the subgoal of every instance.
fn decompose(p: &Compiled, word: &[Term], arity: &[usize]) -> Option<Vec<Goal>> {
    let mut parts: Vec<Vec<Option<Term>>> = p.instance_nts.iter().map(|&m| vec![None; arity[m]]).collect();
    for (b, t) in p.body.iter().zip(word) {
        if !bind(b, t, p, &mut parts) {
            return None;
        }
    }
    Some(
        parts
            .into_iter()
            .zip(&p.instance_nts)
            .map(|(comps, &m)| (m, comps.into_iter().map(|c| c.expect("grouping checked")).collect()))
            .collect(),
    )
}

fn bind(b: &BodyTerm, t: &Term, p: &Compiled, parts: &mut [Vec<Option<Term>>]) -> bool {
    match (b, t) {
        (BodyTerm::Inst(v), _) => {
            parts[p.slots[&(v.nt.clone(), v.instance)]][v.component - 1] = Some(t.clone());
            true
        }
        (BodyTerm::App(f, bs), Term::App(g, ts)) => {
            f == g && bs.len() == ts.len() && bs.iter().zip(ts).all(|(b, t)| bind(b, t, p, parts))
        }
        _ => false,
    }
}

fn copies_everything(grammar: &TupleGrammar, nt: &Symbol) -> bool {
    grammar.alphabet.iter().all(|(f, n)| {
        grammar.productions.iter().any(|p| {
            if &p.head != nt || p.body.len() != 1 {
                return false;
            }
            match &p.body[0] {
                BodyTerm::App(g, children) if g == f && children.len() == n => {
                    let mut instances = HashSet::new();
                    children.iter().all(|c| {
                        matches!(c, BodyTerm::Inst(v) if &v.nt == nt && v.component == 1 && instances.insert(v.instance))
                    })
                }
                _ => false,
            }
        })
    })
}

impl TupleGrammar {
    /// Exact membership of a ground tuple.
    pub fn contains_tuple(&self, axiom: &str, word: &[Term]) -> Result<bool> {
        if self.nonterminal(axiom).is_none() {
            return Err(Error::Invalid(format!("unknown nonterminal `{axiom}`")));
        }
        Ok(Membership::new(self)?.contains(axiom, word))
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::G1;
    use super::*;
    use crate::terms::RankedAlphabet;

    fn word(items: &[&str]) -> Vec<Term> {
        let a = RankedAlphabet::parse("f/2 g/1 h/1 a/0").unwrap();
        let none: &[&str] = &[];
        items.iter().map(|s| crate::terms::parse_term(s, &a, none).unwrap()).collect()
    }

    #[test]
    fn examples() {
        let g = TupleGrammar::parse(G1).unwrap();
        assert!(g.contains_tuple("A", &word(&["f(g(a),g(a))", "h(f(a,a))"])).unwrap());
        assert!(!g.contains_tuple("A", &word(&["a", "g(a)"])).unwrap());
        assert!(!g.contains_tuple("A", &word(&["a"])).unwrap());
    }

    #[test]
    fn agrees_with_enumeration() {
        let g = TupleGrammar::parse(G1).unwrap();
        let all = g.enumerate_tuples("A", 10).unwrap();
        let mut m = Membership::new(&g).unwrap();
        let terms = RankedAlphabet::parse("f/2 g/1 h/1 a/0").unwrap().ground_terms(7);
        for s in &terms {
            for t in &terms {
                if s.size() + t.size() > 10 {
                    continue;
                }
                let w = vec![s.clone(), t.clone()];
                assert_eq!(m.contains("A", &w), all.contains(&w), "{s} {t}");
            }
        }
    }

    #[test]
    fn epsilon_cycles() {
        let text = "nonterminal: A/2\nnonterminal: B/2\naxiom: A\n\
                    prod: A -> B#1.2, B#1.1\nprod: B -> A#1.1, A#1.2\nprod: A -> a, g(a)\n";
        let g = TupleGrammar::parse(text).unwrap();
        assert!(g.contains_tuple("A", &word(&["g(a)", "a"])).unwrap());
        assert!(g.contains_tuple("B", &word(&["g(a)", "a"])).unwrap());
        assert!(!g.contains_tuple("A", &word(&["a", "a"])).unwrap());
    }

    #[test]
    fn star_nonterminal() {
        let text = "nonterminal: S/1\naxiom: S\nprod: S -> a\nprod: S -> g(S#1.1)\nprod: S -> h(S#1.1)\n\
                    prod: S -> f(S#1.1, S#2.1)\n";
        let g = TupleGrammar::parse(text).unwrap();
        assert!(g.contains_tuple("S", &word(&["f(h(a),g(a))"])).unwrap());
    }
}
