//! Top-down nondeterministic finite tree automata.
//!
//! A rule `q f -> q1 … qn` reads: from state `q`, a node labelled `f` is
//! accepted when its children are accepted from `q1 … qn`. Leaves labelled
//! by a declared variable are read like constants, which lets the same type
//! describe languages of open terms (used for automaton-pair rules).

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::terms::{sym, RankedAlphabet, Symbol, Term};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AutomatonRule {
    pub state: Symbol,
    pub symbol: Symbol,
    pub children: Vec<Symbol>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TreeAutomaton {
    pub alphabet: RankedAlphabet,
    /// Variable names readable as leaves.
    pub vars: BTreeSet<Symbol>,
    pub states: BTreeSet<Symbol>,
    pub initial: BTreeSet<Symbol>,
    pub rules: BTreeSet<AutomatonRule>,
}

/// Assignment of a state to each variable leaf, in occurrence order.
pub type Frontier = Vec<(Symbol, Symbol)>;

impl TreeAutomaton {
    pub fn new(alphabet: RankedAlphabet) -> Self {
        TreeAutomaton {
            alphabet,
            ..Default::default()
        }
    }

    pub fn add_state(&mut self, q: &str) -> Symbol {
        let s = sym(q);
        self.states.insert(s.clone());
        s
    }

    pub fn add_initial(&mut self, q: &str) {
        let s = self.add_state(q);
        self.initial.insert(s);
    }

    pub fn add_var(&mut self, x: &str) {
        self.vars.insert(sym(x));
    }

    pub fn add_rule(&mut self, state: &str, symbol: &str, children: &[&str]) -> Result<()> {
        let children: Vec<Symbol> = children.iter().map(|c| sym(c)).collect();
        self.insert_rule(AutomatonRule {
            state: sym(state),
            symbol: sym(symbol),
            children,
        })
    }

    pub fn insert_rule(&mut self, rule: AutomatonRule) -> Result<()> {
        let expected = if self.vars.contains(&rule.symbol) {
            0
        } else {
            self.alphabet
                .arity(&rule.symbol)
                .ok_or_else(|| Error::Invalid(format!("rule uses unknown symbol `{}`", rule.symbol)))?
        };
        if expected != rule.children.len() {
            return Err(Error::Dimension {
                expected,
                found: rule.children.len(),
            });
        }
        self.states.insert(rule.state.clone());
        self.states.extend(rule.children.iter().cloned());
        self.rules.insert(rule);
        Ok(())
    }

    fn rules_by_symbol(&self) -> HashMap<&Symbol, Vec<&AutomatonRule>> {
        let mut out: HashMap<&Symbol, Vec<&AutomatonRule>> = HashMap::new();
        for r in &self.rules {
            out.entry(&r.symbol).or_default().push(r);
        }
        out
    }

    fn rules_by_state(&self) -> HashMap<&Symbol, Vec<&AutomatonRule>> {
        let mut out: HashMap<&Symbol, Vec<&AutomatonRule>> = HashMap::new();
        for r in &self.rules {
            out.entry(&r.state).or_default().push(r);
        }
        out
    }

    /// States from which `t` is accepted. Variable leaves must be declared in `vars`.
    pub fn states_accepting(&self, t: &Term) -> BTreeSet<Symbol> {
        let index = self.rules_by_symbol();
        states_rec(&index, t)
    }

    /// Whether some run from an initial state accepts the ground term `t`.
    pub fn accepts(&self, t: &Term) -> Result<bool> {
        if !t.is_ground() && !t.vars().is_subset(&self.vars) {
            return Err(Error::NonGround(t.to_string()));
        }
        Ok(self.states_accepting(t).iter().any(|q| self.initial.contains(q)))
    }

    /// Whether `t` is accepted from `q`.
    pub fn accepts_from(&self, q: &str, t: &Term) -> bool {
        self.states_accepting(t).contains(q)
    }

    /// States from which at least one term is accepted.
    pub fn productive_states(&self) -> BTreeSet<Symbol> {
        let mut productive: BTreeSet<Symbol> = BTreeSet::new();
        loop {
            let before = productive.len();
            for r in &self.rules {
                if r.children.iter().all(|c| productive.contains(c)) {
                    productive.insert(r.state.clone());
                }
            }
            if productive.len() == before {
                return productive;
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        let productive = self.productive_states();
        !self.initial.iter().any(|q| productive.contains(q))
    }

    /// Terms accepted from each state, grouped by size (index 0 unused).
    pub fn terms_by_state(&self, max_size: usize) -> BTreeMap<Symbol, Vec<Vec<Term>>> {
        let mut table: BTreeMap<Symbol, Vec<Vec<Term>>> = self
            .states
            .iter()
            .map(|q| (q.clone(), vec![Vec::new(); max_size + 1]))
            .collect();
        for size in 1..=max_size {
            for r in &self.rules {
                let n = r.children.len();
                if size < n + 1 {
                    continue;
                }
                let mut acc = Vec::new();
                fill(&table, &r.children, size - 1, &mut Vec::new(), &mut acc);
                let built: Vec<Term> = acc
                    .into_iter()
                    .map(|children| {
                        if self.vars.contains(&r.symbol) {
                            Term::Var(r.symbol.clone())
                        } else {
                            Term::App(r.symbol.clone(), children)
                        }
                    })
                    .collect();
                let level = &mut table.get_mut(&r.state).unwrap()[size];
                level.extend(built);
            }
            for levels in table.values_mut() {
                levels[size].sort();
                levels[size].dedup();
            }
        }
        table
    }

    /// Every accepted term of size at most `max_size`.
    pub fn enumerate_language(&self, max_size: usize) -> BTreeSet<Term> {
        let table = self.terms_by_state(max_size);
        self.initial
            .iter()
            .filter_map(|q| table.get(q))
            .flat_map(|levels| levels.iter().flatten().cloned())
            .collect()
    }

    /// Partial runs over a word of open terms: every way to start the
    /// i-th term in `init[i]` and reach each variable leaf in some state.
    /// Leaves that are declared automaton variables are read as symbols;
    /// other variables are free frontier points.
    pub fn run_forest(&self, init: &[Symbol], word: &[Term]) -> Vec<Frontier> {
        if init.len() != word.len() {
            return Vec::new();
        }
        let by_state = self.rules_by_state();
        let mut partial: Vec<Frontier> = vec![Vec::new()];
        for (q, t) in init.iter().zip(word) {
            let runs = runs_from(self, &by_state, q, t);
            let mut next = Vec::new();
            for prefix in &partial {
                for run in &runs {
                    let mut joined = prefix.clone();
                    joined.extend(run.iter().cloned());
                    next.push(joined);
                }
            }
            partial = next;
            if partial.is_empty() {
                break;
            }
        }
        partial.sort();
        partial.dedup();
        partial
    }

    /// Accepts exactly a finite set of ground terms.
    pub fn from_finite_language(alphabet: &RankedAlphabet, terms: &[Term]) -> Result<Self> {
        let mut a = TreeAutomaton::new(alphabet.clone());
        a.add_initial("q0");
        let mut names: BTreeMap<Term, Symbol> = BTreeMap::new();
        for t in terms {
            if !t.is_ground() {
                return Err(Error::NonGround(t.to_string()));
            }
            t.check_alphabet(alphabet)?;
            let q = intern_subterms(&mut a, &mut names, t)?;
            let rules: Vec<AutomatonRule> = a.rules.iter().filter(|r| r.state == q).cloned().collect();
            for r in rules {
                a.insert_rule(AutomatonRule {
                    state: sym("q0"),
                    ..r
                })?;
            }
        }
        Ok(a)
    }

    /// Accepts every ground term over the alphabet.
    pub fn universal(alphabet: &RankedAlphabet) -> Self {
        let mut a = TreeAutomaton::new(alphabet.clone());
        a.add_initial("q");
        for (f, n) in alphabet.iter() {
            a.rules.insert(AutomatonRule {
                state: sym("q"),
                symbol: f.clone(),
                children: vec![sym("q"); n],
            });
        }
        a
    }

    /// Removes unproductive states and states unreachable from the initial ones.
    pub fn trim(&self) -> Self {
        let productive = self.productive_states();
        let useful: Vec<&AutomatonRule> = self
            .rules
            .iter()
            .filter(|r| productive.contains(&r.state) && r.children.iter().all(|c| productive.contains(c)))
            .collect();
        let mut reachable: BTreeSet<Symbol> = self.initial.iter().filter(|q| productive.contains(*q)).cloned().collect();
        let mut stack: Vec<Symbol> = reachable.iter().cloned().collect();
        while let Some(q) = stack.pop() {
            for r in useful.iter().filter(|r| r.state == q) {
                for c in &r.children {
                    if reachable.insert(c.clone()) {
                        stack.push(c.clone());
                    }
                }
            }
        }
        TreeAutomaton {
            alphabet: self.alphabet.clone(),
            vars: self.vars.clone(),
            states: reachable.clone(),
            initial: self.initial.intersection(&reachable).cloned().collect(),
            rules: useful
                .into_iter()
                .filter(|r| reachable.contains(&r.state))
                .cloned()
                .collect(),
        }
    }

    /// Renames states `q` to `{prefix}{q}`.
    pub fn prefix_states(&self, prefix: &str) -> Self {
        let rn = |q: &Symbol| sym(&format!("{prefix}{q}"));
        TreeAutomaton {
            alphabet: self.alphabet.clone(),
            vars: self.vars.clone(),
            states: self.states.iter().map(rn).collect(),
            initial: self.initial.iter().map(rn).collect(),
            rules: self
                .rules
                .iter()
                .map(|r| AutomatonRule {
                    state: rn(&r.state),
                    symbol: r.symbol.clone(),
                    children: r.children.iter().map(rn).collect(),
                })
                .collect(),
        }
    }
}

fn intern_subterms(a: &mut TreeAutomaton, names: &mut BTreeMap<Term, Symbol>, t: &Term) -> Result<Symbol> {
    if let Some(q) = names.get(t) {
        return Ok(q.clone());
    }
    let children = t
        .children()
        .iter()
        .map(|c| intern_subterms(a, names, c))
        .collect::<Result<Vec<_>>>()?;
    let q = sym(&format!("t{}", names.len() + 1));
    names.insert(t.clone(), q.clone());
    a.insert_rule(AutomatonRule {
        state: q.clone(),
        symbol: t.head().clone(),
        children,
    })?;
    Ok(q)
}

fn states_rec(index: &HashMap<&Symbol, Vec<&AutomatonRule>>, t: &Term) -> BTreeSet<Symbol> {
    let child_sets: Vec<BTreeSet<Symbol>> = t.children().iter().map(|c| states_rec(index, c)).collect();
    let Some(rules) = index.get(t.head()) else {
        return BTreeSet::new();
    };
    rules
        .iter()
        .filter(|r| r.children.len() == child_sets.len())
        .filter(|r| r.children.iter().zip(&child_sets).all(|(q, s)| s.contains(q)))
        .map(|r| r.state.clone())
        .collect()
}

fn runs_from(
    a: &TreeAutomaton,
    by_state: &HashMap<&Symbol, Vec<&AutomatonRule>>,
    q: &Symbol,
    t: &Term,
) -> Vec<Frontier> {
    match t {
        Term::Var(x) if !a.vars.contains(x) => vec![vec![(x.clone(), q.clone())]],
        _ => {
            let mut out = Vec::new();
            let Some(rules) = by_state.get(q) else {
                return out;
            };
            for r in rules {
                if &r.symbol != t.head() || r.children.len() != t.children().len() {
                    continue;
                }
                let mut partial: Vec<Frontier> = vec![Vec::new()];
                for (qc, c) in r.children.iter().zip(t.children()) {
                    let sub = runs_from(a, by_state, qc, c);
                    let mut next = Vec::new();
                    for p in &partial {
                        for s in &sub {
                            let mut joined = p.clone();
                            joined.extend(s.iter().cloned());
                            next.push(joined);
                        }
                    }
                    partial = next;
                    if partial.is_empty() {
                        break;
                    }
                }
                out.extend(partial);
            }
            out.sort();
            out.dedup();
            out
        }
    }
}

fn fill(
    table: &BTreeMap<Symbol, Vec<Vec<Term>>>,
    states: &[Symbol],
    budget: usize,
    prefix: &mut Vec<Term>,
    out: &mut Vec<Vec<Term>>,
) {
    let Some((q, rest)) = states.split_first() else {
        if budget == 0 {
            out.push(prefix.clone());
        }
        return;
    };
    let Some(levels) = table.get(q) else { return };
    for size in 1..=budget.saturating_sub(rest.len()) {
        for t in &levels[size] {
            prefix.push(t.clone());
            fill(table, rest, budget - size, prefix, out);
            prefix.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::parse_term;

    fn hfaa() -> TreeAutomaton {
        let mut a = TreeAutomaton::new(RankedAlphabet::parse("f/2 g/1 h/1 a/0").unwrap());
        a.add_initial("q0");
        a.add_rule("q0", "h", &["q0"]).unwrap();
        a.add_rule("q0", "f", &["qa", "qa"]).unwrap();
        a.add_rule("qa", "a", &[]).unwrap();
        a
    }

    fn t(s: &str) -> Term {
        parse_term(s, &RankedAlphabet::parse("f/2 g/1 h/1 a/0").unwrap(), &["x", "y"]).unwrap()
    }

    #[test]
    fn membership() {
        let a = hfaa();
        assert!(a.accepts(&t("h(h(f(a,a)))")).unwrap());
        assert!(!a.accepts(&t("f(g(a),a)")).unwrap());
        assert!(a.accepts(&t("f(x,a)")).is_err());
        let mut none = hfaa();
        none.initial.clear();
        assert!(!none.accepts(&t("f(a,a)")).unwrap());
    }

    #[test]
    fn enumeration_matches_filtered_brute_force() {
        let a = hfaa();
        // sizes 3, 4, 5, 6, 7
        let got = a.enumerate_language(7);
        let want: BTreeSet<Term> = ["f(a,a)", "h(f(a,a))", "h(h(f(a,a)))", "h(h(h(f(a,a))))", "h(h(h(h(f(a,a)))))"]
            .into_iter()
            .map(t)
            .collect();
        assert_eq!(got, want);
        assert_eq!(a.enumerate_language(6).len(), 4);
        let brute: BTreeSet<Term> = a
            .alphabet
            .ground_terms(9)
            .into_iter()
            .filter(|s| a.accepts(s).unwrap())
            .collect();
        assert_eq!(a.enumerate_language(9), brute);
    }

    #[test]
    fn emptiness() {
        assert!(!hfaa().is_empty());
        let mut a = TreeAutomaton::new(RankedAlphabet::parse("g/1 a/0").unwrap());
        a.add_initial("q0");
        a.add_rule("q0", "g", &["q0"]).unwrap();
        assert!(a.is_empty());
        assert!(a.enumerate_language(6).is_empty());
        a.rules.clear();
        assert!(a.is_empty());
    }

    #[test]
    fn single_leaf() {
        let mut a = TreeAutomaton::new(RankedAlphabet::parse("a/0").unwrap());
        a.add_initial("q0");
        a.add_rule("q0", "a", &[]).unwrap();
        assert_eq!(a.enumerate_language(1).into_iter().collect::<Vec<_>>(), vec![Term::constant("a")]);
    }

    #[test]
    fn partial_runs() {
        let a = hfaa();
        let runs = a.run_forest(&[sym("q0")], &[t("h(f(x,y))")]);
        assert_eq!(runs, vec![vec![(sym("x"), sym("qa")), (sym("y"), sym("qa"))]]);
        assert!(a.run_forest(&[sym("qa")], &[t("h(x)")]).is_empty());
        let runs = a.run_forest(&[sym("q0"), sym("qa")], &[t("x"), t("a")]);
        assert_eq!(runs, vec![vec![(sym("x"), sym("q0"))]]);
    }

    #[test]
    fn finite_language_and_trim() {
        let alphabet = RankedAlphabet::parse("f/2 g/1 h/1 a/0").unwrap();
        let words = vec![t("f(a,a)"), t("f(g(a),g(a))"), t("f(g(g(a)),g(g(a)))")];
        let a = TreeAutomaton::from_finite_language(&alphabet, &words).unwrap();
        let got: Vec<Term> = a.enumerate_language(12).into_iter().collect();
        let mut want = words.clone();
        want.sort();
        assert_eq!(got, want);
        assert_eq!(a.trim().enumerate_language(12), a.enumerate_language(12));
        assert_eq!(TreeAutomaton::universal(&alphabet).enumerate_language(5).len(), 1 + 2 + 5 + 14 + 42);
    }

    #[test]
    fn open_term_languages() {
        let mut a = TreeAutomaton::new(RankedAlphabet::parse("f/2 g/1").unwrap());
        a.add_var("x");
        a.add_var("y");
        a.add_initial("p");
        a.add_rule("p", "g", &["p"]).unwrap();
        a.add_rule("p", "f", &["px", "py"]).unwrap();
        a.add_rule("px", "x", &[]).unwrap();
        a.add_rule("py", "y", &[]).unwrap();
        assert!(a.accepts(&t("g(f(x,y))")).unwrap());
        assert!(!a.accepts(&t("f(y,x)")).unwrap());
    }
}
