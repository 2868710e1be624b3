//! Rewrite rules, systems, and the bounded reachability oracles.
//!
//! The oracles are deliberately naive breadth-first searches; every
//! grammar and automaton construction is checked against them.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use crate::automata::TreeAutomaton;
use crate::error::{Error, Result};
use crate::terms::{match_term, Position, RankedAlphabet, Substitution, Symbol, Term};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RewriteRule {
    pub lhs: Term,
    pub rhs: Term,
}

impl RewriteRule {
    /// Checks `Var(rhs) ⊆ Var(lhs)`.
    pub fn new(lhs: Term, rhs: Term) -> Result<Self> {
        let extra: Vec<String> = rhs.vars().difference(&lhs.vars()).map(|v| v.to_string()).collect();
        if !extra.is_empty() {
            return Err(Error::Invalid(format!(
                "rule {lhs} -> {rhs}: right-hand side variables {extra:?} do not occur on the left"
            )));
        }
        Ok(RewriteRule { lhs, rhs })
    }

    /// No variable check; used for inverses of erasing rules.
    pub fn new_unchecked(lhs: Term, rhs: Term) -> Self {
        RewriteRule { lhs, rhs }
    }

    pub fn is_linear(&self) -> bool {
        self.lhs.is_linear() && self.rhs.is_linear()
    }

    pub fn inverse(&self) -> RewriteRule {
        RewriteRule {
            lhs: self.rhs.clone(),
            rhs: self.lhs.clone(),
        }
    }
}

impl fmt::Display for RewriteRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.lhs, self.rhs)
    }
}

/// A recognizable rule `L(lhs) × L(rhs)`; both automata read the shared variables as leaves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AutomatonPair {
    pub lhs: TreeAutomaton,
    pub rhs: TreeAutomaton,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Trs {
    pub alphabet: RankedAlphabet,
    pub vars: BTreeSet<Symbol>,
    pub rules: Vec<RewriteRule>,
    pub automaton_rules: Vec<AutomatonPair>,
}

impl Trs {
    pub fn new(alphabet: RankedAlphabet) -> Self {
        Trs {
            alphabet,
            ..Default::default()
        }
    }

    pub fn add_rule(&mut self, rule: RewriteRule) -> Result<()> {
        rule.lhs.check_alphabet(&self.alphabet)?;
        rule.rhs.check_alphabet(&self.alphabet)?;
        self.vars.extend(rule.lhs.vars());
        self.vars.extend(rule.rhs.vars());
        if !self.rules.contains(&rule) {
            self.rules.push(rule);
        }
        Ok(())
    }

    /// Builds a finite system from `(lhs, rhs)` strings with the given variable names.
    pub fn from_strs(alphabet: &str, vars: &[&str], rules: &[(&str, &str)]) -> Result<Self> {
        let alphabet = RankedAlphabet::parse(alphabet)?;
        let mut trs = Trs::new(alphabet);
        for (l, r) in rules {
            let lhs = crate::terms::parse_term(l, &trs.alphabet, vars)?;
            let rhs = crate::terms::parse_term(r, &trs.alphabet, vars)?;
            trs.add_rule(RewriteRule::new(lhs, rhs)?)?;
        }
        trs.vars.extend(vars.iter().map(|v| crate::terms::sym(v)));
        Ok(trs)
    }

    pub fn is_linear(&self) -> bool {
        self.rules.iter().all(RewriteRule::is_linear)
    }

    pub fn check_linear(&self) -> Result<()> {
        for r in &self.rules {
            r.lhs.check_linear()?;
            r.rhs.check_linear()?;
        }
        Ok(())
    }

    pub fn is_ground(&self) -> bool {
        self.automaton_rules.is_empty() && self.rules.iter().all(|r| r.lhs.is_ground() && r.rhs.is_ground())
    }

    /// `R⁻¹`. Inverses of erasing rules are kept as they are.
    pub fn inverse(&self) -> Trs {
        Trs {
            alphabet: self.alphabet.clone(),
            vars: self.vars.clone(),
            rules: self.rules.iter().map(RewriteRule::inverse).collect(),
            automaton_rules: self
                .automaton_rules
                .iter()
                .map(|p| AutomatonPair {
                    lhs: p.rhs.clone(),
                    rhs: p.lhs.clone(),
                })
                .collect(),
        }
    }

    fn require_finite(&self, who: &'static str) -> Result<()> {
        if self.automaton_rules.is_empty() {
            Ok(())
        } else {
            Err(Error::RecognizableUnsupported(who))
        }
    }
}

impl fmt::Display for Trs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RewriteStep {
    pub rule: usize,
    pub position: Position,
    pub sigma: Substitution,
}

/// Applies one recorded step.
pub fn replay_step(trs: &Trs, t: &Term, step: &RewriteStep) -> Result<Term> {
    let rule = trs
        .rules
        .get(step.rule)
        .ok_or_else(|| Error::Invalid(format!("no rule {}", step.rule)))?;
    let redex = t
        .subterm_at(&step.position)
        .ok_or_else(|| Error::InvalidPosition(step.position.to_string()))?;
    if rule.lhs.substitute(&step.sigma) != *redex {
        return Err(Error::Invalid(format!(
            "rule {} does not apply at {} of {t}",
            step.rule, step.position
        )));
    }
    t.replace_at(&step.position, rule.rhs.substitute(&step.sigma))
}

/// Replays a whole step sequence.
pub fn replay(trs: &Trs, t: &Term, steps: &[RewriteStep]) -> Result<Term> {
    steps.iter().try_fold(t.clone(), |cur, s| replay_step(trs, &cur, s))
}

/// Every one-step successor of `t`.
pub fn rewrite_step(trs: &Trs, t: &Term) -> Result<Vec<(Term, RewriteStep)>> {
    trs.require_finite("the rewriting oracle")?;
    Ok(steps_filtered(trs, t, |_, _, _| true))
}

fn steps_filtered(
    trs: &Trs,
    t: &Term,
    allow: impl Fn(&RewriteRule, &Position, &Substitution) -> bool,
) -> Vec<(Term, RewriteStep)> {
    let mut out = Vec::new();
    for p in t.positions() {
        let sub = t.subterm_at(&p).expect("own position");
        for (i, rule) in trs.rules.iter().enumerate() {
            let Some(sigma) = match_term(&rule.lhs, sub) else { continue };
            if !allow(rule, &p, &sigma) {
                continue;
            }
            let next = t
                .replace_at(&p, rule.rhs.substitute(&sigma))
                .expect("own position");
            out.push((
                next,
                RewriteStep {
                    rule: i,
                    position: p.clone(),
                    sigma,
                },
            ));
        }
    }
    out
}

/// Search bounds: breadth-first layers and maximal term size of any intermediate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bounds {
    pub max_steps: usize,
    pub max_size: usize,
}

impl Bounds {
    pub fn new(max_steps: usize, max_size: usize) -> Self {
        Bounds { max_steps, max_size }
    }
}

/// Terms reachable from `t` within the bounds, each with one witnessing step sequence.
pub fn reachable_traced(trs: &Trs, t: &Term, bounds: Bounds) -> Result<BTreeMap<Term, Vec<RewriteStep>>> {
    trs.require_finite("the rewriting oracle")?;
    let mut seen: BTreeMap<Term, Vec<RewriteStep>> = BTreeMap::new();
    seen.insert(t.clone(), Vec::new());
    let mut frontier = vec![t.clone()];
    for _ in 0..bounds.max_steps {
        let mut next = Vec::new();
        for s in &frontier {
            let path = seen[s].clone();
            for (u, step) in steps_filtered(trs, s, |_, _, _| true) {
                if u.size() > bounds.max_size || seen.contains_key(&u) {
                    continue;
                }
                let mut p = path.clone();
                p.push(step);
                seen.insert(u.clone(), p);
                next.push(u);
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(seen)
}

/// Bounded `→*` closure of `t`. Sound; complete only within the bounds.
pub fn reachable(trs: &Trs, t: &Term, bounds: Bounds) -> Result<BTreeSet<Term>> {
    trs.require_finite("the rewriting oracle")?;
    let mut seen: BTreeSet<Term> = BTreeSet::new();
    seen.insert(t.clone());
    let mut frontier = vec![t.clone()];
    for _ in 0..bounds.max_steps {
        let mut next = Vec::new();
        for s in &frontier {
            for (u, _) in steps_filtered(trs, s, |_, _, _| true) {
                if u.size() <= bounds.max_size && seen.insert(u.clone()) {
                    next.push(u);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(seen)
}

/// Memoizing successor cache for running many bounded searches over one system.
pub struct Reach<'a> {
    trs: &'a Trs,
    max_size: usize,
    succ: HashMap<Term, Vec<Term>>,
}

impl<'a> Reach<'a> {
    pub fn new(trs: &'a Trs, max_size: usize) -> Result<Self> {
        trs.require_finite("the rewriting oracle")?;
        Ok(Reach {
            trs,
            max_size,
            succ: HashMap::new(),
        })
    }

    fn successors(&mut self, t: &Term) -> &[Term] {
        if !self.succ.contains_key(t) {
            let mut v: Vec<Term> = steps_filtered(self.trs, t, |_, _, _| true)
                .into_iter()
                .map(|(u, _)| u)
                .filter(|u| u.size() <= self.max_size)
                .collect();
            v.sort();
            v.dedup();
            self.succ.insert(t.clone(), v);
        }
        &self.succ[t]
    }

    /// Same result as [`reachable`] with `Bounds::new(max_steps, self.max_size)`.
    pub fn closure(&mut self, t: &Term, max_steps: usize) -> BTreeSet<Term> {
        let mut seen: BTreeSet<Term> = BTreeSet::new();
        seen.insert(t.clone());
        let mut frontier = vec![t.clone()];
        for _ in 0..max_steps {
            let mut next = Vec::new();
            for s in &frontier {
                for u in self.successors(s).to_vec() {
                    if seen.insert(u.clone()) {
                        next.push(u);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        seen
    }
}

/// Search node of the top-down oracle: the term plus the history it constrains.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct TopDownNode {
    term: Term,
    used: BTreeSet<Position>,
    last: Option<Position>,
}

/// Whether a step at `p` may follow steps at `used`, the latest at `last`.
pub fn topdown_admissible<'p>(
    used: impl IntoIterator<Item = &'p Position>,
    last: Option<&Position>,
    p: &Position,
    lhs_is_var: bool,
) -> bool {
    if used.into_iter().any(|q| q.strictly_extends(p)) {
        return false;
    }
    !(last == Some(p) && lhs_is_var)
}

/// Bounded closure under top-down rewriting: positions never decrease
/// along a sequence, and a step repeating the previous position must not
/// use a rule with a variable left-hand side.
pub fn topdown_reachable(trs: &Trs, t: &Term, bounds: Bounds) -> Result<BTreeSet<Term>> {
    trs.require_finite("the top-down oracle")?;
    let start = TopDownNode {
        term: t.clone(),
        used: BTreeSet::new(),
        last: None,
    };
    let mut seen: BTreeSet<TopDownNode> = BTreeSet::new();
    seen.insert(start.clone());
    let mut frontier = vec![start];
    for _ in 0..bounds.max_steps {
        let mut next = Vec::new();
        for node in &frontier {
            let allowed = |rule: &RewriteRule, p: &Position, _: &Substitution| {
                topdown_admissible(node.used.iter(), node.last.as_ref(), p, rule.lhs.is_var())
            };
            for (u, step) in steps_filtered(trs, &node.term, allowed) {
                if u.size() > bounds.max_size {
                    continue;
                }
                let mut used = node.used.clone();
                used.insert(step.position.clone());
                let child = TopDownNode {
                    term: u,
                    used,
                    last: Some(step.position),
                };
                if seen.insert(child.clone()) {
                    next.push(child);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(seen.into_iter().map(|n| n.term).collect())
}

/// Bounded closure under suffix rewriting: the redex must be an instance
/// of a left-hand side under a bijective variable renaming.
pub fn suffix_reachable(trs: &Trs, t: &Term, bounds: Bounds) -> Result<BTreeSet<Term>> {
    trs.require_finite("the suffix oracle")?;
    let mut seen: BTreeSet<Term> = BTreeSet::new();
    seen.insert(t.clone());
    let mut frontier: VecDeque<(Term, usize)> = VecDeque::from([(t.clone(), 0)]);
    while let Some((s, depth)) = frontier.pop_front() {
        if depth == bounds.max_steps {
            continue;
        }
        for (u, _) in suffix_steps(trs, &s) {
            if u.size() <= bounds.max_size && seen.insert(u.clone()) {
                frontier.push_back((u, depth + 1));
            }
        }
    }
    Ok(seen)
}

/// One-step suffix successors.
pub fn suffix_steps(trs: &Trs, t: &Term) -> Vec<(Term, RewriteStep)> {
    steps_filtered(trs, t, |rule, _, sigma| {
        sigma.is_bijective_renaming() && rule.lhs.vars().iter().all(|v| sigma.get(v).is_some())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::parse_term;

    const F: &str = "f/2 g/1 h/1 a/0";

    fn fg_system() -> Trs {
        Trs::from_strs(F, &["x", "y"], &[("f(g(x),g(y))", "h(f(x,y))")]).unwrap()
    }

    fn swap_pump_system() -> Trs {
        Trs::from_strs("f/2 g/1 a/0", &["x", "y"], &[("f(x,y)", "f(y,x)"), ("a", "g(a)")]).unwrap()
    }

    fn t(s: &str) -> Term {
        parse_term(s, &RankedAlphabet::parse(F).unwrap(), &["x", "y", "z"]).unwrap()
    }

    fn set(items: &[&str]) -> BTreeSet<Term> {
        items.iter().map(|s| t(s)).collect()
    }

    #[test]
    fn single_root_redex() {
        let out: Vec<Term> = rewrite_step(&fg_system(), &t("f(g(a),g(a))")).unwrap().into_iter().map(|p| p.0).collect();
        assert_eq!(out, vec![t("h(f(a,a))")]);
        assert!(rewrite_step(&fg_system(), &t("a")).unwrap().is_empty());
    }

    #[test]
    fn swap_and_pump_successors() {
        let got: BTreeSet<Term> = rewrite_step(&swap_pump_system(), &t("f(a,g(a))")).unwrap().into_iter().map(|p| p.0).collect();
        assert_eq!(got, set(&["f(g(a),a)", "f(g(a),g(a))", "f(a,g(g(a)))"]));
    }

    #[test]
    fn bounded_closure() {
        let got = reachable(&fg_system(), &t("f(g(g(a)),g(g(a)))"), Bounds::new(5, 20)).unwrap();
        assert_eq!(got, set(&["f(g(g(a)),g(g(a)))", "h(f(g(a),g(a)))", "h(h(f(a,a)))"]));
        assert_eq!(reachable(&fg_system(), &t("f(a,a)"), Bounds::new(0, 20)).unwrap(), set(&["f(a,a)"]));
        let chain = Trs::from_strs(F, &[], &[("a", "g(a)")]).unwrap();
        assert_eq!(
            reachable(&chain, &t("a"), Bounds::new(3, 10)).unwrap(),
            set(&["a", "g(a)", "g(g(a))", "g(g(g(a)))"])
        );
    }

    #[test]
    fn traces_replay() {
        let trs = swap_pump_system();
        for (u, path) in reachable_traced(&trs, &t("f(a,a)"), Bounds::new(4, 8)).unwrap() {
            assert_eq!(replay(&trs, &t("f(a,a)"), &path).unwrap(), u);
        }
    }

    #[test]
    fn memoized_closure_agrees() {
        let trs = swap_pump_system();
        let mut reach = Reach::new(&trs, 9).unwrap();
        for s in ["f(a,a)", "g(a)", "f(g(a),a)"] {
            assert_eq!(reach.closure(&t(s), 6), reachable(&trs, &t(s), Bounds::new(6, 9)).unwrap());
        }
    }

    #[test]
    fn topdown_matches_unrestricted_on_fg() {
        let s = t("f(g(g(a)),g(g(a)))");
        let b = Bounds::new(5, 20);
        assert_eq!(topdown_reachable(&fg_system(), &s, b).unwrap(), reachable(&fg_system(), &s, b).unwrap());
        assert_eq!(topdown_reachable(&fg_system(), &s, Bounds::new(0, 20)).unwrap(), set(&["f(g(g(a)),g(g(a)))"]));
    }

    #[test]
    fn topdown_admissibility() {
        let eps = Position::root();
        let one = Position(vec![1]);
        // the second step produces its right-hand side "higher" than the first
        assert!(!topdown_admissible(std::slice::from_ref(&eps), Some(&eps), &eps, true));
        assert!(topdown_admissible(std::slice::from_ref(&eps), Some(&eps), &eps, false));
        assert!(topdown_admissible(std::slice::from_ref(&eps), Some(&eps), &one, true));
        assert!(!topdown_admissible(std::slice::from_ref(&one), Some(&one), &eps, false));
    }

    #[test]
    fn topdown_forbids_decreasing_positions() {
        // not a top-down system: the rule at the root needs the inner step first
        let trs = Trs::from_strs(F, &["x"], &[("a", "g(a)"), ("h(g(x))", "a")]).unwrap();
        let b = Bounds::new(3, 10);
        assert!(reachable(&trs, &t("h(a)"), b).unwrap().contains(&t("a")));
        assert!(!topdown_reachable(&trs, &t("h(a)"), b).unwrap().contains(&t("a")));
    }

    #[test]
    fn suffix_oracle_requires_renamings() {
        let swap = Trs::from_strs(F, &["x", "y"], &[("f(x,y)", "f(y,x)")]).unwrap();
        let vars = ["x", "y"];
        let alpha = RankedAlphabet::parse(F).unwrap();
        let p = |s: &str| parse_term(s, &alpha, &vars).unwrap();
        let b = Bounds::new(4, 10);
        assert_eq!(
            suffix_reachable(&swap, &p("f(x,y)"), b).unwrap(),
            [p("f(x,y)"), p("f(y,x)")].into_iter().collect()
        );
        assert_eq!(suffix_reachable(&swap, &p("f(a,y)"), b).unwrap(), [p("f(a,y)")].into_iter().collect());
        let pump = Trs::from_strs(F, &[], &[("a", "g(a)")]).unwrap();
        assert_eq!(
            suffix_reachable(&pump, &t("h(a)"), Bounds::new(2, 10)).unwrap(),
            set(&["h(a)", "h(g(a))", "h(g(g(a)))"])
        );
    }

    #[test]
    fn recognizable_rules_are_rejected() {
        let mut trs = fg_system();
        let a = TreeAutomaton::new(trs.alphabet.clone());
        trs.automaton_rules.push(AutomatonPair { lhs: a.clone(), rhs: a });
        assert!(matches!(rewrite_step(&trs, &t("a")), Err(Error::RecognizableUnsupported(_))));
        assert!(reachable(&trs, &t("a"), Bounds::new(1, 3)).is_err());
        assert!(suffix_reachable(&trs, &t("a"), Bounds::new(1, 3)).is_err());
    }

    proptest::proptest! {
        #[test]
        fn suffix_is_included_in_unrestricted(seed in 0u64..300) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let trs = swap_pump_system();
            let alpha = RankedAlphabet::parse("f/2 g/1 a/0").unwrap();
            let pool = alpha.ground_terms(5);
            let s = &pool[rng.gen_range(0..pool.len())];
            let b = Bounds::new(3, 8);
            let suf = suffix_reachable(&trs, s, b).unwrap();
            let all = reachable(&trs, s, b).unwrap();
            proptest::prop_assert!(suf.is_subset(&all));
        }
    }
}
