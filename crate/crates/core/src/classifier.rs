//! Overlap classes of finite systems, and the Turing-machine encoding.
//!
//! An overlap between a right-hand side `r` and a left-hand side `l` is a
//! non-variable position of one where the other unifies, after renaming
//! the two rules apart.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::rewriting::{RewriteRule, Trs};
use crate::terms::{match_term, rename_apart, sym, unify, Position, RankedAlphabet, Substitution, Symbol, Term};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OverlapKind {
    Root,
    /// `l` unifies with `r|p`, `p ≠ ε`.
    LhsInsideRhs(Position),
    /// `r` unifies with `l|p`, `p ≠ ε`.
    RhsInsideLhs(Position),
}

impl OverlapKind {
    pub fn position(&self) -> Position {
        match self {
            OverlapKind::Root => Position::root(),
            OverlapKind::LhsInsideRhs(p) | OverlapKind::RhsInsideLhs(p) => p.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Overlap {
    /// Rule whose right-hand side takes part.
    pub rhs_rule: usize,
    /// Rule whose left-hand side takes part.
    pub lhs_rule: usize,
    pub kind: OverlapKind,
    pub unifier: Substitution,
    /// The two terms after renaming apart.
    pub rhs: Term,
    pub lhs: Term,
}

impl fmt::Display for Overlap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            OverlapKind::Root => "at the root".to_string(),
            OverlapKind::LhsInsideRhs(p) => format!("lhs inside rhs at {p}"),
            OverlapKind::RhsInsideLhs(p) => format!("rhs inside lhs at {p}"),
        };
        write!(
            f,
            "rhs {} (rule {}) / lhs {} (rule {}) {kind}, unifier {}",
            self.rhs,
            self.rhs_rule + 1,
            self.lhs,
            self.lhs_rule + 1,
            self.unifier
        )
    }
}

/// All overlaps between `r` and `l`, which must not share variables.
pub fn critical_overlaps(r: &Term, l: &Term) -> Vec<(OverlapKind, Substitution)> {
    let mut out = Vec::new();
    for p in r.function_positions() {
        if let Some(sigma) = unify(r.subterm_at(&p).unwrap(), l) {
            let kind = if p.is_root() {
                OverlapKind::Root
            } else {
                OverlapKind::LhsInsideRhs(p)
            };
            out.push((kind, sigma));
        }
    }
    for p in l.function_positions() {
        if p.is_root() {
            continue;
        }
        if let Some(sigma) = unify(l.subterm_at(&p).unwrap(), r) {
            out.push((OverlapKind::RhsInsideLhs(p), sigma));
        }
    }
    out
}

/// Overlaps between every right-hand side and every left-hand side of `rules`.
pub fn system_overlaps(rules: &[RewriteRule]) -> Vec<Overlap> {
    let mut out = Vec::new();
    for (i, ri) in rules.iter().enumerate() {
        for (j, rj) in rules.iter().enumerate() {
            let r = ri.rhs.clone();
            let l = rename_apart(&rj.lhs, &r.vars(), "'");
            for (kind, unifier) in critical_overlaps(&r, &l) {
                out.push(Overlap {
                    rhs_rule: i,
                    lhs_rule: j,
                    kind,
                    unifier,
                    rhs: r.clone(),
                    lhs: l.clone(),
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Class {
    TopDown,
    BottomUp,
    Prefix,
    Suffix,
}

impl Class {
    pub const ALL: [Class; 4] = [Class::TopDown, Class::BottomUp, Class::Prefix, Class::Suffix];
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Class::TopDown => "TopDown",
            Class::BottomUp => "BottomUp",
            Class::Prefix => "Prefix",
            Class::Suffix => "Suffix",
        };
        f.write_str(s)
    }
}

/// A violating overlap. For `BottomUp` the overlap refers to the inverse system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub overlap: Overlap,
    pub reason: String,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.reason, self.overlap)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClassReport {
    pub classes: BTreeSet<Class>,
    pub witnesses: BTreeMap<Class, Witness>,
}

impl ClassReport {
    pub fn is(&self, class: Class) -> bool {
        self.classes.contains(&class)
    }
}

impl fmt::Display for ClassReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in Class::ALL {
            match self.witnesses.get(&c) {
                None => writeln!(f, "{c}: yes")?,
                Some(w) => writeln!(f, "{c}: no ({w})")?,
            }
        }
        Ok(())
    }
}

/// Why `o` breaks the top-down condition, if it does.
pub fn topdown_violation(o: &Overlap) -> Option<String> {
    match &o.kind {
        OverlapKind::RhsInsideLhs(_) => Some("a right-hand side overlaps strictly inside a left-hand side".into()),
        kind => {
            let host = o.rhs.subterm_at(&kind.position()).unwrap();
            if match_term(host, &o.lhs).is_some() {
                None
            } else if kind == &OverlapKind::Root && match_term(&o.lhs, host).is_some() {
                Some("root overlap where the left-hand side is strictly more general than the right-hand side".into())
            } else {
                Some("the left-hand side is not an instance of the overlapped right-hand side subterm".into())
            }
        }
    }
}

pub fn prefix_violation(o: &Overlap) -> Option<String> {
    match &o.kind {
        OverlapKind::Root => {
            if match_term(&o.rhs, &o.lhs).is_some() || match_term(&o.lhs, &o.rhs).is_some() {
                None
            } else {
                Some("root overlap where neither side is an instance of the other".into())
            }
        }
        _ => Some("overlap below the root".into()),
    }
}

pub fn suffix_violation(o: &Overlap) -> Option<String> {
    let p = o.kind.position();
    let (embedded, host) = match &o.kind {
        OverlapKind::RhsInsideLhs(_) => (&o.rhs, o.lhs.subterm_at(&p).unwrap()),
        _ => (&o.lhs, o.rhs.subterm_at(&p).unwrap()),
    };
    if embedded.equal_up_to_renaming(host) {
        None
    } else {
        Some("the embedded side is not a renaming of the overlapped subterm".into())
    }
}

/// Checks the four classes independently.
pub fn classify(trs: &Trs) -> Result<ClassReport> {
    if !trs.automaton_rules.is_empty() {
        return Err(Error::RecognizableUnsupported("classification"));
    }
    let forward = system_overlaps(&trs.rules);
    let inverse = system_overlaps(&trs.inverse().rules);
    let mut report = ClassReport::default();
    let checks: [(Class, &Vec<Overlap>, fn(&Overlap) -> Option<String>); 4] = [
        (Class::TopDown, &forward, topdown_violation),
        (Class::BottomUp, &inverse, topdown_violation),
        (Class::Prefix, &forward, prefix_violation),
        (Class::Suffix, &forward, suffix_violation),
    ];
    for (class, overlaps, test) in checks {
        let found = overlaps.iter().find_map(|o| {
            test(o).map(|reason| Witness {
                overlap: o.clone(),
                reason,
            })
        });
        match found {
            None => {
                report.classes.insert(class);
            }
            Some(w) => {
                report.witnesses.insert(class, w);
            }
        }
    }
    Ok(report)
}

/// Refuses systems outside `class`.
pub fn require_class(trs: &Trs, class: Class) -> Result<()> {
    let report = classify(trs)?;
    match report.witnesses.get(&class) {
        None => Ok(()),
        Some(w) => Err(Error::ClassVeto {
            class: class.to_string(),
            witness: w.to_string(),
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Move {
    Right,
    Left,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Transition {
    pub from: Symbol,
    /// `None` reads the blank.
    pub read: Option<Symbol>,
    pub to: Symbol,
    pub write: Symbol,
    pub dir: Move,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TuringMachine {
    pub states: Vec<Symbol>,
    pub tape: Vec<Symbol>,
    pub transitions: Vec<Transition>,
}

/// Blank at the end of the tape.
pub const BLANK_END: &str = "#0";
/// Blank cell followed by more tape.
pub const BLANK_CELL: &str = "#1";

impl TuringMachine {
    pub fn alphabet(&self) -> Result<RankedAlphabet> {
        let mut a = RankedAlphabet::default();
        for q in &self.states {
            a.add(q, 2)?;
        }
        for c in &self.tape {
            a.add(c, 1)?;
        }
        a.add(BLANK_END, 0)?;
        a.add(BLANK_CELL, 1)?;
        Ok(a)
    }
}

/// The prefix system simulating `m`: a configuration is
/// `state(reversed left tape, right tape)`, both tapes ending in `#0`.
pub fn encode_turing_machine(m: &TuringMachine) -> Result<Trs> {
    let alphabet = m.alphabet()?;
    let known = |s: &Symbol, set: &[Symbol], what: &str| -> Result<()> {
        if set.contains(s) {
            Ok(())
        } else {
            Err(Error::Invalid(format!("transition uses undeclared {what} `{s}`")))
        }
    };
    let mut trs = Trs::new(alphabet);
    let x = || Term::var("x");
    let y = || Term::var("y");
    let end = || Term::constant(BLANK_END);
    let app1 = |f: &Symbol, t: Term| Term::App(f.clone(), vec![t]);
    let app2 = |f: &Symbol, a: Term, b: Term| Term::App(f.clone(), vec![a, b]);
    for tr in &m.transitions {
        known(&tr.from, &m.states, "state")?;
        known(&tr.to, &m.states, "state")?;
        known(&tr.write, &m.tape, "tape symbol")?;
        if let Some(a) = &tr.read {
            known(a, &m.tape, "tape symbol")?;
        }
        let (p, q, b) = (&tr.from, &tr.to, &tr.write);
        let read = tr.read.clone().unwrap_or_else(|| sym(BLANK_CELL));
        let blank = tr.read.is_none();
        let mut push = |l: Term, r: Term| trs.add_rule(RewriteRule::new(l, r)?);
        match tr.dir {
            Move::Right => {
                push(app2(p, x(), app1(&read, y())), app2(q, app1(b, x()), y()))?;
                if blank {
                    push(app2(p, x(), end()), app2(q, app1(b, x()), end()))?;
                }
            }
            Move::Left => {
                for c in &m.tape {
                    push(
                        app2(p, app1(c, x()), app1(&read, y())),
                        app2(q, x(), app1(c, app1(b, y()))),
                    )?;
                }
                push(
                    app2(p, end(), app1(&read, y())),
                    app2(q, end(), app1(&sym(BLANK_CELL), app1(b, y()))),
                )?;
                if blank {
                    push(
                        app2(p, end(), end()),
                        app2(q, end(), app1(&sym(BLANK_CELL), app1(b, end()))),
                    )?;
                    for c in &m.tape {
                        push(app2(p, app1(c, x()), end()), app2(q, x(), app1(c, app1(b, end()))))?;
                    }
                }
            }
        }
    }
    Ok(trs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::parse_term;

    const F: &str = "f/2 g/1 h/1 a/0 b/0";

    fn sys(rules: &[(&str, &str)]) -> Trs {
        Trs::from_strs(F, &["x", "y", "x'", "y'", "x''"], rules).unwrap()
    }

    fn t(s: &str) -> Term {
        parse_term(s, &RankedAlphabet::parse(F).unwrap(), &["x", "y", "x'", "y'", "x''"]).unwrap()
    }

    fn classes(trs: &Trs) -> BTreeSet<Class> {
        classify(trs).unwrap().classes
    }

    #[test]
    fn overlap_examples() {
        let got = critical_overlaps(&t("h(f(x,y))"), &t("f(g(x'),g(y'))"));
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].0, OverlapKind::LhsInsideRhs(Position(vec![1])));
        assert_eq!(got[0].1.get("x"), Some(&t("g(x')")));
        assert_eq!(got[0].1.get("y"), Some(&t("g(y')")));
        assert!(critical_overlaps(&t("a"), &t("b")).is_empty());
        let got = critical_overlaps(&t("f(g(x),a)"), &t("g(x')"));
        assert_eq!(got.iter().map(|o| o.0.clone()).collect::<Vec<_>>(), vec![OverlapKind::LhsInsideRhs(Position(vec![1]))]);
        let got = critical_overlaps(&t("g(x)"), &t("f(g(x''),a)"));
        assert_eq!(got.iter().map(|o| o.0.clone()).collect::<Vec<_>>(), vec![OverlapKind::RhsInsideLhs(Position(vec![1]))]);
    }

    #[test]
    fn classification_table() {
        let fg_system = sys(&[("f(g(x),g(y))", "h(f(x,y))")]);
        assert_eq!(classes(&fg_system), BTreeSet::from([Class::TopDown]));
        assert_eq!(classes(&fg_system.inverse()), BTreeSet::from([Class::BottomUp]));
        let swap_pump_system = sys(&[("f(x,y)", "f(y,x)"), ("a", "g(a)")]);
        assert!(classes(&swap_pump_system).contains(&Class::Suffix));
        assert_eq!(classes(&Trs::new(RankedAlphabet::parse(F).unwrap())).len(), 4);
        let chain = sys(&[("a", "g(a)")]);
        assert!(classes(&chain).is_superset(&BTreeSet::from([Class::TopDown, Class::Suffix])));
    }

    #[test]
    fn gfgf_is_not_topdown() {
        let alpha = "g/1 f/1 a/0";
        let trs = Trs::from_strs(alpha, &["x"], &[("g(x)", "f(g(f(x)))")]).unwrap();
        let report = classify(&trs).unwrap();
        assert!(!report.is(Class::TopDown));
        let w = &report.witnesses[&Class::TopDown];
        assert_eq!(w.overlap.kind, OverlapKind::LhsInsideRhs(Position(vec![1])));
        assert!(topdown_violation(&w.overlap).is_some());
    }

    #[test]
    fn root_overlap_with_more_general_lhs_is_flagged() {
        let trs = sys(&[("g(x)", "h(a)"), ("h(x)", "b")]);
        let w = &classify(&trs).unwrap().witnesses[&Class::TopDown];
        assert!(w.reason.contains("strictly more general"), "{w}");
    }

    #[test]
    fn witnesses_replay() {
        let trs = sys(&[("f(g(x),g(y))", "h(f(x,y))"), ("h(x)", "g(x)")]);
        let report = classify(&trs).unwrap();
        for (class, w) in &report.witnesses {
            let o = &w.overlap;
            let u = o.unifier.clone();
            let host = match &o.kind {
                OverlapKind::RhsInsideLhs(p) => o.lhs.subterm_at(p).unwrap().clone(),
                k => o.rhs.subterm_at(&k.position()).unwrap().clone(),
            };
            let other = if matches!(o.kind, OverlapKind::RhsInsideLhs(_)) { &o.rhs } else { &o.lhs };
            assert_eq!(host.substitute(&u), other.substitute(&u), "{class}");
            let test: fn(&Overlap) -> Option<String> = match class {
                Class::TopDown | Class::BottomUp => topdown_violation,
                Class::Prefix => prefix_violation,
                Class::Suffix => suffix_violation,
            };
            assert!(test(o).is_some());
        }
    }

    fn tm(transitions: &[(&str, Option<&str>, &str, &str, Move)], tape: &[&str]) -> TuringMachine {
        let mut states: Vec<Symbol> = Vec::new();
        for (p, _, q, _, _) in transitions {
            for s in [p, q] {
                if !states.iter().any(|x| &**x == *s) {
                    states.push(sym(s));
                }
            }
        }
        TuringMachine {
            states,
            tape: tape.iter().map(|s| sym(s)).collect(),
            transitions: transitions
                .iter()
                .map(|(p, a, q, b, d)| Transition {
                    from: sym(p),
                    read: a.map(sym),
                    to: sym(q),
                    write: sym(b),
                    dir: *d,
                })
                .collect(),
        }
    }

    #[test]
    fn tm_right_move() {
        let m = tm(&[("p", Some("A"), "q", "B", Move::Right)], &["A", "B"]);
        let trs = encode_turing_machine(&m).unwrap();
        assert_eq!(trs.rules.len(), 1);
        assert_eq!(trs.rules[0].to_string(), "p(x,A(y)) -> q(B(x),y)");
    }

    #[test]
    fn tm_left_move() {
        let m = tm(&[("p", Some("A"), "q", "B", Move::Left)], &["C", "A", "B"]);
        let trs = encode_turing_machine(&m).unwrap();
        let rules: Vec<String> = trs.rules.iter().map(ToString::to_string).collect();
        assert!(rules.contains(&"p(C(x),A(y)) -> q(x,C(B(y)))".to_string()));
        assert!(rules.contains(&"p(#0,A(y)) -> q(#0,#1(B(y)))".to_string()));
        assert_eq!(rules.len(), 4);
    }

    #[test]
    fn tm_blank_variants() {
        let m = tm(&[("p", None, "q", "B", Move::Left)], &["B"]);
        let rules: Vec<String> = encode_turing_machine(&m).unwrap().rules.iter().map(ToString::to_string).collect();
        assert_eq!(
            rules,
            vec![
                "p(B(x),#1(y)) -> q(x,B(B(y)))",
                "p(#0,#1(y)) -> q(#0,#1(B(y)))",
                "p(#0,#0) -> q(#0,#1(B(#0)))",
                "p(B(x),#0) -> q(x,B(B(#0)))",
            ]
        );
        let m = tm(&[("p", None, "q", "B", Move::Right)], &["B"]);
        let rules: Vec<String> = encode_turing_machine(&m).unwrap().rules.iter().map(ToString::to_string).collect();
        assert_eq!(rules, vec!["p(x,#1(y)) -> q(B(x),y)", "p(x,#0) -> q(B(x),#0)"]);
    }

    #[test]
    fn two_transition_machine_is_prefix_only() {
        let m = tm(
            &[("p", Some("A"), "q", "B", Move::Right), ("q", Some("C"), "p", "D", Move::Left)],
            &["A", "B", "C", "D"],
        );
        let trs = encode_turing_machine(&m).unwrap();
        assert_eq!(classes(&trs), BTreeSet::from([Class::Prefix]));
        assert!(classes(&encode_turing_machine(&tm(&[], &["A"])).unwrap()).len() == 4);
    }

    #[test]
    fn encoded_overlaps_are_at_the_root() {
        let m = tm(
            &[
                ("p", Some("A"), "q", "B", Move::Right),
                ("q", None, "p", "A", Move::Left),
                ("p", Some("B"), "p", "A", Move::Left),
                ("q", Some("A"), "q", "A", Move::Right),
            ],
            &["A", "B"],
        );
        let trs = encode_turing_machine(&m).unwrap();
        for o in system_overlaps(&trs.rules) {
            assert_eq!(o.kind, OverlapKind::Root, "{o}");
        }
    }

    proptest::proptest! {
        #[test]
        fn duality_and_ground_suffix(seed in 0u64..200) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let alpha = RankedAlphabet::parse("f/2 g/1 a/0 b/0").unwrap();
            let pool = alpha.ground_terms(4);
            let vars = ["x", "y"];
            let mut open = Vec::new();
            for s in &pool {
                for p in s.positions() {
                    if p.is_root() { continue; }
                    let v = Term::var(vars[rng.gen_range(0..2)]);
                    let u = s.replace_at(&p, v).unwrap();
                    if u.is_linear() { open.push(u); }
                }
            }
            let mut trs = Trs::new(alpha.clone());
            let mut ground = Trs::new(alpha.clone());
            for _ in 0..rng.gen_range(1..4) {
                let l = open[rng.gen_range(0..open.len())].clone();
                let r = open[rng.gen_range(0..open.len())].clone();
                trs.rules.push(RewriteRule::new_unchecked(l, r));
                let gl = pool[rng.gen_range(0..pool.len())].clone();
                let gr = pool[rng.gen_range(0..pool.len())].clone();
                ground.add_rule(RewriteRule::new(gl, gr).unwrap()).unwrap();
            }
            let fwd = classify(&trs).unwrap();
            let inv = classify(&trs.inverse()).unwrap();
            proptest::prop_assert_eq!(fwd.is(Class::TopDown), inv.is(Class::BottomUp));
            proptest::prop_assert_eq!(fwd.is(Class::BottomUp), inv.is(Class::TopDown));
            proptest::prop_assert!(classify(&ground).unwrap().is(Class::Suffix));
        }
    }
}
