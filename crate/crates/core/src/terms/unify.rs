use std::collections::BTreeMap;

use super::{Substitution, Symbol, Term};

/// One-way matching: finds `σ` with `pattern σ = subject`. Variables of the
/// subject are treated as constants.
pub fn match_term(pattern: &Term, subject: &Term) -> Option<Substitution> {
    let mut sigma = BTreeMap::new();
    match_into(pattern, subject, &mut sigma).then(|| Substitution::from_pairs(sigma))
}

/// Matches a word of patterns componentwise with a single substitution.
pub fn match_word(patterns: &[Term], subjects: &[Term]) -> Option<Substitution> {
    if patterns.len() != subjects.len() {
        return None;
    }
    let mut sigma = BTreeMap::new();
    patterns
        .iter()
        .zip(subjects)
        .all(|(p, s)| match_into(p, s, &mut sigma))
        .then(|| Substitution::from_pairs(sigma))
}

fn match_into(pattern: &Term, subject: &Term, sigma: &mut BTreeMap<Symbol, Term>) -> bool {
    match (pattern, subject) {
        (Term::Var(v), _) => match sigma.get(v) {
            Some(bound) => bound == subject,
            None => {
                sigma.insert(v.clone(), subject.clone());
                true
            }
        },
        (Term::App(f, ps), Term::App(g, ss)) => {
            f == g && ps.len() == ss.len() && ps.iter().zip(ss).all(|(p, s)| match_into(p, s, sigma))
        }
        _ => false,
    }
}

/// Most general unifier, idempotent, or `None` (clash or occurs check).
pub fn unify(s: &Term, t: &Term) -> Option<Substitution> {
    let mut bindings: BTreeMap<Symbol, Term> = BTreeMap::new();
    let mut stack = vec![(s.clone(), t.clone())];
    while let Some((a, b)) = stack.pop() {
        let a = walk(&a, &bindings);
        let b = walk(&b, &bindings);
        match (&a, &b) {
            (Term::Var(x), Term::Var(y)) if x == y => {}
            (Term::Var(x), other) | (other, Term::Var(x)) => {
                if occurs(x, other, &bindings) {
                    return None;
                }
                bindings.insert(x.clone(), other.clone());
            }
            (Term::App(f, fs), Term::App(g, gs)) => {
                if f != g || fs.len() != gs.len() {
                    return None;
                }
                stack.extend(fs.iter().cloned().zip(gs.iter().cloned()));
            }
        }
    }
    let keys: Vec<Symbol> = bindings.keys().cloned().collect();
    let resolved = keys
        .into_iter()
        .map(|k| {
            let v = resolve(&Term::Var(k.clone()), &bindings);
            (k, v)
        })
        .filter(|(k, v)| !matches!(v, Term::Var(w) if w == k))
        .collect::<Vec<_>>();
    Some(Substitution::from_pairs(resolved))
}

fn walk(t: &Term, bindings: &BTreeMap<Symbol, Term>) -> Term {
    let mut cur = t.clone();
    while let Term::Var(v) = &cur {
        match bindings.get(v) {
            Some(next) => cur = next.clone(),
            None => break,
        }
    }
    cur
}

fn occurs(x: &Symbol, t: &Term, bindings: &BTreeMap<Symbol, Term>) -> bool {
    match walk(t, bindings) {
        Term::Var(v) => &v == x,
        Term::App(_, c) => c.iter().any(|s| occurs(x, s, bindings)),
    }
}

fn resolve(t: &Term, bindings: &BTreeMap<Symbol, Term>) -> Term {
    match walk(t, bindings) {
        v @ Term::Var(_) => v,
        Term::App(f, c) => Term::App(f, c.iter().map(|s| resolve(s, bindings)).collect()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::{parse_term, sym, RankedAlphabet};

    fn t(s: &str) -> Term {
        let alphabet = RankedAlphabet::parse("f/2 g/1 h/1 a/0 b/0").unwrap();
        parse_term(s, &alphabet, &["x", "y", "z", "x'", "y'"]).unwrap()
    }

    #[test]
    fn match_examples() {
        let s = match_term(&t("f(x,y)"), &t("f(g(a),a)")).unwrap();
        assert_eq!(s, Substitution::from_pairs([(sym("x"), t("g(a)")), (sym("y"), t("a"))]));
        let s = match_term(&t("f(x,y)"), &t("f(g(x'),g(y'))")).unwrap();
        assert_eq!(t("f(x,y)").substitute(&s), t("f(g(x'),g(y'))"));
        assert_eq!(s.get("x"), Some(&t("g(x')")));
        assert!(match_term(&t("g(f(x,y))"), &t("g(x')")).is_none());
        assert!(match_term(&t("f(x,x)"), &t("f(a,b)")).is_none());
    }

    #[test]
    fn unify_examples() {
        let s = unify(&t("f(x,y)"), &t("f(g(x'),g(y'))")).unwrap();
        assert_eq!(t("f(x,y)").substitute(&s), t("f(g(x'),g(y'))").substitute(&s));
        assert_eq!(s.get("x"), Some(&t("g(x')")));
        assert_eq!(s.get("y"), Some(&t("g(y')")));
        assert!(unify(&t("x"), &t("g(x)")).is_none());
        assert_eq!(unify(&t("a"), &t("a")), Some(Substitution::new()));
        assert!(unify(&t("a"), &t("b")).is_none());
    }

    #[test]
    fn unify_is_idempotent_through_chains() {
        let s = unify(&t("f(x,g(y))"), &t("f(y,g(z))")).unwrap();
        let lhs = t("f(x,g(y))").substitute(&s);
        assert_eq!(lhs, t("f(y,g(z))").substitute(&s));
        assert_eq!(lhs.substitute(&s), lhs);
    }
}
