use std::collections::BTreeSet;

use ratrw::formats::{parse_automaton, parse_trs, print_automaton, print_trs};
use ratrw::grammar::TupleGrammar;
use ratrw::selfcheck::{FG_HAND_GRAMMAR, FAA_AUT, FGG_AUT, SWAP_PUMP, TOPDOWN_FG};
use ratrw::terms::{parse_term, Context, RankedAlphabet, Term};

/// Number of ground terms of size exactly n over f/2 g/1 a/0, by the
/// obvious recurrence: c(1) = 1, c(n) = c(n-1) + Σ c(i)·c(n-1-i).
fn count(n: usize) -> usize {
    let mut c = vec![0usize; n + 1];
    c[1] = 1;
    for m in 2..=n {
        c[m] = c[m - 1] + (1..m - 1).map(|i| c[i] * c[m - 1 - i]).sum::<usize>();
    }
    c[n]
}

#[test]
fn ground_term_counts_follow_the_recurrence() {
    let a = RankedAlphabet::parse("f/2 g/1 a/0").unwrap();
    let by_size = a.ground_terms_by_size(9);
    for n in 1..=9 {
        assert_eq!(by_size[n].len(), count(n), "size {n}");
        assert!(by_size[n].iter().all(|t| t.size() == n));
    }
    let all = a.ground_terms(9);
    assert_eq!(all.iter().collect::<BTreeSet<_>>().len(), all.len());
}

#[test]
fn terms_print_and_parse_back() {
    let a = RankedAlphabet::parse("f/2 g/1 h/1 a/0").unwrap();
    for t in a.ground_terms(6) {
        let none: &[&str] = &[];
        assert_eq!(parse_term(&t.to_string(), &a, none).unwrap(), t);
    }
}

#[test]
fn context_plugging() {
    let a = RankedAlphabet::parse("f/2 g/1 a/0").unwrap();
    let t = parse_term("f(g(x), y)", &a, &["x", "y"]).unwrap();
    let (c, vars) = Context::from_term(&t).unwrap();
    assert_eq!(c.arity(), 2);
    assert_eq!(vars.len(), 2);
    let plugged = c.plug(&[Term::constant("a"), Term::app("g", vec![Term::constant("a")])]).unwrap();
    assert_eq!(plugged.to_string(), "f(g(a),g(a))");
}

#[test]
fn shipped_files_round_trip() {
    for text in [TOPDOWN_FG, SWAP_PUMP] {
        let trs = parse_trs(text).unwrap();
        assert_eq!(parse_trs(&print_trs(&trs)).unwrap(), trs);
    }
    for text in [FGG_AUT, FAA_AUT] {
        let a = parse_automaton(text).unwrap();
        assert_eq!(parse_automaton(&print_automaton(&a)).unwrap(), a);
    }
    let g = TupleGrammar::parse(FG_HAND_GRAMMAR).unwrap();
    assert_eq!(TupleGrammar::parse(&g.to_string()).unwrap(), g);
}

#[test]
fn malformed_inputs_are_rejected() {
    assert!(parse_trs("rule: a -> a\n").is_err(), "no alphabet");
    assert!(parse_trs("alphabet: f/1 a/0\nrule: f(a,a) -> a\n").is_err(), "arity");
    assert!(parse_trs("alphabet: f/1 a/0\nvars: x\nrule: a -> f(x)\n").is_err(), "fresh rhs variable");
    assert!(parse_automaton("alphabet: a/0\nstates: q\nrule: q b ->\n").is_err());
}
