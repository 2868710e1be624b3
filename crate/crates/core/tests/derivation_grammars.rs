use std::collections::BTreeSet;

use ratrw::automata::TreeAutomaton;
use ratrw::formats::{parse_automaton, parse_trs};
use ratrw::grammar::TupleGrammar;
use ratrw::rewriting::{Reach, Trs};
use ratrw::selfcheck::{grammar_pairs, oracle_pairs, FG_HAND_GRAMMAR, FAA_AUT, FGG_AUT, GFGF, SWAP_PUMP, TOPDOWN_FG};
use ratrw::suffix::{build_suffix_grammar, image_automaton_suffix, Direction};
use ratrw::terms::Term;
use ratrw::topdown::{build_bottomup, build_grammar, image_automaton, inverse_image_automaton, overlap_set};
use ratrw::Error;

#[test]
fn fg_overlaps_and_hand_grammar() {
    let r = parse_trs(TOPDOWN_FG).unwrap();
    let o: Vec<String> = overlap_set(&r).unwrap().iter().map(|c| c.context.to_string()).collect();
    assert_eq!(o.len(), 2, "{o:?}");
    let built = build_grammar(&r).unwrap();
    let hand = TupleGrammar::parse(FG_HAND_GRAMMAR).unwrap();
    assert_eq!(grammar_pairs(&built, 9).unwrap(), grammar_pairs(&hand, 9).unwrap());
}

#[test]
fn topdown_grammar_equals_oracle() {
    let r = parse_trs(TOPDOWN_FG).unwrap();
    let g = build_grammar(&r).unwrap();
    assert_eq!(grammar_pairs(&g, 7).unwrap(), oracle_pairs(&r, 7, 12, 13).unwrap());
}

#[test]
fn membership_agrees_with_enumeration() {
    let r = parse_trs(TOPDOWN_FG).unwrap();
    let g = build_grammar(&r).unwrap();
    let pairs = grammar_pairs(&g, 6).unwrap();
    for s in r.alphabet.ground_terms(6) {
        for t in r.alphabet.ground_terms(6) {
            let member = g.contains_tuple(&g.axiom, &[s.clone(), t.clone()]).unwrap();
            assert_eq!(member, pairs.contains(&(s.clone(), t.clone())), "({s}, {t})");
        }
    }
}

#[test]
fn bottomup_grammar_is_the_swapped_one() {
    let r = parse_trs(TOPDOWN_FG).unwrap();
    let inv = r.inverse();
    let g = build_bottomup(&inv).unwrap();
    let swapped: BTreeSet<(Term, Term)> = grammar_pairs(&build_grammar(&r).unwrap(), 7)
        .unwrap()
        .into_iter()
        .map(|(s, t)| (t, s))
        .collect();
    assert_eq!(grammar_pairs(&g, 7).unwrap(), swapped);
}

#[test]
fn builder_refuses_non_topdown() {
    let e = build_grammar(&parse_trs(GFGF).unwrap()).unwrap_err();
    assert!(matches!(e, Error::ClassVeto { .. }), "{e}");
}

/// Terms ≤ `max` reachable from L(a), by brute force.
fn oracle_image(r: &Trs, a: &TreeAutomaton, max: usize, slack: usize) -> BTreeSet<Term> {
    let mut reach = Reach::new(r, slack).unwrap();
    a.enumerate_language(max)
        .iter()
        .flat_map(|s| reach.closure(s, usize::MAX))
        .filter(|t| t.size() <= max)
        .collect()
}

#[test]
fn topdown_image_and_bottomup_inverse() {
    let r = parse_trs(TOPDOWN_FG).unwrap();
    let a = parse_automaton(FGG_AUT).unwrap();
    let image = image_automaton(&r, &a).unwrap();
    assert_eq!(image.enumerate_language(10), oracle_image(&r, &a, 10, 16));
    // The same language through the inverse system's inverse image.
    let back = inverse_image_automaton(&r.inverse(), &a).unwrap();
    assert_eq!(back.enumerate_language(10), image.enumerate_language(10));
}

#[test]
fn suffix_grammar_and_images() {
    let r = parse_trs(SWAP_PUMP).unwrap();
    let g = build_suffix_grammar(&r).unwrap();
    let pairs = grammar_pairs(&g, 6).unwrap();
    assert_eq!(pairs, oracle_pairs(&r, 6, usize::MAX, 12).unwrap());
    let a = parse_automaton(FAA_AUT).unwrap();
    let forward = image_automaton_suffix(&r, &a, Direction::Forward).unwrap();
    assert_eq!(forward.enumerate_language(7), oracle_image(&r, &a, 7, 12));
    let inverse = image_automaton_suffix(&r, &a, Direction::Inverse).unwrap();
    let faa: BTreeSet<Term> = a.enumerate_language(3);
    assert_eq!(inverse.enumerate_language(8), faa);
}
