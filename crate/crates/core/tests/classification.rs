use std::collections::BTreeSet;

use ratrw::classifier::{classify, encode_turing_machine, require_class, Class};
use ratrw::formats::{parse_tm, parse_trs};
use ratrw::rewriting::Trs;
use ratrw::selfcheck::{BOTTOMUP_HF, GFGF, ONE_STEP_TM, SWAP_PUMP, TOPDOWN_FG};
use ratrw::Error;

fn classes(t: &Trs) -> BTreeSet<Class> {
    classify(t).unwrap().classes
}

#[test]
fn the_table() {
    let fg_system = parse_trs(TOPDOWN_FG).unwrap();
    assert_eq!(classes(&fg_system), BTreeSet::from([Class::TopDown]));
    assert_eq!(classes(&fg_system.inverse()), BTreeSet::from([Class::BottomUp]));
    assert_eq!(classes(&parse_trs(BOTTOMUP_HF).unwrap()), BTreeSet::from([Class::BottomUp]));
    assert!(classes(&parse_trs(SWAP_PUMP).unwrap()).contains(&Class::Suffix));
    assert!(!classes(&parse_trs(GFGF).unwrap()).contains(&Class::TopDown));
    let tm = encode_turing_machine(&parse_tm(ONE_STEP_TM).unwrap()).unwrap();
    assert_eq!(classes(&tm), BTreeSet::from([Class::Prefix]));
}

#[test]
fn every_refusal_carries_a_witness() {
    for text in [TOPDOWN_FG, BOTTOMUP_HF, SWAP_PUMP, GFGF] {
        let r = classify(&parse_trs(text).unwrap()).unwrap();
        for c in Class::ALL {
            assert_eq!(r.is(c), !r.witnesses.contains_key(&c), "{c}");
        }
    }
}

#[test]
fn require_class_vetoes() {
    let gfgf = parse_trs(GFGF).unwrap();
    assert!(matches!(require_class(&gfgf, Class::TopDown), Err(Error::ClassVeto { .. })));
    assert!(require_class(&parse_trs(TOPDOWN_FG).unwrap(), Class::TopDown).is_ok());
}

#[test]
fn right_move_chains_break_prefix() {
    // r writes A and moves right into state p; p's right move then reads A
    // from the right stack. rhs p(A(x),y) against lhs p(x',A(y')) unifies at
    // the root with neither side an instance of the other.
    let m = parse_tm("state p q r\ntape A B\ntrans p A -> q B +\ntrans q _ -> r A -\ntrans r B -> p A +\n").unwrap();
    let r = classify(&encode_turing_machine(&m).unwrap()).unwrap();
    assert!(!r.is(Class::Prefix), "{r}");
    assert!(r.witnesses[&Class::Prefix].reason.contains("root"), "{r}");
    // A single right move followed by a left move stays prefix.
    let ok = parse_tm("state p q\ntape A B\ntrans p A -> q B +\ntrans q _ -> p A -\n").unwrap();
    assert!(classify(&encode_turing_machine(&ok).unwrap()).unwrap().is(Class::Prefix));
}
