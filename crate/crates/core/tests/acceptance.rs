//! Acceptance table: one line per criterion, in order.
//!
//! Criterion 9 asks for f(gⁿa,gⁿa) with n ≤ 3 at size ≤ 11, but f(g⁴a,g⁴a)
//! has exactly 11 nodes and belongs to the language, so the faithful
//! evaluation reports FAIL there. The run still exits 0 when that is the
//! *only* discrepancy: the extra term must be exactly f(g⁴a,g⁴a). Anything
//! else failing makes the target fail.

use std::collections::BTreeSet;
use std::process::ExitCode;

use ratrw::selfcheck::{self, rational_example};
use ratrw::terms::Term;

fn f_gn_a(n: usize) -> Term {
    let mut side = Term::constant("a");
    for _ in 0..n {
        side = Term::app("g", vec![side]);
    }
    Term::app("f", vec![side.clone(), side])
}

/// The criterion-9 gap is the one documented above, and nothing more.
fn gap_is_the_known_one() -> bool {
    let Ok(lang) = rational_example(11) else {
        return false;
    };
    let got: BTreeSet<Term> = lang.iter().map(|w| w[0].clone()).collect();
    let faithful: BTreeSet<Term> = (0..=4).map(f_gn_a).collect();
    got == faithful
}

fn main() -> ExitCode {
    let outcomes = selfcheck::run_all();
    let mut unexpected = Vec::new();
    for o in &outcomes {
        println!("{o}");
        if !o.passed && !(o.id == 9 && gap_is_the_known_one()) {
            unexpected.push(o.id);
        }
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    println!("acceptance: {passed}/{} criteria pass", outcomes.len());
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected failures in {unexpected:?}");
        ExitCode::FAILURE
    }
}
