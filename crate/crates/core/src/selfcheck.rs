//! Oracle-equivalence suites: each check compares a construction with
//! bounded brute force and reports one line.

use std::collections::BTreeSet;
use std::fmt;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::automata::TreeAutomaton;
use crate::classifier::{classify, encode_turing_machine, Class};
use crate::error::{Error, Result};
use crate::formats::{parse_automaton, parse_tm, parse_trs};
use crate::grammar::{iterate_subst, subst_product, Enumerator, TupleGrammar, TupleLanguage};
use crate::rewriting::{reachable, suffix_reachable, topdown_reachable, Bounds, Reach, RewriteRule, Trs};
use crate::terms::{parse_term, sym, RankedAlphabet, Term};
use crate::suffix::{self, Direction};
use crate::topdown;

pub const FG_HAND_GRAMMAR: &str = include_str!("../data/fg_hand.grammar");
pub const TOPDOWN_FG: &str = include_str!("../data/topdown_fg.trs");
pub const BOTTOMUP_HF: &str = include_str!("../data/bottomup_hf.trs");
pub const SWAP_PUMP: &str = include_str!("../data/swap_pump.trs");
pub const GFGF: &str = include_str!("../data/gfgf.trs");
pub const ONE_STEP_TM: &str = include_str!("../data/one_step.tm");
pub const FGG_AUT: &str = include_str!("../data/fgg.aut");
pub const FAA_AUT: &str = include_str!("../data/faa.aut");

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    /// Wall-clock budget of the check.
    pub budget: Duration,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(
            f,
            "criterion {}: {status} [{:.2}s/{}s] {} — {}",
            self.id,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs(),
            self.title,
            self.detail
        )
    }
}

fn timed(id: u8, title: &'static str, budget_secs: u64, check: impl FnOnce() -> Result<(bool, String)>) -> Outcome {
    let start = Instant::now();
    let (ok, mut detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
    let elapsed = start.elapsed();
    let budget = Duration::from_secs(budget_secs);
    if elapsed > budget {
        detail.push_str("; over time budget");
    }
    let passed = ok && elapsed <= budget;
    Outcome {
        id,
        title,
        passed,
        detail,
        elapsed,
        budget,
    }
}

fn term(alphabet: &RankedAlphabet, s: &str) -> Term {
    let none: &[&str] = &[];
    parse_term(s, alphabet, none).expect("fixed test term")
}

pub fn fg_system() -> Trs {
    parse_trs(TOPDOWN_FG).expect("bundled file")
}

pub fn swap_pump_system() -> Trs {
    parse_trs(SWAP_PUMP).expect("bundled file")
}

/// Random finite linear systems the classifier calls top-down, over at
/// most five symbols and with at most three rules.
pub fn random_topdown_systems(count: usize, seed: u64) -> Vec<Trs> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool = [("b", 0), ("g", 1), ("h", 1), ("f", 2)];
    let mut out = Vec::new();
    while out.len() < count {
        let extra = rng.gen_range(2..=4);
        let mut symbols = vec![("a", 0)];
        let mut rest = pool.to_vec();
        rest.shuffle(&mut rng);
        symbols.extend(rest.into_iter().take(extra));
        if symbols.iter().all(|(_, n)| *n == 0) {
            continue;
        }
        let alphabet = RankedAlphabet::new(symbols.iter().copied()).expect("distinct names");
        let mut trs = Trs::new(alphabet.clone());
        for _ in 0..rng.gen_range(1..=3) {
            let mut fresh = 0;
            let lhs = random_term(&mut rng, &alphabet, 4, &mut fresh, true);
            let mut vars: Vec<Term> = lhs.vars_ordered().into_iter().map(Term::Var).collect();
            vars.shuffle(&mut rng);
            let rhs = random_rhs(&mut rng, &alphabet, 4, &mut vars);
            if let Ok(rule) = RewriteRule::new(lhs, rhs) {
                if rule.lhs != rule.rhs {
                    trs.add_rule(rule).expect("alphabet respected");
                }
            }
        }
        if trs.rules.is_empty() {
            continue;
        }
        if classify(&trs).is_ok_and(|r| r.is(Class::TopDown)) {
            out.push(trs);
        }
    }
    out
}

fn random_term(rng: &mut ChaCha8Rng, a: &RankedAlphabet, budget: usize, fresh: &mut usize, root: bool) -> Term {
    if !root && (budget <= 1 || rng.gen_bool(0.3)) && rng.gen_bool(0.6) {
        *fresh += 1;
        return Term::var(&format!("x{fresh}"));
    }
    let choices: Vec<(&crate::terms::Symbol, usize)> = a.iter().filter(|(_, n)| *n < budget.max(1)).collect();
    let (f, n) = *choices.choose(rng).expect("a constant exists");
    let mut left = budget.saturating_sub(1);
    let children = (0..n)
        .map(|k| {
            let share = if k + 1 == n { left } else { rng.gen_range(1..=left.saturating_sub(n - k - 1).max(1)) };
            left = left.saturating_sub(share);
            random_term(rng, a, share.max(1), fresh, false)
        })
        .collect();
    Term::App(f.clone(), children)
}

/// Linear right-hand side using a subset of `vars`.
fn random_rhs(rng: &mut ChaCha8Rng, a: &RankedAlphabet, budget: usize, vars: &mut Vec<Term>) -> Term {
    if budget <= 1 || rng.gen_bool(0.35) {
        if let Some(v) = vars.pop() {
            if rng.gen_bool(0.8) {
                return v;
            }
        }
    }
    let choices: Vec<(&crate::terms::Symbol, usize)> = a.iter().filter(|(_, n)| *n < budget.max(1)).collect();
    let (f, n) = *choices.choose(rng).expect("a constant exists");
    let mut left = budget.saturating_sub(1);
    let children = (0..n)
        .map(|k| {
            let share = if k + 1 == n { left } else { rng.gen_range(1..=left.saturating_sub(n - k - 1).max(1)) };
            left = left.saturating_sub(share);
            random_rhs(rng, a, share.max(1), vars)
        })
        .collect();
    Term::App(f.clone(), children)
}

type Pairs = BTreeSet<(Term, Term)>;

/// Pairs (s, t) with both sides ≤ `side` and t reachable from s within
/// `steps` steps through terms of size ≤ `slack`.
pub fn oracle_pairs(trs: &Trs, side: usize, steps: usize, slack: usize) -> Result<Pairs> {
    let mut reach = Reach::new(trs, slack)?;
    let mut out = Pairs::new();
    for s in trs.alphabet.ground_terms(side) {
        for t in reach.closure(&s, steps) {
            if t.size() <= side {
                out.insert((s.clone(), t));
            }
        }
    }
    Ok(out)
}

/// Grammar pairs with both sides ≤ `side`.
pub fn grammar_pairs(g: &TupleGrammar, side: usize) -> Result<Pairs> {
    let e = Enumerator::new(g, &g.axiom)?;
    Ok(e.up_to_sides(side, side)?
        .into_iter()
        .map(|w| (w[0].clone(), w[1].clone()))
        .collect())
}

fn describe_difference(a: &Pairs, b: &Pairs, a_name: &str, b_name: &str) -> String {
    let only_a: Vec<String> = a.difference(b).take(3).map(|(s, t)| format!("({s}, {t})")).collect();
    let only_b: Vec<String> = b.difference(a).take(3).map(|(s, t)| format!("({s}, {t})")).collect();
    format!(
        "{} only in {a_name} (e.g. {}), {} only in {b_name} (e.g. {})",
        a.difference(b).count(),
        only_a.join(" "),
        b.difference(a).count(),
        only_b.join(" ")
    )
}

pub fn criterion_1() -> Outcome {
    timed(1, "the f(g(x),g(y)) → h(f(x,y)) grammar reproduces the hand-written grammar", 10, || {
        let r = fg_system();
        let o: Vec<String> = topdown::overlap_set(&r)?.iter().map(|c| c.context.to_string()).collect();
        let o_ok = o == ["□1", "f(□1,□2)"];
        let built = topdown::build_grammar(&r)?;
        let hand = TupleGrammar::parse(FG_HAND_GRAMMAR)?;
        let a = built.enumerate_tuples("C0", 20)?;
        let b = hand.enumerate_tuples("A", 20)?;
        Ok((
            o_ok && a == b,
            format!("O = {{{}}}; {} pairs of total size ≤ 20 on both sides, sets equal: {}", o.join(", "), a.len(), a == b),
        ))
    })
}

pub fn criterion_2(systems: &[Trs]) -> Outcome {
    timed(2, "top-down grammar pairs = oracle pairs", 120, || {
        let mut all = vec![fg_system()];
        all.extend(systems.iter().cloned());
        let mut pairs = 0;
        for (k, r) in all.iter().enumerate() {
            let g = topdown::build_grammar(r)?;
            let from_grammar = grammar_pairs(&g, 7)?;
            let from_oracle = oracle_pairs(r, 7, 12, 13)?;
            if from_grammar != from_oracle {
                return Ok((
                    false,
                    format!(
                        "system {k} ({}): {}",
                        r.rules.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "),
                        describe_difference(&from_grammar, &from_oracle, "grammar", "oracle")
                    ),
                ));
            }
            pairs += from_grammar.len();
        }
        Ok((true, format!("{} systems, {pairs} pairs with sides ≤ 7 (oracle: ≤ 12 steps, size ≤ 13)", all.len())))
    })
}

pub fn criterion_3(systems: &[Trs]) -> Outcome {
    timed(3, "unrestricted and top-down reachability coincide", 60, || {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut seeds_checked = 0;
        for (k, r) in systems.iter().enumerate() {
            let terms = r.alphabet.ground_terms(6);
            let seeds: Vec<&Term> = terms.choose_multiple(&mut rng, 20).collect();
            let bounds = Bounds::new(12, 12);
            for s in seeds {
                let all: BTreeSet<Term> = reachable(r, s, bounds)?.into_iter().filter(|t| t.size() <= 6).collect();
                let td: BTreeSet<Term> = topdown_reachable(r, s, bounds)?
                    .into_iter()
                    .filter(|t| t.size() <= 6)
                    .collect();
                if all != td {
                    return Ok((false, format!("system {k}, seed {s}: {} vs {} terms", all.len(), td.len())));
                }
                seeds_checked += 1;
            }
        }
        Ok((true, format!("{} systems × seeds = {seeds_checked} fixpoints equal (≤ 12 steps, size ≤ 12)", systems.len())))
    })
}

pub fn criterion_4() -> Outcome {
    timed(4, "classification table", 1, || {
        let classes = |r: &Trs| -> Result<BTreeSet<Class>> { Ok(classify(r)?.classes) };
        let fg_system = fg_system();
        let gfgf = parse_trs(GFGF)?;
        let tm = encode_turing_machine(&parse_tm(ONE_STEP_TM)?)?;
        let rows = [
            ("f(g(x),g(y)) → h(f(x,y))", classes(&fg_system)? == BTreeSet::from([Class::TopDown])),
            ("f(g(x),g(y)) → h(f(x,y)) inverse", classes(&fg_system.inverse())? == BTreeSet::from([Class::BottomUp])),
            ("swap/pump", classes(&swap_pump_system())?.contains(&Class::Suffix)),
            ("g(x) -> f(g(f(x)))", !classes(&gfgf)?.contains(&Class::TopDown)),
            ("Turing machine", classes(&tm)? == BTreeSet::from([Class::Prefix])),
        ];
        let failed: Vec<&str> = rows.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
        Ok((
            failed.is_empty(),
            if failed.is_empty() {
                "5/5 rows as expected".to_string()
            } else {
                format!("wrong rows: {}", failed.join(", "))
            },
        ))
    })
}

/// Terms reachable from some seed, of size ≤ `max`.
fn oracle_image(trs: &Trs, seeds: &BTreeSet<Term>, max: usize, slack: usize) -> Result<BTreeSet<Term>> {
    let mut reach = Reach::new(trs, slack)?;
    let mut out = BTreeSet::new();
    for s in seeds {
        out.extend(reach.closure(s, usize::MAX).into_iter().filter(|t| t.size() <= max));
    }
    Ok(out)
}

pub fn criterion_5() -> Outcome {
    timed(5, "image automaton of a finite language", 30, || {
        let r = fg_system();
        let a = parse_automaton(FGG_AUT)?;
        let image = topdown::image_automaton(&r, &a)?;
        // accepts(image, t) for every t ≤ 12 is the same as its bounded language.
        let got = image.enumerate_language(12);
        let seeds = a.enumerate_language(12);
        let expected = oracle_image(&r, &seeds, 12, 18)?;
        let all_accept = expected.iter().all(|t| image.accepts(t).unwrap_or(false));
        Ok((
            got == expected && all_accept,
            format!("{} terms ≤ 12 accepted, oracle image has {}", got.len(), expected.len()),
        ))
    })
}

pub fn criterion_6() -> Outcome {
    timed(6, "suffix pipeline on the swap/pump system", 180, || {
        let r = swap_pump_system();
        let ss = suffix::to_state_system(&r)?;
        let sat = suffix::saturate(&ss);
        let (triples, bad) = suffix::bridge_property_violations(&ss, &sat, 6)?;
        if let Some(b) = bad.first() {
            return Ok((false, format!("(a) R₌ misses {b}")));
        }
        let mut seeds = 0;
        for s in r.alphabet.ground_terms(7) {
            let direct: BTreeSet<Term> = suffix_reachable(&r, &s, Bounds::new(usize::MAX, 7))?;
            let phased: BTreeSet<Term> = suffix::two_phase_reachable(&ss, &sat, &s, 9)?
                .into_iter()
                .filter(|t| t.size() <= 7)
                .collect();
            if direct != phased {
                return Ok((false, format!("(b) from {s}: {} suffix successors, {} by two phases", direct.len(), phased.len())));
            }
            seeds += 1;
        }
        let g = suffix::build_suffix_grammar(&r)?;
        let from_grammar = grammar_pairs(&g, 8)?;
        let from_oracle = oracle_pairs(&r, 8, usize::MAX, 14)?;
        if from_grammar != from_oracle {
            return Ok((false, format!("(c) {}", describe_difference(&from_grammar, &from_oracle, "grammar", "oracle"))));
        }
        let g_n = |n: usize| {
            let mut t = Term::constant("a");
            for _ in 0..n {
                t = Term::app("g", vec![t]);
            }
            t
        };
        let mut swaps = 0;
        for m in 0..=2 {
            for n in 0..=2 {
                let pair = (Term::app("f", vec![g_n(m), g_n(n)]), Term::app("f", vec![g_n(n), g_n(m)]));
                if !from_grammar.contains(&pair) {
                    return Ok((false, format!("(c) swap pair ({}, {}) missing", pair.0, pair.1)));
                }
                swaps += 1;
            }
        }
        Ok((
            true,
            format!(
                "(a) {triples} state triples, none outside R₌; (b) {seeds} ground seeds ≤ 7 agree; (c) {} pairs ≤ 8 equal the oracle, {swaps} swap pairs present; {} nonterminals",
                from_grammar.len(),
                g.nonterminals.len()
            ),
        ))
    })
}

pub fn criterion_7() -> Outcome {
    timed(7, "suffix image and inverse image of {f(a,a)}", 60, || {
        let r = swap_pump_system();
        let a = parse_automaton(FAA_AUT)?;
        let forward = suffix::image_automaton_suffix(&r, &a, Direction::Forward)?.enumerate_language(8);
        let expected = oracle_image(&r, &a.enumerate_language(8), 8, 14)?;
        let inverse = suffix::image_automaton_suffix(&r, &a, Direction::Inverse)?.enumerate_language(8);
        let mut reach = Reach::new(&r, 14)?;
        let mut preimage = BTreeSet::new();
        for s in r.alphabet.ground_terms(8) {
            if reach.closure(&s, usize::MAX).iter().any(|t| a.accepts(t).unwrap_or(false)) {
                preimage.insert(s);
            }
        }
        Ok((
            forward == expected && inverse == preimage,
            format!(
                "image: {} terms ≤ 8 (oracle {}); inverse image: {} (oracle {}: {})",
                forward.len(),
                expected.len(),
                inverse.len(),
                preimage.len(),
                preimage.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
            ),
        ))
    })
}

pub fn criterion_8() -> Outcome {
    timed(8, "negative controls", 30, || {
        let gfgf = parse_trs(GFGF)?;
        let ga = term(&gfgf.alphabet, "g(a)");
        let got = reachable(&gfgf, &ga, Bounds::new(4, 100))?;
        let expected: BTreeSet<Term> = (0..=4)
            .map(|n| {
                let mut inner = term(&gfgf.alphabet, "a");
                for _ in 0..n {
                    inner = Term::app("f", vec![inner]);
                }
                let mut t = Term::app("g", vec![inner]);
                for _ in 0..n {
                    t = Term::app("f", vec![t]);
                }
                t
            })
            .collect();
        let refused = matches!(topdown::build_grammar(&gfgf), Err(Error::ClassVeto { .. }));
        let r = fg_system();
        let fa = TreeAutomaton::from_finite_language(&r.alphabet, &[term(&r.alphabet, "h(f(a,a))")])?;
        let inverse_refused = matches!(topdown::inverse_image_automaton(&r, &fa), Err(Error::ClassVeto { .. }));
        let g = topdown::build_grammar(&r)?;
        let pre1 = topdown::bounded_preimages(&g, &[term(&r.alphabet, "h(f(a,a))")], 9)?;
        let pre1_ok = pre1
            == BTreeSet::from([term(&r.alphabet, "h(f(a,a))"), term(&r.alphabet, "f(g(a),g(a))")]);
        let pre2 = topdown::bounded_preimages(&g, &[term(&r.alphabet, "h(h(f(a,a)))")], 9)?;
        let pre2_ok = pre2.contains(&term(&r.alphabet, "f(g(g(a)),g(g(a)))"));
        let ok = got == expected && refused && inverse_refused && pre1_ok && pre2_ok;
        Ok((
            ok,
            format!(
                "oracle from g(a): {} terms (expected 5: {}); builder refuses: {refused}; inverse image refused: {inverse_refused}; preimages of h(f(a,a)): {}; hh(f(a,a)) ← f(g(g(a)),g(g(a))): {pre2_ok}",
                got.len(),
                got == expected,
                pre1.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
            ),
        ))
    })
}

/// Evaluates f□₁□₂[g□₁ g□₂]*[a a] with size bound `max_size`.
pub fn rational_example(max_size: usize) -> Result<TupleLanguage> {
    let a = RankedAlphabet::parse("f/2 g/1 a/0")?;
    let vars = ["x1", "x2"];
    let t = |s: &str| parse_term(s, &a, &vars);
    let x = [sym("x1"), sym("x2")];
    let step = TupleLanguage::from_tuples(2, [vec![t("g(x1)")?, t("g(x2)")?]])?;
    let star = iterate_subst(&step, &x, max_size)?;
    let body = subst_product(&TupleLanguage::from_tuples(1, [vec![t("f(x1,x2)")?]])?, &x, &star)?;
    let base = TupleLanguage::from_tuples(2, [vec![t("a")?, t("a")?]])?;
    Ok(subst_product(&body, &x, &base)?.truncate(max_size))
}

fn f_gn_a(n: usize) -> Term {
    let mut side = Term::constant("a");
    for _ in 0..n {
        side = Term::app("g", vec![side]);
    }
    Term::app("f", vec![side.clone(), side])
}

pub fn criterion_9() -> Outcome {
    timed(9, "rational expression f□₁□₂[g□₁g□₂]*[aa] at size ≤ 11", 1, || {
        let got: BTreeSet<Term> = rational_example(11)?.iter().map(|w| w[0].clone()).collect();
        let required: BTreeSet<Term> = (0..=3).map(f_gn_a).collect();
        let max_n = got.iter().map(|t| (t.size() - 3) / 2).max().unwrap_or(0);
        Ok((
            got == required,
            format!(
                "got f(gⁿa,gⁿa) for n ≤ {max_n} ({} terms); required n ≤ 3, but f(g⁴a,g⁴a) has size 11",
                got.len()
            ),
        ))
    })
}

/// Every check, in order.
pub fn run_all() -> Vec<Outcome> {
    let systems = random_topdown_systems(50, 2024);
    vec![
        criterion_1(),
        criterion_2(&systems),
        criterion_3(&systems),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(),
    ]
}
