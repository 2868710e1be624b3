//! Text formats for rewriting systems, automata and Turing machines.
//!
//! All formats are line based: `key: value`, with `#` comments. Grammar
//! files live with the grammar type.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::automata::{AutomatonRule, TreeAutomaton};
use crate::classifier::{Move, Transition, TuringMachine};
use crate::error::{Error, Result};
use crate::rewriting::{AutomatonPair, RewriteRule, Trs};
use crate::terms::{parse_term, strip_comment, sym, RankedAlphabet, Symbol};

/// Blank symbol of the tape in machine files.
pub const TM_BLANK: &str = "_";

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(k, l)| (k + 1, strip_comment(l).trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn key_value(line_no: usize, line: &str) -> Result<(&str, &str)> {
    line.split_once(':')
        .map(|(k, v)| (k.trim(), v.trim()))
        .ok_or_else(|| Error::Format {
            line: line_no,
            msg: format!("expected `key: value`, got `{line}`"),
        })
}

fn at(line: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Format { .. } => e,
        other => Error::Format {
            line,
            msg: other.to_string(),
        },
    }
}

/// Parses a system; `load` resolves the automaton files named by `autorule:` lines.
pub fn parse_trs_with(text: &str, load: &dyn Fn(&str) -> Result<String>) -> Result<Trs> {
    let mut alphabet = None;
    let mut vars: Vec<String> = Vec::new();
    let mut rules = Vec::new();
    let mut autorules = Vec::new();
    for (n, line) in lines(text) {
        let (key, value) = key_value(n, line)?;
        match key {
            "alphabet" => alphabet = Some(RankedAlphabet::parse(value).map_err(at(n))?),
            "vars" => vars.extend(value.split_whitespace().map(str::to_string)),
            "rule" => rules.push((n, value)),
            "autorule" => autorules.push((n, value)),
            other => {
                return Err(Error::Format {
                    line: n,
                    msg: format!("unknown key `{other}`"),
                })
            }
        }
    }
    let alphabet = alphabet.ok_or_else(|| Error::Format {
        line: 0,
        msg: "missing `alphabet:` line".into(),
    })?;
    let mut trs = Trs::new(alphabet);
    trs.vars.extend(vars.iter().map(|v| sym(v)));
    for (n, value) in rules {
        let (l, r) = value.split_once("->").ok_or_else(|| Error::Format {
            line: n,
            msg: "expected `lhs -> rhs`".into(),
        })?;
        let lhs = parse_term(l.trim(), &trs.alphabet, &vars).map_err(at(n))?;
        let rhs = parse_term(r.trim(), &trs.alphabet, &vars).map_err(at(n))?;
        trs.add_rule(RewriteRule::new(lhs, rhs).map_err(at(n))?).map_err(at(n))?;
    }
    for (n, value) in autorules {
        let (u, v) = value.split_once("->").ok_or_else(|| Error::Format {
            line: n,
            msg: "expected `fileU -> fileV`".into(),
        })?;
        let lhs = parse_automaton(&load(u.trim()).map_err(at(n))?).map_err(at(n))?;
        let rhs = parse_automaton(&load(v.trim()).map_err(at(n))?).map_err(at(n))?;
        trs.automaton_rules.push(AutomatonPair { lhs, rhs });
    }
    Ok(trs)
}

/// Parses a system made of finite rules only.
pub fn parse_trs(text: &str) -> Result<Trs> {
    parse_trs_with(text, &|name| {
        Err(Error::Invalid(format!("cannot load `{name}`: no file context")))
    })
}

/// Prints finite rules; recognizable rules are listed as comments.
pub fn print_trs(trs: &Trs) -> String {
    let mut out = String::new();
    writeln!(out, "alphabet: {}", trs.alphabet).unwrap();
    let mut vars: BTreeSet<Symbol> = trs.vars.clone();
    for r in &trs.rules {
        vars.extend(r.lhs.vars());
        vars.extend(r.rhs.vars());
    }
    if !vars.is_empty() {
        let v: Vec<&str> = vars.iter().map(|s| &**s).collect();
        writeln!(out, "vars: {}", v.join(" ")).unwrap();
    }
    for r in &trs.rules {
        writeln!(out, "rule: {} -> {}", r.lhs, r.rhs).unwrap();
    }
    for (k, _) in trs.automaton_rules.iter().enumerate() {
        writeln!(out, "# recognizable rule {} not printed", k + 1).unwrap();
    }
    out
}

pub fn parse_automaton(text: &str) -> Result<TreeAutomaton> {
    let mut alphabet = None;
    let mut rest = Vec::new();
    for (n, line) in lines(text) {
        let (key, value) = key_value(n, line)?;
        if key == "alphabet" {
            alphabet = Some(RankedAlphabet::parse(value).map_err(at(n))?);
        } else {
            rest.push((n, key, value));
        }
    }
    let alphabet = alphabet.ok_or_else(|| Error::Format {
        line: 0,
        msg: "missing `alphabet:` line".into(),
    })?;
    let mut a = TreeAutomaton::new(alphabet);
    for (n, key, value) in rest {
        match key {
            "states" => {
                for q in value.split_whitespace() {
                    a.add_state(q);
                }
            }
            "initial" => {
                for q in value.split_whitespace() {
                    a.add_initial(q);
                }
            }
            "vars" => {
                for x in value.split_whitespace() {
                    a.add_var(x);
                }
            }
            "rule" => {
                let (head, children) = value.split_once("->").ok_or_else(|| Error::Format {
                    line: n,
                    msg: "expected `state symbol -> children`".into(),
                })?;
                let head: Vec<&str> = head.split_whitespace().collect();
                let [q, f] = head[..] else {
                    return Err(Error::Format {
                        line: n,
                        msg: "expected `state symbol` before `->`".into(),
                    });
                };
                let children: Vec<&str> = children.split_whitespace().collect();
                a.add_rule(q, f, &children).map_err(at(n))?;
            }
            other => {
                return Err(Error::Format {
                    line: n,
                    msg: format!("unknown key `{other}`"),
                })
            }
        }
    }
    Ok(a)
}

pub fn print_automaton(a: &TreeAutomaton) -> String {
    let mut out = String::new();
    writeln!(out, "alphabet: {}", a.alphabet).unwrap();
    let join = |s: &BTreeSet<Symbol>| s.iter().map(|q| &**q).collect::<Vec<_>>().join(" ");
    writeln!(out, "states: {}", join(&a.states)).unwrap();
    writeln!(out, "initial: {}", join(&a.initial)).unwrap();
    if !a.vars.is_empty() {
        writeln!(out, "vars: {}", join(&a.vars)).unwrap();
    }
    for AutomatonRule {
        state,
        symbol,
        children,
    } in &a.rules
    {
        let c: Vec<&str> = children.iter().map(|q| &**q).collect();
        if c.is_empty() {
            writeln!(out, "rule: {state} {symbol} ->").unwrap();
        } else {
            writeln!(out, "rule: {state} {symbol} -> {}", c.join(" ")).unwrap();
        }
    }
    out
}

/// `state p q`, `tape A B`, `trans p A -> q B +`; `_` reads the blank.
pub fn parse_tm(text: &str) -> Result<TuringMachine> {
    let mut m = TuringMachine::default();
    for (n, line) in lines(text) {
        let fail = |msg: String| Error::Format { line: n, msg };
        let mut words = line.split_whitespace();
        match words.next() {
            Some("state") => m.states.extend(words.map(sym)),
            Some("tape") => {
                for w in words {
                    if w == TM_BLANK {
                        return Err(fail(format!("`{TM_BLANK}` is the blank and cannot be declared")));
                    }
                    m.tape.push(sym(w));
                }
            }
            Some("trans") => {
                let w: Vec<&str> = words.collect();
                let [p, a, "->", q, b, d] = w[..] else {
                    return Err(fail("expected `trans p A -> q B +|-`".into()));
                };
                let dir = match d {
                    "+" => Move::Right,
                    "-" => Move::Left,
                    other => return Err(fail(format!("direction must be `+` or `-`, got `{other}`"))),
                };
                m.transitions.push(Transition {
                    from: sym(p),
                    read: (a != TM_BLANK).then(|| sym(a)),
                    to: sym(q),
                    write: sym(b),
                    dir,
                });
            }
            _ => return Err(fail(format!("unknown line `{line}`"))),
        }
    }
    Ok(m)
}
