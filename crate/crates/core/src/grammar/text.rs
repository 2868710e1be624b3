//! The line-oriented grammar file format.

use std::collections::BTreeMap;
use std::fmt;

use super::{BodyTerm, InstanceVar, NonTerminal, Production, TupleGrammar};
use crate::error::{Error, Result};
use crate::terms::{split_top_level, strip_comment, sym, tokenize_tree, RankedAlphabet, RawTree, Symbol};

/// `N#i.j`, if `name` has that shape.
pub(crate) fn parse_instance_var(name: &str) -> Option<(&str, usize, usize)> {
    let (nt, rest) = name.rsplit_once('#')?;
    let (i, j) = rest.split_once('.')?;
    if nt.is_empty() || !i.bytes().all(|b| b.is_ascii_digit()) || !j.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some((nt, i.parse().ok()?, j.parse().ok()?))
}

fn to_body(raw: &RawTree, line: usize, used: &mut BTreeMap<String, usize>) -> Result<BodyTerm> {
    let fail = |msg: String| Error::Format { line, msg };
    if let Some((nt, i, j)) = parse_instance_var(&raw.name) {
        if raw.args.is_some() {
            return Err(fail(format!("instance variable `{}` cannot take arguments", raw.name)));
        }
        if i == 0 || j == 0 {
            return Err(fail(format!("instance and component indices start at 1 in `{}`", raw.name)));
        }
        return Ok(BodyTerm::Inst(InstanceVar {
            nt: sym(nt),
            instance: i,
            component: j,
        }));
    }
    let children: Vec<BodyTerm> = raw
        .args
        .iter()
        .flatten()
        .map(|a| to_body(a, line, used))
        .collect::<Result<_>>()?;
    match used.get(&raw.name) {
        Some(&n) if n != children.len() => {
            return Err(fail(format!("terminal `{}` used with arities {n} and {}", raw.name, children.len())))
        }
        _ => {
            used.insert(raw.name.clone(), children.len());
        }
    }
    Ok(BodyTerm::App(sym(&raw.name), children))
}

fn parse_side(text: &str, line: usize, used: &mut BTreeMap<String, usize>) -> Result<Vec<BodyTerm>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    split_top_level(text, ',')
        .into_iter()
        .map(|(_, piece)| {
            let raw = tokenize_tree(piece.trim()).map_err(|e| Error::Format {
                line,
                msg: e.to_string(),
            })?;
            to_body(&raw, line, used)
        })
        .collect()
}

impl TupleGrammar {
    /// Reads the grammar file format. Without an `alphabet:` line the
    /// terminal arities are inferred from their uses.
    pub fn parse(text: &str) -> Result<TupleGrammar> {
        let mut alphabet: Option<RankedAlphabet> = None;
        let mut nonterminals = Vec::new();
        let mut axiom: Option<Symbol> = None;
        let mut raw_prods = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let line_no = k + 1;
            let line = strip_comment(line).trim();
            if line.is_empty() {
                continue;
            }
            let fail = |msg: String| Error::Format { line: line_no, msg };
            let (key, rest) = line
                .split_once(':')
                .ok_or_else(|| fail(format!("expected `key: value`, got `{line}`")))?;
            let rest = rest.trim();
            match key.trim() {
                "alphabet" => {
                    alphabet = Some(RankedAlphabet::parse(rest).map_err(|e| fail(e.to_string()))?);
                }
                "nonterminal" => nonterminals.push(parse_nonterminal(rest).map_err(fail)?),
                "axiom" => {
                    if axiom.is_some() {
                        return Err(fail("second axiom".into()));
                    }
                    axiom = Some(sym(rest));
                }
                "prod" => raw_prods.push((line_no, rest.to_string())),
                other => return Err(fail(format!("unknown key `{other}`"))),
            }
        }
        let axiom = axiom.ok_or_else(|| Error::Format {
            line: 0,
            msg: "missing `axiom:` line".into(),
        })?;
        let splits: BTreeMap<Symbol, Option<(usize, usize)>> =
            nonterminals.iter().map(|n: &NonTerminal| (n.name.clone(), n.split)).collect();
        let mut used = BTreeMap::new();
        let mut productions = Vec::new();
        for (line, rest) in raw_prods {
            let fail = |msg: String| Error::Format { line, msg };
            let (head, body) = rest
                .split_once("->")
                .ok_or_else(|| fail("expected `head -> body`".into()))?;
            let head = sym(head.trim());
            let sides = split_top_level(body, '|');
            let body = match sides.as_slice() {
                [(_, all)] => parse_side(all, line, &mut used)?,
                [(_, left), (_, right)] => {
                    let mut l = parse_side(left, line, &mut used)?;
                    if let Some(Some((p, _))) = splits.get(&head) {
                        if l.len() != *p {
                            return Err(fail(format!(
                                "left side has {} trees but `{head}` splits {p} on the left",
                                l.len()
                            )));
                        }
                    }
                    l.extend(parse_side(right, line, &mut used)?);
                    l
                }
                _ => return Err(fail("more than one `|`".into())),
            };
            productions.push(Production { head, body });
        }
        let alphabet = match alphabet {
            Some(a) => a,
            None => RankedAlphabet::new(used.iter().map(|(n, a)| (n.as_str(), *a)))?,
        };
        let mut g = TupleGrammar {
            alphabet,
            nonterminals: Vec::new(),
            productions: Vec::new(),
            axiom,
            notes: BTreeMap::new(),
        };
        for nt in nonterminals {
            g.add_nonterminal(nt)?;
        }
        for p in productions {
            g.add_production(p);
        }
        Ok(g)
    }
}

fn parse_nonterminal(text: &str) -> std::result::Result<NonTerminal, String> {
    let words: Vec<&str> = text.split_whitespace().collect();
    let (name, arity) = words
        .first()
        .and_then(|w| w.rsplit_once('/'))
        .ok_or_else(|| format!("expected `Name/arity`, got `{text}`"))?;
    let arity: usize = arity.parse().map_err(|_| format!("bad arity in `{text}`"))?;
    let split = match &words[1..] {
        [] => None,
        ["split", p, q] => Some((
            p.parse().map_err(|_| format!("bad split in `{text}`"))?,
            q.parse().map_err(|_| format!("bad split in `{text}`"))?,
        )),
        _ => return Err(format!("expected `split p q` after the arity in `{text}`")),
    };
    Ok(NonTerminal::new(name, arity, split))
}

fn join(trees: &[BodyTerm]) -> String {
    trees.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

impl fmt::Display for TupleGrammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let symbols: Vec<String> = self.alphabet.iter().map(|(s, a)| format!("{s}/{a}")).collect();
        writeln!(f, "alphabet: {}", symbols.join(" "))?;
        for nt in &self.nonterminals {
            if let Some(note) = self.notes.get(&nt.name) {
                writeln!(f, "# {} = {}", nt.name, note)?;
            }
            match nt.split {
                Some((p, q)) => writeln!(f, "nonterminal: {}/{} split {p} {q}", nt.name, nt.arity)?,
                None => writeln!(f, "nonterminal: {}/{}", nt.name, nt.arity)?,
            }
        }
        writeln!(f, "axiom: {}", self.axiom)?;
        let splits: BTreeMap<&Symbol, Option<(usize, usize)>> =
            self.nonterminals.iter().map(|n| (&n.name, n.split)).collect();
        for p in &self.productions {
            match splits.get(&p.head).copied().flatten() {
                Some((l, _)) if l <= p.body.len() => {
                    let left = join(&p.body[..l]);
                    let right = join(&p.body[l..]);
                    let sep = |s: &str| if s.is_empty() { String::new() } else { format!(" {s}") };
                    writeln!(f, "prod: {} ->{} |{}", p.head, sep(&left), sep(&right))?;
                }
                _ => writeln!(f, "prod: {} -> {}", p.head, join(&p.body))?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::G1;
    use super::*;

    #[test]
    fn round_trip() {
        let g = TupleGrammar::parse(G1).unwrap();
        assert_eq!(g.nonterminals.len(), 2);
        assert_eq!(g.productions.len(), 6);
        assert_eq!(g.alphabet.arity("f"), Some(2));
        let again = TupleGrammar::parse(&g.to_string()).unwrap();
        assert_eq!(again, g);
    }

    #[test]
    fn empty_side() {
        let g = TupleGrammar::parse("nonterminal: Ip/1 split 1 0\naxiom: Ip\nprod: Ip -> g(Ip#1.1) |\nprod: Ip -> a |\n")
            .unwrap();
        assert_eq!(g.productions[0].body.len(), 1);
        assert!(g.to_string().contains("prod: Ip -> g(Ip#1.1) |\n"));
        assert!(g.validate().is_empty());
    }

    #[test]
    fn instance_variable_syntax() {
        assert_eq!(parse_instance_var("B#1.3"), Some(("B", 1, 3)));
        assert_eq!(parse_instance_var("N@q1.q2#2.1"), Some(("N@q1.q2", 2, 1)));
        assert_eq!(parse_instance_var("#0"), None);
        assert_eq!(parse_instance_var("B#1"), None);
    }

    #[test]
    fn rejects_wrong_left_count() {
        let e = TupleGrammar::parse("nonterminal: A/2 split 1 1\naxiom: A\nprod: A -> a, a |\n").unwrap_err();
        assert!(matches!(e, Error::Format { line: 3, .. }), "{e}");
    }
}
