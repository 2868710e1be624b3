use super::{is_hole_name, sym, RankedAlphabet, Term};
use crate::error::{Error, ParseErrorKind, Result};

/// Untyped parse tree: a name with an optional argument list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTree {
    pub name: String,
    pub offset: usize,
    pub args: Option<Vec<RawTree>>,
}

fn is_name_char(c: char) -> bool {
    !c.is_whitespace() && !"(),|".contains(c)
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, offset: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            offset,
            kind: ParseErrorKind::Syntax(msg.into()),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.text[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn tree(&mut self) -> Result<RawTree> {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.peek() {
            if is_name_char(c) {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        if self.pos == start {
            return Err(match self.peek() {
                Some(c) => self.err(start, format!("expected a name, found `{c}`")),
                None => self.err(start, "expected a name, found end of input"),
            });
        }
        let name = self.text[start..self.pos].to_string();
        self.skip_ws();
        if self.peek() != Some('(') {
            return Ok(RawTree {
                name,
                offset: start,
                args: None,
            });
        }
        self.pos += 1;
        let mut args = Vec::new();
        self.skip_ws();
        if self.peek() == Some(')') {
            self.pos += 1;
            return Ok(RawTree {
                name,
                offset: start,
                args: Some(args),
            });
        }
        loop {
            args.push(self.tree()?);
            self.skip_ws();
            match self.peek() {
                Some(',') => self.pos += 1,
                Some(')') => {
                    self.pos += 1;
                    break;
                }
                Some(c) => return Err(self.err(self.pos, format!("expected `,` or `)`, found `{c}`"))),
                None => return Err(self.err(self.pos, "unclosed `(`")),
            }
        }
        Ok(RawTree {
            name,
            offset: start,
            args: Some(args),
        })
    }
}

/// Parses `f(t1,...,tn)` syntax into an untyped tree; offsets are relative to `text`.
pub fn tokenize_tree(text: &str) -> Result<RawTree> {
    let mut p = Parser { text, pos: 0 };
    let tree = p.tree()?;
    p.skip_ws();
    if p.pos != text.len() {
        return Err(p.err(p.pos, "trailing input"));
    }
    Ok(tree)
}

/// Parses a term; names in `vars` are variables, everything else must be in the alphabet.
pub fn parse_term<S: AsRef<str>>(text: &str, alphabet: &RankedAlphabet, vars: &[S]) -> Result<Term> {
    let raw = tokenize_tree(text)?;
    to_term(&raw, alphabet, vars)
}

fn to_term<S: AsRef<str>>(raw: &RawTree, alphabet: &RankedAlphabet, vars: &[S]) -> Result<Term> {
    let err = |kind| Error::Parse {
        offset: raw.offset,
        kind,
    };
    if is_hole_name(&raw.name) {
        return Err(err(ParseErrorKind::ReservedName(raw.name.clone())));
    }
    let found = raw.args.as_ref().map_or(0, Vec::len);
    if vars.iter().any(|v| v.as_ref() == raw.name) {
        if raw.args.is_some() {
            return Err(err(ParseErrorKind::Syntax(format!(
                "variable `{}` cannot take arguments",
                raw.name
            ))));
        }
        return Ok(Term::Var(sym(&raw.name)));
    }
    match alphabet.arity(&raw.name) {
        None => Err(err(ParseErrorKind::UnknownSymbol(raw.name.clone()))),
        Some(expected) if expected != found => Err(err(ParseErrorKind::ArityMismatch {
            symbol: raw.name.clone(),
            expected,
            found,
        })),
        Some(_) => {
            let children = match &raw.args {
                None => Vec::new(),
                Some(args) => args
                    .iter()
                    .map(|a| to_term(a, alphabet, vars))
                    .collect::<Result<_>>()?,
            };
            Ok(Term::App(sym(&raw.name), children))
        }
    }
}

/// Splits on `sep` at parenthesis depth zero, returning `(byte offset, piece)`.
pub fn split_top_level(text: &str, sep: char) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push((start, &text[start..i]));
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    out.push((start, &text[start..]));
    out
}

/// Removes a `#` comment: a line whose first non-blank character is `#`, or a
/// `#` surrounded by whitespace. Symbol names such as `#0` or `B#1.2` survive.
pub fn strip_comment(line: &str) -> &str {
    if line.trim_start().starts_with('#') {
        return "";
    }
    let bytes: Vec<(usize, char)> = line.char_indices().collect();
    for (k, &(i, c)) in bytes.iter().enumerate() {
        if c != '#' {
            continue;
        }
        let before_ws = k == 0 || bytes[k - 1].1.is_whitespace();
        let after_ws = k + 1 == bytes.len() || bytes[k + 1].1.is_whitespace();
        if before_ws && after_ws {
            return &line[..i];
        }
    }
    line
}
