use std::fmt;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnknownSymbol(String),
    ArityMismatch {
        symbol: String,
        expected: usize,
        found: usize,
    },
    ReservedName(String),
    Syntax(String),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::UnknownSymbol(s) => write!(f, "unknown symbol `{s}`"),
            ParseErrorKind::ArityMismatch {
                symbol,
                expected,
                found,
            } => write!(
                f,
                "symbol `{symbol}` has arity {expected} but is applied to {found} argument(s)"
            ),
            ParseErrorKind::ReservedName(s) => write!(f, "`{s}` is a reserved name"),
            ParseErrorKind::Syntax(s) => write!(f, "syntax error: {s}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{kind} at byte {offset}")]
    Parse { offset: usize, kind: ParseErrorKind },
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("invalid alphabet: {0}")]
    Alphabet(String),
    #[error("invalid position {0}")]
    InvalidPosition(String),
    #[error("term is not linear (variable `{0}` occurs more than once)")]
    NonLinear(String),
    #[error("term `{0}` is not ground")]
    NonGround(String),
    #[error("{0} does not support recognizable (automaton-pair) rules")]
    RecognizableUnsupported(&'static str),
    #[error("system is not {class}: {witness}")]
    ClassVeto { class: String, witness: String },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("nonterminal `{0}` has no projection split")]
    NoSplit(String),
    #[error("state `{state}` has several variable boundaries: {first} and {second}")]
    NonSingletonBoundary {
        state: String,
        first: String,
        second: String,
    },
    #[error("more than {0} nonterminals were generated; raise RATRW_MAX_NONTERMINALS to continue")]
    NonterminalCap(usize),
    #[error("{0}")]
    Invalid(String),
}
