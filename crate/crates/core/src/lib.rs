//! Rational tree relations of rewriting systems.

pub mod automata;
pub mod classifier;
pub mod error;
pub mod formats;
pub mod grammar;
pub mod rewriting;
pub mod selfcheck;
pub mod suffix;
pub mod terms;
pub mod topdown;

pub use error::{Error, Result};
