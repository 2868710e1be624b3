//! Explicit finite tuple languages with substitution product and its
//! bounded iteration.
//!
//! Tuples may contain variables. A variable `x.k` is the `k`-th instance of
//! `x`; a bare `x` is instance 0. Substituting a word of variables replaces
//! each instance independently, so `f(x1, x2.1)` ·ₓ M picks two members of M.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::error::{Error, Result};
use crate::terms::{sym, Symbol, Term};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TupleLanguage {
    width: usize,
    tuples: BTreeSet<Vec<Term>>,
}

/// Splits `x.k` into `(x, k)`; bare names are instance 0.
fn instance_of(v: &str) -> (&str, usize) {
    if let Some((base, k)) = v.rsplit_once('.') {
        if !base.is_empty() && !k.is_empty() && k.bytes().all(|b| b.is_ascii_digit()) {
            if let Ok(k) = k.parse() {
                return (base, k);
            }
        }
    }
    (v, 0)
}

fn with_instance(base: &str, k: usize) -> Symbol {
    if k == 0 {
        sym(base)
    } else {
        sym(&format!("{base}.{k}"))
    }
}

fn instance_ids(word: &[Term], out: &mut Vec<usize>) {
    for t in word {
        for v in t.var_occurrences() {
            let k = instance_of(&v).1;
            if !out.contains(&k) {
                out.push(k);
            }
        }
    }
}

/// Renumbers instance ids by first occurrence, starting from 0.
fn canonical(word: Vec<Term>) -> Vec<Term> {
    let mut order = Vec::new();
    instance_ids(&word, &mut order);
    let pos: HashMap<usize, usize> = order.iter().enumerate().map(|(i, &k)| (k, i)).collect();
    let rename: HashMap<Symbol, Symbol> = word
        .iter()
        .flat_map(Term::var_occurrences)
        .map(|v| {
            let (base, k) = instance_of(&v);
            let to = with_instance(base, pos[&k]);
            (v, to)
        })
        .collect();
    word.iter().map(|t| t.rename_vars(&rename)).collect()
}

impl TupleLanguage {
    pub fn new(width: usize) -> Self {
        TupleLanguage {
            width,
            tuples: BTreeSet::new(),
        }
    }

    pub fn from_tuples(width: usize, tuples: impl IntoIterator<Item = Vec<Term>>) -> Result<Self> {
        let mut l = TupleLanguage::new(width);
        for t in tuples {
            l.insert(t)?;
        }
        Ok(l)
    }

    pub fn insert(&mut self, tuple: Vec<Term>) -> Result<bool> {
        if tuple.len() != self.width {
            return Err(Error::Dimension {
                expected: self.width,
                found: tuple.len(),
            });
        }
        Ok(self.tuples.insert(canonical(tuple)))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<Term>> {
        self.tuples.iter()
    }

    pub fn contains(&self, tuple: &[Term]) -> bool {
        self.tuples.contains(&canonical(tuple.to_vec()))
    }

    pub fn is_subset(&self, other: &TupleLanguage) -> bool {
        self.tuples.is_subset(&other.tuples)
    }

    pub fn union(&self, other: &TupleLanguage) -> Result<TupleLanguage> {
        if self.width != other.width {
            return Err(Error::Dimension {
                expected: self.width,
                found: other.width,
            });
        }
        Ok(TupleLanguage {
            width: self.width,
            tuples: self.tuples.union(&other.tuples).cloned().collect(),
        })
    }

    /// Drops tuples whose total size exceeds `max_size`.
    pub fn truncate(&self, max_size: usize) -> TupleLanguage {
        TupleLanguage {
            width: self.width,
            tuples: self
                .tuples
                .iter()
                .filter(|w| w.iter().map(Term::size).sum::<usize>() <= max_size)
                .cloned()
                .collect(),
        }
    }
}

impl fmt::Display for TupleLanguage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for w in &self.tuples {
            writeln!(f, "{}", crate::terms::format_word(w))?;
        }
        Ok(())
    }
}

/// L ·ₓ M: every instance of the variable word `x` in a member of `l` is
/// replaced by a member of `m`, chosen independently per instance.
pub fn subst_product(l: &TupleLanguage, x: &[Symbol], m: &TupleLanguage) -> Result<TupleLanguage> {
    subst_bounded(l, x, m, None)
}

fn subst_bounded(l: &TupleLanguage, x: &[Symbol], m: &TupleLanguage, max_size: Option<usize>) -> Result<TupleLanguage> {
    if x.len() != m.width {
        return Err(Error::Dimension {
            expected: x.len(),
            found: m.width,
        });
    }
    let members: Vec<&Vec<Term>> = m.tuples.iter().collect();
    let mut out = TupleLanguage::new(l.width);
    for w in &l.tuples {
        // Instances of x present in w, in first-occurrence order.
        let mut present: Vec<usize> = Vec::new();
        let mut all = Vec::new();
        for t in w {
            for v in t.var_occurrences() {
                let (base, k) = instance_of(&v);
                if x.iter().any(|xi| &**xi == base) && !present.contains(&k) {
                    present.push(k);
                }
            }
        }
        instance_ids(w, &mut all);
        let next = all.iter().max().map_or(0, |k| k + 1);
        let mut choice = vec![0usize; present.len()];
        if !present.is_empty() && members.is_empty() {
            continue;
        }
        loop {
            // Member `choice[i]` for instance `present[i]`; its own instances
            // move to ids above everything used in w.
            let mut offset = next;
            let mut sigma: HashMap<Symbol, Term> = HashMap::new();
            for (i, &k) in present.iter().enumerate() {
                let member = members[choice[i]];
                let mut ids = Vec::new();
                instance_ids(member, &mut ids);
                let shift: HashMap<usize, usize> = ids.iter().enumerate().map(|(j, &id)| (id, offset + j)).collect();
                offset += ids.len();
                for (xi, mt) in x.iter().zip(member) {
                    let rename: HashMap<Symbol, Symbol> = mt
                        .var_occurrences()
                        .into_iter()
                        .map(|v| {
                            let (base, id) = instance_of(&v);
                            let to = with_instance(base, shift[&id]);
                            (v, to)
                        })
                        .collect();
                    sigma.insert(with_instance(xi, k), mt.rename_vars(&rename));
                }
            }
            let image: Vec<Term> = w.iter().map(|t| replace_vars(t, &sigma)).collect();
            if max_size.is_none_or(|b| image.iter().map(Term::size).sum::<usize>() <= b) {
                out.insert(image)?;
            }
            // Next choice vector.
            let mut i = 0;
            while i < choice.len() {
                choice[i] += 1;
                if choice[i] < members.len() {
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
            if i == choice.len() {
                break;
            }
        }
    }
    Ok(out)
}

fn replace_vars(t: &Term, sigma: &HashMap<Symbol, Term>) -> Term {
    match t {
        Term::Var(v) => sigma.get(v).cloned().unwrap_or_else(|| t.clone()),
        Term::App(f, c) => Term::App(f.clone(), c.iter().map(|s| replace_vars(s, sigma)).collect()),
    }
}

/// L^{*ₓ} truncated at `max_size`: the union of L⁰ = {x}, L¹ = L, and
/// Lⁿ⁺¹ = Lⁿ ·ₓ L, iterated until no new tuple of size ≤ `max_size` appears.
pub fn iterate_subst(l: &TupleLanguage, x: &[Symbol], max_size: usize) -> Result<TupleLanguage> {
    if x.len() != l.width {
        return Err(Error::Dimension {
            expected: x.len(),
            found: l.width,
        });
    }
    let identity: Vec<Term> = x.iter().map(|v| Term::Var(v.clone())).collect();
    let mut result = TupleLanguage::new(l.width);
    result.insert(identity)?;
    let mut frontier = result.clone();
    loop {
        let next = subst_bounded(&frontier, x, l, Some(max_size))?;
        let mut fresh = TupleLanguage::new(l.width);
        for w in next.tuples {
            if !result.tuples.contains(&w) {
                result.tuples.insert(w.clone());
                fresh.tuples.insert(w);
            }
        }
        if fresh.is_empty() {
            return Ok(result.truncate(max_size));
        }
        frontier = fresh;
    }
}
