//! Bounded enumeration of grammar languages.
//!
//! Tuples are built level by level in increasing cost. Cost is the total
//! size, or the pair (left size, right size) when every production keeps its
//! sides apart. A production without terminals can only refer to the level
//! being built through a single instance, so each level is closed by a
//! small fixpoint over those productions.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{BodyTerm, InstanceVar, Production, TupleGrammar};
use crate::error::{Error, Result};
use crate::terms::{Symbol, Term};

type Cost = [usize; 2];
type Tuple = Vec<Term>;

struct CompiledProduction {
    head: usize,
    body: Vec<BodyTerm>,
    terminal: Cost,
    /// Nonterminal index of each instance, in first-occurrence order.
    instances: Vec<usize>,
    slot: HashMap<(Symbol, usize), usize>,
    self_feeding: bool,
}

/// Precompiled enumerator for one grammar and axiom.
pub struct Enumerator<'g> {
    grammar: &'g TupleGrammar,
    names: Vec<Symbol>,
    /// `Some(p)` when costs are split after component `p` of each nonterminal.
    splits: Option<Vec<usize>>,
    productions: Vec<CompiledProduction>,
    axiom: usize,
}

impl<'g> Enumerator<'g> {
    pub fn new(grammar: &'g TupleGrammar, axiom: &str) -> Result<Self> {
        grammar.check()?;
        let reach = grammar.reachable_from(&crate::terms::sym(axiom));
        if grammar.nonterminal(axiom).is_none() {
            return Err(Error::Invalid(format!("unknown nonterminal `{axiom}`")));
        }
        let nts: Vec<_> = grammar.nonterminals.iter().filter(|n| reach.contains(&n.name)).collect();
        let names: Vec<Symbol> = nts.iter().map(|n| n.name.clone()).collect();
        let index: HashMap<&Symbol, usize> = names.iter().enumerate().map(|(i, n)| (n, i)).collect();
        let splits = grammar
            .is_side_respecting()
            .then(|| nts.iter().map(|n| n.split.map_or(n.arity, |s| s.0)).collect::<Vec<_>>());
        let mut productions = Vec::new();
        for p in &grammar.productions {
            let Some(&head) = index.get(&p.head) else { continue };
            let left = splits.as_ref().map_or(p.body.len(), |s| s[head]);
            let mut terminal = [0, 0];
            for (k, b) in p.body.iter().enumerate() {
                terminal[usize::from(k >= left)] += b.terminal_size();
            }
            let mut slot = HashMap::new();
            let mut instances = Vec::new();
            for key in p.instances() {
                slot.insert(key.clone(), instances.len());
                instances.push(index[&key.0]);
            }
            let nonnull = instances.iter().filter(|&&m| nts[m].arity > 0).count();
            productions.push(CompiledProduction {
                head,
                body: p.body.clone(),
                terminal,
                self_feeding: terminal == [0, 0] && nonnull <= 1,
                instances,
                slot,
            });
        }
        Ok(Enumerator {
            grammar,
            axiom: index[&crate::terms::sym(axiom)],
            names,
            splits,
            productions,
        })
    }

    pub fn grammar(&self) -> &TupleGrammar {
        self.grammar
    }

    pub fn is_split(&self) -> bool {
        self.splits.is_some()
    }

    /// All tuples of total size at most `max_size`.
    pub fn up_to(&self, max_size: usize) -> BTreeSet<Tuple> {
        match &self.splits {
            Some(_) => {
                // Enumerate on the diagonal-bounded grid and filter.
                self.run([max_size, max_size], Some(max_size))
            }
            None => self.run([max_size, 0], None),
        }
    }

    /// Tuples whose left part has size ≤ `left` and right part ≤ `right`.
    /// Needs a side-respecting grammar.
    pub fn up_to_sides(&self, left: usize, right: usize) -> Result<BTreeSet<Tuple>> {
        if self.splits.is_none() {
            return Err(Error::Invalid(
                "per-side bounds need every production to keep its sides apart".into(),
            ));
        }
        Ok(self.run([left, right], None))
    }

    fn cost_of(&self, nt: usize, tuple: &[Term]) -> Cost {
        match &self.splits {
            Some(s) => [
                tuple[..s[nt]].iter().map(Term::size).sum(),
                tuple[s[nt]..].iter().map(Term::size).sum(),
            ],
            None => [tuple.iter().map(Term::size).sum(), 0],
        }
    }

    fn run(&self, bound: Cost, total: Option<usize>) -> BTreeSet<Tuple> {
        let mut cells: Vec<Cost> = Vec::new();
        for a in 0..=bound[0] {
            for b in 0..=bound[1] {
                if total.is_none_or(|t| a + b <= t) {
                    cells.push([a, b]);
                }
            }
        }
        cells.sort_by_key(|c| (c[0] + c[1], c[0]));
        let mut table: Vec<HashMap<Cost, Vec<Tuple>>> = vec![HashMap::new(); self.names.len()];
        let mut seen: Vec<HashSet<Tuple>> = vec![HashSet::new(); self.names.len()];
        for cell in cells {
            let mut first = true;
            loop {
                let mut grown = false;
                for p in &self.productions {
                    if !first && !p.self_feeding {
                        continue;
                    }
                    if p.terminal[0] > cell[0] || p.terminal[1] > cell[1] {
                        continue;
                    }
                    let rest = [cell[0] - p.terminal[0], cell[1] - p.terminal[1]];
                    let mut produced = Vec::new();
                    self.combine(p, &table, rest, &mut Vec::new(), &mut produced);
                    for t in produced {
                        debug_assert_eq!(self.cost_of(p.head, &t), cell);
                        if seen[p.head].insert(t.clone()) {
                            table[p.head].entry(cell).or_default().push(t);
                            grown = true;
                        }
                    }
                }
                first = false;
                if !grown {
                    break;
                }
            }
        }
        table
            .swap_remove(self.axiom)
            .into_values()
            .flatten()
            .collect()
    }

    /// Chooses a cost cell for each instance so that they sum to `rest`,
    /// then builds every resulting tuple.
    fn combine<'t>(
        &self,
        p: &CompiledProduction,
        table: &'t [HashMap<Cost, Vec<Tuple>>],
        rest: Cost,
        chosen: &mut Vec<&'t [Tuple]>,
        out: &mut Vec<Tuple>,
    ) {
        let k = chosen.len();
        if k == p.instances.len() {
            if rest == [0, 0] {
                self.build(p, chosen, &mut Vec::new(), out);
            }
            return;
        }
        let m = p.instances[k];
        if k + 1 == p.instances.len() {
            if let Some(ts) = table[m].get(&rest) {
                chosen.push(ts);
                self.combine(p, table, [0, 0], chosen, out);
                chosen.pop();
            }
            return;
        }
        for (cost, ts) in &table[m] {
            if cost[0] <= rest[0] && cost[1] <= rest[1] && !ts.is_empty() {
                chosen.push(ts);
                self.combine(p, table, [rest[0] - cost[0], rest[1] - cost[1]], chosen, out);
                chosen.pop();
            }
        }
    }

    fn build(&self, p: &CompiledProduction, chosen: &[&[Tuple]], pick: &mut Vec<usize>, out: &mut Vec<Tuple>) {
        let k = pick.len();
        if k == chosen.len() {
            let value = |v: &InstanceVar| {
                let slot = p.slot[&(v.nt.clone(), v.instance)];
                chosen[slot][pick[slot]][v.component - 1].clone()
            };
            out.push(p.body.iter().map(|b| b.instantiate(&value)).collect());
            return;
        }
        for i in 0..chosen[k].len() {
            pick.push(i);
            self.build(p, chosen, pick, out);
            pick.pop();
        }
    }
}

impl TupleGrammar {
    /// Ground tuples derivable from `axiom` with total size ≤ `max_size`.
    pub fn enumerate_tuples(&self, axiom: &str, max_size: usize) -> Result<BTreeSet<Vec<Term>>> {
        Ok(Enumerator::new(self, axiom)?.up_to(max_size))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeriveOrder {
    Leftmost,
    Random(u64),
}

/// Naive enumeration by rewriting sentential forms, expanding one instance
/// at a time in the given order. Only meant as an independent check.
pub fn derive_enumerate(
    grammar: &TupleGrammar,
    axiom: &str,
    max_size: usize,
    order: DeriveOrder,
) -> Result<BTreeSet<Vec<Term>>> {
    grammar.check()?;
    let axiom_nt = grammar
        .nonterminal(axiom)
        .ok_or_else(|| Error::Invalid(format!("unknown nonterminal `{axiom}`")))?;
    let by_head = grammar.productions_by_head();
    let min_cost = min_costs(grammar);
    let mut rng = match order {
        DeriveOrder::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        DeriveOrder::Leftmost => None,
    };
    let start: Vec<BodyTerm> = (1..=axiom_nt.arity)
        .map(|j| BodyTerm::inst(&axiom_nt.name, 1, j))
        .collect();
    let mut seen: HashSet<Vec<BodyTerm>> = HashSet::from([start.clone()]);
    let mut stack = vec![start];
    let mut out = BTreeSet::new();
    while let Some(form) = stack.pop() {
        let instances = Production {
            head: axiom_nt.name.clone(),
            body: form.clone(),
        }
        .instances();
        if instances.is_empty() {
            out.insert(form.iter().map(|b| b.instantiate(&|_| unreachable!())).collect());
            continue;
        }
        let (nt, inst) = match rng.as_mut() {
            Some(r) => instances.choose(r).cloned().unwrap(),
            None => instances[0].clone(),
        };
        let next_id = form
            .iter()
            .flat_map(|b| b.instance_vars().into_iter().map(|v| v.instance))
            .max()
            .unwrap_or(0);
        for p in by_head.get(&nt).into_iter().flatten() {
            // Fresh instance ids for the production's own instances.
            let renumber: HashMap<(Symbol, usize), usize> = p
                .instances()
                .into_iter()
                .enumerate()
                .map(|(k, key)| (key, next_id + 1 + k))
                .collect();
            let body: Vec<BodyTerm> = p
                .body
                .iter()
                .map(|b| {
                    b.map_vars(&mut |v| BodyTerm::inst(&v.nt, renumber[&(v.nt.clone(), v.instance)], v.component))
                })
                .collect();
            let new: Vec<BodyTerm> = form
                .iter()
                .map(|b| {
                    b.map_vars(&mut |v| {
                        if v.nt == nt && v.instance == inst {
                            body[v.component - 1].clone()
                        } else {
                            BodyTerm::Inst(v.clone())
                        }
                    })
                })
                .collect();
            let new = canonical_form(&new);
            let bound: usize = new.iter().map(BodyTerm::terminal_size).sum::<usize>()
                + Production {
                    head: nt.clone(),
                    body: new.clone(),
                }
                .instances()
                .iter()
                .map(|(m, _)| min_cost.get(m).copied().unwrap_or(usize::MAX / 4))
                .sum::<usize>();
            if bound <= max_size && seen.insert(new.clone()) {
                stack.push(new);
            }
        }
    }
    Ok(out)
}

/// Renumbers instances per nonterminal in order of first occurrence.
fn canonical_form(form: &[BodyTerm]) -> Vec<BodyTerm> {
    let mut map: HashMap<(Symbol, usize), usize> = HashMap::new();
    let mut next: BTreeMap<Symbol, usize> = BTreeMap::new();
    form.iter()
        .map(|b| {
            b.map_vars(&mut |v| {
                let key = (v.nt.clone(), v.instance);
                let id = *map.entry(key).or_insert_with(|| {
                    let n = next.entry(v.nt.clone()).or_insert(0);
                    *n += 1;
                    *n
                });
                BodyTerm::inst(&v.nt, id, v.component)
            })
        })
        .collect()
}

/// Least total size of a tuple derivable from each productive nonterminal.
pub(crate) fn min_costs(grammar: &TupleGrammar) -> BTreeMap<Symbol, usize> {
    let mut best: BTreeMap<Symbol, usize> = BTreeMap::new();
    loop {
        let mut changed = false;
        for p in &grammar.productions {
            let mut total = p.terminal_size();
            let mut ok = true;
            for (m, _) in p.instances() {
                match best.get(&m) {
                    Some(c) => total += c,
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok && best.get(&p.head).is_none_or(|&c| total < c) {
                best.insert(p.head.clone(), total);
                changed = true;
            }
        }
        if !changed {
            return best;
        }
    }
}
