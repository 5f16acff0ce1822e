//! Probabilistic bisimilarity by partition refinement, and a sampling probe
//! for the congruence property.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dist::{FiniteDistribution, Q};
use crate::rules::Ptss;
use crate::semantics::TransitionRelation;
use crate::syntax::render_term;
use crate::terms::{Sym, Term};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum BisimError {
    #[error("state {0:?} is not in the partition")]
    UnknownState(Term),
}

/// Blocks ordered by their least state; ids follow that order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    block_of: BTreeMap<Term, usize>,
    blocks: Vec<Vec<Term>>,
}

impl Partition {
    /// Group `states` by `key`, normalising block order.
    pub fn by_key<K: Ord>(states: impl IntoIterator<Item = Term>, key: impl Fn(&Term) -> K) -> Partition {
        let mut groups: BTreeMap<K, BTreeSet<Term>> = BTreeMap::new();
        for t in states {
            groups.entry(key(&t)).or_default().insert(t);
        }
        Partition::from_blocks(groups.into_values().map(|b| b.into_iter().collect()).collect())
    }

    pub fn from_blocks(blocks: Vec<Vec<Term>>) -> Partition {
        let mut blocks: Vec<Vec<Term>> = blocks
            .into_iter()
            .filter(|b| !b.is_empty())
            .map(|mut b| {
                b.sort();
                b.dedup();
                b
            })
            .collect();
        blocks.sort();
        let block_of = blocks.iter().enumerate().flat_map(|(i, b)| b.iter().map(move |t| (t.clone(), i))).collect();
        Partition { block_of, blocks }
    }

    pub fn single(states: impl IntoIterator<Item = Term>) -> Partition {
        Partition::by_key(states, |_| ())
    }

    pub fn block(&self, t: &Term) -> Option<usize> {
        self.block_of.get(t).copied()
    }

    pub fn blocks(&self) -> &[Vec<Term>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn states(&self) -> impl Iterator<Item = &Term> {
        self.block_of.keys()
    }

    pub fn same(&self, a: &Term, b: &Term) -> bool {
        matches!((self.block(a), self.block(b)), (Some(x), Some(y)) if x == y)
    }
}

/// Mass per block.
fn block_mass(pi: &FiniteDistribution, part: &Partition) -> Result<BTreeMap<usize, Q>, BisimError> {
    let mut m: BTreeMap<usize, Q> = BTreeMap::new();
    for (t, p) in pi.iter() {
        let b = part.block(t).ok_or_else(|| BisimError::UnknownState(t.clone()))?;
        *m.entry(b).or_insert_with(num::zero) += p;
    }
    Ok(m)
}

/// `π R π′` for the equivalence `part`: equal mass on every block.
pub fn lift(pi1: &FiniteDistribution, pi2: &FiniteDistribution, part: &Partition) -> Result<bool, BisimError> {
    Ok(block_mass(pi1, part)? == block_mass(pi2, part)?)
}

type Observation = BTreeMap<Sym, BTreeSet<BTreeMap<usize, Q>>>;

fn observe(tr: &TransitionRelation, t: &Term, part: &Partition) -> Observation {
    let mut o = Observation::new();
    for (s, a, pi) in tr.iter() {
        if s == t {
            let m = block_mass(pi, part).expect("states cover every support");
            o.entry(a.clone()).or_default().insert(m);
        }
    }
    o
}

/// Coarsest bisimulation on `states` (extended with every state of `tr`).
pub fn bisimilarity_on(tr: &TransitionRelation, states: &[Term]) -> Partition {
    let mut all: BTreeSet<Term> = states.iter().cloned().collect();
    all.extend(tr.states());
    let mut part = Partition::single(all.iter().cloned());
    loop {
        let obs: BTreeMap<&Term, (usize, Observation)> =
            all.iter().map(|t| (t, (part.block(t).unwrap(), observe(tr, t, &part)))).collect();
        let next = Partition::by_key(all.iter().cloned(), |t| obs[t].clone());
        if next.len() == part.len() {
            return part;
        }
        part = next;
    }
}

pub fn bisimilarity(tr: &TransitionRelation) -> Partition {
    bisimilarity_on(tr, &[])
}

/// States whose every reachable state is in `u`: the bounded relation
/// describes them completely.
pub fn complete_states(tr: &TransitionRelation, u: &[Term]) -> BTreeSet<Term> {
    let inside: BTreeSet<&Term> = u.iter().collect();
    let mut bad: BTreeSet<Term> = BTreeSet::new();
    for (_, _, pi) in tr.iter() {
        bad.extend(pi.support().filter(|t| !inside.contains(t)).cloned());
    }
    // Anything that can step into a bad state is bad too.
    loop {
        let mut grew = false;
        for (s, _, pi) in tr.iter() {
            if !bad.contains(s) && pi.support().any(|t| bad.contains(t)) {
                bad.insert(s.clone());
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }
    u.iter().filter(|t| !bad.contains(*t)).cloned().collect()
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub left: String,
    pub right: String,
    pub context_left: String,
    pub context_right: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CongruenceReport {
    pub samples: usize,
    /// Samples whose context instances lie in the complete part of the universe.
    pub checked: usize,
    pub skipped: usize,
    pub counterexamples: Vec<Counterexample>,
    pub note: String,
}

/// Sample bisimilar pairs and one-layer contexts, and test that the filled
/// contexts stay bisimilar.
pub fn congruence_probe(p: &Ptss, tr: &TransitionRelation, u: &[Term], samples: usize, seed: u64) -> CongruenceReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let part = bisimilarity_on(tr, u);
    let complete = complete_states(tr, u);
    let ok: Vec<Term> = complete.iter().cloned().collect();
    let funs: Vec<_> = p.sig.funs.values().filter(|f| f.arity > 0).collect();
    let mut rep = CongruenceReport { samples, ..Default::default() };
    if ok.is_empty() || funs.is_empty() {
        rep.skipped = samples;
        rep.note = "no context or no complete state to sample".into();
        return rep;
    }
    // Holes take terms one level below the universe bound so contexts fit.
    let top = u.iter().map(Term::depth).max().unwrap_or(0);
    let inner: Vec<Term> = ok.iter().filter(|t| t.depth() < top).cloned().collect();
    let pool = if inner.is_empty() { &ok } else { &inner };
    for _ in 0..samples {
        let t = pool.choose(&mut rng).unwrap().clone();
        let mates: Vec<&Term> = pool.iter().filter(|s| part.same(s, &t) && **s != t).collect();
        let t2 = mates.choose(&mut rng).map(|s| (*s).clone()).unwrap_or_else(|| t.clone());
        let f = funs.choose(&mut rng).unwrap();
        let hole = rng.gen_range(0..f.arity);
        let others: Vec<Term> = (0..f.arity).map(|_| pool.choose(&mut rng).unwrap().clone()).collect();
        let fill = |x: &Term| {
            let mut args = others.clone();
            args[hole] = x.clone();
            Term::App(f.name.clone(), args)
        };
        let (c1, c2) = (fill(&t), fill(&t2));
        if !complete.contains(&c1) || !complete.contains(&c2) {
            rep.skipped += 1;
            continue;
        }
        rep.checked += 1;
        if !part.same(&c1, &c2) {
            rep.counterexamples.push(Counterexample {
                left: render_term(&p.sig, &t),
                right: render_term(&p.sig, &t2),
                context_left: render_term(&p.sig, &c1),
                context_right: render_term(&p.sig, &c2),
            });
        }
    }
    rep.note = if rep.counterexamples.is_empty() {
        format!("no counterexample within bound ({} checked, {} outside the universe)", rep.checked, rep.skipped)
    } else {
        format!("{} counterexamples", rep.counterexamples.len())
    };
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::q;
    use crate::terms::sym;

    fn c(x: &str) -> Term {
        Term::cst(x)
    }

    #[test]
    fn lift_compares_block_masses() {
        let pi = FiniteDistribution::from_pairs([(c("a"), q(1, 2)), (c("b"), q(1, 2))]).unwrap();
        let da = FiniteDistribution::dirac(c("a"));
        let one = Partition::single([c("a"), c("b")]);
        let two = Partition::from_blocks(vec![vec![c("a")], vec![c("b")]]);
        assert!(lift(&pi, &da, &one).unwrap());
        assert!(!lift(&pi, &da, &two).unwrap());
        assert!(lift(&da, &da, &two).unwrap());
        assert_eq!(lift(&da, &da, &Partition::single([c("b")])), Err(BisimError::UnknownState(c("a"))));
    }

    #[test]
    fn refinement_separates_by_observations() {
        let tr = TransitionRelation::new();
        assert_eq!(bisimilarity_on(&tr, &[c("a"), c("b")]).len(), 1);
        let mut tr = TransitionRelation::new();
        tr.insert(c("a"), sym("go"), FiniteDistribution::dirac(c("b")));
        tr.insert(c("c"), sym("go"), FiniteDistribution::dirac(c("b")));
        let p = bisimilarity_on(&tr, &[c("d")]);
        assert!(p.same(&c("a"), &c("c")) && p.same(&c("b"), &c("d")) && !p.same(&c("a"), &c("b")));
    }
}
