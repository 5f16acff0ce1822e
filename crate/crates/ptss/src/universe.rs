//! Bounded closed-term universes.

use std::collections::BTreeSet;

use crate::dist::FiniteDistribution;
use crate::terms::{Signature, Term};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UniverseSpec {
    pub init: Vec<Term>,
    pub depth: usize,
}

/// Closed terms of depth at most `depth` (constants have depth 1), plus the
/// `init` terms and all their subterms.
pub fn universe(sig: &Signature, depth: usize, init: &[Term]) -> Vec<Term> {
    let mut layer: BTreeSet<Term> = BTreeSet::new();
    for _ in 0..depth {
        let prev: Vec<Term> = layer.iter().cloned().collect();
        let mut next = BTreeSet::new();
        for f in sig.funs.values() {
            for args in tuples(&prev, f.arity) {
                next.insert(Term::App(f.name.clone(), args));
            }
        }
        if next.len() == layer.len() {
            break;
        }
        layer = next;
    }
    for t in init {
        t.subterms_into(&mut layer);
    }
    layer.into_iter().collect()
}

pub fn from_spec(sig: &Signature, spec: Option<&UniverseSpec>, depth_override: Option<usize>) -> Vec<Term> {
    match (spec, depth_override) {
        (_, Some(d)) => universe(sig, d, spec.map(|s| s.init.as_slice()).unwrap_or(&[])),
        (Some(s), None) => universe(sig, s.depth, &s.init),
        (None, None) => universe(sig, 1, &[]),
    }
}

/// Every tuple of length `n` over `items`.
pub fn tuples(items: &[Term], n: usize) -> Vec<Vec<Term>> {
    let mut out: Vec<Vec<Term>> = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::with_capacity(out.len() * items.len());
        for t in &out {
            for it in items {
                let mut v = t.clone();
                v.push(it.clone());
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// Diracs on the universe: the range of free distribution variables.
pub fn dirac_universe(u: &[Term]) -> Vec<FiniteDistribution> {
    u.iter().cloned().map(FiniteDistribution::dirac).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig() -> Signature {
        let mut s = Signature::new();
        s.add_fun("a", 0, None);
        s.add_fun("plus", 2, Some("+"));
        s
    }

    #[test]
    fn depth_counts() {
        assert_eq!(universe(&sig(), 0, &[]).len(), 0);
        assert_eq!(universe(&sig(), 1, &[]).len(), 1);
        assert_eq!(universe(&sig(), 2, &[]).len(), 2);
        assert_eq!(universe(&sig(), 3, &[]).len(), 5);
    }

    #[test]
    fn init_terms_bring_subterms() {
        let big = Term::app("plus", vec![Term::cst("a"), Term::app("plus", vec![Term::cst("a"), Term::cst("a")])]);
        let u = universe(&sig(), 1, std::slice::from_ref(&big));
        assert_eq!(u.len(), 3);
        assert!(u.contains(&big));
    }
}
