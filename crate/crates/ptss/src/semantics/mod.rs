//! Satisfaction, supported models, stratified models, proof structures and
//! well-supported proofs over bounded universes.

pub mod instance;
pub mod model;
pub mod proof;
pub mod ws;

use std::collections::{BTreeMap, BTreeSet};

use crate::dist::{eval_dist, mass, DistError, FiniteDistribution};
use crate::rules::{Literal, Rule, WSet};
use crate::terms::{Substitution, Sym, Term};

pub use instance::{instances, Bounds, Instance, Oracle};
pub use model::{
    build_stratified_model, check_stratification, default_model, check_supported_model, supported_models, StrataReport,
    SupportReport,
};
pub use proof::{match_proof_structure, provable_closure, provable_rule_of, Link, ProofStructure};
pub use ws::{check_complete_consistent, ws_prove, WsProof, WsResult, WsSets};

/// A closed transition `t -a-> π`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transition {
    pub src: Term,
    pub label: Sym,
    pub target: FiniteDistribution,
}

/// A set of transitions indexed by source and label.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TransitionRelation {
    map: BTreeMap<Term, BTreeMap<Sym, BTreeSet<FiniteDistribution>>>,
}

impl TransitionRelation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, src: Term, label: Sym, pi: FiniteDistribution) -> bool {
        self.map.entry(src).or_default().entry(label).or_default().insert(pi)
    }

    pub fn insert_tr(&mut self, t: Transition) -> bool {
        self.insert(t.src, t.label, t.target)
    }

    pub fn contains(&self, src: &Term, label: &str, pi: &FiniteDistribution) -> bool {
        self.map.get(src).and_then(|m| m.get(label)).is_some_and(|s| s.contains(pi))
    }

    pub fn targets(&self, src: &Term, label: &str) -> impl Iterator<Item = &FiniteDistribution> {
        self.map.get(src).and_then(|m| m.get(label)).into_iter().flatten()
    }

    /// Some transition `src -label->` exists.
    pub fn enabled(&self, src: &Term, label: &str) -> bool {
        self.targets(src, label).next().is_some()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Term, &Sym, &FiniteDistribution)> {
        self.map.iter().flat_map(|(t, m)| m.iter().flat_map(move |(a, s)| s.iter().map(move |pi| (t, a, pi))))
    }

    pub fn transitions(&self) -> Vec<Transition> {
        self.iter()
            .map(|(t, a, pi)| Transition { src: t.clone(), label: a.clone(), target: pi.clone() })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.iter().count()
    }

    pub fn is_empty(&self) -> bool {
        self.map.values().all(|m| m.values().all(BTreeSet::is_empty))
    }

    pub fn sources(&self) -> impl Iterator<Item = &Term> {
        self.map.keys()
    }

    /// Sources together with every term in the support of a target.
    pub fn states(&self) -> BTreeSet<Term> {
        let mut out: BTreeSet<Term> = self.map.keys().cloned().collect();
        for (_, _, pi) in self.iter() {
            out.extend(pi.support().cloned());
        }
        out
    }
}

impl FromIterator<Transition> for TransitionRelation {
    fn from_iter<I: IntoIterator<Item = Transition>>(iter: I) -> Self {
        let mut r = TransitionRelation::new();
        for t in iter {
            r.insert_tr(t);
        }
        r
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SemError {
    #[error("literal is not closed")]
    OpenLiteral,
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("closed quantitative premise does not hold: {0}")]
    InvalidQuantitative(String),
    #[error("invalid proof structure: {0}")]
    BadStructure(String),
    #[error("substitution does not match the proof structure at rule {0}")]
    NoMatch(usize),
}

/// Whether a closed literal holds in `tr`. Quantitative literals do not look
/// at `tr` at all.
pub fn holds(tr: &TransitionRelation, lit: &Literal) -> Result<bool, SemError> {
    if !lit.is_closed() {
        return Err(SemError::OpenLiteral);
    }
    Ok(match lit {
        Literal::Pos(p) => tr.contains(&p.src, &p.label, &eval_dist(&p.tgt)?),
        Literal::Neg { src, label } => !tr.enabled(src, label),
        Literal::Quant { theta, w, cmp, q } => {
            let WSet::Terms { elems, .. } = w else { return Err(SemError::OpenLiteral) };
            cmp.holds(&mass(&eval_dist(theta)?, elems), q)
        }
    })
}

/// Every term of every instantiated `W` lies in the support of its θ.
/// Premises that stay open under `rho` make the substitution improper.
pub fn is_proper(rho: &Substitution, r: &Rule) -> bool {
    let inst = r.subst(rho);
    inst.premises.iter().all(|p| match p.as_lit() {
        Some(Literal::Quant { theta, w: WSet::Terms { elems, .. }, .. }) => match eval_dist(theta) {
            Ok(pi) => elems.iter().all(|t| t.is_closed() && pi.prob(t) > num::Zero::zero()),
            Err(_) => false,
        },
        Some(Literal::Quant { .. }) => false,
        _ => true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{q, DistTerm};
    use crate::rules::Cmp;

    #[test]
    fn negative_and_quantitative_holds() {
        let f = Term::cst("f");
        let mut tr = TransitionRelation::new();
        tr.insert(f.clone(), crate::terms::sym("b"), FiniteDistribution::dirac(f.clone()));
        assert!(holds(&tr, &Literal::neg(f.clone(), "a")).unwrap());
        assert!(!holds(&tr, &Literal::neg(f.clone(), "b")).unwrap());
        let ql = Literal::Quant {
            theta: DistTerm::dirac(Term::cst("a")),
            w: WSet::terms(vec![Term::cst("a")]),
            cmp: Cmp::Ge,
            q: q(1, 1),
        };
        assert!(holds(&tr, &ql).unwrap());
        assert!(holds(&TransitionRelation::new(), &ql).unwrap());
        assert_eq!(holds(&tr, &Literal::neg(Term::var("x"), "a")), Err(SemError::OpenLiteral));
    }
}
