//! Well-supported proofs over a bounded universe.
//!
//! Ψ is the least relation closed under the rules when every negative premise
//! is assumed. For ψ ∈ Ψ, `sup[ψ]` holds the minimal sets N of negative
//! literals with `N / ψ` provable; a negative literal `t -a-/->` is
//! ws-provable once every such N for every `t -a-> π` contains a literal
//! denied by a ws-provable transition.

use std::collections::{BTreeMap, BTreeSet};

use super::instance::{all_instances, Bounds, Seed, Split};
use super::{Transition, TransitionRelation};
use crate::dist::FiniteDistribution;
use crate::rules::{Literal, Ptss};
use crate::terms::{Sym, Term};

/// `t -a-/->`, keyed by source and label.
pub type NegLit = (Term, Sym);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundInstance {
    pub rule: usize,
    pub conc: Transition,
    pub pos: Vec<Transition>,
    pub neg: Vec<NegLit>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Why {
    Rule(usize),
    Denied(Vec<Transition>),
}

#[derive(Clone, Debug)]
pub struct WsSets {
    pub psi: TransitionRelation,
    pub instances: Vec<GroundInstance>,
    pub sup: BTreeMap<Transition, Vec<BTreeSet<NegLit>>>,
    /// ws-provable transitions with the round they were proved in.
    pub pos: BTreeMap<Transition, usize>,
    /// ws-provable negative literals over the universe and labels.
    pub neg: BTreeMap<NegLit, usize>,
    why_pos: BTreeMap<Transition, Why>,
    why_neg: BTreeMap<NegLit, Why>,
    /// Some support set family hit [`SUP_CAP`].
    pub sup_truncated: bool,
    pub universe: Vec<Term>,
    pub labels: Vec<Sym>,
}

/// Largest number of minimal support sets kept per transition.
pub const SUP_CAP: usize = 256;

impl WsSets {
    pub fn compute(p: &Ptss, u: &[Term]) -> WsSets {
        let bounds = Bounds::new(u);
        let mut psi = TransitionRelation::new();
        loop {
            let mut fresh = Vec::new();
            let oracle = Split { pos: &psi, neg: None };
            for r in &p.rules {
                for i in all_instances(r, &oracle, &bounds, Seed::Universe) {
                    if let Some(c) = i.conc {
                        if !psi.contains(&c.src, &c.label, &c.target) {
                            fresh.push(c);
                        }
                    }
                }
            }
            if fresh.is_empty() {
                break;
            }
            fresh.into_iter().for_each(|c| {
                psi.insert_tr(c);
            });
        }
        let oracle = Split { pos: &psi, neg: None };
        let mut insts = Vec::new();
        for (k, r) in p.rules.iter().enumerate() {
            for i in all_instances(r, &oracle, &bounds, Seed::Universe) {
                if let Some(c) = i.conc {
                    let mut neg = i.neg;
                    neg.sort();
                    neg.dedup();
                    insts.push(GroundInstance { rule: k, conc: c, pos: i.pos, neg });
                }
            }
        }

        let (sup, sup_truncated) = support_sets(&insts);

        let labels: Vec<Sym> = p.sig.labels.iter().cloned().collect();
        let mut pos: BTreeMap<Transition, usize> = BTreeMap::new();
        let mut neg: BTreeMap<NegLit, usize> = BTreeMap::new();
        let mut why_pos = BTreeMap::new();
        let mut why_neg = BTreeMap::new();
        let empty = Vec::new();
        for round in 1.. {
            let mut add_pos = Vec::new();
            let mut add_neg = Vec::new();
            for (k, gi) in insts.iter().enumerate() {
                if pos.contains_key(&gi.conc) || add_pos.iter().any(|(c, _)| c == &gi.conc) {
                    continue;
                }
                if gi.pos.iter().all(|t| pos.contains_key(t)) && gi.neg.iter().all(|n| neg.contains_key(n)) {
                    add_pos.push((gi.conc.clone(), k));
                }
            }
            for t in u {
                for a in &labels {
                    let key = (t.clone(), a.clone());
                    if neg.contains_key(&key) {
                        continue;
                    }
                    let mut deniers = Vec::new();
                    let all = psi.targets(t, a).all(|pi| {
                        let tr = Transition { src: t.clone(), label: a.clone(), target: pi.clone() };
                        sup.get(&tr).unwrap_or(&empty).iter().all(|n| match denier(n, &pos) {
                            Some(d) => {
                                deniers.push(d);
                                true
                            }
                            None => false,
                        })
                    });
                    if all {
                        deniers.sort();
                        deniers.dedup();
                        add_neg.push((key, deniers));
                    }
                }
            }
            if add_pos.is_empty() && add_neg.is_empty() {
                break;
            }
            for (c, k) in add_pos {
                why_pos.insert(c.clone(), Why::Rule(k));
                pos.insert(c, round);
            }
            for (n, d) in add_neg {
                why_neg.insert(n.clone(), Why::Denied(d));
                neg.insert(n, round);
            }
        }
        WsSets { psi, instances: insts, sup, pos, neg, why_pos, why_neg, sup_truncated, universe: u.to_vec(), labels }
    }

    pub fn positive(&self) -> TransitionRelation {
        self.pos.keys().cloned().collect()
    }

    fn tree_pos(&self, t: &Transition) -> WsProof {
        let lit = Literal::pos(t.src.clone(), &t.label, t.target.to_dist_term());
        let children = match &self.why_pos[t] {
            Why::Rule(k) => {
                let gi = &self.instances[*k];
                let mut ch: Vec<WsProof> = gi.pos.iter().map(|p| self.tree_pos(p)).collect();
                ch.extend(gi.neg.iter().map(|n| self.tree_neg(n)));
                ch
            }
            Why::Denied(_) => unreachable!(),
        };
        WsProof { lit, children }
    }

    fn tree_neg(&self, n: &NegLit) -> WsProof {
        let lit = Literal::neg(n.0.clone(), &n.1);
        let children = match &self.why_neg[n] {
            Why::Denied(ds) => ds.iter().map(|d| self.tree_pos(d)).collect(),
            Why::Rule(_) => unreachable!(),
        };
        WsProof { lit, children }
    }
}

/// The first transition in `pos` denying a literal of `n`.
fn denier(n: &BTreeSet<NegLit>, pos: &BTreeMap<Transition, usize>) -> Option<Transition> {
    n.iter().find_map(|(u, b)| pos.keys().find(|t| &t.src == u && &t.label == b).cloned())
}

/// Minimal negative-only support sets, by fixpoint over ground instances.
fn support_sets(insts: &[GroundInstance]) -> (BTreeMap<Transition, Vec<BTreeSet<NegLit>>>, bool) {
    let mut sup: BTreeMap<Transition, Vec<BTreeSet<NegLit>>> = BTreeMap::new();
    let mut truncated = false;
    loop {
        let mut changed = false;
        for gi in insts {
            let mut combos: Vec<BTreeSet<NegLit>> = vec![gi.neg.iter().cloned().collect()];
            for p in &gi.pos {
                let Some(ss) = sup.get(p) else {
                    combos.clear();
                    break;
                };
                let mut next = Vec::new();
                for c in &combos {
                    for s in ss {
                        next.push(c.union(s).cloned().collect());
                    }
                }
                combos = minimize(next);
                if combos.len() > SUP_CAP {
                    combos.truncate(SUP_CAP);
                    truncated = true;
                }
            }
            if combos.is_empty() {
                continue;
            }
            let entry = sup.entry(gi.conc.clone()).or_default();
            for c in combos {
                if entry.iter().any(|e| e.is_subset(&c)) {
                    continue;
                }
                entry.retain(|e| !c.is_subset(e));
                if entry.len() >= SUP_CAP {
                    truncated = true;
                    continue;
                }
                entry.push(c);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    (sup, truncated)
}

fn minimize(mut sets: Vec<BTreeSet<NegLit>>) -> Vec<BTreeSet<NegLit>> {
    sets.sort_by_key(BTreeSet::len);
    let mut out: Vec<BTreeSet<NegLit>> = Vec::new();
    for s in sets {
        if !out.iter().any(|o| o.is_subset(&s)) {
            out.push(s);
        }
    }
    out
}

/// A well-supported proof tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WsProof {
    pub lit: Literal,
    pub children: Vec<WsProof>,
}

impl WsProof {
    pub fn height(&self) -> usize {
        1 + self.children.iter().map(WsProof::height).max().unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WsResult {
    Proved(WsProof),
    /// Proof of a literal that denies the query.
    Refuted(WsProof),
    NotFound,
}

/// Look up a closed positive or negative literal. `max_rounds` bounds the
/// fixpoint round a proof may come from.
pub fn ws_prove(sets: &WsSets, lit: &Literal, max_rounds: Option<usize>) -> WsResult {
    let ok = |round: usize| max_rounds.is_none_or(|m| round <= m);
    match lit {
        Literal::Pos(p) => {
            let Ok(pi) = crate::dist::eval_dist(&p.tgt) else { return WsResult::NotFound };
            let t = Transition { src: p.src.clone(), label: p.label.clone(), target: pi };
            if sets.pos.get(&t).is_some_and(|r| ok(*r)) {
                return WsResult::Proved(sets.tree_pos(&t));
            }
            let n = (p.src.clone(), p.label.clone());
            match sets.neg.get(&n) {
                Some(r) if ok(*r) => WsResult::Refuted(sets.tree_neg(&n)),
                _ => WsResult::NotFound,
            }
        }
        Literal::Neg { src, label } => {
            let n = (src.clone(), label.clone());
            if sets.neg.get(&n).is_some_and(|r| ok(*r)) {
                return WsResult::Proved(sets.tree_neg(&n));
            }
            let best = sets.pos.iter().filter(|(t, r)| &t.src == src && &t.label == label && ok(**r)).min_by_key(|(_, r)| **r);
            match best {
                Some((t, _)) => WsResult::Refuted(sets.tree_pos(t)),
                None => WsResult::NotFound,
            }
        }
        Literal::Quant { .. } => WsResult::NotFound,
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Completeness {
    pub complete: bool,
    pub consistent: bool,
    /// Neither `t -a->` for some π nor `t -a-/->` is ws-provable.
    pub undecided: Vec<NegLit>,
    /// Both are.
    pub both: Vec<NegLit>,
}

/// Completeness and consistency over the universe and the declared labels.
pub fn check_complete_consistent(sets: &WsSets) -> Completeness {
    let mut c = Completeness::default();
    for t in &sets.universe {
        for a in &sets.labels {
            let key = (t.clone(), a.clone());
            let p = sets.pos.keys().any(|tr| &tr.src == t && &tr.label == a);
            let n = sets.neg.contains_key(&key);
            match (p, n) {
                (false, false) => c.undecided.push(key),
                (true, true) => c.both.push(key),
                _ => {}
            }
        }
    }
    c.complete = c.undecided.is_empty();
    c.consistent = c.both.is_empty();
    c
}

/// Whether a target belongs to a ws-provable transition.
pub fn ws_provable(sets: &WsSets, src: &Term, label: &str, pi: &FiniteDistribution) -> bool {
    sets.pos.keys().any(|t| &t.src == src && &*t.label == label && &t.target == pi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    #[test]
    fn f_spec_is_incomplete() {
        let s = parse(
            "signature { f/0 } labels { a, b }
             rule r1 { f - a -> mu --- f - a -> delta(f) }
             rule r2 { f - a -/-> --- f - b -> delta(f) }",
        )
        .unwrap();
        let u = vec![Term::cst("f")];
        let ws = WsSets::compute(&s.ptss, &u);
        // f -a-/-> has no support set to deny, so f -b-> δ_f follows.
        assert!(ws.neg.contains_key(&(Term::cst("f"), crate::terms::sym("a"))));
        assert_eq!(ws.pos.len(), 1);
        let c = check_complete_consistent(&ws);
        assert!(c.complete && c.consistent);
        let lit = Literal::pos(Term::cst("f"), "b", crate::dist::DistTerm::dirac(Term::cst("f")));
        match ws_prove(&ws, &lit, None) {
            WsResult::Proved(t) => assert_eq!(t.height(), 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn self_denial_is_undecided() {
        let s = parse("signature { f/0 } labels { a } rule r { f - a -/-> --- f - a -> delta(f) }").unwrap();
        let ws = WsSets::compute(&s.ptss, &[Term::cst("f")]);
        let c = check_complete_consistent(&ws);
        assert!(!c.complete && c.consistent);
    }
}
