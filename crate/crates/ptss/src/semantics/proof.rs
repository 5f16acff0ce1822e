//! Proof structures, provable rules and the provable closure.
//!
//! Two independent generators of most-general provable rules: one enumerates
//! proof structures and solves all link equations at once, the other builds
//! the closure bottom-up and unifies one premise at a time. Both emit the
//! hypotheses in depth-first order so canonical renaming makes them comparable.

use std::collections::{BTreeMap, BTreeSet};

use super::SemError;
use crate::dist::{eval_dist, mass, DistTerm};
use crate::rules::{Literal, PosLit, Premise, Ptss, Renaming, Rule, WSet};
use crate::syntax::render_rule;
use crate::terms::{compose, member_of, sym, unify, Equation, Fresh, Signature, Substitution, Sym, Term};

/// `φ(b)`: the premise of `rule` that rule `b` proves. `member` picks one
/// member of a family premise.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Link {
    pub rule: usize,
    pub premise: usize,
    pub member: Option<Term>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofStructure {
    pub rules: Vec<Rule>,
    pub root: usize,
    pub phi: BTreeMap<usize, Link>,
}

fn bad(msg: impl Into<String>) -> SemError {
    SemError::BadStructure(msg.into())
}

impl ProofStructure {
    pub fn validate(&self) -> Result<(), SemError> {
        let n = self.rules.len();
        if self.root >= n {
            return Err(bad("root out of range"));
        }
        if self.phi.contains_key(&self.root) {
            return Err(bad("the root is linked"));
        }
        for b in 0..n {
            if b != self.root && !self.phi.contains_key(&b) {
                return Err(bad(format!("rule {b} is not linked")));
            }
        }
        let mut targets = BTreeSet::new();
        for (b, l) in &self.phi {
            if *b >= n || l.rule >= n {
                return Err(bad("link out of range"));
            }
            let ok = match self.rules[l.rule].premises.get(l.premise) {
                Some(Premise::Lit(Literal::Pos(_))) => l.member.is_none(),
                Some(Premise::Family(fp)) => fp.target.is_some() && l.member.is_some(),
                _ => false,
            };
            if !ok {
                return Err(bad(format!("rule {b} links to a premise that is not positive")));
            }
            if !targets.insert(l.clone()) {
                return Err(bad("φ is not injective"));
            }
        }
        for &b in self.phi.keys() {
            let mut cur = b;
            for _ in 0..=n {
                match self.phi.get(&cur) {
                    Some(l) => cur = l.rule,
                    None => break,
                }
            }
            if self.phi.contains_key(&cur) {
                return Err(bad("φ has a cycle"));
            }
        }
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
        for (i, r) in self.rules.iter().enumerate() {
            let rv = r.vars();
            let names = rv.terms.iter().filter(|x| member_of(x).is_none()).chain(&rv.binders).map(|x| format!("t:{x}"));
            let names = names
                .chain(rv.dist_bases.iter().map(|x| format!("d:{x}")))
                .chain(rv.families.iter().map(|x| format!("f:{x}")));
            for nm in names {
                if let Some(j) = seen.insert(nm.clone(), i) {
                    if j != i {
                        return Err(bad(format!("rules {j} and {i} share {}", &nm[2..])));
                    }
                }
            }
        }
        Ok(())
    }

    /// The premise `φ(b)` instantiated by `s`.
    fn linked(&self, l: &Link, s: &Substitution) -> Result<PosLit, SemError> {
        match (&self.rules[l.rule].premises[l.premise], &l.member) {
            (Premise::Lit(Literal::Pos(p)), None) => Ok(p.subst(s)),
            (Premise::Family(fp), Some(u)) => {
                let img = s.families.get(&fp.family).ok_or_else(|| bad(format!("family {} has no image", fp.family)))?;
                if !img.contains(&s.term(u)) {
                    return Err(bad(format!("{u:?} is not in the image of {}", fp.family)));
                }
                match fp.member(u, s) {
                    Literal::Pos(p) => Ok(p),
                    _ => unreachable!(),
                }
            }
            _ => Err(bad("link to a non-positive premise")),
        }
    }

    fn child(&self, rule: usize, premise: usize, member: Option<&Term>) -> Option<usize> {
        self.phi
            .iter()
            .find(|(_, l)| l.rule == rule && l.premise == premise && l.member.as_ref() == member)
            .map(|(b, _)| *b)
    }

    /// Unlinked premises in depth-first order, not yet instantiated.
    /// Families with an image in `s` contribute their unlinked members.
    pub fn top(&self, s: &Substitution) -> Vec<Premise> {
        let mut out = Vec::new();
        self.dfs(self.root, s, &mut out);
        out
    }

    fn dfs(&self, b: usize, s: &Substitution, out: &mut Vec<Premise>) {
        let id = Substitution::identity();
        for (k, p) in self.rules[b].premises.iter().enumerate() {
            match p {
                Premise::Lit(Literal::Pos(_)) => match self.child(b, k, None) {
                    Some(c) => self.dfs(c, s, out),
                    None => out.push(p.clone()),
                },
                Premise::Family(fp) if fp.target.is_some() => match s.families.get(&fp.family) {
                    Some(img) => {
                        for u in img {
                            match self.child(b, k, Some(u)) {
                                Some(c) => self.dfs(c, s, out),
                                None => out.push(Premise::Lit(fp.member(u, &id))),
                            }
                        }
                    }
                    None => out.push(p.clone()),
                },
                _ => out.push(p.clone()),
            }
        }
    }
}

/// `s` matches the structure: every linked conclusion equals its premise.
pub fn match_proof_structure(ps: &ProofStructure, s: &Substitution) -> Result<(), SemError> {
    ps.validate()?;
    for (b, l) in &ps.phi {
        if ps.rules[*b].conc.subst(s) != ps.linked(l, s)? {
            return Err(SemError::NoMatch(*b));
        }
    }
    Ok(())
}

/// The rule `σ(top − qtop) ∪ H_q / σ(conc root)` proved by the structure.
/// Closed quantitative premises must hold and are dropped.
pub fn provable_rule_of(ps: &ProofStructure, s: &Substitution) -> Result<Rule, SemError> {
    match_proof_structure(ps, s)?;
    let premises = instantiate_hyps(ps.top(s), s)?;
    Ok(Rule { name: sym("provable"), premises, conc: ps.rules[ps.root].conc.subst(s) })
}

/// Apply `s`, discharge closed quantitative premises, drop repeats.
fn instantiate_hyps(top: Vec<Premise>, s: &Substitution) -> Result<Vec<Premise>, SemError> {
    let mut out: Vec<Premise> = Vec::new();
    for p in top {
        for q in p.subst(s) {
            if let Premise::Lit(l @ Literal::Quant { .. }) = &q {
                if l.is_closed() {
                    if !quant_holds(l)? {
                        return Err(SemError::InvalidQuantitative(format!("{l:?}")));
                    }
                    continue;
                }
            }
            if !out.contains(&q) {
                out.push(q);
            }
        }
    }
    Ok(out)
}

fn quant_holds(l: &Literal) -> Result<bool, SemError> {
    let Literal::Quant { theta, w: WSet::Terms { elems, .. }, cmp, q } = l else { return Err(SemError::OpenLiteral) };
    let pi = eval_dist(theta)?;
    Ok(cmp.holds(&mass(&pi, elems), q))
}

/// Skeleton of a proof structure: a rule of P and subtrees for some of its
/// positive premises.
#[derive(Clone, Debug)]
struct Tree {
    rule: usize,
    kids: Vec<(usize, Tree)>,
}

/// Upper bound on structures enumerated per call.
pub const STRUCTURE_CAP: usize = 100_000;

fn trees(p: &Ptss, rule: usize, fuel: usize, budget: &mut usize) -> Vec<Tree> {
    let r = &p.rules[rule];
    let mut acc = vec![Tree { rule, kids: Vec::new() }];
    if fuel == 0 {
        return acc;
    }
    for (k, prem) in r.premises.iter().enumerate() {
        let Premise::Lit(Literal::Pos(pl)) = prem else { continue };
        let mut opts: Vec<Option<Tree>> = vec![None];
        for (j, rj) in p.rules.iter().enumerate() {
            if rj.conc.label == pl.label && heads_compatible(&rj.conc.src, &pl.src) {
                opts.extend(trees(p, j, fuel - 1, budget).into_iter().map(Some));
            }
        }
        let mut next = Vec::new();
        for t in &acc {
            for o in &opts {
                if *budget == 0 {
                    return next;
                }
                *budget -= 1;
                let mut t2 = t.clone();
                if let Some(c) = o {
                    t2.kids.push((k, c.clone()));
                }
                next.push(t2);
            }
        }
        acc = next;
    }
    acc
}

fn heads_compatible(a: &Term, b: &Term) -> bool {
    match (a, b) {
        (Term::App(f, xs), Term::App(g, ys)) => f == g && xs.iter().zip(ys).all(|(x, y)| heads_compatible(x, y)),
        _ => true,
    }
}

fn flatten(p: &Ptss, t: &Tree, fresh: &mut Fresh, ps: &mut ProofStructure, parent: Option<(usize, usize)>) {
    let (copy, _) = p.rules[t.rule].rename_fresh(fresh);
    let me = ps.rules.len();
    ps.rules.push(copy);
    if let Some((rule, premise)) = parent {
        ps.phi.insert(me, Link { rule, premise, member: None });
    }
    for (k, c) in &t.kids {
        flatten(p, c, fresh, ps, Some((me, *k)));
    }
}

/// Most general rules proved by proof structures whose link chains have
/// length at most `fuel`. Family premises are never linked.
pub fn structure_rules(p: &Ptss, fuel: usize) -> (Vec<Rule>, bool) {
    let mut fresh = Fresh::avoiding(p.all_names());
    let mut out = Vec::new();
    let mut budget = STRUCTURE_CAP;
    for root in 0..p.rules.len() {
        for t in trees(p, root, fuel, &mut budget) {
            let mut ps = ProofStructure { rules: Vec::new(), root: 0, phi: BTreeMap::new() };
            flatten(p, &t, &mut fresh, &mut ps, None);
            let mut eqs = Vec::new();
            let mut labels_ok = true;
            for (b, l) in &ps.phi {
                let c = &ps.rules[*b].conc;
                let Premise::Lit(Literal::Pos(pl)) = &ps.rules[l.rule].premises[l.premise] else { unreachable!() };
                labels_ok &= c.label == pl.label;
                eqs.push(Equation::T(c.src.clone(), pl.src.clone()));
                eqs.push(Equation::D(c.tgt.clone(), pl.tgt.clone()));
            }
            if !labels_ok {
                continue;
            }
            let Ok(s) = unify(eqs, &|_| false) else { continue };
            if let Ok(r) = provable_rule_of(&ps, &s) {
                out.push(r);
            }
        }
    }
    (out, budget == 0)
}

/// Most general members of the provable closure built with at most `fuel`
/// nested rule applications below the last one.
pub fn provable_closure(p: &Ptss, fuel: usize) -> Vec<Rule> {
    let mut fresh = Fresh::avoiding(p.all_names());
    let mut level: Vec<Rule> = Vec::new();
    for _ in 0..=fuel {
        let prev = level;
        let mut next: Vec<Rule> = Vec::new();
        let mut keys = BTreeSet::new();
        for r in &p.rules {
            for got in closure_step(r, &prev, &mut fresh) {
                if keys.insert(canonical_key(&p.sig, &got)) {
                    next.push(got);
                }
            }
        }
        level = next;
    }
    level
}

/// Apply `r` once, proving each positive premise either by hypothesis or by a
/// rule of `prev`.
fn closure_step(r: &Rule, prev: &[Rule], fresh: &mut Fresh) -> Vec<Rule> {
    let (r, _) = r.rename_fresh(fresh);
    // Partial results: (σ, hypotheses per premise so far, in order).
    let mut partial: Vec<(Substitution, Vec<Premise>)> = vec![(Substitution::identity(), Vec::new())];
    for prem in &r.premises {
        let mut next = Vec::new();
        for (s, hyps) in &partial {
            let mut h = hyps.clone();
            h.push(prem.clone());
            next.push((s.clone(), h));
            let Premise::Lit(Literal::Pos(pl)) = prem else { continue };
            for q in prev.iter().filter(|q| q.conc.label == pl.label) {
                let (q, _) = q.rename_fresh(fresh);
                let eqs = vec![
                    Equation::T(s.term(&q.conc.src), s.term(&pl.src)),
                    Equation::D(s.dist(&q.conc.tgt), s.dist(&pl.tgt)),
                ];
                let Ok(th) = unify(eqs, &|_| false) else { continue };
                let mut h = hyps.clone();
                h.extend(q.premises.iter().cloned());
                next.push((compose(&th, s), h));
            }
        }
        partial = next;
    }
    partial
        .into_iter()
        .filter_map(|(s, hyps)| {
            let premises = instantiate_hyps(hyps, &s).ok()?;
            Some(Rule { name: sym("provable"), premises, conc: r.conc.subst(&s) })
        })
        .collect()
}

/// Rename every variable by order of first occurrence: conclusion first, then
/// premises in order.
pub fn canonical(r: &Rule) -> Rule {
    let mut order = Walk::default();
    order.poslit(&r.conc);
    for p in &r.premises {
        order.premise(p);
    }
    let mut ren = Renaming::default();
    for (i, x) in order.terms.iter().enumerate() {
        ren.terms.insert(x.clone(), sym(&format!("x{i}")));
    }
    for (i, x) in order.dbases.iter().enumerate() {
        ren.dbases.insert(x.clone(), sym(&format!("m{i}")));
    }
    for (i, x) in order.fams.iter().enumerate() {
        ren.fams.insert(x.clone(), sym(&format!("F{i}")));
    }
    let mut out = r.rename(&ren);
    out.name = r.name.clone();
    out
}

/// Canonical text of a rule, ignoring its name and repeated premises.
pub fn canonical_key(sig: &Signature, r: &Rule) -> String {
    let c = canonical(&Rule { name: sym("_"), ..r.clone() });
    render_rule(sig, &c)
}

#[derive(Default)]
struct Walk {
    terms: Vec<Sym>,
    dbases: Vec<Sym>,
    fams: Vec<Sym>,
}

impl Walk {
    fn push(v: &mut Vec<Sym>, x: &Sym) {
        if !v.contains(x) {
            v.push(x.clone());
        }
    }

    fn term(&mut self, t: &Term) {
        match t {
            Term::Var(x) => match member_of(x) {
                Some((f, _)) => Self::push(&mut self.fams, &sym(f)),
                None => Self::push(&mut self.terms, x),
            },
            Term::App(_, args) => args.iter().for_each(|a| self.term(a)),
        }
    }

    fn dist(&mut self, d: &DistTerm) {
        match d {
            DistTerm::Var(v) => {
                Self::push(&mut self.dbases, &v.base);
                if let Some(i) = &v.index {
                    self.term(i);
                }
            }
            DistTerm::Dirac(t) => self.term(t),
            DistTerm::Convex(ss) => ss.iter().flat_map(|s| &s.args).for_each(|a| self.dist(a)),
        }
    }

    fn poslit(&mut self, p: &PosLit) {
        self.term(&p.src);
        self.dist(&p.tgt);
    }

    fn premise(&mut self, p: &Premise) {
        match p {
            Premise::Lit(Literal::Pos(pl)) => self.poslit(pl),
            Premise::Lit(Literal::Neg { src, .. }) => self.term(src),
            Premise::Lit(Literal::Quant { theta, w, .. }) => {
                self.dist(theta);
                match w {
                    WSet::Family(y) => Self::push(&mut self.fams, y),
                    WSet::Terms { elems, .. } => elems.iter().for_each(|t| self.term(t)),
                }
            }
            Premise::Family(fp) => {
                Self::push(&mut self.fams, &fp.family);
                Self::push(&mut self.terms, &fp.binder);
                self.term(&fp.src);
                if let Some(b) = &fp.target {
                    Self::push(&mut self.dbases, b);
                }
            }
        }
    }
}

/// Canonical keys of the rules.
pub fn key_set(sig: &Signature, rules: &[Rule]) -> BTreeSet<String> {
    rules.iter().map(|r| canonical_key(sig, r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    #[test]
    fn chain_structure_and_closure_agree() {
        let s = parse(
            "signature { a/0; f/1 } labels { a, b }
             rule ax { a - a -> delta(a) }
             rule up { x - a -> mu; x - b -/-> --- f(x) - a -> mu }",
        )
        .unwrap();
        for fuel in 0..3 {
            let (ps, cut) = structure_rules(&s.ptss, fuel);
            assert!(!cut);
            let a = key_set(&s.ptss.sig, &ps);
            let b = key_set(&s.ptss.sig, &provable_closure(&s.ptss, fuel));
            assert_eq!(a, b, "fuel {fuel}");
        }
        let (ps, _) = structure_rules(&s.ptss, 1);
        // ax, up, up over ax, and up over up.
        assert_eq!(key_set(&s.ptss.sig, &ps).len(), 4);
    }

    #[test]
    fn invalid_structures_are_rejected() {
        let s = parse("signature { a/0 } labels { a } rule ax { a - a -> delta(a) }").unwrap();
        let r = s.ptss.rules[0].clone();
        let ps = ProofStructure { rules: vec![r.clone(), r], root: 0, phi: BTreeMap::new() };
        assert!(matches!(ps.validate(), Err(SemError::BadStructure(_))));
    }
}
