//! Backtracking enumeration of closed proper rule instances over a bounded
//! universe.
//!
//! Premises are discharged in dependency order: a positive premise fires once
//! its source is closed and binds its target from the oracle, a quantitative
//! premise fires once θ is closed and then ranges its `W` over the support of
//! θ. Anything still open falls back to the universe (terms), its Diracs
//! (distribution variables) or small subsets of it (families).

use std::collections::BTreeMap;

use itertools::Itertools;
use num::Zero;

use super::{Transition, TransitionRelation};
use crate::dist::{eval_dist, mass, DistTerm, FiniteDistribution};
use crate::rules::{Literal, Premise, Rule, WSet};
use crate::terms::{member_of, sym, DVar, Substitution, Sym, Term};

/// Answers the closed premises an instance needs.
pub trait Oracle {
    fn targets(&self, src: &Term, label: &str) -> Vec<FiniteDistribution>;
    fn allows_neg(&self, src: &Term, label: &str) -> bool;
}

impl Oracle for TransitionRelation {
    fn targets(&self, src: &Term, label: &str) -> Vec<FiniteDistribution> {
        TransitionRelation::targets(self, src, label).cloned().collect()
    }

    fn allows_neg(&self, src: &Term, label: &str) -> bool {
        !self.enabled(src, label)
    }
}

/// Positive premises from one relation, negative premises from another.
pub struct Split<'a> {
    pub pos: &'a TransitionRelation,
    pub neg: Option<&'a TransitionRelation>,
}

impl Oracle for Split<'_> {
    fn targets(&self, src: &Term, label: &str) -> Vec<FiniteDistribution> {
        self.pos.targets(src, label).cloned().collect()
    }

    fn allows_neg(&self, src: &Term, label: &str) -> bool {
        self.neg.is_none_or(|n| !n.enabled(src, label))
    }
}

/// Something an instance can bind.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Slot {
    Term(Sym),
    Dist(Sym),
    Family(Sym),
}

pub struct Bounds<'a> {
    pub universe: &'a [Term],
    /// Largest image tried for a family no quantitative premise pins down.
    pub max_image: usize,
    /// Supports up to this size have all their subsets tried as a family image.
    pub max_support: usize,
    /// Slots the engine may bind; `None` binds everything.
    pub bindable: Option<&'a dyn Fn(&Slot) -> bool>,
}

impl<'a> Bounds<'a> {
    pub fn new(universe: &'a [Term]) -> Self {
        Bounds { universe, max_image: 2, max_support: 12, bindable: None }
    }

    fn may(&self, s: &Slot) -> bool {
        self.bindable.is_none_or(|f| f(s))
    }
}

/// How the conclusion source is fixed before the search starts.
#[derive(Clone, Copy, Debug)]
pub enum Seed<'t> {
    /// Match against every universe term.
    Universe,
    /// Match against one closed term.
    Term(&'t Term),
    /// Leave the conclusion alone.
    Free,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub sigma: Substitution,
    pub pos: Vec<Transition>,
    pub neg: Vec<(Term, Sym)>,
    /// Premises left open because they mention unbindable slots.
    pub residual: Vec<Premise>,
    /// `None` when the conclusion stays open.
    pub conc: Option<Transition>,
}

#[derive(Clone)]
struct State {
    sigma: Substitution,
    pending: Vec<Premise>,
    pos: Vec<Transition>,
    neg: Vec<(Term, Sym)>,
    residual: Vec<Premise>,
}

/// Enumerate instances of `r`. `emit` returns `false` to stop early; the
/// function then returns `false` too.
pub fn instances(
    r: &Rule,
    oracle: &dyn Oracle,
    bounds: &Bounds,
    seed: Seed,
    emit: &mut dyn FnMut(Instance) -> bool,
) -> bool {
    let base = State {
        sigma: Substitution::identity(),
        pending: r.premises.clone(),
        pos: Vec::new(),
        neg: Vec::new(),
        residual: Vec::new(),
    };
    let mut eng = Engine { r, oracle, bounds, emit };
    match seed {
        Seed::Free => eng.run(base),
        Seed::Term(t) => match seed_with(&r.conc.src, t, &base) {
            Some(st) => eng.run(st),
            None => true,
        },
        Seed::Universe => {
            for t in bounds.universe {
                if let Some(st) = seed_with(&r.conc.src, t, &base) {
                    if !eng.run(st) {
                        return false;
                    }
                }
            }
            true
        }
    }
}

/// Convenience: collect every instance.
pub fn all_instances(r: &Rule, oracle: &dyn Oracle, bounds: &Bounds, seed: Seed) -> Vec<Instance> {
    let mut out = Vec::new();
    instances(r, oracle, bounds, seed, &mut |i| {
        out.push(i);
        true
    });
    out
}

fn seed_with(pat: &Term, t: &Term, base: &State) -> Option<State> {
    let mut bind = BTreeMap::new();
    if !pat.match_into(t, &mut bind) {
        return None;
    }
    let mut st = base.clone();
    st.sigma.terms.extend(bind);
    Some(st)
}

struct Engine<'e> {
    r: &'e Rule,
    oracle: &'e dyn Oracle,
    bounds: &'e Bounds<'e>,
    emit: &'e mut dyn FnMut(Instance) -> bool,
}

enum Step {
    Fail,
    Done(State),
    Branch(Vec<State>),
}

impl Engine<'_> {
    fn run(&mut self, st: State) -> bool {
        match self.step(st) {
            Step::Fail => true,
            Step::Done(st) => self.finish(st),
            Step::Branch(states) => {
                for s in states {
                    if !self.run(s) {
                        return false;
                    }
                }
                true
            }
        }
    }

    /// Discharge everything decidable, then branch on one choice.
    fn step(&self, mut st: State) -> Step {
        loop {
            let mut progressed = false;
            let mut keep = Vec::with_capacity(st.pending.len());
            for p in std::mem::take(&mut st.pending) {
                match p {
                    Premise::Family(fp) => match st.sigma.families.get(&fp.family) {
                        Some(img) => {
                            progressed = true;
                            let id = Substitution::identity();
                            keep.extend(img.iter().map(|u| Premise::Lit(fp.member(u, &id))));
                        }
                        None => keep.push(Premise::Family(fp)),
                    },
                    Premise::Lit(l) => {
                        let li = l.subst(&st.sigma);
                        if !li.is_closed() {
                            keep.push(Premise::Lit(l));
                            continue;
                        }
                        progressed = true;
                        match li {
                            Literal::Neg { src, label } => {
                                if !self.oracle.allows_neg(&src, &label) {
                                    return Step::Fail;
                                }
                                st.neg.push((src, label));
                            }
                            Literal::Quant { theta, w: WSet::Terms { elems, .. }, cmp, q } => {
                                let Ok(pi) = eval_dist(&theta) else { return Step::Fail };
                                if elems.iter().any(|t| pi.prob(t).is_zero()) || !cmp.holds(&mass(&pi, &elems), &q) {
                                    return Step::Fail;
                                }
                            }
                            Literal::Quant { .. } => unreachable!("closed quantitative literal has explicit W"),
                            Literal::Pos(pl) => {
                                let Ok(pi) = eval_dist(&pl.tgt) else { return Step::Fail };
                                if !self.oracle.targets(&pl.src, &pl.label).contains(&pi) {
                                    return Step::Fail;
                                }
                                st.pos.push(Transition { src: pl.src, label: pl.label, target: pi });
                            }
                        }
                    }
                }
            }
            st.pending = keep;
            if !progressed {
                break;
            }
        }
        if st.pending.is_empty() {
            return Step::Done(st);
        }
        if let Some(b) = self.positive_choice(&st) {
            return Step::Branch(b);
        }
        if let Some(b) = self.quant_choice(&st) {
            return Step::Branch(b);
        }
        if let Some(b) = self.fallback(&st, &st.pending.clone()) {
            return Step::Branch(b);
        }
        // Nothing bindable is left: the rest stays symbolic.
        let pending = std::mem::take(&mut st.pending);
        st.residual.extend(pending.iter().flat_map(|p| p.subst(&st.sigma)));
        Step::Done(st)
    }

    /// A positive premise with a closed source and an unbound target.
    fn positive_choice(&self, st: &State) -> Option<Vec<State>> {
        for (i, p) in st.pending.iter().enumerate() {
            let Premise::Lit(Literal::Pos(pl)) = p else { continue };
            let src = st.sigma.term(&pl.src);
            if !src.is_closed() {
                continue;
            }
            let DistTerm::Var(key) = st.sigma.dist(&pl.tgt) else { continue };
            if key.index.as_ref().is_some_and(|t| !t.is_closed()) || !self.bounds.may(&Slot::Dist(key.base.clone())) {
                continue;
            }
            let out = self
                .oracle
                .targets(&src, &pl.label)
                .into_iter()
                .map(|pi| {
                    let mut s = st.clone();
                    s.sigma.dists.insert(key.clone(), pi.to_dist_term());
                    s.pending.remove(i);
                    s.pos.push(Transition { src: src.clone(), label: pl.label.clone(), target: pi });
                    s
                })
                .collect();
            return Some(out);
        }
        None
    }

    /// A quantitative premise whose θ is closed but whose `W` is not.
    fn quant_choice(&self, st: &State) -> Option<Vec<State>> {
        for p in &st.pending {
            let Premise::Lit(Literal::Quant { theta, w, cmp, q }) = p else { continue };
            let th = st.sigma.dist(theta);
            if !th.is_closed() {
                continue;
            }
            let Ok(pi) = eval_dist(&th) else { return Some(Vec::new()) };
            let supp: Vec<Term> = pi.support().cloned().collect();
            match w {
                WSet::Family(y) => {
                    if !self.bounds.may(&Slot::Family(y.clone())) {
                        continue;
                    }
                    let max = if supp.len() <= self.bounds.max_support { supp.len() } else { self.bounds.max_image };
                    let out = subsets(&supp, max)
                        .filter(|img| cmp.holds(&mass(&pi, img), q))
                        .map(|img| bind_family(st, y, img))
                        .collect();
                    return Some(out);
                }
                WSet::Terms { elems, .. } => {
                    let open = elems.iter().flat_map(|t| st.sigma.term(t).vars()).find(|x| self.term_slot_ok(x));
                    if let Some(x) = open {
                        let out = supp
                            .iter()
                            .map(|u| {
                                let mut s = st.clone();
                                s.sigma.terms.insert(x.clone(), u.clone());
                                s
                            })
                            .collect();
                        return Some(out);
                    }
                }
            }
        }
        None
    }

    fn term_slot_ok(&self, x: &Sym) -> bool {
        match member_of(x) {
            Some((fam, _)) => self.bounds.may(&Slot::Family(sym(fam))),
            None => self.bounds.may(&Slot::Term(x.clone())),
        }
    }

    /// Bind the first open slot of `items` over the universe.
    fn fallback(&self, st: &State, items: &[Premise]) -> Option<Vec<State>> {
        let mut tvars: Vec<Sym> = Vec::new();
        let mut dvars: Vec<DVar> = Vec::new();
        let mut fams: Vec<Sym> = Vec::new();
        for p in items {
            match p {
                Premise::Family(fp) => {
                    let mut vs = st.sigma.term(&fp.src).vars();
                    vs.remove(&fp.binder);
                    tvars.extend(vs);
                    fams.push(fp.family.clone());
                }
                Premise::Lit(l) => {
                    if let Literal::Quant { w: WSet::Family(y), .. } = l {
                        if !st.sigma.families.contains_key(y) {
                            fams.push(y.clone());
                        }
                    }
                    let li = l.subst(&st.sigma);
                    lit_open_vars(&li, &mut tvars, &mut dvars);
                }
            }
        }
        self.bind_one(st, &tvars, &dvars, &fams)
    }

    fn bind_one(&self, st: &State, tvars: &[Sym], dvars: &[DVar], fams: &[Sym]) -> Option<Vec<State>> {
        let u = self.bounds.universe;
        for x in tvars {
            if !self.term_slot_ok(x) {
                continue;
            }
            let range: Vec<Term> = match member_of(x) {
                Some((fam, _)) => match st.sigma.families.get(fam) {
                    Some(img) => img.clone(),
                    None => continue,
                },
                None => u.to_vec(),
            };
            let out = range
                .into_iter()
                .map(|t| {
                    let mut s = st.clone();
                    s.sigma.terms.insert(x.clone(), t);
                    s
                })
                .collect();
            return Some(out);
        }
        for v in dvars {
            if v.index.as_ref().is_some_and(|i| !i.is_closed()) || !self.bounds.may(&Slot::Dist(v.base.clone())) {
                continue;
            }
            let out = u
                .iter()
                .map(|t| {
                    let mut s = st.clone();
                    s.sigma.dists.insert(v.clone(), DistTerm::Dirac(t.clone()));
                    s
                })
                .collect();
            return Some(out);
        }
        // Members of a family nothing else binds.
        let members = tvars.iter().filter_map(|x| member_of(x).map(|(f, _)| sym(f)));
        for y in fams.iter().cloned().chain(members) {
            if st.sigma.families.contains_key(&y) || !self.bounds.may(&Slot::Family(y.clone())) {
                continue;
            }
            let out = subsets(u, self.bounds.max_image).map(|img| bind_family(st, &y, img)).collect();
            return Some(out);
        }
        None
    }

    fn finish(&mut self, st: State) -> bool {
        let conc = self.r.conc.subst(&st.sigma);
        let mut tvars = Vec::new();
        let mut dvars = Vec::new();
        lit_open_vars(&Literal::Pos(conc.clone()), &mut tvars, &mut dvars);
        if !tvars.is_empty() || !dvars.is_empty() {
            if let Some(b) = self.bind_one(&st, &tvars, &dvars, &[]) {
                for s in b {
                    if !self.finish(s) {
                        return false;
                    }
                }
                return true;
            }
        }
        let conc = if conc.src.is_closed() && conc.tgt.is_closed() {
            match eval_dist(&conc.tgt) {
                Ok(pi) => Some(Transition { src: conc.src, label: conc.label, target: pi }),
                Err(_) => return true,
            }
        } else {
            None
        };
        (self.emit)(Instance { sigma: st.sigma, pos: st.pos, neg: st.neg, residual: st.residual, conc })
    }
}

fn lit_open_vars(l: &Literal, tvars: &mut Vec<Sym>, dvars: &mut Vec<DVar>) {
    let push_t = |t: &Term, tv: &mut Vec<Sym>| {
        for x in t.vars() {
            if !tv.contains(&x) {
                tv.push(x);
            }
        }
    };
    let push_d = |th: &DistTerm, tv: &mut Vec<Sym>, dv: &mut Vec<DVar>| {
        for x in th.term_vars() {
            if !tv.contains(&x) {
                tv.push(x);
            }
        }
        for v in th.dvars() {
            if !dv.contains(&v) {
                dv.push(v);
            }
        }
    };
    match l {
        Literal::Pos(p) => {
            push_t(&p.src, tvars);
            push_d(&p.tgt, tvars, dvars);
        }
        Literal::Neg { src, .. } => push_t(src, tvars),
        Literal::Quant { theta, w, .. } => {
            push_d(theta, tvars, dvars);
            if let WSet::Terms { elems, .. } = w {
                elems.iter().for_each(|t| push_t(t, tvars));
            }
        }
    }
}

fn bind_family(st: &State, y: &Sym, img: Vec<Term>) -> State {
    let mut s = st.clone();
    s.sigma.families.insert(y.clone(), img);
    s
}

/// Nonempty subsets of `items` with at most `max` elements, in a fixed order.
pub fn subsets(items: &[Term], max: usize) -> impl Iterator<Item = Vec<Term>> + '_ {
    (1..=max.min(items.len())).flat_map(move |k| items.iter().cloned().combinations(k))
}
