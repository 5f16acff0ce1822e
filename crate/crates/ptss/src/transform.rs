//! The reduction pipeline: ntμxθ → ntμfθ → nxμfθ → pntree.
//!
//! Stage 2 unfolds positive premises with non-variable sources into the
//! premises of a matching rule, breadth-first by the number of unfoldings.
//! Stage 3 closes everything the conclusion does not ground over a bounded
//! universe and trades closed positive premises for negative support sets.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use crate::dist::{eval_dist, mass, DistTerm};
use crate::format::{binder_map, check_rule, dependency_graph, term_node, FormatKind, Node};
use crate::rules::{Literal, Premise, Ptss, Rule, WSet};
use crate::semantics::instance::{instances, Bounds, Oracle, Seed, Slot, Split};
use crate::semantics::proof::canonical_key;
use crate::semantics::WsSets;
use crate::syntax::{render_dist, render_rule, render_term};
use crate::terms::{mgu, sym, Fresh, Signature, Substitution, Term};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TransformError {
    #[error("rule {0} is in neither ntmuftheta nor ntmuxtheta format")]
    Format(String),
}

/// One rewriting step.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub rule: String,
    /// Rules whose conclusions were folded in, in order.
    pub via: Vec<String>,
    pub rho: BTreeMap<String, String>,
    pub rho_prime: BTreeMap<String, String>,
    pub output: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct StageTrace {
    pub stage: String,
    pub fuel: Option<usize>,
    pub input: Vec<String>,
    pub steps: Vec<TraceStep>,
    pub output: Vec<String>,
    pub fuel_exhausted: bool,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ReductionTrace {
    pub stages: Vec<StageTrace>,
}

impl ReductionTrace {
    pub fn fuel_exhausted(&self) -> bool {
        self.stages.iter().any(|s| s.fuel_exhausted)
    }
}

pub fn render_subst(sig: &Signature, s: &Substitution) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for (x, t) in &s.terms {
        out.insert(x.to_string(), render_term(sig, t));
    }
    for (m, th) in &s.dists {
        out.insert(render_dist(sig, &DistTerm::Var(m.clone())), render_dist(sig, th));
    }
    for (y, img) in &s.families {
        let img: Vec<String> = img.iter().map(|t| render_term(sig, t)).collect();
        out.insert(y.to_string(), format!("{{{}}}", img.join(", ")));
    }
    out
}

fn rendered(p: &Ptss) -> Vec<String> {
    p.rules.iter().map(|r| render_rule(&p.sig, r)).collect()
}

fn with_rules(p: &Ptss, rules: Vec<Rule>) -> Ptss {
    let mut out = Ptss { rules, ..p.clone() };
    out.declare_used_families();
    out
}

/// Collects rules, dropping canonical duplicates.
struct Sink<'a> {
    sig: &'a Signature,
    keys: BTreeSet<String>,
    rules: Vec<Rule>,
}

impl<'a> Sink<'a> {
    fn new(sig: &'a Signature) -> Self {
        Sink { sig, keys: BTreeSet::new(), rules: Vec::new() }
    }

    fn push(&mut self, r: Rule) -> bool {
        if self.keys.insert(canonical_key(self.sig, &r)) {
            self.rules.push(r);
            true
        } else {
            false
        }
    }
}

/// Stage 1: a rule `x -a-> θ` becomes one rule per function symbol `f`,
/// with `x := f(x_1, ..., x_n)` throughout.
pub fn reduce_ntmuxtheta(p: &Ptss) -> Result<(Ptss, StageTrace), TransformError> {
    let mut trace = StageTrace { stage: "ntmuxtheta".into(), input: rendered(p), ..Default::default() };
    let mut fresh = Fresh::avoiding(p.all_names());
    let mut out = Vec::new();
    for r in &p.rules {
        let rep = check_rule(p, r);
        if !rep.satisfies(FormatKind::Ntmuxtheta) {
            return Err(TransformError::Format(r.name.to_string()));
        }
        let Term::Var(x) = &r.conc.src else {
            out.push(r.clone());
            continue;
        };
        for f in p.sig.funs.values() {
            let args = (0..f.arity).map(|_| Term::Var(fresh.next(x))).collect();
            let mut s = Substitution::identity();
            s.terms.insert(x.clone(), Term::App(f.name.clone(), args));
            let mut r2 = r.subst(&s);
            r2.name = sym(&format!("{}_{}", r.name, f.name));
            trace.steps.push(TraceStep {
                rule: r.name.to_string(),
                rho: render_subst(&p.sig, &s),
                output: Some(render_rule(&p.sig, &r2)),
                ..Default::default()
            });
            out.push(r2);
        }
    }
    let out = with_rules(p, out);
    trace.output = rendered(&out);
    Ok((out, trace))
}

/// Drop closed quantitative premises that hold; `None` if one fails.
fn discharge(premises: Vec<Premise>) -> Option<Vec<Premise>> {
    let mut out = Vec::new();
    for pr in premises {
        if let Premise::Lit(l @ Literal::Quant { .. }) = &pr {
            if l.is_closed() {
                let Literal::Quant { theta, w: WSet::Terms { elems, .. }, cmp, q } = l else { return None };
                let pi = eval_dist(theta).ok()?;
                if elems.iter().any(|t| pi.prob(t) == num::zero()) || !cmp.holds(&mass(&pi, elems), q) {
                    return None;
                }
                continue;
            }
        }
        if !out.contains(&pr) {
            out.push(pr);
        }
    }
    Some(out)
}

/// First positive literal premise whose source is not a variable.
fn unfold_target(r: &Rule) -> Option<usize> {
    r.premises.iter().position(|p| matches!(p, Premise::Lit(Literal::Pos(pl)) if !pl.src.is_var()))
}

/// Stage 2. `fuel` bounds the number of unfoldings along any branch.
pub fn reduce_to_nxmuftheta(p: &Ptss, fuel: usize) -> (Ptss, StageTrace) {
    let mut trace =
        StageTrace { stage: "nxmuftheta".into(), fuel: Some(fuel), input: rendered(p), ..Default::default() };
    let mut fresh = Fresh::avoiding(p.all_names());
    let mut sink = Sink::new(&p.sig);
    for r in &p.rules {
        let mut count = 0;
        let mut queue: VecDeque<(Rule, usize, Vec<String>)> = VecDeque::new();
        queue.push_back((r.clone(), 0, Vec::new()));
        while let Some((cur, depth, via)) = queue.pop_front() {
            let Some(i) = unfold_target(&cur) else {
                let stuck = cur.families().any(|f| f.target.is_some() && !f.src.is_var());
                if stuck {
                    trace.warnings.push(format!(
                        "{}: a family premise has a non-variable source and cannot be unfolded",
                        r.name
                    ));
                }
                let mut out = cur;
                out.name = if via.is_empty() { r.name.clone() } else { sym(&format!("{}_{count}", r.name)) };
                if !via.is_empty() {
                    count += 1;
                }
                if let Some(last) = trace.steps.iter_mut().rev().find(|s| s.output.is_none() && s.via == via) {
                    last.output = Some(render_rule(&p.sig, &out));
                }
                sink.push(out);
                continue;
            };
            if depth == fuel {
                trace.fuel_exhausted = true;
                continue;
            }
            let Premise::Lit(Literal::Pos(pl)) = &cur.premises[i] else { unreachable!() };
            let Term::App(f, ts) = &pl.src else { unreachable!() };
            let DistTerm::Var(mu) = &pl.tgt else {
                trace.warnings.push(format!("{}: positive premise target is not a variable", r.name));
                continue;
            };
            for q in p.rules.iter().filter(|q| q.conc.label == pl.label) {
                let Term::App(g, xs) = &q.conc.src else { continue };
                if g != f || xs.len() != ts.len() {
                    continue;
                }
                let (q2, _) = q.rename_fresh(&mut fresh);
                let Term::App(_, xs) = &q2.conc.src else { unreachable!() };
                let mut rho = Substitution::identity();
                for (x, t) in xs.iter().zip(ts) {
                    let x = x.as_var().expect("ntmuftheta conclusion arguments are variables");
                    rho.terms.insert(x.clone(), t.clone());
                }
                rho.dists.insert(mu.clone(), q2.conc.tgt.clone());
                let Ok(rho2) = mgu(&rho) else { continue };
                let mut premises: Vec<Premise> = cur.premises[..i].to_vec();
                premises.extend(q2.premises.iter().cloned());
                premises.extend(cur.premises[i + 1..].iter().cloned());
                let premises: Vec<Premise> = premises.iter().flat_map(|pr| pr.subst(&rho2)).collect();
                let mut via2 = via.clone();
                via2.push(q.name.to_string());
                trace.steps.push(TraceStep {
                    rule: r.name.to_string(),
                    via: via2.clone(),
                    rho: render_subst(&p.sig, &rho),
                    rho_prime: render_subst(&p.sig, &rho2),
                    output: None,
                });
                let Some(premises) = discharge(premises) else { continue };
                let next = Rule { name: cur.name.clone(), premises, conc: cur.conc.subst(&rho2) };
                queue.push_back((next, depth + 1, via2));
            }
        }
    }
    trace.steps.retain(|s| s.output.is_some());
    let out = with_rules(p, sink.rules);
    for rep in out.rules.iter().map(|r| check_rule(&out, r)) {
        if !rep.nxmuftheta {
            trace.warnings.push(format!("{} is not in nxmuftheta format", rep.rule));
        }
    }
    trace.output = rendered(&out);
    (out, trace)
}

/// Records closed sources the universe does not contain.
struct Watch<'a> {
    inner: Split<'a>,
    universe: BTreeSet<&'a Term>,
    missed: RefCell<BTreeSet<Term>>,
}

impl Oracle for Watch<'_> {
    fn targets(&self, src: &Term, label: &str) -> Vec<crate::dist::FiniteDistribution> {
        if !self.universe.contains(src) {
            self.missed.borrow_mut().insert(src.clone());
        }
        self.inner.targets(src, label)
    }

    fn allows_neg(&self, src: &Term, label: &str) -> bool {
        self.inner.allows_neg(src, label)
    }
}

/// Largest number of support-set combinations tried per instance.
pub const H_CAP: usize = 4096;

/// Stage 3 over the universe `u`.
pub fn reduce_to_pntree(p: &Ptss, u: &[Term]) -> (Ptss, StageTrace) {
    let mut trace = StageTrace { stage: "pntree".into(), input: rendered(p), ..Default::default() };
    let ws = WsSets::compute(p, u);
    trace.fuel_exhausted = ws.sup_truncated;
    let mut sink = Sink::new(&p.sig);
    let mut missed = BTreeSet::new();
    for r in &p.rules {
        if check_rule(p, r).pntree {
            sink.push(r.clone());
            continue;
        }
        let bm = binder_map(r);
        let g = dependency_graph(r);
        let grounded = g.reachable(r.conc.src.vars().iter().map(|x| term_node(x, &bm)));
        let bindable = |s: &Slot| {
            let n = match s {
                Slot::Term(x) => term_node(x, &bm),
                Slot::Dist(b) => Node::D(b.clone()),
                Slot::Family(y) => Node::F(y.clone()),
            };
            !grounded.contains(&n)
        };
        let mut bounds = Bounds::new(u);
        bounds.bindable = Some(&bindable);
        let oracle =
            Watch { inner: Split { pos: &ws.psi, neg: None }, universe: u.iter().collect(), missed: RefCell::default() };
        let mut count = 0;
        instances(r, &oracle, &bounds, Seed::Free, &mut |inst| {
            let conc = r.conc.subst(&inst.sigma);
            let mut base: Vec<Premise> = inst.residual.clone();
            for (s, a) in &inst.neg {
                let n = Premise::Lit(Literal::neg(s.clone(), a));
                if !base.contains(&n) {
                    base.push(n);
                }
            }
            // One choice of support set per closed positive premise.
            let mut combos: Vec<BTreeSet<(Term, crate::terms::Sym)>> = vec![BTreeSet::new()];
            for t in &inst.pos {
                let Some(ss) = ws.sup.get(t) else {
                    combos.clear();
                    break;
                };
                let mut next = Vec::new();
                for c in &combos {
                    for s in ss {
                        if next.len() >= H_CAP {
                            trace.fuel_exhausted = true;
                            break;
                        }
                        next.push(c.union(s).cloned().collect());
                    }
                }
                combos = next;
            }
            for h in combos {
                let mut premises = base.clone();
                for (s, a) in h {
                    let n = Premise::Lit(Literal::neg(s, &a));
                    if !premises.contains(&n) {
                        premises.push(n);
                    }
                }
                let out = Rule { name: sym(&format!("{}_{count}", r.name)), premises, conc: conc.clone() };
                if sink.push(out.clone()) {
                    count += 1;
                    trace.steps.push(TraceStep {
                        rule: r.name.to_string(),
                        rho: render_subst(&p.sig, &inst.sigma),
                        output: Some(render_rule(&p.sig, &out)),
                        ..Default::default()
                    });
                }
            }
            true
        });
        missed.extend(oracle.missed.into_inner());
    }
    for t in &missed {
        trace.warnings.push(format!("universe too small: premise source {} lies outside it", render_term(&p.sig, t)));
    }
    let out = with_rules(p, sink.rules);
    for rep in out.rules.iter().map(|r| check_rule(&out, r)) {
        if !rep.pntree {
            trace.warnings.push(format!("{} is not in pntree format", rep.rule));
        }
    }
    trace.output = rendered(&out);
    (out, trace)
}

/// All three stages.
pub fn reduce_full(p: &Ptss, u: &[Term], fuel: usize) -> Result<(Ptss, ReductionTrace), TransformError> {
    let (p1, t1) = reduce_ntmuxtheta(p)?;
    let (p2, t2) = reduce_to_nxmuftheta(&p1, fuel);
    let (p3, t3) = reduce_to_pntree(&p2, u);
    Ok((p3, ReductionTrace { stages: vec![t1, t2, t3] }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::check;
    use crate::semantics::build_stratified_model;
    use crate::strata::{StrataPattern, Stratification};
    use crate::syntax::parse;
    use crate::universe::universe;

    #[test]
    fn variable_conclusions_split_per_symbol() {
        let s = parse("signature { a/0; plus/2 infix \"+\" } labels { a } rule r { x - a -> mu --- x - a -> mu }")
            .unwrap();
        let (out, _) = reduce_ntmuxtheta(&s.ptss).unwrap();
        assert_eq!(out.rules.len(), 2);
        assert!(check(&out, FormatKind::Ntmuftheta).ok);
    }

    #[test]
    fn unfolding_replaces_compound_sources() {
        let s = parse(
            "signature { a/0; f/1; g/1 } labels { a, b }
             rule base { x - b -> mu --- f(x) - a -> mu }
             rule top { f(y) - a -> mu2 --- g(y) - b -> mu2 }",
        )
        .unwrap();
        let (out, t) = reduce_to_nxmuftheta(&s.ptss, 3);
        assert!(!t.fuel_exhausted);
        assert!(check(&out, FormatKind::Nxmuftheta).ok, "{:?}", t.warnings);
        let top = out.rules.iter().find(|r| r.name.starts_with("top")).unwrap();
        let Premise::Lit(Literal::Pos(pl)) = &top.premises[0] else { panic!() };
        assert_eq!(pl.src, Term::var("y"));
        assert_eq!(&*pl.label, "b");
        assert_eq!(top.conc.tgt, DistTerm::Var(pl.tgt.dvars().into_iter().next().unwrap()));
    }

    #[test]
    fn f_spec_survives_the_pipeline() {
        let s = parse(
            "signature { f/0 } labels { a, b }
             rule r1 { f - a -> mu --- f - a -> delta(f) }
             rule r2 { f - a -/-> --- f - b -> delta(f) }",
        )
        .unwrap();
        let u = universe(&s.ptss.sig, 1, &[]);
        let (out, t) = reduce_full(&s.ptss, &u, 3).unwrap();
        assert!(t.fuel_exhausted());
        assert!(check(&out, FormatKind::Pntree).ok);
        let st = Stratification {
            name: None,
            strict: false,
            patterns: vec![StrataPattern { src: Term::cst("f"), label: Some(sym("b")), level: 1 }],
            default: 0,
        };
        let m = build_stratified_model(&s.ptss, &st, &u);
        assert_eq!(m.len(), 1);
        assert_eq!(build_stratified_model(&out, &st, &u), m);
    }

    #[test]
    fn free_variables_are_closed_over_the_universe() {
        let s = parse(
            "signature { a/0; b/0; g/1 } labels { go, c }
             rule ax { a - c -> delta(b) }
             rule r { z - c -> mu --- g(x) - go -> mu }",
        )
        .unwrap();
        let u = universe(&s.ptss.sig, 1, &[]);
        let (out, _) = reduce_to_pntree(&s.ptss, &u);
        assert!(check(&out, FormatKind::Pntree).ok);
        let r: Vec<&Rule> = out.rules.iter().filter(|r| r.name.starts_with("r_")).collect();
        assert_eq!(r.len(), 1);
        assert!(r[0].premises.is_empty());
        assert_eq!(r[0].conc.tgt, DistTerm::dirac(Term::cst("b")));
    }
}
