//! Supported models and stratified models over a bounded universe.

use std::collections::{BTreeMap, BTreeSet};

use super::instance::{all_instances, instances, Bounds, Oracle, Seed, Split};
use super::{Transition, TransitionRelation};
use crate::dist::FiniteDistribution;
use crate::rules::{Literal, Premise, Ptss};
use crate::strata::Stratification;
use crate::terms::{Sym, Term};
use crate::universe::{dirac_universe, tuples};

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct SupportReport {
    pub is_model: bool,
    pub is_supported: bool,
    /// Conclusions of instances that hold in the relation but are missing from it.
    #[serde(skip)]
    pub missing: Vec<Transition>,
    /// Transitions no instance justifies.
    #[serde(skip)]
    pub unsupported: Vec<Transition>,
}

/// Check both halves of the supported-model condition on `tr`, for rule
/// instances whose conclusion source lies in `u`.
pub fn check_supported_model(p: &Ptss, u: &[Term], tr: &TransitionRelation) -> SupportReport {
    let bounds = Bounds::new(u);
    let mut missing = BTreeSet::new();
    for r in &p.rules {
        instances(r, tr, &bounds, Seed::Universe, &mut |i| {
            if let Some(c) = i.conc {
                if !tr.contains(&c.src, &c.label, &c.target) {
                    missing.insert(c);
                }
            }
            true
        });
    }
    let mut unsupported = Vec::new();
    for psi in tr.transitions() {
        let mut found = false;
        for r in p.rules.iter().filter(|r| r.conc.label == psi.label) {
            instances(r, tr, &bounds, Seed::Term(&psi.src), &mut |i| {
                found = i.conc.as_ref() == Some(&psi);
                !found
            });
            if found {
                break;
            }
        }
        if !found {
            unsupported.push(psi);
        }
    }
    SupportReport {
        is_model: missing.is_empty(),
        is_supported: unsupported.is_empty(),
        missing: missing.into_iter().collect(),
        unsupported,
    }
}

/// Build the relation stratum by stratum. Negative premises of a conclusion
/// in stratum β are read against the strata below β.
pub fn build_stratified_model(p: &Ptss, s: &Stratification, u: &[Term]) -> TransitionRelation {
    let bounds = Bounds::new(u);
    let mut levels: BTreeSet<u32> = s.patterns.iter().map(|p| p.level).collect();
    levels.insert(s.default);
    let mut cur = TransitionRelation::new();
    for beta in levels {
        let lower = cur.clone();
        loop {
            let mut fresh = Vec::new();
            {
                let oracle = Split { pos: &cur, neg: Some(&lower) };
                for r in &p.rules {
                    instances(r, &oracle, &bounds, Seed::Universe, &mut |i| {
                        if let Some(c) = i.conc {
                            if s.level(&c.src, &c.label) == beta && !cur.contains(&c.src, &c.label, &c.target) {
                                fresh.push(c);
                            }
                        }
                        true
                    });
                }
            }
            if fresh.is_empty() {
                break;
            }
            for c in fresh {
                cur.insert_tr(c);
            }
        }
    }
    cur
}

/// The relation a spec denotes on `u`: the model of its first declared
/// stratification, the least model when it has no negative premises, and the
/// ws-provable transitions otherwise.
pub fn default_model(p: &Ptss, strata: &[Stratification], u: &[Term]) -> TransitionRelation {
    match strata.first() {
        Some(s) => build_stratified_model(p, s, u),
        None if !p.has_negative() => build_stratified_model(p, &Stratification::constant(0), u),
        None => super::WsSets::compute(p, u).positive(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct StrataReport {
    pub ok: bool,
    pub strict: bool,
    pub violations: Vec<String>,
    /// Source assignments examined.
    pub checked: usize,
    /// Rules whose assignment space exceeded the cap and was cut short.
    pub truncated: Vec<String>,
}

const ASSIGNMENT_CAP: usize = 200_000;

/// Check the stratification conditions over every assignment of the term
/// variables occurring in premise and conclusion sources. Properness and
/// targets are ignored, which can only add violations.
pub fn check_stratification(p: &Ptss, s: &Stratification, u: &[Term]) -> StrataReport {
    let mut violations = Vec::new();
    let mut truncated = Vec::new();
    let mut checked = 0;
    for r in &p.rules {
        // (source, label, is_negative); family premises contribute their template.
        let mut prem: Vec<(Term, Sym, bool)> = Vec::new();
        for pr in &r.premises {
            match pr {
                Premise::Lit(Literal::Pos(pl)) => prem.push((pl.src.clone(), pl.label.clone(), false)),
                Premise::Lit(Literal::Neg { src, label }) => prem.push((src.clone(), label.clone(), true)),
                Premise::Lit(Literal::Quant { .. }) => {}
                Premise::Family(fp) => prem.push((fp.src.clone(), fp.label.clone(), fp.target.is_none())),
            }
        }
        let mut vars: BTreeSet<Sym> = r.conc.src.vars();
        for (t, _, _) in &prem {
            vars.extend(t.vars());
        }
        let vars: Vec<Sym> = vars.into_iter().collect();
        let space = u.len().checked_pow(vars.len() as u32).unwrap_or(usize::MAX);
        if space > ASSIGNMENT_CAP {
            truncated.push(r.name.to_string());
        }
        let mut seen = BTreeSet::new();
        for vals in tuples(u, vars.len()).into_iter().take(ASSIGNMENT_CAP) {
            checked += 1;
            let env: BTreeMap<&Sym, &Term> = vars.iter().zip(&vals).collect();
            let inst = |t: &Term| t.map_vars(&|x| env.get(x).map(|v| (*v).clone()));
            let c = inst(&r.conc.src);
            let lc = s.level(&c, &r.conc.label);
            for (i, (t, a, negative)) in prem.iter().enumerate() {
                let ti = inst(t);
                let lp = s.level(&ti, a);
                let bad = if *negative || s.strict { lp >= lc } else { lp > lc };
                if bad && seen.insert(i) {
                    let rel = if *negative || s.strict { "<" } else { "<=" };
                    violations.push(format!(
                        "rule {}: premise {:?} -{a}-> at level {lp} must be {rel} conclusion {:?} -{}-> at level {lc}",
                        r.name, ti, c, r.conc.label
                    ));
                }
            }
        }
    }
    StrataReport { ok: violations.is_empty(), strict: s.strict, violations, checked, truncated }
}

/// Positive premises drawn from the candidates or from universe Diracs,
/// negative premises always allowed.
struct Candidates<'a> {
    c: &'a TransitionRelation,
    diracs: &'a [FiniteDistribution],
}

impl Oracle for Candidates<'_> {
    fn targets(&self, src: &Term, label: &str) -> Vec<FiniteDistribution> {
        let mut v: BTreeSet<FiniteDistribution> = self.c.targets(src, label).cloned().collect();
        v.extend(self.diracs.iter().cloned());
        v.into_iter().collect()
    }

    fn allows_neg(&self, _: &Term, _: &str) -> bool {
        true
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SearchError {
    #[error("{0} candidate transitions exceed the search cap of {1}")]
    TooManyCandidates(usize, usize),
}

pub const SEARCH_CAP: usize = 20;

/// Every supported model whose transitions are candidates: conclusions of
/// instances whose positive premises are candidates or universe Diracs.
pub fn supported_models(p: &Ptss, u: &[Term]) -> Result<Vec<TransitionRelation>, SearchError> {
    let bounds = Bounds::new(u);
    let diracs = dirac_universe(u);
    let mut cand = TransitionRelation::new();
    loop {
        let mut fresh = Vec::new();
        let oracle = Candidates { c: &cand, diracs: &diracs };
        for r in &p.rules {
            for i in all_instances(r, &oracle, &bounds, Seed::Universe) {
                if let Some(c) = i.conc {
                    if !cand.contains(&c.src, &c.label, &c.target) {
                        fresh.push(c);
                    }
                }
            }
        }
        if fresh.is_empty() {
            break;
        }
        for c in fresh {
            cand.insert_tr(c);
        }
    }
    let cs = cand.transitions();
    if cs.len() > SEARCH_CAP {
        return Err(SearchError::TooManyCandidates(cs.len(), SEARCH_CAP));
    }
    let index: BTreeMap<&Transition, usize> = cs.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let enabled_mask = |src: &Term, label: &str| -> u32 {
        cs.iter()
            .enumerate()
            .filter(|(_, t)| &t.src == src && &*t.label == label)
            .fold(0, |m, (i, _)| m | (1 << i))
    };
    // (positive mask, negative mask, conclusion bit)
    let mut rules: Vec<(u32, u32, usize)> = Vec::new();
    let oracle = Candidates { c: &cand, diracs: &diracs };
    for r in &p.rules {
        'inst: for i in all_instances(r, &oracle, &bounds, Seed::Universe) {
            let Some(c) = i.conc else { continue };
            let mut pm = 0u32;
            for t in &i.pos {
                match index.get(t) {
                    Some(k) => pm |= 1 << k,
                    None => continue 'inst,
                }
            }
            let nm = i.neg.iter().fold(0, |m, (s, l)| m | enabled_mask(s, l));
            rules.push((pm, nm, index[&c]));
        }
    }
    let mut out = Vec::new();
    for m in 0u32..(1u32 << cs.len()) {
        let t = rules
            .iter()
            .filter(|(pm, nm, _)| pm & !m == 0 && nm & m == 0)
            .fold(0u32, |acc, (_, _, c)| acc | (1 << c));
        if t == m {
            out.push(cs.iter().enumerate().filter(|(i, _)| m & (1 << i) != 0).map(|(_, t)| t.clone()).collect());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strata::StrataPattern;
    use crate::syntax::parse;
    use crate::terms::sym;

    const F: &str = "signature { f/0 } labels { a, b }
        rule r1 { f - a -> mu --- f - a -> delta(f) }
        rule r2 { f - a -/-> --- f - b -> delta(f) }";

    fn only(label: &str) -> TransitionRelation {
        let f = Term::cst("f");
        [Transition { src: f.clone(), label: sym(label), target: FiniteDistribution::dirac(f) }].into_iter().collect()
    }

    #[test]
    fn f_spec_has_two_supported_models() {
        let s = parse(F).unwrap();
        let u = vec![Term::cst("f")];
        let ms = supported_models(&s.ptss, &u).unwrap();
        assert_eq!(ms.len(), 2);
        assert!(ms.contains(&only("a")) && ms.contains(&only("b")));
        for m in &ms {
            let rep = check_supported_model(&s.ptss, &u, m);
            assert!(rep.is_model && rep.is_supported);
        }
        assert!(!check_supported_model(&s.ptss, &u, &TransitionRelation::new()).is_model);
    }

    #[test]
    fn f_spec_stratified() {
        let s = parse(F).unwrap();
        let u = vec![Term::cst("f")];
        let st = Stratification {
            name: None,
            strict: false,
            patterns: vec![
                StrataPattern { src: Term::cst("f"), label: Some(sym("a")), level: 0 },
                StrataPattern { src: Term::cst("f"), label: Some(sym("b")), level: 1 },
            ],
            default: 0,
        };
        assert!(check_stratification(&s.ptss, &st, &u).ok);
        assert_eq!(build_stratified_model(&s.ptss, &st, &u), only("b"));
        let flat = check_stratification(&s.ptss, &Stratification::constant(0), &u);
        assert!(!flat.ok);
        assert_eq!(flat.violations.len(), 1);
    }
}
