//! Literals, rules and specifications.

use std::collections::{BTreeMap, BTreeSet};

use crate::dist::{DistTerm, Q};
use crate::terms::{member_of, sym, DVar, Signature, Substitution, Sym, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Cmp {
    Gt,
    Ge,
    Lt,
    Le,
}

impl Cmp {
    pub fn holds(self, lhs: &Q, rhs: &Q) -> bool {
        match self {
            Cmp::Gt => lhs > rhs,
            Cmp::Ge => lhs >= rhs,
            Cmp::Lt => lhs < rhs,
            Cmp::Le => lhs <= rhs,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Cmp::Gt => ">",
            Cmp::Ge => ">=",
            Cmp::Lt => "<",
            Cmp::Le => "<=",
        }
    }
}

/// `t -a-> θ`
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PosLit {
    pub src: Term,
    pub label: Sym,
    pub tgt: DistTerm,
}

/// The `W` of a quantitative literal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum WSet {
    /// Explicit variables and closed terms; `varset` remembers a named finite set.
    Terms { elems: Vec<Term>, varset: Option<Sym> },
    /// A declared infinite family.
    Family(Sym),
}

impl WSet {
    pub fn terms(elems: Vec<Term>) -> WSet {
        WSet::Terms { elems, varset: None }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Literal {
    Pos(PosLit),
    Neg { src: Term, label: Sym },
    Quant { theta: DistTerm, w: WSet, cmp: Cmp, q: Q },
}

impl Literal {
    pub fn pos(src: Term, label: &str, tgt: DistTerm) -> Literal {
        Literal::Pos(PosLit { src, label: sym(label), tgt })
    }

    pub fn neg(src: Term, label: &str) -> Literal {
        Literal::Neg { src, label: sym(label) }
    }

    pub fn is_closed(&self) -> bool {
        match self {
            Literal::Pos(p) => p.src.is_closed() && p.tgt.is_closed(),
            Literal::Neg { src, .. } => src.is_closed(),
            Literal::Quant { theta, w, .. } => {
                theta.is_closed()
                    && match w {
                        WSet::Terms { elems, .. } => elems.iter().all(Term::is_closed),
                        WSet::Family(_) => false,
                    }
            }
        }
    }

    pub fn subst(&self, s: &Substitution) -> Literal {
        match self {
            Literal::Pos(p) => Literal::Pos(p.subst(s)),
            Literal::Neg { src, label } => Literal::Neg { src: s.term(src), label: label.clone() },
            Literal::Quant { theta, w, cmp, q } => {
                let w = match w {
                    WSet::Terms { elems, varset } => {
                        WSet::Terms { elems: elems.iter().map(|t| s.term(t)).collect(), varset: varset.clone() }
                    }
                    WSet::Family(y) => match s.families.get(y) {
                        Some(img) => WSet::terms(img.clone()),
                        None => WSet::Family(y.clone()),
                    },
                };
                Literal::Quant { theta: s.dist(theta), w, cmp: *cmp, q: q.clone() }
            }
        }
    }
}

impl PosLit {
    pub fn subst(&self, s: &Substitution) -> PosLit {
        PosLit { src: s.term(&self.src), label: self.label.clone(), tgt: s.dist(&self.tgt) }
    }
}

/// `forall y in Y: t(y) -a-> mu[y]` (or `-a-/->` when `target` is `None`).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FamilyPremise {
    pub family: Sym,
    pub binder: Sym,
    pub src: Term,
    pub label: Sym,
    pub target: Option<Sym>,
}

impl FamilyPremise {
    /// The premise for one member, with `binder` replaced by `u`.
    pub fn member(&self, u: &Term, s: &Substitution) -> Literal {
        let mut s2 = s.clone();
        s2.terms.insert(self.binder.clone(), u.clone());
        let src = s2.term(&self.src);
        match &self.target {
            Some(base) => {
                let v = DVar { base: base.clone(), index: Some(Box::new(Term::Var(self.binder.clone()))) };
                Literal::Pos(PosLit { src, label: self.label.clone(), tgt: s2.dvar(&v) })
            }
            None => Literal::Neg { src, label: self.label.clone() },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Premise {
    Lit(Literal),
    Family(FamilyPremise),
}

impl Premise {
    pub fn as_lit(&self) -> Option<&Literal> {
        match self {
            Premise::Lit(l) => Some(l),
            _ => None,
        }
    }

    pub fn is_positive(&self) -> bool {
        matches!(self, Premise::Lit(Literal::Pos(_)) | Premise::Family(FamilyPremise { target: Some(_), .. }))
    }

    pub fn is_negative(&self) -> bool {
        matches!(self, Premise::Lit(Literal::Neg { .. }) | Premise::Family(FamilyPremise { target: None, .. }))
    }

    pub fn is_quant(&self) -> bool {
        matches!(self, Premise::Lit(Literal::Quant { .. }))
    }

    /// Apply a substitution; families in `s.families` are materialised into
    /// one literal per image term.
    pub fn subst(&self, s: &Substitution) -> Vec<Premise> {
        match self {
            Premise::Lit(l) => vec![Premise::Lit(l.subst(s))],
            Premise::Family(fp) => match s.families.get(&fp.family) {
                Some(img) => img.iter().map(|u| Premise::Lit(fp.member(u, s))).collect(),
                None => {
                    let mut s2 = s.clone();
                    s2.terms.remove(&fp.binder);
                    vec![Premise::Family(FamilyPremise { src: s2.term(&fp.src), ..fp.clone() })]
                }
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rule {
    pub name: Sym,
    pub premises: Vec<Premise>,
    pub conc: PosLit,
}

/// Everything a rule binds or mentions, by namespace.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RuleVars {
    pub terms: BTreeSet<Sym>,
    pub dists: BTreeSet<DVar>,
    pub dist_bases: BTreeSet<Sym>,
    pub families: BTreeSet<Sym>,
    pub binders: BTreeSet<Sym>,
}

impl Rule {
    pub fn new(name: &str, premises: Vec<Premise>, conc: PosLit) -> Rule {
        Rule { name: sym(name), premises, conc }
    }

    pub fn subst(&self, s: &Substitution) -> Rule {
        Rule {
            name: self.name.clone(),
            premises: self.premises.iter().flat_map(|p| p.subst(s)).collect(),
            conc: self.conc.subst(s),
        }
    }

    pub fn lits(&self) -> impl Iterator<Item = &Literal> {
        self.premises.iter().filter_map(Premise::as_lit)
    }

    pub fn families(&self) -> impl Iterator<Item = &FamilyPremise> {
        self.premises.iter().filter_map(|p| match p {
            Premise::Family(f) => Some(f),
            _ => None,
        })
    }

    pub fn has_negative(&self) -> bool {
        self.premises.iter().any(Premise::is_negative)
    }

    pub fn has_quant(&self) -> bool {
        self.premises.iter().any(Premise::is_quant)
    }

    pub fn vars(&self) -> RuleVars {
        let mut rv = RuleVars::default();
        let dist = |th: &DistTerm, rv: &mut RuleVars| {
            th.term_vars_into(&mut rv.terms);
            th.dvars_into(&mut rv.dists);
        };
        for p in &self.premises {
            match p {
                Premise::Lit(Literal::Pos(pl)) => {
                    pl.src.vars_into(&mut rv.terms);
                    dist(&pl.tgt, &mut rv);
                }
                Premise::Lit(Literal::Neg { src, .. }) => src.vars_into(&mut rv.terms),
                Premise::Lit(Literal::Quant { theta, w, .. }) => {
                    dist(theta, &mut rv);
                    match w {
                        WSet::Terms { elems, .. } => elems.iter().for_each(|t| t.vars_into(&mut rv.terms)),
                        WSet::Family(y) => {
                            rv.families.insert(y.clone());
                        }
                    }
                }
                Premise::Family(fp) => {
                    rv.families.insert(fp.family.clone());
                    rv.binders.insert(fp.binder.clone());
                    let mut inner = fp.src.vars();
                    inner.remove(&fp.binder);
                    rv.terms.extend(inner);
                    if let Some(b) = &fp.target {
                        rv.dist_bases.insert(b.clone());
                    }
                }
            }
        }
        self.conc.src.vars_into(&mut rv.terms);
        dist(&self.conc.tgt, &mut rv);
        for t in &rv.terms {
            if let Some((fam, _)) = member_of(t) {
                rv.families.insert(sym(fam));
            }
        }
        rv.dist_bases.extend(rv.dists.iter().map(|d| d.base.clone()));
        rv
    }

    /// Rename every variable, family and binder through `r`.
    pub fn rename(&self, r: &Renaming) -> Rule {
        let ft = |x: &Sym| Some(Term::Var(r.term(x)));
        let fd = |v: &DVar| Some(DVar { base: r.dbase(&v.base), index: v.index.clone() });
        let lit = |l: &Literal| match l {
            Literal::Pos(p) => Literal::Pos(PosLit {
                src: p.src.map_vars(&ft),
                label: p.label.clone(),
                tgt: p.tgt.map_vars(&ft, &fd),
            }),
            Literal::Neg { src, label } => Literal::Neg { src: src.map_vars(&ft), label: label.clone() },
            Literal::Quant { theta, w, cmp, q } => Literal::Quant {
                theta: theta.map_vars(&ft, &fd),
                w: match w {
                    WSet::Terms { elems, varset } => {
                        WSet::Terms { elems: elems.iter().map(|t| t.map_vars(&ft)).collect(), varset: varset.clone() }
                    }
                    WSet::Family(y) => WSet::Family(r.family(y)),
                },
                cmp: *cmp,
                q: q.clone(),
            },
        };
        let premises = self
            .premises
            .iter()
            .map(|p| match p {
                Premise::Lit(l) => Premise::Lit(lit(l)),
                Premise::Family(fp) => Premise::Family(FamilyPremise {
                    family: r.family(&fp.family),
                    binder: r.term(&fp.binder),
                    src: fp.src.map_vars(&ft),
                    label: fp.label.clone(),
                    target: fp.target.as_ref().map(|b| r.dbase(b)),
                }),
            })
            .collect();
        let conc = match lit(&Literal::Pos(self.conc.clone())) {
            Literal::Pos(p) => p,
            _ => unreachable!(),
        };
        Rule { name: self.name.clone(), premises, conc }
    }

    /// Rename apart with a fresh suffix supply.
    pub fn rename_fresh(&self, fresh: &mut crate::terms::Fresh) -> (Rule, Renaming) {
        let rv = self.vars();
        let mut r = Renaming::default();
        for f in &rv.families {
            r.fams.insert(f.clone(), fresh.next(f));
        }
        for x in rv.terms.iter().chain(&rv.binders) {
            if member_of(x).is_none() {
                r.terms.insert(x.clone(), fresh.next(x));
            }
        }
        for b in &rv.dist_bases {
            r.dbases.insert(b.clone(), fresh.next(b));
        }
        (self.rename(&r), r)
    }
}

/// Name maps for the three namespaces. Unmapped names are kept. Family
/// members `Y[k]` follow their family.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Renaming {
    pub terms: BTreeMap<Sym, Sym>,
    pub dbases: BTreeMap<Sym, Sym>,
    pub fams: BTreeMap<Sym, Sym>,
}

impl Renaming {
    pub fn term(&self, x: &Sym) -> Sym {
        if let Some(y) = self.terms.get(x) {
            return y.clone();
        }
        if let Some((fam, k)) = member_of(x) {
            if let Some(f2) = self.fams.get(fam) {
                return crate::terms::member_name(f2, k);
            }
        }
        x.clone()
    }

    pub fn dbase(&self, b: &Sym) -> Sym {
        self.dbases.get(b).cloned().unwrap_or_else(|| b.clone())
    }

    pub fn family(&self, y: &Sym) -> Sym {
        self.fams.get(y).cloned().unwrap_or_else(|| y.clone())
    }
}

/// P = (Σ, A, R) together with the declared families and finite variable sets.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Ptss {
    pub sig: Signature,
    pub families: BTreeSet<Sym>,
    pub varsets: BTreeMap<Sym, Vec<Sym>>,
    pub rules: Vec<Rule>,
}

impl Ptss {
    pub fn rule(&self, name: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| &*r.name == name)
    }

    pub fn has_negative(&self) -> bool {
        self.rules.iter().any(Rule::has_negative)
    }

    /// Every name used anywhere, for fresh-name generation.
    pub fn all_names(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = BTreeSet::new();
        out.extend(self.sig.funs.keys().map(|s| s.to_string()));
        out.extend(self.sig.labels.iter().map(|s| s.to_string()));
        out.extend(self.families.iter().map(|s| s.to_string()));
        out.extend(self.varsets.keys().map(|s| s.to_string()));
        for r in &self.rules {
            out.insert(r.name.to_string());
            let rv = r.vars();
            out.extend(rv.terms.iter().map(|s| s.to_string()));
            out.extend(rv.binders.iter().map(|s| s.to_string()));
            out.extend(rv.dist_bases.iter().map(|s| s.to_string()));
            out.extend(rv.families.iter().map(|s| s.to_string()));
        }
        out
    }

    /// Declare every family used by the rules (after renaming or reduction).
    pub fn declare_used_families(&mut self) {
        for r in &self.rules {
            for f in r.vars().families {
                if !self.varsets.contains_key(&f) {
                    self.families.insert(f);
                }
            }
        }
    }
}
