//! Distribution terms and exact finite-support distributions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num::{BigInt, BigRational, One, Signed, Zero};

use crate::terms::{sym, DVar, Substitution, Sym, Term};

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Render a rational as `num/den` (or just `num` for integers).
pub fn q_str(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Parse `n`, `n/d` or a decimal `0.25` exactly.
pub fn parse_q(s: &str) -> Option<Q> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Q::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        if int.starts_with('-') || int.starts_with('+') {
            return None;
        }
        let int: BigInt = if int.is_empty() { BigInt::zero() } else { int.parse().ok()? };
        let scale = num::pow(BigInt::from(10), frac.len());
        let f: BigInt = frac.parse().ok()?;
        return Some(Q::new(int * &scale + f, scale));
    }
    Some(Q::from_integer(s.parse().ok()?))
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum DistError {
    #[error("context is not linear: hole _{0} occurs {1} times")]
    NonLinear(usize, usize),
    #[error("context holes must be numbered _1.._n contiguously")]
    HoleGap,
    #[error("context mentions term variable `{0}`")]
    ContextVar(String),
    #[error("coefficient {0} is outside (0,1]")]
    BadCoefficient(String),
    #[error("coefficients sum to {0}, not 1")]
    BadMass(String),
    #[error("context has {0} holes but {1} arguments are given")]
    ArgCount(usize, usize),
    #[error("open distribution term: {0}")]
    Open(String),
}

pub fn hole(k: usize) -> Term {
    Term::Var(sym(&format!("_{k}")))
}

pub fn hole_index(x: &str) -> Option<usize> {
    x.strip_prefix('_')?.parse().ok().filter(|k| *k >= 1)
}

/// A closed term over holes `_1.._n`, each occurring exactly once.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Context {
    pub term: Term,
    pub holes: usize,
}

impl Context {
    pub fn new(term: Term) -> Result<Context, DistError> {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        count_holes(&term, &mut counts)?;
        let n = counts.len();
        for (i, (k, c)) in counts.iter().enumerate() {
            if *k != i + 1 {
                return Err(DistError::HoleGap);
            }
            if *c != 1 {
                return Err(DistError::NonLinear(*k, *c));
            }
        }
        Ok(Context { term, holes: n })
    }

    /// The context `_1`.
    pub fn id() -> Context {
        Context { term: hole(1), holes: 1 }
    }

    /// Binary infix context `_1 op _2` for the function symbol `f`.
    pub fn binary(f: &str) -> Context {
        Context { term: Term::app(f, vec![hole(1), hole(2)]), holes: 2 }
    }

    pub fn constant(t: Term) -> Context {
        Context { term: t, holes: 0 }
    }

    pub fn fill(&self, args: &[Term]) -> Term {
        self.term.map_vars(&|x| hole_index(x).map(|k| args[k - 1].clone()))
    }
}

fn count_holes(t: &Term, counts: &mut BTreeMap<usize, usize>) -> Result<(), DistError> {
    match t {
        Term::Var(x) => match hole_index(x) {
            Some(k) => {
                *counts.entry(k).or_default() += 1;
                Ok(())
            }
            None => Err(DistError::ContextVar(x.to_string())),
        },
        Term::App(_, args) => args.iter().try_for_each(|a| count_holes(a, counts)),
    }
}

/// One summand `p · g(θ₁,…,θₙ)` of a convex combination.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Summand {
    pub p: Q,
    pub ctx: Context,
    pub args: Vec<DistTerm>,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DistTerm {
    Var(DVar),
    Dirac(Term),
    Convex(Vec<Summand>),
}

impl DistTerm {
    pub fn var(name: &str) -> DistTerm {
        DistTerm::Var(DVar::plain(name))
    }

    pub fn dirac(t: Term) -> DistTerm {
        DistTerm::Dirac(t)
    }

    /// Checked convex combination. A lone weight-1 constant context collapses
    /// to the Dirac on that constant.
    pub fn convex(summands: Vec<Summand>) -> Result<DistTerm, DistError> {
        let mut total = Q::zero();
        for s in &summands {
            if !s.p.is_positive() || s.p > Q::one() {
                return Err(DistError::BadCoefficient(q_str(&s.p)));
            }
            if s.ctx.holes != s.args.len() {
                return Err(DistError::ArgCount(s.ctx.holes, s.args.len()));
            }
            total += &s.p;
        }
        if !total.is_one() {
            return Err(DistError::BadMass(q_str(&total)));
        }
        if summands.len() == 1 && summands[0].ctx.holes == 0 {
            return Ok(DistTerm::Dirac(summands[0].ctx.term.clone()));
        }
        Ok(DistTerm::Convex(summands))
    }

    /// `θ₁ op θ₂` lifted through the binary symbol `f`.
    pub fn lift2(f: &str, a: DistTerm, b: DistTerm) -> DistTerm {
        DistTerm::Convex(vec![Summand { p: Q::one(), ctx: Context::binary(f), args: vec![a, b] }])
    }

    pub fn is_closed(&self) -> bool {
        match self {
            DistTerm::Var(_) => false,
            DistTerm::Dirac(t) => t.is_closed(),
            DistTerm::Convex(ss) => ss.iter().all(|s| s.args.iter().all(DistTerm::is_closed)),
        }
    }

    /// Term variables, including those inside Diracs and variable indices.
    pub fn term_vars_into(&self, out: &mut BTreeSet<Sym>) {
        match self {
            DistTerm::Var(v) => {
                if let Some(i) = &v.index {
                    i.vars_into(out);
                }
            }
            DistTerm::Dirac(t) => t.vars_into(out),
            DistTerm::Convex(ss) => ss.iter().flat_map(|s| &s.args).for_each(|a| a.term_vars_into(out)),
        }
    }

    pub fn term_vars(&self) -> BTreeSet<Sym> {
        let mut s = BTreeSet::new();
        self.term_vars_into(&mut s);
        s
    }

    pub fn dvars_into(&self, out: &mut BTreeSet<DVar>) {
        match self {
            DistTerm::Var(v) => {
                out.insert(v.clone());
            }
            DistTerm::Dirac(_) => {}
            DistTerm::Convex(ss) => ss.iter().flat_map(|s| &s.args).for_each(|a| a.dvars_into(out)),
        }
    }

    pub fn dvars(&self) -> BTreeSet<DVar> {
        let mut s = BTreeSet::new();
        self.dvars_into(&mut s);
        s
    }

    /// Dirac terms appearing anywhere inside.
    pub fn diracs_into(&self, out: &mut Vec<Term>) {
        match self {
            DistTerm::Var(_) => {}
            DistTerm::Dirac(t) => out.push(t.clone()),
            DistTerm::Convex(ss) => ss.iter().flat_map(|s| &s.args).for_each(|a| a.diracs_into(out)),
        }
    }

    pub fn subst(&self, s: &Substitution) -> DistTerm {
        match self {
            DistTerm::Var(v) => s.dvar(v),
            DistTerm::Dirac(t) => DistTerm::Dirac(s.term(t)),
            DistTerm::Convex(ss) => DistTerm::Convex(
                ss.iter()
                    .map(|x| Summand {
                        p: x.p.clone(),
                        ctx: x.ctx.clone(),
                        args: x.args.iter().map(|a| a.subst(s)).collect(),
                    })
                    .collect(),
            ),
        }
    }

    /// Rename variables structurally.
    pub fn map_vars(&self, ft: &impl Fn(&Sym) -> Option<Term>, fd: &impl Fn(&DVar) -> Option<DVar>) -> DistTerm {
        match self {
            DistTerm::Var(v) => {
                let v2 = DVar { base: v.base.clone(), index: v.index.as_ref().map(|i| Box::new(i.map_vars(ft))) };
                DistTerm::Var(fd(&v2).unwrap_or(v2))
            }
            DistTerm::Dirac(t) => DistTerm::Dirac(t.map_vars(ft)),
            DistTerm::Convex(ss) => DistTerm::Convex(
                ss.iter()
                    .map(|x| Summand {
                        p: x.p.clone(),
                        ctx: x.ctx.clone(),
                        args: x.args.iter().map(|a| a.map_vars(ft, fd)).collect(),
                    })
                    .collect(),
            ),
        }
    }

    /// Evaluate with term and distribution environments. Variables left
    /// unbound produce [`DistError::Open`].
    pub fn eval_in(
        &self,
        terms: &dyn Fn(&Sym) -> Option<Term>,
        dists: &dyn Fn(&DVar) -> Option<FiniteDistribution>,
    ) -> Result<FiniteDistribution, DistError> {
        match self {
            DistTerm::Var(v) => {
                let key = match &v.index {
                    None => v.clone(),
                    Some(i) => {
                        let it = i.map_vars(&|x| terms(x));
                        DVar { base: v.base.clone(), index: Some(Box::new(it)) }
                    }
                };
                dists(&key).ok_or_else(|| DistError::Open(format!("{key:?}")))
            }
            DistTerm::Dirac(t) => {
                let c = t.map_vars(&|x| terms(x));
                if !c.is_closed() {
                    return Err(DistError::Open(format!("delta({c:?})")));
                }
                Ok(FiniteDistribution::dirac(c))
            }
            DistTerm::Convex(ss) => {
                let mut acc: BTreeMap<Term, Q> = BTreeMap::new();
                for s in ss {
                    let pis = s.args.iter().map(|a| a.eval_in(terms, dists)).collect::<Result<Vec<_>, _>>()?;
                    let pr = product(&pis, &s.ctx);
                    for (t, p) in pr.iter() {
                        *acc.entry(t.clone()).or_insert_with(Q::zero) += &s.p * p;
                    }
                }
                Ok(FiniteDistribution::from_map_unchecked(acc))
            }
        }
    }
}

impl fmt::Debug for DistTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistTerm::Var(v) => write!(f, "{v:?}"),
            DistTerm::Dirac(t) => write!(f, "delta({t:?})"),
            DistTerm::Convex(ss) => {
                for (i, s) in ss.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "{} * {:?}{:?}", q_str(&s.p), s.ctx.term, s.args)?;
                }
                Ok(())
            }
        }
    }
}

/// Exact finite-support probability distribution over closed terms.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FiniteDistribution {
    probs: BTreeMap<Term, Q>,
}

impl FiniteDistribution {
    pub fn dirac(t: Term) -> Self {
        let mut probs = BTreeMap::new();
        probs.insert(t, Q::one());
        FiniteDistribution { probs }
    }

    /// Build from weighted terms; equal terms merge and zero weights vanish.
    /// Fails unless the total mass is exactly 1 and every term is closed.
    pub fn from_pairs<I: IntoIterator<Item = (Term, Q)>>(pairs: I) -> Result<Self, DistError> {
        let mut probs: BTreeMap<Term, Q> = BTreeMap::new();
        for (t, p) in pairs {
            if !t.is_closed() {
                return Err(DistError::Open(format!("{t:?}")));
            }
            if p.is_negative() {
                return Err(DistError::BadCoefficient(q_str(&p)));
            }
            *probs.entry(t).or_insert_with(Q::zero) += p;
        }
        probs.retain(|_, p| !p.is_zero());
        let total: Q = probs.values().sum();
        if !total.is_one() {
            return Err(DistError::BadMass(q_str(&total)));
        }
        Ok(FiniteDistribution { probs })
    }

    fn from_map_unchecked(mut probs: BTreeMap<Term, Q>) -> Self {
        probs.retain(|_, p| !p.is_zero());
        FiniteDistribution { probs }
    }

    pub fn prob(&self, t: &Term) -> Q {
        self.probs.get(t).cloned().unwrap_or_else(Q::zero)
    }

    pub fn support(&self) -> impl Iterator<Item = &Term> {
        self.probs.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Term, &Q)> {
        self.probs.iter()
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn total(&self) -> Q {
        self.probs.values().sum()
    }

    /// As a closed distribution term: a Dirac, or a sum of constant contexts.
    pub fn to_dist_term(&self) -> DistTerm {
        if self.probs.len() == 1 {
            return DistTerm::Dirac(self.probs.keys().next().unwrap().clone());
        }
        DistTerm::Convex(
            self.probs
                .iter()
                .map(|(t, p)| Summand { p: p.clone(), ctx: Context::constant(t.clone()), args: vec![] })
                .collect(),
        )
    }
}

impl fmt::Debug for FiniteDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (t, p)) in self.probs.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{t:?}: {}", q_str(p))?;
        }
        write!(f, "}}")
    }
}

/// Evaluate a closed distribution term.
pub fn eval_dist(theta: &DistTerm) -> Result<FiniteDistribution, DistError> {
    theta.eval_in(&|_| None, &|_| None)
}

/// π(T): total probability of the terms in `ts`.
pub fn mass<'a, I: IntoIterator<Item = &'a Term>>(pi: &FiniteDistribution, ts: I) -> Q {
    let set: BTreeSet<&Term> = ts.into_iter().collect();
    set.into_iter().map(|t| pi.prob(t)).sum()
}

/// Image of the product measure ∏ πᵢ under the context `g`.
pub fn product(pis: &[FiniteDistribution], g: &Context) -> FiniteDistribution {
    assert_eq!(pis.len(), g.holes, "product: argument count must match hole count");
    let mut tuples: Vec<(Vec<Term>, Q)> = vec![(Vec::new(), Q::one())];
    for pi in pis {
        let mut next = Vec::with_capacity(tuples.len() * pi.len());
        for (tup, w) in &tuples {
            for (t, p) in pi.iter() {
                let mut v = tup.clone();
                v.push(t.clone());
                next.push((v, w * p));
            }
        }
        tuples = next;
    }
    let mut out: BTreeMap<Term, Q> = BTreeMap::new();
    for (tup, w) in tuples {
        *out.entry(g.fill(&tup)).or_insert_with(Q::zero) += w;
    }
    FiniteDistribution::from_map_unchecked(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a() -> Term {
        Term::cst("a")
    }
    fn b() -> Term {
        Term::cst("b")
    }

    #[test]
    fn rationals_parse_exactly() {
        assert_eq!(parse_q("0.5"), Some(q(1, 2)));
        assert_eq!(parse_q("1/2"), Some(q(1, 2)));
        assert_eq!(parse_q("0.2"), Some(q(1, 5)));
        assert_eq!(parse_q("1"), Some(q(1, 1)));
        assert_eq!(parse_q("1/0"), None);
        assert_eq!(q_str(&q(2, 4)), "1/2");
    }

    #[test]
    fn dirac_and_parallel_product() {
        assert_eq!(eval_dist(&DistTerm::dirac(a())).unwrap(), FiniteDistribution::dirac(a()));
        let th = DistTerm::lift2("par", DistTerm::dirac(a()), DistTerm::dirac(b()));
        let want = FiniteDistribution::dirac(Term::app("par", vec![a(), b()]));
        assert_eq!(eval_dist(&th).unwrap(), want);
    }

    #[test]
    fn equal_outcomes_merge() {
        let half = Summand { p: q(1, 2), ctx: Context::id(), args: vec![DistTerm::dirac(a())] };
        let th = DistTerm::convex(vec![half.clone(), half]).unwrap();
        assert_eq!(eval_dist(&th).unwrap(), FiniteDistribution::dirac(a()));
    }

    #[test]
    fn mass_examples() {
        let pi = FiniteDistribution::dirac(a());
        assert_eq!(mass(&pi, [&a()]), q(1, 1));
        assert_eq!(mass(&pi, []), q(0, 1));
    }

    #[test]
    fn constant_context_product_is_dirac() {
        assert_eq!(product(&[], &Context::constant(a())), FiniteDistribution::dirac(a()));
    }

    #[test]
    fn nonlinear_context_rejected() {
        let t = Term::app("par", vec![hole(1), hole(1)]);
        assert_eq!(Context::new(t), Err(DistError::NonLinear(1, 2)));
        let gap = Term::app("par", vec![hole(1), hole(3)]);
        assert_eq!(Context::new(gap), Err(DistError::HoleGap));
    }

    #[test]
    fn convex_checks_mass() {
        let s = Summand { p: q(1, 3), ctx: Context::id(), args: vec![DistTerm::dirac(a())] };
        assert!(matches!(DistTerm::convex(vec![s.clone(), s]), Err(DistError::BadMass(_))));
    }
}
