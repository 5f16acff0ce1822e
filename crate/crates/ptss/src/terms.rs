//! Signatures, terms, substitutions and unification.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::dist::DistTerm;

pub type Sym = Arc<str>;

pub fn sym(s: &str) -> Sym {
    Arc::from(s)
}

/// A function symbol with its arity and optional infix spelling.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FunSym {
    pub name: Sym,
    pub arity: usize,
    pub infix: Option<Sym>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    pub funs: BTreeMap<Sym, FunSym>,
    pub labels: BTreeSet<Sym>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_fun(&mut self, name: &str, arity: usize, infix: Option<&str>) {
        self.funs.insert(
            sym(name),
            FunSym { name: sym(name), arity, infix: infix.map(sym) },
        );
    }

    pub fn add_label(&mut self, l: &str) {
        self.labels.insert(sym(l));
    }

    pub fn arity(&self, f: &str) -> Option<usize> {
        self.funs.get(f).map(|fs| fs.arity)
    }

    /// Function symbol spelled with the given infix operator.
    pub fn by_infix(&self, op: &str) -> Option<&FunSym> {
        self.funs.values().find(|f| f.infix.as_deref() == Some(op))
    }

    pub fn constants(&self) -> impl Iterator<Item = &FunSym> {
        self.funs.values().filter(|f| f.arity == 0)
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(Sym),
    App(Sym, Vec<Term>),
}

impl Term {
    pub fn var(x: &str) -> Term {
        Term::Var(sym(x))
    }

    pub fn cst(c: &str) -> Term {
        Term::App(sym(c), Vec::new())
    }

    pub fn app(f: &str, args: Vec<Term>) -> Term {
        Term::App(sym(f), args)
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn as_var(&self) -> Option<&Sym> {
        match self {
            Term::Var(x) => Some(x),
            _ => None,
        }
    }

    pub fn vars_into(&self, out: &mut BTreeSet<Sym>) {
        match self {
            Term::Var(x) => {
                out.insert(x.clone());
            }
            Term::App(_, args) => args.iter().for_each(|a| a.vars_into(out)),
        }
    }

    pub fn vars(&self) -> BTreeSet<Sym> {
        let mut s = BTreeSet::new();
        self.vars_into(&mut s);
        s
    }

    pub fn is_closed(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::App(_, args) => args.iter().all(Term::is_closed),
        }
    }

    pub fn occurs(&self, x: &str) -> bool {
        match self {
            Term::Var(y) => &**y == x,
            Term::App(_, args) => args.iter().any(|a| a.occurs(x)),
        }
    }

    /// Height of the term; constants have depth 1.
    pub fn depth(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::App(_, args) => 1 + args.iter().map(Term::depth).max().unwrap_or(0),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::App(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
        }
    }

    pub fn subterms_into(&self, out: &mut BTreeSet<Term>) {
        out.insert(self.clone());
        if let Term::App(_, args) = self {
            args.iter().for_each(|a| a.subterms_into(out));
        }
    }

    /// Replace variables through `f`; variables mapped to `None` stay.
    pub fn map_vars(&self, f: &impl Fn(&Sym) -> Option<Term>) -> Term {
        match self {
            Term::Var(x) => f(x).unwrap_or_else(|| self.clone()),
            Term::App(g, args) => Term::App(g.clone(), args.iter().map(|a| a.map_vars(f)).collect()),
        }
    }

    /// Well-formedness against a signature: every application has the declared arity.
    pub fn check_arity(&self, sig: &Signature) -> Result<(), String> {
        match self {
            Term::Var(_) => Ok(()),
            Term::App(f, args) => {
                match sig.arity(f) {
                    None => return Err(format!("undeclared function symbol `{f}`")),
                    Some(n) if n != args.len() => {
                        return Err(format!("`{f}` has arity {n} but is applied to {} arguments", args.len()))
                    }
                    _ => {}
                }
                args.iter().try_for_each(|a| a.check_arity(sig))
            }
        }
    }

    /// First-order matching of a pattern against a closed term, extending `bind`.
    pub fn match_into(&self, t: &Term, bind: &mut BTreeMap<Sym, Term>) -> bool {
        match (self, t) {
            (Term::Var(x), _) => match bind.get(x) {
                Some(b) => b == t,
                None => {
                    bind.insert(x.clone(), t.clone());
                    true
                }
            },
            (Term::App(f, a), Term::App(g, b)) => {
                f == g && a.len() == b.len() && a.iter().zip(b).all(|(p, q)| p.match_into(q, bind))
            }
            _ => false,
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(x) => write!(f, "{x}"),
            Term::App(g, args) if args.is_empty() => write!(f, "{g}"),
            Term::App(g, args) => {
                write!(f, "{g}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a:?}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Name of the k-th canonical member of a family: `Y[k]`.
pub fn member_name(family: &str, k: usize) -> Sym {
    sym(&format!("{family}[{k}]"))
}

/// Inverse of [`member_name`].
pub fn member_of(name: &str) -> Option<(&str, usize)> {
    let open = name.find('[')?;
    let body = name.strip_suffix(']')?;
    let k = body[open + 1..].parse().ok()?;
    Some((&name[..open], k))
}

/// A distribution variable, optionally indexed by a term (the `mu[y]` of a
/// family premise).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DVar {
    pub base: Sym,
    pub index: Option<Box<Term>>,
}

impl DVar {
    pub fn plain(name: &str) -> DVar {
        DVar { base: sym(name), index: None }
    }

    pub fn indexed(base: &str, t: Term) -> DVar {
        DVar { base: sym(base), index: Some(Box::new(t)) }
    }
}

impl fmt::Debug for DVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.index {
            None => write!(f, "{}", self.base),
            Some(i) => write!(f, "{}[{:?}]", self.base, i),
        }
    }
}

/// Kind-tagged variable: term variables and distribution variables never mix.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Zeta {
    T(Sym),
    D(DVar),
}

/// Finite substitution. Term variables map to terms, distribution variables to
/// distribution terms, and family names to their finite image.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution {
    pub terms: BTreeMap<Sym, Term>,
    pub dists: BTreeMap<DVar, DistTerm>,
    pub families: BTreeMap<Sym, Vec<Term>>,
}

impl Substitution {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn bind_term(&mut self, x: &str, t: Term) -> &mut Self {
        self.terms.insert(sym(x), t);
        self
    }

    pub fn bind_dist(&mut self, mu: DVar, th: DistTerm) -> &mut Self {
        self.dists.insert(mu, th);
        self
    }

    pub fn bind_family(&mut self, y: &str, image: Vec<Term>) -> &mut Self {
        self.families.insert(sym(y), image);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty() && self.dists.is_empty() && self.families.is_empty()
    }

    pub fn domain(&self) -> Vec<Zeta> {
        let mut d: Vec<Zeta> = self.terms.keys().cloned().map(Zeta::T).collect();
        d.extend(self.dists.keys().cloned().map(Zeta::D));
        d
    }

    /// All images are closed.
    pub fn is_closed(&self) -> bool {
        self.terms.values().all(Term::is_closed)
            && self.dists.values().all(DistTerm::is_closed)
            && self.families.values().all(|img| img.iter().all(Term::is_closed))
    }

    pub fn term(&self, t: &Term) -> Term {
        t.map_vars(&|x| self.terms.get(x).cloned())
    }

    pub fn dvar(&self, v: &DVar) -> DistTerm {
        let index = v.index.as_ref().map(|i| Box::new(self.term(i)));
        let key = DVar { base: v.base.clone(), index };
        match self.dists.get(&key) {
            Some(th) => th.clone(),
            None => DistTerm::Var(key),
        }
    }

    pub fn dist(&self, th: &DistTerm) -> DistTerm {
        th.subst(self)
    }

    pub fn zeta(&self, z: &Zeta) -> Either {
        match z {
            Zeta::T(x) => Either::T(self.term(&Term::Var(x.clone()))),
            Zeta::D(v) => Either::D(self.dvar(v)),
        }
    }

    /// Restrict to the given variables.
    pub fn restrict(&self, keep: &BTreeSet<Zeta>) -> Substitution {
        Substitution {
            terms: self
                .terms
                .iter()
                .filter(|(k, _)| keep.contains(&Zeta::T((*k).clone())))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
            dists: self
                .dists
                .iter()
                .filter(|(k, _)| keep.contains(&Zeta::D((*k).clone())))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
            families: self.families.clone(),
        }
    }

    /// Drop identity bindings.
    pub fn normalized(mut self) -> Substitution {
        self.terms.retain(|k, v| v.as_var() != Some(k));
        self.dists.retain(|k, v| !matches!(v, DistTerm::Var(w) if w == k));
        self
    }
}

/// Image of a kind-tagged variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Either {
    T(Term),
    D(DistTerm),
}

/// `compose(s1, s2)` is `s1 ∘ s2`: apply `s2` first, then `s1`.
pub fn compose(s1: &Substitution, s2: &Substitution) -> Substitution {
    let mut out = Substitution::identity();
    for (x, t) in &s2.terms {
        out.terms.insert(x.clone(), s1.term(t));
    }
    for (x, t) in &s1.terms {
        out.terms.entry(x.clone()).or_insert_with(|| t.clone());
    }
    for (m, th) in &s2.dists {
        out.dists.insert(m.clone(), s1.dist(th));
    }
    for (m, th) in &s1.dists {
        out.dists.entry(m.clone()).or_insert_with(|| th.clone());
    }
    for (y, img) in &s2.families {
        out.families.insert(y.clone(), img.iter().map(|t| s1.term(t)).collect());
    }
    for (y, img) in &s1.families {
        out.families.entry(y.clone()).or_insert_with(|| img.clone());
    }
    out.normalized()
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum UnifyError {
    #[error("occurs check: {0} occurs in {1}")]
    OccursCheck(String, String),
    #[error("clash between {0} and {1}")]
    Clash(String, String),
}

/// One unification problem `lhs ≐ rhs`.
#[derive(Clone, Debug)]
pub enum Equation {
    T(Term, Term),
    D(DistTerm, DistTerm),
}

/// Solve a set of equations. `prefer_keep` lists variables that should stay
/// unbound when a variable–variable equation leaves a choice.
pub fn unify(
    eqs: Vec<Equation>,
    prefer_keep: &dyn Fn(&Zeta) -> bool,
) -> Result<Substitution, UnifyError> {
    let mut sol = Substitution::identity();
    let mut work = eqs;
    work.reverse();
    while let Some(eq) = work.pop() {
        match eq {
            Equation::T(a, b) => {
                let a = sol.term(&a);
                let b = sol.term(&b);
                if a == b {
                    continue;
                }
                match (&a, &b) {
                    (Term::Var(x), Term::Var(y)) => {
                        let (from, to) = if prefer_keep(&Zeta::T(x.clone())) && !prefer_keep(&Zeta::T(y.clone())) {
                            (y.clone(), a.clone())
                        } else {
                            (x.clone(), b.clone())
                        };
                        bind_term(&mut sol, &from, to)?;
                    }
                    (Term::Var(x), _) => bind_term(&mut sol, &x.clone(), b.clone())?,
                    (_, Term::Var(y)) => bind_term(&mut sol, &y.clone(), a.clone())?,
                    (Term::App(f, fa), Term::App(g, ga)) => {
                        if f != g || fa.len() != ga.len() {
                            return Err(UnifyError::Clash(format!("{a:?}"), format!("{b:?}")));
                        }
                        for (p, q) in fa.iter().zip(ga).rev() {
                            work.push(Equation::T(p.clone(), q.clone()));
                        }
                    }
                }
            }
            Equation::D(a, b) => {
                let a = sol.dist(&a);
                let b = sol.dist(&b);
                if a == b {
                    continue;
                }
                match (&a, &b) {
                    (DistTerm::Var(x), DistTerm::Var(y)) => {
                        let (from, to) = if prefer_keep(&Zeta::D(x.clone())) && !prefer_keep(&Zeta::D(y.clone())) {
                            (y.clone(), a.clone())
                        } else {
                            (x.clone(), b.clone())
                        };
                        bind_dist(&mut sol, &from, to)?;
                    }
                    (DistTerm::Var(x), _) => bind_dist(&mut sol, &x.clone(), b.clone())?,
                    (_, DistTerm::Var(y)) => bind_dist(&mut sol, &y.clone(), a.clone())?,
                    (DistTerm::Dirac(s), DistTerm::Dirac(t)) => {
                        work.push(Equation::T(s.clone(), t.clone()));
                    }
                    (DistTerm::Convex(xs), DistTerm::Convex(ys)) => {
                        if xs.len() != ys.len() {
                            return Err(UnifyError::Clash(format!("{a:?}"), format!("{b:?}")));
                        }
                        for (u, v) in xs.iter().zip(ys).rev() {
                            if u.p != v.p || u.ctx != v.ctx || u.args.len() != v.args.len() {
                                return Err(UnifyError::Clash(format!("{a:?}"), format!("{b:?}")));
                            }
                            for (p, q) in u.args.iter().zip(&v.args).rev() {
                                work.push(Equation::D(p.clone(), q.clone()));
                            }
                        }
                    }
                    _ => return Err(UnifyError::Clash(format!("{a:?}"), format!("{b:?}"))),
                }
            }
        }
    }
    Ok(sol.normalized())
}

fn bind_term(sol: &mut Substitution, x: &Sym, t: Term) -> Result<(), UnifyError> {
    if t.occurs(x) {
        return Err(UnifyError::OccursCheck(x.to_string(), format!("{t:?}")));
    }
    let mut single = Substitution::identity();
    single.terms.insert(x.clone(), t.clone());
    *sol = compose(&single, sol);
    sol.terms.insert(x.clone(), t);
    Ok(())
}

fn bind_dist(sol: &mut Substitution, x: &DVar, th: DistTerm) -> Result<(), UnifyError> {
    if th.dvars().contains(x) {
        return Err(UnifyError::OccursCheck(format!("{x:?}"), format!("{th:?}")));
    }
    let mut single = Substitution::identity();
    single.dists.insert(x.clone(), th.clone());
    *sol = compose(&single, sol);
    sol.dists.insert(x.clone(), th);
    Ok(())
}

/// Most general unifier of a substitution ρ, i.e. of the equations ζ ≐ ρ(ζ).
///
/// Variables fixed by ρ stay fixed, and a variable whose ρ-orbit never leaves
/// the variables is sent to a variable.
pub fn mgu(rho: &Substitution) -> Result<Substitution, UnifyError> {
    let mut eqs = Vec::new();
    for (x, t) in &rho.terms {
        eqs.push(Equation::T(Term::Var(x.clone()), t.clone()));
    }
    for (m, th) in &rho.dists {
        eqs.push(Equation::D(DistTerm::Var(m.clone()), th.clone()));
    }
    let keep = |z: &Zeta| match z {
        Zeta::T(x) => match rho.terms.get(x) {
            None => true,
            Some(t) => t.as_var() == Some(x),
        },
        Zeta::D(m) => match rho.dists.get(m) {
            None => true,
            Some(DistTerm::Var(w)) => w == m,
            Some(_) => false,
        },
    };
    let mut s = unify(eqs, &keep)?;
    s.families = rho.families.clone();
    Ok(s)
}

/// Fresh-name supply avoiding a fixed set of names.
#[derive(Clone, Debug, Default)]
pub struct Fresh {
    used: BTreeSet<String>,
    counter: usize,
}

impl Fresh {
    pub fn avoiding<I: IntoIterator<Item = S>, S: AsRef<str>>(names: I) -> Self {
        Fresh { used: names.into_iter().map(|s| s.as_ref().to_string()).collect(), counter: 0 }
    }

    pub fn reserve(&mut self, name: &str) {
        self.used.insert(name.to_string());
    }

    /// A name `base_k` not seen before.
    pub fn next(&mut self, base: &str) -> Sym {
        let stem = strip_counter(base);
        loop {
            self.counter += 1;
            let cand = format!("{stem}_{}", self.counter);
            if self.used.insert(cand.clone()) {
                return sym(&cand);
            }
        }
    }
}

fn strip_counter(s: &str) -> &str {
    match s.rfind('_') {
        Some(i) if i > 0 && s[i + 1..].chars().all(|c| c.is_ascii_digit()) && i + 1 < s.len() => &s[..i],
        _ => s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(t: Term) -> Term {
        Term::app("f", vec![t])
    }

    #[test]
    fn identity_leaves_terms_alone() {
        let t = f(Term::var("x"));
        assert_eq!(Substitution::identity().term(&t), t);
    }

    #[test]
    fn compose_follows_sequential_application() {
        let mut s1 = Substitution::identity();
        s1.bind_term("x", Term::cst("a"));
        let mut s2 = Substitution::identity();
        s2.bind_term("y", Term::var("x"));
        let c = compose(&s1, &s2);
        assert_eq!(c.term(&Term::var("y")), Term::cst("a"));
        assert_eq!(compose(&Substitution::identity(), &s2), s2);
    }

    #[test]
    fn mgu_examples() {
        let mut rho = Substitution::identity();
        rho.bind_term("x", f(Term::var("y")));
        assert_eq!(mgu(&rho).unwrap(), rho);

        rho.bind_term("y", Term::var("z"));
        let s = mgu(&rho).unwrap();
        assert_eq!(s.term(&Term::var("x")), f(Term::var("z")));
        assert_eq!(s.term(&Term::var("y")), Term::var("z"));
        assert_eq!(s.term(&Term::var("z")), Term::var("z"));

        let mut bad = Substitution::identity();
        bad.bind_term("x", f(Term::var("x")));
        assert!(matches!(mgu(&bad), Err(UnifyError::OccursCheck(..))));
    }

    #[test]
    fn variable_cycle_collapses_to_a_variable() {
        let mut rho = Substitution::identity();
        rho.bind_term("x", Term::var("y")).bind_term("y", Term::var("x"));
        let s = mgu(&rho).unwrap();
        let sx = s.term(&Term::var("x"));
        assert!(sx.is_var());
        assert_eq!(sx, s.term(&Term::var("y")));
    }

    #[test]
    fn fresh_names_skip_used() {
        let mut fr = Fresh::avoiding(["x_1", "x_2"]);
        assert_eq!(&*fr.next("x"), "x_3");
        assert_eq!(&*fr.next("x_3"), "x_4");
    }

    #[test]
    fn member_names_round_trip() {
        let n = member_name("Y3", 0);
        assert_eq!(member_of(&n), Some(("Y3", 0)));
        assert_eq!(member_of("y"), None);
    }
}
