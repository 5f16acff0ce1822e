//! Rule formats: ntμfθ, ntμxθ, nxμfθ, pntree and simple pntree, with the
//! variable dependency graph and the free-variable analysis behind them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::dist::DistTerm;
use crate::rules::{Cmp, Literal, Premise, Ptss, Rule, WSet};
use crate::terms::{member_name, member_of, sym, Sym, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormatKind {
    Ntmuftheta,
    Ntmuxtheta,
    Nxmuftheta,
    Pntree,
    SimplePntree,
}

impl FormatKind {
    pub fn parse(s: &str) -> Option<FormatKind> {
        Some(match s {
            "ntmuftheta" => FormatKind::Ntmuftheta,
            "ntmuxtheta" => FormatKind::Ntmuxtheta,
            "nxmuftheta" => FormatKind::Nxmuftheta,
            "pntree" => FormatKind::Pntree,
            "simple-pntree" => FormatKind::SimplePntree,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FormatKind::Ntmuftheta => "ntmuftheta",
            FormatKind::Ntmuxtheta => "ntmuxtheta",
            FormatKind::Nxmuftheta => "nxmuftheta",
            FormatKind::Pntree => "pntree",
            FormatKind::SimplePntree => "simple-pntree",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Violation {
    pub rule: String,
    pub tag: String,
    pub message: String,
}

/// Per-rule verdicts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RuleReport {
    pub rule: String,
    pub ntmuftheta: bool,
    pub ntmuxtheta: bool,
    pub nxmuftheta: bool,
    pub well_founded: bool,
    pub pntree: bool,
    pub simple_pntree: bool,
    pub free_vars: Vec<String>,
    pub violations: Vec<Violation>,
    pub warnings: Vec<Violation>,
}

impl RuleReport {
    pub fn satisfies(&self, k: FormatKind) -> bool {
        match k {
            FormatKind::Ntmuftheta => self.ntmuftheta,
            FormatKind::Ntmuxtheta => self.ntmuftheta || self.ntmuxtheta,
            FormatKind::Nxmuftheta => self.nxmuftheta,
            FormatKind::Pntree => self.pntree,
            FormatKind::SimplePntree => self.simple_pntree,
        }
    }

    /// Violations that explain why `k` fails.
    pub fn reasons(&self, k: FormatKind) -> Vec<Violation> {
        let wanted = |tag: &str| match k {
            FormatKind::Ntmuftheta | FormatKind::Ntmuxtheta => tag.starts_with("ntmuftheta."),
            FormatKind::Nxmuftheta => tag.starts_with("ntmuftheta.") || tag.starts_with("nxmuftheta."),
            FormatKind::Pntree => !tag.starts_with("simple."),
            FormatKind::SimplePntree => true,
        };
        self.violations
            .iter()
            .filter(|v| wanted(&v.tag))
            .filter(|v| !(k == FormatKind::Ntmuxtheta && v.tag == "ntmuftheta.conclusion"))
            .cloned()
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FormatReport {
    pub format: FormatKind,
    pub ok: bool,
    pub rules: Vec<RuleReport>,
}

impl FormatReport {
    pub fn violations(&self) -> Vec<Violation> {
        self.rules.iter().flat_map(|r| r.reasons(self.format)).collect()
    }
}

/// Check every rule. `ntmuxtheta` accepts the combined ntμfθ/ntμxθ format.
pub fn check(p: &Ptss, k: FormatKind) -> FormatReport {
    let rules: Vec<RuleReport> = p.rules.iter().map(|r| check_rule(p, r)).collect();
    FormatReport { format: k, ok: rules.iter().all(|r| r.satisfies(k)), rules }
}

pub fn check_rule(p: &Ptss, r: &Rule) -> RuleReport {
    let mut v: Vec<Violation> = Vec::new();
    let rn = r.name.to_string();
    macro_rules! push {
        ($tag:expr, $msg:expr $(,)?) => {
            v.push(Violation { rule: rn.clone(), tag: $tag.to_string(), message: $msg })
        };
    }

    // Conclusion source: f(x1..xn) with distinct variables, or a variable.
    let mut conc_vars: BTreeSet<Sym> = BTreeSet::new();
    let mut fshape = false;
    let xshape = r.conc.src.is_var();
    match &r.conc.src {
        Term::Var(x) => {
            conc_vars.insert(x.clone());
        }
        Term::App(f, args) => {
            fshape = true;
            if !p.sig.funs.contains_key(f) {
                push!("ntmuftheta.cond8", format!("`{f}` is not in the signature"));
            }
            for a in args {
                match a.as_var() {
                    Some(x) if conc_vars.insert(x.clone()) => {}
                    Some(x) => {
                        fshape = false;
                        push!("ntmuftheta.cond6", format!("conclusion variable `{x}` occurs twice"));
                    }
                    None => {
                        fshape = false;
                        push!("ntmuftheta.cond6", format!("conclusion argument {a:?} is not a variable"));
                    }
                }
            }
        }
    }
    for x in &conc_vars {
        if member_of(x).is_some() {
            push!("ntmuftheta.cond5", format!("family member `{x}` occurs in the conclusion source"));
        }
    }

    let binders: BTreeSet<Sym> = r.families().map(|f| f.binder.clone()).collect();
    for b in &binders {
        if conc_vars.contains(b) {
            push!("ntmuftheta.cond5", format!("family variable `{b}` is also a conclusion variable"));
        }
    }

    // Premise-level conditions.
    let mut targets: BTreeMap<Sym, usize> = BTreeMap::new();
    let mut family_bases: BTreeSet<Sym> = BTreeSet::new();
    for pr in &r.premises {
        match pr {
            Premise::Lit(Literal::Pos(pl)) => {
                source_members(&pl.src, &rn, &mut v);
                match &pl.tgt {
                    DistTerm::Var(dv) => {
                        *targets.entry(dv.base.clone()).or_default() += 1;
                        if let Some(i) = &dv.index {
                            push!(
                                "ntmuftheta.cond1",
                                format!(
                                    "`{}[{i:?}]` is indexed by a finite variable set; the format needs an infinite family here",
                                    dv.base
                                ),
                            );
                        }
                    }
                    _ => push!("ntmuftheta.cond3", "positive premise target is not a variable".into()),
                }
            }
            Premise::Lit(Literal::Neg { src, .. }) => source_members(src, &rn, &mut v),
            Premise::Lit(Literal::Quant { theta, w, cmp, .. }) => {
                if !matches!(cmp, Cmp::Gt | Cmp::Ge) {
                    push!("ntmuftheta.cmp", format!("comparison `{}` must be `>` or `>=`", cmp.as_str()));
                }
                match w {
                    WSet::Family(_) => {}
                    WSet::Terms { varset: Some(vs), .. } => push!(
                        "ntmuftheta.cond1",
                        format!("`{vs}` is a finite variable set; quantitative premises need an infinite family"),
                    ),
                    WSet::Terms { .. } => push!(
                        "ntmuftheta.cond1",
                        "explicit finite set in a family position; quantitative premises need an infinite family".into(),
                    ),
                }
                let tv = theta.term_vars();
                for x in &tv {
                    if conc_vars.contains(x) {
                        push!("ntmuftheta.cond7", format!("conclusion variable `{x}` occurs in a quantitative θ"));
                    } else if member_of(x).is_some() || binders.contains(x) {
                        push!("ntmuftheta.cond7", format!("family variable `{x}` occurs in a quantitative θ"));
                    }
                }
            }
            Premise::Family(fp) => {
                source_members(&fp.src, &rn, &mut v);
                if let Some(b) = &fp.target {
                    *targets.entry(b.clone()).or_default() += 1;
                    family_bases.insert(b.clone());
                }
                for x in fp.src.vars() {
                    if x != fp.binder && binders.contains(&x) {
                        push!("ntmuftheta.cond2", format!("`{x}` binds another family"));
                    }
                }
            }
        }
    }
    for (b, n) in &targets {
        if *n > 1 {
            push!("ntmuftheta.cond3", format!("target variable `{b}` is used by {n} premises"));
        }
    }

    // cond4: each family target occurs with one index at most.
    let mut thetas: Vec<&DistTerm> = vec![&r.conc.tgt];
    for l in r.lits() {
        if let Literal::Quant { theta, .. } = l {
            thetas.push(theta);
        }
    }
    let mut idx: BTreeMap<Sym, BTreeSet<Term>> = BTreeMap::new();
    for th in &thetas {
        for dv in th.dvars() {
            if family_bases.contains(&dv.base) {
                if let Some(i) = dv.index {
                    idx.entry(dv.base.clone()).or_default().insert(*i);
                }
            }
        }
    }
    for (b, is) in &idx {
        if is.len() > 1 {
            push!("ntmuftheta.cond4", format!("`{b}` is used at {} different members", is.len()));
        }
    }

    let ntmuftheta = fshape && v.is_empty();
    let ntmuxtheta = xshape && v.is_empty();
    if xshape {
        push!("ntmuftheta.conclusion", "conclusion source is a variable".into());
    }

    // nxμfθ: variable sources for positive premises.
    let mut nx_ok = ntmuftheta;
    for pr in &r.premises {
        let src = match pr {
            Premise::Lit(Literal::Pos(pl)) => &pl.src,
            Premise::Family(fp) if fp.target.is_some() => &fp.src,
            _ => continue,
        };
        if !src.is_var() {
            nx_ok = false;
            push!("nxmuftheta.source", format!("positive premise source {src:?} is not a variable"));
        }
    }

    let g = dependency_graph(r);
    let well_founded = g.is_acyclic();
    if !well_founded {
        push!("pntree.wellfounded", "the variable dependency graph has a cycle".into());
    }
    let (free, warnings) = free_vars(r);
    for f in &free {
        push!("pntree.free", format!("`{f}` is free"));
    }
    let pntree = nx_ok && well_founded && free.is_empty();
    let mut simple = pntree;
    for pr in &r.premises {
        let src = match pr {
            Premise::Lit(Literal::Neg { src, .. }) => src,
            Premise::Family(fp) if fp.target.is_none() => &fp.src,
            _ => continue,
        };
        if !src.is_var() {
            simple = false;
            push!("simple.negative", format!("negative premise source {src:?} is not a variable"));
        }
    }
    RuleReport {
        rule: r.name.to_string(),
        ntmuftheta,
        ntmuxtheta,
        nxmuftheta: nx_ok,
        well_founded,
        pntree,
        simple_pntree: simple,
        free_vars: free,
        violations: v,
        warnings,
    }
}

fn source_members(t: &Term, rule: &str, v: &mut Vec<Violation>) {
    for x in t.vars() {
        if member_of(&x).is_some() {
            v.push(Violation {
                rule: rule.to_string(),
                tag: "ntmuftheta.cond2".into(),
                message: format!("premise source mentions the single family member `{x}`"),
            });
        }
    }
}

/// Vertex of the variable dependency graph. Family members and binders all
/// collapse onto their family.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    T(Sym),
    D(Sym),
    F(Sym),
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::T(x) | Node::D(x) => write!(f, "{x}"),
            Node::F(y) => write!(f, "{y}[*]"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vdg {
    pub vertices: BTreeSet<Node>,
    pub edges: BTreeSet<(Node, Node)>,
}

impl Vdg {
    fn add(&mut self, a: Node, b: Node) {
        self.vertices.insert(a.clone());
        self.vertices.insert(b.clone());
        self.edges.insert((a, b));
    }

    pub fn succ<'a>(&'a self, n: &'a Node) -> impl Iterator<Item = &'a Node> + 'a {
        self.edges.iter().filter(move |(a, _)| a == n).map(|(_, b)| b)
    }

    pub fn is_acyclic(&self) -> bool {
        self.n_vdg().is_some()
    }

    /// Longest incoming path length per vertex; `None` on a cycle.
    pub fn n_vdg(&self) -> Option<BTreeMap<Node, usize>> {
        let mut indeg: BTreeMap<&Node, usize> = self.vertices.iter().map(|v| (v, 0)).collect();
        for (_, b) in &self.edges {
            *indeg.get_mut(b).unwrap() += 1;
        }
        let mut n: BTreeMap<Node, usize> = BTreeMap::new();
        let mut ready: Vec<&Node> = indeg.iter().filter(|(_, d)| **d == 0).map(|(v, _)| *v).collect();
        for v in &ready {
            n.insert((*v).clone(), 0);
        }
        let mut done = 0;
        while let Some(v) = ready.pop() {
            done += 1;
            let nv = n[v];
            for w in self.succ(v) {
                let e = n.entry(w.clone()).or_insert(0);
                *e = (*e).max(nv + 1);
                let d = indeg.get_mut(w).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.push(w);
                }
            }
        }
        (done == self.vertices.len()).then_some(n)
    }

    /// Vertices reachable from `roots`.
    pub fn reachable(&self, roots: impl IntoIterator<Item = Node>) -> BTreeSet<Node> {
        let mut seen: BTreeSet<Node> = BTreeSet::new();
        let mut stack: Vec<Node> = roots.into_iter().collect();
        while let Some(v) = stack.pop() {
            if seen.insert(v.clone()) {
                stack.extend(self.succ(&v).cloned());
            }
        }
        seen
    }
}

/// Node for a term variable occurrence, given the rule's family binders.
pub fn term_node(x: &Sym, binders: &BTreeMap<Sym, Sym>) -> Node {
    if let Some(y) = binders.get(x) {
        return Node::F(y.clone());
    }
    match member_of(x) {
        Some((y, _)) => Node::F(sym(y)),
        None => Node::T(x.clone()),
    }
}

fn dist_nodes(th: &DistTerm, binders: &BTreeMap<Sym, Sym>) -> BTreeSet<Node> {
    let mut out: BTreeSet<Node> = th.term_vars().iter().map(|x| term_node(x, binders)).collect();
    out.extend(th.dvars().into_iter().map(|v| Node::D(v.base)));
    out
}

/// Binder → family for every family premise of `r`.
pub fn binder_map(r: &Rule) -> BTreeMap<Sym, Sym> {
    r.families().map(|f| (f.binder.clone(), f.family.clone())).collect()
}

/// Edges `x → μ` for `t -a-> μ` with x in t, and `ζ → y` for `θ(Y)` with ζ in θ.
pub fn dependency_graph(r: &Rule) -> Vdg {
    let bm = binder_map(r);
    let mut g = Vdg::default();
    for pr in &r.premises {
        match pr {
            Premise::Lit(Literal::Pos(pl)) => {
                let DistTerm::Var(mu) = &pl.tgt else { continue };
                g.vertices.insert(Node::D(mu.base.clone()));
                for x in pl.src.vars() {
                    g.add(term_node(&x, &bm), Node::D(mu.base.clone()));
                }
            }
            Premise::Family(fp) => {
                let Some(b) = &fp.target else { continue };
                g.vertices.insert(Node::D(b.clone()));
                for x in fp.src.vars() {
                    g.add(term_node(&x, &bm), Node::D(b.clone()));
                }
            }
            Premise::Lit(Literal::Quant { theta, w, .. }) => {
                let ws: Vec<Node> = match w {
                    WSet::Family(y) => vec![Node::F(y.clone())],
                    WSet::Terms { elems, .. } => {
                        elems.iter().flat_map(|t| t.vars()).map(|x| term_node(&x, &bm)).collect()
                    }
                };
                for z in dist_nodes(theta, &bm) {
                    for w in &ws {
                        g.add(z.clone(), w.clone());
                    }
                }
            }
            Premise::Lit(Literal::Neg { .. }) => {}
        }
    }
    g
}

/// Free variables, and `free.delta` warnings for free variables under a
/// Dirac inside a quantitative θ or the conclusion target.
pub fn free_vars(r: &Rule) -> (Vec<String>, Vec<Violation>) {
    let bm = binder_map(r);
    let src_vars = r.conc.src.vars();
    let mut in_w: BTreeSet<Sym> = BTreeSet::new();
    let mut fam_in_w: BTreeSet<Sym> = BTreeSet::new();
    let mut pos_targets: BTreeSet<Sym> = BTreeSet::new();
    for pr in &r.premises {
        match pr {
            Premise::Lit(Literal::Quant { w, .. }) => match w {
                WSet::Family(y) => {
                    fam_in_w.insert(y.clone());
                }
                WSet::Terms { elems, .. } => elems.iter().for_each(|t| t.vars_into(&mut in_w)),
            },
            Premise::Lit(Literal::Pos(pl)) => {
                if let DistTerm::Var(v) = &pl.tgt {
                    pos_targets.insert(v.base.clone());
                }
            }
            Premise::Family(fp) => {
                if let Some(b) = &fp.target {
                    pos_targets.insert(b.clone());
                }
            }
            _ => {}
        }
    }
    let bound_term = |x: &Sym| -> bool {
        if src_vars.contains(x) || in_w.contains(x) {
            return true;
        }
        match term_node(x, &bm) {
            Node::F(y) => fam_in_w.contains(&y),
            _ => false,
        }
    };
    let rv = r.vars();
    let mut free: BTreeSet<String> = BTreeSet::new();
    for x in rv.terms.iter().chain(&rv.binders) {
        if !bound_term(x) {
            free.insert(x.to_string());
        }
    }
    for d in &rv.dist_bases {
        if !pos_targets.contains(d) {
            free.insert(d.to_string());
        }
    }
    let mut warnings = Vec::new();
    let mut thetas: Vec<&DistTerm> = vec![&r.conc.tgt];
    thetas.extend(r.lits().filter_map(|l| match l {
        Literal::Quant { theta, .. } => Some(theta),
        _ => None,
    }));
    let mut warned = BTreeSet::new();
    for th in thetas {
        let mut ds = Vec::new();
        th.diracs_into(&mut ds);
        for t in ds {
            for x in t.vars() {
                if !bound_term(&x) && warned.insert(x.clone()) {
                    warnings.push(Violation {
                        rule: r.name.to_string(),
                        tag: "free.delta".into(),
                        message: format!("`{x}` occurs only under a Dirac and is free"),
                    });
                }
            }
        }
    }
    (free.into_iter().collect(), warnings)
}

/// The first `n` tuples of the diagonal over `families`: the i-th tuple picks
/// the i-th member of each family.
pub fn diag(families: &[Sym], n: usize) -> Vec<Vec<Term>> {
    (0..n).map(|i| families.iter().map(|y| Term::Var(member_name(y, i))).collect()).collect()
}

/// A set of tuples is a diagonal when each coordinate holds members of its
/// family, every member appears, and tuples sharing any coordinate coincide.
pub fn validate_diag(families: &[Sym], tuples: &[Vec<Term>]) -> Result<(), String> {
    let mut seen: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new(); families.len()];
    for (ti, t) in tuples.iter().enumerate() {
        if t.len() != families.len() {
            return Err(format!("tuple {ti} has {} coordinates, expected {}", t.len(), families.len()));
        }
        for (l, x) in t.iter().enumerate() {
            let k = match x.as_var().and_then(|v| member_of(v)) {
                Some((y, k)) if y == &*families[l] => k,
                _ => return Err(format!("coordinate {l} of tuple {ti} is not a member of {}", families[l])),
            };
            if let Some(prev) = seen[l].insert(k, ti) {
                return Err(format!("tuples {prev} and {ti} share {x:?} but differ"));
            }
        }
    }
    for (l, s) in seen.iter().enumerate() {
        let n = tuples.len();
        if s.len() != n || s.keys().copied().ne(0..n) {
            return Err(format!("projection on {} misses members", families[l]));
        }
    }
    Ok(())
}

/// One `a -> b` line per edge.
pub fn render_vdg(g: &Vdg) -> String {
    let mut s = String::new();
    for (a, b) in &g.edges {
        s.push_str(&format!("{a} -> {b}\n"));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    fn rep(src: &str) -> RuleReport {
        let s = parse(src).unwrap_or_else(|e| panic!("{e:?}"));
        check_rule(&s.ptss, &s.ptss.rules[0])
    }

    const SIG: &str = "signature { a/0; f/1; par/2 infix \"||\" } labels { a, b, ok } family Y, Z; varset V { v1, v2 }";

    #[test]
    fn lifted_parallel_rule_is_simple_pntree() {
        let r = rep(&format!("{SIG} rule r {{ x - a -> mu; y - a -> mu2; x - b -/-> --- x || y - a -> mu || mu2 }}"));
        assert!(r.ntmuftheta && r.nxmuftheta && r.pntree && r.simple_pntree, "{r:?}");
    }

    #[test]
    fn quantitative_family_rule() {
        let r = rep(&format!(
            "{SIG} rule r {{ forall y in Y: y - ok -> mu_y[y]; x - a -> mu; mu(Y) >= 1/2 --- f(x) - ok -> mu }}"
        ));
        assert!(r.pntree, "{r:?}");
        let g = dependency_graph(&s_rule(&format!(
            "{SIG} rule r {{ forall y in Y: y - ok -> mu_y[y]; x - a -> mu; mu(Y) >= 1/2 --- f(x) - ok -> mu }}"
        )));
        let n = g.n_vdg().unwrap();
        assert_eq!(n[&Node::D(sym("mu_y"))], 3);
    }

    fn s_rule(src: &str) -> Rule {
        parse(src).unwrap().ptss.rules[0].clone()
    }

    #[test]
    fn condition_tags() {
        let tags = |src: String| -> Vec<String> { rep(&src).violations.into_iter().map(|v| v.tag).collect() };
        assert!(tags(format!("{SIG} rule r {{ x - a -> mu; mu(V) > 0 --- f(x) - a -> mu }}"))
            .contains(&"ntmuftheta.cond1".into()));
        assert!(tags(format!("{SIG} rule r {{ x - a -> mu; mu(Y) < 1 --- f(x) - a -> mu }}"))
            .contains(&"ntmuftheta.cmp".into()));
        assert!(tags(format!("{SIG} rule r {{ x - a -> mu; y - a -> mu --- x || y - a -> mu }}"))
            .contains(&"ntmuftheta.cond3".into()));
        assert!(tags(format!("{SIG} rule r {{ x - a -> mu --- x || x - a -> mu }}")).contains(&"ntmuftheta.cond6".into()));
        assert!(tags(format!("{SIG} rule r {{ x - a -> mu; (delta(x) || mu)(Y) >= 1/2 --- f(x) - a -> mu }}"))
            .contains(&"ntmuftheta.cond7".into()));
        assert!(tags(format!(
            "{SIG} rule r {{ forall y in Y: y - ok -> mu_y[y]; x - a -> mu; mu(Y) > 0 --- f(x) - a -> mu_y[Y[0]] || mu_y[Y[1]] }}"
        ))
        .contains(&"ntmuftheta.cond4".into()));
        assert!(tags(format!("{SIG} rule r {{ x - a -> mu --- f(Y[0]) - a -> mu }}")).contains(&"ntmuftheta.cond5".into()));
    }

    #[test]
    fn variable_conclusion_is_ntmuxtheta_only() {
        let r = rep(&format!("{SIG} rule r {{ x - a -> mu --- x - b -> mu }}"));
        assert!(!r.ntmuftheta && r.ntmuxtheta && !r.nxmuftheta);
        assert!(r.satisfies(FormatKind::Ntmuxtheta));
    }

    #[test]
    fn free_variables_and_dirac_warning() {
        let r = rep(&format!("{SIG} rule r {{ x - a -> mu; z - b -/-> --- f(x) - a -> delta(z) }}"));
        assert_eq!(r.free_vars, vec!["z".to_string()]);
        assert!(!r.pntree && r.nxmuftheta);
        assert_eq!(r.warnings.len(), 1);
        assert_eq!(r.warnings[0].tag, "free.delta");
    }

    #[test]
    fn nested_source_is_not_nx() {
        let r = rep(&format!("{SIG} rule r {{ f(x) - a -> mu --- f(x) - b -> mu }}"));
        assert!(r.ntmuftheta && !r.nxmuftheta);
    }

    #[test]
    fn cycles_are_not_well_founded() {
        let r = rep(&format!(
            "{SIG} rule r {{ forall y in Y: y - ok -> mu_y[y]; x - a -> mu; mu_y[Y[0]](Y) >= 1/2 --- f(x) - ok -> mu }}"
        ));
        assert!(!r.well_founded);
    }

    #[test]
    fn diag_round_trip() {
        let fams = vec![sym("Y"), sym("Z")];
        let d = diag(&fams, 3);
        assert!(validate_diag(&fams, &d).is_ok());
        let mut bad = d.clone();
        bad[1][1] = d[0][1].clone();
        assert!(validate_diag(&fams, &bad).is_err());
    }
}
