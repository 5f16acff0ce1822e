//! Test-side oracles and generators shared by the acceptance and property
//! suites. Nothing here calls the library routine it is meant to check.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use num::{BigInt, One, Zero};
use ptss::dist::{hole, Context, DistTerm, FiniteDistribution, Summand, Q};
use ptss::semantics::{Transition, TransitionRelation};
use ptss::syntax::{parse, SpecFile};
use ptss::terms::{sym, DVar, Substitution, Term};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn corpus_dir() -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "..", "..", "corpus"].iter().collect()
}

/// Every corpus spec, sorted by file name.
pub fn corpus() -> Vec<(String, SpecFile)> {
    let mut out = Vec::new();
    let mut paths: Vec<_> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "ptss"))
        .collect();
    paths.sort();
    for p in paths {
        let name = p.file_stem().unwrap().to_string_lossy().into_owned();
        let s = parse(&std::fs::read_to_string(&p).unwrap()).unwrap_or_else(|d| panic!("{name}: {d:?}"));
        out.push((name, s));
    }
    out
}

fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

// ---------------------------------------------------------------------------
// Bisimulation by brute force.

/// All set partitions of `items` (restricted growth strings).
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0; n];
    fn go(i: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for b in 0..=max + 1 {
            cur[i] = b;
            go(i + 1, max.max(b), cur, out);
        }
    }
    if n == 0 {
        return vec![vec![]];
    }
    go(1, 0, &mut cur, &mut out);
    out
}

fn masses(pi: &FiniteDistribution, block: &BTreeMap<&Term, usize>) -> BTreeMap<usize, Q> {
    let mut m = BTreeMap::new();
    for (t, p) in pi.iter() {
        *m.entry(block[t]).or_insert_with(Q::zero) += p;
    }
    m
}

/// Whether the equivalence is a bisimulation: related states match each
/// other's steps with equal mass on every class.
fn is_bisimulation(tr: &TransitionRelation, states: &[Term], assign: &[usize]) -> bool {
    let block: BTreeMap<&Term, usize> = states.iter().zip(assign.iter().copied()).collect();
    let steps = |s: &Term| -> Vec<(String, BTreeMap<usize, Q>)> {
        tr.iter().filter(|(x, _, _)| *x == s).map(|(_, a, pi)| (a.to_string(), masses(pi, &block))).collect()
    };
    for i in 0..states.len() {
        for j in 0..states.len() {
            if assign[i] != assign[j] {
                continue;
            }
            let (si, sj) = (steps(&states[i]), steps(&states[j]));
            if !si.iter().all(|x| sj.contains(x)) {
                return false;
            }
        }
    }
    true
}

/// The coarsest bisimulation equivalence on `states`, as sorted blocks.
pub fn brute_bisim(tr: &TransitionRelation, states: &[Term]) -> Vec<Vec<Term>> {
    let mut best: Option<(usize, Vec<usize>)> = None;
    for assign in set_partitions(states.len()) {
        if !is_bisimulation(tr, states, &assign) {
            continue;
        }
        let k = assign.iter().max().map_or(0, |m| m + 1);
        if best.as_ref().is_none_or(|(bk, _)| k < *bk) {
            best = Some((k, assign));
        }
    }
    let (_, assign) = best.expect("the identity is a bisimulation");
    let mut blocks: BTreeMap<usize, Vec<Term>> = BTreeMap::new();
    for (t, b) in states.iter().zip(assign) {
        blocks.entry(b).or_default().push(t.clone());
    }
    let mut v: Vec<Vec<Term>> = blocks.into_values().collect();
    v.iter_mut().for_each(|b| b.sort());
    v.sort();
    v
}

/// A random system over `n` constant states with rational probabilities.
/// States are often given identical behaviour so classes are nontrivial.
pub fn random_system(rng: &mut impl Rng, n: usize) -> (Vec<Term>, TransitionRelation) {
    let states: Vec<Term> = (0..n).map(|i| Term::cst(&format!("s{i}"))).collect();
    let labels = ["a", "b"];
    let mut tr = TransitionRelation::new();
    // Per state: (label index, [(target state, weight)]).
    type Shape = Vec<(usize, Vec<(usize, i64)>)>;
    let mut shapes: Vec<Shape> = Vec::new();
    for _ in 0..n {
        if !shapes.is_empty() && rng.gen_bool(0.4) {
            let s = shapes.choose(rng).unwrap().clone();
            shapes.push(s);
            continue;
        }
        let mut steps = Vec::new();
        for _ in 0..rng.gen_range(0..3) {
            let l = rng.gen_range(0..labels.len());
            let k = rng.gen_range(1..=3);
            let tgt: Vec<(usize, i64)> = (0..k).map(|_| (rng.gen_range(0..n), rng.gen_range(1..4))).collect();
            steps.push((l, tgt));
        }
        shapes.push(steps);
    }
    for (i, steps) in shapes.iter().enumerate() {
        for (l, tgt) in steps {
            let total: i64 = tgt.iter().map(|(_, w)| w).sum();
            let pi = FiniteDistribution::from_pairs(tgt.iter().map(|(s, w)| (states[*s].clone(), q(*w, total)))).unwrap();
            tr.insert(states[i].clone(), sym(labels[*l]), pi);
        }
    }
    (states, tr)
}

// ---------------------------------------------------------------------------
// Distribution terms.

fn random_ground(rng: &mut impl Rng, depth: usize) -> Term {
    if depth <= 1 || rng.gen_bool(0.4) {
        return Term::cst(["a", "b", "c"].choose(rng).unwrap());
    }
    if rng.gen_bool(0.5) {
        Term::app("f", vec![random_ground(rng, depth - 1)])
    } else {
        Term::app("g", vec![random_ground(rng, depth - 1), random_ground(rng, depth - 1)])
    }
}

/// A random closed distribution term: Diracs, convex sums with rational
/// weights, and lifting through contexts with 0 to 2 holes.
pub fn random_dist_term(rng: &mut impl Rng, depth: usize) -> DistTerm {
    if depth == 0 || rng.gen_bool(0.3) {
        return DistTerm::Dirac(random_ground(rng, 2));
    }
    let k = rng.gen_range(1..=3);
    let weights: Vec<i64> = (0..k).map(|_| rng.gen_range(1..7)).collect();
    let total: i64 = weights.iter().sum();
    let mut summands = Vec::new();
    for w in weights {
        let (ctx, holes) = match rng.gen_range(0..4) {
            0 => (Context::constant(random_ground(rng, 2)), 0),
            1 => (Context::id(), 1),
            2 => (Context::new(Term::app("f", vec![hole(1)])).unwrap(), 1),
            _ => (Context::new(Term::app("g", vec![hole(2), hole(1)])).unwrap(), 2),
        };
        let args = (0..holes).map(|_| random_dist_term(rng, depth - 1)).collect();
        summands.push(Summand { p: q(w, total), ctx, args });
    }
    DistTerm::Convex(summands)
}

fn fill(t: &Term, args: &[Term]) -> Term {
    match t {
        Term::Var(x) => {
            let k: usize = x.strip_prefix('_').unwrap().parse().unwrap();
            args[k - 1].clone()
        }
        Term::App(f, xs) => Term::App(f.clone(), xs.iter().map(|a| fill(a, args)).collect()),
    }
}

/// Weighted outcome list, unmerged. Independent of the library evaluator.
pub fn outcomes(th: &DistTerm) -> Vec<(Term, Q)> {
    match th {
        DistTerm::Var(_) => panic!("open term"),
        DistTerm::Dirac(t) => vec![(t.clone(), Q::one())],
        DistTerm::Convex(ss) => {
            let mut out = Vec::new();
            for s in ss {
                let mut partial: Vec<(Vec<Term>, Q)> = vec![(vec![], s.p.clone())];
                for a in &s.args {
                    let sub = outcomes(a);
                    partial = partial
                        .iter()
                        .flat_map(|(ts, w)| {
                            sub.iter().map(move |(t, p)| {
                                let mut v = ts.clone();
                                v.push(t.clone());
                                (v, w * p)
                            })
                        })
                        .collect();
                }
                out.extend(partial.into_iter().map(|(ts, w)| (fill(&s.ctx.term, &ts), w)));
            }
            out
        }
    }
}

pub fn merged(v: Vec<(Term, Q)>) -> BTreeMap<Term, Q> {
    let mut m: BTreeMap<Term, Q> = BTreeMap::new();
    for (t, p) in v {
        *m.entry(t).or_insert_with(Q::zero) += p;
    }
    m.retain(|_, p| !p.is_zero());
    m
}

// ---------------------------------------------------------------------------
// Unification problems with a known unifier.

/// A substitution ρ together with a unifier σ built before ρ.
pub struct MguCase {
    pub rho: Substitution,
    pub sigma: Substitution,
    pub vars: Vec<String>,
    pub dvars: Vec<String>,
}

const TV: [&str; 5] = ["x1", "x2", "x3", "x4", "x5"];
const FREE: [&str; 2] = ["w1", "w2"];
const DV: [&str; 3] = ["mu1", "mu2", "mu3"];

fn leaf(rng: &mut impl Rng, built: &[Term]) -> Term {
    match rng.gen_range(0..4) {
        0 if !built.is_empty() => built.choose(rng).unwrap().clone(),
        1 => Term::var(FREE.choose(rng).unwrap()),
        _ => Term::cst(["a", "b"].choose(rng).unwrap()),
    }
}

fn grow(rng: &mut impl Rng, built: &[Term], depth: usize) -> Term {
    if depth == 0 || rng.gen_bool(0.35) {
        return leaf(rng, built);
    }
    if rng.gen_bool(0.5) {
        Term::app("f", vec![grow(rng, built, depth - 1)])
    } else {
        Term::app("g", vec![grow(rng, built, depth - 1), grow(rng, built, depth - 1)])
    }
}

/// Replace some subterms equal to `img[y]` by the variable `y`.
fn abstract_term(rng: &mut impl Rng, t: &Term, img: &[(String, Term)], avoid: &str) -> Term {
    let hits: Vec<&String> = img.iter().filter(|(y, s)| s == t && y != avoid).map(|(y, _)| y).collect();
    if !hits.is_empty() && rng.gen_bool(0.6) {
        return Term::var(hits.choose(rng).unwrap());
    }
    match t {
        Term::Var(_) => t.clone(),
        Term::App(f, xs) => Term::App(f.clone(), xs.iter().map(|a| abstract_term(rng, a, img, avoid)).collect()),
    }
}

fn abstract_dist(
    rng: &mut impl Rng,
    d: &DistTerm,
    timg: &[(String, Term)],
    dimg: &[(String, DistTerm)],
    avoid: &str,
) -> DistTerm {
    let hits: Vec<&String> = dimg.iter().filter(|(m, s)| s == d && m != avoid).map(|(m, _)| m).collect();
    if !hits.is_empty() && rng.gen_bool(0.6) {
        return DistTerm::var(hits.choose(rng).unwrap());
    }
    match d {
        DistTerm::Var(_) => d.clone(),
        DistTerm::Dirac(t) => DistTerm::Dirac(abstract_term(rng, t, timg, "")),
        DistTerm::Convex(ss) => DistTerm::Convex(
            ss.iter()
                .map(|s| Summand {
                    p: s.p.clone(),
                    ctx: s.ctx.clone(),
                    args: s.args.iter().map(|a| abstract_dist(rng, a, timg, dimg, avoid)).collect(),
                })
                .collect(),
        ),
    }
}

pub fn mgu_case(rng: &mut impl Rng) -> MguCase {
    // σ first: later variables reuse earlier images so ρ can point at them.
    let mut timg: Vec<(String, Term)> = Vec::new();
    for x in TV {
        let built: Vec<Term> = timg.iter().map(|(_, t)| t.clone()).collect();
        let t = if !built.is_empty() && rng.gen_bool(0.25) { built.choose(rng).unwrap().clone() } else { grow(rng, &built, 3) };
        timg.push((x.to_string(), t));
    }
    let mut dimg: Vec<(String, DistTerm)> = Vec::new();
    for m in DV {
        let built: Vec<DistTerm> = dimg.iter().map(|(_, d)| d.clone()).collect();
        let d = match rng.gen_range(0..3) {
            0 if !built.is_empty() => built.choose(rng).unwrap().clone(),
            1 if !built.is_empty() => {
                DistTerm::lift2("g", built.choose(rng).unwrap().clone(), DistTerm::Dirac(timg.choose(rng).unwrap().1.clone()))
            }
            _ => DistTerm::Dirac(timg.choose(rng).unwrap().1.clone()),
        };
        dimg.push((m.to_string(), d));
    }
    let mut sigma = Substitution::identity();
    for (x, t) in &timg {
        sigma.bind_term(x, t.clone());
    }
    for (m, d) in &dimg {
        sigma.bind_dist(DVar::plain(m), d.clone());
    }
    // ρ(x) is σ(x) with parts folded back into variables, or x itself.
    let mut rho = Substitution::identity();
    for (x, t) in &timg {
        match rng.gen_range(0..5) {
            0 => {}
            1 => {
                rho.bind_term(x, Term::var(x));
            }
            _ => {
                rho.bind_term(x, abstract_term(rng, t, &timg, x));
            }
        }
    }
    for (m, d) in &dimg {
        if rng.gen_bool(0.7) {
            rho.bind_dist(DVar::plain(m), abstract_dist(rng, d, &timg, &dimg, m));
        }
    }
    MguCase {
        rho,
        sigma,
        vars: TV.iter().chain(FREE.iter()).map(|s| s.to_string()).collect(),
        dvars: DV.iter().map(|s| s.to_string()).collect(),
    }
}

/// Orbit of a term variable under ρ stays inside the variables.
pub fn orbit_is_variables(rho: &Substitution, x: &str) -> bool {
    let mut cur = Term::var(x);
    let mut seen = BTreeSet::new();
    loop {
        let Some(v) = cur.as_var() else { return false };
        if !seen.insert(v.to_string()) {
            return true;
        }
        cur = rho.terms.get(v).cloned().unwrap_or_else(|| cur.clone());
    }
}

pub fn dorbit_is_variables(rho: &Substitution, m: &str) -> bool {
    let mut cur = DistTerm::var(m);
    let mut seen = BTreeSet::new();
    loop {
        let DistTerm::Var(v) = &cur else { return false };
        if !seen.insert(v.clone()) {
            return true;
        }
        cur = rho.dists.get(v).cloned().unwrap_or_else(|| cur.clone());
    }
}

/// Violations of the unifier properties for one case; empty when all hold.
pub fn mgu_violations(c: &MguCase) -> Vec<String> {
    let mut bad = Vec::new();
    let s = match ptss::terms::mgu(&c.rho) {
        Ok(s) => s,
        Err(e) => return vec![format!("unifiable ρ rejected: {e}")],
    };
    for x in &c.vars {
        let v = Term::var(x);
        // σ̂ρ = σ̂
        if s.term(&c.rho.term(&v)) != s.term(&v) {
            bad.push(format!("σ̂ρ ≠ σ̂ at {x}"));
        }
        // (i) σ unifies σ̂
        if c.sigma.term(&s.term(&v)) != c.sigma.term(&v) {
            bad.push(format!("σσ̂ ≠ σ at {x}"));
        }
        // (ii)
        if c.rho.term(&v) == v && s.term(&v) != v {
            bad.push(format!("{x} fixed by ρ but moved by σ̂"));
        }
        // (iii)
        if orbit_is_variables(&c.rho, x) && !s.term(&v).is_var() {
            bad.push(format!("{x} has a variable orbit but σ̂({x}) is not a variable"));
        }
    }
    for m in &c.dvars {
        let v = DistTerm::var(m);
        if s.dist(&c.rho.dist(&v)) != s.dist(&v) {
            bad.push(format!("σ̂ρ ≠ σ̂ at {m}"));
        }
        if c.sigma.dist(&s.dist(&v)) != c.sigma.dist(&v) {
            bad.push(format!("σσ̂ ≠ σ at {m}"));
        }
        if c.rho.dist(&v) == v && s.dist(&v) != v {
            bad.push(format!("{m} fixed by ρ but moved by σ̂"));
        }
        if dorbit_is_variables(&c.rho, m) && !matches!(s.dist(&v), DistTerm::Var(_)) {
            bad.push(format!("{m} has a variable orbit but σ̂({m}) is not a variable"));
        }
    }
    bad
}

pub fn only(src: &str, label: &str, tgt: &str) -> TransitionRelation {
    [Transition { src: Term::cst(src), label: sym(label), target: FiniteDistribution::dirac(Term::cst(tgt)) }]
        .into_iter()
        .collect()
}
