use std::fmt::Write;

use super::SpecFile;
use crate::dist::{q_str, DistTerm, FiniteDistribution, Summand};
use crate::rules::{FamilyPremise, Literal, PosLit, Premise, Ptss, Rule, WSet};
use crate::terms::{Signature, Term};

pub fn render_term(sig: &Signature, t: &Term) -> String {
    match t {
        Term::Var(x) => x.to_string(),
        Term::App(f, args) if args.is_empty() => f.to_string(),
        Term::App(f, args) => match sig.funs.get(f).and_then(|s| s.infix.as_ref()) {
            Some(op) if args.len() == 2 => {
                format!("{} {op} {}", term_operand(sig, &args[0]), term_operand(sig, &args[1]))
            }
            _ => {
                let inner: Vec<String> = args.iter().map(|a| render_term(sig, a)).collect();
                format!("{f}({})", inner.join(", "))
            }
        },
    }
}

fn is_infix_app(sig: &Signature, t: &Term) -> bool {
    matches!(t, Term::App(f, a) if a.len() == 2 && sig.funs.get(f).is_some_and(|s| s.infix.is_some()))
}

fn term_operand(sig: &Signature, t: &Term) -> String {
    if is_infix_app(sig, t) {
        format!("({})", render_term(sig, t))
    } else {
        render_term(sig, t)
    }
}

pub fn render_dist(sig: &Signature, d: &DistTerm) -> String {
    match d {
        DistTerm::Var(v) => match &v.index {
            None => v.base.to_string(),
            Some(i) => format!("{}[{}]", v.base, render_term(sig, i)),
        },
        DistTerm::Dirac(t) => format!("delta({})", render_term(sig, t)),
        DistTerm::Convex(ss) => {
            if let [s] = ss.as_slice() {
                if let Some(op) = lifted_infix(sig, s) {
                    return format!("{} {op} {}", dist_atom(sig, &s.args[0]), dist_atom(sig, &s.args[1]));
                }
            }
            let parts: Vec<String> = ss.iter().map(|s| format!("{} * {}", q_str(&s.p), summand_body(sig, s))).collect();
            parts.join(" + ")
        }
    }
}

/// `θ₁ op θ₂`: weight one, the binary context of an infix symbol.
fn lifted_infix<'s>(sig: &'s Signature, s: &Summand) -> Option<&'s str> {
    use num::One;
    if !s.p.is_one() || s.ctx.holes != 2 {
        return None;
    }
    match &s.ctx.term {
        Term::App(f, a) if a == &[crate::dist::hole(1), crate::dist::hole(2)] => {
            sig.funs.get(f).and_then(|x| x.infix.as_deref())
        }
        _ => None,
    }
}

fn dist_atom(sig: &Signature, d: &DistTerm) -> String {
    match d {
        DistTerm::Convex(_) => format!("({})", render_dist(sig, d)),
        _ => render_dist(sig, d),
    }
}

fn summand_body(sig: &Signature, s: &Summand) -> String {
    if s.ctx.holes == 1 && s.ctx.term.is_var() {
        return dist_atom(sig, &s.args[0]);
    }
    let ctx = match &s.ctx.term {
        t if is_infix_app(sig, t) => format!("({})", render_term(sig, t)),
        t => render_term(sig, t),
    };
    if s.ctx.holes == 0 {
        return ctx;
    }
    let args: Vec<String> = s.args.iter().map(|a| render_dist(sig, a)).collect();
    format!("{ctx}({})", args.join(", "))
}

/// A finite distribution as a weighted sum of Diracs.
pub fn render_fdist(sig: &Signature, pi: &FiniteDistribution) -> String {
    match pi.len() {
        1 => format!("delta({})", render_term(sig, pi.support().next().unwrap())),
        _ => pi
            .iter()
            .map(|(t, p)| format!("{} * delta({})", q_str(p), render_term(sig, t)))
            .collect::<Vec<_>>()
            .join(" + "),
    }
}

pub fn render_poslit(sig: &Signature, p: &PosLit) -> String {
    format!("{} - {} -> {}", render_term(sig, &p.src), p.label, render_dist(sig, &p.tgt))
}

pub fn render_literal(sig: &Signature, l: &Literal) -> String {
    render_literal_in(sig, None, l)
}

fn render_literal_in(sig: &Signature, ptss: Option<&Ptss>, l: &Literal) -> String {
    match l {
        Literal::Pos(p) => render_poslit(sig, p),
        Literal::Neg { src, label } => format!("{} - {label} -/->", render_term(sig, src)),
        Literal::Quant { theta, w, cmp, q } => {
            let th = match theta {
                DistTerm::Var(_) | DistTerm::Dirac(_) => render_dist(sig, theta),
                _ => format!("({})", render_dist(sig, theta)),
            };
            let w = match w {
                WSet::Family(y) => y.to_string(),
                WSet::Terms { elems, varset } => {
                    let named = varset.as_ref().filter(|v| {
                        ptss.and_then(|p| p.varsets.get(*v))
                            .is_some_and(|xs| xs.iter().map(|x| Term::Var(x.clone())).eq(elems.iter().cloned()))
                    });
                    match named {
                        Some(v) => v.to_string(),
                        None => {
                            let es: Vec<String> = elems.iter().map(|t| render_term(sig, t)).collect();
                            format!("{{{}}}", es.join(", "))
                        }
                    }
                }
            };
            format!("{th}({w}) {} {}", cmp.as_str(), q_str(q))
        }
    }
}

fn render_family(sig: &Signature, fp: &FamilyPremise) -> String {
    let head = format!("forall {} in {}: {} - {}", fp.binder, fp.family, render_term(sig, &fp.src), fp.label);
    match &fp.target {
        Some(b) => format!("{head} -> {b}[{}]", fp.binder),
        None => format!("{head} -/->"),
    }
}

pub fn render_premise(sig: &Signature, p: &Premise) -> String {
    match p {
        Premise::Lit(l) => render_literal(sig, l),
        Premise::Family(fp) => render_family(sig, fp),
    }
}

pub fn render_rule(sig: &Signature, r: &Rule) -> String {
    render_rule_in(sig, None, r)
}

fn render_rule_in(sig: &Signature, ptss: Option<&Ptss>, r: &Rule) -> String {
    let mut s = format!("rule {} {{\n", r.name);
    if !r.premises.is_empty() {
        s.push_str("  premises {\n");
        for p in &r.premises {
            let line = match p {
                Premise::Lit(l) => render_literal_in(sig, ptss, l),
                Premise::Family(fp) => render_family(sig, fp),
            };
            let _ = writeln!(s, "    {line};");
        }
        s.push_str("  }\n");
    }
    let _ = writeln!(s, "  conclusion {{ {} }}\n}}", render_poslit(sig, &r.conc));
    s
}

/// Deterministic rendering; `parse(render(s)) == s` for every parsed `s`.
pub fn render(spec: &SpecFile) -> String {
    let p = &spec.ptss;
    let sig = &p.sig;
    let mut out = String::new();
    out.push_str("signature {\n");
    for f in sig.funs.values() {
        let _ = write!(out, "  {}/{}", f.name, f.arity);
        if let Some(op) = &f.infix {
            let _ = write!(out, " as \"{op}\"");
        }
        out.push_str(";\n");
    }
    out.push_str("}\n");
    let labels: Vec<&str> = sig.labels.iter().map(|l| &**l).collect();
    let _ = writeln!(out, "labels {{ {} }}", labels.join(", "));
    if !p.families.is_empty() {
        let fs: Vec<&str> = p.families.iter().map(|l| &**l).collect();
        let _ = writeln!(out, "family {};", fs.join(", "));
    }
    for (v, xs) in &p.varsets {
        let xs: Vec<&str> = xs.iter().map(|l| &**l).collect();
        let _ = writeln!(out, "varset {v} {{ {} }}", xs.join(", "));
    }
    for r in &p.rules {
        out.push('\n');
        out.push_str(&render_rule_in(sig, Some(p), r));
    }
    for s in &spec.strata {
        out.push_str("\nstrata");
        if let Some(n) = &s.name {
            let _ = write!(out, " {n}");
        }
        if s.strict {
            out.push_str(" strict");
        }
        out.push_str(" {\n");
        for pat in &s.patterns {
            let l = pat.label.as_deref().unwrap_or("_");
            let _ = writeln!(out, "  {} - {l} -> _ : {};", render_term(sig, &pat.src), pat.level);
        }
        let _ = writeln!(out, "  default: {}\n}}", s.default);
    }
    if let Some(u) = &spec.universe {
        out.push_str("\nuniverse {");
        if !u.init.is_empty() {
            let ts: Vec<String> = u.init.iter().map(|t| render_term(sig, t)).collect();
            let _ = write!(out, " init: {};", ts.join(", "));
        }
        let _ = writeln!(out, " depth: {} }}", u.depth);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    #[test]
    fn round_trip() {
        let src = r#"
            signature { a/0; nil/0; f/1; plus/2 infix "+"; par/2 infix "||" }
            labels { a, b, ok }
            family Y;
            varset V { x1, x2 }
            rule r {
              forall y in Y: y - a -> mu_c[y];
              (delta(a) || mu)(Y) >= 1/2;
              mu_d(V) > 0;
              x + (z || a) - b -/->;
              x - a -> mu;
              x - b -> mu_d
              ---
              x || z - ok -> 1/3 * delta(a) + 2/3 * (_1 + f(_2))(mu, mu_d)
            }
            rule ax { a - a -> 1/2 * (a + a) + 1/2 * (delta(nil) || mu[Y[1]]) }
            strata { x - a -> _ : 1; default: 0 }
            universe { init: f(f(a)); depth: 2 }
        "#;
        let s = parse(src).unwrap();
        let text = render(&s);
        let s2 = parse(&text).unwrap_or_else(|e| panic!("{text}\n{e:?}"));
        assert_eq!(s, s2);
        assert_eq!(render(&s2), text);
    }
}
