//! JSON views of specs and transition relations.
//!
//! Probabilities are strings `"n/d"` (or `"n"`), never floats.

use serde::{Deserialize, Serialize};

use crate::dist::{parse_q, q_str, FiniteDistribution};
use crate::rules::Ptss;
use crate::semantics::TransitionRelation;
use crate::syntax::{parse_term, render_premise, render_poslit, render_term, SpecFile};
use crate::terms::sym;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightedTerm {
    pub term: String,
    pub prob: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionJson {
    pub source: String,
    pub label: String,
    pub distribution: Vec<WeightedTerm>,
}

/// Canonical order: source, label, then distribution.
pub fn model_to_json(p: &Ptss, tr: &TransitionRelation) -> Vec<TransitionJson> {
    tr.iter()
        .map(|(t, a, pi)| TransitionJson {
            source: render_term(&p.sig, t),
            label: a.to_string(),
            distribution: pi
                .iter()
                .map(|(u, q)| WeightedTerm { term: render_term(&p.sig, u), prob: q_str(q) })
                .collect(),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ModelJsonError {
    #[error("bad JSON: {0}")]
    Json(String),
    #[error("bad term `{0}`: {1}")]
    Term(String, String),
    #[error("bad probability `{0}`")]
    Prob(String),
    #[error("label `{0}` is not declared")]
    Label(String),
    #[error("distribution of {0} -{1}-> is not a probability distribution")]
    Dist(String, String),
}

pub fn model_from_json(p: &Ptss, text: &str) -> Result<TransitionRelation, ModelJsonError> {
    let items: Vec<TransitionJson> = serde_json::from_str(text).map_err(|e| ModelJsonError::Json(e.to_string()))?;
    let term = |s: &str| parse_term(s, p).map_err(|d| ModelJsonError::Term(s.to_string(), d.message));
    let mut tr = TransitionRelation::new();
    for it in items {
        if !p.sig.labels.contains(it.label.as_str()) {
            return Err(ModelJsonError::Label(it.label));
        }
        let mut pairs = Vec::new();
        for w in &it.distribution {
            let q = parse_q(&w.prob).ok_or_else(|| ModelJsonError::Prob(w.prob.clone()))?;
            pairs.push((term(&w.term)?, q));
        }
        let pi = FiniteDistribution::from_pairs(pairs)
            .map_err(|_| ModelJsonError::Dist(it.source.clone(), it.label.clone()))?;
        tr.insert(term(&it.source)?, sym(&it.label), pi);
    }
    Ok(tr)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FunJson {
    pub name: String,
    pub arity: usize,
    pub infix: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RuleJson {
    pub name: String,
    pub premises: Vec<String>,
    pub conclusion: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PatternJson {
    pub source: String,
    pub label: Option<String>,
    pub level: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StrataJson {
    pub name: Option<String>,
    pub strict: bool,
    pub patterns: Vec<PatternJson>,
    pub default: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UniverseJson {
    pub init: Vec<String>,
    pub depth: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SpecJson {
    pub signature: Vec<FunJson>,
    pub labels: Vec<String>,
    pub families: Vec<String>,
    pub varsets: Vec<(String, Vec<String>)>,
    pub rules: Vec<RuleJson>,
    pub strata: Vec<StrataJson>,
    pub universe: Option<UniverseJson>,
}

/// Premises and conclusions are in concrete syntax.
pub fn spec_to_json(s: &SpecFile) -> SpecJson {
    let p = &s.ptss;
    let sig = &p.sig;
    SpecJson {
        signature: sig
            .funs
            .values()
            .map(|f| FunJson { name: f.name.to_string(), arity: f.arity, infix: f.infix.as_ref().map(|x| x.to_string()) })
            .collect(),
        labels: sig.labels.iter().map(|l| l.to_string()).collect(),
        families: p.families.iter().map(|l| l.to_string()).collect(),
        varsets: p.varsets.iter().map(|(k, v)| (k.to_string(), v.iter().map(|x| x.to_string()).collect())).collect(),
        rules: p
            .rules
            .iter()
            .map(|r| RuleJson {
                name: r.name.to_string(),
                premises: r.premises.iter().map(|pr| render_premise(sig, pr)).collect(),
                conclusion: render_poslit(sig, &r.conc),
            })
            .collect(),
        strata: s
            .strata
            .iter()
            .map(|st| StrataJson {
                name: st.name.as_ref().map(|n| n.to_string()),
                strict: st.strict,
                patterns: st
                    .patterns
                    .iter()
                    .map(|pt| PatternJson {
                        source: render_term(sig, &pt.src),
                        label: pt.label.as_ref().map(|l| l.to_string()),
                        level: pt.level,
                    })
                    .collect(),
                default: st.default,
            })
            .collect(),
        universe: s.universe.as_ref().map(|u| UniverseJson {
            init: u.init.iter().map(|t| render_term(sig, t)).collect(),
            depth: u.depth,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::q;
    use crate::syntax::parse;
    use crate::terms::Term;

    #[test]
    fn model_round_trip() {
        let s = parse("signature { a/0; b/0 } labels { go }").unwrap();
        let mut tr = TransitionRelation::new();
        let pi = FiniteDistribution::from_pairs([(Term::cst("a"), q(1, 3)), (Term::cst("b"), q(2, 3))]).unwrap();
        tr.insert(Term::cst("a"), sym("go"), pi);
        let js = serde_json::to_string(&model_to_json(&s.ptss, &tr)).unwrap();
        assert!(js.contains("\"1/3\""));
        assert_eq!(model_from_json(&s.ptss, &js).unwrap(), tr);
        let bad = js.replace("2/3", "1/3");
        assert!(matches!(model_from_json(&s.ptss, &bad), Err(ModelJsonError::Dist(..))));
    }
}
