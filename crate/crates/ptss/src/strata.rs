//! Declared stratifications: ordered literal patterns with a default level.

use std::collections::BTreeMap;

use crate::terms::{Sym, Term};

/// `source - label -> _ : level`. Pattern variables are wildcards that must
/// bind consistently; a `None` label matches every label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StrataPattern {
    pub src: Term,
    pub label: Option<Sym>,
    pub level: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stratification {
    pub name: Option<Sym>,
    pub strict: bool,
    pub patterns: Vec<StrataPattern>,
    pub default: u32,
}

impl Stratification {
    /// The constant measure.
    pub fn constant(level: u32) -> Self {
        Stratification { name: None, strict: false, patterns: Vec::new(), default: level }
    }

    /// S(t -a-> π). The measure ignores π, so it is total on every literal.
    pub fn level(&self, src: &Term, label: &str) -> u32 {
        for p in &self.patterns {
            if p.label.as_deref().is_some_and(|l| l != label) {
                continue;
            }
            if p.src.match_into(src, &mut BTreeMap::new()) {
                return p.level;
            }
        }
        self.default
    }

    pub fn display_name(&self, idx: usize) -> String {
        match &self.name {
            Some(n) => n.to_string(),
            None => format!("#{idx}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::sym;

    #[test]
    fn first_matching_pattern_wins() {
        let s = Stratification {
            name: None,
            strict: false,
            patterns: vec![
                StrataPattern { src: Term::cst("f"), label: Some(sym("a")), level: 0 },
                StrataPattern { src: Term::var("x"), label: Some(sym("b")), level: 1 },
            ],
            default: 7,
        };
        assert_eq!(s.level(&Term::cst("f"), "a"), 0);
        assert_eq!(s.level(&Term::cst("f"), "b"), 1);
        assert_eq!(s.level(&Term::cst("f"), "c"), 7);
    }
}
