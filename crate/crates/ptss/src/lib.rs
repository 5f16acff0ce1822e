//! Probabilistic transition system specifications: terms, distribution
//! terms, rules, semantics, the ntμfθ/ntμxθ formats, reductions and
//! bisimilarity, all over exact rationals.

pub mod bisim;
pub mod dist;
pub mod format;
pub mod json;
pub mod rules;
pub mod semantics;
pub mod strata;
pub mod syntax;
pub mod terms;
pub mod transform;
pub mod universe;
