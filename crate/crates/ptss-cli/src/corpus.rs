//! Corpus runner: each `NAME.ptss` is checked against `NAME.expect.json`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use ptss::bisim::congruence_probe;
use ptss::format::{check, FormatKind};
use ptss::json::{model_to_json, TransitionJson};
use ptss::semantics::{check_stratification, default_model};
use ptss::transform::reduce_full;

use crate::{load, universe_of, usage, Fail};

/// Expected outcomes. Every field is optional; absent fields are not checked.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub depth: Option<usize>,
    #[serde(default)]
    pub formats: BTreeMap<String, bool>,
    /// Keyed by stratification name (`#i` for unnamed ones).
    #[serde(default)]
    pub strata: BTreeMap<String, bool>,
    pub model: Option<Vec<TransitionJson>>,
    pub congruence_clean: Option<bool>,
    pub reduce: Option<ReduceExpect>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReduceExpect {
    #[serde(default = "default_fuel")]
    pub fuel: usize,
    pub preserves_model: bool,
    pub pntree: bool,
}

fn default_fuel() -> usize {
    3
}

#[derive(Debug, Serialize)]
struct Outcome {
    spec: String,
    ok: bool,
    failures: Vec<String>,
}

fn run_one(path: &Path, side: &Sidecar) -> Result<Vec<String>, Fail> {
    let s = load(path)?;
    let u = universe_of(&s, side.depth);
    let mut bad = Vec::new();
    for (k, want) in &side.formats {
        let kind = FormatKind::parse(k).ok_or_else(|| usage(format!("unknown format `{k}`")))?;
        let got = check(&s.ptss, kind).ok;
        if got != *want {
            bad.push(format!("format {k}: expected {want}, got {got}"));
        }
    }
    for (name, want) in &side.strata {
        let (i, st) = s
            .strata
            .iter()
            .enumerate()
            .find(|(i, st)| &st.display_name(*i) == name)
            .ok_or_else(|| usage(format!("no stratification `{name}`")))?;
        let got = check_stratification(&s.ptss, st, &u).ok;
        if got != *want {
            bad.push(format!("strata {}: expected {want}, got {got}", st.display_name(i)));
        }
    }
    let tr = default_model(&s.ptss, &s.strata, &u);
    if let Some(m) = &side.model {
        let got = model_to_json(&s.ptss, &tr);
        if &got != m {
            bad.push(format!("model: expected {} transitions, got {}", m.len(), got.len()));
        }
    }
    if let Some(want) = side.congruence_clean {
        let rep = congruence_probe(&s.ptss, &tr, &u, 200, 7);
        let got = rep.counterexamples.is_empty();
        if got != want {
            bad.push(format!("congruence: expected clean={want}, {}", rep.note));
        }
    }
    if let Some(r) = &side.reduce {
        match reduce_full(&s.ptss, &u, r.fuel) {
            Err(e) => bad.push(format!("reduce: {e}")),
            Ok((out, _)) => {
                let pn = check(&out, FormatKind::Pntree).ok;
                if pn != r.pntree {
                    bad.push(format!("reduce pntree: expected {}, got {pn}", r.pntree));
                }
                let same = default_model(&out, &s.strata, &u) == tr;
                if same != r.preserves_model {
                    bad.push(format!("reduce model: expected equal={}, got {same}", r.preserves_model));
                }
            }
        }
    }
    Ok(bad)
}

pub fn run(dir: &Path, json: bool) -> Result<bool, Fail> {
    let mut specs: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| usage(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "ptss"))
        .collect();
    specs.sort();
    if specs.is_empty() {
        eprintln!("warning: no .ptss files in {}", dir.display());
    }
    let mut all = Vec::new();
    for p in &specs {
        let side_path = p.with_extension("expect.json");
        let side: Sidecar = match std::fs::read_to_string(&side_path) {
            Ok(t) => serde_json::from_str(&t).map_err(|e| usage(format!("{}: {e}", side_path.display())))?,
            Err(_) => {
                eprintln!("warning: {} has no sidecar; skipped", p.display());
                continue;
            }
        };
        let failures = run_one(p, &side)?;
        all.push(Outcome { spec: p.display().to_string(), ok: failures.is_empty(), failures });
    }
    let ok = all.iter().all(|o| o.ok);
    if json {
        println!("{}", serde_json::to_string_pretty(&all).expect("serialisable"));
    } else {
        for o in &all {
            println!("{} {}", if o.ok { "ok  " } else { "FAIL" }, o.spec);
            for f in &o.failures {
                println!("     {f}");
            }
        }
    }
    Ok(ok)
}
