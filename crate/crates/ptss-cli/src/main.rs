//! `ptss`: command-line workbench.
//!
//! Exit codes: 0 success, 1 analysis failure, 2 usage or parse error.

mod corpus;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ptss::bisim::{bisimilarity_on, congruence_probe};
use ptss::format::{check, FormatKind};
use ptss::json::{model_from_json, model_to_json, spec_to_json};
use ptss::rules::Literal;
use ptss::semantics::proof::{canonical, structure_rules};
use ptss::semantics::{
    check_complete_consistent, check_stratification, check_supported_model, default_model, provable_closure,
    ws_prove, TransitionRelation, WsResult, WsSets,
};
use ptss::syntax::{parse, parse_literal, parse_term, render, render_fdist, render_literal, render_rule, SpecFile};
use ptss::terms::Term;
use ptss::transform::{reduce_full, reduce_ntmuxtheta, reduce_to_nxmuftheta, reduce_to_pntree, ReductionTrace};
use ptss::universe::from_spec;

#[derive(Parser)]
#[command(name = "ptss", version, about = "Probabilistic transition system specifications")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Emit::Text)]
    emit: Emit,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Text,
    Json,
}

#[derive(clap::Args, Clone, Copy)]
struct DepthArg {
    /// Universe depth. Falls back to the spec's universe block, then
    /// PTSS_DEPTH, then 1.
    #[arg(long, visible_alias = "universe-depth")]
    depth: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a spec and report diagnostics.
    Check { file: PathBuf },
    /// Check a rule format.
    Format {
        file: PathBuf,
        #[arg(long, default_value = "ntmuxtheta")]
        format: String,
    },
    /// Print the model of a spec on a bounded universe.
    Model {
        file: PathBuf,
        #[command(flatten)]
        depth: DepthArg,
        /// Use this declared stratification instead of the first one.
        #[arg(long)]
        strata: Option<String>,
    },
    /// Check a JSON transition relation against the supported-model conditions.
    CheckModel {
        file: PathBuf,
        model: PathBuf,
        #[command(flatten)]
        depth: DepthArg,
    },
    /// Verify every declared stratification.
    StrataCheck {
        file: PathBuf,
        #[command(flatten)]
        depth: DepthArg,
    },
    /// Look for a well-supported proof of a closed literal, or report
    /// completeness and consistency when no literal is given.
    WsProve {
        file: PathBuf,
        #[arg(long)]
        lit: Option<String>,
        #[command(flatten)]
        depth: DepthArg,
    },
    /// Most general provable rules up to a nesting depth.
    Closure {
        file: PathBuf,
        #[arg(long, default_value_t = 1)]
        fuel: usize,
        /// Also enumerate proof structures and compare.
        #[arg(long)]
        compare: bool,
    },
    /// Run the reduction pipeline.
    Reduce {
        file: PathBuf,
        #[arg(long, default_value = "all")]
        stage: String,
        #[arg(long, default_value_t = 4)]
        fuel: usize,
        #[command(flatten)]
        depth: DepthArg,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Decide bisimilarity of two closed terms.
    Bisim {
        file: PathBuf,
        #[arg(long)]
        t1: String,
        #[arg(long)]
        t2: String,
        #[command(flatten)]
        depth: DepthArg,
    },
    /// Sample contexts and check that bisimilarity is preserved.
    Congruence {
        file: PathBuf,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[command(flatten)]
        depth: DepthArg,
    },
    /// Run every spec of a corpus directory against its sidecar.
    Corpus { dir: PathBuf },
}

/// A failed run and its exit code.
pub struct Fail(u8, String);

pub fn usage(msg: impl Into<String>) -> Fail {
    Fail(2, msg.into())
}

type Run = Result<bool, Fail>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Fail(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

pub fn load(path: &Path) -> Result<SpecFile, Fail> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    parse(&text).map_err(|ds| {
        let file = path.display().to_string();
        usage(ds.iter().map(|d| d.display(&file)).collect::<Vec<_>>().join("\n"))
    })
}

pub fn env_depth() -> Option<usize> {
    std::env::var("PTSS_DEPTH").ok().and_then(|s| s.parse().ok())
}

pub fn universe_of(s: &SpecFile, depth: Option<usize>) -> Vec<Term> {
    match (depth, &s.universe) {
        (Some(d), _) => from_spec(&s.ptss.sig, s.universe.as_ref(), Some(d)),
        (None, Some(_)) => from_spec(&s.ptss.sig, s.universe.as_ref(), None),
        (None, None) => from_spec(&s.ptss.sig, None, Some(env_depth().unwrap_or(1))),
    }
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serialisable")
}

fn print_model(s: &SpecFile, tr: &TransitionRelation, emit: Emit) {
    match emit {
        Emit::Json => println!("{}", json(&model_to_json(&s.ptss, tr))),
        Emit::Text => {
            for (t, a, pi) in tr.iter() {
                println!("{} - {a} -> {}", ptss::syntax::render_term(&s.ptss.sig, t), render_fdist(&s.ptss.sig, pi));
            }
        }
    }
}

fn run(cli: &Cli) -> Run {
    let emit = cli.emit;
    match &cli.cmd {
        Cmd::Check { file } => {
            let s = load(file)?;
            match emit {
                Emit::Json => println!("{}", json(&spec_to_json(&s))),
                Emit::Text => println!(
                    "{}: {} rules, {} labels, {} stratifications",
                    file.display(),
                    s.ptss.rules.len(),
                    s.ptss.sig.labels.len(),
                    s.strata.len()
                ),
            }
            Ok(true)
        }
        Cmd::Format { file, format } => {
            let k = FormatKind::parse(format).ok_or_else(|| usage(format!("unknown format `{format}`")))?;
            let s = load(file)?;
            let rep = check(&s.ptss, k);
            match emit {
                Emit::Json => println!("{}", json(&rep)),
                Emit::Text => {
                    for r in &rep.rules {
                        let verdict = if r.satisfies(k) { "ok" } else { "FAIL" };
                        println!("{}: {verdict}", r.rule);
                        for v in r.reasons(k) {
                            println!("  [{}] {}", v.tag, v.message);
                        }
                        for w in &r.warnings {
                            println!("  warning [{}] {}", w.tag, w.message);
                        }
                    }
                    println!("{}: {}", k.as_str(), if rep.ok { "pass" } else { "fail" });
                }
            }
            Ok(rep.ok)
        }
        Cmd::Model { file, depth, strata } => {
            let s = load(file)?;
            let u = universe_of(&s, depth.depth);
            let tr = match strata {
                Some(n) => {
                    let st = s
                        .strata
                        .iter()
                        .find(|x| x.name.as_deref() == Some(n.as_str()))
                        .ok_or_else(|| usage(format!("no stratification named `{n}`")))?;
                    ptss::semantics::build_stratified_model(&s.ptss, st, &u)
                }
                None => default_model(&s.ptss, &s.strata, &u),
            };
            print_model(&s, &tr, emit);
            Ok(true)
        }
        Cmd::CheckModel { file, model, depth } => {
            let s = load(file)?;
            let u = universe_of(&s, depth.depth);
            let text = std::fs::read_to_string(model).map_err(|e| usage(format!("{}: {e}", model.display())))?;
            let tr = model_from_json(&s.ptss, &text).map_err(|e| usage(e.to_string()))?;
            let rep = check_supported_model(&s.ptss, &u, &tr);
            match emit {
                Emit::Json => println!("{}", json(&rep)),
                Emit::Text => {
                    println!("model: {}\nsupported: {}", rep.is_model, rep.is_supported);
                    for t in &rep.missing {
                        println!("  missing {}", show_tr(&s, t));
                    }
                    for t in &rep.unsupported {
                        println!("  unsupported {}", show_tr(&s, t));
                    }
                }
            }
            Ok(rep.is_model && rep.is_supported)
        }
        Cmd::StrataCheck { file, depth } => {
            let s = load(file)?;
            if s.strata.is_empty() {
                return Err(usage("the spec declares no stratification"));
            }
            let u = universe_of(&s, depth.depth);
            let mut ok = true;
            let mut reps = Vec::new();
            for (i, st) in s.strata.iter().enumerate() {
                let rep = check_stratification(&s.ptss, st, &u);
                ok &= rep.ok;
                if emit == Emit::Text {
                    println!("{}: {}", st.display_name(i), if rep.ok { "valid" } else { "invalid" });
                    for v in &rep.violations {
                        println!("  {v}");
                    }
                    for r in &rep.truncated {
                        println!("  warning: assignments of rule {r} were cut short");
                    }
                }
                reps.push(rep);
            }
            if emit == Emit::Json {
                println!("{}", json(&reps));
            }
            Ok(ok)
        }
        Cmd::WsProve { file, lit, depth } => {
            let s = load(file)?;
            let u = universe_of(&s, depth.depth);
            let ws = WsSets::compute(&s.ptss, &u);
            match lit {
                Some(text) => {
                    let l = parse_literal(text, &s.ptss).map_err(|d| usage(d.display("--lit")))?;
                    if !l.is_closed() || matches!(l, Literal::Quant { .. }) {
                        return Err(usage("the literal must be a closed positive or negative literal"));
                    }
                    let res = ws_prove(&ws, &l, None);
                    let (verdict, tree) = match &res {
                        WsResult::Proved(t) => ("proved", Some(t)),
                        WsResult::Refuted(t) => ("refuted", Some(t)),
                        WsResult::NotFound => ("not found", None),
                    };
                    match emit {
                        Emit::Json => {
                            let v = serde_json::json!({
                                "literal": render_literal(&s.ptss.sig, &l),
                                "verdict": verdict,
                                "height": tree.map(|t| t.height()),
                            });
                            println!("{}", json(&v));
                        }
                        Emit::Text => {
                            println!("{verdict}");
                            if let Some(t) = tree {
                                print_proof(&s, t, 1);
                            }
                        }
                    }
                    Ok(matches!(res, WsResult::Proved(_)))
                }
                None => {
                    let c = check_complete_consistent(&ws);
                    let show = |v: &[(Term, ptss::terms::Sym)]| -> Vec<String> {
                        v.iter().map(|(t, a)| format!("{} - {a}", ptss::syntax::render_term(&s.ptss.sig, t))).collect()
                    };
                    match emit {
                        Emit::Json => println!(
                            "{}",
                            json(&serde_json::json!({
                                "complete": c.complete,
                                "consistent": c.consistent,
                                "undecided": show(&c.undecided),
                                "both": show(&c.both),
                                "truncated": ws.sup_truncated,
                            }))
                        ),
                        Emit::Text => {
                            println!("complete: {}\nconsistent: {}", c.complete, c.consistent);
                            for x in show(&c.undecided) {
                                println!("  undecided {x}");
                            }
                            for x in show(&c.both) {
                                println!("  both {x}");
                            }
                        }
                    }
                    Ok(c.complete && c.consistent)
                }
            }
        }
        Cmd::Closure { file, fuel, compare } => {
            let s = load(file)?;
            let rules = provable_closure(&s.ptss, *fuel);
            let mut ok = true;
            if *compare {
                let (ps, cut) = structure_rules(&s.ptss, *fuel);
                let a = ptss::semantics::proof::key_set(&s.ptss.sig, &rules);
                let b = ptss::semantics::proof::key_set(&s.ptss.sig, &ps);
                ok = a == b;
                eprintln!(
                    "closure {} rules, proof structures {} rules{}: {}",
                    a.len(),
                    b.len(),
                    if cut { " (truncated)" } else { "" },
                    if ok { "agree" } else { "DIFFER" }
                );
            }
            let texts: Vec<String> = rules.iter().map(|r| render_rule(&s.ptss.sig, &canonical(r))).collect();
            match emit {
                Emit::Json => println!("{}", json(&texts)),
                Emit::Text => texts.iter().for_each(|t| println!("{t}")),
            }
            Ok(ok)
        }
        Cmd::Reduce { file, stage, fuel, depth, output, trace } => {
            let s = load(file)?;
            let u = universe_of(&s, depth.depth);
            let fmt_err = |e: ptss::transform::TransformError| Fail(1, e.to_string());
            let (p, tr) = match stage.as_str() {
                "1" => {
                    let (p, t) = reduce_ntmuxtheta(&s.ptss).map_err(fmt_err)?;
                    (p, ReductionTrace { stages: vec![t] })
                }
                "2" => {
                    let (p, t) = reduce_to_nxmuftheta(&s.ptss, *fuel);
                    (p, ReductionTrace { stages: vec![t] })
                }
                "3" => {
                    let (p, t) = reduce_to_pntree(&s.ptss, &u);
                    (p, ReductionTrace { stages: vec![t] })
                }
                "all" => reduce_full(&s.ptss, &u, *fuel).map_err(fmt_err)?,
                other => return Err(usage(format!("unknown stage `{other}`"))),
            };
            for st in &tr.stages {
                for w in &st.warnings {
                    eprintln!("warning ({}): {w}", st.stage);
                }
                if st.fuel_exhausted {
                    eprintln!("note ({}): fuel exhausted; derivations beyond the bound were dropped", st.stage);
                }
            }
            let out = SpecFile { ptss: p, strata: s.strata.clone(), universe: s.universe.clone() };
            let text = render(&out);
            match output {
                Some(o) => std::fs::write(o, &text).map_err(|e| usage(format!("{}: {e}", o.display())))?,
                None => print!("{text}"),
            }
            if let Some(t) = trace {
                std::fs::write(t, json(&tr)).map_err(|e| usage(format!("{}: {e}", t.display())))?;
            }
            Ok(true)
        }
        Cmd::Bisim { file, t1, t2, depth } => {
            let s = load(file)?;
            let u = universe_of(&s, depth.depth);
            let a = parse_term(t1, &s.ptss).map_err(|d| usage(d.display("--t1")))?;
            let b = parse_term(t2, &s.ptss).map_err(|d| usage(d.display("--t2")))?;
            for t in [&a, &b] {
                if !t.is_closed() || !u.contains(t) {
                    return Err(usage(format!("{t:?} is not a closed term of the universe")));
                }
            }
            let tr = default_model(&s.ptss, &s.strata, &u);
            let part = bisimilarity_on(&tr, &u);
            let same = part.same(&a, &b);
            match emit {
                Emit::Json => println!("{}", json(&serde_json::json!({ "bisimilar": same, "classes": part.len() }))),
                Emit::Text => println!("{}", if same { "bisimilar" } else { "not bisimilar" }),
            }
            Ok(same)
        }
        Cmd::Congruence { file, samples, seed, depth } => {
            let s = load(file)?;
            let u = universe_of(&s, depth.depth);
            let tr = default_model(&s.ptss, &s.strata, &u);
            let rep = congruence_probe(&s.ptss, &tr, &u, *samples, *seed);
            match emit {
                Emit::Json => println!("{}", json(&rep)),
                Emit::Text => {
                    println!("{}", rep.note);
                    for c in &rep.counterexamples {
                        println!("  {} ~ {} but {} !~ {}", c.left, c.right, c.context_left, c.context_right);
                    }
                }
            }
            Ok(rep.counterexamples.is_empty())
        }
        Cmd::Corpus { dir } => corpus::run(dir, emit == Emit::Json),
    }
}

fn show_tr(s: &SpecFile, t: &ptss::semantics::Transition) -> String {
    format!(
        "{} - {} -> {}",
        ptss::syntax::render_term(&s.ptss.sig, &t.src),
        t.label,
        render_fdist(&s.ptss.sig, &t.target)
    )
}

fn print_proof(s: &SpecFile, t: &ptss::semantics::WsProof, indent: usize) {
    println!("{}{}", "  ".repeat(indent), render_literal(&s.ptss.sig, &t.lit));
    for c in &t.children {
        print_proof(s, c, indent + 1);
    }
}
