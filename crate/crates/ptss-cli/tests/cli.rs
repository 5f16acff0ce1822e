use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "corpus", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn ptss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ptss")).args(args).env_remove("PTSS_DEPTH").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn model_of_f_picks_the_stratified_transition() {
    let o = ptss(&["model", &corpus("f.ptss"), "--depth", "1"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "f - b -> delta(f)");
}

#[test]
fn format_exit_codes() {
    assert_eq!(ptss(&["format", &corpus("fig1.ptss")]).status.code(), Some(0));
    let o = ptss(&["format", &corpus("cond4.ptss")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("cond4"));
    assert_eq!(ptss(&["format", &corpus("fig1.ptss"), "--format", "nope"]).status.code(), Some(2));
}

#[test]
fn parse_errors_exit_2() {
    let dir = std::env::temp_dir().join(format!("ptss-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.ptss");
    std::fs::write(&bad, "signature { a/0 }\nrule r { a - q -> delta(a) }\n").unwrap();
    let o = ptss(&["check", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.ptss"));
}

#[test]
fn reduce_all_then_pntree() {
    let dir = std::env::temp_dir().join(format!("ptss-reduce-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("f.red.ptss");
    let trace = dir.join("trace.json");
    let o = ptss(&[
        "reduce",
        &corpus("f.ptss"),
        "--stage",
        "all",
        "--fuel",
        "3",
        "-o",
        out.to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_eq!(ptss(&["format", out.to_str().unwrap(), "--format", "pntree"]).status.code(), Some(0));
    let t: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    assert_eq!(t["stages"].as_array().unwrap().len(), 3);
    let m = ptss(&["model", out.to_str().unwrap()]);
    assert_eq!(stdout(&m).trim(), "f - b -> delta(f)");
}

#[test]
fn check_model_round_trip() {
    let dir = std::env::temp_dir().join(format!("ptss-cm-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let m = ptss(&["--emit", "json", "model", &corpus("pchoice.ptss")]);
    let path = dir.join("m.json");
    std::fs::write(&path, &m.stdout).unwrap();
    let o = ptss(&["check-model", &corpus("pchoice.ptss"), path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stdout(&o));
    std::fs::write(&path, "[]").unwrap();
    assert_eq!(ptss(&["check-model", &corpus("pchoice.ptss"), path.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn ws_prove_and_strata() {
    let o = ptss(&["ws-prove", &corpus("f.ptss"), "--lit", "f - a -/->"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("proved"));
    assert_eq!(ptss(&["ws-prove", &corpus("f.ptss"), "--lit", "f - b -/->"]).status.code(), Some(1));
    assert_eq!(ptss(&["strata-check", &corpus("strict.ptss")]).status.code(), Some(1));
    assert_eq!(ptss(&["strata-check", &corpus("f.ptss")]).status.code(), Some(0));
}

#[test]
fn bisim_and_congruence() {
    let o = ptss(&["bisim", &corpus("cond4.ptss"), "--t1", "s", "--t2", "t"]);
    assert_eq!(stdout(&o).trim(), "bisimilar");
    let o = ptss(&["bisim", &corpus("cond4.ptss"), "--t1", "s", "--t2", "q1"]);
    assert_eq!(o.status.code(), Some(1));
    let o = ptss(&["--emit", "json", "congruence", &corpus("sync.ptss"), "--samples", "50"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["samples"], 50);
    assert!(v["counterexamples"].as_array().unwrap().is_empty());
}

#[test]
fn depth_env_fallback() {
    let spec = corpus("strict.ptss");
    let dir = std::env::temp_dir().join(format!("ptss-env-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    // Same spec without its universe block.
    let text = std::fs::read_to_string(&spec).unwrap().replace("universe { depth: 3 }", "");
    let p = dir.join("s.ptss");
    std::fs::write(&p, text).unwrap();
    let run = |env: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_ptss"));
        c.args(["model", p.to_str().unwrap()]).env_remove("PTSS_DEPTH");
        if let Some(d) = env {
            c.env("PTSS_DEPTH", d);
        }
        stdout(&c.output().unwrap()).lines().count()
    };
    assert_eq!(run(None), 1);
    assert_eq!(run(Some("3")), 2);
}

#[test]
fn whole_corpus_matches_sidecars() {
    let dir: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "corpus"].iter().collect();
    let o = ptss(&["corpus", dir.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stdout(&o));
}

#[test]
fn corpus_runner_reports_regressions() {
    let dir = std::env::temp_dir().join(format!("ptss-corpus-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let d = dir.to_str().unwrap();
    assert_eq!(ptss(&["corpus", d]).status.code(), Some(0));
    std::fs::copy(corpus("f.ptss"), dir.join("f.ptss")).unwrap();
    let side = std::fs::read_to_string(corpus("f.expect.json")).unwrap().replace("\"b\"", "\"a\"");
    std::fs::write(dir.join("f.expect.json"), side).unwrap();
    let o = ptss(&["corpus", d]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
}
