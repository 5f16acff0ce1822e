use ptss_py::{bisimilar_terms, congruence_count, format_violations, model_steps, reduce_text, spec_json};

fn corpus(name: &str) -> String {
    std::fs::read_to_string(format!("{}/../../corpus/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

#[test]
fn f_model_and_reduction() {
    let f = corpus("f.ptss");
    let m = model_steps(&f, None).unwrap();
    assert_eq!(m, vec![("f".into(), "b".into(), vec![("f".into(), "1".into())])]);
    let red = reduce_text(&f, 3, None).unwrap();
    assert!(format_violations(&red, "pntree").unwrap().is_empty());
    assert_eq!(model_steps(&red, None).unwrap(), m);
}

#[test]
fn errors_are_strings() {
    assert!(spec_json("signature {").is_err());
    assert!(format_violations(&corpus("f.ptss"), "nope").is_err());
    assert_eq!(format_violations(&corpus("cond4.ptss"), "ntmuxtheta").unwrap().len(), 1);
}

#[test]
fn bisim_and_probe() {
    let c = corpus("cond4.ptss");
    assert!(bisimilar_terms(&c, "s", "t", None).unwrap());
    assert!(!bisimilar_terms(&c, "s", "e", None).unwrap());
    let (checked, bad) = congruence_count(&corpus("pchoice.ptss"), 50, 1, None).unwrap();
    assert!(checked > 0 && bad == 0);
}
