use lsipp_cli::problem::*;
use lsipp_core::gen::{generate, GenSpec};
use lsipp_core::Polynomial;
use proptest::prelude::*;

#[test]
fn strings_terms_and_rationals_agree() {
    let text = r#"{
        "nvars": 2, "c": ["1/4", 0.5],
        "a": ["Y1^2*Y2 - 1/2", [{"exp": [2, 1], "coef": 1}, {"exp": [0, 0], "coef": "-1/2"}]],
        "b": "1", "flags": {"compact": true, "ball": 3}
    }"#;
    let Problem::Lsipp(p) = parse_problem_file(text).unwrap().to_problem().unwrap() else {
        panic!("expected lsipp");
    };
    assert_eq!(p.c, vec![0.25, 0.5]);
    assert_eq!(p.a[0], p.a[1]);
    assert_eq!(p.a[0], Polynomial::parse("Y1^2*Y2 - 0.5", 2).unwrap());
    assert!(p.index_set_compact);
    assert_eq!(p.archimedean_bound, Some(3.0));
}

#[test]
fn popt_files_take_an_objective() {
    let f = parse_problem_file(r#"{"kind": "popt", "nvars": 1, "objective": "Y1^2", "generators": ["1 - Y1^2"]}"#).unwrap();
    assert!(matches!(f.to_problem().unwrap(), Problem::Popt(_)));
    let f = parse_problem_file(r#"{"kind": "popt", "nvars": 1, "objective": "Y1", "c": [1]}"#).unwrap();
    assert!(f.to_problem().is_err());
    let f = parse_problem_file(r#"{"kind": "lsipp", "nvars": 1, "objective": "Y1"}"#).unwrap();
    assert!(f.to_problem().is_err());
}

#[test]
fn inconsistent_sizes_are_rejected() {
    for text in [
        r#"{"nvars": 1, "m": 2, "c": [1], "a": ["1"], "b": "1"}"#,
        r#"{"nvars": 1, "c": [1, 2], "a": ["1"], "b": "1"}"#,
        r#"{"nvars": 1, "c": [1], "a": ["Y2"], "b": "1"}"#,
        r#"{"nvars": 1, "c": [1], "a": [[{"exp": [1, 0], "coef": 1}]], "b": "1"}"#,
        r#"{"nvars": 1, "c": [1], "a": ["1"], "b": "1", "flags": {"ball": -1}}"#,
    ] {
        assert!(parse_problem_file(text).unwrap().to_problem().is_err(), "{text}");
    }
    assert!(parse_problem_file(r#"{"nvars": 1, "flags": {"homogenize": "maybe"}}"#).is_err());
}

#[test]
fn golden_files_parse() {
    for (name, text) in lsipp_cli::GOLDEN {
        let p = parse_problem_file(text).unwrap().to_problem().unwrap();
        assert_eq!(p.compact(), name == "ex37" || name == "ex38", "{name}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn generated_instances_survive_a_json_round_trip(seed in any::<u64>(), n in 1usize..=3, t in 1u32..=2) {
        let inst = generate(&GenSpec::new(3, n, t, seed).unwrap()).unwrap();
        let text = serde_json::to_string(&ProblemFile::from_lsipp(&inst.problem)).unwrap();
        let Problem::Lsipp(back) = parse_problem_file(&text).unwrap().to_problem().unwrap() else {
            panic!("expected lsipp");
        };
        prop_assert_eq!(back, inst.problem);
    }
}
