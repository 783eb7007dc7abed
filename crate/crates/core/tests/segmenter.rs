use proptest::prelude::*;
use serde::Deserialize;
use vlnplan::instruction::{segment_instruction, Lexicon};
use vlnplan::InstructionParser;

#[derive(Deserialize)]
struct Case {
    instruction: String,
    fragments: Vec<String>,
}

fn corpus() -> Vec<Case> {
    serde_json::from_str(include_str!("golden/segmenter.json")).unwrap()
}

#[test]
fn golden_corpus() {
    let boundary = Lexicon::default_boundary();
    let cases = corpus();
    assert_eq!(cases.len(), 10);
    for case in cases {
        let got = segment_instruction(&case.instruction, &boundary).unwrap();
        assert_eq!(got, case.fragments, "{}", case.instruction);
    }
}

#[test]
fn golden_fragments_are_fixed_points() {
    let boundary = Lexicon::default_boundary();
    for case in corpus() {
        for frag in &case.fragments {
            assert_eq!(segment_instruction(frag, &boundary).unwrap(), vec![frag.clone()]);
        }
    }
}

#[test]
fn landmarks_for_corpus_plans() {
    let parser = InstructionParser::default();
    let plan = parser
        .plan("Walk past the sofa until you reach the kitchen, then stop at the table.")
        .unwrap();
    let marks: Vec<&str> = plan.sub_instructions().iter().map(|s| s.landmark.as_str()).collect();
    assert_eq!(marks, ["kitchen", "table"]);
}

fn word() -> impl Strategy<Value = String> {
    prop::sample::select(vec![
        "walk", "past", "the", "sofa", "then", "until", "turn", "left", "kitchen", "and", "next", "once",
        "after", "between", "stop", "at", "table", "2.5", "meters",
    ])
    .prop_map(str::to_string)
}

fn sep() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec![" ", " ", " ", ", ", ". ", "; ", "! "])
}

fn instruction() -> impl Strategy<Value = String> {
    prop::collection::vec((word(), sep()), 1..14).prop_map(|parts| {
        let mut s = String::new();
        for (w, sp) in parts {
            s.push_str(&w);
            s.push_str(sp);
        }
        s
    })
}

proptest! {
    #[test]
    fn at_least_one_fragment_and_idempotent(text in instruction()) {
        let boundary = Lexicon::default_boundary();
        let frags = segment_instruction(&text, &boundary).unwrap();
        prop_assert!(!frags.is_empty());
        for f in &frags {
            prop_assert!(!f.trim().is_empty());
            prop_assert_eq!(segment_instruction(f, &boundary).unwrap(), vec![f.clone()]);
        }
        prop_assert_eq!(segment_instruction(&text, &boundary).unwrap(), frags);
    }
}
