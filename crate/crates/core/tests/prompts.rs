use chrono::NaiveDate;
use ragresearch::answer::build_answer_prompt;
use ragresearch::querygen::{build_initial_context, build_querygen_prompt, QueryGenRequest};
use ragresearch::Passage;

const QUESTION: &str =
    "I live close to a park with many geese. Can I get bird flu from their droppings?";

fn passage(text: &str) -> Passage {
    Passage {
        doc_id: "d".into(),
        passage_index: 0,
        token_span: (0, 1),
        text: text.into(),
    }
}

#[test]
fn querygen_prompt_matches_golden() {
    let context = build_initial_context(&[
        passage("Droppings dry, then are pulverized in the air."),
        passage("Q) Can pets get bird flu? A) Yes."),
        passage("Teach children to always wash their hands after playing outside."),
    ]);
    let req = QueryGenRequest::new(
        QUESTION,
        context,
        NaiveDate::from_ymd_opt(2025, 5, 1).unwrap(),
        2,
    )
    .unwrap();
    let got = build_querygen_prompt(&req).unwrap();
    assert_eq!(got, include_str!("golden/querygen_bird_flu.txt"));
}

#[test]
fn answer_prompt_matches_golden() {
    let context =
        "Droppings dry, then are pulverized in the air.\nQ) Can pets get bird flu? A) Yes.";
    let got = build_answer_prompt(context, QUESTION, 200).unwrap();
    assert_eq!(got, include_str!("golden/answer_bird_flu.txt"));
}

#[test]
fn context_with_braces_is_not_expanded() {
    let got = build_answer_prompt("fn main() { let {question} = 1; }", "Q", 5).unwrap();
    assert!(got.contains("{ let {question} = 1; }"));
}
