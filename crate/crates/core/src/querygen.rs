//! Follow-up search query generation.
//!
//! The top initial passages are concatenated into a context, the question and
//! context are rendered into the query-generation prompt, and the model's reply
//! is parsed as a list of strings.

use chrono::NaiveDate;
use thiserror::Error;

use crate::clients::{ClientError, Generator};
use crate::template::{PromptTemplate, TemplateError};
use crate::types::Passage;

pub const QUERYGEN_TEMPLATE: &str = include_str!("../resources/querygen_prompt.txt");

/// Date rendering used in the prompt, e.g. `May 01, 2025`.
pub const DATE_FORMAT: &str = "%B %d, %Y";

#[derive(Debug, Clone, Error, PartialEq)]
pub enum QueryGenError {
    #[error("max_iterations must be at least 1")]
    NoIterations,
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error(transparent)]
    Parse(#[from] ParseFailure),
}

/// The model reply did not contain a list of strings.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("could not parse a query list from model output: {raw:?}")]
pub struct ParseFailure {
    pub raw: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryGenRequest {
    pub task: String,
    pub context: String,
    pub date: NaiveDate,
    pub max_iterations: usize,
    pub dynamic_examples: String,
}

impl QueryGenRequest {
    pub fn new(
        task: impl Into<String>,
        context: impl Into<String>,
        date: NaiveDate,
        max_iterations: usize,
    ) -> Result<Self, QueryGenError> {
        Ok(Self {
            task: task.into(),
            context: context.into(),
            date,
            max_iterations,
            dynamic_examples: render_dynamic_examples(max_iterations)?,
        })
    }
}

/// Passage texts in rank order, newline separated.
pub fn build_initial_context(passages: &[Passage]) -> String {
    passages
        .iter()
        .map(|p| p.text.as_str())
        .collect::<Vec<_>>()
        .join("\n")
}

/// `"query 1", "query 2", ...` up to `max_iterations`.
pub fn render_dynamic_examples(max_iterations: usize) -> Result<String, QueryGenError> {
    if max_iterations == 0 {
        return Err(QueryGenError::NoIterations);
    }
    Ok((1..=max_iterations)
        .map(|i| format!("\"query {i}\""))
        .collect::<Vec<_>>()
        .join(", "))
}

pub fn build_querygen_prompt(req: &QueryGenRequest) -> Result<String, QueryGenError> {
    let template = PromptTemplate::parse(QUERYGEN_TEMPLATE);
    let n = req.max_iterations.to_string();
    let date = req.date.format(DATE_FORMAT).to_string();
    Ok(template.render(&[
        ("max_iterations", &n),
        ("task", &req.task),
        ("date", &date),
        ("context", &req.context),
        ("dynamic_example", &req.dynamic_examples),
    ])?)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedQueries {
    pub queries: Vec<String>,
    /// Fewer queries came back than were asked for.
    pub short: bool,
    /// More came back and the surplus was dropped.
    pub truncated: bool,
}

fn strip_code_fence(s: &str) -> &str {
    let s = s.trim();
    let Some(body) = s.strip_prefix("```") else {
        return s;
    };
    // drop an info string such as `json`
    let body = body.split_once('\n').map_or(body, |(_, rest)| rest);
    body.trim_end().strip_suffix("```").unwrap_or(body).trim()
}

/// Parses a JSON list of strings out of a model reply.
///
/// Surrounding whitespace, code fences and prose around the brackets are
/// tolerated. Surplus queries beyond `expected_n` are dropped.
pub fn parse_query_list(raw: &str, expected_n: usize) -> Result<ParsedQueries, ParseFailure> {
    let fail = || ParseFailure {
        raw: raw.to_string(),
    };
    let body = strip_code_fence(raw);
    let start = body.find('[').ok_or_else(fail)?;
    let end = body.rfind(']').ok_or_else(fail)?;
    if end < start {
        return Err(fail());
    }
    let mut queries: Vec<String> = serde_json::from_str(&body[start..=end]).map_err(|_| fail())?;
    let truncated = queries.len() > expected_n;
    queries.truncate(expected_n);
    Ok(ParsedQueries {
        short: queries.len() < expected_n,
        truncated,
        queries,
    })
}

/// Renders the prompt, asks the model (system message left blank) and parses
/// the reply.
pub fn generate_queries(
    client: &dyn Generator,
    req: &QueryGenRequest,
) -> Result<ParsedQueries, QueryGenError> {
    let prompt = build_querygen_prompt(req)?;
    let raw = client.generate("", &prompt)?;
    Ok(parse_query_list(&raw, req.max_iterations)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(text: &str) -> Passage {
        Passage {
            doc_id: "d".into(),
            passage_index: 0,
            token_span: (0, 1),
            text: text.into(),
        }
    }

    fn date() -> NaiveDate {
        NaiveDate::from_ymd_opt(2025, 5, 1).unwrap()
    }

    #[test]
    fn initial_context_join() {
        assert_eq!(build_initial_context(&[p("A"), p("B"), p("C")]), "A\nB\nC");
        assert_eq!(build_initial_context(&[]), "");
        assert_eq!(build_initial_context(&[p("only")]), "only");
    }

    #[test]
    fn dynamic_examples() {
        assert_eq!(
            render_dynamic_examples(2).unwrap(),
            r#""query 1", "query 2""#
        );
        assert_eq!(render_dynamic_examples(1).unwrap(), r#""query 1""#);
        assert_eq!(
            render_dynamic_examples(4).unwrap(),
            r#""query 1", "query 2", "query 3", "query 4""#
        );
        assert_eq!(render_dynamic_examples(0), Err(QueryGenError::NoIterations));
    }

    #[test]
    fn prompt_contents() {
        let req = QueryGenRequest::new("T", "C", date(), 2).unwrap();
        let prompt = build_querygen_prompt(&req).unwrap();
        assert_eq!(prompt.matches("\"T\"").count(), 2);
        assert!(prompt.contains("You must respond with a list of strings"));
        assert!(prompt.contains("Assume the current date is May 01, 2025 if required."));
        assert!(prompt.contains(r#"format: ["query 1", "query 2"]."#));
        assert!(prompt.starts_with("Write 2 google search queries"));
    }

    #[test]
    fn empty_context_still_renders() {
        let req = QueryGenRequest::new("T", "", date(), 2).unwrap();
        let prompt = build_querygen_prompt(&req).unwrap();
        assert!(prompt.contains("Context: \n"));
    }

    #[test]
    fn unfilled_placeholder_errors() {
        let t = PromptTemplate::parse(QUERYGEN_TEMPLATE);
        let err = t.render(&[("task", "T")]).unwrap_err();
        assert_eq!(err, TemplateError::Unfilled("max_iterations".into()));
    }

    #[test]
    fn parse_plain_list() {
        let got = parse_query_list(r#"["a b", "c d"]"#, 2).unwrap();
        assert_eq!(got.queries, ["a b", "c d"]);
        assert!(!got.short && !got.truncated);
    }

    #[test]
    fn parse_fenced_list() {
        let got = parse_query_list("```json\n[\"x\",\"y\"]\n```", 2).unwrap();
        assert_eq!(got.queries, ["x", "y"]);
        let got = parse_query_list("  ```\n[\"x\"]\n```  ", 2).unwrap();
        assert_eq!(got.queries, ["x"]);
        assert!(got.short);
    }

    #[test]
    fn parse_failures() {
        for raw in ["no list here", "] [", "[1, 2]", "[\"unterminated", ""] {
            assert_eq!(
                parse_query_list(raw, 2),
                Err(ParseFailure {
                    raw: raw.to_string()
                }),
                "{raw:?}"
            );
        }
    }

    #[test]
    fn surplus_is_truncated() {
        let got = parse_query_list(r#"Sure! ["a", "b", "c"]"#, 2).unwrap();
        assert_eq!(got.queries, ["a", "b"]);
        assert!(got.truncated);
    }

    proptest! {
        #[test]
        fn examples_count(n in 1usize..40) {
            let s = render_dynamic_examples(n).unwrap();
            prop_assert_eq!(s.matches("query ").count(), n);
        }

        #[test]
        fn never_more_than_expected(items in proptest::collection::vec("[a-z ]{0,8}", 0..8), n in 0usize..6) {
            let raw = serde_json::to_string(&items).unwrap();
            let got = parse_query_list(&raw, n).unwrap();
            prop_assert!(got.queries.len() <= n);
            prop_assert_eq!(&got.queries[..], &items[..items.len().min(n)]);
        }

        #[test]
        fn prompt_injective(t1 in ".{0,20}", t2 in ".{0,20}", c1 in ".{0,20}", c2 in ".{0,20}") {
            prop_assume!((t1.as_str(), c1.as_str()) != (t2.as_str(), c2.as_str()));
            let a = build_querygen_prompt(&QueryGenRequest::new(t1, c1, date(), 2).unwrap()).unwrap();
            let b = build_querygen_prompt(&QueryGenRequest::new(t2, c2, date(), 2).unwrap()).unwrap();
            prop_assert_ne!(a, b);
        }
    }
}
