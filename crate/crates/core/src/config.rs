use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{0} must be positive")]
    NotPositive(&'static str),
    #[error("snippet_overlap ({overlap}) must be smaller than snippet_chars ({size})")]
    OverlapTooLarge { overlap: usize, size: usize },
    #[error("sim_threshold {0} is outside [-1, 1]")]
    ThresholdOutOfRange(f64),
}

/// Knobs for both pipeline stages. Defaults reproduce the submitted system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Passages concatenated into the query-generation context.
    pub k_initial: usize,
    /// Follow-up queries requested from the model (`max_iterations`).
    pub n_generated_queries: usize,
    /// Passages kept per generated query and for the original question.
    pub k_per_query: usize,
    pub passage_tokens: usize,
    pub snippet_chars: usize,
    pub snippet_overlap: usize,
    /// Inclusive lower bound on question/snippet cosine similarity.
    pub sim_threshold: f64,
    pub total_words: usize,
    /// Date shown in the query-generation prompt; `None` means the run date.
    pub date: Option<NaiveDate>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            k_initial: 3,
            n_generated_queries: 2,
            k_per_query: 3,
            passage_tokens: 450,
            snippet_chars: 1000,
            snippet_overlap: 100,
            sim_threshold: 0.35,
            total_words: 200,
            date: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let counts = [
            ("k_initial", self.k_initial),
            ("n_generated_queries", self.n_generated_queries),
            ("k_per_query", self.k_per_query),
            ("passage_tokens", self.passage_tokens),
            ("snippet_chars", self.snippet_chars),
            ("total_words", self.total_words),
        ];
        for (name, value) in counts {
            if value == 0 {
                return Err(ConfigError::NotPositive(name));
            }
        }
        if self.snippet_overlap >= self.snippet_chars {
            return Err(ConfigError::OverlapTooLarge {
                overlap: self.snippet_overlap,
                size: self.snippet_chars,
            });
        }
        if !(-1.0..=1.0).contains(&self.sim_threshold) {
            return Err(ConfigError::ThresholdOutOfRange(self.sim_threshold));
        }
        Ok(())
    }

    /// The configured date, or today's local date.
    pub fn effective_date(&self) -> NaiveDate {
        self.date
            .unwrap_or_else(|| chrono::Local::now().date_naive())
    }

    /// Upper bound on passages gathered per question.
    pub fn max_passages(&self) -> usize {
        (self.n_generated_queries + 1) * self.k_per_query
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_submitted_system() {
        let c = PipelineConfig::default();
        assert_eq!(c.k_initial, 3);
        assert_eq!(c.n_generated_queries, 2);
        assert_eq!(c.k_per_query, 3);
        assert_eq!(c.passage_tokens, 450);
        assert_eq!(c.snippet_chars, 1000);
        assert_eq!(c.snippet_overlap, 100);
        assert_eq!(c.sim_threshold, 0.35);
        assert_eq!(c.total_words, 200);
        assert_eq!(c.max_passages(), 9);
        c.validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let c = PipelineConfig {
            k_per_query: 0,
            ..PipelineConfig::default()
        };
        assert_eq!(c.validate(), Err(ConfigError::NotPositive("k_per_query")));

        let c = PipelineConfig {
            snippet_overlap: 1000,
            ..PipelineConfig::default()
        };
        assert!(matches!(
            c.validate(),
            Err(ConfigError::OverlapTooLarge { .. })
        ));

        let c = PipelineConfig {
            sim_threshold: 1.5,
            ..PipelineConfig::default()
        };
        assert_eq!(c.validate(), Err(ConfigError::ThresholdOutOfRange(1.5)));
    }

    #[test]
    fn partial_json_fills_defaults() {
        let c: PipelineConfig =
            serde_json::from_str(r#"{"sim_threshold": 0.5, "date": "2025-05-01"}"#).unwrap();
        assert_eq!(c.sim_threshold, 0.5);
        assert_eq!(c.k_initial, 3);
        assert_eq!(
            c.effective_date(),
            NaiveDate::from_ymd_opt(2025, 5, 1).unwrap()
        );
    }
}
