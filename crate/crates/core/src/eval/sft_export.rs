//! SFT-format export: `{prompt, completion}` records for external trainers.
//!
//! With context enabled the prompt is `r/<subreddit>` + blank line +
//! question; the delimiter is unambiguous, so the pair can be recovered
//! exactly.

use serde::{Deserialize, Serialize};

use crate::pairs::PreferenceInstance;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftRecord {
    pub prompt: String,
    pub completion: String,
}

/// Prompt template with context: `r/<subreddit>\n\n<question>`.
pub fn context_prompt(subreddit: &str, question: &str) -> String {
    format!("r/{subreddit}\n\n{question}")
}

/// Recovers `(subreddit, question)` from a context prompt.
pub fn parse_context_prompt(prompt: &str) -> Option<(String, String)> {
    let rest = prompt.strip_prefix("r/")?;
    let (subreddit, question) = rest.split_once("\n\n")?;
    if subreddit.is_empty() || subreddit.contains(char::is_whitespace) {
        return None;
    }
    Some((subreddit.to_string(), question.to_string()))
}

pub fn export_sft_format(instances: &[PreferenceInstance], with_context: bool) -> Vec<SftRecord> {
    instances
        .iter()
        .map(|inst| SftRecord {
            prompt: if with_context {
                context_prompt(&inst.subreddit, &inst.question)
            } else {
                inst.question.clone()
            },
            completion: inst.chosen.clone(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn instance() -> PreferenceInstance {
        PreferenceInstance {
            domain: "politics".into(),
            subreddit: "conservative".into(),
            post_id: "p".into(),
            question: "Q".into(),
            chosen: "chosen answer".into(),
            rejected: "other".into(),
            score_chosen: 4,
            score_rejected: 1,
            ts_chosen: 2,
            ts_rejected: 1,
        }
    }

    #[test]
    fn context_template_is_exact() {
        let records = export_sft_format(&[instance()], true);
        assert_eq!(records[0].prompt, "r/conservative\n\nQ");
        assert_eq!(records[0].completion, "chosen answer");
    }

    #[test]
    fn no_context_is_question_alone() {
        let records = export_sft_format(&[instance()], false);
        assert_eq!(records[0].prompt, "Q");
    }

    #[test]
    fn roundtrip_recovers_subreddit_and_question() {
        let mut inst = instance();
        inst.question = "What now?\n\nDetails follow.".into();
        let records = export_sft_format(&[inst.clone()], true);
        let (sub, q) = parse_context_prompt(&records[0].prompt).unwrap();
        assert_eq!(sub, inst.subreddit);
        assert_eq!(q, inst.question);
    }
}
