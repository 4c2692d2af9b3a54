//! Win-rate aggregation over judge verdicts.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::eval::EvalError;
use crate::judge::{JudgeVerdict, Winner};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubredditWins {
    pub n: usize,
    pub wins_model_2: usize,
}

/// Fraction of valid comparisons won by model 2, pooled and per subreddit.
/// Invalid verdicts are excluded from the denominator and reported.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WinRateReport {
    pub per_subreddit: BTreeMap<String, SubredditWins>,
    pub n_valid: usize,
    pub wins_model_2: usize,
    pub invalid_count: usize,
    /// Percentage in [0, 100].
    pub win_rate: f64,
}

/// Subreddit encoded in an instance id as `<subreddit>::<post_id>`; ids
/// without the separator aggregate under `all`.
fn subreddit_of(instance_id: &str) -> &str {
    match instance_id.split_once("::") {
        Some((sub, _)) if !sub.is_empty() => sub,
        _ => "all",
    }
}

pub fn winrate(verdicts: &[JudgeVerdict]) -> Result<WinRateReport, EvalError> {
    let mut report = WinRateReport::default();
    for v in verdicts {
        if !v.valid {
            report.invalid_count += 1;
            continue;
        }
        let entry = report.per_subreddit.entry(subreddit_of(&v.instance_id).to_string()).or_default();
        entry.n += 1;
        report.n_valid += 1;
        if v.winner == Some(Winner::Model2) {
            entry.wins_model_2 += 1;
            report.wins_model_2 += 1;
        }
    }
    if report.n_valid == 0 {
        return Err(EvalError::NoValidJudgments);
    }
    report.win_rate = 100.0 * report.wins_model_2 as f64 / report.n_valid as f64;
    Ok(report)
}
