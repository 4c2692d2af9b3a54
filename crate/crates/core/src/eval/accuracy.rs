//! Reward preference accuracy: the fraction of held-out pairs where the
//! preferred response scores strictly higher. Ties count as incorrect.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::eval::EvalError;
use crate::features::Featurizer;
use crate::model::ModelParams;
use crate::pairs::PreferenceInstance;
use crate::scalar::Real;

/// Whether the scorer receives each pair's community label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextMode {
    /// Score with the instance's subreddit.
    True,
    /// Withhold the community: score through the shared vector. Pairs a
    /// context-conditioned model cannot score are skipped and counted.
    Withhold,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubredditAccuracy {
    pub n: usize,
    pub correct: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardAccuracyReport {
    pub per_subreddit: BTreeMap<String, SubredditAccuracy>,
    pub n: usize,
    pub correct: usize,
    pub skipped: usize,
    /// Pooled accuracy in percent.
    pub accuracy_pct: f64,
}

impl RewardAccuracyReport {
    pub fn subreddit_accuracy_pct(&self, subreddit: &str) -> Option<f64> {
        let s = self.per_subreddit.get(subreddit)?;
        Some(100.0 * s.correct as f64 / s.n.max(1) as f64)
    }
}

/// Computes accuracy from any pair scorer. `None` marks an unscorable pair
/// (unknown community); those are skipped and counted.
pub fn reward_accuracy_with(
    mut score_pair: impl FnMut(&PreferenceInstance) -> Option<(f64, f64)>,
    pairs: &[PreferenceInstance],
) -> Result<RewardAccuracyReport, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::EmptyInput("eval pairs".into()));
    }
    let mut report = RewardAccuracyReport::default();
    for inst in pairs {
        match score_pair(inst) {
            None => report.skipped += 1,
            Some((s_chosen, s_rejected)) => {
                let entry = report.per_subreddit.entry(inst.subreddit.clone()).or_default();
                entry.n += 1;
                report.n += 1;
                if s_chosen > s_rejected {
                    entry.correct += 1;
                    report.correct += 1;
                }
            }
        }
    }
    report.accuracy_pct = 100.0 * report.correct as f64 / report.n.max(1) as f64;
    Ok(report)
}

/// Accuracy of a trained model on held-out pairs.
pub fn reward_accuracy<F: Real>(
    params: &ModelParams<F>,
    featurizer: &Featurizer,
    pairs: &[PreferenceInstance],
    context_mode: ContextMode,
) -> Result<RewardAccuracyReport, EvalError> {
    reward_accuracy_with(
        |inst| {
            let community = match context_mode {
                ContextMode::True => inst.subreddit.as_str(),
                ContextMode::Withhold => crate::model::SHARED_COMMUNITY,
            };
            let x = featurizer.question::<F>(&inst.question);
            let yc = featurizer.response::<F>(&inst.chosen);
            let yr = featurizer.response::<F>(&inst.rejected);
            let sc = params.score(community, &x, &yc).ok()?;
            let sr = params.score(community, &x, &yr).ok()?;
            Some((sc.to_f64()?, sr.to_f64()?))
        },
        pairs,
    )
}
