//! Evaluation and analysis battery: reward preference accuracy, pairwise
//! win rates with position randomization, randomized-context ablation, the
//! subreddit predictability classifier and regression, and Fleiss kappa.

pub mod accuracy;
pub mod classifier;
pub mod generation;
pub mod kappa;
pub mod regression;
pub mod sft_export;
pub mod winrate;

use thiserror::Error;

pub use accuracy::{reward_accuracy, ContextMode, RewardAccuracyReport};
pub use classifier::{train_subreddit_classifier, ClassifierConfig, SubredditClassifier};
pub use generation::{
    generate_responses, judge_with, randomized_context_eval, ContextChoice, GeneratedResponse,
};
pub use kappa::{fleiss_kappa, KappaResult};
pub use regression::{predictability_regression, RegressionResult, WinSample};
pub use sft_export::{export_sft_format, parse_context_prompt, SftRecord};
pub use winrate::{winrate, WinRateReport};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("no valid judgments")]
    NoValidJudgments,
    #[error("need at least 2 distinct labels")]
    SingleLabel,
    #[error("both outcome classes must be present")]
    OneOutcomeClass,
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("ragged ratings matrix: row {row} has {got} raters, expected {expected}")]
    RaggedRatings { row: usize, got: usize, expected: usize },
    #[error("inputs do not align: {0}")]
    Misaligned(String),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Synth(#[from] crate::synth::SynthError),
}

/// A pairwise judge as the harness sees it: given the community, the
/// question, and two responses in presentation order, say whether the first
/// wins. The ground-truth oracle and the remote LLM client both implement
/// this.
pub trait PairwiseJudge {
    fn judge(
        &self,
        subreddit: &str,
        question: &str,
        first: &str,
        second: &str,
    ) -> Result<bool, EvalError>;
}

impl PairwiseJudge for crate::synth::OracleWorld {
    fn judge(
        &self,
        subreddit: &str,
        question: &str,
        first: &str,
        second: &str,
    ) -> Result<bool, EvalError> {
        let verdict = crate::synth::oracle_judge(self, subreddit, question, first, second)?;
        Ok(verdict.first_wins)
    }
}
