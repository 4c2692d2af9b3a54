//! Response generation over candidate sets and the randomized-context
//! ablation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::eval::{winrate, EvalError, PairwiseJudge, WinRateReport};
use crate::features::Featurizer;
use crate::judge::{JudgeVerdict, Winner};
use crate::model::{CandidateSet, ModelParams};
use crate::pairs::EvalPrompt;
use crate::sampling::sample_response;
use crate::scalar::Real;
use crate::seeding;

/// Which community label conditions generation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ContextChoice {
    /// The prompt's own community.
    True,
    /// A community resampled uniformly from the pool; the true one is
    /// excluded unless `include_true`.
    Randomized { pool: Vec<String>, include_true: bool },
}

/// One generated response, tagged with the community label used to produce
/// it. `subreddit` stays the true community: judging is always relative to
/// the community the question came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedResponse {
    pub instance_id: String,
    pub subreddit: String,
    pub question: String,
    pub response: String,
    pub context_used: String,
}

fn pick_context(
    choice: &ContextChoice,
    true_community: &str,
    instance_id: &str,
    seed: u64,
) -> Result<String, EvalError> {
    match choice {
        ContextChoice::True => Ok(true_community.to_string()),
        ContextChoice::Randomized { pool, include_true } => {
            let options: Vec<&String> = pool
                .iter()
                .filter(|c| *include_true || c.as_str() != true_community)
                .collect();
            if options.is_empty() {
                return Err(EvalError::EmptyInput(format!(
                    "community pool for {instance_id} (true community excluded)"
                )));
            }
            let idx = seeding::derive(seed, &format!("ctx/{instance_id}")) as usize % options.len();
            Ok(options[idx].clone())
        }
    }
}

/// Samples one response per prompt from its candidate set. The per-prompt
/// sampling seed is derived from the instance id and a side label so
/// different generation runs draw independently.
pub fn generate_responses<F: Real>(
    params: &ModelParams<F>,
    featurizer: &Featurizer,
    prompts: &[EvalPrompt],
    candidates: &BTreeMap<String, CandidateSet<F>>,
    context: &ContextChoice,
    side_label: &str,
    top_p: f64,
    temperature: f64,
    seed: u64,
) -> Result<Vec<GeneratedResponse>, EvalError> {
    let mut out = Vec::with_capacity(prompts.len());
    for prompt in prompts {
        let instance_id = prompt.instance_id();
        let cands = candidates.get(&prompt.post_id).ok_or_else(|| {
            EvalError::EmptyInput(format!("no candidate set for post {}", prompt.post_id))
        })?;
        let community = pick_context(context, &prompt.subreddit, &instance_id, seed)?;
        let x = featurizer.question::<F>(&prompt.question);
        let draw_seed = seeding::derive(seed, &format!("sample/{side_label}/{instance_id}"));
        let idx = sample_response(params, &community, &x, cands, top_p, temperature, draw_seed)
            .map_err(EvalError::Model)?;
        out.push(GeneratedResponse {
            instance_id,
            subreddit: prompt.subreddit.clone(),
            question: prompt.question.clone(),
            response: cands.texts[idx].clone(),
            context_used: community,
        });
    }
    Ok(out)
}

/// Judges two aligned response sets with seeded position randomization.
/// Model 1 is side `a`, model 2 is side `b`; the flip decides presentation
/// order only.
pub fn judge_with(
    judge: &dyn PairwiseJudge,
    side_a: &[GeneratedResponse],
    side_b: &[GeneratedResponse],
    seed: u64,
) -> Result<Vec<JudgeVerdict>, EvalError> {
    if side_a.len() != side_b.len() {
        return Err(EvalError::Misaligned(format!(
            "side a has {} responses, side b has {}",
            side_a.len(),
            side_b.len()
        )));
    }
    let mut verdicts = Vec::with_capacity(side_a.len());
    for (a, b) in side_a.iter().zip(side_b) {
        if a.instance_id != b.instance_id {
            return Err(EvalError::Misaligned(format!(
                "instance ids diverge: {} vs {}",
                a.instance_id, b.instance_id
            )));
        }
        let flipped = seeding::coin(seed, "judge-flip", &a.instance_id);
        let (first, second) = if flipped { (b, a) } else { (a, b) };
        let first_wins = judge.judge(&a.subreddit, &a.question, &first.response, &second.response)?;
        let winner_is_a = first_wins == !flipped;
        verdicts.push(JudgeVerdict {
            instance_id: a.instance_id.clone(),
            order_flipped: flipped,
            winner: Some(if winner_is_a { Winner::Model1 } else { Winner::Model2 }),
            valid: true,
            raw_reply: if first_wins { "m".into() } else { "M".into() },
        });
    }
    Ok(verdicts)
}

/// Randomized-context ablation: response A conditions on the true community,
/// response B on a random other one; the report carries B's win rate.
#[allow(clippy::too_many_arguments)]
pub fn randomized_context_eval<F: Real>(
    params: &ModelParams<F>,
    featurizer: &Featurizer,
    prompts: &[EvalPrompt],
    candidates: &BTreeMap<String, CandidateSet<F>>,
    community_pool: &[String],
    judge: &dyn PairwiseJudge,
    top_p: f64,
    temperature: f64,
    seed: u64,
) -> Result<(WinRateReport, Vec<JudgeVerdict>), EvalError> {
    if community_pool.len() < 2 {
        return Err(EvalError::EmptyInput("community pool needs at least 2 entries".into()));
    }
    let true_side = generate_responses(
        params,
        featurizer,
        prompts,
        candidates,
        &ContextChoice::True,
        "true-context",
        top_p,
        temperature,
        seed,
    )?;
    let random_side = generate_responses(
        params,
        featurizer,
        prompts,
        candidates,
        &ContextChoice::Randomized { pool: community_pool.to_vec(), include_true: false },
        "random-context",
        top_p,
        temperature,
        seed,
    )?;
    let verdicts = judge_with(judge, &true_side, &random_side, seed)?;
    let report = winrate(&verdicts)?;
    Ok((report, verdicts))
}
