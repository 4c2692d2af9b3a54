//! Training loops: Bradley-Terry reward, candidate-set SFT ranking, and DPO.
//!
//! Plain mini-batch gradient descent with a seeded shuffle per epoch.
//! Gradients are accumulated sequentially in example order, so a fixed seed
//! gives a bit-reproducible parameter trajectory.

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{FeatureVector, Featurizer};
use crate::losses::{bt_loss, bt_loss_grad, dpo_loss, dpo_loss_grad, logsumexp};
use crate::model::{CandidateSet, GradBuffer, ModelError, ModelParams, SHARED_COMMUNITY};
use crate::pairs::PreferenceInstance;
use crate::scalar::Real;
use crate::seeding;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("non-finite loss at step {step}")]
    NonFinite { step: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("no training examples")]
    Empty,
}

/// One featurized preference example. The candidate set always contains the
/// chosen and rejected responses; it may carry more.
#[derive(Debug, Clone)]
pub struct TrainExample<F> {
    pub subreddit: String,
    pub x: FeatureVector<F>,
    pub candidates: CandidateSet<F>,
    pub chosen: usize,
    pub rejected: usize,
}

impl<F: Real> TrainExample<F> {
    /// Featurizes an instance with the minimal two-response candidate set.
    pub fn from_instance(featurizer: &Featurizer, inst: &PreferenceInstance) -> Self {
        let candidates = CandidateSet {
            texts: vec![inst.chosen.clone(), inst.rejected.clone()],
            features: vec![featurizer.response(&inst.chosen), featurizer.response(&inst.rejected)],
        };
        Self {
            subreddit: inst.subreddit.clone(),
            x: featurizer.question(&inst.question),
            candidates,
            chosen: 0,
            rejected: 1,
        }
    }

    pub fn chosen_features(&self) -> &FeatureVector<F> {
        &self.candidates.features[self.chosen]
    }

    pub fn rejected_features(&self) -> &FeatureVector<F> {
        &self.candidates.features[self.rejected]
    }
}

/// Featurizes instances in their given (canonical) order.
pub fn examples_from_instances<F: Real>(
    featurizer: &Featurizer,
    instances: &[PreferenceInstance],
) -> Vec<TrainExample<F>> {
    instances.iter().map(|i| TrainExample::from_instance(featurizer, i)).collect()
}

/// Reward-model training configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardTrainConfig {
    pub learning_rate: f64,
    pub steps: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for RewardTrainConfig {
    fn default() -> Self {
        Self { learning_rate: 0.5, steps: 1000, batch_size: 32, seed: 0 }
    }
}

/// DPO training configuration. `beta` scales the policy/reference log-ratio
/// margin; the learning rate is re-tuned for the desk-scale scorer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpoConfig {
    pub beta: f64,
    pub learning_rate: f64,
    pub steps: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for DpoConfig {
    fn default() -> Self {
        Self { beta: 0.1, learning_rate: 5.0, steps: 1000, batch_size: 32, seed: 0 }
    }
}

/// Final parameters plus the mean pre-update loss of every step.
#[derive(Debug, Clone)]
pub struct TrainOutcome<F> {
    pub params: ModelParams<F>,
    pub loss_curve: Vec<f64>,
}

fn run_loop<F: Real>(
    mut params: ModelParams<F>,
    n_examples: usize,
    steps: usize,
    batch_size: usize,
    learning_rate: f64,
    seed: u64,
    mut loss_and_grad: impl FnMut(&ModelParams<F>, usize, &mut GradBuffer<F>) -> Result<F, TrainError>,
) -> Result<TrainOutcome<F>, TrainError> {
    if n_examples == 0 {
        return Err(TrainError::Empty);
    }
    let lr = F::from_f64_c(learning_rate);
    let mut grad = GradBuffer::zeros_like(&params);
    let mut order: Vec<usize> = (0..n_examples).collect();
    let mut pos = n_examples;
    let mut epoch = 0u64;
    let mut curve = Vec::with_capacity(steps);
    for step in 0..steps {
        grad.reset();
        let mut batch_loss = F::zero();
        for _ in 0..batch_size {
            if pos == n_examples {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(seeding::derive_indexed(seed, "epoch", epoch));
                order.shuffle(&mut rng);
                epoch += 1;
                pos = 0;
            }
            batch_loss += loss_and_grad(&params, order[pos], &mut grad)?;
            pos += 1;
        }
        let mean = batch_loss.to_f64().unwrap_or(f64::NAN) / batch_size as f64;
        if !mean.is_finite() {
            return Err(TrainError::NonFinite { step });
        }
        grad.scale(F::one() / F::from_f64_c(batch_size as f64));
        params.apply_gradient(&grad, lr);
        curve.push(mean);
    }
    Ok(TrainOutcome { params, loss_curve: curve })
}

fn bt_example_loss_grad<F: Real>(
    params: &ModelParams<F>,
    ex: &TrainExample<F>,
    grad: &mut GradBuffer<F>,
) -> Result<F, TrainError> {
    let (s_j, z_j) = params.score_with_projection(&ex.subreddit, &ex.x, ex.chosen_features())?;
    let (s_k, z_k) = params.score_with_projection(&ex.subreddit, &ex.x, ex.rejected_features())?;
    let loss = bt_loss(s_j, s_k);
    let (g_j, g_k) = bt_loss_grad(s_j, s_k);
    grad.accumulate_score_grad(params, &ex.subreddit, &ex.x, ex.chosen_features(), &z_j, g_j)?;
    grad.accumulate_score_grad(params, &ex.subreddit, &ex.x, ex.rejected_features(), &z_k, g_k)?;
    Ok(loss)
}

/// Trains a reward model by gradient descent on the mean pairwise loss.
pub fn train_reward<F: Real>(
    examples: &[TrainExample<F>],
    params_init: ModelParams<F>,
    config: &RewardTrainConfig,
) -> Result<TrainOutcome<F>, TrainError> {
    run_loop(
        params_init,
        examples.len(),
        config.steps,
        config.batch_size,
        config.learning_rate,
        config.seed,
        |params, idx, grad| bt_example_loss_grad(params, &examples[idx], grad),
    )
}

fn sft_example_loss_grad<F: Real>(
    params: &ModelParams<F>,
    ex: &TrainExample<F>,
    grad: &mut GradBuffer<F>,
) -> Result<F, TrainError> {
    let mut scores = Vec::with_capacity(ex.candidates.len());
    let mut projections = Vec::with_capacity(ex.candidates.len());
    for y in &ex.candidates.features {
        let (s, z) = params.score_with_projection(&ex.subreddit, &ex.x, y)?;
        scores.push(s);
        projections.push(z);
    }
    let lse = logsumexp(&scores);
    let loss = lse - scores[ex.chosen];
    for (i, y) in ex.candidates.features.iter().enumerate() {
        let p = (scores[i] - lse).exp();
        let coef = if i == ex.chosen { p - F::one() } else { p };
        grad.accumulate_score_grad(params, &ex.subreddit, &ex.x, y, &projections[i], coef)?;
    }
    Ok(loss)
}

/// Desk-scale SFT: fits the scorer to rank the chosen response by maximum
/// likelihood over the candidate set.
pub fn train_sft<F: Real>(
    examples: &[TrainExample<F>],
    params_init: ModelParams<F>,
    config: &RewardTrainConfig,
) -> Result<TrainOutcome<F>, TrainError> {
    run_loop(
        params_init,
        examples.len(),
        config.steps,
        config.batch_size,
        config.learning_rate,
        config.seed,
        |params, idx, grad| sft_example_loss_grad(params, &examples[idx], grad),
    )
}

/// Log-probabilities of (chosen, rejected) over the example's candidate set.
fn policy_logprob_pair<F: Real>(
    params: &ModelParams<F>,
    ex: &TrainExample<F>,
) -> Result<(F, F, Vec<F>), TrainError> {
    let scores = params.candidate_scores(&ex.subreddit, &ex.x, &ex.candidates)?;
    let lse = logsumexp(&scores);
    Ok((scores[ex.chosen] - lse, scores[ex.rejected] - lse, scores))
}

/// Trains a DPO policy. The policy starts as a copy of `sft_params`;
/// reference log-probabilities are computed once from the frozen SFT model.
pub fn train_dpo<F: Real>(
    examples: &[TrainExample<F>],
    sft_params: &ModelParams<F>,
    config: &DpoConfig,
) -> Result<TrainOutcome<F>, TrainError> {
    let beta = F::from_f64_c(config.beta);
    let mut ref_lps = Vec::with_capacity(examples.len());
    for ex in examples {
        let (lp_j, lp_k, _) = policy_logprob_pair(sft_params, ex)?;
        ref_lps.push((lp_j, lp_k));
    }
    run_loop(
        sft_params.clone(),
        examples.len(),
        config.steps,
        config.batch_size,
        config.learning_rate,
        config.seed,
        |params, idx, grad| {
            let ex = &examples[idx];
            let (ref_j, ref_k) = ref_lps[idx];
            let mut scores = Vec::with_capacity(ex.candidates.len());
            let mut proj_j = None;
            let mut proj_k = None;
            for (i, y) in ex.candidates.features.iter().enumerate() {
                if i == ex.chosen || i == ex.rejected {
                    let (s, z) = params.score_with_projection(&ex.subreddit, &ex.x, y)?;
                    if i == ex.chosen {
                        proj_j = Some(z);
                    } else {
                        proj_k = Some(z);
                    }
                    scores.push(s);
                } else {
                    scores.push(params.score(&ex.subreddit, &ex.x, y)?);
                }
            }
            let lse = logsumexp(&scores);
            let (lp_j, lp_k) = (scores[ex.chosen] - lse, scores[ex.rejected] - lse);
            let loss = dpo_loss(lp_j, lp_k, ref_j, ref_k, beta);
            let (g_j, g_k) = dpo_loss_grad(lp_j, lp_k, ref_j, ref_k, beta);
            // The shared log-normalizer cancels between the two candidate
            // log-probabilities, so only the chosen/rejected scores carry
            // gradient.
            grad.accumulate_score_grad(
                params,
                &ex.subreddit,
                &ex.x,
                ex.chosen_features(),
                proj_j.as_ref().expect("chosen projection"),
                g_j,
            )?;
            grad.accumulate_score_grad(
                params,
                &ex.subreddit,
                &ex.x,
                ex.rejected_features(),
                proj_k.as_ref().expect("rejected projection"),
                g_k,
            )?;
            Ok(loss)
        },
    )
}

/// Loss selector for [`grad_check`].
pub enum CheckLoss<'a, F: Real> {
    BradleyTerry,
    Dpo { beta: F, reference: &'a ModelParams<F> },
}

#[derive(Clone, Copy)]
enum Coord {
    Bias,
    Community(usize),
    Weight(usize),
}

/// Compares the analytic gradient against central finite differences on
/// every parameter coordinate the example touches, returning the maximum
/// relative error `|g_a - g_fd| / (|g_a| + 1e-8)`.
///
/// Coordinates whose analytic gradient is exactly zero by cancellation (the
/// bias, question-feature rows, softmax-normalizer terms) are verified with
/// an absolute bound on the finite difference instead: the relative form is
/// ill-conditioned there, any true zero passes it only up to rounding noise.
pub fn grad_check<F: Real>(
    loss: CheckLoss<'_, F>,
    params: &ModelParams<F>,
    example: &TrainExample<F>,
    epsilon: F,
) -> Result<F, TrainError> {
    let ref_lps = match &loss {
        CheckLoss::BradleyTerry => None,
        CheckLoss::Dpo { reference, .. } => {
            let (j, k, _) = policy_logprob_pair(reference, example)?;
            Some((j, k))
        }
    };
    let eval = |p: &ModelParams<F>| -> Result<F, TrainError> {
        match &loss {
            CheckLoss::BradleyTerry => {
                let s_j = p.score(&example.subreddit, &example.x, example.chosen_features())?;
                let s_k = p.score(&example.subreddit, &example.x, example.rejected_features())?;
                Ok(bt_loss(s_j, s_k))
            }
            CheckLoss::Dpo { beta, .. } => {
                let (lp_j, lp_k, _) = policy_logprob_pair(p, example)?;
                let (ref_j, ref_k) = ref_lps.expect("reference logprobs");
                Ok(dpo_loss(lp_j, lp_k, ref_j, ref_k, *beta))
            }
        }
    };

    // analytic gradient
    let mut grad = GradBuffer::zeros_like(params);
    match &loss {
        CheckLoss::BradleyTerry => {
            bt_example_loss_grad(params, example, &mut grad)?;
        }
        CheckLoss::Dpo { beta, .. } => {
            let (lp_j, lp_k, scores) = policy_logprob_pair(params, example)?;
            let (ref_j, ref_k) = ref_lps.expect("reference logprobs");
            let (g_j, g_k) = dpo_loss_grad(lp_j, lp_k, ref_j, ref_k, *beta);
            let _ = scores;
            let (_, z_j) =
                params.score_with_projection(&example.subreddit, &example.x, example.chosen_features())?;
            let (_, z_k) =
                params.score_with_projection(&example.subreddit, &example.x, example.rejected_features())?;
            grad.accumulate_score_grad(params, &example.subreddit, &example.x, example.chosen_features(), &z_j, g_j)?;
            grad.accumulate_score_grad(params, &example.subreddit, &example.x, example.rejected_features(), &z_k, g_k)?;
        }
    }

    // coordinates touched by the example
    let mut coords = vec![Coord::Bias];
    for e in 0..params.embed_dim {
        coords.push(Coord::Community(e));
    }
    let mut rows = std::collections::BTreeSet::new();
    let candidate_range: Vec<usize> = match &loss {
        CheckLoss::BradleyTerry => vec![example.chosen, example.rejected],
        CheckLoss::Dpo { .. } => (0..example.candidates.len()).collect(),
    };
    for ci in candidate_range {
        params.for_each_joint(&example.x, &example.candidates.features[ci], |idx, _| {
            rows.insert(idx as usize);
        });
    }
    for row in rows {
        for e in 0..params.embed_dim {
            coords.push(Coord::Weight(row * params.embed_dim + e));
        }
    }

    let comm_key = if params.context_enabled { example.subreddit.as_str() } else { SHARED_COMMUNITY };
    if params.context_enabled && !params.community_vecs.contains_key(comm_key) {
        return Err(ModelError::UnknownCommunity(comm_key.to_string()).into());
    }

    let two_eps = epsilon + epsilon;
    let fd_zero_tol = F::from_f64_c(1e-9);
    let rel_floor = F::from_f64_c(1e-8);
    let mut work = params.clone();
    let mut max_err = F::zero();
    for coord in coords {
        let (original, analytic) = match coord {
            Coord::Bias => (work.bias, grad.bias),
            Coord::Community(e) => (
                work.community_vecs[comm_key][e],
                grad.community_vecs[comm_key][e],
            ),
            Coord::Weight(i) => (work.feature_weights[i], grad.feature_weights[i]),
        };
        let set = |w: &mut ModelParams<F>, v: F| match coord {
            Coord::Bias => w.bias = v,
            Coord::Community(e) => w.community_vecs.get_mut(comm_key).unwrap()[e] = v,
            Coord::Weight(i) => w.feature_weights[i] = v,
        };
        set(&mut work, original + epsilon);
        let plus = eval(&work)?;
        set(&mut work, original - epsilon);
        let minus = eval(&work)?;
        set(&mut work, original);
        let fd = (plus - minus) / two_eps;
        let err = if analytic == F::zero() && fd.abs() < fd_zero_tol {
            F::zero()
        } else {
            (analytic - fd).abs() / (analytic.abs() + rel_floor)
        };
        if err > max_err {
            max_err = err;
        }
    }
    Ok(max_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Featurizer;

    fn featurizer() -> Featurizer {
        Featurizer::new(512)
    }

    fn instance(sub: &str, q: &str, chosen: &str, rejected: &str) -> PreferenceInstance {
        PreferenceInstance {
            domain: "d".into(),
            subreddit: sub.into(),
            post_id: "p".into(),
            question: q.into(),
            chosen: chosen.into(),
            rejected: rejected.into(),
            score_chosen: 4,
            score_rejected: 1,
            ts_chosen: 2,
            ts_rejected: 1,
        }
    }

    fn example() -> TrainExample<f64> {
        TrainExample::from_instance(
            &featurizer(),
            &instance("a", "which fund should i pick", "take the index fund", "put it all on red"),
        )
    }

    #[test]
    fn zero_steps_returns_init_unchanged() {
        let ex = vec![example()];
        let init = ModelParams::random_init(512, 8, &["a"], true, false, 4, 0.2);
        let cfg = RewardTrainConfig { steps: 0, ..Default::default() };
        let out = train_reward(&ex, init.clone(), &cfg).unwrap();
        assert_eq!(out.params, init);
        assert!(out.loss_curve.is_empty());
    }

    #[test]
    fn loss_at_step_zero_with_zero_init_is_ln_two() {
        let ex = vec![example()];
        let init = ModelParams::zeros(512, 8, &["a"], true, false);
        let cfg = RewardTrainConfig { steps: 1, learning_rate: 0.1, batch_size: 4, seed: 0 };
        let out = train_reward(&ex, init, &cfg).unwrap();
        assert_eq!(out.loss_curve[0], std::f64::consts::LN_2);
    }

    #[test]
    fn single_separable_instance_trains_below_threshold() {
        let ex = vec![example()];
        let init = ModelParams::random_init(512, 8, &["a"], true, false, 4, 0.1);
        let cfg = RewardTrainConfig { steps: 300, learning_rate: 1.0, batch_size: 4, seed: 0 };
        let out = train_reward(&ex, init, &cfg).unwrap();
        assert!(
            *out.loss_curve.last().unwrap() < 0.1,
            "final loss {}",
            out.loss_curve.last().unwrap()
        );
    }

    #[test]
    fn training_is_deterministic_per_seed() {
        let fz = featurizer();
        let instances: Vec<PreferenceInstance> = (0..20)
            .map(|i| {
                instance(
                    if i % 2 == 0 { "a" } else { "b" },
                    &format!("question number {i}"),
                    &format!("good answer {i}"),
                    &format!("bad answer {i}"),
                )
            })
            .collect();
        let ex: Vec<TrainExample<f64>> = examples_from_instances(&fz, &instances);
        let init = ModelParams::random_init(512, 8, &["a", "b"], true, false, 4, 0.2);
        let cfg = RewardTrainConfig { steps: 50, learning_rate: 0.5, batch_size: 8, seed: 9 };
        let one = train_reward(&ex, init.clone(), &cfg).unwrap();
        let two = train_reward(&ex, init, &cfg).unwrap();
        assert_eq!(one.params, two.params);
        assert_eq!(one.loss_curve, two.loss_curve);
    }

    #[test]
    fn dpo_loss_at_step_zero_is_ln_two_and_beta_zero_is_identity() {
        let ex = vec![example()];
        let sft = ModelParams::random_init(512, 8, &["a"], true, false, 4, 0.3);
        let cfg = DpoConfig { steps: 25, learning_rate: 2.0, batch_size: 4, seed: 1, beta: 0.1 };
        let out = train_dpo(&ex, &sft, &cfg).unwrap();
        assert_eq!(out.loss_curve[0], std::f64::consts::LN_2);

        let frozen = DpoConfig { beta: 0.0, ..cfg };
        let out = train_dpo(&ex, &sft, &frozen).unwrap();
        assert_eq!(out.params, sft, "beta = 0 leaves parameters bit-identical");
    }

    #[test]
    fn dpo_training_raises_chosen_logprob() {
        let fz = featurizer();
        let instances: Vec<PreferenceInstance> = (0..10)
            .map(|i| {
                instance(
                    "a",
                    &format!("question number {i}"),
                    "alpha style reply",
                    "omega style reply",
                )
            })
            .collect();
        let ex: Vec<TrainExample<f64>> = examples_from_instances(&fz, &instances);
        let sft = ModelParams::random_init(512, 8, &["a"], true, false, 4, 0.1);
        let cfg = DpoConfig { steps: 200, learning_rate: 5.0, batch_size: 8, seed: 1, beta: 0.1 };
        let out = train_dpo(&ex, &sft, &cfg).unwrap();
        let before = sft
            .policy_logprob(&"a", &ex[0].x, ex[0].chosen_features(), &ex[0].candidates)
            .unwrap();
        let after = out
            .params
            .policy_logprob(&"a", &ex[0].x, ex[0].chosen_features(), &ex[0].candidates)
            .unwrap();
        assert!(after > before, "{after} <= {before}");
    }

    #[test]
    fn non_finite_loss_reports_step() {
        let ex = vec![example()];
        let init = ModelParams::random_init(512, 8, &["a"], true, false, 4, 0.2);
        let cfg = RewardTrainConfig { steps: 200, learning_rate: 1e12, batch_size: 4, seed: 0 };
        match train_reward(&ex, init, &cfg) {
            Err(TrainError::NonFinite { step }) => assert!(step > 0),
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn central_differences_are_exact_on_a_quadratic() {
        // sanity harness for the checker itself
        let f = |x: f64| 3.0 * x * x + 2.0 * x + 1.0;
        let g = |x: f64| 6.0 * x + 2.0;
        for x in [-2.0, -0.5, 0.0, 1.0, 3.0] {
            let eps = 1e-5;
            let fd = (f(x + eps) - f(x - eps)) / (2.0 * eps);
            let rel = (g(x) - fd).abs() / (g(x).abs() + 1e-8);
            assert!(rel < 1e-8, "x={x} rel={rel}");
        }
    }

    #[test]
    fn bt_gradients_match_finite_differences() {
        let ex = example();
        let params = ModelParams::random_init(512, 8, &["a"], true, false, 11, 0.4);
        let err = grad_check(CheckLoss::BradleyTerry, &params, &ex, 1e-5).unwrap();
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn dpo_gradients_match_finite_differences() {
        let fz = featurizer();
        let inst = instance("a", "what is the right approach", "measured detailed reply", "short quip");
        let mut ex: TrainExample<f64> = TrainExample::from_instance(&fz, &inst);
        // widen the candidate set beyond the pair
        ex.candidates.texts.push("a third unrelated option".into());
        ex.candidates.features.push(fz.response("a third unrelated option"));
        let params = ModelParams::random_init(512, 8, &["a"], true, false, 12, 0.4);
        let reference = ModelParams::random_init(512, 8, &["a"], true, false, 13, 0.4);
        let err = grad_check(CheckLoss::Dpo { beta: 0.1, reference: &reference }, &params, &ex, 1e-5).unwrap();
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn interaction_gradients_match_finite_differences() {
        let ex = example();
        let params = ModelParams::random_init(512, 8, &["a"], true, true, 14, 0.3);
        let err = grad_check(CheckLoss::BradleyTerry, &params, &ex, 1e-5).unwrap();
        assert!(err < 1e-4, "max relative error {err}");
    }
}
