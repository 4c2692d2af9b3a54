//! Community-conditioned bilinear scorer.
//!
//! A response is scored as `community_vec(r) . (W^T phi(x, y)) + bias` where
//! `phi(x, y)` are the joint hashed features of the question and the
//! response (plus optional question x response interaction features) and `W`
//! is a dense `dim x embed_dim` weight matrix. With context disabled every
//! community shares a single vector, so scores are independent of the
//! community label. Log-probabilities over an explicit candidate set make
//! the policy exactly computable.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{interaction_bucket, FeatureVector};
use crate::losses::logsumexp;
use crate::scalar::Real;
use crate::seeding::derive;

/// Community key used for the shared vector when context is disabled.
pub const SHARED_COMMUNITY: &str = "*";

const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("unknown community: {0}")]
    UnknownCommunity(String),
    #[error("response is not in the candidate set")]
    ResponseNotInCandidates,
    #[error("candidate set needs at least 2 responses, got {0}")]
    CandidateSetTooSmall(usize),
    #[error("checkpoint io: {0}")]
    Io(#[from] io::Error),
    #[error("checkpoint format: {0}")]
    Format(#[from] serde_json::Error),
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
}

/// Parameters of the scorer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<F> {
    /// Hashed feature dimension D.
    pub dim: usize,
    /// Community embedding dimension E.
    pub embed_dim: usize,
    /// When false, a single shared vector replaces per-community vectors.
    pub context_enabled: bool,
    /// Include question x response interaction features in the joint map.
    pub interactions: bool,
    /// Seed the parameters were initialized from.
    pub seed: u64,
    pub bias: F,
    pub community_vecs: BTreeMap<String, Vec<F>>,
    /// Dense D x E matrix, row-major by feature index.
    pub feature_weights: Vec<F>,
}

impl<F: Real> ModelParams<F> {
    /// All-zero parameters. Useful for loss identities; training from zero
    /// stalls because the scorer is bilinear.
    pub fn zeros<S: AsRef<str>>(
        dim: usize,
        embed_dim: usize,
        communities: &[S],
        context_enabled: bool,
        interactions: bool,
    ) -> Self {
        let mut community_vecs = BTreeMap::new();
        if context_enabled {
            for c in communities {
                community_vecs.insert(c.as_ref().to_string(), vec![F::zero(); embed_dim]);
            }
        } else {
            community_vecs.insert(SHARED_COMMUNITY.to_string(), vec![F::zero(); embed_dim]);
        }
        Self {
            dim,
            embed_dim,
            context_enabled,
            interactions,
            seed: 0,
            bias: F::zero(),
            community_vecs,
            feature_weights: vec![F::zero(); dim * embed_dim],
        }
    }

    /// Gaussian init with standard deviation `scale`, deterministic per seed.
    pub fn random_init<S: AsRef<str>>(
        dim: usize,
        embed_dim: usize,
        communities: &[S],
        context_enabled: bool,
        interactions: bool,
        seed: u64,
        scale: f64,
    ) -> Self {
        let mut params = Self::zeros(dim, embed_dim, communities, context_enabled, interactions);
        params.seed = seed;
        let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, "model-init"));
        for w in params.feature_weights.iter_mut() {
            let g: f64 = rng.sample(StandardNormal);
            *w = F::from_f64_c(g * scale);
        }
        // community_vecs is a BTreeMap: iteration order is by name, so the
        // draw sequence does not depend on insertion order.
        for vec in params.community_vecs.values_mut() {
            for v in vec.iter_mut() {
                let g: f64 = rng.sample(StandardNormal);
                *v = F::from_f64_c(g * scale);
            }
        }
        params
    }

    pub fn communities(&self) -> Vec<String> {
        if self.context_enabled {
            self.community_vecs.keys().cloned().collect()
        } else {
            Vec::new()
        }
    }

    pub fn community_vec(&self, community: &str) -> Result<&[F], ModelError> {
        let key = if self.context_enabled { community } else { SHARED_COMMUNITY };
        self.community_vecs
            .get(key)
            .map(Vec::as_slice)
            .ok_or_else(|| ModelError::UnknownCommunity(community.to_string()))
    }

    /// Walks the joint features of (x, y): x terms, y terms, and, when
    /// enabled, hashed x*y interaction terms.
    pub fn for_each_joint(
        &self,
        x: &FeatureVector<F>,
        y: &FeatureVector<F>,
        mut visit: impl FnMut(u32, F),
    ) {
        for (i, v) in x.iter() {
            visit(i, v);
        }
        for (j, v) in y.iter() {
            visit(j, v);
        }
        if self.interactions {
            // presence-gated: each distinct question token contributes a copy
            // of the response counts, keeping values bounded
            for (i, _) in x.iter() {
                for (j, yv) in y.iter() {
                    visit(interaction_bucket(i, j, self.dim), yv);
                }
            }
        }
    }

    /// Projected joint features `z = W^T phi(x, y)`.
    pub fn project(&self, x: &FeatureVector<F>, y: &FeatureVector<F>) -> Vec<F> {
        let e = self.embed_dim;
        let mut z = vec![F::zero(); e];
        self.for_each_joint(x, y, |idx, v| {
            let row = &self.feature_weights[idx as usize * e..(idx as usize + 1) * e];
            for (zk, wk) in z.iter_mut().zip(row) {
                *zk += *wk * v;
            }
        });
        z
    }

    /// Scalar score for (community, question, response). Deterministic.
    pub fn score(
        &self,
        community: &str,
        x: &FeatureVector<F>,
        y: &FeatureVector<F>,
    ) -> Result<F, ModelError> {
        Ok(self.score_with_projection(community, x, y)?.0)
    }

    /// Score plus the projected features, for gradient reuse.
    pub fn score_with_projection(
        &self,
        community: &str,
        x: &FeatureVector<F>,
        y: &FeatureVector<F>,
    ) -> Result<(F, Vec<F>), ModelError> {
        let c = self.community_vec(community)?;
        let z = self.project(x, y);
        let mut s = self.bias;
        for (ck, zk) in c.iter().zip(z.iter()) {
            s += *ck * *zk;
        }
        Ok((s, z))
    }

    /// Scores for every candidate in the set.
    pub fn candidate_scores(
        &self,
        community: &str,
        x: &FeatureVector<F>,
        candidates: &CandidateSet<F>,
    ) -> Result<Vec<F>, ModelError> {
        candidates
            .features
            .iter()
            .map(|y| self.score(community, x, y))
            .collect()
    }

    /// `log p(y | x, community)` over the candidate set.
    ///
    /// The response must be a member of the set; results are log-softmax
    /// normalized, so `sum(exp(.))` over the set is 1.
    pub fn policy_logprob(
        &self,
        community: &str,
        x: &FeatureVector<F>,
        y: &FeatureVector<F>,
        candidates: &CandidateSet<F>,
    ) -> Result<F, ModelError> {
        let idx = candidates
            .features
            .iter()
            .position(|c| c == y)
            .ok_or(ModelError::ResponseNotInCandidates)?;
        self.policy_logprob_at(community, x, idx, candidates)
    }

    /// `log p(candidates[index] | x, community)`.
    pub fn policy_logprob_at(
        &self,
        community: &str,
        x: &FeatureVector<F>,
        index: usize,
        candidates: &CandidateSet<F>,
    ) -> Result<F, ModelError> {
        let scores = self.candidate_scores(community, x, candidates)?;
        Ok(scores[index] - logsumexp(&scores))
    }

    pub fn save_checkpoint(&self, path: &Path) -> Result<(), ModelError>
    where
        F: Serialize,
    {
        let file = Checkpoint { format_version: CHECKPOINT_VERSION, model: self };
        let bytes = serde_json::to_vec(&file)?;
        crate::jsonl::write_atomic(path, &bytes)?;
        Ok(())
    }

    pub fn load_checkpoint(path: &Path) -> Result<Self, ModelError>
    where
        F: DeserializeOwned,
    {
        let bytes = fs::read(path)?;
        let file: CheckpointOwned<F> = serde_json::from_slice(&bytes)?;
        if file.format_version != CHECKPOINT_VERSION {
            return Err(ModelError::Version(file.format_version));
        }
        Ok(file.model)
    }
}

#[derive(Serialize)]
struct Checkpoint<'a, F> {
    format_version: u32,
    model: &'a ModelParams<F>,
}

#[derive(Deserialize)]
#[serde(bound(deserialize = "F: DeserializeOwned"))]
struct CheckpointOwned<F> {
    format_version: u32,
    model: ModelParams<F>,
}

/// Candidate responses for one question, with their texts retained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet<F> {
    pub texts: Vec<String>,
    pub features: Vec<FeatureVector<F>>,
}

impl<F: Real> CandidateSet<F> {
    pub fn from_texts(featurizer: &crate::features::Featurizer, texts: Vec<String>) -> Result<Self, ModelError> {
        if texts.len() < 2 {
            return Err(ModelError::CandidateSetTooSmall(texts.len()));
        }
        let features = texts.iter().map(|t| featurizer.response(t)).collect();
        Ok(Self { texts, features })
    }

    pub fn len(&self) -> usize {
        self.texts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.texts.is_empty()
    }

    pub fn index_of_text(&self, text: &str) -> Option<usize> {
        self.texts.iter().position(|t| t == text)
    }
}

/// Dense gradient buffer matching a [`ModelParams`] layout.
#[derive(Debug, Clone)]
pub struct GradBuffer<F> {
    pub bias: F,
    pub community_vecs: BTreeMap<String, Vec<F>>,
    pub feature_weights: Vec<F>,
}

impl<F: Real> GradBuffer<F> {
    pub fn zeros_like(params: &ModelParams<F>) -> Self {
        Self {
            bias: F::zero(),
            community_vecs: params
                .community_vecs
                .keys()
                .map(|k| (k.clone(), vec![F::zero(); params.embed_dim]))
                .collect(),
            feature_weights: vec![F::zero(); params.feature_weights.len()],
        }
    }

    pub fn reset(&mut self) {
        self.bias = F::zero();
        for v in self.community_vecs.values_mut() {
            v.fill(F::zero());
        }
        self.feature_weights.fill(F::zero());
    }

    /// Accumulates `coef * d score(r, x, y) / d params`, reusing the
    /// projection `z` from [`ModelParams::score_with_projection`].
    pub fn accumulate_score_grad(
        &mut self,
        params: &ModelParams<F>,
        community: &str,
        x: &FeatureVector<F>,
        y: &FeatureVector<F>,
        z: &[F],
        coef: F,
    ) -> Result<(), ModelError> {
        let key = if params.context_enabled { community } else { SHARED_COMMUNITY };
        let c = params
            .community_vecs
            .get(key)
            .ok_or_else(|| ModelError::UnknownCommunity(community.to_string()))?;
        let g = self
            .community_vecs
            .get_mut(key)
            .expect("grad buffer mirrors params");
        for (gk, zk) in g.iter_mut().zip(z.iter()) {
            *gk += coef * *zk;
        }
        let e = params.embed_dim;
        params.for_each_joint(x, y, |idx, v| {
            let row = &mut self.feature_weights[idx as usize * e..(idx as usize + 1) * e];
            for (rk, ck) in row.iter_mut().zip(c.iter()) {
                *rk += coef * v * *ck;
            }
        });
        self.bias += coef;
        Ok(())
    }

    /// Scales the whole buffer, e.g. by `1 / batch_size`.
    pub fn scale(&mut self, factor: F) {
        self.bias = self.bias * factor;
        for v in self.community_vecs.values_mut() {
            for g in v.iter_mut() {
                *g = *g * factor;
            }
        }
        for g in self.feature_weights.iter_mut() {
            *g = *g * factor;
        }
    }
}

impl<F: Real> ModelParams<F> {
    /// One gradient-descent step: `params -= lr * grad`.
    pub fn apply_gradient(&mut self, grad: &GradBuffer<F>, lr: F) {
        self.bias = self.bias - lr * grad.bias;
        for (key, vec) in self.community_vecs.iter_mut() {
            let g = &grad.community_vecs[key];
            for (vk, gk) in vec.iter_mut().zip(g.iter()) {
                *vk = *vk - lr * *gk;
            }
        }
        for (wk, gk) in self.feature_weights.iter_mut().zip(grad.feature_weights.iter()) {
            *wk = *wk - lr * *gk;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Featurizer;

    fn fx(text: &str) -> FeatureVector<f64> {
        Featurizer::new(256).question(text)
    }

    fn fy(text: &str) -> FeatureVector<f64> {
        Featurizer::new(256).response(text)
    }

    #[test]
    fn zero_params_score_zero() {
        let p = ModelParams::<f64>::zeros(256, 4, &["a", "b"], true, false);
        let s = p.score("a", &fx("what is this"), &fy("an answer")).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn context_disabled_ignores_community_label() {
        let p = ModelParams::<f64>::random_init(256, 4, &Vec::<String>::new(), false, false, 9, 0.5);
        let x = fx("question text");
        let y = fy("some reply");
        let s1 = p.score("anything", &x, &y).unwrap();
        let s2 = p.score("else entirely", &x, &y).unwrap();
        assert_eq!(s1, s2);
    }

    #[test]
    fn unknown_community_errors_when_context_enabled() {
        let p = ModelParams::<f64>::zeros(256, 4, &["a"], true, false);
        let err = p.score("missing", &fx("q"), &fy("y")).unwrap_err();
        assert!(err.to_string().contains("unknown community"));
    }

    #[test]
    fn scoring_is_deterministic() {
        let p = ModelParams::<f64>::random_init(256, 8, &["a"], true, false, 42, 0.3);
        let x = fx("fixed input");
        let y = fy("fixed output");
        assert_eq!(p.score("a", &x, &y).unwrap(), p.score("a", &x, &y).unwrap());
    }

    #[test]
    fn policy_logprobs_normalize() {
        let p = ModelParams::<f64>::random_init(512, 8, &["a"], true, false, 1, 0.4);
        let f = Featurizer::new(512);
        let cands = CandidateSet::from_texts(
            &f,
            vec!["first reply".into(), "second one".into(), "third choice".into()],
        )
        .unwrap();
        let x = f.question("the question");
        let total: f64 = (0..cands.len())
            .map(|i| p.policy_logprob_at("a", &x, i, &cands).unwrap().exp())
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
        for i in 0..cands.len() {
            assert!(p.policy_logprob_at("a", &x, i, &cands).unwrap() <= 0.0);
        }
    }

    #[test]
    fn policy_logprob_symmetric_two_candidates() {
        let p = ModelParams::<f64>::zeros(256, 4, &["a"], true, false);
        let f = Featurizer::new(256);
        let cands = CandidateSet::from_texts(&f, vec!["one".into(), "two".into()]).unwrap();
        let x = f.question("q");
        let lp = p.policy_logprob(&"a", &x, &cands.features[0].clone(), &cands).unwrap();
        assert_eq!(lp, -std::f64::consts::LN_2);
    }

    #[test]
    fn policy_logprob_rejects_foreign_response() {
        let p = ModelParams::<f64>::zeros(256, 4, &["a"], true, false);
        let f = Featurizer::new(256);
        let cands = CandidateSet::from_texts(&f, vec!["one".into(), "two".into()]).unwrap();
        let foreign = f.response("three");
        let err = p.policy_logprob("a", &f.question("q"), &foreign, &cands).unwrap_err();
        assert!(matches!(err, ModelError::ResponseNotInCandidates));
    }

    #[test]
    fn checkpoint_roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let p = ModelParams::<f64>::random_init(128, 4, &["a", "b"], true, true, 5, 0.7);
        p.save_checkpoint(&path).unwrap();
        let q = ModelParams::<f64>::load_checkpoint(&path).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn candidate_set_requires_two() {
        let f = Featurizer::new(64);
        let err = CandidateSet::<f64>::from_texts(&f, vec!["only".into()]).unwrap_err();
        assert!(matches!(err, ModelError::CandidateSetTooSmall(1)));
    }
}
