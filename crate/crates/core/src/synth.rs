//! Synthetic multi-community preference benchmark with a ground-truth
//! oracle.
//!
//! Each community has a latent preference vector `w_r`; each response has a
//! latent vector whose signed magnitudes are spelled out as tokens, so
//! hashed bag-of-words features can recover it. The oracle utility of a
//! response is `w_r . v`. Preferences are sampled from the Bradley-Terry
//! model: within a candidate ranking, Gumbel noise scaled by the noise
//! temperature gives every pair the marginal
//! `P(a beats b) = sigmoid((u_a - u_b) / temperature)`.
//!
//! The generator also emits pipeline-compatible threads whose scores and
//! timestamps encode the sampled ranking (better answers post later and
//! score at least twice as high), so the whole toolchain can run end to end
//! on synthetic data.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{CommentRecord, PostRecord, ThreadRecord};
use crate::pairs::{apply_ratio_filter, candidate_pairs, sort_canonical, EvalPrompt, PreferenceInstance};
use crate::seeding;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    InvalidConfig(String),
    #[error("unknown response text (not generated by this world)")]
    UnknownResponse,
    #[error("unknown community: {0}")]
    UnknownCommunity(String),
}

/// How community preference vectors relate to each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreferenceMode {
    /// Two communities with exactly opposite preferences (w2 = -w1).
    Opposing,
    /// Independent random preference vectors.
    Independent,
    /// All communities share one preference vector.
    Shared,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_communities: usize,
    /// Latent (oracle) feature dimension.
    pub feature_dim: usize,
    /// Number of evaluation questions (prompts).
    pub n_questions: usize,
    /// Candidate responses per evaluation question.
    pub candidates_per_question: usize,
    /// Training pairs per community; every training question is sampled once
    /// per community (symmetric sampling).
    pub pairs_per_community: usize,
    pub preference_mode: PreferenceMode,
    /// Bradley-Terry noise temperature; 0 means noiseless labels.
    pub noise_temperature: f64,
    /// Fraction of questions that carry community-marker tokens, making the
    /// community inferable from the question text alone.
    pub leak_fraction: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_communities: 2,
            feature_dim: 8,
            n_questions: 500,
            candidates_per_question: 4,
            pairs_per_community: 1000,
            preference_mode: PreferenceMode::Opposing,
            noise_temperature: 0.5,
            leak_fraction: 0.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_communities < 2 {
            return Err(SynthError::InvalidConfig("need at least 2 communities".into()));
        }
        if self.preference_mode == PreferenceMode::Opposing && self.n_communities != 2 {
            return Err(SynthError::InvalidConfig("opposing mode requires exactly 2 communities".into()));
        }
        if self.candidates_per_question < 2 || self.candidates_per_question > 16 {
            return Err(SynthError::InvalidConfig("candidates_per_question must be in 2..=16".into()));
        }
        if self.feature_dim == 0 {
            return Err(SynthError::InvalidConfig("feature_dim must be positive".into()));
        }
        if self.noise_temperature < 0.0 {
            return Err(SynthError::InvalidConfig("noise_temperature must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.leak_fraction) {
            return Err(SynthError::InvalidConfig("leak_fraction must be in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Ground truth: community preference vectors, question vectors, and the
/// latent vector behind every generated response text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleWorld {
    pub feature_dim: usize,
    pub noise_temperature: f64,
    pub preference_mode: PreferenceMode,
    pub communities: Vec<String>,
    pub community_weights: BTreeMap<String, Vec<f64>>,
    pub question_vecs: BTreeMap<String, Vec<f64>>,
    pub response_latents: BTreeMap<String, Vec<f64>>,
}

impl OracleWorld {
    /// Oracle utility of a response text for a community.
    pub fn utility(&self, community: &str, response: &str) -> Result<f64, SynthError> {
        let w = self
            .community_weights
            .get(community)
            .ok_or_else(|| SynthError::UnknownCommunity(community.to_string()))?;
        let v = self.response_latents.get(response).ok_or(SynthError::UnknownResponse)?;
        Ok(dot(w, v))
    }
}

/// Verdict of the ground-truth judge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleVerdict {
    /// True when the first presented response wins.
    pub first_wins: bool,
    /// Set when utilities tied exactly; ties break toward the first.
    pub tie: bool,
}

/// Picks the response with the higher oracle utility; ties break toward
/// `response_a` and are flagged.
pub fn oracle_judge(
    world: &OracleWorld,
    community: &str,
    _question: &str,
    response_a: &str,
    response_b: &str,
) -> Result<OracleVerdict, SynthError> {
    let ua = world.utility(community, response_a)?;
    let ub = world.utility(community, response_b)?;
    Ok(OracleVerdict { first_wins: ua >= ub, tie: ua == ub })
}

/// Per-question candidate texts, keyed by post id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub post_id: String,
    pub responses: Vec<String>,
}

/// Everything the generator produces.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub world: OracleWorld,
    /// Pipeline-compatible threads (train and eval).
    pub threads: Vec<ThreadRecord>,
    pub train: Vec<PreferenceInstance>,
    pub eval_prompts: Vec<EvalPrompt>,
    pub eval_pairs: Vec<PreferenceInstance>,
    pub candidates: Vec<CandidateRecord>,
}

const DOMAIN: &str = "synth";
const BASE_TS: i64 = 1_600_000_000;
const TOKENS_PER_UNIT: f64 = 2.0;
const MAX_TOKEN_REPS: usize = 8;
const MARKERS_PER_QUESTION: usize = 6;
const MARKER_VOCAB: usize = 4;
/// Standard deviation of response latents. Larger values widen utility gaps
/// relative to the label noise temperature.
const RESPONSE_SCALE: f64 = 1.4;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn unit_gaussian_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let norm = dot(&v, &v).sqrt();
    if norm == 0.0 {
        return std::iter::once(1.0).chain(std::iter::repeat(0.0)).take(dim).collect();
    }
    v.into_iter().map(|x| x / norm).collect()
}

fn gaussian_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

/// Spells a latent vector out as tokens: dimension f contributes
/// `round(|v_f| * 2)` copies (capped) of `{prefix}{f}p` or `{prefix}{f}n`.
fn latent_tokens(prefix: &str, v: &[f64]) -> Vec<String> {
    let mut tokens = Vec::new();
    for (f, &x) in v.iter().enumerate() {
        let reps = ((x.abs() * TOKENS_PER_UNIT).round() as usize).min(MAX_TOKEN_REPS);
        let sign = if x >= 0.0 { "p" } else { "n" };
        for _ in 0..reps {
            tokens.push(format!("{prefix}{f}{sign}"));
        }
    }
    if tokens.is_empty() {
        tokens.push(format!("{prefix}flat"));
    }
    tokens
}

fn latent_text(prefix: &str, v: &[f64]) -> String {
    latent_tokens(prefix, v).join(" ")
}

/// Gumbel(0, scale) sample; scale 0 is exactly zero noise.
fn gumbel(rng: &mut ChaCha8Rng, scale: f64) -> f64 {
    if scale == 0.0 {
        return 0.0;
    }
    let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    -(-u.ln()).ln() * scale
}

fn community_name(i: usize) -> String {
    format!("comm{i}")
}

fn marker_tokens(rng: &mut ChaCha8Rng, community_idx: usize) -> Vec<String> {
    (0..MARKERS_PER_QUESTION)
        .map(|_| format!("mk{community_idx}x{}", rng.random_range(0..MARKER_VOCAB)))
        .collect()
}

/// Draws `n` distinct response latent/text pairs.
fn distinct_responses(rng: &mut ChaCha8Rng, dim: usize, n: usize) -> Vec<(Vec<f64>, String)> {
    let mut out: Vec<(Vec<f64>, String)> = Vec::with_capacity(n);
    while out.len() < n {
        let v: Vec<f64> = gaussian_vec(rng, dim).into_iter().map(|x| x * RESPONSE_SCALE).collect();
        let text = latent_text("a", &v);
        if out.iter().all(|(_, t)| *t != text) {
            out.push((v, text));
        }
    }
    out
}

/// Generates the benchmark. Deterministic per seed: every question uses its
/// own derived RNG stream, so generation order never matters.
pub fn generate(config: &SynthConfig) -> Result<SynthData, SynthError> {
    config.validate()?;
    let communities: Vec<String> = (0..config.n_communities).map(community_name).collect();

    let mut w_rng = seeding::rng(config.seed, "synth/weights");
    let base = unit_gaussian_vec(&mut w_rng, config.feature_dim);
    let mut community_weights = BTreeMap::new();
    for (i, name) in communities.iter().enumerate() {
        let w = match config.preference_mode {
            PreferenceMode::Opposing => {
                if i == 0 {
                    base.clone()
                } else {
                    base.iter().map(|x| -x).collect()
                }
            }
            PreferenceMode::Shared => base.clone(),
            PreferenceMode::Independent => unit_gaussian_vec(&mut w_rng, config.feature_dim),
        };
        community_weights.insert(name.clone(), w);
    }

    let mut world = OracleWorld {
        feature_dim: config.feature_dim,
        noise_temperature: config.noise_temperature,
        preference_mode: config.preference_mode,
        communities: communities.clone(),
        community_weights,
        question_vecs: BTreeMap::new(),
        response_latents: BTreeMap::new(),
    };

    let mut threads = Vec::new();
    let mut train = Vec::new();
    let mut candidates = Vec::new();

    // training questions: one pair, sampled once per community
    for q in 0..config.pairs_per_community {
        let mut rng = ChaCha8Rng::seed_from_u64(seeding::derive_indexed(
            config.seed,
            "synth/train-q",
            q as u64,
        ));
        let qv = gaussian_vec(&mut rng, config.feature_dim);
        let q_text_base = latent_text("t", &qv);
        let leaky = rng.random::<f64>() < config.leak_fraction;
        let pair = distinct_responses(&mut rng, config.feature_dim, 2);
        let ts = BASE_TS + (q as i64) * 100;

        for (ci, community) in communities.iter().enumerate() {
            let title = if leaky {
                let mut m_rng = ChaCha8Rng::seed_from_u64(seeding::derive_indexed(
                    config.seed,
                    &format!("synth/markers/{ci}"),
                    q as u64,
                ));
                format!("{} {}", q_text_base, marker_tokens(&mut m_rng, ci).join(" "))
            } else {
                q_text_base.clone()
            };
            let post_id = format!("t{q:06}c{ci}");
            world.question_vecs.insert(post_id.clone(), qv.clone());
            for (v, text) in &pair {
                world.response_latents.entry(text.clone()).or_insert_with(|| v.clone());
            }

            let w = &world.community_weights[community];
            let (ua, ub) = (dot(w, &pair[0].0), dot(w, &pair[1].0));
            let mut label_rng = ChaCha8Rng::seed_from_u64(seeding::derive_indexed(
                config.seed,
                &format!("synth/label/{ci}"),
                q as u64,
            ));
            let a_chosen = if config.noise_temperature == 0.0 {
                ua > ub
            } else {
                let p = crate::losses::sigmoid((ua - ub) / config.noise_temperature);
                label_rng.random::<f64>() < p
            };
            let (chosen, rejected) =
                if a_chosen { (&pair[0], &pair[1]) } else { (&pair[1], &pair[0]) };

            let score_rejected = 1 + label_rng.random_range(0..4_i64);
            let score_chosen = 2 * score_rejected + label_rng.random_range(0..3_i64);
            let post = PostRecord {
                id: post_id.clone(),
                subreddit: community.clone(),
                title,
                selftext: String::new(),
                created_utc: ts,
                over_18: false,
                stickied: false,
                author: "asker".into(),
            };
            let comments = vec![
                CommentRecord {
                    id: format!("{post_id}r0"),
                    link_id: post_id.clone(),
                    parent_id: post_id.clone(),
                    body: rejected.1.clone(),
                    score: score_rejected,
                    created_utc: ts + 1,
                    author: "replier0".into(),
                    edited: false,
                    stickied: false,
                    deleted: false,
                },
                CommentRecord {
                    id: format!("{post_id}r1"),
                    link_id: post_id.clone(),
                    parent_id: post_id.clone(),
                    body: chosen.1.clone(),
                    score: score_chosen,
                    created_utc: ts + 2,
                    author: "replier1".into(),
                    edited: false,
                    stickied: false,
                    deleted: false,
                },
            ];
            let thread = ThreadRecord { post, comments };
            train.extend(apply_ratio_filter(candidate_pairs(&thread, DOMAIN, 5.0)));
            candidates.push(CandidateRecord {
                post_id: post_id.clone(),
                responses: vec![pair[0].1.clone(), pair[1].1.clone()],
            });
            threads.push(thread);
        }
    }

    // evaluation questions: K candidates ranked by Gumbel-noised utility
    let mut eval_prompts = Vec::new();
    let mut eval_pairs = Vec::new();
    for e in 0..config.n_questions {
        let mut rng = ChaCha8Rng::seed_from_u64(seeding::derive_indexed(
            config.seed,
            "synth/eval-q",
            e as u64,
        ));
        let ci = e % config.n_communities;
        let community = &communities[ci];
        let qv = gaussian_vec(&mut rng, config.feature_dim);
        let leaky = rng.random::<f64>() < config.leak_fraction;
        let title = if leaky {
            format!("{} {}", latent_text("t", &qv), marker_tokens(&mut rng, ci).join(" "))
        } else {
            latent_text("t", &qv)
        };
        let cands = distinct_responses(&mut rng, config.feature_dim, config.candidates_per_question);
        let post_id = format!("e{e:06}");
        world.question_vecs.insert(post_id.clone(), qv.clone());
        for (v, text) in &cands {
            world.response_latents.entry(text.clone()).or_insert_with(|| v.clone());
        }

        let w = &world.community_weights[community];
        let mut ranked: Vec<usize> = (0..cands.len()).collect();
        let noisy: Vec<f64> = cands
            .iter()
            .map(|(v, _)| dot(w, v) + gumbel(&mut rng, config.noise_temperature))
            .collect();
        // ascending: rank 0 scores lowest, posts earliest
        ranked.sort_by(|&a, &b| noisy[a].partial_cmp(&noisy[b]).unwrap().then(a.cmp(&b)));

        let ts = BASE_TS + (e as i64) * 100;
        let post = PostRecord {
            id: post_id.clone(),
            subreddit: community.clone(),
            title,
            selftext: String::new(),
            created_utc: ts,
            over_18: false,
            stickied: false,
            author: "asker".into(),
        };
        let comments: Vec<CommentRecord> = ranked
            .iter()
            .enumerate()
            .map(|(rank, &cand_idx)| CommentRecord {
                id: format!("{post_id}r{rank}"),
                link_id: post_id.clone(),
                parent_id: post_id.clone(),
                body: cands[cand_idx].1.clone(),
                score: 1 << rank,
                created_utc: ts + 1 + rank as i64,
                author: format!("replier{rank}"),
                edited: false,
                stickied: false,
                deleted: false,
            })
            .collect();
        let thread = ThreadRecord { post, comments };
        eval_prompts.push(EvalPrompt::from_thread(&thread, DOMAIN));
        eval_pairs.extend(apply_ratio_filter(candidate_pairs(&thread, DOMAIN, 5.0)));
        candidates.push(CandidateRecord {
            post_id,
            responses: cands.iter().map(|(_, t)| t.clone()).collect(),
        });
        threads.push(thread);
    }

    threads.sort_by(|a, b| {
        (a.post.created_utc, a.post.id.clone()).cmp(&(b.post.created_utc, b.post.id.clone()))
    });
    candidates.sort_by(|a, b| a.post_id.cmp(&b.post_id));
    eval_prompts.sort_by(|a, b| a.post_id.cmp(&b.post_id));
    sort_canonical(&mut train);
    sort_canonical(&mut eval_pairs);

    Ok(SynthData { world, threads, train, eval_prompts, eval_pairs, candidates })
}
