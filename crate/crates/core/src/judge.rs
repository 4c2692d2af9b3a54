//! Pairwise LLM-judge client.
//!
//! Implements the exact judging protocol: a fixed prompt template where the
//! first-position output is always labelled `m` and the second `M`, seeded
//! A/B position randomization keyed by instance id, strict single-token
//! reply parsing, bounded concurrency with retry/backoff, and an on-disk
//! verdict cache keyed by (instance id, prompt hash). The judge sees only
//! the subreddit, the question, and the two outputs.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::seeding;
use crate::synth::OracleWorld;

/// System instruction sent with every judging request.
pub const JUDGE_SYSTEM_PROMPT: &str = "You are a highly efficient assistant, who evaluates and selects the best large language model (LLMs) based on the quality of their responses to a given instruction. This process will be used to create a leaderboard reflecting the most accurate and human-preferred answers.";

/// User-prompt template. Placeholders: `{subredditname}`, `{question}`,
/// `{output_1}` (first position, labelled `m`), `{output_2}` (second,
/// labelled `M`).
pub const JUDGE_USER_TEMPLATE: &str = r#"Instruction: I require a leaderboard for various Reddit comment generator models. I'll provide you with posts selected from Reddit given to these models and their corresponding outputs. Your task is to assess these responses, and select the model that produces the output that will be upvoted more in the subreddit the question was asked in.

## Subreddit

{subredditname}

## Instruction

{question}

## Model Outputs

Here are the unordered outputs from the models. Each output is associated with a specific model, identified by a unique model identifier.

"model_identifier": "m",
"output": "{output_1}"

"model_identifier": "M",
"output": "{output_2}"

## Task

Evaluate the models based on the quality and relevance of their outputs, and select the model that generated the best output. Answer by providing the model identifier of the best model. We will use your output as the name of the best model, so make sure your output only contains one of the following model identifiers and nothing else (no quotes, no spaces, no new lines, ...): m or M.

## Best Model Identifier"#;

#[derive(Debug, Error)]
pub enum JudgeError {
    #[error("api key environment variable {0} is not set")]
    MissingApiKey(String),
    #[error("transport: {0}")]
    Transport(String),
    #[error("http status {0}")]
    HttpStatus(u16),
    #[error("malformed endpoint reply: {0}")]
    BadReply(String),
    #[error("cache io: {0}")]
    Cache(#[from] std::io::Error),
    #[error("cache format: {0}")]
    CacheFormat(#[from] serde_json::Error),
    #[error("response sides do not align: {0}")]
    Misaligned(String),
    #[error(transparent)]
    Synth(#[from] crate::synth::SynthError),
}

impl JudgeError {
    /// Retryable failures: transport errors, rate limiting, server errors.
    pub fn is_retryable(&self) -> bool {
        matches!(self, JudgeError::Transport(_) | JudgeError::HttpStatus(429) | JudgeError::HttpStatus(500..=599))
    }
}

/// Which underlying model won a comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Winner {
    Model1,
    Model2,
}

/// One pairwise judgment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgeVerdict {
    pub instance_id: String,
    pub order_flipped: bool,
    /// Defined only when `valid`.
    pub winner: Option<Winner>,
    pub valid: bool,
    pub raw_reply: String,
}

/// One comparison as presented to the judge. `output_first` occupies the
/// `{output_1}` slot (label `m`); when `order_flipped` is set the first
/// position holds model 2's response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgeRequest {
    pub instance_id: String,
    pub subreddit: String,
    pub question: String,
    pub output_first: String,
    pub output_second: String,
    pub order_flipped: bool,
}

impl JudgeRequest {
    /// Builds a request from the two models' outputs, swapping slots when
    /// flipped. Position labels never move: first is `m`, second is `M`.
    pub fn from_pair(
        instance_id: &str,
        subreddit: &str,
        question: &str,
        output_model_1: &str,
        output_model_2: &str,
        order_flipped: bool,
    ) -> Self {
        let (output_first, output_second) = if order_flipped {
            (output_model_2.to_string(), output_model_1.to_string())
        } else {
            (output_model_1.to_string(), output_model_2.to_string())
        };
        Self {
            instance_id: instance_id.to_string(),
            subreddit: subreddit.to_string(),
            question: question.to_string(),
            output_first,
            output_second,
            order_flipped,
        }
    }
}

/// Fills the template. Returns `(system_text, user_text)`.
pub fn build_prompt(request: &JudgeRequest) -> (String, String) {
    let user = JUDGE_USER_TEMPLATE
        .replace("{subredditname}", &request.subreddit)
        .replace("{question}", &request.question)
        .replace("{output_1}", &request.output_first)
        .replace("{output_2}", &request.output_second);
    (JUDGE_SYSTEM_PROMPT.to_string(), user)
}

/// Fields recovered from a user prompt; used by the hermetic oracle
/// endpoint, which receives only the rendered text like a real judge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptFields {
    pub subreddit: String,
    pub question: String,
    pub output_1: String,
    pub output_2: String,
}

/// Parses a prompt produced by [`build_prompt`].
pub fn parse_prompt_fields(user_text: &str) -> Option<PromptFields> {
    let after = |text: &str, marker: &str| -> Option<(String, String)> {
        let start = text.find(marker)? + marker.len();
        Some((text[..start].to_string(), text[start..].to_string()))
    };
    let (_, rest) = after(user_text, "## Subreddit\n\n")?;
    let end = rest.find("\n\n## Instruction")?;
    let subreddit = rest[..end].to_string();
    let (_, rest) = after(&rest, "## Instruction\n\n")?;
    let end = rest.find("\n\n## Model Outputs")?;
    let question = rest[..end].to_string();
    let (_, rest) = after(&rest, "\"model_identifier\": \"m\",\n\"output\": \"")?;
    let end = rest.find("\"\n\n\"model_identifier\": \"M\"")?;
    let output_1 = rest[..end].to_string();
    let (_, rest) = after(&rest, "\"model_identifier\": \"M\",\n\"output\": \"")?;
    let end = rest.find("\"\n\n## Task")?;
    let output_2 = rest[..end].to_string();
    Some(PromptFields { subreddit, question, output_1, output_2 })
}

/// Strict reply parsing: exactly `m` or `M` after trimming whitespace.
/// Anything else yields an invalid verdict, not an error.
pub fn parse_verdict(instance_id: &str, raw_reply: &str, order_flipped: bool) -> JudgeVerdict {
    let winner = match raw_reply.trim() {
        "m" => Some(if order_flipped { Winner::Model2 } else { Winner::Model1 }),
        "M" => Some(if order_flipped { Winner::Model1 } else { Winner::Model2 }),
        _ => None,
    };
    JudgeVerdict {
        instance_id: instance_id.to_string(),
        order_flipped,
        valid: winner.is_some(),
        winner,
        raw_reply: raw_reply.to_string(),
    }
}

/// Endpoint configuration for the HTTP judge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeEndpointConfig {
    pub base_url: String,
    pub model_name: String,
    #[serde(default = "default_api_key_env")]
    pub api_key_env_name: String,
    #[serde(default = "default_max_in_flight")]
    pub max_in_flight: usize,
    #[serde(default = "default_max_retries")]
    pub max_retries: usize,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default = "default_backoff_ms")]
    pub backoff_base_ms: u64,
}

fn default_api_key_env() -> String {
    "JUDGE_API_KEY".to_string()
}
fn default_max_in_flight() -> usize {
    4
}
fn default_max_retries() -> usize {
    5
}
fn default_timeout_secs() -> u64 {
    30
}
fn default_backoff_ms() -> u64 {
    500
}

/// A chat-completion style endpoint: system + user in, text reply out.
pub trait ChatEndpoint: Send + Sync {
    fn complete(&self, system: &str, user: &str) -> Result<String, JudgeError>;
    /// Human-readable description for run metadata.
    fn describe(&self) -> String;
}

/// HTTP endpoint speaking a minimal chat-completion JSON shape.
pub struct HttpEndpoint {
    agent: ureq::Agent,
    base_url: String,
    model_name: String,
    api_key: String,
}

impl HttpEndpoint {
    /// Reads the API key from the configured environment variable; a missing
    /// key is fatal before any request is made.
    pub fn new(config: &JudgeEndpointConfig) -> Result<Self, JudgeError> {
        let api_key = std::env::var(&config.api_key_env_name)
            .map_err(|_| JudgeError::MissingApiKey(config.api_key_env_name.clone()))?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .build()
            .into();
        Ok(Self { agent, base_url: config.base_url.clone(), model_name: config.model_name.clone(), api_key })
    }
}

impl ChatEndpoint for HttpEndpoint {
    fn complete(&self, system: &str, user: &str) -> Result<String, JudgeError> {
        let body = serde_json::json!({
            "model": self.model_name,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
        });
        let mut response = self
            .agent
            .post(&self.base_url)
            .header("authorization", format!("Bearer {}", self.api_key))
            .send_json(&body)
            .map_err(|e| match e {
                ureq::Error::StatusCode(code) => JudgeError::HttpStatus(code),
                other => JudgeError::Transport(other.to_string()),
            })?;
        let reply: serde_json::Value = response
            .body_mut()
            .read_json()
            .map_err(|e| JudgeError::BadReply(e.to_string()))?;
        reply["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| JudgeError::BadReply(format!("missing choices[0].message.content in {reply}")))
    }

    fn describe(&self) -> String {
        format!("http endpoint {} model {} (provider-default decoding)", self.base_url, self.model_name)
    }
}

/// Hermetic endpoint backed by the synthetic oracle world. It parses the
/// rendered prompt like a real judge would read it, compares ground-truth
/// utilities, and answers with the bare position label.
pub struct OracleEndpoint {
    world: OracleWorld,
}

impl OracleEndpoint {
    pub fn new(world: OracleWorld) -> Self {
        Self { world }
    }
}

impl ChatEndpoint for OracleEndpoint {
    fn complete(&self, _system: &str, user: &str) -> Result<String, JudgeError> {
        let fields = parse_prompt_fields(user)
            .ok_or_else(|| JudgeError::BadReply("prompt does not match the template".into()))?;
        let verdict = crate::synth::oracle_judge(
            &self.world,
            &fields.subreddit,
            &fields.question,
            &fields.output_1,
            &fields.output_2,
        )?;
        Ok(if verdict.first_wins { "m".to_string() } else { "M".to_string() })
    }

    fn describe(&self) -> String {
        "oracle endpoint (ground-truth utilities)".to_string()
    }
}

/// Wrapper that counts completed calls; used to verify the cache contract.
pub struct CountingEndpoint<E> {
    inner: E,
    calls: AtomicUsize,
}

impl<E: ChatEndpoint> CountingEndpoint<E> {
    pub fn new(inner: E) -> Self {
        Self { inner, calls: AtomicUsize::new(0) }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<E: ChatEndpoint> ChatEndpoint for CountingEndpoint<E> {
    fn complete(&self, system: &str, user: &str) -> Result<String, JudgeError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.complete(system, user)
    }

    fn describe(&self) -> String {
        self.inner.describe()
    }
}

/// Content-addressed on-disk verdict cache.
pub struct VerdictCache {
    dir: PathBuf,
}

impl VerdictCache {
    pub fn new(dir: &Path) -> Result<Self, JudgeError> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    fn key_path(&self, instance_id: &str, system: &str, user: &str) -> PathBuf {
        let mut hasher = Sha256::new();
        hasher.update(instance_id.as_bytes());
        hasher.update([0x1f]);
        hasher.update(system.as_bytes());
        hasher.update([0x1f]);
        hasher.update(user.as_bytes());
        let digest = hasher.finalize();
        let hex: String = digest.iter().take(16).map(|b| format!("{b:02x}")).collect();
        self.dir.join(format!("{hex}.json"))
    }

    pub fn load(&self, instance_id: &str, system: &str, user: &str) -> Option<JudgeVerdict> {
        let path = self.key_path(instance_id, system, user);
        let bytes = std::fs::read(path).ok()?;
        serde_json::from_slice(&bytes).ok()
    }

    pub fn store(
        &self,
        instance_id: &str,
        system: &str,
        user: &str,
        verdict: &JudgeVerdict,
    ) -> Result<(), JudgeError> {
        let path = self.key_path(instance_id, system, user);
        let bytes = serde_json::to_vec(verdict)?;
        crate::jsonl::write_atomic(&path, &bytes)?;
        Ok(())
    }
}

/// One comparison to judge: the two models' outputs for an instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgePair {
    pub instance_id: String,
    pub subreddit: String,
    pub question: String,
    pub output_model_1: String,
    pub output_model_2: String,
}

/// Batch options beyond the endpoint itself.
pub struct BatchOptions<'a> {
    pub max_in_flight: usize,
    pub max_retries: usize,
    pub backoff_base_ms: u64,
    pub cache: Option<&'a VerdictCache>,
}

impl Default for BatchOptions<'_> {
    fn default() -> Self {
        Self { max_in_flight: 4, max_retries: 5, backoff_base_ms: 500, cache: None }
    }
}

fn complete_with_retries(
    endpoint: &dyn ChatEndpoint,
    system: &str,
    user: &str,
    max_retries: usize,
    backoff_base_ms: u64,
    jitter_seed: u64,
) -> Result<String, JudgeError> {
    let mut attempt = 0;
    loop {
        match endpoint.complete(system, user) {
            Ok(reply) => return Ok(reply),
            Err(e) if e.is_retryable() && attempt < max_retries => {
                let jitter = seeding::splitmix64(jitter_seed ^ attempt as u64) % backoff_base_ms.max(1);
                let delay = backoff_base_ms.saturating_mul(1 << attempt.min(6)) + jitter;
                std::thread::sleep(Duration::from_millis(delay.min(10_000)));
                attempt += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Judges a batch of comparisons.
///
/// Position flips come from a seeded coin keyed by instance id; at most
/// `max_in_flight` requests are outstanding; verdicts are cached on disk and
/// reruns with a warm cache make no endpoint calls. Output order always
/// matches input order. Exhausted retries yield an invalid verdict carrying
/// the error text.
pub fn judge_batch(
    pairs: &[JudgePair],
    endpoint: &dyn ChatEndpoint,
    options: &BatchOptions,
    seed: u64,
) -> Result<Vec<JudgeVerdict>, JudgeError> {
    struct Job {
        index: usize,
        request: JudgeRequest,
        system: String,
        user: String,
    }

    let mut results: Vec<Option<JudgeVerdict>> = vec![None; pairs.len()];
    let mut jobs = Vec::new();
    for (index, pair) in pairs.iter().enumerate() {
        let flipped = seeding::coin(seed, "judge-flip", &pair.instance_id);
        let request = JudgeRequest::from_pair(
            &pair.instance_id,
            &pair.subreddit,
            &pair.question,
            &pair.output_model_1,
            &pair.output_model_2,
            flipped,
        );
        let (system, user) = build_prompt(&request);
        if let Some(cache) = options.cache {
            if let Some(hit) = cache.load(&pair.instance_id, &system, &user) {
                results[index] = Some(hit);
                continue;
            }
        }
        jobs.push(Job { index, request, system, user });
    }

    let workers = options.max_in_flight.max(1).min(jobs.len().max(1));
    let queue = Arc::new(Mutex::new(std::collections::VecDeque::from_iter(jobs)));
    let fresh: Arc<Mutex<Vec<(usize, JudgeVerdict, String, String)>>> =
        Arc::new(Mutex::new(Vec::new()));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            let queue = Arc::clone(&queue);
            let fresh = Arc::clone(&fresh);
            scope.spawn(move || loop {
                let job = { queue.lock().expect("queue lock").pop_front() };
                let Some(job) = job else { break };
                let jitter_seed = seeding::derive(seed, &job.request.instance_id);
                let verdict = match complete_with_retries(
                    endpoint,
                    &job.system,
                    &job.user,
                    options.max_retries,
                    options.backoff_base_ms,
                    jitter_seed,
                ) {
                    Ok(reply) => {
                        parse_verdict(&job.request.instance_id, &reply, job.request.order_flipped)
                    }
                    Err(e) => JudgeVerdict {
                        instance_id: job.request.instance_id.clone(),
                        order_flipped: job.request.order_flipped,
                        winner: None,
                        valid: false,
                        raw_reply: format!("error: {e}"),
                    },
                };
                fresh.lock().expect("results lock").push((job.index, verdict, job.system, job.user));
            });
        }
    });

    let fresh = Arc::try_unwrap(fresh).expect("workers joined").into_inner().expect("lock");
    for (index, verdict, system, user) in fresh {
        if let Some(cache) = options.cache {
            cache.store(&verdict.instance_id, &system, &user, &verdict)?;
        }
        results[index] = Some(verdict);
    }
    Ok(results.into_iter().map(|v| v.expect("every pair judged")).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request() -> JudgeRequest {
        JudgeRequest::from_pair(
            "finance::p1",
            "personalfinance",
            "How do I refinance?",
            "first model output",
            "second model output",
            false,
        )
    }

    #[test]
    fn template_contains_one_of_each_label() {
        let (_, user) = build_prompt(&request());
        assert_eq!(user.matches("\"model_identifier\": \"m\"").count(), 1);
        assert_eq!(user.matches("\"model_identifier\": \"M\"").count(), 1);
        assert_eq!(user.matches("{subredditname}").count(), 0, "all placeholders filled");
    }

    #[test]
    fn flipping_swaps_slots_but_not_labels() {
        let straight = build_prompt(&request()).1;
        let flipped = build_prompt(&JudgeRequest::from_pair(
            "finance::p1",
            "personalfinance",
            "How do I refinance?",
            "first model output",
            "second model output",
            true,
        ))
        .1;
        assert!(straight.contains("\"output\": \"first model output\"\n\n\"model_identifier\": \"M\""));
        assert!(flipped.contains("\"output\": \"second model output\"\n\n\"model_identifier\": \"M\""));
        let m_pos = flipped.find("\"model_identifier\": \"m\"").unwrap();
        let cap_m_pos = flipped.find("\"model_identifier\": \"M\"").unwrap();
        assert!(m_pos < cap_m_pos, "labels bind to position");
    }

    #[test]
    fn prompt_fields_roundtrip() {
        let req = request();
        let (_, user) = build_prompt(&req);
        let fields = parse_prompt_fields(&user).unwrap();
        assert_eq!(fields.subreddit, req.subreddit);
        assert_eq!(fields.question, req.question);
        assert_eq!(fields.output_1, req.output_first);
        assert_eq!(fields.output_2, req.output_second);
    }

    #[test]
    fn verdict_parsing_is_strict() {
        assert_eq!(parse_verdict("i", "m", false).winner, Some(Winner::Model1));
        assert_eq!(parse_verdict("i", "M", false).winner, Some(Winner::Model2));
        assert_eq!(parse_verdict("i", "M", true).winner, Some(Winner::Model1));
        assert_eq!(parse_verdict("i", "m", true).winner, Some(Winner::Model2));
        assert_eq!(parse_verdict("i", "  m \n", false).winner, Some(Winner::Model1), "whitespace trimmed");
        let invalid = parse_verdict("i", "Model m is better", false);
        assert!(!invalid.valid && invalid.winner.is_none());
    }

    struct FixedEndpoint(&'static str);
    impl ChatEndpoint for FixedEndpoint {
        fn complete(&self, _s: &str, _u: &str) -> Result<String, JudgeError> {
            Ok(self.0.to_string())
        }
        fn describe(&self) -> String {
            "fixed".into()
        }
    }

    fn pairs(n: usize) -> Vec<JudgePair> {
        (0..n)
            .map(|i| JudgePair {
                instance_id: format!("sub::p{i}"),
                subreddit: "sub".into(),
                question: format!("question {i}"),
                output_model_1: format!("one {i}"),
                output_model_2: format!("two {i}"),
            })
            .collect()
    }

    #[test]
    fn flips_are_seeded_and_balanced() {
        let endpoint = FixedEndpoint("m");
        let opts = BatchOptions { max_in_flight: 8, ..Default::default() };
        let verdicts = judge_batch(&pairs(1000), &endpoint, &opts, 7).unwrap();
        let again = judge_batch(&pairs(1000), &endpoint, &opts, 7).unwrap();
        assert_eq!(verdicts, again, "same seed, same flips");
        let flips = verdicts.iter().filter(|v| v.order_flipped).count();
        assert!((450..=550).contains(&flips), "flips = {flips}");
        // order preserved regardless of completion order
        for (i, v) in verdicts.iter().enumerate() {
            assert_eq!(v.instance_id, format!("sub::p{i}"));
        }
    }

    #[test]
    fn warm_cache_makes_no_endpoint_calls() {
        let dir = tempfile::tempdir().unwrap();
        let cache = VerdictCache::new(dir.path()).unwrap();
        let endpoint = CountingEndpoint::new(FixedEndpoint("M"));
        let opts = BatchOptions { cache: Some(&cache), ..Default::default() };
        let first = judge_batch(&pairs(50), &endpoint, &opts, 3).unwrap();
        assert_eq!(endpoint.calls(), 50);
        let second = judge_batch(&pairs(50), &endpoint, &opts, 3).unwrap();
        assert_eq!(endpoint.calls(), 50, "warm rerun hits only the cache");
        assert_eq!(first, second);
    }

    struct FlakyEndpoint {
        failures_left: AtomicUsize,
    }
    impl ChatEndpoint for FlakyEndpoint {
        fn complete(&self, _s: &str, _u: &str) -> Result<String, JudgeError> {
            if self
                .failures_left
                .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1))
                .is_ok()
            {
                Err(JudgeError::HttpStatus(503))
            } else {
                Ok("m".into())
            }
        }
        fn describe(&self) -> String {
            "flaky".into()
        }
    }

    #[test]
    fn retryable_failures_are_retried_and_exhaustion_is_invalid_data() {
        let endpoint = FlakyEndpoint { failures_left: AtomicUsize::new(2) };
        let opts = BatchOptions { max_in_flight: 1, max_retries: 5, backoff_base_ms: 1, cache: None };
        let verdicts = judge_batch(&pairs(1), &endpoint, &opts, 0).unwrap();
        assert!(verdicts[0].valid, "recovered after retries");

        let endpoint = FlakyEndpoint { failures_left: AtomicUsize::new(100) };
        let opts = BatchOptions { max_in_flight: 1, max_retries: 2, backoff_base_ms: 1, cache: None };
        let verdicts = judge_batch(&pairs(1), &endpoint, &opts, 0).unwrap();
        assert!(!verdicts[0].valid);
        assert!(verdicts[0].raw_reply.contains("error:"));
        assert!(verdicts[0].raw_reply.contains("503"));
    }

    #[test]
    fn request_body_is_blind() {
        // nothing beyond the template fields reaches the judge
        let (system, user) = build_prompt(&request());
        for leak in ["model_1", "model_2", "order_flipped", "instance_id", "randomized"] {
            assert!(!system.contains(leak) && !user.contains(leak), "leaked {leak}");
        }
    }

    #[test]
    fn http_endpoint_requires_api_key_before_any_request() {
        let config = JudgeEndpointConfig {
            base_url: "http://127.0.0.1:1".into(),
            model_name: "judge".into(),
            api_key_env_name: "COMMTUNE_TEST_MISSING_KEY".into(),
            max_in_flight: 1,
            max_retries: 0,
            timeout_secs: 1,
            backoff_base_ms: 1,
        };
        match HttpEndpoint::new(&config) {
            Err(JudgeError::MissingApiKey(var)) => assert_eq!(var, "COMMTUNE_TEST_MISSING_KEY"),
            other => panic!("expected MissingApiKey, got {:?}", other.is_ok()),
        }
    }
}
