//! Preference-pair construction from filtered threads.
//!
//! A later comment that still outscored an earlier one becomes the chosen
//! response of a preference instance. Pair-level rules: the sentence-count
//! ratio bound at candidate time, the upvote-ratio >= 2 rule afterwards, and
//! a seeded per-thread cap. The evaluation split happens at thread level
//! before any pair construction.

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filters::length_ratio_ok;
use crate::ingest::ThreadRecord;
use crate::seeding;

#[derive(Debug, Error)]
pub enum PairError {
    #[error("invalid split spec: {0}")]
    InvalidSpec(String),
}

/// One preference instance: within `subreddit`, `chosen` was posted after
/// `rejected` and still received at least twice its upvotes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferenceInstance {
    pub domain: String,
    pub subreddit: String,
    pub post_id: String,
    pub question: String,
    pub chosen: String,
    pub rejected: String,
    pub score_chosen: i64,
    pub score_rejected: i64,
    pub ts_chosen: i64,
    pub ts_rejected: i64,
}

impl PreferenceInstance {
    /// Upvote ratio with the denominator clamped at 1 so zero or negative
    /// rejected scores cannot blow up the division.
    pub fn score_ratio(&self) -> f64 {
        self.score_chosen as f64 / (self.score_rejected.max(1)) as f64
    }

    /// Machine-checkable invariants for emitted instances.
    pub fn validate(&self) -> Result<(), String> {
        if self.ts_chosen <= self.ts_rejected {
            return Err(format!("ts_chosen {} <= ts_rejected {}", self.ts_chosen, self.ts_rejected));
        }
        if self.score_chosen <= self.score_rejected {
            return Err(format!(
                "score_chosen {} <= score_rejected {}",
                self.score_chosen, self.score_rejected
            ));
        }
        if self.score_ratio() < 2.0 {
            return Err(format!("score ratio {} < 2.0", self.score_ratio()));
        }
        if self.chosen == self.rejected {
            return Err("chosen == rejected".into());
        }
        Ok(())
    }

    fn canonical_key(&self) -> (String, String, i64, i64, i64, i64, String) {
        (
            self.subreddit.clone(),
            self.post_id.clone(),
            self.ts_chosen,
            self.ts_rejected,
            self.score_chosen,
            self.score_rejected,
            self.chosen.clone(),
        )
    }
}

/// Sorts instances into the canonical order used for all seeded operations
/// and for output files.
pub fn sort_canonical(instances: &mut [PreferenceInstance]) {
    instances.sort_by(|a, b| a.canonical_key().cmp(&b.canonical_key()));
}

/// Split and cap configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub eval_fraction: f64,
    pub seed: u64,
    pub cap_per_thread: usize,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self { eval_fraction: 0.025, seed: 0, cap_per_thread: 5 }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), PairError> {
        if !(self.eval_fraction > 0.0 && self.eval_fraction < 1.0) {
            return Err(PairError::InvalidSpec(format!(
                "eval_fraction must be in (0, 1), got {}",
                self.eval_fraction
            )));
        }
        if self.cap_per_thread < 1 {
            return Err(PairError::InvalidSpec("cap_per_thread must be >= 1".into()));
        }
        Ok(())
    }
}

/// Question text: title, two newlines, selftext.
pub fn question_text(thread: &ThreadRecord) -> String {
    format!("{}\n\n{}", thread.post.title, thread.post.selftext)
}

/// Emits every ordered comment pair `(chosen, rejected)` where the chosen
/// comment is strictly later and strictly higher-scored, the sentence-count
/// ratio is within `max_sentence_ratio`, and the texts differ. The upvote
/// ratio rule is NOT applied here.
pub fn candidate_pairs(
    thread: &ThreadRecord,
    domain: &str,
    max_sentence_ratio: f64,
) -> Vec<PreferenceInstance> {
    let question = question_text(thread);
    let mut out = Vec::new();
    for chosen in &thread.comments {
        for rejected in &thread.comments {
            if chosen.created_utc > rejected.created_utc
                && chosen.score > rejected.score
                && chosen.body != rejected.body
                && length_ratio_ok(&chosen.body, &rejected.body, max_sentence_ratio)
            {
                out.push(PreferenceInstance {
                    domain: domain.to_string(),
                    subreddit: thread.post.subreddit.clone(),
                    post_id: thread.post.id.clone(),
                    question: question.clone(),
                    chosen: chosen.body.clone(),
                    rejected: rejected.body.clone(),
                    score_chosen: chosen.score,
                    score_rejected: rejected.score,
                    ts_chosen: chosen.created_utc,
                    ts_rejected: rejected.created_utc,
                });
            }
        }
    }
    sort_canonical(&mut out);
    out
}

/// Keeps instances whose chosen/rejected upvote ratio is at least 2, with
/// the denominator clamped at 1.
pub fn apply_ratio_filter(instances: Vec<PreferenceInstance>) -> Vec<PreferenceInstance> {
    instances.into_iter().filter(|i| i.score_ratio() >= 2.0).collect()
}

/// Keeps at most `cap` instances per post, chosen by a seeded shuffle of the
/// canonically sorted per-post group. Deterministic given the seed and
/// independent of input ordering.
pub fn cap_per_thread(
    instances: Vec<PreferenceInstance>,
    cap: usize,
    seed: u64,
) -> Vec<PreferenceInstance> {
    let mut groups: std::collections::BTreeMap<String, Vec<PreferenceInstance>> =
        std::collections::BTreeMap::new();
    for inst in instances {
        groups.entry(inst.post_id.clone()).or_default().push(inst);
    }
    let mut out = Vec::new();
    for (post_id, mut group) in groups {
        sort_canonical(&mut group);
        let mut rng =
            ChaCha8Rng::seed_from_u64(seeding::derive(seed, &format!("cap/{post_id}")));
        group.shuffle(&mut rng);
        group.truncate(cap);
        out.extend(group);
    }
    sort_canonical(&mut out);
    out
}

/// Outcome of the thread-level evaluation split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitOutcome {
    pub train: Vec<ThreadRecord>,
    pub eval: Vec<ThreadRecord>,
    /// True when rounding produced an empty evaluation set.
    pub eval_empty: bool,
}

/// Splits threads into train/eval at thread level: `round(fraction * n)`
/// eval threads, selected by a seeded shuffle of the canonically sorted
/// list. Eval threads keep their comments.
pub fn split_eval(threads: Vec<ThreadRecord>, spec: &SplitSpec) -> Result<SplitOutcome, PairError> {
    spec.validate()?;
    let mut threads = threads;
    threads.sort_by(|a, b| {
        (a.post.created_utc, a.post.id.clone()).cmp(&(b.post.created_utc, b.post.id.clone()))
    });
    let n_eval = (spec.eval_fraction * threads.len() as f64).round() as usize;
    let eval_empty = n_eval == 0;
    if eval_empty {
        log::warn!(
            "eval fraction {} of {} threads rounds to an empty evaluation set",
            spec.eval_fraction,
            threads.len()
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seeding::derive(spec.seed, "split-eval"));
    threads.shuffle(&mut rng);
    let eval: Vec<ThreadRecord> = threads.drain(..n_eval.min(threads.len())).collect();
    let mut train = threads;
    let sort_key = |t: &ThreadRecord| (t.post.created_utc, t.post.id.clone());
    train.sort_by_key(sort_key);
    let mut eval = eval;
    eval.sort_by_key(sort_key);
    Ok(SplitOutcome { train, eval, eval_empty })
}

/// One evaluation prompt (post without its comments).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalPrompt {
    pub domain: String,
    pub subreddit: String,
    pub post_id: String,
    pub question: String,
}

impl EvalPrompt {
    pub fn from_thread(thread: &ThreadRecord, domain: &str) -> Self {
        Self {
            domain: domain.to_string(),
            subreddit: thread.post.subreddit.clone(),
            post_id: thread.post.id.clone(),
            question: question_text(thread),
        }
    }

    /// Identifier used to join prompts, responses, and verdicts.
    pub fn instance_id(&self) -> String {
        format!("{}::{}", self.subreddit, self.post_id)
    }
}

/// Full dataset build from filtered threads.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildOutput {
    pub train_instances: Vec<PreferenceInstance>,
    pub eval_prompts: Vec<EvalPrompt>,
    pub eval_pairs: Vec<PreferenceInstance>,
    pub eval_empty: bool,
}

/// Splits threads, converts the train side via candidates -> ratio filter ->
/// per-thread cap, and converts the eval side via candidates -> ratio filter
/// (no cap: the cap limits training volume only).
pub fn build_pairs(
    threads: Vec<ThreadRecord>,
    domain: &str,
    spec: &SplitSpec,
    max_sentence_ratio: f64,
) -> Result<BuildOutput, PairError> {
    let split = split_eval(threads, spec)?;
    let mut train_instances = Vec::new();
    for t in &split.train {
        train_instances.extend(apply_ratio_filter(candidate_pairs(t, domain, max_sentence_ratio)));
    }
    let train_instances = cap_per_thread(train_instances, spec.cap_per_thread, spec.seed);

    let eval_prompts: Vec<EvalPrompt> =
        split.eval.iter().map(|t| EvalPrompt::from_thread(t, domain)).collect();
    let mut eval_pairs = Vec::new();
    for t in &split.eval {
        eval_pairs.extend(apply_ratio_filter(candidate_pairs(t, domain, max_sentence_ratio)));
    }
    let mut eval_pairs = eval_pairs;
    sort_canonical(&mut eval_pairs);
    Ok(BuildOutput { train_instances, eval_prompts, eval_pairs, eval_empty: split.eval_empty })
}

/// Per-subreddit dataset statistics in the layout of the per-domain tables:
/// train pairs, eval reward-pairs, eval prompts, plus a totals row.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsReport {
    pub rows: Vec<StatsRow>,
    pub domains: Vec<StatsRow>,
    pub total: StatsRow,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsRow {
    pub name: String,
    pub train_pairs: usize,
    pub eval_reward_pairs: usize,
    pub eval_prompts: usize,
}

pub fn dataset_stats(
    train: &[PreferenceInstance],
    eval_prompts: &[EvalPrompt],
    eval_pairs: &[PreferenceInstance],
) -> StatsReport {
    use std::collections::BTreeMap;
    let mut by_sub: BTreeMap<String, StatsRow> = BTreeMap::new();
    let mut by_domain: BTreeMap<String, StatsRow> = BTreeMap::new();
    let bump = |map: &mut BTreeMap<String, StatsRow>, key: &str, f: &dyn Fn(&mut StatsRow)| {
        let row = map.entry(key.to_string()).or_insert_with(|| StatsRow {
            name: key.to_string(),
            ..StatsRow::default()
        });
        f(row);
    };
    for i in train {
        bump(&mut by_sub, &i.subreddit, &|r| r.train_pairs += 1);
        bump(&mut by_domain, &i.domain, &|r| r.train_pairs += 1);
    }
    for p in eval_prompts {
        bump(&mut by_sub, &p.subreddit, &|r| r.eval_prompts += 1);
        bump(&mut by_domain, &p.domain, &|r| r.eval_prompts += 1);
    }
    for i in eval_pairs {
        bump(&mut by_sub, &i.subreddit, &|r| r.eval_reward_pairs += 1);
        bump(&mut by_domain, &i.domain, &|r| r.eval_reward_pairs += 1);
    }
    let mut total = StatsRow { name: "Total".into(), ..StatsRow::default() };
    for row in by_sub.values() {
        total.train_pairs += row.train_pairs;
        total.eval_reward_pairs += row.eval_reward_pairs;
        total.eval_prompts += row.eval_prompts;
    }
    let mut rows: Vec<StatsRow> = by_sub.into_values().collect();
    // table layout lists subreddits by descending train volume
    rows.sort_by(|a, b| b.train_pairs.cmp(&a.train_pairs).then(a.name.cmp(&b.name)));
    let mut domains: Vec<StatsRow> = by_domain.into_values().collect();
    domains.sort_by(|a, b| a.name.cmp(&b.name));
    StatsReport { rows, domains, total }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{CommentRecord, PostRecord};

    fn thread(comments: Vec<(i64, i64)>) -> ThreadRecord {
        // (score, created_utc) pairs
        ThreadRecord {
            post: PostRecord {
                id: "p1".into(),
                subreddit: "finance".into(),
                title: "How do I refinance?".into(),
                selftext: String::new(),
                created_utc: 1,
                over_18: false,
                stickied: false,
                author: "op".into(),
            },
            comments: comments
                .into_iter()
                .enumerate()
                .map(|(k, (score, ts))| CommentRecord {
                    id: format!("c{k}"),
                    link_id: "p1".into(),
                    parent_id: "p1".into(),
                    body: format!("comment number {k} body"),
                    score,
                    created_utc: ts,
                    author: format!("u{k}"),
                    edited: false,
                    stickied: false,
                    deleted: false,
                })
                .collect(),
        }
    }

    #[test]
    fn later_comment_with_fewer_upvotes_yields_nothing() {
        let t = thread(vec![(10, 100), (5, 200)]);
        assert!(candidate_pairs(&t, "finance", 5.0).is_empty());
    }

    #[test]
    fn later_comment_with_more_upvotes_is_chosen() {
        let t = thread(vec![(3, 100), (9, 200)]);
        let pairs = candidate_pairs(&t, "finance", 5.0);
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].chosen, "comment number 1 body");
        assert_eq!(pairs[0].score_chosen, 9);
        assert_eq!(pairs[0].ts_chosen, 200);
    }

    #[test]
    fn three_increasing_comments_give_three_pairs() {
        // brute-force check of all ordered pairs by hand: (2>1), (3>1), (3>2)
        let t = thread(vec![(1, 1), (3, 2), (9, 3)]);
        let pairs = candidate_pairs(&t, "finance", 5.0);
        let got: Vec<(i64, i64)> =
            pairs.iter().map(|p| (p.score_chosen, p.score_rejected)).collect();
        assert_eq!(got, vec![(3, 1), (9, 1), (9, 3)]);
    }

    #[test]
    fn timestamp_ties_produce_no_pair() {
        let t = thread(vec![(1, 100), (5, 100)]);
        assert!(candidate_pairs(&t, "finance", 5.0).is_empty());
    }

    #[test]
    fn ratio_filter_cases() {
        let inst = |chosen: i64, rejected: i64| PreferenceInstance {
            domain: "d".into(),
            subreddit: "s".into(),
            post_id: "p".into(),
            question: "q".into(),
            chosen: "a".into(),
            rejected: "b".into(),
            score_chosen: chosen,
            score_rejected: rejected,
            ts_chosen: 2,
            ts_rejected: 1,
        };
        let kept = apply_ratio_filter(vec![inst(9, 3), inst(3, 2), inst(2, 0)]);
        let ratios: Vec<(i64, i64)> =
            kept.iter().map(|i| (i.score_chosen, i.score_rejected)).collect();
        assert_eq!(ratios, vec![(9, 3), (2, 0)], "3.0 kept, 1.5 dropped, clamped 2.0 kept");
    }

    #[test]
    fn cap_keeps_at_most_cap_and_is_deterministic() {
        let t = thread((0..8).map(|k| (1 + 2 * k, 10 + k)).collect());
        let pairs = apply_ratio_filter(candidate_pairs(&t, "d", 50.0));
        assert!(pairs.len() > 5, "fixture produces more than cap");
        let a = cap_per_thread(pairs.clone(), 5, 77);
        let b = cap_per_thread(pairs.clone(), 5, 77);
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
        let all = cap_per_thread(pairs.clone(), 100, 77);
        assert_eq!(all.len(), pairs.len(), "small groups pass through whole");
        let other_seed = cap_per_thread(pairs, 5, 78);
        assert_ne!(a, other_seed, "different seed selects differently");
    }

    fn many_threads(n: usize) -> Vec<ThreadRecord> {
        (0..n)
            .map(|i| {
                let mut t = thread(vec![(1, 10), (4, 20)]);
                t.post.id = format!("p{i:04}");
                t.post.created_utc = 1 + i as i64;
                t
            })
            .collect()
    }

    #[test]
    fn split_arithmetic_and_determinism() {
        let spec = SplitSpec { eval_fraction: 0.025, seed: 7, cap_per_thread: 5 };
        let out = split_eval(many_threads(1000), &spec).unwrap();
        assert_eq!(out.eval.len(), 25);
        assert_eq!(out.train.len(), 975);
        assert!(!out.eval_empty);

        let small = split_eval(many_threads(10), &spec).unwrap();
        assert!(small.eval.is_empty());
        assert!(small.eval_empty);

        // shuffled input order does not change membership
        let mut shuffled = many_threads(1000);
        shuffled.reverse();
        let out2 = split_eval(shuffled, &spec).unwrap();
        assert_eq!(out.eval, out2.eval);
        assert_eq!(out.train, out2.train);
    }

    #[test]
    fn split_and_pairs_are_disjoint_by_post_id() {
        let spec = SplitSpec { eval_fraction: 0.1, seed: 3, cap_per_thread: 5 };
        let out = build_pairs(many_threads(100), "d", &spec, 5.0).unwrap();
        let eval_ids: std::collections::BTreeSet<_> =
            out.eval_prompts.iter().map(|p| p.post_id.clone()).collect();
        assert_eq!(eval_ids.len(), 10);
        assert!(out.train_instances.iter().all(|i| !eval_ids.contains(&i.post_id)));
        for inst in out.train_instances.iter().chain(out.eval_pairs.iter()) {
            inst.validate().unwrap();
        }
    }

    #[test]
    fn stats_report_counts_and_totals() {
        let empty = dataset_stats(&[], &[], &[]);
        assert_eq!(empty.total.train_pairs, 0);
        assert!(empty.rows.is_empty());

        let t1 = thread(vec![(1, 1), (4, 2)]);
        let mut t2 = thread(vec![(1, 1), (4, 2), (9, 3)]);
        t2.post.id = "p2".into();
        t2.post.subreddit = "investing".into();
        let mut train = apply_ratio_filter(candidate_pairs(&t1, "finance", 5.0));
        train.extend(apply_ratio_filter(candidate_pairs(&t2, "finance", 5.0)));
        let report = dataset_stats(&train, &[], &[]);
        assert_eq!(report.total.train_pairs, 4);
        assert_eq!(report.rows.len(), 2);
        assert_eq!(report.domains.len(), 1);
        assert_eq!(report.domains[0].train_pairs, 4);
    }
}
