//! Instance-removal quality filters.
//!
//! Post-level filters can drop a whole thread; comment-level filters drop
//! individual comments. The sentence-length ratio is a pair-level rule and
//! lives with pair construction, not here. All predicates are pure;
//! `filter_thread` is idempotent. Language identification and question
//! detection are pluggable: the defaults are deterministic rule-based
//! backends so the pipeline is testable hermetically.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::ingest::{CommentRecord, PostRecord, ThreadRecord};

/// Fixed 100-word English stopword list used by the default language backend.
pub const ENGLISH_STOPWORDS: [&str; 100] = [
    "a", "about", "above", "after", "again", "all", "am", "an", "and", "any", "are", "as", "at",
    "be", "because", "been", "before", "being", "both", "but", "by", "can", "could", "did", "do",
    "does", "down", "each", "few", "for", "from", "had", "has", "have", "he", "her", "here",
    "him", "his", "how", "i", "if", "in", "into", "is", "it", "its", "me", "more", "most", "my",
    "no", "nor", "not", "of", "off", "on", "only", "or", "other", "our", "out", "over", "she",
    "should", "so", "some", "such", "than", "that", "the", "their", "them", "then", "there",
    "these", "they", "this", "those", "through", "to", "under", "until", "up", "very", "was",
    "we", "were", "what", "when", "where", "which", "while", "who", "why", "will", "with",
    "would", "you", "your",
];

/// Interrogative/auxiliary words that mark a title as a question when the
/// title begins with one of them.
pub const INTERROGATIVE_PREFIXES: [&str; 19] = [
    "what", "why", "how", "when", "where", "who", "which", "is", "are", "do", "does", "can",
    "should", "would", "could", "will", "has", "have", "did",
];

/// Names of the individual filters; used in verdicts and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterName {
    NonEnglish,
    NonTextual,
    Over18,
    Stickied,
    NotQuestion,
    Deleted,
    Edited,
    ByPoster,
}

impl FilterName {
    pub fn as_str(self) -> &'static str {
        match self {
            FilterName::NonEnglish => "non_english",
            FilterName::NonTextual => "non_textual",
            FilterName::Over18 => "over_18",
            FilterName::Stickied => "stickied",
            FilterName::NotQuestion => "not_question",
            FilterName::Deleted => "deleted",
            FilterName::Edited => "edited",
            FilterName::ByPoster => "by_poster",
        }
    }

    pub fn all() -> BTreeSet<FilterName> {
        use FilterName::*;
        [NonEnglish, NonTextual, Over18, Stickied, NotQuestion, Deleted, Edited, ByPoster]
            .into_iter()
            .collect()
    }
}

/// Filter configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilterConfig {
    /// Pair-level sentence-count ratio bound; instances with a strictly
    /// greater ratio are discarded.
    pub max_sentence_ratio: f64,
    /// Language tag the language-id backend checks for.
    pub language: String,
    /// Enabled filters.
    pub filter_flags: BTreeSet<FilterName>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self { max_sentence_ratio: 5.0, language: "en".into(), filter_flags: FilterName::all() }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_sentence_ratio > 1.0 {
            Ok(())
        } else {
            Err(format!("max_sentence_ratio must be > 1.0, got {}", self.max_sentence_ratio))
        }
    }
}

/// Verdict for a single filtered item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterVerdict {
    pub kept: bool,
    pub rejected_by: Option<FilterName>,
}

impl FilterVerdict {
    pub fn kept() -> Self {
        Self { kept: true, rejected_by: None }
    }

    pub fn rejected(by: FilterName) -> Self {
        Self { kept: false, rejected_by: Some(by) }
    }
}

/// Pluggable language identification.
pub trait LanguageId: Send + Sync {
    fn is_language(&self, text: &str, language: &str) -> bool;
}

/// Default backend: stopword-frequency heuristic. English is accepted when
/// the fraction of tokens found in [`ENGLISH_STOPWORDS`] is at least 0.08
/// and at least half of the non-whitespace characters are ASCII letters.
#[derive(Debug, Default, Clone, Copy)]
pub struct StopwordLanguageId;

impl LanguageId for StopwordLanguageId {
    fn is_language(&self, text: &str, language: &str) -> bool {
        if language != "en" {
            // only English rules are shipped; other tags never match
            return false;
        }
        is_english(text)
    }
}

/// Pluggable question detection.
pub trait QuestionDetector: Send + Sync {
    fn is_question(&self, post: &PostRecord) -> bool;
}

/// Default rule backend: a `?` at a sentence end in the title or body, or a
/// title starting with an interrogative/auxiliary word.
#[derive(Debug, Default, Clone, Copy)]
pub struct RuleQuestionDetector;

impl QuestionDetector for RuleQuestionDetector {
    fn is_question(&self, post: &PostRecord) -> bool {
        is_question(post)
    }
}

fn stopword_set() -> &'static BTreeSet<&'static str> {
    static SET: OnceLock<BTreeSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| ENGLISH_STOPWORDS.iter().copied().collect())
}

/// Fraction of tokens that are in the shipped stopword list.
pub fn stopword_fraction(text: &str) -> f64 {
    let tokens = crate::features::tokenize(text);
    if tokens.is_empty() {
        return 0.0;
    }
    let hits = tokens.iter().filter(|t| stopword_set().contains(t.as_str())).count();
    hits as f64 / tokens.len() as f64
}

/// Fraction of non-whitespace characters that are ASCII letters.
pub fn ascii_letter_fraction(text: &str) -> f64 {
    let mut total = 0usize;
    let mut ascii = 0usize;
    for ch in text.chars() {
        if ch.is_whitespace() {
            continue;
        }
        total += 1;
        if ch.is_ascii_alphabetic() {
            ascii += 1;
        }
    }
    if total == 0 {
        return 0.0;
    }
    ascii as f64 / total as f64
}

/// Default English check: stopword fraction >= 0.08 and ASCII-letter
/// fraction >= 0.5. Empty (after trimming) text is not English.
pub fn is_english(text: &str) -> bool {
    if text.trim().is_empty() {
        return false;
    }
    stopword_fraction(text) >= 0.08 && ascii_letter_fraction(text) >= 0.5
}

fn nontextual_regexes() -> &'static [Regex; 4] {
    static RE: OnceLock<[Regex; 4]> = OnceLock::new();
    RE.get_or_init(|| {
        [
            // URLs: scheme:// or a www. token
            Regex::new(r"(?i)\b[a-z][a-z0-9+.\-]*://|(?i)(^|\s)www\.").unwrap(),
            // markdown links and images
            Regex::new(r"!?\[[^\]]*\]\([^)]*\)").unwrap(),
            // /u/ or u/ user mentions
            Regex::new(r"(?i)(^|[\s(])/?u/[a-z0-9_\-]+").unwrap(),
            // the word reddit itself
            Regex::new(r"(?i)\breddit\b").unwrap(),
        ]
    })
}

/// True when the text contains URLs, markdown media/link syntax, user
/// mentions, or the word "reddit".
pub fn has_nontextual(text: &str) -> bool {
    nontextual_regexes().iter().any(|re| re.is_match(text))
}

/// True when a `?` ends a sentence: followed by whitespace, a closing
/// quote/bracket, or the end of the text.
fn has_question_mark_at_sentence_end(text: &str) -> bool {
    let chars: Vec<char> = text.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        if c != '?' {
            continue;
        }
        let mut j = i + 1;
        while j < chars.len() && matches!(chars[j], '"' | '\'' | ')' | ']' | '”' | '’') {
            j += 1;
        }
        if j >= chars.len() || chars[j].is_whitespace() {
            return true;
        }
    }
    false
}

/// Default question rule over a post.
pub fn is_question(post: &PostRecord) -> bool {
    if has_question_mark_at_sentence_end(&post.title)
        || has_question_mark_at_sentence_end(&post.selftext)
    {
        return true;
    }
    match crate::features::tokenize(&post.title).first() {
        Some(first) => INTERROGATIVE_PREFIXES.contains(&first.as_str()),
        None => false,
    }
}

/// Number of sentences: maximal runs terminated by `.`, `!`, `?`, or a
/// newline, clamped to a minimum of 1.
pub fn sentence_count(text: &str) -> usize {
    let count = text
        .split(['.', '!', '?', '\n'])
        .filter(|seg| seg.chars().any(|c| !c.is_whitespace()))
        .count();
    count.max(1)
}

/// Sentence-count ratio rule: keep when `max/min <= max_ratio`.
pub fn length_ratio_ok(a: &str, b: &str, max_ratio: f64) -> bool {
    let sa = sentence_count(a) as f64;
    let sb = sentence_count(b) as f64;
    let ratio = sa.max(sb) / sa.min(sb);
    ratio <= max_ratio
}

/// Outcome of filtering one thread.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterOutcome {
    /// Surviving thread; `None` when a post-level filter rejected it.
    pub thread: Option<ThreadRecord>,
    pub post_rejected_by: Option<FilterName>,
    /// `(comment_id, filter)` for each dropped comment.
    pub comment_rejections: Vec<(String, FilterName)>,
}

/// Filter engine with pluggable backends.
pub struct FilterEngine {
    pub config: FilterConfig,
    language_id: Box<dyn LanguageId>,
    question_detector: Box<dyn QuestionDetector>,
}

impl FilterEngine {
    pub fn new(config: FilterConfig) -> Self {
        Self {
            config,
            language_id: Box::new(StopwordLanguageId),
            question_detector: Box::new(RuleQuestionDetector),
        }
    }

    pub fn with_backends(
        config: FilterConfig,
        language_id: Box<dyn LanguageId>,
        question_detector: Box<dyn QuestionDetector>,
    ) -> Self {
        Self { config, language_id, question_detector }
    }

    fn enabled(&self, name: FilterName) -> bool {
        self.config.filter_flags.contains(&name)
    }

    /// Post-level verdict, filters evaluated in the documented order:
    /// non_english, non_textual, over_18, stickied, not_question.
    pub fn post_verdict(&self, post: &PostRecord) -> FilterVerdict {
        let text = format!("{}\n\n{}", post.title, post.selftext);
        if self.enabled(FilterName::NonEnglish)
            && !self.language_id.is_language(&text, &self.config.language)
        {
            return FilterVerdict::rejected(FilterName::NonEnglish);
        }
        if self.enabled(FilterName::NonTextual) && has_nontextual(&text) {
            return FilterVerdict::rejected(FilterName::NonTextual);
        }
        if self.enabled(FilterName::Over18) && post.over_18 {
            return FilterVerdict::rejected(FilterName::Over18);
        }
        if self.enabled(FilterName::Stickied) && post.stickied {
            return FilterVerdict::rejected(FilterName::Stickied);
        }
        if self.enabled(FilterName::NotQuestion) && !self.question_detector.is_question(post) {
            return FilterVerdict::rejected(FilterName::NotQuestion);
        }
        FilterVerdict::kept()
    }

    /// Comment-level verdict, in order: non_english, non_textual, stickied,
    /// deleted, edited, by_poster.
    pub fn comment_verdict(&self, post: &PostRecord, comment: &CommentRecord) -> FilterVerdict {
        if self.enabled(FilterName::NonEnglish)
            && !self.language_id.is_language(&comment.body, &self.config.language)
        {
            return FilterVerdict::rejected(FilterName::NonEnglish);
        }
        if self.enabled(FilterName::NonTextual) && has_nontextual(&comment.body) {
            return FilterVerdict::rejected(FilterName::NonTextual);
        }
        if self.enabled(FilterName::Stickied) && comment.stickied {
            return FilterVerdict::rejected(FilterName::Stickied);
        }
        if self.enabled(FilterName::Deleted) && comment.deleted {
            return FilterVerdict::rejected(FilterName::Deleted);
        }
        if self.enabled(FilterName::Edited) && comment.edited {
            return FilterVerdict::rejected(FilterName::Edited);
        }
        if self.enabled(FilterName::ByPoster)
            && !post.author.is_empty()
            && post.author != "[deleted]"
            && comment.author == post.author
        {
            return FilterVerdict::rejected(FilterName::ByPoster);
        }
        FilterVerdict::kept()
    }

    /// Applies post-level filters, then comment-level filters. A thread whose
    /// post is rejected is dropped whole; surviving threads keep whatever
    /// comments pass (possibly none).
    pub fn filter_thread(&self, thread: &ThreadRecord) -> FilterOutcome {
        let pv = self.post_verdict(&thread.post);
        if let Some(name) = pv.rejected_by {
            return FilterOutcome {
                thread: None,
                post_rejected_by: Some(name),
                comment_rejections: Vec::new(),
            };
        }
        let mut kept = Vec::with_capacity(thread.comments.len());
        let mut comment_rejections = Vec::new();
        for c in &thread.comments {
            let cv = self.comment_verdict(&thread.post, c);
            match cv.rejected_by {
                None => kept.push(c.clone()),
                Some(name) => comment_rejections.push((c.id.clone(), name)),
            }
        }
        FilterOutcome {
            thread: Some(ThreadRecord { post: thread.post.clone(), comments: kept }),
            post_rejected_by: None,
            comment_rejections,
        }
    }
}

/// Per-filter rejection counts for a corpus pass.
#[derive(Debug, Default, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub threads_in: usize,
    pub threads_kept: usize,
    pub comments_in: usize,
    pub comments_kept: usize,
    pub post_rejections: BTreeMap<String, usize>,
    pub comment_rejections: BTreeMap<String, usize>,
}

/// Filters a whole corpus, collecting the per-filter report.
pub fn filter_corpus(engine: &FilterEngine, threads: &[ThreadRecord]) -> (Vec<ThreadRecord>, FilterReport) {
    let mut report = FilterReport {
        threads_in: threads.len(),
        comments_in: threads.iter().map(|t| t.comments.len()).sum(),
        ..FilterReport::default()
    };
    let mut kept = Vec::new();
    for t in threads {
        let out = engine.filter_thread(t);
        if let Some(name) = out.post_rejected_by {
            *report.post_rejections.entry(name.as_str().into()).or_insert(0) += 1;
            continue;
        }
        for (_, name) in &out.comment_rejections {
            *report.comment_rejections.entry(name.as_str().into()).or_insert(0) += 1;
        }
        let thread = out.thread.expect("kept thread");
        report.comments_kept += thread.comments.len();
        kept.push(thread);
    }
    report.threads_kept = kept.len();
    (kept, report)
}
