//! Dump parsing and thread assembly.
//!
//! Inputs are two JSONL files with Pushshift-compatible field names: one of
//! posts, one of comments. Records missing mandatory fields are dropped and
//! counted; malformed lines are skipped and logged. Assembly groups
//! first-level comments (parent is the post itself) under their post and
//! applies a canonical sort so output is independent of input order.

use std::io::BufRead;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("stream read failed at byte offset {offset}: {source}")]
    Stream {
        offset: u64,
        #[source]
        source: std::io::Error,
    },
}

/// One submission. `subreddit` is lowercase without the `r/` prefix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostRecord {
    pub id: String,
    pub subreddit: String,
    pub title: String,
    #[serde(default)]
    pub selftext: String,
    pub created_utc: i64,
    #[serde(default)]
    pub over_18: bool,
    #[serde(default)]
    pub stickied: bool,
    #[serde(default)]
    pub author: String,
}

/// One comment. `link_id`/`parent_id` are normalized to bare ids (no
/// `t1_`/`t3_` prefixes); `deleted` is derived from the body/author
/// sentinels since dumps carry no explicit flag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommentRecord {
    pub id: String,
    pub link_id: String,
    pub parent_id: String,
    pub body: String,
    #[serde(default)]
    pub score: i64,
    pub created_utc: i64,
    #[serde(default)]
    pub author: String,
    #[serde(default)]
    pub edited: bool,
    #[serde(default)]
    pub stickied: bool,
    #[serde(default)]
    pub deleted: bool,
}

/// One post plus its first-level comments, sorted by (created_utc, id).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreadRecord {
    pub post: PostRecord,
    pub comments: Vec<CommentRecord>,
}

#[derive(Debug, Default, Clone, PartialEq, Eq, Serialize)]
pub struct ParseOutcome {
    pub posts: Vec<PostRecord>,
    pub comments: Vec<CommentRecord>,
    /// Post lines that parsed as JSON but lacked mandatory fields.
    pub posts_dropped: usize,
    pub comments_dropped: usize,
    /// Lines that were not valid JSON objects.
    pub posts_malformed: usize,
    pub comments_malformed: usize,
}

#[derive(Debug, Default, Clone, PartialEq, Eq, Serialize)]
pub struct AssembleOutcome {
    pub threads: Vec<ThreadRecord>,
    /// Comments whose link_id matches no post.
    pub orphan_comments: usize,
    /// Comments attached to a known post but replying to another comment.
    pub nested_replies: usize,
    pub duplicate_posts: usize,
    pub duplicate_comments: usize,
}

fn strip_kind_prefix(id: &str) -> &str {
    id.strip_prefix("t1_")
        .or_else(|| id.strip_prefix("t3_"))
        .unwrap_or(id)
}

fn normalize_subreddit(raw: &str) -> String {
    let raw = raw.strip_prefix("r/").or_else(|| raw.strip_prefix("/r/")).unwrap_or(raw);
    raw.to_lowercase()
}

fn get_str(v: &Value, key: &str) -> Option<String> {
    v.get(key).and_then(Value::as_str).map(str::to_string)
}

fn get_i64(v: &Value, key: &str) -> Option<i64> {
    let field = v.get(key)?;
    field
        .as_i64()
        .or_else(|| field.as_f64().map(|f| f as i64))
        // Pushshift sometimes stores timestamps as strings.
        .or_else(|| field.as_str().and_then(|s| s.parse().ok()))
}

fn get_bool(v: &Value, key: &str) -> bool {
    match v.get(key) {
        Some(Value::Bool(b)) => *b,
        // `edited` is false or an edit timestamp.
        Some(Value::Number(_)) => true,
        _ => false,
    }
}

/// Builds a validated post from one parsed JSON object.
pub fn post_from_value(v: &Value) -> Option<PostRecord> {
    let id = get_str(v, "id").filter(|s| !s.is_empty())?;
    let subreddit = normalize_subreddit(&get_str(v, "subreddit")?);
    if subreddit.is_empty() {
        return None;
    }
    let title = get_str(v, "title")?;
    let created_utc = get_i64(v, "created_utc").filter(|&t| t > 0)?;
    Some(PostRecord {
        id: strip_kind_prefix(&id).to_string(),
        subreddit,
        title,
        selftext: get_str(v, "selftext").unwrap_or_default(),
        created_utc,
        over_18: get_bool(v, "over_18"),
        stickied: get_bool(v, "stickied"),
        author: get_str(v, "author").unwrap_or_default(),
    })
}

/// Builds a validated comment from one parsed JSON object.
pub fn comment_from_value(v: &Value) -> Option<CommentRecord> {
    let id = get_str(v, "id").filter(|s| !s.is_empty())?;
    let link_id = get_str(v, "link_id").filter(|s| !s.is_empty())?;
    let parent_id = get_str(v, "parent_id").filter(|s| !s.is_empty())?;
    let body = get_str(v, "body")?;
    let created_utc = get_i64(v, "created_utc").filter(|&t| t > 0)?;
    let author = get_str(v, "author").unwrap_or_default();
    let deleted = body == "[deleted]" || body == "[removed]" || author == "[deleted]";
    Some(CommentRecord {
        id: strip_kind_prefix(&id).to_string(),
        link_id: strip_kind_prefix(&link_id).to_string(),
        parent_id: strip_kind_prefix(&parent_id).to_string(),
        body,
        score: get_i64(v, "score").unwrap_or(0),
        created_utc,
        author,
        edited: get_bool(v, "edited"),
        stickied: get_bool(v, "stickied"),
        deleted,
    })
}

fn parse_lines<T>(
    reader: impl BufRead,
    what: &str,
    from_value: impl Fn(&Value) -> Option<T>,
) -> Result<(Vec<T>, usize, usize), IngestError> {
    let mut out = Vec::new();
    let mut dropped = 0;
    let mut malformed = 0;
    let mut offset: u64 = 0;
    let mut line_no = 0;
    let mut buf = String::new();
    let mut reader = reader;
    loop {
        buf.clear();
        let n = reader
            .read_line(&mut buf)
            .map_err(|source| IngestError::Stream { offset, source })?;
        if n == 0 {
            break;
        }
        offset += n as u64;
        line_no += 1;
        let line = buf.trim();
        if line.is_empty() {
            continue;
        }
        match serde_json::from_str::<Value>(line) {
            Ok(v) => match from_value(&v) {
                Some(rec) => out.push(rec),
                None => {
                    dropped += 1;
                    log::warn!("{what} line {line_no}: missing mandatory fields, dropped");
                }
            },
            Err(e) => {
                malformed += 1;
                log::warn!("{what} line {line_no}: malformed JSON, skipped: {e}");
            }
        }
    }
    Ok((out, dropped, malformed))
}

/// Parses the two dump streams. Unknown fields are ignored.
pub fn parse_dump(
    posts: impl BufRead,
    comments: impl BufRead,
) -> Result<ParseOutcome, IngestError> {
    let (posts, posts_dropped, posts_malformed) = parse_lines(posts, "posts", post_from_value)?;
    let (comments, comments_dropped, comments_malformed) =
        parse_lines(comments, "comments", comment_from_value)?;
    Ok(ParseOutcome { posts, comments, posts_dropped, comments_dropped, posts_malformed, comments_malformed })
}

fn canonical_post_key(p: &PostRecord) -> (i64, String) {
    (p.created_utc, p.id.clone())
}

fn canonical_comment_key(c: &CommentRecord) -> (i64, String) {
    (c.created_utc, c.id.clone())
}

/// Groups first-level comments under their posts.
///
/// Pure: the canonical sort makes output independent of input ordering.
/// Comments below depth 1 are counted and excluded; comments referencing
/// unknown posts are counted as orphans.
pub fn assemble_threads(posts: Vec<PostRecord>, comments: Vec<CommentRecord>) -> AssembleOutcome {
    let mut posts = posts;
    posts.sort_by_key(canonical_post_key);
    let mut duplicate_posts = 0;
    let mut seen = std::collections::BTreeSet::new();
    posts.retain(|p| {
        if seen.insert(p.id.clone()) {
            true
        } else {
            duplicate_posts += 1;
            false
        }
    });

    let mut comments = comments;
    comments.sort_by_key(canonical_comment_key);
    let mut duplicate_comments = 0;
    let mut seen_c = std::collections::BTreeSet::new();
    comments.retain(|c| {
        if seen_c.insert(c.id.clone()) {
            true
        } else {
            duplicate_comments += 1;
            false
        }
    });

    let mut by_post: std::collections::BTreeMap<String, Vec<CommentRecord>> =
        posts.iter().map(|p| (p.id.clone(), Vec::new())).collect();
    let mut orphan_comments = 0;
    let mut nested_replies = 0;
    for c in comments {
        match by_post.get_mut(&c.link_id) {
            Some(bucket) if c.parent_id == c.link_id => bucket.push(c),
            Some(_) => nested_replies += 1,
            None => orphan_comments += 1,
        }
    }

    let mut threads: Vec<ThreadRecord> = posts
        .into_iter()
        .map(|post| {
            let comments = by_post.remove(&post.id).unwrap_or_default();
            ThreadRecord { post, comments }
        })
        .collect();
    threads.sort_by_key(|t| canonical_post_key(&t.post));

    AssembleOutcome { threads, orphan_comments, nested_replies, duplicate_posts, duplicate_comments }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn post_line(id: &str, ts: i64) -> String {
        format!(
            r#"{{"id":"{id}","subreddit":"Finance","title":"T {id}","selftext":"body","created_utc":{ts},"author":"op","extra_field":1}}"#
        )
    }

    fn comment_line(id: &str, link: &str, parent: &str, ts: i64, score: i64) -> String {
        format!(
            r#"{{"id":"{id}","link_id":"t3_{link}","parent_id":"{parent}","body":"c {id}","score":{score},"created_utc":{ts},"author":"u{id}"}}"#
        )
    }

    #[test]
    fn empty_streams_yield_empty_outcome() {
        let out = parse_dump(&b""[..], &b""[..]).unwrap();
        assert!(out.posts.is_empty() && out.comments.is_empty());
        assert_eq!(out.posts_dropped + out.comments_dropped, 0);
    }

    #[test]
    fn missing_mandatory_field_drops_record() {
        // 3-line fixture: one good, one missing created_utc, one good.
        let posts = format!(
            "{}\n{}\n{}\n",
            post_line("p1", 10),
            r#"{"id":"p2","subreddit":"x","title":"no ts"}"#,
            post_line("p3", 30),
        );
        let out = parse_dump(posts.as_bytes(), &b""[..]).unwrap();
        assert_eq!(out.posts.len(), 2);
        assert_eq!(out.posts_dropped, 1);
    }

    #[test]
    fn malformed_line_is_skipped_and_counted() {
        let posts = format!("{}\nnot json at all\n", post_line("p1", 10));
        let out = parse_dump(posts.as_bytes(), &b""[..]).unwrap();
        assert_eq!(out.posts.len(), 1);
        assert_eq!(out.posts_malformed, 1);
    }

    #[test]
    fn pushshift_prefixes_and_casing_are_normalized() {
        let posts = r#"{"id":"t3_abc","subreddit":"r/AskWomen","title":"t","created_utc":5}"#;
        let comments =
            r#"{"id":"t1_c1","link_id":"t3_abc","parent_id":"t3_abc","body":"hi","created_utc":6,"edited":1660000000}"#;
        let out = parse_dump(posts.as_bytes(), comments.as_bytes()).unwrap();
        assert_eq!(out.posts[0].id, "abc");
        assert_eq!(out.posts[0].subreddit, "askwomen");
        assert_eq!(out.comments[0].link_id, "abc");
        assert!(out.comments[0].edited, "numeric edited timestamp means edited");
    }

    #[test]
    fn deleted_is_derived_from_sentinels() {
        let comments = format!(
            "{}\n{}\n",
            r#"{"id":"c1","link_id":"p","parent_id":"p","body":"[deleted]","created_utc":3}"#,
            r#"{"id":"c2","link_id":"p","parent_id":"p","body":"fine","author":"[deleted]","created_utc":4}"#
        );
        let out = parse_dump(&b""[..], comments.as_bytes()).unwrap();
        assert!(out.comments.iter().all(|c| c.deleted));
    }

    #[test]
    fn first_level_rule_excludes_nested_replies() {
        let posts = post_line("p1", 10);
        let comments = format!(
            "{}\n{}\n{}\n",
            comment_line("c1", "p1", "t3_p1", 11, 4),
            comment_line("c2", "p1", "t3_p1", 12, 2),
            comment_line("c3", "p1", "t1_c1", 13, 9),
        );
        let parsed = parse_dump(posts.as_bytes(), comments.as_bytes()).unwrap();
        let out = assemble_threads(parsed.posts, parsed.comments);
        assert_eq!(out.threads.len(), 1);
        assert_eq!(out.threads[0].comments.len(), 2);
        assert_eq!(out.nested_replies, 1);
    }

    #[test]
    fn post_with_no_comments_is_retained() {
        let parsed = parse_dump(post_line("p1", 10).as_bytes(), &b""[..]).unwrap();
        let out = assemble_threads(parsed.posts, parsed.comments);
        assert_eq!(out.threads.len(), 1);
        assert!(out.threads[0].comments.is_empty());
    }

    #[test]
    fn interleaved_comments_partition_by_link_id() {
        // brute-force oracle on a 6-record fixture: group by link_id by hand
        let posts = format!("{}\n{}\n", post_line("p1", 10), post_line("p2", 20));
        let comments = format!(
            "{}\n{}\n{}\n{}\n",
            comment_line("c4", "p2", "t3_p2", 44, 1),
            comment_line("c1", "p1", "t3_p1", 12, 1),
            comment_line("c3", "p1", "t3_p1", 11, 1),
            comment_line("c2", "p2", "t3_p2", 33, 1),
        );
        let parsed = parse_dump(posts.as_bytes(), comments.as_bytes()).unwrap();
        let out = assemble_threads(parsed.posts.clone(), parsed.comments.clone());
        let ids: Vec<Vec<&str>> = out
            .threads
            .iter()
            .map(|t| t.comments.iter().map(|c| c.id.as_str()).collect())
            .collect();
        assert_eq!(ids, vec![vec!["c3", "c1"], vec!["c2", "c4"]], "grouped and time-sorted");

        // order independence
        let mut rev_posts = parsed.posts;
        rev_posts.reverse();
        let mut rev_comments = parsed.comments;
        rev_comments.reverse();
        assert_eq!(out, assemble_threads(rev_posts, rev_comments));
    }

    #[test]
    fn comment_conservation_holds() {
        let posts = post_line("p1", 10);
        let comments = format!(
            "{}\n{}\n{}\n{}\n",
            comment_line("c1", "p1", "t3_p1", 11, 4),
            comment_line("c2", "p1", "t1_c1", 12, 2),
            comment_line("c3", "nope", "t3_nope", 13, 9),
            comment_line("c1", "p1", "t3_p1", 11, 4),
        );
        let parsed = parse_dump(posts.as_bytes(), comments.as_bytes()).unwrap();
        let total = parsed.comments.len();
        let out = assemble_threads(parsed.posts, parsed.comments);
        let in_threads: usize = out.threads.iter().map(|t| t.comments.len()).sum();
        assert_eq!(
            in_threads + out.orphan_comments + out.nested_replies + out.duplicate_comments,
            total
        );
    }
}
