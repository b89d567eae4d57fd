//! Tweet records, per-user grouping, timeline merging and activity-based user selection.
//!
//! Tweet files are UTF-8 JSON Lines: one object per line with keys `id`, `user_id`, `text`
//! and the optional `retweeted_user` and `timestamp`. Gold labels are `user_id<TAB>label`
//! rows with label `0` or `1`. Both formats are described in `docs/formats.md`.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, StanceError};
use crate::labels::Class;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tweet {
    pub id: String,
    pub user_id: String,
    pub text: String,
    /// Account that was retweeted, without the leading `@`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retweeted_user: Option<String>,
    /// Not part of the line format; set from the corpus the tweet is loaded into.
    #[serde(skip)]
    pub topic: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

impl Tweet {
    pub fn new(id: impl Into<String>, user_id: impl Into<String>, text: impl Into<String>) -> Tweet {
        Tweet {
            id: id.into(),
            user_id: user_id.into(),
            text: text.into(),
            retweeted_user: None,
            topic: String::new(),
            timestamp: None,
        }
    }

    pub fn retweet_of(mut self, account: impl Into<String>) -> Tweet {
        self.retweeted_user = Some(account.into());
        self
    }

    fn validate(&mut self) -> std::result::Result<(), String> {
        if self.id.is_empty() {
            return Err("empty tweet id".into());
        }
        if self.user_id.is_empty() {
            return Err("empty user_id".into());
        }
        if let Some(account) = self.retweeted_user.as_mut() {
            if let Some(stripped) = account.strip_prefix('@') {
                *account = stripped.to_string();
            }
            if account.is_empty() {
                return Err("empty retweeted_user".into());
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserRecord {
    pub user_id: String,
    pub topical_tweets: Vec<Tweet>,
    pub timeline_tweets: Vec<Tweet>,
    pub gold_label: Option<Class>,
}

impl UserRecord {
    pub fn new(user_id: impl Into<String>) -> UserRecord {
        UserRecord {
            user_id: user_id.into(),
            ..UserRecord::default()
        }
    }

    /// Topical tweets, followed by timeline tweets when `use_timeline` is set.
    pub fn selected_tweets(&self, use_timeline: bool) -> impl Iterator<Item = &Tweet> {
        let timeline: &[Tweet] = if use_timeline { &self.timeline_tweets } else { &[] };
        self.topical_tweets.iter().chain(timeline.iter())
    }

    pub fn has_timeline(&self) -> bool {
        !self.timeline_tweets.is_empty()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserCorpus {
    pub topic: String,
    pub users: BTreeMap<String, UserRecord>,
}

impl UserCorpus {
    pub fn new(topic: impl Into<String>) -> UserCorpus {
        UserCorpus {
            topic: topic.into(),
            users: BTreeMap::new(),
        }
    }

    /// Groups tweets by user. Exact duplicates are dropped, conflicting duplicates are an error.
    pub fn from_tweets(topic: &str, tweets: impl IntoIterator<Item = Tweet>) -> Result<UserCorpus> {
        let mut by_id: BTreeMap<String, Tweet> = BTreeMap::new();
        for mut tweet in tweets {
            tweet.validate().map_err(|m| StanceError::parse(0, m))?;
            tweet.topic = topic.to_string();
            insert_dedup(&mut by_id, tweet)?;
        }
        Ok(Self::group(topic, by_id))
    }

    fn group(topic: &str, by_id: BTreeMap<String, Tweet>) -> UserCorpus {
        let mut corpus = UserCorpus::new(topic);
        for (_, tweet) in by_id {
            corpus
                .users
                .entry(tweet.user_id.clone())
                .or_insert_with(|| UserRecord::new(tweet.user_id.clone()))
                .topical_tweets
                .push(tweet);
        }
        corpus
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    pub fn get(&self, user_id: &str) -> Option<&UserRecord> {
        self.users.get(user_id)
    }

    pub fn tweet_count(&self) -> usize {
        self.users.values().map(|u| u.topical_tweets.len()).sum()
    }

    pub fn has_timelines(&self) -> bool {
        self.users.values().any(UserRecord::has_timeline)
    }

    pub fn insert(&mut self, user: UserRecord) {
        self.users.insert(user.user_id.clone(), user);
    }

    /// Sets `gold_label` on every user present in `gold`; returns how many users were labeled.
    pub fn attach_gold(&mut self, gold: &BTreeMap<String, Class>) -> usize {
        let mut attached = 0;
        for (user_id, label) in gold {
            if let Some(user) = self.users.get_mut(user_id) {
                user.gold_label = Some(*label);
                attached += 1;
            }
        }
        attached
    }

    pub fn gold_labels(&self) -> BTreeMap<String, Class> {
        self.users
            .iter()
            .filter_map(|(id, u)| u.gold_label.map(|g| (id.clone(), g)))
            .collect()
    }
}

fn insert_dedup(by_id: &mut BTreeMap<String, Tweet>, tweet: Tweet) -> Result<bool> {
    match by_id.entry(tweet.id.clone()) {
        Entry::Vacant(slot) => {
            slot.insert(tweet);
            Ok(true)
        }
        Entry::Occupied(existing) => {
            if *existing.get() == tweet {
                Ok(false)
            } else {
                Err(StanceError::ConflictingDuplicate { id: tweet.id })
            }
        }
    }
}

/// Reads a tweet JSONL file. Blank lines are skipped; line numbers in errors are 1-based.
pub fn read_tweets(path: &Path) -> Result<Vec<Tweet>> {
    let raw = fs::read_to_string(path).map_err(|e| StanceError::io(path, e))?;
    parse_tweets(&raw)
}

pub fn parse_tweets(raw: &str) -> Result<Vec<Tweet>> {
    let mut tweets = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut tweet: Tweet =
            serde_json::from_str(line).map_err(|e| StanceError::parse(i + 1, e.to_string()))?;
        tweet.validate().map_err(|m| StanceError::parse(i + 1, m))?;
        tweets.push(tweet);
    }
    Ok(tweets)
}

pub fn write_tweets<'a>(path: &Path, tweets: impl IntoIterator<Item = &'a Tweet>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| StanceError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for tweet in tweets {
        let line = serde_json::to_string(tweet).expect("tweet serializes");
        writeln!(out, "{line}").map_err(|e| StanceError::io(path, e))?;
    }
    out.flush().map_err(|e| StanceError::io(path, e))
}

pub fn load_corpus(path: &Path, topic: &str) -> Result<UserCorpus> {
    let raw = fs::read_to_string(path).map_err(|e| StanceError::io(path, e))?;
    load_corpus_from_str(&raw, topic)
}

pub fn load_corpus_from_str(raw: &str, topic: &str) -> Result<UserCorpus> {
    let mut by_id = BTreeMap::new();
    for (i, line) in raw.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut tweet: Tweet =
            serde_json::from_str(line).map_err(|e| StanceError::parse(i + 1, e.to_string()))?;
        tweet.validate().map_err(|m| StanceError::parse(i + 1, m))?;
        tweet.topic = topic.to_string();
        insert_dedup(&mut by_id, tweet)?;
    }
    Ok(UserCorpus::group(topic, by_id))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MergeStats {
    pub appended: usize,
    pub skipped_unknown_user: usize,
    pub skipped_duplicate: usize,
}

pub fn merge_timeline(corpus: &UserCorpus, timeline_path: &Path) -> Result<(UserCorpus, MergeStats)> {
    let tweets = read_tweets(timeline_path)?;
    Ok(merge_timeline_tweets(corpus, tweets))
}

/// Appends timeline tweets to known users. Ids already held by the user (topical or
/// timeline) are dropped; rows of unknown users are counted and skipped.
pub fn merge_timeline_tweets(
    corpus: &UserCorpus,
    tweets: impl IntoIterator<Item = Tweet>,
) -> (UserCorpus, MergeStats) {
    let mut merged = corpus.clone();
    let mut stats = MergeStats::default();
    let mut seen: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for mut tweet in tweets {
        let Some(user) = merged.users.get_mut(&tweet.user_id) else {
            stats.skipped_unknown_user += 1;
            continue;
        };
        let ids = seen.entry(tweet.user_id.clone()).or_insert_with(|| {
            user.topical_tweets
                .iter()
                .chain(&user.timeline_tweets)
                .map(|t| t.id.clone())
                .collect()
        });
        if !ids.insert(tweet.id.clone()) {
            stats.skipped_duplicate += 1;
            continue;
        }
        tweet.topic = corpus.topic.clone();
        user.timeline_tweets.push(tweet);
        stats.appended += 1;
    }
    for user in merged.users.values_mut() {
        user.timeline_tweets.sort_by(|a, b| a.id.cmp(&b.id));
    }
    if stats.skipped_unknown_user > 0 {
        log::warn!(
            "skipped {} timeline tweet(s) of users absent from the corpus",
            stats.skipped_unknown_user
        );
    }
    (merged, stats)
}

/// The `n` users with the most topical tweets among those with at least `min_tweets`.
/// Ties go to the lexicographically smaller user id.
pub fn select_active_users(corpus: &UserCorpus, n: usize, min_tweets: usize) -> UserCorpus {
    let mut ranked: Vec<(&String, usize)> = corpus
        .users
        .iter()
        .map(|(id, u)| (id, u.topical_tweets.len()))
        .filter(|&(_, count)| count >= min_tweets)
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let mut selected = UserCorpus::new(corpus.topic.clone());
    for (id, _) in ranked.into_iter().take(n) {
        selected.insert(corpus.users[id].clone());
    }
    selected
}

pub fn read_gold_labels(path: &Path) -> Result<BTreeMap<String, Class>> {
    let raw = fs::read_to_string(path).map_err(|e| StanceError::io(path, e))?;
    parse_gold_labels(&raw)
}

pub fn parse_gold_labels(raw: &str) -> Result<BTreeMap<String, Class>> {
    let mut gold = BTreeMap::new();
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let (Some(user), Some(label), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(StanceError::parse(i + 1, "expected user_id<TAB>label"));
        };
        if user.is_empty() {
            return Err(StanceError::parse(i + 1, "empty user_id"));
        }
        let label: Class = label.parse().map_err(|m: String| StanceError::parse(i + 1, m))?;
        if let Some(previous) = gold.insert(user.to_string(), label) {
            if previous != label {
                return Err(StanceError::parse(
                    i + 1,
                    format!("user {user:?} has conflicting labels"),
                ));
            }
        }
    }
    Ok(gold)
}

pub fn write_gold_labels(path: &Path, gold: &BTreeMap<String, Class>) -> Result<()> {
    let mut out = String::new();
    for (user, label) in gold {
        out.push_str(user);
        out.push('\t');
        out.push_str(&label.to_string());
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| StanceError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(id: &str, user: &str, text: &str) -> String {
        format!(r#"{{"id":"{id}","user_id":"{user}","text":"{text}"}}"#)
    }

    #[test]
    fn empty_file_gives_empty_corpus() {
        let corpus = load_corpus_from_str("", "guns").unwrap();
        assert!(corpus.is_empty());
    }

    #[test]
    fn groups_by_user() {
        let raw = [line("1", "u1", "a"), line("2", "u2", "b"), line("3", "u1", "c")].join("\n");
        let corpus = load_corpus_from_str(&raw, "guns").unwrap();
        assert_eq!(corpus.len(), 2);
        assert_eq!(corpus.get("u1").unwrap().topical_tweets.len(), 2);
        assert_eq!(corpus.get("u2").unwrap().topical_tweets.len(), 1);
        assert_eq!(corpus.get("u1").unwrap().topical_tweets[0].topic, "guns");
    }

    #[test]
    fn identical_duplicates_collapse() {
        let raw = [line("1", "u1", "a"), line("1", "u1", "a")].join("\n");
        let corpus = load_corpus_from_str(&raw, "t").unwrap();
        assert_eq!(corpus.tweet_count(), 1);
    }

    #[test]
    fn conflicting_duplicates_are_rejected() {
        let raw = [line("1", "u1", "a"), line("1", "u1", "b")].join("\n");
        assert!(matches!(
            load_corpus_from_str(&raw, "t"),
            Err(StanceError::ConflictingDuplicate { .. })
        ));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let raw = format!("{}\n{{not json\n", line("1", "u1", "a"));
        match load_corpus_from_str(&raw, "t") {
            Err(StanceError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let raw = r#"{"id":"","user_id":"u","text":""}"#;
        assert!(matches!(
            load_corpus_from_str(raw, "t"),
            Err(StanceError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn retweeted_user_is_stored_without_at() {
        let raw = r#"{"id":"1","user_id":"u","text":"x","retweeted_user":"@NRA"}"#;
        let corpus = load_corpus_from_str(raw, "t").unwrap();
        let tweet = &corpus.get("u").unwrap().topical_tweets[0];
        assert_eq!(tweet.retweeted_user.as_deref(), Some("NRA"));
        let raw = r#"{"id":"1","user_id":"u","text":"x","retweeted_user":""}"#;
        assert!(load_corpus_from_str(raw, "t").is_err());
    }

    fn corpus_with(counts: &[(&str, usize)]) -> UserCorpus {
        let mut tweets = Vec::new();
        for (user, n) in counts {
            for i in 0..*n {
                tweets.push(Tweet::new(format!("{user}-{i}"), *user, "x"));
            }
        }
        UserCorpus::from_tweets("t", tweets).unwrap()
    }

    #[test]
    fn merge_timeline_appends_disjoint_tweets() {
        let corpus = corpus_with(&[("u1", 2)]);
        let timeline = (0..100).map(|i| Tweet::new(format!("tl{i}"), "u1", "y"));
        let (merged, stats) = merge_timeline_tweets(&corpus, timeline);
        let user = merged.get("u1").unwrap();
        assert_eq!(user.topical_tweets.len(), 2);
        assert_eq!(user.timeline_tweets.len(), 100);
        assert_eq!(stats.appended, 100);
    }

    #[test]
    fn merge_timeline_drops_topical_ids() {
        let corpus = corpus_with(&[("u1", 2)]);
        let timeline = vec![Tweet::new("u1-0", "u1", "x"), Tweet::new("new", "u1", "z")];
        let (merged, stats) = merge_timeline_tweets(&corpus, timeline);
        assert_eq!(merged.get("u1").unwrap().timeline_tweets.len(), 1);
        assert_eq!(stats.skipped_duplicate, 1);
    }

    #[test]
    fn merge_timeline_skips_unknown_users() {
        let corpus = corpus_with(&[("u1", 2)]);
        let (merged, stats) = merge_timeline_tweets(&corpus, vec![Tweet::new("a", "ghost", "x")]);
        assert_eq!(merged, corpus);
        assert_eq!(stats.skipped_unknown_user, 1);
    }

    #[test]
    fn select_active_users_thresholds_and_sorts() {
        let corpus = corpus_with(&[("u1", 12), ("u2", 9), ("u3", 30)]);
        let picked = select_active_users(&corpus, 2, 10);
        assert_eq!(picked.users.keys().collect::<Vec<_>>(), ["u1", "u3"]);

        let corpus = corpus_with(&[("u1", 12)]);
        assert_eq!(select_active_users(&corpus, 5, 10).len(), 1);

        let corpus = corpus_with(&[("u1", 10), ("u2", 10)]);
        let picked = select_active_users(&corpus, 1, 10);
        assert_eq!(picked.users.keys().collect::<Vec<_>>(), ["u1"]);
    }

    #[test]
    fn gold_labels_parse() {
        let gold = parse_gold_labels("u1\t0\nu2\t1\n").unwrap();
        assert_eq!(gold["u2"], Class::ONE);
        assert!(matches!(
            parse_gold_labels("u1\t0\nu2 1\n"),
            Err(StanceError::Parse { line: 2, .. })
        ));
        assert!(parse_gold_labels("u1\t3\n").is_err());
    }
}
