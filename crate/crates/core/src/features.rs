//! Vocabularies and frequency-valued sparse user vectors.
//!
//! RT mode keeps only retweet tokens (`RT_@account`); TEXT mode keeps every token.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{UserCorpus, UserRecord};
use crate::error::{Result, StanceError};
use crate::preprocess::{tokenize, RT_PREFIX};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureMode {
    Rt,
    Text,
}

impl FeatureMode {
    /// Default document-frequency cutoff: 1 user for RT features, 2 for TEXT.
    pub fn default_min_users(self) -> usize {
        match self {
            FeatureMode::Rt => 1,
            FeatureMode::Text => 2,
        }
    }

    pub fn keeps(self, token: &str) -> bool {
        match self {
            FeatureMode::Rt => token.starts_with(RT_PREFIX),
            FeatureMode::Text => true,
        }
    }
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureMode::Rt => "RT",
            FeatureMode::Text => "TEXT",
        })
    }
}

impl FromStr for FeatureMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "RT" => Ok(FeatureMode::Rt),
            "TEXT" => Ok(FeatureMode::Text),
            _ => Err(format!("unknown feature mode {s:?}")),
        }
    }
}

/// Token counts for one user's selected tweets, restricted to the tokens `mode` keeps.
pub type TermCounts = BTreeMap<String, u32>;

pub fn user_term_counts(user: &UserRecord, mode: FeatureMode, use_timeline: bool) -> TermCounts {
    let mut counts = TermCounts::new();
    for tweet in user.selected_tweets(use_timeline) {
        let tokens = tokenize(&tweet.text, tweet.retweeted_user.as_deref()).into_inner();
        for token in tokens.into_iter().filter(|t| mode.keeps(t)) {
            *counts.entry(token).or_default() += 1;
        }
    }
    counts
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "VocabularyData")]
pub struct Vocabulary {
    mode: FeatureMode,
    terms: Vec<String>,
    user_frequency: Vec<usize>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

#[derive(Deserialize)]
struct VocabularyData {
    mode: FeatureMode,
    terms: Vec<String>,
    user_frequency: Vec<usize>,
}

impl From<VocabularyData> for Vocabulary {
    fn from(d: VocabularyData) -> Self {
        Vocabulary::from_parts(d.mode, d.terms, d.user_frequency)
    }
}

impl Vocabulary {
    /// Builds from per-user term counts. Index order is descending user frequency,
    /// ties broken by token.
    pub fn from_user_counts<'a>(
        mode: FeatureMode,
        users: impl IntoIterator<Item = &'a TermCounts>,
        min_users: usize,
    ) -> Vocabulary {
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for counts in users {
            for term in counts.keys().filter(|t| mode.keeps(t)) {
                *df.entry(term.as_str()).or_default() += 1;
            }
        }
        let mut kept: Vec<(&str, usize)> = df.into_iter().filter(|&(_, n)| n >= min_users).collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let (terms, user_frequency) = kept.into_iter().map(|(t, n)| (t.to_string(), n)).unzip();
        Vocabulary::from_parts(mode, terms, user_frequency)
    }

    fn from_parts(mode: FeatureMode, terms: Vec<String>, user_frequency: Vec<usize>) -> Vocabulary {
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary {
            mode,
            terms,
            user_frequency,
            index,
        }
    }

    pub fn mode(&self) -> FeatureMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> &str {
        &self.terms[index]
    }

    pub fn user_frequency(&self, term: &str) -> Option<usize> {
        self.index_of(term).map(|i| self.user_frequency[i])
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn vectorize(&self, counts: &TermCounts) -> SparseVector {
        SparseVector::from_pairs(
            counts
                .iter()
                .filter_map(|(term, &c)| self.index_of(term).map(|i| (i as u32, c))),
        )
    }

    /// `token<TAB>index<TAB>user_frequency`, one row per term in index order.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (i, (term, df)) in self.terms.iter().zip(&self.user_frequency).enumerate() {
            out.push_str(&format!("{term}\t{i}\t{df}\n"));
        }
        out
    }

    pub fn from_tsv(mode: FeatureMode, raw: &str) -> Result<Vocabulary> {
        let mut terms = Vec::new();
        let mut dfs = Vec::new();
        for (i, line) in raw.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [term, index, df] = fields[..] else {
                return Err(StanceError::parse(
                    i + 1,
                    "expected token<TAB>index<TAB>user_frequency",
                ));
            };
            let index: usize = index
                .parse()
                .map_err(|_| StanceError::parse(i + 1, "bad index"))?;
            if index != terms.len() {
                return Err(StanceError::parse(i + 1, "indices must be dense and in order"));
            }
            if !mode.keeps(term) {
                return Err(StanceError::parse(
                    i + 1,
                    format!("{term:?} is not an {mode} token"),
                ));
            }
            terms.push(term.to_string());
            dfs.push(
                df.parse()
                    .map_err(|_| StanceError::parse(i + 1, "bad user_frequency"))?,
            );
        }
        Ok(Vocabulary::from_parts(mode, terms, dfs))
    }

    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_tsv()).map_err(|e| StanceError::io(path, e))
    }
}

pub fn build_vocab(
    corpus: &UserCorpus,
    mode: FeatureMode,
    min_users: usize,
    use_timeline: bool,
) -> Vocabulary {
    build_vocab_from_users(corpus.users.values(), mode, min_users, use_timeline)
}

pub fn build_vocab_from_users<'a>(
    users: impl IntoIterator<Item = &'a UserRecord>,
    mode: FeatureMode,
    min_users: usize,
    use_timeline: bool,
) -> Vocabulary {
    let counts: Vec<TermCounts> = users
        .into_iter()
        .map(|u| user_term_counts(u, mode, use_timeline))
        .collect();
    Vocabulary::from_user_counts(mode, &counts, min_users)
}

pub fn user_vector(user: &UserRecord, vocab: &Vocabulary, use_timeline: bool) -> SparseVector {
    vocab.vectorize(&user_term_counts(user, vocab.mode(), use_timeline))
}

/// Positive integer counts keyed by dense vocabulary index, sorted by index.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SparseVector {
    entries: Vec<(u32, u32)>,
}

impl SparseVector {
    /// Sums counts of repeated indices and drops zeros.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, u32)>) -> SparseVector {
        let mut merged: BTreeMap<u32, u32> = BTreeMap::new();
        for (i, c) in pairs {
            *merged.entry(i).or_default() += c;
        }
        SparseVector {
            entries: merged.into_iter().filter(|&(_, c)| c > 0).collect(),
        }
    }

    pub fn entries(&self) -> &[(u32, u32)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, index: u32) -> u32 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map(|pos| self.entries[pos].1)
            .unwrap_or(0)
    }

    pub fn l1(&self) -> u64 {
        self.entries.iter().map(|&(_, c)| u64::from(c)).sum()
    }

    pub fn norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(_, c)| f64::from(c) * f64::from(c))
            .sum::<f64>()
            .sqrt()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        let mut acc = 0u64;
        while let (Some(&&(i, x)), Some(&&(j, y))) = (a.peek(), b.peek()) {
            match i.cmp(&j) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    acc += u64::from(x) * u64::from(y);
                    a.next();
                    b.next();
                }
            }
        }
        acc as f64
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries
            .iter()
            .map(|&(i, c)| dense[i as usize] * f64::from(c))
            .sum()
    }

    pub fn max_index(&self) -> Option<u32> {
        self.entries.last().map(|&(i, _)| i)
    }

    pub fn support(&self) -> BTreeSet<u32> {
        self.entries.iter().map(|&(i, _)| i).collect()
    }
}

/// Cosine of the angle between two count vectors; 0 when either is empty.
pub fn cosine_similarity(a: &SparseVector, b: &SparseVector) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    (a.dot(b) / (a.norm() * b.norm())).clamp(0.0, 1.0)
}
