//! Seeded generator of polarized corpora with known stances.
//!
//! Every user belongs to one of two sides. Retweets target an own-side account with
//! probability `polarization` and an other-side account otherwise; account popularity
//! within a side is Zipf-distributed. Tweet bodies draw from a side-specific vocabulary
//! that shares a fraction of its words with the other side.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{write_gold_labels, write_tweets, Tweet, UserCorpus, UserRecord};
use crate::error::{Result, StanceError};
use crate::labels::Class;

pub const ZIPF_EXPONENT: f64 = 1.1;
pub const SHARED_VOCAB_FRACTION: f64 = 0.2;

/// Power-law tweet counts: `P(k) ∝ k^-shape` for `k` in `min..=max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountSpec {
    pub min: usize,
    pub max: usize,
    pub shape: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub n_users_per_side: usize,
    pub n_accounts_per_side: usize,
    pub polarization: f64,
    pub tweets_per_user: CountSpec,
    pub text_vocab_per_side: usize,
    pub seed: u64,
    /// Probability that a topical tweet is a retweet.
    pub retweet_rate: f64,
    /// Topical retweets beyond this cap become original tweets.
    pub max_retweets_per_user: Option<usize>,
    pub timeline_tweets_per_user: usize,
    pub timeline_retweet_rate: f64,
    /// Prepended to user and tweet ids so several corpora can share one account space.
    pub id_prefix: String,
    pub topic: String,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            n_users_per_side: 500,
            n_accounts_per_side: 200,
            polarization: 0.9,
            tweets_per_user: CountSpec {
                min: 1,
                max: 100,
                shape: 1.0,
            },
            text_vocab_per_side: 500,
            seed: 0,
            retweet_rate: 1.0,
            max_retweets_per_user: None,
            timeline_tweets_per_user: 0,
            timeline_retweet_rate: 1.0,
            id_prefix: String::new(),
            topic: "synthetic".to_string(),
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(StanceError::InvalidParameter(m.to_string()));
        if !(0.5..=1.0).contains(&self.polarization) {
            return bad("polarization must lie in [0.5, 1]");
        }
        if self.n_users_per_side == 0 || self.n_accounts_per_side == 0 || self.text_vocab_per_side == 0 {
            return bad("user, account and vocabulary counts must be positive");
        }
        let t = &self.tweets_per_user;
        if t.min == 0 || t.max < t.min || !t.shape.is_finite() {
            return bad("tweets_per_user needs 1 <= min <= max and a finite shape");
        }
        if !(0.0..=1.0).contains(&self.retweet_rate) || !(0.0..=1.0).contains(&self.timeline_retweet_rate) {
            return bad("retweet rates must lie in [0, 1]");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthCorpus {
    /// Users with topical tweets, timeline tweets and gold labels attached.
    pub corpus: UserCorpus,
    pub account_sides: BTreeMap<String, Class>,
    /// Number of retweets (topical and timeline) that crossed sides.
    pub cross_side_retweets: usize,
    pub total_retweets: usize,
}

impl SynthCorpus {
    pub fn topical_tweets(&self) -> impl Iterator<Item = &Tweet> {
        self.corpus.users.values().flat_map(|u| &u.topical_tweets)
    }

    pub fn timeline_tweets(&self) -> impl Iterator<Item = &Tweet> {
        self.corpus.users.values().flat_map(|u| &u.timeline_tweets)
    }

    /// Writes `tweets.jsonl`, `timeline.jsonl`, `gold.tsv` and `accounts.tsv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| StanceError::io(dir, e))?;
        write_tweets(&dir.join("tweets.jsonl"), self.topical_tweets())?;
        write_tweets(&dir.join("timeline.jsonl"), self.timeline_tweets())?;
        write_gold_labels(&dir.join("gold.tsv"), &self.corpus.gold_labels())?;
        let mut accounts = String::new();
        for (name, side) in &self.account_sides {
            let _ = writeln!(accounts, "{name}\t{side}");
        }
        let path = dir.join("accounts.tsv");
        fs::write(&path, accounts).map_err(|e| StanceError::io(&path, e))
    }
}

pub fn account_name(side: Class, rank: usize) -> String {
    format!("side{side}_a{rank}")
}

fn zipf_weights(n: usize, exponent: f64) -> Vec<f64> {
    (1..=n).map(|r| (r as f64).powf(-exponent)).collect()
}

struct Side {
    accounts: Vec<String>,
    words: Vec<String>,
}

struct Sampler {
    sides: [Side; 2],
    account_dist: WeightedIndex<f64>,
    word_dist: WeightedIndex<f64>,
    polarization: f64,
}

impl Sampler {
    fn new(p: &SynthParams) -> Sampler {
        let shared = ((p.text_vocab_per_side as f64) * SHARED_VOCAB_FRACTION).round() as usize;
        let side = |class: Class| {
            let accounts = (0..p.n_accounts_per_side)
                .map(|r| account_name(class, r))
                .collect();
            // Interleave shared words so they are spread over the popularity ranks.
            let mut words = Vec::with_capacity(p.text_vocab_per_side);
            let mut next_shared = 0;
            for k in 0..p.text_vocab_per_side {
                let due = next_shared < shared && k * shared >= next_shared * p.text_vocab_per_side;
                if due {
                    words.push(format!("common{next_shared}"));
                    next_shared += 1;
                } else {
                    words.push(format!("side{class}w{k}"));
                }
            }
            Side { accounts, words }
        };
        Sampler {
            sides: [side(Class::ZERO), side(Class::ONE)],
            account_dist: WeightedIndex::new(zipf_weights(p.n_accounts_per_side, ZIPF_EXPONENT))
                .expect("positive weights"),
            word_dist: WeightedIndex::new(zipf_weights(p.text_vocab_per_side, ZIPF_EXPONENT))
                .expect("positive weights"),
            polarization: p.polarization,
        }
    }

    fn retweet_target(&self, rng: &mut ChaCha8Rng, side: Class) -> (String, bool) {
        let cross = !rng.gen_bool(self.polarization);
        let target = if cross { side.other() } else { side };
        let account = self.sides[target.index()].accounts[self.account_dist.sample(rng)].clone();
        (account, cross)
    }

    fn body(&self, rng: &mut ChaCha8Rng, side: Class) -> String {
        let len = rng.gen_range(4..=10);
        let words = &self.sides[side.index()].words;
        (0..len)
            .map(|_| words[self.word_dist.sample(rng)].as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

pub fn generate(params: &SynthParams) -> Result<SynthCorpus> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let sampler = Sampler::new(params);

    let n = params.n_users_per_side;
    let mut sides: Vec<Class> = std::iter::repeat_n(Class::ZERO, n)
        .chain(std::iter::repeat_n(Class::ONE, n))
        .collect();
    sides.shuffle(&mut rng);

    let spec = params.tweets_per_user;
    let counts: Vec<usize> = (spec.min..=spec.max).collect();
    let count_dist = WeightedIndex::new(counts.iter().map(|&k| (k as f64).powf(-spec.shape)))
        .map_err(|e| StanceError::InvalidParameter(format!("tweet count weights: {e}")))?;

    let mut corpus = UserCorpus::new(params.topic.clone());
    let mut cross_side_retweets = 0;
    let mut total_retweets = 0;
    let width = (2 * n).to_string().len();
    let prefix = &params.id_prefix;

    for (i, &side) in sides.iter().enumerate() {
        let user_id = format!("{prefix}u{i:0width$}");
        let mut user = UserRecord::new(user_id.clone());
        user.gold_label = Some(side);

        let n_topical = counts[count_dist.sample(&mut rng)];
        let mut made = 0;
        let mut tweets = Vec::with_capacity(n_topical + params.timeline_tweets_per_user);
        for k in 0..n_topical {
            let under_cap = params.max_retweets_per_user.is_none_or(|c| made < c);
            let retweet = under_cap && rng.gen_bool(params.retweet_rate);
            made += usize::from(retweet);
            tweets.push((format!("{user_id}_t{k:04}"), retweet, false));
        }
        for k in 0..params.timeline_tweets_per_user {
            let retweet = rng.gen_bool(params.timeline_retweet_rate);
            tweets.push((format!("{user_id}_l{k:04}"), retweet, true));
        }
        for (id, retweet, timeline) in tweets {
            let body = sampler.body(&mut rng, side);
            let mut tweet = if retweet {
                let (account, cross) = sampler.retweet_target(&mut rng, side);
                total_retweets += 1;
                cross_side_retweets += usize::from(cross);
                Tweet::new(id, user_id.clone(), format!("RT @{account}: {body}")).retweet_of(account)
            } else {
                Tweet::new(id, user_id.clone(), body)
            };
            tweet.topic = params.topic.clone();
            if timeline {
                user.timeline_tweets.push(tweet);
            } else {
                user.topical_tweets.push(tweet);
            }
        }
        corpus.insert(user);
    }

    let account_sides = Class::ALL
        .iter()
        .flat_map(|&c| {
            sampler.sides[c.index()]
                .accounts
                .iter()
                .map(move |a| (a.clone(), c))
        })
        .collect();
    Ok(SynthCorpus {
        corpus,
        account_sides,
        cross_side_retweets,
        total_retweets,
    })
}
