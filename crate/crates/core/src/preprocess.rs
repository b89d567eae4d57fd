//! Rule-based tweet tokenization.
//!
//! URLs and emoticons are removed, hashtags and mentions survive as single tokens,
//! punctuation becomes standalone tokens and everything is lowercased. Retweets are
//! marked with a leading `RT_@<account>` token so they never collapse into mentions.

use std::ops::Deref;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

pub const RT_PREFIX: &str = "RT_@";

const EMOTICON_DATA: &str = include_str!("../data/emoticons.txt");

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenList(Vec<String>);

impl TokenList {
    pub fn new(tokens: Vec<String>) -> TokenList {
        TokenList(tokens)
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }

    /// Space-joined form, which tokenizes back to the same list.
    pub fn join(&self) -> String {
        self.0.join(" ")
    }
}

impl Deref for TokenList {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.0
    }
}

impl<'a> IntoIterator for &'a TokenList {
    type Item = &'a String;
    type IntoIter = std::slice::Iter<'a, String>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

struct EmoticonTable {
    version: u32,
    emoticons: Vec<String>,
    ranges: Vec<(u32, u32)>,
}

fn table() -> &'static EmoticonTable {
    static TABLE: OnceLock<EmoticonTable> = OnceLock::new();
    TABLE.get_or_init(|| parse_table(EMOTICON_DATA))
}

fn parse_table(raw: &str) -> EmoticonTable {
    let mut table = EmoticonTable {
        version: 0,
        emoticons: Vec::new(),
        ranges: Vec::new(),
    };
    for line in raw.lines() {
        let line = line.trim_end();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (kind, rest) = line.split_once(' ').expect("emoticon data: malformed line");
        match kind {
            "version" => table.version = rest.parse().expect("emoticon data: bad version"),
            "emoticon" => table.emoticons.push(rest.to_string()),
            "range" => {
                let (lo, hi) = rest.split_once(' ').expect("emoticon data: bad range");
                let lo = u32::from_str_radix(lo, 16).expect("emoticon data: bad range start");
                let hi = u32::from_str_radix(hi, 16).expect("emoticon data: bad range end");
                table.ranges.push((lo, hi));
            }
            other => panic!("emoticon data: unknown record kind {other:?}"),
        }
    }
    table
}

/// Version of the bundled emoticon/emoji data.
pub fn emoticon_data_version() -> u32 {
    table().version
}

pub fn is_emoji(c: char) -> bool {
    let cp = c as u32;
    table().ranges.iter().any(|&(lo, hi)| (lo..=hi).contains(&cp))
}

pub fn is_emoticon(token: &str) -> bool {
    table().emoticons.iter().any(|e| e == token)
}

pub fn is_url(token: &str) -> bool {
    let lower = token.to_lowercase();
    lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.")
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

pub fn retweet_token(account: &str) -> String {
    format!("{RT_PREFIX}{}", account.trim_start_matches('@').to_lowercase())
}

/// Matches a leading `RT @handle:` and returns the handle.
fn retweet_prefix<'a>(raw: &[&'a str]) -> Option<&'a str> {
    let [first, second, ..] = raw else {
        return None;
    };
    if !first.eq_ignore_ascii_case("rt") {
        return None;
    }
    let handle = second.strip_prefix('@')?.strip_suffix(':')?;
    (!handle.is_empty() && handle.chars().all(is_word_char)).then_some(handle)
}

pub fn tokenize(text: &str, retweeted_user: Option<&str>) -> TokenList {
    let raw: Vec<&str> = text.split_whitespace().collect();
    let mut tokens = Vec::new();
    let prefix = retweet_prefix(&raw);
    match (retweeted_user, prefix) {
        (Some(account), _) => tokens.push(retweet_token(account)),
        (None, Some(handle)) => tokens.push(retweet_token(handle)),
        (None, None) => {}
    }
    let start = if prefix.is_some() { 2 } else { 0 };

    for piece in &raw[start..] {
        if is_url(piece) || is_emoticon(piece) {
            continue;
        }
        if let Some(rest) = piece.strip_prefix(RT_PREFIX) {
            if !rest.is_empty() && !rest.chars().any(is_emoji) {
                tokens.push(retweet_token(rest));
                continue;
            }
        }
        split_piece(&piece.to_lowercase(), &mut tokens);
    }
    TokenList(tokens)
}

fn split_piece(piece: &str, tokens: &mut Vec<String>) {
    let chars: Vec<char> = piece.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if is_emoji(c) {
            i += 1;
        } else if (c == '#' || c == '@') && chars.get(i + 1).is_some_and(|&n| is_word_char(n)) {
            let end = word_end(&chars, i + 1);
            tokens.push(chars[i..end].iter().collect());
            i = end;
        } else if is_word_char(c) {
            let end = word_end(&chars, i);
            tokens.push(chars[i..end].iter().collect());
            i = end;
        } else {
            tokens.push(c.to_string());
            i += 1;
        }
    }
}

fn word_end(chars: &[char], mut i: usize) -> usize {
    while i < chars.len() && is_word_char(chars[i]) {
        i += 1;
    }
    i
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(list: TokenList) -> Vec<String> {
        list.into_inner()
    }

    #[test]
    fn retweet_with_url() {
        let out = tokenize("RT @NRA: stand and fight https://t.co/abc", Some("NRA"));
        assert_eq!(toks(out), ["RT_@nra", "stand", "and", "fight"]);
    }

    #[test]
    fn hashtags_mentions_and_emoji() {
        let out = tokenize("Vote! #MAGA @SenatorX 😀", None);
        assert_eq!(toks(out), ["vote", "!", "#maga", "@senatorx"]);
    }

    #[test]
    fn empty_text() {
        assert!(tokenize("", None).is_empty());
        assert!(tokenize("   ", None).is_empty());
    }

    #[test]
    fn explicit_prefix_without_attribution() {
        let out = tokenize("rt @Foo_1: hello", None);
        assert_eq!(toks(out), ["RT_@foo_1", "hello"]);
        // no colon, so this is an ordinary mention
        let out = tokenize("RT @foo hello", None);
        assert_eq!(toks(out), ["rt", "@foo", "hello"]);
    }

    #[test]
    fn ascii_emoticons_and_www_links_removed() {
        let out = tokenize("great :) day www.example.com <3 ok", None);
        assert_eq!(toks(out), ["great", "day", "ok"]);
    }

    #[test]
    fn punctuation_is_split() {
        let out = tokenize("don't@x,#y", None);
        assert_eq!(toks(out), ["don", "'", "t", "@x", ",", "#y"]);
    }

    #[test]
    fn mention_and_retweet_stay_distinct() {
        let out = tokenize("@nra hi", Some("nra"));
        assert_eq!(toks(out), ["RT_@nra", "@nra", "hi"]);
    }

    #[test]
    fn data_file_is_versioned() {
        assert_eq!(emoticon_data_version(), 1);
        assert!(is_emoji('😀'));
        assert!(!is_emoji('a'));
    }

    fn tweetish() -> impl Strategy<Value = String> {
        let piece = prop_oneof![
            "[A-Za-z0-9_]{1,6}",
            "[#@][A-Za-z0-9_]{0,5}",
            "[!?.,:;'()<>=/-]{1,3}",
            Just("😀".to_string()),
            Just("https://t.co/x".to_string()),
            Just("www.a.org".to_string()),
            Just(":)".to_string()),
            Just("Élan".to_string()),
            Just("RT".to_string()),
        ];
        proptest::collection::vec(piece, 0..12).prop_map(|v| v.join(" "))
    }

    proptest! {
        #[test]
        fn retokenizing_join_is_stable(text in tweetish(), rt in proptest::option::of("[A-Za-z0-9_]{1,6}")) {
            let first = tokenize(&text, rt.as_deref());
            let second = tokenize(&first.join(), None);
            prop_assert_eq!(first.clone(), second);
            prop_assert!(first.iter().all(|t| !t.is_empty() && !is_url(t)));
        }

        #[test]
        fn retweet_tokens_only_when_marked(text in tweetish(), rt in proptest::option::of("[A-Za-z0-9_]{1,6}")) {
            let out = tokenize(&text, rt.as_deref());
            let raw: Vec<&str> = text.split_whitespace().collect();
            let marked = rt.is_some() || retweet_prefix(&raw).is_some();
            let has_rt = out.iter().any(|t| t.starts_with(RT_PREFIX));
            prop_assert_eq!(has_rt, marked);
            prop_assert_eq!(out.clone(), tokenize(&text, rt.as_deref()));
        }
    }
}
