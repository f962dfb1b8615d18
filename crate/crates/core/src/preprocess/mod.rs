//! Comment normalization: unwanted-text removal, lowercasing, contraction
//! expansion, tokenization with stopword removal, and lemmatization.
//!
//! Punctuation survives [`clean`] and disappears at tokenization, because
//! contraction lookup needs the apostrophes.

mod lemmatize;
mod lexicon;

use std::ops::Deref;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

pub use lemmatize::{lemmatize, SuffixRules, MIN_LEMMA_CHARS};
pub use lexicon::{sha256_hex as lexicon_digest, ContractionLexicon, Stoplist};

/// Ordered lowercase alphanumeric tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSeq(Vec<String>);

impl TokenSeq {
    pub fn new(tokens: Vec<String>) -> Self {
        TokenSeq(tokens)
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }

    /// Space-joined form, as stored in token files.
    pub fn joined(&self) -> String {
        self.0.join(" ")
    }
}

impl Deref for TokenSeq {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.0
    }
}

impl FromIterator<String> for TokenSeq {
    fn from_iter<I: IntoIterator<Item = String>>(iter: I) -> Self {
        TokenSeq(iter.into_iter().collect())
    }
}

impl From<Vec<String>> for TokenSeq {
    fn from(v: Vec<String>) -> Self {
        TokenSeq(v)
    }
}

impl<'a> From<&[&'a str]> for TokenSeq {
    fn from(v: &[&'a str]) -> Self {
        TokenSeq(v.iter().map(|s| s.to_string()).collect())
    }
}

static MENTION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"@\w+").unwrap());
static URL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)(?:https?://|\bwww\.)\S+").unwrap());

/// Decodes HTML entities, strips @-mentions and URLs, collapses whitespace.
pub fn clean(text: &str) -> String {
    let decoded = html_escape::decode_html_entities(text);
    let no_urls = URL.replace_all(&decoded, " ");
    let no_mentions = MENTION.replace_all(&no_urls, " ");
    no_mentions.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn lowercase(text: &str) -> String {
    text.to_lowercase()
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || is_apostrophe(c)
}

/// Replaces tokens with their lexicon expansions.
///
/// A token is a maximal run of alphanumerics and apostrophes, so trailing
/// punctuation ("omg!!!") does not hide an entry. Runs without a whole-run
/// entry fall back to expanding each apostrophe-separated piece ("ppl's").
/// Typographic apostrophes match as ASCII ones.
pub fn expand_contractions(text: &str, lex: &ContractionLexicon) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find(is_word_char) {
        out.push_str(&rest[..start]);
        rest = &rest[start..];
        let end = rest.find(|c: char| !is_word_char(c)).unwrap_or(rest.len());
        expand_run(&rest[..end], lex, &mut out);
        rest = &rest[end..];
    }
    out.push_str(rest);
    out
}

fn expand_run(run: &str, lex: &ContractionLexicon, out: &mut String) {
    let core = run.trim_matches(is_apostrophe);
    let lead = &run[..run.len() - run.trim_start_matches(is_apostrophe).len()];
    let trail = &run[lead.len() + core.len()..];
    let key = core.replace('\u{2019}', "'");
    out.push_str(lead);
    if let Some(expansion) = lex.get(&key) {
        out.push_str(expansion);
    } else {
        let mut pieces = core.split(is_apostrophe).peekable();
        let mut seps = core.matches(is_apostrophe);
        while let Some(piece) = pieces.next() {
            out.push_str(lex.get(piece).unwrap_or(piece));
            if pieces.peek().is_some() {
                out.push_str(seps.next().unwrap_or("'"));
            }
        }
    }
    out.push_str(trail);
}

/// Splits on non-alphanumeric characters and drops stopwords.
pub fn tokenize_and_filter(text: &str, stoplist: &Stoplist) -> TokenSeq {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty() && !stoplist.contains(t))
        .map(str::to_string)
        .collect()
}

/// Lexicon, stoplist and lemmatization rules for the full pipeline.
#[derive(Debug, Clone)]
pub struct Preprocessor {
    pub lexicon: ContractionLexicon,
    pub stoplist: Stoplist,
    pub rules: SuffixRules,
}

impl Preprocessor {
    pub fn new(lexicon: ContractionLexicon, stoplist: Stoplist, rules: SuffixRules) -> Self {
        Preprocessor {
            lexicon,
            stoplist,
            rules,
        }
    }

    /// The data files bundled with the crate.
    pub fn shipped() -> Self {
        Self::new(
            ContractionLexicon::shipped(),
            Stoplist::shipped(),
            SuffixRules::shipped(),
        )
    }

    /// clean, lowercase, expand, tokenize and filter, lemmatize.
    ///
    /// A lemma that would be a stopword or a lexicon key is not taken, which
    /// keeps the pipeline idempotent on its own joined output.
    pub fn process(&self, text: &str) -> TokenSeq {
        let cleaned = clean(text);
        let lowered = lowercase(&cleaned);
        let expanded = expand_contractions(&lowered, &self.lexicon);
        let tokens = tokenize_and_filter(&expanded, &self.stoplist);
        tokens
            .iter()
            .map(|t| {
                self.rules.lemma_with(t, |candidate| {
                    !self.stoplist.contains(candidate) && !self.lexicon.contains(candidate)
                })
            })
            .collect()
    }
}

pub fn preprocess_pipeline(
    text: &str,
    lex: &ContractionLexicon,
    stoplist: &Stoplist,
    rules: &SuffixRules,
) -> TokenSeq {
    Preprocessor::new(lex.clone(), stoplist.clone(), rules.clone()).process(text)
}
