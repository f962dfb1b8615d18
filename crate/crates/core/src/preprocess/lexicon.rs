use std::collections::{BTreeMap, BTreeSet};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const SHIPPED_LEXICON: &str = include_str!("../../data/contractions.tsv");
const SHIPPED_STOPLIST: &str = include_str!("../../data/stopwords.txt");

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Whole-token contraction and shorthand expansions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContractionLexicon {
    entries: BTreeMap<String, String>,
    digest: String,
}

impl ContractionLexicon {
    /// Parses `contraction<TAB>expansion` lines; `#` starts a comment line.
    /// Expansions are lowercased since lookup happens after lowercasing.
    pub fn parse(source: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, line) in source.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, expansion) = line
                .split_once('\t')
                .ok_or_else(|| Error::format(n + 1, "expected contraction<TAB>expansion"))?;
            if key.is_empty() || key.chars().any(char::is_whitespace) {
                return Err(Error::format(n + 1, "contraction must be a single token"));
            }
            if key.to_lowercase() != key {
                return Err(Error::format(n + 1, "contraction must be lowercase"));
            }
            let expansion = expansion.trim().to_lowercase();
            if expansion.is_empty() {
                return Err(Error::format(n + 1, "empty expansion"));
            }
            entries.insert(key.to_string(), expansion);
        }
        Ok(ContractionLexicon {
            entries,
            digest: sha256_hex(source.as_bytes()),
        })
    }

    pub fn shipped() -> Self {
        Self::parse(SHIPPED_LEXICON).expect("shipped lexicon parses")
    }

    pub fn get(&self, token: &str) -> Option<&str> {
        self.entries.get(token).map(String::as_str)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.entries.contains_key(token)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// SHA-256 of the source text.
    pub fn digest(&self) -> &str {
        &self.digest
    }
}

/// Set of tokens removed after tokenization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stoplist {
    words: BTreeSet<String>,
    digest: String,
}

impl Stoplist {
    pub fn parse(source: &str) -> Result<Self> {
        let mut words = BTreeSet::new();
        for (n, line) in source.lines().enumerate() {
            let word = line.trim();
            if word.is_empty() || word.starts_with('#') {
                continue;
            }
            if word.chars().any(|c| !c.is_alphanumeric()) || word.to_lowercase() != word {
                return Err(Error::format(n + 1, "stopword must be a lowercase alphanumeric token"));
            }
            words.insert(word.to_string());
        }
        Ok(Stoplist {
            words,
            digest: sha256_hex(source.as_bytes()),
        })
    }

    pub fn shipped() -> Self {
        Self::parse(SHIPPED_STOPLIST).expect("shipped stoplist parses")
    }

    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let words: BTreeSet<String> = words.into_iter().map(Into::into).collect();
        let joined = words.iter().cloned().collect::<Vec<_>>().join("\n");
        Stoplist {
            digest: sha256_hex(joined.as_bytes()),
            words,
        }
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn digest(&self) -> &str {
        &self.digest
    }
}
