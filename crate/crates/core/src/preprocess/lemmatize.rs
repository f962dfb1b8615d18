use std::collections::{HashMap, HashSet};

use super::lexicon::sha256_hex;
use super::TokenSeq;
use crate::error::{Error, Result};

const SHIPPED_RULES: &str = include_str!("../../data/suffix_rules.tsv");

/// Shortest lemma a suffix rule may produce, in characters.
pub const MIN_LEMMA_CHARS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
struct SuffixRule {
    suffix: String,
    replacement: String,
}

impl SuffixRule {
    /// A rule that maps its suffix to itself stops further rewriting.
    fn is_guard(&self) -> bool {
        self.suffix == self.replacement
    }
}

/// Ordered suffix-rewrite rules plus a whole-token exception table.
///
/// Rules are applied repeatedly until the token is stable, so the output is
/// always a fixed point. A rule is skipped when its result would fall under
/// [`MIN_LEMMA_CHARS`]. Every non-guard rule shortens the token, which bounds
/// the rewriting loop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuffixRules {
    rules: Vec<SuffixRule>,
    exceptions: HashMap<String, String>,
    terminal: HashSet<String>,
    digest: String,
}

impl SuffixRules {
    /// Parses `suffix<TAB>replacement` lines in priority order. Lines of the
    /// form `=token<TAB>lemma` are exceptions.
    pub fn parse(source: &str) -> Result<Self> {
        let mut rules = Vec::new();
        let mut exceptions = HashMap::new();
        for (n, raw) in source.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (left, right) = line
                .split_once('\t')
                .ok_or_else(|| Error::format(n + 1, "expected suffix<TAB>replacement"))?;
            let valid = |s: &str| s.chars().all(|c| c.is_alphanumeric() && !c.is_uppercase());
            if let Some(token) = left.strip_prefix('=') {
                if token.is_empty() || right.is_empty() || !valid(token) || !valid(right) {
                    return Err(Error::format(n + 1, "invalid exception entry"));
                }
                exceptions.insert(token.to_string(), right.to_string());
                continue;
            }
            if left.is_empty() || !valid(left) || !valid(right) {
                return Err(Error::format(n + 1, "suffix rules use lowercase alphanumerics"));
            }
            if left != right && right.len() >= left.len() {
                return Err(Error::format(n + 1, "replacement must be shorter than its suffix"));
            }
            rules.push(SuffixRule {
                suffix: left.to_string(),
                replacement: right.to_string(),
            });
        }
        let terminal = exceptions.values().cloned().collect();
        Ok(SuffixRules {
            rules,
            exceptions,
            terminal,
            digest: sha256_hex(source.as_bytes()),
        })
    }

    pub fn shipped() -> Self {
        Self::parse(SHIPPED_RULES).expect("shipped suffix rules parse")
    }

    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn lemma(&self, token: &str) -> String {
        self.lemma_with(token, |_| true)
    }

    /// Like [`lemma`](Self::lemma), but a rewrite is only taken when
    /// `accept` approves the candidate.
    pub fn lemma_with(&self, token: &str, accept: impl Fn(&str) -> bool) -> String {
        let mut current = token.to_string();
        'rewrite: loop {
            if let Some(lemma) = self.exceptions.get(&current) {
                return lemma.clone();
            }
            if self.terminal.contains(&current) {
                return current;
            }
            for rule in &self.rules {
                let Some(stem) = current.strip_suffix(rule.suffix.as_str()) else {
                    continue;
                };
                if rule.is_guard() {
                    return current;
                }
                let candidate = format!("{stem}{}", rule.replacement);
                if candidate.chars().count() < MIN_LEMMA_CHARS || !accept(&candidate) {
                    continue;
                }
                current = candidate;
                continue 'rewrite;
            }
            return current;
        }
    }
}

pub fn lemmatize(tokens: &TokenSeq, rules: &SuffixRules) -> TokenSeq {
    tokens.iter().map(|t| rules.lemma(t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(words: &[&str]) -> TokenSeq {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn shipped_examples() {
        let rules = SuffixRules::shipped();
        assert_eq!(lemmatize(&seq(&["totally"]), &rules), seq(&["total"]));
        assert_eq!(lemmatize(&seq(&["total"]), &rules), seq(&["total"]));
        assert_eq!(lemmatize(&seq(&["totalized"]), &rules), seq(&["total"]));
        assert_eq!(
            lemmatize(&seq(&["cats", "running"]), &rules),
            seq(&["cat", "run"])
        );
    }

    #[test]
    fn guards_and_length_floor() {
        let rules = SuffixRules::shipped();
        assert_eq!(rules.lemma("class"), "class");
        assert_eq!(rules.lemma("classes"), "class");
        assert_eq!(rules.lemma("virus"), "virus");
        assert_eq!(rules.lemma("thing"), "thing");
        assert_eq!(rules.lemma("lies"), "lie");
        assert_eq!(rules.lemma("cities"), "city");
        assert_eq!(rules.lemma("children"), "child");
        assert_eq!(rules.lemma("hopeful"), "hope");
        assert_eq!(rules.lemma("carefully"), "care");
    }

    #[test]
    fn output_is_a_fixed_point() {
        let rules = SuffixRules::shipped();
        for w in [
            "lovingly", "happiness", "hopes", "believed", "stopped", "organizations",
            "democrats", "liberals", "matters", "lives", "beautiful",
        ] {
            let once = rules.lemma(w);
            assert_eq!(rules.lemma(&once), once, "{w}");
            assert!(once.chars().count() >= MIN_LEMMA_CHARS.min(w.chars().count()));
        }
    }

    #[test]
    fn accept_hook_blocks_candidates() {
        let rules = SuffixRules::shipped();
        assert_eq!(rules.lemma_with("wills", |c| c != "will"), "wills");
    }

    #[test]
    fn rejects_lengthening_rule() {
        assert!(SuffixRules::parse("s\tss").is_err());
        assert!(SuffixRules::parse("s").is_err());
    }
}
