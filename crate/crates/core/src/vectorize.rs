//! TF-IDF fit/transform with max-frequency term normalization and a natural
//! log idf. Two weightings are available:
//!
//! * plain: `tf(t, d) * idf(t)`
//! * augmented: `idf(t) / |D| + tf(t, d) * idf(t)`
//!
//! where `tf(t, d) = count(t, d) / max_w count(w, d)` and
//! `idf(t) = ln(|D| / df(t))`. The augmented offset is added only for terms
//! present in the document, so vectors stay sparse.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::TokenSeq;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Plain,
    #[default]
    Augmented,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Plain => "plain",
            Variant::Augmented => "augmented",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(Variant::Plain),
            "augmented" => Ok(Variant::Augmented),
            other => Err(Error::InvalidArgument(format!("unknown variant {other:?}"))),
        }
    }
}

/// Sparse vector with strictly increasing indices and no stored zeros.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector<T> {
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> SparseVector<T> {
    pub fn new() -> Self {
        SparseVector {
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from arbitrary pairs: sorts by index, sums duplicates, and drops
    /// exact zeros.
    pub fn from_pairs(mut pairs: Vec<(usize, T)>) -> Self {
        pairs.sort_by_key(|&(i, _)| i);
        let mut indices: Vec<usize> = Vec::with_capacity(pairs.len());
        let mut values: Vec<T> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            if indices.last() == Some(&i) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(i);
                values.push(v);
            }
        }
        let (indices, values) = indices
            .into_iter()
            .zip(values)
            .filter(|&(_, v)| v != T::zero())
            .unzip();
        SparseVector { indices, values }
    }

    pub fn from_dense(dense: &[T]) -> Self {
        let (indices, values) = dense
            .iter()
            .enumerate()
            .filter(|&(_, &v)| v != T::zero())
            .map(|(i, &v)| (i, v))
            .unzip();
        SparseVector { indices, values }
    }

    pub fn to_dense(&self, dim: usize) -> Vec<T> {
        let mut out = vec![T::zero(); dim];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn get(&self, index: usize) -> T {
        self.indices
            .binary_search(&index)
            .map_or(T::zero(), |p| self.values[p])
    }

    /// Largest stored index plus one, or 0 when empty.
    pub fn min_dim(&self) -> usize {
        self.indices.last().map_or(0, |&i| i + 1)
    }

    pub fn dot(&self, dense: &[T]) -> T {
        self.iter().map(|(i, v)| v * dense[i]).sum()
    }
}

/// Term index and document frequencies of a fitted corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    doc_freq: Vec<usize>,
    lookup: HashMap<String, usize>,
    corpus_size: usize,
}

impl Vocabulary {
    /// Terms are indexed in lexicographic order.
    fn from_counts(mut counts: Vec<(String, usize)>, corpus_size: usize) -> Self {
        counts.sort();
        let lookup = counts
            .iter()
            .enumerate()
            .map(|(i, (t, _))| (t.clone(), i))
            .collect();
        let (terms, doc_freq) = counts.into_iter().unzip();
        Vocabulary {
            terms,
            doc_freq,
            lookup,
            corpus_size,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index(&self, term: &str) -> Option<usize> {
        self.lookup.get(term).copied()
    }

    pub fn term(&self, index: usize) -> &str {
        &self.terms[index]
    }

    pub fn doc_freq(&self, index: usize) -> usize {
        self.doc_freq[index]
    }

    pub fn corpus_size(&self) -> usize {
        self.corpus_size
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TfidfModel<T> {
    vocab: Vocabulary,
    variant: Variant,
    idf: Vec<T>,
}

/// `ln(|D| / df)`.
pub fn idf<T: Scalar>(corpus_size: usize, doc_freq: usize) -> T {
    (T::of_usize(corpus_size) / T::of_usize(doc_freq)).ln()
}

/// `count(term) / max count` within `doc`; zero when the term is absent.
pub fn term_frequency<T: Scalar>(doc: &[String], term: &str) -> Result<T> {
    if doc.is_empty() {
        return Err(Error::EmptyDocument);
    }
    let counts = raw_counts(doc);
    let max = counts.values().copied().max().unwrap_or(0);
    let count = counts.get(term).copied().unwrap_or(0);
    Ok(T::of_usize(count) / T::of_usize(max))
}

fn raw_counts(doc: &[String]) -> HashMap<&str, usize> {
    let mut counts = HashMap::new();
    for t in doc {
        *counts.entry(t.as_str()).or_insert(0) += 1;
    }
    counts
}

impl<T: Scalar> TfidfModel<T> {
    pub fn fit(docs: &[TokenSeq], variant: Variant) -> Result<Self> {
        if docs.iter().all(|d| d.is_empty()) {
            return Err(Error::EmptyCorpus);
        }
        let mut df: HashMap<&str, usize> = HashMap::new();
        for doc in docs {
            for term in raw_counts(doc).into_keys() {
                *df.entry(term).or_insert(0) += 1;
            }
        }
        let counts = df.into_iter().map(|(t, n)| (t.to_string(), n)).collect();
        Ok(Self::from_vocabulary(
            Vocabulary::from_counts(counts, docs.len()),
            variant,
        ))
    }

    pub fn from_vocabulary(vocab: Vocabulary, variant: Variant) -> Self {
        let idf = vocab
            .doc_freq
            .iter()
            .map(|&df| idf(vocab.corpus_size, df))
            .collect();
        TfidfModel {
            vocab,
            variant,
            idf,
        }
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn dim(&self) -> usize {
        self.vocab.len()
    }

    pub fn idf(&self, term: &str) -> Option<T> {
        self.vocab.index(term).map(|i| self.idf[i])
    }

    pub fn transform(&self, doc: &[String]) -> SparseVector<T> {
        let counts = raw_counts(doc);
        let Some(max) = counts.values().copied().max() else {
            return SparseVector::new();
        };
        let max = T::of_usize(max);
        let corpus_size = T::of_usize(self.vocab.corpus_size);
        let pairs = counts
            .into_iter()
            .filter_map(|(term, count)| {
                let i = self.vocab.index(term)?;
                let idf = self.idf[i];
                let weight = T::of_usize(count) / max * idf;
                let weight = match self.variant {
                    Variant::Plain => weight,
                    Variant::Augmented => idf / corpus_size + weight,
                };
                Some((i, weight))
            })
            .collect();
        SparseVector::from_pairs(pairs)
    }

    pub fn transform_all(&self, docs: &[TokenSeq]) -> Vec<SparseVector<T>> {
        docs.iter().map(|d| self.transform(d)).collect()
    }

    /// Writes `#corpus_size=<N> variant=<v>` then `term<TAB>index<TAB>doc_freq`
    /// lines in index order.
    pub fn write_vocabulary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "#corpus_size={} variant={}",
            self.vocab.corpus_size, self.variant
        )?;
        for (i, (term, df)) in self.vocab.terms.iter().zip(&self.vocab.doc_freq).enumerate() {
            writeln!(w, "{term}\t{i}\t{df}")?;
        }
        Ok(())
    }

    pub fn read_vocabulary<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .transpose()
            .map_err(|e| Error::io("<vocabulary>", e))?
            .ok_or_else(|| Error::format(1, "missing header"))?;
        let (corpus_size, variant) = parse_vocab_header(&header)?;
        let mut terms = Vec::new();
        let mut doc_freq = Vec::new();
        for (n, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io("<vocabulary>", e))?;
            let lineno = n + 2;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [term, index, df] = fields[..] else {
                return Err(Error::format(lineno, "expected term<TAB>index<TAB>doc_freq"));
            };
            let index: usize = index
                .parse()
                .map_err(|_| Error::format(lineno, "bad index"))?;
            if index != terms.len() {
                return Err(Error::format(lineno, "indices must be 0..V-1 in order"));
            }
            let df: usize = df.parse().map_err(|_| Error::format(lineno, "bad doc_freq"))?;
            if df == 0 || df > corpus_size {
                return Err(Error::format(lineno, "doc_freq outside 1..=corpus_size"));
            }
            terms.push(term.to_string());
            doc_freq.push(df);
        }
        let lookup = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect::<HashMap<_, _>>();
        if lookup.len() != terms.len() {
            return Err(Error::format(0, "duplicate term"));
        }
        let vocab = Vocabulary {
            terms,
            doc_freq,
            lookup,
            corpus_size,
        };
        Ok(Self::from_vocabulary(vocab, variant))
    }
}

fn parse_vocab_header(header: &str) -> Result<(usize, Variant)> {
    let body = header
        .strip_prefix('#')
        .ok_or_else(|| Error::format(1, "header must start with '#'"))?;
    let (mut size, mut variant) = (None, None);
    for field in body.split_whitespace() {
        match field.split_once('=') {
            Some(("corpus_size", v)) => size = v.parse::<usize>().ok(),
            Some(("variant", v)) => variant = Some(v.parse::<Variant>()?),
            _ => return Err(Error::format(1, format!("unexpected header field {field:?}"))),
        }
    }
    match (size, variant) {
        (Some(n), Some(v)) if n > 0 => Ok((n, v)),
        _ => Err(Error::format(1, "header needs corpus_size=<N> variant=<v>")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs(raw: &[&[&str]]) -> Vec<TokenSeq> {
        raw.iter().map(|d| TokenSeq::from(*d)).collect()
    }

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn idf_examples() {
        let corpus = docs(&[&["hope", "wins", "hope"], &["hate", "wins"]]);
        let m = TfidfModel::<f64>::fit(&corpus, Variant::Plain).unwrap();
        assert!((m.idf("hope").unwrap() - std::f64::consts::LN_2).abs() < 1e-6);
        assert_eq!(m.idf("wins").unwrap(), 0.0);
        assert!((m.idf("hate").unwrap() - LN2).abs() < 1e-15);

        let single = docs(&[&["a", "b", "a"]]);
        let m = TfidfModel::<f64>::fit(&single, Variant::Plain).unwrap();
        assert_eq!(m.idf("a"), Some(0.0));
        assert_eq!(m.idf("b"), Some(0.0));

        let everywhere = docs(&[&["x"], &["x", "y"], &["x"], &["x", "z"]]);
        let m = TfidfModel::<f64>::fit(&everywhere, Variant::Plain).unwrap();
        assert_eq!(m.idf("x"), Some(0.0));
    }

    #[test]
    fn fit_rejects_empty_corpus() {
        assert!(matches!(
            TfidfModel::<f64>::fit(&docs(&[&[], &[]]), Variant::Plain),
            Err(Error::EmptyCorpus)
        ));
        assert!(TfidfModel::<f64>::fit(&[], Variant::Plain).is_err());
    }

    #[test]
    fn term_frequency_examples() {
        let d = TokenSeq::from(&["hope", "wins", "hope"][..]);
        assert_eq!(term_frequency::<f64>(&d, "hope").unwrap(), 1.0);
        assert_eq!(term_frequency::<f64>(&d, "wins").unwrap(), 0.5);
        assert_eq!(term_frequency::<f64>(&d, "hate").unwrap(), 0.0);
        assert!(matches!(term_frequency::<f64>(&[], "x"), Err(Error::EmptyDocument)));
    }

    #[test]
    fn transform_examples() {
        let corpus = docs(&[&["hope", "wins", "hope"], &["hate", "wins"]]);
        let plain = TfidfModel::<f64>::fit(&corpus, Variant::Plain).unwrap();
        let v = plain.transform(&corpus[0]);
        let hope = plain.vocabulary().index("hope").unwrap();
        assert!((v.get(hope) - std::f64::consts::LN_2).abs() < 1e-6);
        // weight(wins) = 0.5 * 0 is dropped.
        assert_eq!(v.nnz(), 1);

        let aug = TfidfModel::<f64>::fit(&corpus, Variant::Augmented).unwrap();
        let v = aug.transform(&corpus[0]);
        assert!((v.get(hope) - 1.039721).abs() < 1e-6);
        assert!((v.get(hope) - (LN2 / 2.0 + LN2)).abs() < 1e-15);

        let oov = TokenSeq::from(&["zzz", "qqq"][..]);
        assert!(aug.transform(&oov).is_empty());
        assert!(aug.transform(&TokenSeq::default()).is_empty());
    }

    #[test]
    fn out_of_vocabulary_tokens_still_count_toward_max() {
        let corpus = docs(&[&["a"], &["b"]]);
        let m = TfidfModel::<f64>::fit(&corpus, Variant::Plain).unwrap();
        let v = m.transform(&TokenSeq::from(&["a", "z", "z"][..]));
        assert_eq!(v.get(0), 0.5 * LN2);
    }

    #[test]
    fn vocabulary_file_round_trip() {
        let corpus = docs(&[&["hope", "wins", "hope"], &["hate", "wins"], &["love"]]);
        let m = TfidfModel::<f64>::fit(&corpus, Variant::Augmented).unwrap();
        let mut buf = Vec::new();
        m.write_vocabulary(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("#corpus_size=3 variant=augmented\n"));
        assert!(text.contains("hope\t1\t1\n"));
        let back = TfidfModel::<f64>::read_vocabulary(buf.as_slice()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn vocabulary_file_rejects_gaps() {
        let bad = "#corpus_size=2 variant=plain\na\t0\t1\nb\t2\t1\n";
        assert!(TfidfModel::<f64>::read_vocabulary(bad.as_bytes()).is_err());
        let bad = "#corpus_size=2 variant=plain\na\t0\t3\n";
        assert!(TfidfModel::<f64>::read_vocabulary(bad.as_bytes()).is_err());
    }

    #[test]
    fn sparse_vector_invariants() {
        let v = SparseVector::from_pairs(vec![(3, 1.0), (1, 0.0), (3, 2.0), (0, 0.5)]);
        assert_eq!(v.indices(), &[0, 3]);
        assert_eq!(v.values(), &[0.5, 3.0]);
        assert_eq!(SparseVector::from_dense(&v.to_dense(5)), v);
    }

    #[test]
    fn works_in_f32() {
        let corpus = docs(&[&["hope", "wins", "hope"], &["hate", "wins"]]);
        let m = TfidfModel::<f32>::fit(&corpus, Variant::Augmented).unwrap();
        let v = m.transform(&corpus[0]);
        assert!((v.get(m.vocabulary().index("hope").unwrap()) - 1.039721f32).abs() < 1e-6);
    }
}
