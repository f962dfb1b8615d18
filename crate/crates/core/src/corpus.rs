//! Labeled comment datasets: the three-class label scheme, CSV ingestion and
//! persistence, class counts, and stratified splitting.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Class label. Files carry the symbolic name, reports the integer code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    // Declaration order matches code order so derived `Ord` sorts -1, 0, 1.
    Neutral,
    NonHope,
    Hope,
}

impl Label {
    /// All labels in ascending code order.
    pub const ALL: [Label; 3] = [Label::Neutral, Label::NonHope, Label::Hope];

    pub fn code(self) -> i8 {
        match self {
            Label::Hope => 1,
            Label::NonHope => 0,
            Label::Neutral => -1,
        }
    }

    pub fn from_code(code: i8) -> Option<Label> {
        match code {
            1 => Some(Label::Hope),
            0 => Some(Label::NonHope),
            -1 => Some(Label::Neutral),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Hope => "hope",
            Label::NonHope => "non_hope",
            Label::Neutral => "neutral",
        }
    }

    /// Position in [`Label::ALL`].
    pub fn index(self) -> usize {
        (self.code() + 1) as usize
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "hope" => Ok(Label::Hope),
            "non_hope" => Ok(Label::NonHope),
            "neutral" => Ok(Label::Neutral),
            other => Err(other.to_string()),
        }
    }
}

/// Label as it may appear in an ingested file. `not_english` rows are
/// dropped at load time and never reach a [`Dataset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RawLabel {
    Known(Label),
    NotEnglish,
}

impl FromStr for RawLabel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s == "not_english" {
            Ok(RawLabel::NotEnglish)
        } else {
            s.parse().map(RawLabel::Known)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub id: String,
    pub text: String,
    pub label: Option<Label>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitTag {
    Train,
    Test,
    #[default]
    Unsplit,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Dataset {
    pub examples: Vec<LabeledExample>,
    pub split: SplitTag,
}

/// Header names of the id, text and label columns. Other columns are ignored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSpec {
    pub id: String,
    pub text: String,
    pub label: String,
}

impl Default for ColumnSpec {
    fn default() -> Self {
        ColumnSpec {
            id: "id".into(),
            text: "text".into(),
            label: "label".into(),
        }
    }
}

/// Result of ingesting a file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Loaded {
    pub dataset: Dataset,
    pub dropped_not_english: usize,
}

pub fn load_dataset(path: impl AsRef<Path>, schema: &ColumnSpec) -> Result<Loaded> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let loaded = read_dataset(file, schema)?;
    if loaded.dropped_not_english > 0 {
        log::info!(
            "{}: dropped {} not_english rows",
            path.display(),
            loaded.dropped_not_english
        );
    }
    Ok(loaded)
}

pub fn read_dataset<R: Read>(reader: R, schema: &ColumnSpec) -> Result<Loaded> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let id_col = column(&schema.id).ok_or_else(|| Error::MalformedRow {
        line: 1,
        message: format!("missing column {:?}", schema.id),
    })?;
    let text_col = column(&schema.text).ok_or_else(|| Error::MalformedRow {
        line: 1,
        message: format!("missing column {:?}", schema.text),
    })?;
    let label_col = column(&schema.label);

    let mut seen = HashSet::new();
    let mut examples = Vec::new();
    let mut dropped = 0;
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let id = &record[id_col];
        if id.is_empty() {
            return Err(Error::EmptyId { line });
        }
        let label = match label_col.map(|c| &record[c]) {
            None | Some("") => None,
            Some(value) => match value.parse::<RawLabel>() {
                Ok(RawLabel::Known(label)) => Some(label),
                Ok(RawLabel::NotEnglish) => {
                    dropped += 1;
                    continue;
                }
                Err(value) => return Err(Error::UnknownLabel { value, line }),
            },
        };
        if !seen.insert(id.to_string()) {
            return Err(Error::DuplicateId {
                id: id.to_string(),
                line,
            });
        }
        examples.push(LabeledExample {
            id: id.to_string(),
            text: record[text_col].to_string(),
            label,
        });
    }
    Ok(Loaded {
        dataset: Dataset {
            examples,
            split: SplitTag::Unsplit,
        },
        dropped_not_english: dropped,
    })
}

fn csv_error(err: csv::Error) -> Error {
    let line = err.position().map_or(0, |p| p.line());
    match err.into_kind() {
        csv::ErrorKind::Io(e) => Error::io("<csv>", e),
        kind => Error::MalformedRow {
            line,
            message: format!("{kind:?}"),
        },
    }
}

pub fn save_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_dataset(ds, file).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn write_dataset<W: Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::io("<csv>", e),
        kind => Error::InvalidArgument(format!("{kind:?}")),
    };
    wtr.write_record(["id", "text", "label"]).map_err(io)?;
    for ex in &ds.examples {
        let label = ex.label.map_or("", Label::as_str);
        wtr.write_record([ex.id.as_str(), ex.text.as_str(), label])
            .map_err(io)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv>", e))
}

/// Count of labeled examples per class; every label is present in the map.
pub fn class_distribution(ds: &Dataset) -> BTreeMap<Label, usize> {
    let mut counts: BTreeMap<Label, usize> = Label::ALL.iter().map(|&l| (l, 0)).collect();
    for label in ds.examples.iter().filter_map(|ex| ex.label) {
        *counts.entry(label).or_default() += 1;
    }
    counts
}

/// Stratified split into (train, test).
///
/// Each class contributes `floor(test_fraction * n_c)` test examples; the
/// shortfall against `round(test_fraction * N)` goes one apiece to the
/// largest classes. Membership within a class is drawn from a seeded shuffle;
/// both outputs keep the input order.
pub fn split(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test_fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let mut members: BTreeMap<Label, Vec<usize>> = BTreeMap::new();
    for (i, ex) in ds.examples.iter().enumerate() {
        let label = ex.label.ok_or_else(|| {
            Error::InvalidArgument(format!("example {:?} has no label", ex.id))
        })?;
        members.entry(label).or_default().push(i);
    }
    for (&label, idx) in &members {
        if idx.len() < 2 {
            return Err(Error::TooFewMembers(
                label,
                format!("{} member(s), need at least 2 to split", idx.len()),
            ));
        }
    }

    let total = ds.examples.len();
    let target = (test_fraction * total as f64).round() as usize;
    let mut quota: BTreeMap<Label, usize> = members
        .iter()
        .map(|(&l, idx)| (l, (test_fraction * idx.len() as f64).floor() as usize))
        .collect();
    let mut remaining = target.saturating_sub(quota.values().sum());
    let mut by_size: Vec<Label> = members.keys().copied().collect();
    by_size.sort_by_key(|l| (std::cmp::Reverse(members[l].len()), *l));
    while remaining > 0 {
        let mut progressed = false;
        for l in &by_size {
            if remaining == 0 {
                break;
            }
            let q = quota.get_mut(l).expect("quota per class");
            if *q + 1 < members[l].len() {
                *q += 1;
                remaining -= 1;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_test = vec![false; total];
    for (label, idx) in &members {
        let mut shuffled = idx.clone();
        shuffled.shuffle(&mut rng);
        for &i in &shuffled[..quota[label]] {
            in_test[i] = true;
        }
    }

    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (ex, &t) in ds.examples.iter().zip(&in_test) {
        if t {
            test.push(ex.clone());
        } else {
            train.push(ex.clone());
        }
    }
    Ok((
        Dataset {
            examples: train,
            split: SplitTag::Train,
        },
        Dataset {
            examples: test,
            split: SplitTag::Test,
        },
    ))
}
