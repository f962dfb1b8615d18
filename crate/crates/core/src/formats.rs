//! Tab-separated intermediate files passed between CLI steps.
//!
//! * tokens: `id<TAB>label<TAB>space-joined tokens`
//! * vectors: `#dim=<V>` header, then `id<TAB>label<TAB>index:weight ...`
//! * predictions: `id<TAB>truth<TAB>predicted`
//!
//! Labels are written by name (`hope`, `non_hope`, `neutral`); an empty
//! field means unlabeled. Ids may not contain tabs or line breaks.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::preprocess::TokenSeq;
use crate::scalar::Scalar;
use crate::vectorize::SparseVector;

#[derive(Debug, Clone, PartialEq)]
pub struct Row<P> {
    pub id: String,
    pub label: Option<Label>,
    pub payload: P,
}

pub type TokenRow = Row<TokenSeq>;
pub type VectorRow<T> = Row<SparseVector<T>>;

#[derive(Debug, Clone, PartialEq)]
pub struct VectorFile<T> {
    pub dim: usize,
    pub rows: Vec<VectorRow<T>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    pub id: String,
    pub truth: Option<Label>,
    pub predicted: Label,
}

fn label_field(label: Option<Label>) -> String {
    label.map(|l| l.as_str().to_string()).unwrap_or_default()
}

fn parse_label(field: &str, line: usize) -> Result<Option<Label>> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse::<Label>()
        .map(Some)
        .map_err(|_| Error::format(line, format!("bad label {field:?}")))
}

fn check_id(id: &str) -> Result<()> {
    if id.is_empty() || id.contains(['\t', '\n', '\r']) {
        return Err(Error::InvalidArgument(format!("id {id:?} cannot be written to a tab-separated file")));
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn split3(line: &str, lineno: usize) -> Result<(&str, &str, &str)> {
    let mut parts = line.splitn(3, '\t');
    match (parts.next(), parts.next(), parts.next()) {
        (Some(a), Some(b), Some(c)) => Ok((a, b, c)),
        _ => Err(Error::format(lineno, "expected three tab-separated fields")),
    }
}

pub fn write_tokens<W: Write>(rows: &[TokenRow], mut w: W) -> Result<()> {
    for row in rows {
        check_id(&row.id)?;
        writeln!(w, "{}\t{}\t{}", row.id, label_field(row.label), row.payload.joined())
            .map_err(|e| Error::io("<tokens>", e))?;
    }
    Ok(())
}

pub fn read_tokens<R: BufRead>(r: R) -> Result<Vec<TokenRow>> {
    let mut rows = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<tokens>", e))?;
        if line.is_empty() {
            continue;
        }
        let (id, label, tokens) = split3(&line, n + 1)?;
        rows.push(Row {
            id: id.to_string(),
            label: parse_label(label, n + 1)?,
            payload: tokens.split_whitespace().map(str::to_string).collect(),
        });
    }
    Ok(rows)
}

pub fn save_tokens(rows: &[TokenRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    write_tokens(rows, &mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_tokens(path: impl AsRef<Path>) -> Result<Vec<TokenRow>> {
    read_tokens(open(path.as_ref())?)
}

pub fn write_vectors<T: Scalar, W: Write>(file: &VectorFile<T>, mut w: W) -> Result<()> {
    let io = |e| Error::io("<vectors>", e);
    writeln!(w, "#dim={}", file.dim).map_err(io)?;
    for row in &file.rows {
        check_id(&row.id)?;
        let pairs: Vec<String> = row.payload.iter().map(|(i, v)| format!("{i}:{v}")).collect();
        writeln!(w, "{}\t{}\t{}", row.id, label_field(row.label), pairs.join(" ")).map_err(io)?;
    }
    Ok(())
}

pub fn read_vectors<T: Scalar, R: BufRead>(r: R) -> Result<VectorFile<T>> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .transpose()
        .map_err(|e| Error::io("<vectors>", e))?
        .ok_or_else(|| Error::format(1, "missing #dim header"))?;
    let dim: usize = header
        .strip_prefix("#dim=")
        .and_then(|d| d.trim().parse().ok())
        .ok_or_else(|| Error::format(1, "expected #dim=<V>"))?;
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        let lineno = n + 2;
        let line = line.map_err(|e| Error::io("<vectors>", e))?;
        if line.is_empty() {
            continue;
        }
        let (id, label, pairs) = split3(&line, lineno)?;
        let mut entries = Vec::new();
        for pair in pairs.split_whitespace() {
            let parsed = pair
                .split_once(':')
                .and_then(|(i, v)| Some((i.parse::<usize>().ok()?, v.parse::<T>().ok()?)));
            let (index, value) = parsed.ok_or_else(|| Error::format(lineno, format!("bad entry {pair:?}")))?;
            if index >= dim {
                return Err(Error::FeatureOutOfRange { index, dim });
            }
            entries.push((index, value));
        }
        rows.push(Row {
            id: id.to_string(),
            label: parse_label(label, lineno)?,
            payload: SparseVector::from_pairs(entries),
        });
    }
    Ok(VectorFile { dim, rows })
}

pub fn save_vectors<T: Scalar>(file: &VectorFile<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    write_vectors(file, &mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_vectors<T: Scalar>(path: impl AsRef<Path>) -> Result<VectorFile<T>> {
    read_vectors(open(path.as_ref())?)
}

pub fn write_predictions<W: Write>(rows: &[Prediction], mut w: W) -> Result<()> {
    for row in rows {
        check_id(&row.id)?;
        writeln!(w, "{}\t{}\t{}", row.id, label_field(row.truth), row.predicted)
            .map_err(|e| Error::io("<predictions>", e))?;
    }
    Ok(())
}

pub fn read_predictions<R: BufRead>(r: R) -> Result<Vec<Prediction>> {
    let mut rows = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<predictions>", e))?;
        if line.is_empty() {
            continue;
        }
        let (id, truth, predicted) = split3(&line, n + 1)?;
        rows.push(Prediction {
            id: id.to_string(),
            truth: parse_label(truth, n + 1)?,
            predicted: parse_label(predicted, n + 1)?
                .ok_or_else(|| Error::format(n + 1, "missing predicted label"))?,
        });
    }
    Ok(rows)
}

pub fn save_predictions(rows: &[Prediction], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    write_predictions(rows, &mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_predictions(path: impl AsRef<Path>) -> Result<Vec<Prediction>> {
    read_predictions(open(path.as_ref())?)
}
