//! Text model files.
//!
//! ```text
//! model=<nb|lr|svm> version=1
//! scalar=<f32|f64>
//! classes=<label names in code order, space separated>
//! features=<V>
//! <hyperparameter>=<value>
//! ...
//! table <name> <rows> <cols>
//! <cols space-separated values>      (one line per row)
//! ```
//!
//! Values use the shortest representation that parses back to the same
//! float, so a reloaded model predicts bit-identically.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{ClassifierModel, LrModel, ModelKind, NbModel, SvmModel, KERNEL};

pub const FORMAT_VERSION: u32 = 1;

fn table<T: Scalar>(out: &mut String, name: &str, rows: &[Vec<T>]) {
    let cols = rows.first().map_or(0, Vec::len);
    writeln!(out, "table {name} {} {cols}", rows.len()).unwrap();
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(" ")).unwrap();
    }
}

pub(super) fn write_model<T: Scalar>(model: &ClassifierModel<T>) -> String {
    let mut out = String::new();
    let classes = model.classes();
    writeln!(out, "model={} version={FORMAT_VERSION}", model.kind()).unwrap();
    writeln!(out, "scalar={}", T::NAME).unwrap();
    let names: Vec<&str> = classes.iter().map(|l| l.as_str()).collect();
    writeln!(out, "classes={}", names.join(" ")).unwrap();
    match model {
        ClassifierModel::Nb(m) => {
            writeln!(out, "features={}", m.n_features).unwrap();
            writeln!(out, "alpha={}", m.alpha).unwrap();
            table(&mut out, "log_prior", std::slice::from_ref(&m.log_prior));
            table(&mut out, "log_likelihood", &m.log_likelihood);
        }
        ClassifierModel::Lr(m) => {
            writeln!(out, "features={}", m.n_features()).unwrap();
            writeln!(out, "penalty=l2").unwrap();
            writeln!(out, "c={}", m.c).unwrap();
            writeln!(out, "max_iter={}", m.max_iter).unwrap();
            writeln!(out, "tol={}", m.tol).unwrap();
            writeln!(out, "iterations={}", m.iterations).unwrap();
            table(&mut out, "weights", &m.weights);
            table(&mut out, "bias", std::slice::from_ref(&m.bias));
        }
        ClassifierModel::Svm(m) => {
            writeln!(out, "features={}", m.n_features()).unwrap();
            writeln!(out, "kernel={KERNEL}").unwrap();
            writeln!(out, "c={}", m.c).unwrap();
            writeln!(out, "degree={}", m.degree).unwrap();
            writeln!(out, "gamma={}", m.gamma).unwrap();
            writeln!(out, "epochs={}", m.epochs).unwrap();
            table(&mut out, "weights", &m.weights);
            table(&mut out, "bias", std::slice::from_ref(&m.bias));
        }
    }
    out
}

struct Parsed<T> {
    kind: ModelKind,
    fields: HashMap<String, (usize, String)>,
    tables: HashMap<String, Vec<Vec<T>>>,
}

impl<T: Scalar> Parsed<T> {
    fn field(&self, key: &str) -> Result<&str> {
        self.fields
            .get(key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::format(0, format!("missing field {key:?}")))
    }

    fn parse_field<V: std::str::FromStr>(&self, key: &str) -> Result<V> {
        let line = self.fields.get(key).map_or(0, |(l, _)| *l);
        self.field(key)?
            .parse()
            .map_err(|_| Error::format(line, format!("bad value for {key:?}")))
    }

    fn table(&mut self, name: &str, rows: usize, cols: usize) -> Result<Vec<Vec<T>>> {
        let t = self
            .tables
            .remove(name)
            .ok_or_else(|| Error::format(0, format!("missing table {name:?}")))?;
        if t.len() != rows || t.iter().any(|r| r.len() != cols) {
            return Err(Error::format(0, format!("table {name:?} must be {rows}x{cols}")));
        }
        Ok(t)
    }

    fn row(&mut self, name: &str, cols: usize) -> Result<Vec<T>> {
        Ok(self.table(name, 1, cols)?.remove(0))
    }
}

fn parse<T: Scalar>(text: &str) -> Result<Parsed<T>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).peekable();
    let (_, header) = lines.next().ok_or_else(|| Error::format(1, "empty model file"))?;
    let mut kind = None;
    let mut version = None;
    for part in header.split_whitespace() {
        match part.split_once('=') {
            Some(("model", v)) => kind = Some(v.parse::<ModelKind>()?),
            Some(("version", v)) => version = Some(v.to_string()),
            _ => return Err(Error::format(1, format!("unexpected header field {part:?}"))),
        }
    }
    let kind = kind.ok_or_else(|| Error::format(1, "header lacks model=<kind>"))?;
    match version {
        Some(v) if v == FORMAT_VERSION.to_string() => {}
        Some(found) => {
            return Err(Error::VersionMismatch {
                found,
                expected: FORMAT_VERSION,
            })
        }
        None => return Err(Error::format(1, "header lacks version=<n>")),
    }

    let mut fields = HashMap::new();
    let mut tables = HashMap::new();
    while let Some((n, line)) = lines.next() {
        if line.is_empty() {
            continue;
        }
        if let Some(spec) = line.strip_prefix("table ") {
            let parts: Vec<&str> = spec.split_whitespace().collect();
            let [name, rows, cols] = parts[..] else {
                return Err(Error::format(n, "expected: table <name> <rows> <cols>"));
            };
            let rows: usize = rows.parse().map_err(|_| Error::format(n, "bad row count"))?;
            let cols: usize = cols.parse().map_err(|_| Error::format(n, "bad column count"))?;
            let mut data = Vec::with_capacity(rows);
            for _ in 0..rows {
                let (m, row) = lines
                    .next()
                    .ok_or_else(|| Error::format(n, format!("table {name:?} truncated")))?;
                let values = row
                    .split(' ')
                    .filter(|s| !s.is_empty())
                    .map(|v| v.parse::<T>().map_err(|_| Error::format(m, format!("bad number {v:?}"))))
                    .collect::<Result<Vec<T>>>()?;
                if values.len() != cols {
                    return Err(Error::format(m, format!("expected {cols} values")));
                }
                data.push(values);
            }
            tables.insert(name.to_string(), data);
        } else {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::format(n, "expected key=value"))?;
            fields.insert(k.to_string(), (n, v.to_string()));
        }
    }
    Ok(Parsed {
        kind,
        fields,
        tables,
    })
}

pub(super) fn read_model<T: Scalar>(text: &str) -> Result<ClassifierModel<T>> {
    let mut p = parse::<T>(text)?;
    let scalar = p.field("scalar")?;
    if scalar != T::NAME {
        return Err(Error::format(2, format!("model stores {scalar}, expected {}", T::NAME)));
    }
    let classes = p
        .field("classes")?
        .split_whitespace()
        .map(|c| {
            c.parse::<Label>()
                .map_err(|_| Error::format(3, format!("bad class {c:?}")))
        })
        .collect::<Result<Vec<Label>>>()?;
    if classes.is_empty() || classes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::format(3, "classes must be distinct and ascending"));
    }
    let k = classes.len();
    let v: usize = p.parse_field("features")?;
    Ok(match p.kind {
        ModelKind::Nb => ClassifierModel::Nb(NbModel {
            alpha: p.parse_field("alpha")?,
            log_prior: p.row("log_prior", k)?,
            log_likelihood: p.table("log_likelihood", k, v)?,
            classes,
            n_features: v,
        }),
        ModelKind::Lr => {
            if p.field("penalty")? != "l2" {
                return Err(Error::format(0, "only penalty=l2 is supported"));
            }
            ClassifierModel::Lr(LrModel {
                c: p.parse_field("c")?,
                max_iter: p.parse_field("max_iter")?,
                tol: p.parse_field("tol")?,
                iterations: p.parse_field("iterations")?,
                weights: p.table("weights", k, v)?,
                bias: p.row("bias", k)?,
                classes,
            })
        }
        ModelKind::Svm => {
            if p.field("kernel")? != KERNEL {
                return Err(Error::format(0, "only kernel=linear is supported"));
            }
            ClassifierModel::Svm(SvmModel {
                c: p.parse_field("c")?,
                degree: p.parse_field("degree")?,
                gamma: p.field("gamma")?.to_string(),
                epochs: p.parse_field("epochs")?,
                weights: p.table("weights", k, v)?,
                bias: p.row("bias", k)?,
                classes,
            })
        }
    })
}
