//! Multi-annotator relabeling: vote storage with an append-only JSON-lines
//! log, work assignment, and mode aggregation.
//!
//! Each (comment, annotator) pair holds one vote; the record with the latest
//! timestamp wins. A comment's final label is the most frequent vote. Ties
//! resolve by precedence NonHope > Neutral > Hope and set the tie flag.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, Label};
use crate::error::{Error, Result};

/// Default number of votes a comment needs before it is aggregated.
pub const DEFAULT_MIN_VOTES: usize = 4;

/// Tie-break rank; higher wins.
fn precedence(label: Label) -> u8 {
    match label {
        Label::NonHope => 2,
        Label::Neutral => 1,
        Label::Hope => 0,
    }
}

/// One line of the label log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub comment_id: String,
    pub annotator_id: String,
    pub label: Label,
    /// Milliseconds since the Unix epoch.
    pub ts: u64,
}

impl AnnotationRecord {
    /// Whether `self` replaces `other` for the same (comment, annotator).
    /// Equal timestamps fall back to label precedence so the outcome does not
    /// depend on arrival order.
    fn supersedes(&self, other: &AnnotationRecord) -> bool {
        (self.ts, precedence(self.label)) >= (other.ts, precedence(other.label))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteCounts {
    pub hope: usize,
    pub non_hope: usize,
    pub neutral: usize,
}

impl VoteCounts {
    pub fn get(&self, label: Label) -> usize {
        match label {
            Label::Hope => self.hope,
            Label::NonHope => self.non_hope,
            Label::Neutral => self.neutral,
        }
    }

    pub fn total(&self) -> usize {
        self.hope + self.non_hope + self.neutral
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregationResult {
    pub comment_id: String,
    pub label: Label,
    pub votes: VoteCounts,
    pub tie: bool,
    pub annotators: usize,
}

/// Mode of `votes` with the tie precedence applied. `None` for no votes.
pub fn mode(votes: &[Label]) -> Option<(Label, VoteCounts, bool)> {
    if votes.is_empty() {
        return None;
    }
    let count = |l: Label| votes.iter().filter(|&&v| v == l).count();
    let counts = VoteCounts {
        hope: count(Label::Hope),
        non_hope: count(Label::NonHope),
        neutral: count(Label::Neutral),
    };
    let best = Label::ALL.iter().map(|&l| counts.get(l)).max().unwrap_or(0);
    let winners: Vec<Label> = Label::ALL
        .iter()
        .copied()
        .filter(|&l| counts.get(l) == best)
        .collect();
    let label = *winners.iter().max_by_key(|&&l| precedence(l)).unwrap();
    Some((label, counts, winners.len() > 1))
}

/// Reduces a log to the latest vote per (comment, annotator).
pub fn latest_votes<'a, I>(records: I) -> BTreeMap<(String, String), AnnotationRecord>
where
    I: IntoIterator<Item = &'a AnnotationRecord>,
{
    let mut latest: BTreeMap<(String, String), AnnotationRecord> = BTreeMap::new();
    for r in records {
        let key = (r.comment_id.clone(), r.annotator_id.clone());
        match latest.get(&key) {
            Some(existing) if !r.supersedes(existing) => {}
            _ => {
                latest.insert(key, r.clone());
            }
        }
    }
    latest
}

/// Aggregates a raw log. Results follow `comment_order`; comments with fewer
/// than `min_votes` votes are omitted.
pub fn aggregate_records(
    records: &[AnnotationRecord],
    comment_order: &[String],
    min_votes: usize,
) -> Vec<AggregationResult> {
    let mut by_comment: HashMap<&str, Vec<Label>> = HashMap::new();
    let latest = latest_votes(records);
    for ((comment, _), r) in &latest {
        by_comment.entry(comment.as_str()).or_default().push(r.label);
    }
    comment_order
        .iter()
        .filter_map(|id| {
            let votes = by_comment.get(id.as_str())?;
            if votes.len() < min_votes.max(1) {
                return None;
            }
            let (label, counts, tie) = mode(votes)?;
            Some(AggregationResult {
                comment_id: id.clone(),
                label,
                annotators: votes.len(),
                votes: counts,
                tie,
            })
        })
        .collect()
}

/// Writes `id,text,label,tie` rows for aggregated comments.
pub fn write_relabelled<W: Write>(results: &[AggregationResult], corpus: &Dataset, writer: W) -> Result<()> {
    let text: HashMap<&str, &str> = corpus
        .examples
        .iter()
        .map(|e| (e.id.as_str(), e.text.as_str()))
        .collect();
    let mut wtr = csv::Writer::from_writer(writer);
    let fail = |e: csv::Error| Error::InvalidArgument(e.to_string());
    wtr.write_record(["id", "text", "label", "tie"]).map_err(fail)?;
    for r in results {
        let body = text
            .get(r.comment_id.as_str())
            .ok_or_else(|| Error::UnknownComment(r.comment_id.clone()))?;
        let tie = if r.tie { "true" } else { "false" };
        wtr.write_record([r.comment_id.as_str(), body, r.label.as_str(), tie])
            .map_err(fail)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv>", e))
}

pub fn export_relabelled(results: &[AggregationResult], corpus: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_relabelled(results, corpus, file)
}

/// Reads a JSON-lines label log; a missing file is an empty log.
pub fn read_log(path: impl AsRef<Path>) -> Result<Vec<AnnotationRecord>> {
    let path = path.as_ref();
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::io(path, e)),
    };
    let mut records = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line)
            .map_err(|e| Error::format(n + 1, format!("{}: {e}", path.display())))?;
        records.push(record);
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comment {
    pub comment_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub total: usize,
    /// Comments with at least the quorum of votes.
    pub fully_voted: usize,
    pub per_annotator_counts: BTreeMap<String, usize>,
}

/// Immutable view of all current votes.
#[derive(Debug, Clone, Default)]
pub struct VoteSnapshot {
    votes: BTreeMap<(String, String), AnnotationRecord>,
    per_comment: HashMap<String, usize>,
}

impl VoteSnapshot {
    fn apply(&mut self, record: AnnotationRecord) {
        let key = (record.comment_id.clone(), record.annotator_id.clone());
        match self.votes.get(&key) {
            Some(existing) if !record.supersedes(existing) => {}
            Some(_) => {
                self.votes.insert(key, record);
            }
            None => {
                *self.per_comment.entry(record.comment_id.clone()).or_insert(0) += 1;
                self.votes.insert(key, record);
            }
        }
    }

    pub fn votes(&self) -> impl Iterator<Item = &AnnotationRecord> {
        self.votes.values()
    }

    pub fn vote_count(&self, comment_id: &str) -> usize {
        self.per_comment.get(comment_id).copied().unwrap_or(0)
    }

    pub fn has_voted(&self, comment_id: &str, annotator_id: &str) -> bool {
        self.votes
            .contains_key(&(comment_id.to_string(), annotator_id.to_string()))
    }
}

struct Writer {
    log: Option<(PathBuf, File)>,
    last_ts: u64,
    snapshot: Arc<VoteSnapshot>,
    annotators: BTreeSet<String>,
}

/// Shared annotation state. Appends are serialized behind one lock; readers
/// take an `Arc` snapshot and never hold the lock while computing.
pub struct AnnotationStore {
    comments: Vec<Comment>,
    index: HashMap<String, usize>,
    open_registration: bool,
    quorum: usize,
    writer: Mutex<Writer>,
}

impl AnnotationStore {
    /// `annotators` empty means any annotator id is accepted. When `log` is
    /// given, existing records are replayed and new votes appended to it.
    pub fn open(corpus: &Dataset, log: Option<&Path>, annotators: &[String], quorum: usize) -> Result<Self> {
        let comments: Vec<Comment> = corpus
            .examples
            .iter()
            .map(|e| Comment {
                comment_id: e.id.clone(),
                text: e.text.clone(),
            })
            .collect();
        let index = comments
            .iter()
            .enumerate()
            .map(|(i, c)| (c.comment_id.clone(), i))
            .collect::<HashMap<_, _>>();
        let mut snapshot = VoteSnapshot::default();
        let mut registered: BTreeSet<String> = annotators.iter().cloned().collect();
        let mut last_ts = 0;
        let file = match log {
            Some(path) => {
                for record in read_log(path)? {
                    if !index.contains_key(&record.comment_id) {
                        return Err(Error::UnknownComment(record.comment_id));
                    }
                    last_ts = last_ts.max(record.ts);
                    registered.insert(record.annotator_id.clone());
                    snapshot.apply(record);
                }
                let file = OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(path)
                    .map_err(|e| Error::io(path, e))?;
                Some((path.to_path_buf(), file))
            }
            None => None,
        };
        Ok(AnnotationStore {
            comments,
            index,
            open_registration: annotators.is_empty(),
            quorum: quorum.max(1),
            writer: Mutex::new(Writer {
                log: file,
                last_ts,
                snapshot: Arc::new(snapshot),
                annotators: registered,
            }),
        })
    }

    pub fn comments(&self) -> &[Comment] {
        &self.comments
    }

    pub fn quorum(&self) -> usize {
        self.quorum
    }

    pub fn snapshot(&self) -> Arc<VoteSnapshot> {
        Arc::clone(&self.writer.lock().expect("store lock").snapshot)
    }

    fn check_annotator(&self, annotator_id: &str) -> Result<()> {
        if annotator_id.is_empty() {
            return Err(Error::UnknownAnnotator(String::new()));
        }
        if self.open_registration {
            return Ok(());
        }
        let w = self.writer.lock().expect("store lock");
        if w.annotators.contains(annotator_id) {
            Ok(())
        } else {
            Err(Error::UnknownAnnotator(annotator_id.to_string()))
        }
    }

    /// The comment this annotator has not voted on with the fewest votes
    /// overall, earliest first on ties.
    pub fn next_task(&self, annotator_id: &str) -> Result<Option<Comment>> {
        self.check_annotator(annotator_id)?;
        let snap = self.snapshot();
        Ok(self
            .comments
            .iter()
            .filter(|c| !snap.has_voted(&c.comment_id, annotator_id))
            .min_by_key(|c| (snap.vote_count(&c.comment_id), self.index[&c.comment_id]))
            .cloned())
    }

    /// Records a vote, appending it to the log before it becomes visible.
    pub fn submit(&self, comment_id: &str, annotator_id: &str, label: Label) -> Result<AnnotationRecord> {
        if !self.index.contains_key(comment_id) {
            return Err(Error::UnknownComment(comment_id.to_string()));
        }
        self.check_annotator(annotator_id)?;
        let now = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_millis() as u64);
        let mut w = self.writer.lock().expect("store lock");
        let record = AnnotationRecord {
            comment_id: comment_id.to_string(),
            annotator_id: annotator_id.to_string(),
            label,
            ts: now.max(w.last_ts + 1),
        };
        if let Some((path, file)) = w.log.as_mut() {
            let mut line = serde_json::to_string(&record)?;
            line.push('\n');
            file.write_all(line.as_bytes())
                .and_then(|_| file.sync_data())
                .map_err(|e| Error::io(path.clone(), e))?;
        }
        w.last_ts = record.ts;
        w.annotators.insert(annotator_id.to_string());
        Arc::make_mut(&mut w.snapshot).apply(record.clone());
        Ok(record)
    }

    pub fn progress(&self) -> Progress {
        let snap = self.snapshot();
        let mut per_annotator: BTreeMap<String, usize> = BTreeMap::new();
        for r in snap.votes() {
            *per_annotator.entry(r.annotator_id.clone()).or_insert(0) += 1;
        }
        Progress {
            total: self.comments.len(),
            fully_voted: self
                .comments
                .iter()
                .filter(|c| snap.vote_count(&c.comment_id) >= self.quorum)
                .count(),
            per_annotator_counts: per_annotator,
        }
    }

    pub fn aggregate(&self, min_votes: usize) -> Vec<AggregationResult> {
        let snap = self.snapshot();
        let records: Vec<AnnotationRecord> = snap.votes().cloned().collect();
        let order: Vec<String> = self.comments.iter().map(|c| c.comment_id.clone()).collect();
        aggregate_records(&records, &order, min_votes)
    }
}
