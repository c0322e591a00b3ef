//! Parsing of strace-style execution logs into per-sample call counts.
//!
//! The grammar targets the common text format produced by `strace -o` and
//! `strace -f -o`: one record per line, optionally prefixed by a PID
//! (`1234  open(...)` or `[pid  1234] open(...)`). Parsing never fails; a
//! line that matches nothing is classified as [`LineKind::Garbage`].

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Label, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineKind {
    Call,
    Unfinished,
    Resumed,
    Signal,
    Exit,
    Garbage,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceLine {
    pub raw_text: String,
    pub kind: LineKind,
    pub call_name: Option<String>,
}

/// Length of the identifier (`[A-Za-z_][A-Za-z0-9_]*`) at the start of `s`.
fn identifier_len(s: &str) -> usize {
    let bytes = s.as_bytes();
    match bytes.first() {
        Some(b) if b.is_ascii_alphabetic() || *b == b'_' => {}
        _ => return 0,
    }
    bytes
        .iter()
        .take_while(|b| b.is_ascii_alphanumeric() || **b == b'_')
        .count()
}

pub fn is_identifier(s: &str) -> bool {
    !s.is_empty() && identifier_len(s) == s.len()
}

/// Drop a leading `[pid N]` or bare integer PID token.
fn strip_pid(line: &str) -> &str {
    if let Some(rest) = line.strip_prefix("[pid") {
        if let Some(end) = rest.find(']') {
            let pid = rest[..end].trim();
            if !pid.is_empty() && pid.bytes().all(|b| b.is_ascii_digit()) {
                return rest[end + 1..].trim_start();
            }
        }
        return line;
    }
    let digits = line.bytes().take_while(u8::is_ascii_digit).count();
    if digits == 0 {
        return line;
    }
    let rest = &line[digits..];
    if rest.starts_with(|c: char| c.is_whitespace()) {
        rest.trim_start()
    } else {
        line
    }
}

fn classify(body: &str) -> (LineKind, Option<String>) {
    if body.starts_with("--- SIG") {
        return (LineKind::Signal, None);
    }
    if body.starts_with("+++ exited") || body.starts_with("+++ killed") {
        return (LineKind::Exit, None);
    }
    if let Some(rest) = body.strip_prefix("<... ") {
        let n = identifier_len(rest);
        if n > 0 && rest[n..].starts_with(" resumed>") {
            return (LineKind::Resumed, Some(rest[..n].to_string()));
        }
        return (LineKind::Garbage, None);
    }
    let n = identifier_len(body);
    if n > 0 && body[n..].starts_with('(') {
        let name = body[..n].to_string();
        let kind = if body.contains("<unfinished ...>") {
            LineKind::Unfinished
        } else {
            LineKind::Call
        };
        return (kind, Some(name));
    }
    (LineKind::Garbage, None)
}

pub fn parse_line(line: &str) -> TraceLine {
    let body = strip_pid(line.trim());
    let (kind, call_name) = classify(body);
    TraceLine {
        raw_text: line.to_string(),
        kind,
        call_name,
    }
}

/// Number of lines of each kind seen while parsing one or more logs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseSummary {
    pub call: u64,
    pub unfinished: u64,
    pub resumed: u64,
    pub signal: u64,
    pub exit: u64,
    pub garbage: u64,
}

impl ParseSummary {
    pub fn record(&mut self, kind: LineKind) {
        let slot = match kind {
            LineKind::Call => &mut self.call,
            LineKind::Unfinished => &mut self.unfinished,
            LineKind::Resumed => &mut self.resumed,
            LineKind::Signal => &mut self.signal,
            LineKind::Exit => &mut self.exit,
            LineKind::Garbage => &mut self.garbage,
        };
        *slot += 1;
    }

    pub fn lines(&self) -> u64 {
        self.call + self.unfinished + self.resumed + self.signal + self.exit + self.garbage
    }

    pub fn merge(&mut self, other: &ParseSummary) {
        self.call += other.call;
        self.unfinished += other.unfinished;
        self.resumed += other.resumed;
        self.signal += other.signal;
        self.exit += other.exit;
        self.garbage += other.garbage;
    }
}

/// One sample's system-call occurrence counts.
///
/// Counts are keyed in lexicographic order and never hold zero entries;
/// `total_calls` is always the sum of the counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CallCountRecord {
    pub sample_id: String,
    pub label: Label,
    counts: BTreeMap<String, u64>,
    #[serde(rename = "total")]
    total_calls: u64,
}

impl CallCountRecord {
    pub fn new(
        sample_id: impl Into<String>,
        label: Label,
        counts: impl IntoIterator<Item = (String, u64)>,
    ) -> Self {
        let mut merged = BTreeMap::new();
        for (name, n) in counts {
            if n > 0 {
                *merged.entry(name).or_insert(0) += n;
            }
        }
        let total_calls = merged.values().sum();
        CallCountRecord {
            sample_id: sample_id.into(),
            label,
            counts: merged,
            total_calls,
        }
    }

    pub fn counts(&self) -> &BTreeMap<String, u64> {
        &self.counts
    }

    pub fn count(&self, call: &str) -> u64 {
        self.counts.get(call).copied().unwrap_or(0)
    }

    pub fn total_calls(&self) -> u64 {
        self.total_calls
    }
}

impl<'de> Deserialize<'de> for CallCountRecord {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            sample_id: String,
            label: Label,
            counts: BTreeMap<String, u64>,
            total: u64,
        }
        let raw = Raw::deserialize(de)?;
        if let Some((name, _)) = raw.counts.iter().find(|(_, &n)| n == 0) {
            return Err(serde::de::Error::custom(format!(
                "sample {}: zero count stored for {name:?}",
                raw.sample_id
            )));
        }
        let sum: u64 = raw.counts.values().sum();
        if sum != raw.total {
            return Err(serde::de::Error::custom(format!(
                "sample {}: total {} does not match count sum {sum}",
                raw.sample_id, raw.total
            )));
        }
        Ok(CallCountRecord {
            sample_id: raw.sample_id,
            label: raw.label,
            counts: raw.counts,
            total_calls: raw.total,
        })
    }
}

/// Incremental counter over the lines of one log.
#[derive(Debug, Default)]
pub struct LogCounter {
    counts: BTreeMap<String, u64>,
    summary: ParseSummary,
}

impl LogCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, line: &str) {
        let parsed = parse_line(line);
        self.summary.record(parsed.kind);
        // a resumed line completes an invocation already counted at its
        // unfinished half
        if matches!(parsed.kind, LineKind::Call | LineKind::Unfinished) {
            if let Some(name) = parsed.call_name {
                *self.counts.entry(name).or_insert(0) += 1;
            }
        }
    }

    pub fn summary(&self) -> &ParseSummary {
        &self.summary
    }

    pub fn finish(self, sample_id: impl Into<String>, label: Label) -> (CallCountRecord, ParseSummary) {
        (CallCountRecord::new(sample_id, label, self.counts), self.summary)
    }
}

pub fn parse_log<I, S>(lines: I, sample_id: impl Into<String>, label: Label) -> CallCountRecord
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    parse_log_with_summary(lines, sample_id, label).0
}

pub fn parse_log_with_summary<I, S>(
    lines: I,
    sample_id: impl Into<String>,
    label: Label,
) -> (CallCountRecord, ParseSummary)
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut counter = LogCounter::new();
    for line in lines {
        counter.push(line.as_ref());
    }
    counter.finish(sample_id, label)
}

/// Invocation order of calls in a log (complete and unfinished lines).
pub fn call_sequence<I, S>(lines: I) -> Vec<String>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    lines
        .into_iter()
        .map(|l| parse_line(l.as_ref()))
        .filter(|t| matches!(t.kind, LineKind::Call | LineKind::Unfinished))
        .filter_map(|t| t.call_name)
        .collect()
}

/// Read a log file as lines, replacing invalid UTF-8 sequences.
pub fn read_log_lines(path: &Path) -> Result<Vec<String>> {
    let bytes = fs::read(path).map_err(|source| Error::Unreadable {
        path: path.to_path_buf(),
        source,
    })?;
    let mut lines: Vec<String> = bytes
        .split(|&b| b == b'\n')
        .map(|l| String::from_utf8_lossy(l).into_owned())
        .collect();
    // trailing newline leaves one empty fragment
    if lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    Ok(lines)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub path: PathBuf,
    pub label: Label,
    pub sample_id: String,
}

/// Read a `path,label,sample_id` manifest. Relative paths are resolved
/// against the manifest's directory.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>> {
    let file = fs::File::open(path).map_err(|source| Error::Unreadable {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["path", "label", "sample_id"] {
        return Err(Error::Format(format!(
            "manifest header must be path,label,sample_id, got {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for row in reader.deserialize::<ManifestRow>() {
        let mut row = row?;
        if row.path.is_relative() {
            row.path = base.join(&row.path);
        }
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileSummary {
    pub sample_id: String,
    pub path: PathBuf,
    #[serde(flatten)]
    pub lines: ParseSummary,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub records: Vec<CallCountRecord>,
    pub summaries: Vec<FileSummary>,
}

impl Corpus {
    pub fn line_totals(&self) -> ParseSummary {
        let mut total = ParseSummary::default();
        for s in &self.summaries {
            total.merge(&s.lines);
        }
        total
    }
}

/// Parse every log named in the manifest, preserving manifest order.
pub fn ingest_corpus(manifest: &[ManifestRow]) -> Result<Corpus> {
    let mut seen = HashSet::new();
    for row in manifest {
        if !seen.insert(row.sample_id.as_str()) {
            return Err(Error::DuplicateSampleId(row.sample_id.clone()));
        }
    }
    let parsed: Vec<Result<(CallCountRecord, FileSummary)>> = manifest
        .par_iter()
        .map(|row| {
            let lines = read_log_lines(&row.path)?;
            let (record, lines) = parse_log_with_summary(&lines, row.sample_id.clone(), row.label);
            let summary = FileSummary {
                sample_id: row.sample_id.clone(),
                path: row.path.clone(),
                lines,
            };
            Ok((record, summary))
        })
        .collect();
    let mut records = Vec::with_capacity(parsed.len());
    let mut summaries = Vec::with_capacity(parsed.len());
    for item in parsed {
        let (record, summary) = item?;
        records.push(record);
        summaries.push(summary);
    }
    Ok(Corpus { records, summaries })
}

pub fn write_jsonl<W: Write>(records: &[CallCountRecord], mut out: W) -> Result<()> {
    for record in records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<CallCountRecord>> {
    let mut records = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: CallCountRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Format(format!("record line {}: {e}", i + 1)))?;
        records.push(record);
    }
    Ok(records)
}
