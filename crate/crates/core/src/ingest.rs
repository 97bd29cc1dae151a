//! Streaming import of article records from JSONL or CSV.
//!
//! JSONL: one object per line with exactly the fields
//! `id, year, categories, citations, author_count, countries`.
//! Blank lines are skipped and do not count as data lines.
//!
//! CSV: header `id,year,categories,citations,author_count,countries`;
//! `categories` and `countries` are `;`-separated inside their cell and an
//! empty cell is an empty list.
//!
//! Schema violations on a line become [`RecordError`]s and parsing carries
//! on; only I/O failures abort.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const CSV_HEADER: [&str; 6] = [
    "id",
    "year",
    "categories",
    "citations",
    "author_count",
    "countries",
];
const LIST_SEPARATOR: char = ';';

/// One journal article as seen by the indicator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ArticleRecord {
    pub id: String,
    pub year: i32,
    pub categories: Vec<String>,
    pub citations: u64,
    pub author_count: u32,
    /// Upper-case, deduplicated, first-seen order.
    pub countries: Vec<String>,
}

impl ArticleRecord {
    /// Builds a record, enforcing the same rules as the parsers.
    pub fn new(
        id: impl Into<String>,
        year: i32,
        categories: Vec<String>,
        citations: i64,
        author_count: i64,
        countries: Vec<String>,
    ) -> Result<Self, String> {
        let id = id.into();
        if id.is_empty() {
            return Err("id must not be empty".into());
        }
        if citations < 0 {
            return Err("citations must be ≥ 0".into());
        }
        if author_count < 1 {
            return Err("author_count must be ≥ 1".into());
        }
        let author_count =
            u32::try_from(author_count).map_err(|_| "author_count out of range".to_string())?;
        if categories.is_empty() {
            return Err("categories must not be empty".into());
        }
        if categories.iter().any(|c| c.trim().is_empty()) {
            return Err("category identifiers must not be blank".into());
        }
        Ok(Self {
            id,
            year,
            categories,
            citations: citations as u64,
            author_count,
            countries: normalize_countries(countries)?,
        })
    }
}

fn normalize_countries(raw: Vec<String>) -> Result<Vec<String>, String> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(raw.len());
    for c in raw {
        let code = c.trim().to_uppercase();
        if code.is_empty() {
            return Err("country codes must not be blank".into());
        }
        if seen.insert(code.clone()) {
            out.push(code);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Jsonl,
    Csv,
}

impl Format {
    /// Guesses the format from a file extension (`.jsonl`, `.json`, `.ndjson`, `.csv`).
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "jsonl" | "ndjson" | "json" => Some(Format::Jsonl),
            "csv" => Some(Format::Csv),
            _ => None,
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" => Ok(Format::Jsonl),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format '{other}' (expected jsonl or csv)")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Jsonl => "jsonl",
            Format::Csv => "csv",
        })
    }
}

/// A rejected data line.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {reason}")]
pub struct RecordError {
    /// 1-based physical line number in the source.
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("failed to read input: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV header mismatch: expected `{expected}`, found `{found}`")]
    BadHeader { expected: String, found: String },
    #[error("CSV: {0}")]
    Csv(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    id: String,
    year: i32,
    categories: Vec<String>,
    citations: i64,
    author_count: i64,
    countries: Vec<String>,
}

impl RawRecord {
    fn into_record(self) -> Result<ArticleRecord, String> {
        ArticleRecord::new(
            self.id,
            self.year,
            self.categories,
            self.citations,
            self.author_count,
            self.countries,
        )
    }
}

/// Record-at-a-time iterator over a source.
///
/// Yields `Ok(Ok(record))`, `Ok(Err(record_error))`, or a fatal
/// `Err(IngestError)` after which iteration should stop.
pub struct RecordStream<R> {
    inner: StreamInner<R>,
}

enum StreamInner<R> {
    Jsonl {
        reader: R,
        line: u64,
        buf: String,
    },
    Csv {
        reader: csv::Reader<R>,
        record: csv::StringRecord,
        header_checked: bool,
    },
}

impl<R: BufRead> RecordStream<R> {
    pub fn new(reader: R, format: Format) -> Self {
        let inner = match format {
            Format::Jsonl => StreamInner::Jsonl {
                reader,
                line: 0,
                buf: String::new(),
            },
            Format::Csv => StreamInner::Csv {
                reader: csv::ReaderBuilder::new()
                    .has_headers(true)
                    .flexible(true)
                    .from_reader(reader),
                record: csv::StringRecord::new(),
                header_checked: false,
            },
        };
        Self { inner }
    }
}

type StreamItem = Result<Result<ArticleRecord, RecordError>, IngestError>;

impl<R: BufRead> Iterator for RecordStream<R> {
    type Item = StreamItem;

    fn next(&mut self) -> Option<Self::Item> {
        match &mut self.inner {
            StreamInner::Jsonl { reader, line, buf } => next_jsonl(reader, line, buf),
            StreamInner::Csv {
                reader,
                record,
                header_checked,
            } => next_csv(reader, record, header_checked),
        }
    }
}

fn next_jsonl<R: BufRead>(reader: &mut R, line: &mut u64, buf: &mut String) -> Option<StreamItem> {
    loop {
        buf.clear();
        let mut bytes = Vec::new();
        match reader.read_until(b'\n', &mut bytes) {
            Ok(0) => return None,
            Ok(_) => {}
            Err(e) => return Some(Err(e.into())),
        }
        *line += 1;
        let text = match std::str::from_utf8(&bytes) {
            Ok(t) => t,
            Err(_) => {
                return Some(Ok(Err(RecordError {
                    line: *line,
                    reason: "line is not valid UTF-8".into(),
                })))
            }
        };
        buf.push_str(text.trim_end_matches(['\n', '\r']));
        if buf.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<RawRecord>(buf)
            .map_err(|e| e.to_string())
            .and_then(RawRecord::into_record)
            .map_err(|reason| RecordError {
                line: *line,
                reason,
            });
        return Some(Ok(parsed));
    }
}

fn next_csv<R: BufRead>(
    reader: &mut csv::Reader<R>,
    record: &mut csv::StringRecord,
    header_checked: &mut bool,
) -> Option<StreamItem> {
    if !*header_checked {
        *header_checked = true;
        match reader.headers() {
            Ok(h) => {
                let found: Vec<&str> = h.iter().map(str::trim).collect();
                if found != CSV_HEADER {
                    return Some(Err(IngestError::BadHeader {
                        expected: CSV_HEADER.join(","),
                        found: found.join(","),
                    }));
                }
            }
            Err(e) => return Some(Err(csv_fatal(e))),
        }
    }
    match reader.read_record(record) {
        Ok(false) => None,
        Ok(true) => {
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            Some(Ok(
                csv_row(record).map_err(|reason| RecordError { line, reason })
            ))
        }
        Err(e) => {
            if matches!(e.kind(), csv::ErrorKind::Io(_)) {
                return Some(Err(csv_fatal(e)));
            }
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Some(Ok(Err(RecordError {
                line,
                reason: e.to_string(),
            })))
        }
    }
}

fn csv_fatal(e: csv::Error) -> IngestError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => IngestError::Io(io),
        other => IngestError::Csv(format!("{other:?}")),
    }
}

fn split_list(cell: &str) -> Vec<String> {
    if cell.is_empty() {
        return Vec::new();
    }
    cell.split(LIST_SEPARATOR).map(str::to_string).collect()
}

fn csv_row(row: &csv::StringRecord) -> Result<ArticleRecord, String> {
    if row.len() != CSV_HEADER.len() {
        return Err(format!(
            "expected {} fields, found {}",
            CSV_HEADER.len(),
            row.len()
        ));
    }
    let int = |idx: usize| -> Result<i64, String> {
        row[idx]
            .trim()
            .parse::<i64>()
            .map_err(|e| format!("{}: {e}", CSV_HEADER[idx]))
    };
    let year = i32::try_from(int(1)?).map_err(|_| "year out of range".to_string())?;
    ArticleRecord::new(
        &row[0],
        year,
        split_list(&row[2]),
        int(3)?,
        int(4)?,
        split_list(&row[5]),
    )
}

/// Records and per-line errors from one source, in source order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedDataset {
    pub records: Vec<ArticleRecord>,
    pub errors: Vec<RecordError>,
}

impl ParsedDataset {
    pub fn data_lines(&self) -> usize {
        self.records.len() + self.errors.len()
    }
}

pub fn parse_dataset<R: BufRead>(source: R, format: Format) -> Result<ParsedDataset, IngestError> {
    let mut out = ParsedDataset::default();
    for item in RecordStream::new(source, format) {
        match item? {
            Ok(r) => out.records.push(r),
            Err(e) => out.errors.push(e),
        }
    }
    Ok(out)
}

/// Opens and parses a file; the format falls back to the extension.
pub fn parse_file(path: &Path, format: Option<Format>) -> Result<ParsedDataset, IngestError> {
    let format = format
        .or_else(|| Format::from_path(path))
        .unwrap_or(Format::Jsonl);
    let file = std::fs::File::open(path)?;
    parse_dataset(std::io::BufReader::new(file), format)
}

pub fn write_jsonl<W: Write>(records: &[ArticleRecord], mut out: W) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_csv<W: Write>(records: &[ArticleRecord], out: W) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(out);
    let sep = LIST_SEPARATOR.to_string();
    let fail = |e: csv::Error| IngestError::Csv(e.to_string());
    w.write_record(CSV_HEADER).map_err(fail)?;
    for r in records {
        w.write_record([
            r.id.as_str(),
            &r.year.to_string(),
            &r.categories.join(&sep),
            &r.citations.to_string(),
            &r.author_count.to_string(),
            &r.countries.join(&sep),
        ])
        .map_err(fail)?;
    }
    w.flush()?;
    Ok(())
}

/// Inventory of a parsed dataset.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetReport {
    pub record_count: usize,
    /// Ids seen more than once, sorted.
    pub duplicates: Vec<String>,
    pub year_range: Option<(i32, i32)>,
    /// Category → number of records assigned to it.
    pub categories: BTreeMap<String, usize>,
    pub unknown_country_count: usize,
    pub empty: bool,
}

impl DatasetReport {
    pub fn has_warnings(&self) -> bool {
        self.empty || !self.duplicates.is_empty()
    }
}

pub fn validate_dataset(records: &[ArticleRecord]) -> DatasetReport {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    let mut report = DatasetReport {
        record_count: records.len(),
        empty: records.is_empty(),
        ..Default::default()
    };
    for r in records {
        *counts.entry(r.id.as_str()).or_default() += 1;
        report.year_range = Some(match report.year_range {
            None => (r.year, r.year),
            Some((lo, hi)) => (lo.min(r.year), hi.max(r.year)),
        });
        for c in &r.categories {
            *report.categories.entry(c.clone()).or_default() += 1;
        }
        if r.countries.is_empty() {
            report.unknown_country_count += 1;
        }
    }
    report.duplicates = counts
        .into_iter()
        .filter(|&(_, n)| n > 1)
        .map(|(id, _)| id.to_string())
        .collect();
    report.duplicates.sort();
    report
}
