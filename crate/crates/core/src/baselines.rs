//! Field-year citation baselines and per-article normalized scores.
//!
//! Each `(article, category)` assignment is one observation in the
//! `(category, year)` cell. A cell's baseline holds both the arithmetic mean
//! (the MNCS denominator) and the offset geometric mean (the gMNCS
//! denominator) of its citation counts.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};

use thiserror::Error;

use crate::ingest::ArticleRecord;
use crate::scalar::Real;
use crate::stats;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FieldYearKey {
    pub category: String,
    pub year: i32,
}

impl FieldYearKey {
    pub fn new(category: impl Into<String>, year: i32) -> Self {
        Self {
            category: category.into(),
            year,
        }
    }
}

impl fmt::Display for FieldYearKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.category, self.year)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Baseline<T> {
    pub key: FieldYearKey,
    pub n: usize,
    pub arith_mean: T,
    pub geo_mean: T,
}

impl<T: Real> Baseline<T> {
    /// A cell whose geometric mean is zero cannot normalize anything.
    pub fn is_degenerate(&self) -> bool {
        !(self.geo_mean > T::zero() && self.arith_mean > T::zero())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedObservation<T> {
    pub article_id: String,
    pub key: FieldYearKey,
    pub raw_citations: u64,
    pub score_arith: Option<T>,
    pub score_geo: Option<T>,
}

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("no baseline for cell {0}")]
    MissingCell(FieldYearKey),
    #[error("article {id} is not assigned to category {category}")]
    NotAssigned { id: String, category: String },
    #[error("baseline CSV line {line}: {reason}")]
    Parse { line: u64, reason: String },
    #[error("baseline CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Baselines keyed by cell, iterated in `(category, year)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineTable<T> {
    cells: BTreeMap<FieldYearKey, Baseline<T>>,
}

impl<T: Real> Default for BaselineTable<T> {
    fn default() -> Self {
        Self {
            cells: BTreeMap::new(),
        }
    }
}

impl<T: Real> BaselineTable<T> {
    pub fn get(&self, key: &FieldYearKey) -> Option<&Baseline<T>> {
        self.cells.get(key)
    }

    pub fn insert(&mut self, baseline: Baseline<T>) {
        self.cells.insert(baseline.key.clone(), baseline);
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Baseline<T>> {
        self.cells.values()
    }

    pub fn degenerate_cells(&self) -> Vec<FieldYearKey> {
        self.iter()
            .filter(|b| b.is_degenerate())
            .map(|b| b.key.clone())
            .collect()
    }

    pub fn has_usable_cell(&self) -> bool {
        self.iter().any(|b| !b.is_degenerate())
    }

    /// Writes `category,year,n,arith_mean,geo_mean` with shortest
    /// round-trip decimal formatting.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), BaselineError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["category", "year", "n", "arith_mean", "geo_mean"])?;
        for b in self.iter() {
            w.write_record([
                b.key.category.clone(),
                b.key.year.to_string(),
                b.n.to_string(),
                b.arith_mean.to_string(),
                b.geo_mean.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, BaselineError> {
        let mut rdr = csv::Reader::from_reader(input);
        let mut table = Self::default();
        for row in rdr.records() {
            let row = row?;
            let line = row.position().map(|p| p.line()).unwrap_or(0);
            let bad = |reason: String| BaselineError::Parse { line, reason };
            if row.len() != 5 {
                return Err(bad(format!("expected 5 fields, found {}", row.len())));
            }
            let real = |i: usize| {
                row[i]
                    .parse::<T>()
                    .map_err(|_| bad(format!("invalid number '{}'", &row[i])))
            };
            let baseline = Baseline {
                key: FieldYearKey::new(
                    &row[0],
                    row[1]
                        .parse()
                        .map_err(|_| bad(format!("invalid year '{}'", &row[1])))?,
                ),
                n: row[2]
                    .parse()
                    .map_err(|_| bad(format!("invalid n '{}'", &row[2])))?,
                arith_mean: real(3)?,
                geo_mean: real(4)?,
            };
            table.insert(baseline);
        }
        Ok(table)
    }
}

/// Folds every `(article, category)` assignment into its field-year cell.
///
/// Counts within a cell are reduced in record order. Country and author
/// information play no part: every record counts toward the world baseline.
pub fn compute_baselines<T: Real>(records: &[ArticleRecord]) -> BaselineTable<T> {
    let mut cells: BTreeMap<FieldYearKey, Vec<T>> = BTreeMap::new();
    for r in records {
        let c = T::from_count(r.citations);
        for category in &r.categories {
            cells
                .entry(FieldYearKey::new(category.as_str(), r.year))
                .or_default()
                .push(c);
        }
    }
    let cells = cells
        .into_iter()
        .map(|(key, counts)| {
            // cells are non-empty and counts are finite and non-negative
            let arith_mean = stats::arithmetic_mean(&counts).expect("non-empty cell");
            let geo_mean = stats::geometric_mean(&counts)
                .expect("valid counts")
                .min(arith_mean);
            let baseline = Baseline {
                key: key.clone(),
                n: counts.len(),
                arith_mean,
                geo_mean,
            };
            (key, baseline)
        })
        .collect();
    BaselineTable { cells }
}

fn ratio<T: Real>(c: T, denom: T) -> Option<T> {
    (denom > T::zero()).then(|| c / denom)
}

/// Scores one article against the baseline of one of its categories.
pub fn normalize<T: Real>(
    record: &ArticleRecord,
    category: &str,
    baselines: &BaselineTable<T>,
) -> Result<NormalizedObservation<T>, BaselineError> {
    if !record.categories.iter().any(|c| c == category) {
        return Err(BaselineError::NotAssigned {
            id: record.id.clone(),
            category: category.to_string(),
        });
    }
    let key = FieldYearKey::new(category, record.year);
    let baseline = baselines
        .get(&key)
        .ok_or_else(|| BaselineError::MissingCell(key.clone()))?;
    let c = T::from_count(record.citations);
    Ok(NormalizedObservation {
        article_id: record.id.clone(),
        raw_citations: record.citations,
        score_arith: ratio(c, baseline.arith_mean),
        score_geo: ratio(c, baseline.geo_mean),
        key,
    })
}

/// Scores every assignment of every record, in record then category order.
pub fn normalize_all<T: Real>(
    records: &[ArticleRecord],
    baselines: &BaselineTable<T>,
) -> Result<Vec<NormalizedObservation<T>>, BaselineError> {
    let mut out = Vec::with_capacity(records.len());
    for r in records {
        for c in &r.categories {
            out.push(normalize(r, c, baselines)?);
        }
    }
    Ok(out)
}

/// Writes `article_id,category,year,citations,score_arith,score_geo`;
/// absent scores are empty fields.
pub fn write_scores_csv<T: Real, W: Write>(
    observations: &[NormalizedObservation<T>],
    out: W,
) -> Result<(), BaselineError> {
    let opt = |v: Option<T>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "article_id",
        "category",
        "year",
        "citations",
        "score_arith",
        "score_geo",
    ])?;
    for o in observations {
        w.write_record([
            o.article_id.clone(),
            o.key.category.clone(),
            o.key.year.to_string(),
            o.raw_citations.to_string(),
            opt(o.score_arith),
            opt(o.score_geo),
        ])?;
    }
    w.flush()?;
    Ok(())
}
