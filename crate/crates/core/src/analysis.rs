//! Collaboration profiles and grouped gMNCS summaries.
//!
//! A group's gMNCS is the offset geometric mean of the geometric-normalized
//! scores of its member observations, `exp(mean(ln(1 + c/č))) - 1`, with a
//! confidence interval built on the same log scale. Baselines always come
//! from the full dataset; country, author, year and category filters only
//! decide group membership.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use thiserror::Error;

use crate::baselines::{self, BaselineError, FieldYearKey, NormalizedObservation};
use crate::ingest::ArticleRecord;
use crate::scalar::Real;
use crate::stats::{self, StatsError};

/// Largest author count with its own bucket.
pub const MAX_AUTHOR_BUCKET: u32 = 10;

/// Label of the pooled group.
pub const ALL_GROUP: &str = "All";

/// The nine countries compared in the original gMNCS collaboration study,
/// as ISO 3166-1 alpha-2 codes.
pub const STUDY_COUNTRIES: [&str; 9] = ["US", "DE", "FR", "CA", "JP", "CN", "GB", "IT", "RU"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AuthorBucket {
    Authors(u32),
    /// More than [`MAX_AUTHOR_BUCKET`] authors.
    Overflow,
}

impl AuthorBucket {
    pub fn from_count(author_count: u32) -> Self {
        if (1..=MAX_AUTHOR_BUCKET).contains(&author_count) {
            AuthorBucket::Authors(author_count)
        } else {
            AuthorBucket::Overflow
        }
    }

    /// Position on a plot's x axis; the overflow bucket sits one past the last.
    pub fn x_position(&self) -> u32 {
        match self {
            AuthorBucket::Authors(n) => *n,
            AuthorBucket::Overflow => MAX_AUTHOR_BUCKET + 1,
        }
    }
}

impl fmt::Display for AuthorBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AuthorBucket::Authors(n) => write!(f, "{n}"),
            AuthorBucket::Overflow => write!(f, "{MAX_AUTHOR_BUCKET}+"),
        }
    }
}

impl FromStr for AuthorBucket {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == format!("{MAX_AUTHOR_BUCKET}+") {
            return Ok(AuthorBucket::Overflow);
        }
        match s.parse::<u32>() {
            Ok(n) if (1..=MAX_AUTHOR_BUCKET).contains(&n) => Ok(AuthorBucket::Authors(n)),
            _ => Err(format!("invalid author bucket '{s}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CountryStatus {
    Domestic(String),
    /// Two or more distinct countries, in record order.
    International(Vec<String>),
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CollaborationProfile {
    pub author_bucket: AuthorBucket,
    pub country_status: CountryStatus,
}

pub fn classify(record: &ArticleRecord) -> CollaborationProfile {
    let country_status = match record.countries.as_slice() {
        [] => CountryStatus::Unknown,
        [only] => CountryStatus::Domestic(only.clone()),
        many => CountryStatus::International(many.to_vec()),
    };
    CollaborationProfile {
        author_bucket: AuthorBucket::from_count(record.author_count),
        country_status,
    }
}

/// How articles assigned to several categories enter a grouped analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MultiCategory {
    /// Every `(article, category)` pair is its own observation.
    #[default]
    PerAssignment,
    /// One observation per article carrying the mean of its defined scores.
    AveragePerArticle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupingSpec<T> {
    /// Country groups to emit; `None` means every country seen on a domestic record
    /// (or on any record when international ones are included).
    pub countries: Option<Vec<String>>,
    /// Also place internationally co-authored observations in each of their countries' groups.
    pub include_international: bool,
    pub all_group: bool,
    pub all_includes_international: bool,
    pub all_includes_unknown: bool,
    /// Inclusive author-count range, within `1..=10`.
    pub buckets: (u32, u32),
    /// Keep articles with more than ten authors as a `10+` bucket.
    pub overflow_bucket: bool,
    /// Smallest group that gets a confidence interval.
    pub min_n: usize,
    pub level: T,
    pub years: Option<Vec<i32>>,
    pub categories: Option<Vec<String>>,
    pub multi_category: MultiCategory,
}

impl<T: Real> Default for GroupingSpec<T> {
    fn default() -> Self {
        Self {
            countries: None,
            include_international: false,
            all_group: true,
            all_includes_international: true,
            all_includes_unknown: true,
            buckets: (1, MAX_AUTHOR_BUCKET),
            overflow_bucket: false,
            min_n: 2,
            level: T::lit(0.95),
            years: None,
            categories: None,
            multi_category: MultiCategory::PerAssignment,
        }
    }
}

impl<T: Real> GroupingSpec<T> {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        if !(self.level > T::zero() && self.level < T::one()) {
            return Err(StatsError::InvalidLevel(self.level.to_f64().unwrap_or(f64::NAN)).into());
        }
        let (lo, hi) = self.buckets;
        if lo < 1 || hi > MAX_AUTHOR_BUCKET || lo > hi {
            return Err(AnalysisError::InvalidSpec(format!(
                "author bucket range {lo}-{hi} must lie within 1-{MAX_AUTHOR_BUCKET}"
            )));
        }
        Ok(())
    }

    fn keeps_bucket(&self, bucket: AuthorBucket) -> bool {
        match bucket {
            AuthorBucket::Authors(n) => (self.buckets.0..=self.buckets.1).contains(&n),
            AuthorBucket::Overflow => self.overflow_bucket,
        }
    }

    fn keeps_cell(&self, key: &FieldYearKey) -> bool {
        self.years.as_ref().is_none_or(|ys| ys.contains(&key.year))
            && self
                .categories
                .as_ref()
                .is_none_or(|cs| cs.contains(&key.category))
    }

    fn country_selected(&self, code: &str) -> bool {
        self.countries
            .as_ref()
            .is_none_or(|cs| cs.iter().any(|c| c.eq_ignore_ascii_case(code)))
    }

    /// Group labels an observation with this profile contributes to.
    fn groups_for(&self, status: &CountryStatus) -> Vec<String> {
        let mut groups = Vec::new();
        match status {
            CountryStatus::Domestic(c) => {
                if self.country_selected(c) {
                    groups.push(c.clone());
                }
            }
            CountryStatus::International(cs) => {
                if self.include_international {
                    groups.extend(cs.iter().filter(|c| self.country_selected(c)).cloned());
                }
            }
            CountryStatus::Unknown => {}
        }
        let into_all = match status {
            CountryStatus::Domestic(_) => true,
            CountryStatus::International(_) => self.all_includes_international,
            CountryStatus::Unknown => self.all_includes_unknown,
        };
        if self.all_group && into_all {
            groups.push(ALL_GROUP.to_string());
        }
        groups
    }
}

/// One row of a figure-backing table.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary<T> {
    pub group: String,
    pub author_bucket: AuthorBucket,
    pub n: usize,
    pub gmncs: T,
    pub ci_low: Option<T>,
    pub ci_high: Option<T>,
    pub level: T,
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("no usable baseline")]
    NoUsableBaseline,
    #[error("{observations} observations but {profiles} profiles")]
    LengthMismatch {
        observations: usize,
        profiles: usize,
    },
    #[error("invalid grouping: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error("analysis table line {line}: {reason}")]
    Parse { line: u64, reason: String },
    #[error("analysis table CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Grouped rows plus bookkeeping about what was left out.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisTable<T> {
    /// Ordered by group label (byte order), then author bucket.
    pub rows: Vec<GroupSummary<T>>,
    /// Observations dropped because their cell could not normalize them.
    pub excluded_degenerate: usize,
    pub degenerate_cells: Vec<FieldYearKey>,
}

impl<T: Real> AnalysisTable<T> {
    pub fn row(&self, group: &str, bucket: AuthorBucket) -> Option<&GroupSummary<T>> {
        self.rows
            .iter()
            .find(|r| r.group == group && r.author_bucket == bucket)
    }

    pub fn groups(&self) -> Vec<&str> {
        let mut gs: Vec<&str> = self.rows.iter().map(|r| r.group.as_str()).collect();
        gs.sort_unstable();
        gs.dedup();
        gs
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), AnalysisError> {
        let opt = |v: Option<T>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["group", "author_bucket", "n", "gmncs", "ci_low", "ci_high"])?;
        for r in &self.rows {
            w.write_record([
                r.group.clone(),
                r.author_bucket.to_string(),
                r.n.to_string(),
                r.gmncs.to_string(),
                opt(r.ci_low),
                opt(r.ci_high),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a table written by [`AnalysisTable::write_csv`]. The confidence
    /// level is not part of the file and must be supplied.
    pub fn read_csv<R: Read>(input: R, level: T) -> Result<Self, AnalysisError> {
        let mut rdr = csv::Reader::from_reader(input);
        let mut rows = Vec::new();
        for row in rdr.records() {
            let row = row?;
            let line = row.position().map(|p| p.line()).unwrap_or(0);
            let bad = |reason: String| AnalysisError::Parse { line, reason };
            if row.len() != 6 {
                return Err(bad(format!("expected 6 fields, found {}", row.len())));
            }
            let opt = |i: usize| -> Result<Option<T>, AnalysisError> {
                if row[i].is_empty() {
                    Ok(None)
                } else {
                    row[i]
                        .parse::<T>()
                        .map(Some)
                        .map_err(|_| bad(format!("invalid number '{}'", &row[i])))
                }
            };
            rows.push(GroupSummary {
                group: row[0].to_string(),
                author_bucket: row[1].parse().map_err(bad)?,
                n: row[2]
                    .parse()
                    .map_err(|_| bad(format!("invalid n '{}'", &row[2])))?,
                gmncs: opt(3)?.ok_or_else(|| bad("missing gmncs".into()))?,
                ci_low: opt(4)?,
                ci_high: opt(5)?,
                level,
            });
        }
        Ok(Self {
            rows,
            excluded_degenerate: 0,
            degenerate_cells: Vec::new(),
        })
    }
}

/// Merges each article's observations into one, averaging its defined
/// geometric scores. Keeps first-appearance order and the first cell key.
fn average_per_article<T: Real>(
    items: Vec<(&NormalizedObservation<T>, &CollaborationProfile)>,
) -> Vec<(NormalizedObservation<T>, CollaborationProfile)> {
    let mut order: Vec<&str> = Vec::new();
    let mut merged: HashMap<&str, (NormalizedObservation<T>, CollaborationProfile, Vec<T>)> =
        HashMap::new();
    for (obs, profile) in items {
        let entry = merged.entry(obs.article_id.as_str()).or_insert_with(|| {
            order.push(obs.article_id.as_str());
            (obs.clone(), profile.clone(), Vec::new())
        });
        if let Some(s) = obs.score_geo {
            entry.2.push(s);
        }
    }
    order
        .into_iter()
        .map(|id| {
            let (mut obs, profile, scores) = merged.remove(id).expect("recorded id");
            obs.score_geo = stats::arithmetic_mean(&scores).ok();
            obs.score_arith = None;
            (obs, profile)
        })
        .collect()
}

/// Grouped gMNCS over observations; `profiles[i]` describes the article of
/// `observations[i]`.
///
/// Returns the rows and the number of in-scope observations dropped for
/// lacking a geometric score.
pub fn group_gmncs<T: Real>(
    observations: &[NormalizedObservation<T>],
    profiles: &[CollaborationProfile],
    spec: &GroupingSpec<T>,
) -> Result<(Vec<GroupSummary<T>>, usize), AnalysisError> {
    spec.validate()?;
    if observations.len() != profiles.len() {
        return Err(AnalysisError::LengthMismatch {
            observations: observations.len(),
            profiles: profiles.len(),
        });
    }
    let in_scope: Vec<_> = observations
        .iter()
        .zip(profiles)
        .filter(|(o, p)| spec.keeps_cell(&o.key) && spec.keeps_bucket(p.author_bucket))
        .collect();
    let items: Vec<(NormalizedObservation<T>, CollaborationProfile)> = match spec.multi_category {
        MultiCategory::PerAssignment => in_scope
            .into_iter()
            .map(|(o, p)| (o.clone(), p.clone()))
            .collect(),
        MultiCategory::AveragePerArticle => average_per_article(in_scope),
    };

    let mut excluded = 0;
    let mut groups: BTreeMap<(String, AuthorBucket), Vec<T>> = BTreeMap::new();
    for (obs, profile) in &items {
        let Some(score) = obs.score_geo else {
            excluded += 1;
            continue;
        };
        for g in spec.groups_for(&profile.country_status) {
            groups
                .entry((g, profile.author_bucket))
                .or_default()
                .push(score);
        }
    }

    let mut rows = Vec::with_capacity(groups.len());
    for ((group, author_bucket), scores) in groups {
        let (gmncs, ci_low, ci_high) = if scores.len() >= spec.min_n.max(2) {
            let ci = stats::geometric_mean_ci(&scores, spec.level)?;
            (ci.center, ci.low, ci.high)
        } else {
            (stats::geometric_mean(&scores)?, None, None)
        };
        rows.push(GroupSummary {
            group,
            author_bucket,
            n: scores.len(),
            gmncs,
            ci_low,
            ci_high,
            level: spec.level,
        });
    }
    Ok((rows, excluded))
}

/// Baselines, normalization, classification and grouping in one pass over
/// a dataset.
pub fn analyze_dataset<T: Real>(
    records: &[ArticleRecord],
    spec: &GroupingSpec<T>,
) -> Result<AnalysisTable<T>, AnalysisError> {
    spec.validate()?;
    let table = baselines::compute_baselines::<T>(records);
    if !table.has_usable_cell() {
        return Err(AnalysisError::NoUsableBaseline);
    }
    let mut observations = Vec::new();
    let mut profiles = Vec::new();
    for r in records {
        let profile = classify(r);
        for c in &r.categories {
            observations.push(baselines::normalize(r, c, &table)?);
            profiles.push(profile.clone());
        }
    }
    let (rows, excluded_degenerate) = group_gmncs(&observations, &profiles, spec)?;
    Ok(AnalysisTable {
        rows,
        excluded_degenerate,
        degenerate_cells: table.degenerate_cells(),
    })
}
