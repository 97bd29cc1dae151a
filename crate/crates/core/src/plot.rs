//! Plot-ready export of an analysis table.
//!
//! Series are ordered by group label and series `i` of `k` is shifted along
//! the author axis by `(i - (k - 1) / 2) * jitter`, so error bars of
//! neighbouring series do not overlap.

use std::io::Write;

use crate::analysis::{AnalysisTable, AuthorBucket};
use crate::scalar::Real;

pub const DEFAULT_JITTER: f64 = 0.06;

#[derive(Debug, Clone, PartialEq)]
pub struct PlotPoint<T> {
    pub group: String,
    pub author_bucket: AuthorBucket,
    pub x_jittered: T,
    pub gmncs: T,
    pub ci_low: Option<T>,
    pub ci_high: Option<T>,
}

/// Offset of series `index` among `count` series.
pub fn series_offset<T: Real>(index: usize, count: usize, jitter: T) -> T {
    let centre = T::from_count(count.saturating_sub(1) as u64) / T::lit(2.0);
    (T::from_count(index as u64) - centre) * jitter
}

pub fn plot_points<T: Real>(table: &AnalysisTable<T>, jitter: T) -> Vec<PlotPoint<T>> {
    let groups = table.groups();
    let mut points: Vec<PlotPoint<T>> = table
        .rows
        .iter()
        .map(|r| {
            let index = groups
                .binary_search(&r.group.as_str())
                .expect("group present");
            let x = T::from_count(r.author_bucket.x_position() as u64);
            PlotPoint {
                group: r.group.clone(),
                author_bucket: r.author_bucket,
                x_jittered: x + series_offset(index, groups.len(), jitter),
                gmncs: r.gmncs,
                ci_low: r.ci_low,
                ci_high: r.ci_high,
            }
        })
        .collect();
    points.sort_by(|a, b| {
        a.group
            .cmp(&b.group)
            .then(a.author_bucket.cmp(&b.author_bucket))
    });
    points
}

/// Writes `group,author_bucket,x_jittered,gmncs,ci_low,ci_high`.
pub fn write_plot_csv<T: Real, W: Write>(points: &[PlotPoint<T>], out: W) -> csv::Result<()> {
    let opt = |v: Option<T>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "group",
        "author_bucket",
        "x_jittered",
        "gmncs",
        "ci_low",
        "ci_high",
    ])?;
    for p in points {
        w.write_record([
            p.group.clone(),
            p.author_bucket.to_string(),
            p.x_jittered.to_string(),
            p.gmncs.to_string(),
            opt(p.ci_low),
            opt(p.ci_high),
        ])?;
    }
    w.flush()?;
    Ok(())
}
