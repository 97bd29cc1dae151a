#![allow(dead_code)]

pub mod props;

use std::collections::{BTreeMap, HashMap};

use gmncs::analysis::{AuthorBucket, ALL_GROUP};
use gmncs::ArticleRecord;
use gmncs::GroupingSpec;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub const Z95: f64 = 1.959963984540054; // scipy.stats.norm.ppf(0.975)

pub struct Gen(ChaCha8Rng);

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.0.next_u64() % n
    }

    pub fn unit(&mut self) -> f64 {
        ((self.0.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }

    /// Box-Muller, independent of the crate's inverse-CDF sampler.
    pub fn normal(&mut self) -> f64 {
        let (u, v) = (self.unit(), self.unit());
        (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
    }

    pub fn lognormal_count(&mut self, mu: f64, sigma: f64) -> i64 {
        (mu + sigma * self.normal()).exp().floor() as i64 - 1
    }
}

pub struct DatasetShape {
    pub records: usize,
    pub categories: usize,
    pub years: usize,
    pub countries: &'static [&'static str],
    pub max_authors: u64,
    pub multi_category_rate: f64,
}

impl Default for DatasetShape {
    fn default() -> Self {
        DatasetShape {
            records: 200,
            categories: 3,
            years: 2,
            countries: &["RU", "GB", "US", "CN"],
            max_authors: 13,
            multi_category_rate: 0.2,
        }
    }
}

pub fn random_dataset(g: &mut Gen, shape: &DatasetShape) -> Vec<ArticleRecord> {
    (0..shape.records)
        .map(|i| {
            let mut cats = vec![format!("C{}", g.below(shape.categories as u64))];
            if shape.categories > 1 && g.unit() < shape.multi_category_rate {
                let other = format!("C{}", g.below(shape.categories as u64));
                if other != cats[0] {
                    cats.push(other);
                }
            }
            let year = 2009 + g.below(shape.years as u64) as i32;
            let k = match g.below(10) {
                0..=2 => 0,
                3..=7 => 1,
                _ => 2 + g.below(2),
            };
            let countries = (0..k)
                .map(|_| {
                    shape.countries[g.below(shape.countries.len() as u64) as usize].to_string()
                })
                .collect();
            let citations = g.lognormal_count(1.2, 1.1).max(0);
            let authors = 1 + g.below(shape.max_authors) as i64;
            ArticleRecord::new(format!("r{i}"), year, cats, citations, authors, countries).unwrap()
        })
        .collect()
}

pub fn shuffle<T>(g: &mut Gen, xs: &mut [T]) {
    for i in (1..xs.len()).rev() {
        let j = g.below(i as u64 + 1) as usize;
        xs.swap(i, j);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub n: usize,
    pub gmncs: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

/// Direct-formula recomputation of a grouped analysis with a 95% level:
/// plain sums, no shared code with the crate beyond the record type.
pub fn naive_analysis(
    records: &[ArticleRecord],
    spec: &GroupingSpec,
) -> BTreeMap<(String, AuthorBucket), OracleRow> {
    assert_eq!(spec.level, 0.95);
    let mut cell_logs: HashMap<(String, i32), (f64, usize)> = HashMap::new();
    for r in records {
        for c in &r.categories {
            let e = cell_logs.entry((c.clone(), r.year)).or_insert((0.0, 0));
            e.0 += (1.0 + r.citations as f64).ln();
            e.1 += 1;
        }
    }
    let mut groups: BTreeMap<(String, AuthorBucket), Vec<f64>> = BTreeMap::new();
    for r in records {
        let bucket = if r.author_count >= 1 && r.author_count <= 10 {
            AuthorBucket::Authors(r.author_count)
        } else {
            AuthorBucket::Overflow
        };
        let bucket_ok = match bucket {
            AuthorBucket::Authors(n) => n >= spec.buckets.0 && n <= spec.buckets.1,
            AuthorBucket::Overflow => spec.overflow_bucket,
        };
        if !bucket_ok {
            continue;
        }
        for c in &r.categories {
            if let Some(ys) = &spec.years {
                if !ys.contains(&r.year) {
                    continue;
                }
            }
            let (sum, n) = cell_logs[&(c.clone(), r.year)];
            let geo = (sum / n as f64).exp() - 1.0;
            if geo <= 0.0 {
                continue;
            }
            let score = r.citations as f64 / geo;
            let selected =
                |code: &String| spec.countries.as_ref().is_none_or(|cs| cs.contains(code));
            let mut labels = Vec::new();
            if r.countries.len() == 1 && selected(&r.countries[0]) {
                labels.push(r.countries[0].clone());
            }
            if r.countries.len() >= 2 && spec.include_international {
                labels.extend(r.countries.iter().filter(|c| selected(c)).cloned());
            }
            let to_all = match r.countries.len() {
                0 => spec.all_includes_unknown,
                1 => true,
                _ => spec.all_includes_international,
            };
            if spec.all_group && to_all {
                labels.push(ALL_GROUP.to_string());
            }
            for l in labels {
                groups.entry((l, bucket)).or_default().push(score);
            }
        }
    }
    groups
        .into_iter()
        .map(|(k, scores)| {
            let n = scores.len();
            let logs: Vec<f64> = scores.iter().map(|s| (1.0 + s).ln()).collect();
            let mean = logs.iter().sum::<f64>() / n as f64;
            let gmncs = mean.exp() - 1.0;
            let (ci_low, ci_high) = if n >= spec.min_n.max(2) {
                let var = logs.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                let half = Z95 * (var / n as f64).sqrt();
                (
                    Some(((mean - half).exp() - 1.0).max(0.0)),
                    Some((mean + half).exp() - 1.0),
                )
            } else {
                (None, None)
            };
            (
                k,
                OracleRow {
                    n,
                    gmncs,
                    ci_low,
                    ci_high,
                },
            )
        })
        .collect()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

pub fn close_opt(a: Option<f64>, b: Option<f64>, tol: f64) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(a), Some(b)) => close(a, b, tol),
        _ => false,
    }
}

/// Compares an analysis table against the oracle; returns the first mismatch.
pub fn compare_with_oracle(
    table: &gmncs::AnalysisTable,
    oracle: &BTreeMap<(String, AuthorBucket), OracleRow>,
    tol: f64,
) -> Result<(), String> {
    if table.rows.len() != oracle.len() {
        return Err(format!(
            "{} rows vs oracle {}",
            table.rows.len(),
            oracle.len()
        ));
    }
    for row in &table.rows {
        let key = (row.group.clone(), row.author_bucket);
        let want = oracle
            .get(&key)
            .ok_or_else(|| format!("unexpected row {key:?}"))?;
        let ok = row.n == want.n
            && close(row.gmncs, want.gmncs, tol)
            && close_opt(row.ci_low, want.ci_low, tol)
            && close_opt(row.ci_high, want.ci_high, tol);
        if !ok {
            return Err(format!("row {key:?}: got {row:?}, oracle {want:?}"));
        }
    }
    Ok(())
}

/// For every usable cell, the plain mean of arithmetic-normalized scores is 1.
pub fn mncs_identity_holds(records: &[ArticleRecord]) -> Result<usize, String> {
    let table = gmncs::compute_baselines::<f64>(records);
    let obs = gmncs::baselines::normalize_all(records, &table).map_err(|e| e.to_string())?;
    let mut cells: HashMap<&gmncs::FieldYearKey, Vec<f64>> = HashMap::new();
    for o in &obs {
        if let Some(s) = o.score_arith {
            cells.entry(&o.key).or_default().push(s);
        }
    }
    for (key, scores) in &cells {
        let mean = scores.iter().sum::<f64>() / scores.len() as f64;
        if (mean - 1.0).abs() > 1e-12 {
            return Err(format!("cell {key}: mean score {mean}"));
        }
    }
    Ok(cells.len())
}
