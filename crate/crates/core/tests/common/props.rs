use gmncs::analysis::{AuthorBucket, ALL_GROUP};
use gmncs::baselines::{compute_baselines, normalize};
use gmncs::stats::{arithmetic_mean, geometric_mean, geometric_mean_ci, log_summary};
use gmncs::{analyze_dataset, classify, group_gmncs, CountryStatus, GroupingSpec};
use proptest::collection::vec;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

use super::{random_dataset, shuffle, DatasetShape, Gen};

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    })
}

fn finish(
    r: Result<(), proptest::test_runner::TestError<impl std::fmt::Debug>>,
) -> Result<(), String> {
    r.map_err(|e| e.to_string())
}

fn counts() -> impl Strategy<Value = Vec<f64>> {
    vec(0u32..5000, 1..60).prop_map(|v| v.into_iter().map(f64::from).collect())
}

fn reals() -> impl Strategy<Value = Vec<f64>> {
    vec(0.0f64..1e4, 1..60)
}

fn small_dataset(seed: u64) -> Vec<gmncs::ArticleRecord> {
    let mut g = Gen::new(seed);
    let records = 20 + g.below(150) as usize;
    random_dataset(
        &mut g,
        &DatasetShape {
            records,
            ..Default::default()
        },
    )
}

pub fn am_gm(cases: u32) -> Result<(), String> {
    finish(runner(cases).run(&prop_oneof![counts(), reals()], |xs| {
        let gm = geometric_mean(&xs).unwrap();
        let am = arithmetic_mean(&xs).unwrap();
        prop_assert!(gm >= 0.0);
        let (lo, hi) = xs
            .iter()
            .fold((f64::MAX, 0.0f64), |(l, h), &x| (l.min(x), h.max(x)));
        if lo == hi {
            prop_assert_eq!(gm, am);
        } else if hi - lo > 1e-6 * hi.max(1.0) {
            prop_assert!(gm < am, "gm {} !< am {}", gm, am);
        }
        Ok(())
    }))
}

pub fn monotonicity(cases: u32) -> Result<(), String> {
    let strat = (
        vec(0.0f64..1000.0, 1..50),
        any::<prop::sample::Index>(),
        0.01f64..100.0,
    );
    finish(runner(cases).run(&strat, |(xs, idx, delta)| {
        let i = idx.index(xs.len());
        let mut bumped = xs.clone();
        bumped[i] += delta;
        let before = geometric_mean(&xs).unwrap();
        let after = geometric_mean(&bumped).unwrap();
        prop_assert!(after > before, "{} -> {}", before, after);
        Ok(())
    }))
}

pub fn permutation_and_duplication(cases: u32) -> Result<(), String> {
    let strat = reals().prop_flat_map(|xs| (Just(xs.clone()), Just(xs).prop_shuffle()));
    finish(runner(cases).run(&strat, |(xs, shuffled)| {
        let gm = geometric_mean(&xs).unwrap();
        let tol = 1e-12 * gm.max(f64::MIN_POSITIVE);
        prop_assert!((geometric_mean(&shuffled).unwrap() - gm).abs() <= tol);
        let doubled: Vec<f64> = xs.iter().chain(xs.iter()).copied().collect();
        prop_assert!((geometric_mean(&doubled).unwrap() - gm).abs() <= tol);
        Ok(())
    }))
}

pub fn back_transform_consistency(cases: u32) -> Result<(), String> {
    finish(runner(cases).run(&prop_oneof![counts(), reals()], |xs| {
        let s = log_summary(&xs).unwrap();
        let gm = geometric_mean(&xs).unwrap();
        prop_assert!((s.mean_log.exp() - 1.0 - gm).abs() <= 1e-12 * gm.max(1e-300) + 1e-15);
        Ok(())
    }))
}

pub fn ci_order_and_asymmetry(cases: u32) -> Result<(), String> {
    let strat = (
        prop_oneof![counts(), reals()].prop_filter("n >= 2", |xs| xs.len() >= 2),
        0.05f64..0.999,
    );
    finish(runner(cases).run(&strat, |(xs, level)| {
        let ci = geometric_mean_ci(&xs, level).unwrap();
        let (lo, hi) = (ci.low.unwrap(), ci.high.unwrap());
        prop_assert!(0.0 <= lo && lo <= ci.center && ci.center <= hi);
        let sd = log_summary(&xs).unwrap().sd_log.unwrap();
        if sd > 1e-6 {
            prop_assert!(
                hi - ci.center > ci.center - lo,
                "[{}, {}, {}]",
                lo,
                ci.center,
                hi
            );
        }
        Ok(())
    }))
}

pub fn classification_partition(cases: u32) -> Result<(), String> {
    finish(
        runner(cases).run(&(any::<u64>(), 2009i32..2011), |(seed, year)| {
            let records = small_dataset(seed);
            let in_year: Vec<_> = records.iter().filter(|r| r.year == year).collect();
            let (mut dom, mut int, mut unk) = (0, 0, 0);
            for r in &in_year {
                match classify(r).country_status {
                    CountryStatus::Domestic(ref c) => {
                        prop_assert_eq!(&r.countries, &vec![c.clone()]);
                        dom += 1
                    }
                    CountryStatus::International(ref cs) => {
                        prop_assert!(cs.len() >= 2);
                        int += 1
                    }
                    CountryStatus::Unknown => {
                        prop_assert!(r.countries.is_empty());
                        unk += 1
                    }
                }
            }
            prop_assert_eq!(dom + int + unk, in_year.len());
            Ok(())
        }),
    )
}

pub fn shuffled_pipeline_determinism(cases: u32) -> Result<(), String> {
    finish(runner(cases).run(&any::<u64>(), |seed| {
        let records = small_dataset(seed);
        let spec = GroupingSpec::default();
        let Ok(base) = analyze_dataset(&records, &spec) else {
            return Ok(());
        };
        let mut shuffled = records.clone();
        shuffle(&mut Gen::new(seed ^ 0x5eed), &mut shuffled);
        let other = analyze_dataset(&shuffled, &spec).unwrap();
        prop_assert_eq!(base.rows.len(), other.rows.len());
        for (a, b) in base.rows.iter().zip(&other.rows) {
            prop_assert_eq!(
                (&a.group, a.author_bucket, a.n),
                (&b.group, b.author_bucket, b.n)
            );
            prop_assert!(super::close(a.gmncs, b.gmncs, 1e-12));
            prop_assert!(super::close_opt(a.ci_low, b.ci_low, 1e-12));
            prop_assert!(super::close_opt(a.ci_high, b.ci_high, 1e-12));
        }
        Ok(())
    }))
}

pub fn all_group_inclusion(cases: u32) -> Result<(), String> {
    finish(
        runner(cases).run(&(any::<u64>(), any::<bool>()), |(seed, intl)| {
            let records = small_dataset(seed);
            let spec = GroupingSpec {
                include_international: intl,
                ..Default::default()
            };
            let Ok(table) = analyze_dataset(&records, &spec) else {
                return Ok(());
            };
            for row in &table.rows {
                let all = table.row(ALL_GROUP, row.author_bucket).map_or(0, |r| r.n);
                prop_assert!(all >= row.n, "{:?}: All has {}", row, all);
            }
            Ok(())
        }),
    )
}

/// Adding a citation to one member, with baselines held fixed, raises its
/// groups' gMNCS.
pub fn monotone_response(cases: u32) -> Result<(), String> {
    finish(runner(cases).run(
        &(any::<u64>(), any::<prop::sample::Index>()),
        |(seed, idx)| {
            let records = small_dataset(seed);
            let baselines = compute_baselines::<f64>(&records);
            let spec = GroupingSpec::default();
            let mut obs = Vec::new();
            let mut profiles = Vec::new();
            for r in &records {
                for c in &r.categories {
                    obs.push(normalize(r, c, &baselines).unwrap());
                    profiles.push(classify(r));
                }
            }
            let i = idx.index(obs.len());
            let Some(score) = obs[i].score_geo else {
                return Ok(());
            };
            let bucket = profiles[i].author_bucket;
            if !matches!(bucket, AuthorBucket::Authors(_)) {
                return Ok(());
            }
            let (before, _) = group_gmncs(&obs, &profiles, &spec).unwrap();
            let geo = baselines.get(&obs[i].key).unwrap().geo_mean;
            let mut bumped = obs.clone();
            bumped[i].raw_citations += 1;
            bumped[i].score_geo = Some(score + 1.0 / geo);
            let (after, _) = group_gmncs(&bumped, &profiles, &spec).unwrap();
            let row = |rows: &[gmncs::GroupSummary], g: &str| {
                rows.iter()
                    .find(|r| r.group == g && r.author_bucket == bucket)
                    .map(|r| r.gmncs)
            };
            let g = ALL_GROUP;
            prop_assert!(row(&after, g).unwrap() > row(&before, g).unwrap());
            if let CountryStatus::Domestic(c) = &profiles[i].country_status {
                prop_assert!(row(&after, c).unwrap() > row(&before, c).unwrap());
            }
            Ok(())
        },
    ))
}

pub type Property = fn(u32) -> Result<(), String>;

pub const ALL: [(&str, Property); 10] = [
    ("AM-GM inequality", am_gm),
    ("strict monotonicity", monotonicity),
    (
        "permutation and duplication invariance",
        permutation_and_duplication,
    ),
    ("back-transform consistency", back_transform_consistency),
    ("CI ordering and asymmetry", ci_order_and_asymmetry),
    ("classification partition", classification_partition),
    (
        "order-shuffled pipeline determinism",
        shuffled_pipeline_determinism,
    ),
    ("All-group inclusion", all_group_inclusion),
    ("monotone group response", monotone_response),
    ("MNCS self-consistency", mncs_identity_prop),
];

pub fn mncs_identity_prop(cases: u32) -> Result<(), String> {
    finish(runner(cases).run(&any::<u64>(), |seed| {
        if let Err(e) = super::mncs_identity_holds(&small_dataset(seed)) {
            prop_assert!(false, "{}", e);
        }
        Ok(())
    }))
}
