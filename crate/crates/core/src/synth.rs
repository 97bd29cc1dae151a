//! Discretised lognormal citation samples and the Monte Carlo experiments
//! run on them.
//!
//! A draw is `max(0, round(exp(z) - 1))` with `z ~ Normal(mu, sigma)`, so
//! `ln(1 + c)` is normal up to rounding. `round` is half-away-from-zero.
//!
//! Randomness is ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64(seed)`; independent sequences come from the generator's
//! 64-bit stream selector:
//!
//! | stream            | use                               |
//! |-------------------|-----------------------------------|
//! | `0`               | [`sample`]                        |
//! | `r + 1`           | replicate `r` of an experiment    |
//! | `2^63 + k`        | chunk `k` of the reference sample |
//!
//! Each `u64` becomes a uniform `((x >> 11) + 0.5) / 2^53` in (0, 1) and then
//! a normal variate through [`inverse_normal_cdf`]. All of this runs in
//! `f64` whatever the estimator scalar is, so samples are identical across
//! scalar types and platforms.

use std::fmt;
use std::io::Write;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use thiserror::Error;

use crate::scalar::Real;
use crate::stats::{self, inverse_normal_cdf, CompensatedSum, StatsError};

/// Size of the sample that pins down the population geometric mean.
pub const REFERENCE_DRAWS: usize = 10_000_000;
const REFERENCE_CHUNK: usize = 100_000;
const REFERENCE_STREAM_BASE: u64 = 1 << 63;

pub const MIN_PRECISION_REPLICATES: usize = 100;
pub const MIN_COVERAGE_REPLICATES: usize = 1_000;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("sigma must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error("mu must be finite, got {0}")]
    InvalidMu(f64),
    #[error("sample size must be at least 1")]
    EmptySample,
    #[error("need at least {min} replicates, got {got}")]
    TooFewReplicates { min: usize, got: usize },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LognormalSpec<T> {
    /// Location of `ln(1 + c)`.
    pub mu: T,
    /// Scale of `ln(1 + c)`.
    pub sigma: T,
    pub n: usize,
    pub seed: u64,
}

impl<T: Real> LognormalSpec<T> {
    pub fn new(mu: T, sigma: T, n: usize, seed: u64) -> Result<Self, SynthError> {
        let spec = Self { mu, sigma, n, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let sigma = self.sigma.to_f64().unwrap_or(f64::NAN);
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(SynthError::InvalidSigma(sigma));
        }
        let mu = self.mu.to_f64().unwrap_or(f64::NAN);
        if !mu.is_finite() {
            return Err(SynthError::InvalidMu(mu));
        }
        if self.n == 0 {
            return Err(SynthError::EmptySample);
        }
        Ok(())
    }

    fn params(&self) -> (f64, f64) {
        (
            self.mu.to_f64().expect("validated"),
            self.sigma.to_f64().expect("validated"),
        )
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[inline]
fn open_uniform(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

#[inline]
fn draw(rng: &mut ChaCha8Rng, mu: f64, sigma: f64) -> u64 {
    let u = open_uniform(rng);
    let z = mu + sigma * inverse_normal_cdf(u).expect("u in (0, 1)");
    // float-to-int casts saturate
    z.exp_m1().round().max(0.0) as u64
}

fn draw_many(rng: &mut ChaCha8Rng, mu: f64, sigma: f64, n: usize) -> Vec<u64> {
    (0..n).map(|_| draw(rng, mu, sigma)).collect()
}

fn replicate_sample<T: Real>(spec: &LognormalSpec<T>, replicate: usize) -> Vec<T> {
    let (mu, sigma) = spec.params();
    let mut rng = rng_for(spec.seed, replicate as u64 + 1);
    draw_many(&mut rng, mu, sigma, spec.n)
        .into_iter()
        .map(T::from_count)
        .collect()
}

/// Draws `spec.n` counts from stream 0 of `spec.seed`.
pub fn sample<T: Real>(spec: &LognormalSpec<T>) -> Result<Vec<u64>, SynthError> {
    spec.validate()?;
    let (mu, sigma) = spec.params();
    Ok(draw_many(&mut rng_for(spec.seed, 0), mu, sigma, spec.n))
}

/// Population offset geometric mean `exp(E[ln(1 + C)]) - 1`, estimated from
/// `draws` counts. `spec.n` is ignored.
pub fn reference_target<T: Real>(spec: &LognormalSpec<T>, draws: usize) -> Result<T, SynthError> {
    spec.validate()?;
    if draws == 0 {
        return Err(SynthError::EmptySample);
    }
    let (mu, sigma) = spec.params();
    let chunks = draws.div_ceil(REFERENCE_CHUNK);
    let partials: Vec<CompensatedSum<f64>> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let len = REFERENCE_CHUNK.min(draws - k * REFERENCE_CHUNK);
            let mut rng = rng_for(spec.seed, REFERENCE_STREAM_BASE + k as u64);
            (0..len)
                .map(|_| (draw(&mut rng, mu, sigma) as f64).ln_1p())
                .collect()
        })
        .collect();
    let mut total = CompensatedSum::new();
    for p in &partials {
        total.merge(p);
    }
    Ok(T::lit((total.value() / draws as f64).exp_m1()))
}

fn relative_spread<T: Real>(estimates: &[T]) -> (T, T) {
    let mean = stats::arithmetic_mean(estimates).expect("non-empty");
    let ss = stats::compensated_sum(estimates.iter().map(|&e| (e - mean) * (e - mean)));
    let sd = (ss / T::from_count(estimates.len() as u64 - 1)).sqrt();
    let rel = if mean > T::zero() {
        sd / mean
    } else {
        T::zero()
    };
    (mean, rel)
}

/// Relative sampling spread of the arithmetic and offset geometric means.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionReport<T> {
    pub spec: LognormalSpec<T>,
    pub replicates: usize,
    pub arith_grand_mean: T,
    pub geo_grand_mean: T,
    /// Standard deviation of the estimator over replicates divided by its grand mean.
    pub arith_rel_spread: T,
    pub geo_rel_spread: T,
    /// `geo_rel_spread / arith_rel_spread`; 1 when both spreads are zero.
    pub ratio: T,
}

pub fn precision_experiment<T: Real>(
    spec: &LognormalSpec<T>,
    replicates: usize,
) -> Result<PrecisionReport<T>, SynthError> {
    spec.validate()?;
    if replicates < MIN_PRECISION_REPLICATES {
        return Err(SynthError::TooFewReplicates {
            min: MIN_PRECISION_REPLICATES,
            got: replicates,
        });
    }
    let estimates: Vec<(T, T)> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let xs = replicate_sample(spec, r);
            (
                stats::arithmetic_mean(&xs).expect("n >= 1"),
                stats::geometric_mean(&xs).expect("counts are valid"),
            )
        })
        .collect();
    let arith: Vec<T> = estimates.iter().map(|e| e.0).collect();
    let geo: Vec<T> = estimates.iter().map(|e| e.1).collect();
    let (arith_grand_mean, arith_rel_spread) = relative_spread(&arith);
    let (geo_grand_mean, geo_rel_spread) = relative_spread(&geo);
    let ratio = if arith_rel_spread > T::zero() {
        geo_rel_spread / arith_rel_spread
    } else if geo_rel_spread > T::zero() {
        T::infinity()
    } else {
        T::one()
    };
    Ok(PrecisionReport {
        spec: *spec,
        replicates,
        arith_grand_mean,
        geo_grand_mean,
        arith_rel_spread,
        geo_rel_spread,
        ratio,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport<T> {
    pub spec: LognormalSpec<T>,
    pub level: T,
    pub replicates: usize,
    pub reference_draws: usize,
    pub target: T,
    pub covered: usize,
    /// Replicates whose interval had bounds (all of them when `n >= 2`).
    pub with_bounds: usize,
    pub coverage: T,
}

/// Fraction of replicate intervals containing the reference target.
pub fn coverage_experiment<T: Real>(
    spec: &LognormalSpec<T>,
    level: T,
    replicates: usize,
) -> Result<CoverageReport<T>, SynthError> {
    let mut reports = coverage_at_levels(spec, &[level], replicates, REFERENCE_DRAWS)?;
    Ok(reports.remove(0))
}

/// Coverage at several levels over one shared set of replicates and one
/// reference target.
pub fn coverage_at_levels<T: Real>(
    spec: &LognormalSpec<T>,
    levels: &[T],
    replicates: usize,
    reference_draws: usize,
) -> Result<Vec<CoverageReport<T>>, SynthError> {
    spec.validate()?;
    if replicates < MIN_COVERAGE_REPLICATES {
        return Err(SynthError::TooFewReplicates {
            min: MIN_COVERAGE_REPLICATES,
            got: replicates,
        });
    }
    for &level in levels {
        stats::normal_critical_value(level)?;
    }
    let target = reference_target(spec, reference_draws)?;
    let hits: Vec<Vec<(bool, bool)>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let xs = replicate_sample(spec, r);
            levels
                .iter()
                .map(|&level| {
                    let ci = stats::geometric_mean_ci(&xs, level).expect("valid sample and level");
                    (ci.covers(target), ci.has_bounds())
                })
                .collect()
        })
        .collect();
    Ok(levels
        .iter()
        .enumerate()
        .map(|(i, &level)| {
            let covered = hits.iter().filter(|h| h[i].0).count();
            let with_bounds = hits.iter().filter(|h| h[i].1).count();
            CoverageReport {
                spec: *spec,
                level,
                replicates,
                reference_draws,
                target,
                covered,
                with_bounds,
                coverage: T::from_count(covered as u64) / T::from_count(replicates as u64),
            }
        })
        .collect())
}

impl<T: Real> fmt::Display for PrecisionReport<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[precision]")?;
        writeln!(f, "replicates            {}", self.replicates)?;
        writeln!(f, "arith grand mean      {}", self.arith_grand_mean)?;
        writeln!(f, "geo grand mean        {}", self.geo_grand_mean)?;
        writeln!(f, "arith relative spread {}", self.arith_rel_spread)?;
        writeln!(f, "geo relative spread   {}", self.geo_rel_spread)?;
        writeln!(f, "ratio (geo / arith)   {}", self.ratio)
    }
}

impl<T: Real> fmt::Display for CoverageReport<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[coverage]")?;
        writeln!(f, "level                 {}", self.level)?;
        writeln!(f, "replicates            {}", self.replicates)?;
        writeln!(f, "reference draws       {}", self.reference_draws)?;
        writeln!(f, "target geometric mean {}", self.target)?;
        writeln!(f, "intervals with bounds {}", self.with_bounds)?;
        writeln!(f, "covered               {}", self.covered)?;
        writeln!(f, "coverage              {}", self.coverage)
    }
}

/// Writes reports as `section,metric,value` rows.
pub fn write_reports_csv<T: Real, W: Write>(
    precision: Option<&PrecisionReport<T>>,
    coverage: Option<&CoverageReport<T>>,
    out: W,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["section", "metric", "value"])?;
    if let Some(p) = precision {
        for (k, v) in [
            ("replicates", p.replicates.to_string()),
            ("arith_grand_mean", p.arith_grand_mean.to_string()),
            ("geo_grand_mean", p.geo_grand_mean.to_string()),
            ("arith_rel_spread", p.arith_rel_spread.to_string()),
            ("geo_rel_spread", p.geo_rel_spread.to_string()),
            ("ratio", p.ratio.to_string()),
        ] {
            w.write_record(["precision", k, &v])?;
        }
    }
    if let Some(c) = coverage {
        for (k, v) in [
            ("level", c.level.to_string()),
            ("replicates", c.replicates.to_string()),
            ("reference_draws", c.reference_draws.to_string()),
            ("target", c.target.to_string()),
            ("with_bounds", c.with_bounds.to_string()),
            ("covered", c.covered.to_string()),
            ("coverage", c.coverage.to_string()),
        ] {
            w.write_record(["coverage", k, &v])?;
        }
    }
    w.flush()?;
    Ok(())
}
