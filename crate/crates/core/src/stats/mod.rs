//! Offset geometric means and their log-space confidence intervals.
//!
//! Every estimator here works on `ln(1 + x)`, so zero counts are admissible.
//! Intervals are built with normal-theory formulae on the log scale and
//! mapped back with `exp(.) - 1`, which makes them asymmetric around the
//! point estimate.

mod normal;
mod sum;

use thiserror::Error;

use crate::scalar::Real;

pub use normal::{inverse_normal_cdf, normal_critical_value};
pub use sum::{compensated_sum, CompensatedSum};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("empty sample")]
    EmptySample,
    #[error("sample value {0} is negative or not finite")]
    InvalidValue(f64),
    #[error("confidence level {0} must lie strictly between 0 and 1")]
    InvalidLevel(f64),
    #[error("probability {0} must lie strictly between 0 and 1")]
    InvalidProbability(f64),
}

/// Moments of `ln(1 + x)` over a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogSummary<T> {
    pub n: usize,
    pub mean_log: T,
    /// Sample standard deviation (`n - 1` denominator); `None` when `n == 1`.
    pub sd_log: Option<T>,
}

impl<T: Real> LogSummary<T> {
    /// `exp(mean_log) - 1`.
    pub fn back_transformed_mean(&self) -> T {
        self.mean_log.exp_m1()
    }

    /// Standard error of `mean_log`.
    pub fn standard_error(&self) -> Option<T> {
        self.sd_log
            .map(|sd| sd / T::from_count(self.n as u64).sqrt())
    }
}

/// A back-transformed point estimate with optional bounds.
///
/// Bounds are absent when the sample is too small to estimate spread.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalEstimate<T> {
    pub center: T,
    pub low: Option<T>,
    pub high: Option<T>,
    pub level: T,
}

impl<T: Real> IntervalEstimate<T> {
    pub fn has_bounds(&self) -> bool {
        self.low.is_some() && self.high.is_some()
    }

    pub fn covers(&self, target: T) -> bool {
        match (self.low, self.high) {
            (Some(lo), Some(hi)) => lo <= target && target <= hi,
            _ => false,
        }
    }
}

fn check_values<T: Real>(values: &[T]) -> Result<(), StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= T::zero())) {
        return Err(StatsError::InvalidValue(bad.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(())
}

fn min_max<T: Real>(values: &[T]) -> (T, T) {
    values
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

/// Arithmetic mean with compensated summation.
pub fn arithmetic_mean<T: Real>(values: &[T]) -> Result<T, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let mean = compensated_sum(values.iter().copied()) / T::from_count(values.len() as u64);
    let (lo, hi) = min_max(values);
    Ok(mean.max(lo).min(hi))
}

/// Offset geometric mean `exp(mean(ln(1 + x))) - 1`.
///
/// The result is clamped to the sample range, so constant samples return
/// their value exactly.
pub fn geometric_mean<T: Real>(values: &[T]) -> Result<T, StatsError> {
    check_values(values)?;
    let (lo, hi) = min_max(values);
    Ok(mean_log(values).exp_m1().max(lo).min(hi))
}

fn mean_log<T: Real>(values: &[T]) -> T {
    compensated_sum(values.iter().map(|v| v.ln_1p())) / T::from_count(values.len() as u64)
}

/// Mean and sample standard deviation of `ln(1 + x)`.
///
/// Two passes: the mean first, then squared deviations from it.
pub fn log_summary<T: Real>(values: &[T]) -> Result<LogSummary<T>, StatsError> {
    check_values(values)?;
    let n = values.len();
    let mean = mean_log(values);
    let sd_log = (n >= 2).then(|| {
        let ss = compensated_sum(values.iter().map(|v| {
            let d = v.ln_1p() - mean;
            d * d
        }));
        (ss / T::from_count(n as u64 - 1)).sqrt()
    });
    Ok(LogSummary {
        n,
        mean_log: mean,
        sd_log,
    })
}

/// Normal-theory interval for the offset geometric mean.
///
/// `mean_log -/+ z * sd_log / sqrt(n)` is computed on the log scale and both
/// limits are back-transformed with `exp(.) - 1`. For `n == 1` only the
/// point estimate is returned.
pub fn geometric_mean_ci<T: Real>(
    values: &[T],
    level: T,
) -> Result<IntervalEstimate<T>, StatsError> {
    let z = normal_critical_value(level)?;
    let center = geometric_mean(values)?;
    let summary = log_summary(values)?;
    let (low, high) = match summary.standard_error() {
        Some(se) if se == T::zero() => (Some(center), Some(center)),
        Some(se) => {
            let half = z * se;
            // rounding in exp_m1 can push a zero-width interval past the clamped center
            let low = (summary.mean_log - half)
                .exp_m1()
                .min(center)
                .max(T::zero());
            let high = (summary.mean_log + half).exp_m1().max(center);
            (Some(low), Some(high))
        }
        None => (None, None),
    };
    Ok(IntervalEstimate {
        center,
        low,
        high,
        level,
    })
}
