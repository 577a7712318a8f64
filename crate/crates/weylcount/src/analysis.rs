//! Remainder-series assembly and log-log exponent estimation.
//!
//! Every empirical growth-rate check in the crate goes through this module:
//! a sampled `(lambda, error)` table is fitted by ordinary least squares of
//! `ln |error|` against `ln lambda`, optionally on per-octave envelope
//! maxima, after a deterministic near-zero drop rule.

use thiserror::Error;

use crate::exact::{floor_int, rat, rat_int, rat_to_f64, Rat};

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("exponent fit needs at least {needed} usable samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("series lambdas must be strictly increasing (violated at index {0})")]
    NotIncreasing(usize),
}

/// A sampled remainder table `(lambda, E(lambda))` together with the
/// homogeneity degree `|d|` of the generating problem (used by the
/// near-zero drop rule) and a description of the query.
#[derive(Clone, Debug)]
pub struct RemainderSeries {
    samples: Vec<(f64, f64)>,
    scale_degree: f64,
    source: String,
}

impl RemainderSeries {
    pub fn new(
        samples: Vec<(f64, f64)>,
        scale_degree: f64,
        source: &str,
    ) -> Result<Self, AnalysisError> {
        for i in 1..samples.len() {
            if samples[i].0 <= samples[i - 1].0 {
                return Err(AnalysisError::NotIncreasing(i));
            }
        }
        Ok(RemainderSeries {
            samples,
            scale_degree,
            source: source.to_string(),
        })
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn scale_degree(&self) -> f64 {
        self.scale_degree
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Samples surviving the drop rule `|error| >= 1e-9 * lambda^degree`
    /// (near-zero crossings carry no slope information).
    fn usable(&self) -> (Vec<(f64, f64)>, usize) {
        let mut kept = Vec::with_capacity(self.samples.len());
        let mut dropped = 0;
        for &(lambda, error) in &self.samples {
            if error.abs() < 1e-9 * lambda.powf(self.scale_degree) {
                dropped += 1;
            } else {
                kept.push((lambda, error.abs()));
            }
        }
        (kept, dropped)
    }
}

/// Result of a log-log least-squares fit. `intercept` is in natural log.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub dropped: usize,
    pub used: usize,
}

impl ExponentFit {
    /// Fits with more than 30% of samples dropped are suspect.
    pub fn drop_flagged(&self) -> bool {
        let total = self.dropped + self.used;
        total > 0 && 10 * self.dropped > 3 * total
    }
}

/// Plain OLS of `ln y` against `ln x` over positive points.
pub fn log_log_fit(points: &[(f64, f64)]) -> Result<ExponentFit, AnalysisError> {
    fit_with_drops(points, 0)
}

fn fit_with_drops(points: &[(f64, f64)], dropped: usize) -> Result<ExponentFit, AnalysisError> {
    if points.len() < 8 {
        return Err(AnalysisError::TooFewSamples {
            needed: 8,
            got: points.len(),
        });
    }
    let n = points.len() as f64;
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = logs
        .iter()
        .map(|p| (p.1 - (slope * p.0 + intercept)).powi(2))
        .sum();
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(ExponentFit {
        slope,
        intercept,
        r_squared,
        dropped,
        used: points.len(),
    })
}

/// Least-squares exponent of `|error|` versus `lambda` in log-log scale.
pub fn fit_exponent(series: &RemainderSeries) -> Result<ExponentFit, AnalysisError> {
    let (kept, dropped) = series.usable();
    fit_with_drops(&kept, dropped)
}

/// Same fit restricted to per-octave maxima of `|error|`: the envelope is
/// what an O-bound constrains, not every sample.
///
/// When the lambda range spans fewer than 8 octaves, octaves are subdivided
/// by the smallest integer factor that yields at least 8 buckets, so short
/// desk-scale ranges still produce a legal fit.
pub fn fit_envelope_exponent(series: &RemainderSeries) -> Result<ExponentFit, AnalysisError> {
    let (kept, dropped) = series.usable();
    if kept.len() < 8 {
        return Err(AnalysisError::TooFewSamples {
            needed: 8,
            got: kept.len(),
        });
    }
    let span = kept[kept.len() - 1].0.log2() - kept[0].0.log2();
    let whole_octaves = span.floor().max(1.0);
    let subdivision = if whole_octaves >= 8.0 {
        1.0
    } else {
        (8.0 / whole_octaves).ceil()
    };
    let mut envelope: Vec<(f64, f64)> = Vec::new();
    let mut current_bucket = i64::MIN;
    for &(lambda, error) in &kept {
        let bucket = (lambda.log2() * subdivision).floor() as i64;
        if bucket != current_bucket {
            envelope.push((lambda, error));
            current_bucket = bucket;
        } else if let Some(last) = envelope.last_mut() {
            if error > last.1 {
                *last = (lambda, error);
            }
        }
    }
    fit_with_drops(&envelope, dropped)
}

/// Fit on per-bucket root-mean-square of `|error|` (bucketed as in the
/// envelope fit, each bucket placed at its geometric-mean lambda).
///
/// Averaging over the oscillation phase makes this the lowest-variance of
/// the three estimators; it is the one to use when exponents of different
/// problems (e.g. different shifts) are compared against each other.
pub fn fit_mean_square_exponent(series: &RemainderSeries) -> Result<ExponentFit, AnalysisError> {
    let (kept, dropped) = series.usable();
    if kept.len() < 8 {
        return Err(AnalysisError::TooFewSamples {
            needed: 8,
            got: kept.len(),
        });
    }
    let span = kept[kept.len() - 1].0.log2() - kept[0].0.log2();
    let whole_octaves = span.floor().max(1.0);
    let subdivision = if whole_octaves >= 8.0 {
        1.0
    } else {
        (8.0 / whole_octaves).ceil()
    };
    let mut buckets: Vec<(f64, f64, usize)> = Vec::new(); // (sum log l, sum e^2, count)
    let mut current_bucket = i64::MIN;
    for &(lambda, error) in &kept {
        let bucket = (lambda.log2() * subdivision).floor() as i64;
        if bucket != current_bucket {
            buckets.push((lambda.ln(), error * error, 1));
            current_bucket = bucket;
        } else if let Some(last) = buckets.last_mut() {
            last.0 += lambda.ln();
            last.1 += error * error;
            last.2 += 1;
        }
    }
    let points: Vec<(f64, f64)> = buckets
        .iter()
        .map(|&(log_sum, sq_sum, count)| {
            (
                (log_sum / count as f64).exp(),
                (sq_sum / count as f64).sqrt(),
            )
        })
        .collect();
    fit_with_drops(&points, dropped)
}

/// `max |error| / lambda^exponent` over the series.
pub fn max_normalized_error(series: &RemainderSeries, exponent: f64) -> f64 {
    series
        .samples
        .iter()
        .map(|&(lambda, error)| error.abs() / lambda.powf(exponent))
        .fold(0.0, f64::max)
}

/// One sampling point of a lambda grid: the display value and the exact
/// squared threshold actually used in counting.
#[derive(Clone, Debug)]
pub struct GridPoint {
    pub lambda: f64,
    pub lambda_sq: Rat,
}

/// Geometric lambda grid. With `snap_half_integer_sq` (the default) each
/// point is moved so that `lambda^2` lands on a half-integer, keeping
/// samples off the spectral jumps of integer-eigenvalue problems.
#[derive(Clone, Debug)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub samples: usize,
    pub snap_half_integer_sq: bool,
}

impl GridSpec {
    pub fn new(min: f64, max: f64, samples: usize) -> Self {
        GridSpec {
            min,
            max,
            samples,
            snap_half_integer_sq: true,
        }
    }

    pub fn build(&self) -> Vec<GridPoint> {
        assert!(self.min > 0.0 && self.max > self.min && self.samples >= 2);
        let log_min = self.min.ln();
        let step = (self.max.ln() - log_min) / (self.samples - 1) as f64;
        let mut points: Vec<GridPoint> = Vec::with_capacity(self.samples);
        for i in 0..self.samples {
            // endpoints exact, interior geometric
            let lambda = if i == 0 {
                self.min
            } else if i == self.samples - 1 {
                self.max
            } else {
                (log_min + step * i as f64).exp()
            };
            let point = if self.snap_half_integer_sq {
                let snapped = rat_int(floor_int(&rat_from_sq(lambda))) + rat(1, 2);
                GridPoint {
                    lambda: rat_to_f64(&snapped).sqrt(),
                    lambda_sq: snapped,
                }
            } else {
                let l = crate::exact::rat_from_f64(lambda);
                GridPoint {
                    lambda,
                    lambda_sq: &l * &l,
                }
            };
            match points.last() {
                Some(last) if last.lambda_sq >= point.lambda_sq => {}
                _ => points.push(point),
            }
        }
        points
    }
}

fn rat_from_sq(lambda: f64) -> Rat {
    let l = crate::exact::rat_from_f64(lambda);
    &l * &l
}

/// Default sampling density for lambda grids.
pub const DEFAULT_PER_DECADE: usize = 64;

/// Convenience: grid sized at `per_decade` points per decade of lambda.
pub fn geometric_grid(min: f64, max: f64, per_decade: usize) -> GridSpec {
    let decades = (max / min).log10().max(0.1);
    GridSpec::new(
        min,
        max,
        ((per_decade as f64 * decades).ceil() as usize).max(8),
    )
}

impl RemainderSeries {
    /// Builds a synthetic series from a closure; test and calibration aid.
    pub fn from_fn(
        lambdas: &[f64],
        degree: f64,
        source: &str,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self, AnalysisError> {
        let samples = lambdas.iter().map(|&l| (l, f(l))).collect();
        RemainderSeries::new(samples, degree, source)
    }
}
