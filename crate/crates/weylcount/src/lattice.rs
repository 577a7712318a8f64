//! Weighted counting over shifted integer lattices: the sum of
//! `m_1^{d_1-1} ... m_k^{d_k-1}` over `m` in `(Z^n + y)`, restricted to the
//! nonnegative orthant in the first `k` coordinates, inside a ball of radius
//! `lambda`; its closed-form Dirichlet main term; and the exact remainder.
//!
//! The sum is computed by recursion over coordinates. The final coordinate
//! is resolved in closed form: a shifted lattice-point count when
//! unweighted, a shifted Faulhaber power sum when weighted. Exact mode
//! carries rational arithmetic end to end; floating mode uses compensated
//! summation for arbitrary real shifts.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::analysis::{GridPoint, RemainderSeries};
use crate::exact::{rat_from_f64, rat_int, rat_to_f64, sqrt_rat_approx, PiPower, Rat};
use crate::special::{binom, gamma_half};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LatticeError {
    #[error("lattice problem needs at least one coordinate")]
    Empty,
    #[error("dimension entry {0} is invalid: weighted entries need d >= 2, free entries d = 1")]
    BadDimension(u32),
    #[error("weighted entries (d >= 2) must precede free entries (d = 1)")]
    WeightedAfterFree,
    #[error("shift has {got} components, expected {expected}")]
    ShiftLength { expected: usize, got: usize },
    #[error("shift component {0} is out of the supported range |y| <= 2^40")]
    ShiftTooLarge(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithmeticMode {
    Exact,
    Floating,
}

/// The data of a weighted shifted-lattice counting problem: dimension `n`,
/// `k` weighted coordinates with exponents `d_i - 1`, and shift `y`.
#[derive(Clone, Debug)]
pub struct LatticeProblem {
    dims: Vec<u32>,
    k: usize,
    shift: Vec<Rat>,
    mode: ArithmeticMode,
}

impl LatticeProblem {
    /// `dims` is the multi-index `(d_1, ..., d_k, 1, ..., 1)` with
    /// `d_i >= 2` for the first `k` entries.
    pub fn new(
        dims: Vec<u32>,
        shift: Vec<Rat>,
        mode: ArithmeticMode,
    ) -> Result<Self, LatticeError> {
        if dims.is_empty() {
            return Err(LatticeError::Empty);
        }
        if shift.len() != dims.len() {
            return Err(LatticeError::ShiftLength {
                expected: dims.len(),
                got: shift.len(),
            });
        }
        let limit = rat_int(1i64 << 40);
        for y in &shift {
            if y.abs() > limit {
                return Err(LatticeError::ShiftTooLarge(y.to_string()));
            }
        }
        let mut k = 0;
        let mut seen_free = false;
        for &d in &dims {
            if d == 0 {
                return Err(LatticeError::BadDimension(d));
            } else if d == 1 {
                seen_free = true;
            } else {
                if seen_free {
                    return Err(LatticeError::WeightedAfterFree);
                }
                k += 1;
            }
        }
        Ok(LatticeProblem {
            dims,
            k,
            shift,
            mode,
        })
    }

    /// Builds the problem from f64 shifts, converted exactly to rationals.
    pub fn from_f64_shift(
        dims: Vec<u32>,
        shift: &[f64],
        mode: ArithmeticMode,
    ) -> Result<Self, LatticeError> {
        let shift = shift.iter().map(|&s| rat_from_f64(s)).collect();
        LatticeProblem::new(dims, shift, mode)
    }

    pub fn n(&self) -> usize {
        self.dims.len()
    }

    pub fn weighted_coords(&self) -> usize {
        self.k
    }

    pub fn dims(&self) -> &[u32] {
        &self.dims
    }

    pub fn shift(&self) -> &[Rat] {
        &self.shift
    }

    pub fn mode(&self) -> ArithmeticMode {
        self.mode
    }

    /// `|d| = d_1 + ... + d_n`, the homogeneity degree of the counting
    /// function.
    pub fn total_degree(&self) -> u32 {
        self.dims.iter().sum()
    }

    fn coord_specs(&self) -> Vec<CoordSpec> {
        let mut weighted: Vec<CoordSpec> = Vec::new();
        let mut free: Vec<CoordSpec> = Vec::new();
        for (i, &d) in self.dims.iter().enumerate() {
            let y = self.shift[i].clone();
            if d >= 2 {
                let min_index = (-&y).ceil().to_integer().to_i64().expect("shift in range");
                weighted.push(CoordSpec {
                    shift: y,
                    exponent: d - 1,
                    min_index: Some(min_index),
                });
            } else {
                free.push(CoordSpec {
                    shift: y,
                    exponent: 0,
                    min_index: None,
                });
            }
        }
        // Largest weights vary slowest; a free coordinate, when present,
        // goes last so the innermost sum is a closed-form point count.
        weighted.sort_by(|a, b| b.exponent.cmp(&a.exponent));
        weighted.extend(free);
        weighted
    }
}

/// The value of a weighted lattice count at one radius.
#[derive(Clone, Debug)]
pub enum SumValue {
    Exact(Rat),
    Floating(f64),
}

impl SumValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            SumValue::Exact(r) => rat_to_f64(r),
            SumValue::Floating(v) => *v,
        }
    }

    pub fn as_exact(&self) -> Option<&Rat> {
        match self {
            SumValue::Exact(r) => Some(r),
            SumValue::Floating(_) => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct WeightedSum {
    pub value: SumValue,
    pub lambda: f64,
    pub problem: LatticeProblem,
}

// ---------------------------------------------------------------------------
// Bernoulli numbers and Faulhaber power sums
// ---------------------------------------------------------------------------

/// Bernoulli numbers `B_0..=B_max` in the `B_1 = -1/2` convention.
pub fn bernoulli_numbers(max: u32) -> Vec<Rat> {
    let mut b: Vec<Rat> = Vec::with_capacity(max as usize + 1);
    b.push(Rat::one());
    for m in 1..=max as u64 {
        let mut acc = Rat::zero();
        for (j, bj) in b.iter().enumerate() {
            acc += rat_int(BigInt::from(binom(m + 1, j as u64))) * bj;
        }
        b.push(-acc / rat_int(BigInt::from(m + 1)));
    }
    b
}

/// Precomputed Bernoulli table sized for a maximum exponent.
pub(crate) struct PowerSums {
    bern: Vec<Rat>,
}

impl PowerSums {
    pub(crate) fn new(max_exponent: u32) -> Self {
        PowerSums {
            bern: bernoulli_numbers(max_exponent + 1),
        }
    }

    /// `sum_{j=0}^{m} j^e` for `m >= -1` (empty when `m = -1`), with the
    /// convention `0^0 = 1`.
    fn powsum0(&self, e: u32, m: i64) -> Rat {
        debug_assert!(m >= -1);
        let mp1 = rat_int(m + 1);
        let mut acc = Rat::zero();
        let mut power = mp1.clone(); // (m+1)^(e+1-i), starting at i = e
        for i in (0..=e).rev() {
            let c = rat_int(BigInt::from(binom(e as u64 + 1, i as u64)));
            acc += c * &self.bern[i as usize] * &power;
            power *= &mp1;
        }
        acc / rat_int(e as i64 + 1)
    }

    /// `sum_{j=1}^{m} j^e` for `m >= 0`.
    fn powsum1(&self, e: u32, m: i64) -> Rat {
        debug_assert!(m >= 0);
        let zero_term = if e == 0 { Rat::one() } else { Rat::zero() };
        self.powsum0(e, m) - zero_term
    }

    /// `sum_{j=a}^{b} j^e` over any integer interval, empty sums are zero.
    fn range_powsum(&self, e: u32, a: i64, b: i64) -> Rat {
        if a > b {
            return Rat::zero();
        }
        let mut acc = Rat::zero();
        // positive part
        if b >= 1 {
            let lo = a.max(1);
            acc += self.powsum1(e, b) - self.powsum1(e, lo - 1);
        }
        // the j = 0 term
        if a <= 0 && 0 <= b && e == 0 {
            acc += Rat::one();
        }
        // negative part, reflected
        if a <= -1 {
            let hi = b.min(-1);
            let reflected = self.powsum1(e, -a) - self.powsum1(e, -hi - 1);
            if e % 2 == 0 {
                acc += reflected;
            } else {
                acc -= reflected;
            }
        }
        acc
    }

    /// `sum_{j=a}^{b} (j + shift)^e`, exactly, via binomial expansion into
    /// plain power sums.
    pub(crate) fn shifted_sum(&self, e: u32, a: i64, b: i64, shift: &Rat) -> Rat {
        if a > b {
            return Rat::zero();
        }
        if shift.is_zero() {
            return self.range_powsum(e, a, b);
        }
        let mut acc = Rat::zero();
        let mut shift_pow = Rat::one(); // shift^(e-t), starting at t = e
        for t in (0..=e).rev() {
            let c = rat_int(BigInt::from(binom(e as u64, t as u64)));
            acc += c * &shift_pow * self.range_powsum(t, a, b);
            shift_pow *= shift;
        }
        acc
    }
}

/// `sum_{j=a}^{b} (j + shift)^exponent` as an exact rational (zero when the
/// interval is empty), evaluated through Bernoulli-number power sums.
pub fn faulhaber_sum(exponent: u32, a: i64, b: i64, shift: &Rat) -> Rat {
    PowerSums::new(exponent).shifted_sum(exponent, a, b, shift)
}

// ---------------------------------------------------------------------------
// Exact recursion over coordinates
// ---------------------------------------------------------------------------

/// One coordinate of a lattice sum: lattice points are `j + shift` for
/// integer `j`, weighted by `(j + shift)^exponent`, with `j` optionally
/// bounded below.
#[derive(Clone, Debug)]
pub(crate) struct CoordSpec {
    pub shift: Rat,
    pub exponent: u32,
    pub min_index: Option<i64>,
}

/// Largest integer `j` with `j + y <= sqrt(t)`, i.e. the upper end of the
/// admissible index range. (For `j + y <= 0` the condition is read as
/// automatically satisfied, which makes the value well defined even when no
/// index on the nonnegative side fits.)
pub(crate) fn shifted_floor_sqrt(y: &Rat, t: &Rat) -> i64 {
    debug_assert!(!t.is_negative());
    let admissible = |j: i64| -> bool {
        let s = rat_int(j) + y;
        !s.is_positive() || &s * &s <= *t
    };
    let estimate = (rat_to_f64(t).max(0.0).sqrt() - rat_to_f64(y)).floor();
    assert!(
        estimate.abs() < 4.0e15,
        "radius too large for lattice enumeration"
    );
    let mut j = if estimate.is_finite() {
        estimate as i64
    } else {
        0
    };
    while !admissible(j) {
        j -= 1;
    }
    while admissible(j + 1) {
        j += 1;
    }
    j
}

/// Admissible index interval for one coordinate and squared-radius budget:
/// all `j` with `(j + y)^2 <= t` (further clipped by `min_index`). Returns
/// `None` when empty.
pub(crate) fn index_range(spec: &CoordSpec, t: &Rat) -> Option<(i64, i64)> {
    if t.is_negative() {
        return None;
    }
    let hi = shifted_floor_sqrt(&spec.shift, t);
    let mut lo = -shifted_floor_sqrt(&(-&spec.shift), t);
    if let Some(min) = spec.min_index {
        lo = lo.max(min);
    }
    if lo <= hi {
        Some((lo, hi))
    } else {
        None
    }
}

fn sum_rec(coords: &[CoordSpec], t: &Rat, weight: &Rat, tables: &PowerSums, total: &mut Rat) {
    let spec = &coords[0];
    let Some((lo, hi)) = index_range(spec, t) else {
        return;
    };
    if coords.len() == 1 {
        if spec.exponent == 0 {
            *total += weight * rat_int(hi - lo + 1);
        } else {
            *total += weight * tables.shifted_sum(spec.exponent, lo, hi, &spec.shift);
        }
        return;
    }
    for j in lo..=hi {
        let s = rat_int(j) + &spec.shift;
        let contribution = if spec.exponent == 0 {
            weight.clone()
        } else {
            if s.is_zero() {
                continue;
            }
            weight * s.pow(spec.exponent as i32)
        };
        let t_next = t - &s * &s;
        sum_rec(&coords[1..], &t_next, &contribution, tables, total);
    }
}

pub(crate) fn weighted_sum_exact(coords: &[CoordSpec], t: &Rat) -> Rat {
    if t.is_negative() {
        return Rat::zero();
    }
    let max_exp = coords.iter().map(|c| c.exponent).max().unwrap_or(0);
    let tables = PowerSums::new(max_exp);
    let mut total = Rat::zero();
    sum_rec(coords, t, &Rat::one(), &tables, &mut total);
    total
}

/// Lattice points in the open-closed annulus `t_lo < |m|^2 <= t_hi`,
/// returned as `(|m|^2, weight)` pairs. Exact; used for mollified boundary
/// shells.
pub(crate) fn annulus_points(coords: &[CoordSpec], t_lo: &Rat, t_hi: &Rat) -> Vec<(Rat, Rat)> {
    fn rec(
        coords: &[CoordSpec],
        part_sq: &Rat,
        weight: &Rat,
        t_lo: &Rat,
        t_hi: &Rat,
        out: &mut Vec<(Rat, Rat)>,
    ) {
        let spec = &coords[0];
        let budget = t_hi - part_sq;
        let Some((lo, hi)) = index_range(spec, &budget) else {
            return;
        };
        if coords.len() == 1 {
            // Skip the sub-range that stays inside the inner ball.
            let inner_budget = t_lo - part_sq;
            let inner = index_range(spec, &inner_budget);
            let mut visit = |a: i64, b: i64| {
                for j in a..=b {
                    let s = rat_int(j) + &spec.shift;
                    let w = if spec.exponent == 0 {
                        weight.clone()
                    } else {
                        weight * s.pow(spec.exponent as i32)
                    };
                    out.push((part_sq + &s * &s, w));
                }
            };
            match inner {
                Some((ilo, ihi)) => {
                    visit(lo, ilo - 1);
                    visit(ihi + 1, hi);
                }
                None => visit(lo, hi),
            }
            return;
        }
        for j in lo..=hi {
            let s = rat_int(j) + &spec.shift;
            let w = if spec.exponent == 0 {
                weight.clone()
            } else {
                weight * s.pow(spec.exponent as i32)
            };
            let part_next = part_sq + &s * &s;
            rec(&coords[1..], &part_next, &w, t_lo, t_hi, out);
        }
    }

    let mut out = Vec::new();
    if t_hi.is_negative() || t_hi <= t_lo {
        return out;
    }
    rec(coords, &Rat::zero(), &Rat::one(), t_lo, t_hi, &mut out);
    out
}

pub(crate) fn problem_coord_specs(problem: &LatticeProblem) -> Vec<CoordSpec> {
    problem.coord_specs()
}

// ---------------------------------------------------------------------------
// Floating mode (compensated summation)
// ---------------------------------------------------------------------------

/// Kahan-Babuska-Neumaier compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Compensated {
    sum: f64,
    correction: f64,
}

impl Compensated {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.correction += (self.sum - t) + x;
        } else {
            self.correction += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.correction
    }
}

struct FloatCoord {
    shift: f64,
    exponent: u32,
    nonnegative: bool,
}

fn sum_rec_float(coords: &[FloatCoord], t: f64, weight: f64, acc: &mut Compensated) {
    let spec = &coords[0];
    if t < 0.0 {
        return;
    }
    let root = t.sqrt();
    let mut lo = (-root - spec.shift).ceil() as i64;
    let hi = (root - spec.shift).floor() as i64;
    if spec.nonnegative {
        lo = lo.max((-spec.shift).ceil() as i64);
    }
    for j in lo..=hi {
        let s = j as f64 + spec.shift;
        if s * s > t {
            continue;
        }
        let w = if spec.exponent == 0 {
            weight
        } else {
            weight * s.powi(spec.exponent as i32)
        };
        if coords.len() == 1 {
            acc.add(w);
        } else {
            sum_rec_float(&coords[1..], t - s * s, w, acc);
        }
    }
}

fn weighted_count_float(problem: &LatticeProblem, lambda: f64) -> f64 {
    let coords: Vec<FloatCoord> = problem
        .coord_specs()
        .into_iter()
        .map(|c| FloatCoord {
            shift: rat_to_f64(&c.shift),
            exponent: c.exponent,
            nonnegative: c.min_index.is_some(),
        })
        .collect();
    let mut acc = Compensated::default();
    sum_rec_float(&coords, lambda * lambda, 1.0, &mut acc);
    acc.value()
}

// ---------------------------------------------------------------------------
// Public operations
// ---------------------------------------------------------------------------

/// The weighted count at radius `lambda` (closed ball, `|m| <= lambda`).
///
/// In exact mode the threshold used is the exact square of the given f64.
pub fn weighted_count(problem: &LatticeProblem, lambda: f64) -> WeightedSum {
    match problem.mode {
        ArithmeticMode::Exact => {
            let t = rat_from_f64(lambda);
            weighted_count_sq(problem, &(&t * &t))
        }
        ArithmeticMode::Floating => WeightedSum {
            value: SumValue::Floating(weighted_count_float(problem, lambda)),
            lambda,
            problem: problem.clone(),
        },
    }
}

/// The weighted count with the squared radius supplied exactly.
pub fn weighted_count_sq(problem: &LatticeProblem, lambda_sq: &Rat) -> WeightedSum {
    let lambda = rat_to_f64(lambda_sq).max(0.0).sqrt();
    match problem.mode {
        ArithmeticMode::Exact => {
            let coords = problem.coord_specs();
            WeightedSum {
                value: SumValue::Exact(weighted_sum_exact(&coords, lambda_sq)),
                lambda,
                problem: problem.clone(),
            }
        }
        ArithmeticMode::Floating => WeightedSum {
            value: SumValue::Floating(weighted_count_float(problem, lambda)),
            lambda,
            problem: problem.clone(),
        },
    }
}

/// The Dirichlet integral of the weight over the unit-ball slice, exactly:
/// `pi^((n-k)/2) * prod Gamma(d_i/2) / (2^k Gamma(|d|/2 + 1))`.
pub fn main_term_exact(problem: &LatticeProblem) -> PiPower {
    let n = problem.n() as u32;
    let k = problem.k as u32;
    let mut value = PiPower {
        coef: Rat::one(),
        pi_half_exp: (n - k) as i32,
    };
    for &d in &problem.dims[..problem.k] {
        value = value.mul(&gamma_half(d));
    }
    let denom = gamma_half(problem.total_degree() + 2).scale(&rat_int(BigInt::from(2u32).pow(k)));
    value.div(&denom)
}

/// Numeric value of the main-term integral (relative accuracy far better
/// than 1e-12; the closed form is exact and only the final conversion
/// rounds).
pub fn main_term(problem: &LatticeProblem) -> f64 {
    main_term_exact(problem).to_f64()
}

/// `lambda^degree` as a high-precision rational, given `lambda^2` exactly.
/// Odd degrees go through a 60-digit square-root approximation.
pub(crate) fn lambda_power(lambda_sq: &Rat, degree: u32) -> Rat {
    let whole = lambda_sq.pow((degree / 2) as i32);
    if degree % 2 == 0 {
        whole
    } else {
        whole * sqrt_rat_approx(lambda_sq, 60)
    }
}

/// The weighted count at one radius together with the remainder
/// `E(lambda) = count - lambda^{|d|} * main_term`.
///
/// The exact sum meets the main term at full precision (the pi constant
/// carries ~100 digits) and is rounded to f64 only on return.
pub fn count_and_remainder_sq(problem: &LatticeProblem, lambda_sq: &Rat) -> (WeightedSum, f64) {
    let count = weighted_count_sq(problem, lambda_sq);
    let error = match &count.value {
        SumValue::Exact(sum) => {
            let main = main_term_exact(problem).to_rat_approx()
                * lambda_power(lambda_sq, problem.total_degree());
            rat_to_f64(&(sum - main))
        }
        SumValue::Floating(sum) => {
            let lambda = rat_to_f64(lambda_sq).max(0.0).sqrt();
            sum - main_term(problem) * lambda.powi(problem.total_degree() as i32)
        }
    };
    (count, error)
}

pub fn remainder_sq(problem: &LatticeProblem, lambda_sq: &Rat) -> f64 {
    count_and_remainder_sq(problem, lambda_sq).1
}

pub fn remainder(problem: &LatticeProblem, lambda: f64) -> f64 {
    let l = rat_from_f64(lambda);
    remainder_sq(problem, &(&l * &l))
}

/// Counts and remainders over a grid, in parallel, in grid order.
pub fn remainder_samples(
    problem: &LatticeProblem,
    grid: &[GridPoint],
) -> Vec<(f64, WeightedSum, f64)> {
    grid.par_iter()
        .map(|p| {
            let (count, error) = count_and_remainder_sq(problem, &p.lambda_sq);
            (p.lambda, count, error)
        })
        .collect()
}

/// Samples `E(lambda)` over a grid, in parallel, in deterministic order.
pub fn remainder_series(
    problem: &LatticeProblem,
    grid: &[GridPoint],
    source: &str,
) -> RemainderSeries {
    let samples: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|p| (p.lambda, remainder_sq(problem, &p.lambda_sq)))
        .collect();
    RemainderSeries::new(samples, problem.total_degree() as f64, source)
        .expect("grid is strictly increasing")
}
