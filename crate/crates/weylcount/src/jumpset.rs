//! A unit-density point set whose pair-counting function has jumps of
//! order `lambda` at the dyadic radii `2^k`.
//!
//! For each block `k` the set receives the integers in
//! `[2^(k-1/2) + 1, 2^k - 1]` and the points `sqrt(2^(2k) - n^2)` for the
//! same integer range, so that pairs `(n, sqrt(2^(2k) - n^2))` pile up on
//! the circle of radius exactly `2^k`. Unit-interval collisions between
//! blocks are resolved toward the larger block (the dropped candidate is
//! recorded), and every interval left empty receives its midpoint.
//!
//! All point magnitudes are carried as exact squared values (times 4, so
//! midpoints stay integral) and pair counts at dyadic ties are exact.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Roots;
use num_traits::Signed;
use thiserror::Error;

use crate::exact::{rat_from_f64, Rat};

#[derive(Debug, Error, PartialEq)]
pub enum JumpSetError {
    #[error("x_max must be at least 4, got {0}")]
    XMaxTooSmall(f64),
    #[error("lambda {lambda} exceeds the usable range {max} of this set")]
    LambdaOutOfRange { lambda: f64, max: f64 },
    #[error("delta must be in (0, 1/4], got {0}")]
    BadDelta(f64),
    #[error("block index must be >= 1")]
    BadBlock,
}

/// Where a point came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    /// An integer of block `k`.
    BlockInteger { k: u32 },
    /// `sqrt(2^(2k) - n^2)` for the recorded `(k, n)`.
    SqrtPoint { k: u32, n: u64 },
    /// Midpoint filler for an interval left empty by the construction.
    Filler,
}

impl Provenance {
    pub fn block(&self) -> Option<u32> {
        match self {
            Provenance::BlockInteger { k } => Some(*k),
            Provenance::SqrtPoint { k, .. } => Some(*k),
            Provenance::Filler => None,
        }
    }
}

/// One point, stored as `4 * value^2` (exact for integers, sqrt-points,
/// and half-integer fillers alike).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct JumpPoint {
    pub sq4: u128,
    pub provenance: Provenance,
}

impl JumpPoint {
    pub fn value(&self) -> f64 {
        (self.sq4 as f64).sqrt() / 2.0
    }

    /// Index `t` of the unit interval `[t, t+1)` containing the point.
    pub fn interval(&self) -> u64 {
        (self.sq4.sqrt() / 2) as u64
    }
}

/// A candidate removed during collision resolution, with the interval it
/// contested.
#[derive(Clone, Copy, Debug)]
pub struct DroppedCandidate {
    pub point: JumpPoint,
    pub interval: u64,
}

#[derive(Clone, Debug)]
pub struct JumpSet {
    points: Vec<JumpPoint>,
    dropped: Vec<DroppedCandidate>,
    x_max: f64,
}

impl JumpSet {
    /// Builds the set on `[0, x_max)`, `x_max >= 4`.
    pub fn build(x_max: f64) -> Result<JumpSet, JumpSetError> {
        if !(x_max >= 4.0) {
            return Err(JumpSetError::XMaxTooSmall(x_max));
        }
        let limit = x_max.floor() as u64;
        let mut intervals: BTreeMap<u64, JumpPoint> = BTreeMap::new();
        let mut dropped: Vec<DroppedCandidate> = Vec::new();

        let mut place =
            |interval: u64, candidate: JumpPoint, dropped: &mut Vec<DroppedCandidate>| {
                match intervals.get(&interval) {
                    None => {
                        intervals.insert(interval, candidate);
                    }
                    Some(existing) => {
                        // larger block wins; ties keep the incumbent
                        let keep_new = candidate.provenance.block() > existing.provenance.block();
                        if keep_new {
                            dropped.push(DroppedCandidate {
                                point: *existing,
                                interval,
                            });
                            intervals.insert(interval, candidate);
                        } else {
                            dropped.push(DroppedCandidate {
                                point: candidate,
                                interval,
                            });
                        }
                    }
                }
            };

        let mut k = 1u32;
        while 1u128 << k <= limit as u128 {
            let pow2k = 1u128 << k; // 2^k
            let pow22k = 1u128 << (2 * k); // 2^(2k)
                                           // n >= 2^(k-1/2) + 1 exactly: (n-1)^2 >= 2^(2k-1), and
                                           // 2^(2k-1) is never a perfect square, so the floor root + 2.
            let n_lo = (1u128 << (2 * k - 1)).sqrt() as u64 + 2;
            let n_hi = (pow2k - 1) as u64;
            for n in n_lo..=n_hi {
                let int_point = JumpPoint {
                    sq4: 4 * (n as u128) * (n as u128),
                    provenance: Provenance::BlockInteger { k },
                };
                place(n, int_point, &mut dropped);
                let rem = pow22k - (n as u128) * (n as u128);
                let sqrt_point = JumpPoint {
                    sq4: 4 * rem,
                    provenance: Provenance::SqrtPoint { k, n },
                };
                place(sqrt_point.interval(), sqrt_point, &mut dropped);
            }
            k += 1;
        }

        for t in 0..limit {
            intervals.entry(t).or_insert(JumpPoint {
                sq4: (2 * (t as u128) + 1) * (2 * (t as u128) + 1),
                provenance: Provenance::Filler,
            });
        }

        let points: Vec<JumpPoint> = intervals.into_values().collect();
        Ok(JumpSet {
            points,
            dropped,
            x_max,
        })
    }

    pub fn points(&self) -> &[JumpPoint] {
        &self.points
    }

    pub fn dropped(&self) -> &[DroppedCandidate] {
        &self.dropped
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    /// Collision drops charged to block `k`.
    pub fn drops_in_block(&self, k: u32) -> usize {
        self.dropped
            .iter()
            .filter(|d| d.point.provenance.block() == Some(k))
            .count()
    }

    /// True when every interval `[t, t+1)`, `t < floor(x_max)`, holds
    /// exactly one point.
    pub fn unit_interval_census(&self) -> bool {
        let limit = self.x_max.floor() as u64;
        self.points.len() as u64 == limit
            && self
                .points
                .iter()
                .enumerate()
                .all(|(t, p)| p.interval() == t as u64)
    }

    /// Exact check that consecutive same-block sqrt-points are more than
    /// one apart: `sqrt(a) - sqrt(b) > 1` iff `(a - b - 1)^2 > 4b`.
    pub fn sqrt_gaps_exceed_one(&self, k: u32) -> bool {
        let squares: Vec<u128> = {
            let pow22k = 1u128 << (2 * k);
            let n_lo = (1u128 << (2 * k - 1)).sqrt() as u64 + 2;
            let n_hi = (1u64 << k) - 1;
            (n_lo..=n_hi)
                .map(|n| pow22k - (n as u128) * (n as u128))
                .collect()
        };
        squares.windows(2).all(|w| {
            let (b, a) = (w[1], w[0]); // values decrease with n
            a > b + 1 && (a - b - 1) * (a - b - 1) > 4 * b
        })
    }

    fn check_range(&self, lambda: f64) -> Result<(), JumpSetError> {
        // usable range: lambda <= x_max * sqrt(2)
        if lambda * lambda > 2.0 * self.x_max * self.x_max {
            return Err(JumpSetError::LambdaOutOfRange {
                lambda,
                max: self.x_max * std::f64::consts::SQRT_2,
            });
        }
        Ok(())
    }

    /// Number of ordered pairs `(a, b)` with `a^2 + b^2 <= lambda_sq`,
    /// exact at ties.
    pub fn pair_count_sq(&self, lambda_sq: &Rat) -> u128 {
        if lambda_sq.is_negative() {
            return 0;
        }
        // condition (sq4_a + sq4_b) <= 4 lambda^2, cross-multiplied
        let num4: BigInt = lambda_sq.numer() * BigInt::from(4);
        let den: BigInt = lambda_sq.denom().clone();
        let fits = |sum: u128| -> bool { BigInt::from(sum) * &den <= num4 };
        let s: Vec<u128> = self.points.iter().map(|p| p.sq4).collect();
        let mut count: u128 = 0;
        let mut j = s.len();
        for i in 0..s.len() {
            while j > 0 && !fits(s[i] + s[j - 1]) {
                j -= 1;
            }
            if j == 0 {
                break;
            }
            count += j as u128;
        }
        count
    }

    pub fn pair_count(&self, lambda: f64) -> Result<u128, JumpSetError> {
        self.check_range(lambda)?;
        let l = rat_from_f64(lambda);
        Ok(self.pair_count_sq(&(&l * &l)))
    }

    /// `pair_count(2^k + delta) - pair_count(2^k - delta)`.
    pub fn jump(&self, k: u32, delta: f64) -> Result<u128, JumpSetError> {
        if k == 0 {
            return Err(JumpSetError::BadBlock);
        }
        if !(delta > 0.0 && delta <= 0.25) {
            return Err(JumpSetError::BadDelta(delta));
        }
        let center = (1u64 << k) as f64;
        let hi = self.pair_count(center + delta)?;
        let lo = self.pair_count(center - delta)?;
        Ok(hi - lo)
    }

    /// The paper-style jump threshold `2^k (2 - sqrt 2) - 3`.
    pub fn jump_threshold(k: u32) -> f64 {
        (1u64 << k) as f64 * (2.0 - std::f64::consts::SQRT_2) - 3.0
    }

    /// Area constant of the pair-count main term: the points are positive,
    /// so the pairs fill the quarter disk and `N(lambda) ~ (pi/4) lambda^2`.
    pub const PAIR_AREA: f64 = std::f64::consts::FRAC_PI_4;

    /// Normalized deviation `|pair_count(2^k) - (pi/4) 4^k| / 2^k` at each
    /// dyadic radius in the range.
    pub fn ratio_at_jumps(
        &self,
        k_range: std::ops::RangeInclusive<u32>,
    ) -> Result<Vec<(u32, f64)>, JumpSetError> {
        let mut out = Vec::new();
        for k in k_range {
            let lambda = (1u64 << k) as f64;
            let count = self.pair_count(lambda)? as f64;
            let deviation = (count - Self::PAIR_AREA * lambda * lambda).abs() / lambda;
            out.push((k, deviation));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    /// Quadratic oracle with no two-pointer logic.
    fn brute_pair_count(set: &JumpSet, lambda_sq: &Rat) -> u128 {
        let num4: BigInt = lambda_sq.numer() * BigInt::from(4);
        let den: BigInt = lambda_sq.denom().clone();
        let mut count = 0u128;
        for a in set.points() {
            for b in set.points() {
                if BigInt::from(a.sq4 + b.sq4) * &den <= num4 {
                    count += 1;
                }
            }
        }
        count
    }

    #[test]
    fn rejects_small_x_max() {
        assert!(JumpSet::build(3.5).is_err());
        assert!(JumpSet::build(f64::NAN).is_err());
    }

    #[test]
    fn block_two_is_empty_block_three_has_seven() {
        // k = 2: integer range [2^1.5 + 1, 3] is empty (3.828 > 3)
        // k = 3: integers {7}, sqrt-point sqrt(64 - 49) = sqrt(15)
        let set = JumpSet::build(8.0).unwrap();
        let from_blocks: Vec<&JumpPoint> = set
            .points()
            .iter()
            .filter(|p| p.provenance != Provenance::Filler)
            .collect();
        assert_eq!(from_blocks.len(), 2);
        assert_eq!(
            from_blocks[0].provenance,
            Provenance::SqrtPoint { k: 3, n: 7 }
        );
        assert_eq!(from_blocks[0].sq4, 4 * 15);
        assert_eq!(from_blocks[0].interval(), 3); // sqrt(15) ~ 3.873
        assert_eq!(from_blocks[1].provenance, Provenance::BlockInteger { k: 3 });
        assert_eq!(from_blocks[1].sq4, 4 * 49);
    }

    #[test]
    fn census_holds_to_one_hundred() {
        let set = JumpSet::build(100.0).unwrap();
        assert!(set.unit_interval_census());
        assert_eq!(set.points().len(), 100);
    }

    #[test]
    fn within_block_sqrt_gaps() {
        let set = JumpSet::build(1024.0).unwrap();
        for k in 3..=10 {
            assert!(set.sqrt_gaps_exceed_one(k), "gap <= 1 in block {k}");
        }
    }

    #[test]
    fn pair_count_matches_brute_oracle() {
        let set = JumpSet::build(64.0).unwrap();
        for t in [
            rat(1, 1),
            rat(101, 2),
            rat(1024, 1), // lambda = 2^5, exact dyadic tie
            rat(4096, 1),
            rat(8191, 1),
        ] {
            assert_eq!(
                set.pair_count_sq(&t),
                brute_pair_count(&set, &t),
                "mismatch at lambda_sq = {t}"
            );
        }
        // full-size oracle run at the top of the supported brute range
        let set = JumpSet::build(2000.0).unwrap();
        for t in [rat(1 << 20, 1), rat(2_999_999, 2)] {
            assert_eq!(
                set.pair_count_sq(&t),
                brute_pair_count(&set, &t),
                "mismatch at lambda_sq = {t}"
            );
        }
    }

    #[test]
    fn pair_count_is_symmetric_in_ordered_pairs() {
        // every unordered pair {a, b} with a != b is counted twice; with
        // the diagonal, the total has the same parity as the diagonal count
        let set = JumpSet::build(64.0).unwrap();
        let t = rat(2000, 1);
        let total = set.pair_count_sq(&t);
        let num4: BigInt = t.numer() * BigInt::from(4);
        let den: BigInt = t.denom().clone();
        let diagonal = set
            .points()
            .iter()
            .filter(|p| BigInt::from(2 * p.sq4) * &den <= num4)
            .count() as u128;
        assert_eq!((total - diagonal) % 2, 0);
    }

    #[test]
    fn dyadic_tie_includes_block_pairs() {
        // at lambda^2 = 4^k the count gains at least the mirrored pairs
        // (n, sqrt(4^k - n^2)) whose partners both survived resolution
        let set = JumpSet::build(1024.0).unwrap();
        let k = 8u32;
        let at_tie = set.pair_count_sq(&rat(1 << (2 * k), 1));
        let below = set.pair_count_sq(&rat((1 << (2 * k)) - 1, 1));
        let alive: std::collections::HashSet<u128> = set
            .points()
            .iter()
            .filter(|p| p.provenance.block() == Some(k))
            .map(|p| p.sq4)
            .collect();
        let pow22k = 1u128 << (2 * k);
        let complete_pairs = alive
            .iter()
            .filter(|&&sq4| alive.contains(&(4 * pow22k - sq4)))
            .count() as u128;
        assert!(complete_pairs > 0);
        assert!(at_tie - below >= complete_pairs);
    }

    #[test]
    fn jump_meets_threshold_with_drop_accounting() {
        let set = JumpSet::build(1024.0).unwrap();
        let k = 10;
        let jump = set.jump(k, 0.125).unwrap();
        let threshold = JumpSet::jump_threshold(k) - 2.0 * set.drops_in_block(k) as f64;
        assert!((596.0..597.0).contains(&JumpSet::jump_threshold(k)));
        assert!(
            jump as f64 >= threshold,
            "jump {jump} below threshold {threshold}"
        );
    }

    #[test]
    fn jump_shrinks_with_delta() {
        let set = JumpSet::build(256.0).unwrap();
        let wide = set.jump(7, 0.25).unwrap();
        let narrow = set.jump(7, 0.0625).unwrap();
        assert!(narrow <= wide);
    }

    #[test]
    fn jump_rejects_bad_arguments() {
        let set = JumpSet::build(64.0).unwrap();
        assert!(matches!(set.jump(0, 0.125), Err(JumpSetError::BadBlock)));
        assert!(matches!(set.jump(4, 0.3), Err(JumpSetError::BadDelta(_))));
        assert!(matches!(
            set.pair_count(1000.0),
            Err(JumpSetError::LambdaOutOfRange { .. })
        ));
    }

    #[test]
    fn drop_accounting_is_exact() {
        // every candidate is either kept or recorded as dropped
        let set = JumpSet::build(4096.0).unwrap();
        for k in 3..=12u32 {
            let n_lo = (1u128 << (2 * k - 1)).sqrt() as u64 + 2;
            let n_hi = (1u64 << k) - 1;
            let candidates = if n_hi >= n_lo {
                2 * (n_hi - n_lo + 1) as usize
            } else {
                0
            };
            let kept = set
                .points()
                .iter()
                .filter(|p| p.provenance.block() == Some(k))
                .count();
            assert_eq!(
                kept + set.drops_in_block(k),
                candidates,
                "accounting broken for block {k}"
            );
        }
    }

    #[test]
    fn top_block_jump_reaches_the_construction_mass() {
        // the top block of a tower is never displaced by a higher block;
        // its jump realizes the full (2 - sqrt 2) mass per unit radius
        let set = JumpSet::build(4096.0).unwrap();
        let k = 12;
        assert_eq!(set.drops_in_block(k), 0);
        let jump = set.jump(k, 0.125).unwrap() as f64;
        let pow = (1u64 << k) as f64;
        assert!(
            jump / pow >= (2.0 - std::f64::consts::SQRT_2) - 0.1,
            "top-block jump ratio {}",
            jump / pow
        );
    }

    #[test]
    fn inner_block_jumps_meet_the_drop_accounted_bound() {
        let set = JumpSet::build(4096.0).unwrap();
        for k in 6..=12u32 {
            let jump = set.jump(k, 0.125).unwrap() as f64;
            let bound = JumpSet::jump_threshold(k) - 2.0 * set.drops_in_block(k) as f64;
            assert!(jump >= bound, "block {k}: jump {jump} < bound {bound}");
        }
    }
}
