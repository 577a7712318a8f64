//! Exact Weyl counting for products of spheres and circles.
//!
//! The counting function of `S^{d_1} x ... x S^{d_n}` at threshold
//! `lambda^2` is the sum over level tuples `(k_1, ..., k_n)` with
//! `sum k_i (k_i + d_i - 1) <= lambda^2` of the product of level
//! multiplicities. It is evaluated by dimension recursion with the
//! innermost factor resolved by a cumulative closed form, checked against
//! a direct enumeration oracle, and reduced step by step to the weighted
//! shifted-lattice sum it asymptotically equals.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::analysis::{GridPoint, RemainderSeries};
use crate::exact::{rat_int, rat_to_f64, PiPower, Rat};
use crate::lattice::{weighted_count_sq, ArithmeticMode, CoordSpec, LatticeProblem};
use crate::special::{ball_volume_exact, factorial, sphere_volume_exact};
use crate::spectra::{cum_mult, eigen_sq, max_level_index, mult, Factor};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ManifoldParseError {
    #[error("empty dimension list")]
    Empty,
    #[error("invalid dimension entry `{0}`: expected a positive integer")]
    BadEntry(String),
}

/// A product `S^{d_1} x ... x S^{d_n}`, normalized so that sphere factors
/// (`d_i >= 2`) precede circle factors (`d_i = 1`), each with its
/// half-integer spectral shift `(d_i - 1)/2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductManifold {
    dims: Vec<u32>,
    permutation: Vec<usize>,
    sphere_count: usize,
}

impl ProductManifold {
    pub fn new(dims: Vec<u32>) -> Result<Self, ManifoldParseError> {
        if dims.is_empty() {
            return Err(ManifoldParseError::Empty);
        }
        for &d in &dims {
            if d == 0 {
                return Err(ManifoldParseError::BadEntry(d.to_string()));
            }
        }
        // Stable normalization: spheres first, circles gathered rightmost.
        let mut order: Vec<usize> = (0..dims.len()).collect();
        order.sort_by_key(|&i| dims[i] == 1);
        let normalized: Vec<u32> = order.iter().map(|&i| dims[i]).collect();
        let sphere_count = normalized.iter().filter(|&&d| d >= 2).count();
        Ok(ProductManifold {
            dims: normalized,
            permutation: order,
            sphere_count,
        })
    }

    /// Parses a comma-separated dimension list such as `"2,3,1"`.
    pub fn parse(spec: &str) -> Result<Self, ManifoldParseError> {
        let mut dims = Vec::new();
        for token in spec.split(',') {
            let token = token.trim();
            match token.parse::<u32>() {
                Ok(d) if d >= 1 => dims.push(d),
                _ => return Err(ManifoldParseError::BadEntry(token.to_string())),
            }
        }
        ProductManifold::new(dims)
    }

    pub fn dims(&self) -> &[u32] {
        &self.dims
    }

    /// Indices of the normalized entries in the originally supplied list.
    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn factor_count(&self) -> usize {
        self.dims.len()
    }

    /// Number of genuine sphere factors (`d_i >= 2`).
    pub fn sphere_count(&self) -> usize {
        self.sphere_count
    }

    /// `|d| = dim M`.
    pub fn total_dim(&self) -> u32 {
        self.dims.iter().sum()
    }

    /// The shift vector `y` with `y_i = (d_i - 1)/2`.
    pub fn shift(&self) -> Vec<Rat> {
        self.dims
            .iter()
            .map(|&d| Factor::new(d).unwrap().shift())
            .collect()
    }

    /// `|y|^2`, exactly.
    pub fn shift_norm_sq(&self) -> Rat {
        self.shift().iter().map(|y| y * y).sum()
    }

    /// The weighted-lattice problem matched to this manifold: dimensions
    /// `(d_1, ..., d_k, 1, ..., 1)` and shift `y`.
    pub fn lattice_problem(&self) -> LatticeProblem {
        LatticeProblem::new(self.dims.clone(), self.shift(), ArithmeticMode::Exact)
            .expect("normalized dims are a valid lattice problem")
    }

    /// The product of the leading polynomial coefficients
    /// `2/(d_i - 1)!` over the sphere factors.
    pub fn leading_weight(&self) -> Rat {
        let mut acc = Rat::one();
        for &d in &self.dims[..self.sphere_count] {
            acc *= rat_int(2) / rat_int(BigInt::from(factorial(d as u64 - 1)));
        }
        acc
    }
}

/// An exact count together with the query that produced it.
#[derive(Clone, Debug)]
pub struct CountResult {
    pub value: BigUint,
    pub lambda_sq: Rat,
    pub manifold: ProductManifold,
}

/// The four sums of the counting-to-lattice reduction at one radius:
/// the exact count `n`, the count `n1` restricted to sphere levels
/// `k_i >= 2`, the restricted monomial-weight sum `n2`, and the full
/// shifted-lattice monomial sum `n3`.
#[derive(Clone, Debug)]
pub struct ReductionChain {
    pub lambda: Rat,
    /// `lambda^2 + |y|^2`, the threshold on `|m + y|^2`.
    pub threshold: Rat,
    pub n: BigUint,
    pub n1: BigUint,
    pub n2: Rat,
    pub n3: Rat,
}

fn sorted_desc(dims: &[u32]) -> Vec<u32> {
    let mut v = dims.to_vec();
    v.sort_unstable_by(|a, b| b.cmp(a));
    v
}

/// Recursive exact count: outer factors are enumerated level by level,
/// the innermost factor is a cumulative-multiplicity closed form.
fn count_rec(dims: &[u32], threshold: &Rat, min_level: u64) -> BigUint {
    let factor = Factor::new(dims[0]).unwrap();
    let start = if dims[0] >= 2 { min_level } else { 0 };
    if dims.len() == 1 {
        let full = cum_mult(factor, threshold);
        if start == 0 {
            return full;
        }
        // Subtract the excluded low levels that fit under the threshold.
        let mut excluded = BigUint::zero();
        for k in 0..start {
            if rat_int(BigInt::from(eigen_sq(factor, k))) <= *threshold {
                excluded += mult(factor, k);
            }
        }
        full - excluded
    } else {
        let mut acc = BigUint::zero();
        let Some(k_max) = max_level_index(factor, threshold) else {
            return acc;
        };
        for k in start..=k_max {
            let remaining = threshold - rat_int(BigInt::from(eigen_sq(factor, k)));
            acc += mult(factor, k) * count_rec(&dims[1..], &remaining, min_level);
        }
        acc
    }
}

/// Exact Weyl count of eigenvalues with `lambda'^2 <= lambda_sq`.
pub fn count(manifold: &ProductManifold, lambda_sq: &Rat) -> CountResult {
    let dims = sorted_desc(&manifold.dims);
    let value = if lambda_sq < &Rat::zero() {
        BigUint::zero()
    } else {
        count_rec(&dims, lambda_sq, 0)
    };
    CountResult {
        value,
        lambda_sq: lambda_sq.clone(),
        manifold: manifold.clone(),
    }
}

/// Direct enumeration oracle: visits every admissible level tuple with no
/// closed forms anywhere.
pub fn brute_count(manifold: &ProductManifold, lambda_sq: &Rat) -> CountResult {
    fn rec(dims: &[u32], threshold: &Rat, weight: &BigUint, acc: &mut BigUint) {
        let factor = Factor::new(dims[0]).unwrap();
        let mut k = 0u64;
        loop {
            let e = rat_int(BigInt::from(eigen_sq(factor, k)));
            if e > *threshold {
                break;
            }
            let w = weight * mult(factor, k);
            if dims.len() == 1 {
                *acc += w;
            } else {
                rec(&dims[1..], &(threshold - e), &w, acc);
            }
            k += 1;
        }
    }
    let mut value = BigUint::zero();
    if lambda_sq >= &Rat::zero() {
        rec(&manifold.dims, lambda_sq, &BigUint::one(), &mut value);
    }
    CountResult {
        value,
        lambda_sq: lambda_sq.clone(),
        manifold: manifold.clone(),
    }
}

/// The Weyl main-term constant `|B_{|d|}| vol(M) / (2 pi)^{|d|}`, exactly.
pub fn weyl_constant_exact(manifold: &ProductManifold) -> PiPower {
    let total = manifold.total_dim();
    let mut value = ball_volume_exact(total);
    for &d in &manifold.dims {
        value = value.mul(&sphere_volume_exact(d));
    }
    let two_pi_pow = PiPower {
        coef: rat_int(BigInt::from(2u32).pow(total)),
        pi_half_exp: 2 * total as i32,
    };
    value.div(&two_pi_pow)
}

pub fn weyl_constant(manifold: &ProductManifold) -> f64 {
    weyl_constant_exact(manifold).to_f64()
}

/// Estimated number of enumeration nodes for a count query; used by the
/// CLI work cap.
pub fn count_work_estimate(manifold: &ProductManifold, lambda_sq: &Rat) -> u128 {
    let dims = sorted_desc(&manifold.dims);
    let mut nodes: u128 = 1;
    for &d in dims.iter().take(dims.len().saturating_sub(1)) {
        let levels = max_level_index(Factor::new(d).unwrap(), lambda_sq)
            .map(|k| k + 1)
            .unwrap_or(0);
        nodes = nodes.saturating_mul(levels as u128 + 1);
    }
    nodes
}

/// Computes the reduction chain `n -> n1 -> n2 -> n3` at radius `lambda`.
///
/// All four sums live at the threshold `lambda^2 + |y|^2` on `|m + y|^2`;
/// `n3` delegates to the weighted lattice count.
pub fn reduction_chain(manifold: &ProductManifold, lambda: &Rat) -> ReductionChain {
    let lambda_sq = lambda * lambda;
    let threshold = &lambda_sq + manifold.shift_norm_sq();
    let dims = sorted_desc(&manifold.dims);

    let n = count_rec(&dims, &lambda_sq, 0);
    let n1 = count_rec(&dims, &lambda_sq, 2);

    // n2: sphere indices j >= 2 with monomial weights (j + y_i)^{d_i - 1},
    // circles unrestricted, threshold on |m + y|^2.
    let shift = manifold.shift();
    let mut coords: Vec<CoordSpec> = Vec::with_capacity(manifold.factor_count());
    for (i, &d) in manifold.dims.iter().enumerate() {
        if d >= 2 {
            coords.push(CoordSpec {
                shift: shift[i].clone(),
                exponent: d - 1,
                min_index: Some(2),
            });
        } else {
            coords.push(CoordSpec {
                shift: Rat::zero(),
                exponent: 0,
                min_index: None,
            });
        }
    }
    coords.sort_by(|a, b| b.exponent.cmp(&a.exponent));
    let n2 = manifold.leading_weight() * crate::lattice::weighted_sum_exact(&coords, &threshold);

    let problem = manifold.lattice_problem();
    let n3_sum = weighted_count_sq(&problem, &threshold);
    let n3 = manifold.leading_weight() * n3_sum.value.as_exact().expect("exact mode").clone();

    ReductionChain {
        lambda: lambda.clone(),
        threshold,
        n,
        n1,
        n2,
        n3,
    }
}

/// Counts and Weyl remainders `N(lambda) - c lambda^{|d|}` over a grid,
/// with the subtraction done against the ~100-digit pi constant.
pub fn remainder_samples(
    manifold: &ProductManifold,
    grid: &[GridPoint],
) -> Vec<(f64, BigUint, f64)> {
    let constant = weyl_constant_exact(manifold).to_rat_approx();
    let degree = manifold.total_dim();
    grid.par_iter()
        .map(|p| {
            let n = count(manifold, &p.lambda_sq).value;
            let main = &constant * crate::lattice::lambda_power(&p.lambda_sq, degree);
            let error = rat_int(BigInt::from(n.clone())) - main;
            (p.lambda, n, rat_to_f64(&error))
        })
        .collect()
}

/// Samples the Weyl remainder over a grid as a fit-ready series.
pub fn remainder_series(
    manifold: &ProductManifold,
    grid: &[GridPoint],
    source: &str,
) -> RemainderSeries {
    let samples: Vec<(f64, f64)> = remainder_samples(manifold, grid)
        .into_iter()
        .map(|(lambda, _, error)| (lambda, error))
        .collect();
    RemainderSeries::new(samples, manifold.total_dim() as f64, source)
        .expect("grid is strictly increasing")
}

/// Reduction-gap series `|N - N3|` over a lambda grid.
pub fn reduction_gap_series(
    manifold: &ProductManifold,
    lambdas: &[Rat],
    source: &str,
) -> RemainderSeries {
    let samples: Vec<(f64, f64)> = lambdas
        .par_iter()
        .map(|l| {
            let chain = reduction_chain(manifold, l);
            let gap = rat_int(BigInt::from(chain.n.clone())) - &chain.n3;
            (rat_to_f64(l), rat_to_f64(&gap))
        })
        .collect();
    RemainderSeries::new(samples, manifold.total_dim() as f64, source)
        .expect("lambdas strictly increasing")
}

impl CountResult {
    pub fn to_f64(&self) -> f64 {
        rat_to_f64(&rat_int(BigInt::from(self.value.clone())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn manifold(dims: &[u32]) -> ProductManifold {
        ProductManifold::new(dims.to_vec()).unwrap()
    }

    #[test]
    fn parse_and_normalization() {
        let m = ProductManifold::parse("2,1").unwrap();
        assert_eq!(m.dims(), &[2, 1]);
        assert_eq!(m.sphere_count(), 1);
        assert_eq!(m.total_dim(), 3);
        assert_eq!(m.shift(), vec![rat(1, 2), rat(0, 1)]);

        let m = ProductManifold::parse("1,3").unwrap();
        assert_eq!(m.dims(), &[3, 1]);
        assert_eq!(m.permutation(), &[1, 0]);

        // stable within groups
        let m = ProductManifold::parse("2,1,3,1").unwrap();
        assert_eq!(m.dims(), &[2, 3, 1, 1]);
        assert_eq!(m.permutation(), &[0, 2, 1, 3]);

        assert_eq!(
            ProductManifold::parse("2,0").unwrap_err(),
            ManifoldParseError::BadEntry("0".into())
        );
        assert!(ProductManifold::parse("").is_err());
        assert!(ProductManifold::parse("2,x").is_err());
        assert!(ProductManifold::parse("2,-1").is_err());
    }

    #[test]
    fn count_examples() {
        assert_eq!(
            count(&manifold(&[1, 1]), &rat(2, 1)).value,
            BigUint::from(9u32)
        );
        assert_eq!(
            count(&manifold(&[2]), &rat(100, 1)).value,
            BigUint::from(100u32)
        );
        assert_eq!(
            count(&manifold(&[2, 1]), &rat(2, 1)).value,
            BigUint::from(6u32)
        );
    }

    #[test]
    fn brute_count_examples() {
        assert_eq!(
            brute_count(&manifold(&[2]), &rat(100, 1)).value,
            BigUint::from(100u32)
        );
        assert_eq!(
            brute_count(&manifold(&[1, 1, 1]), &rat(0, 1)).value,
            BigUint::from(1u32)
        );
        let m = manifold(&[3, 2]);
        assert_eq!(
            brute_count(&m, &rat(9, 1)).value,
            count(&m, &rat(9, 1)).value
        );
    }

    #[test]
    fn count_matches_brute_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
        for case in 0..50 {
            let n = rng.gen_range(1..=3usize);
            let dims: Vec<u32> = (0..n).map(|_| rng.gen_range(1..=4)).collect();
            let m = ProductManifold::new(dims.clone()).unwrap();
            let t = rat(rng.gen_range(0..=900), rng.gen_range(1..=4));
            assert_eq!(
                count(&m, &t).value,
                brute_count(&m, &t).value,
                "case {case}: dims {dims:?} t {t}"
            );
        }
    }

    #[test]
    fn count_is_monotone_in_threshold() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0006);
        let m = manifold(&[2, 1]);
        let mut t = rat(0, 1);
        let mut prev = count(&m, &t).value;
        for _ in 0..30 {
            t += rat(rng.gen_range(1..=50), rng.gen_range(1..=3));
            let next = count(&m, &t).value;
            assert!(next >= prev);
            prev = next;
        }
    }

    #[test]
    fn sphere_closed_forms() {
        // S^2: N = (K+1)^2 with K = max{k : k(k+1) <= T}
        let s2 = manifold(&[2]);
        // S^3: N = J(J+1)(2J+1)/6 with J = max{k+1 : k(k+2) <= T}
        let s3 = manifold(&[3]);
        for t in (1..=10_000u32).step_by(37) {
            let t = rat(t as i64, 1);
            let k = max_level_index(Factor::new(2).unwrap(), &t).unwrap();
            assert_eq!(
                count(&s2, &t).value,
                BigUint::from((k + 1) * (k + 1)),
                "S^2 at {t}"
            );
            let j = max_level_index(Factor::new(3).unwrap(), &t).unwrap() + 1;
            assert_eq!(
                count(&s3, &t).value,
                BigUint::from(j * (j + 1) * (2 * j + 1) / 6),
                "S^3 at {t}"
            );
        }
    }

    #[test]
    fn tensor_consistency_two_factors() {
        // N for (a,b) equals the sum over levels of factor a of
        // cum_mult of factor b at the leftover budget.
        let m = manifold(&[3, 2]);
        let t = rat(400, 1);
        let fa = Factor::new(3).unwrap();
        let fb = Factor::new(2).unwrap();
        let mut expected = BigUint::zero();
        for k in 0..=max_level_index(fa, &t).unwrap() {
            let left = &t - rat_int(BigInt::from(eigen_sq(fa, k)));
            expected += mult(fa, k) * cum_mult(fb, &left);
        }
        assert_eq!(count(&m, &t).value, expected);
    }

    #[test]
    fn weyl_constant_spot_values() {
        assert_relative_eq!(weyl_constant(&manifold(&[2])), 1.0, max_relative = 1e-12);
        assert_relative_eq!(
            weyl_constant(&manifold(&[3])),
            1.0 / 3.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            weyl_constant(&manifold(&[2, 1])),
            4.0 / 3.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn weyl_constant_equals_weighted_main_term() {
        // The leading-coefficient product times the Dirichlet integral must
        // reproduce the Weyl constant; the comparison is exact.
        for dims in [
            vec![2],
            vec![3],
            vec![2, 1],
            vec![1, 1],
            vec![4, 3],
            vec![5, 2, 1],
            vec![3, 3, 2, 1],
        ] {
            let m = ProductManifold::new(dims.clone()).unwrap();
            let lattice_main = crate::lattice::main_term_exact(&m.lattice_problem());
            let product_side = lattice_main.scale(&m.leading_weight());
            assert_eq!(
                product_side,
                weyl_constant_exact(&m),
                "constant mismatch for dims {dims:?}"
            );
        }
    }

    #[test]
    fn reduction_chain_torus_collapses() {
        // k = 0: no exclusions, unit weights: N = N1 = N2 and N3 = N.
        let m = manifold(&[1, 1]);
        let chain = reduction_chain(&m, &rat(17, 1));
        assert_eq!(chain.n, chain.n1);
        assert_eq!(chain.n2, rat_int(BigInt::from(chain.n.clone())));
        assert_eq!(chain.n3, rat_int(BigInt::from(chain.n.clone())));
    }

    #[test]
    fn reduction_chain_excludes_low_levels() {
        let m = manifold(&[2, 1]);
        let chain = reduction_chain(&m, &rat(40, 1));
        assert!(chain.n > chain.n1, "low sphere levels must be excluded");
        // threshold is lambda^2 + |y|^2 = 1600 + 1/4
        assert_eq!(chain.threshold, rat(6401, 4));
    }

    #[test]
    fn monomial_weights_reproduce_low_dim_multiplicities() {
        // For d in {2,3} the degree-(d-1) multiplicity polynomial is a pure
        // monomial, so the restricted monomial sum equals the restricted
        // count exactly; a d = 4 factor breaks the equality.
        for dims in [vec![2u32, 1], vec![3, 1], vec![2, 2]] {
            let m = manifold(&dims);
            let chain = reduction_chain(&m, &rat(25, 1));
            assert_eq!(
                chain.n2,
                rat_int(BigInt::from(chain.n1.clone())),
                "dims {dims:?}"
            );
        }
        let chain = reduction_chain(&manifold(&[4, 1]), &rat(25, 1));
        assert_ne!(chain.n2, rat_int(BigInt::from(chain.n1.clone())));
    }

    #[test]
    fn count_matches_brute_for_high_dimension_factors() {
        for (dims, t) in [
            (vec![6u32], rat(400, 1)),
            (vec![5, 4], rat(200, 1)),
            (vec![5, 4, 3], rat(100, 1)),
        ] {
            let m = manifold(&dims);
            assert_eq!(
                count(&m, &t).value,
                brute_count(&m, &t).value,
                "dims {dims:?}"
            );
        }
    }

    #[test]
    fn reduction_n1_equals_direct_restricted_sum() {
        // independent check of the k_i >= 2 restriction at lambda = 17
        let m = manifold(&[2, 2]);
        let chain = reduction_chain(&m, &rat(17, 1));
        let t = rat(289, 1);
        let f = Factor::new(2).unwrap();
        let mut expected = BigUint::zero();
        for k1 in 2..=max_level_index(f, &t).unwrap() {
            let left = &t - rat_int(BigInt::from(eigen_sq(f, k1)));
            for k2 in 2.. {
                let e2 = rat_int(BigInt::from(eigen_sq(f, k2)));
                if e2 > left {
                    break;
                }
                expected += mult(f, k1) * mult(f, k2);
            }
        }
        assert_eq!(chain.n1, expected);
    }

    #[test]
    fn remainder_samples_are_definitional() {
        let m = manifold(&[2, 1]);
        let grid = crate::analysis::GridSpec::new(10.0, 40.0, 16).build();
        let samples = remainder_samples(&m, &grid);
        assert_eq!(samples.len(), grid.len());
        for (point, (lambda, n, error)) in grid.iter().zip(&samples) {
            assert_eq!(*n, count(&m, &point.lambda_sq).value);
            let main = weyl_constant(&m) * lambda.powi(3);
            let expected = rat_to_f64(&rat_int(BigInt::from(n.clone()))) - main;
            assert!((error - expected).abs() < 1e-6, "at lambda {lambda}");
        }
    }

    #[test]
    fn work_estimate_grows_with_threshold() {
        let m = manifold(&[2, 2]);
        let small = count_work_estimate(&m, &rat(100, 1));
        let large = count_work_estimate(&m, &rat(10_000, 1));
        assert!(large > small);
        // single factor: closed form only, no enumeration
        assert_eq!(count_work_estimate(&manifold(&[2]), &rat(100, 1)), 1);
    }
}
