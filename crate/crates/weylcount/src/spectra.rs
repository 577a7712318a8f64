//! Closed-form Laplace spectra of single factors: spheres `S^d` (with the
//! circle as `d = 1`), their multiplicities, the degree-`d-1` multiplicity
//! polynomial, and exact cumulative multiplicity sums.
//!
//! Eigenvalues of `S^d` are `sqrt(k(k+d-1))` for `k >= 0`; everything here
//! works with the integer `k(k+d-1)` and rational thresholds `T = lambda^2`
//! so that comparisons at spectral jumps are exact.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::exact::{floor_int, isqrt, rat, rat_int, Rat};
use crate::special::{binom, factorial};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SpectraError {
    #[error("factor dimension must be >= 1, got {0}")]
    InvalidDimension(u32),
    #[error("multiplicity polynomial requires dimension >= 2, got {0}")]
    PolynomialUndefined(u32),
}

/// One factor of a product manifold: the sphere `S^dim`, where `dim = 1`
/// is the circle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Factor {
    dim: u32,
}

impl Factor {
    pub fn new(dim: u32) -> Result<Factor, SpectraError> {
        if dim < 1 {
            return Err(SpectraError::InvalidDimension(dim));
        }
        Ok(Factor { dim })
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    /// Half-integer spectral shift `(dim - 1) / 2`; zero for the circle.
    pub fn shift(&self) -> Rat {
        rat(self.dim as i64 - 1, 2)
    }

    pub fn level(&self, k: u64) -> EigenLevel {
        EigenLevel {
            k,
            eigen_sq: eigen_sq(*self, k),
            mult: mult(*self, k),
        }
    }
}

/// One spectral level of a factor: index, exact squared eigenvalue, and
/// exact multiplicity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EigenLevel {
    pub k: u64,
    pub eigen_sq: u128,
    pub mult: BigUint,
}

/// Squared eigenvalue `k (k + d - 1)` of level `k` on `S^d`.
pub fn eigen_sq(factor: Factor, k: u64) -> u128 {
    let k = k as u128;
    k * (k + factor.dim as u128 - 1)
}

/// Multiplicity of level `k` on `S^d`.
///
/// For `d >= 2` this is `binom(d+k, d) - binom(d+k-2, d)`; on the circle it
/// is 1 for the constant and 2 for every `k >= 1` (the pair `e^{+-ik t}`).
pub fn mult(factor: Factor, k: u64) -> BigUint {
    let d = factor.dim as u64;
    if d == 1 {
        return if k == 0 {
            BigUint::one()
        } else {
            BigUint::from(2u32)
        };
    }
    let first = binom(d + k, d);
    if d + k < 2 + d {
        first
    } else {
        first - binom(d + k - 2, d)
    }
}

/// The polynomial `P` of degree `dim - 1` with `P(k + (dim-1)/2)` equal to
/// the multiplicity of level `k` on `S^dim`, stored with exact rational
/// coefficients (index = degree).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiplicityPolynomial {
    pub dim: u32,
    pub coefficients: Vec<Rat>,
}

impl MultiplicityPolynomial {
    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn leading_coefficient(&self) -> &Rat {
        self.coefficients.last().unwrap()
    }

    pub fn eval(&self, t: &Rat) -> Rat {
        let mut acc = Rat::zero();
        for c in self.coefficients.iter().rev() {
            acc = acc * t + c;
        }
        acc
    }

    /// True when every nonzero monomial has degree of the same parity as
    /// `dim - 1`, i.e. the polynomial is even or odd as a function.
    pub fn has_pure_parity(&self) -> bool {
        let parity = (self.dim as usize - 1) % 2;
        self.coefficients
            .iter()
            .enumerate()
            .all(|(deg, c)| c.is_zero() || deg % 2 == parity)
    }
}

/// Expands the multiplicity polynomial for `S^dim`, `dim >= 2`:
/// `2/(dim-1)! * t * prod_{j=1}^{dim-2} (t + j - (dim-1)/2)`.
pub fn multiplicity_polynomial(dim: u32) -> Result<MultiplicityPolynomial, SpectraError> {
    if dim < 2 {
        return Err(SpectraError::PolynomialUndefined(dim));
    }
    // Start from the monomial t, then multiply in the linear factors.
    let mut coeffs: Vec<Rat> = vec![Rat::zero(), Rat::one()];
    for j in 1..=(dim as i64 - 2) {
        let offset = rat(2 * j - (dim as i64 - 1), 2);
        let mut next = vec![Rat::zero(); coeffs.len() + 1];
        for (deg, c) in coeffs.iter().enumerate() {
            next[deg + 1] += c;
            next[deg] += c * &offset;
        }
        coeffs = next;
    }
    let lead = rat_int(2) / rat_int(BigInt::from(factorial(dim as u64 - 1)));
    for c in &mut coeffs {
        *c *= &lead;
    }
    Ok(MultiplicityPolynomial {
        dim,
        coefficients: coeffs,
    })
}

/// Largest level index `k` with `k (k + d - 1) <= T`, or `None` if even
/// `k = 0` fails (only possible for `T < 0`).
pub fn max_level_index(factor: Factor, threshold: &Rat) -> Option<u64> {
    if threshold.is_negative() {
        return None;
    }
    let bound = floor_int(threshold);
    let dm1 = BigInt::from(factor.dim - 1);
    // Root of k^2 + (d-1)k - bound via integer sqrt, then exact adjustment.
    let disc = &dm1 * &dm1 + BigInt::from(4) * &bound;
    let mut k: BigInt = (isqrt(&disc) - &dm1) / BigInt::from(2);
    if k.is_negative() {
        k = BigInt::zero();
    }
    let admissible = |k: &BigInt| -> bool { k * (k + &dm1) <= bound };
    while admissible(&(&k + BigInt::one())) {
        k += BigInt::one();
    }
    while k.is_positive() && !admissible(&k) {
        k -= BigInt::one();
    }
    if admissible(&k) {
        Some(k.to_u64().expect("level index fits in u64"))
    } else {
        None
    }
}

/// Exact cumulative multiplicity: the sum of `mult(d, k)` over all levels
/// with `k (k + d - 1) <= T`, in closed form.
///
/// For `d >= 2` the binomial differences telescope to
/// `binom(K+d, d) + binom(K+d-1, d)`; for the circle the sum is
/// `2 floor(sqrt(T)) + 1`.
pub fn cum_mult(factor: Factor, threshold: &Rat) -> BigUint {
    let Some(k_max) = max_level_index(factor, threshold) else {
        return BigUint::zero();
    };
    let d = factor.dim as u64;
    if d == 1 {
        BigUint::from(2 * k_max + 1)
    } else {
        binom(k_max + d, d) + binom(k_max + d - 1, d)
    }
}
