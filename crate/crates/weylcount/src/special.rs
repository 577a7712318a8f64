//! Special-function support: half-integer Gamma values in exact
//! `q * pi^(t/2)` form, ball and sphere volumes, the radial Fourier
//! transform of the ball indicator, and an adaptive Simpson integrator
//! with a reported error bound.

use num_bigint::{BigInt, BigUint};
use num_traits::One;
use thiserror::Error;

use crate::exact::{rat, rat_int, PiPower, Rat};

#[derive(Debug, Error, PartialEq)]
pub enum QuadratureError {
    #[error("quadrature did not converge: achieved error bound {achieved:e} > target {target:e}")]
    DidNotConverge { achieved: f64, target: f64 },
}

pub fn factorial(n: u64) -> BigUint {
    let mut acc = BigUint::one();
    for i in 2..=n {
        acc *= BigUint::from(i);
    }
    acc
}

/// Binomial coefficient, exact; zero when `k > n`.
pub fn binom(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// Gamma(two_x / 2) for `two_x >= 1`, exactly, as `q * pi^(t/2)`.
///
/// Integer arguments give factorials; half-integer arguments give a
/// rational multiple of sqrt(pi).
pub fn gamma_half(two_x: u32) -> PiPower {
    assert!(two_x >= 1, "gamma argument must be >= 1/2");
    if two_x % 2 == 0 {
        let m = (two_x / 2) as u64;
        PiPower::rational(Rat::from_integer(BigInt::from(factorial(m - 1))))
    } else {
        // Gamma(1/2) = sqrt(pi); climb with Gamma(x+1) = x Gamma(x).
        let mut coef = Rat::one();
        let mut x = rat(1, 2);
        while x < rat(two_x as i64, 2) {
            coef *= &x;
            x += Rat::one();
        }
        PiPower {
            coef,
            pi_half_exp: 1,
        }
    }
}

/// Volume of the unit ball in R^m: pi^(m/2) / Gamma(m/2 + 1).
pub fn ball_volume_exact(m: u32) -> PiPower {
    let gamma = gamma_half(m + 2);
    PiPower {
        coef: Rat::one(),
        pi_half_exp: m as i32,
    }
    .div(&gamma)
}

pub fn ball_volume(m: u32) -> f64 {
    ball_volume_exact(m).to_f64()
}

/// Riemannian volume of the unit sphere S^d: 2 pi^((d+1)/2) / Gamma((d+1)/2).
pub fn sphere_volume_exact(d: u32) -> PiPower {
    let gamma = gamma_half(d + 1);
    PiPower {
        coef: rat_int(2),
        pi_half_exp: (d + 1) as i32,
    }
    .div(&gamma)
}

/// Surface area of the unit sphere in R^n (i.e. S^{n-1}).
pub fn unit_sphere_area(n: u32) -> f64 {
    sphere_volume_exact(n - 1).to_f64()
}

/// Spherical Bessel j_l(z) by the standard upward recurrence.
fn spherical_bessel(l: u32, z: f64) -> f64 {
    let j0 = z.sin() / z;
    if l == 0 {
        return j0;
    }
    let j1 = z.sin() / (z * z) - z.cos() / z;
    if l == 1 {
        return j1;
    }
    let (mut prev, mut cur) = (j0, j1);
    for m in 1..l {
        let next = (2 * m + 1) as f64 / z * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Cylindrical Bessel J_m(z) for small integer order, from libm's j0/j1.
fn bessel_j(m: u32, z: f64) -> f64 {
    match m {
        0 => libm::j0(z),
        1 => libm::j1(z),
        _ => {
            // Upward recurrence; adequate while the order stays below z,
            // which holds for the small orders used here and z >= 2*pi.
            let (mut prev, mut cur) = (libm::j0(z), libm::j1(z));
            for i in 1..m {
                let next = 2.0 * i as f64 / z * cur - prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// Fourier transform of the unit-ball indicator in R^n, evaluated at radius
/// `rho = |xi|`, with the convention `f_hat(xi) = int f(x) e^{-2 pi i <x,xi>} dx`.
///
/// Radially symmetric: the value is `rho^(-n/2) J_{n/2}(2 pi rho)`; for
/// `n = 1` this is `sin(2 pi rho)/(pi rho)`. Supported for `n` in `1..=6`.
pub fn ball_indicator_ft(n: u32, rho: f64) -> f64 {
    assert!((1..=6).contains(&n), "ball transform supports n in 1..=6");
    assert!(rho >= 0.0);
    if rho == 0.0 {
        return ball_volume(n);
    }
    let z = 2.0 * std::f64::consts::PI * rho;
    if n % 2 == 1 {
        // J_{l+1/2}(z) = sqrt(2z/pi) j_l(z) with l = (n-1)/2
        let l = (n - 1) / 2;
        let j = spherical_bessel(l, z);
        (2.0 * z / std::f64::consts::PI).sqrt() * j * rho.powf(-(n as f64) / 2.0)
    } else {
        let m = n / 2;
        bessel_j(m, z) * rho.powf(-(n as f64) / 2.0)
    }
}

/// Result of an adaptive quadrature: value plus a rigorous-style error
/// accumulation from the Richardson estimates.
#[derive(Clone, Copy, Debug)]
pub struct Quad {
    pub value: f64,
    pub error_bound: f64,
}

struct SimpsonState<'a> {
    f: &'a dyn Fn(f64) -> f64,
    error_accum: f64,
}

fn simpson_step(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    let s = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    (m, fm, s)
}

fn adaptive_rec(
    st: &mut SimpsonState,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    m: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let (lm, flm, left) = simpson_step(st.f, a, fa, m, fm);
    let (rm, frm, right) = simpson_step(st.f, m, fm, b, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || depth == 0 {
        st.error_accum += delta.abs() / 15.0;
        return left + right + delta / 15.0;
    }
    let lv = adaptive_rec(st, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1);
    let rv = adaptive_rec(st, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1);
    lv + rv
}

/// Adaptive Simpson integration of `f` on `[a, b]` targeting absolute error
/// `tol`. Non-convergence is reported together with the achieved bound.
pub fn adaptive_simpson(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<Quad, QuadratureError> {
    if a == b {
        return Ok(Quad {
            value: 0.0,
            error_bound: 0.0,
        });
    }
    let fa = f(a);
    let fb = f(b);
    let (m, fm, whole) = simpson_step(&f, a, fa, b, fb);
    let mut st = SimpsonState {
        f: &f,
        error_accum: 0.0,
    };
    let value = adaptive_rec(&mut st, a, fa, b, fb, m, fm, whole, tol, 40);
    // Convergence is judged on the total achieved bound, not per cell:
    // cells that bottom out still contribute their Richardson estimate.
    if st.error_accum <= tol {
        Ok(Quad {
            value,
            error_bound: st.error_accum.max(f64::EPSILON * value.abs()),
        })
    } else {
        Err(QuadratureError::DidNotConverge {
            achieved: st.error_accum,
            target: tol,
        })
    }
}
