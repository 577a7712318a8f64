//! Mollified counting functions and the sandwich bound.
//!
//! The ball indicator is smoothed by convolution with the standard bump
//! `rho(x) = c_n exp(-1/(1-|x|^2))` scaled to support radius `epsilon`.
//! The mollified count agrees with the exact count except on the boundary
//! shell `lambda - eps < |m| < lambda + eps`, where each lattice point
//! contributes its radial profile value, evaluated by adaptive quadrature
//! with a reported error bound. The module also checks the decay rate of
//! the Fourier transform of the ball indicator, which drives the choice
//! `epsilon = lambda^(-(n-1)/(n+1))`.

use thiserror::Error;

use crate::analysis::{log_log_fit, AnalysisError, ExponentFit};
use crate::exact::{rat_from_f64, rat_to_f64};
use crate::lattice::{
    annulus_points, problem_coord_specs, weighted_count_sq, Compensated, LatticeProblem, SumValue,
};
use crate::special::{adaptive_simpson, ball_indicator_ft, unit_sphere_area, QuadratureError};

pub const DEFAULT_QUAD_TOL: f64 = 1e-8;

#[derive(Debug, Error, PartialEq)]
pub enum MollifyError {
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("epsilon must be positive, got {0}")]
    BadEpsilon(f64),
    #[error("lambda must be positive, got {0}")]
    BadLambda(f64),
    #[error("decay fit needs at least 8 envelope points, got {0}")]
    FewEnvelopePoints(usize),
    #[error("decay magnitudes must start at >= 1 and span at least a decade")]
    BadMagnitudeRange,
    #[error(transparent)]
    Fit(#[from] AnalysisError),
}

/// The fixed radial bump at scale `epsilon`, normalized to unit mass.
#[derive(Clone, Debug)]
pub struct Mollifier {
    n: u32,
    epsilon: f64,
    /// `int_0^1 exp(-1/(1-u^2)) u^(n-1) du`, the radial normalizer.
    norm_integral: f64,
}

fn bump_radial(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - u * u)).exp()
    }
}

impl Mollifier {
    pub fn new(n: u32, epsilon: f64) -> Result<Self, MollifyError> {
        if epsilon <= 0.0 {
            return Err(MollifyError::BadEpsilon(epsilon));
        }
        let norm_integral =
            adaptive_simpson(|u| bump_radial(u) * u.powi(n as i32 - 1), 0.0, 1.0, 1e-13)?.value;
        Ok(Mollifier {
            n,
            epsilon,
            norm_integral,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Value of `rho_eps` at distance `r` from the origin.
    pub fn density(&self, r: f64) -> f64 {
        let c_n = 1.0 / (unit_sphere_area(self.n) * self.norm_integral);
        self.epsilon.powi(-(self.n as i32)) * c_n * bump_radial(r / self.epsilon)
    }

    /// Total mass by direct radial quadrature in `s` (independent of the
    /// substitution used for the normalizer).
    pub fn total_mass(&self) -> Result<f64, MollifyError> {
        let area = unit_sphere_area(self.n);
        let q = adaptive_simpson(
            |s| self.density(s) * area * s.powi(self.n as i32 - 1),
            0.0,
            self.epsilon,
            1e-12,
        )?;
        Ok(q.value)
    }
}

/// Antiderivative `F_m` of `(1 - t^2)^(m/2)` on `[-1, 1]`, by the standard
/// reduction formula; `m = -1` is `arcsin`.
fn cap_antiderivative(m: i32, t: f64) -> f64 {
    if m == -1 {
        return t.clamp(-1.0, 1.0).asin();
    }
    if m == 0 {
        return t;
    }
    let base = (1.0 - t * t).max(0.0);
    t * base.powf(m as f64 / 2.0) / (m as f64 + 1.0)
        + m as f64 / (m as f64 + 1.0) * cap_antiderivative(m - 2, t)
}

/// Fraction of the unit sphere `S^(n-1)` with polar cosine `>= c`.
fn cap_fraction(n: u32, c: f64) -> f64 {
    if c <= -1.0 {
        return 1.0;
    }
    if c >= 1.0 {
        return 0.0;
    }
    if n == 1 {
        // S^0 is the two points {+1, -1}.
        return 0.5;
    }
    let m = n as i32 - 3;
    let top = cap_antiderivative(m, 1.0);
    let bottom = cap_antiderivative(m, -1.0);
    (top - cap_antiderivative(m, c)) / (top - bottom)
}

/// A profile value together with the quadrature error bound it carries.
#[derive(Clone, Copy, Debug)]
pub struct Profile {
    pub value: f64,
    pub error_bound: f64,
}

/// Evaluator for the radial profile `(chi_{lambda B} * rho_eps)(|x| = r)`
/// at fixed `lambda` and `epsilon`.
pub struct ProfileEvaluator {
    mollifier: Mollifier,
    lambda: f64,
    tol: f64,
}

impl ProfileEvaluator {
    pub fn new(n: u32, lambda: f64, epsilon: f64, tol: f64) -> Result<Self, MollifyError> {
        Ok(ProfileEvaluator {
            mollifier: Mollifier::new(n, epsilon)?,
            lambda,
            tol,
        })
    }

    pub fn eval(&self, r: f64) -> Result<Profile, MollifyError> {
        let eps = self.mollifier.epsilon;
        let lambda = self.lambda;
        if r <= lambda - eps {
            return Ok(Profile {
                value: 1.0,
                error_bound: 0.0,
            });
        }
        if r >= lambda + eps {
            return Ok(Profile {
                value: 0.0,
                error_bound: 0.0,
            });
        }
        let n = self.mollifier.n;
        let norm = self.mollifier.norm_integral;
        let integrand = |u: f64| -> f64 {
            let w = bump_radial(u) * u.powi(n as i32 - 1);
            if w == 0.0 {
                return 0.0;
            }
            let s = eps * u;
            let frac = if r == 0.0 {
                // whole sphere of radius s is inside iff s <= lambda
                if s <= lambda {
                    1.0
                } else {
                    0.0
                }
            } else {
                let c = (r * r + s * s - lambda * lambda) / (2.0 * r * s);
                cap_fraction(n, c)
            };
            w * frac
        };
        let q = adaptive_simpson(integrand, 0.0, 1.0, self.tol * norm * 0.5)?;
        Ok(Profile {
            value: (q.value / norm).clamp(0.0, 1.0),
            error_bound: q.error_bound / norm,
        })
    }
}

/// `(chi_{lambda B} * rho_eps)` evaluated at radius `r`, with the default
/// quadrature tolerance. Exactly 1 inside `lambda - eps`, exactly 0 outside
/// `lambda + eps`.
pub fn radial_profile(n: u32, lambda: f64, eps: f64, r: f64) -> Result<Profile, MollifyError> {
    ProfileEvaluator::new(n, lambda, eps, DEFAULT_QUAD_TOL)?.eval(r)
}

/// A mollified count: exact interior sum plus profiled boundary shell.
#[derive(Clone, Debug)]
pub struct MollifiedCount {
    pub value: f64,
    /// Rigorous-style bound: per-point quadrature bounds times weights,
    /// summed over the shell.
    pub quad_error: f64,
    pub shell_points: usize,
    pub lambda: f64,
    pub epsilon: f64,
}

/// The mollified counting function `N_eps(lambda)` of a lattice problem:
/// every lattice point contributes its profile value times its weight.
pub fn mollified_count(
    problem: &LatticeProblem,
    lambda: f64,
    eps: f64,
    tol: f64,
) -> Result<MollifiedCount, MollifyError> {
    if eps <= 0.0 {
        return Err(MollifyError::BadEpsilon(eps));
    }
    if !(lambda > 0.0) {
        return Err(MollifyError::BadLambda(lambda));
    }
    // Conservative f64 bracketing of the transition shell; the slivers lost
    // to rounding go through quadrature, where the profile is 0 or 1 to
    // within the reported bound. A width larger than the radius leaves no
    // interior at all: even the origin gets a profile value below 1 then.
    let t_in = if lambda - eps > 0.0 {
        let r = rat_from_f64((lambda - eps).next_down());
        &r * &r
    } else {
        rat_from_f64(-1.0)
    };
    let r_out = (lambda + eps).next_up();
    let t_out = {
        let r = rat_from_f64(r_out);
        &r * &r
    };

    let interior = if lambda - eps > 0.0 {
        match weighted_count_sq(problem, &t_in).value {
            SumValue::Exact(v) => rat_to_f64(&v),
            SumValue::Floating(v) => v,
        }
    } else {
        0.0
    };

    let coords = problem_coord_specs(problem);
    let shell = annulus_points(&coords, &t_in, &t_out);
    let evaluator = ProfileEvaluator::new(problem.n() as u32, lambda, eps, tol)?;
    let mut acc = Compensated::default();
    let mut err = 0.0f64;
    for (r_sq, weight) in &shell {
        let r = rat_to_f64(r_sq).max(0.0).sqrt();
        let profile = evaluator.eval(r)?;
        let w = rat_to_f64(weight);
        acc.add(w * profile.value);
        err += w.abs() * profile.error_bound.max(tol);
    }
    Ok(MollifiedCount {
        value: interior + acc.value(),
        quad_error: err,
        shell_points: shell.len(),
        lambda,
        epsilon: eps,
    })
}

/// The optimized mollification width `lambda^(-(n-1)/(n+1))`.
pub fn optimal_epsilon(lambda: f64, n: u32) -> f64 {
    assert!(lambda >= 1.0 && n >= 1);
    lambda.powf(-((n as f64 - 1.0) / (n as f64 + 1.0)))
}

/// One side of the sandwich check at radius `lambda`.
#[derive(Clone, Debug)]
pub struct SandwichReport {
    pub lower: MollifiedCount,
    pub exact: f64,
    pub upper: MollifiedCount,
    pub epsilon: f64,
    pub holds: bool,
}

/// Checks `N_eps(lambda - eps) <= N(lambda) <= N_eps(lambda + eps)` within
/// the reported quadrature slack.
pub fn sandwich(
    problem: &LatticeProblem,
    lambda: f64,
    eps: f64,
    tol: f64,
) -> Result<SandwichReport, MollifyError> {
    let lower = mollified_count(problem, lambda - eps, eps, tol)?;
    let upper = mollified_count(problem, lambda + eps, eps, tol)?;
    let exact = weighted_count_sq(problem, &{
        let l = rat_from_f64(lambda);
        &l * &l
    })
    .value
    .to_f64();
    let holds = lower.value - lower.quad_error <= exact && exact <= upper.value + upper.quad_error;
    Ok(SandwichReport {
        lower,
        exact,
        upper,
        epsilon: eps,
        holds,
    })
}

/// Fitted log-log decay of `|chi_B_hat|` along an increasing list of
/// frequency magnitudes, measured on the envelope of local maxima.
#[derive(Clone, Debug)]
pub struct DecayFit {
    pub fit: ExponentFit,
    pub envelope_points: usize,
}

pub fn ball_fourier_decay(n: u32, xi_magnitudes: &[f64]) -> Result<DecayFit, MollifyError> {
    if xi_magnitudes.len() < 3
        || xi_magnitudes[0] < 1.0
        || xi_magnitudes[xi_magnitudes.len() - 1] / xi_magnitudes[0] < 10.0
    {
        return Err(MollifyError::BadMagnitudeRange);
    }
    let values: Vec<f64> = xi_magnitudes
        .iter()
        .map(|&rho| ball_indicator_ft(n, rho).abs())
        .collect();
    let mut envelope: Vec<(f64, f64)> = Vec::new();
    for i in 1..values.len() - 1 {
        if values[i] > values[i - 1] && values[i] >= values[i + 1] && values[i] > 0.0 {
            envelope.push((xi_magnitudes[i], values[i]));
        }
    }
    if envelope.len() < 8 {
        return Err(MollifyError::FewEnvelopePoints(envelope.len()));
    }
    let fit = log_log_fit(&envelope)?;
    Ok(DecayFit {
        fit,
        envelope_points: envelope.len(),
    })
}
