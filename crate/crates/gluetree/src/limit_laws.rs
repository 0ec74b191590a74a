//! Limit objects for regularly varying length sequences: the Laplace
//! exponent
//!
//!   φ_α(λ) = ((α+1)/α) Σ_{k>=1} λ^k / ((k+1)! k)
//!          = ((α+1)/α) ∫_0^1 (e^{λu} - 1)(1-u)/u du,
//!
//! the infinitely divisible variable ξ_α and its self-similar pure-jump
//! process (driven by a Poisson point process with intensity
//! (α+1) t^{-α-1} 1{v <= t^α} dt dv), the uniform-leaf limit
//! (1+ξ_α) U^α, the regime classifier of the typical depth, and the two
//! independent computations of the unit-length height constant: the root of
//! 2(e^β - 1) = β e^β and the constrained maximization of α/ρ along the
//! large-deviation curve Λ*_Z(α) + Λ*_E(ρ) = ln 2.

use crate::numeric::{brent, exp_ratio, exp_ratio_m1, integrate, NumericError};
use crate::sequences::{LengthSequence, SequenceError, SequenceSpec};
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LimitError {
    #[error("alpha must be a positive finite real, got {0}")]
    BadAlpha(f64),
    #[error("truncation tolerance must lie in (0, 1), got {0}")]
    BadTruncation(f64),
    #[error("series ({series}) and quadrature ({quadrature}) disagree beyond 1e-10")]
    SeriesQuadratureMismatch { series: f64, quadrature: f64 },
    #[error("moment order must be >= 0, got {0}")]
    BadMomentOrder(f64),
    #[error("increment range requires 0 <= s <= t <= 1, got s={s}, t={t}")]
    BadIncrementRange { s: f64, t: f64 },
    #[error("sequence has no declared rv index; classification needs a divergence-test horizon")]
    HorizonRequired,
    #[error("declared rv index {0} is outside the supported range (>= 0)")]
    UnsupportedIndex(f64),
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
}

const SERIES_QUAD_TOL: f64 = 1e-10;

fn phi_series(alpha: f64, lambda: f64) -> f64 {
    // term_k = λ^k / ((k+1)! k); ratio t_{k+1}/t_k = λ k / ((k+2)(k+1))
    let mut term = lambda / 2.0;
    let mut sum = term;
    let mut k = 1.0f64;
    while term.abs() > 1e-16 * (1.0 + sum.abs()) && k < 500.0 {
        term *= lambda * k / ((k + 2.0) * (k + 1.0));
        sum += term;
        k += 1.0;
    }
    (alpha + 1.0) / alpha * sum
}

fn phi_quadrature(alpha: f64, lambda: f64) -> Result<f64, LimitError> {
    // (e^{λu} - 1)/u = λ g(λu), so the integrand λ g(λu)(1-u) is smooth at 0
    let v = integrate(
        |u| lambda * exp_ratio(lambda * u) * (1.0 - u),
        0.0,
        1.0,
        1e-12,
    )?;
    Ok((alpha + 1.0) / alpha * v)
}

/// φ_α(λ), evaluated by the series and cross-checked against adaptive
/// quadrature of the integral form; the two must agree within 1e-10.
pub fn phi_alpha(alpha: f64, lambda: f64) -> Result<f64, LimitError> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(LimitError::BadAlpha(alpha));
    }
    let series = phi_series(alpha, lambda);
    let quadrature = phi_quadrature(alpha, lambda)?;
    if (series - quadrature).abs() > SERIES_QUAD_TOL * (1.0 + series.abs()) {
        return Err(LimitError::SeriesQuadratureMismatch { series, quadrature });
    }
    Ok(series)
}

/// k-th cumulant of ξ_α: φ^(k)(0) = ((α+1)/α) / (k (k+1)).
pub fn xi_cumulant(alpha: f64, k: u32) -> f64 {
    let k = k as f64;
    (alpha + 1.0) / alpha / (k * (k + 1.0))
}

/// ln E[exp(λ (ξ_α(t) - ξ_α(s)))] = (α+1) ∫_s^t x^{-1}(g(λ x^α) - 1) dx,
/// computed after the substitution u = x^α which removes the endpoint
/// singularity at 0.
pub fn ln_limit_laplace_increment(
    alpha: f64,
    s: f64,
    t: f64,
    lambda: f64,
) -> Result<f64, LimitError> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(LimitError::BadAlpha(alpha));
    }
    if !(0.0..=1.0).contains(&s) || !(0.0..=1.0).contains(&t) || s > t {
        return Err(LimitError::BadIncrementRange { s, t });
    }
    let f = |u: f64| {
        if u == 0.0 {
            lambda / 2.0
        } else {
            exp_ratio_m1(lambda * u) / u
        }
    };
    let v = integrate(f, s.powf(alpha), t.powf(alpha), 1e-10)?;
    Ok((alpha + 1.0) / alpha * v)
}

pub fn limit_laplace_increment(alpha: f64, s: f64, t: f64, lambda: f64) -> Result<f64, LimitError> {
    Ok(ln_limit_laplace_increment(alpha, s, t, lambda)?.exp())
}

/// ξ_α sampling model: index α plus the Poisson truncation level ε, chosen
/// so that the discarded atoms below ε have mean at most the configured
/// tolerance ((α+1) ε^α / (2α)).
#[derive(Debug, Clone, Copy)]
pub struct LimitModel {
    alpha: f64,
    epsilon: f64,
}

impl LimitModel {
    /// Default discarded-mean tolerance 1e-5.
    pub fn new(alpha: f64) -> Result<Self, LimitError> {
        Self::with_discard_tolerance(alpha, 1e-5)
    }

    pub fn with_discard_tolerance(alpha: f64, tol: f64) -> Result<Self, LimitError> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(LimitError::BadAlpha(alpha));
        }
        if !(tol > 0.0 && tol < 1.0) {
            return Err(LimitError::BadTruncation(tol));
        }
        // (α+1) ε^α / (2α) = tol
        let epsilon = (2.0 * alpha * tol / (alpha + 1.0)).powf(1.0 / alpha);
        debug_assert!(epsilon > 0.0 && epsilon < 1.0);
        Ok(Self { alpha, epsilon })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Mean of the discarded atoms on (0, ε].
    pub fn discarded_mean_bound(&self) -> f64 {
        (self.alpha + 1.0) * self.epsilon.powf(self.alpha) / (2.0 * self.alpha)
    }
}

/// One truncated draw of the atom set of ξ_α on t ∈ (ε, 1]:
/// Poisson((α+1) ln(1/ε)) atoms, locations with density ∝ 1/t, and
/// v uniform on (0, t^α]. Atoms are returned sorted by location.
fn sample_atoms<R: Rng>(model: &LimitModel, rng: &mut R) -> Vec<(f64, f64)> {
    let mean = (model.alpha + 1.0) * (1.0 / model.epsilon).ln();
    let count = Poisson::new(mean).expect("positive mean").sample(rng) as usize;
    let ln_inv_eps = (1.0 / model.epsilon).ln();
    let mut atoms: Vec<(f64, f64)> = (0..count)
        .map(|_| {
            let t = model.epsilon * (rng.gen::<f64>() * ln_inv_eps).exp();
            let v = rng.gen::<f64>() * t.powf(model.alpha);
            (t, v)
        })
        .collect();
    atoms.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).expect("finite atom locations"));
    atoms
}

/// One draw of ξ_α (the time-1 value of the jump process).
pub fn xi_sample<R: Rng>(model: &LimitModel, rng: &mut R) -> f64 {
    sample_atoms(model, rng).iter().map(|&(_, v)| v).sum()
}

/// A truncated path of the α-self-similar jump process: non-decreasing,
/// piecewise constant, right-continuous.
#[derive(Debug, Clone)]
pub struct XiPath {
    atoms: Vec<(f64, f64)>,
    cumulative: Vec<f64>,
}

impl XiPath {
    /// ξ(t) = Σ_{t_i <= t} v_i.
    pub fn eval(&self, t: f64) -> f64 {
        let idx = self.atoms.partition_point(|&(ti, _)| ti <= t);
        if idx == 0 {
            0.0
        } else {
            self.cumulative[idx - 1]
        }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }
}

pub fn xi_process_sample<R: Rng>(model: &LimitModel, rng: &mut R) -> XiPath {
    let atoms = sample_atoms(model, rng);
    let mut acc = 0.0;
    let cumulative = atoms
        .iter()
        .map(|&(_, v)| {
            acc += v;
            acc
        })
        .collect();
    XiPath { atoms, cumulative }
}

/// Report-only diagnostic: max of `copies` i.i.d. draws of ξ_α, scaled by
/// ln ln / ln of the copy count. The scaled maximum tends to 1, but only at
/// log-log speed, so this is never a pass/fail gate.
pub fn xi_iid_max_statistic<R: Rng>(model: &LimitModel, copies: usize, rng: &mut R) -> f64 {
    let max = (0..copies)
        .map(|_| xi_sample(model, rng))
        .fold(f64::MIN, f64::max);
    let nf = copies as f64;
    max * nf.ln().ln() / nf.ln()
}

/// One draw of the uniform-leaf limit (1 + ξ_α) U^α.
pub fn uniform_leaf_sample<R: Rng>(model: &LimitModel, rng: &mut R) -> f64 {
    (1.0 + xi_sample(model, rng)) * rng.gen::<f64>().powf(model.alpha)
}

/// p-th moment of the uniform-leaf limit, E[(1+ξ_α)^p] / (αp + 1).
/// Exact for p = 0 and p = 1; Monte Carlo with `n_samples` draws otherwise.
pub fn uniform_leaf_moment<R: Rng>(
    model: &LimitModel,
    p: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<f64, LimitError> {
    if p < 0.0 {
        return Err(LimitError::BadMomentOrder(p));
    }
    let denom = model.alpha * p + 1.0;
    if p == 0.0 {
        return Ok(1.0);
    }
    if p == 1.0 {
        return Ok((1.0 + xi_cumulant(model.alpha, 1)) / denom);
    }
    let mut acc = 0.0;
    for _ in 0..n_samples {
        acc += (1.0 + xi_sample(model, rng)).powf(p);
    }
    Ok(acc / n_samples as f64 / denom)
}

/// Asymptotic regime of the typical depth D_n / Σ i^{-1} a_i.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum Regime {
    /// Limit α ξ_α in distribution.
    AlphaPositive { alpha: f64 },
    /// Limit 1/2 in probability.
    ZeroIndexDivergent,
    /// D_n converges to a finite-mean variable without normalization.
    ZeroIndexSummable,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Regime::AlphaPositive { alpha } => write!(f, "alpha_positive({alpha})"),
            Regime::ZeroIndexDivergent => write!(f, "zero_index_divergent"),
            Regime::ZeroIndexSummable => write!(f, "zero_index_summable"),
        }
    }
}

/// Tail fraction of Σ i^{-1} a_i past horizon/2 below which the series is
/// declared summable by the finite-horizon test.
const DIVERGENCE_TAIL_FRACTION: f64 = 0.01;

/// Classifies the sequence's regime. Built-in kinds classify analytically;
/// custom tables need a declared index, and a declared index of 0 (or no
/// index at all) additionally needs a finite divergence-test horizon.
pub fn classify_regime(seq: &LengthSequence, horizon: Option<usize>) -> Result<Regime, LimitError> {
    match seq.rv_index() {
        Some(a) if a > 0.0 => Ok(Regime::AlphaPositive { alpha: a }),
        Some(a) if a < 0.0 => Err(LimitError::UnsupportedIndex(a)),
        Some(_) => match seq.spec() {
            SequenceSpec::Constant { .. } | SequenceSpec::Power { .. } => {
                Ok(Regime::ZeroIndexDivergent)
            }
            SequenceSpec::LogPower { gamma } => {
                // Σ i^{-1} (ln(i+1))^γ diverges exactly when γ >= -1
                if *gamma >= -1.0 {
                    Ok(Regime::ZeroIndexDivergent)
                } else {
                    Ok(Regime::ZeroIndexSummable)
                }
            }
            SequenceSpec::Custom { .. } => {
                divergence_test(seq, horizon.ok_or(LimitError::HorizonRequired)?)
            }
        },
        None => {
            let h = horizon.ok_or(LimitError::HorizonRequired)?;
            let est = seq.rv_index_estimate(h)?;
            if est >= 0.05 {
                Ok(Regime::AlphaPositive { alpha: est })
            } else {
                divergence_test(seq, h)
            }
        }
    }
}

fn divergence_test(seq: &LengthSequence, horizon: usize) -> Result<Regime, LimitError> {
    let full = seq.harmonic_weighted_sum(horizon)?;
    let half = seq.harmonic_weighted_sum((horizon / 2).max(1))?;
    if (full - half) / full > DIVERGENCE_TAIL_FRACTION {
        Ok(Regime::ZeroIndexDivergent)
    } else {
        Ok(Regime::ZeroIndexSummable)
    }
}

/// The unit-length height constants: β*, the unique positive root of
/// 2(e^β - 1) = β e^β, and the height constant e^{β*} / (2β*).
#[derive(Debug, Clone, Copy)]
pub struct BetaStar {
    pub beta_star: f64,
    pub height_constant: f64,
    pub residual: f64,
}

fn beta_equation(beta: f64) -> f64 {
    2.0 * beta.exp_m1() - beta * beta.exp()
}

/// Solves the β* equation by bracketed root-finding on [1, 2]
/// (f(1) = e - 2 > 0, f(2) = -2 < 0).
pub fn solve_beta_star() -> BetaStar {
    let beta =
        brent(beta_equation, 1.0, 2.0, 1e-15, 200).expect("analytic bracket: f(1) > 0 > f(2)");
    BetaStar {
        beta_star: beta,
        height_constant: beta.exp() / (2.0 * beta),
        residual: beta_equation(beta).abs(),
    }
}

// --- Broutin-Devroye curve machinery ---------------------------------------

/// h(u) = 1 + (e^u - 1)/u, with h(0) = 2.
pub fn bd_h(u: f64) -> f64 {
    1.0 + exp_ratio(u)
}

/// ln h(u), finite for all u: for large positive u, h itself overflows but
/// ln h(u) = u - ln u + ln(1 + (u-1)e^{-u}) does not.
pub fn bd_ln_h(u: f64) -> f64 {
    if u > 30.0 {
        u - u.ln() + ((u - 1.0) * (-u).exp()).ln_1p()
    } else {
        bd_h(u).ln()
    }
}

/// h'(u)/h(u); increasing bijection from R onto (0, 1) with value 1/4 at 0.
pub fn bd_h_log_deriv(u: f64) -> f64 {
    if u.abs() < 0.05 {
        // series for h'(u) = Σ k u^{k-1}/(k+1)!
        let hp = 0.5
            + u * (1.0 / 3.0 + u * (1.0 / 8.0 + u * (1.0 / 30.0 + u * (1.0 / 144.0 + u / 840.0))));
        hp / bd_h(u)
    } else if u > 30.0 {
        // [e^u(u-1)+1] / (u(u + e^u - 1)), scaled by e^{-u} against overflow
        let em = (-u).exp();
        (u - 1.0 + em) / (u * (1.0 + (u - 1.0) * em))
    } else {
        let hp = (u.exp() * (u - 1.0) + 1.0) / (u * u);
        hp / bd_h(u)
    }
}

/// λ(t): the inverse of h'/h on (0, 1), by bracketed root-finding with an
/// expanding bracket.
pub fn bd_lambda(t: f64) -> Result<f64, LimitError> {
    debug_assert!(t > 0.0 && t < 1.0);
    let mut lo = -1.0;
    let mut hi = 1.0;
    while bd_h_log_deriv(lo) > t {
        lo *= 2.0;
    }
    while bd_h_log_deriv(hi) < t {
        hi *= 2.0;
    }
    Ok(brent(|u| bd_h_log_deriv(u) - t, lo, hi, 1e-13, 300)?)
}

/// Fenchel-Legendre rate of the edge-weight variable:
/// Λ*_Z(t) = t λ(t) - ln h(λ(t)) + ln 2 on (0, 1).
pub fn bd_rate_z(t: f64) -> Result<f64, LimitError> {
    let l = bd_lambda(t)?;
    Ok(t * l - bd_ln_h(l) + std::f64::consts::LN_2)
}

/// Fenchel-Legendre rate of a unit exponential: Λ*_E(ρ) = ρ - 1 - ln ρ.
pub fn bd_rate_e(rho: f64) -> f64 {
    rho - 1.0 - rho.ln()
}

/// The height constant as the maximum of α/ρ along the curve
/// Λ*_Z(α) + Λ*_E(ρ) = ln 2, 0 < ρ < 1, 1/4 <= α < 1 — an independent
/// computation that must agree with `solve_beta_star`.
pub fn bd_constant_via_curve() -> Result<f64, LimitError> {
    let ln2 = std::f64::consts::LN_2;
    // ρ(α) solves Λ*_E(ρ) = ln 2 - Λ*_Z(α); Λ*_E decreases from +∞ to 0 on (0, 1]
    let rho_of = |alpha: f64| -> Result<f64, LimitError> {
        let target = ln2 - bd_rate_z(alpha)?;
        Ok(brent(|rho| bd_rate_e(rho) - target, 1e-9, 1.0, 1e-13, 300)?)
    };
    let ratio = |alpha: f64| -> Result<f64, LimitError> { Ok(alpha / rho_of(alpha)?) };

    // feasible α range: Λ*_Z(α) <= ln 2
    let alpha_lo = 0.25;
    let alpha_hi = brent(
        |a| bd_rate_z(a).expect("rate on (0,1)") - ln2,
        0.25,
        0.999,
        1e-12,
        300,
    )?;

    // golden-section maximization; the ratio is unimodal along the curve
    let gr = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = alpha_lo;
    let mut b = alpha_hi;
    let mut x1 = b - gr * (b - a);
    let mut x2 = a + gr * (b - a);
    let mut f1 = ratio(x1)?;
    let mut f2 = ratio(x2)?;
    while b - a > 1e-10 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = ratio(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = ratio(x1)?;
        }
    }
    ratio(0.5 * (a + b))
}
