//! The Legendre transform `phi(lambda) = max_{0<=s<=1} {lambda s - psi(s)}`
//! and the strong-converse exponent built from it.
//!
//! `psi` is convex with `psi(0) = 0` and `psi'(0) = D(rho||sigma)`, so every
//! scalar problem here is a bisection on a monotone function:
//!
//! * `phi`: `psi'(s) = lambda` (`psi'` nondecreasing),
//! * `lambda*`: `phi(lambda) + lambda = r` (left side strictly increasing),
//! * the parametric optimizer: `h(s) = r + psi(s) - (1+s) psi'(s) = 0`
//!   (`h' = -(1+s) psi'' <= 0`).
//!
//! The max form `max_{0<=s<=1} g(s)`, `g(s) = (s r - psi(s)) / (1+s)`, is
//! evaluated separately by golden-section search so the two routes check
//! each other.

use serde::Serialize;

use crate::config::Config;
use crate::divergence::StatePair;
use crate::error::{Error, Result};
use crate::roots::{bisect_increasing, golden_section_max};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiRegime {
    Interior,
    ClampedAt0,
    ClampedAt1,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PhiResult {
    pub lambda: f64,
    pub phi: f64,
    pub s_star: f64,
    pub regime: PhiRegime,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RateRegime {
    /// `r <= D`: exponent zero.
    BelowD,
    /// `D < r < 2 psi'(1) - psi(1)`.
    Interior,
    /// `r >= 2 psi'(1) - psi(1)`: optimizer pinned at `s = 1`.
    HighRate,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ExponentResult {
    pub r: f64,
    pub lambda_star: f64,
    /// Parametric optimizer (`0` below `D`, `1` at high rate).
    pub s_star: f64,
    /// `phi(lambda*)`.
    pub phi_star: f64,
    pub regime: RateRegime,
    /// `s* psi'(s*) - psi(s*)` in the interior, `g` at the pinned endpoint otherwise.
    pub u_parametric: f64,
    /// `max_{0<=s<=1} g(s)`.
    pub u_maxform: f64,
    pub s_maxform: f64,
    /// `|phi(lambda*) + lambda* - r|`.
    pub fixed_point_residual: f64,
    /// `rho = sigma` on the probed range (`psi'' == 0`): the optimizer is not
    /// unique and `s*` is reported as 1.
    pub flat_family: bool,
}

fn is_flat(pair: &StatePair) -> bool {
    let (d0, _) = pair.psi_derivatives(0.0);
    let (d1, _) = pair.psi_derivatives(1.0);
    (d1 - d0).abs() < 1e-14 && pair.psi(1.0).abs() < 1e-14
}

pub fn phi(pair: &StatePair, lambda: f64, cfg: &Config) -> PhiResult {
    let (slope0, _) = pair.psi_derivatives(0.0);
    let (slope1, _) = pair.psi_derivatives(1.0);
    if lambda <= slope0 {
        return PhiResult { lambda, phi: 0.0, s_star: 0.0, regime: PhiRegime::ClampedAt0 };
    }
    if lambda >= slope1 {
        return PhiResult { lambda, phi: (lambda - pair.psi(1.0)).max(0.0), s_star: 1.0, regime: PhiRegime::ClampedAt1 };
    }
    let s = bisect_increasing(|s| pair.psi_derivatives(s).0 - lambda, 0.0, 1.0, cfg.root_tol);
    PhiResult { lambda, phi: (lambda * s - pair.psi(s)).max(0.0), s_star: s, regime: PhiRegime::Interior }
}

/// `g(s) = s/(1+s) r - psi(s)/(1+s)`.
pub fn g(pair: &StatePair, r: f64, s: f64) -> f64 {
    (s * r - pair.psi(s)) / (1.0 + s)
}

/// `h(s) = r + psi(s) - (1+s) psi'(s)`; `g'(s) = h(s) / (1+s)^2`.
pub fn h(pair: &StatePair, r: f64, s: f64) -> f64 {
    let v = pair.psi_value(s);
    r + v.psi - (1.0 + s) * v.d1
}

pub fn g_prime(pair: &StatePair, r: f64, s: f64) -> f64 {
    h(pair, r, s) / ((1.0 + s) * (1.0 + s))
}

/// `u(r) = phi(lambda*)` with `phi(lambda*) = r - lambda*`, together with its
/// parametric and max-form evaluations.
pub fn strong_converse_exponent(pair: &StatePair, r: f64, cfg: &Config) -> Result<ExponentResult> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::NegativeRate(r));
    }
    let d = pair.relative_entropy();
    let psi1 = pair.psi(1.0);
    let (slope1, _) = pair.psi_derivatives(1.0);
    let high_rate_edge = 2.0 * slope1 - psi1;
    let flat = is_flat(pair);
    let (s_maxform, u_maxform) = golden_section_max(|s| g(pair, r, s), 0.0, 1.0, 1e-10);

    if r <= d {
        let at = phi(pair, r, cfg);
        return Ok(ExponentResult {
            r,
            lambda_star: r,
            s_star: 0.0,
            phi_star: at.phi,
            regime: RateRegime::BelowD,
            u_parametric: 0.0,
            u_maxform,
            s_maxform,
            fixed_point_residual: (at.phi + r - r).abs(),
            flat_family: flat,
        });
    }

    let lo = d.min(r);
    let lambda_star = bisect_increasing(|l| phi(pair, l, cfg).phi + l - r, lo, r, cfg.root_tol * r.max(1.0));
    let phi_star = phi(pair, lambda_star, cfg).phi;

    let (regime, s_star, u_parametric) = if r >= high_rate_edge {
        (RateRegime::HighRate, 1.0, g(pair, r, 1.0))
    } else {
        // h(0) = r - D > 0 and h(1) < 0 here
        let s = bisect_increasing(|s| -h(pair, r, s), 0.0, 1.0, cfg.root_tol);
        let v = pair.psi_value(s);
        (RateRegime::Interior, s, s * v.d1 - v.psi)
    };

    Ok(ExponentResult {
        r,
        lambda_star,
        s_star,
        phi_star,
        regime,
        u_parametric,
        u_maxform,
        s_maxform,
        fixed_point_residual: (phi_star + lambda_star - r).abs(),
        flat_family: flat,
    })
}

/// Whether a type-II exponent `r` forces the type-I error to one
/// exponentially fast: `r > D`, cross-checked against `phi(lambda*) > 0`.
pub fn strong_converse_predicate(pair: &StatePair, r: f64, cfg: &Config) -> Result<bool> {
    let d = pair.relative_entropy();
    let by_divergence = r > d + 1e-12;
    let res = strong_converse_exponent(pair, r, cfg)?;
    // phi* ~ (r - D)^2 / (2 psi''(0)) just above D, so only flag clear disagreement
    let clearly_positive = res.phi_star > 1e-10;
    let clearly_zero = res.phi_star <= 1e-15;
    if (by_divergence && clearly_zero && r > d + 1e-6) || (!by_divergence && clearly_positive) {
        return Err(Error::InternalInconsistency(format!(
            "r = {r}, D = {d}, phi(lambda*) = {}",
            res.phi_star
        )));
    }
    Ok(by_divergence)
}

/// Reference abscissae of the `phi` curve for a given rate.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CurveMarkers {
    pub divergence: f64,
    pub lambda_star: f64,
    pub psi_prime_one: f64,
    pub high_rate_edge: f64,
}

pub fn curve_markers(pair: &StatePair, r: f64, cfg: &Config) -> Result<CurveMarkers> {
    let res = strong_converse_exponent(pair, r, cfg)?;
    let (slope1, _) = pair.psi_derivatives(1.0);
    Ok(CurveMarkers {
        divergence: pair.relative_entropy(),
        lambda_star: res.lambda_star,
        psi_prime_one: slope1,
        high_rate_edge: 2.0 * slope1 - pair.psi(1.0),
    })
}
