//! Classical hypothesis testing between finite distributions `p` and `q`:
//! the tilted family `p(s)_j ∝ p_j^(1+s) q_j^(-s)`, the strong-converse
//! exponent `ũ(r)` and exact finite-n optimal tests by type-class
//! enumeration.

use serde::Serialize;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::roots::bisect_increasing;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty alphabet".into()));
        }
        if let Some(bad) = probs.iter().find(|&&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidDistribution(format!("entry {bad} is not a probability")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!("entries sum to {total}")));
        }
        Ok(Distribution { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

fn check_alphabets(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch { expected: p.len(), got: q.len() });
    }
    Ok(())
}

fn check_absolute_continuity(p: &[f64], q: &[f64]) -> Result<()> {
    check_alphabets(p, q)?;
    if let Some(j) = (0..p.len()).find(|&j| p[j] > 0.0 && q[j] <= 0.0) {
        return Err(Error::SupportViolation(format!("p[{j}] > 0 but q[{j}] = 0")));
    }
    Ok(())
}

fn kl_raw(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).filter(|(&a, _)| a > 0.0).map(|(&a, &b)| a * (a / b).ln()).sum::<f64>().max(0.0)
}

/// `D(p||q) = Σ p_j log(p_j / q_j)` with `0 log 0 = 0`.
pub fn kl(p: &Distribution, q: &Distribution) -> Result<f64> {
    check_absolute_continuity(p.probs(), q.probs())?;
    Ok(kl_raw(p.probs(), q.probs()))
}

/// One member of the tilted family.
#[derive(Clone, Debug, Serialize)]
pub struct TiltedPoint {
    pub s: f64,
    pub probs: Vec<f64>,
    /// `log Σ p_j^(1+s) q_j^(-s)`.
    pub psi_tilde: f64,
    /// `E_{p(s)}[log p/q]`, the derivative of `psi_tilde`.
    pub eta: f64,
    /// `Var_{p(s)}[log p/q]`, the second derivative of `psi_tilde`.
    pub variance: f64,
    pub d_to_q: f64,
    pub d_to_p: f64,
}

/// `p(s)`. Defined for every real `s`; the exponent machinery uses `s >= 0`.
pub fn tilted(p: &Distribution, q: &Distribution, s: f64) -> Result<TiltedPoint> {
    check_absolute_continuity(p.probs(), q.probs())?;
    Ok(tilted_raw(p.probs(), q.probs(), s))
}

fn tilted_raw(p: &[f64], q: &[f64], s: f64) -> TiltedPoint {
    let support: Vec<usize> = (0..p.len()).filter(|&j| p[j] > 0.0).collect();
    let log_ratio: Vec<f64> = support.iter().map(|&j| (p[j] / q[j]).ln()).collect();
    let exps: Vec<f64> = support.iter().map(|&j| (1.0 + s) * p[j].ln() - s * q[j].ln()).collect();
    let max = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let psi_tilde = max + exps.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
    let mut probs = vec![0.0; p.len()];
    for (i, &j) in support.iter().enumerate() {
        probs[j] = (exps[i] - psi_tilde).exp();
    }
    let eta: f64 = support.iter().zip(&log_ratio).map(|(&j, l)| probs[j] * l).sum();
    let variance: f64 = support.iter().zip(&log_ratio).map(|(&j, l)| probs[j] * (l - eta) * (l - eta)).sum();
    TiltedPoint { s, d_to_q: kl_raw(&probs, q), d_to_p: kl_raw(&probs, p), probs, psi_tilde, eta, variance }
}

fn is_degenerate(p: &[f64], q: &[f64]) -> bool {
    tilted_raw(p, q, 0.0).variance <= 1e-15
}

/// The member of the tilted family with `D(p(s)||q) = r`.
pub fn solve_rate(p: &Distribution, q: &Distribution, r: f64, cfg: &Config) -> Result<TiltedPoint> {
    check_absolute_continuity(p.probs(), q.probs())?;
    let (p, q) = (p.probs(), q.probs());
    let d0 = kl_raw(p, q);
    if (r - d0).abs() <= 1e-12 {
        return Ok(tilted_raw(p, q, 0.0));
    }
    if r < d0 {
        return Err(Error::RateBelowDivergence { rate: r, divergence: d0 });
    }
    if is_degenerate(p, q) {
        return Err(Error::DegenerateFamily);
    }
    let d = |s: f64| tilted_raw(p, q, s).d_to_q;
    let mut hi = 1.0f64.min(cfg.s_cap);
    while d(hi) < r {
        if hi >= cfg.s_cap {
            return Err(Error::RateUnreachable { rate: r, reached: d(cfg.s_cap), s_cap: cfg.s_cap });
        }
        hi = (2.0 * hi).min(cfg.s_cap);
    }
    let s = bisect_increasing(|s| d(s) - r, 0.0, hi, cfg.root_tol);
    Ok(tilted_raw(p, q, s))
}

/// `η(t) = target`, for `t` of either sign.
pub fn solve_eta(p: &Distribution, q: &Distribution, target: f64, cfg: &Config) -> Result<f64> {
    check_absolute_continuity(p.probs(), q.probs())?;
    let (p, q) = (p.probs(), q.probs());
    if is_degenerate(p, q) {
        return Err(Error::DegenerateFamily);
    }
    let eta = |t: f64| tilted_raw(p, q, t).eta;
    let cap = cfg.s_cap;
    let (lo_val, hi_val) = (eta(-cap), eta(cap));
    if target < lo_val || target > hi_val {
        let got = if target < lo_val { lo_val } else { hi_val };
        return Err(Error::ExpectationMismatch { expected: target, got });
    }
    Ok(bisect_increasing(|t| eta(t) - target, -cap, cap, cfg.root_tol))
}

/// `ũ(r)` by its parametric and max-form representations.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct UTilde {
    pub r: f64,
    /// `s η(s) - ψ̃(s)` at the root of `D(p(s)||q) = r`; absent for a degenerate family.
    pub parametric: Option<f64>,
    pub s_parametric: Option<f64>,
    /// `sup_{s>=0} (s r - ψ̃(s)) / (1+s)`.
    pub max_form: f64,
    pub s_maxform: f64,
    /// The supremum is only approached as `s -> ∞` (or beyond `s_cap`).
    pub supremum_not_attained: bool,
}

fn g_tilde(p: &[f64], q: &[f64], r: f64, s: f64) -> f64 {
    (s * r - tilted_raw(p, q, s).psi_tilde) / (1.0 + s)
}

pub fn u_tilde(p: &Distribution, q: &Distribution, r: f64, cfg: &Config) -> Result<UTilde> {
    check_absolute_continuity(p.probs(), q.probs())?;
    let (pp, qq) = (p.probs(), q.probs());
    let d0 = kl_raw(pp, qq);
    if r < d0 - 1e-12 {
        return Err(Error::RateBelowDivergence { rate: r, divergence: d0 });
    }
    if is_degenerate(pp, qq) {
        // ψ̃(s) = s D, so g(s) = s (r - D) / (1 + s) increases to r - D
        return Ok(UTilde {
            r,
            parametric: None,
            s_parametric: None,
            max_form: (r - d0).max(0.0),
            s_maxform: f64::INFINITY,
            supremum_not_attained: r > d0 + 1e-12,
        });
    }
    let point = solve_rate(p, q, r, cfg)?;
    let parametric = point.s * point.eta - point.psi_tilde;

    // stationarity of g: k(s) = r + ψ̃(s) - (1+s) ψ̃'(s), nonincreasing, k(0) = r - D >= 0
    let k = |s: f64| {
        let t = tilted_raw(pp, qq, s);
        r + t.psi_tilde - (1.0 + s) * t.eta
    };
    let mut hi = 1.0f64.min(cfg.s_cap);
    let mut attained = true;
    while k(hi) > 0.0 {
        if hi >= cfg.s_cap {
            attained = false;
            break;
        }
        hi = (2.0 * hi).min(cfg.s_cap);
    }
    let s_max = if attained { bisect_increasing(|s| -k(s), 0.0, hi, cfg.root_tol) } else { hi };
    Ok(UTilde {
        r,
        parametric: Some(parametric),
        s_parametric: Some(point.s),
        max_form: g_tilde(pp, qq, r, s_max),
        s_maxform: s_max,
        supremum_not_attained: !attained,
    })
}

/// Both Pythagorean decompositions through `p(t)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PythagoreanCheck {
    /// `D(p̂||q)`.
    pub lhs: f64,
    /// `D(p̂||p(t)) + D(p(t)||q)`.
    pub rhs: f64,
    pub holds: bool,
    /// `D(p̂||p)`.
    pub lhs_p: f64,
    /// `D(p̂||p(t)) + D(p(t)||p)`.
    pub rhs_p: f64,
    pub holds_p: bool,
}

pub fn pythagorean_check(p: &Distribution, q: &Distribution, p_hat: &Distribution, t: f64) -> Result<PythagoreanCheck> {
    check_absolute_continuity(p.probs(), q.probs())?;
    check_absolute_continuity(p_hat.probs(), p.probs())?;
    let (pp, qq, ph) = (p.probs(), q.probs(), p_hat.probs());
    let point = tilted_raw(pp, qq, t);
    let expected: f64 = ph.iter().zip(pp).zip(qq).filter(|((&a, _), _)| a > 0.0).map(|((&a, &b), &c)| a * (b / c).ln()).sum();
    if (expected - point.eta).abs() > 1e-8 {
        return Err(Error::ExpectationMismatch { expected, got: point.eta });
    }
    let to_tilted = kl_raw(ph, &point.probs);
    let lhs = kl_raw(ph, qq);
    let rhs = to_tilted + point.d_to_q;
    let lhs_p = kl_raw(ph, pp);
    let rhs_p = to_tilted + point.d_to_p;
    Ok(PythagoreanCheck {
        lhs,
        rhs,
        holds: (lhs - rhs).abs() < 1e-8,
        lhs_p,
        rhs_p,
        holds_p: (lhs_p - rhs_p).abs() < 1e-8,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    /// `alpha <= epsilon`; minimize beta.
    Epsilon(f64),
    /// `beta <= e^(-n r)`; minimize alpha.
    Rate(f64),
}

/// Exact optimum over randomized tests on `X^n`.
#[derive(Clone, Debug, Serialize)]
pub struct FiniteNOptimal {
    pub n: usize,
    pub constraint: Constraint,
    pub alpha: f64,
    pub beta: f64,
    /// `1 - alpha`, summed directly so it keeps relative precision when tiny.
    pub accept_mass: f64,
    /// Per-sequence log-likelihood ratio `log p^n(x) / q^n(x)` of the boundary type.
    pub threshold_log_ratio: f64,
    /// Fraction of the boundary block that is accepted.
    pub boundary_fraction: f64,
    /// Letter counts of the boundary type.
    pub boundary_type: Vec<usize>,
    pub types_enumerated: usize,
}

struct TypeClass {
    counts: Vec<usize>,
    log_ratio: f64,
    p_mass: f64,
    q_mass: f64,
}

fn binomial_f64(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn compositions(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(remaining: usize, slots: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            cur.push(remaining);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for c in (0..=remaining).rev() {
            cur.push(c);
            rec(remaining - c, slots - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

fn enumerate_types(p: &[f64], q: &[f64], n: usize) -> Vec<TypeClass> {
    let mut log_fact = vec![0.0f64; n + 1];
    for i in 1..=n {
        log_fact[i] = log_fact[i - 1] + (i as f64).ln();
    }
    let log_mass = |counts: &[usize], dist: &[f64]| -> f64 {
        let mut acc = log_fact[n];
        for (&c, &x) in counts.iter().zip(dist) {
            acc -= log_fact[c];
            if c > 0 {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                acc += c as f64 * x.ln();
            }
        }
        acc
    };
    let mut types: Vec<TypeClass> = compositions(n, p.len())
        .into_iter()
        .filter_map(|counts| {
            let lp = log_mass(&counts, p);
            let lq = log_mass(&counts, q);
            if lp == f64::NEG_INFINITY && lq == f64::NEG_INFINITY {
                return None;
            }
            let log_ratio = if lp == f64::NEG_INFINITY { f64::NEG_INFINITY } else { lp - lq };
            Some(TypeClass { counts, log_ratio, p_mass: lp.exp(), q_mass: lq.exp() })
        })
        .collect();
    types.sort_by(|a, b| b.log_ratio.total_cmp(&a.log_ratio).then_with(|| b.counts.cmp(&a.counts)));
    types
}

/// Consecutive runs of (numerically) tied likelihood ratios.
fn tie_blocks(types: &[TypeClass]) -> Vec<std::ops::Range<usize>> {
    let mut blocks = Vec::new();
    let mut start = 0;
    for i in 1..=types.len() {
        let split = i == types.len() || {
            let (a, b) = (types[i - 1].log_ratio, types[i].log_ratio);
            !(a == b || (a - b).abs() <= 1e-12 * a.abs().max(1.0))
        };
        if split {
            blocks.push(start..i);
            start = i;
        }
    }
    blocks
}

/// Optimal randomized likelihood-ratio test on `n` i.i.d. letters.
pub fn finite_n_optimal(p: &Distribution, q: &Distribution, n: usize, constraint: Constraint, cfg: &Config) -> Result<FiniteNOptimal> {
    check_absolute_continuity(p.probs(), q.probs())?;
    if n == 0 {
        return Err(Error::InvalidConfig("n must be positive".into()));
    }
    let k = p.len();
    let count = binomial_f64(n + k - 1, k - 1);
    if count > cfg.type_cap as f64 {
        return Err(Error::TypeCapExceeded { count: count.min(usize::MAX as f64) as usize, cap: cfg.type_cap });
    }
    match constraint {
        Constraint::Epsilon(e) if !(0.0..1.0).contains(&e) => return Err(Error::EpsilonOutOfRange(e)),
        Constraint::Rate(r) if !(r >= 0.0) => return Err(Error::NegativeRate(r)),
        _ => {}
    }
    let types = enumerate_types(p.probs(), q.probs(), n);
    let blocks = tie_blocks(&types);
    let mass = |range: &std::ops::Range<usize>| -> (f64, f64) {
        types[range.clone()].iter().fold((0.0, 0.0), |(a, b), t| (a + t.p_mass, b + t.q_mass))
    };

    let mut accept = 0.0;
    let mut beta = 0.0;
    let mut boundary: Option<(usize, f64)> = None;
    match constraint {
        Constraint::Epsilon(eps) => {
            let target = 1.0 - eps;
            for range in &blocks {
                let (pm, qm) = mass(range);
                if types[range.start].log_ratio == f64::NEG_INFINITY {
                    break;
                }
                if eps == 0.0 || accept + pm <= target {
                    accept += pm;
                    beta += qm;
                    boundary = Some((range.start, 1.0));
                    continue;
                }
                let f = ((target - accept) / pm).clamp(0.0, 1.0);
                accept += f * pm;
                beta += f * qm;
                boundary = Some((range.start, f));
                break;
            }
        }
        Constraint::Rate(r) => {
            let budget = (-(n as f64) * r).exp();
            for range in &blocks {
                let (pm, qm) = mass(range);
                if types[range.start].log_ratio == f64::NEG_INFINITY {
                    break;
                }
                if beta + qm <= budget {
                    accept += pm;
                    beta += qm;
                    boundary = Some((range.start, 1.0));
                    continue;
                }
                let f = ((budget - beta) / qm).clamp(0.0, 1.0);
                accept += f * pm;
                beta += f * qm;
                boundary = Some((range.start, f));
                break;
            }
        }
    }
    let (idx, fraction) = boundary.unwrap_or((0, 0.0));
    Ok(FiniteNOptimal {
        n,
        constraint,
        alpha: (1.0 - accept).clamp(0.0, 1.0),
        beta,
        accept_mass: accept,
        threshold_log_ratio: types[idx].log_ratio,
        boundary_fraction: fraction,
        boundary_type: types[idx].counts.clone(),
        types_enumerated: types.len(),
    })
}

/// One row of a finite-n strong-converse sweep.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct StrongConverseRow {
    pub n: usize,
    pub r: f64,
    pub alpha_star: f64,
    /// `-(1/n) log(1 - alpha*)`.
    pub exponent_estimate: f64,
    pub u_tilde: f64,
}

pub fn strong_converse_sweep(
    p: &Distribution,
    q: &Distribution,
    r: f64,
    ns: &[usize],
    cfg: &Config,
) -> Result<Vec<StrongConverseRow>> {
    let u = u_tilde(p, q, r, cfg)?;
    let limit = u.parametric.unwrap_or(u.max_form);
    ns.iter()
        .map(|&n| {
            let opt = finite_n_optimal(p, q, n, Constraint::Rate(r), cfg)?;
            Ok(StrongConverseRow {
                n,
                r,
                alpha_star: opt.alpha,
                exponent_estimate: -opt.accept_mass.ln() / n as f64,
                u_tilde: limit,
            })
        })
        .collect()
}
