//! Randomized property suites.
//!
//! Each suite draws its own cases from a ChaCha stream derived from the seed,
//! so a suite's cases do not depend on which other suites ran. Every case
//! yields a tolerance-adjusted slack: nonnegative means the property held.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::classical::{
    finite_n_optimal, kl, pythagorean_check, solve_eta, tilted, u_tilde, Constraint, Distribution,
};
use crate::config::Config;
use crate::divergence::{binary_dpi_check, StatePair};
use crate::error::Result;
use crate::exponent::{g, phi, strong_converse_exponent, RateRegime};
use crate::io::MatrixJson;
use crate::neyman_pearson::{beta_star, fundamental_inequality_check, np_dominance_check};
use crate::operator::{tensor_dim, tensor_power, DensityOperator};
use crate::random;

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Multiplies every suite's case count.
    pub scale: f64,
    /// Negate every slack before judging it; exercises the failure path.
    pub corrupt: bool,
    /// Externally computed `(lambda, phi(lambda))` samples to check for
    /// monotonicity and convexity, in any consistent unit.
    pub phi_samples: Option<Vec<(f64, f64)>>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { seed: 0, scale: 1.0, corrupt: false, phi_samples: None }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    /// Smallest slack seen; `+inf` for an empty suite.
    pub worst_slack: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Counterexample {
    pub suite: &'static str,
    pub case: usize,
    pub slack: f64,
    pub seed: u64,
    pub detail: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub suites: Vec<SuiteReport>,
    pub first_failure: Option<Counterexample>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.failures == 0)
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteReport> {
        self.suites.iter().find(|s| s.name == name)
    }
}

struct Recorder {
    report: SuiteReport,
    first: Option<Counterexample>,
    seed: u64,
    corrupt: bool,
}

impl Recorder {
    fn new(name: &'static str, opts: &VerifyOptions) -> Self {
        Recorder {
            report: SuiteReport { name, cases: 0, failures: 0, worst_slack: f64::INFINITY },
            first: None,
            seed: opts.seed,
            corrupt: opts.corrupt,
        }
    }

    fn record(&mut self, slack: f64, detail: impl FnOnce() -> Value) {
        let slack = if self.corrupt { -slack } else { slack };
        let case = self.report.cases;
        self.report.cases += 1;
        if !(slack >= self.report.worst_slack) {
            self.report.worst_slack = slack;
        }
        if !(slack >= 0.0) {
            self.report.failures += 1;
            if self.first.is_none() {
                self.first =
                    Some(Counterexample { suite: self.report.name, case, slack, seed: self.seed, detail: detail() });
            }
        }
    }

    fn check(&mut self, ok: bool, detail: impl FnOnce() -> Value) {
        self.record(if ok { 1.0 } else { -1.0 }, detail);
    }
}

fn pair_json(pair: &StatePair) -> Value {
    json!({
        "rho": MatrixJson::from_matrix(pair.rho().matrix()),
        "sigma": MatrixJson::from_matrix(pair.sigma().matrix()),
    })
}

fn count(base: usize, scale: f64) -> usize {
    ((base as f64 * scale).round() as usize).max(1)
}

pub const SUITES: [&str; 12] = [
    "np_dominance",
    "error_tradeoff",
    "binary_dpi",
    "derivatives",
    "golden_thompson",
    "additivity",
    "commuting_reduction",
    "pythagorean",
    "tilted_minimality",
    "exponent_forms",
    "classical_forms",
    "phi_shape",
];

pub fn run(opts: &VerifyOptions, cfg: &Config) -> Result<VerifyReport> {
    cfg.validate()?;
    let mut recorders = Vec::new();
    // the data-processing suite runs on the tests drawn by the first two suites
    let mut dpi = Recorder::new("binary_dpi", opts);
    for (stream, &name) in SUITES.iter().enumerate() {
        if name == "binary_dpi" {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(stream as u64);
        let mut rec = Recorder::new(name, opts);
        match name {
            "np_dominance" | "error_tradeoff" => {
                test_sweep(&mut rec, &mut dpi, name == "np_dominance", &mut rng, count(500, opts.scale), cfg)?
            }
            "derivatives" => derivatives(&mut rec, &mut rng, count(50, opts.scale), cfg),
            "golden_thompson" => golden_thompson(&mut rec, &mut rng, count(50, opts.scale), cfg)?,
            "additivity" => additivity(&mut rec, &mut rng, count(20, opts.scale), cfg)?,
            "commuting_reduction" => commuting_reduction(&mut rec, &mut rng, count(20, opts.scale), cfg)?,
            "pythagorean" => pythagorean(&mut rec, &mut rng, count(100, opts.scale), cfg)?,
            "tilted_minimality" => tilted_minimality(&mut rec, &mut rng, count(6, opts.scale))?,
            "exponent_forms" => exponent_forms(&mut rec, &mut rng, count(100, opts.scale), cfg)?,
            "classical_forms" => classical_forms(&mut rec, &mut rng, count(40, opts.scale), cfg)?,
            "phi_shape" => phi_shape(&mut rec, &mut rng, count(10, opts.scale), cfg),
            _ => unreachable!(),
        }
        recorders.push(rec);
    }
    recorders.insert(2, dpi);
    if let Some(samples) = &opts.phi_samples {
        let mut rec = Recorder::new("phi_table", opts);
        phi_table(&mut rec, samples);
        recorders.push(rec);
    }
    let first_failure = recorders.iter_mut().find_map(|r| r.first.take());
    Ok(VerifyReport { seed: opts.seed, suites: recorders.into_iter().map(|r| r.report).collect(), first_failure })
}

/// Draws `(qubit pair, test, lambda, n <= 3)` and checks either the
/// threshold-test dominance or the fundamental inequality, plus the binary
/// data-processing inequality for the drawn test.
fn test_sweep(
    rec: &mut Recorder,
    dpi: &mut Recorder,
    dominance: bool,
    rng: &mut ChaCha8Rng,
    cases: usize,
    cfg: &Config,
) -> Result<()> {
    for _ in 0..cases {
        let pair = if rng.random_bool(0.2) {
            random::random_commuting_pair(rng, 2, cfg)
        } else {
            random::random_pair(rng, 2, cfg)
        };
        let n = rng.random_range(1..=3);
        let test = random::random_test(rng, 1 << n, cfg);
        let lambda = pair.relative_entropy() + rng.random_range(-1.5..1.5);
        let detail = || json!({ "pair": pair_json(&pair), "n": n, "lambda": lambda, "test": MatrixJson::from_matrix(test.matrix()) });
        if dominance {
            let c = np_dominance_check(&pair, n, lambda, &test, cfg)?;
            rec.record(c.lhs - c.rhs + 1e-9, detail);
        } else {
            let c = fundamental_inequality_check(&pair, n, lambda, &test, cfg)?;
            rec.record(c.slack + 1e-9, detail);
        }
        let d = binary_dpi_check(&pair, &test, n, cfg)?;
        dpi.record((d.lhs - d.rhs + 1e-9).min(d.weak_lhs - d.weak_rhs + 1e-9), detail);
    }
    Ok(())
}

fn random_pair_any(rng: &mut ChaCha8Rng, cfg: &Config) -> StatePair {
    let d = rng.random_range(2..=3);
    if rng.random_bool(0.25) {
        random::random_commuting_pair(rng, d, cfg)
    } else {
        random::random_pair(rng, d, cfg)
    }
}

fn derivatives(rec: &mut Recorder, rng: &mut ChaCha8Rng, cases: usize, cfg: &Config) {
    const STEP: f64 = 1e-5;
    for _ in 0..cases {
        let pair = random_pair_any(rng, cfg);
        let d = pair.relative_entropy();
        let (d1, _) = pair.psi_derivatives(0.0);
        rec.record(1e-12 - pair.psi(0.0).abs(), || pair_json(&pair));
        rec.record(1e-9 - (d1 - d).abs(), || json!({ "pair": pair_json(&pair), "D": d, "psi_prime_0": d1 }));
        for s in [0.1, 0.35, 0.6, 0.9] {
            let (a, b) = pair.psi_derivatives(s);
            let fd1 = (pair.psi(s + STEP) - pair.psi(s - STEP)) / (2.0 * STEP);
            let fd2 = (pair.psi_derivatives(s + STEP).0 - pair.psi_derivatives(s - STEP).0) / (2.0 * STEP);
            rec.record(1e-6 - (a - fd1).abs(), || json!({ "pair": pair_json(&pair), "s": s, "d1": a, "fd": fd1 }));
            rec.record(1e-6 - (b - fd2).abs(), || json!({ "pair": pair_json(&pair), "s": s, "d2": b, "fd": fd2 }));
            rec.record(b + 1e-12, || json!({ "pair": pair_json(&pair), "s": s, "d2": b }));
        }
    }
}

fn golden_thompson(rec: &mut Recorder, rng: &mut ChaCha8Rng, cases: usize, cfg: &Config) -> Result<()> {
    let mut widest: Option<f64> = None;
    for i in 0..cases {
        let d = rng.random_range(2..=3);
        let pair = if i % 5 == 4 { random::random_commuting_pair(rng, d, cfg) } else { random::random_pair(rng, d, cfg) };
        let mut max_gap = 0.0f64;
        for k in 0..=100 {
            let s = k as f64 / 100.0;
            let gap = pair.psi(s) - pair.psi_bar(s)?;
            max_gap = max_gap.max(gap);
            rec.record(gap + 1e-10, || json!({ "pair": pair_json(&pair), "s": s, "gap": gap }));
        }
        let commuting = pair.commutator_norm() < 1e-10;
        rec.check(commuting == (max_gap < 1e-10), || {
            json!({ "pair": pair_json(&pair), "max_gap": max_gap, "commutator": pair.commutator_norm() })
        });
        if !commuting {
            widest = Some(widest.map_or(max_gap, |w| w.max(max_gap)));
        }
    }
    if let Some(w) = widest {
        rec.record(w - 1e-4, || json!({ "widest_gap": w }));
    }
    Ok(())
}

fn additivity(rec: &mut Recorder, rng: &mut ChaCha8Rng, cases: usize, cfg: &Config) -> Result<()> {
    for _ in 0..cases {
        let pair = random_pair_any(rng, cfg);
        let square = |m: &DensityOperator| DensityOperator::new(tensor_power(m.matrix(), 2, cfg.dim_cap)?, cfg);
        let doubled = StatePair::new(square(pair.rho())?, square(pair.sigma())?, cfg)?;
        let d = pair.relative_entropy();
        rec.record(1e-9 - (doubled.relative_entropy() - 2.0 * d).abs(), || pair_json(&pair));
        for s in [0.25, 0.5, 1.0] {
            rec.record(1e-9 - (doubled.psi(s) - 2.0 * pair.psi(s)).abs(), || json!({ "pair": pair_json(&pair), "s": s }));
        }
        let lambda = d + 0.1;
        let single = phi(&pair, lambda, cfg).phi;
        let double = phi(&doubled, 2.0 * lambda, cfg).phi;
        rec.record(1e-9 - (double - 2.0 * single).abs(), || json!({ "pair": pair_json(&pair), "lambda": lambda }));
    }
    Ok(())
}

fn commuting_reduction(rec: &mut Recorder, rng: &mut ChaCha8Rng, cases: usize, cfg: &Config) -> Result<()> {
    for _ in 0..cases {
        let d = rng.random_range(2..=3);
        let (pair, p, q) = random::random_diagonal_pair(rng, d, cfg);
        let (pd, qd) = (Distribution::new(p.clone())?, Distribution::new(q.clone())?);
        for s in [0.0, 0.3, 0.7, 1.0] {
            let gap = (pair.psi(s) - tilted(&pd, &qd, s)?.psi_tilde).abs();
            rec.record(1e-10 - gap, || json!({ "p": p, "q": q, "s": s }));
        }
        let epsilon: f64 = rng.random_range(0.0..0.5);
        let n_max = (1..=8).take_while(|&n| tensor_dim(d, n, cfg.dim_cap).is_ok()).last().unwrap_or(0);
        for n in 1..=n_max {
            let quantum = beta_star(&pair, n, epsilon, cfg)?;
            let classical = finite_n_optimal(&pd, &qd, n, Constraint::Epsilon(epsilon), cfg)?;
            rec.record(1e-9 - (quantum.beta_star - classical.beta).abs(), || {
                json!({ "p": p, "q": q, "n": n, "epsilon": epsilon, "quantum": quantum.beta_star, "classical": classical.beta })
            });
            rec.record(quantum.dual_gap + 1e-9, || json!({ "p": p, "q": q, "n": n, "epsilon": epsilon, "dual_gap": quantum.dual_gap }));
        }
    }
    Ok(())
}

fn pythagorean(rec: &mut Recorder, rng: &mut ChaCha8Rng, cases: usize, cfg: &Config) -> Result<()> {
    let mut done = 0;
    while done < cases {
        let k = rng.random_range(2..=3);
        let p = random::random_distribution(rng, k);
        let q = random::random_distribution(rng, k);
        let p_hat = random::random_distribution(rng, k);
        let target: f64 = (0..k).map(|j| p_hat.probs()[j] * (p.probs()[j] / q.probs()[j]).ln()).sum();
        // a target outside eta([-s_cap, s_cap]) is redrawn
        let Ok(t) = solve_eta(&p, &q, target, cfg) else { continue };
        let c = pythagorean_check(&p, &q, &p_hat, t)?;
        let detail = || json!({ "p": p.probs(), "q": q.probs(), "p_hat": p_hat.probs(), "t": t, "check": c });
        rec.record(1e-8 - (c.lhs - c.rhs).abs(), detail);
        rec.record(1e-8 - (c.lhs_p - c.rhs_p).abs(), detail);
        done += 1;
    }
    Ok(())
}

fn simplex_grid(k: usize, steps: usize) -> Vec<Vec<f64>> {
    let h = 1.0 / steps as f64;
    match k {
        2 => (0..=steps).map(|i| vec![i as f64 * h, 1.0 - i as f64 * h]).collect(),
        3 => (0..=steps)
            .flat_map(|i| (0..=steps - i).map(move |j| vec![i as f64 * h, j as f64 * h, ((steps - i - j) as f64 * h).max(0.0)]))
            .collect(),
        _ => unreachable!("grid only for binary and ternary alphabets"),
    }
}

/// On the sphere `D(.||q) = D(p(s)||q)` the tilted point minimizes `D(.||p)`.
/// Grid points within `band` of the sphere may undercut by at most `band`,
/// since the minimum moves with slope `s/(1+s) < 1` in the radius.
fn tilted_minimality(rec: &mut Recorder, rng: &mut ChaCha8Rng, cases: usize) -> Result<()> {
    let grids = [(2, simplex_grid(2, 10_000), 2e-4), (3, simplex_grid(3, 300), 2e-3)];
    for i in 0..cases {
        let (k, grid, band) = &grids[i % 2];
        let p = random::random_distribution(rng, *k);
        let q = random::random_distribution(rng, *k);
        let s: f64 = rng.random_range(0.05..2.0);
        let point = tilted(&p, &q, s)?;
        for probs in grid {
            let p_hat = Distribution::new(probs.clone())?;
            if (kl(&p_hat, &q)? - point.d_to_q).abs() >= *band {
                continue;
            }
            let slack = kl(&p_hat, &p)? - point.d_to_p + band + 1e-12;
            rec.record(slack, || json!({ "p": p.probs(), "q": q.probs(), "s": s, "p_hat": probs }));
        }
    }
    Ok(())
}

fn exponent_forms(rec: &mut Recorder, rng: &mut ChaCha8Rng, cases: usize, cfg: &Config) -> Result<()> {
    let mut done = 0;
    while done < cases {
        let pair = random_pair_any(rng, cfg);
        let d = pair.relative_entropy();
        let (slope1, _) = pair.psi_derivatives(1.0);
        let edge = 2.0 * slope1 - pair.psi(1.0);
        if edge - d < 1e-6 {
            continue;
        }
        let r = d + rng.random_range(0.05..0.95) * (edge - d);
        let res = strong_converse_exponent(&pair, r, cfg)?;
        let detail = || json!({ "pair": pair_json(&pair), "r": r, "result": res });
        rec.check(res.regime == RateRegime::Interior, detail);
        rec.record(1e-8 - (res.u_parametric - res.u_maxform).abs(), detail);
        rec.record(1e-8 - (res.u_parametric - res.phi_star).abs(), detail);
        rec.record(1e-9 - res.fixed_point_residual, detail);
        // g is maximized at s*
        for k in 0..=20 {
            let s = k as f64 / 20.0;
            rec.record(res.u_maxform - g(&pair, r, s) + 1e-12, detail);
        }
        done += 1;
    }
    Ok(())
}

fn classical_forms(rec: &mut Recorder, rng: &mut ChaCha8Rng, cases: usize, cfg: &Config) -> Result<()> {
    let mut done = 0;
    while done < cases {
        let k = rng.random_range(2..=4);
        let p = random::random_distribution(rng, k);
        let q = random::random_distribution(rng, k);
        let d = kl(&p, &q)?;
        let r = d + rng.random_range(0.01..0.5);
        let Ok(u) = u_tilde(&p, &q, r, cfg) else { continue };
        let Some(parametric) = u.parametric else { continue };
        let detail = || json!({ "p": p.probs(), "q": q.probs(), "r": r, "u": u });
        rec.record(1e-7 - (parametric - u.max_form).abs(), detail);
        for s in [0.0, 0.5, 1.0, 2.0, 5.0] {
            let psi = tilted(&p, &q, s)?.psi_tilde;
            rec.record(u.max_form - (s * r - psi) / (1.0 + s) + 1e-12, detail);
        }
        // the max form on [0, 1] is the quantum exponent of the induced diagonal pair
        let rho = DensityOperator::diagonal(p.probs(), cfg)?;
        let sigma = DensityOperator::diagonal(q.probs(), cfg)?;
        let pair = StatePair::new(rho, sigma, cfg)?;
        let quantum = strong_converse_exponent(&pair, r, cfg)?;
        let (_, restricted) = crate::roots::golden_section_max(
            |s| (s * r - tilted(&p, &q, s).map(|t| t.psi_tilde).unwrap_or(f64::NAN)) / (1.0 + s),
            0.0,
            1.0,
            1e-10,
        );
        rec.record(1e-8 - (restricted - quantum.u_maxform).abs(), detail);
        done += 1;
    }
    Ok(())
}

/// `phi` is convex and nondecreasing; checked by differences on a grid.
fn phi_shape(rec: &mut Recorder, rng: &mut ChaCha8Rng, cases: usize, cfg: &Config) {
    for _ in 0..cases {
        let pair = random_pair_any(rng, cfg);
        let d = pair.relative_entropy();
        let (slope1, _) = pair.psi_derivatives(1.0);
        let (lo, hi) = (d - 0.5, slope1 + 0.5);
        let values: Vec<f64> = (0..=200).map(|i| phi(&pair, lo + (hi - lo) * i as f64 / 200.0, cfg).phi).collect();
        for w in values.windows(3) {
            rec.record(w[1] - w[0] + 1e-12, || pair_json(&pair));
            rec.record(w[2] - 2.0 * w[1] + w[0] + 1e-10, || pair_json(&pair));
        }
        for (i, value) in values.iter().enumerate() {
            let lambda = lo + (hi - lo) * i as f64 / 200.0;
            if lambda <= d {
                rec.record(1e-15 - value.abs(), || json!({ "pair": pair_json(&pair), "lambda": lambda }));
            }
        }
    }
}

/// Slopes between successive samples are nonnegative and nondecreasing.
/// Samples closer than `1e-4` in `lambda` are merged, so that printed
/// precision does not dominate the slope.
fn phi_table(rec: &mut Recorder, samples: &[(f64, f64)]) {
    let mut pts: Vec<(f64, f64)> = samples.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut kept: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for p in pts {
        if kept.last().is_none_or(|q| p.0 - q.0 >= 1e-4) {
            kept.push(p);
        }
    }
    let slopes: Vec<(f64, f64)> = kept.windows(2).map(|w| (w[0].0, (w[1].1 - w[0].1) / (w[1].0 - w[0].0))).collect();
    for &(at, m) in &slopes {
        rec.record(m + 1e-7, || json!({ "lambda": at, "slope": m }));
    }
    for w in slopes.windows(2) {
        rec.record(w[1].1 - w[0].1 + 1e-7, || json!({ "lambda": w[1].0, "slopes": [w[0].1, w[1].1] }));
    }
}
