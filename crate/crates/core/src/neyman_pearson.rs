//! Finite-n tests on `n` copies.
//!
//! The threshold test `S_n(lambda)` projects onto the nonnegative part of
//! `rho^n - e^(n lambda) sigma^n`. Mixtures of two such projectors at
//! adjacent thresholds attain the optimal type-II error `beta*_n(epsilon)`,
//! and `Tr(rho^n - t sigma^n)_+` gives a lower bound on it for every `t`
//! which certifies the result.
//!
//! When `rho` and `sigma` commute, both tensor powers are diagonal in the
//! product of a common eigenbasis and the computation runs on the two
//! diagonals; otherwise `rho^n - t sigma^n` is diagonalized densely.

use serde::Serialize;

use crate::config::Config;
use crate::divergence::{binary_dpi_from_errors, StatePair};
use crate::error::{Error, Result};
use crate::exponent::phi;
use crate::operator::{
    hermitian_eigen, spectral, tensor_dim, tensor_power, tensor_power_diagonal, trace_product, BinaryTest, CMatrix,
    HermitianOperator,
};

/// Beyond `|n lambda|` of this size `e^(n lambda)` is no longer useful in f64.
const MAX_LOG_THRESHOLD: f64 = 700.0;

#[derive(Clone, Debug)]
enum Repr {
    Dense { rho: CMatrix, sigma: CMatrix, support: CMatrix },
    Diagonal { basis: CMatrix, p: Vec<f64>, q: Vec<f64> },
}

/// `(rho^n, sigma^n)` ready for threshold tests.
#[derive(Clone, Debug)]
pub struct TensorPowerPair {
    n: usize,
    dim: usize,
    log_radius: f64,
    repr: Repr,
}

impl TensorPowerPair {
    /// Uses the diagonal representation when the pair commutes.
    pub fn new(pair: &StatePair, n: usize, cfg: &Config) -> Result<Self> {
        match pair.commuting_frame() {
            Some((basis, p, q)) => {
                let dim = Self::check_n(pair, n, cfg)?;
                Ok(TensorPowerPair {
                    n,
                    dim,
                    log_radius: pair.log_spectral_radius(),
                    repr: Repr::Diagonal { basis, p: tensor_power_diagonal(&p, n), q: tensor_power_diagonal(&q, n) },
                })
            }
            None => Self::dense(pair, n, cfg),
        }
    }

    /// Always forms the dense `d^n x d^n` operators.
    pub fn dense(pair: &StatePair, n: usize, cfg: &Config) -> Result<Self> {
        let dim = Self::check_n(pair, n, cfg)?;
        let support = tensor_power(&pair.rho().support_projector(pair.support_tol()), n, cfg.dim_cap)?;
        Ok(TensorPowerPair {
            n,
            dim,
            log_radius: pair.log_spectral_radius(),
            repr: Repr::Dense {
                rho: tensor_power(pair.rho().matrix(), n, cfg.dim_cap)?,
                sigma: tensor_power(pair.sigma().matrix(), n, cfg.dim_cap)?,
                support,
            },
        })
    }

    fn check_n(pair: &StatePair, n: usize, cfg: &Config) -> Result<usize> {
        if n == 0 {
            return Err(Error::InvalidConfig("n must be positive".into()));
        }
        tensor_dim(pair.dim(), n, cfg.dim_cap)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.repr, Repr::Diagonal { .. })
    }

    /// Dense `(rho^n, sigma^n)`.
    pub fn dense_states(&self, cfg: &Config) -> Result<(CMatrix, CMatrix)> {
        match &self.repr {
            Repr::Dense { rho, sigma, .. } => Ok((rho.clone(), sigma.clone())),
            Repr::Diagonal { basis, p, q } => {
                let u = tensor_power(basis, self.n, cfg.dim_cap)?;
                Ok((conjugate_diagonal(&u, p), conjugate_diagonal(&u, q)))
            }
        }
    }

    /// `S_n(lambda)`. `lambda = -inf` gives the projector onto the support of `rho^n`.
    pub fn threshold_test(&self, lambda: f64, cfg: &Config) -> ThresholdTest {
        let n = self.n as f64;
        let log_t = n * lambda;
        match &self.repr {
            Repr::Diagonal { basis, p, q } => {
                let mask: Vec<bool> = if lambda == f64::NEG_INFINITY {
                    p.iter().map(|&x| x > 0.0).collect()
                } else if log_t <= 0.0 {
                    // entries are exact products, so ties are judged relative to the ratio
                    let t = log_t.exp() * (1.0 - cfg.degeneracy_tol);
                    p.iter().zip(q).map(|(&a, &b)| a >= t * b).collect()
                } else {
                    let inv = (-log_t).exp();
                    p.iter().zip(q).map(|(&a, &b)| inv * a >= b * (1.0 - cfg.degeneracy_tol)).collect()
                };
                let (mut accept, mut beta) = (0.0, 0.0);
                for (i, &m) in mask.iter().enumerate() {
                    if m {
                        accept += p[i];
                        beta += q[i];
                    }
                }
                let ppt = if lambda == f64::NEG_INFINITY {
                    accept
                } else {
                    let t = log_t.exp();
                    p.iter().zip(q).map(|(&a, &b)| (a - t * b).max(0.0)).sum()
                };
                ThresholdTest {
                    n: self.n,
                    lambda,
                    alpha: (1.0 - accept).clamp(0.0, 1.0),
                    beta: beta.clamp(0.0, 1.0),
                    positive_part_trace: ppt,
                    rank: mask.iter().filter(|&&m| m).count(),
                    test: TestOperator::Diagonal { basis: basis.clone(), n: self.n, mask },
                }
            }
            Repr::Dense { rho, sigma, support } => {
                if lambda == f64::NEG_INFINITY {
                    let (vals, vecs) = hermitian_eigen(support);
                    let cols: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > 0.5).collect();
                    return dense_test(self.n, lambda, rho, sigma, &vecs, &cols, None);
                }
                let (scale, m) = if log_t <= 0.0 {
                    (1.0, rho - sigma.scale(log_t.exp()))
                } else {
                    (log_t.exp(), rho.scale((-log_t).exp()) - sigma)
                };
                let sd = spectral(&HermitianOperator::from_hermitian(&m), cfg.degeneracy_tol);
                // clusters are judged by sign, up to roundoff on the scale of the spectrum
                let spread = sd.clusters.iter().map(|c| c.value.abs()).fold(0.0, f64::max);
                let floor = 1e-13 * spread;
                let kept: Vec<_> = sd.clusters.iter().filter(|c| c.value >= -floor).collect();
                let width: usize = kept.iter().map(|c| c.multiplicity()).sum();
                let mut vecs = CMatrix::zeros(self.dim, width.max(1));
                let mut col = 0;
                let mut positive = 0.0;
                for c in &kept {
                    for (k, &mu) in c.eigenvalues.iter().enumerate() {
                        vecs.set_column(col, &c.vectors.column(k));
                        positive += mu.max(0.0);
                        col += 1;
                    }
                }
                let cols: Vec<usize> = (0..width).collect();
                dense_test(self.n, lambda, rho, sigma, &vecs, &cols, Some(scale * positive))
            }
        }
    }
}

fn conjugate_diagonal(u: &CMatrix, diag: &[f64]) -> CMatrix {
    let mut scaled = u.clone();
    for (c, &v) in diag.iter().enumerate() {
        scaled.column_mut(c).scale_mut(v);
    }
    let m = scaled * u.adjoint();
    (&m + m.adjoint()).scale(0.5)
}

fn dense_test(
    n: usize,
    lambda: f64,
    rho: &CMatrix,
    sigma: &CMatrix,
    vecs: &CMatrix,
    cols: &[usize],
    positive_part: Option<f64>,
) -> ThresholdTest {
    let dim = rho.nrows();
    let sel = CMatrix::from_fn(dim, cols.len(), |r, c| vecs[(r, cols[c])]);
    let expect = |m: &CMatrix| -> f64 {
        let mv = m * &sel;
        let mut acc = 0.0;
        for c in 0..sel.ncols() {
            acc += sel.column(c).iter().zip(mv.column(c).iter()).map(|(a, b)| (a.conj() * b).re).sum::<f64>();
        }
        acc
    };
    let accept = expect(rho);
    let beta = expect(sigma);
    ThresholdTest {
        n,
        lambda,
        alpha: (1.0 - accept).clamp(0.0, 1.0),
        beta: beta.clamp(0.0, 1.0),
        positive_part_trace: positive_part.unwrap_or(accept),
        rank: cols.len(),
        test: TestOperator::Dense(BinaryTest::projector(&sel)),
    }
}

/// A threshold projector, dense or as a mask over a product eigenbasis.
#[derive(Clone, Debug)]
pub enum TestOperator {
    Dense(BinaryTest),
    Diagonal { basis: CMatrix, n: usize, mask: Vec<bool> },
}

impl TestOperator {
    pub fn to_dense(&self, cfg: &Config) -> Result<BinaryTest> {
        match self {
            TestOperator::Dense(t) => Ok(t.clone()),
            TestOperator::Diagonal { basis, n, mask } => {
                let u = tensor_power(basis, *n, cfg.dim_cap)?;
                let cols: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
                let sel = CMatrix::from_fn(u.nrows(), cols.len(), |r, c| u[(r, cols[c])]);
                Ok(BinaryTest::projector(&sel))
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct ThresholdTest {
    pub n: usize,
    pub lambda: f64,
    pub test: TestOperator,
    pub alpha: f64,
    pub beta: f64,
    /// `Tr (rho^n - e^(n lambda) sigma^n)_+`, which differs from the value
    /// on `S_n(lambda)` only through eigenvalues within `degeneracy_tol` of zero.
    pub positive_part_trace: f64,
    /// Dimension of the accepted subspace.
    pub rank: usize,
}

pub fn threshold_test(pair: &StatePair, n: usize, lambda: f64, cfg: &Config) -> Result<ThresholdTest> {
    Ok(TensorPowerPair::new(pair, n, cfg)?.threshold_test(lambda, cfg))
}

/// Optimal type-II error at type-I level `epsilon`, with its certificate.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TradeoffPoint {
    pub n: usize,
    pub epsilon: f64,
    pub beta_star: f64,
    /// Type-I error of the mixed test (equal to `epsilon` up to roundoff).
    pub alpha: f64,
    /// `-inf` when the lower test is the support projector of `rho^n`.
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    /// Weight of `S_n(lambda_lo)` in the mixture.
    pub mix_weight: f64,
    /// `max_t (1 - epsilon - Tr(rho^n - t sigma^n)_+) / t` over the grid.
    pub dual_bound: f64,
    /// The same bound evaluated at the two bracketing thresholds only.
    pub dual_at_bracket: f64,
    /// `beta_star - dual_bound`.
    pub dual_gap: f64,
}

impl TradeoffPoint {
    /// `w S_n(lambda_lo) + (1 - w) S_n(lambda_hi)` as a dense operator.
    pub fn mixed_test(&self, tp: &TensorPowerPair, cfg: &Config) -> Result<BinaryTest> {
        let lo = tp.threshold_test(self.lambda_lo, cfg).test.to_dense(cfg)?;
        let hi = tp.threshold_test(self.lambda_hi, cfg).test.to_dense(cfg)?;
        lo.mix(&hi, self.mix_weight)
    }
}

fn dual_value(t: &ThresholdTest, epsilon: f64) -> f64 {
    if t.lambda == f64::NEG_INFINITY {
        return 0.0;
    }
    (1.0 - epsilon - t.positive_part_trace) * (-(t.n as f64) * t.lambda).exp()
}

pub fn beta_star(pair: &StatePair, n: usize, epsilon: f64, cfg: &Config) -> Result<TradeoffPoint> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::EpsilonOutOfRange(epsilon));
    }
    let tp = TensorPowerPair::new(pair, n, cfg)?;
    beta_star_on(&tp, epsilon, cfg)
}

/// [`beta_star`] on a prepared tensor power.
pub fn beta_star_on(tp: &TensorPowerPair, epsilon: f64, cfg: &Config) -> Result<TradeoffPoint> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::EpsilonOutOfRange(epsilon));
    }
    let n = tp.n as f64;
    let reach = tp.log_radius + 1.0;
    let floor = -MAX_LOG_THRESHOLD / n;
    let ceil = MAX_LOG_THRESHOLD / n;

    // alpha(S_n(lambda)) is nondecreasing in lambda
    let mut lo = -reach;
    let mut lo_test = tp.threshold_test(lo, cfg);
    while lo_test.alpha > epsilon {
        if lo <= floor {
            lo_test = tp.threshold_test(f64::NEG_INFINITY, cfg);
            break;
        }
        lo = (2.0 * lo).max(floor);
        lo_test = tp.threshold_test(lo, cfg);
    }
    let mut hi = reach;
    let mut hi_test = tp.threshold_test(hi, cfg);
    while hi_test.alpha < epsilon {
        if hi >= ceil {
            return Err(Error::InternalInconsistency(format!(
                "type-I error {} < {epsilon} at the largest threshold",
                hi_test.alpha
            )));
        }
        hi = (2.0 * hi).min(ceil);
        hi_test = tp.threshold_test(hi, cfg);
    }

    for _ in 0..300 {
        if hi - lo <= cfg.root_tol * hi.abs().max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let t = tp.threshold_test(mid, cfg);
        if t.alpha <= epsilon {
            lo = mid;
            lo_test = t;
        } else {
            hi = mid;
            hi_test = t;
        }
    }

    let jump = hi_test.alpha - lo_test.alpha;
    let w = if jump > 0.0 { ((hi_test.alpha - epsilon) / jump).clamp(0.0, 1.0) } else { 1.0 };
    let alpha = w * lo_test.alpha + (1.0 - w) * hi_test.alpha;
    let beta = w * lo_test.beta + (1.0 - w) * hi_test.beta;

    let dual_at_bracket = dual_value(&lo_test, epsilon).max(dual_value(&hi_test, epsilon)).max(0.0);
    let grid = cfg.dual_grid.max(2);
    let mut dual_bound = dual_at_bracket;
    for i in 0..grid {
        let lambda = -reach + 2.0 * reach * i as f64 / (grid - 1) as f64;
        dual_bound = dual_bound.max(dual_value(&tp.threshold_test(lambda, cfg), epsilon));
    }

    Ok(TradeoffPoint {
        n: tp.n,
        epsilon,
        beta_star: beta,
        alpha,
        lambda_lo: lo_test.lambda,
        lambda_hi: hi,
        mix_weight: w,
        dual_bound,
        dual_at_bracket,
        dual_gap: beta - dual_bound,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DominanceCheck {
    /// `Tr (rho^n - e^(n lambda) sigma^n)_+`.
    pub lhs: f64,
    /// `Tr (rho^n - e^(n lambda) sigma^n) A`.
    pub rhs: f64,
    pub holds: bool,
}

fn check_candidate(rho_n: &CMatrix, candidate: &BinaryTest) -> Result<()> {
    if candidate.dim() != rho_n.nrows() {
        return Err(Error::DimensionMismatch { expected: rho_n.nrows(), got: candidate.dim() });
    }
    Ok(())
}

/// The threshold test beats any other test on `Tr (rho^n - e^(n lambda) sigma^n) A`.
pub fn np_dominance_check(pair: &StatePair, n: usize, lambda: f64, candidate: &BinaryTest, cfg: &Config) -> Result<DominanceCheck> {
    let tp = TensorPowerPair::dense(pair, n, cfg)?;
    let (rho_n, sigma_n) = tp.dense_states(cfg)?;
    check_candidate(&rho_n, candidate)?;
    let lhs = tp.threshold_test(lambda, cfg).positive_part_trace;
    let rhs = trace_product(&rho_n, candidate.matrix()) - (n as f64 * lambda).exp() * trace_product(&sigma_n, candidate.matrix());
    Ok(DominanceCheck { lhs, rhs, holds: lhs >= rhs - 1e-9 })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FundamentalCheck {
    /// `1 - alpha_n(A)`.
    pub lhs: f64,
    /// `e^(-n phi(lambda)) + e^(n lambda) beta_n(A)`.
    pub rhs: f64,
    pub slack: f64,
    pub phi: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// `1 - alpha_n(A) <= e^(-n phi(lambda)) + e^(n lambda) beta_n(A)`.
pub fn fundamental_inequality_check(
    pair: &StatePair,
    n: usize,
    lambda: f64,
    candidate: &BinaryTest,
    cfg: &Config,
) -> Result<FundamentalCheck> {
    let rho_n = tensor_power(pair.rho().matrix(), n, cfg.dim_cap)?;
    check_candidate(&rho_n, candidate)?;
    let sigma_n = tensor_power(pair.sigma().matrix(), n, cfg.dim_cap)?;
    let (alpha, beta) = candidate.errors(&rho_n, &sigma_n)?;
    let ph = phi(pair, lambda, cfg).phi;
    let nf = n as f64;
    let lhs = 1.0 - alpha;
    let rhs = (-nf * ph).exp() + (nf * lambda).exp() * beta;
    Ok(FundamentalCheck { lhs, rhs, slack: rhs - lhs, phi: ph, alpha, beta })
}

/// One row of the Stein sweep.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SteinRow {
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    pub log_beta_over_n: f64,
    /// `D + delta`, where the lower bound is evaluated.
    pub lambda: f64,
    pub phi: f64,
    /// `(1/n) log(e^(-n lambda) (1 - epsilon - e^(-n phi)))`, when the
    /// parenthesis is positive.
    pub bound: Option<f64>,
    pub bound_holds: bool,
    pub dual_gap: f64,
    /// Binary data-processing inequality at `(alpha, beta)`.
    pub dpi_holds: bool,
    /// `(1 - alpha)(1/n) log beta >= -(log 2)/n - D`.
    pub weak_converse_holds: bool,
}

pub fn stein_sweep(pair: &StatePair, epsilon: f64, n_max: usize, delta: f64, cfg: &Config) -> Result<Vec<SteinRow>> {
    tensor_dim(pair.dim(), n_max, cfg.dim_cap)?;
    (1..=n_max).map(|n| stein_row(pair, n, epsilon, delta, cfg)).collect()
}

/// The row of [`stein_sweep`] for a single `n`.
pub fn stein_row(pair: &StatePair, n: usize, epsilon: f64, delta: f64, cfg: &Config) -> Result<SteinRow> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::EpsilonOutOfRange(epsilon));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidConfig(format!("delta must be positive, got {delta}")));
    }
    let d = pair.relative_entropy();
    let lambda = d + delta;
    let ph = phi(pair, lambda, cfg).phi;
    let point = beta_star(pair, n, epsilon, cfg)?;
    let nf = n as f64;
    let paren = 1.0 - epsilon - (-nf * ph).exp();
    let (bound, bound_holds) = if paren > 0.0 {
        let b = (-nf * lambda).exp() * paren;
        (Some(b.ln() / nf), point.beta_star >= b * (1.0 - 1e-9))
    } else {
        (None, true)
    };
    let dpi = binary_dpi_from_errors(d, n, point.alpha, point.beta_star);
    Ok(SteinRow {
        n,
        alpha: point.alpha,
        beta: point.beta_star,
        log_beta_over_n: point.beta_star.ln() / nf,
        lambda,
        phi: ph,
        bound,
        bound_holds,
        dual_gap: point.dual_gap,
        dpi_holds: dpi.holds,
        weak_converse_holds: dpi.weak_holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::{finite_n_optimal, Constraint, Distribution};
    use crate::operator::{max_abs, DensityOperator};
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag_pair(p: &[f64], q: &[f64]) -> StatePair {
        let cfg = Config::default();
        StatePair::new(
            DensityOperator::diagonal(p, &cfg).unwrap(),
            DensityOperator::diagonal(q, &cfg).unwrap(),
            &cfg,
        )
        .unwrap()
    }

    #[test]
    fn threshold_commuting_single_copy() {
        let cfg = Config::default();
        let pair = diag_pair(&[0.75, 0.25], &[0.5, 0.5]);
        for tp in [TensorPowerPair::new(&pair, 1, &cfg).unwrap(), TensorPowerPair::dense(&pair, 1, &cfg).unwrap()] {
            let t = tp.threshold_test(0.0, &cfg);
            assert!((t.alpha - 0.25).abs() < 1e-15, "{}", t.alpha);
            assert!((t.beta - 0.5).abs() < 1e-15);
            assert_eq!(t.rank, 1);
        }
    }

    #[test]
    fn threshold_far_below_accepts_everything() {
        let cfg = Config::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pair = random::random_pair(&mut rng, 2, &cfg);
        let t = threshold_test(&pair, 2, -50.0, &cfg).unwrap();
        assert!(t.alpha.abs() < 1e-12 && (t.beta - 1.0).abs() < 1e-12);
        assert_eq!(t.rank, 4);
    }

    #[test]
    fn threshold_dense_reconstruction() {
        let cfg = Config::default();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let pair = random::random_pair(&mut rng, 2, &cfg);
        let tp = TensorPowerPair::new(&pair, 2, &cfg).unwrap();
        assert!(!tp.is_diagonal());
        let t = tp.threshold_test(pair.relative_entropy(), &cfg);
        let p = t.test.to_dense(&cfg).unwrap();
        assert!(max_abs(&(p.matrix() * p.matrix() - p.matrix())) < 1e-9);
        // independent reconstruction from the eigenvectors of rho^2 - e^(2D) sigma^2
        let (rho_n, sigma_n) = tp.dense_states(&cfg).unwrap();
        let m = &rho_n - sigma_n.scale((2.0 * pair.relative_entropy()).exp());
        let (vals, vecs) = hermitian_eigen(&m);
        let mut proj = CMatrix::zeros(4, 4);
        for (i, &v) in vals.iter().enumerate() {
            if v >= 0.0 {
                proj += vecs.column(i) * vecs.column(i).adjoint();
            }
        }
        let alpha = 1.0 - trace_product(&rho_n, &proj);
        let beta = trace_product(&sigma_n, &proj);
        assert!((alpha - t.alpha).abs() < 1e-9 && (beta - t.beta).abs() < 1e-9);
    }

    #[test]
    fn diagonal_and_dense_agree() {
        let cfg = Config::default();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let pair = random::random_commuting_pair(&mut rng, 2, &cfg);
        let diag = TensorPowerPair::new(&pair, 3, &cfg).unwrap();
        assert!(diag.is_diagonal());
        let dense = TensorPowerPair::dense(&pair, 3, &cfg).unwrap();
        for lambda in [-0.7, -0.1, 0.05, 0.4] {
            let a = diag.threshold_test(lambda, &cfg);
            let b = dense.threshold_test(lambda, &cfg);
            assert!((a.alpha - b.alpha).abs() < 1e-10 && (a.beta - b.beta).abs() < 1e-10);
            assert!((a.positive_part_trace - b.positive_part_trace).abs() < 1e-10);
        }
        let a = beta_star_on(&diag, 0.1, &cfg).unwrap();
        let b = beta_star_on(&dense, 0.1, &cfg).unwrap();
        assert!((a.beta_star - b.beta_star).abs() < 1e-9);
    }

    #[test]
    fn beta_star_pure_state_zero_epsilon() {
        let cfg = Config::default();
        let pair = diag_pair(&[1.0, 0.0], &[0.5, 0.5]);
        let res = beta_star(&pair, 1, 0.0, &cfg).unwrap();
        assert!((res.beta_star - 0.5).abs() < 1e-12);
        assert!(res.alpha <= 1e-10);
        assert!(res.dual_gap >= -1e-9);
    }

    #[test]
    fn beta_star_biased_coin() {
        let cfg = Config::default();
        let pair = diag_pair(&[0.75, 0.25], &[0.5, 0.5]);
        let res = beta_star(&pair, 1, 0.25, &cfg).unwrap();
        assert!((res.beta_star - 0.5).abs() < 1e-12);
        assert!(res.dual_gap >= -1e-9 && res.dual_gap < 1e-8);
    }

    #[test]
    fn beta_star_is_monotone_in_epsilon() {
        let cfg = Config::default();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let pair = random::random_pair(&mut rng, 2, &cfg);
        let mut prev = f64::INFINITY;
        for eps in [0.0, 0.1, 0.3, 0.6, 0.9, 0.999] {
            let b = beta_star(&pair, 2, eps, &cfg).unwrap().beta_star;
            assert!(b <= prev + 1e-12);
            prev = b;
        }
        assert!(prev < 0.01);
        assert!(matches!(beta_star(&pair, 2, 1.0, &cfg), Err(Error::EpsilonOutOfRange(_))));
    }

    #[test]
    fn beta_star_mixture_is_feasible_and_certified() {
        let cfg = Config::default();
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let pair = random::random_pair(&mut rng, 2, &cfg);
        let tp = TensorPowerPair::new(&pair, 3, &cfg).unwrap();
        let res = beta_star_on(&tp, 0.2, &cfg).unwrap();
        let a = res.mixed_test(&tp, &cfg).unwrap();
        let (rho_n, sigma_n) = tp.dense_states(&cfg).unwrap();
        let (alpha, beta) = a.errors(&rho_n, &sigma_n).unwrap();
        assert!(alpha <= 0.2 + 1e-10);
        assert!((beta - res.beta_star).abs() < 1e-9);
        assert!(res.dual_gap >= -1e-9, "{res:?}");
        assert!((res.beta_star - res.dual_at_bracket).abs() < 1e-8);
    }

    #[test]
    fn beta_star_identical_states() {
        let cfg = Config::default();
        let pair = diag_pair(&[0.3, 0.7], &[0.3, 0.7]);
        for n in 1..5 {
            let b = beta_star(&pair, n, 0.2, &cfg).unwrap().beta_star;
            assert!((b - 0.8).abs() < 1e-12);
        }
    }

    #[test]
    fn beta_star_matches_classical_small() {
        let cfg = Config::default();
        let (p, q) = (vec![0.6, 0.3, 0.1], vec![0.2, 0.5, 0.3]);
        let pair = diag_pair(&p, &q);
        let (pd, qd) = (Distribution::new(p).unwrap(), Distribution::new(q).unwrap());
        for n in 1..=4 {
            let quantum = beta_star(&pair, n, 0.05, &cfg).unwrap().beta_star;
            let classical = finite_n_optimal(&pd, &qd, n, Constraint::Epsilon(0.05), &cfg).unwrap().beta;
            assert!((quantum - classical).abs() < 1e-9, "n = {n}: {quantum} vs {classical}");
        }
    }

    #[test]
    fn dominance_and_fundamental_trivial_candidates() {
        let cfg = Config::default();
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let pair = random::random_pair(&mut rng, 2, &cfg);
        let own = threshold_test(&pair, 2, 0.1, &cfg).unwrap().test.to_dense(&cfg).unwrap();
        let c = np_dominance_check(&pair, 2, 0.1, &own, &cfg).unwrap();
        assert!((c.lhs - c.rhs).abs() < 1e-12 && c.holds);
        let zero = np_dominance_check(&pair, 2, 0.1, &BinaryTest::zero(4), &cfg).unwrap();
        assert!(zero.rhs == 0.0 && zero.lhs >= 0.0 && zero.holds);
        for lambda in [-1.0, 0.0, 0.5] {
            let f = fundamental_inequality_check(&pair, 2, lambda, &BinaryTest::identity(4), &cfg).unwrap();
            assert!(f.slack >= -1e-9);
            let f = fundamental_inequality_check(&pair, 2, lambda, &BinaryTest::zero(4), &cfg).unwrap();
            assert!(f.lhs == 0.0 && f.slack > 0.0);
        }
        assert!(matches!(
            np_dominance_check(&pair, 2, 0.0, &BinaryTest::zero(2), &cfg),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn stein_sweep_identical_states() {
        let cfg = Config::default();
        let pair = diag_pair(&[0.3, 0.7], &[0.3, 0.7]);
        let rows = stein_sweep(&pair, 0.1, 4, 0.05, &cfg).unwrap();
        for r in rows {
            assert!((r.beta - 0.9).abs() < 1e-12);
            assert!(r.bound_holds && r.dpi_holds && r.weak_converse_holds);
        }
    }
}
