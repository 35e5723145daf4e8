//! Relative entropy and the cumulant function
//! `psi(s) = log Tr rho^(1+s) sigma^(-s)`.
//!
//! With `rho = Σ a_j |u_j><u_j|` and `sigma = Σ b_k |v_k><v_k|`,
//!
//! ```text
//! Tr rho^(1+s) sigma^(-s) = Σ_{j,k} a_j^(1+s) b_k^(-s) W_jk,   W_jk = |<u_j, v_k>|^2
//! ```
//!
//! so after one pair of eigendecompositions every evaluation of `psi` is an
//! `O(d^2)` log-sum-exp, and its derivatives are the mean and variance of
//! `log a_j - log b_k` under the normalized weights `a_j^(1+s) b_k^(-s) W_jk`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::operator::{
    commutator_norm, hermitian_eigen, max_abs, support_condition, symmetrize, tensor_power, BinaryTest, CMatrix,
    DensityOperator,
};

#[derive(Clone, Copy, Debug)]
struct Term {
    log_a: f64,
    log_b: f64,
    log_weight: f64,
}

/// A validated `(rho, sigma)` pair with `Im rho ⊂ Im sigma`.
#[derive(Clone, Debug)]
pub struct StatePair {
    rho: DensityOperator,
    sigma: DensityOperator,
    overlap: DMatrix<f64>,
    terms: Vec<Term>,
    support_tol: f64,
}

/// `(psi, psi', psi'')` at one point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PsiValue {
    pub s: f64,
    pub psi: f64,
    pub d1: f64,
    pub d2: f64,
}

impl StatePair {
    pub fn new(rho: DensityOperator, sigma: DensityOperator, cfg: &Config) -> Result<Self> {
        if rho.dim() != sigma.dim() {
            return Err(Error::DimensionMismatch { expected: rho.dim(), got: sigma.dim() });
        }
        if !support_condition(&rho, &sigma, cfg.support_tol) {
            return Err(Error::SupportViolation("Im rho is not contained in Im sigma".into()));
        }
        let d = rho.dim();
        let g = rho.eigenvectors().adjoint() * sigma.eigenvectors();
        let overlap = DMatrix::from_fn(d, d, |j, k| g[(j, k)].norm_sqr());
        let tol = cfg.support_tol;
        let mut terms = Vec::new();
        for (j, &a) in rho.eigenvalues().iter().enumerate() {
            if a <= tol {
                continue;
            }
            for (k, &b) in sigma.eigenvalues().iter().enumerate() {
                let w = overlap[(j, k)];
                if b <= tol || w <= 0.0 {
                    continue;
                }
                terms.push(Term { log_a: a.ln(), log_b: b.ln(), log_weight: w.ln() });
            }
        }
        Ok(StatePair { rho, sigma, overlap, terms, support_tol: tol })
    }

    pub fn rho(&self) -> &DensityOperator {
        &self.rho
    }

    pub fn sigma(&self) -> &DensityOperator {
        &self.sigma
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    /// `W_jk = |<u_j, v_k>|^2`, rows indexed by rho's eigenvectors.
    pub fn overlap(&self) -> &DMatrix<f64> {
        &self.overlap
    }

    pub fn support_tol(&self) -> f64 {
        self.support_tol
    }

    pub fn commutator_norm(&self) -> f64 {
        commutator_norm(self.rho.matrix(), self.sigma.matrix())
    }

    /// Largest `|log a|` over rho's support plus the same for sigma.
    pub fn log_spectral_radius(&self) -> f64 {
        let tol = self.support_tol;
        let r = |ev: &[f64]| ev.iter().filter(|&&a| a > tol).fold(0.0f64, |m, &a| m.max(a.ln().abs()));
        r(self.rho.eigenvalues()) + r(self.sigma.eigenvalues())
    }

    /// A common eigenbasis when `rho` and `sigma` commute, with the two
    /// spectra expressed in it: `(basis, p, q)`.
    pub fn commuting_frame(&self) -> Option<(CMatrix, Vec<f64>, Vec<f64>)> {
        const OFF_DIAGONAL_TOL: f64 = 1e-12;
        let diag_in = |basis: &CMatrix, m: &CMatrix| -> Option<Vec<f64>> {
            let c = basis.adjoint() * m * basis;
            let d = c.nrows();
            for i in 0..d {
                for j in 0..d {
                    if i != j && c[(i, j)].norm() > OFF_DIAGONAL_TOL {
                        return None;
                    }
                }
            }
            Some((0..d).map(|i| c[(i, i)].re.max(0.0)).collect())
        };
        let clean = |v: &[f64]| -> Vec<f64> { v.iter().map(|&x| if x > self.support_tol { x } else { 0.0 }).collect() };
        if let Some(q) = diag_in(self.rho.eigenvectors(), self.sigma.matrix()) {
            return Some((self.rho.eigenvectors().clone(), clean(self.rho.eigenvalues()), clean(&q)));
        }
        if let Some(p) = diag_in(self.sigma.eigenvectors(), self.rho.matrix()) {
            return Some((self.sigma.eigenvectors().clone(), clean(&p), clean(self.sigma.eigenvalues())));
        }
        None
    }

    /// `D(rho||sigma) = Tr rho (log rho - log sigma)` in nats.
    pub fn relative_entropy(&self) -> f64 {
        let tol = self.support_tol;
        let entropy_part: f64 = self.rho.eigenvalues().iter().filter(|&&a| a > tol).map(|&a| a * a.ln()).sum();
        let cross: f64 = self.terms.iter().map(|t| t.log_a.exp() * t.log_weight.exp() * t.log_b).sum();
        // roundoff can leave -1e-17 for rho = sigma
        (entropy_part - cross).max(0.0)
    }

    /// `psi(s) = log Tr rho^(1+s) sigma^(-s)`.
    pub fn psi(&self, s: f64) -> f64 {
        let max = self.max_exponent(s);
        if !max.is_finite() {
            return f64::NEG_INFINITY;
        }
        let sum: f64 = self.terms.iter().map(|t| (self.term_exponent(t, s) - max).exp()).sum();
        max + sum.ln()
    }

    /// `(psi'(s), psi''(s))` in closed form.
    pub fn psi_derivatives(&self, s: f64) -> (f64, f64) {
        let v = self.psi_value(s);
        (v.d1, v.d2)
    }

    pub fn psi_value(&self, s: f64) -> PsiValue {
        let max = self.max_exponent(s);
        let weights: Vec<f64> = self.terms.iter().map(|t| (self.term_exponent(t, s) - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        let mean: f64 = weights.iter().zip(&self.terms).map(|(w, t)| w * (t.log_a - t.log_b)).sum::<f64>() / total;
        let var: f64 = weights
            .iter()
            .zip(&self.terms)
            .map(|(w, t)| {
                let dev = t.log_a - t.log_b - mean;
                w * dev * dev
            })
            .sum::<f64>()
            / total;
        PsiValue { s, psi: max + total.ln(), d1: mean, d2: var.max(0.0) }
    }

    fn term_exponent(&self, t: &Term, s: f64) -> f64 {
        t.log_weight + (1.0 + s) * t.log_a - s * t.log_b
    }

    fn max_exponent(&self, s: f64) -> f64 {
        self.terms.iter().map(|t| self.term_exponent(t, s)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// `psi_bar(s) = log Tr exp((1+s) log rho - s log sigma)`, defined when
    /// rho and sigma share their support.
    pub fn psi_bar(&self, s: f64) -> Result<f64> {
        let tol = self.support_tol;
        if self.rho.rank(tol) != self.sigma.rank(tol)
            || max_abs(&(self.rho.support_projector(tol) - self.sigma.support_projector(tol))) > 1e-9
        {
            return Err(Error::SupportViolation("psi_bar needs rho and sigma with a common support".into()));
        }
        let log_rho = self.rho.map_spectrum(|a| if a > tol { a.ln() } else { 0.0 });
        let vs = self.sigma.eigenvectors();
        let support: Vec<usize> = (0..self.dim()).filter(|&k| self.sigma.eigenvalues()[k] > tol).collect();
        let q = CMatrix::from_fn(self.dim(), support.len(), |r, c| vs[(r, support[c])]);
        let mut exponent = (q.adjoint() * log_rho.matrix() * &q).scale(1.0 + s);
        for (c, &k) in support.iter().enumerate() {
            exponent[(c, c)] -= s * self.sigma.eigenvalues()[k].ln();
        }
        let (values, _) = hermitian_eigen(&symmetrize(&exponent));
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln())
    }
}

/// Outcome of the binary data-processing check for one test.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DpiCheck {
    pub alpha: f64,
    pub beta: f64,
    /// `n D(rho||sigma)`.
    pub lhs: f64,
    /// Binary relative entropy of `(1 - alpha, alpha)` against `(beta, 1 - beta)`.
    pub rhs: f64,
    pub holds: bool,
    /// `(1 - alpha) (1/n) log beta`.
    pub weak_lhs: f64,
    /// `-(log 2)/n - D`.
    pub weak_rhs: f64,
    pub weak_holds: bool,
}

fn xlogx_over(x: f64, y: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * (x / y.max(f64::MIN_POSITIVE)).ln()
    }
}

/// Data-processing check from the error pair alone.
pub fn binary_dpi_from_errors(divergence: f64, n: usize, alpha: f64, beta: f64) -> DpiCheck {
    let nf = n as f64;
    let lhs = nf * divergence;
    let rhs = xlogx_over(alpha, 1.0 - beta) + xlogx_over(1.0 - alpha, beta);
    let weak_lhs = if 1.0 - alpha <= 0.0 { 0.0 } else { (1.0 - alpha) * beta.max(f64::MIN_POSITIVE).ln() / nf };
    let weak_rhs = -std::f64::consts::LN_2 / nf - divergence;
    DpiCheck {
        alpha,
        beta,
        lhs,
        rhs,
        holds: lhs >= rhs - 1e-9,
        weak_lhs,
        weak_rhs,
        weak_holds: weak_lhs >= weak_rhs - 1e-9,
    }
}

/// Monotonicity of relative entropy under the two-outcome measurement `{A, 1 - A}`
/// on `n` copies.
pub fn binary_dpi_check(pair: &StatePair, test: &BinaryTest, n: usize, cfg: &Config) -> Result<DpiCheck> {
    let rho_n = tensor_power(pair.rho().matrix(), n, cfg.dim_cap)?;
    if rho_n.nrows() != test.dim() {
        return Err(Error::DimensionMismatch { expected: rho_n.nrows(), got: test.dim() });
    }
    let sigma_n = tensor_power(pair.sigma().matrix(), n, cfg.dim_cap)?;
    let (alpha, beta) = test.errors(&rho_n, &sigma_n)?;
    Ok(binary_dpi_from_errors(pair.relative_entropy(), n, alpha, beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::from_eigen;
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

    /// Tr rho (log rho - log sigma) through dense matrix logarithms.
    fn dense_relative_entropy(pair: &StatePair) -> f64 {
        let tol = 1e-10;
        let lr = pair.rho().map_spectrum(|a| if a > tol { a.ln() } else { 0.0 });
        let ls = pair.sigma().map_spectrum(|a| if a > tol { a.ln() } else { 0.0 });
        (pair.rho().matrix() * (lr.matrix() - ls.matrix())).trace().re
    }

    #[test]
    fn relative_entropy_examples() {
        let same = diag_pair(&[0.3, 0.7], &[0.3, 0.7]);
        assert!(same.relative_entropy().abs() < 1e-15);
        let pure = diag_pair(&[1.0, 0.0], &[0.5, 0.5]);
        assert!((pure.relative_entropy() - std::f64::consts::LN_2).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let pair = random::random_pair(&mut rng, 2, &Config::default());
            assert!((pair.relative_entropy() - dense_relative_entropy(&pair)).abs() < 1e-9);
        }
    }

    #[test]
    fn support_violation_is_refused() {
        let cfg = Config::default();
        let r = StatePair::new(
            DensityOperator::diagonal(&[1.0, 0.0], &cfg).unwrap(),
            DensityOperator::diagonal(&[0.0, 1.0], &cfg).unwrap(),
            &cfg,
        );
        assert!(matches!(r, Err(Error::SupportViolation(_))));
    }

    #[test]
    fn overlap_is_doubly_stochastic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pair = random::random_pair(&mut rng, 4, &Config::default());
        let w = pair.overlap();
        for i in 0..4 {
            assert!((w.row(i).sum() - 1.0).abs() < 1e-9);
            assert!((w.column(i).sum() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn psi_examples() {
        let pair = diag_pair(&[0.75, 0.25], &[0.5, 0.5]);
        assert!(pair.psi(0.0).abs() < 1e-15);
        // (0.75^2 + 0.25^2) / 0.5
        assert!((pair.psi(1.0) - 1.25f64.ln()).abs() < 1e-15);
        let (d1, _) = pair.psi_derivatives(0.0);
        assert!((d1 - pair.relative_entropy()).abs() < 1e-15);
        let same = diag_pair(&[0.2, 0.8], &[0.2, 0.8]);
        for s in [0.0, 0.3, 1.0] {
            assert!(same.psi(s).abs() < 1e-15);
            let (d1, d2) = same.psi_derivatives(s);
            assert!(d1.abs() < 1e-15 && d2.abs() < 1e-15);
        }
    }

    #[test]
    fn psi_matches_dense_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cfg = Config::default();
        for _ in 0..10 {
            let pair = random::random_pair(&mut rng, 3, &cfg);
            for s in [0.25, 0.5, 1.0] {
                let a = crate::operator::matrix_power(pair.rho(), 1.0 + s, false, 1e-10).unwrap();
                let b = crate::operator::matrix_power(pair.sigma(), -s, true, 1e-10).unwrap();
                let dense = (a.matrix() * b.matrix()).trace().re.ln();
                assert!((pair.psi(s) - dense).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let pair = random::random_pair(&mut rng, 2, &Config::default());
        let h = 1e-5;
        let s = 0.5;
        let (d1, d2) = pair.psi_derivatives(s);
        let fd1 = (pair.psi(s + h) - pair.psi(s - h)) / (2.0 * h);
        let fd2 = (pair.psi_derivatives(s + h).0 - pair.psi_derivatives(s - h).0) / (2.0 * h);
        assert!((d1 - fd1).abs() < 1e-6, "{d1} vs {fd1}");
        assert!((d2 - fd2).abs() < 1e-6, "{d2} vs {fd2}");
    }

    #[test]
    fn psi_bar_cases() {
        let commuting = diag_pair(&[0.7, 0.2, 0.1], &[0.3, 0.3, 0.4]);
        for s in [0.0, 0.4, 1.0] {
            assert!((commuting.psi_bar(s).unwrap() - commuting.psi(s)).abs() < 1e-10);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let pair = random::random_pair(&mut rng, 2, &Config::default());
        assert!(pair.psi_bar(0.0).unwrap().abs() < 1e-12);
        assert!(pair.psi_bar(1.0).unwrap() < pair.psi(1.0));
        let rank_deficient = diag_pair(&[1.0, 0.0], &[0.5, 0.5]);
        assert!(rank_deficient.psi_bar(0.5).is_err());
    }

    #[test]
    fn psi_bar_on_common_support() {
        let cfg = Config::default();
        let u = random::random_unitary(&mut ChaCha8Rng::seed_from_u64(2), 3);
        let rho = from_eigen(&[0.6, 0.4, 0.0], &u);
        let sigma = from_eigen(&[0.3, 0.7, 0.0], &u);
        let pair = StatePair::new(DensityOperator::new(rho, &cfg).unwrap(), DensityOperator::new(sigma, &cfg).unwrap(), &cfg)
            .unwrap();
        assert!((pair.psi_bar(0.7).unwrap() - pair.psi(0.7)).abs() < 1e-10);
    }

    #[test]
    fn dpi_trivial_tests() {
        let cfg = Config::default();
        let pair = diag_pair(&[0.75, 0.25], &[0.5, 0.5]);
        let id = binary_dpi_check(&pair, &BinaryTest::identity(4), 2, &cfg).unwrap();
        assert_eq!((id.alpha, id.beta), (0.0, 1.0));
        assert!(id.rhs.abs() < 1e-15 && id.holds && id.weak_holds);
        let zero = binary_dpi_check(&pair, &BinaryTest::zero(4), 2, &cfg).unwrap();
        assert!(zero.rhs.abs() < 1e-15 && zero.holds && zero.weak_holds);
        assert!(matches!(
            binary_dpi_check(&pair, &BinaryTest::zero(2), 2, &cfg),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn commuting_frame_detection() {
        let pair = diag_pair(&[0.75, 0.25], &[0.5, 0.5]);
        let (_, p, q) = pair.commuting_frame().unwrap();
        let mut p = p;
        p.sort_by(|a, b| b.total_cmp(a));
        assert!((p[0] - 0.75).abs() < 1e-15);
        assert!(q.iter().all(|&x| (x - 0.5).abs() < 1e-15));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let generic = random::random_pair(&mut rng, 2, &Config::default());
        assert!(generic.commuting_frame().is_none());
    }
}
