//! Random states, tests and distributions for the property suites.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::classical::Distribution;
use crate::config::Config;
use crate::divergence::StatePair;
use crate::operator::{from_eigen, BinaryTest, CMatrix, DensityOperator, C64};

fn ginibre<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    })
}

/// Haar-random unitary (QR of a Ginibre matrix with the phases of `R` removed).
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    let qr = ginibre(rng, d).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Probability vector drawn uniformly from the simplex.
pub fn random_probabilities<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1) + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

pub fn random_distribution<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Distribution {
    Distribution::new(random_probabilities(rng, k)).expect("simplex sample is a distribution")
}

/// Full-rank density operator from the Hilbert-Schmidt ensemble `G G^H / Tr`.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, d: usize, cfg: &Config) -> DensityOperator {
    let g = ginibre(rng, d);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityOperator::new(m.unscale(tr), cfg).expect("Hilbert-Schmidt sample is a density operator")
}

pub fn random_pair<R: Rng + ?Sized>(rng: &mut R, d: usize, cfg: &Config) -> StatePair {
    let rho = random_density(rng, d, cfg);
    let sigma = random_density(rng, d, cfg);
    StatePair::new(rho, sigma, cfg).expect("full-rank pair")
}

/// Pair diagonal in a common random basis.
pub fn random_commuting_pair<R: Rng + ?Sized>(rng: &mut R, d: usize, cfg: &Config) -> StatePair {
    let u = random_unitary(rng, d);
    let p = random_probabilities(rng, d);
    let q = random_probabilities(rng, d);
    let rho = DensityOperator::new(from_eigen(&p, &u), cfg).expect("density");
    let sigma = DensityOperator::new(from_eigen(&q, &u), cfg).expect("density");
    StatePair::new(rho, sigma, cfg).expect("full-rank pair")
}

/// Pair diagonal in the computational basis, with the two spectra.
pub fn random_diagonal_pair<R: Rng + ?Sized>(rng: &mut R, d: usize, cfg: &Config) -> (StatePair, Vec<f64>, Vec<f64>) {
    let p = random_probabilities(rng, d);
    let q = random_probabilities(rng, d);
    let rho = DensityOperator::diagonal(&p, cfg).expect("density");
    let sigma = DensityOperator::diagonal(&q, cfg).expect("density");
    (StatePair::new(rho, sigma, cfg).expect("full-rank pair"), p, q)
}

/// Random test: a random eigenbasis with eigenvalues squashed into `[0, 1]`;
/// one draw in five is a projector.
pub fn random_test<R: Rng + ?Sized>(rng: &mut R, dim: usize, cfg: &Config) -> BinaryTest {
    let u = random_unitary(rng, dim);
    let projector = rng.random_bool(0.2);
    let values: Vec<f64> = (0..dim)
        .map(|_| {
            let x: f64 = rng.sample(StandardNormal);
            let squashed = 1.0 / (1.0 + (-2.0 * x).exp());
            if projector {
                squashed.round()
            } else {
                squashed
            }
        })
        .collect();
    BinaryTest::new(from_eigen(&values, &u), cfg).expect("squashed spectrum is a test")
}
