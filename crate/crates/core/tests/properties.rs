use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stein_core::classical::{kl, solve_rate, tilted, Distribution};
use stein_core::divergence::binary_dpi_check;
use stein_core::exponent::{phi, strong_converse_exponent};
use stein_core::neyman_pearson::{beta_star, TensorPowerPair};
use stein_core::operator::{tensor_power, tensor_power_diagonal, C64};
use stein_core::{random, Config, DensityOperator, StatePair};

fn pair_from(seed: u64, dim: usize, commuting: bool) -> StatePair {
    let cfg = Config::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if commuting {
        random::random_commuting_pair(&mut rng, dim, &cfg)
    } else {
        random::random_pair(&mut rng, dim, &cfg)
    }
}

fn distribution(raw: &[f64]) -> Distribution {
    let total: f64 = raw.iter().sum();
    Distribution::new(raw.iter().map(|x| x / total).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn density_construction_normalizes_spectrum(seed in any::<u64>(), dim in 2usize..5) {
        let cfg = Config::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random::random_density(&mut rng, dim, &cfg);
        prop_assert!(rho.eigenvalues().iter().all(|&v| v >= 0.0));
        assert_abs_diff_eq!(rho.trace(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.eigenvalues().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn psi_is_convex_and_anchored(seed in any::<u64>(), dim in 2usize..4, commuting in any::<bool>()) {
        let pair = pair_from(seed, dim, commuting);
        prop_assert!(pair.psi(0.0).abs() < 1e-12);
        assert_abs_diff_eq!(pair.psi_derivatives(0.0).0, pair.relative_entropy(), epsilon = 1e-9);
        let values: Vec<f64> = (0..=40).map(|k| pair.psi(k as f64 / 40.0)).collect();
        for w in values.windows(3) {
            prop_assert!(w[2] - 2.0 * w[1] + w[0] >= -1e-12);
        }
    }

    #[test]
    fn phi_is_a_legendre_transform(seed in any::<u64>(), offset in -1.0f64..2.0) {
        let cfg = Config::default();
        let pair = pair_from(seed, 2, false);
        let lambda = pair.relative_entropy() + offset;
        let res = phi(&pair, lambda, &cfg);
        prop_assert!(res.phi >= 0.0);
        if offset <= 0.0 {
            prop_assert_eq!(res.phi, 0.0);
        }
        // no point of a grid beats the maximizer
        for k in 0..=50 {
            let s = k as f64 / 50.0;
            prop_assert!(res.phi >= lambda * s - pair.psi(s) - 1e-12);
        }
    }

    #[test]
    fn threshold_errors_are_monotone_in_lambda(seed in any::<u64>(), n in 1usize..4, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let cfg = Config::default();
        let pair = pair_from(seed, 2, false);
        let tp = TensorPowerPair::new(&pair, n, &cfg).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (t_lo, t_hi) = (tp.threshold_test(lo, &cfg), tp.threshold_test(hi, &cfg));
        prop_assert!(t_lo.alpha <= t_hi.alpha + 1e-10);
        prop_assert!(t_lo.beta >= t_hi.beta - 1e-10);
    }

    #[test]
    fn beta_star_is_certified_and_monotone(seed in any::<u64>(), n in 1usize..4, e1 in 0.0f64..0.99, e2 in 0.0f64..0.99) {
        let cfg = Config::default();
        let pair = pair_from(seed, 2, seed % 3 == 0);
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let a = beta_star(&pair, n, lo, &cfg).unwrap();
        let b = beta_star(&pair, n, hi, &cfg).unwrap();
        prop_assert!(a.beta_star >= b.beta_star - 1e-12);
        for t in [a, b] {
            prop_assert!(t.dual_gap >= -1e-9);
            prop_assert!((t.beta_star - t.dual_at_bracket).abs() < 1e-8);
            prop_assert!(t.alpha <= t.epsilon + 1e-10);
        }
    }

    #[test]
    fn binary_dpi_holds_for_random_tests(seed in any::<u64>(), n in 1usize..3) {
        let cfg = Config::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pair = random::random_pair(&mut rng, 2, &cfg);
        let test = random::random_test(&mut rng, 1 << n, &cfg);
        let c = binary_dpi_check(&pair, &test, n, &cfg).unwrap();
        prop_assert!(c.holds && c.weak_holds, "{:?}", c);
    }

    #[test]
    fn strong_converse_exponent_is_a_fixed_point(seed in any::<u64>(), excess in 0.0f64..1.5) {
        let cfg = Config::default();
        let pair = pair_from(seed, 2, false);
        let r = pair.relative_entropy() + excess;
        let res = strong_converse_exponent(&pair, r, &cfg).unwrap();
        prop_assert!(res.fixed_point_residual < 1e-9);
        prop_assert!(res.lambda_star <= r + 1e-12);
        prop_assert!((res.u_parametric - res.u_maxform).abs() < 1e-8);
    }

    #[test]
    fn tilted_divergence_increases(raw_p in prop::collection::vec(0.05f64..1.0, 3), raw_q in prop::collection::vec(0.05f64..1.0, 3)) {
        let (p, q) = (distribution(&raw_p), distribution(&raw_q));
        let d: Vec<f64> = (0..=20).map(|k| tilted(&p, &q, k as f64 * 0.25).unwrap().d_to_q).collect();
        for w in d.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-10);
        }
        assert_abs_diff_eq!(d[0], kl(&p, &q).unwrap(), epsilon = 1e-14);
    }

    #[test]
    fn solve_rate_hits_its_target(raw_p in prop::collection::vec(0.05f64..1.0, 2..5), excess in 0.001f64..0.3) {
        let cfg = Config::default();
        let k = raw_p.len();
        let p = distribution(&raw_p);
        let q = distribution(&vec![1.0; k]);
        let r = kl(&p, &q).unwrap() + excess;
        match solve_rate(&p, &q, r, &cfg) {
            Ok(point) => prop_assert!((point.d_to_q - r).abs() < 1e-10),
            Err(e) => {
                let expected = matches!(e, stein_core::Error::RateUnreachable { .. } | stein_core::Error::DegenerateFamily);
                prop_assert!(expected, "{}", e);
            }
        }
    }

    #[test]
    fn diagonal_tensor_power_matches_dense(raw in prop::collection::vec(0.0f64..1.0, 2..4), n in 1usize..4) {
        let dense = tensor_power(&stein_core::CMatrix::from_diagonal(&raw.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>().into()), n, 4096).unwrap();
        let diag = tensor_power_diagonal(&raw, n);
        for (i, v) in diag.iter().enumerate() {
            assert_abs_diff_eq!(dense[(i, i)].re, *v, epsilon = 1e-15);
        }
    }
}

#[test]
fn kernel_of_rho_keeps_support_condition() {
    let cfg = Config::default();
    let rho = DensityOperator::diagonal(&[1.0, 0.0], &cfg).unwrap();
    let sigma = DensityOperator::diagonal(&[0.5, 0.5], &cfg).unwrap();
    let pair = StatePair::new(rho.clone(), sigma.clone(), &cfg).unwrap();
    assert_abs_diff_eq!(pair.relative_entropy(), 2f64.ln(), epsilon = 1e-12);
    assert!(StatePair::new(sigma, rho, &cfg).is_err());
}
