mod common;

use calibforge::du_loss::{
    binary_collapse, binary_softmax_form, du_loss, du_loss_grad, expected_prob, BinaryCollapse,
    DensityOutput, MCConfig,
};
use calibforge::nn::{cross_entropy, softmax};
use common::{logistic, mc_p1, normal_expectation, oracle_p1, rng};
use proptest::prelude::*;
use rand::Rng;

const K_BIG: usize = 1_000_000;

#[test]
fn quadrature_oracle_is_sane() {
    assert!((normal_expectation(|_| 1.0, 40) - 1.0).abs() < 1e-13);
    assert!((normal_expectation(|z| z * z, 40) - 1.0).abs() < 1e-12);
    assert!((normal_expectation(|z| z.powi(4), 40) - 3.0).abs() < 1e-11);
    // E[exp(tZ)] = exp(t^2 / 2)
    assert!((normal_expectation(|z| (0.5 * z).exp(), 60) - (0.125f64).exp()).abs() < 1e-13);
    // trapezoid rule on the normal density, exponentially accurate for this integrand
    let trapezoid = |mu: f64, sc: f64| {
        let h = 1e-3;
        (-40_000..=40_000)
            .map(|i| {
                let z = i as f64 * h;
                (-0.5 * z * z).exp() * logistic(mu + sc * z)
            })
            .sum::<f64>()
            * h
            / (2.0 * std::f64::consts::PI).sqrt()
    };
    for &(mu, s) in &[(1.0, 1.0), (0.5, 2.0), (4.0, 0.25), (2.0, 0.5)] {
        let a = oracle_p1(mu, s);
        let b = trapezoid(mu, s * std::f64::consts::SQRT_2);
        assert!((a - b).abs() < 1e-10, "quadrature off at ({mu}, {s}): {a} vs {b}");
    }
    assert!((oracle_p1(0.0, 1.0) - 0.5).abs() < 1e-14);
}

#[test]
fn expected_prob_matches_quadrature_at_unit_noise() {
    let oracle = oracle_p1(1.0, 1.0);
    assert!(oracle < logistic(1.0));
    let out = DensityOutput::new([1.0, 0.0], 0.0);
    let mc = MCConfig::new(K_BIG, 77);
    let p = expected_prob(&out, &mc).unwrap();
    let (mean, se) = mc_p1(1.0, 1.0, K_BIG, 77);
    // class index 0 carries the first logit, so p1 = p[0]
    assert!((p[0] - mean).abs() < 1e-12);
    assert!((p[0] - oracle).abs() < 3.0 * se, "{} vs {oracle} (se {se})", p[0]);
    // loss of the first class is -ln E[p1]; delta-method standard error se / p
    let loss = du_loss(&out, 0, &mc).unwrap();
    assert!((loss + oracle.ln()).abs() < 3.0 * se / oracle);
}

#[test]
fn damping_properties_hold_against_oracle() {
    // overconfidence damping at every listed grid point
    for &mu_c in &[0.5, 1.0, 2.0] {
        for &sigma in &[0.5, 1.0] {
            let oracle = oracle_p1(mu_c, sigma);
            let (mc, se) = mc_p1(mu_c, sigma, K_BIG, 3);
            assert!(oracle < logistic(mu_c));
            assert!((mc - oracle).abs() < 5.0 * se);
            assert!(logistic(mu_c) - mc > 5.0 * se, "no margin at ({mu_c}, {sigma})");
        }
    }
    // monotone in sigma
    let sigmas = [0.25, 0.5, 1.0, 2.0];
    let oracle: Vec<f64> = sigmas.iter().map(|&s| oracle_p1(1.0, s)).collect();
    let mc: Vec<f64> = sigmas.iter().map(|&s| mc_p1(1.0, s, K_BIG, 4).0).collect();
    assert!(oracle.windows(2).all(|w| w[0] > w[1]), "{oracle:?}");
    assert!(mc.windows(2).all(|w| w[0] > w[1]), "{mc:?}");
    // smaller damping at high confidence
    let gap = |mu: f64| logistic(mu) - oracle_p1(mu, 1.0);
    assert!(gap(4.0) < gap(1.0));
    assert!(gap(4.0) > 0.0);
}

#[test]
fn softmax_and_sigmoid_forms_agree() {
    let mut r = rng(14);
    for _ in 0..1000 {
        let u1 = r.random_range(-30.0..30.0);
        let u2 = r.random_range(-30.0..30.0);
        let a = binary_softmax_form(u1, u2);
        let b = binary_collapse(u1, u2);
        assert!((a - b).abs() <= 1e-12, "{u1}, {u2}: {a} vs {b}");
    }
    assert_eq!(binary_collapse(2.0, 2.0), 0.5);
    assert!((binary_collapse(3f64.ln(), 0.0) - 0.75).abs() < 1e-15);
}

#[test]
fn collapse_uses_difference_noise() {
    let out = DensityOutput::new([1.3, 0.2], 0.4);
    let c = BinaryCollapse::from_density(&out);
    assert!((c.mu_c - 1.1).abs() < 1e-12);
    assert!((c.sigma_c - out.sigma() * std::f64::consts::SQRT_2).abs() < 1e-15);
    let eps = [0.3, -1.2];
    let u = calibforge::du_loss::sample_logits(&out, eps);
    assert!((c.p1(eps) - softmax(&u)[0]).abs() <= 1e-12);
}

#[test]
fn degenerate_noise_reduces_to_cross_entropy() {
    for mu in [[0.3, -1.0], [2.0, 2.5], [-4.0, 3.0]] {
        let out = DensityOutput::new(mu, -40.0);
        for y in 0..2 {
            for k in [1, 2, 7, 64] {
                let mc = MCConfig::new(k, 9);
                let want = cross_entropy(&softmax(&mu), y);
                assert!((du_loss(&out, y, &mc).unwrap() - want).abs() < 1e-9);
                let g = du_loss_grad(&out, y, &mc).unwrap();
                let p = softmax(&mu);
                assert!((g.d_mu[0] - (p[0] - (y == 0) as u8 as f64)).abs() < 1e-9);
                assert!(g.d_s_raw.abs() < 1e-9);
            }
        }
    }
}

#[test]
fn seeded_noise_is_bit_identical() {
    let out = DensityOutput::new([0.7, -0.1], 0.3);
    let mc = MCConfig::new(33, 12345);
    let a = du_loss_grad(&out, 1, &mc).unwrap();
    let b = du_loss_grad(&out, 1, &mc).unwrap();
    assert_eq!(a.loss.to_bits(), b.loss.to_bits());
    assert_eq!(a.d_mu[0].to_bits(), b.d_mu[0].to_bits());
    assert_eq!(a.d_s_raw.to_bits(), b.d_s_raw.to_bits());
}

proptest! {
    #[test]
    fn expected_prob_is_normalized(
        mu0 in -20.0f64..20.0, mu1 in -20.0f64..20.0, s in -5.0f64..3.0,
        k in 1usize..80, seed in any::<u64>(), antithetic in any::<bool>(),
    ) {
        let mc = MCConfig { k, seed, antithetic };
        let p = expected_prob(&DensityOutput::new([mu0, mu1], s), &mc).unwrap();
        prop_assert!((p[0] + p[1] - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn equal_means_give_even_odds(a in -10.0f64..10.0, s in -3.0f64..2.0, half in 1usize..40) {
        let mc = MCConfig::new(2 * half, 1);
        let out = DensityOutput::new([a, a], s);
        let p = expected_prob(&out, &mc).unwrap();
        prop_assert!((p[0] - 0.5).abs() <= 1e-9);
        prop_assert!((du_loss(&out, 0, &mc).unwrap() - std::f64::consts::LN_2).abs() <= 1e-9);
    }

    #[test]
    fn sigma_is_exp_of_raw(s in -30.0f64..5.0) {
        let out = DensityOutput::new([0.0, 0.0], s);
        prop_assert!(out.sigma() > 0.0);
        prop_assert!((out.sigma() - s.exp()).abs() <= 1e-12 * s.exp().max(1.0));
    }
}
