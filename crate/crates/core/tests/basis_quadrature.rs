use hybrid_operator::basis::{
    baskakov_weight, baskakov_weight_derivative, erlang_density, ln_baskakov_weight, ln_erlang_density, truncation_window,
};
use hybrid_operator::quadrature::erlang_integral;
use hybrid_operator::{FunctionSpec, OperatorParams, QuadratureConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `(a)_k (cx)^k / (k! (1+cx)^{a+k})` by plain products.
fn weight_direct(n: f64, c: f64, k: u32, x: f64) -> f64 {
    let a = n / c;
    let mut v = (1.0 + c * x).powf(-a);
    for i in 0..k {
        v *= (a + f64::from(i)) * c * x / ((f64::from(i) + 1.0) * (1.0 + c * x));
    }
    v
}

/// `n e^{-nt} (nt)^k / k!` by plain products.
fn erlang_direct(n: f64, k: u32, t: f64) -> f64 {
    let mut v = n * (-n * t).exp();
    for i in 1..=k {
        v *= n * t / f64::from(i);
    }
    v
}

proptest! {
    #[test]
    fn weights_form_a_partition_of_unity(n in 1.0f64..1000.0, c in 0.01f64..=1.0, x in 0.0f64..6.0) {
        let p = OperatorParams::new(n, c).unwrap();
        let w = truncation_window(&p, x, 1e-14, 10_000_000).unwrap();
        let sum: f64 = (w.k_lo..=w.k_hi).map(|k| baskakov_weight(&p, k, x)).sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12, "sum = {sum}");
        prop_assert!((w.captured_mass - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn basis_values_are_nonnegative(n in 1.0f64..500.0, c in 0.01f64..=1.0, x in 0.0f64..20.0, k in 0u64..2000, t in 0.0f64..20.0) {
        let p = OperatorParams::new(n, c).unwrap();
        prop_assert!(baskakov_weight(&p, k, x) >= 0.0);
        prop_assert!(erlang_density(n, k, t) >= 0.0);
    }

    #[test]
    fn weight_derivative_matches_central_difference(n in 1.0f64..200.0, c in 0.05f64..=1.0, x in 0.25f64..4.0, k in 0u64..=200) {
        let p = OperatorParams::new(n, c).unwrap();
        let h = 1e-6 * x.max(1.0);
        let fd = (baskakov_weight(&p, k, x + h) - baskakov_weight(&p, k, x - h)) / (2.0 * h);
        let exact = baskakov_weight_derivative(&p, k, x);
        // weights far in the tail are below any meaningful difference quotient
        prop_assume!(baskakov_weight(&p, k, x) > 1e-250);
        let scale = exact.abs().max(1e-3 * baskakov_weight(&p, k, x) * n / x.max(0.1));
        prop_assert!((fd - exact).abs() <= 1e-6 * scale, "fd {fd} exact {exact}");
    }

    #[test]
    fn log_space_matches_direct_products(n in 1.0f64..60.0, c in 0.05f64..=1.0, x in 0.01f64..5.0, k in 0u32..150, t in 0.01f64..5.0) {
        let p = OperatorParams::new(n, c).unwrap();
        let direct = weight_direct(n, c, k, x);
        if direct > 1e-290 && direct.is_finite() {
            let logged = ln_baskakov_weight(&p, u64::from(k), x).exp();
            prop_assert!((logged - direct).abs() <= 1e-13 * direct * (1.0 + f64::from(k) / 50.0), "{logged} vs {direct}");
        }
        let direct = erlang_direct(n, k, t);
        if direct > 1e-290 && direct.is_finite() {
            let logged = ln_erlang_density(n, u64::from(k), t).exp();
            prop_assert!((logged - direct).abs() <= 1e-13 * direct * (1.0 + f64::from(k) / 50.0), "{logged} vs {direct}");
        }
    }
}

#[test]
fn erlang_density_is_normalized() {
    let cfg = QuadratureConfig::default();
    let one = FunctionSpec::constant(1.0);
    for &n in &[1.0, 3.7, 50.0, 1e4] {
        for &k in &[0u64, 1, 5, 40, 500, 5000] {
            let v = erlang_integral(&one, n, k, &cfg).unwrap();
            assert!((v.value - 1.0).abs() <= 1e-12, "n={n} k={k}: {}", v.value);
        }
    }
}

/// `Σ_j a_j (k+1)_j / n^j`, the Gamma(k+1, n) moments.
fn gamma_moment_oracle(coeffs: &[f64], n: f64, k: u64) -> f64 {
    let mut moment = 1.0;
    let mut sum = 0.0;
    for (j, a) in coeffs.iter().enumerate() {
        if j > 0 {
            moment *= (k as f64 + j as f64) / n;
        }
        sum += a * moment;
    }
    sum
}

fn random_polynomial(rng: &mut ChaCha8Rng, degree: usize) -> Vec<f64> {
    (0..=degree).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

#[test]
fn polynomial_oracle_agreement_and_error_honesty() {
    let cfg = QuadratureConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut honest = 0;
    let trials = 300;
    for _ in 0..trials {
        let degree = rng.gen_range(0..=10);
        // positive coefficients keep the oracle free of cancellation
        let coeffs: Vec<f64> = random_polynomial(&mut rng, degree).iter().map(|c| c.abs() + 0.1).collect();
        let n = 10f64.powf(rng.gen_range(0.0..4.0));
        let k = rng.gen_range(0..=500u64);
        let f = FunctionSpec::polynomial_from("p", coeffs.clone());
        let q = erlang_integral(&f, n, k, &cfg).unwrap();
        let exact = gamma_moment_oracle(&coeffs, n, k);
        let err = (q.value - exact).abs();
        assert!(err <= 1e-10 * exact.abs(), "deg {degree} n {n} k {k}: {} vs {exact}", q.value);
        if q.error_estimate >= err {
            honest += 1;
        }
    }
    assert!(honest as f64 >= 0.99 * trials as f64, "{honest}/{trials} honest error estimates");
}

#[test]
fn exponential_moments_match_closed_form() {
    let cfg = QuadratureConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let n = rng.gen_range(1.0..2000.0);
        let theta = rng.gen_range(-n..=0.5 * n);
        let k = rng.gen_range(0..300u64);
        let q = erlang_integral(&FunctionSpec::exp_theta(theta), n, k, &cfg).unwrap();
        let exact = ((k as f64 + 1.0) * (n / (n - theta)).ln()).exp();
        assert!((q.value - exact).abs() <= 1e-9 * exact, "n {n} theta {theta} k {k}");
    }
}
